//! Numerical checks: embedding and quasi-embedding defects, convergence
//! bounds, injectivity, unit speed and non-triviality.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::breaking::BreakingSequence;
use crate::curve::{sup_distance, PlCurve};
use crate::error::{Error, Result};
use crate::iet::Iet;
use crate::pwi::{adapted_pwi, hat_maps, inductive_maps, AdaptedPwi};
use crate::scalar::Real;
use crate::spectral::{noise_horizon, summability_check};

/// One named check; `pass` iff `defect <= tol`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub defect: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub meta: Value,
}

impl Check {
    pub fn new(name: &str, defect: f64, tol: f64) -> Self {
        Check { check: name.to_string(), defect, tol, pass: defect <= tol, n: None, m: None, meta: Value::Null }
    }

    pub fn at(mut self, n: usize, m: Option<usize>) -> Self {
        self.n = Some(n);
        self.m = m;
        self
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }

    /// Largest defect among checks whose name starts with `prefix`.
    pub fn max_defect(&self, prefix: &str) -> f64 {
        self.checks.iter().filter(|c| c.check.starts_with(prefix)).map(|c| c.defect).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// Sup of `|gamma(f(x)) - T(gamma(x))|` and where it is attained.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmbeddingDefect {
    pub defect: f64,
    pub at: f64,
}

fn far_from<T: Real>(x: T, cuts: &[T], tol: T) -> bool {
    let i = cuts.partition_point(|&c| c < x);
    [i.wrapping_sub(1), i].iter().all(|&j| cuts.get(j).is_none_or(|&c| (c - x).abs() > tol))
}

/// Over a uniform grid of `samples` points plus every knot of `gamma`,
/// skipping `1e-10 |lambda|`-neighbourhoods of the discontinuities of `f`.
pub fn embedding_defect<T: Real>(
    gamma: &PlCurve<T>,
    pwi: &AdaptedPwi<T>,
    iet: &Iet<T>,
    samples: usize,
) -> EmbeddingDefect {
    let len = iet.total();
    let tol = T::lit(1e-10) * len;
    let cuts = &iet.ends0()[1..iet.d()];
    let mut xs: Vec<T> =
        (0..samples).map(|i| (T::lit(i as f64) + T::lit(0.5)) * len / T::lit(samples as f64)).collect();
    xs.extend(gamma.knots().iter().copied().filter(|&k| k < len));
    xs.par_iter()
        .filter(|&&x| far_from(x, cuts, tol))
        .map(|&x| {
            let a = iet.symbol_at(&x).expect("inside");
            let y = iet.apply(&x).expect("inside");
            let d = (gamma.eval(y) - pwi.maps[a].apply(gamma.eval(x))).norm();
            EmbeddingDefect { defect: d.to_f64_lossy(), at: x.to_f64_lossy() }
        })
        .reduce(
            || EmbeddingDefect { defect: 0.0, at: 0.0 },
            |a, b| if b.defect > a.defect || (b.defect == a.defect && b.at < a.at) { b } else { a },
        )
}

fn probe_points<T: Real>(c: &PlCurve<T>) -> Vec<Complex<T>> {
    let (lo, hi) = c.bbox();
    let mid = (lo + hi) * T::lit(0.5);
    vec![lo, hi, mid, Complex::new(lo.re, hi.im), Complex::new(hi.re, lo.im)]
}

/// For each `m <= n <= n_max`: the distance between `T^(n,m)` and
/// `hat T^(n,m)`, and the quasi-embedding defect
/// `|T^(n,m)(gamma^(n)(x)) - gamma^(n)(f_m(x))|` over `x` in `I^(m)` with
/// `f_m(x)` outside `I^(n)`. Tolerance `1e-9 (1 + n)`.
pub fn quasi_embedding_suite<T: Real>(
    bs: &BreakingSequence<T>,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let n_max = n_max.min(bs.levels());
    let pairs: Vec<(usize, usize)> = (0..=n_max).flat_map(|n| (0..=n).map(move |m| (n, m))).collect();
    let results: Vec<Result<(Check, Check)>> = pairs
        .par_iter()
        .map(|&(n, m)| {
            let t = inductive_maps(bs, n, m)?;
            let h = hat_maps(bs, n, m)?;
            let curve = bs.curve(n);
            let mut probes = probe_points(curve);
            let fm = bs.trace.iet(m);
            probes.extend(fm.ends0().iter().map(|&x| curve.eval(x)));
            let agree = t.iter().zip(&h).fold(T::zero(), |acc, (a, b)| acc.max(a.distance_on(b, &probes)));

            let top = bs.trace.total(n);
            let len_m = fm.total();
            let tol = T::lit(1e-10) * bs.total();
            let cuts = &fm.ends0()[1..fm.d()];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32 | m as u64));
            let mut xs: Vec<T> = (0..samples).map(|_| T::lit(rng.random::<f64>()) * len_m).collect();
            let fn_ = bs.trace.iet(n);
            xs.extend(fn_.ends0().windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)));
            xs.extend(curve.knots().iter().copied().filter(|&k| k < len_m));
            xs.extend(fm.ends0()[..fm.d()].iter().map(|&x| x + tol + tol));
            let mut used = 0usize;
            let mut qe = T::zero();
            for x in xs {
                if x >= len_m || !far_from(x, cuts, tol) {
                    continue;
                }
                let y = fm.apply(&x)?;
                if y < top + tol {
                    continue;
                }
                let a = fm.symbol_at(&x)?;
                qe = qe.max((t[a].apply(curve.eval(x)) - curve.eval(y)).norm());
                used += 1;
            }
            let tol_nm = 1e-9 * (1 + n) as f64;
            Ok((
                Check::new("map-agreement", agree.to_f64_lossy(), tol_nm).at(n, Some(m)),
                Check::new("quasi-embedding", qe.to_f64_lossy(), tol_nm)
                    .at(n, Some(m))
                    .with_meta(json!({ "points": used })),
            ))
        })
        .collect();
    let mut report = VerificationReport::default();
    let (mut worst_a, mut worst_q) = (0.0f64, 0.0f64);
    for r in results {
        let (a, q) = r?;
        worst_a = worst_a.max(a.defect / a.tol);
        worst_q = worst_q.max(q.defect / q.tol);
        report.push(a);
        report.push(q);
    }
    report.push(Check::new("map-agreement/max-relative", worst_a, 1.0).with_meta(json!({ "levels": n_max })));
    report.push(Check::new("quasi-embedding/max-relative", worst_q, 1.0).with_meta(json!({ "levels": n_max })));
    Ok(report)
}

/// Per-level increments and the bounds they must satisfy.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceData {
    pub increments: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Largest `|gamma^(N) - gamma^(n)| / (|lambda| sum_{k=n}^{N-1} d_T(theta^(k), 0))`.
    pub telescoped_constant: f64,
    /// Largest segment angle of `gamma^(n)` and `sum_{k<n} d_T(theta^(k), 0)`.
    pub cone_angles: Vec<f64>,
    pub cone_bounds: Vec<f64>,
    /// Share of the increments carried by the last quarter of levels.
    pub tail_fraction: f64,
}

pub fn convergence_data<T: Real>(bs: &BreakingSequence<T>) -> Result<ConvergenceData> {
    let levels = bs.levels();
    if levels < 2 {
        return Err(Error::LevelMismatch("convergence needs at least three curves".into()));
    }
    let len = bs.total().to_f64_lossy();
    let norms = bs.thetas.norms();
    let mut increments = Vec::with_capacity(levels);
    let mut bounds = Vec::with_capacity(levels);
    for n in 0..levels {
        increments.push(sup_distance(bs.curve(n + 1), bs.curve(n))?.to_f64_lossy());
        bounds.push(4.0 * len * (bs.angles[n].to_f64_lossy().abs() / 2.0).sin());
    }
    let last = bs.curve(levels);
    let mut telescoped_constant = 0.0f64;
    for n in 0..levels {
        let s: f64 = norms[n..levels].iter().sum();
        if s > 0.0 {
            telescoped_constant = telescoped_constant.max(sup_distance(last, bs.curve(n))?.to_f64_lossy() / (len * s));
        }
    }
    let mut cone_angles = Vec::with_capacity(levels + 1);
    let mut cone_bounds = Vec::with_capacity(levels + 1);
    for n in 0..=levels {
        let ang = bs.curve(n).dirs().iter().map(|d| d.arg().abs().to_f64_lossy()).fold(0.0, f64::max);
        cone_angles.push(ang);
        cone_bounds.push(norms[..n].iter().sum());
    }
    let total: f64 = increments.iter().sum();
    let start = levels - levels / 4;
    let tail: f64 = increments[start..].iter().sum();
    Ok(ConvergenceData {
        tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
        increments,
        bounds,
        telescoped_constant,
        cone_angles,
        cone_bounds,
    })
}

/// Per-step bounds `|gamma^(n+1) - gamma^(n)| <= 4 |lambda| sin(|phi|/2)`,
/// the telescoped constant (at most 2 by the same bound) and the
/// direction cone.
pub fn convergence_report<T: Real>(bs: &BreakingSequence<T>) -> Result<VerificationReport> {
    let data = convergence_data(bs)?;
    let mut r = VerificationReport::default();
    for (n, (&inc, &b)) in data.increments.iter().zip(&data.bounds).enumerate() {
        r.push(Check::new("convergence/step", inc, b + 1e-12).at(n, None));
    }
    let norms = bs.thetas.norms();
    let sum = summability_check(&bs.thetas, noise_horizon(&norms, 2 * bs.trace.d()));
    r.push(Check::new("convergence/telescoped-constant", data.telescoped_constant, 2.0 + 1e-9).with_meta(json!({
        "increment_tail_fraction": data.tail_fraction,
        "divergent": !sum.decays,
    })));
    let cone = data
        .cone_angles
        .iter()
        .zip(&data.cone_bounds)
        .map(|(a, b)| a - b.min(std::f64::consts::PI))
        .fold(f64::NEG_INFINITY, f64::max);
    r.push(Check::new("convergence/direction-cone", cone.max(0.0), 1e-12));
    Ok(r)
}

fn orient_f64(a: Complex<f64>, b: Complex<f64>, c: Complex<f64>) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Sign of the orientation of `(a, b, c)`, exact: a floating-point filter
/// with a rational fallback near zero.
fn orient(a: Complex<f64>, b: Complex<f64>, c: Complex<f64>) -> i8 {
    let det = orient_f64(a, b, c);
    let mag = ((b.re - a.re) * (c.im - a.im)).abs() + ((b.im - a.im) * (c.re - a.re)).abs();
    if det.abs() > 8.0 * f64::EPSILON * mag {
        return det.signum() as i8;
    }
    let e = (q(b.re) - q(a.re)) * (q(c.im) - q(a.im)) - (q(b.im) - q(a.im)) * (q(c.re) - q(a.re));
    if e.is_positive() {
        1
    } else if e.is_negative() {
        -1
    } else {
        0
    }
}

fn on_segment(a: Complex<f64>, b: Complex<f64>, p: Complex<f64>) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

fn segments_meet(p1: Complex<f64>, p2: Complex<f64>, q1: Complex<f64>, q2: Complex<f64>) -> bool {
    let o1 = orient(p1, p2, q1);
    let o2 = orient(p1, p2, q2);
    let o3 = orient(q1, q2, p1);
    let o4 = orient(q1, q2, p2);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, p2, q2))
        || (o3 == 0 && on_segment(q1, q2, p1))
        || (o4 == 0 && on_segment(q1, q2, p2))
}

/// Consecutive segments `a-b`, `b-c` fold back onto each other.
fn folds(a: Complex<f64>, b: Complex<f64>, c: Complex<f64>) -> bool {
    if orient(a, b, c) != 0 {
        return false;
    }
    let dot = (q(a.re) - q(b.re)) * (q(c.re) - q(b.re)) + (q(a.im) - q(b.im)) * (q(c.im) - q(b.im));
    dot.is_positive()
}

/// Whether the polyline through the stored vertices is simple. Segments
/// sharing a vertex may only meet there; any other contact is a witness.
/// Predicates are exact for the double-precision vertices.
pub fn injectivity<T: Real>(gamma: &PlCurve<T>) -> (bool, Option<(usize, usize)>) {
    let pts: Vec<Complex<f64>> =
        gamma.points().iter().map(|z| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())).collect();
    let k = pts.len() - 1;
    for i in 0..k.saturating_sub(1) {
        if folds(pts[i], pts[i + 1], pts[i + 2]) {
            return (false, Some((i, i + 1)));
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    let lo = |i: usize| pts[i].re.min(pts[i + 1].re);
    let hi = |i: usize| pts[i].re.max(pts[i + 1].re);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::new();
    let mut witness: Option<(usize, usize)> = None;
    for &i in &order {
        let x = lo(i);
        active.retain(|&j| hi(j) >= x);
        for &j in &active {
            if i.abs_diff(j) == 1 {
                continue;
            }
            let (ylo, yhi) = (pts[i].im.min(pts[i + 1].im), pts[i].im.max(pts[i + 1].im));
            if pts[j].im.max(pts[j + 1].im) < ylo || pts[j].im.min(pts[j + 1].im) > yhi {
                continue;
            }
            if segments_meet(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                let w = (i.min(j), i.max(j));
                if witness.is_none_or(|old| w < old) {
                    witness = Some(w);
                }
            }
        }
        active.push(i);
    }
    (witness.is_none(), witness)
}

/// Sup over `samples` of `|arc length of gamma on [0, x] - x|`.
pub fn isometry_defect<T: Real>(gamma: &PlCurve<T>, samples: &[T]) -> T {
    let (k, p) = (gamma.knots(), gamma.points());
    let mut cum = vec![T::zero(); k.len()];
    for i in 1..k.len() {
        cum[i] = cum[i - 1] + (p[i] - p[i - 1]).norm();
    }
    samples.iter().fold(T::zero(), |acc, &x| {
        let i = gamma.segment_at(x);
        let s = cum[i] + (gamma.eval(x) - p[i]).norm();
        acc.max((s - x).abs())
    })
}

/// Discontinuities of `f` and their forward images up to `depth`, with the
/// domain ends, sorted.
pub fn cut_params<T: Real>(iet: &Iet<T>, depth: usize) -> Result<Vec<T>> {
    let mut cuts: Vec<T> = iet.ends0().to_vec();
    for &x in &iet.ends0()[1..iet.d()] {
        let mut y = x;
        for _ in 0..depth {
            y = iet.apply(&y)?;
            cuts.push(y);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let tol = T::lit(1e-12) * iet.total();
    cuts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(cuts)
}

/// Line and circle fit residuals for one inter-cut piece.
#[derive(Clone, Debug, Serialize)]
pub struct SegmentFit {
    pub start: f64,
    pub end: f64,
    pub vertices: usize,
    pub line: f64,
    pub circle: f64,
}

impl SegmentFit {
    pub fn score(&self) -> f64 {
        self.line.min(self.circle)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Nontriviality {
    pub segments: Vec<SegmentFit>,
    /// Pieces with fewer than four vertices.
    pub skipped: Vec<(f64, f64)>,
    pub score: f64,
    pub tol: f64,
    pub nontrivial: bool,
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Total least squares line: RMS orthogonal distance.
pub fn line_residual(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let lmin = tr / 2.0 - ((tr * tr / 4.0 - det).max(0.0)).sqrt();
    (lmin.max(0.0) / n).sqrt()
}

/// Algebraic circle fit followed by one Gauss-Newton step on the geometric
/// residuals; RMS radial distance. `None` when the points are too close to
/// collinear for a finite circle.
pub fn circle_residual(pts: &[(f64, f64)]) -> Option<f64> {
    use nalgebra::{DMatrix, DVector};
    let n = pts.len();
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n as f64, b + p.1 / n as f64));
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => pts[i].0 - mx,
        1 => pts[i].1 - my,
        _ => 1.0,
    });
    let b = DVector::from_fn(n, |i, _| -((pts[i].0 - mx).powi(2) + (pts[i].1 - my).powi(2)));
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    let (mut cx, mut cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = cx * cx + cy * cy - sol[2];
    if r2.is_nan() || r2 <= 0.0 || r2.is_infinite() {
        return None;
    }
    let mut r = r2.sqrt();
    let resid = |cx: f64, cy: f64, r: f64| -> Vec<f64> {
        pts.iter().map(|p| ((p.0 - mx - cx).powi(2) + (p.1 - my - cy).powi(2)).sqrt() - r).collect()
    };
    let jac = DMatrix::from_fn(n, 3, |i, j| {
        let (dx, dy) = (pts[i].0 - mx - cx, pts[i].1 - my - cy);
        let d = (dx * dx + dy * dy).sqrt().max(f64::MIN_POSITIVE);
        match j {
            0 => -dx / d,
            1 => -dy / d,
            _ => -1.0,
        }
    });
    let res0 = resid(cx, cy, r);
    if let Ok(step) = jac.svd(true, true).solve(&DVector::from_vec(res0.clone()), 1e-12) {
        let (nx, ny, nr) = (cx - step[0], cy - step[1], r - step[2]);
        let res1 = resid(nx, ny, nr);
        if nr > 0.0 && rms(&res1) < rms(&res0) {
            cx = nx;
            cy = ny;
            r = nr;
        }
    }
    let out = rms(&resid(cx, cy, r));
    out.is_finite().then_some(out)
}

/// Fit each piece between consecutive cuts; both residuals are divided by
/// the piece's arc length. Non-trivial iff some piece has
/// `min(line, circle) > tol`.
pub fn nontriviality<T: Real>(gamma: &PlCurve<T>, cuts: &[T], tol: f64) -> Nontriviality {
    let knots = gamma.knots();
    let mut segments = Vec::new();
    let mut skipped = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut xs = vec![a];
        let lo = knots.partition_point(|&k| k <= a);
        let hi = knots.partition_point(|&k| k < b);
        xs.extend_from_slice(&knots[lo..hi.max(lo)]);
        xs.push(b);
        let (a64, b64) = (a.to_f64_lossy(), b.to_f64_lossy());
        if xs.len() < 4 {
            skipped.push((a64, b64));
            continue;
        }
        let pts: Vec<(f64, f64)> =
            xs.iter().map(|&x| gamma.eval(x)).map(|z| (z.re.to_f64_lossy(), z.im.to_f64_lossy())).collect();
        let arc = b64 - a64;
        let line = line_residual(&pts) / arc;
        let circle = circle_residual(&pts).map_or(line, |c| c / arc);
        segments.push(SegmentFit { start: a64, end: b64, vertices: xs.len(), line, circle });
    }
    let score = segments.iter().map(SegmentFit::score).fold(0.0, f64::max);
    Nontriviality { nontrivial: score > tol, segments, skipped, score, tol }
}

/// Knobs for [`run_suite`].
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Levels covered by the quasi-embedding suite.
    pub qe_levels: usize,
    pub qe_samples: usize,
    pub embed_samples: usize,
    pub seed: u64,
    /// Require non-triviality of the final curve.
    pub nontrivial: bool,
    pub cut_depth: usize,
    pub tol_nontrivial: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            qe_levels: 12,
            qe_samples: 100,
            embed_samples: 10_000,
            seed: 0,
            nontrivial: false,
            cut_depth: 3,
            tol_nontrivial: 1e-3,
        }
    }
}

/// Everything checkable for a breaking sequence.
///
/// The embedding check compares `gamma^(N)` with the PWI adapted to it; its
/// tolerance is `16 |lambda| sum_{k >= N} sin(|phi_k| / 2)` over the
/// available levels, four times the distance bound to the limit curve.
pub fn run_suite(bs: &BreakingSequence<f64>, opts: &SuiteOptions) -> Result<VerificationReport> {
    let n = bs.levels();
    let mut r = quasi_embedding_suite(bs, opts.qe_levels, opts.qe_samples, opts.seed)?;
    if n >= 2 {
        r.extend(convergence_report(bs)?);
    }

    let norms = bs.thetas.norms();
    let horizon = noise_horizon(&norms, 2 * bs.trace.d());
    let s = summability_check(&bs.thetas, horizon);
    let meta = json!({ "horizon": horizon, "sum": s.sum });
    r.push(Check::new("summability/tail-fraction", s.tail_fraction, 0.05).with_meta(meta.clone()));
    r.push(Check::new("summability/final-term", s.final_term, 1e-6).with_meta(meta));

    let last = bs.curve(n);
    let (ok, witness) = injectivity(last);
    r.push(
        Check::new("injectivity", if ok { 0.0 } else { 1.0 }, 0.0).at(n, None).with_meta(json!({ "witness": witness })),
    );

    let xs: Vec<f64> = last.knots().to_vec();
    r.push(Check::new("isometry", isometry_defect(last, &xs), 1e-9 * bs.total()).at(n, None));

    let iet = bs.trace.iet(0);
    let theta = &bs.thetas.entries[0];
    let pwi = adapted_pwi(last, &iet, theta)?;
    let emb = embedding_defect(last, &pwi, &iet, opts.embed_samples);
    let upto = horizon.min(bs.trace.len());
    let tail: f64 = (n..upto)
        .map(|k| {
            let b1 = bs.trace.perm(k).last(1);
            (f64::wrap_pi(bs.thetas.entries[k][b1]).abs() / 2.0).sin()
        })
        .sum();
    let tol = 16.0 * bs.total() * tail + 1e-12;
    r.push(Check::new("embedding", emb.defect, tol).at(n, None).with_meta(json!({ "at": emb.at })));

    if opts.nontrivial {
        let cuts = cut_params(&iet, opts.cut_depth)?;
        let nt = nontriviality(last, &cuts, opts.tol_nontrivial);
        // Reported as tol / score so that passing still means defect <= 1.
        let ratio = if nt.score > 0.0 { opts.tol_nontrivial / nt.score } else { f64::INFINITY };
        r.push(Check::new("nontriviality", ratio, 1.0).at(n, None).with_meta(json!({
            "score": nt.score,
            "tol_nontrivial": opts.tol_nontrivial,
            "skipped": nt.skipped.len(),
        })));
    }
    Ok(r)
}

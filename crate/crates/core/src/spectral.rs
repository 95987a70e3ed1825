//! The invariant subspace `H_pi`, Lyapunov exponents of the Zorich cocycle,
//! the contracting subspace, and sampling of admissible rotation vectors.
//!
//! Everything here is double precision except [`ExactFrame`], which pushes
//! integer vectors back through the exact inverse cocycle.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::breaking::{theta_sequence, ThetaSeq};
use crate::error::{Error, Result};
use crate::iet::omega_matrix;
use crate::perm::Permutation;
use crate::rauzy::{integer_rank, rauzy_step, step_type, InductionTrace, TorusPoint};

/// Orthonormal basis of `H_pi = Omega_pi(R^d)`.
#[derive(Clone, Debug)]
pub struct InvariantSubspace {
    pub basis: DMatrix<f64>,
    pub dim: usize,
}

impl InvariantSubspace {
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

fn omega_rows(perm: &Permutation) -> Vec<Vec<i64>> {
    omega_matrix(perm).into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect()
}

pub fn h_pi_basis(perm: &Permutation) -> Result<InvariantSubspace> {
    if !perm.is_irreducible() {
        return Err(Error::Reducible);
    }
    let rows = omega_rows(perm);
    let rank = integer_rank(&rows);
    let d = perm.d();
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j] as f64);
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested");
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(InvariantSubspace { basis: DMatrix::from_fn(d, rank, |i, k| u[(i, idx[k])]), dim: rank })
}

/// `rank(Omega_pi) / 2`, computed exactly.
pub fn genus(perm: &Permutation) -> Result<usize> {
    if !perm.is_irreducible() {
        return Err(Error::Reducible);
    }
    Ok(integer_rank(&omega_rows(perm)) / 2)
}

/// Lyapunov exponents per Zorich step, largest first.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    pub exponents: Vec<f64>,
    /// Standard error from batch means.
    pub errors: Vec<f64>,
    pub zorich_steps: usize,
    pub rauzy_steps: usize,
    pub batches: usize,
}

impl LyapunovEstimate {
    /// `max_j |theta_j + theta_{2g+1-j}| / theta_1`.
    pub fn symmetry_defect(&self) -> f64 {
        let k = self.exponents.len();
        let worst = (0..k / 2).map(|j| (self.exponents[j] + self.exponents[k - 1 - j]).abs()).fold(0.0, f64::max);
        worst / self.exponents[0].abs()
    }

    /// Smallest ratio of a consecutive gap to the combined error bars.
    pub fn gap_significance(&self) -> f64 {
        (1..self.exponents.len())
            .map(|j| {
                (self.exponents[j - 1] - self.exponents[j])
                    / (self.errors[j - 1] + self.errors[j]).max(f64::MIN_POSITIVE)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn add_row(w: &mut DMatrix<f64>, dst: usize, src: usize) {
    for c in 0..w.ncols() {
        let v = w[(src, c)];
        w[(dst, c)] += v;
    }
}

/// Push a basis of `H_pi` through `m` Zorich steps, re-orthonormalizing
/// after every step, and average the logs of the triangular diagonal.
pub fn lyapunov_spectrum(lambda: &[f64], perm: &Permutation, m: usize) -> Result<LyapunovEstimate> {
    if m == 0 {
        return Err(Error::Inconsistent("need at least one Zorich step".into()));
    }
    if lambda.len() != perm.d() {
        return Err(Error::DimensionMismatch { expected: perm.d(), got: lambda.len() });
    }
    let h = h_pi_basis(perm)?;
    let k = h.dim;
    let mut w = h.basis;
    let s: f64 = lambda.iter().sum();
    let mut lam: Vec<f64> = lambda.iter().map(|x| x / s).collect();
    let mut p = perm.clone();
    let nb = m.min(20);
    let mut sums = vec![vec![0.0; k]; nb];
    let mut lens = vec![0usize; nb];
    let mut rauzy = 0;
    let mut current = step_type(&lam, &p).ok_or(Error::RauzyUndefined { step: 0 })?;
    for z in 0..m {
        loop {
            let eps = step_type(&lam, &p).ok_or(Error::RauzyUndefined { step: rauzy })?;
            if eps != current {
                current = eps;
                break;
            }
            let (next, q, st) = rauzy_step(&lam, &p, rauzy)?;
            add_row(&mut w, st.loser, st.winner);
            let t: f64 = next.iter().sum();
            lam = next.into_iter().map(|x| x / t).collect();
            p = q;
            rauzy += 1;
        }
        let qr = w.clone().qr();
        let r = qr.r();
        let b = z * nb / m;
        for i in 0..k {
            sums[b][i] += r[(i, i)].abs().ln();
        }
        lens[b] += 1;
        w = qr.q();
    }
    let mut est: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let mean = sums.iter().map(|s| s[i]).sum::<f64>() / m as f64;
            let means: Vec<f64> = (0..nb).map(|b| sums[b][i] / lens[b] as f64).collect();
            let mu = means.iter().sum::<f64>() / nb as f64;
            let var = if nb > 1 { means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nb - 1) as f64 } else { 0.0 };
            (mean, (var / nb as f64).sqrt())
        })
        .collect();
    est.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovEstimate {
        exponents: est.iter().map(|e| e.0).collect(),
        errors: est.iter().map(|e| e.1).collect(),
        zorich_steps: m,
        rauzy_steps: rauzy,
        batches: nb,
    })
}

/// Contracting subspace of the cocycle along a trace, restricted to `H_pi`.
#[derive(Clone, Debug)]
pub struct StableFrame {
    /// `d x g`, orthonormal.
    pub frame: DMatrix<f64>,
    /// Accumulated log singular values, largest first.
    pub log_growth: Vec<f64>,
    /// Ratio of the `g`-th to the `(g+1)`-th singular value.
    pub gap: f64,
    pub levels: usize,
    pub exact: Option<ExactFrame>,
}

/// Basis vectors `vecs[k] * 2^exps[k]`, mutually orthogonal, exactly in the
/// span of `B^(-N) w` for integer `w` in `H` at level `N`.
#[derive(Clone, Debug)]
pub struct ExactFrame {
    pub vecs: Vec<Vec<BigInt>>,
    pub exps: Vec<i32>,
    pub levels: usize,
}

const FIXED_BITS: u64 = 256;

fn to_f64_scaled(v: &BigInt, exp: i32) -> f64 {
    let bits = v.bits() as i64;
    let shift = (bits - 60).max(0);
    let m = (v >> shift as usize).to_f64().unwrap_or(0.0);
    m * 2f64.powi((shift + exp as i64) as i32)
}

fn rational_bits(q: &BigRational) -> i64 {
    q.numer().bits() as i64 - q.denom().bits() as i64
}

impl ExactFrame {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.vecs[k].iter().map(|v| to_f64_scaled(v, self.exps[k])).collect()
    }

    /// Orthonormal `d x g` matrix with the same span.
    pub fn to_f64(&self) -> DMatrix<f64> {
        let d = self.vecs[0].len();
        let mut m = DMatrix::zeros(d, self.vecs.len());
        for k in 0..self.vecs.len() {
            let c = self.column(k);
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            for i in 0..d {
                m[(i, k)] = c[i] / n;
            }
        }
        m
    }
}

/// Largest principal angle between the column spans of two orthonormal
/// matrices of equal rank.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let resid = b - a * (a.transpose() * b);
    resid.svd(false, false).singular_values.max().min(1.0).asin()
}

/// Backward pass over the trace: start from `H` at the last level, apply
/// transposed cocycle factors in reverse, project onto `H` and
/// re-orthonormalize at each Zorich boundary. The leading columns align with
/// the expanding directions, the last `g` span the contracting subspace.
pub fn stable_subspace(trace: &InductionTrace<f64>, g: usize) -> Result<StableFrame> {
    let n = trace.len();
    let mut projectors: HashMap<Permutation, DMatrix<f64>> = HashMap::new();
    let mut proj = |p: &Permutation| -> Result<DMatrix<f64>> {
        if let Some(m) = projectors.get(p) {
            return Ok(m.clone());
        }
        let m = h_pi_basis(p)?.projector();
        projectors.insert(p.clone(), m.clone());
        Ok(m)
    };
    let h = h_pi_basis(trace.perm(n))?;
    if h.dim != 2 * g {
        return Err(Error::DimensionMismatch { expected: 2 * g, got: h.dim });
    }
    let mut w = h.basis;
    let mut logs = vec![0.0; 2 * g];
    let marks = trace.zorich_marks();
    for i in (0..n).rev() {
        let s = trace.steps[i];
        add_row(&mut w, s.winner, s.loser);
        if i == 0 || marks.binary_search(&i).is_ok() {
            w = proj(trace.perm(i))? * w;
            let qr = w.clone().qr();
            let r = qr.r();
            for (k, l) in logs.iter_mut().enumerate() {
                *l += r[(k, k)].abs().ln();
            }
            w = qr.q();
        }
    }
    let gap = if g == 0 { f64::INFINITY } else { (logs[g - 1] - logs[g]).exp() };
    if gap < 10.0 {
        return Err(Error::InsufficientGap { gap, threshold: 10.0 });
    }
    let frame = w.columns(g, g).into_owned();
    Ok(StableFrame { frame, log_growth: logs, gap, levels: n, exact: None })
}

/// Pull `g` generic integer vectors of `H` at the last level back through the
/// exact inverse cocycle. Expanding components shrink by `e^{-2 theta_g N}`
/// relative to contracting ones, and no rounding happens before the final
/// fixed-point conversion at 256 bits.
pub fn refine_exact(trace: &InductionTrace<f64>, g: usize) -> Result<ExactFrame> {
    let n = trace.len();
    let d = trace.d();
    let om = omega_rows(trace.perm(n));
    let mut ps: Vec<Vec<BigRational>> = Vec::with_capacity(g);
    for k in 0..g {
        let z: Vec<i64> =
            (0..d).map(|i| ((7919 * (k as i64 + 1) * (i as i64 + 3) + 104_729 * (i * i) as i64) % 97) - 48).collect();
        let mut w: Vec<BigInt> =
            om.iter().map(|row| BigInt::from(row.iter().zip(&z).map(|(a, b)| a * b).sum::<i64>())).collect();
        for s in trace.steps.iter().rev() {
            let v = w[s.winner].clone();
            w[s.loser] -= v;
        }
        ps.push(w.into_iter().map(BigRational::from_integer).collect());
    }
    let dot =
        |a: &[BigRational], b: &[BigRational]| a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y);
    let mut qs: Vec<Vec<BigRational>> = Vec::with_capacity(g);
    for p in ps {
        let mut q = p.clone();
        for prev in &qs {
            let c = dot(&p, prev) / dot(prev, prev);
            for (qi, pi) in q.iter_mut().zip(prev) {
                *qi -= &c * pi;
            }
        }
        if q.iter().all(Zero::is_zero) {
            return Err(Error::Inconsistent("pulled-back vectors are dependent".into()));
        }
        qs.push(q);
    }
    let mut vecs = Vec::with_capacity(g);
    let mut exps = Vec::with_capacity(g);
    for q in qs {
        let top = q.iter().filter(|x| !x.is_zero()).map(|x| rational_bits(&x.abs())).max().unwrap_or(0);
        let s = FIXED_BITS as i64 - top;
        let scale = if s >= 0 {
            BigRational::from_integer(BigInt::from(1) << s as usize)
        } else {
            BigRational::new(BigInt::from(1), BigInt::from(1) << (-s) as usize)
        };
        vecs.push(q.iter().map(|x| (x * &scale).round().to_integer()).collect());
        exps.push(-(s as i32));
    }
    Ok(ExactFrame { vecs, exps, levels: n })
}

/// [`stable_subspace`] plus [`refine_exact`] on a fresh trace of `levels`
/// Rauzy steps.
pub fn stable_frame(
    lambda: &[f64],
    perm: &Permutation,
    levels: usize,
    g: usize,
) -> Result<(StableFrame, InductionTrace<f64>)> {
    let trace = crate::rauzy::rauzy_iterate(lambda, perm, levels)?;
    let mut frame = stable_subspace(&trace, g)?;
    frame.exact = Some(refine_exact(&trace, g)?);
    Ok((frame, trace))
}

/// `|B^(n) v|` for `n = 0..=levels` in floating point (no reduction mod 2pi).
pub fn push_forward_norms(trace: &InductionTrace<f64>, v: &[f64], levels: usize) -> Vec<f64> {
    let mut w = v.to_vec();
    let norm = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = vec![norm(&w)];
    for s in &trace.steps[..levels.min(trace.len())] {
        w[s.loser] += w[s.winner];
        out.push(norm(&w));
    }
    out
}

#[derive(Clone, Debug)]
pub struct SampleOptions {
    pub max_attempts: usize,
    /// Levels scanned for `theta^(n) = 0`.
    pub check_levels: usize,
    pub strong_stable_tol: f64,
    pub zero_tol: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { max_attempts: 100, check_levels: 200, strong_stable_tol: 1e-8, zero_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionReport {
    /// Angle between `v` and `upsilon^(0)` for the accepted sample.
    pub strong_stable_angle: f64,
    pub strong_stable_hits: usize,
    pub zero_hits: usize,
    pub min_level_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaSample {
    /// Lift of `theta` in the contracting subspace, radians.
    pub v: Vec<f64>,
    /// `v mod 2pi`.
    pub theta: Vec<f64>,
    #[serde(skip)]
    pub point: TorusPoint,
    pub delta: f64,
    pub norm: f64,
    pub attempts: usize,
    pub exclusion: ExclusionReport,
}

fn angle_to_line(v: &[f64], u: &[f64]) -> f64 {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / (nu * nv);
    let perp = v.iter().zip(u).map(|(a, b)| a / nv - c * b / nu).map(|x| x * x).sum::<f64>().sqrt();
    perp.min(1.0).asin()
}

/// Draw `v` in the contracting subspace with `|v| = delta u`, `u` uniform in
/// `(0.1, 1)`, and return `theta = v mod 2pi`. Samples too close to the
/// strongly contracting direction `upsilon^(0)`, or whose `theta^(n)` hits 0,
/// are redrawn.
pub fn sample_theta(
    frame: &StableFrame,
    trace: &InductionTrace<f64>,
    delta: f64,
    seed: u64,
    opts: &SampleOptions,
) -> Result<ThetaSample> {
    if !(delta > 0.0 && delta < std::f64::consts::PI) {
        return Err(Error::OutOfDomain(delta));
    }
    let g = frame.frame.ncols();
    let d = frame.frame.nrows();
    let upsilon = trace.iet(0).upsilon().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ExclusionReport {
        strong_stable_angle: 0.0,
        strong_stable_hits: 0,
        zero_hits: 0,
        min_level_norm: f64::INFINITY,
    };
    for attempt in 1..=opts.max_attempts {
        let mut c: Vec<f64> = (0..g).map(|_| rng.sample(StandardNormal)).collect();
        let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= cn);
        let r = delta * rng.random_range(0.1..1.0);
        let (v, point) = match &frame.exact {
            Some(ex) => exact_combination(ex, &c, r),
            None => {
                let v: Vec<f64> = (0..d).map(|i| (0..g).map(|k| frame.frame[(i, k)] * c[k] * r).sum()).collect();
                let p = TorusPoint::from_radians(&v);
                (v, p)
            }
        };
        let ang = angle_to_line(&v, &upsilon);
        if ang < opts.strong_stable_tol {
            report.strong_stable_hits += 1;
            continue;
        }
        let seq = theta_sequence(trace, &point, opts.check_levels);
        let norms = seq.norms();
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        if min < opts.zero_tol || seq.exact_zero.iter().any(|&z| z) {
            report.zero_hits += 1;
            continue;
        }
        report.strong_stable_angle = ang;
        report.min_level_norm = min;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        return Ok(ThetaSample {
            theta: point.to_radians(),
            v,
            point,
            delta,
            norm,
            attempts: attempt,
            exclusion: report,
        });
    }
    Err(Error::ExhaustedResamples { attempts: opts.max_attempts })
}

/// `sum_k c_k r / |e_k| e_k` in turns, exactly as a dyadic torus point.
fn exact_combination(ex: &ExactFrame, c: &[f64], r: f64) -> (Vec<f64>, TorusPoint) {
    let d = ex.vecs[0].len();
    let turns = r / std::f64::consts::TAU;
    let mut terms: Vec<(Vec<BigInt>, i32)> = Vec::new();
    let mut v = vec![0.0; d];
    for (k, &ck) in c.iter().enumerate() {
        let col = ex.column(k);
        let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = ck * turns / n;
        if a == 0.0 {
            continue;
        }
        for i in 0..d {
            v[i] += a * col[i] * std::f64::consts::TAU;
        }
        let (mant, e, sign) = num_traits::float::FloatCore::integer_decode(a);
        let m = BigInt::from(mant) * BigInt::from(sign);
        terms.push((ex.vecs[k].iter().map(|x| x * &m).collect(), e as i32 + ex.exps[k]));
    }
    let emin = terms.iter().map(|t| t.1).min().unwrap_or(0);
    let mut nums = vec![BigInt::zero(); d];
    for (vec, e) in terms {
        let sh = (e - emin) as usize;
        for (acc, x) in nums.iter_mut().zip(vec) {
            *acc += x << sh;
        }
    }
    (v, TorusPoint::from_dyadic(nums, emin))
}

/// Partial sums of `d_T(theta^(n), 0)`.
#[derive(Clone, Debug, Serialize)]
pub struct Summability {
    pub terms: Vec<f64>,
    pub sum: f64,
    /// Share of the sum contributed by the last quarter of levels.
    pub tail_fraction: f64,
    pub final_term: f64,
    pub decays: bool,
}

/// Decays when the last quarter of levels carries < 5% of the sum and the
/// final term is below `1e-6`.
pub fn summability_check(thetas: &ThetaSeq, upto: usize) -> Summability {
    let terms: Vec<f64> = thetas.norms().into_iter().take(upto + 1).collect();
    let sum: f64 = terms.iter().sum();
    let start = terms.len() - terms.len() / 4;
    let tail: f64 = terms[start..].iter().sum();
    let tail_fraction = if sum > 0.0 { tail / sum } else { 0.0 };
    let final_term = *terms.last().unwrap_or(&0.0);
    Summability { decays: tail_fraction < 0.05 && final_term < 1e-6, terms, sum, tail_fraction, final_term }
}

/// Level `n*` after which `norms` stop decreasing: the argmin of the running
/// maximum over windows of `window` levels.
pub fn noise_horizon(norms: &[f64], window: usize) -> usize {
    if norms.len() <= window {
        return norms.len().saturating_sub(1);
    }
    let mut best = (0, f64::INFINITY);
    for n in 0..=norms.len() - window {
        let m = norms[n..n + window].iter().copied().fold(0.0, f64::max);
        if m < best.1 {
            best = (n, m);
        }
    }
    best.0
}

/// `max_n |B^(n) v| / |v|` read off a rotation-vector sequence.
pub fn growth_constant(norms: &[f64]) -> f64 {
    if norms.is_empty() || norms[0] == 0.0 {
        return 0.0;
    }
    norms.iter().copied().fold(0.0, f64::max) / norms[0]
}

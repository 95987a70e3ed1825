//! The breaking operator and the breaking sequence `gamma^(n)`.

use num_complex::Complex;

use crate::curve::PlCurve;
use crate::error::{Error, Result};
use crate::rauzy::{torus_norm, InductionTrace, TorusPoint};
use crate::scalar::Real;

/// Default iteration budget for orbit constructions.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Ordered disjoint intervals `[y_k, y_k + width)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSeq<T> {
    pub starts: Vec<T>,
    pub width: T,
}

impl<T: Real> IntervalSeq<T> {
    pub fn new(starts: Vec<T>, width: T) -> Self {
        IntervalSeq { starts, width }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn end(&self, k: usize) -> T {
        self.starts[k] + self.width
    }

    /// Ordered, disjoint (to `tol`) and inside `[0, len]` (to `tol`).
    pub fn is_valid(&self, len: T, tol: T) -> bool {
        self.width > T::zero()
            && self.starts.first().is_none_or(|&y| y >= -tol)
            && self.starts.last().is_none_or(|&y| y + self.width <= len + tol)
            && self.starts.windows(2).all(|w| w[0] + self.width <= w[1] + tol)
    }
}

/// Output of one application of the breaking operator.
#[derive(Clone, Debug)]
pub struct Broken<T> {
    pub curve: PlCurve<T>,
    /// Offsets on each `J_k`.
    pub eps_upper: Vec<Complex<T>>,
    /// Offsets right of each `J_k`.
    pub eps_lower: Vec<Complex<T>>,
}

impl<T: Real> Broken<T> {
    pub fn max_offset(&self) -> T {
        self.eps_upper.iter().chain(&self.eps_lower).fold(T::zero(), |m, e| m.max(e.norm()))
    }
}

fn snap<T: Real>(knots: &[T], x: T, tol: T) -> T {
    let i = knots.partition_point(|&k| k < x);
    let mut best = x;
    let mut dist = tol;
    for j in [i.wrapping_sub(1), i] {
        if let Some(&k) = knots.get(j) {
            if (k - x).abs() <= dist {
                dist = (k - x).abs();
                best = k;
            }
        }
    }
    best
}

/// `Br(phi, J)`: rotate the pieces of `gamma` over each `J_k` by `phi` and
/// translate everything to the right so the curve stays continuous.
///
/// Interval ends closer than `snap_tol` to an existing knot are moved onto
/// it, so that endpoints shared with earlier levels do not create slivers.
pub fn breaking_operator_snapped<T: Real>(
    gamma: &PlCurve<T>,
    phi: T,
    j: &IntervalSeq<T>,
    snap_tol: T,
) -> Result<Broken<T>> {
    let len = gamma.domain_len();
    let range_tol = T::tie_tol(&len);
    for k in 0..j.len() {
        if j.starts[k] < -range_tol || j.end(k) > len + range_tol {
            return Err(Error::IntervalOutOfRange { start: j.starts[k].to_f64_lossy(), end: j.end(k).to_f64_lossy() });
        }
    }
    if !j.is_valid(len, range_tol) {
        return Err(Error::Inconsistent("intervals must be ordered and disjoint".into()));
    }
    let (segment, defect) = gamma.unit_speed_defect();
    if defect > T::lit(1e-9) {
        return Err(Error::NonUnitSpeed { segment, defect: defect.to_f64_lossy() });
    }

    let old = gamma.knots();
    let clamp = |x: T| x.max(T::zero()).min(len);
    let ys: Vec<T> = j.starts.iter().map(|&y| snap(old, clamp(y), snap_tol)).collect();
    let ye: Vec<T> = (0..j.len()).map(|k| snap(old, clamp(j.end(k)), snap_tol)).collect();

    let rot = Complex::from_polar(T::one(), phi);
    let one_minus = Complex::new(T::one(), T::zero()) - rot;
    let mut eps_upper = Vec::with_capacity(j.len());
    let mut eps_lower = Vec::with_capacity(j.len());
    let mut prev = Complex::new(T::zero(), T::zero());
    for k in 0..j.len() {
        let up = gamma.eval(ys[k]) * one_minus + prev;
        let lo = up - gamma.eval(ye[k]) * one_minus;
        eps_upper.push(up);
        eps_lower.push(lo);
        prev = lo;
    }

    let mut knots: Vec<T> = Vec::with_capacity(old.len() + 2 * j.len());
    knots.extend_from_slice(old);
    knots.extend(ys.iter().copied().filter(|&y| y < len));
    knots.extend(ye.iter().copied().filter(|&y| y < len && y > T::zero()));
    knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    knots.dedup();

    // Branch of each new segment, decided at its midpoint so that snapped
    // ends cannot flip sides: None = left of J_0, Some((k, inside)).
    let branch = |x: T| -> Option<(usize, bool)> {
        let k = ys.partition_point(|&y| y <= x);
        if k == 0 {
            None
        } else {
            Some((k - 1, x < ye[k - 1]))
        }
    };
    let value = |x: T, b: Option<(usize, bool)>| -> Complex<T> {
        let g = gamma.eval(x);
        match b {
            None => g,
            Some((k, true)) => g * rot + eps_upper[k],
            Some((k, false)) => g + eps_lower[k],
        }
    };

    let segs = knots.len() - 1;
    let half = T::lit(0.5);
    let mut points = Vec::with_capacity(knots.len());
    let mut dirs = Vec::with_capacity(segs);
    let mut last_branch = None;
    for i in 0..segs {
        let mid = (knots[i] + knots[i + 1]) * half;
        let b = branch(mid);
        let d = gamma.dirs()[gamma.segment_at(mid)];
        points.push(value(knots[i], b));
        dirs.push(if matches!(b, Some((_, true))) { d * rot } else { d });
        last_branch = b;
    }
    points.push(value(len, last_branch));
    Ok(Broken { curve: PlCurve::from_parts(knots, points, dirs), eps_upper, eps_lower })
}

/// [`breaking_operator_snapped`] merging only knots within a few ulps.
pub fn breaking_operator<T: Real>(gamma: &PlCurve<T>, phi: T, j: &IntervalSeq<T>) -> Result<Broken<T>> {
    let tol = T::lit(8.0) * T::epsilon() * gamma.domain_len();
    breaking_operator_snapped(gamma, phi, j, tol)
}

/// `J^(n)`: the forward images of `I^(n-1) \ I^(n)` under `f` up to its first
/// return to `I^(n-1)`, sorted left to right. Orbits are followed through
/// interval midpoints, so the symbolic itinerary is unaffected by rounding.
pub fn breaking_intervals<T: Real>(trace: &InductionTrace<T>, n: usize, budget: u64) -> Result<IntervalSeq<T>> {
    if n == 0 || n > trace.len() {
        return Err(Error::LevelMismatch(format!("J^({n}) needs 1 <= n <= {}", trace.len())));
    }
    let f = trace.iet(0);
    let step = trace.steps[n - 1];
    let width = trace.lambda(n - 1)[step.loser];
    let upper = trace.total(n - 1);
    let half = width * T::lit(0.5);
    let mut starts = Vec::new();
    let mut mid = (upper - width) + half;
    let mut spent = 0u64;
    loop {
        starts.push(mid - half);
        spent += 1;
        if spent > budget {
            return Err(Error::BudgetExceeded { budget });
        }
        mid = f.apply(&mid)?;
        if mid < upper {
            break;
        }
    }
    starts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    // Each J_k lies inside or outside every earlier tail I^(m-1) \ I^(m).
    let tol = width * T::lit(1e-6);
    let cuts: Vec<T> = (0..n).map(|m| trace.total(m)).collect();
    for &y in &starts {
        if cuts.iter().any(|&c| c > y + tol && c < y + width - tol) {
            return Err(Error::Inconsistent(format!(
                "J^({n}) interval at {} straddles a tail boundary",
                y.to_f64_lossy()
            )));
        }
    }
    Ok(IntervalSeq { starts, width })
}

/// Rotation vectors `theta^(n) = B^(n) theta` on the torus, in `[0, 2pi)`.
#[derive(Clone, Debug)]
pub struct ThetaSeq {
    pub theta0: Vec<f64>,
    pub entries: Vec<Vec<f64>>,
    /// Levels where the exact torus point is zero.
    pub exact_zero: Vec<bool>,
}

impl ThetaSeq {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `d_T(theta^(n), 0)` per level.
    pub fn norms(&self) -> Vec<f64> {
        self.entries.iter().map(|t| torus_norm(t)).collect()
    }
}

/// `theta^(n)` for `n = 0..=n_max`, computed exactly in turns.
pub fn theta_sequence<T: Real>(trace: &InductionTrace<T>, theta: &TorusPoint, n_max: usize) -> ThetaSeq {
    let n_max = n_max.min(trace.len());
    let mut tp = theta.clone();
    let mut entries = Vec::with_capacity(n_max + 1);
    let mut exact_zero = Vec::with_capacity(n_max + 1);
    entries.push(tp.to_radians());
    exact_zero.push(tp.is_zero());
    for s in &trace.steps[..n_max] {
        tp.add_coord(s.loser, s.winner);
        entries.push(tp.to_radians());
        exact_zero.push(tp.is_zero());
    }
    ThetaSeq { theta0: theta.to_radians(), entries, exact_zero }
}

/// Same recursion in plain floating point (`theta_loser += theta_winner`
/// mod 2pi); a cross-check for [`theta_sequence`].
pub fn theta_sequence_float<T: Real>(trace: &InductionTrace<T>, theta: &[f64], n_max: usize) -> Vec<Vec<f64>> {
    let mut t: Vec<f64> = theta.iter().map(|&x| f64::wrap_tau(x)).collect();
    let mut out = vec![t.clone()];
    for s in &trace.steps[..n_max.min(trace.len())] {
        t[s.loser] = f64::wrap_tau(t[s.loser] + t[s.winner]);
        out.push(t.clone());
    }
    out
}

/// The breaking sequence and everything needed to inspect it.
#[derive(Clone, Debug)]
pub struct BreakingSequence<T> {
    pub trace: InductionTrace<T>,
    pub thetas: ThetaSeq,
    /// `intervals[n - 1] = J^(n)`.
    pub intervals: Vec<IntervalSeq<T>>,
    /// `angles[n - 1]` is the angle used to build `gamma^(n)`, in `[-pi, pi)`.
    pub angles: Vec<T>,
    /// Largest offset `|eps|` created at each level.
    pub offsets: Vec<T>,
    pub curves: Vec<PlCurve<T>>,
}

impl<T: Real> BreakingSequence<T> {
    pub fn levels(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn curve(&self, n: usize) -> &PlCurve<T> {
        &self.curves[n]
    }

    pub fn total(&self) -> T {
        self.trace.total(0)
    }

    /// Angle `theta^(m)_a` as `T`.
    pub fn theta(&self, m: usize, a: usize) -> T {
        T::lit(self.thetas.entries[m][a])
    }
}

/// Build `gamma^(0..=n)`: `gamma^(0)(x) = x` and
/// `gamma^(n) = Br(theta^(n-1)_{beta1}, J^(n)) gamma^(n-1)`.
///
/// `thetas` must cover at least `n` levels; `trace` at least `n` steps.
pub fn breaking_sequence<T: Real>(
    trace: &InductionTrace<T>,
    thetas: &ThetaSeq,
    n: usize,
) -> Result<BreakingSequence<T>> {
    breaking_sequence_with(trace, thetas, n, DEFAULT_BUDGET)
}

pub fn breaking_sequence_with<T: Real>(
    trace: &InductionTrace<T>,
    thetas: &ThetaSeq,
    n: usize,
    budget: u64,
) -> Result<BreakingSequence<T>> {
    if n > trace.len() || thetas.len() < n {
        return Err(Error::LevelMismatch(format!("{n} levels requested, trace has {}", trace.len())));
    }
    let total = trace.total(0);
    let snap_tol = total * T::lit(1e-10);
    let mut curves = vec![PlCurve::identity(total)];
    let mut intervals = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for level in 1..=n {
        let j = breaking_intervals(trace, level, budget)?;
        let beta1 = trace.perm(level - 1).last(1);
        let phi = T::wrap_pi(T::lit(thetas.entries[level - 1][beta1]));
        let prev = curves.last().expect("non-empty");
        let out = if phi == T::zero() {
            Broken { curve: prev.clone(), eps_upper: vec![], eps_lower: vec![] }
        } else {
            breaking_operator_snapped(prev, phi, &j, snap_tol)?
        };
        offsets.push(out.max_offset());
        curves.push(out.curve);
        intervals.push(j);
        angles.push(phi);
    }
    Ok(BreakingSequence { trace: trace.clone(), thetas: thetas.clone(), intervals, angles, offsets, curves })
}

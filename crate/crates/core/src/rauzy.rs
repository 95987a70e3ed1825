//! Rauzy-Veech induction, Zorich acceleration and the integral cocycle.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::iet::Iet;
use crate::perm::{symbol_name, Permutation};
use crate::scalar::Length;

/// Square matrix of arbitrary precision integers, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    d: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(d: usize) -> Self {
        IntMatrix { d, data: vec![BigInt::zero(); d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let d = rows.len();
        let mut m = Self::zeros(d);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), d, "square matrix expected");
            for (j, &v) in r.iter().enumerate() {
                m.data[i * d + j] = BigInt::from(v);
            }
        }
        m
    }

    /// `1 + E_{row,col}`.
    pub fn elementary(d: usize, row: usize, col: usize) -> Self {
        let mut m = Self::identity(d);
        m.data[row * d + col] += 1;
        m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.d + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Row `dst` += row `src`; left multiplication by `1 + E_{dst,src}`.
    pub fn add_row(&mut self, dst: usize, src: usize) {
        let d = self.d;
        for j in 0..d {
            let v = self.data[src * d + j].clone();
            self.data[dst * d + j] += v;
        }
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.d;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = &self.data[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * &other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMatrix {
        let d = self.d;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].clone();
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        (0..self.d).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul_vec_f64(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a.to_f64().unwrap_or(f64::NAN) * b).sum()).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| !v.is_negative())
    }

    pub fn max_abs(&self) -> BigInt {
        self.data.iter().map(|v| v.abs()).max().unwrap_or_default()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|i| self.row(i).iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()).collect()
    }

    pub fn det(&self) -> BigInt {
        bareiss(self.d, self.d, self.data.clone()).1
    }

    pub fn rank(&self) -> usize {
        bareiss(self.d, self.d, self.data.clone()).0
    }

    /// Entries as JSON numbers when they fit in `i64`, strings otherwise.
    pub fn to_json(&self) -> Value {
        Value::Array(
            (0..self.d)
                .map(|i| {
                    Value::Array(
                        self.row(i)
                            .iter()
                            .map(|v| match v.to_i64() {
                                Some(x) => json!(x),
                                None => json!(v.to_string()),
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Fraction-free elimination. Returns `(rank, det)`; `det` is zero unless
/// the matrix is square of full rank.
pub(crate) fn bareiss(rows: usize, cols: usize, mut a: Vec<BigInt>) -> (usize, BigInt) {
    let mut rank = 0;
    let mut prev = BigInt::one();
    let mut sign = 1i32;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r * cols + c].is_zero()) else { continue };
        if p != rank {
            for j in 0..cols {
                a.swap(p * cols + j, rank * cols + j);
            }
            sign = -sign;
        }
        let piv = a[rank * cols + c].clone();
        for r in rank + 1..rows {
            let f = a[r * cols + c].clone();
            for j in c..cols {
                let v = (&piv * &a[r * cols + j] - &f * &a[rank * cols + j]) / &prev;
                a[r * cols + j] = v;
            }
        }
        prev = piv;
        rank += 1;
    }
    let det = if rank == rows && rows == cols { prev * BigInt::from(sign) } else { BigInt::zero() };
    (rank, det)
}

/// Exact rank of an integer matrix given by rows.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    bareiss(r, c, rows.iter().flatten().map(|&v| BigInt::from(v)).collect()).0
}

/// One Rauzy step: type, winner, loser. The cocycle factor is
/// `1 + E_{loser,winner}`, so `B_R^(n+1) = (1 + E_{loser,winner}) B_R^(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InductionStep {
    pub eps: u8,
    pub winner: usize,
    pub loser: usize,
}

impl InductionStep {
    pub fn b_factor(&self, d: usize) -> IntMatrix {
        IntMatrix::elementary(d, self.loser, self.winner)
    }
}

/// Type of the next step, or `None` on a tie within tolerance.
pub fn step_type<T: Length>(lambda: &[T], perm: &Permutation) -> Option<u8> {
    let b0 = perm.last(0);
    let b1 = perm.last(1);
    let total = lambda.iter().fold(T::zero(), |a, l| a + l.clone());
    let diff = lambda[b0].clone() - lambda[b1].clone();
    if diff.abs() <= T::tie_tol(&total) {
        None
    } else if diff > T::zero() {
        Some(0)
    } else {
        Some(1)
    }
}

/// Apply one step of Rauzy induction. `step` is only used for error reports.
pub fn rauzy_step<T: Length>(
    lambda: &[T],
    perm: &Permutation,
    step: usize,
) -> Result<(Vec<T>, Permutation, InductionStep)> {
    if !perm.is_irreducible() {
        return Err(Error::Reducible);
    }
    rauzy_step_unchecked(lambda, perm, step)
}

fn rauzy_step_unchecked<T: Length>(
    lambda: &[T],
    perm: &Permutation,
    step: usize,
) -> Result<(Vec<T>, Permutation, InductionStep)> {
    let eps = step_type(lambda, perm).ok_or(Error::RauzyUndefined { step })?;
    let (winner, loser) = if eps == 0 { (perm.last(0), perm.last(1)) } else { (perm.last(1), perm.last(0)) };
    let mut next = lambda.to_vec();
    next[winner] = next[winner].clone() - lambda[loser].clone();
    Ok((next, perm.induced(eps), InductionStep { eps, winner, loser }))
}

/// A run of Rauzy induction with its exact cocycle.
#[derive(Clone, Debug)]
pub struct InductionTrace<T> {
    /// `(lambda^(n), pi^(n))` for `n = 0..=steps.len()`.
    pub states: Vec<(Vec<T>, Permutation)>,
    pub steps: Vec<InductionStep>,
    /// `B_R^(n)` for `n = steps.len()`.
    pub brn: IntMatrix,
    /// Set when induction stopped early (a tie).
    pub stopped: Option<Error>,
}

impl<T: Length> InductionTrace<T> {
    pub fn start(lambda: Vec<T>, perm: Permutation) -> Result<Self> {
        if !perm.is_irreducible() {
            return Err(Error::Reducible);
        }
        let d = perm.d();
        if lambda.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lambda.len() });
        }
        if let Some(symbol) = lambda.iter().position(|l| *l <= T::zero()) {
            return Err(Error::NonPositiveLength { symbol });
        }
        Ok(InductionTrace { states: vec![(lambda, perm)], steps: vec![], brn: IntMatrix::identity(d), stopped: None })
    }

    pub fn d(&self) -> usize {
        self.states[0].1.d()
    }

    /// Number of completed steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn lambda(&self, n: usize) -> &[T] {
        &self.states[n].0
    }

    pub fn perm(&self, n: usize) -> &Permutation {
        &self.states[n].1
    }

    pub fn total(&self, n: usize) -> T {
        self.lambda(n).iter().fold(T::zero(), |a, l| a + l.clone())
    }

    pub fn iet(&self, n: usize) -> Iet<T> {
        Iet::new(self.perm(n).clone(), self.lambda(n).to_vec()).expect("lengths stay positive")
    }

    /// Perform one more step; on a tie the trace is marked stopped.
    pub fn advance(&mut self) -> Result<&InductionStep> {
        if let Some(e) = &self.stopped {
            return Err(e.clone());
        }
        let (lam, perm) = self.states.last().expect("non-empty");
        match rauzy_step_unchecked(lam, perm, self.steps.len()) {
            Ok((l, p, s)) => {
                self.brn.add_row(s.loser, s.winner);
                self.states.push((l, p));
                self.steps.push(s);
                Ok(self.steps.last().expect("pushed"))
            }
            Err(e) => {
                self.stopped = Some(e.clone());
                Err(e)
            }
        }
    }

    /// Type of the step that would follow, `None` on a tie.
    pub fn next_type(&self) -> Option<u8> {
        let (lam, perm) = self.states.last().expect("non-empty");
        step_type(lam, perm)
    }

    /// `B_R^(n)` recomputed from the recorded factors.
    pub fn cocycle(&self, n: usize) -> IntMatrix {
        let mut m = IntMatrix::identity(self.d());
        for s in &self.steps[..n] {
            m.add_row(s.loser, s.winner);
        }
        m
    }

    /// Step indices where the type differs from the previous step.
    pub fn zorich_marks(&self) -> Vec<usize> {
        (1..self.steps.len()).filter(|&i| self.steps[i].eps != self.steps[i - 1].eps).collect()
    }

    /// Types of all steps as a `0`/`1` string.
    pub fn type_word(&self) -> String {
        self.steps.iter().map(|s| char::from(b'0' + s.eps)).collect()
    }

    /// `max_a |lambda_a - (B^T lambda^(n))_a| / |lambda|`, using the exact
    /// cocycle and `f64` lengths.
    pub fn length_identity_error(&self, n: usize, b: &IntMatrix) -> f64 {
        let d = self.d();
        let lam0: Vec<f64> = self.lambda(0).iter().map(Length::to_f64_lossy).collect();
        let lamn: Vec<f64> = self.lambda(n).iter().map(Length::to_f64_lossy).collect();
        let total: f64 = lam0.iter().sum();
        let bt = b.transpose().mul_vec_f64(&lamn);
        (0..d).map(|a| (lam0[a] - bt[a]).abs()).fold(0.0, f64::max) / total
    }

    /// One JSON object per step: type, winner, loser, lengths after the step
    /// and the elementary factor.
    pub fn to_jsonl(&self) -> String {
        let d = self.d();
        let mut out = String::new();
        for (n, s) in self.steps.iter().enumerate() {
            let lam: Vec<f64> = self.lambda(n + 1).iter().map(Length::to_f64_lossy).collect();
            let rec = json!({
                "n": n + 1,
                "type": s.eps,
                "winner": symbol_name(s.winner),
                "loser": symbol_name(s.loser),
                "lambda": lam,
                "perm": self.perm(n + 1),
                "b_factor": s.b_factor(d).to_json(),
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }
}

/// Run `n` Rauzy steps. A tie stops the run early; the partial trace is
/// returned with [`InductionTrace::stopped`] set.
pub fn rauzy_iterate<T: Length>(lambda: &[T], perm: &Permutation, n: usize) -> Result<InductionTrace<T>> {
    let mut tr = InductionTrace::start(lambda.to_vec(), perm.clone())?;
    for _ in 0..n {
        if tr.advance().is_err() {
            break;
        }
    }
    Ok(tr)
}

/// A maximal run of same-type Rauzy steps.
#[derive(Clone, Debug)]
pub struct ZorichBlock {
    /// Rauzy step index where the block starts (`s^k`).
    pub start: usize,
    /// Number of Rauzy steps grouped (`n(Z^k)`).
    pub len: usize,
    pub eps: u8,
    /// Product of the block's Rauzy factors.
    pub bz: IntMatrix,
}

#[derive(Clone, Debug)]
pub struct ZorichTrace<T> {
    pub rauzy: InductionTrace<T>,
    pub blocks: Vec<ZorichBlock>,
}

impl<T: Length> ZorichTrace<T> {
    pub fn acceleration_times(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len).collect()
    }

    /// `s^m`, the sum of the first `m` acceleration times.
    pub fn partial_sum(&self, m: usize) -> usize {
        self.blocks[..m].iter().map(|b| b.len).sum()
    }

    /// `B_Z^(m)`, product of the first `m` block factors.
    pub fn cocycle(&self, m: usize) -> IntMatrix {
        let d = self.rauzy.d();
        self.blocks[..m].iter().fold(IntMatrix::identity(d), |acc, b| b.bz.mul(&acc))
    }
}

/// Run `m` Zorich steps. A block is closed only once the type of the
/// following step is known, so a tie right after a run leaves that run open.
pub fn zorich_iterate<T: Length>(lambda: &[T], perm: &Permutation, m: usize) -> Result<ZorichTrace<T>> {
    let mut tr = InductionTrace::start(lambda.to_vec(), perm.clone())?;
    let d = tr.d();
    let mut blocks = Vec::with_capacity(m);
    let mut cur: Option<ZorichBlock> = None;
    while blocks.len() < m {
        let Some(t) = tr.next_type() else {
            tr.stopped = Some(Error::RauzyUndefined { step: tr.len() });
            break;
        };
        if let Some(b) = cur.take() {
            if b.eps != t {
                blocks.push(b);
                if blocks.len() == m {
                    break;
                }
            } else {
                cur = Some(b);
            }
        }
        let start = tr.len();
        let s = *tr.advance()?;
        let blk = cur.get_or_insert_with(|| ZorichBlock { start, len: 0, eps: t, bz: IntMatrix::identity(d) });
        blk.len += 1;
        blk.bz.add_row(s.loser, s.winner);
    }
    Ok(ZorichTrace { rauzy: tr, blocks })
}

/// Visit counts of `I^(n)_a` to `I_b` before the first return to `I^(n)`,
/// by direct iteration of `f` from the midpoint of each `I^(n)_a`.
/// Independent of the cocycle bookkeeping; it is the oracle for `B_R^(n)`.
pub fn visit_counts_bruteforce<T: Length>(iet: &Iet<T>, n: usize, budget: u64) -> Result<IntMatrix> {
    let tr = rauzy_iterate(iet.lambda(), iet.perm(), n)?;
    if tr.len() < n {
        return Err(tr.stopped.clone().unwrap_or(Error::RauzyUndefined { step: tr.len() }));
    }
    let d = iet.d();
    let sub = tr.iet(n);
    let ln = sub.total();
    let mut out = IntMatrix::zeros(d);
    let mut spent = 0u64;
    for a in 0..d {
        let mut counts = vec![0u64; d];
        let lo = sub.left(a);
        let hi = lo.clone() + sub.lambda()[a].clone();
        let mut y = T::midpoint(&lo, &hi);
        loop {
            counts[iet.symbol_at(&y)?] += 1;
            spent += 1;
            if spent > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            y = iet.apply(&y)?;
            if y < ln {
                break;
            }
        }
        for (b, c) in counts.into_iter().enumerate() {
            out.set(a, b, BigInt::from(c));
        }
    }
    Ok(out)
}

/// One Rauzy class as a labeled directed graph.
#[derive(Clone, Debug)]
pub struct RauzyGraph {
    /// Sorted by monodromy, then by rows.
    pub vertices: Vec<Permutation>,
    /// `(from, to, type)`.
    pub edges: Vec<(usize, usize, u8)>,
}

impl RauzyGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.vertices.iter().position(|v| v == p)
    }

    pub fn successor(&self, v: usize, eps: u8) -> usize {
        self.edges.iter().find(|e| e.0 == v && e.2 == eps).expect("two arrows per vertex").1
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut q = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(v) = q.pop_front() {
                for &(a, b, _) in &self.edges {
                    let (from, to) = if forward { (a, b) } else { (b, a) };
                    if from == v && !seen[to] {
                        seen[to] = true;
                        q.push_back(to);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        n > 0 && reach(true) && reach(false)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph rauzy {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "  v{i} [label=\"{}\\n{}\"];", v.monodromy_string(), v.rows_string());
        }
        for &(a, b, e) in &self.edges {
            let style = if e == 0 { "solid" } else { "dashed" };
            let _ = writeln!(s, "  v{a} -> v{b} [label=\"{e}\", style={style}];");
        }
        s.push_str("}\n");
        s
    }
}

/// Closure of `perm` under both induction types.
pub fn rauzy_class(perm: &Permutation) -> Result<RauzyGraph> {
    if !perm.is_irreducible() {
        return Err(Error::Reducible);
    }
    let mut seen: BTreeMap<(Vec<usize>, Permutation), ()> = BTreeMap::new();
    let mut q = VecDeque::from([perm.clone()]);
    seen.insert((perm.monodromy(), perm.clone()), ());
    while let Some(p) = q.pop_front() {
        for eps in [0, 1] {
            let r = p.induced(eps);
            let key = (r.monodromy(), r.clone());
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
                e.insert(());
                q.push_back(r);
            }
        }
    }
    let vertices: Vec<Permutation> = seen.into_keys().map(|(_, p)| p).collect();
    let mut edges = Vec::with_capacity(2 * vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        for eps in [0, 1] {
            let r = v.induced(eps);
            let j = vertices.iter().position(|w| *w == r).expect("closed");
            edges.push((i, j, eps));
        }
    }
    Ok(RauzyGraph { vertices, edges })
}

/// A point of the torus stored exactly in turns: coordinate `j` equals
/// `nums[j] * 2^exp` turns, reduced into `[0, 1)`. Integral matrices act
/// exactly, so reduction never loses the fractional part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusPoint {
    nums: Vec<BigInt>,
    /// Non-positive binary exponent shared by all coordinates.
    exp: i32,
}

impl TorusPoint {
    /// From angles in radians. The only rounding is `theta / 2pi`.
    pub fn from_radians(theta: &[f64]) -> Self {
        let turns: Vec<f64> = theta.iter().map(|t| t / std::f64::consts::TAU).collect();
        Self::from_turns(&turns)
    }

    pub fn from_turns(turns: &[f64]) -> Self {
        let parts: Vec<(BigInt, i32)> = turns.iter().map(|&w| dyadic(w)).collect();
        let exp = parts.iter().filter(|(m, _)| !m.is_zero()).map(|(_, e)| *e).min().unwrap_or(0).min(0);
        let nums = parts.into_iter().map(|(m, e)| m << ((e - exp) as usize)).collect();
        let mut p = TorusPoint { nums, exp };
        p.reduce();
        p
    }

    /// Coordinates `nums[j] * 2^exp` turns.
    pub fn from_dyadic(nums: Vec<BigInt>, exp: i32) -> Self {
        let (nums, exp) =
            if exp > 0 { (nums.into_iter().map(|v| v << exp as usize).collect(), 0) } else { (nums, exp) };
        let mut p = TorusPoint { nums, exp };
        p.reduce();
        p
    }

    fn modulus(&self) -> BigInt {
        BigInt::one() << ((-self.exp) as usize)
    }

    fn reduce(&mut self) {
        let m = self.modulus();
        for v in &mut self.nums {
            *v = v.mod_floor(&m);
        }
    }

    /// Apply an integral matrix.
    pub fn apply(&self, b: &IntMatrix) -> TorusPoint {
        let mut p = TorusPoint { nums: b.mul_vec(&self.nums), exp: self.exp };
        p.reduce();
        p
    }

    /// In place: coordinate `dst` += coordinate `src` (one Rauzy factor).
    pub fn add_coord(&mut self, dst: usize, src: usize) {
        let v = self.nums[src].clone();
        self.nums[dst] += v;
        let m = self.modulus();
        if self.nums[dst] >= m {
            self.nums[dst] -= m;
        }
    }

    pub fn to_turns(&self) -> Vec<f64> {
        let m = self.modulus();
        self.nums.iter().map(|v| BigRational::new(v.clone(), m.clone()).to_f64().unwrap_or(0.0)).collect()
    }

    /// Angles in `[0, 2pi)`.
    pub fn to_radians(&self) -> Vec<f64> {
        self.to_turns()
            .into_iter()
            .map(|w| {
                let t = w * std::f64::consts::TAU;
                if t >= std::f64::consts::TAU {
                    0.0
                } else {
                    t
                }
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.nums.iter().all(Zero::is_zero)
    }
}

/// Exact `(mantissa, exponent)` of a finite double.
fn dyadic(x: f64) -> (BigInt, i32) {
    if x == 0.0 || !x.is_finite() {
        return (BigInt::zero(), 0);
    }
    let (mant, exp, sign) = num_traits::float::FloatCore::integer_decode(x);
    (BigInt::from(mant) * BigInt::from(sign), exp as i32)
}

/// `p(B v)` for any lift `v` of `theta`; result in `[0, 2pi)`.
pub fn torus_project(b: &IntMatrix, theta: &[f64]) -> Vec<f64> {
    TorusPoint::from_radians(theta).apply(b).to_radians()
}

/// Torus distance of each coordinate to zero, combined in the Euclidean norm.
pub fn torus_norm(theta: &[f64]) -> f64 {
    theta
        .iter()
        .map(|&t| {
            let r = t.rem_euclid(std::f64::consts::TAU);
            r.min(std::f64::consts::TAU - r)
        })
        .map(|r| r * r)
        .sum::<f64>()
        .sqrt()
}

/// Self-similar lengths for a closed loop in the Rauzy graph: the normalized
/// Perron-Frobenius eigenvector of `B^T` where `B` is the loop's cocycle.
/// Lengths with this property induce the same type word forever.
pub fn periodic_lengths(perm: &Permutation, word: &str) -> Result<(Vec<f64>, f64)> {
    let d = perm.d();
    let mut p = perm.clone();
    let mut b = IntMatrix::identity(d);
    for c in word.chars() {
        let eps = match c {
            '0' => 0,
            '1' => 1,
            _ => return Err(Error::Parse(format!("bad type character {c:?}"))),
        };
        let (w, l) = if eps == 0 { (p.last(0), p.last(1)) } else { (p.last(1), p.last(0)) };
        b.add_row(l, w);
        p = p.induced(eps);
    }
    if p != *perm {
        return Err(Error::Parse(format!("word {word} is not a closed loop at {perm}")));
    }
    let bt = b.transpose().to_f64_rows();
    let mut v = vec![1.0 / d as f64; d];
    let mut rho = 0.0;
    for _ in 0..10_000 {
        let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| bt[i][j] * v[j]).sum()).collect();
        let s: f64 = w.iter().sum();
        let next: Vec<f64> = w.iter().map(|x| x / s).collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        rho = s;
        if delta < 1e-17 {
            break;
        }
    }
    Ok((v, rho))
}

/// `n` levels of a self-similar IET whose lengths come from
/// [`periodic_lengths`] for `word`. One period is induced numerically and
/// must reproduce `word`; deeper levels are that period scaled by
/// `rho^-k`, so the trace does not lose precision with depth.
pub fn periodic_trace(
    lambda: &[f64],
    perm: &Permutation,
    word: &str,
    rho: f64,
    n: usize,
) -> Result<InductionTrace<f64>> {
    let p = word.len();
    if p == 0 {
        return Err(Error::Parse("empty type word".into()));
    }
    let base = rauzy_iterate(lambda, perm, p)?;
    if base.type_word() != word {
        return Err(Error::Inconsistent(format!("lengths induce {} instead of {word}", base.type_word())));
    }
    let mut tr = InductionTrace::start(lambda.to_vec(), perm.clone())?;
    let mut scale = 1.0;
    for j in 0..n {
        let s = base.steps[j % p];
        if (j + 1) % p == 0 {
            scale /= rho;
        }
        let r = (j + 1) % p;
        let lam = base.lambda(r).iter().map(|x| x * scale).collect();
        tr.brn.add_row(s.loser, s.winner);
        tr.states.push((lam, base.perm(r).clone()));
        tr.steps.push(s);
    }
    Ok(tr)
}

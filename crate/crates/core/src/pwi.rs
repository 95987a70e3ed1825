//! Piecewise isometries: the maps `T^(n,m)`, their endpoint-image
//! counterparts, and PWIs adapted to a curve.

use std::fmt::Write as _;

use num_complex::Complex;
use serde_json::{json, Value};

use crate::breaking::BreakingSequence;
use crate::curve::PlCurve;
use crate::error::{Error, Result};
use crate::iet::{endpoints, Iet};
use crate::perm::symbol_name;
use crate::rauzy::InductionTrace;
use crate::scalar::Real;

/// `z -> e^{i angle} (z - a) + b`: rotate about `a`, then move `a` to `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry<T> {
    pub angle: T,
    pub a: Complex<T>,
    pub b: Complex<T>,
}

impl<T: Real> Isometry<T> {
    pub fn new(angle: T, a: Complex<T>, b: Complex<T>) -> Self {
        Isometry { angle, a, b }
    }

    pub fn identity() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Isometry { angle: T::zero(), a: z, b: z }
    }

    pub fn rotation(&self) -> Complex<T> {
        Complex::from_polar(T::one(), self.angle)
    }

    pub fn apply(&self, z: Complex<T>) -> Complex<T> {
        self.rotation() * (z - self.a) + self.b
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Isometry<T>) -> Isometry<T> {
        Isometry { angle: self.angle + inner.angle, a: inner.a, b: self.b + self.rotation() * (inner.b - self.a) }
    }

    pub fn inverse(&self) -> Isometry<T> {
        Isometry { angle: -self.angle, a: self.b, b: self.a }
    }

    /// Translation part in `z -> e^{i angle} z + eta`.
    pub fn eta(&self) -> Complex<T> {
        self.b - self.rotation() * self.a
    }

    /// Largest displacement between the two maps over `probes`.
    pub fn distance_on(&self, other: &Isometry<T>, probes: &[Complex<T>]) -> T {
        probes.iter().fold(T::zero(), |m, &z| m.max((self.apply(z) - other.apply(z)).norm()))
    }
}

/// Images under `gamma^(n)` of the level-`m` endpoint grids, plus the
/// chained points `xi_j` that the `T^(n,m)` hat maps send endpoints to.
#[derive(Clone, Debug)]
pub struct EndpointImages<T> {
    pub n: usize,
    pub m: usize,
    pub gamma0: Vec<Complex<T>>,
    pub gamma1: Vec<Complex<T>>,
    pub xi: Vec<Complex<T>>,
}

fn check_levels<T: Real>(bs: &BreakingSequence<T>, n: usize, m: usize) -> Result<()> {
    if m > n || n > bs.levels() {
        return Err(Error::LevelMismatch(format!("need m <= n <= {}, got n = {n}, m = {m}", bs.levels())));
    }
    Ok(())
}

pub fn endpoint_images<T: Real>(bs: &BreakingSequence<T>, n: usize, m: usize) -> Result<EndpointImages<T>> {
    check_levels(bs, n, m)?;
    let curve = bs.curve(n);
    let perm = bs.trace.perm(m);
    let lambda = bs.trace.lambda(m);
    let gamma0: Vec<_> = endpoints(perm, lambda, 0).into_iter().map(|x| curve.eval(x)).collect();
    let gamma1: Vec<_> = endpoints(perm, lambda, 1).into_iter().map(|x| curve.eval(x)).collect();
    let d = perm.d();
    let mut xi = vec![Complex::new(T::zero(), T::zero()); d + 1];
    xi[d] = gamma0[d];
    for j in (0..d).rev() {
        let s = perm.bot()[j];
        let p = perm.pi0(s);
        let rot = Complex::from_polar(T::one(), bs.theta(m, s));
        xi[j] = rot * (gamma0[p] - gamma0[p + 1]) + xi[j + 1];
    }
    Ok(EndpointImages { n, m, gamma0, gamma1, xi })
}

/// `hat T^(n,m)_a`: rotate by `theta^(m)_a` about the image of the right end
/// of `I^(m)_a` and send it to the matching `xi`.
pub fn hat_maps<T: Real>(bs: &BreakingSequence<T>, n: usize, m: usize) -> Result<Vec<Isometry<T>>> {
    let ei = endpoint_images(bs, n, m)?;
    let perm = bs.trace.perm(m);
    Ok((0..perm.d())
        .map(|s| Isometry::new(bs.theta(m, s), ei.gamma0[perm.pi0(s) + 1], ei.xi[perm.pi1(s) + 1]))
        .collect())
}

/// How far the hat maps are from sending left endpoints onto `xi`.
pub fn hat_continuity_defect<T: Real>(bs: &BreakingSequence<T>, n: usize, m: usize) -> Result<T> {
    let ei = endpoint_images(bs, n, m)?;
    let maps = hat_maps(bs, n, m)?;
    let perm = bs.trace.perm(m);
    Ok((0..perm.d()).fold(T::zero(), |acc, j| {
        let s = perm.bot()[j];
        acc.max((maps[s].apply(ei.gamma0[perm.pi0(s)]) - ei.xi[j]).norm())
    }))
}

/// `T^(n,m)`, obtained from `T^(n,n) = hat T^(n,n)` by undoing the induction
/// steps `n-1, ..., m`.
pub fn inductive_maps<T: Real>(bs: &BreakingSequence<T>, n: usize, m: usize) -> Result<Vec<Isometry<T>>> {
    check_levels(bs, n, m)?;
    let mut t = hat_maps(bs, n, n)?;
    for level in (m..n).rev() {
        let step = bs.trace.steps[level];
        let perm = bs.trace.perm(level);
        let (b0, b1) = (perm.last(0), perm.last(1));
        if step.eps == 0 {
            t[b1] = t[b0].inverse().compose(&t[b1]);
        } else {
            t[b0] = t[b0].compose(&t[b1].inverse());
        }
    }
    Ok(t)
}

/// How points are assigned to atoms.
#[derive(Clone, Debug)]
pub enum Atoms<T> {
    /// Nearest point of the curve; the atom is the IET interval containing
    /// its parameter.
    CurveParameter,
    /// Explicit convex polygons, one per symbol.
    Polygons(Vec<Vec<Complex<T>>>),
}

/// A PWI whose map on the atom of symbol `a` is the rotation by `theta_a`
/// sending `gamma(left end of I_a)` to `gamma(f(left end of I_a))`.
#[derive(Clone, Debug)]
pub struct AdaptedPwi<T> {
    pub theta: Vec<T>,
    pub maps: Vec<Isometry<T>>,
    pub iet: Iet<T>,
    pub curve: PlCurve<T>,
    pub atoms: Atoms<T>,
    /// Classification tolerance for [`Atoms::CurveParameter`].
    pub tol: T,
}

pub fn adapted_pwi<T: Real>(curve: &PlCurve<T>, iet: &Iet<T>, theta: &[T]) -> Result<AdaptedPwi<T>> {
    let len = iet.total();
    if (curve.domain_len() - len).abs() > T::lit(1e-9) * len {
        return Err(Error::DomainMismatch(curve.domain_len().to_f64_lossy(), len.to_f64_lossy()));
    }
    if theta.len() != iet.d() {
        return Err(Error::DimensionMismatch { expected: iet.d(), got: theta.len() });
    }
    let maps =
        (0..iet.d()).map(|a| Isometry::new(theta[a], curve.eval(iet.left(a)), curve.eval(iet.image_left(a)))).collect();
    Ok(AdaptedPwi {
        theta: theta.iter().map(|&t| T::wrap_tau(t)).collect(),
        maps,
        iet: iet.clone(),
        curve: curve.clone(),
        atoms: Atoms::CurveParameter,
        tol: T::lit(1e-9) * len,
    })
}

impl<T: Real> AdaptedPwi<T> {
    /// A PWI with prescribed maps, e.g. `T^(n,0)`, on the curve-parameter atoms.
    pub fn from_maps(curve: &PlCurve<T>, iet: &Iet<T>, maps: Vec<Isometry<T>>) -> Result<Self> {
        if maps.len() != iet.d() {
            return Err(Error::DimensionMismatch { expected: iet.d(), got: maps.len() });
        }
        let len = iet.total();
        if (curve.domain_len() - len).abs() > T::lit(1e-9) * len {
            return Err(Error::DomainMismatch(curve.domain_len().to_f64_lossy(), len.to_f64_lossy()));
        }
        Ok(AdaptedPwi {
            theta: maps.iter().map(|m| T::wrap_tau(m.angle)).collect(),
            maps,
            iet: iet.clone(),
            curve: curve.clone(),
            atoms: Atoms::CurveParameter,
            tol: T::lit(1e-9) * len,
        })
    }
}

fn cross<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    a.re * b.im - a.im * b.re
}

fn is_convex<T: Real>(poly: &[Complex<T>]) -> bool {
    let k = poly.len();
    if k < 3 {
        return false;
    }
    let mut sign = T::zero();
    for i in 0..k {
        let c = cross(poly[(i + 1) % k] - poly[i], poly[(i + 2) % k] - poly[(i + 1) % k]);
        if c != T::zero() {
            if sign != T::zero() && c.signum() != sign {
                return false;
            }
            sign = c.signum();
        }
    }
    sign != T::zero()
}

fn contains<T: Real>(poly: &[Complex<T>], z: Complex<T>, tol: T) -> bool {
    let k = poly.len();
    let orient = (0..k).fold(T::zero(), |s, i| s + cross(poly[i], poly[(i + 1) % k])).signum();
    (0..k).all(|i| {
        let e = poly[(i + 1) % k] - poly[i];
        cross(e, z - poly[i]) * orient >= -tol * e.norm()
    })
}

/// Separating-axis test; polygons that only touch do not overlap.
fn overlap<T: Real>(p: &[Complex<T>], q: &[Complex<T>], tol: T) -> bool {
    for poly in [p, q] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()] - poly[i];
            let axis = Complex::new(-e.im, e.re);
            let proj = |s: &[Complex<T>]| {
                s.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), z| {
                    let v = axis.re * z.re + axis.im * z.im;
                    (lo.min(v), hi.max(v))
                })
            };
            let (a0, a1) = proj(p);
            let (b0, b1) = proj(q);
            let slack = tol * axis.norm();
            if a1 <= b0 + slack || b1 <= a0 + slack {
                return false;
            }
        }
    }
    true
}

impl<T: Real> AdaptedPwi<T> {
    pub fn d(&self) -> usize {
        self.maps.len()
    }

    /// Replace curve-parameter classification by convex polygon atoms,
    /// checking convexity, pairwise disjointness and that atom `a` contains
    /// `gamma(I_a)`.
    pub fn with_polygons(mut self, polys: Vec<Vec<Complex<T>>>) -> Result<Self> {
        if polys.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: polys.len() });
        }
        for (a, p) in polys.iter().enumerate() {
            if !is_convex(p) {
                return Err(Error::Inconsistent(format!("atom {} is not a convex polygon", symbol_name(a))));
            }
        }
        for i in 0..polys.len() {
            for j in i + 1..polys.len() {
                if overlap(&polys[i], &polys[j], self.tol) {
                    return Err(Error::AtomsOverlap(i, j));
                }
            }
        }
        let knots = self.curve.knots();
        for (a, p) in polys.iter().enumerate() {
            let (lo, hi) = (self.iet.left(a), self.iet.left(a) + self.iet.lambda()[a]);
            let mut xs: Vec<T> = knots.iter().copied().filter(|&k| k > lo && k < hi).collect();
            xs.push(lo);
            xs.push(hi);
            xs.sort_by(|u, v| u.partial_cmp(v).expect("finite"));
            let mids: Vec<T> = xs.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)).collect();
            if xs.iter().chain(&mids).any(|&x| !contains(p, self.curve.eval(x), self.tol)) {
                return Err(Error::AtomMissesCurve(a));
            }
        }
        self.atoms = Atoms::Polygons(polys);
        Ok(self)
    }

    /// Nearest curve parameter to `z` and its distance.
    pub fn nearest_parameter(&self, z: Complex<T>) -> (T, T) {
        let (k, p, dirs) = (self.curve.knots(), self.curve.points(), self.curve.dirs());
        let mut best = (T::zero(), T::infinity());
        for i in 0..dirs.len() {
            let h = k[i + 1] - k[i];
            let d = dirs[i];
            let w = z - p[i];
            let n2 = d.norm_sqr();
            let t = if n2 > T::zero() { ((w.re * d.re + w.im * d.im) / n2).max(T::zero()).min(h) } else { T::zero() };
            let dist = (w - d * t).norm();
            if dist < best.1 {
                best = (k[i] + t, dist);
            }
        }
        best
    }

    /// Atom containing `z`.
    pub fn classify(&self, z: Complex<T>) -> Result<usize> {
        match &self.atoms {
            Atoms::Polygons(polys) => polys
                .iter()
                .position(|p| contains(p, z, self.tol))
                .ok_or(Error::UnclassifiablePoint(z.re.to_f64_lossy(), z.im.to_f64_lossy())),
            Atoms::CurveParameter => {
                let (x, dist) = self.nearest_parameter(z);
                if dist > self.tol {
                    return Err(Error::UnclassifiablePoint(z.re.to_f64_lossy(), z.im.to_f64_lossy()));
                }
                self.iet.symbol_at(&x.min(self.iet.total() - T::epsilon() * self.iet.total()))
            }
        }
    }

    pub fn apply(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.maps[self.classify(z)?].apply(z))
    }

    /// `k` steps from `z`.
    pub fn iterate(&self, z: Complex<T>, k: usize) -> Result<Orbit<T>> {
        let mut points = Vec::with_capacity(k + 1);
        let mut atoms = Vec::with_capacity(k);
        let mut z = z;
        points.push(z);
        for _ in 0..k {
            let a = self.classify(z)?;
            z = self.maps[a].apply(z);
            atoms.push(a);
            points.push(z);
        }
        Ok(Orbit { points, atoms })
    }

    pub fn to_json(&self) -> Value {
        let c = |z: Complex<T>| json!([z.re.to_f64_lossy(), z.im.to_f64_lossy()]);
        let maps: Vec<Value> = self
            .maps
            .iter()
            .enumerate()
            .map(|(a, m)| {
                json!({
                    "symbol": symbol_name(a),
                    "angle": self.theta[a].to_f64_lossy(),
                    "pivot": c(m.a),
                    "image": c(m.b),
                    "eta": c(m.eta()),
                })
            })
            .collect();
        let atoms = match &self.atoms {
            Atoms::CurveParameter => json!("curve-parameter"),
            Atoms::Polygons(p) => {
                json!(p.iter().map(|poly| poly.iter().map(|&z| c(z)).collect::<Vec<_>>()).collect::<Vec<_>>())
            }
        };
        json!({
            "d": self.d(),
            "perm": self.iet.perm(),
            "lambda": self.iet.lambda().iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>(),
            "maps": maps,
            "atoms": atoms,
        })
    }
}

/// Points `z_0..z_k` and the atoms visited by `z_0..z_{k-1}`.
#[derive(Clone, Debug)]
pub struct Orbit<T> {
    pub points: Vec<Complex<T>>,
    pub atoms: Vec<usize>,
}

impl<T: Real> Orbit<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,re,im,atom\n");
        for (i, z) in self.points.iter().enumerate() {
            let atom = self.atoms.get(i).map(|&a| symbol_name(a)).unwrap_or_default();
            let _ = writeln!(s, "{i},{},{},{atom}", z.re, z.im);
        }
        s
    }

    pub fn itinerary(&self) -> String {
        self.atoms.iter().map(|&a| symbol_name(a)).collect()
    }
}

/// First-return PWI of `pwi` on `gamma([0, |lambda^(n)|))`: each induced
/// map is the composition of the maps along the return itinerary of its
/// interval, read off at the interval midpoint.
pub fn induced_pwi<T: Real>(
    pwi: &AdaptedPwi<T>,
    trace: &InductionTrace<T>,
    n: usize,
    budget: u64,
) -> Result<AdaptedPwi<T>> {
    if n > trace.len() {
        return Err(Error::LevelMismatch(format!("level {n} beyond trace length {}", trace.len())));
    }
    let f = trace.iet(0);
    if f.lambda() != pwi.iet.lambda() || f.perm() != pwi.iet.perm() {
        return Err(Error::Inconsistent("trace does not start at the PWI's IET".into()));
    }
    let fn_ = trace.iet(n);
    let top = fn_.total();
    let mut maps = Vec::with_capacity(fn_.d());
    let mut spent = 0u64;
    for a in 0..fn_.d() {
        let mut x = fn_.left(a) + fn_.lambda()[a] * T::lit(0.5);
        let mut map = Isometry::identity();
        loop {
            let s = f.symbol_at(&x)?;
            map = pwi.maps[s].compose(&map);
            x = f.apply(&x)?;
            spent += 1;
            if spent > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            if x < top {
                break;
            }
        }
        maps.push(map);
    }
    let curve = pwi.curve.restrict(top)?;
    Ok(AdaptedPwi {
        theta: maps.iter().map(|m| T::wrap_tau(m.angle)).collect(),
        maps,
        tol: pwi.tol,
        iet: fn_,
        curve,
        atoms: Atoms::CurveParameter,
    })
}

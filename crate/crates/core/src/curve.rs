//! Unit-speed piecewise-linear curves `gamma: [0, l) -> C`.

use std::fmt::Write as _;

use num_complex::Complex;
use serde_json::json;

use crate::error::{Error, Result};
use crate::iet::locate;
use crate::scalar::Real;

/// Knots `0 = k_0 < ... < k_K = l`, vertices `gamma(k_i)`, and the direction
/// of each segment. Evaluation uses the stored directions, so a curve built
/// from unit directions is exactly unit speed between its knots.
#[derive(Clone, Debug, PartialEq)]
pub struct PlCurve<T> {
    knots: Vec<T>,
    points: Vec<Complex<T>>,
    dirs: Vec<Complex<T>>,
}

impl<T: Real> PlCurve<T> {
    /// `gamma(x) = x` on `[0, len)`.
    pub fn identity(len: T) -> Self {
        PlCurve {
            knots: vec![T::zero(), len],
            points: vec![Complex::new(T::zero(), T::zero()), Complex::new(len, T::zero())],
            dirs: vec![Complex::new(T::one(), T::zero())],
        }
    }

    /// Validated constructor: knots strictly increasing from 0 and every
    /// chord as long as its parameter interval to `1e-12`.
    pub fn from_vertices(knots: Vec<T>, points: Vec<Complex<T>>) -> Result<Self> {
        let c = Self::from_vertices_unchecked(knots, points)?;
        let (segment, defect) = c.unit_speed_defect();
        if defect > T::lit(1e-12) {
            return Err(Error::NonUnitSpeed { segment, defect: defect.to_f64_lossy() });
        }
        Ok(c)
    }

    /// Like [`Self::from_vertices`] without the unit-speed check; directions
    /// are chord / parameter length.
    pub fn from_vertices_unchecked(knots: Vec<T>, points: Vec<Complex<T>>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != points.len() {
            return Err(Error::DimensionMismatch { expected: knots.len().max(2), got: points.len() });
        }
        if knots[0] != T::zero() || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Inconsistent("knots must increase strictly from 0".into()));
        }
        let dirs = (0..knots.len() - 1).map(|i| (points[i + 1] - points[i]) / (knots[i + 1] - knots[i])).collect();
        Ok(PlCurve { knots, points, dirs })
    }

    /// Raw constructor used by the breaking operator.
    pub(crate) fn from_parts(knots: Vec<T>, points: Vec<Complex<T>>, dirs: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(knots.len(), points.len());
        debug_assert_eq!(knots.len(), dirs.len() + 1);
        PlCurve { knots, points, dirs }
    }

    pub fn domain_len(&self) -> T {
        *self.knots.last().expect("at least two knots")
    }

    /// Knots including the final one at `l`.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn dirs(&self) -> &[Complex<T>] {
        &self.dirs
    }

    pub fn segments(&self) -> usize {
        self.dirs.len()
    }

    /// Index of the segment containing `x`; `x = l` maps to the last one.
    pub fn segment_at(&self, x: T) -> usize {
        locate(&self.knots, &x)
    }

    /// `gamma(x)` for `x` in `[0, l]`; values outside are extrapolated along
    /// the first or last segment.
    pub fn eval(&self, x: T) -> Complex<T> {
        let i = self.segment_at(x);
        self.points[i] + self.dirs[i] * (x - self.knots[i])
    }

    pub fn arc_length(&self) -> T {
        self.points.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]).norm())
    }

    /// Worst `| |chord| - parameter length |` and its segment.
    pub fn unit_speed_defect(&self) -> (usize, T) {
        let mut worst = (0, T::zero());
        for i in 0..self.segments() {
            let dev = ((self.points[i + 1] - self.points[i]).norm() - (self.knots[i + 1] - self.knots[i])).abs();
            let dir_dev = (self.dirs[i].norm() - T::one()).abs();
            let e = dev.max(dir_dev);
            if e > worst.1 {
                worst = (i, e);
            }
        }
        worst
    }

    /// Largest jump between a segment's end and the next stored vertex.
    pub fn continuity_defect(&self) -> T {
        (0..self.segments()).fold(T::zero(), |acc, i| {
            let end = self.points[i] + self.dirs[i] * (self.knots[i + 1] - self.knots[i]);
            acc.max((end - self.points[i + 1]).norm())
        })
    }

    /// Restriction to `[0, len]`, `0 < len <= l`.
    pub fn restrict(&self, len: T) -> Result<Self> {
        if len <= T::zero() || len > self.domain_len() + T::tie_tol(&self.domain_len()) {
            return Err(Error::IntervalOutOfRange { start: 0.0, end: len.to_f64_lossy() });
        }
        let cut = self.knots.partition_point(|&k| k < len);
        let mut knots = self.knots[..cut].to_vec();
        let mut points = self.points[..cut].to_vec();
        knots.push(len);
        points.push(self.eval(len));
        Ok(PlCurve { knots, points, dirs: self.dirs[..cut - 1].to_vec() })
    }

    /// Curve with every vertex multiplied by `k` (not unit speed unless `|k| = 1`).
    pub fn scaled(&self, k: T) -> Self {
        PlCurve {
            knots: self.knots.clone(),
            points: self.points.iter().map(|p| p * k).collect(),
            dirs: self.dirs.iter().map(|p| p * k).collect(),
        }
    }

    /// Curve translated by `c`.
    pub fn translated(&self, c: Complex<T>) -> Self {
        PlCurve {
            knots: self.knots.clone(),
            points: self.points.iter().map(|p| p + c).collect(),
            dirs: self.dirs.clone(),
        }
    }

    /// `min`/`max` corners of the vertex bounding box.
    pub fn bbox(&self) -> (Complex<T>, Complex<T>) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points {
            lo = Complex::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        (lo, hi)
    }

    /// `x, re, im` per knot with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,re,im\n");
        for (k, p) in self.knots.iter().zip(&self.points) {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", k.to_f64_lossy(), p.re.to_f64_lossy(), p.im.to_f64_lossy());
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        json!({
            "domain_len": self.domain_len().to_f64_lossy(),
            "knots": f(&self.knots),
            "re": self.points.iter().map(|p| p.re.to_f64_lossy()).collect::<Vec<_>>(),
            "im": self.points.iter().map(|p| p.im.to_f64_lossy()).collect::<Vec<_>>(),
        })
    }

    pub fn to_svg(&self, opts: &SvgOptions) -> String {
        svg_polylines(&[(self, opts.stroke.as_str())], opts)
    }
}

/// Styling for SVG export. The viewport always fits the bounding box plus a
/// 5% margin.
#[derive(Clone, Debug)]
pub struct SvgOptions {
    pub width: f64,
    pub stroke: String,
    pub stroke_width: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 800.0, stroke: "#1f4e79".into(), stroke_width: 1.5 }
    }
}

/// Several curves in one SVG, each with its own stroke colour.
pub fn svg_polylines<T: Real>(curves: &[(&PlCurve<T>, &str)], opts: &SvgOptions) -> String {
    let f = |t: T| t.to_f64_lossy();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (c, _) in curves {
        let (lo, hi) = c.bbox();
        x0 = x0.min(f(lo.re));
        y0 = y0.min(f(lo.im));
        x1 = x1.max(f(hi.re));
        y1 = y1.max(f(hi.im));
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let m = 0.05 * span;
    let (vx, vy, vw, vh) = (x0 - m, y0 - m, (x1 - x0) + 2.0 * m, (y1 - y0).max(1e-3 * span) + 2.0 * m);
    let height = opts.width * vh / vw;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"{} {} {} {}\">",
        opts.width,
        height,
        vx,
        -(vy + vh),
        vw,
        vh
    );
    let sw = opts.stroke_width * vw / opts.width;
    for (c, stroke) in curves {
        let pts: Vec<String> = c.points().iter().map(|p| format!("{},{}", f(p.re), -f(p.im))).collect();
        let _ = writeln!(
            s,
            "  <polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{sw}\" stroke-linejoin=\"round\" points=\"{}\"/>",
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Sup distance between two curves on the same domain. Both are piecewise
/// linear on the merged knot set, so the maximum is attained at a knot.
pub fn sup_distance<T: Real>(a: &PlCurve<T>, b: &PlCurve<T>) -> Result<T> {
    let (la, lb) = (a.domain_len(), b.domain_len());
    if (la - lb).abs() > T::tie_tol(&la) {
        return Err(Error::DomainMismatch(la.to_f64_lossy(), lb.to_f64_lossy()));
    }
    let (ka, kb) = (a.knots(), b.knots());
    let (mut i, mut j) = (0, 0);
    let mut best = T::zero();
    while i < ka.len() || j < kb.len() {
        let x = match (ka.get(i), kb.get(j)) {
            (Some(&u), Some(&v)) if u <= v => {
                i += 1;
                if u == v {
                    j += 1;
                }
                u
            }
            (Some(_), Some(&v)) => {
                j += 1;
                v
            }
            (Some(&u), None) => {
                i += 1;
                u
            }
            (None, Some(&v)) => {
                j += 1;
                v
            }
            (None, None) => break,
        };
        let x = x.min(la);
        best = best.max((a.eval(x) - b.eval(x)).norm());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_curve() {
        let c = PlCurve::identity(1.0f64);
        assert_eq!(c.eval(0.25), Complex::new(0.25, 0.0));
        assert_eq!(c.arc_length(), 1.0);
        assert_eq!(c.unit_speed_defect().1, 0.0);
    }

    #[test]
    fn sup_distance_examples() {
        let a = PlCurve::identity(1.0f64);
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);
        let b = a.translated(Complex::new(0.0, 0.3));
        assert!((sup_distance(&a, &b).unwrap() - 0.3).abs() < 1e-15);
        let c = PlCurve::identity(2.0f64);
        assert!(matches!(sup_distance(&a, &c), Err(Error::DomainMismatch(..))));
    }

    #[test]
    fn validated_constructor() {
        let k = vec![0.0, 1.0, 2.0];
        let p = vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), Complex::new(1.0, 1.0)];
        let c = PlCurve::from_vertices(k.clone(), p).unwrap();
        assert_eq!(c.eval(1.5), Complex::new(1.0, 0.5));
        let bad = vec![Complex::new(0.0, 0.0), Complex::new(2.0, 0.0), Complex::new(2.0, 1.0)];
        assert!(matches!(PlCurve::from_vertices(k, bad), Err(Error::NonUnitSpeed { segment: 0, .. })));
    }

    #[test]
    fn exports() {
        let c = PlCurve::identity(1.0f64);
        assert_eq!(c.to_csv().lines().count(), 3);
        let svg = c.to_svg(&SvgOptions::default());
        assert!(svg.contains("<polyline") && svg.contains("viewBox"));
        assert_eq!(c.to_json()["knots"][1], 1.0);
    }

    #[test]
    fn generic_over_f32() {
        let c = PlCurve::identity(1.0f32).scaled(2.0);
        assert_eq!(c.eval(0.5), Complex::new(1.0f32, 0.0));
        assert!((c.arc_length() - 2.0).abs() < 1e-6);
    }
}

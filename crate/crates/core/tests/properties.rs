mod common;

use ietpwi::breaking::{breaking_operator, theta_sequence, theta_sequence_float};
use ietpwi::iet::omega_matrix;
use ietpwi::pwi::Isometry;
use ietpwi::rauzy::{rauzy_class, rauzy_iterate, torus_project, visit_counts_bruteforce, zorich_iterate};
use ietpwi::spectral::genus;
use ietpwi::verify::injectivity;
use ietpwi::{Iet, IntMatrix, IntervalSeq, Permutation, PlCurve, TorusPoint};
use num_bigint::BigInt;
use num_complex::Complex;
use proptest::prelude::*;
use rand::Rng;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn big_rows(rows: &[Vec<i8>]) -> IntMatrix {
    IntMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&v| i64::from(v)).collect()).collect::<Vec<_>>())
}

/// A random unit-speed curve on `[0, len)` made by a few breaks of a segment,
/// plus a random admissible `J`.
fn random_break_input(seed: u64) -> (PlCurve<f64>, f64, IntervalSeq<f64>) {
    let mut r = common::rng(seed);
    let len = r.random_range(0.5..2.0);
    let mut g = PlCurve::identity(len);
    for _ in 0..r.random_range(0..4) {
        let (phi, j) = random_j(&mut r, len);
        g = breaking_operator(&g, phi, &j).unwrap().curve;
    }
    let (phi, j) = random_j(&mut r, len);
    (g, phi, j)
}

fn random_j(r: &mut rand_chacha::ChaCha8Rng, len: f64) -> (f64, IntervalSeq<f64>) {
    let k = r.random_range(1..6);
    let width = r.random_range(0.01..1.0) * len / k as f64;
    let slack = len - width * k as f64;
    let mut cuts: Vec<f64> = (0..k).map(|_| r.random_range(0.0..slack)).collect();
    cuts.sort_by(f64::total_cmp);
    let starts = cuts.iter().enumerate().map(|(i, x)| x + i as f64 * width).collect();
    (r.random_range(-std::f64::consts::PI..std::f64::consts::PI), IntervalSeq::new(starts, width))
}

/// Exact orientation for small integer coordinates.
fn orient(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i64 {
    ((b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)).signum()
}

fn within(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn closed_segments_meet(p: (i64, i64), q: (i64, i64), r: (i64, i64), s: (i64, i64)) -> bool {
    let (o1, o2, o3, o4) = (orient(p, q, r), orient(p, q, s), orient(r, s, p), orient(r, s, q));
    (o1 * o2 < 0 && o3 * o4 < 0)
        || (o1 == 0 && within(p, q, r))
        || (o2 == 0 && within(p, q, s))
        || (o3 == 0 && within(r, s, p))
        || (o4 == 0 && within(r, s, q))
}

/// Every pair of segments; neighbours may share only their common vertex.
fn simple_bruteforce(pts: &[(i64, i64)]) -> bool {
    let k = pts.len() - 1;
    for i in 0..k {
        for j in i + 1..k {
            let hit = if j == i + 1 {
                let (a, b, cc) = (pts[i], pts[i + 1], pts[i + 2]);
                orient(a, b, cc) == 0 && (a.0 - b.0) * (cc.0 - b.0) + (a.1 - b.1) * (cc.1 - b.1) > 0
            } else {
                closed_segments_meet(pts[i], pts[i + 1], pts[j], pts[j + 1])
            };
            if hit {
                return false;
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monodromy_roundtrip(seed in any::<u64>(), d in 2usize..8) {
        let mut r = common::rng(seed);
        let mut mono: Vec<usize> = (1..=d).collect();
        for i in (1..d).rev() {
            mono.swap(i, r.random_range(0..=i));
        }
        let p = Permutation::from_monodromy(&mono).unwrap();
        let got: Vec<usize> = p.monodromy().iter().map(|m| m + 1).collect();
        prop_assert_eq!(&got, &mono);
        let inv = p.inverse_monodromy();
        for (i, &m) in p.monodromy().iter().enumerate() {
            prop_assert_eq!(inv[m], i);
        }
        let text = mono.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ");
        prop_assert_eq!(text.parse::<Permutation>().unwrap(), p);
    }

    #[test]
    fn iet_invariants(seed in any::<u64>(), d in 2usize..6) {
        let (p, lam) = common::random_iet(&mut common::rng(seed), d);
        let f = Iet::new(p, lam).unwrap();
        for ends in [f.ends0(), f.ends1()] {
            prop_assert_eq!(ends[0], 0.0);
            prop_assert!(ends.windows(2).all(|w| w[0] < w[1]));
            prop_assert!((ends[d] - f.total()).abs() < 1e-12);
        }
        let om = f.omega();
        for (a, row) in om.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                prop_assert_eq!(v, -om[b][a]);
            }
        }
        prop_assert!(f.weighted_displacement().abs() < 1e-12);
        let mut r = common::rng(seed ^ 1);
        for _ in 0..50 {
            let x = r.random_range(0.0..f.total());
            let y = f.apply(&x).unwrap();
            prop_assert!((f.apply_inverse(&y).unwrap() - x).abs() < 1e-12);
            let a = f.symbol_at(&x).unwrap();
            prop_assert!((y - x - f.upsilon()[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn cocycle_invariants(seed in any::<u64>(), d in 2usize..6) {
        let (p, lam) = common::random_iet(&mut common::rng(seed), d);
        let tr = rauzy_iterate(&lam, &p, 60).unwrap();
        for n in [0, 1, tr.len() / 2, tr.len()] {
            let b = tr.cocycle(n);
            prop_assert!(b.is_nonnegative());
            let det = b.det();
            prop_assert!(det == BigInt::from(1) || det == BigInt::from(-1));
            prop_assert!(tr.length_identity_error(n, &b) < 1e-12 * (n.max(1) as f64));
            // The cocycle carries Omega to Omega.
            let om0 = big_rows(&omega_matrix(tr.perm(0)));
            let omn = big_rows(&omega_matrix(tr.perm(n)));
            prop_assert_eq!(b.mul(&om0).mul(&b.transpose()), omn);
        }
    }

    #[test]
    fn visit_counts_agree(seed in any::<u64>(), d in 2usize..6, n in 0usize..10) {
        let (p, lam) = common::random_iet(&mut common::rng(seed), d);
        let f = Iet::new(p.clone(), lam.clone()).unwrap();
        let tr = rauzy_iterate(&lam, &p, n).unwrap();
        prop_assume!(tr.len() == n);
        prop_assert_eq!(visit_counts_bruteforce(&f, n, 10_000_000).unwrap(), tr.cocycle(n));
    }

    #[test]
    fn zorich_blocks_alternate(seed in any::<u64>(), d in 2usize..6) {
        let (p, lam) = common::random_iet(&mut common::rng(seed), d);
        let z = zorich_iterate(&lam, &p, 12).unwrap();
        prop_assert!(z.blocks.windows(2).all(|w| w[0].eps != w[1].eps && w[1].start == w[0].start + w[0].len));
        prop_assert!(z.blocks.iter().all(|b| b.len >= 1));
        let m = z.blocks.len();
        prop_assert_eq!(z.cocycle(m), z.rauzy.cocycle(z.partial_sum(m)));
    }

    #[test]
    fn genus_constant_on_class(seed in any::<u64>(), d in 2usize..6) {
        let (p, _) = common::random_iet(&mut common::rng(seed), d);
        let g = genus(&p).unwrap();
        let class = rauzy_class(&p).unwrap();
        prop_assert!(class.is_strongly_connected());
        for v in &class.vertices {
            prop_assert_eq!(genus(v).unwrap(), g);
        }
    }

    #[test]
    fn theta_sequence_is_torus_projection(seed in any::<u64>(), d in 2usize..6) {
        let mut r = common::rng(seed);
        let (p, lam) = common::random_iet(&mut r, d);
        let tr = rauzy_iterate(&lam, &p, 30).unwrap();
        let theta: Vec<f64> = (0..d).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        let exact = theta_sequence(&tr, &TorusPoint::from_radians(&theta), 30);
        let float = theta_sequence_float(&tr, &theta, 30);
        for n in [0, 7, tr.len()] {
            let proj = torus_project(&tr.cocycle(n), &theta);
            for a in 0..d {
                let e = exact.entries[n][a];
                for other in [proj[a], float[n][a]] {
                    let diff = (e - other).rem_euclid(std::f64::consts::TAU);
                    prop_assert!(diff.min(std::f64::consts::TAU - diff) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn breaking_operator_stays_unit_speed(seed in any::<u64>()) {
        let (g, phi, j) = random_break_input(seed);
        let len = g.domain_len();
        let out = breaking_operator(&g, phi, &j).unwrap();
        let h = &out.curve;
        prop_assert_eq!(h.domain_len(), len);
        prop_assert!(h.unit_speed_defect().1 <= 1e-12);
        prop_assert!(h.continuity_defect() <= 1e-12);
        prop_assert!((h.arc_length() - len).abs() <= 1e-12 * h.segments() as f64);
        prop_assert!(out.max_offset() <= 2.0 * len * (phi / 2.0).abs().sin() + 1e-12);
        prop_assert!((h.eval(0.0) - g.eval(0.0)).norm() <= 1e-15 || j.starts[0] == 0.0);
    }

    #[test]
    fn zero_angle_changes_nothing(seed in any::<u64>()) {
        let (g, _, j) = random_break_input(seed);
        let h = breaking_operator(&g, 0.0, &j).unwrap().curve;
        for &k in g.knots() {
            prop_assert!((h.eval(k) - g.eval(k)).norm() <= 1e-15);
        }
    }

    #[test]
    fn isometry_algebra(a in -10.0f64..10.0, b in -10.0f64..10.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let s = Isometry::new(a, c(x, y), c(y, -x));
        let t = Isometry::new(b, c(-y, 0.5), c(x * 0.5, y));
        let (z, w) = (c(0.3 * x, -y), c(y, 0.7));
        prop_assert!(((s.apply(z) - s.apply(w)).norm() - (z - w).norm()).abs() < 1e-12);
        prop_assert!((s.compose(&t).apply(z) - s.apply(t.apply(z))).norm() < 1e-12);
        prop_assert!((s.inverse().apply(s.apply(z)) - z).norm() < 1e-12);
    }

    #[test]
    fn injectivity_matches_bruteforce(seed in any::<u64>(), k in 2usize..9) {
        let mut r = common::rng(seed);
        let mut pts = vec![(0i64, 0i64)];
        while pts.len() <= k {
            let p = (r.random_range(-3..4), r.random_range(-3..4));
            if p != *pts.last().unwrap() {
                pts.push(p);
            }
        }
        let mut knots = vec![0.0];
        for w in pts.windows(2) {
            let l = (((w[1].0 - w[0].0).pow(2) + (w[1].1 - w[0].1).pow(2)) as f64).sqrt();
            knots.push(knots.last().unwrap() + l);
        }
        let verts = pts.iter().map(|&(x, y)| c(x as f64, y as f64)).collect();
        let g = PlCurve::from_vertices_unchecked(knots, verts).unwrap();
        prop_assert_eq!(injectivity(&g).0, simple_bruteforce(&pts), "{:?}", pts);
    }
}

//! Reference values for the four-letter self-inducing example, and the
//! genus-one obstruction.

mod common;

use ietpwi::presets::{self, SelfSimilar};
use ietpwi::spectral::{genus, refine_exact, sample_theta, stable_subspace, SampleOptions};
use ietpwi::{Error, Permutation};
use nalgebra::DVector;

#[test]
fn self_inducing_lengths_match_reference() {
    let ss = presets::symmetric4();
    let reference = [0.43, 0.34, 0.12, 0.11];
    for (l, p) in ss.lambda.iter().zip(reference) {
        assert!((l - p).abs() < 0.005, "{:?}", ss.lambda);
    }
    assert!((ss.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(ss.perm, Permutation::symmetric(4));
    assert_eq!(genus(&ss.perm).unwrap(), 2);
}

#[test]
fn reference_rotation_vector_is_near_the_contracting_plane() {
    let (_, frame) = common::symmetric4_frame();
    let q = frame.exact.as_ref().unwrap().to_f64();
    // Lift to (-pi, pi]; the reference angles carry two decimals, so the
    // rounding alone can move the point by 0.005 * sqrt(4) = 0.01.
    let theta: Vec<f64> = [4.85, 0.92, 1.31, 1.28]
        .iter()
        .map(|&t: &f64| if t > std::f64::consts::PI { t - std::f64::consts::TAU } else { t })
        .collect();
    let v = DVector::from_vec(theta);
    let residual = &v - &q * (q.transpose() * &v);
    assert!(residual.norm() <= 0.01, "distance {}", residual.norm());
}

/// A closed loop at the symmetric permutation on `d` letters whose
/// self-similar lengths keep inducing the same word.
fn self_similar(d: usize) -> SelfSimilar {
    let perm = Permutation::symmetric(d);
    for len in 2..12 {
        for bits in 0..(1u32 << len) {
            let word: String = (0..len).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect();
            if !word.contains('0') || !word.contains('1') {
                continue;
            }
            if let Ok(ss) = SelfSimilar::new(perm.clone(), &word) {
                if ss.lambda.iter().all(|&l| l > 1e-3) && ss.trace(3 * len).is_ok() {
                    return ss;
                }
            }
        }
    }
    panic!("no loop found for d = {d}");
}

#[test]
fn genus_one_exhausts_resamples() {
    for d in [2, 3] {
        let ss = self_similar(d);
        assert_eq!(genus(&ss.perm).unwrap(), 1);
        let tr = ss.trace(400).unwrap();
        let mut frame = stable_subspace(&tr, 1).unwrap();
        frame.exact = Some(refine_exact(&tr, 1).unwrap());
        let err = sample_theta(&frame, &tr, 0.5, 1, &SampleOptions::default()).unwrap_err();
        assert_eq!(err, Error::ExhaustedResamples { attempts: 100 });
    }
}

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use ietpwi::breaking::{breaking_sequence, theta_sequence, BreakingSequence, ThetaSeq};
use ietpwi::presets;
use ietpwi::spectral::{refine_exact, sample_theta, stable_subspace, SampleOptions, StableFrame, ThetaSample};
use ietpwi::verify::injectivity;
use ietpwi::{Permutation, Trace64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Levels of induction kept for theta sequences and frames.
pub const TRACE_LEVELS: usize = 1200;

pub struct Admissible {
    pub trace: Trace64,
    pub frame: StableFrame,
    pub sample: ThetaSample,
    pub thetas: ThetaSeq,
}

/// Self-similar four-letter IET with an exactly refined contracting frame.
pub fn symmetric4_frame() -> (Trace64, StableFrame) {
    let ss = presets::symmetric4();
    let trace = ss.trace(TRACE_LEVELS).unwrap();
    let mut frame = stable_subspace(&trace, 2).unwrap();
    frame.exact = Some(refine_exact(&trace, 2).unwrap());
    (trace, frame)
}

pub fn admissible(delta: f64, seed: u64) -> Admissible {
    let (trace, frame) = symmetric4_frame();
    let sample = sample_theta(&frame, &trace, delta, seed, &SampleOptions::default()).unwrap();
    let thetas = theta_sequence(&trace, &sample.point, TRACE_LEVELS);
    Admissible { trace, frame, sample, thetas }
}

/// Start at 0.5 and halve until `gamma^(n)` is injective.
pub fn admissible_injective(n: usize, seed: u64) -> (Admissible, BreakingSequence<f64>) {
    let mut delta = 0.5;
    loop {
        let a = admissible(delta, seed);
        let bs = breaking_sequence(&a.trace, &a.thetas, n).unwrap();
        if injectivity(bs.curve(n)).0 {
            return (a, bs);
        }
        delta /= 2.0;
        assert!(delta > 1e-3, "no injective curve found");
    }
}

/// Random irreducible permutation on `d` letters and random lengths summing
/// to one. Lengths are irrational-looking so that induction does not tie.
pub fn random_iet(rng: &mut ChaCha8Rng, d: usize) -> (Permutation, Vec<f64>) {
    let perm = loop {
        let mut mono: Vec<usize> = (1..=d).collect();
        for i in (1..d).rev() {
            mono.swap(i, rng.random_range(0..=i));
        }
        let p = Permutation::from_monodromy(&mono).unwrap();
        if p.is_irreducible() {
            break p;
        }
    };
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    (perm, raw.into_iter().map(|x| x / s).collect())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rows as monodromy positions `mono[i]` = bottom position of the `i`-th top symbol.
fn normal_form(top: &[usize], bot: &[usize]) -> Vec<usize> {
    top.iter().map(|s| bot.iter().position(|t| t == s).unwrap()).collect()
}

/// Rauzy class size by breadth-first search on the two row moves.
pub fn bfs_class_size(mono: &[usize]) -> usize {
    let d = mono.len();
    let top: Vec<usize> = (0..d).collect();
    let mut bot = vec![0; d];
    for (a, &m) in mono.iter().enumerate() {
        bot[m - 1] = a;
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(top, bot)]);
    while let Some((t, b)) = queue.pop_front() {
        if !seen.insert(normal_form(&t, &b)) {
            continue;
        }
        // Top wins: the last bottom symbol moves right after the top winner.
        let mut b0 = b.clone();
        let loser = b0.pop().unwrap();
        let at = b0.iter().position(|&s| s == t[d - 1]).unwrap();
        b0.insert(at + 1, loser);
        queue.push_back((t.clone(), b0));
        // Bottom wins: symmetric move on the top row.
        let mut t1 = t.clone();
        let loser = t1.pop().unwrap();
        let at = t1.iter().position(|&s| s == b[d - 1]).unwrap();
        t1.insert(at + 1, loser);
        queue.push_back((t1, b));
    }
    seen.len()
}

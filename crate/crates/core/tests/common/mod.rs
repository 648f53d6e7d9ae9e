//! Helpers shared by integration test targets.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigate::Result;

pub fn toy(x: &[f64]) -> Result<f64> {
    // shifted sphere with a ripple, maximised at (0.5, -1, 2)
    let c = [0.5, -1.0, 2.0];
    let d: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 / (1.0 + d) + 0.01 * (3.0 * x[0]).cos())
}

/// Textbook DE/rand/1/bin without forced index, written against the
/// documented stream layout only.
pub fn scripted_de(seed: u64, p: usize, mu: f64, xi: f64, gens: usize) -> Vec<(Vec<f64>, f64)> {
    let (lo, hi) = (-5.0, 5.0);
    let rng_for = |g: u64, slot: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream((g << 24) | slot);
        r
    };
    let mut pop: Vec<(Vec<f64>, f64)> = (0..p)
        .map(|i| {
            let mut r = rng_for(0, i as u64 + 1);
            let x: Vec<f64> = (0..3).map(|_| r.random_range(lo..=hi)).collect();
            let f = toy(&x).unwrap();
            (x, f)
        })
        .collect();
    for g in 1..=gens as u64 {
        let old = pop.clone();
        for i in 0..p {
            let mut r = rng_for(g, i as u64 + 1);
            for _ in 0..4 {
                let _: f64 = r.random();
            }
            let mut idx = Vec::new();
            while idx.len() < 3 {
                let k = r.random_range(0..p);
                if k != i && !idx.contains(&k) {
                    idx.push(k);
                }
            }
            let mut child = old[i].0.clone();
            for j in 0..3 {
                let v = old[idx[0]].0[j] + mu * (old[idx[1]].0[j] - old[idx[2]].0[j]);
                if r.random::<f64>() < xi {
                    child[j] = v;
                }
            }
            for v in &mut child {
                // reflection into [lo, hi]
                let w = hi - lo;
                if *v < lo || *v > hi {
                    let y = (*v - lo).rem_euclid(2.0 * w);
                    *v = if y <= w { lo + y } else { hi - (y - w) };
                }
            }
            let f = toy(&child).unwrap();
            if f > old[i].1 {
                pop[i] = (child, f);
            }
        }
    }
    pop
}

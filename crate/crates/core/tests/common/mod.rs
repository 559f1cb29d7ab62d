#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmaflow::curvature::Domain;

/// Uniform points in the middle 90% of each axis.
pub fn random_points(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            domain
                .intervals()
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.gen_range(0.05..0.95))
                .collect()
        })
        .collect()
}

/// `det(M)` by Gaussian elimination with partial pivoting.
pub fn det(n: usize, m: &[f64]) -> f64 {
    let mut a = m.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
            .unwrap();
        if a[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..n {
                a.swap(p * n + j, c * n + j);
            }
            d = -d;
        }
        d *= a[c * n + c];
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for j in c..n {
                a[r * n + j] -= f * a[c * n + j];
            }
        }
    }
    d
}

/// Roots of `det(λ B - M)` by sign changes on a fine scan plus bisection.
/// Only meant for simple roots.
pub fn generalized_roots(n: usize, m: &[f64], b: &[f64], bound: f64) -> Vec<f64> {
    let p = |lam: f64| {
        det(
            n,
            &b.iter()
                .zip(m)
                .map(|(bi, mi)| lam * bi - mi)
                .collect::<Vec<_>>(),
        )
    };
    let steps = 20000;
    let mut roots = Vec::new();
    let mut prev = (-bound, p(-bound));
    for i in 1..=steps {
        let x = -bound + 2.0 * bound * i as f64 / steps as f64;
        let v = p(x);
        if v == 0.0 {
            roots.push(x);
        } else if v.signum() != prev.1.signum() && prev.1 != 0.0 {
            let (mut lo, mut hi, flo) = (prev.0, x, prev.1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (x, v);
    }
    roots
}

/// σ_k by enumerating subsets.
pub fn sigma_by_subsets(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| values[i])
                .product::<f64>()
        })
        .sum()
}

pub fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|m| a[i * n + m] * b[m * n + j]).sum();
        }
    }
    out
}

/// `Σ_j (-1)^j σ_{k-j} E^j` with explicit powers.
pub fn newton_by_powers(n: usize, e: &[f64], sigma: &[f64], k: usize) -> Vec<f64> {
    let mut power: Vec<f64> = (0..n * n)
        .map(|i| if i / n == i % n { 1.0 } else { 0.0 })
        .collect();
    let mut out = vec![0.0; n * n];
    for j in 0..=k {
        let c = if j % 2 == 0 { 1.0 } else { -1.0 } * sigma[k - j];
        out.iter_mut().zip(&power).for_each(|(o, p)| *o += c * p);
        power = mat_mul(n, &power, e);
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

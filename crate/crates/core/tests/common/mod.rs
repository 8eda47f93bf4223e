#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerogauss::corpus::{self, CorpusEntry};
use zerogauss::{parse_field, ScalarField};

/// Polynomial as `(coefficient, exponents)` terms, with exact partials.
#[derive(Debug, Clone)]
pub struct Poly {
    pub n: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    /// Every monomial of total degree ≤ `degree`, coefficients in [−1, 1].
    pub fn random(n: usize, degree: u32, seed: u64) -> Poly {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        let mut e = vec![0u32; n];
        'outer: loop {
            if e.iter().sum::<u32>() <= degree {
                terms.push((rng.random_range(-1.0..1.0), e.clone()));
            }
            let mut i = 0;
            loop {
                if i == n {
                    break 'outer;
                }
                e[i] += 1;
                if e[i] <= degree {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
        }
        Poly { n, terms }
    }

    pub fn source(&self) -> String {
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut s = format!("({c})");
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        s.push_str(&format!("*x{}^{k}", i + 1));
                    }
                }
                s
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn field(&self) -> ScalarField {
        parse_field(&self.source(), self.n).unwrap()
    }

    /// `∂^d u(x)` where `d[i]` counts derivatives in `x_{i+1}`.
    pub fn partial(&self, d: &[u32], x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut v = *c;
                for i in 0..self.n {
                    if d[i] > e[i] {
                        return 0.0;
                    }
                    for k in 0..d[i] {
                        v *= (e[i] - k) as f64;
                    }
                    v *= x[i].powi((e[i] - d[i]) as i32);
                }
                v
            })
            .sum()
    }

    /// `Σ ∂ᵢ∂ⱼ∂ₖu · aᵢ bⱼ cₖ` (and likewise for four slots).
    pub fn multilinear(&self, x: &[f64], slots: &[&[f64]]) -> f64 {
        let n = self.n;
        let k = slots.len();
        let mut total = 0.0;
        let mut idx = vec![0usize; k];
        loop {
            let mut d = vec![0u32; n];
            let mut weight = 1.0;
            for (s, &i) in idx.iter().enumerate() {
                d[i] += 1;
                weight *= slots[s][i];
            }
            if weight != 0.0 {
                total += weight * self.partial(&d, x);
            }
            let mut s = 0;
            loop {
                if s == k {
                    return total;
                }
                idx[s] += 1;
                if idx[s] < n {
                    break;
                }
                idx[s] = 0;
                s += 1;
            }
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `|a − b| ≤ tol · max(|a|, |b|) + floor`.
pub fn close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) + floor
}

pub fn corpus_entries() -> Vec<CorpusEntry> {
    corpus::corpus()
}

/// A point of the corpus box at least `clearance` away from excluded sets.
pub fn admissible_point(entry: &CorpusEntry, raw: &[f64], clearance: f64) -> Option<Vec<f64>> {
    let x: Vec<f64> = raw.iter().take(entry.field.dim()).cloned().collect();
    (entry.field.admissible(&x).is_ok() && entry.field.excluded_distance(&x) > clearance).then_some(x)
}

pub fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let len = norm(v);
    (len > 1e-3).then(|| v.iter().map(|c| c / len).collect())
}

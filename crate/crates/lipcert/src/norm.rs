//! Operator norms of real matrices.
//!
//! `p = 1` and `p = ∞` are absolute column/row sums, `p = 2` is the largest
//! singular value estimated by power iteration on `AᵀA`, and the Frobenius
//! norm is included because it dominates the spectral norm and serves as its
//! fallback when the iteration fails to settle.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matrix::RealMatrix;

/// Relative tolerance for the power iteration's eigenvalue estimate.
const SPECTRAL_REL_TOL: f64 = 1e-10;
/// Iteration cap for the power iteration.
const SPECTRAL_MAX_ITERS: usize = 10_000;
/// Seed for the iteration's random start vector when the caller has none.
pub const DEFAULT_SPECTRAL_SEED: u64 = 0;

/// The supported operator norms. General `p` has no closed form for induced
/// matrix norms, so the set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Maximum absolute column sum.
    One,
    /// Largest singular value.
    Two,
    /// Maximum absolute row sum.
    Inf,
    /// Square root of the sum of squared entries.
    Fro,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormKind::One => "1",
            NormKind::Two => "2",
            NormKind::Inf => "inf",
            NormKind::Fro => "fro",
        };
        f.write_str(s)
    }
}

impl FromStr for NormKind {
    type Err = UnsupportedNorm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(NormKind::One),
            "2" => Ok(NormKind::Two),
            "inf" => Ok(NormKind::Inf),
            "fro" => Ok(NormKind::Fro),
            other => Err(UnsupportedNorm(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("unsupported norm {0:?}; expected one of 1, 2, inf, fro")]
pub struct UnsupportedNorm(pub String);

#[derive(Debug, Clone, Error)]
pub enum NormError {
    /// The power iteration did not reach its relative tolerance. `fallback`
    /// carries the Frobenius norm, a valid upper bound on the spectral norm.
    #[error("spectral power iteration did not converge; Frobenius fallback {fallback}")]
    SpectralNoConvergence { fallback: f64 },
}

/// Operator norm of `a` with the default spectral seed.
pub fn op_norm(a: &RealMatrix, kind: NormKind) -> Result<f64, NormError> {
    op_norm_seeded(a, kind, DEFAULT_SPECTRAL_SEED)
}

/// Operator norm of `a`; `seed` fixes the power-iteration start vector so
/// `p = 2` results are reproducible.
pub fn op_norm_seeded(a: &RealMatrix, kind: NormKind, seed: u64) -> Result<f64, NormError> {
    match kind {
        NormKind::One => Ok(max_abs_col_sum(a)),
        NormKind::Inf => Ok(max_abs_row_sum(a)),
        NormKind::Fro => Ok(frobenius(a)),
        NormKind::Two => spectral(a, seed),
    }
}

/// Operator norm where spectral non-convergence silently degrades to the
/// Frobenius upper bound. Still sound, just possibly looser.
pub fn op_norm_or_fallback(a: &RealMatrix, kind: NormKind, seed: u64) -> f64 {
    match op_norm_seeded(a, kind, seed) {
        Ok(v) => v,
        Err(NormError::SpectralNoConvergence { fallback }) => fallback,
    }
}

fn max_abs_col_sum(a: &RealMatrix) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a.get(i, j).abs()).sum())
        .fold(0.0, f64::max)
}

fn max_abs_row_sum(a: &RealMatrix) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum())
        .fold(0.0, f64::max)
}

fn frobenius(a: &RealMatrix) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Largest singular value via power iteration on `AᵀA`.
fn spectral(a: &RealMatrix, seed: u64) -> Result<f64, NormError> {
    let fro = frobenius(a);
    if fro == 0.0 {
        return Ok(0.0);
    }

    let n = a.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = random_unit(&mut rng, n);
    let mut lambda = 0.0_f64;

    for _ in 0..SPECTRAL_MAX_ITERS {
        let w = a.mul_vec(&v);
        let u = a.t_mul_vec(&w);
        let norm_u = euclidean(&u);
        if norm_u == 0.0 {
            // Start vector landed in the null space; draw another.
            v = random_unit(&mut rng, n);
            continue;
        }
        let next = dot(&v, &u); // Rayleigh quotient of AᵀA at unit v
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / norm_u;
        }
        if (next - lambda).abs() <= SPECTRAL_REL_TOL * next.max(f64::MIN_POSITIVE) {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    Err(NormError::SpectralNoConvergence { fallback: fro })
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = euclidean(&v);
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example() -> RealMatrix {
        RealMatrix::from_rows(vec![vec![1.0, -2.0], vec![3.0, 4.0]])
    }

    #[test]
    fn one_norm_is_max_column_sum() {
        assert_eq!(op_norm(&example(), NormKind::One).unwrap(), 6.0);
    }

    #[test]
    fn inf_norm_is_max_row_sum() {
        assert_eq!(op_norm(&example(), NormKind::Inf).unwrap(), 7.0);
    }

    #[test]
    fn spectral_norm_matches_closed_form() {
        // AᵀA = [[10, 10], [10, 20]]; eigenvalues 15 ± √125.
        let expected = (15.0 + 125.0_f64.sqrt()).sqrt();
        let got = op_norm(&example(), NormKind::Two).unwrap();
        assert!((got - expected).abs() < 1e-9, "got {got}, want {expected}");
    }

    #[test]
    fn zero_matrix_norms() {
        let z = RealMatrix::zeros(3, 2);
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf, NormKind::Fro] {
            assert_eq!(op_norm(&z, kind).unwrap(), 0.0);
        }
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> RealMatrix {
        RealMatrix::from_rows(
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-scale..scale)).collect())
                .collect(),
        )
    }

    /// If |A_ij| <= B_ij entrywise then ||A||_p <= ||B||_p.
    #[test]
    fn norm_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let rows = rng.gen_range(1..5);
            let cols = rng.gen_range(1..5);
            let a = random_matrix(&mut rng, rows, cols, 3.0);
            let mut b = RealMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    b.set(i, j, a.get(i, j).abs() + rng.gen_range(0.0..1.0));
                }
            }
            for kind in [NormKind::One, NormKind::Two, NormKind::Inf, NormKind::Fro] {
                let na = op_norm(&a, kind).unwrap();
                let nb = op_norm(&b, kind).unwrap();
                assert!(na <= nb + 1e-9, "{kind}: {na} > {nb}");
            }
        }
    }

    #[test]
    fn spectral_below_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let rows = rng.gen_range(1..6);
            let cols = rng.gen_range(1..6);
            let a = random_matrix(&mut rng, rows, cols, 4.0);
            let two = op_norm(&a, NormKind::Two).unwrap();
            let fro = op_norm(&a, NormKind::Fro).unwrap();
            assert!(two <= fro + 1e-9, "{two} > {fro}");
        }
    }

    /// Sampled sup over random unit vectors never exceeds the closed form.
    #[test]
    fn sampled_sup_stays_below_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rows = rng.gen_range(1..5);
            let cols = rng.gen_range(1..5);
            let a = random_matrix(&mut rng, rows, cols, 3.0);
            for kind in [NormKind::One, NormKind::Inf] {
                let norm = op_norm(&a, kind).unwrap();
                let mut sup = 0.0_f64;
                for _ in 0..1000 {
                    let x: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let xn = vec_p_norm(&x, kind);
                    if xn == 0.0 {
                        continue;
                    }
                    let unit: Vec<f64> = x.iter().map(|v| v / xn).collect();
                    sup = sup.max(vec_p_norm(&a.mul_vec(&unit), kind));
                }
                assert!(sup <= norm + 1e-9, "{kind}: sampled {sup} exceeds {norm}");
            }
        }
    }

    fn vec_p_norm(v: &[f64], kind: NormKind) -> f64 {
        match kind {
            NormKind::One => v.iter().map(|x| x.abs()).sum(),
            NormKind::Inf => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
            _ => unreachable!(),
        }
    }

    #[test]
    fn parses_and_displays() {
        for (s, k) in [
            ("1", NormKind::One),
            ("2", NormKind::Two),
            ("inf", NormKind::Inf),
            ("fro", NormKind::Fro),
        ] {
            assert_eq!(s.parse::<NormKind>().unwrap(), k);
            assert_eq!(k.to_string(), s);
        }
        assert!("3".parse::<NormKind>().is_err());
    }
}

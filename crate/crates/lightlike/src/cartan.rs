//! Involutivity test for the exterior system cutting out the hypersurfaces.
//!
//! The hypersurfaces are integral manifolds of a single exterior quadratic
//! equation in the `m = n − 2` screen directions.  Existence follows from
//! the classical involutivity test: compute the characters `s_k` as rank
//! increments of the polar systems of a generic flag, form the weighted sum
//! `Q = Σ k·s_k`, and compare with the parameter count `N` of a general
//! integral element.  The system passes when `N = Q`.
//!
//! The ranks here are computed numerically — generic flags are drawn from a
//! seeded generator and ranks extracted by pivoted elimination — rather than
//! asserted, so the involutivity verdict is a measurement.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result, DEFAULT_SEED};

/// Outcome of the involutivity test in ambient dimension `n`.
#[derive(Debug, Clone, Serialize)]
pub struct CartanReport {
    pub n: usize,
    /// Characters `s₁ … s_m`, rank increments of the generic polar flag.
    pub characters: Vec<usize>,
    /// `Q = Σ k·s_k`.
    pub cartan_number: usize,
    /// Dimension of the space of integral elements (independent symmetric
    /// coefficients of the unknown second-order block).
    pub element_dimension: usize,
    /// `N == Q`.
    pub involutive: bool,
}

/// Pivot below this (on unit-normalized rows) counts as zero.
const RANK_ZERO: f64 = 1e-9;
/// Pivot between the two thresholds is ambiguous and triggers a re-draw.
const RANK_CLEAR: f64 = 1e-6;

/// Rank by Gaussian elimination with full pivoting on unit-normalized rows.
/// Returns `None` when a pivot lands in the ambiguous band — the caller
/// should redraw its random data rather than guess.
pub fn ambiguity_checked_rank(matrix: &DMatrix<f64>) -> Option<usize> {
    let mut work = matrix.clone();
    for mut row in work.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let (rows, cols) = work.shape();
    let mut rank = 0;
    for _ in 0..rows.min(cols) {
        // full pivot over the remaining block
        let mut best = (rank, rank, 0.0f64);
        for i in rank..rows {
            for j in rank..cols {
                let v = work[(i, j)].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, pivot) = best;
        if pivot < RANK_ZERO {
            break;
        }
        if pivot < RANK_CLEAR {
            return None;
        }
        work.swap_rows(rank, pi);
        work.swap_columns(rank, pj);
        let lead = work[(rank, rank)];
        for i in (rank + 1)..rows {
            let factor = work[(i, rank)] / lead;
            for j in rank..cols {
                work[(i, j)] -= factor * work[(rank, j)];
            }
        }
        rank += 1;
    }
    Some(rank)
}

/// Rank increments along the row flag of `rows`: entry `k` is
/// `rank(rows 1..=k+1) − rank(rows 1..=k)`.
fn rank_increments(rows: &DMatrix<f64>) -> Option<Vec<usize>> {
    let mut increments = Vec::with_capacity(rows.nrows());
    let mut previous = 0;
    for k in 1..=rows.nrows() {
        let head = rows.rows(0, k).into_owned();
        let rank = ambiguity_checked_rank(&head)?;
        increments.push(rank - previous);
        previous = rank;
    }
    Some(increments)
}

/// Characters of a general tableau `A ⊆ Hom(Rᵐ, Rᵗ)` spanned by `basis`,
/// evaluated on the given flag of vectors: `s_k` is the rank increment of
/// the evaluation map `λ ↦ (A(λ)v₁, …, A(λ)v_k)`.
pub fn tableau_characters(
    basis: &[DMatrix<f64>],
    flag: &[DVector<f64>],
) -> Result<Vec<usize>> {
    if basis.is_empty() || flag.is_empty() {
        return Err(Error::InvalidArgument(
            "tableau characters need a nonempty basis and flag".to_string(),
        ));
    }
    let t = basis[0].nrows();
    let q = basis.len();
    let mut characters = Vec::with_capacity(flag.len());
    let mut previous = 0;
    for k in 1..=flag.len() {
        // columns: one per basis matrix; rows: stacked images of v₁..v_k
        let mut eval = DMatrix::zeros(t * k, q);
        for (col, a) in basis.iter().enumerate() {
            for (block, v) in flag.iter().take(k).enumerate() {
                let image = a * v;
                for r in 0..t {
                    eval[(block * t + r, col)] = image[r];
                }
            }
        }
        let rank = ambiguity_checked_rank(&eval).ok_or(Error::AmbiguousRank(
            "ambiguous pivot in tableau rank".to_string(),
        ))?;
        characters.push(rank - previous);
        previous = rank;
    }
    Ok(characters)
}

/// Runs the involutivity test with an explicit seed for the generic data.
pub fn characters_seeded(n: usize, seed: u64) -> Result<CartanReport> {
    if n < 4 {
        return Err(Error::Dimension {
            what: "ambient dimension for the involutivity test",
            expected: 4,
            found: n,
        });
    }
    let m = n - 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..5 {
        if let Some(characters) = polar_flag_increments(m, &mut rng) {
            let cartan_number: usize =
                characters.iter().enumerate().map(|(i, s)| (i + 1) * s).sum();
            let element_dimension = m * (m + 1) / 2;
            return Ok(CartanReport {
                n,
                characters,
                cartan_number,
                element_dimension,
                involutive: cartan_number == element_dimension,
            });
        }
    }
    Err(Error::AmbiguousRank(
        "polar ranks stayed ambiguous after five generic draws".to_string(),
    ))
}

/// Involutivity test with the crate's default seed.
pub fn characters(n: usize) -> Result<CartanReport> {
    characters_seeded(n, DEFAULT_SEED)
}

/// Polar rows of a generic integral element against a generic flag.
///
/// An integral element through the origin is the graph of a symmetric
/// matrix `λ`; the polar equation of a flag vector `v` constrains an
/// unknown tangent vector with components `(x, p) ∈ R^{2m}` by
/// `⟨v, p⟩ − ⟨λv, x⟩ = 0`, giving the row `[−(λv)ᵀ | vᵀ]`.
fn polar_flag_increments(m: usize, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let lambda_raw = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let lambda = (&lambda_raw + lambda_raw.transpose()) * 0.5;
    let flag: Vec<DVector<f64>> = (0..m)
        .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let mut rows = DMatrix::zeros(m, 2 * m);
    for (i, v) in flag.iter().enumerate() {
        let image = &lambda * v;
        for a in 0..m {
            rows[(i, a)] = -image[a];
            rows[(i, m + a)] = v[a];
        }
    }
    rank_increments(&rows)
}

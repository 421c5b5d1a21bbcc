//! Small dense tensor types over the screen distribution.
//!
//! The screen is `m`-dimensional with `m = n − 2`, carries a positive-definite
//! metric `g_ab`, and every object the pipeline manipulates is a low-rank
//! tensor over it.  Rank-2 symmetric objects use triangle storage so symmetry
//! holds *by construction*, not by convention; mixed tensors `T^a_b` are plain
//! matrices with the row index as the upper slot, produced by [`raise_index`]
//! (`g^{-1}·t`).  Contractions of the form `T_a^b x_b` therefore read
//! `Mᵀ·x` when `M` is such a matrix — the handful of places that need it
//! say so explicitly.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Mixed tensor `T^a_b` stored as a matrix whose **row** index is the upper
/// slot: `M[(a, b)] = T^a_b`.
pub type Affinor = DMatrix<f64>;

/// Positive-definite screen metric `g_ab` with its cached inverse and
/// Cholesky factor.
///
/// # Example
/// ```
/// use nalgebra::dmatrix;
/// use lightlike::tensor::ScreenMetric;
///
/// let g = ScreenMetric::new(dmatrix![2.0, 0.0; 0.0, 2.0]).unwrap();
/// assert_eq!(g.dim(), 2);
/// assert!((g.inverse()[(0, 0)] - 0.5).abs() < 1e-15);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenMetric {
    mat: DMatrix<f64>,
    inv: DMatrix<f64>,
    chol_l: DMatrix<f64>,
}

impl ScreenMetric {
    /// Validates symmetry and positive definiteness, then caches the inverse
    /// and the Cholesky factor `L` with `g = L·Lᵀ`.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let m = mat.nrows();
        if mat.ncols() != m {
            return Err(Error::Dimension {
                what: "screen metric",
                expected: m,
                found: mat.ncols(),
            });
        }
        let asym = (&mat - mat.transpose()).norm();
        let scale = mat.norm().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric {
                what: "screen metric",
                residual: asym / scale,
            });
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        let chol = nalgebra::linalg::Cholesky::new(sym.clone()).ok_or(
            Error::NotPositiveDefinite {
                what: "screen metric",
            },
        )?;
        let inv = chol.inverse();
        Ok(ScreenMetric {
            mat: sym,
            inv,
            chol_l: chol.l(),
        })
    }

    /// Identity metric of dimension `m`.
    pub fn identity(m: usize) -> Self {
        ScreenMetric {
            mat: DMatrix::identity(m, m),
            inv: DMatrix::identity(m, m),
            chol_l: DMatrix::identity(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Covariant components `g_ab`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Contravariant components `g^ab`.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// Lower-triangular Cholesky factor `L` (so `g = L·Lᵀ`).
    pub fn cholesky_l(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// Metric trace `g^{ab} t_ab` of a symmetric object.
    pub fn trace(&self, t: &SymMatrix) -> f64 {
        (&self.inv * t.to_dense()).trace()
    }
}

/// Symmetric `m×m` object in triangle storage: `t_ab = t_ba` holds exactly
/// because both orderings address the same slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: usize,
    /// Lower triangle, row-major: entry `(a, b)` with `a ≥ b` lives at
    /// `a(a+1)/2 + b`.
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(m: usize) -> Self {
        SymMatrix {
            m,
            data: vec![0.0; m * (m + 1) / 2],
        }
    }

    /// Builds from a closure on index pairs; only the triangle `a ≥ b` is
    /// evaluated.
    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut s = SymMatrix::zeros(m);
        for a in 0..m {
            for b in 0..=a {
                s.data[a * (a + 1) / 2 + b] = f(a, b);
            }
        }
        s
    }

    /// Symmetric part `(t + tᵀ)/2` of a dense matrix.
    pub fn symmetrized(t: &DMatrix<f64>) -> Self {
        SymMatrix::from_fn(t.nrows(), |a, b| 0.5 * (t[(a, b)] + t[(b, a)]))
    }

    /// Diagonal matrix.
    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix::from_fn(d.len(), |a, b| if a == b { d[a] } else { 0.0 })
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        hi * (hi + 1) / 2 + lo
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[self.idx(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let i = self.idx(a, b);
        self.data[i] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |a, b| self.get(a, b))
    }

    pub fn norm(&self) -> f64 {
        self.to_dense().norm()
    }

    /// Entrywise linear combination `self + c·other`.
    pub fn axpy(&self, c: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix::from_fn(self.m, |a, b| self.get(a, b) + c * other.get(a, b))
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix::from_fn(self.m, |a, b| c * self.get(a, b))
    }
}

/// Fully symmetric rank-3 object `t_abc` in canonical storage: every
/// permutation of `(a, b, c)` addresses the same slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCubic {
    m: usize,
    /// Sorted triples `i ≥ j ≥ k` at tetrahedral index
    /// `i(i+1)(i+2)/6 + j(j+1)/2 + k`.
    data: Vec<f64>,
}

impl SymCubic {
    pub fn zeros(m: usize) -> Self {
        SymCubic {
            m,
            data: vec![0.0; m * (m + 1) * (m + 2) / 6],
        }
    }

    /// Builds from a closure, evaluated once per canonical triple `a ≥ b ≥ c`.
    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut s = SymCubic::zeros(m);
        for a in 0..m {
            for b in 0..=a {
                for c in 0..=b {
                    let i = a * (a + 1) * (a + 2) / 6 + b * (b + 1) / 2 + c;
                    s.data[i] = f(a, b, c);
                }
            }
        }
        s
    }

    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        let mut t = [a, b, c];
        t.sort_unstable();
        let [k, j, i] = t;
        i * (i + 1) * (i + 2) / 6 + j * (j + 1) / 2 + k
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[self.idx(a, b, c)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let i = self.idx(a, b, c);
        self.data[i] = v;
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.m {
            for b in 0..self.m {
                for c in 0..self.m {
                    s += self.get(a, b, c).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// General rank-3 array `t[(a, b, c)]`, row-major, no symmetry imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct Array3 {
    m: usize,
    data: Vec<f64>,
}

impl Array3 {
    pub fn zeros(m: usize) -> Self {
        Array3 {
            m,
            data: vec![0.0; m * m * m],
        }
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Array3::zeros(m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    t.data[(a * m + b) * m + c] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.m + b) * self.m + c]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.m + b) * self.m + c] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// General rank-4 array `t[(a, b, c, e)]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Array4 {
    m: usize,
    data: Vec<f64>,
}

impl Array4 {
    pub fn zeros(m: usize) -> Self {
        Array4 {
            m,
            data: vec![0.0; m * m * m * m],
        }
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Array4::zeros(m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for e in 0..m {
                        t.data[((a * m + b) * m + c) * m + e] = f(a, b, c, e);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize, c: usize, e: usize) -> f64 {
        self.data[((a * self.m + b) * self.m + c) * self.m + e]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, e: usize, v: f64) {
        self.data[((a * self.m + b) * self.m + c) * self.m + e] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Raises the first index: returns the mixed tensor `t^a_b = g^{ac} t_cb` as
/// a matrix with the row index upper, i.e. literally `g^{-1}·t`.
pub fn raise_index(g: &ScreenMetric, t: &SymMatrix) -> Affinor {
    g.inverse() * t.to_dense()
}

/// Lowers the row index of a mixed tensor: `t_ab = g_ac T^c_b`, i.e. `g·T`.
/// Round-trips with [`raise_index`] up to rounding.
pub fn lower_index(g: &ScreenMetric, t: &Affinor) -> DMatrix<f64> {
    g.matrix() * t
}

/// Skew part `(t − tᵀ)/2`.
pub fn alternate(t: &DMatrix<f64>) -> DMatrix<f64> {
    (t - t.transpose()) * 0.5
}

/// Symmetric part `(t + tᵀ)/2` as a dense matrix.
pub fn symmetrize(t: &DMatrix<f64>) -> DMatrix<f64> {
    (t + t.transpose()) * 0.5
}

/// `|det t|` divided by the Hadamard row bound `∏_a ‖row_a‖`, so the result
/// lies in `[0, 1]` and "singular" can be decided scale-free.
pub fn relative_determinant(t: &DMatrix<f64>) -> f64 {
    let det = t.clone().lu().determinant().abs();
    if det == 0.0 {
        return 0.0;
    }
    let mut bound = 1.0;
    for a in 0..t.nrows() {
        bound *= t.row(a).norm();
    }
    if bound == 0.0 {
        0.0
    } else {
        det / bound
    }
}

/// Eigenpairs of the metric pencil `det(t_ab − s·g_ab) = 0`.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Eigenvalues in ascending order; multiple roots appear adjacently.
    pub values: Vec<f64>,
    /// Matching eigenvectors, `g`-orthonormal (`vᵀ g v = 1`), sign fixed so
    /// the entry of largest magnitude is positive.
    pub vectors: Vec<DVector<f64>>,
    /// Worst relative back-substitution residual
    /// `‖(g^{-1}t − sI)v‖ / ‖t‖` over the returned pairs.
    pub residual: f64,
}

/// Solves the symmetric-definite pencil `t·v = s·g·v` by Cholesky reduction:
/// with `g = LLᵀ`, the symmetric matrix `B = L^{-1} t L^{-ᵀ}` has the same
/// eigenvalues and eigenvectors `v = L^{-ᵀ}u`.  All eigenvalues are real.
///
/// # Example
/// ```
/// use nalgebra::dmatrix;
/// use lightlike::tensor::{pencil_eigen, ScreenMetric, SymMatrix};
///
/// let g = ScreenMetric::new(dmatrix![1.0, 0.0; 0.0, 2.0]).unwrap();
/// let t = SymMatrix::from_diagonal(&[3.0, 8.0]);
/// let e = pencil_eigen(&g, &t).unwrap();
/// assert!((e.values[0] - 3.0).abs() < 1e-12);
/// assert!((e.values[1] - 4.0).abs() < 1e-12);
/// ```
pub fn pencil_eigen(g: &ScreenMetric, t: &SymMatrix) -> Result<Eigenpairs> {
    let m = g.dim();
    if t.dim() != m {
        return Err(Error::Dimension {
            what: "pencil",
            expected: m,
            found: t.dim(),
        });
    }
    let l = g.cholesky_l();
    let dense = t.to_dense();
    // B = L^{-1} t L^{-ᵀ}, formed by two triangular solves.
    let x = l
        .solve_lower_triangular(&dense)
        .ok_or(Error::Singular { what: "cholesky factor" })?;
    let y = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::Singular { what: "cholesky factor" })?;
    let b = symmetrize(&y.transpose());
    let eig = nalgebra::linalg::SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let lt = l.transpose();
    let mixed = g.inverse() * &dense;
    let scale = dense.norm().max(1.0);
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut residual: f64 = 0.0;
    for &i in &order {
        let s = eig.eigenvalues[i];
        let u = eig.eigenvectors.column(i).into_owned();
        let mut v = lt
            .solve_upper_triangular(&u)
            .ok_or(Error::Singular { what: "cholesky factor" })?;
        // Deterministic sign: make the largest-magnitude entry positive.
        let mut lead = 0;
        for k in 1..m {
            if v[k].abs() > v[lead].abs() {
                lead = k;
            }
        }
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        residual = residual.max((&mixed * &v - &v * s).norm() / scale);
        values.push(s);
        vectors.push(v);
    }
    Ok(Eigenpairs {
        values,
        vectors,
        residual,
    })
}

/// Groups an ascending eigenvalue list into clusters whose internal gaps are
/// below `rel_tol` times the spectral radius; returns `(representative,
/// multiplicity)` pairs, the representative being the cluster mean.
pub fn cluster_eigenvalues(values: &[f64], rel_tol: f64) -> Vec<(f64, usize)> {
    if values.is_empty() {
        return Vec::new();
    }
    // Floor the scale at 1 so eigenvalues that are all numerically zero
    // merge into a single cluster instead of splitting on rounding noise.
    let radius = values.iter().fold(0.0f64, |r, v| r.max(v.abs())).max(1.0);
    let gap = rel_tol * radius;
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            let chunk = &values[start..i];
            let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
            out.push((mean, chunk.len()));
            start = i;
        }
    }
    out
}

/// Converts nested rows to a dense matrix, insisting on a rectangular shape.
pub fn matrix_from_rows(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    for row in rows {
        if row.len() != c {
            return Err(Error::Dimension {
                what,
                expected: c,
                found: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn screen_metric_rejects_indefinite_and_asymmetric() {
        assert!(matches!(
            ScreenMetric::new(dmatrix![1.0, 0.0; 0.0, -1.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            ScreenMetric::new(dmatrix![1.0, 0.5; 0.2, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn screen_metric_inverse_consistency() {
        let g = ScreenMetric::new(dmatrix![2.0, 1.0; 1.0, 3.0]).unwrap();
        let id = g.matrix() * g.inverse();
        assert_abs_diff_eq!(id, DMatrix::identity(2, 2), epsilon = 1e-12);
        let l = g.cholesky_l();
        assert_abs_diff_eq!(l * l.transpose(), g.matrix().clone(), epsilon = 1e-12);
    }

    #[test]
    fn sym_storage_is_exact() {
        let mut s = SymMatrix::zeros(3);
        s.set(0, 2, 1.25);
        // identical bits, not just equal values: both orderings hit one slot
        assert_eq!(s.get(2, 0).to_bits(), 1.25f64.to_bits());
        let d = s.to_dense();
        assert_eq!(d[(0, 2)], d[(2, 0)]);
    }

    #[test]
    fn sym_cubic_permutation_invariant() {
        let mut c = SymCubic::zeros(3);
        c.set(2, 0, 1, -0.5);
        for perm in [(2, 0, 1), (2, 1, 0), (0, 2, 1), (0, 1, 2), (1, 0, 2), (1, 2, 0)] {
            assert_eq!(c.get(perm.0, perm.1, perm.2), -0.5);
        }
        assert_eq!(c.get(0, 0, 0), 0.0);
    }

    #[test]
    fn raise_index_matches_hand_values() {
        // frozen: g = diag(2,2), t = diag(2,4)  =>  t^a_b = diag(1,2)
        let g = ScreenMetric::new(dmatrix![2.0, 0.0; 0.0, 2.0]).unwrap();
        let t = SymMatrix::from_diagonal(&[2.0, 4.0]);
        let a = raise_index(&g, &t);
        assert_abs_diff_eq!(a, dmatrix![1.0, 0.0; 0.0, 2.0], epsilon = 1e-15);
    }

    #[test]
    fn raise_index_nondiagonal_oracle() {
        // independent oracle: explicit sum t^a_b = Σ_c ginv[a][c] t[c][b]
        let g = ScreenMetric::new(dmatrix![2.0, 1.0; 1.0, 3.0]).unwrap();
        let t = SymMatrix::from_fn(2, |a, b| (a + b) as f64 + 1.0);
        let fast = raise_index(&g, &t);
        let ginv = g.inverse();
        for a in 0..2 {
            for b in 0..2 {
                let oracle: f64 = (0..2).map(|c| ginv[(a, c)] * t.get(c, b)).sum();
                assert_abs_diff_eq!(fast[(a, b)], oracle, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn raise_then_lower_round_trips() {
        let g = ScreenMetric::new(dmatrix![2.0, 0.5; 0.5, 1.5]).unwrap();
        let t = SymMatrix::from_fn(2, |a, b| (a as f64 - b as f64).cos());
        let back = lower_index(&g, &raise_index(&g, &t));
        assert_abs_diff_eq!(back, t.to_dense(), epsilon = 1e-13);
    }

    #[test]
    fn alternate_hand_arithmetic() {
        // frozen: (t − tᵀ)/2 of [[0,1],[3,0]] is [[0,−1],[1,0]]
        let t = dmatrix![0.0, 1.0; 3.0, 0.0];
        let skew = alternate(&t);
        assert_abs_diff_eq!(skew, dmatrix![0.0, -1.0; 1.0, 0.0], epsilon = 1e-15);
        // decomposition: symmetric + skew parts recover t
        assert_abs_diff_eq!(symmetrize(&t) + skew, t, epsilon = 1e-15);
    }

    #[test]
    fn pencil_diagonal_read_off() {
        // frozen: g = diag(1,2), t = diag(3,8) => s ∈ {3, 4}, ascending
        let g = ScreenMetric::new(dmatrix![1.0, 0.0; 0.0, 2.0]).unwrap();
        let t = SymMatrix::from_diagonal(&[3.0, 8.0]);
        let e = pencil_eigen(&g, &t).unwrap();
        assert_abs_diff_eq!(e.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 4.0, epsilon = 1e-12);
        assert!(e.residual < 1e-10);
        // g-normalization: vᵀ g v = 1
        for v in &e.vectors {
            assert_abs_diff_eq!((v.transpose() * g.matrix() * v)[(0, 0)], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pencil_repeated_root_clusters() {
        let g = ScreenMetric::identity(3);
        let t = SymMatrix::from_diagonal(&[2.0, 2.0 + 1e-12, 5.0]);
        let e = pencil_eigen(&g, &t).unwrap();
        let clusters = cluster_eigenvalues(&e.values, 1e-8);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].1, 2);
        assert_eq!(clusters[1].1, 1);
        assert_abs_diff_eq!(clusters[0].0, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn pencil_eigenvector_sign_is_deterministic() {
        let g = ScreenMetric::new(dmatrix![1.3, 0.2, 0.0; 0.2, 1.1, -0.3; 0.0, -0.3, 0.9]).unwrap();
        let t = SymMatrix::from_fn(3, |a, b| ((a * 3 + b + 1) as f64).sin());
        let e1 = pencil_eigen(&g, &t).unwrap();
        let e2 = pencil_eigen(&g, &t).unwrap();
        for (v1, v2) in e1.vectors.iter().zip(&e2.vectors) {
            assert_eq!(v1, v2);
            let lead = (0..3).max_by(|&i, &j| v1[i].abs().total_cmp(&v1[j].abs())).unwrap();
            assert!(v1[lead] > 0.0);
        }
    }

    #[test]
    fn relative_determinant_ranges() {
        assert_abs_diff_eq!(relative_determinant(&DMatrix::identity(3, 3)), 1.0, epsilon = 1e-15);
        let singular = dmatrix![1.0, 2.0; 2.0, 4.0];
        assert!(relative_determinant(&singular) < 1e-14);
        assert_eq!(relative_determinant(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn rows_must_be_rectangular() {
        let bad = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matrix_from_rows(&bad, "test").is_err());
        let ok = matrix_from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], "test").unwrap();
        assert_eq!(ok[(1, 0)], 3.0);
    }
}

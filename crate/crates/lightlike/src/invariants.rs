//! Pointwise invariants of the normalization pipeline.
//!
//! Everything here is algebra on a single [`HypersurfaceJet`]: the singular
//! points (foci) of the ruling through the point, the harmonic pole balancing
//! them, the trace-free fundamental tensor `h_ab`, the quadratic and cubic
//! invariants `μ`, `μ_a`, the central affinor
//! `H_a^b = h_a^c h_c^b + (ν/2μ) h_a^b − μ δ_a^b`, the derived covectors
//! `M, N, P, Q` that pin down the screen frame, and — once the normalizing
//! forms are known — the invariant transversal point and the foci of its
//! congruence.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::jet::HypersurfaceJet;
use crate::tensor::{
    alternate, cluster_eigenvalues, pencil_eigen, raise_index, relative_determinant, Affinor,
    ScreenMetric, SymMatrix,
};
use crate::{Error, Result, Tolerances};

/// Singular points of the isotropic ruling through the analysed point.
#[derive(Debug, Clone)]
pub struct FociReport {
    /// Focus coordinates `s_a` on the ruling, ascending; real because they
    /// are eigenvalues of a symmetric-definite pencil.
    pub s: Vec<f64>,
    /// Foci grouped by multiplicity: `(representative, count)`.
    pub clusters: Vec<(f64, usize)>,
    /// Screen directions attached to the foci (pencil eigenvectors).
    pub directions: Vec<DVector<f64>>,
    /// Mean of the foci — the coordinate of the harmonic pole.
    pub lambda_mean: f64,
    /// Worst pencil back-substitution residual.
    pub residual: f64,
}

/// Foci `s_a` as the roots of `det(λ_ab − s·g_ab) = 0`, via the
/// symmetric-definite pencil solver, plus their multiplicity clustering and
/// mean.  The mean equals `g^{ab}λ_ab / m`, so the harmonic pole is the
/// arithmetic center of the singular points.
pub fn singular_points(jet: &HypersurfaceJet, tols: &Tolerances) -> Result<FociReport> {
    let eig = pencil_eigen(&jet.g, &jet.lambda)?;
    let clusters = cluster_eigenvalues(&eig.values, tols.cluster_rel);
    let lambda_mean = eig.values.iter().sum::<f64>() / eig.values.len() as f64;
    Ok(FociReport {
        s: eig.values,
        clusters,
        directions: eig.vectors,
        lambda_mean,
        residual: eig.residual,
    })
}

/// Trace-free fundamental tensor `h_ab = λ_ab − λ̄ g_ab` and its mixed form
/// `h^a_b = g^{ac} h_cb`.  The covariant part is apolar to the metric
/// (`g^{ab} h_ab = 0`) and the mixed part trace-free by the same identity.
pub fn fundamental_tensor(jet: &HypersurfaceJet) -> (SymMatrix, Affinor) {
    let mean = jet.lambda_mean();
    let g = jet.g.matrix();
    let h = SymMatrix::from_fn(jet.m(), |a, b| jet.lambda.get(a, b) - mean * g[(a, b)]);
    let mixed = raise_index(&jet.g, &h);
    (h, mixed)
}

/// Regularity of the harmonic pole.
#[derive(Debug, Clone)]
pub struct PoleRegularity {
    pub det: f64,
    /// `|det h^a_b|` scaled by the Hadamard bound, in `[0, 1]`.
    pub relative_det: f64,
    pub regular: bool,
}

/// The harmonic pole is the unique fixed point of the second-order frame
/// subgroup exactly when `det(h^a_b) ≠ 0`; this evaluates that determinant
/// with a scale-free threshold.
pub fn pole_regularity(jet: &HypersurfaceJet, tols: &Tolerances) -> PoleRegularity {
    let (h_cov, mixed) = fundamental_tensor(jet);
    let det = mixed.clone().lu().determinant();
    // A trace-free part that vanishes at working precision leaves the pole
    // undetermined; without this gate the Hadamard-scaled determinant of the
    // rounding noise can masquerade as well-conditioned.
    let scale = jet.lambda.norm().max(jet.g.matrix().norm()).max(1.0);
    let degenerate = h_cov.norm() <= tols.umbilical * scale;
    let relative_det = if degenerate {
        0.0
    } else {
        relative_determinant(&mixed)
    };
    PoleRegularity {
        det,
        relative_det,
        regular: relative_det > tols.det_rel,
    }
}

/// Quadratic invariant `μ = g^{ab} λ_ae g^{ec} λ_cb / m` and cubic covector
/// `μ_c = −g^{ab} λ_abc / m`.  On a harmonically normalized jet `λ = h` and
/// `μ = h^b_a h^a_b / m ≥ 0`, vanishing only at umbilical points.
pub fn mu_invariants(jet: &HypersurfaceJet) -> (f64, DVector<f64>) {
    let m = jet.m();
    let mixed = raise_index(&jet.g, &jet.lambda);
    let mu = (&mixed * &mixed).trace() / m as f64;
    let ginv = jet.g.inverse();
    let mu_a = DVector::from_fn(m, |c, _| {
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                s += ginv[(a, b)] * jet.lambda3.get(a, b, c);
            }
        }
        -s / m as f64
    });
    (mu, mu_a)
}

/// The central affinor `H` and, when it is invertible, its inverse.
#[derive(Debug, Clone)]
pub struct HAffinor {
    /// `H^a_b` with the row index upper.
    pub mixed: Affinor,
    /// `H̃^a_b` (matrix inverse, same index convention); `None` when `H` is
    /// singular — the special-type case where `μ` and `ν` are algebraically
    /// related.
    pub inverse: Option<Affinor>,
    pub relative_det: f64,
}

/// Builds `H_a^b = h_a^c h_c^b + (ν/2μ) h_a^b − μ δ_a^b` on a harmonically
/// normalized jet.  `H` is trace-free (because `tr h² = mμ` and `tr h = 0`),
/// commutes with `h`, and is diagonal in any basis diagonalizing the pencil
/// `(g, h)`.
///
/// Errors with the umbilical verdict when `μ ≤ 0`, since `μ` is a sum of
/// squares of the `h`-eigenvalues and can only vanish when `h` does.
pub fn h_affinor(jet: &HypersurfaceJet, mu: f64, tols: &Tolerances) -> Result<HAffinor> {
    if !jet.harmonic_normalized {
        return Err(Error::InvalidArgument(
            "H affinor requires a harmonically normalized jet".to_string(),
        ));
    }
    if mu <= 0.0 {
        return Err(Error::Umbilical);
    }
    let m = jet.m();
    let hm = raise_index(&jet.g, &jet.lambda); // h^a_b, row upper
    let mixed = &hm * &hm + &hm * (jet.nu / (2.0 * mu)) - DMatrix::identity(m, m) * mu;
    let relative_det = relative_determinant(&mixed);
    let inverse = if relative_det > tols.det_rel {
        mixed.clone().try_inverse()
    } else {
        None
    };
    Ok(HAffinor {
        mixed,
        inverse,
        relative_det,
    })
}

/// The four covectors that normalize the screen frame.
#[derive(Debug, Clone)]
pub struct NormalizingObjects {
    /// `M_a = h_a^b μ_b + (ν/2μ) μ_a − ν_a/2`.
    pub m_a: DVector<f64>,
    /// `N_a = h_a^b ν_b / 2 − μ μ_a`.
    pub n_a: DVector<f64>,
    /// `P_a = H̃_a^b M_b` — the shift of the screen frame along the ruling
    /// base point.
    pub p_a: DVector<f64>,
    /// `Q_a = H̃_a^b N_b / μ` — the shift along the harmonic pole.
    pub q_a: DVector<f64>,
}

/// Builds `M, N` and solves them through `H̃` into the frame shifts `P, Q`.
/// Requires an invertible `H`; a singular `H` is the special-type verdict.
pub fn normalizing_objects(
    jet: &HypersurfaceJet,
    mu: f64,
    mu_a: &DVector<f64>,
    h: &HAffinor,
) -> Result<NormalizingObjects> {
    let h_inv = h.inverse.as_ref().ok_or(Error::SpecialType)?;
    let (h_cov, _) = fundamental_tensor(jet);
    // h_a^b as a row-lower matrix is h·g^{-1}; contractions T_a^b x_b below
    // are then plain matrix·vector products.
    let hl = h_cov.to_dense() * jet.g.inverse();
    let m_a = &hl * mu_a + mu_a * (jet.nu / (2.0 * mu)) - &jet.nu_a * 0.5;
    let n_a = &hl * &jet.nu_a * 0.5 - mu_a * mu;
    // H̃_a^b x_b: the row-lower matrix of H̃ is the transpose of its
    // row-upper one.
    let p_a = h_inv.transpose() * &m_a;
    let q_a = h_inv.transpose() * &n_a / mu;
    Ok(NormalizingObjects { m_a, n_a, p_a, q_a })
}

/// Coefficients of the invariant screen frame
/// `C_a = A_a + P_a·A₀ + Q_a·A₁`: the unique screen vectors along which the
/// third- and fourth-order covectors `μ_a`, `ν_a` are absorbed.
#[derive(Debug, Clone)]
pub struct ScreenFrame {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

/// Packages the frame shifts; on a fully reduced jet (`μ_a = ν_a = 0`) both
/// vanish and `C_a = A_a`.
pub fn screen_frame(objects: &NormalizingObjects) -> ScreenFrame {
    ScreenFrame {
        p: objects.p_a.clone(),
        q: objects.q_a.clone(),
    }
}

/// The invariant point on the transversal and the foci of its congruence.
#[derive(Debug, Clone)]
pub struct InvariantPoint {
    /// `τ = g^{ab} τ_ab / m`.
    pub tau: f64,
    /// Coefficient of the base point in `C_n = A_n − τ·A₀`.
    pub cn_coefficient: f64,
    /// Congruence foci `z_a = −eigenvalues(τ^a_b)`, sorted by real part then
    /// imaginary part.  Real when `τ_ab` is symmetric.
    pub congruence_foci: Vec<Complex<f64>>,
    /// Whether the symmetric (real-spectrum) branch was taken.
    pub symmetric_branch: bool,
}

/// Builds the invariant point data from the normalizing form coefficients
/// `τ_ab`.  The foci satisfy `Σ z_a = −m·τ` (the trace identity); when
/// `τ_ab` is symmetric the spectrum is computed through the definite pencil
/// and is exactly real.
pub fn invariant_point(g: &ScreenMetric, tau_ab: &DMatrix<f64>, tols: &Tolerances) -> Result<InvariantPoint> {
    let m = g.dim();
    if tau_ab.nrows() != m || tau_ab.ncols() != m {
        return Err(Error::Dimension {
            what: "tau_ab",
            expected: m,
            found: tau_ab.nrows(),
        });
    }
    let tau = (g.inverse() * tau_ab).trace() / m as f64;
    let skew = alternate(tau_ab).norm();
    let symmetric_branch = skew <= tols.symmetry * tau_ab.norm().max(1.0);
    let mut foci: Vec<Complex<f64>> = if symmetric_branch {
        let sym = SymMatrix::symmetrized(tau_ab);
        pencil_eigen(g, &sym)?
            .values
            .into_iter()
            .map(|v| Complex::new(-v, 0.0))
            .collect()
    } else {
        let mixed = g.inverse() * tau_ab; // τ^a_b = g^{ac} τ_cb
        mixed
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex::new(-z.re, -z.im))
            .collect()
    };
    foci.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(InvariantPoint {
        tau,
        cn_coefficient: -tau,
        congruence_foci: foci,
        symmetric_branch,
    })
}

/// The covector that survives at umbilical points, where `h = 0` kills the
/// generic construction: `μ_a = (2/(n−3))·C^b_{1ba}`, rewritten through the
/// stored slice as `−(2/(n−3))·Σ_b C^b_{a1b}` using the pair symmetries of
/// the ambient curvature and the block-diagonal adapted metric.
pub fn umbilical_covector(jet: &HypersurfaceJet) -> DVector<f64> {
    let m = jet.m();
    let factor = -2.0 / (jet.n as f64 - 3.0);
    DVector::from_fn(m, |a, _| {
        let mut s = 0.0;
        for b in 0..m {
            s += jet.curvature.ca_b1c.get(b, a, b);
        }
        factor * s
    })
}

/// Report for the umbilical branch of the pipeline.
#[derive(Debug, Clone)]
pub struct UmbilicalReport {
    /// The surviving covector; zero over a conformally flat ambient space.
    pub mu_a: DVector<f64>,
    pub conformally_flat: bool,
    /// The harmonic pole stays fixed along the ruling exactly when `μ_a = 0`.
    pub pole_fixed: bool,
}

/// Assembles the umbilical-branch data.
pub fn umbilical_report(jet: &HypersurfaceJet, tols: &Tolerances) -> UmbilicalReport {
    let mu_a = umbilical_covector(jet);
    let pole_fixed = mu_a.norm() <= tols.trace * jet.curvature.ca_b1c.norm().max(1.0);
    UmbilicalReport {
        conformally_flat: jet.curvature.is_flat(),
        pole_fixed,
        mu_a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::normalize_to_harmonic_pole;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn diag_jet() -> HypersurfaceJet {
        let g = ScreenMetric::identity(3);
        let lambda = SymMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        HypersurfaceJet::from_second_order(5, g, lambda).unwrap()
    }

    #[test]
    fn foci_diagonal_read_off() {
        let tols = Tolerances::default();
        let report = singular_points(&diag_jet(), &tols).unwrap();
        assert_eq!(report.s.len(), 3);
        assert_abs_diff_eq!(report.s[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.s[2], 4.0, epsilon = 1e-12);
        // pole = mean of foci = g-trace/m
        assert_abs_diff_eq!(report.lambda_mean, 7.0 / 3.0, epsilon = 1e-12);
        assert!(report.residual < 1e-10);
    }

    #[test]
    fn foci_multiplicity_clustering() {
        let g = ScreenMetric::identity(3);
        let lambda = SymMatrix::from_diagonal(&[2.0, 2.0, 5.0]);
        let jet = HypersurfaceJet::from_second_order(5, g, lambda).unwrap();
        let report = singular_points(&jet, &Tolerances::default()).unwrap();
        assert_eq!(report.clusters.len(), 2);
        assert_eq!(report.clusters[0], (2.0, 2));
        assert_eq!(report.clusters[1].1, 1);
    }

    #[test]
    fn fundamental_tensor_frozen_and_apolar() {
        // frozen: λ = diag(1,2,4), g = I  =>  h = diag(−4/3, −1/3, 5/3)
        let (h, mixed) = fundamental_tensor(&diag_jet());
        for (i, expect) in [-4.0 / 3.0, -1.0 / 3.0, 5.0 / 3.0].iter().enumerate() {
            assert_abs_diff_eq!(h.get(i, i), *expect, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(mixed.trace(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn apolarity_survives_congruence() {
        let g = ScreenMetric::new(dmatrix![2.0, 0.3; 0.3, 1.4]).unwrap();
        let lambda = SymMatrix::from_fn(2, |a, b| ((a + 2 * b) as f64).cos());
        let jet = HypersurfaceJet::from_second_order(4, g, lambda).unwrap();
        let (h, _) = fundamental_tensor(&jet);
        assert_abs_diff_eq!(jet.g.trace(&h), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pole_regularity_frozen() {
        // frozen: det h^a_b = (−4/3)(−1/3)(5/3) = 20/27
        let reg = pole_regularity(&diag_jet(), &Tolerances::default());
        assert_abs_diff_eq!(reg.det, 20.0 / 27.0, epsilon = 1e-12);
        assert!(reg.regular);

        let g = ScreenMetric::identity(3);
        let lambda = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let jet = HypersurfaceJet::from_second_order(5, g, lambda).unwrap();
        let reg = pole_regularity(&jet, &Tolerances::default());
        assert!(reg.det.abs() < 1e-14);
        assert!(!reg.regular);
    }

    #[test]
    fn mu_frozen_value() {
        // frozen: h = diag(−4/3, −1/3, 5/3)  =>  μ = (16 + 1 + 25)/27 = 14/9
        let (jet, _) = normalize_to_harmonic_pole(&diag_jet());
        let (mu, _) = mu_invariants(&jet);
        assert_abs_diff_eq!(mu, 14.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn mu_covector_frozen_contraction() {
        // frozen: m = 2, g = I, λ_abc = 1 at (0,0,0) => μ = (−1/2, 0)
        let g = ScreenMetric::identity(2);
        let mut jet = HypersurfaceJet::from_second_order(4, g, SymMatrix::zeros(2)).unwrap();
        jet.lambda3.set(0, 0, 0, 1.0);
        let (_, mu_a) = mu_invariants(&jet);
        assert_abs_diff_eq!(mu_a[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(mu_a[1], 0.0, epsilon = 1e-14);
    }

    fn normalized_diag_jet() -> HypersurfaceJet {
        let (mut jet, _) = normalize_to_harmonic_pole(&diag_jet());
        jet.nu = 0.0;
        jet
    }

    #[test]
    fn h_affinor_frozen_diagonal() {
        // frozen: h = diag(−4/3,−1/3,5/3), ν = 0, μ = 14/9
        //   => H = h² − μI = diag(2/9, −13/9, 11/9)
        let jet = normalized_diag_jet();
        let (mu, _) = mu_invariants(&jet);
        let h = h_affinor(&jet, mu, &Tolerances::default()).unwrap();
        for (i, expect) in [2.0 / 9.0, -13.0 / 9.0, 11.0 / 9.0].iter().enumerate() {
            assert_abs_diff_eq!(h.mixed[(i, i)], *expect, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(h.mixed.trace(), 0.0, epsilon = 1e-12);
        let inv = h.inverse.expect("regular H");
        assert_abs_diff_eq!(inv[(0, 0)], 4.5, epsilon = 1e-12);
    }

    #[test]
    fn h_affinor_umbilical_and_singular_branches() {
        // umbilical: λ = 0 after normalization => μ = 0 => H undefined
        let g = ScreenMetric::identity(2);
        let (jet, _) = normalize_to_harmonic_pole(
            &HypersurfaceJet::from_second_order(4, g, SymMatrix::zeros(2)).unwrap(),
        );
        let (mu, _) = mu_invariants(&jet);
        assert!(matches!(
            h_affinor(&jet, mu, &Tolerances::default()),
            Err(Error::Umbilical)
        ));

        // n = 4, ν = 0, h ≠ 0: Cayley–Hamilton gives h² = μI, so H = 0
        let g = ScreenMetric::identity(2);
        let lambda = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let (jet, _) = normalize_to_harmonic_pole(
            &HypersurfaceJet::from_second_order(4, g, lambda).unwrap(),
        );
        let (mu, _) = mu_invariants(&jet);
        let h = h_affinor(&jet, mu, &Tolerances::default()).unwrap();
        assert!(h.mixed.norm() < 1e-12);
        assert!(h.inverse.is_none());
    }

    #[test]
    fn normalizing_objects_frozen() {
        // frozen example: h = diag(−4/3,−1/3,5/3), g = I, ν = 0, μ = 14/9,
        // μ_a = (1,0,0), ν_a = (0,1,0):
        //   M = (−4/3, −1/2, 0), N = (−14/9, −1/6, 0),
        //   P = H̃M = (−6, 9/26, 0), Q = H̃N/μ = (−9/2, 27/364, 0)
        let mut jet = normalized_diag_jet();
        jet.nu_a = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let mu = 14.0 / 9.0;
        let mu_a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let h = h_affinor(&jet, mu, &Tolerances::default()).unwrap();
        let objs = normalizing_objects(&jet, mu, &mu_a, &h).unwrap();
        let expect = |v: &DVector<f64>, e: [f64; 3]| {
            for i in 0..3 {
                assert_abs_diff_eq!(v[i], e[i], epsilon = 1e-12);
            }
        };
        expect(&objs.m_a, [-4.0 / 3.0, -0.5, 0.0]);
        expect(&objs.n_a, [-14.0 / 9.0, -1.0 / 6.0, 0.0]);
        expect(&objs.p_a, [-6.0, 9.0 / 26.0, 0.0]);
        expect(&objs.q_a, [-4.5, 27.0 / 364.0, 0.0]);
        let frame = screen_frame(&objs);
        assert_eq!(frame.p, objs.p_a);
    }

    #[test]
    fn singular_h_is_special_type() {
        let g = ScreenMetric::identity(2);
        let lambda = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let (jet, _) = normalize_to_harmonic_pole(
            &HypersurfaceJet::from_second_order(4, g, lambda).unwrap(),
        );
        let (mu, mu_a) = mu_invariants(&jet);
        let h = h_affinor(&jet, mu, &Tolerances::default()).unwrap();
        assert!(matches!(
            normalizing_objects(&jet, mu, &mu_a, &h),
            Err(Error::SpecialType)
        ));
    }

    #[test]
    fn invariant_point_frozen_real() {
        // frozen: τ_ab = diag(1,2), g = I  =>  τ = 3/2, z = {−2, −1}
        let g = ScreenMetric::identity(2);
        let point =
            invariant_point(&g, &dmatrix![1.0, 0.0; 0.0, 2.0], &Tolerances::default()).unwrap();
        assert_abs_diff_eq!(point.tau, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(point.cn_coefficient, -1.5, epsilon = 1e-14);
        assert!(point.symmetric_branch);
        assert_abs_diff_eq!(point.congruence_foci[0].re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(point.congruence_foci[1].re, -1.0, epsilon = 1e-12);
        assert_eq!(point.congruence_foci[0].im, 0.0);
    }

    #[test]
    fn invariant_point_skew_complex_pair() {
        // frozen: τ_ab = [[0,1],[−1,0]]  =>  z = {−i, +i}, τ = 0
        let g = ScreenMetric::identity(2);
        let point =
            invariant_point(&g, &dmatrix![0.0, 1.0; -1.0, 0.0], &Tolerances::default()).unwrap();
        assert_abs_diff_eq!(point.tau, 0.0, epsilon = 1e-14);
        assert!(!point.symmetric_branch);
        assert_abs_diff_eq!(point.congruence_foci[0].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(point.congruence_foci[1].im, 1.0, epsilon = 1e-12);
        // trace identity Σz = −mτ
        let sum: Complex<f64> = point.congruence_foci.iter().sum();
        assert_abs_diff_eq!(sum.re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn umbilical_covector_contractions() {
        // flat slice => μ_a = 0
        let g = ScreenMetric::identity(2);
        let jet = HypersurfaceJet::from_second_order(4, g, SymMatrix::zeros(2)).unwrap();
        assert_eq!(umbilical_covector(&jet).norm(), 0.0);
        let report = umbilical_report(&jet, &Tolerances::default());
        assert!(report.conformally_flat && report.pole_fixed);

        // frozen: n = 4 (factor −2), C^0_{0,1,0} = 1 => μ = (−2·C[b][a][b])
        let mut jet = jet;
        jet.curvature.ca_b1c.set(0, 0, 0, 1.0);
        let mu_a = umbilical_covector(&jet);
        assert_abs_diff_eq!(mu_a[0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mu_a[1], 0.0, epsilon = 1e-14);
    }
}

//! The normalizing 1-forms and the two affine connections they induce.
//!
//! Once the screen frame and the transversal point are fixed, the remaining
//! frame freedom is absorbed by expressing the two covector-valued forms of
//! the reduction as combinations of the base coframe
//! `{ω¹, ω^a}` (`ω¹` along the ruling, `ω^a` along the screen):
//!
//! ```text
//! ω_a⁰ = σ_a ω¹ + σ_ab ω^b,      ω_a¹ = τ_a ω¹ + τ_ab ω^b.
//! ```
//!
//! [`solve_normalizing_forms`] computes `(σ_a, τ_a, σ_ab, τ_ab)` from the
//! fourth-order jet by solving the block-linear system the reduction
//! produces.  From the solution, [`screen_torsion`] and [`screen_curvature`]
//! build the torsion and curvature of the screen connection (the affine
//! connection defined by third/fourth-order data, which carries torsion),
//! [`torsion_free_curvature`] builds the curvature of the torsion-free
//! connection (which additionally needs the fifth-order transversal
//! coefficients `φ₁, φ_a`), and [`integrability`] evaluates the two
//! equivalent integrability conditions for the screen distribution.
//!
//! 2-form coefficient convention, used consistently below: a 2-form is
//! reported by the raw coefficient of `ω¹∧ω^a` and by a skew array `D_ab`
//! such that the pure-screen part is `Σ_{a,b} D_ab ω^a∧ω^b` (full sum, `D`
//! antisymmetric — the half-alternation of the raw coefficients).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::invariants::{fundamental_tensor, h_affinor, mu_invariants};
use crate::jet::HypersurfaceJet;
use crate::tensor::{alternate, Affinor, Array3, Array4};
use crate::{Error, Result, Tolerances};

/// Coefficients of the normalizing 1-forms over the base coframe.
#[derive(Debug, Clone)]
pub struct NormalizingForms {
    /// `σ_a`: `ω¹`-part of `ω_a⁰`.
    pub sigma_a: DVector<f64>,
    /// `τ_a`: `ω¹`-part of `ω_a¹`.
    pub tau_a: DVector<f64>,
    /// `σ_ab`: `ω^b`-part of `ω_a⁰` (rows `a`, columns `b`).
    pub sigma_ab: DMatrix<f64>,
    /// `τ_ab`: `ω^b`-part of `ω_a¹`.
    pub tau_ab: DMatrix<f64>,
    /// Worst relative back-substitution residual over all solved systems.
    pub residual: f64,
}

/// Solves the reduction equations
///
/// ```text
/// −h_a^b ω_b⁰ − μ ω_a¹ + 2C_{11a} ω¹ − C_{1ab} ω^b = ν_ab ω^b
/// 2μ ω_a⁰ − (2μ h_a^b + ν δ_a^b) ω_b¹ + 2μ(2C¹_{11a} ω¹ − C¹_{1ab} ω^b)
///                                              = ρ_a ω¹ + ρ_ab ω^b
/// ```
///
/// for the coefficients of `ω_a⁰` and `ω_a¹`.  Separating the `ω¹` and
/// `ω^b` coefficients gives one `2m×2m` system per free column plus one for
/// the vector pair, all sharing the block matrix
/// `[[−A, −μI], [2μI, −(2μA + νI)]]` with `A = (h_a^b)`.
///
/// Requires a harmonically normalized jet with `μ > 0` and nondegenerate
/// central affinor `H`; a singular `H` yields the special-type verdict and
/// `μ = 0` the umbilical one.
pub fn solve_normalizing_forms(
    jet: &HypersurfaceJet,
    tols: &Tolerances,
) -> Result<NormalizingForms> {
    if !jet.harmonic_normalized {
        return Err(Error::InvalidArgument(
            "normalizing forms require a harmonically normalized jet".to_string(),
        ));
    }
    let m = jet.m();
    let (mu, _) = mu_invariants(jet);
    // Gate on H: errors with Umbilical when μ ≤ 0, SpecialType when singular.
    let central = h_affinor(jet, mu, tols)?;
    if central.inverse.is_none() {
        return Err(Error::SpecialType);
    }

    let (h_cov, _) = fundamental_tensor(jet);
    let a_mat = h_cov.to_dense() * jet.g.inverse(); // (h_a^b), row-lower
    let mut block = DMatrix::zeros(2 * m, 2 * m);
    block.view_mut((0, 0), (m, m)).copy_from(&(-&a_mat));
    block
        .view_mut((0, m), (m, m))
        .copy_from(&(DMatrix::identity(m, m) * (-mu)));
    block
        .view_mut((m, 0), (m, m))
        .copy_from(&(DMatrix::identity(m, m) * (2.0 * mu)));
    block
        .view_mut((m, m), (m, m))
        .copy_from(&(-(&a_mat * (2.0 * mu) + DMatrix::identity(m, m) * jet.nu)));
    let lu = block.clone().lu();

    let solve_one = |rhs: DVector<f64>| -> Result<(DVector<f64>, DVector<f64>, f64)> {
        let sol = lu
            .solve(&rhs)
            .ok_or(Error::Singular {
                what: "normalizing-form block system",
            })?;
        let residual = (&block * &sol - &rhs).norm() / rhs.norm().max(1.0);
        Ok((sol.rows(0, m).into(), sol.rows(m, m).into(), residual))
    };

    let mut sigma_ab = DMatrix::zeros(m, m);
    let mut tau_ab = DMatrix::zeros(m, m);
    let mut worst = 0.0f64;
    for b in 0..m {
        let mut rhs = DVector::zeros(2 * m);
        for a in 0..m {
            rhs[a] = jet.curvature.c_1ab[(a, b)] + jet.nu_ab.get(a, b);
            rhs[m + a] = jet.rho_ab.get(a, b) + 2.0 * mu * jet.curvature.c1_1ab[(a, b)];
        }
        let (s_col, t_col, res) = solve_one(rhs)?;
        sigma_ab.set_column(b, &s_col);
        tau_ab.set_column(b, &t_col);
        worst = worst.max(res);
    }

    let mut rhs = DVector::zeros(2 * m);
    for a in 0..m {
        rhs[a] = -2.0 * jet.curvature.c_11a[a];
        rhs[m + a] = jet.rho_a[a] - 4.0 * mu * jet.curvature.c1_11a[a];
    }
    let (sigma_a, tau_a, res) = solve_one(rhs)?;
    worst = worst.max(res);

    if worst > tols.solve_residual {
        return Err(Error::Singular {
            what: "normalizing-form back-substitution",
        });
    }
    Ok(NormalizingForms {
        sigma_a,
        tau_a,
        sigma_ab,
        tau_ab,
        residual: worst,
    })
}

/// Torsion of the screen connection, over the coframe 2-form basis.
#[derive(Debug, Clone)]
pub struct ScreenTorsion {
    /// Ruling component `Θ¹`: coefficient of `ω^a∧ω¹` is `−τ_a` …
    pub ruling_a1: DVector<f64>,
    /// … and the skew `ω^a∧ω^b` coefficient array is `τ_[ab]`.
    pub ruling_ab: DMatrix<f64>,
    /// Screen components `Θ^a`: coefficient of `ω¹∧ω^b` is `h^a_b`.
    pub screen_1b: Affinor,
}

impl ScreenTorsion {
    /// The connection is torsion-free exactly when `τ_a = 0`, `τ_[ab] = 0`
    /// and `h = 0`.
    pub fn vanishes(&self, tol: f64) -> bool {
        self.ruling_a1.norm() <= tol && self.ruling_ab.norm() <= tol && self.screen_1b.norm() <= tol
    }
}

/// Reads the torsion 2-forms off the screen-connection structure equations:
/// the ruling equation acquires `ω^a∧(τ_a ω¹ + τ_ab ω^b)` and the screen
/// equations `h^a_b ω¹∧ω^b`.
pub fn screen_torsion(jet: &HypersurfaceJet, forms: &NormalizingForms) -> ScreenTorsion {
    let (_, h_mixed) = fundamental_tensor(jet);
    ScreenTorsion {
        ruling_a1: -forms.tau_a.clone(),
        ruling_ab: alternate(&forms.tau_ab),
        screen_1b: h_mixed,
    }
}

/// Curvature components of the screen connection.
///
/// Indices: `ruling_*` is the curvature of the ruling factor, `mixed_*` the
/// screen endomorphism block; `_1a`/`_1c` arrays hold raw `ω¹∧ω^·`
/// coefficients, `_ab`/`_ce` the skew pure-screen arrays.
#[derive(Debug, Clone)]
pub struct ScreenCurvature {
    pub ruling_1a: DVector<f64>,
    pub ruling_ab: DMatrix<f64>,
    /// `[a][b][c]`: upper screen index `a`, lower `b`, coefficient of `ω¹∧ω^c`.
    pub mixed_1c: Array3,
    /// `[a][b][c][e]`: skew in `(c, e)`.
    pub mixed_ce: Array4,
}

/// Evaluates the screen-connection curvature from the solved forms:
///
/// ```text
/// R¹_{11a} = 2C¹_{11a} − σ_a − h_a^c τ_c
/// R¹_{1ab} = σ_[ab] + (h_a^c τ_cb)_[ab] + C¹_{1[ab]}
/// R^a_{b1c} = δ^a_b σ_c + δ^a_c σ_b − g_bc σ^a + h^a_c τ_b − h_bc τ^a + 2C^a_{b1c}
/// R^a_{bce} = alt_(c,e)[ δ^a_e σ_bc + g_bc σ^a_e + h^a_e τ_bc + h_bc τ^a_e
///                        − δ^a_b σ_ce + C^a_{bce} ]
/// ```
///
/// where raising is by `g^{ab}` on the first index and `alt` is the
/// half-alternation over the named pair.
pub fn screen_curvature(jet: &HypersurfaceJet, forms: &NormalizingForms) -> ScreenCurvature {
    let m = jet.m();
    let g = jet.g.matrix();
    let ginv = jet.g.inverse();
    let (h_cov, h_up) = fundamental_tensor(jet);
    let h = h_cov.to_dense();
    let a_mat = &h * ginv; // h_a^b, row-lower
    let slice = &jet.curvature;

    let ruling_1a = slice.c1_11a.clone() * 2.0 - &forms.sigma_a - &a_mat * &forms.tau_a;

    let a_tau = &a_mat * &forms.tau_ab; // h_a^c τ_cb
    let ruling_ab = alternate(&forms.sigma_ab) + alternate(&a_tau) + alternate(&slice.c1_1ab);

    let sigma_up = ginv * &forms.sigma_a; // σ^a
    let tau_up = ginv * &forms.tau_a; // τ^a
    let mut mixed_1c = Array3::zeros(m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let mut v = 2.0 * slice.ca_b1c.get(a, b, c);
                if a == b {
                    v += forms.sigma_a[c];
                }
                if a == c {
                    v += forms.sigma_a[b];
                }
                v -= g[(b, c)] * sigma_up[a];
                v += h_up[(a, c)] * forms.tau_a[b];
                v -= h[(b, c)] * tau_up[a];
                mixed_1c.set(a, b, c, v);
            }
        }
    }

    let sigma_up_ab = ginv * &forms.sigma_ab; // σ^a_b
    let tau_up_ab = ginv * &forms.tau_ab; // τ^a_b
    let mut mixed_ce = Array4::zeros(m);
    let raw = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let mut v = slice.ca_bce.get(a, b, c, e);
        if a == e {
            v += forms.sigma_ab[(b, c)];
        }
        v += g[(b, c)] * sigma_up_ab[(a, e)];
        v += h_up[(a, e)] * forms.tau_ab[(b, c)];
        v += h[(b, c)] * tau_up_ab[(a, e)];
        if a == b {
            v -= forms.sigma_ab[(c, e)];
        }
        v
    };
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for e in 0..m {
                    mixed_ce.set(a, b, c, e, 0.5 * (raw(a, b, c, e) - raw(a, b, e, c)));
                }
            }
        }
    }

    ScreenCurvature {
        ruling_1a,
        ruling_ab,
        mixed_1c,
        mixed_ce,
    }
}

/// Curvature components of the torsion-free connection, grouped by the
/// block of the connection matrix they belong to: the dilation (ruling
/// scale) block, the covector block `ω_a¹`, the vector block `ω₁^a`, and
/// the screen endomorphism block.
#[derive(Debug, Clone)]
pub struct TorsionFreeCurvature {
    pub dilation_1a: DVector<f64>,
    pub dilation_ab: DMatrix<f64>,
    /// `[a][b]`: lower index `a`, coefficient of `ω¹∧ω^b`.
    pub covector_1b: DMatrix<f64>,
    /// `[a][b][c]`: skew in `(b, c)`.
    pub covector_bc: Array3,
    /// `[a][b]`: upper index `a`, coefficient of `ω¹∧ω^b`.
    pub vector_1b: DMatrix<f64>,
    pub vector_bc: Array3,
    /// `[a][b][c]`: upper `a`, lower `b`, coefficient of `ω¹∧ω^c`.
    pub endo_1c: Array3,
    /// `[a][b][c][e]`: skew in `(c, e)`.
    pub endo_ce: Array4,
}

/// Expands the curvature of the torsion-free connection over the base
/// coframe.  On top of the solved normalizing forms this needs the
/// transversal derivative coefficients `φ₁, φ_a` (fifth-order data); a jet
/// without them is rejected.
///
/// The ambient curvature enters through the stored slice plus the
/// components reachable from it by pair symmetry:
/// `C^a_{11b} = −g^{ae}Cn_{eb}`, `C^a_{1bc} = C^a_{b1c} − C^a_{c1b}`, and
/// the skew part of `C¹_{a1b}`, which equals `C¹_{1[ab]}`.  Components with
/// no representative in the slice (the symmetric part of `C¹_{a1b}` and
/// `C¹_{abc}`) are taken as zero; for conformally flat slices this is
/// exact.
pub fn torsion_free_curvature(
    jet: &HypersurfaceJet,
    forms: &NormalizingForms,
) -> Result<TorsionFreeCurvature> {
    let (phi1, phi_a) = match (jet.phi1, &jet.phi_a) {
        (Some(p1), Some(pa)) => (p1, pa.clone()),
        _ => return Err(Error::FifthOrder),
    };
    let m = jet.m();
    let g = jet.g.matrix();
    let ginv = jet.g.inverse();
    let (mu, mu_a) = mu_invariants(jet);
    let (h_cov, _) = fundamental_tensor(jet);
    let h = h_cov.to_dense();
    let slice = &jet.curvature;

    // Dilation block: 2ω₁⁰∧ω¹ + ω^a∧ω_a⁰ + C-terms, with ω₁⁰ = μω¹ + μ_a ω^a.
    let dilation_1a = -&mu_a * 2.0 - &forms.sigma_a + slice.c1_11a.clone() * 2.0;
    let dilation_ab = alternate(&forms.sigma_ab) + alternate(&slice.c1_1ab);

    // Covector block: ω_a⁰∧ω₁⁰ − g_ab ω^b∧ω_n⁰ + C-terms,
    // with ω_n⁰ = φ₁ω¹ + φ_a ω^a.
    let c1_a1b_skew = alternate(&slice.c1_1ab); // skew part of C¹_{a1b}
    let mut covector_1b = DMatrix::zeros(m, m);
    let mut covector_bc = Array3::zeros(m);
    for a in 0..m {
        for b in 0..m {
            covector_1b[(a, b)] = -mu * forms.sigma_ab[(a, b)] + forms.sigma_a[a] * mu_a[b]
                + phi1 * g[(a, b)]
                + 2.0 * c1_a1b_skew[(a, b)];
            for c in 0..m {
                let raw = |x: usize, y: usize| -> f64 {
                    forms.sigma_ab[(a, x)] * mu_a[y] - g[(a, x)] * phi_a[y]
                };
                covector_bc.set(a, b, c, 0.5 * (raw(b, c) - raw(c, b)));
            }
        }
    }

    // Vector block: ω₁⁰∧ω^a + C-terms, with C^a_{11b} = −g^{ae}Cn_{eb}.
    let cn_up = ginv * slice.cn_ab1.to_dense();
    let mut vector_1b = DMatrix::zeros(m, m);
    let mut vector_bc = Array3::zeros(m);
    for a in 0..m {
        for b in 0..m {
            vector_1b[(a, b)] = -2.0 * cn_up[(a, b)] + if a == b { mu } else { 0.0 };
            for c in 0..m {
                let kd = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                let mirror = slice.ca_b1c.get(a, b, c) - slice.ca_b1c.get(a, c, b);
                vector_bc.set(
                    a,
                    b,
                    c,
                    0.5 * (mu_a[b] * kd(a, c) - mu_a[c] * kd(a, b)) + mirror,
                );
            }
        }
    }

    // Endomorphism block: ω_b⁰∧ω^a + ω_b^n∧ω_n^a + g_bc g^{ae} ω^c∧ω_e⁰
    // − δ^a_b(ω¹∧ω₁⁰ + ω^c∧ω_c⁰) + C-terms,
    // with ω_b^n = h_be ω^e and ω_n^a = g^{ae}ω_e¹ = τ^a ω¹ + τ^a_c ω^c.
    let sigma_up = ginv * &forms.sigma_a;
    let tau_up = ginv * &forms.tau_a;
    let sigma_up_ab = ginv * &forms.sigma_ab;
    let tau_up_ab = ginv * &forms.tau_ab;
    let mut endo_1c = Array3::zeros(m);
    let mut endo_ce = Array4::zeros(m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let kd = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                let v = forms.sigma_a[b] * kd(a, c) - h[(b, c)] * tau_up[a]
                    - g[(b, c)] * sigma_up[a]
                    + kd(a, b) * (forms.sigma_a[c] - mu_a[c])
                    + 2.0 * slice.ca_b1c.get(a, b, c);
                endo_1c.set(a, b, c, v);
                for e in 0..m {
                    let raw = |x: usize, y: usize| -> f64 {
                        forms.sigma_ab[(b, x)] * kd(a, y) + h[(b, x)] * tau_up_ab[(a, y)]
                            + g[(b, x)] * sigma_up_ab[(a, y)]
                            - kd(a, b) * forms.sigma_ab[(x, y)]
                            + slice.ca_bce.get(a, b, x, y)
                    };
                    endo_ce.set(a, b, c, e, 0.5 * (raw(c, e) - raw(e, c)));
                }
            }
        }
    }

    Ok(TorsionFreeCurvature {
        dilation_1a,
        dilation_ab,
        covector_1b,
        covector_bc,
        vector_1b,
        vector_bc,
        endo_1c,
        endo_ce,
    })
}

/// Verdicts on the two integrability conditions.
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    /// Screen distribution integrable: `τ_[ab] = 0`.
    pub screen_integrable: bool,
    /// Conjugate condition: `h_a^c σ_cb + C_{1ab}` symmetric.
    pub conjugate_integrable: bool,
    pub screen_skew_norm: f64,
    /// Conjugate skew norm, measured in the same units as the screen one by
    /// dividing by `2μ` (the exact conversion factor between the two
    /// conditions).
    pub conjugate_skew_norm: f64,
    /// Relative residual of the linking identity
    /// `h_a^c σ_cb − h_b^c σ_ca + C_{1ab} − C_{1ba} = −2μ τ_[ab]`.
    pub identity_residual: f64,
}

/// Evaluates both integrability conditions and the identity tying them
/// together; with `μ ≠ 0` the identity forces the two verdicts to agree.
pub fn integrability(
    jet: &HypersurfaceJet,
    forms: &NormalizingForms,
    tols: &Tolerances,
) -> IntegrabilityReport {
    let (mu, _) = mu_invariants(jet);
    let (h_cov, _) = fundamental_tensor(jet);
    let a_mat = h_cov.to_dense() * jet.g.inverse();
    let t_mat = &a_mat * &forms.sigma_ab; // h_a^c σ_cb
    let c_mat = &jet.curvature.c_1ab;

    let tau_skew = alternate(&forms.tau_ab);
    let conj_skew = alternate(&(&t_mat + c_mat));
    let identity = (&t_mat - t_mat.transpose()) + (c_mat - c_mat.transpose())
        + (&forms.tau_ab - forms.tau_ab.transpose()) * mu;
    let scale = t_mat.norm() + c_mat.norm() + mu.abs() * forms.tau_ab.norm();

    let screen_skew_norm = tau_skew.norm();
    let conjugate_skew_norm = conj_skew.norm() / (2.0 * mu.abs()).max(f64::MIN_POSITIVE);
    let gate = tols.integrability * forms.tau_ab.norm().max(1.0);
    IntegrabilityReport {
        screen_integrable: screen_skew_norm <= gate,
        conjugate_integrable: conjugate_skew_norm <= gate,
        screen_skew_norm,
        conjugate_skew_norm,
        identity_residual: identity.norm() / scale.max(1.0),
    }
}

/// Residuals of the structure-group verification.
#[derive(Debug, Clone)]
pub struct StructureGroupCheck {
    /// Maurer–Cartan residual of the scalar (dilation) factor.
    pub scalar_residual: f64,
    /// Residual along one-parameter subgroups of the GL factor.
    pub subgroup_residual: f64,
    /// Residual on generic two-parameter GL families (finite-difference
    /// floor `O(step²)`).
    pub generic_residual: f64,
}

/// Verifies numerically that the residual frame freedom forms the group
/// `R⁺ × GL(m)`: the scalar factor is abelian (`d` of its left
/// Maurer–Cartan form vanishes) and the GL factor satisfies the
/// Maurer–Cartan identity `∂_s ω_t − ∂_t ω_s + [ω_s, ω_t] = 0` for
/// `ω_u = g⁻¹ ∂_u g`, evaluated by central differences on families
/// `g(s,t) = exp(sA)·exp(tB)`.
pub fn structure_group_check(m: usize, seed: u64) -> StructureGroupCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-4;
    let draw = |rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0))
    };

    // Scalar factor: family exp(sα + tβ); its Maurer–Cartan form has
    // constant coefficients, so the mixed-derivative residual vanishes.
    let (alpha, beta) = (rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
    let lam = |s: f64, t: f64| (s * alpha + t * beta).exp();
    let om_s = |s: f64, t: f64| (lam(s + step, t) - lam(s - step, t)) / (2.0 * step * lam(s, t));
    let om_t = |s: f64, t: f64| (lam(s, t + step) - lam(s, t - step)) / (2.0 * step * lam(s, t));
    let scalar_residual = ((om_t(step, 0.0) - om_t(-step, 0.0))
        - (om_s(0.0, step) - om_s(0.0, -step)))
    .abs()
        / (2.0 * step);

    let mc_residual = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> f64 {
        let g = |s: f64, t: f64| (a * s).exp() * (b * t).exp();
        let omega = |du: [f64; 2], s: f64, t: f64| -> DMatrix<f64> {
            let plus = g(s + step * du[0], t + step * du[1]);
            let minus = g(s - step * du[0], t - step * du[1]);
            g(s, t).lu().solve(&((plus - minus) / (2.0 * step))).unwrap()
        };
        let (s0, t0) = (0.3, -0.2);
        let om_s = |s: f64, t: f64| omega([1.0, 0.0], s, t);
        let om_t = |s: f64, t: f64| omega([0.0, 1.0], s, t);
        let ds_omt = (om_t(s0 + step, t0) - om_t(s0 - step, t0)) / (2.0 * step);
        let dt_oms = (om_s(s0, t0 + step) - om_s(s0, t0 - step)) / (2.0 * step);
        let os = om_s(s0, t0);
        let ot = om_t(s0, t0);
        let bracket = &os * &ot - &ot * &os;
        (ds_omt - dt_oms + bracket).norm() / (os.norm() * ot.norm()).max(1.0)
    };

    let a = draw(&mut rng);
    let b = draw(&mut rng);
    let subgroup_residual = mc_residual(&a, &a.clone());
    let generic_residual = mc_residual(&a, &b);
    StructureGroupCheck {
        scalar_residual,
        subgroup_residual,
        generic_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::normalize_to_harmonic_pole;
    use crate::tensor::{ScreenMetric, SymMatrix};
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    /// n = 4, g = I, λ = diag(1, −1) (already harmonic), μ = 1.
    fn saddle_jet() -> HypersurfaceJet {
        let g = ScreenMetric::identity(2);
        let lambda = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let (mut jet, _) =
            normalize_to_harmonic_pole(&HypersurfaceJet::from_second_order(4, g, lambda).unwrap());
        jet.nu = 1.0; // keep H = h² + (ν/2μ)h − μI nonsingular
        jet
    }

    #[test]
    fn homogeneous_system_gives_zero_forms() {
        let forms = solve_normalizing_forms(&saddle_jet(), &Tolerances::default()).unwrap();
        assert!(forms.sigma_ab.norm() < 1e-14);
        assert!(forms.tau_ab.norm() < 1e-14);
        assert!(forms.sigma_a.norm() < 1e-14);
        assert!(forms.tau_a.norm() < 1e-14);
        assert!(forms.residual < 1e-12);
    }

    #[test]
    fn frozen_block_solve() {
        // With ν = 0 and m = 2, H = h² − μI = 0: the solve must reject.
        let mut jet = saddle_jet();
        jet.nu = 0.0;
        assert!(matches!(
            solve_normalizing_forms(&jet, &Tolerances::default()),
            Err(Error::SpecialType)
        ));

        // frozen oracle: h = diag(1,−1), μ = 1, ν = 1, ν_ab = I.  The block
        // system {−hσ − μτ = ν̂, 2μσ − (2μh + νI)τ = 0} decouples per
        // diagonal entry e of h:
        //   −e·σ − τ = 1,  2σ = (2e+1)τ
        //   ⇒ τ = −2/(e(2e+1) + 2), σ = (2e+1)τ/2
        // e = +1: σ = −3/5, τ = −2/5;  e = −1: σ = 1/3, τ = −2/3.
        let mut jet = saddle_jet();
        jet.nu_ab = SymMatrix::from_diagonal(&[1.0, 1.0]);
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        assert_abs_diff_eq!(forms.sigma_ab[(0, 0)], -0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(forms.tau_ab[(0, 0)], -0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(forms.sigma_ab[(1, 1)], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(forms.tau_ab[(1, 1)], -2.0 / 3.0, epsilon = 1e-12);
        assert!(forms.sigma_ab[(0, 1)].abs() < 1e-14);
        assert!(forms.residual < 1e-12);
    }

    #[test]
    fn umbilical_jet_rejected() {
        let g = ScreenMetric::identity(2);
        let (jet, _) = normalize_to_harmonic_pole(
            &HypersurfaceJet::from_second_order(4, g, SymMatrix::zeros(2)).unwrap(),
        );
        assert!(matches!(
            solve_normalizing_forms(&jet, &Tolerances::default()),
            Err(Error::Umbilical)
        ));
    }

    #[test]
    fn torsion_components() {
        let jet = saddle_jet();
        let mut forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        forms.tau_ab = dmatrix![0.0, 1.0; -1.0, 0.0];
        forms.tau_a = DVector::from_vec(vec![2.0, 0.0]);
        let torsion = screen_torsion(&jet, &forms);
        assert_abs_diff_eq!(torsion.ruling_a1[0], -2.0, epsilon = 1e-14);
        // skew coefficient of ω^0∧ω^1 is τ_[01] = 1
        assert_abs_diff_eq!(torsion.ruling_ab[(0, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(torsion.screen_1b[(0, 0)], 1.0, epsilon = 1e-14);
        assert!(!torsion.vanishes(1e-12));

        // symmetric τ_ab leaves no pure-screen part
        forms.tau_ab = dmatrix![0.5, 0.25; 0.25, -0.5];
        let torsion = screen_torsion(&jet, &forms);
        assert!(torsion.ruling_ab.norm() < 1e-15);
    }

    #[test]
    fn curvature_single_surviving_term() {
        // flat slice, all forms zero except τ_a = (1,0):
        // ruling_1a = −h_a^c τ_c = (−1, 0)
        let jet = saddle_jet();
        let mut forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        forms.tau_a = DVector::from_vec(vec![1.0, 0.0]);
        let r = screen_curvature(&jet, &forms);
        assert_abs_diff_eq!(r.ruling_1a[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.ruling_1a[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn curvature_skew_in_last_pair() {
        let mut jet = saddle_jet();
        jet.nu_ab = SymMatrix::from_fn(2, |a, b| (a + b) as f64);
        jet.rho_ab = SymMatrix::from_fn(2, |a, b| 0.3 * (a as f64 - 0.5 * b as f64).cos());
        jet.curvature.c_1ab = dmatrix![0.1, 0.7; -0.2, 0.4];
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        let r = screen_curvature(&jet, &forms);
        let m = 2;
        for a in 0..m {
            for b in 0..m {
                assert_abs_diff_eq!(r.ruling_ab[(a, b)], -r.ruling_ab[(b, a)], epsilon = 1e-13);
                for c in 0..m {
                    for e in 0..m {
                        assert_abs_diff_eq!(
                            r.mixed_ce.get(a, b, c, e),
                            -r.mixed_ce.get(a, b, e, c),
                            epsilon = 1e-13
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn integrability_frozen_skew_case() {
        // C_{1ab} = [[0,1],[0,0]] drives a skew τ_[ab] = ∓1/5 through the
        // solve; the linking identity still holds exactly and both
        // integrability verdicts come out false.
        let mut jet = saddle_jet();
        jet.curvature.c_1ab = dmatrix![0.0, 1.0; 0.0, 0.0];
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        let report = integrability(&jet, &forms, &Tolerances::default());
        assert!(!report.screen_integrable);
        assert!(!report.conjugate_integrable);
        assert!(report.identity_residual < 1e-12);

        // homogeneous case: both verdicts true
        let jet = saddle_jet();
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        let report = integrability(&jet, &forms, &Tolerances::default());
        assert!(report.screen_integrable && report.conjugate_integrable);
        assert!(report.identity_residual < 1e-12);
    }

    #[test]
    fn torsion_free_needs_fifth_order() {
        let jet = saddle_jet();
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        assert!(matches!(
            torsion_free_curvature(&jet, &forms),
            Err(Error::FifthOrder)
        ));
    }

    #[test]
    fn torsion_free_transversal_probe() {
        // φ enters only the covector block: φ₁ through +φ₁·g_ab on the
        // ω¹∧ω^b part, φ_a through −g_a[b φ_c] on the screen part.
        let mut jet = saddle_jet();
        jet.phi1 = Some(0.0);
        jet.phi_a = Some(DVector::zeros(2));
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        let base = torsion_free_curvature(&jet, &forms).unwrap();

        let mut probed = jet.clone();
        probed.phi1 = Some(1.0);
        probed.phi_a = Some(DVector::from_vec(vec![1.0, 0.0]));
        let shifted = torsion_free_curvature(&probed, &forms).unwrap();

        let d1 = &shifted.covector_1b - &base.covector_1b;
        assert_abs_diff_eq!(d1[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d1[(1, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d1[(0, 1)], 0.0, epsilon = 1e-14);
        // frozen: Δ covector_bc[1][0][1] = −½(g_10·φ_1 − g_11·φ_0) = ½
        let dv = shifted.covector_bc.get(1, 0, 1) - base.covector_bc.get(1, 0, 1);
        assert_abs_diff_eq!(dv, 0.5, epsilon = 1e-14);
        // all other blocks untouched by φ
        assert!((&shifted.vector_1b - &base.vector_1b).norm() < 1e-15);
        assert!((&shifted.dilation_1a - &base.dilation_1a).norm() < 1e-15);
    }

    #[test]
    fn torsion_free_vector_block_frozen() {
        // vector_1b = μδ^a_b − 2(g⁻¹Cn)^a_b; with Cn = diag(1,−1): diag(−1, 3)
        let mut jet = saddle_jet();
        jet.phi1 = Some(0.0);
        jet.phi_a = Some(DVector::zeros(2));
        jet.curvature.cn_ab1 = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let forms = solve_normalizing_forms(&jet, &Tolerances::default()).unwrap();
        let r = torsion_free_curvature(&jet, &forms).unwrap();
        assert_abs_diff_eq!(r.vector_1b[(0, 0)], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.vector_1b[(1, 1)], 3.0, epsilon = 1e-14);

        // antisymmetry of every pure-screen coefficient array
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(
                    r.dilation_ab[(a, b)],
                    -r.dilation_ab[(b, a)],
                    epsilon = 1e-14
                );
                for c in 0..2 {
                    assert_abs_diff_eq!(
                        r.covector_bc.get(a, b, c),
                        -r.covector_bc.get(a, c, b),
                        epsilon = 1e-14
                    );
                    assert_abs_diff_eq!(
                        r.vector_bc.get(a, b, c),
                        -r.vector_bc.get(a, c, b),
                        epsilon = 1e-14
                    );
                    for e in 0..2 {
                        assert_abs_diff_eq!(
                            r.endo_ce.get(a, b, c, e),
                            -r.endo_ce.get(a, b, e, c),
                            epsilon = 1e-14
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn structure_group_residuals() {
        let check = structure_group_check(3, 7);
        assert!(check.scalar_residual < 1e-9, "{}", check.scalar_residual);
        assert!(check.subgroup_residual < 1e-9, "{}", check.subgroup_residual);
        assert!(check.generic_residual < 1e-6, "{}", check.generic_residual);

        let check = structure_group_check(1, 11);
        assert!(check.generic_residual < 1e-9);
    }
}

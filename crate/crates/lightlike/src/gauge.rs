//! The residual frame-transformation group acting on jets.
//!
//! After adapting the frame to the hypersurface, a family of frame changes
//! survives that fixes the analysed point projectively: rescaling of the
//! base point (`π⁰₀`) and of the ruling point (`π¹₁`), sliding the ruling
//! point along the ruling (`π⁰₁`), a GL action on the screen (`π^a_b`),
//! shifts of the screen vectors into the ruling plane (`π⁰_a`, `π¹_a`), and
//! the transversal shift (`π⁰_n`).  Every derived quantity obeys a linear
//! evolution law under this group; this module integrates those laws as an
//! ODE flow with constant generator and verifies the claimed covariance:
//! consistency of each derived quantity with its recomputation from lower
//! data, the scaling weights of the relative invariants, and the projective
//! invariance of the ruling foci.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::invariants::fundamental_tensor;
use crate::jet::HypersurfaceJet;
use crate::tensor::{pencil_eigen, relative_determinant, ScreenMetric, SymMatrix};
use crate::{Error, Result, Tolerances};

/// Constant generator of a one-parameter family of admissible frame
/// changes.  Index convention for the GL part: `pi_ab[(a, b)] = π_a^b`
/// (row is the lower index), acting on the screen vectors by
/// `δA_a = π_a⁰ A₀ + π_a¹ A₁ + π_a^b A_b`.
#[derive(Debug, Clone)]
pub struct GaugeParams {
    /// Rescaling rate of the base point `A₀`.
    pub pi00: f64,
    /// Rescaling rate of the ruling point `A₁`.
    pub pi11: f64,
    /// Sliding rate of `A₁` along the ruling (`δA₁ = π⁰₁A₀ + π¹₁A₁`).
    pub pi01: f64,
    /// Screen GL generator.
    pub pi_ab: DMatrix<f64>,
    /// Screen-to-base shifts `π⁰_a`.
    pub pi_a0: DVector<f64>,
    /// Screen-to-ruling shifts `π¹_a`.
    pub pi_a1: DVector<f64>,
    /// Transversal shift rate `π⁰_n`.
    pub pi_n0: f64,
}

impl GaugeParams {
    pub fn zero(m: usize) -> Self {
        GaugeParams {
            pi00: 0.0,
            pi11: 0.0,
            pi01: 0.0,
            pi_ab: DMatrix::zeros(m, m),
            pi_a0: DVector::zeros(m),
            pi_a1: DVector::zeros(m),
            pi_n0: 0.0,
        }
    }

    /// Pure rescaling generator.
    pub fn scaling(m: usize, pi00: f64, pi11: f64) -> Self {
        GaugeParams {
            pi00,
            pi11,
            ..GaugeParams::zero(m)
        }
    }

    pub fn dim(&self) -> usize {
        self.pi_ab.nrows()
    }

    fn check_dim(&self, m: usize) -> Result<()> {
        if self.pi_ab.nrows() != m
            || self.pi_ab.ncols() != m
            || self.pi_a0.len() != m
            || self.pi_a1.len() != m
        {
            return Err(Error::Dimension {
                what: "gauge parameters",
                expected: m,
                found: self.pi_ab.nrows(),
            });
        }
        Ok(())
    }

    /// True when only the scalar frame normalizations (`π⁰₀`, `π¹₁`, `π⁰₁`)
    /// are active.
    pub fn moves_only_ruling_frame(&self) -> bool {
        self.pi_ab.norm() == 0.0
            && self.pi_a0.norm() == 0.0
            && self.pi_a1.norm() == 0.0
            && self.pi_n0 == 0.0
    }
}

/// Flowed quantities that exist once the central affinor is invertible.
#[derive(Debug, Clone)]
pub struct CentralState {
    /// `H^a_b`, row index upper.
    pub central: DMatrix<f64>,
    /// `H̃^a_b`, row index upper.
    pub central_inv: DMatrix<f64>,
    pub m_a: DVector<f64>,
    pub n_a: DVector<f64>,
    pub p_a: DVector<f64>,
    pub q_a: DVector<f64>,
}

/// Flowed quantities that exist once the normalizing forms are solved.
#[derive(Debug, Clone)]
pub struct TransversalState {
    pub tau_a: DVector<f64>,
    pub tau_ab: DMatrix<f64>,
    pub tau: f64,
    /// Coordinate of the invariant transversal point, evolved by its own
    /// invariance law; must track `−τ` along every flow.
    pub cn_coord: f64,
    /// Congruence foci, evolved componentwise.
    pub foci: Vec<Complex<f64>>,
}

/// The full flowed state.  Layers beyond the base are present when the jet
/// supports them (`central` needs `μ > 0` and invertible `H`; `transversal`
/// needs the normalizing-form solve).
#[derive(Debug, Clone)]
pub struct GaugeState {
    pub g: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    /// Coordinate of the harmonic pole (mean of the ruling foci).
    pub lambda_scalar: f64,
    pub h: DMatrix<f64>,
    pub mu: f64,
    pub mu_a: DVector<f64>,
    pub nu: f64,
    pub nu_a: DVector<f64>,
    pub central: Option<CentralState>,
    pub transversal: Option<TransversalState>,
}

impl GaugeState {
    /// Builds the state from a jet, attaching every layer the jet supports.
    pub fn from_jet(jet: &HypersurfaceJet, tols: &Tolerances) -> GaugeState {
        let m = jet.m();
        let (h_cov, h_up) = fundamental_tensor(jet);
        let h = h_cov.to_dense();
        let mu = (&h_up * &h_up).trace() / m as f64;
        let (_, mu_a) = crate::invariants::mu_invariants(jet);

        let central = if mu > 0.0 {
            let central_mat =
                &h_up * &h_up + &h_up * (jet.nu / (2.0 * mu)) - DMatrix::identity(m, m) * mu;
            if relative_determinant(&central_mat) > tols.det_rel {
                central_mat.clone().try_inverse().map(|central_inv| {
                    let a_rl = &h * jet.g.inverse();
                    let m_vec =
                        &a_rl * &mu_a + &mu_a * (jet.nu / (2.0 * mu)) - &jet.nu_a * 0.5;
                    let n_vec = &a_rl * &jet.nu_a * 0.5 - &mu_a * mu;
                    let p_vec = central_inv.transpose() * &m_vec;
                    let q_vec = central_inv.transpose() * &n_vec / mu;
                    CentralState {
                        central: central_mat,
                        central_inv,
                        m_a: m_vec,
                        n_a: n_vec,
                        p_a: p_vec,
                        q_a: q_vec,
                    }
                })
            } else {
                None
            }
        } else {
            None
        };

        let transversal = crate::connection::solve_normalizing_forms(jet, tols)
            .ok()
            .and_then(|forms| {
                crate::invariants::invariant_point(&jet.g, &forms.tau_ab, tols)
                    .ok()
                    .map(|point| TransversalState {
                        tau_a: forms.tau_a,
                        tau_ab: forms.tau_ab,
                        tau: point.tau,
                        cn_coord: -point.tau,
                        foci: point.congruence_foci,
                    })
            });

        GaugeState {
            g: jet.g.matrix().clone(),
            lambda: jet.lambda.to_dense(),
            lambda_scalar: jet.lambda_mean(),
            h,
            mu,
            mu_a,
            nu: jet.nu,
            nu_a: jet.nu_a.clone(),
            central,
            transversal,
        }
    }

    fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `self + c · other`, fieldwise (layers must match).
    fn lin(&self, c: f64, other: &GaugeState) -> GaugeState {
        GaugeState {
            g: &self.g + &other.g * c,
            lambda: &self.lambda + &other.lambda * c,
            lambda_scalar: self.lambda_scalar + c * other.lambda_scalar,
            h: &self.h + &other.h * c,
            mu: self.mu + c * other.mu,
            mu_a: &self.mu_a + &other.mu_a * c,
            nu: self.nu + c * other.nu,
            nu_a: &self.nu_a + &other.nu_a * c,
            central: self.central.as_ref().zip(other.central.as_ref()).map(|(a, b)| {
                CentralState {
                    central: &a.central + &b.central * c,
                    central_inv: &a.central_inv + &b.central_inv * c,
                    m_a: &a.m_a + &b.m_a * c,
                    n_a: &a.n_a + &b.n_a * c,
                    p_a: &a.p_a + &b.p_a * c,
                    q_a: &a.q_a + &b.q_a * c,
                }
            }),
            transversal: self
                .transversal
                .as_ref()
                .zip(other.transversal.as_ref())
                .map(|(a, b)| TransversalState {
                    tau_a: &a.tau_a + &b.tau_a * c,
                    tau_ab: &a.tau_ab + &b.tau_ab * c,
                    tau: a.tau + c * b.tau,
                    cn_coord: a.cn_coord + c * b.cn_coord,
                    foci: a
                        .foci
                        .iter()
                        .zip(b.foci.iter())
                        .map(|(x, y)| x + y * c)
                        .collect(),
                }),
        }
    }

    /// Largest componentwise difference between two states, relative to
    /// `max(1, |value|)` per component.
    pub fn distance(&self, other: &GaugeState) -> f64 {
        let rel = |d: f64, s: f64| d / s.max(1.0);
        let mut worst = rel((&self.g - &other.g).norm(), self.g.norm())
            .max(rel((&self.lambda - &other.lambda).norm(), self.lambda.norm()))
            .max(rel(
                (self.lambda_scalar - other.lambda_scalar).abs(),
                self.lambda_scalar.abs(),
            ))
            .max(rel((&self.h - &other.h).norm(), self.h.norm()))
            .max(rel((self.mu - other.mu).abs(), self.mu.abs()))
            .max(rel((&self.mu_a - &other.mu_a).norm(), self.mu_a.norm()))
            .max(rel((self.nu - other.nu).abs(), self.nu.abs()))
            .max(rel((&self.nu_a - &other.nu_a).norm(), self.nu_a.norm()));
        if let (Some(a), Some(b)) = (&self.central, &other.central) {
            worst = worst
                .max(rel((&a.central - &b.central).norm(), a.central.norm()))
                .max(rel(
                    (&a.central_inv - &b.central_inv).norm(),
                    a.central_inv.norm(),
                ))
                .max(rel((&a.m_a - &b.m_a).norm(), a.m_a.norm()))
                .max(rel((&a.n_a - &b.n_a).norm(), a.n_a.norm()))
                .max(rel((&a.p_a - &b.p_a).norm(), a.p_a.norm()))
                .max(rel((&a.q_a - &b.q_a).norm(), a.q_a.norm()));
        }
        if let (Some(a), Some(b)) = (&self.transversal, &other.transversal) {
            worst = worst
                .max(rel((&a.tau_a - &b.tau_a).norm(), a.tau_a.norm()))
                .max(rel((&a.tau_ab - &b.tau_ab).norm(), a.tau_ab.norm()))
                .max(rel((a.tau - b.tau).abs(), a.tau.abs()))
                .max(rel((a.cn_coord - b.cn_coord).abs(), a.cn_coord.abs()));
            for (x, y) in a.foci.iter().zip(b.foci.iter()) {
                worst = worst.max(rel((x - y).norm(), x.norm()));
            }
        }
        worst
    }
}

/// Time derivative of the state under a constant generator.  Each quantity
/// follows its own evolution law; the GL correction uses the convention
/// that covariant lower indices contract the generator from the left.
fn flow_rhs(s: &GaugeState, p: &GaugeParams) -> GaugeState {
    let m = s.dim();
    let k = &p.pi_ab;
    let kt = k.transpose();
    let w = p.pi11 - p.pi00;
    let g_inv = s
        .g
        .clone()
        .try_inverse()
        .expect("flowed screen metric stays invertible");
    let a_rl = &s.h * &g_inv; // h_a^b, row-lower

    let central = s.central.as_ref().map(|c| {
        let u = &c.central;
        let v = &c.central_inv;
        let u_rl = u.transpose(); // H_a^b as a row-lower matrix
        CentralState {
            central: u * &kt - &kt * u + u * (2.0 * w),
            central_inv: v * &kt - &kt * v - v * (2.0 * w),
            m_a: k * &c.m_a - &c.m_a * p.pi00 + &c.m_a * (2.0 * w) - &u_rl * &p.pi_a0,
            n_a: k * &c.n_a - &c.n_a * p.pi00 + &c.n_a * (3.0 * w) + &u_rl * &p.pi_a1 * s.mu,
            p_a: k * &c.p_a - &c.p_a * p.pi00 - &p.pi_a0,
            q_a: k * &c.q_a - &c.q_a * p.pi00 - &c.q_a * w + &p.pi_a1,
        }
    });

    let sum = p.pi00 + p.pi11;
    let transversal = s.transversal.as_ref().map(|t| TransversalState {
        tau_a: k * &t.tau_a - &t.tau_a * p.pi00,
        tau_ab: k * &t.tau_ab + &t.tau_ab * &kt - &t.tau_ab * (2.0 * p.pi00) - &t.tau_ab * w
            + &s.g * p.pi_n0,
        tau: -t.tau * sum + p.pi_n0,
        cn_coord: -t.cn_coord * sum - p.pi_n0,
        foci: t
            .foci
            .iter()
            .map(|z| -z * sum - Complex::new(p.pi_n0, 0.0))
            .collect(),
    });

    GaugeState {
        g: k * &s.g + &s.g * &kt,
        lambda: k * &s.lambda + &s.lambda * &kt + &s.lambda * w + &s.g * p.pi01,
        lambda_scalar: w * s.lambda_scalar + p.pi01,
        h: k * &s.h + &s.h * &kt + &s.h * w,
        mu: 2.0 * w * s.mu,
        mu_a: k * &s.mu_a - &s.mu_a * p.pi00 + &s.mu_a * w - &a_rl * &p.pi_a0
            + &p.pi_a1 * s.mu,
        nu: 3.0 * w * s.nu,
        nu_a: k * &s.nu_a - &s.nu_a * p.pi00 + &s.nu_a * (2.0 * w) - &p.pi_a0 * (2.0 * s.mu)
            + (&a_rl * (2.0 * s.mu) + DMatrix::identity(m, m) * s.nu) * &p.pi_a1,
        central,
        transversal,
    }
}

/// Per-law consistency residuals of a flowed state: each derived quantity,
/// evolved by its own law, is compared against its recomputation from the
/// flowed lower-order data.  Small residuals certify that the evolution
/// laws are mutually consistent.
#[derive(Debug, Clone)]
pub struct FlowResiduals {
    /// Flowed `h` versus `λ_ab − λ̄ g_ab`.
    pub h_vs_lambda: f64,
    /// Flowed `μ` versus the trace of `(g⁻¹h)²` over `m`.
    pub mu_vs_h: f64,
    /// Flowed `H` versus its formula in flowed `h, μ, ν` (when present).
    pub central_vs_h: Option<f64>,
    /// `H·H̃ = I` along the flow.
    pub inverse_consistency: Option<f64>,
    /// Flowed `M, N` versus their formulas in flowed third-order data.
    pub mn_vs_invariants: Option<f64>,
    /// Flowed `P, Q` versus `H̃`-contraction of flowed `M, N`.
    pub pq_vs_mn: Option<f64>,
    /// Flowed `τ` versus the `g`-mean of flowed `τ_ab`.
    pub tau_vs_matrix: Option<f64>,
    /// The invariant-point coordinate tracks `−τ`.
    pub cn_vs_tau: Option<f64>,
    /// Flowed congruence foci versus the spectrum of flowed `g⁻¹τ_ab`.
    pub foci_vs_matrix: Option<f64>,
}

impl FlowResiduals {
    pub fn max_residual(&self) -> f64 {
        [
            Some(self.h_vs_lambda),
            Some(self.mu_vs_h),
            self.central_vs_h,
            self.inverse_consistency,
            self.mn_vs_invariants,
            self.pq_vs_mn,
            self.tau_vs_matrix,
            self.cn_vs_tau,
            self.foci_vs_matrix,
        ]
        .iter()
        .flatten()
        .fold(0.0f64, |acc, r| acc.max(*r))
    }
}

fn residuals_of(s: &GaugeState) -> FlowResiduals {
    let m = s.dim();
    let g_inv = s
        .g
        .clone()
        .try_inverse()
        .expect("flowed screen metric stays invertible");
    let rel = |d: f64, scale: f64| d / scale.max(1.0);

    let h_recomputed = &s.lambda - &s.g * s.lambda_scalar;
    let h_vs_lambda = rel((&s.h - &h_recomputed).norm(), s.h.norm());
    let h_up = &g_inv * &s.h;
    let mu_recomputed = (&h_up * &h_up).trace() / m as f64;
    let mu_vs_h = rel((s.mu - mu_recomputed).abs(), s.mu.abs());

    let mut central_vs_h = None;
    let mut inverse_consistency = None;
    let mut mn_vs_invariants = None;
    let mut pq_vs_mn = None;
    if let Some(c) = &s.central {
        let expected =
            &h_up * &h_up + &h_up * (s.nu / (2.0 * s.mu)) - DMatrix::identity(m, m) * s.mu;
        central_vs_h = Some(rel((&c.central - &expected).norm(), c.central.norm()));
        inverse_consistency = Some(
            (&c.central * &c.central_inv - DMatrix::identity(m, m)).norm() / (m as f64).sqrt(),
        );
        let a_rl = &s.h * &g_inv;
        let m_expected = &a_rl * &s.mu_a + &s.mu_a * (s.nu / (2.0 * s.mu)) - &s.nu_a * 0.5;
        let n_expected = &a_rl * &s.nu_a * 0.5 - &s.mu_a * s.mu;
        mn_vs_invariants = Some(
            rel((&c.m_a - &m_expected).norm(), c.m_a.norm())
                .max(rel((&c.n_a - &n_expected).norm(), c.n_a.norm())),
        );
        let p_expected = c.central_inv.transpose() * &c.m_a;
        let q_expected = c.central_inv.transpose() * &c.n_a / s.mu;
        pq_vs_mn = Some(
            rel((&c.p_a - &p_expected).norm(), c.p_a.norm())
                .max(rel((&c.q_a - &q_expected).norm(), c.q_a.norm())),
        );
    }

    let mut tau_vs_matrix = None;
    let mut cn_vs_tau = None;
    let mut foci_vs_matrix = None;
    if let Some(t) = &s.transversal {
        let tau_recomputed = (&g_inv * &t.tau_ab).trace() / m as f64;
        tau_vs_matrix = Some(rel((t.tau - tau_recomputed).abs(), t.tau.abs()));
        cn_vs_tau = Some(rel((t.cn_coord + t.tau).abs(), t.tau.abs()));
        let mixed = &g_inv * &t.tau_ab;
        let mut spectrum: Vec<Complex<f64>> = mixed
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex::new(-z.re, -z.im))
            .collect();
        spectrum.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        let mut flowed = t.foci.clone();
        flowed.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        let worst = spectrum
            .iter()
            .zip(flowed.iter())
            .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
            .fold(0.0f64, f64::max);
        foci_vs_matrix = Some(worst);
    }

    FlowResiduals {
        h_vs_lambda,
        mu_vs_h,
        central_vs_h,
        inverse_consistency,
        mn_vs_invariants,
        pq_vs_mn,
        tau_vs_matrix,
        cn_vs_tau,
        foci_vs_matrix,
    }
}

/// A flowed state together with its per-law consistency residuals.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub state: GaugeState,
    pub residuals: FlowResiduals,
}

/// Integrates the evolution laws from an explicit initial state with the
/// classical fixed-step fourth-order scheme.
pub fn integrate_state(
    state: &GaugeState,
    params: &GaugeParams,
    t: f64,
    steps: usize,
) -> Result<FlowResult> {
    params.check_dim(state.dim())?;
    if steps < 100 {
        return Err(Error::InvalidArgument(
            "gauge flow needs at least 100 steps".to_string(),
        ));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument("non-finite flow time".to_string()));
    }
    let dt = t / steps as f64;
    if t != 0.0 && dt == 0.0 {
        return Err(Error::InvalidArgument("flow step underflow".to_string()));
    }
    let mut s = state.clone();
    for _ in 0..steps {
        let k1 = flow_rhs(&s, params);
        let k2 = flow_rhs(&s.lin(dt / 2.0, &k1), params);
        let k3 = flow_rhs(&s.lin(dt / 2.0, &k2), params);
        let k4 = flow_rhs(&s.lin(dt, &k3), params);
        let mut inc = k1.lin(2.0, &k2);
        inc = inc.lin(2.0, &k3);
        inc = inc.lin(1.0, &k4);
        s = s.lin(dt / 6.0, &inc);
    }
    let residuals = residuals_of(&s);
    Ok(FlowResult { state: s, residuals })
}

/// Flows every quantity attached to the jet for time `t` and reports the
/// evolved state with its per-law residuals.
pub fn integrate_gauge_flow(
    jet: &HypersurfaceJet,
    params: &GaugeParams,
    t: f64,
    steps: usize,
) -> Result<FlowResult> {
    let tols = Tolerances::default();
    integrate_state(&GaugeState::from_jet(jet, &tols), params, t, steps)
}

/// Projective invariance of the ruling foci under the frame normalizations.
///
/// The geometric singular points `F_a = A₁ − s_a A₀` must not move when only
/// `A₀, A₁` are renormalized.  The flow changes the frame by
/// `A₀(t) = c₀₀ A₀`, `A₁(t) = c₁₀ A₀ + c₁₁ A₁` (closed-form exponentials)
/// and the foci coordinates by the pencil of the flowed `(g, λ)`; the
/// returned residual is the worst projective misalignment
/// `|c₁₀ − s_a(t) c₀₀ + s_a(0) c₁₁|` over the foci, normalized by the frame
/// coefficients.
pub fn check_focus_invariance(
    jet: &HypersurfaceJet,
    params: &GaugeParams,
    t: f64,
) -> Result<f64> {
    if !params.moves_only_ruling_frame() {
        return Err(Error::InvalidArgument(
            "focus invariance probes only the ruling-frame normalizations".to_string(),
        ));
    }
    let start = singular_values_sorted(&jet.g, &jet.lambda)?;
    let flow = integrate_gauge_flow(jet, params, t, 400)?;
    let g_flowed = ScreenMetric::new(flow.state.g.clone())?;
    let lambda_flowed = SymMatrix::symmetrized(&flow.state.lambda);
    let end = singular_values_sorted(&g_flowed, &lambda_flowed)?;

    // Frame coefficients: c₀₀' = π⁰₀c₀₀, c₁₁' = π¹₁c₁₁,
    // c₁₀' = π¹₁c₁₀ + π⁰₁c₀₀ — a triangular system with exact solution.
    let c00 = (params.pi00 * t).exp();
    let c11 = (params.pi11 * t).exp();
    let c10 = if (params.pi00 - params.pi11).abs() > 1e-14 {
        params.pi01 * (c00 - c11) / (params.pi00 - params.pi11)
    } else {
        params.pi01 * t * c00
    };

    let mut worst = 0.0f64;
    for (s0, st) in start.iter().zip(end.iter()) {
        let residual = (c10 - st * c00 + s0 * c11).abs()
            / ((1.0 + s0.abs()) * (c00.abs() + c11.abs()));
        worst = worst.max(residual);
    }
    Ok(worst)
}

fn singular_values_sorted(g: &ScreenMetric, lambda: &SymMatrix) -> Result<Vec<f64>> {
    Ok(pencil_eigen(g, lambda)?.values)
}

/// Measures the scaling weight of a named quantity under the rescaling
/// generator `π¹₁` (with the base-point scale frozen, `π⁰₀ = 0`): the flow
/// is sampled along `[0, t]` and the exponent recovered by a log-linear
/// least-squares fit, normalized by `π¹₁`.
///
/// Recognized names: `mu`, `nu`, `h_ab`, `central` (alias `H`),
/// `central_inverse` (alias `H_tilde`), `tau`, `tau_a`, `tau_ab`.
pub fn check_weight(
    quantity: &str,
    jet: &HypersurfaceJet,
    params: &GaugeParams,
    t: f64,
) -> Result<f64> {
    if !params.moves_only_ruling_frame() || params.pi00 != 0.0 || params.pi01 != 0.0 {
        return Err(Error::InvalidArgument(
            "weight measurement probes the pure ruling-rescaling generator (π¹₁ only)"
                .to_string(),
        ));
    }
    if params.pi11 == 0.0 {
        return Err(Error::InvalidArgument(
            "weight measurement needs a nonzero rescaling rate".to_string(),
        ));
    }
    let tols = Tolerances::default();
    let state0 = GaugeState::from_jet(jet, &tols);
    let extract = |s: &GaugeState| -> Result<f64> {
        let v = match quantity {
            "mu" => s.mu.abs(),
            "nu" => s.nu.abs(),
            "h_ab" => s.h.norm(),
            "central" | "H" => {
                s.central
                    .as_ref()
                    .ok_or(Error::SpecialType)?
                    .central
                    .norm()
            }
            "central_inverse" | "H_tilde" => {
                s.central
                    .as_ref()
                    .ok_or(Error::SpecialType)?
                    .central_inv
                    .norm()
            }
            "tau" => s.transversal.as_ref().ok_or(Error::SpecialType)?.tau.abs(),
            "tau_a" => s.transversal.as_ref().ok_or(Error::SpecialType)?.tau_a.norm(),
            "tau_ab" => s.transversal.as_ref().ok_or(Error::SpecialType)?.tau_ab.norm(),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown weight quantity `{other}`"
                )))
            }
        };
        Ok(v)
    };

    let samples = 12;
    let mut xs = Vec::with_capacity(samples + 1);
    let mut ys = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let tk = t * k as f64 / samples as f64;
        let value = if k == 0 {
            extract(&state0)?
        } else {
            extract(&integrate_state(&state0, params, tk, 200)?.state)?
        };
        if value < 1e-300 {
            // identically-zero quantities carry weight 0 by convention
            return Ok(0.0);
        }
        xs.push(tk);
        ys.push(value.ln());
    }
    // least-squares slope
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(num / den / params.pi11)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn diag_jet() -> HypersurfaceJet {
        let g = ScreenMetric::identity(3);
        let lambda = SymMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        HypersurfaceJet::from_second_order(5, g, lambda).unwrap()
    }

    /// Harmonic jet with every layer present: solvable forms, nonzero
    /// covectors and transversal data.
    fn rich_jet() -> HypersurfaceJet {
        let g = ScreenMetric::identity(2);
        let lambda = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let (mut jet, _) = crate::jet::normalize_to_harmonic_pole(
            &HypersurfaceJet::from_second_order(4, g, lambda).unwrap(),
        );
        jet.nu = 1.0;
        jet.nu_a = DVector::from_vec(vec![0.3, -0.1]);
        jet.lambda3.set(0, 0, 0, 0.4);
        jet.lambda3.set(0, 1, 1, -0.2);
        jet.nu_ab = SymMatrix::from_fn(2, |a, b| 0.5 * (a + b) as f64 + 1.0);
        jet.rho_a = DVector::from_vec(vec![1.0, 0.2]);
        jet.rho_ab = SymMatrix::from_diagonal(&[0.7, -0.3]);
        jet
    }

    #[test]
    fn zero_params_is_identity() {
        let jet = rich_jet();
        let state0 = GaugeState::from_jet(&jet, &Tolerances::default());
        assert!(state0.central.is_some() && state0.transversal.is_some());
        let flow = integrate_gauge_flow(&jet, &GaugeParams::zero(2), 1.0, 100).unwrap();
        assert!(state0.distance(&flow.state) < 1e-14);
        assert!(flow.residuals.max_residual() < 1e-12);
    }

    #[test]
    fn ruling_slide_shifts_pole_linearly() {
        // π⁰₁ = p: λ̄(t) = λ̄(0) + p·t and λ_ab(t) = λ_ab(0) + p·t·g;
        // h is untouched.
        let jet = diag_jet();
        let mut params = GaugeParams::zero(3);
        params.pi01 = 1.0;
        let flow = integrate_gauge_flow(&jet, &params, 0.5, 100).unwrap();
        assert_abs_diff_eq!(flow.state.lambda_scalar, 7.0 / 3.0 + 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(flow.state.lambda[(0, 0)], 1.5, epsilon = 1e-10);
        let h0 = GaugeState::from_jet(&jet, &Tolerances::default()).h;
        assert!((&flow.state.h - &h0).norm() < 1e-10);
        assert!(flow.residuals.h_vs_lambda < 1e-10);
    }

    #[test]
    fn scalar_weights_exponential() {
        // π⁰₀ = 0.2, π¹₁ = 0.5: μ(1) = μ(0)·e^{0.6}, ν(1) = ν(0)·e^{0.9}.
        let jet = rich_jet();
        let params = GaugeParams::scaling(2, 0.2, 0.5);
        let flow = integrate_gauge_flow(&jet, &params, 1.0, 200).unwrap();
        let s0 = GaugeState::from_jet(&jet, &Tolerances::default());
        assert_abs_diff_eq!(flow.state.mu / s0.mu, 0.6f64.exp(), epsilon = 1e-8);
        assert_abs_diff_eq!(flow.state.nu / s0.nu, 0.9f64.exp(), epsilon = 1e-8);
    }

    #[test]
    fn generic_flow_keeps_laws_consistent() {
        let jet = rich_jet();
        let mut params = GaugeParams::zero(2);
        params.pi00 = 0.15;
        params.pi11 = -0.2;
        params.pi01 = 0.0; // harmonic reduction fixes the ruling point
        params.pi_ab = dmatrix![0.1, -0.3; 0.2, 0.05];
        params.pi_a0 = DVector::from_vec(vec![0.2, -0.1]);
        params.pi_a1 = DVector::from_vec(vec![-0.15, 0.25]);
        params.pi_n0 = 0.3;
        let flow = integrate_gauge_flow(&jet, &params, 0.7, 400).unwrap();
        let r = &flow.residuals;
        assert!(r.max_residual() < 1e-9, "residuals {:?}", r);
    }

    #[test]
    fn flow_composition_is_a_group() {
        let jet = rich_jet();
        let mut params = GaugeParams::zero(2);
        params.pi00 = 0.1;
        params.pi11 = -0.15;
        params.pi_ab = dmatrix![0.05, 0.2; -0.1, 0.12];
        params.pi_a0 = DVector::from_vec(vec![0.3, 0.1]);
        params.pi_n0 = -0.2;
        let s0 = GaugeState::from_jet(&jet, &Tolerances::default());
        let first = integrate_state(&s0, &params, 0.4, 200).unwrap();
        let chained = integrate_state(&first.state, &params, 0.3, 200).unwrap();
        let direct = integrate_state(&s0, &params, 0.7, 200).unwrap();
        assert!(chained.state.distance(&direct.state) < 1e-9);
    }

    #[test]
    fn focus_invariance_under_slide_and_scalings() {
        let jet = diag_jet();
        let mut params = GaugeParams::zero(3);
        params.pi01 = 1.0;
        let residual = check_focus_invariance(&jet, &params, 0.5).unwrap();
        assert!(residual < 1e-8, "{residual}");

        let params = GaugeParams::scaling(3, 0.4, -0.3);
        let residual = check_focus_invariance(&jet, &params, 0.8).unwrap();
        assert!(residual < 1e-8, "{residual}");

        // umbilical jet: the single focus stays invariant
        let g = ScreenMetric::identity(2);
        let lambda = SymMatrix::from_diagonal(&[2.0, 2.0]);
        let umb = HypersurfaceJet::from_second_order(4, g, lambda).unwrap();
        let mut params = GaugeParams::zero(2);
        params.pi01 = 0.7;
        let residual = check_focus_invariance(&umb, &params, 1.0).unwrap();
        assert!(residual < 1e-8, "{residual}");

        // screen parameters are out of scope for this probe
        let mut params = GaugeParams::zero(3);
        params.pi_a0[0] = 1.0;
        assert!(check_focus_invariance(&jet, &params, 0.1).is_err());
    }

    #[test]
    fn measured_weights_match_laws() {
        let jet = rich_jet();
        let params = GaugeParams::scaling(2, 0.0, 0.4);
        let expect = [
            ("mu", 2.0),
            ("nu", 3.0),
            ("h_ab", 1.0),
            ("central", 2.0),
            ("central_inverse", -2.0),
            ("tau", -1.0),
            ("tau_a", 0.0),
            ("tau_ab", -1.0),
        ];
        for (name, want) in expect {
            let got = check_weight(name, &jet, &params, 0.5).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-6);
        }
        assert!(check_weight("bogus", &jet, &params, 0.5).is_err());
        // π⁰₀ must stay frozen for the probe
        let bad = GaugeParams::scaling(2, 0.1, 0.4);
        assert!(check_weight("mu", &jet, &bad, 0.5).is_err());
    }

    #[test]
    fn step_preconditions_enforced() {
        let jet = diag_jet();
        let params = GaugeParams::zero(3);
        assert!(integrate_gauge_flow(&jet, &params, 1.0, 50).is_err());
        assert!(integrate_gauge_flow(&jet, &params, f64::NAN, 100).is_err());
    }
}

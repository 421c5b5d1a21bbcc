//! One-call analysis of a jet: classification plus every derived
//! invariant, flattened into plain serializable data for batch front-ends.
//!
//! [`analyze`] walks the whole pipeline — focus spectrum, harmonic
//! normalization, invariant scalars, the central affinor, the normalizing
//! linear solve, the invariant transversal point, and the induced
//! connection — stopping early with an explanatory classification when a
//! branch point is hit (umbilical jets, or a degenerate central affinor).
//! Every internal consistency check contributes a named residual, so a
//! report with classification `regular` and small residuals certifies the
//! run end to end.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::connection::{integrability, screen_curvature, screen_torsion, solve_normalizing_forms};
use crate::invariants::{
    fundamental_tensor, h_affinor, invariant_point, mu_invariants, normalizing_objects,
    pole_regularity, singular_points, umbilical_report,
};
use crate::jet::{normalize_to_harmonic_pole, HypersurfaceJet};
use crate::tensor::{Array3, Array4};
use crate::{Error, Result, Tolerances};

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn cube_of(t: &Array3) -> Vec<Vec<Vec<f64>>> {
    let m = t.dim();
    (0..m)
        .map(|a| {
            (0..m)
                .map(|b| (0..m).map(|c| t.get(a, b, c)).collect())
                .collect()
        })
        .collect()
}

fn quad_of(t: &Array4) -> Vec<Vec<Vec<Vec<f64>>>> {
    let m = t.dim();
    (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    (0..m)
                        .map(|c| (0..m).map(|d| t.get(a, b, c, d)).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Outcome of the pipeline for one jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Full pipeline ran: nonzero trace-free part and invertible central
    /// affinor.
    Regular,
    /// Trace-free second-order part vanishes; the focus collapses to a
    /// single point and the reduction stops at the second order.
    Umbilical,
    /// Central affinor is degenerate; the frame normalization has no
    /// unique solution.
    SpecialType,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Regular => "regular",
            Classification::Umbilical => "umbilical",
            Classification::SpecialType => "special-type",
        };
        f.write_str(s)
    }
}

/// Focus spectrum of the ruling.
#[derive(Debug, Clone, Serialize)]
pub struct FociSection {
    /// All focus coordinates, ascending, with multiplicity.
    pub s: Vec<f64>,
    /// Distinct focus coordinates after clustering.
    pub cluster_values: Vec<f64>,
    /// Multiplicities of the clustered coordinates (sum to `n − 2`).
    pub multiplicities: Vec<usize>,
    /// Arithmetic mean of the foci.
    pub lambda_mean: f64,
    /// Coordinate of the harmonic pole on the ruling (equals the mean).
    pub pole_coordinate: f64,
    /// Whether the pole avoids every focus (nonzero trace-free
    /// determinant).
    pub regular_pole: bool,
    /// Scale-free determinant of the trace-free part.
    pub relative_det: f64,
}

/// Extra data reported on the umbilical branch.
#[derive(Debug, Clone, Serialize)]
pub struct UmbilicalSection {
    /// Covector controlling the motion of the single focus, computed from
    /// the curvature slice.
    pub mu_a: Vec<f64>,
    /// Whether the supplied curvature slice vanishes.
    pub conformally_flat: bool,
    /// Whether the focus is stationary (`mu_a = 0`).
    pub pole_fixed: bool,
}

/// Frame shifts `P, Q` and their sources `M, N`.
#[derive(Debug, Clone, Serialize)]
pub struct FrameShiftSection {
    pub m_a: Vec<f64>,
    pub n_a: Vec<f64>,
    pub p_a: Vec<f64>,
    pub q_a: Vec<f64>,
}

/// Solved coefficients of the normalizing forms.
#[derive(Debug, Clone, Serialize)]
pub struct FormsSection {
    pub sigma_a: Vec<f64>,
    pub tau_a: Vec<f64>,
    pub sigma_ab: Vec<Vec<f64>>,
    pub tau_ab: Vec<Vec<f64>>,
    pub residual: f64,
}

/// Invariant transversal point and the congruence focus spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct TransversalSection {
    pub tau: f64,
    pub cn_coordinate: f64,
    /// Complex focus coordinates of the transversal congruence, as
    /// `[re, im]` pairs.
    pub congruence_foci: Vec<[f64; 2]>,
    /// Whether `tau_ab` was symmetric (all congruence foci real).
    pub symmetric_branch: bool,
}

/// Everything derived between the harmonic normalization and the
/// connection.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizationSection {
    pub h: Vec<Vec<f64>>,
    pub h_mixed: Vec<Vec<f64>>,
    pub mu: f64,
    pub mu_a: Vec<f64>,
    pub central: Vec<Vec<f64>>,
    pub central_relative_det: f64,
    pub central_inverse: Option<Vec<Vec<f64>>>,
    pub frame_shifts: Option<FrameShiftSection>,
    pub forms: Option<FormsSection>,
    pub transversal: Option<TransversalSection>,
}

/// Torsion and curvature of the induced connection, with integrability
/// verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionSection {
    pub torsion_ruling_a1: Vec<f64>,
    pub torsion_ruling_ab: Vec<Vec<f64>>,
    pub torsion_screen_1b: Vec<Vec<f64>>,
    pub curvature_ruling_1a: Vec<f64>,
    pub curvature_ruling_ab: Vec<Vec<f64>>,
    pub curvature_mixed_1c: Vec<Vec<Vec<f64>>>,
    pub curvature_mixed_ce: Vec<Vec<Vec<Vec<f64>>>>,
    pub screen_integrable: bool,
    pub conjugate_integrable: bool,
}

/// Full analysis of one jet.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub classification: Classification,
    /// Harmonic-pole shift applied before derived quantities were
    /// computed.
    pub harmonic_shift: f64,
    pub foci: FociSection,
    pub umbilical: Option<UmbilicalSection>,
    pub normalization: Option<NormalizationSection>,
    pub connection: Option<ConnectionSection>,
    /// Every internal consistency residual, keyed by check name.
    pub residuals: BTreeMap<String, f64>,
}

/// Runs the whole pipeline on one jet.
///
/// Inadmissible jets are rejected with a validation error listing every
/// violated invariant.  Umbilical jets and degenerate central affinors are
/// not errors: they produce a report with the corresponding
/// classification and as much derived data as that branch allows.
pub fn analyze(jet: &HypersurfaceJet, tols: &Tolerances) -> Result<AnalysisReport> {
    let validation = jet.validate(tols);
    if !validation.is_admissible() {
        return Err(Error::Validation(validation));
    }

    let m = jet.m();
    let mut residuals = BTreeMap::new();

    let foci_report = singular_points(jet, tols)?;
    let pole = pole_regularity(jet, tols);
    residuals.insert("pencil-eigenvalues".to_string(), foci_report.residual);
    let vieta = (foci_report.s.iter().sum::<f64>() - m as f64 * foci_report.lambda_mean).abs()
        / (1.0 + foci_report.lambda_mean.abs());
    residuals.insert("foci-mean".to_string(), vieta);
    let foci = FociSection {
        s: foci_report.s.clone(),
        cluster_values: foci_report.clusters.iter().map(|c| c.0).collect(),
        multiplicities: foci_report.clusters.iter().map(|c| c.1).collect(),
        lambda_mean: foci_report.lambda_mean,
        pole_coordinate: foci_report.lambda_mean,
        regular_pole: pole.regular,
        relative_det: pole.relative_det,
    };

    let (norm, shift) = normalize_to_harmonic_pole(jet);
    let (h_cov, h_mixed) = fundamental_tensor(&norm);
    let h_scale = jet.lambda.to_dense().norm().max(1.0);
    residuals.insert(
        "h-trace".to_string(),
        norm.g.trace(&h_cov).abs() / h_scale,
    );

    if h_cov.norm() <= tols.umbilical * h_scale {
        let umb = umbilical_report(&norm, tols);
        return Ok(AnalysisReport {
            n: jet.n,
            classification: Classification::Umbilical,
            harmonic_shift: shift,
            foci,
            umbilical: Some(UmbilicalSection {
                mu_a: vec_of(&umb.mu_a),
                conformally_flat: umb.conformally_flat,
                pole_fixed: umb.pole_fixed,
            }),
            normalization: None,
            connection: None,
            residuals,
        });
    }

    let (mu, mu_a) = mu_invariants(&norm);
    let central = h_affinor(&norm, mu, tols)?;
    let central_scale = central.mixed.norm().max(1.0);
    residuals.insert(
        "central-trace".to_string(),
        central.mixed.trace().abs() / central_scale,
    );

    let mut normalization = NormalizationSection {
        h: rows_of(&h_cov.to_dense()),
        h_mixed: rows_of(&h_mixed),
        mu,
        mu_a: vec_of(&mu_a),
        central: rows_of(&central.mixed),
        central_relative_det: central.relative_det,
        central_inverse: central.inverse.as_ref().map(rows_of),
        frame_shifts: None,
        forms: None,
        transversal: None,
    };

    if central.inverse.is_none() {
        return Ok(AnalysisReport {
            n: jet.n,
            classification: Classification::SpecialType,
            harmonic_shift: shift,
            foci,
            umbilical: None,
            normalization: Some(normalization),
            connection: None,
            residuals,
        });
    }
    let inverse = central.inverse.as_ref().unwrap();
    residuals.insert(
        "central-inverse".to_string(),
        (&central.mixed * inverse - DMatrix::identity(m, m)).norm(),
    );

    let shifts = normalizing_objects(&norm, mu, &mu_a, &central)?;
    normalization.frame_shifts = Some(FrameShiftSection {
        m_a: vec_of(&shifts.m_a),
        n_a: vec_of(&shifts.n_a),
        p_a: vec_of(&shifts.p_a),
        q_a: vec_of(&shifts.q_a),
    });

    let forms = solve_normalizing_forms(&norm, tols)?;
    residuals.insert("forms-back-substitution".to_string(), forms.residual);
    normalization.forms = Some(FormsSection {
        sigma_a: vec_of(&forms.sigma_a),
        tau_a: vec_of(&forms.tau_a),
        sigma_ab: rows_of(&forms.sigma_ab),
        tau_ab: rows_of(&forms.tau_ab),
        residual: forms.residual,
    });

    let point = invariant_point(&norm.g, &forms.tau_ab, tols)?;
    let foci_sum: f64 = point.congruence_foci.iter().map(|z| z.re).sum();
    let foci_sum_im: f64 = point.congruence_foci.iter().map(|z| z.im).sum();
    residuals.insert(
        "congruence-foci-sum".to_string(),
        ((foci_sum + m as f64 * point.tau).powi(2) + foci_sum_im.powi(2)).sqrt()
            / (1.0 + point.tau.abs()),
    );
    normalization.transversal = Some(TransversalSection {
        tau: point.tau,
        cn_coordinate: point.cn_coefficient,
        congruence_foci: point.congruence_foci.iter().map(|z| [z.re, z.im]).collect(),
        symmetric_branch: point.symmetric_branch,
    });

    let torsion = screen_torsion(&norm, &forms);
    let curvature = screen_curvature(&norm, &forms);
    let integ = integrability(&norm, &forms, tols);
    residuals.insert(
        "integrability-identity".to_string(),
        integ.identity_residual,
    );
    let connection = ConnectionSection {
        torsion_ruling_a1: vec_of(&torsion.ruling_a1),
        torsion_ruling_ab: rows_of(&torsion.ruling_ab),
        torsion_screen_1b: rows_of(&torsion.screen_1b),
        curvature_ruling_1a: vec_of(&curvature.ruling_1a),
        curvature_ruling_ab: rows_of(&curvature.ruling_ab),
        curvature_mixed_1c: cube_of(&curvature.mixed_1c),
        curvature_mixed_ce: quad_of(&curvature.mixed_ce),
        screen_integrable: integ.screen_integrable,
        conjugate_integrable: integ.conjugate_integrable,
    };

    Ok(AnalysisReport {
        n: jet.n,
        classification: Classification::Regular,
        harmonic_shift: shift,
        foci,
        umbilical: None,
        normalization: Some(normalization),
        connection: Some(connection),
        residuals,
    })
}

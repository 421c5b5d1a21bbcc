//! Jet data of a lightlike hypersurface and its on-disk format.
//!
//! A [`HypersurfaceJet`] bundles everything the normalization pipeline
//! consumes at one point of the hypersurface: the screen metric `g_ab`, the
//! second-order object `λ_ab`, the third-order prolongation `λ_abc`, the
//! fourth-order scalars and covectors `ν, ν_a, ν_ab, ρ, ρ_a, ρ_ab`, optional
//! fifth-order data `φ₁, φ_a`, and the slice of ambient conformal curvature
//! components that enters the structure equations.
//!
//! Files use the `ljet-1` schema: a single JSON object with an explicit
//! `"schema": "ljet-1"` tag, row-major nested arrays, and no unknown keys.
//! Parsing, schema checking and admissibility validation are distinct
//! failure modes and surface as distinct error variants.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::tensor::{matrix_from_rows, Array3, Array4, ScreenMetric, SymCubic, SymMatrix};
use crate::{Error, Result, Tolerances};

/// The ambient conformal curvature components that the structure equations
/// actually consume, stored exactly as supplied.
///
/// `cn_ab1` is symmetric with vanishing `g`-trace; `c1_1ab` and `c_1ab` are
/// kept as general matrices and validated for shape only.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSlice {
    pub c1_11a: DVector<f64>,
    pub c1_1ab: DMatrix<f64>,
    pub cn_ab1: SymMatrix,
    pub ca_b1c: Array3,
    pub ca_bce: Array4,
    pub c_11a: DVector<f64>,
    pub c_1ab: DMatrix<f64>,
}

impl CurvatureSlice {
    /// All-zero slice (conformally flat ambient space).
    pub fn flat(m: usize) -> Self {
        CurvatureSlice {
            c1_11a: DVector::zeros(m),
            c1_1ab: DMatrix::zeros(m, m),
            cn_ab1: SymMatrix::zeros(m),
            ca_b1c: Array3::zeros(m),
            ca_bce: Array4::zeros(m),
            c_11a: DVector::zeros(m),
            c_1ab: DMatrix::zeros(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.c1_11a.len()
    }

    /// Whether every stored component vanishes.
    pub fn is_flat(&self) -> bool {
        self.c1_11a.norm() == 0.0
            && self.c1_1ab.norm() == 0.0
            && self.cn_ab1.norm() == 0.0
            && self.ca_b1c.norm() == 0.0
            && self.ca_bce.norm() == 0.0
            && self.c_11a.norm() == 0.0
            && self.c_1ab.norm() == 0.0
    }

    /// The trace `g^{ab}·cn_ab1`, required to vanish for admissible slices.
    pub fn cn_trace(&self, g: &ScreenMetric) -> f64 {
        g.trace(&self.cn_ab1)
    }
}

/// One admissibility violation: which invariant failed, where, how badly.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub invariant: String,
    pub location: String,
    pub magnitude: f64,
}

/// Outcome of validation; empty means the jet is admissible.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, invariant: &str, location: String, magnitude: f64) {
        self.violations.push(Violation {
            invariant: invariant.to_string(),
            location,
            magnitude,
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "admissible");
        }
        let mut first = true;
        for v in &self.violations {
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            write!(f, "{} at {} (magnitude {:.3e})", v.invariant, v.location, v.magnitude)?;
        }
        Ok(())
    }
}

/// Full jet of a lightlike hypersurface at a point, in a frame adapted to the
/// isotropic ruling.  `n ≥ 4` is the hypersurface's ambient dimension; all
/// screen objects have dimension `m = n − 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersurfaceJet {
    pub n: usize,
    pub g: ScreenMetric,
    /// Second-order object `λ_ab`; becomes trace-free once the harmonic pole
    /// is subtracted.
    pub lambda: SymMatrix,
    /// Third-order prolongation `λ_abc`, fully symmetric.
    pub lambda3: SymCubic,
    pub curvature: CurvatureSlice,
    pub nu: f64,
    pub nu_a: DVector<f64>,
    pub nu_ab: SymMatrix,
    pub rho: f64,
    pub rho_a: DVector<f64>,
    pub rho_ab: SymMatrix,
    /// Optional fifth-order data; both present or both absent.
    pub phi1: Option<f64>,
    pub phi_a: Option<DVector<f64>>,
    /// Set once `λ_ab` has been re-centered on the harmonic pole.
    pub harmonic_normalized: bool,
}

impl HypersurfaceJet {
    /// Builds a jet, checking only dimensional consistency; value-level
    /// admissibility is the job of [`HypersurfaceJet::validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        g: ScreenMetric,
        lambda: SymMatrix,
        lambda3: SymCubic,
        curvature: CurvatureSlice,
        nu: f64,
        nu_a: DVector<f64>,
        nu_ab: SymMatrix,
        rho: f64,
        rho_a: DVector<f64>,
        rho_ab: SymMatrix,
    ) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!(
                "hypersurface dimension n must be at least 4, got {n}"
            )));
        }
        let m = n - 2;
        let dims = [
            ("g", g.dim()),
            ("lambda", lambda.dim()),
            ("lambda3", lambda3.dim()),
            ("curvature", curvature.dim()),
            ("nu_a", nu_a.len()),
            ("nu_ab", nu_ab.dim()),
            ("rho_a", rho_a.len()),
            ("rho_ab", rho_ab.dim()),
        ];
        for (what, found) in dims {
            if found != m {
                return Err(Error::Dimension {
                    what: match what {
                        "g" => "jet metric",
                        "lambda" => "jet lambda",
                        "lambda3" => "jet lambda3",
                        "curvature" => "jet curvature slice",
                        "nu_a" => "jet nu_a",
                        "nu_ab" => "jet nu_ab",
                        "rho_a" => "jet rho_a",
                        _ => "jet rho_ab",
                    },
                    expected: m,
                    found,
                });
            }
        }
        Ok(HypersurfaceJet {
            n,
            g,
            lambda,
            lambda3,
            curvature,
            nu,
            nu_a,
            nu_ab,
            rho,
            rho_a,
            rho_ab,
            phi1: None,
            phi_a: None,
            harmonic_normalized: false,
        })
    }

    /// Convenience for analyses that only need `g` and `λ_ab`: all higher
    /// data is zero-filled.
    pub fn from_second_order(n: usize, g: ScreenMetric, lambda: SymMatrix) -> Result<Self> {
        let m = n - 2;
        HypersurfaceJet::new(
            n,
            g,
            lambda,
            SymCubic::zeros(m),
            CurvatureSlice::flat(m),
            0.0,
            DVector::zeros(m),
            SymMatrix::zeros(m),
            0.0,
            DVector::zeros(m),
            SymMatrix::zeros(m),
        )
    }

    /// Attaches fifth-order data.
    pub fn with_fifth_order(mut self, phi1: f64, phi_a: DVector<f64>) -> Result<Self> {
        if phi_a.len() != self.m() {
            return Err(Error::Dimension {
                what: "jet phi_a",
                expected: self.m(),
                found: phi_a.len(),
            });
        }
        self.phi1 = Some(phi1);
        self.phi_a = Some(phi_a);
        Ok(self)
    }

    /// Screen dimension `m = n − 2`.
    pub fn m(&self) -> usize {
        self.n - 2
    }

    /// Value-level admissibility checks on an already well-shaped jet:
    /// finiteness, the curvature trace condition, fifth-order pairing.
    pub fn validate(&self, tols: &Tolerances) -> ValidationReport {
        fn check_finite(
            report: &mut ValidationReport,
            name: &str,
            values: impl Iterator<Item = f64>,
        ) {
            let mut values = values;
            if let Some(bad) = values.find(|v| !v.is_finite()) {
                report.violations.push(Violation {
                    invariant: "finite values".to_string(),
                    location: name.to_string(),
                    magnitude: if bad.is_nan() { f64::NAN } else { f64::INFINITY },
                });
            }
        }
        let mut report = ValidationReport::default();
        let m = self.m();
        check_finite(&mut report, "g", self.g.matrix().iter().copied());
        check_finite(
            &mut report,
            "lambda",
            (0..m)
                .flat_map(|a| (0..m).map(move |b| (a, b)))
                .map(|(a, b)| self.lambda.get(a, b)),
        );
        check_finite(&mut report, "nu_a", self.nu_a.iter().copied());
        check_finite(&mut report, "rho_a", self.rho_a.iter().copied());
        check_finite(&mut report, "scalars", [self.nu, self.rho].into_iter());

        let slice_scale = self.curvature.cn_ab1.norm().max(1.0);
        let trace = self.curvature.cn_trace(&self.g);
        if trace.abs() > tols.trace * slice_scale {
            report.push("curvature trace condition", "curvature.Cn_ab1".to_string(), trace.abs());
        }
        if self.phi1.is_some() != self.phi_a.is_some() {
            report.push("fifth-order pairing", "phi1/phi_a".to_string(), 1.0);
        }
        report
    }

    /// Metric mean `λ̄ = g^{ab} λ_ab / m`, the coordinate of the harmonic pole.
    pub fn lambda_mean(&self) -> f64 {
        self.g.trace(&self.lambda) / self.m() as f64
    }
}

/// Subtracts the harmonic pole: `λ_ab → λ_ab − λ̄·g_ab`, so the new `λ_ab`
/// is trace-free (it *is* the fundamental tensor `h_ab`), and marks the jet.
/// Returns the jet together with the subtracted mean.  Idempotent: a second
/// application subtracts zero.
pub fn normalize_to_harmonic_pole(jet: &HypersurfaceJet) -> (HypersurfaceJet, f64) {
    let mean = jet.lambda_mean();
    let mut out = jet.clone();
    let g = jet.g.matrix();
    out.lambda = SymMatrix::from_fn(jet.m(), |a, b| jet.lambda.get(a, b) - mean * g[(a, b)]);
    out.harmonic_normalized = true;
    (out, mean)
}

// ---------------------------------------------------------------------------
// On-disk representation (`ljet-1`)
// ---------------------------------------------------------------------------

/// Schema tag every jet file must carry.
pub const SCHEMA: &str = "ljet-1";

/// Raw file mirror of a jet: row-major nested arrays, exact key set.
/// Unknown keys are rejected at parse time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetFile {
    pub schema: String,
    pub n: usize,
    pub g: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub lambda3: Vec<Vec<Vec<f64>>>,
    pub curvature: CurvatureFile,
    pub nu: f64,
    pub nu_a: Vec<f64>,
    pub nu_ab: Vec<Vec<f64>>,
    pub rho: f64,
    pub rho_a: Vec<f64>,
    pub rho_ab: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_a: Option<Vec<f64>>,
    #[serde(default)]
    pub harmonic_normalized: bool,
}

/// Raw curvature block of a jet file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureFile {
    #[serde(rename = "C1_11a")]
    pub c1_11a: Vec<f64>,
    #[serde(rename = "C1_1ab")]
    pub c1_1ab: Vec<Vec<f64>>,
    #[serde(rename = "Cn_ab1")]
    pub cn_ab1: Vec<Vec<f64>>,
    #[serde(rename = "Ca_b1c")]
    pub ca_b1c: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Ca_bce")]
    pub ca_bce: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "C_11a")]
    pub c_11a: Vec<f64>,
    #[serde(rename = "C_1ab")]
    pub c_1ab: Vec<Vec<f64>>,
}

fn shape2(report: &mut ValidationReport, name: &str, rows: &[Vec<f64>], m: usize) -> bool {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        report.push("array shape", name.to_string(), rows.len() as f64);
        return false;
    }
    true
}

fn symmetry2(report: &mut ValidationReport, name: &str, invariant: &str, rows: &[Vec<f64>], tol: f64) {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (a, row) in rows.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            scale = scale.max(v.abs());
            worst = worst.max((v - rows[b][a]).abs());
        }
    }
    if worst > tol * scale.max(1.0) {
        report.push(invariant, name.to_string(), worst);
    }
}

/// Structural validation of a raw jet file: schema tag, shapes, symmetries,
/// positive definiteness, the curvature trace condition, finiteness.
pub fn validate_file(file: &JetFile, tols: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::default();
    if file.schema != SCHEMA {
        report.push("schema tag", format!("schema = {:?}", file.schema), 1.0);
    }
    if file.n < 4 {
        report.push("dimension bound n >= 4", format!("n = {}", file.n), file.n as f64);
        return report;
    }
    let m = file.n - 2;

    fn has_bad(values: impl Iterator<Item = f64>) -> bool {
        let mut values = values;
        values.any(|v| !v.is_finite())
    }
    let mut all_finite = true;
    {
        let mut check = |name: &str, bad: bool| {
            if bad {
                report.push("finite values", name.to_string(), f64::NAN);
                all_finite = false;
            }
        };
        check("g", has_bad(file.g.iter().flatten().copied()));
        check("lambda", has_bad(file.lambda.iter().flatten().copied()));
        check(
            "lambda3",
            has_bad(file.lambda3.iter().flatten().flatten().copied()),
        );
        check(
            "nu/nu_a/nu_ab",
            has_bad(
                [file.nu]
                    .into_iter()
                    .chain(file.nu_a.iter().copied())
                    .chain(file.nu_ab.iter().flatten().copied()),
            ),
        );
        check(
            "rho/rho_a/rho_ab",
            has_bad(
                [file.rho]
                    .into_iter()
                    .chain(file.rho_a.iter().copied())
                    .chain(file.rho_ab.iter().flatten().copied()),
            ),
        );
        check(
            "curvature",
            has_bad(
                file.curvature
                    .c1_11a
                    .iter()
                    .copied()
                    .chain(file.curvature.c1_1ab.iter().flatten().copied())
                    .chain(file.curvature.cn_ab1.iter().flatten().copied())
                    .chain(file.curvature.ca_b1c.iter().flatten().flatten().copied())
                    .chain(
                        file.curvature
                            .ca_bce
                            .iter()
                            .flatten()
                            .flatten()
                            .flatten()
                            .copied(),
                    )
                    .chain(file.curvature.c_11a.iter().copied())
                    .chain(file.curvature.c_1ab.iter().flatten().copied()),
            ),
        );
    }
    if !all_finite {
        return report;
    }

    let g_ok = shape2(&mut report, "g", &file.g, m);
    if g_ok {
        symmetry2(&mut report, "g", "g symmetry", &file.g, tols.symmetry);
    }
    if shape2(&mut report, "lambda", &file.lambda, m) {
        symmetry2(&mut report, "lambda", "lambda symmetry", &file.lambda, tols.symmetry);
    }

    // lambda3: shape m×m×m and full symmetry under index permutations
    if file.lambda3.len() != m
        || file.lambda3.iter().any(|p| p.len() != m || p.iter().any(|r| r.len() != m))
    {
        report.push("array shape", "lambda3".to_string(), file.lambda3.len() as f64);
    } else {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let v = file.lambda3[a][b][c];
                    scale = scale.max(v.abs());
                    for (p, q, r) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        worst = worst.max((v - file.lambda3[p][q][r]).abs());
                    }
                }
            }
        }
        if worst > tols.symmetry * scale.max(1.0) {
            report.push("lambda3 symmetry", "lambda3".to_string(), worst);
        }
    }

    if shape2(&mut report, "nu_ab", &file.nu_ab, m) {
        symmetry2(&mut report, "nu_ab", "nu_ab symmetry", &file.nu_ab, tols.symmetry);
    }
    if shape2(&mut report, "rho_ab", &file.rho_ab, m) {
        symmetry2(&mut report, "rho_ab", "rho_ab symmetry", &file.rho_ab, tols.symmetry);
    }

    let cur = &file.curvature;
    if cur.c1_11a.len() != m {
        report.push("array shape", "curvature.C1_11a".to_string(), cur.c1_11a.len() as f64);
    }
    if cur.c_11a.len() != m {
        report.push("array shape", "curvature.C_11a".to_string(), cur.c_11a.len() as f64);
    }
    // C1_1ab and C_1ab carry no symmetry requirement: shape only.
    shape2(&mut report, "curvature.C1_1ab", &cur.c1_1ab, m);
    shape2(&mut report, "curvature.C_1ab", &cur.c_1ab, m);
    let cn_ok = shape2(&mut report, "curvature.Cn_ab1", &cur.cn_ab1, m);
    if cn_ok {
        symmetry2(&mut report, "curvature.Cn_ab1", "Cn_ab1 symmetry", &cur.cn_ab1, tols.symmetry);
    }
    if cur.ca_b1c.len() != m
        || cur.ca_b1c.iter().any(|p| p.len() != m || p.iter().any(|r| r.len() != m))
    {
        report.push("array shape", "curvature.Ca_b1c".to_string(), cur.ca_b1c.len() as f64);
    }
    if cur.ca_bce.len() != m
        || cur.ca_bce.iter().any(|p| {
            p.len() != m || p.iter().any(|q| q.len() != m || q.iter().any(|r| r.len() != m))
        })
    {
        report.push("array shape", "curvature.Ca_bce".to_string(), cur.ca_bce.len() as f64);
    }
    if file.nu_a.len() != m {
        report.push("array shape", "nu_a".to_string(), file.nu_a.len() as f64);
    }
    if file.rho_a.len() != m {
        report.push("array shape", "rho_a".to_string(), file.rho_a.len() as f64);
    }
    if let Some(phi_a) = &file.phi_a {
        if phi_a.len() != m {
            report.push("array shape", "phi_a".to_string(), phi_a.len() as f64);
        }
    }
    if file.phi1.is_some() != file.phi_a.is_some() {
        report.push("fifth-order pairing", "phi1/phi_a".to_string(), 1.0);
    }

    // Value-level checks that need a usable metric.
    if report.is_admissible() {
        match matrix_from_rows(&file.g, "g").and_then(ScreenMetric::new) {
            Ok(g) => {
                let cn = SymMatrix::from_fn(m, |a, b| 0.5 * (cur.cn_ab1[a][b] + cur.cn_ab1[b][a]));
                let trace = (g.inverse() * cn.to_dense()).trace();
                let scale = cn.norm().max(1.0);
                if trace.abs() > tols.trace * scale {
                    report.push("curvature trace condition", "curvature.Cn_ab1".to_string(), trace.abs());
                }
            }
            Err(_) => {
                report.push("g positive definite", "g".to_string(), f64::NAN);
            }
        }
    }
    report
}

fn vec3_get(v: &[Vec<Vec<f64>>], a: usize, b: usize, c: usize) -> f64 {
    v[a][b][c]
}

/// Converts a validated raw file into a typed jet.  Symmetric blocks are
/// taken from the lower triangle (exact after validation); nothing is
/// silently repaired beyond that.
pub fn file_to_jet(file: &JetFile) -> Result<HypersurfaceJet> {
    let m = file.n - 2;
    let g = ScreenMetric::new(matrix_from_rows(&file.g, "g")?)?;
    let lambda = SymMatrix::from_fn(m, |a, b| file.lambda[a][b]);
    let lambda3 = SymCubic::from_fn(m, |a, b, c| vec3_get(&file.lambda3, a, b, c));
    let cur = &file.curvature;
    let curvature = CurvatureSlice {
        c1_11a: DVector::from_vec(cur.c1_11a.clone()),
        c1_1ab: matrix_from_rows(&cur.c1_1ab, "curvature.C1_1ab")?,
        cn_ab1: SymMatrix::from_fn(m, |a, b| cur.cn_ab1[a][b]),
        ca_b1c: Array3::from_fn(m, |a, b, c| vec3_get(&cur.ca_b1c, a, b, c)),
        ca_bce: Array4::from_fn(m, |a, b, c, e| cur.ca_bce[a][b][c][e]),
        c_11a: DVector::from_vec(cur.c_11a.clone()),
        c_1ab: matrix_from_rows(&cur.c_1ab, "curvature.C_1ab")?,
    };
    let mut jet = HypersurfaceJet::new(
        file.n,
        g,
        lambda,
        lambda3,
        curvature,
        file.nu,
        DVector::from_vec(file.nu_a.clone()),
        SymMatrix::from_fn(m, |a, b| file.nu_ab[a][b]),
        file.rho,
        DVector::from_vec(file.rho_a.clone()),
        SymMatrix::from_fn(m, |a, b| file.rho_ab[a][b]),
    )?;
    if let (Some(p1), Some(pa)) = (file.phi1, &file.phi_a) {
        jet = jet.with_fifth_order(p1, DVector::from_vec(pa.clone()))?;
    }
    jet.harmonic_normalized = file.harmonic_normalized;
    Ok(jet)
}

fn rows_of(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..mat.nrows())
        .map(|a| (0..mat.ncols()).map(|b| mat[(a, b)]).collect())
        .collect()
}

/// Converts a typed jet back into its raw file form.
pub fn jet_to_file(jet: &HypersurfaceJet) -> JetFile {
    let m = jet.m();
    let sym_rows = |s: &SymMatrix| -> Vec<Vec<f64>> {
        (0..m).map(|a| (0..m).map(|b| s.get(a, b)).collect()).collect()
    };
    JetFile {
        schema: SCHEMA.to_string(),
        n: jet.n,
        g: rows_of(jet.g.matrix()),
        lambda: sym_rows(&jet.lambda),
        lambda3: (0..m)
            .map(|a| (0..m).map(|b| (0..m).map(|c| jet.lambda3.get(a, b, c)).collect()).collect())
            .collect(),
        curvature: CurvatureFile {
            c1_11a: jet.curvature.c1_11a.iter().copied().collect(),
            c1_1ab: rows_of(&jet.curvature.c1_1ab),
            cn_ab1: sym_rows(&jet.curvature.cn_ab1),
            ca_b1c: (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| (0..m).map(|c| jet.curvature.ca_b1c.get(a, b, c)).collect())
                        .collect()
                })
                .collect(),
            ca_bce: (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| {
                            (0..m)
                                .map(|c| {
                                    (0..m).map(|e| jet.curvature.ca_bce.get(a, b, c, e)).collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            c_11a: jet.curvature.c_11a.iter().copied().collect(),
            c_1ab: rows_of(&jet.curvature.c_1ab),
        },
        nu: jet.nu,
        nu_a: jet.nu_a.iter().copied().collect(),
        nu_ab: sym_rows(&jet.nu_ab),
        rho: jet.rho,
        rho_a: jet.rho_a.iter().copied().collect(),
        rho_ab: sym_rows(&jet.rho_ab),
        phi1: jet.phi1,
        phi_a: jet.phi_a.as_ref().map(|v| v.iter().copied().collect()),
        harmonic_normalized: jet.harmonic_normalized,
    }
}

/// Parses a jet from `ljet-1` JSON text: malformed JSON is a parse error,
/// wrong structure a schema violation, inadmissible values a validation
/// failure — three distinct error variants.
pub fn parse_jet(text: &str, tols: &Tolerances) -> Result<HypersurfaceJet> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match value.get("schema") {
        Some(serde_json::Value::String(tag)) if tag == SCHEMA => {}
        Some(other) => {
            return Err(Error::Schema(format!(
                "unsupported schema tag {other}, expected \"{SCHEMA}\""
            )))
        }
        None => return Err(Error::Schema(format!("missing \"schema\": \"{SCHEMA}\" tag"))),
    }
    let file: JetFile =
        serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let report = validate_file(&file, tols);
    if !report.is_admissible() {
        return Err(Error::Validation(report));
    }
    file_to_jet(&file)
}

/// Serializes a jet as pretty `ljet-1` JSON.  Floats print in shortest
/// round-trip form, so save → load reproduces every value bit for bit.
pub fn jet_to_string(jet: &HypersurfaceJet) -> String {
    let mut s = serde_json::to_string_pretty(&jet_to_file(jet)).expect("jet serialization");
    s.push('\n');
    s
}

/// Reads and fully validates a jet file from disk.
pub fn load_jet(path: &std::path::Path, tols: &Tolerances) -> Result<HypersurfaceJet> {
    let text = std::fs::read_to_string(path)?;
    parse_jet(&text, tols)
}

/// Writes a jet to disk in `ljet-1` form.
pub fn save_jet(path: &std::path::Path, jet: &HypersurfaceJet) -> Result<()> {
    std::fs::write(path, jet_to_string(jet))?;
    Ok(())
}

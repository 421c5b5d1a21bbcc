//! Ground-truth jet generator: lightlike hypersurfaces in flat Lorentzian
//! space, embedded in the projective quadric model.
//!
//! A point `x` of flat space with one time direction lifts to a null ray of
//! an ambient space two dimensions up, carrying a bilinear form with two
//! negative directions.  Ruled null hypersurfaces (cones over a vertex, or
//! null-normal congruences over a spacelike base surface) admit an exact
//! adapted frame in that model: base point, ruling direction, screen
//! tangents, a complementary null direction, and the point at infinity.
//! Every jet block is then extracted by nested central differencing of the
//! frame field, so the generated jets are independent ground truth for the
//! analytic pipeline — the curvature slice is identically zero.
//!
//! Accuracy per block (documented, not tuned per test): the second-order
//! block is exact to ~1e−9, the third-order block to ~1e−6, and the
//! fourth-order block to ~1e−4.  The dedicated second-order estimator
//! [`lambda_estimate`] uses a plain three-point stencil so its error
//! scales as the square of the step, which the convergence checks verify.

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::invariants::singular_points;
use crate::jet::{CurvatureSlice, HypersurfaceJet};
use crate::tensor::{ScreenMetric, SymCubic, SymMatrix};
use crate::{Error, Result, Tolerances};

/// Default finite-difference step for the second-order block.
pub const DEFAULT_BASE_STEP: f64 = 1e-4;
/// Step for differencing the normalized frame field (connection level).
const STEP_FRAME: f64 = 1e-3;
/// Step for third-order blocks (nested differencing of connection data).
const STEP_THIRD: f64 = 1e-3;
/// Step for fourth-order blocks.
const STEP_FOURTH: f64 = 2e-2;
/// Chart points whose parameter Jacobian loses this much of its largest
/// singular value are treated as singular (vertex or caustic proximity).
const CHART_GAP: f64 = 1e-3;

/// Spacelike base surface of a null-ruled model, living in the spatial
/// hyperplane at time zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseSurface {
    /// Round sphere of the given radius.
    Sphere { radius: f64 },
    /// Ellipsoid with the given semi-axes (one per spatial coordinate).
    Ellipsoid { semi_axes: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Cone of null rays through a fixed vertex (totally umbilical).
    NullCone { vertex: Vec<f64> },
    /// Union of outward null normals over a spacelike base surface.
    NullRuled { base: BaseSurface },
}

/// A concrete flat model: ambient dimension, geometry, and the base
/// finite-difference step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub variant: ModelVariant,
    /// Step for the second-order extraction; deeper blocks use their own
    /// documented steps.
    #[serde(default = "default_step")]
    pub h_fd: f64,
}

fn default_step() -> f64 {
    DEFAULT_BASE_STEP
}

impl ModelSpec {
    pub fn null_cone(n: usize, vertex: Vec<f64>) -> Self {
        ModelSpec {
            n,
            variant: ModelVariant::NullCone { vertex },
            h_fd: DEFAULT_BASE_STEP,
        }
    }

    pub fn null_sphere(n: usize, radius: f64) -> Self {
        ModelSpec {
            n,
            variant: ModelVariant::NullRuled {
                base: BaseSurface::Sphere { radius },
            },
            h_fd: DEFAULT_BASE_STEP,
        }
    }

    /// Ellipsoid-based model; the ambient dimension is one more than the
    /// number of semi-axes.
    pub fn null_ellipsoid(semi_axes: Vec<f64>) -> Self {
        ModelSpec {
            n: semi_axes.len() + 1,
            variant: ModelVariant::NullRuled {
                base: BaseSurface::Ellipsoid { semi_axes },
            },
            h_fd: DEFAULT_BASE_STEP,
        }
    }

    pub fn m(&self) -> usize {
        self.n - 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Dimension {
                what: "model ambient dimension",
                expected: 4,
                found: self.n,
            });
        }
        if !(self.h_fd.is_finite() && self.h_fd > 0.0 && self.h_fd <= 1e-2) {
            return Err(Error::InvalidArgument(
                "finite-difference step must lie in (0, 1e-2]".to_string(),
            ));
        }
        match &self.variant {
            ModelVariant::NullCone { vertex } => {
                if vertex.len() != self.n {
                    return Err(Error::Dimension {
                        what: "cone vertex",
                        expected: self.n,
                        found: vertex.len(),
                    });
                }
            }
            ModelVariant::NullRuled { base } => match base {
                BaseSurface::Sphere { radius } => {
                    if !(radius.is_finite() && *radius > 0.0) {
                        return Err(Error::InvalidArgument(
                            "sphere radius must be positive".to_string(),
                        ));
                    }
                }
                BaseSurface::Ellipsoid { semi_axes } => {
                    if semi_axes.len() != self.n - 1 {
                        return Err(Error::Dimension {
                            what: "ellipsoid semi-axes",
                            expected: self.n - 1,
                            found: semi_axes.len(),
                        });
                    }
                    if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                        return Err(Error::InvalidArgument(
                            "ellipsoid semi-axes must be positive".to_string(),
                        ));
                    }
                }
            },
        }
        Ok(())
    }
}

/// Chart location on the hypersurface: ruling parameter `s` and screen
/// chart coordinates `u` (stereographic on the direction sphere or base).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorPoint {
    pub s: f64,
    pub u: Vec<f64>,
}

/// A ruling segment: fixed screen chart coordinates, ruling parameter from
/// `s_start` to `s_end`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpan {
    pub u: Vec<f64>,
    pub s_start: f64,
    pub s_end: f64,
}

/// A jet produced by the generator, with the chart data needed to map the
/// jet's focus coordinates back to chart positions along the ruling: a
/// focus coordinate `s` corresponds to the chart position
/// `r0 − 1/(s + lambda_bar)`.
#[derive(Debug, Clone)]
pub struct GeneratedJet {
    pub jet: HypersurfaceJet,
    /// Ruling chart parameter of the analysed point.
    pub r0: f64,
    /// Harmonic-pole shift applied during generation.
    pub lambda_bar: f64,
}

// ---------------------------------------------------------------------------
// Ambient model: bilinear form, lifts, exact frames
// ---------------------------------------------------------------------------

/// Flat-space inner product with the last coordinate timelike.
fn minkowski(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        acc += x[i] * y[i];
    }
    acc - x[n - 1] * y[n - 1]
}

/// Ambient bilinear form on lift space: flat product on the middle block,
/// minus the cross terms of the two extra null coordinates.
fn ambient_product(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let len = x.len();
    let n = len - 2;
    let mut acc = 0.0;
    for i in 1..n {
        acc += x[i] * y[i];
    }
    acc -= x[n] * y[n];
    acc - x[0] * y[len - 1] - x[len - 1] * y[0]
}

/// Null lift of a flat-space point.
fn lift_point(x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let mut out = DVector::zeros(n + 2);
    out[0] = 1.0;
    for i in 0..n {
        out[i + 1] = x[i];
    }
    out[n + 1] = 0.5 * minkowski(x, x);
    out
}

/// Lift of a tangent vector at `x`.
fn lift_tangent(x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let mut out = DVector::zeros(n + 2);
    for i in 0..n {
        out[i + 1] = v[i];
    }
    out[n + 1] = minkowski(x, v);
    out
}

/// Stereographic chart of the unit sphere in `R^{m+1}` together with its
/// tangent map.
fn sphere_chart(u: &DVector<f64>) -> (DVector<f64>, Vec<DVector<f64>>) {
    let m = u.len();
    let r2 = u.norm_squared();
    let den = 1.0 + r2;
    let mut w = DVector::zeros(m + 1);
    for i in 0..m {
        w[i] = 2.0 * u[i] / den;
    }
    w[m] = (1.0 - r2) / den;
    let mut dw = Vec::with_capacity(m);
    for b in 0..m {
        let mut t = DVector::zeros(m + 1);
        for i in 0..m {
            t[i] = if i == b { 2.0 / den } else { 0.0 } - 4.0 * u[i] * u[b] / (den * den);
        }
        t[m] = -4.0 * u[b] / (den * den);
        dw.push(t);
    }
    (w, dw)
}

/// Ruled description of the model: spacetime base curve of the ruling and
/// the null ruling direction, with their chart tangents.
struct Ruling {
    base: DVector<f64>,
    d_base: Vec<DVector<f64>>,
    dir: DVector<f64>,
    d_dir: Vec<DVector<f64>>,
}

fn ruling(spec: &ModelSpec, u: &DVector<f64>) -> Ruling {
    let n = spec.n;
    let m = spec.m();
    let (w, dw) = sphere_chart(u);
    let embed = |spatial: &DVector<f64>, time: f64| {
        let mut v = DVector::zeros(n);
        for i in 0..n - 1 {
            v[i] = spatial[i];
        }
        v[n - 1] = time;
        v
    };
    match &spec.variant {
        ModelVariant::NullCone { vertex } => Ruling {
            base: DVector::from_column_slice(vertex),
            d_base: (0..m).map(|_| DVector::zeros(n)).collect(),
            dir: embed(&w, 1.0),
            d_dir: dw.iter().map(|t| embed(t, 0.0)).collect(),
        },
        ModelVariant::NullRuled { base } => match base {
            BaseSurface::Sphere { radius } => Ruling {
                base: embed(&(&w * *radius), 0.0),
                d_base: dw.iter().map(|t| embed(&(t * *radius), 0.0)).collect(),
                dir: embed(&w, 1.0),
                d_dir: dw.iter().map(|t| embed(t, 0.0)).collect(),
            },
            BaseSurface::Ellipsoid { semi_axes } => {
                let point = DVector::from_fn(n - 1, |i, _| semi_axes[i] * w[i]);
                let d_point: Vec<DVector<f64>> = dw
                    .iter()
                    .map(|t| DVector::from_fn(n - 1, |i, _| semi_axes[i] * t[i]))
                    .collect();
                let q = DVector::from_fn(n - 1, |i, _| w[i] / semi_axes[i]);
                let dq: Vec<DVector<f64>> = dw
                    .iter()
                    .map(|t| DVector::from_fn(n - 1, |i, _| t[i] / semi_axes[i]))
                    .collect();
                let norm = q.norm();
                let normal = &q / norm;
                let d_normal: Vec<DVector<f64>> = dq
                    .iter()
                    .map(|t| t / norm - &q * (q.dot(t) / (norm * norm * norm)))
                    .collect();
                Ruling {
                    base: embed(&point, 0.0),
                    d_base: d_point.iter().map(|t| embed(t, 0.0)).collect(),
                    dir: embed(&normal, 1.0),
                    d_dir: d_normal.iter().map(|t| embed(t, 0.0)).collect(),
                }
            }
        },
    }
}

/// Flat-space Jacobian of the chart in the screen directions at ruling
/// parameter `s` (columns are tangent vectors).
fn chart_jacobian(spec: &ModelSpec, u: &DVector<f64>, s: f64) -> DMatrix<f64> {
    let r = ruling(spec, u);
    let m = spec.m();
    DMatrix::from_fn(spec.n, m, |i, a| r.d_base[a][i] + s * r.d_dir[a][i])
}

fn chart_regular(spec: &ModelSpec, u: &DVector<f64>, s: f64) -> Result<()> {
    let jac = chart_jacobian(spec, u, s);
    let sv = jac.singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    if smallest < CHART_GAP * largest.max(1.0) {
        return Err(Error::SingularChart(format!(
            "chart tangent map close to rank loss at s = {s} (smallest stretch {smallest:.3e})"
        )));
    }
    Ok(())
}

/// Exact adapted frame of the ruled model, in the ambient lift space.
///
/// Rows of the returned matrix: base point, ruling direction, the `m`
/// screen tangents, the complementary null direction, and the point at
/// infinity.  Every structural inner-product condition holds exactly.
fn frame_raw(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> DMatrix<f64> {
    let n = spec.n;
    let m = spec.m();
    let r = ruling(spec, u);
    let x = &r.base + &r.dir * s;
    // complementary null direction: reflect the spatial part, halve
    let mut dprime = r.dir.clone();
    for i in 0..n - 1 {
        dprime[i] = -dprime[i];
    }
    dprime *= 0.5;

    let mut frame = DMatrix::zeros(n + 2, n + 2);
    frame.row_mut(0).copy_from(&lift_point(&x).transpose());
    frame.row_mut(1).copy_from(&lift_tangent(&x, &r.dir).transpose());
    for a in 0..m {
        let tangent = &r.d_base[a] + &r.d_dir[a] * s;
        frame
            .row_mut(2 + a)
            .copy_from(&lift_tangent(&x, &tangent).transpose());
    }
    frame
        .row_mut(m + 2)
        .copy_from(&lift_tangent(&x, &dprime).transpose());
    let mut inf = DVector::zeros(n + 2);
    inf[n + 1] = 1.0;
    frame.row_mut(m + 3).copy_from(&inf.transpose());
    frame
}

/// A frame with a factorization for expressing ambient vectors in it.
struct FramePoint {
    frame: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl FramePoint {
    fn new(frame: DMatrix<f64>) -> FramePoint {
        let lu = LU::new(frame.transpose());
        FramePoint { frame, lu }
    }

    /// Coefficient matrix `C` with `rows = C · frame`: entry `(i, j)` is the
    /// `j`-frame-vector component of row `i`.
    fn components(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu
            .solve(&rows.transpose())
            .expect("adapted frame is nondegenerate")
            .transpose()
    }
}

/// Gram matrix of a frame under the ambient form.
fn gram(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let k = frame.nrows();
    DMatrix::from_fn(k, k, |i, j| {
        ambient_product(
            &frame.row(i).transpose().clone_owned(),
            &frame.row(j).transpose().clone_owned(),
        )
    })
}

/// Five-point central first derivative, fourth-order accurate.
fn diff5<T>(f: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Add<T, Output = T> + std::ops::Sub<T, Output = T> + std::ops::Mul<f64, Output = T>,
{
    ((f(h) - f(-h)) * 8.0 + (f(-2.0 * h) - f(2.0 * h))) * (1.0 / (12.0 * h))
}

/// Three-point central first derivative, second-order accurate.
fn diff3<T>(f: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Sub<T, Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f(h) - f(-h)) * (1.0 / (2.0 * h))
}

/// Displaces the chart location along direction `dir` (0 = ruling, `1 + a`
/// = screen coordinate `a`).
fn displace(s: f64, u: &DVector<f64>, dir: usize, t: f64) -> (f64, DVector<f64>) {
    if dir == 0 {
        (s + t, u.clone())
    } else {
        let mut v = u.clone();
        v[dir - 1] += t;
        (s, v)
    }
}

fn screen_gram(spec: &ModelSpec, frame: &DMatrix<f64>) -> SymMatrix {
    let m = spec.m();
    SymMatrix::from_fn(m, |a, b| {
        ambient_product(
            &frame.row(2 + a).transpose().clone_owned(),
            &frame.row(2 + b).transpose().clone_owned(),
        )
    })
}

/// Raw second-order block at the given stencil: screen-tangent derivatives
/// expressed on the frame, complementary-null components.
fn lambda_raw(
    spec: &ModelSpec,
    s: f64,
    u: &DVector<f64>,
    h: f64,
    five_point: bool,
) -> (SymMatrix, SymMatrix) {
    let m = spec.m();
    let fp = FramePoint::new(frame_raw(spec, s, u));
    let g = screen_gram(spec, &fp.frame);
    let mut lambda = DMatrix::zeros(m, m);
    for b in 0..m {
        let fd = |t: f64| {
            let (ss, uu) = displace(s, u, 1 + b, t);
            frame_raw(spec, ss, &uu)
        };
        let deriv = if five_point { diff5(fd, h) } else { diff3(fd, h) };
        let comps = fp.components(&deriv);
        for a in 0..m {
            lambda[(a, b)] = comps[(2 + a, m + 2)];
        }
    }
    (g, SymMatrix::symmetrized(&lambda))
}

/// Second-order estimate with a plain three-point stencil at step `h`,
/// exposed for convergence measurements: the error scales as `h²`.
pub fn lambda_estimate(spec: &ModelSpec, point: &GeneratorPoint, h: f64) -> Result<SymMatrix> {
    spec.validate()?;
    let u = DVector::from_column_slice(&point.u);
    chart_regular(spec, &u, point.s)?;
    let (_, lambda) = lambda_raw(spec, point.s, &u, h, false);
    Ok(lambda)
}

/// Mean focus coordinate (harmonic pole shift) of the raw frame at a chart
/// location.
fn lambda_bar_at(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> f64 {
    let (g, lambda) = lambda_raw(spec, s, u, spec.h_fd, true);
    let g_dense = g.to_dense();
    let g_inv = g_dense
        .try_inverse()
        .expect("screen metric invertible at regular chart points");
    (g_inv * lambda.to_dense()).trace() / spec.m() as f64
}

/// Frame with the ruling point moved to the harmonic pole (and the
/// companion shift keeping the structural products exact).
fn frame_norm(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> DMatrix<f64> {
    let m = spec.m();
    let mut frame = frame_raw(spec, s, u);
    let shift = lambda_bar_at(spec, s, u);
    let row0 = frame.row(0).clone_owned();
    let row_n = frame.row(m + 2).clone_owned();
    let mut row1 = frame.row(1).clone_owned();
    row1 -= row0 * shift;
    frame.row_mut(1).copy_from(&row1);
    let mut row_inf = frame.row(m + 3).clone_owned();
    row_inf += row_n * shift;
    frame.row_mut(m + 3).copy_from(&row_inf);
    frame
}

/// All displacement coefficients of the normalized frame field at a chart
/// location: `w[dir][(i, j)]` is the `j`-component of the derivative of
/// frame vector `i` along chart direction `dir`.
struct Connection {
    fp: FramePoint,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: Vec<DMatrix<f64>>,
}

fn connection_at(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> Connection {
    let m = spec.m();
    let fp = FramePoint::new(frame_norm(spec, s, u));
    let g = screen_gram(spec, &fp.frame).to_dense();
    let g_inv = g
        .clone()
        .try_inverse()
        .expect("screen metric invertible at regular chart points");
    let w = (0..=m)
        .map(|dir| {
            let deriv = diff5(
                |t| {
                    let (ss, uu) = displace(s, u, dir, t);
                    frame_norm(spec, ss, &uu)
                },
                STEP_FRAME,
            );
            fp.components(&deriv)
        })
        .collect();
    Connection { fp, g, g_inv, w }
}

/// Ruling-direction displacement coefficients only (for development).
fn ruling_connection(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> DMatrix<f64> {
    let fp = FramePoint::new(frame_norm(spec, s, u));
    let deriv = diff5(|t| frame_norm(spec, s + t, u), STEP_FRAME);
    fp.components(&deriv)
}

/// Normalized second-order block (trace-free part) at a chart location.
fn h_field(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> DMatrix<f64> {
    let m = spec.m();
    let conn = connection_at(spec, s, u);
    let mut h = DMatrix::zeros(m, m);
    for b in 0..m {
        for a in 0..m {
            h[(a, b)] = conn.w[1 + b][(2 + a, m + 2)];
        }
    }
    (h.clone() + h.transpose()) * 0.5
}

fn mu_of_h(g_inv: &DMatrix<f64>, h: &DMatrix<f64>, m: usize) -> f64 {
    let mixed = g_inv * h;
    (&mixed * &mixed).trace() / m as f64
}

fn mu_field(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> f64 {
    let conn = connection_at(spec, s, u);
    let m = spec.m();
    let mut h = DMatrix::zeros(m, m);
    for b in 0..m {
        for a in 0..m {
            h[(a, b)] = conn.w[1 + b][(2 + a, m + 2)];
        }
    }
    let h = (h.clone() + h.transpose()) * 0.5;
    mu_of_h(&conn.g_inv, &h, m)
}

/// Ruling-displacement covector: the base-point components of the
/// derivative of the (normalized) ruling point along screen directions.
fn mu_vec_field(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> DVector<f64> {
    let conn = connection_at(spec, s, u);
    DVector::from_fn(spec.m(), |a, _| conn.w[1 + a][(1, 0)])
}

/// Third-order scalar: ruling derivative of `μ`, corrected by the frame
/// dilation coefficients.
fn nu_field(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> f64 {
    let conn = connection_at(spec, s, u);
    let mu = mu_field(spec, s, u);
    let dmu = diff5(
        |t| {
            let (ss, uu) = displace(s, u, 0, t);
            mu_field(spec, ss, &uu)
        },
        STEP_THIRD,
    );
    dmu + 2.0 * mu * (conn.w[0][(0, 0)] - conn.w[0][(1, 1)])
}

/// Third-order covector: screen derivatives of `μ` with the same
/// correction.
fn nu_vec_field(spec: &ModelSpec, s: f64, u: &DVector<f64>) -> DVector<f64> {
    let conn = connection_at(spec, s, u);
    let mu = mu_field(spec, s, u);
    DVector::from_fn(spec.m(), |a, _| {
        let dmu = diff5(
            |t| {
                let (ss, uu) = displace(s, u, 1 + a, t);
                mu_field(spec, ss, &uu)
            },
            STEP_THIRD,
        );
        dmu + 2.0 * mu * (conn.w[1 + a][(0, 0)] - conn.w[1 + a][(1, 1)])
    })
}

/// Generates the full jet at a chart point by nested central differencing
/// of the exact adapted frame field.  The curvature slice is identically
/// zero, and the produced jet is already harmonic-normalized.
pub fn generate_jet(spec: &ModelSpec, point: &GeneratorPoint) -> Result<GeneratedJet> {
    spec.validate()?;
    let m = spec.m();
    if point.u.len() != m {
        return Err(Error::Dimension {
            what: "generator chart coordinates",
            expected: m,
            found: point.u.len(),
        });
    }
    let u = DVector::from_column_slice(&point.u);
    let s = point.s;
    chart_regular(spec, &u, s)?;

    let conn = connection_at(spec, s, &u);
    let g_sym = screen_gram(spec, &conn.fp.frame);
    let g = ScreenMetric::new(g_sym.to_dense()).map_err(|_| {
        Error::SingularChart("screen metric degenerate at this chart point".to_string())
    })?;
    let lambda_bar0 = lambda_bar_at(spec, s, &u);

    // second order: trace-free part, projected exactly
    let mut h = DMatrix::zeros(m, m);
    for b in 0..m {
        for a in 0..m {
            h[(a, b)] = conn.w[1 + b][(2 + a, m + 2)];
        }
    }
    let h = (h.clone() + h.transpose()) * 0.5;
    let trace = (&conn.g_inv * &h).trace() / m as f64;
    let h_proj = &h - &conn.g * trace;
    let lambda = SymMatrix::symmetrized(&h_proj);
    let mu = mu_of_h(&conn.g_inv, &h_proj, m);

    // third order: screen derivatives of the second-order block with frame
    // corrections
    let mut lam3 = vec![0.0; m * m * m];
    for c in 0..m {
        let dh = diff5(
            |t| {
                let (ss, uu) = displace(s, &u, 1 + c, t);
                h_field(spec, ss, &uu)
            },
            STEP_THIRD,
        );
        let wc = &conn.w[1 + c];
        for a in 0..m {
            for b in 0..m {
                let mut v = dh[(a, b)];
                for d in 0..m {
                    let gl_a = wc[(2 + a, 2 + d)] - if a == d { wc[(0, 0)] } else { 0.0 };
                    let gl_b = wc[(2 + b, 2 + d)] - if b == d { wc[(0, 0)] } else { 0.0 };
                    v -= h[(d, b)] * gl_a + h[(a, d)] * gl_b;
                }
                v -= h[(a, b)] * (wc[(0, 0)] + wc[(1, 1)]);
                v -= conn.g[(a, b)] * wc[(1, 0)];
                lam3[(a * m + b) * m + c] = v;
            }
        }
    }
    let lambda3 = SymCubic::from_fn(m, |a, b, c| {
        let perms = [
            (a, b, c),
            (a, c, b),
            (b, a, c),
            (b, c, a),
            (c, a, b),
            (c, b, a),
        ];
        perms
            .iter()
            .map(|&(x, y, z)| lam3[(x * m + y) * m + z])
            .sum::<f64>()
            / 6.0
    });

    // third-order scalar/covector blocks
    let mu_vec = mu_vec_field(spec, s, &u);
    let nu = nu_field(spec, s, &u);
    let nu_a = nu_vec_field(spec, s, &u);
    let h_mixed = &h_proj * &conn.g_inv;
    let mut nu_ab = DMatrix::zeros(m, m);
    for b in 0..m {
        let dmu_vec = diff5(
            |t| {
                let (ss, uu) = displace(s, &u, 1 + b, t);
                mu_vec_field(spec, ss, &uu)
            },
            STEP_THIRD,
        );
        let wb = &conn.w[1 + b];
        for a in 0..m {
            let mut v = dmu_vec[a];
            for d in 0..m {
                let gl = wb[(2 + a, 2 + d)] - if a == d { wb[(0, 0)] } else { 0.0 };
                v -= mu_vec[d] * gl;
                v += h_mixed[(a, d)] * wb[(2 + d, 0)];
            }
            v += mu_vec[a] * (wb[(0, 0)] - wb[(1, 1)]);
            v -= mu * wb[(2 + a, 1)];
            nu_ab[(a, b)] = v;
        }
    }

    // fourth order
    let nu_center = nu;
    let drho = diff5(
        |t| {
            let (ss, uu) = displace(s, &u, 0, t);
            nu_field(spec, ss, &uu)
        },
        STEP_FOURTH,
    );
    let rho = drho + 3.0 * nu_center * (conn.w[0][(0, 0)] - conn.w[0][(1, 1)]);
    let rho_a = DVector::from_fn(m, |a, _| {
        let d = diff5(
            |t| {
                let (ss, uu) = displace(s, &u, 1 + a, t);
                nu_field(spec, ss, &uu)
            },
            STEP_FOURTH,
        );
        d + 3.0 * nu_center * (conn.w[1 + a][(0, 0)] - conn.w[1 + a][(1, 1)])
    });
    let mut rho_ab = DMatrix::zeros(m, m);
    for b in 0..m {
        let dnu_vec = diff5(
            |t| {
                let (ss, uu) = displace(s, &u, 1 + b, t);
                nu_vec_field(spec, ss, &uu)
            },
            STEP_FOURTH,
        );
        let wb = &conn.w[1 + b];
        for a in 0..m {
            let mut v = dnu_vec[a];
            for d in 0..m {
                let gl = wb[(2 + a, 2 + d)] - if a == d { wb[(0, 0)] } else { 0.0 };
                v -= nu_a[d] * gl;
                v -= (2.0 * mu * h_mixed[(a, d)] + if a == d { nu_center } else { 0.0 })
                    * wb[(2 + d, 1)];
            }
            v += 2.0 * nu_a[a] * (wb[(0, 0)] - wb[(1, 1)]);
            v += 2.0 * mu * wb[(2 + a, 0)];
            rho_ab[(a, b)] = v;
        }
    }

    let mut jet = HypersurfaceJet::new(
        spec.n,
        g,
        lambda,
        lambda3,
        CurvatureSlice::flat(m),
        nu,
        nu_a,
        SymMatrix::symmetrized(&nu_ab),
        rho,
        rho_a,
        SymMatrix::symmetrized(&rho_ab),
    )?;
    jet.harmonic_normalized = true;

    Ok(GeneratedJet {
        jet,
        r0: s,
        lambda_bar: lambda_bar0,
    })
}

// ---------------------------------------------------------------------------
// Development along a ruling
// ---------------------------------------------------------------------------

/// Adapted frame at a chart point (harmonic-normalized), exposed with
/// named vectors.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub n: usize,
    pub base: DVector<f64>,
    pub ruling: DVector<f64>,
    pub screen: Vec<DVector<f64>>,
    pub transversal: DVector<f64>,
    pub infinity: DVector<f64>,
}

impl AdaptedFrame {
    /// Largest deviation of the frame's ambient products from the
    /// structural pattern (zeros, the two `−1` pairings, and the screen
    /// Gram block).
    pub fn gram_residual(&self) -> f64 {
        let frame = self.matrix();
        let m = self.n - 2;
        let g = gram(&frame);
        let mut worst = 0.0f64;
        let expect = |i: usize, j: usize| -> Option<f64> {
            // screen-screen block is data, not structure
            if (2..2 + m).contains(&i) && (2..2 + m).contains(&j) {
                return None;
            }
            if (i == 0 && j == m + 3) || (i == m + 3 && j == 0) {
                return Some(-1.0);
            }
            if (i == 1 && j == m + 2) || (i == m + 2 && j == 1) {
                return Some(-1.0);
            }
            Some(0.0)
        };
        for i in 0..m + 4 {
            for j in 0..m + 4 {
                if let Some(target) = expect(i, j) {
                    worst = worst.max((g[(i, j)] - target).abs());
                }
            }
        }
        worst
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.n - 2;
        let dim = self.n + 2;
        let mut out = DMatrix::zeros(m + 4, dim);
        out.row_mut(0).copy_from(&self.base.transpose());
        out.row_mut(1).copy_from(&self.ruling.transpose());
        for (a, v) in self.screen.iter().enumerate() {
            out.row_mut(2 + a).copy_from(&v.transpose());
        }
        out.row_mut(m + 2).copy_from(&self.transversal.transpose());
        out.row_mut(m + 3).copy_from(&self.infinity.transpose());
        out
    }

    fn from_matrix(n: usize, mat: &DMatrix<f64>) -> AdaptedFrame {
        let m = n - 2;
        AdaptedFrame {
            n,
            base: mat.row(0).transpose().clone_owned(),
            ruling: mat.row(1).transpose().clone_owned(),
            screen: (0..m).map(|a| mat.row(2 + a).transpose().clone_owned()).collect(),
            transversal: mat.row(m + 2).transpose().clone_owned(),
            infinity: mat.row(m + 3).transpose().clone_owned(),
        }
    }
}

/// Exact harmonic-normalized adapted frame at a chart point.
pub fn adapted_frame(spec: &ModelSpec, point: &GeneratorPoint) -> Result<AdaptedFrame> {
    spec.validate()?;
    let u = DVector::from_column_slice(&point.u);
    chart_regular(spec, &u, point.s)?;
    Ok(AdaptedFrame::from_matrix(
        spec.n,
        &frame_norm(spec, point.s, &u),
    ))
}

/// Frame field integrated along a ruling segment.
#[derive(Debug, Clone)]
pub struct FrameTrajectory {
    pub n: usize,
    /// Ruling chart parameters of the saved frames.
    pub params: Vec<f64>,
    /// One `(n+2) × (n+2)` matrix per parameter; rows are frame vectors.
    pub frames: Vec<DMatrix<f64>>,
    /// Largest structural-Gram deviation observed before the per-step
    /// restoring projection.
    pub gram_drift: f64,
}

impl FrameTrajectory {
    /// Rows spanning the tangent space (base point, ruling, screen).
    pub fn tangent_span(&self, idx: usize) -> DMatrix<f64> {
        let m = self.n - 2;
        self.frames[idx].rows(0, m + 2).into_owned()
    }
}

/// Largest principal angle (radians) between the row spans of two
/// matrices.  Measured through the sine (norm of the projection residual)
/// rather than the cosine of an overlap, so angles far below `sqrt(eps)`
/// are still resolved.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_rows(a);
    let qb = orthonormal_rows(b);
    // Columns of residual = components of the a-basis orthogonal to span b;
    // its largest singular value is sin of the largest principal angle.
    let residual = qa.transpose() - qb.transpose() * (&qb * qa.transpose());
    let sin = residual.singular_values().max().clamp(0.0, 1.0);
    sin.asin()
}

fn orthonormal_rows(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.transpose().svd(true, false);
    let u = svd.u.expect("requested U factor");
    let k = a.nrows().min(a.ncols());
    u.columns(0, k).transpose().into_owned()
}

/// Integrates the frame-displacement equations along a ruling with the
/// classical fourth-order scheme, restoring the structural products after
/// each step and recording the drift they had accumulated.
pub fn develop_along_generator(
    spec: &ModelSpec,
    span: &GeneratorSpan,
    steps: usize,
) -> Result<FrameTrajectory> {
    spec.validate()?;
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "development needs at least one step".to_string(),
        ));
    }
    let u = DVector::from_column_slice(&span.u);
    chart_regular(spec, &u, span.s_start)?;
    chart_regular(spec, &u, span.s_end)?;

    let ds = (span.s_end - span.s_start) / steps as f64;
    let mut frame = frame_norm(spec, span.s_start, &u);
    let mut params = vec![span.s_start];
    let mut frames = vec![frame.clone()];
    let mut drift = 0.0f64;

    for k in 0..steps {
        let s0 = span.s_start + k as f64 * ds;
        let b0 = ruling_connection(spec, s0, &u);
        let bm = ruling_connection(spec, s0 + 0.5 * ds, &u);
        let b1 = ruling_connection(spec, s0 + ds, &u);
        let k1 = &b0 * &frame;
        let k2 = &bm * (&frame + &k1 * (0.5 * ds));
        let k3 = &bm * (&frame + &k2 * (0.5 * ds));
        let k4 = &b1 * (&frame + &k3 * ds);
        frame += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (ds / 6.0);

        // restore the structural products against the exact frame's Gram
        let s_new = s0 + ds;
        let target = gram(&frame_norm(spec, s_new, &u));
        let current = gram(&frame);
        let delta = &target - &current;
        drift = drift.max(delta.norm() / target.norm());
        let correction = delta
            * target
                .clone()
                .try_inverse()
                .expect("structural Gram is nondegenerate")
            * 0.5;
        frame = &frame + correction * &frame;

        params.push(s_new);
        frames.push(frame.clone());
    }

    Ok(FrameTrajectory {
        n: spec.n,
        params,
        frames,
        gram_drift: drift,
    })
}

// ---------------------------------------------------------------------------
// Geodesic residuals
// ---------------------------------------------------------------------------

/// Residual of the screen and transversal geodesic equations along a chart
/// line through the given span, drifting sideways at constant chart rate
/// `drift` (zero drift = the ruling itself).  The scale-fixing multiplier
/// is taken from the ruling equation, and the residual is normalized by
/// the squared chart speed.
pub fn curve_geodesic_residual(
    spec: &ModelSpec,
    span: &GeneratorSpan,
    drift: &[f64],
) -> Result<f64> {
    spec.validate()?;
    let m = spec.m();
    if drift.len() != m {
        return Err(Error::Dimension {
            what: "curve drift",
            expected: m,
            found: drift.len(),
        });
    }
    let sdot = span.s_end - span.s_start;
    if sdot == 0.0 {
        return Err(Error::InvalidArgument(
            "geodesic residual needs a nondegenerate ruling segment".to_string(),
        ));
    }
    let udot = DVector::from_column_slice(drift);
    let speed2 = sdot * sdot + udot.norm_squared();
    let samples = 9;
    let mut worst = 0.0f64;
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let s = span.s_start + t * sdot;
        let u = DVector::from_fn(m, |a, _| span.u[a] + t * udot[a]);
        chart_regular(spec, &u, s)?;
        let conn = connection_at(spec, s, &u);
        let val = |i: usize, j: usize| -> f64 {
            let mut acc = sdot * conn.w[0][(i, j)];
            for c in 0..m {
                acc += udot[c] * conn.w[1 + c][(i, j)];
            }
            acc
        };
        let alpha = (sdot * val(1, 1)
            + (0..m).map(|a| udot[a] * val(2 + a, 1)).sum::<f64>())
            / sdot;
        for a in 0..m {
            let mut r = sdot * val(1, 2 + a) - alpha * udot[a];
            for b in 0..m {
                r += udot[b] * val(2 + b, 2 + a);
            }
            worst = worst.max(r.abs() / speed2);
        }
        let mut r_trans = sdot * val(1, m + 2);
        for b in 0..m {
            r_trans += udot[b] * val(2 + b, m + 2);
        }
        worst = worst.max(r_trans.abs() / speed2);
    }
    Ok(worst)
}

/// Residual of the geodesic equations along the ruling itself; vanishes to
/// differencing accuracy because rulings are isotropic geodesics.
pub fn geodesic_residual(spec: &ModelSpec, span: &GeneratorSpan) -> Result<f64> {
    let m = spec.m();
    curve_geodesic_residual(spec, span, &vec![0.0; m])
}

// ---------------------------------------------------------------------------
// Focus cross-check
// ---------------------------------------------------------------------------

/// Comparison of the jet-predicted focus positions along a ruling with the
/// chart positions where the parametrization's Jacobian drops rank.
#[derive(Debug, Clone)]
pub struct FociCrossCheck {
    /// Chart positions predicted from the jet's focus coordinates.
    pub predicted: Vec<f64>,
    /// Chart positions detected by scanning the Jacobian's smallest
    /// singular value.
    pub detected: Vec<f64>,
    /// Worst distance from a predicted position to the nearest detected
    /// one.
    pub max_mismatch: f64,
}

/// Smallest singular value of the chart Jacobian at ruling position `s`.
fn jacobian_gap(spec: &ModelSpec, u: &DVector<f64>, s: f64) -> f64 {
    chart_jacobian(spec, u, s).singular_values().min()
}

pub fn foci_cross_check(spec: &ModelSpec, point: &GeneratorPoint) -> Result<FociCrossCheck> {
    let tols = Tolerances::default();
    let generated = generate_jet(spec, point)?;
    let report = singular_points(&generated.jet, &tols)?;
    let u = DVector::from_column_slice(&point.u);

    let mut predicted: Vec<f64> = Vec::new();
    for (value, _mult) in &report.clusters {
        let shifted = value + generated.lambda_bar;
        if shifted.abs() < 1e-6 {
            // focus at infinity: no finite chart position
            continue;
        }
        predicted.push(generated.r0 - 1.0 / shifted);
    }
    predicted.sort_by(f64::total_cmp);

    if predicted.is_empty() {
        return Ok(FociCrossCheck {
            predicted,
            detected: Vec::new(),
            max_mismatch: 0.0,
        });
    }

    // scan window around the predictions
    let lo_pred = predicted.first().copied().unwrap();
    let hi_pred = predicted.last().copied().unwrap();
    let pad = 0.5 * (1.0 + hi_pred - lo_pred);
    let lo = lo_pred - pad;
    let hi = hi_pred + pad;
    let samples = 800;
    let grid: Vec<f64> = (0..=samples)
        .map(|k| lo + (hi - lo) * k as f64 / samples as f64)
        .collect();
    let gaps: Vec<f64> = grid.iter().map(|&s| jacobian_gap(spec, &u, s)).collect();
    let scale = gaps.iter().cloned().fold(0.0f64, f64::max).max(1e-12);

    let mut detected = Vec::new();
    for i in 1..samples {
        if gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1] {
            // refine the dip by golden-section search
            let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
            let phi = 0.5 * (3.0 - 5.0f64.sqrt());
            for _ in 0..120 {
                let x1 = a + phi * (b - a);
                let x2 = b - phi * (b - a);
                if jacobian_gap(spec, &u, x1) < jacobian_gap(spec, &u, x2) {
                    b = x2;
                } else {
                    a = x1;
                }
            }
            let s_star = 0.5 * (a + b);
            if jacobian_gap(spec, &u, s_star) < 1e-4 * scale {
                let duplicate = detected
                    .iter()
                    .any(|&d: &f64| (d - s_star).abs() < 1e-4 * (1.0 + s_star.abs()));
                if !duplicate {
                    detected.push(s_star);
                }
            }
        }
    }
    detected.sort_by(f64::total_cmp);

    let max_mismatch = predicted
        .iter()
        .map(|p| {
            detected
                .iter()
                .map(|d| (p - d).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);

    Ok(FociCrossCheck {
        predicted,
        detected,
        max_mismatch,
    })
}

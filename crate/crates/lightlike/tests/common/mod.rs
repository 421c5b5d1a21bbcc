//! Shared fixtures for the integration suites: seeded random admissible
//! jets with well-separated foci and a safely invertible central affinor.

use lightlike::jet::{CurvatureSlice, HypersurfaceJet};
use lightlike::tensor::{Array3, Array4, ScreenMetric, SymCubic, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Well-conditioned random screen metric `g = L·Lᵀ` with unit-scale
/// diagonal.
pub fn random_metric(m: usize, rng: &mut ChaCha8Rng) -> ScreenMetric {
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            l[(i, j)] = 0.3 * rng.random_range(-1.0..1.0);
        }
        l[(i, i)] = rng.random_range(-0.35..0.35f64).exp();
    }
    ScreenMetric::new(&l * l.transpose()).expect("constructed SPD metric")
}

/// Focus coordinates with pairwise gaps of at least 0.15, so clustering,
/// pencil conditioning and the central affinor's margin are all generic.
fn separated_spectrum(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut e: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        e.sort_by(f64::total_cmp);
        if e.windows(2).all(|w| w[1] - w[0] >= 0.15) {
            return e;
        }
    }
}

/// Random admissible jet with prescribed focus spectrum properties:
/// distinct foci, `μ` bounded away from zero, `|ν|` in `[0.2, 1.5]`, and
/// every eigenvalue of the central affinor at least 0.05 in magnitude.
/// The produced jet is *raw* (its second-order part still carries the
/// trace); normalize before the affinor stages.
pub fn random_jet(m: usize, rng: &mut ChaCha8Rng) -> HypersurfaceJet {
    let g = random_metric(m, rng);
    let l = g.cholesky_l().clone();

    let (spectrum, nu) = loop {
        let e = separated_spectrum(m, rng);
        let mean = e.iter().sum::<f64>() / m as f64;
        let mu = e.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m as f64;
        let magnitude = rng.random_range(0.2..1.5);
        let nu = if rng.random_range(0.0..1.0f64) < 0.5 {
            magnitude
        } else {
            -magnitude
        };
        let central_ok = e.iter().all(|x| {
            let y = x - mean;
            (y * y + nu / (2.0 * mu) * y - mu).abs() >= 0.05
        });
        if central_ok {
            break (e, nu);
        }
    };

    let lambda_dense = &l * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * l.transpose();
    let lambda = SymMatrix::symmetrized(&lambda_dense);

    let lambda3 = SymCubic::from_fn(m, |_, _, _| rng.random_range(-0.5..0.5));
    let nu_a = DVector::from_fn(m, |_, _| rng.random_range(-0.7..0.7));
    let nu_ab = SymMatrix::from_fn(m, |_, _| rng.random_range(-0.8..0.8));
    let rho = rng.random_range(-1.0..1.0);
    let rho_a = DVector::from_fn(m, |_, _| rng.random_range(-0.8..0.8));
    let rho_ab = SymMatrix::from_fn(m, |_, _| rng.random_range(-0.8..0.8));

    let raw_cn = SymMatrix::from_fn(m, |_, _| rng.random_range(-0.5..0.5));
    let trace = g.trace(&raw_cn) / m as f64;
    let gm = g.matrix().clone();
    let cn_dense = raw_cn.to_dense() - gm * trace;
    let curvature = CurvatureSlice {
        c1_11a: DVector::from_fn(m, |_, _| rng.random_range(-0.4..0.4)),
        c1_1ab: DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.4..0.4)),
        cn_ab1: SymMatrix::symmetrized(&cn_dense),
        ca_b1c: Array3::from_fn(m, |_, _, _| rng.random_range(-0.3..0.3)),
        ca_bce: Array4::from_fn(m, |_, _, _, _| rng.random_range(-0.3..0.3)),
        c_11a: DVector::from_fn(m, |_, _| rng.random_range(-0.4..0.4)),
        c_1ab: DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.4..0.4)),
    };

    HypersurfaceJet::new(
        m + 2,
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
    )
    .expect("random jet dimensions are consistent")
}

/// Same jet distribution, already re-centered on the harmonic pole.
pub fn random_normalized_jet(m: usize, rng: &mut ChaCha8Rng) -> HypersurfaceJet {
    lightlike::jet::normalize_to_harmonic_pole(&random_jet(m, rng)).0
}

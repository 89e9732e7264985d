//! Directivity against an independent spherical-quadrature oracle, and
//! inter-grid sidelobe excursion checks for the synthesis defaults.

use coparray::beamform::{
    directivity, pattern_cut, synthesize, uv_from_azel, PatternSpec,
};
use coparray::doa::DegreeGrid;
use coparray::geometry::{rcpa, CoprimePair, SensorArray};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Mean of |w^H a(direction)|² over the unit sphere by quadrature:
/// Gauss-Legendre in cosθ, trapezoid in the periodic angle.
fn sphere_mean_quadrature(array: &SensorArray, weights: &[Complex64]) -> f64 {
    let s = array.spacing_over_lambda();
    let (nodes, gl_weights) = gauss_legendre(96);
    let n_phi = 720;
    let mut total = 0.0;
    for (&u, &gw) in nodes.iter().zip(gl_weights.iter()) {
        let sin_theta = (1.0 - u * u).sqrt();
        let mut ring = 0.0;
        for k in 0..n_phi {
            let phi = TAU * k as f64 / n_phi as f64;
            let (c, si) = (phi.cos(), phi.sin());
            let mut f = Complex64::new(0.0, 0.0);
            for (&(x, y), w) in array.positions().iter().zip(weights.iter()) {
                let phase = TAU * s * sin_theta * (x as f64 * c + y as f64 * si);
                // pattern value w^H a = Σ conj(w) · exp(j·phase)
                f += w.conj() * Complex64::new(phase.cos(), phase.sin());
            }
            ring += f.norm_sqr();
        }
        total += gw * ring / n_phi as f64;
    }
    total / 2.0 // ∫ du spans [-1,1] with total weight 2
}

fn quadrature_directivity(
    array: &SensorArray,
    weights: &[Complex64],
    look_az: f64,
    look_el: f64,
) -> f64 {
    let s = array.spacing_over_lambda();
    let (u, v) = uv_from_azel(look_az, look_el);
    let mut f = Complex64::new(0.0, 0.0);
    for (&(x, y), w) in array.positions().iter().zip(weights.iter()) {
        let phase = TAU * s * (u * x as f64 + v * y as f64);
        f += w.conj() * Complex64::new(phase.cos(), phase.sin());
    }
    10.0 * (f.norm_sqr() / sphere_mean_quadrature(array, weights)).log10()
}

#[test]
fn directivity_matches_quadrature_oracle_for_uniform_weights() {
    let array = rcpa(&CoprimePair::new(2, 3).unwrap());
    let w = vec![Complex64::new(1.0 / 36.0, 0.0); 36];
    let closed_form = directivity(&array, &w, 0.0, 0.0);
    let quadrature = quadrature_directivity(&array, &w, 0.0, 0.0);
    assert!(
        (closed_form - quadrature).abs() < 0.1,
        "closed form {closed_form} dBi vs quadrature {quadrature} dBi"
    );
}

#[test]
fn directivity_matches_quadrature_oracle_for_synthesized_weights() {
    let array = rcpa(&CoprimePair::new(2, 3).unwrap());
    let sol = synthesize(&array, &PatternSpec::default()).unwrap();
    let quadrature = quadrature_directivity(&array, &sol.weights, 0.0, 0.0);
    assert!(
        (sol.directivity_dbi - quadrature).abs() < 0.1,
        "reported {} dBi vs quadrature {quadrature} dBi",
        sol.directivity_dbi
    );
}

#[test]
fn inter_grid_sidelobe_excursions_stay_small() {
    // The 2° synthesis grid must not hide big bulges between grid points.
    // Re-evaluate on a 0.25° grid over the interior of the constrained
    // lattice (every surrounding 2° cell corner constrained) and allow
    // 0.5 dB. The 2°-wide strip hugging the main-lobe box boundary is the
    // beam shoulder and is unconstrained by construction, so it is not part
    // of this check.
    let array = rcpa(&CoprimePair::new(2, 3).unwrap());
    let spec = PatternSpec::default();
    let sol = synthesize(&array, &spec).unwrap();
    let dense = DegreeGrid::new(-28.0, 28.0, 0.25, -28.0, 28.0, 0.25).unwrap();
    let cut = pattern_cut(&array, &sol.weights, &dense, 0.0, 0.0);
    let first_ring = spec.mainlobe_az_halfwidth_deg + spec.grid.az_step;
    let worst = cut
        .iter()
        .filter(|r| r.0.abs().max(r.1.abs()) >= first_ring - 1e-9)
        .map(|r| r.2)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        worst <= spec.sidelobe_db + 0.5,
        "worst interior dense-grid sidelobe {worst} dB vs cap {}",
        spec.sidelobe_db
    );
}

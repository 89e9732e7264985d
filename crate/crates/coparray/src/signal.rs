//! Far-field narrowband multi-source snapshot synthesis and sample
//! covariance estimation.
//!
//! Directions are handled in two equivalent forms:
//!
//! - physical angles `(azimuth θ, elevation φ)` in degrees, with the
//!   normalized mapping `θ' = (d/λ)·sin θ·cos φ`, `φ' = (d/λ)·sin θ·sin φ`;
//! - normalized DOA pairs `(θ', φ')` directly, which is what steering
//!   vectors consume: the entry for a sensor at lattice point `(u, v)` is
//!   `exp(2πj(θ'·u + φ'·v))`.
//!
//! At half-wavelength spacing the normalized pair lives in `[-0.5, 0.5]²`
//! and the steering manifold is 1-periodic in each coordinate.
//!
//! Source signals and additive noise are circular complex Gaussian; a scene
//! with seed `s` always produces the bit-identical snapshot matrix
//! (generator: ChaCha12 keyed by the seed).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::SensorArray;

/// Name of the seeded generator recorded in output metadata.
pub const GENERATOR_NAME: &str = "chacha12";

/// A source expressed directly in normalized DOA coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub theta_n: f64,
    pub phi_n: f64,
    pub power: f64,
}

/// A source expressed in physical angles (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSource {
    pub az_deg: f64,
    pub el_deg: f64,
    pub power: f64,
}

/// A simulation scene: sources, noise power, snapshot count and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceScene {
    pub sources: Vec<SceneSource>,
    pub noise_power: f64,
    pub snapshots: usize,
    pub seed: u64,
}

impl SourceScene {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Invalid {
                what: "sources",
                why: "scene must contain at least one source".into(),
            });
        }
        if let Some(s) = self.sources.iter().find(|s| !(s.power >= 0.0)) {
            return Err(Error::Invalid {
                what: "power",
                why: format!("source power {} must be >= 0", s.power),
            });
        }
        if !(self.noise_power >= 0.0) {
            return Err(Error::Invalid {
                what: "noise_power",
                why: format!("{} must be >= 0", self.noise_power),
            });
        }
        if self.snapshots == 0 {
            return Err(Error::Invalid {
                what: "snapshots",
                why: "snapshot count must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// Convert to normalized DOA sources for an array with the given
    /// element spacing.
    pub fn normalized_sources(&self, spacing_over_lambda: f64) -> Vec<Source> {
        self.sources
            .iter()
            .map(|s| {
                let (theta_n, phi_n) =
                    normalized_from_degrees(s.az_deg, s.el_deg, spacing_over_lambda);
                Source {
                    theta_n,
                    phi_n,
                    power: s.power,
                }
            })
            .collect()
    }
}

/// `(θ', φ') = (d/λ)·sin(az)·(cos(el), sin(el))`, angles in degrees.
pub fn normalized_from_degrees(az_deg: f64, el_deg: f64, spacing_over_lambda: f64) -> (f64, f64) {
    let az = az_deg.to_radians();
    let el = el_deg.to_radians();
    let r = spacing_over_lambda * az.sin();
    (r * el.cos(), r * el.sin())
}

/// Steering vector of `array` for a normalized DOA pair: unit-modulus
/// entries `exp(2πj(θ'·u + φ'·v))` in the array's sensor order.
pub fn steering_vector(array: &SensorArray, theta_n: f64, phi_n: f64) -> DVector<Complex64> {
    DVector::from_iterator(
        array.len(),
        array.positions().iter().map(|&(u, v)| {
            let phase = TAU * (theta_n * u as f64 + phi_n * v as f64);
            Complex64::new(phase.cos(), phase.sin())
        }),
    )
}

/// One circular complex Gaussian draw with the given variance
/// (`E[|z|²] = variance`). Real part drawn before imaginary part.
fn circular_gaussian(rng: &mut ChaCha12Rng, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Simulate `snapshots` array output columns for normalized-DOA sources:
/// `y(t) = Σ_i a(θ'_i, φ'_i)·s_i(t) + n(t)` with mutually uncorrelated
/// circular Gaussian sources and per-sensor noise of power `noise_power`.
pub fn simulate_snapshots_normalized(
    array: &SensorArray,
    sources: &[Source],
    noise_power: f64,
    snapshots: usize,
    rng: &mut ChaCha12Rng,
) -> DMatrix<Complex64> {
    let n = array.len();
    let q = sources.len();

    let mut steering = DMatrix::<Complex64>::zeros(n, q);
    for (j, src) in sources.iter().enumerate() {
        steering.set_column(j, &steering_vector(array, src.theta_n, src.phi_n));
    }

    // source amplitudes: q × K, row i filled in full before row i+1
    let mut amplitudes = DMatrix::<Complex64>::zeros(q, snapshots);
    for (i, src) in sources.iter().enumerate() {
        for t in 0..snapshots {
            amplitudes[(i, t)] = circular_gaussian(rng, src.power);
        }
    }

    let mut output = steering * amplitudes;
    if noise_power > 0.0 {
        for i in 0..n {
            for t in 0..snapshots {
                output[(i, t)] += circular_gaussian(rng, noise_power);
            }
        }
    }
    output
}

/// Simulate a scene on an array; the scene's own seed drives the generator.
pub fn simulate_snapshots(array: &SensorArray, scene: &SourceScene) -> Result<DMatrix<Complex64>> {
    scene.validate()?;
    let sources = scene.normalized_sources(array.spacing_over_lambda());
    let mut rng = ChaCha12Rng::seed_from_u64(scene.seed);
    Ok(simulate_snapshots_normalized(
        array,
        &sources,
        scene.noise_power,
        scene.snapshots,
        &mut rng,
    ))
}

/// Sample covariance `R' = Y·Y^H / K` with the sensor ordering attached.
/// Hermitian by construction (the lower triangle mirrors the upper one).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    matrix: DMatrix<Complex64>,
    sensor_order: Vec<(i64, i64)>,
    snapshots_used: usize,
}

impl SampleCovariance {
    /// Wrap an externally supplied Hermitian matrix (for file round-trips).
    /// `snapshots_used = 0` marks an exact (analytic) covariance.
    pub fn from_parts(
        matrix: DMatrix<Complex64>,
        sensor_order: Vec<(i64, i64)>,
        snapshots_used: usize,
    ) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != sensor_order.len() {
            return Err(Error::Invalid {
                what: "covariance",
                why: format!(
                    "matrix {}x{} does not match {} sensor positions",
                    matrix.nrows(),
                    matrix.ncols(),
                    sensor_order.len()
                ),
            });
        }
        let asym = crate::linalg::max_hermitian_asymmetry(&matrix);
        if asym > 1e-10 {
            return Err(Error::NonHermitian { max_asym: asym });
        }
        Ok(Self {
            matrix,
            sensor_order,
            snapshots_used,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn sensor_order(&self) -> &[(i64, i64)] {
        &self.sensor_order
    }

    pub fn snapshots_used(&self) -> usize {
        self.snapshots_used
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Estimate the sample covariance of a snapshot matrix (sensors × K).
pub fn sample_covariance(
    array: &SensorArray,
    snapshots: &DMatrix<Complex64>,
) -> Result<SampleCovariance> {
    let n = array.len();
    if snapshots.nrows() != n {
        return Err(Error::Invalid {
            what: "snapshots",
            why: format!(
                "{} rows but the array has {} sensors",
                snapshots.nrows(),
                n
            ),
        });
    }
    let k = snapshots.ncols();
    if k == 0 {
        return Err(Error::Invalid {
            what: "snapshots",
            why: "need at least one snapshot".into(),
        });
    }
    let inv_k = 1.0 / k as f64;
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..k {
                acc += snapshots[(i, t)] * snapshots[(j, t)].conj();
            }
            let value = acc * inv_k;
            matrix[(i, j)] = value;
            matrix[(j, i)] = value.conj();
        }
    }
    Ok(SampleCovariance {
        matrix,
        sensor_order: array.positions().to_vec(),
        snapshots_used: k,
    })
}

/// Exact covariance of the data model: `R = Σ σ_i² a_i a_i^H + σ² I`.
/// Marked with `snapshots_used = 0`.
pub fn analytic_covariance(
    array: &SensorArray,
    sources: &[Source],
    noise_power: f64,
) -> SampleCovariance {
    let n = array.len();
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    for src in sources {
        let a = steering_vector(array, src.theta_n, src.phi_n);
        for i in 0..n {
            for j in 0..n {
                matrix[(i, j)] += Complex64::new(src.power, 0.0) * a[i] * a[j].conj();
            }
        }
    }
    for i in 0..n {
        matrix[(i, i)] += Complex64::new(noise_power, 0.0);
    }
    SampleCovariance {
        matrix,
        sensor_order: array.positions().to_vec(),
        snapshots_used: 0,
    }
}

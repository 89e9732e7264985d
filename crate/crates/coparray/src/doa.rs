//! Coarray-augmented 2-D MUSIC direction-of-arrival estimation.
//!
//! Pipeline: average the physical sample covariance over every coarray lag
//! inside the contiguous square `[-h, h]²` (the divisor for each lag is its
//! coarray weight), fill the Hermitian doubly block-Toeplitz covariance of
//! the one-sided virtual uniform rectangular array `[0, h]²`, split signal
//! and noise subspaces by eigendecomposition, and scan the MUSIC
//! pseudo-spectrum `1 / (a^H E_n E_n^H a)` over a direction grid.
//!
//! Lags outside the contiguous square (isolated extreme lags) are discarded;
//! no hole interpolation is attempted. Because the virtual covariance has
//! side `(h+1)²`, up to `(h+1)² - 1` sources are resolvable — more than the
//! physical sensor count for coprime geometries.
//!
//! Two grid flavours are supported: a physical [`DegreeGrid`] in azimuth and
//! elevation (`θ' = (d/λ)sin(az)cos(el)`, `φ' = (d/λ)sin(az)sin(el)`), and a
//! [`TorusGrid`] directly over normalized DOA space `[-0.5, 0.5)²`, which is
//! the natural periodic domain of the steering manifold and is what the
//! Monte-Carlo harness uses.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::coarray::{difference_coarray, Coarray};
use crate::error::{Error, LatticePoint, Result};
use crate::geometry::SensorArray;
use crate::signal::{
    normalized_from_degrees, sample_covariance, simulate_snapshots_normalized, SampleCovariance,
    Source, SourceScene,
};

/// Inclusive azimuth/elevation grid in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeGrid {
    pub az_start: f64,
    pub az_stop: f64,
    pub az_step: f64,
    pub el_start: f64,
    pub el_stop: f64,
    pub el_step: f64,
}

fn axis_points(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

impl DegreeGrid {
    pub fn new(
        az_start: f64,
        az_stop: f64,
        az_step: f64,
        el_start: f64,
        el_stop: f64,
        el_step: f64,
    ) -> Result<Self> {
        for (name, start, stop, step) in [
            ("azimuth", az_start, az_stop, az_step),
            ("elevation", el_start, el_stop, el_step),
        ] {
            if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                return Err(Error::Invalid {
                    what: "grid",
                    why: format!("{name} range {start}:{stop}:{step} is not a valid sweep"),
                });
            }
        }
        Ok(Self {
            az_start,
            az_stop,
            az_step,
            el_start,
            el_stop,
            el_step,
        })
    }

    /// The survey grid used for spectrum figures: azimuth -50°..50°,
    /// elevation -90°..90°, step 0.5°.
    pub fn survey() -> Self {
        Self::new(-50.0, 50.0, 0.5, -90.0, 90.0, 0.5).unwrap()
    }

    pub fn az_points(&self) -> Vec<f64> {
        axis_points(self.az_start, self.az_stop, self.az_step)
    }

    pub fn el_points(&self) -> Vec<f64> {
        axis_points(self.el_start, self.el_stop, self.el_step)
    }
}

/// Uniform grid over normalized DOA space `[-0.5, 0.5)²`, treated as a
/// torus: the steering manifold is 1-periodic in each coordinate, so
/// neighbourhoods and distances wrap around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    points_per_axis: usize,
}

impl TorusGrid {
    /// Grid with the given number of points per axis (at least 8).
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 8 {
            return Err(Error::Invalid {
                what: "grid",
                why: format!("{points_per_axis} points per axis is too coarse (need >= 8)"),
            });
        }
        Ok(Self { points_per_axis })
    }

    /// Grid whose step is closest to `step` while dividing the unit period
    /// exactly.
    pub fn from_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.125) {
            return Err(Error::Invalid {
                what: "grid_step",
                why: format!("{step} not in (0, 0.125]"),
            });
        }
        Self::new((1.0 / step).round() as usize)
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn step(&self) -> f64 {
        1.0 / self.points_per_axis as f64
    }

    pub fn coord(&self, index: usize) -> f64 {
        -0.5 + index as f64 * self.step()
    }
}

/// Hermitian doubly block-Toeplitz covariance of the one-sided virtual URA.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCovariance {
    matrix: DMatrix<Complex64>,
    lag_autocorrelation: BTreeMap<LatticePoint, Complex64>,
    half_width: i64,
    spacing_over_lambda: f64,
}

impl VirtualCovariance {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn lag_autocorrelation(&self) -> &BTreeMap<LatticePoint, Complex64> {
        &self.lag_autocorrelation
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spacing_over_lambda(&self) -> f64 {
        self.spacing_over_lambda
    }

    /// Largest number of sources MUSIC can separate on this matrix.
    pub fn max_sources(&self) -> usize {
        self.side() - 1
    }
}

/// Average covariance entries over every lag in `[-half_width, half_width]²`.
/// Each lag's divisor is the number of sensor pairs producing it, i.e. the
/// coarray weight. Errors if some lag in the square is not in the coarray.
pub fn lag_average(
    cov: &SampleCovariance,
    co: &Coarray,
    half_width: i64,
) -> Result<BTreeMap<LatticePoint, Complex64>> {
    if cov.side() != co.sensor_count() {
        return Err(Error::Invalid {
            what: "covariance",
            why: format!(
                "covariance over {} sensors but coarray was built from {}",
                cov.side(),
                co.sensor_count()
            ),
        });
    }
    if half_width < 0 {
        return Err(Error::Invalid {
            what: "half_width",
            why: format!("{half_width} must be >= 0"),
        });
    }
    let positions = cov.sensor_order();
    let mut sums: BTreeMap<LatticePoint, (Complex64, u64)> = BTreeMap::new();
    for (p_idx, &(px, py)) in positions.iter().enumerate() {
        for (q_idx, &(qx, qy)) in positions.iter().enumerate() {
            let lag = (px - qx, py - qy);
            if lag.0.abs() <= half_width && lag.1.abs() <= half_width {
                let entry = sums.entry(lag).or_insert((Complex64::new(0.0, 0.0), 0));
                entry.0 += cov.matrix()[(p_idx, q_idx)];
                entry.1 += 1;
            }
        }
    }
    let mut out = BTreeMap::new();
    for lx in -half_width..=half_width {
        for ly in -half_width..=half_width {
            let lag = (lx, ly);
            match sums.get(&lag) {
                None => return Err(Error::LagOutsideCoarray { lag }),
                Some(&(sum, count)) => {
                    debug_assert_eq!(count, co.weight(lag));
                    out.insert(lag, sum / count as f64);
                }
            }
        }
    }
    Ok(out)
}

/// Fill the virtual covariance of the one-sided URA `[0, h]²` from a lag
/// autocorrelation map: the entry for virtual sensors `(i,j)`, `(k,l)` is
/// the autocorrelation at lag `(i-k, j-l)`. Matrix side is `(h+1)²`.
pub fn build_virtual_covariance(
    lag_autocorrelation: &BTreeMap<LatticePoint, Complex64>,
    half_width: i64,
    spacing_over_lambda: f64,
) -> Result<VirtualCovariance> {
    if half_width < 0 {
        return Err(Error::Invalid {
            what: "half_width",
            why: format!("{half_width} must be >= 0"),
        });
    }
    for lx in -half_width..=half_width {
        for ly in -half_width..=half_width {
            if !lag_autocorrelation.contains_key(&(lx, ly)) {
                return Err(Error::MissingLag { lag: (lx, ly) });
            }
        }
    }
    let per_axis = (half_width + 1) as usize;
    let side = per_axis * per_axis;
    let mut matrix = DMatrix::<Complex64>::zeros(side, side);
    for r in 0..side {
        let (ri, rj) = ((r / per_axis) as i64, (r % per_axis) as i64);
        for c in 0..side {
            let (ci, cj) = ((c / per_axis) as i64, (c % per_axis) as i64);
            matrix[(r, c)] = lag_autocorrelation[&(ri - ci, rj - cj)];
        }
    }
    let kept: BTreeMap<LatticePoint, Complex64> = lag_autocorrelation
        .iter()
        .filter(|(l, _)| l.0.abs() <= half_width && l.1.abs() <= half_width)
        .map(|(&l, &v)| (l, v))
        .collect();
    Ok(VirtualCovariance {
        matrix,
        lag_autocorrelation: kept,
        half_width,
        spacing_over_lambda,
    })
}

/// Full augmentation path: sample covariance -> lag averages over the
/// contiguous square -> virtual covariance.
pub fn virtual_covariance_from_sample(
    cov: &SampleCovariance,
    co: &Coarray,
    spacing_over_lambda: f64,
) -> Result<VirtualCovariance> {
    let h = co.contiguous_half_width();
    let lags = lag_average(cov, co, h)?;
    build_virtual_covariance(&lags, h, spacing_over_lambda)
}

/// Virtual-URA steering vector over `[0, h]²`, flattened row-major.
fn virtual_steering(half_width: i64, theta_n: f64, phi_n: f64) -> DVector<Complex64> {
    let per_axis = (half_width + 1) as usize;
    let phasor = |rate: f64, k: usize| {
        let phase = TAU * rate * k as f64;
        Complex64::new(phase.cos(), phase.sin())
    };
    let ax: Vec<Complex64> = (0..per_axis).map(|i| phasor(theta_n, i)).collect();
    let ay: Vec<Complex64> = (0..per_axis).map(|j| phasor(phi_n, j)).collect();
    let mut out = DVector::<Complex64>::zeros(per_axis * per_axis);
    for i in 0..per_axis {
        for j in 0..per_axis {
            out[i * per_axis + j] = ax[i] * ay[j];
        }
    }
    out
}

/// MUSIC pseudo-spectrum evaluator over a fixed subspace split.
///
/// The denominator `a^H E_n E_n^H a` is computed through whichever of the
/// noise or signal subspace has fewer columns; both routes are algebraically
/// identical and invariant to any unitary re-basis of the subspace.
pub struct SpectrumEvaluator {
    basis_adjoint: DMatrix<Complex64>,
    complement: bool,
    half_width: i64,
}

impl SpectrumEvaluator {
    /// Split the virtual covariance into signal/noise subspaces for
    /// `num_sources` sources (eigenvalues sorted descending).
    pub fn from_virtual_covariance(vc: &VirtualCovariance, num_sources: usize) -> Result<Self> {
        let side = vc.side();
        if num_sources == 0 || num_sources >= side {
            return Err(Error::DofExceeded {
                requested: num_sources,
                dof: side - 1,
            });
        }
        let asym = crate::linalg::max_hermitian_asymmetry(vc.matrix());
        if asym > 1e-10 {
            return Err(Error::NonHermitian { max_asym: asym });
        }
        let (_, vectors) = crate::linalg::hermitian_eigen_desc(vc.matrix());
        let noise_dim = side - num_sources;
        if noise_dim <= num_sources {
            let basis = vectors.columns(num_sources, noise_dim).into_owned();
            Ok(Self::from_noise_basis(basis, vc.half_width()))
        } else {
            let basis = vectors.columns(0, num_sources).into_owned();
            Ok(Self {
                basis_adjoint: basis.adjoint(),
                complement: true,
                half_width: vc.half_width(),
            })
        }
    }

    /// Build directly from a noise-subspace basis (columns).
    pub fn from_noise_basis(noise_basis: DMatrix<Complex64>, half_width: i64) -> Self {
        Self {
            basis_adjoint: noise_basis.adjoint(),
            complement: false,
            half_width,
        }
    }

    /// Pseudo-spectrum value at a normalized DOA pair.
    pub fn value(&self, theta_n: f64, phi_n: f64) -> f64 {
        let a = virtual_steering(self.half_width, theta_n, phi_n);
        let projected = &self.basis_adjoint * &a;
        let denom = if self.complement {
            (a.norm_squared() - projected.norm_squared()).max(0.0)
        } else {
            projected.norm_squared()
        };
        1.0 / denom.max(f64::MIN_POSITIVE)
    }
}

/// One spectrum peak: a strict local maximum over the 8-neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub az_deg: f64,
    pub el_deg: f64,
    pub value: f64,
}

/// MUSIC spectrum over a degree grid plus its dominant peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicResult {
    grid: DegreeGrid,
    az_points: Vec<f64>,
    el_points: Vec<f64>,
    /// Row-major over (azimuth, elevation): index `i * n_el + j`.
    spectrum: Vec<f64>,
    peaks: Vec<Peak>,
}

impl MusicResult {
    pub fn grid(&self) -> &DegreeGrid {
        &self.grid
    }

    pub fn az_points(&self) -> &[f64] {
        &self.az_points
    }

    pub fn el_points(&self) -> &[f64] {
        &self.el_points
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn value_at(&self, az_index: usize, el_index: usize) -> f64 {
        self.spectrum[az_index * self.el_points.len() + el_index]
    }

    /// Peaks sorted by spectrum value descending (ties: smallest azimuth,
    /// then elevation), truncated to the requested source count.
    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }
}

/// Indices of strict local maxima of `values` on an `n_rows × n_cols` grid.
/// `wrap` treats the grid as a torus; otherwise border cells compare only
/// against in-grid neighbours.
fn local_maxima(values: &[f64], n_rows: usize, n_cols: usize, wrap: bool) -> Vec<(usize, usize)> {
    let mut peaks = Vec::new();
    let value = |i: usize, j: usize| values[i * n_cols + j];
    for i in 0..n_rows {
        for j in 0..n_cols {
            let center = value(i, j);
            let mut is_peak = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = if wrap {
                        (
                            (i as i64 + di).rem_euclid(n_rows as i64) as usize,
                            (j as i64 + dj).rem_euclid(n_cols as i64) as usize,
                        )
                    } else {
                        let ni = i as i64 + di;
                        let nj = j as i64 + dj;
                        if ni < 0 || nj < 0 || ni >= n_rows as i64 || nj >= n_cols as i64 {
                            continue;
                        }
                        (ni as usize, nj as usize)
                    };
                    if value(ni, nj) >= center {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                peaks.push((i, j));
            }
        }
    }
    peaks
}

fn rank_peaks(mut peaks: Vec<Peak>, keep: usize) -> Vec<Peak> {
    peaks.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap()
            .then(a.az_deg.partial_cmp(&b.az_deg).unwrap())
            .then(a.el_deg.partial_cmp(&b.el_deg).unwrap())
    });
    peaks.truncate(keep);
    peaks
}

/// Run 2-D MUSIC over an azimuth/elevation grid. Returns the spectrum and
/// the top `num_sources` grid peaks.
pub fn music_spectrum(
    vc: &VirtualCovariance,
    num_sources: usize,
    grid: &DegreeGrid,
) -> Result<MusicResult> {
    let evaluator = SpectrumEvaluator::from_virtual_covariance(vc, num_sources)?;
    let az_points = grid.az_points();
    let el_points = grid.el_points();
    let n_el = el_points.len();
    let spacing = vc.spacing_over_lambda();

    let mut spectrum = vec![0.0f64; az_points.len() * n_el];
    spectrum
        .par_chunks_mut(n_el)
        .zip(az_points.par_iter())
        .for_each(|(row, &az)| {
            for (j, &el) in el_points.iter().enumerate() {
                let (theta_n, phi_n) = normalized_from_degrees(az, el, spacing);
                row[j] = evaluator.value(theta_n, phi_n);
            }
        });

    let peaks: Vec<Peak> = local_maxima(&spectrum, az_points.len(), n_el, false)
        .into_iter()
        .map(|(i, j)| Peak {
            az_deg: az_points[i],
            el_deg: el_points[j],
            value: spectrum[i * n_el + j],
        })
        .collect();

    Ok(MusicResult {
        grid: *grid,
        az_points,
        el_points,
        spectrum,
        peaks: rank_peaks(peaks, num_sources),
    })
}

/// MUSIC peak search directly over the normalized-DOA torus. Returns
/// exactly `num_sources` normalized pairs, or an error naming how many
/// strict local maxima were found.
pub fn music_peaks_torus(
    vc: &VirtualCovariance,
    num_sources: usize,
    grid: &TorusGrid,
) -> Result<Vec<(f64, f64)>> {
    let evaluator = SpectrumEvaluator::from_virtual_covariance(vc, num_sources)?;
    let n = grid.points_per_axis();
    let mut spectrum = vec![0.0f64; n * n];
    spectrum.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let theta_n = grid.coord(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = evaluator.value(theta_n, grid.coord(j));
        }
    });

    let mut peaks: Vec<(f64, f64, f64)> = local_maxima(&spectrum, n, n, true)
        .into_iter()
        .map(|(i, j)| (grid.coord(i), grid.coord(j), spectrum[i * n + j]))
        .collect();
    if peaks.len() < num_sources {
        return Err(Error::TooFewPeaks {
            found: peaks.len(),
            expected: num_sources,
        });
    }
    peaks.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.partial_cmp(&b.0).unwrap())
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    peaks.truncate(num_sources);
    Ok(peaks.into_iter().map(|(t, p, _)| (t, p)).collect())
}

/// End-to-end estimation: simulate the scene, estimate the covariance,
/// augment over the coarray and return the top `num_sources` grid peaks as
/// `(azimuth, elevation)` degree pairs.
pub fn estimate_doa(
    array: &SensorArray,
    scene: &SourceScene,
    num_sources: usize,
    grid: &DegreeGrid,
) -> Result<Vec<(f64, f64)>> {
    let co = difference_coarray(array);
    let dof = dof_bound(&co);
    if num_sources > dof {
        return Err(Error::DofExceeded {
            requested: num_sources,
            dof,
        });
    }
    let snapshots = crate::signal::simulate_snapshots(array, scene)?;
    let cov = sample_covariance(array, &snapshots)?;
    let vc = virtual_covariance_from_sample(&cov, &co, array.spacing_over_lambda())?;
    let result = music_spectrum(&vc, num_sources, grid)?;
    if result.peaks().len() < num_sources {
        return Err(Error::TooFewPeaks {
            found: result.peaks().len(),
            expected: num_sources,
        });
    }
    Ok(result
        .peaks()
        .iter()
        .map(|p| (p.az_deg, p.el_deg))
        .collect())
}

/// Same pipeline but with normalized-DOA sources, a caller-owned generator
/// and a torus search grid; used by the Monte-Carlo harness.
pub fn estimate_doa_torus(
    array: &SensorArray,
    co: &Coarray,
    sources: &[Source],
    noise_power: f64,
    snapshots: usize,
    rng: &mut ChaCha12Rng,
    grid: &TorusGrid,
) -> Result<Vec<(f64, f64)>> {
    let dof = dof_bound(co);
    if sources.len() > dof {
        return Err(Error::DofExceeded {
            requested: sources.len(),
            dof,
        });
    }
    let y = simulate_snapshots_normalized(array, sources, noise_power, snapshots, rng);
    let cov = sample_covariance(array, &y)?;
    let vc = virtual_covariance_from_sample(&cov, co, array.spacing_over_lambda())?;
    music_peaks_torus(&vc, sources.len(), grid)
}

/// Number of sources resolvable from a coarray: `(h+1)² - 1`.
pub fn dof_bound(co: &Coarray) -> usize {
    let per_axis = (co.contiguous_half_width() + 1) as usize;
    per_axis * per_axis - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rcpa, CoprimePair};
    use crate::signal::analytic_covariance;

    fn rcpa_2_3() -> SensorArray {
        rcpa(&CoprimePair::new(2, 3).unwrap())
    }

    #[test]
    fn lag_average_of_diagonal_and_identity() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        // σ² I input: lag (0,0) -> σ², everything else -> 0
        let cov = analytic_covariance(&arr, &[], 2.0);
        let lags = lag_average(&cov, &co, co.contiguous_half_width()).unwrap();
        assert_eq!(lags[&(0, 0)], Complex64::new(2.0, 0.0));
        for (&lag, &v) in &lags {
            if lag != (0, 0) {
                assert_eq!(v, Complex64::new(0.0, 0.0), "lag {lag:?}");
            }
        }
    }

    #[test]
    fn lag_average_divisor_is_coarray_weight() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        // all-ones covariance: each lag's average is exactly 1 regardless of
        // multiplicity, and the internal divisor equals the weight table.
        let ones = DMatrix::from_element(arr.len(), arr.len(), Complex64::new(1.0, 0.0));
        let cov = SampleCovariance::from_parts(ones, arr.positions().to_vec(), 1).unwrap();
        let lags = lag_average(&cov, &co, co.contiguous_half_width()).unwrap();
        for (_, &v) in &lags {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn lag_average_rejects_half_width_beyond_coarray() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        let cov = analytic_covariance(&arr, &[], 1.0);
        // half-width 8 requires lag (8, y) which the coarray lacks
        let err = lag_average(&cov, &co, 8).unwrap_err();
        assert!(matches!(err, Error::LagOutsideCoarray { lag } if lag.0.abs() == 8 || lag.1.abs() == 8));
    }

    #[test]
    fn virtual_covariance_dimensions_and_toeplitz_consistency() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        let src = Source {
            theta_n: 0.17,
            phi_n: -0.23,
            power: 1.0,
        };
        let cov = analytic_covariance(&arr, &[src], 0.5);
        let vc = virtual_covariance_from_sample(&cov, &co, 0.5).unwrap();
        assert_eq!(vc.side(), 64); // (M(N+1))² for (2,3)
        assert_eq!(vc.half_width(), 7);
        assert_eq!(crate::linalg::max_hermitian_asymmetry(vc.matrix()), 0.0);
        // every entry must equal the lag map exactly
        let per_axis = 8usize;
        for r in 0..vc.side() {
            for c in 0..vc.side() {
                let lag = (
                    (r / per_axis) as i64 - (c / per_axis) as i64,
                    (r % per_axis) as i64 - (c % per_axis) as i64,
                );
                assert_eq!(vc.matrix()[(r, c)], vc.lag_autocorrelation()[&lag]);
            }
        }
        // reconstructing the lag map from row/column 0 reproduces it
        for i in 0..per_axis as i64 {
            for j in 0..per_axis as i64 {
                let idx = (i * per_axis as i64 + j) as usize;
                assert_eq!(
                    vc.matrix()[(idx, 0)],
                    vc.lag_autocorrelation()[&(i, j)]
                );
                assert_eq!(
                    vc.matrix()[(0, idx)],
                    vc.lag_autocorrelation()[&(-i, -j)]
                );
            }
        }
    }

    #[test]
    fn trivial_half_width_zero_matrix() {
        let mut lags = BTreeMap::new();
        lags.insert((0, 0), Complex64::new(3.5, 0.0));
        let vc = build_virtual_covariance(&lags, 0, 0.5).unwrap();
        assert_eq!(vc.side(), 1);
        assert_eq!(vc.matrix()[(0, 0)], Complex64::new(3.5, 0.0));
    }

    #[test]
    fn missing_lag_is_named_in_error() {
        let mut lags = BTreeMap::new();
        for lx in -1i64..=1 {
            for ly in -1i64..=1 {
                lags.insert((lx, ly), Complex64::new(1.0, 0.0));
            }
        }
        lags.remove(&(1, -1));
        let err = build_virtual_covariance(&lags, 1, 0.5).unwrap_err();
        assert!(matches!(err, Error::MissingLag { lag: (1, -1) }));
        assert!(err.to_string().contains("(1,-1)"));
    }

    #[test]
    fn noiseless_single_source_gives_rank_one_virtual_covariance() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        let src = Source {
            theta_n: 0.11,
            phi_n: 0.07,
            power: 1.0,
        };
        let cov = analytic_covariance(&arr, &[src], 0.0);
        let vc = virtual_covariance_from_sample(&cov, &co, 0.5).unwrap();
        let (vals, _) = crate::linalg::hermitian_eigen_desc(vc.matrix());
        assert!(vals[0] > 0.0);
        assert!(
            vals[1].abs() < vals[0] * 1e-10,
            "second eigenvalue {} not negligible vs {}",
            vals[1],
            vals[0]
        );
    }

    #[test]
    fn music_finds_single_source_from_exact_covariance() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        let (theta_n, phi_n) = normalized_from_degrees(10.0, 20.0, 0.5);
        let src = Source {
            theta_n,
            phi_n,
            power: 1.0,
        };
        let cov = analytic_covariance(&arr, &[src], 0.1);
        let vc = virtual_covariance_from_sample(&cov, &co, 0.5).unwrap();
        let grid = DegreeGrid::new(-50.0, 50.0, 0.5, -90.0, 90.0, 0.5).unwrap();
        let result = music_spectrum(&vc, 1, &grid).unwrap();
        assert_eq!(result.peaks().len(), 1);
        let p = result.peaks()[0];
        assert!(
            (p.az_deg - 10.0).abs() <= 0.5 && (p.el_deg - 20.0).abs() <= 0.5,
            "peak at ({}, {})",
            p.az_deg,
            p.el_deg
        );
    }

    #[test]
    fn survey_grid_dimensions() {
        let grid = DegreeGrid::survey();
        assert_eq!(grid.az_points().len(), 201);
        assert_eq!(grid.el_points().len(), 361);
    }

    #[test]
    fn spectrum_invariant_under_unitary_rebasis_of_noise_subspace() {
        use nalgebra::DVector;
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        let sources = [
            Source {
                theta_n: 0.21,
                phi_n: -0.05,
                power: 1.0,
            },
            Source {
                theta_n: -0.33,
                phi_n: 0.4,
                power: 2.0,
            },
        ];
        let cov = analytic_covariance(&arr, &sources, 1.0);
        let vc = virtual_covariance_from_sample(&cov, &co, 0.5).unwrap();
        let (_, vectors) = crate::linalg::hermitian_eigen_desc(vc.matrix());
        let noise = vectors.columns(2, vc.side() - 2).into_owned();

        // unitary rotation built by QR of a deterministic complex matrix
        let dim = vc.side() - 2;
        let mut seed_mat = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let x = ((i * 31 + j * 17) % 11) as f64 - 5.0;
                let y = ((i * 13 + j * 7) % 9) as f64 - 4.0;
                seed_mat[(i, j)] = Complex64::new(x, y);
            }
        }
        for i in 0..dim {
            seed_mat[(i, i)] += Complex64::new(20.0, 0.0);
        }
        let qr = seed_mat.qr();
        let unitary = qr.q();
        let rotated = &noise * &unitary;

        let eval_a = SpectrumEvaluator::from_noise_basis(noise, vc.half_width());
        let eval_b = SpectrumEvaluator::from_noise_basis(rotated, vc.half_width());
        let probe: DVector<f64> = DVector::from_fn(7, |k, _| -0.45 + 0.15 * k as f64);
        for &t in probe.iter() {
            for &p in probe.iter() {
                let a = eval_a.value(t, p);
                let b = eval_b.value(t, p);
                assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()),
                    "spectrum differs at ({t},{p}): {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn dof_bound_enforced() {
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        assert_eq!(dof_bound(&co), 63);
        let scene = SourceScene {
            sources: vec![crate::signal::SceneSource {
                az_deg: 10.0,
                el_deg: 0.0,
                power: 1.0,
            }],
            noise_power: 0.1,
            snapshots: 8,
            seed: 5,
        };
        let grid = DegreeGrid::new(-50.0, 50.0, 5.0, -90.0, 90.0, 5.0).unwrap();
        let err = estimate_doa(&arr, &scene, 64, &grid).unwrap_err();
        assert!(matches!(
            err,
            Error::DofExceeded {
                requested: 64,
                dof: 63
            }
        ));
    }

    #[test]
    fn estimate_doa_three_sources_high_snr() {
        let arr = rcpa_2_3();
        let scene = SourceScene {
            sources: vec![
                crate::signal::SceneSource {
                    az_deg: 10.0,
                    el_deg: 20.0,
                    power: 1.0,
                },
                crate::signal::SceneSource {
                    az_deg: 25.0,
                    el_deg: -40.0,
                    power: 1.0,
                },
                crate::signal::SceneSource {
                    az_deg: -30.0,
                    el_deg: 60.0,
                    power: 1.0,
                },
            ],
            noise_power: 0.0,
            snapshots: 500,
            seed: 42,
        };
        let grid = DegreeGrid::survey();
        let estimates = estimate_doa(&arr, &scene, 3, &grid).unwrap();
        assert_eq!(estimates.len(), 3);
        for s in &scene.sources {
            let hit = estimates
                .iter()
                .any(|&(az, el)| (az - s.az_deg).abs() <= 0.5 && (el - s.el_deg).abs() <= 0.5);
            assert!(hit, "no estimate near ({}, {}); got {estimates:?}", s.az_deg, s.el_deg);
        }
    }

    #[test]
    fn torus_grid_spacing_and_coords() {
        let grid = TorusGrid::from_step(0.005).unwrap();
        assert_eq!(grid.points_per_axis(), 200);
        assert_eq!(grid.coord(0), -0.5);
        assert!((grid.coord(100) - 0.0).abs() < 1e-12);
        assert!(TorusGrid::from_step(0.5).is_err());
    }

    #[test]
    fn torus_peaks_find_underdetermined_sources_exact_covariance() {
        // 49 sources on 36 physical sensors, exact covariance
        let arr = rcpa_2_3();
        let co = difference_coarray(&arr);
        let mut sources = Vec::new();
        for i in 0..7 {
            for j in 0..7 {
                sources.push(Source {
                    theta_n: -0.42 + 0.14 * i as f64,
                    phi_n: -0.42 + 0.14 * j as f64,
                    power: 1.0,
                });
            }
        }
        let cov = analytic_covariance(&arr, &sources, 0.01);
        let vc = virtual_covariance_from_sample(&cov, &co, 0.5).unwrap();
        let grid = TorusGrid::from_step(0.005).unwrap();
        let peaks = music_peaks_torus(&vc, 49, &grid).unwrap();
        assert_eq!(peaks.len(), 49);
        for s in &sources {
            let found = peaks.iter().any(|&(t, p)| {
                let dt = (t - s.theta_n).abs();
                let dp = (p - s.phi_n).abs();
                dt.min(1.0 - dt) <= 0.0075 && dp.min(1.0 - dp) <= 0.0075
            });
            assert!(found, "source ({}, {}) unmatched", s.theta_n, s.phi_n);
        }
    }
}

//! Beam-pattern synthesis under directivity, interference-null and sidelobe
//! constraints, solved as a second-order cone program.
//!
//! The weight vector minimizes the radiated power `w^H·Rn·w` (with `Rn` the
//! isotropic-noise spatial covariance, or the identity when configured)
//! subject to a distortionless look-direction response `a(look)^H·w = 1`,
//! per-direction interference caps `|a(dir)^H·w| <= 10^(dB/20)` and the same
//! cap at every evaluation-grid point outside the main-lobe box.
//!
//! Pattern directions use the direction-cosine convention
//! `u = cos(el)·sin(az)`, `v = sin(el)`, which maps the square
//! `(az, el) ∈ [-90°, 90°]²` bijectively onto the forward hemisphere. This
//! differs from the DOA modules' polar-style mapping on purpose: a degree
//! box around boresight only excises a proper neighbourhood of the main
//! lobe under the direction-cosine convention, which is what a main-lobe
//! exclusion box is for.
//!
//! SOCP layout (deterministic): variables `x = [Re w; Im w; t]`; cone order
//! is the zero cone for the distortionless equality, the epigraph cone
//! `‖C·x_w‖ <= t` with `Rn = C^T·C`, then one 3-row modulus cone per
//! interference direction (in list order) and per sidelobe grid point (in
//! row-major grid order).
//!
//! A note on the default evaluation grid: sparse coprime layouts fill only a
//! fraction of their bounding lattice, which keeps their far-out sidelobe
//! floor high — for the 36-element rectangular coprime array the best
//! uniform cap achievable over the whole visible region is about -10 dB, so
//! a -17 dB cap over everything outside the main-lobe box is infeasible.
//! The default grid therefore covers the near-in region (±28°) where a
//! -17 dB requirement is meaningful; widen `grid` explicitly to constrain
//! more of the visible region, at the cost of feasibility.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::doa::DegreeGrid;
use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::signal::steering_vector;

/// Objective matrix choice for the radiated-power quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// Isotropic-noise sinc matrix: `w^H·Rn·w` is proportional to the total
    /// power radiated over the sphere.
    Isotropic,
    /// Identity: minimizes `‖w‖²` instead.
    Identity,
}

/// One interference direction and its required suppression (negative dB
/// relative to the main lobe).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSpec {
    pub az_deg: f64,
    pub el_deg: f64,
    pub suppression_db: f64,
}

/// Full synthesis specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub look_az_deg: f64,
    pub look_el_deg: f64,
    pub interference: Vec<InterferenceSpec>,
    /// Sidelobe cap (negative dB relative to main lobe) outside the box.
    pub sidelobe_db: f64,
    /// Main-lobe exclusion box half-widths, degrees.
    pub mainlobe_az_halfwidth_deg: f64,
    pub mainlobe_el_halfwidth_deg: f64,
    /// Evaluation grid; sidelobe constraints apply at grid points outside
    /// the main-lobe box.
    pub grid: DegreeGrid,
    pub noise_model: NoiseModel,
}

impl Default for PatternSpec {
    fn default() -> Self {
        Self {
            look_az_deg: 0.0,
            look_el_deg: 0.0,
            interference: vec![
                InterferenceSpec {
                    az_deg: 30.0,
                    el_deg: 0.0,
                    suppression_db: -30.0,
                },
                InterferenceSpec {
                    az_deg: -40.0,
                    el_deg: 0.0,
                    suppression_db: -40.0,
                },
            ],
            sidelobe_db: -17.0,
            mainlobe_az_halfwidth_deg: 20.0,
            mainlobe_el_halfwidth_deg: 20.0,
            grid: DegreeGrid::new(-28.0, 28.0, 2.0, -28.0, 28.0, 2.0).unwrap(),
            noise_model: NoiseModel::Isotropic,
        }
    }
}

impl PatternSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sidelobe_db < 0.0) {
            return Err(Error::Invalid {
                what: "sidelobe_db",
                why: format!("{} must be negative (dB below main lobe)", self.sidelobe_db),
            });
        }
        if let Some(i) = self.interference.iter().find(|i| !(i.suppression_db < 0.0)) {
            return Err(Error::Invalid {
                what: "suppression_db",
                why: format!("{} must be negative (dB below main lobe)", i.suppression_db),
            });
        }
        if !(self.mainlobe_az_halfwidth_deg >= 0.0) || !(self.mainlobe_el_halfwidth_deg >= 0.0) {
            return Err(Error::Invalid {
                what: "mainlobe box",
                why: "half-widths must be >= 0".into(),
            });
        }
        if let Some(i) = self
            .interference
            .iter()
            .find(|i| self.in_mainlobe_box(i.az_deg, i.el_deg))
        {
            return Err(Error::Invalid {
                what: "interference",
                why: format!(
                    "direction ({}, {}) lies inside the main-lobe box",
                    i.az_deg, i.el_deg
                ),
            });
        }
        Ok(())
    }

    fn in_mainlobe_box(&self, az_deg: f64, el_deg: f64) -> bool {
        (az_deg - self.look_az_deg).abs() <= self.mainlobe_az_halfwidth_deg
            && (el_deg - self.look_el_deg).abs() <= self.mainlobe_el_halfwidth_deg
    }
}

/// Direction-cosine mapping for pattern work: `(u, v) = (cos el·sin az, sin el)`.
pub fn uv_from_azel(az_deg: f64, el_deg: f64) -> (f64, f64) {
    let az = az_deg.to_radians();
    let el = el_deg.to_radians();
    (el.cos() * az.sin(), el.sin())
}

fn pattern_steering(array: &SensorArray, az_deg: f64, el_deg: f64) -> DVector<Complex64> {
    let (u, v) = uv_from_azel(az_deg, el_deg);
    let s = array.spacing_over_lambda();
    steering_vector(array, s * u, s * v)
}

/// Sphere-average Gram matrix: entry `(m, k)` is the average of
/// `exp(j·2π·(p_m - p_k)·s/λ)` over all directions `s` of the unit sphere,
/// which closes to `sinc(2π·‖p_m - p_k‖·d/λ)`. `w^H·B·w` is the mean of
/// `|w^H a|²` over the sphere, so `|w^H a(look)|² / (w^H·B·w)` is the
/// directivity.
pub fn sphere_average_matrix(array: &SensorArray) -> DMatrix<f64> {
    let n = array.len();
    let s = array.spacing_over_lambda();
    let positions = array.positions();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let dx = (positions[i].0 - positions[j].0) as f64;
            let dy = (positions[i].1 - positions[j].1) as f64;
            let x = std::f64::consts::TAU * s * dx.hypot(dy);
            b[(i, j)] = if x == 0.0 { 1.0 } else { x.sin() / x };
        }
    }
    b
}

/// Isotropic-noise covariance used as the synthesis objective: the
/// sphere-average matrix plus diagonal loading `1e-8·trace/side` so the
/// Cholesky factorization is strictly positive definite.
pub fn isotropic_noise_matrix(array: &SensorArray) -> DMatrix<f64> {
    let mut b = sphere_average_matrix(array);
    let n = b.nrows();
    let load = 1e-8 * b.trace() / n as f64;
    for i in 0..n {
        b[(i, i)] += load;
    }
    b
}

/// Solver outcome for a feasible synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    AlmostSolved,
}

/// Synthesized weights plus achieved metrics and solver certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    /// Complex weights, one per sensor in array order, normalized so that
    /// `a(look)^H·w = 1` exactly.
    pub weights: Vec<Complex64>,
    /// `10·log10(|w^H a(look)|² / (w^H·B·w))` against the unloaded
    /// sphere-average matrix.
    pub directivity_dbi: f64,
    /// Achieved pattern level at each interference direction, dB.
    pub interference_suppression_db: Vec<f64>,
    /// Percentage of constrained sidelobe grid points whose achieved level
    /// exceeds the requirement by more than 1e-6 dB.
    pub sidelobe_over_requirement_pct: f64,
    /// Number of sidelobe grid points that were constrained.
    pub sidelobe_points: usize,
    pub status: SolveStatus,
    pub iterations: u32,
    pub duality_gap_rel: f64,
    pub solve_seconds: f64,
    /// Objective value `sqrt(w^H·Rn·w)` at the solver scaling
    /// (before the distortionless renormalization).
    pub objective: f64,
    /// `|a(look)^H·w - 1|` after renormalization.
    pub distortionless_error: f64,
}

struct ModulusConstraint {
    steering: DVector<Complex64>,
    limit_amplitude: f64,
    limit_db: f64,
    label: String,
    is_sidelobe: bool,
}

/// Sparse column builder for the constraint matrix.
struct ColumnMajorBuilder {
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl ColumnMajorBuilder {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols: vec![Vec::new(); cols],
        }
    }

    fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.cols[col].push((row, value));
        }
    }

    fn build(mut self) -> CscMatrix<f64> {
        let mut colptr = Vec::with_capacity(self.cols.len() + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &mut self.cols {
            col.sort_by_key(|&(r, _)| r);
            for &(r, v) in col.iter() {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        CscMatrix::new(self.rows, self.cols.len(), colptr, rowval, nzval)
    }
}

fn gain_db(value: f64) -> f64 {
    20.0 * value.max(f64::MIN_POSITIVE).log10()
}

/// Synthesize beamforming weights for `spec` on `array`.
pub fn synthesize(array: &SensorArray, spec: &PatternSpec) -> Result<BeamformerSolution> {
    spec.validate()?;
    let n = array.len();
    let n_vars = 2 * n + 1;
    let t_col = 2 * n;

    let a_look = pattern_steering(array, spec.look_az_deg, spec.look_el_deg);

    // objective factor: Rn = U^T U (U upper triangular)
    let rn = match spec.noise_model {
        NoiseModel::Isotropic => isotropic_noise_matrix(array),
        NoiseModel::Identity => DMatrix::<f64>::identity(n, n),
    };
    let chol = Cholesky::new(rn).ok_or_else(|| {
        Error::SolverNumerical("objective matrix is not positive definite".into())
    })?;
    let l_factor = chol.l();

    // modulus constraints: interference list first, then sidelobe grid
    let mut modulus: Vec<ModulusConstraint> = Vec::new();
    for (k, i) in spec.interference.iter().enumerate() {
        modulus.push(ModulusConstraint {
            steering: pattern_steering(array, i.az_deg, i.el_deg),
            limit_amplitude: 10f64.powf(i.suppression_db / 20.0),
            limit_db: i.suppression_db,
            label: format!("interference[{k}]@({},{})", i.az_deg, i.el_deg),
            is_sidelobe: false,
        });
    }
    let sl_amplitude = 10f64.powf(spec.sidelobe_db / 20.0);
    let mut sidelobe_points = 0usize;
    for az in spec.grid.az_points() {
        for el in spec.grid.el_points() {
            if spec.in_mainlobe_box(az, el) {
                continue;
            }
            sidelobe_points += 1;
            modulus.push(ModulusConstraint {
                steering: pattern_steering(array, az, el),
                limit_amplitude: sl_amplitude,
                limit_db: spec.sidelobe_db,
                label: format!("sidelobe@({az},{el})"),
                is_sidelobe: true,
            });
        }
    }

    let n_rows = 2 + (2 * n + 1) + 3 * modulus.len();
    let mut a_builder = ColumnMajorBuilder::new(n_rows, n_vars);
    let mut b = vec![0.0f64; n_rows];
    let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(2 + modulus.len());

    // distortionless equality a(look)^H w = 1 (two real rows)
    for k in 0..n {
        let (ar, ai) = (a_look[k].re, a_look[k].im);
        a_builder.push(0, k, ar);
        a_builder.push(0, n + k, ai);
        a_builder.push(1, k, -ai);
        a_builder.push(1, n + k, ar);
    }
    b[0] = 1.0;
    cones.push(SupportedConeT::ZeroConeT(2));

    // epigraph cone: s = [t; U wr; U wi]
    let base = 2;
    a_builder.push(base, t_col, -1.0);
    for i in 0..n {
        for j in i..n {
            let u_ij = l_factor[(j, i)]; // U = L^T
            a_builder.push(base + 1 + i, j, -u_ij);
            a_builder.push(base + 1 + n + i, n + j, -u_ij);
        }
    }
    cones.push(SupportedConeT::SecondOrderConeT(2 * n + 1));

    // modulus cones: s = [limit; Re(a^H w); Im(a^H w)]
    let mut row = base + 2 * n + 1;
    for c in &modulus {
        b[row] = c.limit_amplitude;
        for k in 0..n {
            let (ar, ai) = (c.steering[k].re, c.steering[k].im);
            a_builder.push(row + 1, k, -ar);
            a_builder.push(row + 1, n + k, -ai);
            a_builder.push(row + 2, k, ai);
            a_builder.push(row + 2, n + k, -ar);
        }
        cones.push(SupportedConeT::SecondOrderConeT(3));
        row += 3;
    }

    let a_mat = a_builder.build();
    let p_mat = CscMatrix::<f64>::zeros((n_vars, n_vars));
    let mut q = vec![0.0f64; n_vars];
    q[t_col] = 1.0;

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .map_err(|e| Error::SolverNumerical(format!("settings: {e}")))?;

    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings)
        .map_err(|e| Error::SolverNumerical(format!("setup: {e}")))?;
    solver.solve();

    let status = solver.solution.status;
    let x = &solver.solution.x;
    let raw_w: Vec<Complex64> = (0..n).map(|k| Complex64::new(x[k], x[n + k])).collect();

    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            let (constraint, detail) = most_violated(&raw_w, &a_look, &modulus);
            return Err(Error::Infeasible { constraint, detail });
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Err(Error::SolverNumerical(
                "problem is unbounded (dual infeasible)".into(),
            ));
        }
        SolverStatus::MaxIterations => {
            return Err(Error::SolverStall {
                gap_rel: solver.info.gap_rel,
            });
        }
        other => {
            return Err(Error::SolverNumerical(format!("solver status {other:?}")));
        }
    }

    // exact distortionless response: divide by g = a(look)^H w
    let g: Complex64 = a_look
        .iter()
        .zip(raw_w.iter())
        .map(|(a, w)| a.conj() * w)
        .sum();
    if g.norm() < 1e-12 {
        return Err(Error::SolverNumerical(
            "solution has no response at the look direction".into(),
        ));
    }
    let weights: Vec<Complex64> = raw_w.iter().map(|w| w / g).collect();
    let response = |a: &DVector<Complex64>| -> f64 {
        a.iter()
            .zip(weights.iter())
            .map(|(ak, wk)| ak.conj() * wk)
            .sum::<Complex64>()
            .norm()
    };
    let distortionless_error = (response(&a_look) - 1.0).abs();

    let interference_suppression_db: Vec<f64> = modulus
        .iter()
        .filter(|c| !c.is_sidelobe)
        .map(|c| gain_db(response(&c.steering)))
        .collect();
    let over = modulus
        .iter()
        .filter(|c| c.is_sidelobe)
        .filter(|c| gain_db(response(&c.steering)) > c.limit_db + 1e-6)
        .count();
    let sidelobe_over_requirement_pct = if sidelobe_points > 0 {
        100.0 * over as f64 / sidelobe_points as f64
    } else {
        0.0
    };

    let b_raw = sphere_average_matrix(array);
    let directivity_dbi = directivity_with_matrix(&b_raw, &weights, &a_look);

    Ok(BeamformerSolution {
        weights,
        directivity_dbi,
        interference_suppression_db,
        sidelobe_over_requirement_pct,
        sidelobe_points,
        status: if status == SolverStatus::Solved {
            SolveStatus::Solved
        } else {
            SolveStatus::AlmostSolved
        },
        iterations: solver.info.iterations,
        duality_gap_rel: solver.info.gap_rel,
        solve_seconds: solver.solution.solve_time,
        objective: solver.solution.obj_val,
        distortionless_error,
    })
}

fn most_violated(
    raw_w: &[Complex64],
    a_look: &DVector<Complex64>,
    modulus: &[ModulusConstraint],
) -> (String, String) {
    let g: Complex64 = a_look
        .iter()
        .zip(raw_w.iter())
        .map(|(a, w)| a.conj() * w)
        .sum();
    if g.norm() < 1e-12 {
        return (
            "distortionless".into(),
            "certificate forces zero response at the look direction".into(),
        );
    }
    let mut worst: Option<(f64, &ModulusConstraint)> = None;
    for c in modulus {
        let value: Complex64 = c
            .steering
            .iter()
            .zip(raw_w.iter())
            .map(|(a, w)| a.conj() * w / g)
            .sum();
        let excess = gain_db(value.norm()) - c.limit_db;
        if worst.map_or(true, |(e, _)| excess > e) {
            worst = Some((excess, c));
        }
    }
    match worst {
        Some((excess, c)) => (
            c.label.clone(),
            format!("exceeds its cap by {excess:.2} dB on the infeasibility certificate"),
        ),
        None => ("distortionless".into(), "no inequality constraints".into()),
    }
}

/// Directivity of `weights` toward `(look_az, look_el)` in dBi, using the
/// unloaded sphere-average matrix as the denominator.
pub fn directivity(
    array: &SensorArray,
    weights: &[Complex64],
    look_az_deg: f64,
    look_el_deg: f64,
) -> f64 {
    let a_look = pattern_steering(array, look_az_deg, look_el_deg);
    let b = sphere_average_matrix(array);
    directivity_with_matrix(&b, weights, &a_look)
}

/// `10·log10(|w^H a|² / (w^H·B·w))` for an arbitrary PSD matrix `B`.
pub fn directivity_with_matrix(
    b: &DMatrix<f64>,
    weights: &[Complex64],
    a_look: &DVector<Complex64>,
) -> f64 {
    let n = weights.len();
    let response: Complex64 = a_look
        .iter()
        .zip(weights.iter())
        .map(|(ak, wk)| ak.conj() * wk)
        .sum();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += b[(i, j)] * (weights[i].conj() * weights[j]).re;
        }
    }
    10.0 * (response.norm_sqr() / quad.max(f64::MIN_POSITIVE)).log10()
}

/// Pattern over a grid, dB normalized to the look-direction response.
/// Rows are az-major: `(az_deg, el_deg, gain_db)`.
pub fn pattern_cut(
    array: &SensorArray,
    weights: &[Complex64],
    grid: &DegreeGrid,
    look_az_deg: f64,
    look_el_deg: f64,
) -> Vec<(f64, f64, f64)> {
    let response = |az: f64, el: f64| -> f64 {
        pattern_steering(array, az, el)
            .iter()
            .zip(weights.iter())
            .map(|(ak, wk)| ak.conj() * wk)
            .sum::<Complex64>()
            .norm()
    };
    let main = response(look_az_deg, look_el_deg).max(f64::MIN_POSITIVE);
    let mut rows = Vec::new();
    for az in grid.az_points() {
        for el in grid.el_points() {
            rows.push((az, el, gain_db(response(az, el) / main)));
        }
    }
    rows
}

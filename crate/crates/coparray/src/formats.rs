//! On-disk schemas: JSON document types and CSV renderers.
//!
//! JSON floats are written in shortest round-trip form (parsing reproduces
//! the exact binary value), and every writer iterates in a fixed order, so
//! identical inputs serialize to identical bytes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coarray::{Coarray, PUBLISHED_HOLE_PCT_CPA, PUBLISHED_HOLE_PCT_RCPA_2_3};
use crate::doa::{MusicResult, Peak};
use crate::error::{Error, LatticePoint, Result};
use crate::geometry::SensorArray;
use crate::montecarlo::RmseReport;
use crate::signal::SampleCovariance;

// ---------------------------------------------------------------------------
// Array files
// ---------------------------------------------------------------------------

/// Array document: `{"label", "spacing_over_lambda", "positions"}` with
/// positions sorted lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayFile {
    pub label: String,
    pub spacing_over_lambda: f64,
    pub positions: Vec<LatticePoint>,
}

impl TryFrom<ArrayFile> for SensorArray {
    type Error = Error;

    fn try_from(file: ArrayFile) -> Result<Self> {
        SensorArray::new(file.label, file.positions, file.spacing_over_lambda)
    }
}

impl From<SensorArray> for ArrayFile {
    fn from(array: SensorArray) -> Self {
        ArrayFile {
            label: array.label().to_string(),
            spacing_over_lambda: array.spacing_over_lambda(),
            positions: array.positions().to_vec(),
        }
    }
}

// ---------------------------------------------------------------------------
// Coarray report
// ---------------------------------------------------------------------------

/// Published hole percentages carried for reference. Their counting
/// convention is unreconciled with the bounding-box convention this crate
/// uses, so they are reference values, not reproduction targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedHoleReferences {
    pub rcpa_2_3_pct: f64,
    pub cpa_pct: f64,
    pub note: String,
}

impl Default for PublishedHoleReferences {
    fn default() -> Self {
        Self {
            rcpa_2_3_pct: PUBLISHED_HOLE_PCT_RCPA_2_3,
            cpa_pct: PUBLISHED_HOLE_PCT_CPA,
            note: "published figures use an unreconciled counting convention; \
                   hole_fraction here counts holes inside the tight coarray \
                   bounding box"
                .to_string(),
        }
    }
}

/// Coarray analysis document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarrayReport {
    pub lags: Vec<LatticePoint>,
    /// `[lx, ly, count]` rows in lexicographic lag order.
    pub weights: Vec<(i64, i64, u64)>,
    pub contiguous_half_width: i64,
    pub holes: Vec<LatticePoint>,
    pub hole_fraction: f64,
    pub hole_count: usize,
    pub bounding_box: (i64, i64, i64, i64),
    pub sensor_count: usize,
    pub published_references: PublishedHoleReferences,
}

impl CoarrayReport {
    pub fn from_coarray(co: &Coarray) -> Self {
        CoarrayReport {
            lags: co.lags().iter().copied().collect(),
            weights: co
                .weight_table()
                .iter()
                .map(|(&(lx, ly), &c)| (lx, ly, c))
                .collect(),
            contiguous_half_width: co.contiguous_half_width(),
            holes: co.holes().iter().copied().collect(),
            hole_fraction: co.hole_percentage(),
            hole_count: co.holes().len(),
            bounding_box: co.bounding_box(),
            sensor_count: co.sensor_count(),
            published_references: PublishedHoleReferences::default(),
        }
    }
}

/// Weight heat-map CSV: `lx,ly,weight` in lexicographic lag order.
pub fn weight_grid_csv(co: &Coarray) -> String {
    let mut out = String::from("lx,ly,weight\n");
    for (&(lx, ly), &w) in co.weight_table() {
        out.push_str(&format!("{lx},{ly},{w}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Covariance dump
// ---------------------------------------------------------------------------

/// Sample covariance document: row-major `[re, im]` pairs plus the sensor
/// order that defines the indexing, and the generator metadata that
/// produced the snapshots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceFile {
    pub sensor_order: Vec<LatticePoint>,
    pub snapshots_used: usize,
    pub generator: String,
    pub seed: u64,
    pub matrix: Vec<(f64, f64)>,
}

impl CovarianceFile {
    pub fn from_covariance(cov: &SampleCovariance, generator: &str, seed: u64) -> Self {
        let n = cov.side();
        let mut matrix = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = cov.matrix()[(i, j)];
                matrix.push((z.re, z.im));
            }
        }
        CovarianceFile {
            sensor_order: cov.sensor_order().to_vec(),
            snapshots_used: cov.snapshots_used(),
            generator: generator.to_string(),
            seed,
            matrix,
        }
    }

    pub fn to_covariance(&self) -> Result<SampleCovariance> {
        let n = self.sensor_order.len();
        if self.matrix.len() != n * n {
            return Err(Error::Invalid {
                what: "covariance",
                why: format!(
                    "{} matrix entries for {} sensors (need {})",
                    self.matrix.len(),
                    n,
                    n * n
                ),
            });
        }
        let matrix = DMatrix::from_iterator(
            n,
            n,
            // serialized row-major; DMatrix::from_iterator fills column-major
            (0..n * n).map(|k| {
                let (i, j) = (k % n, k / n);
                let (re, im) = self.matrix[i * n + j];
                Complex64::new(re, im)
            }),
        );
        SampleCovariance::from_parts(matrix, self.sensor_order.clone(), self.snapshots_used)
    }
}

// ---------------------------------------------------------------------------
// Spectrum / peaks
// ---------------------------------------------------------------------------

/// Spectrum CSV: `az_deg,el_deg,spectrum` row-major over the grid.
pub fn spectrum_csv(result: &MusicResult) -> String {
    let mut out = String::from("az_deg,el_deg,spectrum\n");
    for (i, &az) in result.az_points().iter().enumerate() {
        for (j, &el) in result.el_points().iter().enumerate() {
            out.push_str(&format!("{az},{el},{}\n", result.value_at(i, j)));
        }
    }
    out
}

/// Peaks document: `[{"az_deg", "el_deg", "value"}, ...]`.
pub fn peaks_json(peaks: &[Peak]) -> String {
    serde_json::to_string_pretty(peaks).expect("peaks serialize")
}

// ---------------------------------------------------------------------------
// RMSE report
// ---------------------------------------------------------------------------

/// Sweep report CSV with one row per (array, swept value).
pub fn rmse_report_csv(report: &RmseReport) -> String {
    let mut out = String::from(
        "array_label,swept_variable,value,rmse_normalized,rmse_degrees,trials_used,trials_excluded\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.array_label,
            row.swept_variable,
            row.value,
            row.rmse_normalized,
            row.rmse_degrees,
            row.trials_used,
            row.trials_excluded
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Beamformer outputs
// ---------------------------------------------------------------------------

/// Weight entry `{"re", "im"}` in sensor order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub re: f64,
    pub im: f64,
}

pub fn weights_json(weights: &[Complex64]) -> String {
    let entries: Vec<WeightEntry> = weights
        .iter()
        .map(|w| WeightEntry { re: w.re, im: w.im })
        .collect();
    serde_json::to_string_pretty(&entries).expect("weights serialize")
}

pub fn weights_from_json(text: &str) -> Result<Vec<Complex64>> {
    let entries: Vec<WeightEntry> = serde_json::from_str(text).map_err(|e| Error::Invalid {
        what: "weights",
        why: e.to_string(),
    })?;
    Ok(entries
        .into_iter()
        .map(|e| Complex64::new(e.re, e.im))
        .collect())
}

/// Achieved-metrics document for a synthesis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformMetricsFile {
    pub directivity_dbi: f64,
    pub interference_suppression_db: Vec<f64>,
    pub sidelobe_over_requirement_pct: f64,
    pub solve_seconds: f64,
    pub status: crate::beamform::SolveStatus,
    pub iterations: u32,
    pub duality_gap_rel: f64,
    pub distortionless_error: f64,
}

impl BeamformMetricsFile {
    pub fn from_solution(sol: &crate::beamform::BeamformerSolution) -> Self {
        Self {
            directivity_dbi: sol.directivity_dbi,
            interference_suppression_db: sol.interference_suppression_db.clone(),
            sidelobe_over_requirement_pct: sol.sidelobe_over_requirement_pct,
            solve_seconds: sol.solve_seconds,
            status: sol.status,
            iterations: sol.iterations,
            duality_gap_rel: sol.duality_gap_rel,
        distortionless_error: sol.distortionless_error,
        }
    }
}

/// Pattern CSV: `az_deg,el_deg,gain_db` rows.
pub fn pattern_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("az_deg,el_deg,gain_db\n");
    for (az, el, db) in rows {
        out.push_str(&format!("{az},{el},{db}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarray::difference_coarray;
    use crate::geometry::{rcpa, CoprimePair};
    use crate::signal::analytic_covariance;

    #[test]
    fn array_file_round_trip() {
        let arr = rcpa(&CoprimePair::new(2, 3).unwrap());
        let json = serde_json::to_string(&arr).unwrap();
        assert!(json.contains("\"spacing_over_lambda\":0.5"));
        let back: SensorArray = serde_json::from_str(&json).unwrap();
        assert_eq!(arr, back);
    }

    #[test]
    fn array_file_rejects_invalid_documents() {
        let bad = r#"{"label":"x","spacing_over_lambda":0.9,"positions":[[0,0]]}"#;
        assert!(serde_json::from_str::<SensorArray>(bad).is_err());
        let dup = r#"{"label":"x","spacing_over_lambda":0.5,"positions":[[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<SensorArray>(dup).is_err());
    }

    #[test]
    fn coarray_report_carries_published_references() {
        let co = difference_coarray(&rcpa(&CoprimePair::new(2, 3).unwrap()));
        let report = CoarrayReport::from_coarray(&co);
        assert_eq!(report.contiguous_half_width, 7);
        assert_eq!(report.hole_count, 72);
        assert_eq!(report.hole_fraction, 72.0 / 361.0);
        assert_eq!(report.published_references.rcpa_2_3_pct, 23.52);
        assert_eq!(report.published_references.cpa_pct, 34.4);
        assert!(report.published_references.note.contains("unreconciled"));
        let json = serde_json::to_string(&report).unwrap();
        let back: CoarrayReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn covariance_file_round_trip_preserves_entries() {
        let arr = rcpa(&CoprimePair::new(1, 2).unwrap());
        let src = crate::signal::Source {
            theta_n: 0.2,
            phi_n: -0.3,
            power: 1.5,
        };
        let cov = analytic_covariance(&arr, &[src], 0.25);
        let file = CovarianceFile::from_covariance(&cov, "chacha12", 42);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: CovarianceFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_covariance().unwrap();
        assert_eq!(cov.matrix(), back.matrix());
        assert_eq!(cov.sensor_order(), back.sensor_order());
    }

    #[test]
    fn csv_renderers_are_stable() {
        let co = difference_coarray(&rcpa(&CoprimePair::new(1, 2).unwrap()));
        let csv = weight_grid_csv(&co);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lx,ly,weight");
        assert_eq!(lines.len(), 1 + co.lags().len());
        // weights of the 3x3 URA coarray: lag (0,0) has weight 9
        assert!(lines.contains(&"0,0,9"));
        assert_eq!(csv, weight_grid_csv(&co));
    }
}

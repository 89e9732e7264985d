//! Difference-coarray analysis.
//!
//! The difference coarray of an array with positions `P` is the multiset
//! `{p - q : p, q in P}`. Its distinct elements are the virtual sensor
//! positions (lags); the multiplicity of each lag is the weight function
//! `g(l)`. Holes are lattice points inside the coarray bounding box that no
//! sensor pair produces, and the contiguous half-width is the largest `h`
//! such that every lag with both coordinates in `[-h, h]` is present — the
//! usable virtual aperture for covariance augmentation.
//!
//! Hole statistics are reported against the tight bounding box of the full
//! lag set, isolated extreme lags included. Published hole percentages for
//! these geometries use an unstated counting convention that does not match
//! any box convention we could reconstruct, so reports carry both this
//! crate's counts and the published figures, clearly flagged (see
//! [`PUBLISHED_HOLE_PCT_RCPA_2_3`]).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::LatticePoint;
use crate::geometry::SensorArray;

/// Published reference hole percentage for the rectangular coprime planar
/// array at (M=2, N=3). Convention unreconciled; not reproduced by
/// [`Coarray::hole_percentage`], which reports 72/361 for that geometry.
pub const PUBLISHED_HOLE_PCT_RCPA_2_3: f64 = 23.52;

/// Published reference hole percentage for the CPA baseline, same caveat.
pub const PUBLISHED_HOLE_PCT_CPA: f64 = 34.4;

/// Immutable difference coarray of a sensor array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coarray {
    lags: BTreeSet<LatticePoint>,
    weights: BTreeMap<LatticePoint, u64>,
    contiguous_half_width: i64,
    bounding_box: (i64, i64, i64, i64),
    holes: BTreeSet<LatticePoint>,
    sensor_count: usize,
}

/// Compute the difference coarray of `array`: every ordered sensor pair
/// `(p, q)` contributes the lag `p - q`, so the weight map counts ordered
/// pairs and always sums to (sensor count)².
pub fn difference_coarray(array: &SensorArray) -> Coarray {
    let positions = array.positions();
    let mut weights: BTreeMap<LatticePoint, u64> = BTreeMap::new();
    for &(px, py) in positions {
        for &(qx, qy) in positions {
            *weights.entry((px - qx, py - qy)).or_insert(0) += 1;
        }
    }
    let lags: BTreeSet<LatticePoint> = weights.keys().copied().collect();

    let min_x = lags.iter().map(|l| l.0).min().unwrap();
    let max_x = lags.iter().map(|l| l.0).max().unwrap();
    let min_y = lags.iter().map(|l| l.1).min().unwrap();
    let max_y = lags.iter().map(|l| l.1).max().unwrap();

    let mut holes = BTreeSet::new();
    for x in min_x..=max_x {
        for y in min_y..=max_y {
            if !lags.contains(&(x, y)) {
                holes.insert((x, y));
            }
        }
    }

    let half_extent = max_x.max(max_y);
    let mut contiguous_half_width = 0;
    'outer: for h in 1..=half_extent {
        for x in -h..=h {
            for y in -h..=h {
                if !lags.contains(&(x, y)) {
                    break 'outer;
                }
            }
        }
        contiguous_half_width = h;
    }

    Coarray {
        lags,
        weights,
        contiguous_half_width,
        bounding_box: (min_x, max_x, min_y, max_y),
        holes,
        sensor_count: positions.len(),
    }
}

impl Coarray {
    /// Distinct lag vectors, lexicographically ordered.
    pub fn lags(&self) -> &BTreeSet<LatticePoint> {
        &self.lags
    }

    pub fn contains(&self, lag: LatticePoint) -> bool {
        self.lags.contains(&lag)
    }

    /// Weight (redundancy) of one lag, 0 if absent.
    pub fn weight(&self, lag: LatticePoint) -> u64 {
        self.weights.get(&lag).copied().unwrap_or(0)
    }

    /// The weight function as a map, iterated in lexicographic lag order.
    pub fn weight_table(&self) -> &BTreeMap<LatticePoint, u64> {
        &self.weights
    }

    /// Largest `h` such that every lag with both coordinates in `[-h, h]`
    /// is present. 0 when only the zero lag is guaranteed.
    pub fn contiguous_half_width(&self) -> i64 {
        self.contiguous_half_width
    }

    /// `(min_x, max_x, min_y, max_y)` of the lag set.
    pub fn bounding_box(&self) -> (i64, i64, i64, i64) {
        self.bounding_box
    }

    /// Lattice points inside the bounding box that are not lags.
    pub fn holes(&self) -> &BTreeSet<LatticePoint> {
        &self.holes
    }

    /// Fraction of bounding-box lattice points that are holes, in [0, 1].
    pub fn hole_percentage(&self) -> f64 {
        self.holes.len() as f64 / self.bounding_box_area() as f64
    }

    /// Number of lattice points inside the bounding box.
    pub fn bounding_box_area(&self) -> u64 {
        let (min_x, max_x, min_y, max_y) = self.bounding_box;
        ((max_x - min_x + 1) as u64) * ((max_y - min_y + 1) as u64)
    }

    /// Number of physical sensors of the generating array.
    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }
}

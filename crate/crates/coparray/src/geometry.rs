//! Sensor-position generators for sparse planar arrays.
//!
//! All geometries live on the non-negative integer lattice, in units of the
//! base inter-element spacing `d`. Storing exact integers keeps all lag
//! arithmetic in the coarray module exact; physical coordinates are derived
//! on demand from `spacing_over_lambda`.
//!
//! Generators:
//! - [`coprime_1d`]: the 1-D coprime array
//!   `{M·n | 1 <= n <= N-1} ∪ {N·m | 0 <= m <= 2M-1}` with `2M+N-1` sensors.
//! - [`rcpa`]: rectangular coprime planar array, the Cartesian product
//!   `S × S` of the 1-D coprime set with itself.
//! - [`cpa`]: coprime planar array, the union of an `M×M` lattice spaced `N`
//!   and an `N×N` lattice spaced `M`, sharing the origin sensor.
//! - [`gcpa`]: generalized two-rectangle coprime planar array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, LatticePoint, Result};

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A validated coprime integer pair (M, N) with M, N >= 1 and gcd(M, N) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoprimePair {
    m: u32,
    n: u32,
}

impl CoprimePair {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Invalid {
                what: "coprime pair",
                why: format!("({m},{n}) must both be >= 1"),
            });
        }
        let g = gcd(m, n);
        if g != 1 {
            return Err(Error::NotCoprime { m, n, g });
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// A physical sensor array: a set of unique lattice positions plus the
/// element spacing expressed as a fraction of the wavelength.
///
/// Invariants enforced at construction: positions are unique, sorted
/// lexicographically, have non-negative coordinates (arrays are placed in
/// the first quadrant), and `0 < spacing_over_lambda <= 0.5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::formats::ArrayFile", into = "crate::formats::ArrayFile")]
pub struct SensorArray {
    label: String,
    spacing_over_lambda: f64,
    positions: Vec<LatticePoint>,
}

pub const DEFAULT_SPACING_OVER_LAMBDA: f64 = 0.5;

impl SensorArray {
    /// Build an array from explicit positions. Positions are sorted and
    /// validated; duplicates or negative coordinates are rejected.
    pub fn new(
        label: impl Into<String>,
        mut positions: Vec<LatticePoint>,
        spacing_over_lambda: f64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Invalid {
                what: "positions",
                why: "array must contain at least one sensor".into(),
            });
        }
        positions.sort_unstable();
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid {
                what: "positions",
                why: "duplicate sensor position".into(),
            });
        }
        if let Some(&(x, y)) = positions.iter().find(|&&(x, y)| x < 0 || y < 0) {
            return Err(Error::Invalid {
                what: "positions",
                why: format!("negative coordinate ({x},{y}); arrays live in the first quadrant"),
            });
        }
        if !(spacing_over_lambda > 0.0 && spacing_over_lambda <= 0.5) {
            return Err(Error::Invalid {
                what: "spacing_over_lambda",
                why: format!("{spacing_over_lambda} not in (0, 0.5]"),
            });
        }
        Ok(Self {
            label: label.into(),
            spacing_over_lambda,
            positions,
        })
    }

    fn from_sorted_unique(label: String, positions: Vec<LatticePoint>) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        Self {
            label,
            spacing_over_lambda: DEFAULT_SPACING_OVER_LAMBDA,
            positions,
        }
    }

    /// Same array with a different element spacing (still at most λ/2).
    pub fn with_spacing_over_lambda(mut self, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing <= 0.5) {
            return Err(Error::Invalid {
                what: "spacing_over_lambda",
                why: format!("{spacing} not in (0, 0.5]"),
            });
        }
        self.spacing_over_lambda = spacing;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spacing_over_lambda(&self) -> f64 {
        self.spacing_over_lambda
    }

    /// Positions in lexicographic order; this order defines the sensor
    /// indexing used by snapshot matrices and covariances.
    pub fn positions(&self) -> &[LatticePoint] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.positions.binary_search(&p).is_ok()
    }
}

/// 1-D coprime array `{M·n | 1 <= n <= N-1} ∪ {N·m | 0 <= m <= 2M-1}`,
/// represented on the lattice with the second coordinate fixed to 0.
/// Always has exactly `2M+N-1` sensors.
pub fn coprime_1d(pair: &CoprimePair) -> SensorArray {
    let set = coprime_1d_set(pair);
    let positions: Vec<LatticePoint> = set.iter().map(|&x| (x, 0)).collect();
    let array = SensorArray::from_sorted_unique(
        format!("coprime1d({},{})", pair.m(), pair.n()),
        positions,
    );
    debug_assert_eq!(array.len() as u32, 2 * pair.m() + pair.n() - 1);
    array
}

/// The sorted 1-D coprime position set with `d` factored out.
fn coprime_1d_set(pair: &CoprimePair) -> Vec<i64> {
    let m = i64::from(pair.m());
    let n = i64::from(pair.n());
    let mut set: Vec<i64> = (1..n).map(|k| m * k).chain((0..2 * m).map(|k| n * k)).collect();
    set.sort_unstable();
    set.dedup();
    set
}

/// Rectangular coprime planar array: the Cartesian product `S × S` of the
/// 1-D coprime set with itself, `(2M+N-1)²` sensors.
pub fn rcpa(pair: &CoprimePair) -> SensorArray {
    let set = coprime_1d_set(pair);
    let mut positions = Vec::with_capacity(set.len() * set.len());
    for &x in &set {
        for &y in &set {
            positions.push((x, y));
        }
    }
    positions.sort_unstable();
    SensorArray::from_sorted_unique(format!("rcpa({},{})", pair.m(), pair.n()), positions)
}

/// Coprime planar array: `M×M` lattice spaced `N` union `N×N` lattice spaced
/// `M`, sharing the origin sensor, `M² + N² - 1` sensors in total.
pub fn cpa(pair: &CoprimePair) -> SensorArray {
    cpa_with_offset(pair, (0, 0)).expect("zero offset is always valid")
}

/// CPA with the second subarray translated by `offset`. The default layout
/// is origin-shared (`offset = (0,0)`); a translation is exposed because the
/// relative placement of the two lattices is a free design choice.
pub fn cpa_with_offset(pair: &CoprimePair, offset: LatticePoint) -> Result<SensorArray> {
    if offset.0 < 0 || offset.1 < 0 {
        return Err(Error::Invalid {
            what: "offset",
            why: format!("({},{}) must be non-negative", offset.0, offset.1),
        });
    }
    let m = i64::from(pair.m());
    let n = i64::from(pair.n());
    let mut positions = Vec::new();
    for i in 0..m {
        for j in 0..m {
            positions.push((n * i, n * j));
        }
    }
    for i in 0..n {
        for j in 0..n {
            positions.push((m * i + offset.0, m * j + offset.1));
        }
    }
    positions.sort_unstable();
    positions.dedup();
    let label = if offset == (0, 0) {
        format!("cpa({},{})", pair.m(), pair.n())
    } else {
        format!("cpa({},{})+({},{})", pair.m(), pair.n(), offset.0, offset.1)
    };
    Ok(SensorArray::from_sorted_unique(label, positions))
}

/// Generalized coprime planar array of two rectangular subarrays:
/// subarray1 has `N1 × M1` sensors with spacings `(N2, M2)`, subarray2 has
/// `N2 × M2` sensors with spacings `(N1, M1)`. Requires `gcd(N1,N2) = 1`
/// and `gcd(M1,M2) = 1`.
pub fn gcpa(n1: u32, m1: u32, n2: u32, m2: u32) -> Result<SensorArray> {
    for (v, name) in [(n1, "n1"), (m1, "m1"), (n2, "n2"), (m2, "m2")] {
        if v == 0 {
            return Err(Error::Invalid {
                what: "subarray size",
                why: format!("{name} must be >= 1"),
            });
        }
    }
    let gx = gcd(n1, n2);
    if gx != 1 {
        return Err(Error::NotCoprimeAxis {
            a: n1,
            b: n2,
            g: gx,
            axis: 'x',
        });
    }
    let gy = gcd(m1, m2);
    if gy != 1 {
        return Err(Error::NotCoprimeAxis {
            a: m1,
            b: m2,
            g: gy,
            axis: 'y',
        });
    }
    let (n1, m1, n2, m2) = (i64::from(n1), i64::from(m1), i64::from(n2), i64::from(m2));
    let mut positions = Vec::new();
    for i in 0..n1 {
        for j in 0..m1 {
            positions.push((n2 * i, m2 * j));
        }
    }
    for i in 0..n2 {
        for j in 0..m2 {
            positions.push((n1 * i, m1 * j));
        }
    }
    positions.sort_unstable();
    positions.dedup();
    Ok(SensorArray::from_sorted_unique(
        format!("gcpa({n1},{m1},{n2},{m2})"),
        positions,
    ))
}

/// Declarative array descriptor, used by sweep specifications and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ArrayDesign {
    Coprime1d { m: u32, n: u32 },
    Rcpa { m: u32, n: u32 },
    Cpa { m: u32, n: u32 },
    Gcpa { n1: u32, m1: u32, n2: u32, m2: u32 },
}

impl ArrayDesign {
    pub fn build(&self) -> Result<SensorArray> {
        match *self {
            ArrayDesign::Coprime1d { m, n } => Ok(coprime_1d(&CoprimePair::new(m, n)?)),
            ArrayDesign::Rcpa { m, n } => Ok(rcpa(&CoprimePair::new(m, n)?)),
            ArrayDesign::Cpa { m, n } => Ok(cpa(&CoprimePair::new(m, n)?)),
            ArrayDesign::Gcpa { n1, m1, n2, m2 } => gcpa(n1, m1, n2, m2),
        }
    }
}

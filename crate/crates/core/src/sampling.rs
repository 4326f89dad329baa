//! Reproducible parameter-point sampling.
//!
//! Every consumer draws from its own ChaCha8 stream, selected by a fixed
//! stream id, so adding a check never shifts the samples another check sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immersion::PointGeometry;
use crate::linalg::Vector;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_COUNT: usize = 100;
/// Points used for checks that draw random tuples at each point.
pub const TUPLE_POINTS: usize = 20;
pub const TUPLES_PER_POINT: usize = 50;
/// Random directions per point for slant-constancy.
pub const DIRECTIONS_PER_POINT: usize = 20;

/// Where the parameter points come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Sampling {
    SeededBox {
        /// `[lo, hi]` per parameter, in parameter order.
        bounds: Vec<[f64; 2]>,
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    FixedList {
        points: Vec<Vec<f64>>,
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Sampling {
    pub fn unit_box(n: usize) -> Sampling {
        Sampling::SeededBox {
            bounds: vec![[-1.0, 1.0]; n],
            count: DEFAULT_COUNT,
            seed: DEFAULT_SEED,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Sampling::SeededBox { seed, .. } | Sampling::FixedList { seed, .. } => *seed,
        }
    }

    pub fn count(&self) -> usize {
        match self {
            Sampling::SeededBox { count, .. } => *count,
            Sampling::FixedList { points, .. } => points.len(),
        }
    }

    pub fn with_seed(mut self, new_seed: u64) -> Sampling {
        match &mut self {
            Sampling::SeededBox { seed, .. } | Sampling::FixedList { seed, .. } => *seed = new_seed,
        }
        self
    }

    /// Changes the point count of a seeded box; fixed lists keep their points.
    pub fn with_count(mut self, new_count: usize) -> Sampling {
        if let Sampling::SeededBox { count, .. } = &mut self {
            *count = new_count;
        }
        self
    }

    pub fn validate(&self, n: usize, problems: &mut Vec<String>) {
        match self {
            Sampling::SeededBox { bounds, count, .. } => {
                if bounds.len() != n {
                    problems.push(format!(
                        "sampling box has {} intervals but the immersion has {n} parameters",
                        bounds.len()
                    ));
                }
                for (i, [lo, hi]) in bounds.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        problems.push(format!("sampling interval {i} [{lo}, {hi}] is not a finite interval"));
                    }
                }
                if *count == 0 {
                    problems.push("sampling count must be positive".to_string());
                }
            }
            Sampling::FixedList { points, .. } => {
                if points.is_empty() {
                    problems.push("fixed sampling list is empty".to_string());
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != n {
                        problems.push(format!(
                            "fixed point {i} has {} coordinates but the immersion has {n} parameters",
                            p.len()
                        ));
                    }
                }
            }
        }
    }

    /// The first `count` points of this sampling (all of them for `None`).
    /// Fixed lists cycle when more points are requested than listed.
    pub fn points(&self, count: Option<usize>) -> Vec<Vec<f64>> {
        match self {
            Sampling::SeededBox { bounds, count: c, seed } => {
                let k = count.unwrap_or(*c).min(*c);
                let mut rng = stream(*seed, Stream::Points);
                (0..k)
                    .map(|_| bounds.iter().map(|[lo, hi]| draw(&mut rng, *lo, *hi)).collect())
                    .collect()
            }
            Sampling::FixedList { points, .. } => {
                let k = count.unwrap_or(points.len()).min(points.len());
                points[..k].to_vec()
            }
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Points = 1,
    Directions = 2,
    Tuples = 3,
    Oracle = 4,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Stream for one point of a batch, so batches can be processed in any
/// order and still draw the same numbers.
pub fn point_stream(seed: u64, which: Stream, point: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(which as u64);
    rng
}

/// A random combination of `basis` (parameter vectors) with coefficients
/// uniform in `[−1, 1]`, rescaled to unit induced norm.
pub fn random_unit(rng: &mut ChaCha8Rng, geo: &PointGeometry, basis: &[Vector]) -> Result<Vector> {
    if basis.is_empty() {
        return Err(Error::Precondition("cannot draw from an empty subbundle".into()));
    }
    for _ in 0..16 {
        let mut v = Vector::zeros(geo.n());
        for b in basis {
            v.axpy(rng.random_range(-1.0..1.0), b, 1.0);
        }
        let norm = geo.param_norm(&v);
        if norm > 1e-3 {
            return Ok(v / norm);
        }
    }
    Err(Error::Precondition("random direction repeatedly degenerate".into()))
}

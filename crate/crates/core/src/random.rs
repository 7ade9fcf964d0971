//! Seeded generators for random operators, functions and probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{CompactGrid, GridFunction, GridId};
use crate::operators::{SampleOperator, ScalarPwl, SuperpositionField, TensorOperator, TensorTerm};

/// Deterministic generator used throughout the crate.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of a random PWL function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwlShape {
    pub min_breakpoints: usize,
    pub max_breakpoints: usize,
    pub lo: f64,
    pub hi: f64,
    /// Breakpoints are drawn from `lo + k * lattice` when set.
    pub lattice: Option<f64>,
    pub max_slope: f64,
}

impl Default for PwlShape {
    fn default() -> Self {
        Self {
            min_breakpoints: 1,
            max_breakpoints: 8,
            lo: -3.0,
            hi: 3.0,
            lattice: None,
            max_slope: 2.0,
        }
    }
}

pub fn random_pwl<R: Rng + ?Sized>(rng: &mut R, shape: &PwlShape) -> ScalarPwl {
    let n = rng.gen_range(shape.min_breakpoints..=shape.max_breakpoints);
    let mut xs: Vec<f64> = match shape.lattice {
        Some(step) => {
            let cells = ((shape.hi - shape.lo) / step).floor() as usize;
            let mut ks: Vec<usize> = Vec::with_capacity(n);
            while ks.len() < n.min(cells + 1) {
                let k = rng.gen_range(0..=cells);
                if !ks.contains(&k) {
                    ks.push(k);
                }
            }
            ks.into_iter().map(|k| shape.lo + k as f64 * step).collect()
        }
        None => (0..n).map(|_| rng.gen_range(shape.lo..shape.hi)).collect(),
    };
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let mut slope = || rng.gen_range(-shape.max_slope..=shape.max_slope);
    let mut values = Vec::with_capacity(xs.len());
    let mut y = slope();
    values.push(y);
    for w in xs.windows(2) {
        y += slope() * (w[1] - w[0]);
        values.push(y);
    }
    let left = slope();
    let right = slope();
    ScalarPwl::new(xs, values, left, right).expect("well-formed random PWL")
}

pub fn random_field<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &CompactGrid,
    shape: &PwlShape,
) -> SuperpositionField {
    SuperpositionField {
        grid_id: grid.id().clone(),
        slices: (0..grid.len()).map(|_| random_pwl(rng, shape)).collect(),
    }
}

/// A random function `a + b sin(c w + d)` plus small uniform noise.
pub fn random_function<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &CompactGrid,
    scale: f64,
) -> GridFunction {
    let a = rng.gen_range(-scale..scale);
    let b = rng.gen_range(-scale..scale);
    let c = rng.gen_range(-4.0..4.0);
    let d = rng.gen_range(0.0..6.3);
    let values = grid
        .points()
        .iter()
        .map(|p| a + b * (c * p[0] + d).sin() + rng.gen_range(-0.05 * scale..0.05 * scale))
        .collect();
    GridFunction {
        grid_id: grid.id().clone(),
        values,
    }
}

pub fn random_tensor<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &CompactGrid,
    terms: usize,
    shape: &PwlShape,
) -> TensorOperator {
    TensorOperator {
        grid_id: grid.id().clone(),
        terms: (0..terms)
            .map(|_| TensorTerm {
                coefficient: random_function(rng, grid, 1.0),
                profile: random_pwl(rng, shape),
            })
            .collect(),
    }
}

/// Samples `field` at `count` random inputs.
pub fn random_samples<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &CompactGrid,
    field: &SuperpositionField,
    count: usize,
    scale: f64,
) -> SampleOperator {
    let samples = (0..count)
        .map(|_| {
            let g = random_function(rng, grid, scale);
            let tg = field.eval(&g).expect("field on grid");
            crate::operators::Sample {
                input: g,
                output: tg,
            }
        })
        .collect();
    SampleOperator {
        grid_id: grid.id().clone(),
        samples,
    }
}

/// Pairs of constant functions with values in `[lo, hi)`, at least
/// `1e-3 * (hi - lo)` apart.
pub fn random_constant_probes<R: Rng + ?Sized>(
    rng: &mut R,
    grid_id: &GridId,
    len: usize,
    count: usize,
    (lo, hi): (f64, f64),
) -> Vec<(GridFunction, GridFunction)> {
    let mut probes = Vec::with_capacity(count);
    while probes.len() < count {
        let r = rng.gen_range(lo..hi);
        let s = rng.gen_range(lo..hi);
        if (r - s).abs() < 1e-3 * (hi - lo) {
            continue;
        }
        probes.push((
            GridFunction {
                grid_id: grid_id.clone(),
                values: vec![r; len],
            },
            GridFunction {
                grid_id: grid_id.clone(),
                values: vec![s; len],
            },
        ));
    }
    probes
}

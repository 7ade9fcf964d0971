//! Bound functions and operator norms.
//!
//! For a sampled operator the smallest admissible bound at `w` is the largest
//! ratio `|Tf(w) - Tg(w)| / |f(w) - g(w)|` over sample pairs. That envelope can
//! jump, so continuous alternatives are offered too: the constant bound and
//! the least `L`-Lipschitz majorant of the envelope.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{LlipError, Result};
use crate::grid::{continuity_report, CompactGrid, ContinuityReport, GridFunction, Threshold};
use crate::operators::{OperatorRep, SampleOperator, SuperpositionField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    MinimalEnvelope,
    Constant,
    LipschitzMajorant,
    User,
}

/// Where the largest violation of the pointwise inequality occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationSite {
    pub pair: (usize, usize),
    pub point: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub phi: GridFunction,
    pub max_violation: f64,
    pub continuity: ContinuityReport,
    pub source: BoundSource,
    /// Present when some pair violates the inequality.
    pub worst_violation: Option<ViolationSite>,
}

impl BoundReport {
    pub fn accepted(&self, tolerance: f64) -> bool {
        self.max_violation <= tolerance
    }
}

/// Continuity diagnostics of `f` with the radius and threshold taken from `cfg`.
pub fn diagnose_continuity(
    grid: &CompactGrid,
    f: &GridFunction,
    cfg: &Config,
) -> Result<ContinuityReport> {
    continuity_report(
        grid,
        f,
        grid.adjacency_radius(cfg.adjacency_radius_factor),
        Threshold::MedianFactor(cfg.continuity_threshold_factor),
    )
}

#[inline]
fn ratio(tf: f64, tg: f64, f: f64, g: f64, zero_tol: f64) -> f64 {
    let den = (f - g).abs();
    if den <= zero_tol {
        0.0
    } else {
        (tf - tg).abs() / den
    }
}

/// `w -> |Tf(w) - Tg(w)| / |f(w) - g(w)|`, zero where `f` and `g` agree.
pub fn ratio_function(
    op: &OperatorRep,
    f: &GridFunction,
    g: &GridFunction,
    zero_tol: f64,
) -> Result<GridFunction> {
    f.ensure_compatible(g)?;
    let tf = op.eval(f)?;
    let tg = op.eval(g)?;
    Ok(GridFunction {
        grid_id: f.grid_id.clone(),
        values: (0..f.len())
            .map(|w| {
                ratio(
                    tf.values[w],
                    tg.values[w],
                    f.values[w],
                    g.values[w],
                    zero_tol,
                )
            })
            .collect(),
    })
}

/// Pointwise maximum of all pairwise ratio functions of the samples.
fn envelope_values(op: &SampleOperator, zero_tol: f64) -> Vec<f64> {
    let samples = &op.samples;
    let n = samples.first().map_or(0, |s| s.input.len());
    let mut phi = vec![0.0f64; n];
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            for (w, slot) in phi.iter_mut().enumerate() {
                let r = ratio(
                    a.output.values[w],
                    b.output.values[w],
                    a.input.values[w],
                    b.input.values[w],
                    zero_tol,
                );
                if r > *slot {
                    *slot = r;
                }
            }
        }
    }
    phi
}

fn require_pairs(op: &SampleOperator) -> Result<()> {
    if op.samples.len() < 2 {
        return Err(LlipError::InsufficientSamples {
            required: 2,
            found: op.samples.len(),
        });
    }
    Ok(())
}

/// The smallest bound function the samples admit.
pub fn minimal_envelope(
    op: &SampleOperator,
    grid: &CompactGrid,
    cfg: &Config,
) -> Result<BoundReport> {
    op.check_on(grid)?;
    require_pairs(op)?;
    let phi = GridFunction::new(grid, envelope_values(op, cfg.zero_tol))?;
    let continuity = diagnose_continuity(grid, &phi, cfg)?;
    Ok(BoundReport {
        phi,
        max_violation: 0.0,
        continuity,
        source: BoundSource::MinimalEnvelope,
        worst_violation: None,
    })
}

/// The constant function equal to the supremum of the minimal envelope.
pub fn constant_bound(
    op: &SampleOperator,
    grid: &CompactGrid,
    cfg: &Config,
) -> Result<BoundReport> {
    op.check_on(grid)?;
    require_pairs(op)?;
    let q = envelope_values(op, cfg.zero_tol)
        .into_iter()
        .fold(0.0, f64::max);
    let phi = GridFunction::constant(grid, q)?;
    let continuity = diagnose_continuity(grid, &phi, cfg)?;
    Ok(BoundReport {
        phi,
        max_violation: 0.0,
        continuity,
        source: BoundSource::Constant,
        worst_violation: None,
    })
}

/// Least `lip`-Lipschitz function on the grid lying above `phi_min`:
/// `w -> max_k (phi_min(k) - lip * d(w, k))`.
pub fn lipschitz_majorant(
    grid: &CompactGrid,
    phi_min: &GridFunction,
    lip: f64,
) -> Result<GridFunction> {
    phi_min.check_on(grid)?;
    if !lip.is_finite() || lip < 0.0 {
        return Err(LlipError::NegativeLipschitz(lip));
    }
    let n = grid.len();
    let values = (0..n)
        .map(|w| {
            (0..n)
                .map(|k| {
                    if k == w {
                        phi_min.values[k]
                    } else {
                        phi_min.values[k] - lip * grid.distance(w, k)
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(grid, values)
}

/// Checks `|Tf(w) - Tg(w)| <= phi(w) |f(w) - g(w)|` over every sample pair
/// and grid point. `max_violation` is the largest excess, floored at 0.
pub fn verify_bound(
    op: &SampleOperator,
    grid: &CompactGrid,
    phi: &GridFunction,
    cfg: &Config,
) -> Result<BoundReport> {
    op.check_on(grid)?;
    phi.check_on(grid)?;
    if let Some((index, &value)) = phi.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(LlipError::NegativeBound { index, value });
    }
    let (max_violation, worst_violation) = max_violation(op, phi, cfg.zero_tol);
    let continuity = diagnose_continuity(grid, phi, cfg)?;
    Ok(BoundReport {
        phi: phi.clone(),
        max_violation,
        continuity,
        source: BoundSource::User,
        worst_violation,
    })
}

pub(crate) fn max_violation(
    op: &SampleOperator,
    phi: &GridFunction,
    zero_tol: f64,
) -> (f64, Option<ViolationSite>) {
    let samples = &op.samples;
    let mut worst = 0.0f64;
    let mut site = None;
    for (i, a) in samples.iter().enumerate() {
        for (j, b) in samples.iter().enumerate().skip(i + 1) {
            for w in 0..phi.len() {
                let num = (a.output.values[w] - b.output.values[w]).abs();
                let den = (a.input.values[w] - b.input.values[w]).abs();
                // ratio form, so that the envelope itself gives exactly zero
                let excess = if den > zero_tol {
                    (num / den - phi.values[w]) * den
                } else {
                    num - phi.values[w] * den
                };
                if excess > worst {
                    worst = excess;
                    site = Some(ViolationSite {
                        pair: (i, j),
                        point: w,
                    });
                }
            }
        }
    }
    (worst, site)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Exact,
    /// Certified lower bound: every extension of the samples has norm at least this.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub kind: NormKind,
    /// Grid point where the supremum is attained (lowest index on ties).
    pub argmax: usize,
}

fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        best.1 = 0.0;
    }
    best
}

/// Smallest constant bound: exact for field, tensor and multiplication
/// backends, a certified lower estimate for sampled operators.
pub fn llip_norm(op: &OperatorRep, zero_tol: f64) -> Result<OperatorNorm> {
    let (argmax, value, kind) = match op {
        OperatorRep::Superposition(field) => {
            let (i, v) = argmax_lowest(field.slice_lip_constants());
            (i, v, NormKind::Exact)
        }
        OperatorRep::Tensor(t) => {
            let field = crate::operators::tensor_to_superposition(t)?;
            let (i, v) = argmax_lowest(field.slice_lip_constants());
            (i, v, NormKind::Exact)
        }
        OperatorRep::Multiplication(m) => {
            let (i, v) = argmax_lowest(m.h.values.iter().map(|h| h.abs()));
            (i, v, NormKind::Exact)
        }
        OperatorRep::Sample(s) => {
            let (i, v) = argmax_lowest(envelope_values(s, zero_tol));
            (i, v, NormKind::LowerBound)
        }
    };
    Ok(OperatorNorm {
        value,
        kind,
        argmax,
    })
}

/// `max ||Tf - Tg||_inf / ||f - g||_inf` over the probe pairs.
pub fn lip_norm_estimate(op: &OperatorRep, probes: &[(GridFunction, GridFunction)]) -> Result<f64> {
    let mut best = 0.0f64;
    for (index, (f, g)) in probes.iter().enumerate() {
        let den = f.sup_distance(g)?;
        if den == 0.0 {
            return Err(LlipError::DegenerateProbe { index });
        }
        let num = op.eval(f)?.sup_distance(&op.eval(g)?)?;
        best = best.max(num / den);
    }
    Ok(best)
}

/// Constant probes at the ends of a steepest piece of the steepest slice.
/// For these, `lip_norm_estimate` equals the field's norm.
pub fn norm_witness_probes(field: &SuperpositionField) -> (GridFunction, GridFunction) {
    let (w, _) = argmax_lowest(field.slice_lip_constants());
    let (r, s) = field.slices[w].max_slope_witness();
    let n = field.slices.len();
    (
        GridFunction {
            grid_id: field.grid_id.clone(),
            values: vec![r; n],
        },
        GridFunction {
            grid_id: field.grid_id.clone(),
            values: vec![s; n],
        },
    )
}

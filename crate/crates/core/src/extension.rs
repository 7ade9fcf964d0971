//! Pointwise extension of a sampled operator to every function on the grid.
//!
//! Given samples `(g, Tg)` and a bound `phi`, the McShane extension takes at
//! each point the largest value compatible with the bound, the Whitney
//! extension the smallest, and the midpoint their average. With a continuous
//! `phi` the extension of a continuous input is continuous; with a jumping
//! `phi` it may not be, and [`extend_and_diagnose`] reports that.

use serde::{Deserialize, Serialize};

use crate::bounds::{diagnose_continuity, verify_bound, BoundReport};
use crate::config::Config;
use crate::error::{LlipError, Result};
use crate::grid::{ensure_same_grid, CompactGrid, ContinuityReport, GridFunction};
use crate::operators::{Sample, SampleOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionMethod {
    Mcshane,
    Whitney,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub method: ExtensionMethod,
    pub phi: GridFunction,
    pub source: SampleOperator,
}

impl ExtensionSpec {
    pub fn new(method: ExtensionMethod, phi: GridFunction, source: SampleOperator) -> Result<Self> {
        let spec = Self {
            method,
            phi,
            source,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        ensure_same_grid(&self.source.grid_id, &self.phi.grid_id)?;
        if self.source.samples.is_empty() {
            return Err(LlipError::InsufficientSamples {
                required: 1,
                found: 0,
            });
        }
        for s in &self.source.samples {
            s.input.ensure_compatible(&self.phi)?;
            s.output.ensure_compatible(&self.phi)?;
        }
        match self.phi.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            Some((index, &value)) => Err(LlipError::NegativeBound { index, value }),
            None => Ok(()),
        }
    }
}

/// McShane and Whitney values at every grid point.
fn envelopes(spec: &ExtensionSpec, f: &GridFunction) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    f.ensure_compatible(&spec.phi)?;
    let n = f.len();
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for Sample { input, output } in &spec.source.samples {
        for w in 0..n {
            let slack = spec.phi.values[w] * (input.values[w] - f.values[w]).abs();
            lower[w] = lower[w].max(output.values[w] - slack);
            upper[w] = upper[w].min(output.values[w] + slack);
        }
    }
    Ok((lower, upper))
}

/// Evaluates the extension selected by `spec.method` at `f`.
pub fn extend(spec: &ExtensionSpec, f: &GridFunction) -> Result<GridFunction> {
    let (lower, upper) = envelopes(spec, f)?;
    let values = match spec.method {
        ExtensionMethod::Mcshane => lower,
        ExtensionMethod::Whitney => upper,
        ExtensionMethod::Midpoint => lower
            .iter()
            .zip(&upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
    };
    Ok(GridFunction {
        grid_id: f.grid_id.clone(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionDiagnosis {
    pub extension: GridFunction,
    pub continuity: ContinuityReport,
    /// `phi` re-verified on the samples together with `(f, extension)`.
    pub bound_report: BoundReport,
}

/// Extends at `f`, reports the continuity of the result, and re-verifies the
/// bound on the sample set augmented by the new pair.
pub fn extend_and_diagnose(
    spec: &ExtensionSpec,
    f: &GridFunction,
    grid: &CompactGrid,
    cfg: &Config,
) -> Result<ExtensionDiagnosis> {
    spec.source.check_on(grid)?;
    f.check_on(grid)?;
    let extension = extend(spec, f)?;
    let continuity = diagnose_continuity(grid, &extension, cfg)?;
    let mut augmented = spec.source.clone();
    if augmented.lookup(f).is_err() {
        augmented.samples.push(Sample {
            input: f.clone(),
            output: extension.clone(),
        });
    }
    let bound_report = verify_bound(&augmented, grid, &spec.phi, cfg)?;
    Ok(ExtensionDiagnosis {
        extension,
        continuity,
        bound_report,
    })
}

/// Whitney minus McShane at `f`. A zero gap means the bound pins the
/// extension value down; a negative gap means `phi` does not bound the samples.
pub fn extension_gap(spec: &ExtensionSpec, f: &GridFunction) -> Result<GridFunction> {
    let (lower, upper) = envelopes(spec, f)?;
    Ok(GridFunction {
        grid_id: f.grid_id.clone(),
        values: upper.iter().zip(&lower).map(|(u, l)| u - l).collect(),
    })
}

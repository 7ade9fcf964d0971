//! Operator representations on a fixed grid and their evaluation.
//!
//! Every operator here acts diagonally: the output at a grid point `w`
//! depends only on the input value at `w`. Four backends are offered:
//!
//! - [`SampleOperator`]: a finite graph `{(g, Tg)}`, evaluable only on its samples.
//! - [`SuperpositionField`]: one [`ScalarPwl`] slice per grid point, `T(f)(w) = slice_w(f(w))`.
//! - [`TensorOperator`]: `T(f)(w) = sum_i f_i(w) * phi_i(f(w))`.
//! - [`MultiplicationOperator`]: `T(f)(w) = h(w) * f(w)`.

mod convert;
mod pwl;

use serde::{Deserialize, Serialize};

pub use convert::{sample_to_superposition, superposition_to_tensor, tensor_to_superposition};
pub use pwl::{ScalarPwl, COLLINEAR_TOL};

use crate::error::{LlipError, Result};
use crate::grid::{ensure_same_grid, CompactGrid, GridFunction, GridId};

/// One point `(g, T(g))` of a sampled operator graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub input: GridFunction,
    pub output: GridFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleOperator {
    pub grid_id: GridId,
    pub samples: Vec<Sample>,
}

impl SampleOperator {
    pub fn new(grid: &CompactGrid, samples: Vec<(GridFunction, GridFunction)>) -> Result<Self> {
        let op = Self {
            grid_id: grid.id().clone(),
            samples: samples
                .into_iter()
                .map(|(input, output)| Sample { input, output })
                .collect(),
        };
        op.check_on(grid)?;
        Ok(op)
    }

    pub fn check_on(&self, grid: &CompactGrid) -> Result<()> {
        ensure_same_grid(grid.id(), &self.grid_id)?;
        if self.samples.is_empty() {
            return Err(LlipError::InsufficientSamples {
                required: 1,
                found: 0,
            });
        }
        for s in &self.samples {
            s.input.check_on(grid)?;
            s.output.check_on(grid)?;
        }
        for (i, a) in self.samples.iter().enumerate() {
            if self.samples[..i]
                .iter()
                .any(|b| b.input.values == a.input.values)
            {
                return Err(LlipError::InvalidOperator(format!(
                    "sample {i} repeats an earlier input"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Stored image of `f`; `f` must match a sample input exactly.
    pub fn lookup(&self, f: &GridFunction) -> Result<&GridFunction> {
        ensure_same_grid(&self.grid_id, &f.grid_id)?;
        self.samples
            .iter()
            .find(|s| s.input.values == f.values)
            .map(|s| &s.output)
            .ok_or(LlipError::NotInDomain)
    }

    /// Builds the sample operator `{(g, T(g))}` of any evaluable operator.
    pub fn from_operator(op: &OperatorRep, inputs: Vec<GridFunction>) -> Result<Self> {
        let samples = inputs
            .into_iter()
            .map(|g| {
                let tg = op.eval(&g)?;
                Ok(Sample {
                    input: g,
                    output: tg,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid_id: op.grid_id().clone(),
            samples,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionField {
    pub grid_id: GridId,
    pub slices: Vec<ScalarPwl>,
}

impl SuperpositionField {
    pub fn new(grid: &CompactGrid, slices: Vec<ScalarPwl>) -> Result<Self> {
        let field = Self {
            grid_id: grid.id().clone(),
            slices,
        };
        field.check_on(grid)?;
        Ok(field)
    }

    /// Same slice at every grid point.
    pub fn uniform(grid: &CompactGrid, slice: ScalarPwl) -> Self {
        Self {
            grid_id: grid.id().clone(),
            slices: vec![slice; grid.len()],
        }
    }

    pub fn check_on(&self, grid: &CompactGrid) -> Result<()> {
        ensure_same_grid(grid.id(), &self.grid_id)?;
        if self.slices.len() != grid.len() {
            return Err(LlipError::LengthMismatch {
                expected: grid.len(),
                found: self.slices.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check_input(f)?;
        Ok(GridFunction::from_parts(
            self.grid_id.clone(),
            self.slices
                .iter()
                .zip(&f.values)
                .map(|(s, &r)| s.eval(r))
                .collect(),
        ))
    }

    /// Lipschitz constant of every slice.
    pub fn slice_lip_constants(&self) -> Vec<f64> {
        self.slices.iter().map(ScalarPwl::lip_constant).collect()
    }

    fn check_input(&self, f: &GridFunction) -> Result<()> {
        ensure_same_grid(&self.grid_id, &f.grid_id)?;
        if f.len() != self.slices.len() {
            return Err(LlipError::LengthMismatch {
                expected: self.slices.len(),
                found: f.len(),
            });
        }
        Ok(())
    }
}

/// One term `f_i ⊗ phi_i` of a tensor operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorTerm {
    pub coefficient: GridFunction,
    pub profile: ScalarPwl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorOperator {
    pub grid_id: GridId,
    pub terms: Vec<TensorTerm>,
}

impl TensorOperator {
    pub fn new(grid: &CompactGrid, terms: Vec<(GridFunction, ScalarPwl)>) -> Result<Self> {
        let t = Self {
            grid_id: grid.id().clone(),
            terms: terms
                .into_iter()
                .map(|(coefficient, profile)| TensorTerm {
                    coefficient,
                    profile,
                })
                .collect(),
        };
        t.check_on(grid)?;
        Ok(t)
    }

    pub fn check_on(&self, grid: &CompactGrid) -> Result<()> {
        ensure_same_grid(grid.id(), &self.grid_id)?;
        if self.terms.is_empty() {
            return Err(LlipError::InvalidOperator("tensor has no terms".into()));
        }
        self.terms
            .iter()
            .try_for_each(|t| t.coefficient.check_on(grid))
    }

    pub fn eval(&self, f: &GridFunction) -> Result<GridFunction> {
        ensure_same_grid(&self.grid_id, &f.grid_id)?;
        let mut out = vec![0.0; f.len()];
        for term in &self.terms {
            term.coefficient.ensure_compatible(f)?;
            for ((o, &c), &r) in out.iter_mut().zip(&term.coefficient.values).zip(&f.values) {
                *o += c * term.profile.eval(r);
            }
        }
        Ok(GridFunction::from_parts(self.grid_id.clone(), out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicationOperator {
    pub grid_id: GridId,
    pub h: GridFunction,
}

impl MultiplicationOperator {
    pub fn check_on(&self, grid: &CompactGrid) -> Result<()> {
        ensure_same_grid(grid.id(), &self.grid_id)?;
        self.h.check_on(grid)
    }

    pub fn eval(&self, f: &GridFunction) -> Result<GridFunction> {
        self.h.ensure_compatible(f)?;
        Ok(GridFunction::from_parts(
            self.grid_id.clone(),
            self.h
                .values
                .iter()
                .zip(&f.values)
                .map(|(h, x)| h * x)
                .collect(),
        ))
    }

    /// The same operator as a field of linear slices `r -> h(w) r`.
    pub fn to_superposition(&self) -> SuperpositionField {
        SuperpositionField {
            grid_id: self.grid_id.clone(),
            slices: self
                .h
                .values
                .iter()
                .map(|&h| ScalarPwl::linear(h, 0.0).expect("finite slope"))
                .collect(),
        }
    }
}

/// Any of the four operator backends, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorRep {
    Sample(SampleOperator),
    Superposition(SuperpositionField),
    Tensor(TensorOperator),
    Multiplication(MultiplicationOperator),
}

impl OperatorRep {
    pub fn grid_id(&self) -> &GridId {
        match self {
            OperatorRep::Sample(s) => &s.grid_id,
            OperatorRep::Superposition(s) => &s.grid_id,
            OperatorRep::Tensor(t) => &t.grid_id,
            OperatorRep::Multiplication(m) => &m.grid_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OperatorRep::Sample(_) => "sample",
            OperatorRep::Superposition(_) => "superposition",
            OperatorRep::Tensor(_) => "tensor",
            OperatorRep::Multiplication(_) => "multiplication",
        }
    }

    pub fn check_on(&self, grid: &CompactGrid) -> Result<()> {
        match self {
            OperatorRep::Sample(s) => s.check_on(grid),
            OperatorRep::Superposition(s) => s.check_on(grid),
            OperatorRep::Tensor(t) => t.check_on(grid),
            OperatorRep::Multiplication(m) => m.check_on(grid),
        }
    }

    pub fn eval(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            OperatorRep::Sample(s) => s.lookup(f).cloned(),
            OperatorRep::Superposition(s) => s.eval(f),
            OperatorRep::Tensor(t) => t.eval(f),
            OperatorRep::Multiplication(m) => m.eval(f),
        }
    }

    /// Field form of a closed-form backend. Sampled operators need a bound
    /// first, see [`sample_to_superposition`].
    pub fn to_superposition(&self) -> Result<SuperpositionField> {
        match self {
            OperatorRep::Sample(_) => Err(LlipError::InvalidOperator(
                "a sampled operator has no field form without a bound function".into(),
            )),
            OperatorRep::Superposition(s) => Ok(s.clone()),
            OperatorRep::Tensor(t) => tensor_to_superposition(t),
            OperatorRep::Multiplication(m) => Ok(m.to_superposition()),
        }
    }
}

impl From<SuperpositionField> for OperatorRep {
    fn from(f: SuperpositionField) -> Self {
        OperatorRep::Superposition(f)
    }
}

impl From<SampleOperator> for OperatorRep {
    fn from(s: SampleOperator) -> Self {
        OperatorRep::Sample(s)
    }
}

impl From<TensorOperator> for OperatorRep {
    fn from(t: TensorOperator) -> Self {
        OperatorRep::Tensor(t)
    }
}

impl From<MultiplicationOperator> for OperatorRep {
    fn from(m: MultiplicationOperator) -> Self {
        OperatorRep::Multiplication(m)
    }
}

/// The multiplication operator `f -> h f`.
pub fn multiplication_operator(grid: &CompactGrid, h: GridFunction) -> Result<OperatorRep> {
    let m = MultiplicationOperator {
        grid_id: grid.id().clone(),
        h,
    };
    m.check_on(grid)?;
    Ok(OperatorRep::Multiplication(m))
}

/// Breakpoints for interpolating the saturation profile `k / (k + |r|)`.
///
/// When the range straddles 0 the nodes include 0 and are spaced
/// geometrically away from it on each side, so the steepest chords next to
/// the kink at 0 resolve the slope `1/k` there.
fn saturation_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(lo < 0.0 && hi > 0.0) {
        let last = (n - 1) as f64;
        return (0..n).map(|i| lo + (hi - lo) * i as f64 / last).collect();
    }
    let span = hi - lo;
    let rest = n - 1;
    let mut left = ((rest as f64) * (-lo) / span).round() as usize;
    left = left.clamp(1, rest - 1);
    let right = rest - left;
    let first_step = 1e-6 * span;
    let side = |extent: f64, m: usize| -> Vec<f64> {
        if m == 1 {
            return vec![extent];
        }
        let h = first_step.min(extent / 2.0);
        let ratio = (extent / h).powf(1.0 / (m - 1) as f64);
        (0..m)
            .map(|j| {
                if j == m - 1 {
                    extent
                } else {
                    h * ratio.powi(j as i32)
                }
            })
            .collect()
    };
    let mut nodes: Vec<f64> = side(-lo, left).into_iter().rev().map(|x| -x).collect();
    nodes.push(0.0);
    nodes.extend(side(hi, right));
    nodes
}

/// The operator `T_k(f)(w) = k / (k + |f(w)|)` with every slice a PWL
/// interpolant on `n_break` nodes of `r_range`.
pub fn saturating_operator(
    grid: &CompactGrid,
    k: f64,
    r_range: (f64, f64),
    n_break: usize,
) -> Result<SuperpositionField> {
    if !(k.is_finite() && k > 0.0) {
        return Err(LlipError::InvalidK(k));
    }
    let (lo, hi) = r_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || n_break < 3 {
        return Err(LlipError::InvalidRange(format!(
            "saturating operator needs lo < hi and n_break >= 3, got [{lo}, {hi}] with {n_break}"
        )));
    }
    let slice = ScalarPwl::interpolate(saturation_nodes(lo, hi, n_break), |r| k / (k + r.abs()))?;
    Ok(SuperpositionField::uniform(grid, slice))
}

//! Piecewise-linear functions of one real variable.
//!
//! A [`ScalarPwl`] is determined by its breakpoints, the values there and
//! the slopes of the two unbounded rays. Its Lipschitz constant is the
//! largest absolute slope and is computed exactly.

use serde::{Deserialize, Serialize};

use crate::error::{LlipError, Result};

/// Slopes closer than this are treated as collinear when pruning.
pub const COLLINEAR_TOL: f64 = 1e-12;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPwl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPwl")]
pub struct ScalarPwl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl TryFrom<RawPwl> for ScalarPwl {
    type Error = LlipError;

    fn try_from(raw: RawPwl) -> Result<Self> {
        ScalarPwl::new(raw.breakpoints, raw.values, raw.left_slope, raw.right_slope)
    }
}

impl ScalarPwl {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(LlipError::InvalidPwl("no breakpoints".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(LlipError::InvalidPwl(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints
            .iter()
            .chain(&values)
            .chain([&left_slope, &right_slope])
            .any(|x| !x.is_finite())
        {
            return Err(LlipError::InvalidPwl("non-finite entry".into()));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(LlipError::InvalidPwl(format!(
                "breakpoints not strictly increasing at index {}",
                i + 1
            )));
        }
        let pwl = Self {
            breakpoints,
            values,
            left_slope,
            right_slope,
        };
        if !pwl.lip_constant().is_finite() {
            return Err(LlipError::InvalidPwl("unbounded segment slope".into()));
        }
        Ok(pwl)
    }

    /// `r -> slope * r + intercept`, stored with a single breakpoint at 0.
    pub fn linear(slope: f64, intercept: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![intercept], slope, slope)
    }

    pub fn identity() -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![0.0],
            left_slope: 1.0,
            right_slope: 1.0,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::linear(0.0, c)
    }

    /// Interpolates `rule` at the given nodes; the rays continue the outermost chords.
    pub fn interpolate(nodes: Vec<f64>, rule: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(LlipError::InvalidPwl(
                "interpolation needs at least 2 nodes".into(),
            ));
        }
        let values: Vec<f64> = nodes.iter().map(|&r| rule(r)).collect();
        let n = nodes.len();
        let left = (values[1] - values[0]) / (nodes[1] - nodes[0]);
        let right = (values[n - 1] - values[n - 2]) / (nodes[n - 1] - nodes[n - 2]);
        Self::new(nodes, values, left, right)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    pub fn num_breakpoints(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn eval(&self, r: f64) -> f64 {
        let xs = &self.breakpoints;
        let ys = &self.values;
        let n = xs.len();
        if r <= xs[0] {
            return ys[0] + self.left_slope * (r - xs[0]);
        }
        if r >= xs[n - 1] {
            return ys[n - 1] + self.right_slope * (r - xs[n - 1]);
        }
        // xs[i - 1] < r <= xs[i]
        let i = xs.partition_point(|&x| x < r);
        if xs[i] == r {
            return ys[i];
        }
        let t = (r - xs[i - 1]) / (xs[i] - xs[i - 1]);
        ys[i - 1] + t * (ys[i] - ys[i - 1])
    }

    /// Slope of the piece containing `r`; at a breakpoint, the piece to its right.
    fn slope_at(&self, r: f64) -> f64 {
        let xs = &self.breakpoints;
        let n = xs.len();
        if r < xs[0] {
            return self.left_slope;
        }
        if r >= xs[n - 1] {
            return self.right_slope;
        }
        let i = xs.partition_point(|&x| x <= r);
        (self.values[i] - self.values[i - 1]) / (xs[i] - xs[i - 1])
    }

    /// Slopes of the bounded segments, left to right.
    pub fn segment_slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
    }

    /// Every slope, left ray first and right ray last.
    pub fn all_slopes(&self) -> Vec<f64> {
        let mut slopes = Vec::with_capacity(self.breakpoints.len() + 1);
        slopes.push(self.left_slope);
        slopes.extend(self.segment_slopes());
        slopes.push(self.right_slope);
        slopes
    }

    pub fn lip_constant(&self) -> f64 {
        self.all_slopes()
            .into_iter()
            .fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Two abscissas spanning a piece of maximal absolute slope.
    ///
    /// For a ray the second abscissa lies one unit outside the outermost
    /// breakpoint. The leftmost maximal piece wins ties.
    pub fn max_slope_witness(&self) -> (f64, f64) {
        let slopes = self.all_slopes();
        let mut best = 0;
        for (k, s) in slopes.iter().enumerate() {
            if s.abs() > slopes[best].abs() {
                best = k;
            }
        }
        let xs = &self.breakpoints;
        let n = xs.len();
        if best == 0 {
            (xs[0] - 1.0, xs[0])
        } else if best == n {
            (xs[n - 1], xs[n - 1] + 1.0)
        } else {
            (xs[best - 1], xs[best])
        }
    }

    /// `sum_k coeffs[k] * pieces[k]` as an exact PWL on the union of breakpoints.
    pub fn linear_combination(terms: &[(f64, &ScalarPwl)]) -> Result<Self> {
        if terms.is_empty() {
            return Self::constant(0.0);
        }
        let mut xs: Vec<f64> = terms
            .iter()
            .flat_map(|(_, p)| p.breakpoints.iter().copied())
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let values = xs
            .iter()
            .map(|&r| terms.iter().map(|(c, p)| c * p.eval(r)).sum())
            .collect();
        let left = terms.iter().map(|(c, p)| c * p.left_slope).sum();
        let right = terms.iter().map(|(c, p)| c * p.right_slope).sum();
        Ok(Self::new(xs, values, left, right)?.pruned())
    }

    /// Exact composition `outer(inner(r))`.
    ///
    /// Breakpoints are the inner breakpoints together with every preimage
    /// under `inner` of an outer breakpoint, found piece by piece. Every piece
    /// carries the product of the two slopes it came from, so the Lipschitz
    /// constant of the result never exceeds the product of the factors'.
    pub fn compose(outer: &ScalarPwl, inner: &ScalarPwl, max_breakpoints: usize) -> Result<Self> {
        let xs = &inner.breakpoints;
        let ys = &inner.values;
        let n = xs.len();
        // (abscissa, exact value of outer at inner(abscissa) if known)
        let mut nodes: Vec<(f64, Option<f64>)> = xs.iter().map(|&x| (x, None)).collect();

        let mut push_preimages = |x0: f64, y0: f64, slope: f64, lo: f64, hi: f64| {
            if slope == 0.0 {
                return;
            }
            for (&b, &vb) in outer.breakpoints.iter().zip(&outer.values) {
                let x = x0 + (b - y0) / slope;
                if x > lo && x < hi {
                    nodes.push((x, Some(vb)));
                }
            }
        };
        push_preimages(xs[0], ys[0], inner.left_slope, f64::NEG_INFINITY, xs[0]);
        for i in 0..n - 1 {
            let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            push_preimages(xs[i], ys[i], slope, xs[i], xs[i + 1]);
        }
        push_preimages(
            xs[n - 1],
            ys[n - 1],
            inner.right_slope,
            xs[n - 1],
            f64::INFINITY,
        );

        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Option<f64>)> = Vec::with_capacity(nodes.len());
        for node in nodes {
            match merged.last_mut() {
                // an inner breakpoint is exact, so it absorbs a nearby preimage
                Some(last) if node.0 - last.0 <= merge_gap(last.0) => {
                    if node.1.is_none() {
                        *last = node;
                    }
                }
                _ => merged.push(node),
            }
        }
        if merged.len() > max_breakpoints {
            return Err(LlipError::BreakpointOverflow {
                needed: merged.len(),
                cap: max_breakpoints,
            });
        }

        // Each segment lies in one inner piece and one outer piece, so its
        // slope is the product of theirs. Values are accumulated from the
        // left with that product, rounding every step toward the previous
        // value so that no differenced slope exceeds it.
        let bx: Vec<f64> = merged.iter().map(|node| node.0).collect();
        let mut by = Vec::with_capacity(bx.len());
        by.push(merged[0].1.unwrap_or_else(|| outer.eval(inner.eval(bx[0]))));
        for k in 0..bx.len() - 1 {
            let mid = 0.5 * (bx[k] + bx[k + 1]);
            let slope = outer.slope_at(inner.eval(mid)) * inner.slope_at(mid);
            by.push(step_within_slope(by[k], slope, bx[k + 1] - bx[k]));
        }
        let ray_slope = |inner_slope: f64, towards_minus_inf: bool| {
            if inner_slope == 0.0 {
                return 0.0;
            }
            // direction in which inner(r) escapes
            let inner_goes_down = (inner_slope > 0.0) == towards_minus_inf;
            let outer_slope = if inner_goes_down {
                outer.left_slope
            } else {
                outer.right_slope
            };
            outer_slope * inner_slope
        };
        let left = ray_slope(inner.left_slope, true);
        let right = ray_slope(inner.right_slope, false);
        Ok(Self::new(bx, by, left, right)?.pruned())
    }

    /// Drops interior breakpoints whose neighbouring slopes agree to
    /// [`COLLINEAR_TOL`]; the outermost breakpoints are dropped when the
    /// adjacent segment continues the ray.
    pub fn pruned(&self) -> Self {
        let slopes = self.all_slopes();
        let n = self.breakpoints.len();
        let mut keep: Vec<usize> = (0..n)
            .filter(|&i| (slopes[i] - slopes[i + 1]).abs() > COLLINEAR_TOL)
            .collect();
        if keep.is_empty() {
            keep.push(0);
        }
        Self {
            breakpoints: keep.iter().map(|&i| self.breakpoints[i]).collect(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            left_slope: self.left_slope,
            right_slope: self.right_slope,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            left_slope: c * self.left_slope,
            right_slope: c * self.right_slope,
        }
    }
}

/// `v + slope * dx`, moved toward `v` until the differenced slope
/// `(next - v) / dx` is at most `|slope|` in magnitude.
fn step_within_slope(v: f64, slope: f64, dx: f64) -> f64 {
    let mut next = v + slope * dx;
    let step = (f64::EPSILON * v.abs().max(next.abs())).max(f64::MIN_POSITIVE);
    while ((next - v) / dx).abs() > slope.abs() {
        next = if next > v {
            (next - step).max(v)
        } else {
            (next + step).min(v)
        };
    }
    next
}

fn merge_gap(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

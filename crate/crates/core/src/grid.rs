//! Finite samples of a compact metric space and real functions on them.
//!
//! A [`CompactGrid`] is immutable and identified by a content hash, so any
//! operation pairing functions or operators can reject inputs that were built
//! on different grids before doing arithmetic on them.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LlipError, Result};

/// Smallest admissible distance between two grid points.
pub const MIN_POINT_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Chebyshev,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Chebyshev => "chebyshev",
        }
    }
}

/// Content hash of a grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridId(String);

impl GridId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GridId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for GridId {
    fn from(s: &str) -> Self {
        GridId(s.to_owned())
    }
}

/// Fails with `GridMismatch` unless both ids agree.
pub fn ensure_same_grid(expected: &GridId, found: &GridId) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LlipError::GridMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Vec<Vec<f64>>,
    metric: Metric,
    #[serde(default)]
    id: Option<GridId>,
}

/// An ordered finite point set in `R^d` with a metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct CompactGrid {
    points: Vec<Vec<f64>>,
    metric: Metric,
    id: GridId,
}

impl TryFrom<RawGrid> for CompactGrid {
    type Error = LlipError;

    fn try_from(raw: RawGrid) -> Result<Self> {
        let grid = CompactGrid::new(raw.points, raw.metric)?;
        if let Some(claimed) = raw.id {
            ensure_same_grid(&grid.id, &claimed)?;
        }
        Ok(grid)
    }
}

impl CompactGrid {
    pub fn new(points: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        if points.len() < 2 {
            return Err(LlipError::InvalidGrid(format!(
                "need at least 2 points, found {}",
                points.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(LlipError::InvalidGrid(
                "points must have dimension >= 1".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(LlipError::InvalidGrid(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(LlipError::NonFiniteValue { index: i });
            }
        }
        if let Some((i, j, d)) = closest_pair(&points, metric) {
            if d < MIN_POINT_SEPARATION {
                return Err(LlipError::InvalidGrid(format!(
                    "points {i} and {j} are only {d:e} apart"
                )));
            }
        }
        let id = content_hash(&points, metric);
        Ok(Self { points, metric, id })
    }

    pub fn id(&self) -> &GridId {
        &self.id
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(&self.points[i], &self.points[j])
    }

    /// Largest distance between two grid points.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut diam = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                diam = diam.max(self.distance(i, j));
            }
        }
        diam
    }

    /// Median over points of the distance to the nearest other point.
    pub fn median_spacing(&self) -> f64 {
        let n = self.len();
        let mut nearest: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.distance(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        median(&mut nearest)
    }

    /// `factor` times the median spacing.
    pub fn adjacency_radius(&self, factor: f64) -> f64 {
        factor * self.median_spacing()
    }

    /// Index of a point equal to `coords` within `tol` under the grid metric.
    pub fn locate(&self, coords: &[f64], tol: f64) -> Option<usize> {
        if coords.len() != self.dim() {
            return None;
        }
        self.points
            .iter()
            .position(|p| self.metric.distance(p, coords) <= tol)
    }
}

fn closest_pair(points: &[Vec<f64>], metric: Metric) -> Option<(usize, usize, f64)> {
    if points[0].len() == 1 {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
        return order
            .windows(2)
            .map(|w| (w[0], w[1], metric.distance(&points[w[0]], &points[w[1]])))
            .min_by(|a, b| a.2.total_cmp(&b.2));
    }
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = metric.distance(&points[i], &points[j]);
            if best.is_none_or(|b| d < b.2) {
                best = Some((i, j, d));
            }
        }
    }
    best
}

fn content_hash(points: &[Vec<f64>], metric: Metric) -> GridId {
    let mut hasher = Sha256::new();
    hasher.update(metric.tag().as_bytes());
    hasher.update((points.len() as u64).to_le_bytes());
    hasher.update((points[0].len() as u64).to_le_bytes());
    for p in points {
        for x in p {
            // +0.0 and -0.0 name the same point
            let x = if *x == 0.0 { 0.0f64 } else { *x };
            hasher.update(x.to_bits().to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    GridId(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// `n` equally spaced points on `[a, b]` with the euclidean metric.
pub fn make_interval_grid(a: f64, b: f64, n: usize) -> Result<CompactGrid> {
    if !(a.is_finite() && b.is_finite()) || a >= b || n < 2 {
        return Err(LlipError::InvalidRange(format!(
            "interval grid needs a < b and n >= 2, got a = {a}, b = {b}, n = {n}"
        )));
    }
    let last = (n - 1) as f64;
    let points = (0..n)
        .map(|i| {
            let x = if i == n - 1 {
                b
            } else {
                a + (b - a) * (i as f64) / last
            };
            vec![x]
        })
        .collect();
    CompactGrid::new(points, Metric::Euclidean)
}

/// One real value per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFunction {
    pub grid_id: GridId,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &CompactGrid, values: Vec<f64>) -> Result<Self> {
        let f = Self {
            grid_id: grid.id().clone(),
            values,
        };
        f.check_on(grid)?;
        Ok(f)
    }

    /// Builds a function on the grid with id `grid_id` without a length check.
    pub(crate) fn from_parts(grid_id: GridId, values: Vec<f64>) -> Self {
        Self { grid_id, values }
    }

    pub fn constant(grid: &CompactGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Validates grid identity, length and finiteness against `grid`.
    pub fn check_on(&self, grid: &CompactGrid) -> Result<()> {
        ensure_same_grid(grid.id(), &self.grid_id)?;
        if self.values.len() != grid.len() {
            return Err(LlipError::LengthMismatch {
                expected: grid.len(),
                found: self.values.len(),
            });
        }
        self.check_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(LlipError::NonFiniteValue { index }),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup_w |self(w) - other(w)|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.ensure_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn ensure_compatible(&self, other: &GridFunction) -> Result<()> {
        ensure_same_grid(&self.grid_id, &other.grid_id)?;
        if self.values.len() != other.values.len() {
            return Err(LlipError::LengthMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, mut op: impl FnMut(f64) -> f64) -> Self {
        Self::from_parts(
            self.grid_id.clone(),
            self.values.iter().map(|&v| op(v)).collect(),
        )
    }
}

/// Samples `rule` at every grid point.
pub fn tabulate(grid: &CompactGrid, rule: impl Fn(&[f64]) -> f64) -> Result<GridFunction> {
    let values: Vec<f64> = grid.points().iter().map(|p| rule(p)).collect();
    GridFunction::new(grid, values)
}

/// How the discontinuity threshold of a [`ContinuityReport`] is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Flag when the discrete modulus exceeds this value.
    Absolute(f64),
    /// Flag when the modulus exceeds this multiple of the median difference
    /// quotient over adjacent pairs. When that median is zero the oscillation
    /// of the function divided by the grid diameter is used as the scale.
    MedianFactor(f64),
}

/// Discrete modulus of continuity of a function over metric-adjacent pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub modulus: f64,
    pub adjacency_radius: f64,
    pub threshold: f64,
    pub is_flagged_discontinuous: bool,
    pub worst_pair: (usize, usize),
    /// Adjacent pairs whose difference quotient exceeds the threshold.
    pub flagged_pairs: Vec<(usize, usize)>,
}

/// Enumerates all pairs within `adjacency_radius` and reports the largest
/// `|f(i) - f(j)| / d(i, j)`. Ties keep the lexicographically smallest pair.
pub fn continuity_report(
    grid: &CompactGrid,
    f: &GridFunction,
    adjacency_radius: f64,
    threshold: Threshold,
) -> Result<ContinuityReport> {
    f.check_on(grid)?;
    if adjacency_radius.is_nan() || adjacency_radius <= 0.0 {
        return Err(LlipError::InvalidRange(format!(
            "adjacency radius must be positive, got {adjacency_radius}"
        )));
    }
    let n = grid.len();
    let mut quotients = Vec::new();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = grid.distance(i, j);
            if d > adjacency_radius {
                continue;
            }
            let q = (f.values[i] - f.values[j]).abs() / d;
            quotients.push((q, i, j));
            if best.is_none_or(|(m, _, _)| q > m) {
                best = Some((q, i, j));
            }
        }
    }
    let (modulus, wi, wj) = best.ok_or(LlipError::EmptyAdjacency {
        radius: adjacency_radius,
    })?;
    let threshold = match threshold {
        Threshold::Absolute(t) => t,
        Threshold::MedianFactor(factor) => {
            let mut qs: Vec<f64> = quotients.iter().map(|q| q.0).collect();
            let mut scale = median(&mut qs);
            if scale == 0.0 {
                let diam = grid.diameter();
                scale = (f.max() - f.min()) / diam;
            }
            factor * scale
        }
    };
    let flagged_pairs = quotients
        .iter()
        .filter(|q| q.0 > threshold)
        .map(|q| (q.1, q.2))
        .collect();
    Ok(ContinuityReport {
        modulus,
        adjacency_radius,
        threshold,
        is_flagged_discontinuous: modulus > threshold,
        worst_pair: (wi, wj),
        flagged_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_points() {
        let g = make_interval_grid(0.0, 1.0, 5).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_interval_grid(-1.0, 1.0, 3).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn interval_grid_rejects_bad_range() {
        assert!(matches!(
            make_interval_grid(1.0, 0.0, 5),
            Err(LlipError::InvalidRange(_))
        ));
        assert!(matches!(
            make_interval_grid(0.0, 1.0, 1),
            Err(LlipError::InvalidRange(_))
        ));
    }

    #[test]
    fn grid_rejects_close_points() {
        let r = CompactGrid::new(vec![vec![0.0], vec![1e-13]], Metric::Euclidean);
        assert!(matches!(r, Err(LlipError::InvalidGrid(_))));
        let r = CompactGrid::new(vec![vec![0.0, 0.0]], Metric::Chebyshev);
        assert!(matches!(r, Err(LlipError::InvalidGrid(_))));
    }

    #[test]
    fn grid_id_depends_on_content() {
        let a = make_interval_grid(0.0, 1.0, 5).unwrap();
        let b = make_interval_grid(0.0, 1.0, 5).unwrap();
        let c = make_interval_grid(0.0, 1.0, 6).unwrap();
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
        let d = CompactGrid::new(a.points().to_vec(), Metric::Chebyshev).unwrap();
        assert_ne!(a.id(), d.id());
    }

    #[test]
    fn tabulate_rules() {
        let g = make_interval_grid(-1.0, 1.0, 3).unwrap();
        assert_eq!(tabulate(&g, |_| 1.0).unwrap().values, vec![1.0; 3]);
        assert_eq!(tabulate(&g, |w| w[0]).unwrap().values, vec![-1.0, 0.0, 1.0]);
        assert_eq!(
            tabulate(&g, |w| 1.0 / w[0]),
            Err(LlipError::NonFiniteValue { index: 1 })
        );
    }

    #[test]
    fn continuity_of_constant() {
        let g = make_interval_grid(0.0, 1.0, 11).unwrap();
        let f = GridFunction::constant(&g, 3.0).unwrap();
        let r = continuity_report(&g, &f, 0.25, Threshold::MedianFactor(50.0)).unwrap();
        assert_eq!(r.modulus, 0.0);
        assert!(!r.is_flagged_discontinuous);
        assert_eq!(r.worst_pair, (0, 1));
    }

    #[test]
    fn continuity_of_indicator_and_identity() {
        let g = make_interval_grid(-1.0, 1.0, 201).unwrap();
        let radius = 2.0 * 0.01;
        let chi = tabulate(&g, |w| if w[0] >= 0.0 { 1.0 } else { 0.0 }).unwrap();
        // the jump sits between points 99 and 100; the adjacent pair gives 1/0.01
        let r = continuity_report(&g, &chi, radius, Threshold::Absolute(10.0)).unwrap();
        assert!((r.modulus - 100.0).abs() < 1e-9);
        assert!(r.is_flagged_discontinuous);
        assert_eq!(r.worst_pair, (99, 100));

        let id = tabulate(&g, |w| w[0]).unwrap();
        let r = continuity_report(&g, &id, radius, Threshold::Absolute(10.0)).unwrap();
        assert!((r.modulus - 1.0).abs() < 1e-9);
        assert!(!r.is_flagged_discontinuous);
    }

    #[test]
    fn continuity_needs_adjacent_pairs() {
        let g = make_interval_grid(0.0, 1.0, 3).unwrap();
        let f = GridFunction::constant(&g, 0.0).unwrap();
        assert!(matches!(
            continuity_report(&g, &f, 0.1, Threshold::Absolute(1.0)),
            Err(LlipError::EmptyAdjacency { .. })
        ));
    }

    #[test]
    fn function_on_wrong_grid_is_rejected() {
        let a = make_interval_grid(0.0, 1.0, 5).unwrap();
        let b = make_interval_grid(0.0, 2.0, 5).unwrap();
        let f = GridFunction::constant(&a, 1.0).unwrap();
        assert!(matches!(
            f.check_on(&b),
            Err(LlipError::GridMismatch { .. })
        ));
    }

    #[test]
    fn chebyshev_distance() {
        let g = CompactGrid::new(vec![vec![0.0, 0.0], vec![3.0, -4.0]], Metric::Chebyshev).unwrap();
        assert_eq!(g.distance(0, 1), 4.0);
        let g = CompactGrid::new(g.points().to_vec(), Metric::Euclidean).unwrap();
        assert_eq!(g.distance(0, 1), 5.0);
    }

    #[test]
    fn grid_json_checks_claimed_id() {
        let g = make_interval_grid(0.0, 1.0, 3).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: CompactGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let forged = json.replace(g.id().as_str(), "0000000000000000");
        assert!(serde_json::from_str::<CompactGrid>(&forged).is_err());
        let bare: CompactGrid =
            serde_json::from_str(r#"{"points": [[0.0], [0.5], [1.0]], "metric": "euclidean"}"#)
                .unwrap();
        assert_eq!(bare.id(), g.id());
    }
}

//! Worked examples with known answers, and a self-test that checks them.
//!
//! The data are built analytically on fixed grids:
//!
//! - a two-sample operator on `[0, 1]` whose minimal bound is `2`, `0`, `1`
//!   on `[0, 1/4)`, `[1/4, 3/4]`, `(3/4, 1]`, hence discontinuous;
//! - a two-sample operator on `[-1, 1]` whose McShane extension with the
//!   jumping bound `chi_[0,1]` is discontinuous at 0, and continuous once the
//!   bound is replaced by the continuous `1 + min(w, 0)`.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    constant_bound, lip_norm_estimate, llip_norm, minimal_envelope, norm_witness_probes,
    ratio_function, verify_bound,
};
use crate::config::Config;
use crate::error::{LlipError, Result};
use crate::extension::{extend, extend_and_diagnose, ExtensionMethod, ExtensionSpec};
use crate::grid::{make_interval_grid, tabulate, CompactGrid, GridFunction};
use crate::operators::{
    multiplication_operator, sample_to_superposition, saturating_operator, OperatorRep,
    SampleOperator,
};

/// Grid size used by the worked examples.
pub const REFERENCE_POINTS: usize = 401;

/// `f - g` of the discontinuous-envelope example.
pub fn envelope_input_gap(w: f64) -> f64 {
    if w < 0.25 {
        0.25 - w
    } else if w < 0.75 {
        0.0
    } else {
        w - 0.75
    }
}

/// `T(f) - T(g)` of the discontinuous-envelope example.
pub fn envelope_output_gap(w: f64) -> f64 {
    if w < 0.25 {
        0.5 - 2.0 * w
    } else if w < 0.75 {
        0.0
    } else {
        w - 0.75
    }
}

/// Samples `{(f, Tf), (g, Tg)}` with `g = Tg = 0` on an `n`-point grid of `[0, 1]`.
pub fn envelope_example(n: usize) -> Result<(CompactGrid, SampleOperator)> {
    let grid = make_interval_grid(0.0, 1.0, n)?;
    let zero = GridFunction::constant(&grid, 0.0)?;
    let f = tabulate(&grid, |w| envelope_input_gap(w[0]))?;
    let tf = tabulate(&grid, |w| envelope_output_gap(w[0]))?;
    let op = SampleOperator::new(&grid, vec![(f, tf), (zero.clone(), zero)])?;
    Ok((grid, op))
}

/// Data of the extension example on an `n`-point grid of `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ExtensionExample {
    pub grid: CompactGrid,
    /// `S = {0, Id}` with `T(0) = 0` and `T(Id) = Id * chi_[0,1]`.
    pub source: SampleOperator,
    /// `chi_[0,1]`, the optimal but discontinuous bound.
    pub jump_bound: GridFunction,
    /// `1 + w` for `w < 0` and `1` for `w >= 0`.
    pub continuous_bound: GridFunction,
    /// The constant function 1.
    pub probe: GridFunction,
}

pub fn extension_example(n: usize) -> Result<ExtensionExample> {
    let grid = make_interval_grid(-1.0, 1.0, n)?;
    let zero = GridFunction::constant(&grid, 0.0)?;
    let id = tabulate(&grid, |w| w[0])?;
    let t_id = tabulate(&grid, |w| if w[0] >= 0.0 { w[0] } else { 0.0 })?;
    let source = SampleOperator::new(&grid, vec![(zero.clone(), zero), (id, t_id)])?;
    let jump_bound = tabulate(&grid, |w| if w[0] >= 0.0 { 1.0 } else { 0.0 })?;
    let continuous_bound = tabulate(&grid, |w| if w[0] < 0.0 { 1.0 + w[0] } else { 1.0 })?;
    let probe = GridFunction::constant(&grid, 1.0)?;
    Ok(ExtensionExample {
        grid,
        source,
        jump_bound,
        continuous_bound,
        probe,
    })
}

/// Outcome of one self-test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, result: Result<(bool, String)>) -> CaseOutcome {
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CaseOutcome {
        name: name.to_owned(),
        passed,
        detail,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// True when some flagged pair straddles the point `at` of a 1-D grid.
pub fn flags_jump_near(grid: &CompactGrid, pairs: &[(usize, usize)], at: f64, tol: f64) -> bool {
    pairs.iter().any(|&(i, j)| {
        let (a, b) = (grid.point(i)[0], grid.point(j)[0]);
        a.min(b) <= at + tol && a.max(b) >= at - tol
    })
}

fn case_saturating(cfg: &Config) -> Result<(bool, String)> {
    let grid = make_interval_grid(0.0, 1.0, 2)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [0.5, 1.0, 2.0] {
        let t = saturating_operator(&grid, k, (-10.0, 10.0), 201)?;
        let norm = llip_norm(&OperatorRep::from(t.clone()), cfg.zero_tol)?.value;
        let at_zero = t.slices[0].eval(0.0);
        let good = norm <= 1.0 / k + 1e-9 && norm >= 1.0 / k - 1e-3 && at_zero == 1.0;
        ok &= good;
        detail.push(format!("k={k}: norm={norm}, value_at_0={at_zero}"));
    }
    Ok((ok, detail.join("; ")))
}

fn case_multiplication(cfg: &Config) -> Result<(bool, String)> {
    let grid = make_interval_grid(-1.0, 1.0, 21)?;
    let h = tabulate(&grid, |w| 2.0 * w[0] - 0.5)?;
    let op = multiplication_operator(&grid, h.clone())?;
    let f = tabulate(&grid, |w| w[0] * w[0] + 1.0)?;
    let g = tabulate(&grid, |w| w[0] - 1.0)?;
    let ratio = ratio_function(&op, &f, &g, cfg.zero_tol)?;
    let abs_h: Vec<f64> = h.values.iter().map(|v| v.abs()).collect();
    let ratio_err = max_abs_diff(&ratio.values, &abs_h);
    let norm = llip_norm(&op, cfg.zero_tol)?.value;
    let max_h = abs_h.iter().copied().fold(0.0, f64::max);
    let shifted = f.map(|v| v + 0.5);
    let est = lip_norm_estimate(&op, &[(f, shifted)])?;
    let ok = ratio_err <= 1e-12 && norm == max_h && (est - max_h).abs() <= 1e-12;
    Ok((
        ok,
        format!("ratio_err={ratio_err}, norm={norm}, max_abs_h={max_h}, estimate={est}"),
    ))
}

fn case_envelope(cfg: &Config) -> Result<(bool, String)> {
    let (grid, op) = envelope_example(REFERENCE_POINTS)?;
    let env = minimal_envelope(&op, &grid, cfg)?;
    let expected: Vec<f64> = grid
        .points()
        .iter()
        .map(|p| {
            let w = p[0];
            if w < 0.25 {
                2.0
            } else if w <= 0.75 {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    let err = max_abs_diff(&env.phi.values, &expected);
    let pairs = &env.continuity.flagged_pairs;
    let near_quarter = flags_jump_near(&grid, pairs, 0.25, 1e-9);
    let near_three_quarters = flags_jump_near(&grid, pairs, 0.75, 1e-9);
    let ok = err == 0.0
        && env.continuity.is_flagged_discontinuous
        && near_quarter
        && near_three_quarters;
    Ok((
        ok,
        format!(
            "max_err={err}, flagged={}, jump_at_1/4={near_quarter}, jump_at_3/4={near_three_quarters}",
            env.continuity.is_flagged_discontinuous
        ),
    ))
}

fn case_constant_bound(cfg: &Config) -> Result<(bool, String)> {
    let (grid, op) = envelope_example(REFERENCE_POINTS)?;
    let c = constant_bound(&op, &grid, cfg)?;
    let q = c.phi.values[0];
    let two = GridFunction::constant(&grid, 2.0)?;
    let v2 = verify_bound(&op, &grid, &two, cfg)?.max_violation;
    let half = GridFunction::constant(&grid, 0.5)?;
    let rep = verify_bound(&op, &grid, &half, cfg)?;
    let site = rep.worst_violation.map(|s| grid.point(s.point)[0]);
    let ok = q == 2.0
        && c.phi.values.iter().all(|v| *v == 2.0)
        && v2 == 0.0
        && rep.max_violation > 0.0
        && site.is_some_and(|w| w < 0.25);
    Ok((
        ok,
        format!(
            "constant={q}, violation_at_2={v2}, violation_at_0.5={}, worst_w={site:?}",
            rep.max_violation
        ),
    ))
}

fn case_norm_witness(cfg: &Config) -> Result<(bool, String)> {
    let grid = make_interval_grid(0.0, 1.0, 5)?;
    let t = saturating_operator(&grid, 1.0, (-10.0, 10.0), 201)?;
    let probes = norm_witness_probes(&t);
    let op = OperatorRep::from(t);
    let norm = llip_norm(&op, cfg.zero_tol)?.value;
    let est = lip_norm_estimate(&op, &[probes])?;
    let rel = (norm - est).abs() / norm;
    Ok((rel <= 1e-9, format!("llip={norm}, lip_estimate={est}")))
}

fn case_ill_defined(cfg: &Config) -> Result<(bool, String)> {
    let grid = make_interval_grid(0.0, 1.0, 11)?;
    let g1 = tabulate(&grid, |w| w[0])?;
    let g2 = tabulate(&grid, |w| 1.0 - w[0])?; // meets g1 at w = 1/2 (index 5)
    let t1 = tabulate(&grid, |w| w[0])?;
    let t2 = tabulate(&grid, |w| 1.0 - w[0] + 0.1)?;
    let op = SampleOperator::new(&grid, vec![(g1, t1), (g2, t2)])?;
    let phi = GridFunction::constant(&grid, 1.0)?;
    match sample_to_superposition(&op, &phi, cfg.consistency_tol, cfg.zero_tol) {
        Err(LlipError::IllDefinedAtPoint { index, spread }) => Ok((
            index == 5,
            format!("rejected at index {index}, spread={spread}"),
        )),
        Err(e) => Ok((false, format!("unexpected error: {e}"))),
        Ok(_) => Ok((false, "accepted an ill-defined operator".into())),
    }
}

fn case_interpolation(_cfg: &Config) -> Result<(bool, String)> {
    let ex = extension_example(REFERENCE_POINTS)?;
    let mut ok = true;
    for method in [
        ExtensionMethod::Mcshane,
        ExtensionMethod::Whitney,
        ExtensionMethod::Midpoint,
    ] {
        let spec = ExtensionSpec::new(method, ex.continuous_bound.clone(), ex.source.clone())?;
        for s in &ex.source.samples {
            ok &= extend(&spec, &s.input)? == s.output;
        }
    }
    Ok((ok, format!("exact reproduction on all samples: {ok}")))
}

fn extension_expected(grid: &CompactGrid, left: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|p| {
            if p[0] < 0.0 {
                left(p[0])
            } else {
                2.0 * p[0] - 1.0
            }
        })
        .collect()
}

fn case_extension_failure(cfg: &Config) -> Result<(bool, String)> {
    let ex = extension_example(REFERENCE_POINTS)?;
    let spec = ExtensionSpec::new(ExtensionMethod::Mcshane, ex.jump_bound, ex.source)?;
    let d = extend_and_diagnose(&spec, &ex.probe, &ex.grid, cfg)?;
    let err = max_abs_diff(&d.extension.values, &extension_expected(&ex.grid, |_| 0.0));
    let at_zero = flags_jump_near(&ex.grid, &d.continuity.flagged_pairs, 0.0, 1e-9);
    let ok = err <= 1e-12 && d.continuity.is_flagged_discontinuous && at_zero;
    Ok((
        ok,
        format!(
            "max_err={err}, flagged={}, jump_at_0={at_zero}",
            d.continuity.is_flagged_discontinuous
        ),
    ))
}

fn case_extension_repaired(cfg: &Config) -> Result<(bool, String)> {
    let ex = extension_example(REFERENCE_POINTS)?;
    let spec = ExtensionSpec::new(ExtensionMethod::Mcshane, ex.continuous_bound, ex.source)?;
    let d = extend_and_diagnose(&spec, &ex.probe, &ex.grid, cfg)?;
    let err = max_abs_diff(
        &d.extension.values,
        &extension_expected(&ex.grid, |w| -1.0 - w),
    );
    let violation = d.bound_report.max_violation;
    let ok = err <= 1e-12 && !d.continuity.is_flagged_discontinuous && violation <= 1e-12;
    Ok((
        ok,
        format!(
            "max_err={err}, flagged={}, augmented_violation={violation}",
            d.continuity.is_flagged_discontinuous
        ),
    ))
}

/// Runs every worked example; the order of the returned cases is fixed.
pub fn selftest(cfg: &Config) -> Vec<CaseOutcome> {
    type Case = fn(&Config) -> Result<(bool, String)>;
    let cases: [(&str, Case); 9] = [
        ("saturating-operator-bound", case_saturating),
        ("multiplication-operator-bound", case_multiplication),
        ("minimal-envelope-discontinuous", case_envelope),
        ("constant-bound", case_constant_bound),
        ("norm-identity-witness", case_norm_witness),
        ("ill-defined-rejection", case_ill_defined),
        ("extension-interpolates", case_interpolation),
        ("extension-jump-bound-fails", case_extension_failure),
        (
            "extension-continuous-bound-repairs",
            case_extension_repaired,
        ),
    ];
    cases
        .iter()
        .map(|(name, case)| outcome(name, case(cfg)))
        .collect()
}

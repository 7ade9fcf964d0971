use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use llip_core::algebra::{compose, submultiplicativity_check, SubmultiplicativityReport};
use llip_core::bounds::{
    constant_bound, lip_norm_estimate, lipschitz_majorant, llip_norm, minimal_envelope,
    norm_witness_probes, ratio_function, verify_bound, BoundReport, BoundSource, OperatorNorm,
};
use llip_core::extension::{extend, extend_and_diagnose, extension_gap, ExtensionSpec};
use llip_core::grid::{make_interval_grid, ContinuityReport};
use llip_core::operators::superposition_to_tensor;
use llip_core::random::{random_constant_probes, seeded};
use llip_core::reference_cases::{selftest, CaseOutcome};
use llip_core::{CompactGrid, Config, GridFunction, Metric, OperatorRep, SampleOperator};
use serde::Serialize;

use crate::io::{read_function, read_grid, read_with_grid, to_stdout, write_json};
use crate::{BoundMode, Command, Verdict};

pub fn run(command: &Command, cfg: &Config) -> Result<Verdict> {
    match command {
        Command::Grid {
            interval,
            input,
            metric,
        } => grid(interval.as_deref(), input.as_deref(), (*metric).into()),
        Command::Eval { grid, op, input } => eval(grid.as_deref(), op, input),
        Command::Bound {
            grid,
            source,
            mode,
            phi,
            lipschitz,
            pair,
            tolerance,
        } => bound(
            BoundArgs {
                grid: grid.as_deref(),
                source,
                mode: *mode,
                phi: phi.as_deref(),
                lipschitz: *lipschitz,
                pair: (pair[0], pair[1]),
                tolerance: *tolerance,
            },
            cfg,
        ),
        Command::Norms {
            grid,
            op,
            probes,
            probe_range,
        } => norms(
            grid.as_deref(),
            op,
            *probes,
            (probe_range[0], probe_range[1]),
            cfg,
        ),
        Command::Extend {
            grid,
            source,
            phi,
            input,
            method,
            diagnose,
            tolerance,
        } => extend_cmd(
            ExtendArgs {
                grid: grid.as_deref(),
                source,
                phi,
                input,
                spec_method: *method,
                diagnose: *diagnose,
                tolerance: *tolerance,
            },
            cfg,
        ),
        Command::Compose {
            grid,
            left,
            right,
            out,
            check_submult,
        } => compose_cmd(
            grid.as_deref(),
            left,
            right,
            out.as_ref(),
            *check_submult,
            cfg,
        ),
        Command::Tensor { grid, op, out } => tensor(grid.as_deref(), op, out.as_ref(), cfg),
        Command::Selftest => self_test(cfg),
    }
}

fn load_grid(path: Option<&Path>) -> Result<Option<CompactGrid>> {
    path.map(|p| read_grid(p, Metric::Euclidean)).transpose()
}

fn require_grid(grid: Option<CompactGrid>, what: &str) -> Result<CompactGrid> {
    grid.with_context(|| {
        format!("{what} needs a grid: pass --grid or embed one in the operator file")
    })
}

fn grid(interval: Option<&[f64]>, input: Option<&Path>, metric: Metric) -> Result<Verdict> {
    let grid = match (interval, input) {
        (Some(&[a, b, n]), _) => {
            if n.fract() != 0.0 || n < 0.0 {
                bail!("point count must be a whole number, got {n}");
            }
            let grid = make_interval_grid(a, b, n as usize)?;
            if metric == Metric::Euclidean {
                grid
            } else {
                CompactGrid::new(grid.points().to_vec(), metric)?
            }
        }
        (_, Some(path)) => read_grid(path, metric)?,
        _ => bail!("pass --interval A B N or --input FILE"),
    };
    to_stdout(&grid)?;
    Ok(Verdict::Pass)
}

fn load_operator(grid: Option<&Path>, op: &Path) -> Result<(OperatorRep, Option<CompactGrid>)> {
    let grid = load_grid(grid)?;
    let (op, grid) = read_with_grid::<OperatorRep>(op, grid.as_ref())?;
    if let Some(g) = &grid {
        op.check_on(g)?;
    }
    Ok((op, grid))
}

fn eval(grid: Option<&Path>, op: &Path, input: &Path) -> Result<Verdict> {
    let (op, grid) = load_operator(grid, op)?;
    let f = read_function(input, grid.as_ref())?;
    to_stdout(&op.eval(&f)?)?;
    Ok(Verdict::Pass)
}

struct BoundArgs<'a> {
    grid: Option<&'a Path>,
    source: &'a Path,
    mode: BoundMode,
    phi: Option<&'a Path>,
    lipschitz: Option<f64>,
    pair: (usize, usize),
    tolerance: f64,
}

#[derive(Serialize)]
struct BoundOutput<'a> {
    #[serde(flatten)]
    report: &'a BoundReport,
    flagged_discontinuous: bool,
    accepted: bool,
}

#[derive(Serialize)]
struct RatioOutput {
    pair: (usize, usize),
    ratio: GridFunction,
}

fn bound(args: BoundArgs<'_>, cfg: &Config) -> Result<Verdict> {
    let grid = load_grid(args.grid)?;
    let (source, grid) = read_with_grid::<SampleOperator>(args.source, grid.as_ref())?;
    let grid = require_grid(grid, "bound")?;
    source.check_on(&grid)?;
    let report = match args.mode {
        BoundMode::Ratio => {
            let (i, j) = args.pair;
            let n = source.samples.len();
            if i >= n || j >= n {
                bail!("pair ({i}, {j}) is out of range for {n} samples");
            }
            let f = &source.samples[i].input;
            let g = &source.samples[j].input;
            let ratio = ratio_function(&source.clone().into(), f, g, cfg.zero_tol)?;
            to_stdout(&RatioOutput {
                pair: args.pair,
                ratio,
            })?;
            return Ok(Verdict::Pass);
        }
        BoundMode::Minimal => minimal_envelope(&source, &grid, cfg)?,
        BoundMode::Constant => constant_bound(&source, &grid, cfg)?,
        BoundMode::Majorant => {
            let lip = args.lipschitz.context("--lipschitz is required")?;
            let phi_min = minimal_envelope(&source, &grid, cfg)?.phi;
            let phi = lipschitz_majorant(&grid, &phi_min, lip)?;
            BoundReport {
                source: BoundSource::LipschitzMajorant,
                ..verify_bound(&source, &grid, &phi, cfg)?
            }
        }
        BoundMode::Verify => {
            let path = args.phi.context("--phi is required")?;
            let phi = read_function(path, Some(&grid))?;
            verify_bound(&source, &grid, &phi, cfg)?
        }
    };
    let accepted = report.accepted(args.tolerance);
    to_stdout(&BoundOutput {
        report: &report,
        flagged_discontinuous: report.continuity.is_flagged_discontinuous,
        accepted,
    })?;
    if !accepted {
        eprintln!(
            "bound violated: max_violation {} exceeds tolerance {}",
            report.max_violation, args.tolerance
        );
        return Ok(Verdict::Fail);
    }
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct Witness {
    f: GridFunction,
    g: GridFunction,
    ratio: f64,
}

#[derive(Serialize)]
struct NormsOutput {
    kind: &'static str,
    llip_norm: OperatorNorm,
    lip_norm_estimate: f64,
    probe_count: usize,
    witness: Option<Witness>,
}

fn norms(
    grid: Option<&Path>,
    op: &Path,
    count: usize,
    range: (f64, f64),
    cfg: &Config,
) -> Result<Verdict> {
    let (op, _) = load_operator(grid, op)?;
    let norm = llip_norm(&op, cfg.zero_tol)?;
    let (probes, witness) = match &op {
        OperatorRep::Sample(s) => {
            let mut probes = Vec::new();
            for (i, a) in s.samples.iter().enumerate() {
                for b in &s.samples[i + 1..] {
                    if a.input.sup_distance(&b.input)? > 0.0 {
                        probes.push((a.input.clone(), b.input.clone()));
                    }
                }
            }
            (probes, None)
        }
        other => {
            if range.0.is_nan() || range.1.is_nan() || range.0 >= range.1 {
                bail!("probe range [{}, {}] is empty", range.0, range.1);
            }
            let field = other.to_superposition()?;
            let (f, g) = norm_witness_probes(&field);
            let ratio = lip_norm_estimate(&op, &[(f.clone(), g.clone())])?;
            let mut rng = seeded(cfg.seed);
            let mut probes =
                random_constant_probes(&mut rng, &field.grid_id, field.slices.len(), count, range);
            probes.push((f.clone(), g.clone()));
            (probes, Some(Witness { f, g, ratio }))
        }
    };
    let estimate = lip_norm_estimate(&op, &probes)?;
    to_stdout(&NormsOutput {
        kind: op.kind(),
        llip_norm: norm,
        lip_norm_estimate: estimate,
        probe_count: probes.len(),
        witness,
    })?;
    Ok(Verdict::Pass)
}

struct ExtendArgs<'a> {
    grid: Option<&'a Path>,
    source: &'a Path,
    phi: &'a Path,
    input: &'a Path,
    spec_method: crate::MethodArg,
    diagnose: bool,
    tolerance: f64,
}

#[derive(Serialize)]
struct ExtendOutput {
    extension: GridFunction,
    #[serde(skip_serializing_if = "Option::is_none")]
    continuity: Option<ContinuityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<GridFunction>,
}

fn extend_cmd(args: ExtendArgs<'_>, cfg: &Config) -> Result<Verdict> {
    let grid = load_grid(args.grid)?;
    let (source, grid) = read_with_grid::<SampleOperator>(args.source, grid.as_ref())?;
    if let Some(g) = &grid {
        source.check_on(g)?;
    }
    let phi = read_function(args.phi, grid.as_ref())?;
    let f = read_function(args.input, grid.as_ref())?;
    let spec = ExtensionSpec::new(args.spec_method.into(), phi, source)?;
    if !args.diagnose {
        to_stdout(&ExtendOutput {
            extension: extend(&spec, &f)?,
            continuity: None,
            bound_report: None,
            gap: None,
        })?;
        return Ok(Verdict::Pass);
    }
    let grid = require_grid(grid, "extend --diagnose")?;
    let diagnosis = extend_and_diagnose(&spec, &f, &grid, cfg)?;
    let gap = extension_gap(&spec, &f)?;
    let accepted = diagnosis.bound_report.accepted(args.tolerance);
    if diagnosis.continuity.is_flagged_discontinuous {
        eprintln!(
            "extension flagged discontinuous near points {:?}",
            diagnosis.continuity.worst_pair
        );
    }
    let max_violation = diagnosis.bound_report.max_violation;
    to_stdout(&ExtendOutput {
        extension: diagnosis.extension,
        continuity: Some(diagnosis.continuity),
        bound_report: Some(diagnosis.bound_report),
        gap: Some(gap),
    })?;
    if !accepted {
        eprintln!(
            "augmented bound violated: max_violation {max_violation} exceeds tolerance {}",
            args.tolerance
        );
        return Ok(Verdict::Fail);
    }
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct ComposeOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    operator: Option<OperatorRep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    llip_norm: OperatorNorm,
    #[serde(skip_serializing_if = "Option::is_none")]
    submultiplicativity: Option<SubmultiplicativityReport>,
}

fn compose_cmd(
    grid: Option<&Path>,
    left: &Path,
    right: &Path,
    out: Option<&PathBuf>,
    check: bool,
    cfg: &Config,
) -> Result<Verdict> {
    let grid = load_grid(grid)?;
    let (outer, grid) = read_with_grid::<OperatorRep>(left, grid.as_ref())?;
    let (inner, grid) = read_with_grid::<OperatorRep>(right, grid.as_ref())?;
    if let Some(g) = &grid {
        outer.check_on(g)?;
        inner.check_on(g)?;
    }
    let outer = outer.to_superposition().context("left operand")?;
    let inner = inner.to_superposition().context("right operand")?;
    let composed: OperatorRep = compose(&outer, &inner, cfg.max_breakpoints)?.into();
    let llip = llip_norm(&composed, cfg.zero_tol)?;
    let report = check
        .then(|| submultiplicativity_check(&outer, &inner, cfg.max_breakpoints))
        .transpose()?;
    let operator = match out {
        Some(path) => {
            write_json(path, &composed)?;
            None
        }
        None => Some(composed),
    };
    let failed = report
        .as_ref()
        .is_some_and(|r| !(r.pointwise_ok && r.global_ok));
    to_stdout(&ComposeOutput {
        operator,
        out: out.cloned(),
        llip_norm: llip,
        submultiplicativity: report,
    })?;
    if failed {
        eprintln!("submultiplicativity check failed");
        return Ok(Verdict::Fail);
    }
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct TensorOutput {
    from: &'static str,
    to: &'static str,
    epsilon_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    operator: Option<OperatorRep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

fn tensor(grid: Option<&Path>, op: &Path, out: Option<&PathBuf>, cfg: &Config) -> Result<Verdict> {
    let (op, _) = load_operator(grid, op)?;
    let converted: OperatorRep = match &op {
        OperatorRep::Tensor(_) => op.to_superposition()?.into(),
        OperatorRep::Superposition(field) => superposition_to_tensor(field).into(),
        other => bail!(
            "tensor expects a tensor or superposition operator, got {}",
            other.kind()
        ),
    };
    let epsilon_norm = llip_norm(&op, cfg.zero_tol)?.value;
    let from = op.kind();
    let to = converted.kind();
    let operator = match out {
        Some(path) => {
            write_json(path, &converted)?;
            None
        }
        None => Some(converted),
    };
    to_stdout(&TensorOutput {
        from,
        to,
        epsilon_norm,
        operator,
        out: out.cloned(),
    })?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct SelftestOutput {
    cases: Vec<CaseOutcome>,
    passed: usize,
    total: usize,
}

fn self_test(cfg: &Config) -> Result<Verdict> {
    let cases = selftest(cfg);
    let passed = cases.iter().filter(|c| c.passed).count();
    let total = cases.len();
    for case in cases.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}: {}", case.name, case.detail);
    }
    to_stdout(&SelftestOutput {
        cases,
        passed,
        total,
    })?;
    Ok(if passed == total {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

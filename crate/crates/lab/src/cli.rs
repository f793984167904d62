//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checks::{barrier_grid, barrier_m, barrier_table, orlicz_invariants, run_check, CHECKS};
use crate::config::{
    config_hash, BoundarySpec, DomainSpec, ExperimentConfig, FieldKind, FieldSpec, Plan,
    StructureSpec,
};
use crate::error::{LabError, EXIT_USAGE};
use crate::output::{table_to_string, write_summary};
use crate::runner::{execute, exit_code_for, write_artifacts, RunResult};

#[derive(Debug, Parser)]
#[command(
    name = "orlicz-lab",
    version,
    about = "Solve and verify parabolic problems with Orlicz growth"
)]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, env = "ORLICZ_LAB_CONFIG")]
    pub config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true, env = "ORLICZ_LAB_OUT")]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, env = "ORLICZ_LAB_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for independent checks (default: logical cores).
    #[arg(long, global = true, env = "ORLICZ_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Print the check names with their anchors and exit.
    #[arg(long)]
    pub list_checks: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve and run the config's checks, writing all artifacts.
    Run,
    /// Solve only.
    Solve,
    /// Run checks (the config's, or those given with --check).
    Verify {
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// The structure-function invariant battery.
    OrliczCheck(StructureArgs),
    /// ε-continuation convergence table.
    Continuation {
        #[arg(long)]
        j_max: Option<usize>,
        #[command(flatten)]
        structure: StructureArgs,
    },
    /// Barrier residuals over the sample grid.
    Barrier {
        #[command(flatten)]
        structure: StructureArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Barrier constant (default 4·M_min).
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, value_enum, default_value_t = BarrierKind::Lateral)]
        kind: BarrierKind,
    },
    /// Boundary modulus at a lateral point.
    Modulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BarrierKind {
    Lateral,
    Corner,
    Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GKind {
    Power,
    Oscillating,
}

#[derive(Debug, Clone, Args)]
pub struct StructureArgs {
    /// Structure function; overrides the config.
    #[arg(long = "g", value_enum)]
    pub g: Option<GKind>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub g0: Option<f64>,
    #[arg(long)]
    pub g1: Option<f64>,
}

impl StructureArgs {
    fn spec(&self) -> Option<StructureSpec> {
        Some(match self.g? {
            GKind::Power => StructureSpec::power(self.p.unwrap_or(2.0)),
            GKind::Oscillating => {
                StructureSpec::oscillating(self.g0.unwrap_or(1.5), self.g1.unwrap_or(3.0))
            }
        })
    }
}

/// Parses `args` and runs; returns the exit status. Output goes to `stdout`,
/// diagnostics to `stderr`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, LabError> {
    if cli.list_checks {
        for c in CHECKS {
            writeln!(stdout, "{:<22} {}", c.name, c.anchor)?;
        }
        return Ok(0);
    }
    let Some(command) = &cli.command else {
        return Err(LabError::Config("no subcommand given (see --help)".into()));
    };
    match command {
        Command::Run => {
            let plan = load_plan(cli, None)?;
            let checks = plan.config.checks.clone();
            let solve = plan.domain.is_some() && plan.boundary.is_some();
            let result = execute(&plan, &checks, solve, cli.threads)?;
            let dir = cli
                .out
                .clone()
                .or_else(|| plan.config.out.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            write_artifacts(&dir, &plan, &result)?;
            finish(cli, &plan, &result, stdout, false)
        }
        Command::Solve => {
            let plan = load_plan(cli, None)?;
            let result = execute(&plan, &[], true, cli.threads)?;
            if let Some(dir) = &cli.out {
                write_artifacts(dir, &plan, &result)?;
            }
            let u = result.solution.as_ref().expect("solve requested");
            let mp = u.max_principle();
            writeln!(
                stdout,
                "solved: {} nodes, {} stored slices, t = {:?}, max-principle violation {:.3e}",
                u.grid().node_count(),
                u.slice_times().len(),
                u.time_span(),
                mp.map_or(f64::NAN, |m| m.violation)
            )?;
            Ok(0)
        }
        Command::Verify { checks } => {
            let plan = load_plan(cli, None)?;
            let checks = if checks.is_empty() {
                plan.config.checks.clone()
            } else {
                checks.clone()
            };
            let result = execute(&plan, &checks, false, cli.threads)?;
            finish(cli, &plan, &result, stdout, true)
        }
        Command::OrliczCheck(args) => {
            let plan = structure_plan(cli, args)?;
            let samples = plan.config.params.samples.unwrap_or(1000);
            let mut out = orlicz_invariants(&plan.structure, plan.seed, samples);
            out.report.anchor = CHECKS[0].anchor.to_string();
            out.report.provenance.config_hash = plan.hash.clone();
            out.report.provenance.seed = plan.seed;
            let result = RunResult {
                solution: None,
                exit_code: exit_code_for(std::slice::from_ref(&out)),
                outcomes: vec![out],
            };
            finish(cli, &plan, &result, stdout, true)
        }
        Command::Continuation { j_max, structure } => {
            let mut plan = match &cli.config {
                Some(_) => load_plan(cli, structure.spec())?,
                None => default_continuation_plan(structure.spec(), cli.seed)?,
            };
            if let Some(j) = j_max {
                plan.config.field.j_max = Some(*j);
            }
            let out = run_check("continuation", &plan, None)?;
            let table = out.table.as_ref().expect("continuation writes a table");
            write!(stdout, "{}", table_to_string(table)?)?;
            let result = RunResult {
                solution: None,
                exit_code: exit_code_for(std::slice::from_ref(&out)),
                outcomes: vec![out],
            };
            if let Some(dir) = &cli.out {
                write_artifacts(dir, &plan, &result)?;
            }
            Ok(result.exit_code)
        }
        Command::Barrier {
            structure,
            n,
            m,
            kind,
        } => {
            let mut plan = structure_plan(cli, structure)?;
            if m.is_some() {
                plan.config.params.barrier_m = *m;
            }
            let field = plan.model_field(*n)?;
            use orlicz_core::field::VectorField;
            let m = barrier_m(&plan, *n, field.nu(), field.ell());
            let grid = barrier_grid(&plan);
            let (name, rep) = match kind {
                BarrierKind::Lateral => (
                    "barrier-lateral",
                    orlicz_core::verify::barrier_lateral_check(&field, m, &grid)?,
                ),
                BarrierKind::Corner => (
                    "barrier-corner",
                    orlicz_core::verify::barrier_corner_check(&field, m, &grid)?,
                ),
                BarrierKind::Initial => (
                    "barrier-initial",
                    orlicz_core::verify::barrier_initial_check(&field, &grid)?,
                ),
            };
            write!(
                stdout,
                "{}",
                table_to_string(&barrier_table(name, &rep, *n))?
            )?;
            Ok(if rep.report.pass { 0 } else { 1 })
        }
        Command::Modulus => {
            let plan = load_plan(cli, None)?;
            let result = execute(&plan, &["boundary-modulus".to_string()], true, cli.threads)?;
            let out = &result.outcomes[0];
            write!(
                stdout,
                "{}",
                table_to_string(out.table.as_ref().expect("modulus writes a table"))?
            )?;
            if let Some(dir) = &cli.out {
                write_artifacts(dir, &plan, &result)?;
            }
            Ok(result.exit_code)
        }
    }
}

fn finish(
    cli: &Cli,
    plan: &Plan,
    result: &RunResult,
    stdout: &mut dyn Write,
    write_if_out: bool,
) -> Result<i32, LabError> {
    if write_if_out {
        if let Some(dir) = &cli.out {
            write_artifacts(dir, plan, result)?;
        }
    }
    write_summary(&mut *stdout, &result.outcomes)?;
    Ok(result.exit_code)
}

fn load_plan(cli: &Cli, structure: Option<StructureSpec>) -> Result<Plan, LabError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| LabError::Config("this subcommand needs --config".into()))?;
    let (mut cfg, hash) = ExperimentConfig::load(path)?;
    if let Some(s) = structure {
        cfg.structure = s;
    }
    Plan::resolve(cfg, hash, cli.seed)
}

/// Structure from the flags, else from the config, else `p = 2`.
fn structure_plan(cli: &Cli, args: &StructureArgs) -> Result<Plan, LabError> {
    if cli.config.is_some() {
        return load_plan(cli, args.spec());
    }
    let cfg = ExperimentConfig {
        structure: args.spec().unwrap_or_default(),
        ..Default::default()
    };
    synthetic_plan(cfg, cli.seed)
}

fn synthetic_plan(cfg: ExperimentConfig, seed: Option<u64>) -> Result<Plan, LabError> {
    let text = toml::to_string(&cfg).map_err(|e| LabError::Config(e.to_string()))?;
    let hash = config_hash(&text)?;
    Plan::resolve(cfg, hash, seed)
}

/// The oscillating example with `g0 = 1.5, g1 = 3` on `[0, 1] × [0, 0.1]`,
/// `h = 1/32`, `ψ = 1.5 sin(πx)`, `J = 5`.
pub fn default_continuation_config(structure: Option<StructureSpec>) -> ExperimentConfig {
    ExperimentConfig {
        checks: vec!["continuation".into()],
        structure: structure.unwrap_or(StructureSpec::oscillating(1.5, 3.0)),
        field: FieldSpec {
            kind: FieldKind::Continuation,
            j_max: Some(5),
            ..Default::default()
        },
        domain: Some(DomainSpec {
            lower: vec![0.0],
            upper: vec![1.0],
            t0: 0.0,
            t_final: 0.1,
            h: 1.0 / 32.0,
            safety: None,
            stride: None,
            tau: None,
        }),
        boundary: Some(BoundarySpec {
            expr: Some("1.5*sin(pi*x)".into()),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn default_continuation_plan(
    structure: Option<StructureSpec>,
    seed: Option<u64>,
) -> Result<Plan, LabError> {
    synthetic_plan(default_continuation_config(structure), seed)
}

//! Solve once, run the requested checks on a worker pool, collect the
//! artifacts on the calling thread.

use std::fs;
use std::path::Path;

use orlicz_core::solver::{solve_cauchy_dirichlet, DiscreteSolution};
use rayon::prelude::*;

use crate::checks::{lookup, run_check, CheckOutcome};
use crate::config::Plan;
use crate::error::{LabError, EXIT_CHECK_FAILED, EXIT_HYPOTHESIS, EXIT_OK};
use crate::output::{
    write_json, write_slices, write_summary, write_table, Manifest, ManifestCheck, ReportRecord,
};

#[derive(Debug, Clone)]
pub struct RunResult {
    pub solution: Option<DiscreteSolution>,
    pub outcomes: Vec<CheckOutcome>,
    pub exit_code: i32,
}

pub fn exit_code_for(outcomes: &[CheckOutcome]) -> i32 {
    if outcomes.iter().any(|o| o.hypothesis_violation) {
        EXIT_HYPOTHESIS
    } else if outcomes.iter().all(|o| o.report.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Solves if `solve` is set or a check needs it, then runs `checks` in
/// order on `threads` workers (all logical cores when `None`).
pub fn execute(
    plan: &Plan,
    checks: &[String],
    solve: bool,
    threads: Option<usize>,
) -> Result<RunResult, LabError> {
    let mut needs_solution = solve;
    for name in checks {
        let info = lookup(name).ok_or_else(|| {
            LabError::Config(format!("unknown check '{name}' (see --list-checks)"))
        })?;
        needs_solution |= info.needs_solution;
    }
    let solution = if needs_solution {
        let field = plan.solve_field()?;
        Some(solve_cauchy_dirichlet(
            field.as_ref(),
            plan.domain()?,
            plan.boundary()?,
            plan.grid_params()?,
        )?)
    } else {
        None
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<CheckOutcome, LabError>> = pool.install(|| {
        checks
            .par_iter()
            .map(|name| run_check(name, plan, solution.as_ref()))
            .collect()
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let exit_code = exit_code_for(&outcomes);
    Ok(RunResult {
        solution,
        outcomes,
        exit_code,
    })
}

/// `manifest.json`, `slices/*.csv`, `reports/*.json` (plus any check
/// tables as `reports/*.csv`) and `summary.csv` under `dir`.
pub fn write_artifacts(dir: &Path, plan: &Plan, result: &RunResult) -> Result<(), LabError> {
    fs::create_dir_all(dir.join("reports"))?;
    let mut files = Vec::new();
    let slices = match &result.solution {
        Some(u) => write_slices(dir, u)?,
        None => Vec::new(),
    };
    files.extend(slices.iter().map(|s| s.file.clone()));
    for o in &result.outcomes {
        let name = format!("reports/{}.json", o.name);
        write_json(
            &dir.join(&name),
            &ReportRecord::new(&o.name, &o.report, o.hypothesis_violation),
        )?;
        files.push(name);
        if let Some(t) = &o.table {
            let name = format!("reports/{}.csv", t.name);
            write_table(fs::File::create(dir.join(&name))?, t)?;
            files.push(name);
        }
    }
    write_summary(fs::File::create(dir.join("summary.csv"))?, &result.outcomes)?;
    files.push("summary.csv".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: plan.hash.clone(),
        seed: plan.seed,
        checks: result
            .outcomes
            .iter()
            .map(|o| ManifestCheck {
                name: o.name.clone(),
                anchor: o.report.anchor.clone(),
                pass: o.report.pass,
                hypothesis_violation: o.hypothesis_violation,
            })
            .collect(),
        slices,
        files,
        exit_code: result.exit_code,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

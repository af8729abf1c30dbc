use std::sync::Arc;
use std::time::Instant;

use bangbang::sparse::SolveCounters;
use bangbang::{
    Discretization, FixedPointConfig, LinearQuadraticSolver, LqConfig, RunReport, SemilinearProblem, TrConfig,
    TrustRegionSolver,
};
use log::{info, warn};

use crate::config::{Case, ExperimentConfig};
use crate::output::{export_control_field, write_table_csv, write_trace_csv, TableRow};
use crate::CliError;

/// Result of one mesh level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub report: RunReport,
    /// Solver error that ended the run early, if any.
    pub error: Option<String>,
}

impl LevelOutcome {
    pub fn table_row(&self, timing: bool) -> TableRow {
        let r = &self.report;
        TableRow {
            nodes: r.nodes,
            iters: r.iterations,
            facts: r.factorizations,
            solves: r.solves,
            time_s: if timing { TableRow::rounded_time(r.wall_time_s) } else { 0.0 },
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub levels: Vec<LevelOutcome>,
}

impl ExperimentReport {
    pub fn table(&self) -> Vec<TableRow> {
        self.levels.iter().map(|l| l.table_row(self.config.timing)).collect()
    }
}

fn run_level(config: &ExperimentConfig, n: usize) -> Result<LevelOutcome, CliError> {
    let disc = Discretization::uniform(n).map_err(|e| CliError::Config(e.to_string()))?;
    let problem = SemilinearProblem::benchmark(disc.mesh(), config.alpha, config.u_b)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let counters = Arc::new(SolveCounters::default());
    let start = Instant::now();
    let result = match config.case {
        Case::Linear => LinearQuadraticSolver::with_counters(&disc, &problem, Arc::clone(&counters)).and_then(|s| {
            let mut c = LqConfig::default();
            if let Some(tol) = config.tolerance {
                c.tolerance = tol;
            }
            if let Some(max) = config.max_iterations {
                c.max_iterations = max;
            }
            s.solve(&c)
        }),
        Case::FixedPoint => {
            LinearQuadraticSolver::with_counters(&disc, &problem, Arc::clone(&counters)).and_then(|s| {
                let mut c = FixedPointConfig::default();
                if let Some(tol) = config.tolerance {
                    c.tolerance = tol;
                }
                if let Some(max) = config.max_iterations {
                    c.max_iterations = max;
                }
                s.fixed_point(&c)
            })
        }
        Case::Semilinear => {
            TrustRegionSolver::with_counters(&disc, &problem, Arc::clone(&counters)).and_then(|mut s| {
                let mut c = TrConfig::default();
                if let Some(tol) = config.tolerance {
                    c.gradient_tolerance = tol;
                }
                if let Some(max) = config.max_iterations {
                    c.max_outer = max;
                }
                s.solve(&c)
            })
        }
    };
    let outcome = match result {
        Ok(report) => LevelOutcome { report, error: None },
        Err(e) => {
            warn!("level n={n} failed: {e}");
            LevelOutcome {
                report: RunReport {
                    subdivisions: n,
                    nodes: disc.num_nodes(),
                    factorizations: counters.factorizations(),
                    solves: counters.solves(),
                    wall_time_s: start.elapsed().as_secs_f64(),
                    u_bound: config.u_b,
                    w: bangbang::NodalField::zeros(disc.num_nodes()),
                    ..Default::default()
                },
                error: Some(e.to_string()),
            }
        }
    };
    if config.export_fields && outcome.error.is_none() {
        let path = config.output.join(format!("control_n{n}.vtk"));
        export_control_field(disc.mesh(), &outcome.report.w, config.u_b, &path)?;
    }
    let path = config.output.join(format!("trace_n{n}.csv"));
    write_trace_csv(&outcome.report.trace, &path)?;
    Ok(outcome)
}

/// Runs every level in order and writes `table.csv`, `trace_n<level>.csv`
/// and `control_n<level>.vtk` into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let config = config.clone().validated()?;
    std::fs::create_dir_all(&config.output).map_err(|source| CliError::Io {
        path: config.output.clone(),
        source,
    })?;
    let mut levels = Vec::with_capacity(config.levels.len());
    for &n in &config.levels {
        let outcome = run_level(&config, n)?;
        let r = &outcome.report;
        info!(
            "n={n}: {} nodes, {} iterations, {} factorizations, {} solves, {:.4} s, converged {}",
            r.nodes, r.iterations, r.factorizations, r.solves, r.wall_time_s, r.converged
        );
        levels.push(outcome);
    }
    let report = ExperimentReport { config, levels };
    write_table_csv(&report.table(), &report.config.output.join("table.csv"))?;
    Ok(report)
}

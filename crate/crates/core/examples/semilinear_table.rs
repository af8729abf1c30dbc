//! Prints iteration counts of the trust-region method for a range of levels.
//!
//! `cargo run --release --example semilinear_table -- 3 50 8 16 32`

use bangbang::{Discretization, SemilinearProblem, TrConfig, TrustRegionSolver};

fn main() -> bangbang::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let alpha = args.first().copied().unwrap_or(3.0);
    let ub = args.get(1).copied().unwrap_or(50.0);
    let levels: Vec<usize> = if args.len() > 2 {
        args[2..].iter().map(|&v| v as usize).collect()
    } else {
        vec![8, 16, 32]
    };
    println!("{:>8} {:>6} {:>6} {:>7} {:>9}", "nodes", "iters", "facts", "solves", "time");
    for n in levels {
        let disc = Discretization::uniform(n)?;
        let problem = SemilinearProblem::benchmark(disc.mesh(), alpha, ub)?;
        let mut solver = TrustRegionSolver::new(&disc, &problem)?;
        let r = solver.solve(&TrConfig::default())?;
        println!(
            "{:>8} {:>6} {:>6} {:>7} {:>9.4} {}",
            r.nodes,
            r.iterations,
            r.factorizations,
            r.solves,
            r.wall_time_s,
            if r.converged { "" } else { "(not converged)" }
        );
        for t in &r.trace {
            eprintln!(
                "  k={:<3} J={:.10} |r|={:.3e} radius={:.3e} rho={:.3} acc={} bnd={} cg={} pred={:.3e} ared={:.3e}",
                t.iteration,
                t.merit,
                t.residual,
                t.radius.unwrap_or(0.0),
                t.step,
                t.accepted,
                t.boundary_hit,
                t.cg_iterations,
                t.pred.unwrap_or(f64::NAN),
                t.ared.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

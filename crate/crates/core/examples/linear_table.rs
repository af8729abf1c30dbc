//! Prints iteration counts of the dual Newton method for a range of levels.
//!
//! `cargo run --release --example linear_table -- 50 8 16 32 64 128`

use bangbang::{Discretization, LinearQuadraticSolver, LqConfig, SemilinearProblem};

fn main() -> bangbang::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let ub = args.first().copied().unwrap_or(50.0);
    let levels: Vec<usize> = if args.len() > 1 {
        args[1..].iter().map(|&v| v as usize).collect()
    } else {
        vec![8, 16, 32, 64, 128]
    };
    println!("{:>8} {:>6} {:>7} {:>9}", "nodes", "iters", "solves", "time");
    for n in levels {
        let disc = Discretization::uniform(n)?;
        let problem = SemilinearProblem::benchmark(disc.mesh(), 0.0, ub)?;
        let solver = LinearQuadraticSolver::new(&disc, &problem)?;
        let r = solver.solve(&LqConfig::default())?;
        println!(
            "{:>8} {:>6} {:>7} {:>9.4} {}",
            r.nodes, r.iterations, r.solves, r.wall_time_s, if r.converged { "" } else { "(not converged)" }
        );
        for t in &r.trace {
            eprintln!("  k={} |F|={:.3e} phi={:.6} t={} cg={}", t.iteration, t.residual, t.merit, t.step, t.cg_iterations);
        }
        eprintln!("  contraction tail {:?}", &r.contraction_factors[r.contraction_factors.len().saturating_sub(4)..]);
    }
    Ok(())
}

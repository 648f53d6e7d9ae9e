//! Optimizes a piecewise-constant pulse for one gate and reports the
//! intrinsic fidelity, leakage and compensation phases.
//!
//! ```text
//! cargo run --release --example optimize_gate -- [GATE] [theta_ns] [max_evals] [seed] [out_dir]
//! ```
//!
//! Defaults: CCZ, 26 ns, 20000 evaluations, seed 1. With `out_dir` the pulse,
//! history and report are written there.

use std::path::PathBuf;

use trigate::experiments::{cmd_optimize, write_optimize_artifacts, RunConfig};
use trigate::fmt::fmt_g12;
use trigate::GateName;

fn main() -> trigate::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gate: GateName = args.first().map_or(Ok(GateName::Ccz), |s| s.parse())?;
    let theta: f64 = args.get(1).map_or(26.0, |s| s.parse().expect("theta in ns"));
    let evals: u64 = args.get(2).map_or(20_000, |s| s.parse().expect("evaluation budget"));
    let seed: u64 = args.get(3).map_or(1, |s| s.parse().expect("seed"));
    let mut cfg = RunConfig {
        gate,
        theta_ns: theta,
        ..RunConfig::default()
    };
    cfg.optimizer.seed = seed;
    cfg.optimizer.max_evaluations = Some(evals);

    let r = cmd_optimize(&cfg, None)?;
    println!("gate {} (synthesized as {}), {} parameters", r.gate, r.synthesized, r.n_params);
    println!("fidelity {} after {} evaluations ({:?})", fmt_g12(r.fidelity), r.evaluations, r.termination);
    let worst_leak = r.leakage.iter().copied().fold(0.0, f64::max);
    println!("largest leakage {}", fmt_g12(worst_leak));
    println!("beta_pre  {:?}", r.compensation.beta_pre.iter().map(|b| fmt_g12(*b)).collect::<Vec<_>>());
    println!("beta_post {:?}", r.compensation.beta_post.iter().map(|b| fmt_g12(*b)).collect::<Vec<_>>());
    if let Some(dir) = args.get(4) {
        write_optimize_artifacts(&cfg, &r, &PathBuf::from(dir))?;
        println!("artifacts in {dir}");
    }
    Ok(())
}

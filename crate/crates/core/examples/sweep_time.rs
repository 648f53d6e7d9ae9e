//! Best fidelity against gate time for several couplings, the threshold
//! time `Θ*` per coupling and a linear fit of `1/Θ*` against `g`.
//!
//! ```text
//! cargo run --release --example sweep_time -- [evals_per_cell] [threshold]
//! ```
//!
//! The default budget is small, so the table is indicative only; raise it
//! for publication-quality curves.

use trigate::experiments::{cmd_sweep_time, RunConfig, SweepSpec};
use trigate::fmt::fmt_g12;

fn main() -> trigate::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let evals: u64 = args.first().map_or(3_000, |s| s.parse().expect("evaluations per cell"));
    let threshold: f64 = args.get(1).map_or(0.9, |s| s.parse().expect("threshold fidelity"));
    let cfg = RunConfig {
        sweep: Some(SweepSpec {
            g_mhz: vec![20.0, 30.0, 40.0, 50.0],
            theta_ns: vec![8.0, 12.0, 16.0, 20.0, 24.0, 28.0],
            threshold,
            max_evaluations_per_cell: evals,
        }),
        ..RunConfig::default()
    };
    let r = cmd_sweep_time(&cfg)?;
    println!("g_mhz,theta_ns,fidelity");
    for c in &r.cells {
        println!("{},{},{}", fmt_g12(c.g_mhz), fmt_g12(c.theta_ns), c.fidelity.map_or("nan".into(), fmt_g12));
    }
    for (g, t) in &r.thresholds {
        println!("g = {} MHz: theta* = {}", fmt_g12(*g), t.map_or("not reached".into(), fmt_g12));
    }
    if let Some(fit) = r.inverse_time_fit {
        println!(
            "1/theta* = {}·g + {}  (R² = {})",
            fmt_g12(fit.slope),
            fmt_g12(fit.intercept),
            fmt_g12(fit.r_squared)
        );
    }
    Ok(())
}

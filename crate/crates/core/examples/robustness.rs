//! Mean and worst intrinsic fidelity of a pulse under uniform random
//! control-amplitude errors `δε·rand(−1, 1)` on every bin.
//!
//! ```text
//! cargo run --release --example robustness -- pulse.json [GATE] [trials]
//! ```
//!
//! Without a pulse file a short optimization produces one first.

use trigate::experiments::{cmd_optimize, cmd_robustness, RobustnessSpec, RunConfig};
use trigate::fmt::fmt_g12;
use trigate::{GateName, PulseTable};

fn main() -> trigate::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gate: GateName = args.get(1).map_or(Ok(GateName::Ccz), |s| s.parse())?;
    let trials: usize = args.get(2).map_or(50, |s| s.parse().expect("trial count"));
    let mut cfg = RunConfig {
        gate,
        ..RunConfig::default()
    };
    let pulse = match args.first() {
        Some(path) => PulseTable::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            cfg.optimizer.max_evaluations = Some(20_000);
            eprintln!("no pulse given; optimizing one with 20000 evaluations");
            cmd_optimize(&cfg, None)?.pulse
        }
    };
    let spec = RobustnessSpec {
        trials_per_point: trials,
        ..RobustnessSpec::default()
    };
    let r = cmd_robustness(&cfg, &pulse, &spec, 11)?;
    println!("unperturbed fidelity {}", fmt_g12(r.unperturbed));
    println!("delta_khz,mean_fidelity,min_fidelity");
    for row in &r.rows {
        println!("{},{},{}", fmt_g12(row.delta_khz), fmt_g12(row.mean_fidelity), fmt_g12(row.min_fidelity));
    }
    match r.threshold_khz {
        Some(t) => println!("mean fidelity stays >= 0.9999 up to {} kHz", fmt_g12(t)),
        None => println!("mean fidelity is below 0.9999 already at the smallest grid point"),
    }
    Ok(())
}

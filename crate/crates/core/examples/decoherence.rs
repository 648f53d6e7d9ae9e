//! Average state fidelity of a pulse under amplitude and phase damping for
//! several coherence times, with the fitted coefficient `c` in
//! `1 − F̄ ≈ c·Θ/T`.
//!
//! ```text
//! cargo run --release --example decoherence -- pulse.json [GATE]
//! ```
//!
//! Without a pulse file a short optimization produces one first.

use trigate::experiments::{cmd_decoherence, cmd_optimize, DecoherenceSpec, RunConfig};
use trigate::fmt::fmt_g12;
use trigate::{GateName, PulseTable};

fn main() -> trigate::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gate: GateName = args.get(1).map_or(Ok(GateName::Ccz), |s| s.parse())?;
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
    let r = cmd_decoherence(&cfg, &pulse, &DecoherenceSpec::default())?;
    println!("intrinsic fidelity {} over {} ns", fmt_g12(r.intrinsic_fidelity), fmt_g12(r.theta_ns));
    println!("T_us,Fbar,(1-Fbar)T/theta");
    for row in &r.rows {
        println!("{},{},{}", fmt_g12(row.t_us), fmt_g12(row.fbar), fmt_g12(row.coefficient));
    }
    println!("fitted coefficient {}", fmt_g12(r.fitted_coefficient));
    Ok(())
}

//! Scans the avoided-crossing CZ pulse on two transmons for several
//! couplings and compares the best plateau time with `1/(2√2·g)`.
//!
//! ```text
//! cargo run --release --example cz_study [g_mhz ...]
//! ```

use trigate::experiments::{cmd_cz_study, CzStudySpec, RunConfig};
use trigate::fmt::fmt_g12;
use trigate::GateName;

fn main() -> trigate::Result<()> {
    let couplings: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("coupling in MHz"))
        .collect();
    let couplings = if couplings.is_empty() { vec![20.0, 30.0, 40.0, 50.0] } else { couplings };
    println!("g_mhz,best_t_on_ns,predicted_t_on_ns,g_times_t_on,fidelity,tuned_omega_on_ghz,tuned_t_on_ns,tuned_fidelity");
    for g in couplings {
        let cfg = RunConfig {
            gate: GateName::Cz,
            g_mhz: g,
            ..RunConfig::default()
        };
        let r = cmd_cz_study(&cfg, &CzStudySpec::default())?;
        println!(
            "{},{},{},{},{},{},{},{}",
            fmt_g12(g),
            fmt_g12(r.best_t_on),
            fmt_g12(r.predicted_t_on),
            fmt_g12(g * 1e-3 * r.best_t_on),
            fmt_g12(r.best_fidelity),
            fmt_g12(r.tuned.0),
            fmt_g12(r.tuned.1),
            fmt_g12(r.tuned.2)
        );
    }
    Ok(())
}

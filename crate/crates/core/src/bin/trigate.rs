//! Command-line front end for the experiments module.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trigate::experiments::{self as ex, RunConfig};
use trigate::fmt::fmt_g12;
use trigate::{PulseTable, Result};

#[derive(Parser)]
#[command(name = "trigate", version, about = "Pulse synthesis for three-qubit transmon gates")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Verb {
    /// Optimize a pulse for the configured gate.
    Optimize(Common),
    /// Fidelity against gate time over a grid of couplings.
    SweepTime(Common),
    /// Fidelity under random control-amplitude noise.
    Robustness(PulseArgs),
    /// Average state fidelity against coherence time.
    Decoherence(PulseArgs),
    /// Energy levels while sweeping one transmon frequency.
    Spectrum(Common),
    /// Scan of the analytic avoided-crossing CZ pulse.
    CzStudy(Common),
    /// Gate truth tables and a quick invariant suite.
    Verify(Common),
}

#[derive(Args)]
struct PulseArgs {
    #[command(flatten)]
    common: Common,
    /// Pulse JSON, overriding `pulse_path` in the config.
    #[arg(long)]
    pulse: Option<PathBuf>,
}

enum Outcome {
    Done,
    BudgetExhausted,
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.optimizer.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(w) = common.workers {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn pulse_for(cfg: &RunConfig, arg: &Option<PathBuf>) -> Result<PulseTable> {
    let path = arg
        .clone()
        .or_else(|| cfg.pulse_path.clone())
        .ok_or_else(|| trigate::Error::Parameter("no pulse given (--pulse or pulse_path)".into()))?;
    PulseTable::from_json(&std::fs::read_to_string(path)?)
}

fn run(verb: Verb) -> Result<Outcome> {
    match verb {
        Verb::Optimize(c) => {
            let cfg = load(&c)?;
            let r = ex::cmd_optimize(&cfg, None)?;
            ex::write_optimize_artifacts(&cfg, &r, &cfg.output_dir)?;
            println!(
                "gate={} theta_ns={} fidelity={} evaluations={}",
                r.gate,
                fmt_g12(r.theta_ns),
                fmt_g12(r.fidelity),
                r.evaluations
            );
            let reached = r.fidelity >= cfg.optimizer.target_fitness;
            Ok(if reached { Outcome::Done } else { Outcome::BudgetExhausted })
        }
        Verb::SweepTime(c) => {
            let cfg = load(&c)?;
            let r = ex::cmd_sweep_time(&cfg)?;
            write(&cfg.output_dir, "sweep_time.csv", &ex::sweep_csv(&cfg, &r))?;
            write(&cfg.output_dir, "threshold_time.csv", &ex::threshold_csv(&cfg, &r))?;
            for cell in r.cells.iter().filter(|c| c.error.is_some()) {
                eprintln!("cell g={} theta={} failed: {}", cell.g_mhz, cell.theta_ns, cell.error.as_deref().unwrap_or(""));
            }
            if let Some(fit) = r.inverse_time_fit {
                println!(
                    "inverse-time fit slope={} intercept={} r_squared={}",
                    fmt_g12(fit.slope),
                    fmt_g12(fit.intercept),
                    fmt_g12(fit.r_squared)
                );
            }
            Ok(Outcome::Done)
        }
        Verb::Robustness(a) => {
            let cfg = load(&a.common)?;
            let pulse = pulse_for(&cfg, &a.pulse)?;
            let spec = cfg.robustness.clone().unwrap_or_default();
            let r = ex::cmd_robustness(&cfg, &pulse, &spec, cfg.optimizer.seed)?;
            write(&cfg.output_dir, "robustness.csv", &ex::robustness_csv(&cfg, &r, cfg.optimizer.seed))?;
            let thr = r.threshold_khz.map_or_else(|| "none".into(), fmt_g12);
            println!("unperturbed={} threshold_khz={}", fmt_g12(r.unperturbed), thr);
            Ok(Outcome::Done)
        }
        Verb::Decoherence(a) => {
            let cfg = load(&a.common)?;
            let pulse = pulse_for(&cfg, &a.pulse)?;
            let spec = cfg.decoherence.clone().unwrap_or_default();
            let r = ex::cmd_decoherence(&cfg, &pulse, &spec)?;
            write(&cfg.output_dir, "decoherence.csv", &ex::decoherence_csv(&cfg, &r))?;
            println!(
                "intrinsic={} fitted_coefficient={}",
                fmt_g12(r.intrinsic_fidelity),
                fmt_g12(r.fitted_coefficient)
            );
            Ok(Outcome::Done)
        }
        Verb::Spectrum(c) => {
            let cfg = load(&c)?;
            let spec = cfg.spectrum.clone().unwrap_or_default();
            let t = ex::cmd_spectrum(&cfg, &spec)?;
            write(&cfg.output_dir, "spectrum.csv", &ex::spectrum_csv(&cfg, &t))?;
            Ok(Outcome::Done)
        }
        Verb::CzStudy(c) => {
            let cfg = load(&c)?;
            let spec = cfg.cz_study.clone().unwrap_or_default();
            let r = ex::cmd_cz_study(&cfg, &spec)?;
            write(&cfg.output_dir, "cz_study.csv", &ex::cz_csv(&cfg, &r))?;
            println!(
                "best_t_on={} fidelity={} predicted_t_on={} tuned_omega_on={} tuned_t_on={} tuned_fidelity={}",
                fmt_g12(r.best_t_on),
                fmt_g12(r.best_fidelity),
                fmt_g12(r.predicted_t_on),
                fmt_g12(r.tuned.0),
                fmt_g12(r.tuned.1),
                fmt_g12(r.tuned.2)
            );
            Ok(Outcome::Done)
        }
        Verb::Verify(c) => {
            let cfg = load(&c)?;
            let checks = ex::cmd_verify(cfg.optimizer.seed)?;
            let mut ok = true;
            for ch in &checks {
                println!("{} {}: {}", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.detail);
                ok &= ch.passed;
            }
            if ok {
                Ok(Outcome::Done)
            } else {
                Err(trigate::Error::Model("verification failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::BudgetExhausted) => {
            eprintln!("budget exhausted before reaching the target fidelity");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! Prints the energy levels of the three-transmon chain as the middle
//! transmon is swept from 4.5 to 7.5 GHz with the outer ones at 4.8 and
//! 6.8 GHz. Pass `full` to diagonalize the untruncated 64-level space.
//!
//! ```text
//! cargo run --release --example spectrum [full] > spectrum.csv
//! ```

use trigate::experiments::{cmd_spectrum, RunConfig, SpectrumSpec};

fn main() -> trigate::Result<()> {
    let full = std::env::args().nth(1).is_some_and(|a| a == "full");
    let spec = SpectrumSpec {
        truncation: if full { None } else { Some(3) },
        ..SpectrumSpec::default()
    };
    let table = cmd_spectrum(&RunConfig::default(), &spec)?;
    print!("{}", table.to_csv());
    Ok(())
}

//! Prints the truth table of every target gate and runs the quick
//! invariant suite used by `trigate verify`.

use trigate::experiments::cmd_verify;
use trigate::gates::{make_target, verify_truth_table};
use trigate::GateName;

fn main() -> trigate::Result<()> {
    for name in GateName::ALL {
        let report = verify_truth_table(&make_target(name));
        println!("{name}");
        for (input, output, ok) in &report.rows {
            println!("  |{input}> -> {output}  {}", if *ok { "ok" } else { "MISMATCH" });
        }
    }
    let mut failed = 0;
    for c in cmd_verify(7)? {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}

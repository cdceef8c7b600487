//! Run a scenario from TOML text through the library API and print its
//! checks, the same way `varq run` does.

use varq::scenario::{run_scenario, RunOptions};

const CONFIG: &str = r#"
regime = "vacuum"
name = "oscillator levels"

[potential]
kind = "harmonic"
k = 1.0

[grid]
q_min = -10.0
q_max = 10.0
n = 2001

[vacuum]
modes = 4
"#;

fn main() {
    let outcome = match run_scenario(CONFIG, &RunOptions::default()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    let body = &outcome.report.body;
    for (k, v) in &body.scalars {
        println!("{k:>16} = {v}");
    }
    for c in &body.checks {
        println!("{:>16}: {:.3e} <= {:.0e} {}", c.name, c.value, c.tolerance, if c.passed { "ok" } else { "FAILED" });
    }
    for s in outcome.series.iter().filter(|s| s.rows.len() <= 10) {
        print!("{}", s.to_csv());
    }
    println!("status: {}", body.status);
}

//! Driving the command-line front end from code: parse arguments into a
//! configuration, run it, and replay the embedded configuration.

use aniso::cli::{parse_config, run as run_config, RunConfig};
use aniso::Result;
use serde_json::Value;

/// Returns the report and whether replaying it reproduces the same bytes.
pub fn run(verbose: bool) -> Result<(String, bool)> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/calcite.json");
    let config = parse_config([
        "aniso", "decay", "--material", data, "--omega0", "2e15", "--dipole", "1e-29,0,1e-29", "--quad", "16x32",
    ])?;
    let first = run_config(&config)?;

    let report: Value = serde_json::from_str(&first.report).map_err(|e| aniso::Error::Config(e.to_string()))?;
    let embedded: RunConfig =
        serde_json::from_value(report["config"].clone()).map_err(|e| aniso::Error::Config(e.to_string()))?;
    let second = run_config(&embedded)?;
    let same = first.report == second.report;
    if verbose {
        print!("{}", first.report);
        println!("replay identical: {same}");
    }
    Ok((first.report, same))
}

fn main() -> Result<()> {
    run(true).map(|_| ())
}

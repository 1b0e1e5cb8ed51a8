//! Prints convergence histories for a registered case.
//!
//! `cargo run --release --example convergence -- internal-peak adaptive 20000 [homogeneous|exact] [pin]`

use wg_plate::adaptivity::{adapt_loop, AdaptConfig, RefineMode};
use wg_plate::assembly::AssemblyOptions;
use wg_plate::cases::{by_name, BoundaryData};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("internal-peak");
    let mode: RefineMode = args.get(2).map(String::as_str).unwrap_or("adaptive").parse()?;
    let max_dof = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let boundary_data = args.get(4).map(|s| s.parse::<BoundaryData>()).transpose()?;
    let pin_tangential = args.get(5).is_some_and(|s| s == "pin");
    let case = by_name(name, None)?;
    let cfg = AdaptConfig {
        theta: case.theta_default,
        mode,
        max_dof,
        boundary_data,
        assembly: AssemblyOptions { pin_tangential },
        ..AdaptConfig::default()
    };
    let out = adapt_loop(&case, &cfg)?;
    print!("{}", out.history.to_csv());
    Ok(())
}

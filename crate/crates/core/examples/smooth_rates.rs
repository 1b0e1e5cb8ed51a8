//! Uniform-refinement rates for the clamped polynomial `x^2(1-x)^2 y^2(1-y)^2`.

use std::sync::Arc;

use wg_plate::adaptivity::{adapt_loop, AdaptConfig, RefineMode};
use wg_plate::cases::{Factor, Jet, ManufacturedCase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let eps: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let k: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let bump: Factor = Arc::new(|t| {
        let x = Jet::var(t);
        let s = x.mul(Jet::constant(1.0).sub(x));
        s.mul(s)
    });
    let case = ManufacturedCase::from_separable("smooth", eps, eps, 0.3, bump.clone(), bump);
    let cfg = AdaptConfig {
        k,
        mode: RefineMode::Uniform,
        max_dof: 200_000,
        max_levels: 5,
        initial_n: 2,
        ..AdaptConfig::default()
    };
    print!("{}", adapt_loop(&case, &cfg)?.history.to_csv());
    Ok(())
}

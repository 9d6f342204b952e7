//! Finding the beamsplitter, LO and feed-forward sign conventions that make
//! the simulated gate reproduce the input-output relations.
use squeezegate::gate::{calibrate_on_grid, calibrate_signs, Conventions};

fn main() -> squeezegate::Result<()> {
    let found = calibrate_signs()?;
    println!("calibrated: {found:?}");
    println!("shipped constants match: {}", found == Conventions::SHIPPED);
    match calibrate_on_grid(&[0.0], 0.24494) {
        Ok(c) => println!("κ = 0 alone picked {c:?}"),
        Err(e) => println!("κ = 0 alone: {e}"),
    }
    Ok(())
}

//! Inverting/offset stages, electronic latency and the optical delay budget.
use std::f64::consts::PI;

use squeezegate::electronics::{
    apply_chain, estimate_delay_ns, phase_lag_degrees, DelayModel, SignalChainStage,
};

fn main() -> squeezegate::Result<()> {
    let period_ns = 1.0;
    let control: Vec<f64> = (0..4000)
        .map(|i| (2.0 * PI * 1e-3 * i as f64 * period_ns).sin())
        .collect();

    let amp = SignalChainStage::new(-1.0, 0.3, 10.0)?;
    let fix = amp.compensation()?;
    let out = apply_chain(&control, &[amp, fix], period_ns)?;
    let delay = estimate_delay_ns(&control, &out, period_ns, 50)?;
    println!("recovered latency {delay:.3} ns, phase lag at 1 MHz {:.2}°", phase_lag_degrees(delay, 1.0));

    let delays = DelayModel::from_path_length(13.0, 10.0)?;
    println!(
        "13 m optical path = {:.1} ns; slack over 10 ns electronics = {:.1} ns",
        delays.optical_delay_ns,
        delays.mismatch_ns()
    );
    Ok(())
}

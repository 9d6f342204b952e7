//! The three-angle time-series experiment with a 1 MHz sine control.
use squeezegate::config::RunConfig;
use squeezegate::experiment::{estimate_moments, run_experiment, LoAngle};

fn main() -> squeezegate::Result<()> {
    let cfg = RunConfig::default();
    let records = run_experiment(&cfg, cfg.seed)?;
    let moments = estimate_moments(&records)?;
    println!("config {} seed {}", records.config_hash, records.seed);
    println!("bin   t/us    kappa   <x>      <p>      Var x    Var p");
    let (x, p) = (moments.trace(LoAngle::X), moments.trace(LoAngle::P));
    for b in (0..moments.n_bins()).step_by(5).take(21) {
        println!(
            "{b:>3} {:>6.2} {:>+7.3} {:>+8.3} {:>+8.3} {:>7.4} {:>7.4}",
            moments.time_us[b],
            moments.kappa[b],
            x.bins[b].mean,
            p.bins[b].mean,
            x.bins[b].variance,
            p.bins[b].variance
        );
    }
    Ok(())
}

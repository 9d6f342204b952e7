//! The gate two ways: moment propagation of the input-output relations, and
//! explicit beamsplitter + homodyne + feed-forward with Monte Carlo shots.
use squeezegate::gate::{closed_form_output, GateParams, PreparedGate};
use squeezegate::gaussian::{db_to_variance, variance_to_db, GaussianState};
use squeezegate::rng::shot_rng;

fn main() -> squeezegate::Result<()> {
    let vs = db_to_variance(-3.1)?;
    let input = GaussianState::coherent(3.0, 0.0)?;
    for kappa in [0.0, 2.0] {
        let params = GateParams::new(kappa, vs)?;
        let theory = closed_form_output(&input, &params)?;
        let gate = PreparedGate::new(&input, &params)?;
        let channel = gate.channel_output()?;
        println!("κ = {kappa}");
        println!("  closed form mean {:.4?} cov {:.5?}", theory.mean().as_slice(), theory.cov().as_slice());
        println!("  simulated channel cov       {:.5?}", channel.cov().as_slice());
        println!("  per-shot conditional cov    {:.5?}", gate.conditional_covariance());
        println!(
            "  x-variance {:+.2} dB, p-variance {:+.2} dB",
            variance_to_db(theory.cov()[(0, 0)])?,
            variance_to_db(theory.cov()[(1, 1)])?
        );

        let shots = 100_000;
        let (mut sx, mut sp) = (0.0, 0.0);
        for i in 0..shots {
            let s = gate.sample(&mut shot_rng(11, 0, i));
            sx += s.mean[0];
            sp += s.mean[1];
        }
        println!(
            "  ensemble mean over {shots} shots ({:.4}, {:.4})",
            sx / shots as f64,
            sp / shots as f64
        );
    }
    Ok(())
}

//! Homodyne measurement of one half of an entangled pair, and how the
//! conditional states average back to the unconditional one.
use squeezegate::gaussian::{homodyne_measure, GaussianState, SymplecticTransform};
use squeezegate::rng::shot_rng;

fn main() -> squeezegate::Result<()> {
    let pair = GaussianState::squeezed_vacuum(0.05)?
        .tensor(&GaussianState::squeezed_vacuum(5.0)?)
        .apply(&SymplecticTransform::beamsplitter(0.5)?)?;
    println!("unconditional x-variance of mode 1: {:.4}", pair.cov()[(2, 2)]);

    let shots = 20_000;
    let mut means = Vec::with_capacity(shots);
    let mut conditional = None;
    for i in 0..shots {
        let mut rng = shot_rng(3, 0, i as u64);
        let (outcome, rest) = homodyne_measure(&pair, 0, 0.0, &mut rng)?;
        if i < 3 {
            println!("shot {i}: x0 = {:+.3} -> mode 1 mean x {:+.3}", outcome.value, rest.mean()[0]);
        }
        means.push(rest.mean()[0]);
        conditional.get_or_insert(rest.cov()[(0, 0)]);
    }
    let m = means.iter().sum::<f64>() / shots as f64;
    let spread = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (shots - 1) as f64;
    let cond = conditional.unwrap();
    println!("conditional x-variance {cond:.4} (same for every outcome)");
    println!(
        "conditional + spread of means = {:.4} (law of total variance)",
        cond + spread
    );
    Ok(())
}

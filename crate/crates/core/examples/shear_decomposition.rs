//! The shear `p -> p + κ x` written as rotation · tilted squeeze · rotation.
use squeezegate::gate::{decompose_shear, ideal_shear_map};

fn main() -> squeezegate::Result<()> {
    for kappa in [-2.0, -1.0, 0.5, 2.0] {
        let d = decompose_shear(kappa)?;
        let err = (d.recompose()?.matrix() - ideal_shear_map(kappa)?.matrix()).amax();
        let (lo, hi) = d.vacuum_eigen_variances();
        println!(
            "κ = {kappa:+.1}: λ = {:+.4}, factors ({:.4}, {:.4}), recomposition error {err:.1e}",
            d.lambda, d.squeeze_factors.0, d.squeeze_factors.1
        );
        println!(
            "          vacuum eigen-variances {lo:.4} / {hi:.4}, squeezed axis {:+.4} rad",
            d.squeezed_axis().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

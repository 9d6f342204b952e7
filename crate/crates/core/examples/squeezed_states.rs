//! Building Gaussian states and reading off squeezing in dB.
use squeezegate::gaussian::{db_to_variance, variance_to_db, GaussianState, SymplecticTransform};

fn main() -> squeezegate::Result<()> {
    let vs = db_to_variance(-3.1)?;
    let ancilla = GaussianState::squeezed_vacuum(vs)?;
    println!("ancilla x-variance {vs:.6} ({:.2} dB)", variance_to_db(vs)?);
    println!(
        "ancilla p-variance {:.6} ({:+.2} dB)",
        ancilla.cov()[(1, 1)],
        variance_to_db(ancilla.cov()[(1, 1)])?
    );

    // a shear on vacuum squeezes along a tilted axis
    let sheared = GaussianState::vacuum(1)?.apply(&SymplecticTransform::shear(2.0)?)?;
    for deg in [0.0f64, 45.0, 90.0, 135.0] {
        let v = sheared.quadrature_variance(0, deg.to_radians())?;
        println!("sheared vacuum at {deg:>5}°: {v:.4} ({:+.2} dB)", variance_to_db(v)?);
    }
    println!(
        "symplectic eigenvalues {:?} (pure: {})",
        sheared.symplectic_eigenvalues(),
        sheared.is_pure(1e-9)
    );

    // two-mode squeezing from two squeezers and a balanced beamsplitter
    let epr = GaussianState::squeezed_vacuum(0.1)?
        .tensor(&GaussianState::squeezed_vacuum(2.5)?)
        .apply(&SymplecticTransform::beamsplitter(0.5)?)?;
    println!("two-mode state, single-mode x-variance {:.3}", epr.mode(0)?.cov()[(0, 0)]);
    Ok(())
}

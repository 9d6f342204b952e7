//! Broken-line look-up tables for arctan κ and √(1 + κ²).
use squeezegate::electronics::{fit_pwl, max_error, Target};

fn main() -> squeezegate::Result<()> {
    let range = (-2.0, 2.0);
    for target in [Target::Arctan, Target::Sqrt1px2] {
        println!("{}", target.name());
        for n in [2, 4, 8, 16, 32, 64] {
            let fit = fit_pwl(target, n, range)?;
            let check = max_error(&fit.function, |x| target.eval(x), range, 10_000)?;
            println!(
                "  {n:>2} segments: max error {check:.3e} (uniform breakpoints {:.3e})",
                fit.uniform_max_error
            );
        }
    }
    let table = fit_pwl(Target::Arctan, 8, range)?.function.to_table();
    println!("arctan, 8 segments:\n{table}");
    Ok(())
}

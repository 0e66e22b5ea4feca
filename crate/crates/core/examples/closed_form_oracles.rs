//! Compares the closed-form terminal-price law against a Monte Carlo run of
//! the exact sampler, and prints the impact and variance weights.

use performative_mm::dynamics::{delta_xi, e_xi, NoiseSource, PathState, PriceProcess, Stepper};
use performative_mm::rng::NormalStream;
use performative_mm::MarketParams;

fn main() -> performative_mm::Result<()> {
    println!("{:>8} {:>12} {:>12}", "xi", "Delta(1)", "E(1)");
    for xi in [1e-3, 0.3, 1.0, 5.0, 20.0, 1e3] {
        println!(
            "{xi:>8} {:>12.6e} {:>12.6e}",
            delta_xi(xi, 1.0),
            e_xi(xi, 1.0)
        );
    }

    let (s0, q, xi, gamma) = (1.5, 3, 2.0, 0.5);
    let market = MarketParams::default();
    let process = PriceProcess::new(&market, xi, gamma)?.with_stepper(Stepper::Exact);
    let start = PathState {
        driver_inventory: q,
        ..PathState::initial(s0)
    };
    let law = process.transition_law(&start);

    let draws = 50_000u64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for path in 0..draws {
        let mut noise = NormalStream::new(1, path);
        let mut x = start;
        for _ in 0..process.steps {
            x = process.step_with(&x, noise.next_normal());
        }
        sum += x.mid;
        sum_sq += x.mid * x.mid;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    println!();
    println!("s(0) = {s0}, q = {q}, xi = {xi}, gamma = {gamma}");
    println!(
        "mean      closed form {:>9.5}   monte carlo {:>9.5} (se {:.5})",
        law.mean,
        mean,
        (var / n).sqrt()
    );
    println!(
        "variance  closed form {:>9.5}   monte carlo {:>9.5}",
        law.variance, var
    );
    Ok(())
}

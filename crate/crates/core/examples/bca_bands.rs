//! Bias-corrected and accelerated bootstrap intervals.
//!
//! Builds confidence bands for a mean from a handful of trial scores,
//! the way training curves summarize repeated runs, and shows how the
//! interval reacts to skewed data.
//!
//! Run with `cargo run --example bca_bands`.

use pizero::stats::{bca, bca_interval, mean, CurvePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

fn main() -> pizero::Result<()> {
    let scores = [2.1, -0.4, 3.7, 1.2, 0.8, 5.9, -1.3, 2.2, 0.0, 4.4];
    let full = bca(&scores, 0.95, 10_000, 2024)?;
    println!("mean {:.3}, 95% BCa interval ({:.3}, {:.3})", mean(&scores), full.low, full.high);
    println!("bias correction {:.4}, acceleration {:.4}", full.bias_correction, full.acceleration);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let skewed = Exp::new(1.0).expect("valid rate");
    let symmetric: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
    let right_tail: Vec<f64> = (0..30).map(|_| skewed.sample(&mut rng)).collect();
    for (name, xs) in [("normal", &symmetric), ("exponential", &right_tail)] {
        let m = mean(xs);
        let (lo, hi) = bca_interval(xs, 0.95, 5000, 7)?;
        println!("{name:<12} mean {m:+.3}  below {:.3}  above {:.3}", m - lo, hi - m);
    }

    // Five trials per generation, as in a training curve.
    let curve = [
        (0, vec![-4.9, -4.7, -4.8, -5.0, -4.6]),
        (50, vec![-4.1, -3.8, -4.4, -3.9, -4.2]),
        (100, vec![-3.2, -2.6, -3.9, -3.0, -3.4]),
    ];
    println!("generation,mean,ci_low,ci_high");
    for (generation, trials) in curve {
        let p = CurvePoint::from_trials(generation, trials, generation)?;
        println!("{},{:.3},{:.3},{:.3}", p.generation, p.mean, p.ci_low, p.ci_high);
    }
    Ok(())
}

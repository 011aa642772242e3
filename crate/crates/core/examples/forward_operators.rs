//! Every measurement model on one signal: output size, residual at the
//! truth, and a save/load round trip.

use std::sync::Arc;

use tunable_prior::forward::{build_blur, ForwardOperator};
use tunable_prior::tensor::RandomSource;

fn main() -> tunable_prior::Result<()> {
    let side = 8;
    let n = side * side;
    let mut rng = RandomSource::from_seed(3);
    let x = rng.normal_vec(n);
    let ops = [
        ("identity", ForwardOperator::identity(n)),
        ("dense gaussian", ForwardOperator::dense_gaussian(24, n, 1)?),
        ("inpaint", ForwardOperator::inpaint(n, 0.2, 2)?),
        ("phaseless", ForwardOperator::phaseless_gaussian(96, n, 4)?),
        ("blur 5x5", build_blur(side, 5, 1.5)?),
    ];
    let dir = std::env::temp_dir().join("tunable_prior_ops");
    for (name, op) in ops {
        let op = Arc::new(op);
        let m = op.measure(&x, 0.05, &mut rng)?;
        let at_truth = op.residual_sq(&x, &m.y)?;
        op.save(&dir)?;
        let back = ForwardOperator::load(&dir)?;
        let same = back.apply(&x)? == op.apply(&x)?;
        println!(
            "{name:<15} n={n} m={:<3} ‖y − A(x)‖² = {at_truth:.4} (≈ m·σ² = {:.4}), reload identical: {same}",
            op.output_len(),
            op.output_len() as f64 * 0.05 * 0.05
        );
    }
    Ok(())
}

//! Nested dropout on a linear autoencoder recovers principal directions in
//! order, so truncating the code is a graceful rank reduction.

use tunable_prior::harness::{geometric_spectrum, LowRankSource};
use tunable_prior::models::{ordered_linear_train, TrainConfig, TruncationLaw};
use tunable_prior::tensor::{symmetric_eigen, Matrix};

fn main() -> tunable_prior::Result<()> {
    let n = 8;
    let d = 4;
    let spectrum = geometric_spectrum(n, 4.0, 0.5);
    let source = LowRankSource::new(n, &spectrum, 5)?;
    let train = source.sample(4000, 0);
    let heldout = source.sample(500, 1);

    let law = TruncationLaw::new(d, 0.2)?;
    let cfg = TrainConfig {
        steps: 6000,
        step_size: 0.01,
        ..TrainConfig::default()
    };
    let (model, _) = ordered_linear_train(&train, d, &law, &cfg)?;

    let mut cov = Matrix::zeros(n, n);
    for x in &train {
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] += x[i] * x[j] / train.len() as f64;
            }
        }
    }
    let eig = symmetric_eigen(&cov)?;
    let w = model.decoder_matrix();
    for j in 0..d {
        let col = w.column(j);
        let cos = (col.dot(&eig.vectors.column(j)) / col.norm()).abs().min(1.0);
        println!("column {j}: norm {:.3}, angle to eigenvector {j}: {:.4} rad", col.norm(), cos.acos());
    }
    println!("held-out error by k: {:?}", model.error_profile(&heldout)?.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>());
    Ok(())
}

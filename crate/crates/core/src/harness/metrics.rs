use crate::error::{dim_check, Error, Result};
use crate::tensor::Vector;

/// Reported PSNR when the estimate equals the reference.
pub const PSNR_CAP_DB: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psnr {
    pub db: f64,
    /// True when the exact value was infinite and `db` holds the cap.
    pub capped: bool,
}

/// `10·log₁₀(peak²·len / ‖x − ref‖²)`
pub fn psnr(x: &Vector, reference: &Vector, peak: f64) -> Result<Psnr> {
    dim_check("signal length", reference.len(), x.len())?;
    Ok(psnr_from_mse(x.dist_sq(reference) / x.len() as f64, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> Psnr {
    if mse == 0.0 {
        return Psnr {
            db: PSNR_CAP_DB,
            capped: true,
        };
    }
    Psnr {
        db: 10.0 * (peak * peak / mse).log10(),
        capped: false,
    }
}

/// Per-coordinate mean squared error.
pub fn mse(x: &Vector, reference: &Vector) -> Result<f64> {
    dim_check("signal length", reference.len(), x.len())?;
    if x.is_empty() {
        return Err(Error::InvalidDimension("empty signal".into()));
    }
    Ok(x.dist_sq(reference) / x.len() as f64)
}

/// One row of experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub task: String,
    pub k: usize,
    pub seed: u64,
    pub trial: usize,
    pub mse: f64,
    pub psnr_db: f64,
    pub residual: f64,
    pub wall_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_db() {
        let x = Vector::filled(4, 0.1);
        let p = psnr(&x, &Vector::zeros(4), 1.0).unwrap();
        assert!((p.db - 20.0).abs() < 1e-12);
        assert!(!p.capped);
    }

    #[test]
    fn identical_inputs_are_capped() {
        let x: Vector = vec![0.3, 0.4].into();
        assert_eq!(
            psnr(&x, &x, 1.0).unwrap(),
            Psnr {
                db: 99.0,
                capped: true
            }
        );
    }

    #[test]
    fn doubling_error_energy() {
        let r = Vector::zeros(3);
        let a = psnr(&Vector::filled(3, 0.2), &r, 1.0).unwrap().db;
        let b = psnr(&Vector::filled(3, 0.2 * 2f64.sqrt()), &r, 1.0).unwrap().db;
        assert!((a - b - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!((a - b - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch() {
        assert!(psnr(&Vector::zeros(2), &Vector::zeros(3), 1.0).is_err());
    }
}

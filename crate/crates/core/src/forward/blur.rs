use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Odd-sized 2-D kernel applied by circular convolution on a `side × side`
/// grid flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularBlur {
    side: usize,
    ksize: usize,
    /// `ksize × ksize`, row-major.
    taps: Vec<f64>,
}

impl CircularBlur {
    pub fn gaussian(side: usize, ksize: usize, std: f64) -> Result<Self> {
        if ksize.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("kernel size must be odd, got {ksize}")));
        }
        if ksize > side {
            return Err(Error::InvalidArgument(format!(
                "kernel size {ksize} exceeds grid side {side}"
            )));
        }
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::InvalidArgument(format!("blur std must be > 0, got {std}")));
        }
        let c = (ksize / 2) as f64;
        let mut taps: Vec<f64> = (0..ksize * ksize)
            .map(|idx| {
                let (a, b) = ((idx / ksize) as f64 - c, (idx % ksize) as f64 - c);
                (-(a * a + b * b) / (2.0 * std * std)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= total);
        Ok(Self { side, ksize, taps })
    }

    pub fn from_taps(side: usize, ksize: usize, taps: Vec<f64>) -> Result<Self> {
        if ksize.is_multiple_of(2) || ksize > side || taps.len() != ksize * ksize {
            return Err(Error::InvalidArgument(format!(
                "kernel of {} taps does not fit ksize {ksize} on side {side}",
                taps.len()
            )));
        }
        Ok(Self { side, ksize, taps })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn ksize(&self) -> usize {
        self.ksize
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn signal_len(&self) -> usize {
        self.side * self.side
    }

    /// `out[i,j] = Σ_{a,b} k[a,b] · x[i − (a − c), j − (b − c)]` with wrap-around.
    pub fn convolve(&self, x: &Vector) -> Vector {
        self.filter(x, -1)
    }

    /// Adjoint of [`convolve`](Self::convolve) (circular correlation).
    pub fn correlate(&self, x: &Vector) -> Vector {
        self.filter(x, 1)
    }

    fn filter(&self, x: &Vector, dir: isize) -> Vector {
        let n = self.side as isize;
        let c = (self.ksize / 2) as isize;
        let mut out = vec![0.0; self.signal_len()];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..self.ksize as isize {
                    let r = (i + dir * (a - c)).rem_euclid(n);
                    for b in 0..self.ksize as isize {
                        let s = (j + dir * (b - c)).rem_euclid(n);
                        acc += self.taps[(a as usize) * self.ksize + b as usize] * x[(r * n + s) as usize];
                    }
                }
                out[(i * n + j) as usize] = acc;
            }
        }
        out.into()
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{RandomSource, Vector};
use crate::theory::GeneratorFamily;

/// Samples `x = U·diag(s)·Vᵀ·z`, `z ~ N(0, I)`, with `(U, V)` fixed by `seed`.
pub fn synth_lowrank_dataset(n: usize, spectrum: &Vector, count: usize, seed: u64) -> Result<Vec<Vector>> {
    Ok(LowRankSource::new(n, spectrum, seed)?.sample(count, 0))
}

/// Seeded linear generator together with its sample streams.
#[derive(Debug, Clone)]
pub struct LowRankSource {
    family: GeneratorFamily,
    seed: u64,
}

impl LowRankSource {
    pub fn new(n: usize, spectrum: &Vector, seed: u64) -> Result<Self> {
        if spectrum.len() != n {
            return Err(Error::InvalidDimension(format!(
                "spectrum has {} values for dimension {n}",
                spectrum.len()
            )));
        }
        let mut rng = RandomSource::new(seed, 0xDA7A);
        Ok(Self {
            family: GeneratorFamily::random(&mut rng, spectrum)?,
            seed,
        })
    }

    pub fn family(&self) -> &GeneratorFamily {
        &self.family
    }

    /// `count` samples from stream `split` (e.g. 0 for training, 1 for
    /// held-out data).
    pub fn sample(&self, count: usize, split: u64) -> Vec<Vector> {
        let g = self.family.generator();
        let mut rng = RandomSource::new(self.seed, 0xDA7B).derive(split);
        (0..count)
            .map(|_| {
                let z = rng.normal_vec(self.family.dim());
                g.matvec(&z).expect("square generator")
            })
            .collect()
    }
}

/// `scale·ratio^i` for `i = 1..=n`.
pub fn geometric_spectrum(n: usize, scale: f64, ratio: f64) -> Vector {
    (1..=n).map(|i| scale * ratio.powi(i as i32)).collect()
}

/// Where training and held-out signals come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub n: usize,
    /// Explicit spectrum; when absent `scale·ratio^i` is used.
    pub spectrum: Option<Vec<f64>>,
    pub scale: f64,
    pub ratio: f64,
    pub count: usize,
    pub heldout: usize,
    pub seed: u64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            n: 32,
            spectrum: None,
            scale: 2.0,
            ratio: 0.8,
            count: 2000,
            heldout: 200,
            seed: 0,
        }
    }
}

impl DataSpec {
    pub fn spectrum(&self) -> Vector {
        match &self.spectrum {
            Some(s) => s.clone().into(),
            None => geometric_spectrum(self.n, self.scale, self.ratio),
        }
    }

    pub fn source(&self) -> Result<LowRankSource> {
        LowRankSource::new(self.n, &self.spectrum(), self.seed)
    }

    pub fn train(&self) -> Result<Vec<Vector>> {
        Ok(self.source()?.sample(self.count, 0))
    }

    pub fn heldout(&self) -> Result<Vec<Vector>> {
        Ok(self.source()?.sample(self.heldout, 1))
    }
}

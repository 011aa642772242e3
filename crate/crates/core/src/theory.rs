//! Exact risk of truncated linear generators for Gaussian denoising.
//!
//! A generator `G = U·Σ·Vᵀ` with singular values `s₁ ≥ … ≥ s_n > 0` is
//! truncated to `G_k = U·Σ_k·Vᵀ`. For `y = x₀ + η`, `x₀ = G·z₀`, the
//! ridge-regularised latent fit at complexity `k` has closed-form risk
//!
//! ```text
//! E(k) = Σ_{i≤k} s_i²(s_i²σ² + γ²)/(s_i² + γ)²  +  Σ_{j>k} s_j²
//! ```
//!
//! and, when `γ ≤ σ²/2`, the risk is minimised by the largest `k` whose
//! singular value clears `√(σ² − 2γ)`.

use crate::error::{dim_check, index_check, Error, Result};
use crate::tensor::{random_orthogonal, svd, Matrix, McEstimate, RandomSource, RunningStats, Vector};

/// SVD-backed family `{G_k}` of truncations of one invertible generator.
#[derive(Debug, Clone)]
pub struct GeneratorFamily {
    u: Matrix,
    s: Vector,
    v: Matrix,
}

impl GeneratorFamily {
    /// Factorises `g`; fails when `g` is not square or numerically singular.
    pub fn from_generator(g: &Matrix) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::InvalidDimension(format!(
                "generator must be square, got {}x{}",
                g.rows(),
                g.cols()
            )));
        }
        let d = svd(g)?;
        let largest = d.s[0];
        let smallest = d.s[d.s.len() - 1];
        if !(smallest > 1e-12 * largest) {
            return Err(Error::SingularGenerator { smallest, largest });
        }
        Ok(Self {
            u: d.u,
            s: d.s,
            v: d.v,
        })
    }

    /// Assembles a family from explicit factors.
    pub fn from_parts(u: Matrix, s: Vector, v: Matrix) -> Result<Self> {
        let n = s.len();
        if n == 0 {
            return Err(Error::InvalidDimension("empty spectrum".into()));
        }
        for m in [&u, &v] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::InvalidDimension(format!(
                    "factor is {}x{}, spectrum has {n} values",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.orthonormality_defect() > 1e-10 {
                return Err(Error::InvalidValue("factor is not orthogonal".into()));
            }
        }
        validate_spectrum(&s)?;
        Ok(Self { u, s, v })
    }

    /// Family with the given spectrum and random orthogonal factors.
    pub fn random(rng: &mut RandomSource, spectrum: &Vector) -> Result<Self> {
        validate_spectrum(spectrum)?;
        let n = spectrum.len();
        let u = random_orthogonal(rng, n);
        let v = random_orthogonal(rng, n);
        Ok(Self {
            u,
            s: spectrum.clone(),
            v,
        })
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn spectrum(&self) -> &Vector {
        &self.s
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    /// `G_k = U·diag(s₁,…,s_k,0,…,0)·Vᵀ`.
    pub fn generator_at(&self, k: usize) -> Result<Matrix> {
        index_check(k, self.dim())?;
        let mut sk = self.s.clone();
        for i in k..sk.len() {
            sk[i] = 0.0;
        }
        Ok(Matrix::from_svd(&self.u, &sk, &self.v))
    }

    pub fn generator(&self) -> Matrix {
        Matrix::from_svd(&self.u, &self.s, &self.v)
    }
}

/// Positive and non-increasing.
pub(crate) fn validate_spectrum(s: &Vector) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidDimension("empty spectrum".into()));
    }
    if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidValue("spectrum must be strictly positive and finite".into()));
    }
    if s.as_slice().windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidValue("spectrum must be non-increasing".into()));
    }
    Ok(())
}

/// `y = x₀ + η` with `η ~ N(0, σ²I)`, fitted with prior weight `γ`.
#[derive(Debug, Clone)]
pub struct DenoiseProblem {
    pub family: GeneratorFamily,
    pub sigma: f64,
    pub gamma: f64,
}

impl DenoiseProblem {
    pub fn new(family: GeneratorFamily, sigma: f64, gamma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidValue(format!("sigma must be >= 0, got {sigma}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidValue(format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(Self { family, sigma, gamma })
    }

    /// Maximum-likelihood preset, `γ = 0`.
    pub fn mle(family: GeneratorFamily, sigma: f64) -> Result<Self> {
        Self::new(family, sigma, 0.0)
    }

    /// Exact-posterior preset, `γ = σ²`.
    pub fn map(family: GeneratorFamily, sigma: f64) -> Result<Self> {
        Self::new(family, sigma, sigma * sigma)
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }
}

/// Closed-form expected squared error of the rank-`k` estimator.
pub fn closed_form_mse(p: &DenoiseProblem, k: usize) -> Result<f64> {
    index_check(k, p.dim())?;
    let var = p.sigma * p.sigma;
    let g = p.gamma;
    let kept: f64 = p.family.s.as_slice()[..k]
        .iter()
        .map(|&s| {
            let s2 = s * s;
            s2 * (s2 * var + g * g) / ((s2 + g) * (s2 + g))
        })
        .sum();
    let dropped: f64 = p.family.s.as_slice()[k..].iter().map(|s| s * s).sum();
    Ok(kept + dropped)
}

/// How [`optimal_k`] arrived at its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalRule {
    /// Threshold rule `max{k : s_k² > σ² − 2γ}`.
    Threshold,
    /// Exhaustive argmin over `closed_form_mse`, used when `γ > σ²/2` or
    /// when no singular value clears the threshold.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalK {
    pub k: usize,
    pub rule: OptimalRule,
}

/// Risk-minimising truncation level.
///
/// Adding mode `k` changes the risk by `s_k²(σ² − s_k² − 2γ)/(s_k² + γ)²`, so
/// mode `k` helps exactly when `s_k² > σ² − 2γ`. Strict inequality makes an
/// exact tie go to the smaller `k`.
pub fn optimal_k(p: &DenoiseProblem) -> OptimalK {
    let var = p.sigma * p.sigma;
    if p.gamma <= var / 2.0 {
        let threshold = var - 2.0 * p.gamma;
        let count = p.family.s.iter().take_while(|&&s| s * s > threshold).count();
        if count > 0 {
            return OptimalK {
                k: count,
                rule: OptimalRule::Threshold,
            };
        }
    }
    OptimalK {
        k: exhaustive_argmin(p),
        rule: OptimalRule::Exhaustive,
    }
}

/// `argmin_k closed_form_mse(p, k)` with smallest-k tie-breaking.
pub fn exhaustive_argmin(p: &DenoiseProblem) -> usize {
    let mut best = (1, f64::INFINITY);
    for k in 1..=p.dim() {
        let e = closed_form_mse(p, k).expect("k in range");
        if e < best.1 {
            best = (k, e);
        }
    }
    best.0
}

/// Latent fit and the signal it decodes to.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentEstimate {
    /// Latent coordinates in the `V` basis, length `k`.
    pub z: Vector,
    /// `x̂ = Σ_{i≤k} s_i·ẑ_i·u_i`.
    pub x: Vector,
}

/// Closed-form minimiser of `½‖y − G_k·V·pad(z)‖² + (γ/2)‖z‖²` over `z ∈ R^k`.
///
/// In rotated coordinates `w = Uᵀy` the problem is diagonal and
/// `ẑ_i = s_i·w_i/(s_i² + γ)`.
pub fn linear_map_estimate(p: &DenoiseProblem, k: usize, y: &Vector) -> Result<LatentEstimate> {
    let n = p.dim();
    index_check(k, n)?;
    dim_check("measurement length", n, y.len())?;
    let w = p.family.u.mul_t_vec(y);
    let z: Vector = (0..k)
        .map(|i| {
            let s = p.family.s[i];
            s * w[i] / (s * s + p.gamma)
        })
        .collect();
    Ok(LatentEstimate {
        x: decode_rotated(&p.family, &z),
        z,
    })
}

/// `Σ_{i<len(z)} s_i·z_i·u_i`
pub fn decode_rotated(f: &GeneratorFamily, z: &Vector) -> Vector {
    let n = f.dim();
    let mut x = vec![0.0; n];
    for (i, &zi) in z.iter().enumerate() {
        let c = f.s[i] * zi;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += c * f.u[(r, i)];
        }
    }
    x.into()
}

/// Value of the latent objective minimised by [`linear_map_estimate`].
pub fn latent_objective(p: &DenoiseProblem, y: &Vector, z: &Vector) -> Result<f64> {
    index_check(z.len(), p.dim())?;
    dim_check("measurement length", p.dim(), y.len())?;
    let x = decode_rotated(&p.family, z);
    Ok(0.5 * y.dist_sq(&x) + 0.5 * p.gamma * z.norm_sq())
}

/// Monte-Carlo risk: `z₀ ~ N(0,I)`, `x₀ = G·z₀`, `y = x₀ + η`, error `‖x̂ − x₀‖²`.
pub fn mc_mse_oracle(
    p: &DenoiseProblem,
    k: usize,
    rng: &mut RandomSource,
    trials: usize,
) -> Result<McEstimate> {
    index_check(k, p.dim())?;
    if trials < 2 {
        return Err(Error::InvalidArgument("mc_mse_oracle needs trials >= 2".into()));
    }
    let n = p.dim();
    let g = p.family.generator();
    let mut stats = RunningStats::default();
    for _ in 0..trials {
        let z0 = rng.normal_vec(n);
        let x0 = g.mul_vec(&z0);
        let mut y = x0.clone();
        for i in 0..n {
            y[i] += p.sigma * rng.normal();
        }
        let est = linear_map_estimate(p, k, &y)?;
        stats.push(est.x.dist_sq(&x0));
    }
    Ok(stats.estimate())
}

/// One row of the risk table printed by the `theory` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub k: usize,
    pub closed_form: f64,
    pub mc: McEstimate,
    pub optimal: bool,
}

/// Closed form and Monte-Carlo risk for every `k`, each with its own stream.
pub fn theory_table(p: &DenoiseProblem, trials: usize, seed: u64) -> Result<(Vec<TheoryRow>, OptimalK)> {
    let opt = optimal_k(p);
    let root = RandomSource::new(seed, 0x7E0);
    let rows = (1..=p.dim())
        .map(|k| {
            let mut rng = root.derive(k as u64);
            Ok(TheoryRow {
                k,
                closed_form: closed_form_mse(p, k)?,
                mc: mc_mse_oracle(p, k, &mut rng, trials)?,
                optimal: k == opt.k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, opt))
}

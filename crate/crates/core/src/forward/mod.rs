//! Measurement models `y = A(x) + η`.

mod blur;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use blur::CircularBlur;

use crate::error::{dim_check, Error, Result};
use crate::tensor::{gaussian_matrix, Matrix, RandomSource, Tensor, Vector};

/// Default keep probability for inpainting masks (roughly 80% of pixels missing).
pub const DEFAULT_KEEP_PROB: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKindTag {
    Identity,
    DenseGaussian,
    InpaintMask,
    PhaselessGaussian,
    CircularBlur,
    CodedPhaseless,
}

/// Kind-specific construction parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ksize: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

/// JSON description from which an operator is rebuilt bit-for-bit.
///
/// `n` is the signal length (for blur kinds, `side²`); `m` is the output
/// length. For inpainting, `m` is determined by the sampled mask and is
/// ignored when building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDescriptor {
    pub kind: OperatorKindTag,
    #[serde(default)]
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub parameters: OperatorParameters,
}

impl OperatorDescriptor {
    pub fn identity(n: usize) -> Self {
        Self {
            kind: OperatorKindTag::Identity,
            m: n,
            n,
            seed: 0,
            parameters: OperatorParameters::default(),
        }
    }

    pub fn build(&self) -> Result<ForwardOperator> {
        let mut rng = RandomSource::new(self.seed, 0xA11CE);
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidDimension("operator input length must be >= 1".into()));
        }
        let kind = match self.kind {
            OperatorKindTag::Identity => OperatorKind::Identity,
            OperatorKindTag::DenseGaussian | OperatorKindTag::PhaselessGaussian => {
                if self.m == 0 {
                    return Err(Error::InvalidDimension("measurement count m must be >= 1".into()));
                }
                let a = gaussian_matrix(&mut rng, self.m, n, 1.0 / (self.m as f64).sqrt());
                if self.kind == OperatorKindTag::DenseGaussian {
                    OperatorKind::DenseGaussian(a)
                } else {
                    OperatorKind::PhaselessGaussian(a)
                }
            }
            OperatorKindTag::InpaintMask => {
                let p = self.parameters.keep_prob.unwrap_or(DEFAULT_KEEP_PROB);
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!("keep_prob {p} outside [0, 1]")));
                }
                let mask: Vec<bool> = (0..n).map(|_| rng.bernoulli(p)).collect();
                OperatorKind::InpaintMask(InpaintMask::from_mask(mask))
            }
            OperatorKindTag::CircularBlur | OperatorKindTag::CodedPhaseless => {
                let side = grid_side(n)?;
                let blur = CircularBlur::gaussian(
                    side,
                    self.parameters.ksize.unwrap_or(5),
                    self.parameters.std.unwrap_or(3.0),
                )?;
                if self.kind == OperatorKindTag::CircularBlur {
                    OperatorKind::CircularBlur(blur)
                } else {
                    let m = if self.m == 0 { n } else { self.m };
                    if m > n {
                        return Err(Error::InvalidDimension(format!("subsample m={m} exceeds n={n}")));
                    }
                    let signs: Vector = (0..n)
                        .map(|_| if rng.bernoulli(0.5) { 1.0 } else { -1.0 })
                        .collect();
                    OperatorKind::CodedPhaseless { signs, blur, m }
                }
            }
        };
        Ok(ForwardOperator::assemble(kind, n, self.clone()))
    }
}

fn grid_side(n: usize) -> Result<usize> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(Error::InvalidDimension(format!("blur input length {n} is not a square")));
    }
    Ok(side)
}

/// Kept coordinates of an inpainting mask, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct InpaintMask {
    n: usize,
    kept: Vec<usize>,
}

impl InpaintMask {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self {
            n: mask.len(),
            kept: mask.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect(),
        }
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    /// `x ↦ A·x`, entries i.i.d. N(0, 1/m).
    DenseGaussian(Matrix),
    InpaintMask(InpaintMask),
    /// `x ↦ |A·x|`, same construction as the dense kind.
    PhaselessGaussian(Matrix),
    CircularBlur(CircularBlur),
    /// `x ↦ |first_m(blur(signs ⊙ x))|`: Rademacher flip, circular blur,
    /// subsampling to the first `m` coordinates, then magnitudes.
    CodedPhaseless {
        signs: Vector,
        blur: CircularBlur,
        m: usize,
    },
}

/// Forward operator together with the descriptor that rebuilds it.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOperator {
    kind: OperatorKind,
    m: usize,
    n: usize,
    descriptor: OperatorDescriptor,
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl ForwardOperator {
    fn assemble(kind: OperatorKind, n: usize, mut descriptor: OperatorDescriptor) -> Self {
        let m = match &kind {
            OperatorKind::Identity | OperatorKind::CircularBlur(_) => n,
            OperatorKind::DenseGaussian(a) | OperatorKind::PhaselessGaussian(a) => a.rows(),
            OperatorKind::InpaintMask(mask) => mask.kept.len(),
            OperatorKind::CodedPhaseless { m, .. } => *m,
        };
        descriptor.m = m;
        descriptor.n = n;
        Self {
            kind,
            m,
            n,
            descriptor,
        }
    }

    pub fn identity(n: usize) -> Self {
        OperatorDescriptor::identity(n).build().expect("identity operator")
    }

    pub fn dense_gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        OperatorDescriptor {
            kind: OperatorKindTag::DenseGaussian,
            m,
            n,
            seed,
            parameters: OperatorParameters::default(),
        }
        .build()
    }

    pub fn phaseless_gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        OperatorDescriptor {
            kind: OperatorKindTag::PhaselessGaussian,
            m,
            n,
            seed,
            parameters: OperatorParameters::default(),
        }
        .build()
    }

    pub fn inpaint(n: usize, keep_prob: f64, seed: u64) -> Result<Self> {
        OperatorDescriptor {
            kind: OperatorKindTag::InpaintMask,
            m: 0,
            n,
            seed,
            parameters: OperatorParameters {
                keep_prob: Some(keep_prob),
                ..Default::default()
            },
        }
        .build()
    }

    /// Inpainting with an explicit keep-mask.
    pub fn inpaint_with_mask(mask: Vec<bool>) -> Self {
        let n = mask.len();
        let descriptor = OperatorDescriptor {
            kind: OperatorKindTag::InpaintMask,
            m: 0,
            n,
            seed: 0,
            parameters: OperatorParameters::default(),
        };
        Self::assemble(OperatorKind::InpaintMask(InpaintMask::from_mask(mask)), n, descriptor)
    }

    /// Row-major flattening of a `side × side` grid.
    pub fn circular_blur(side: usize, ksize: usize, std: f64) -> Result<Self> {
        let blur = CircularBlur::gaussian(side, ksize, std)?;
        let descriptor = OperatorDescriptor {
            kind: OperatorKindTag::CircularBlur,
            m: side * side,
            n: side * side,
            seed: 0,
            parameters: OperatorParameters {
                ksize: Some(ksize),
                std: Some(std),
                ..Default::default()
            },
        };
        Ok(Self::assemble(OperatorKind::CircularBlur(blur), side * side, descriptor))
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn descriptor(&self) -> &OperatorDescriptor {
        &self.descriptor
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn is_linear(&self) -> bool {
        !matches!(
            self.kind,
            OperatorKind::PhaselessGaussian(_) | OperatorKind::CodedPhaseless { .. }
        )
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        dim_check("operator input length", self.n, x.len())?;
        Ok(match &self.kind {
            OperatorKind::Identity => x.clone(),
            OperatorKind::DenseGaussian(a) => a.mul_vec(x),
            OperatorKind::PhaselessGaussian(a) => a.mul_vec(x).map(f64::abs),
            OperatorKind::InpaintMask(mask) => mask.kept.iter().map(|&i| x[i]).collect(),
            OperatorKind::CircularBlur(b) => b.convolve(x),
            OperatorKind::CodedPhaseless { .. } => self.coded_pre_magnitude(x).map(f64::abs),
        })
    }

    fn coded_pre_magnitude(&self, x: &Vector) -> Vector {
        match &self.kind {
            OperatorKind::CodedPhaseless { signs, blur, m } => blur.convolve(&x.hadamard(signs)).head(*m),
            _ => unreachable!(),
        }
    }

    /// Adjoint of the linear part: `Aᵀ` for the dense kinds, scatter for
    /// inpainting, correlation for blur.
    fn linear_adjoint(&self, v: &Vector) -> Vector {
        match &self.kind {
            OperatorKind::Identity => v.clone(),
            OperatorKind::DenseGaussian(a) | OperatorKind::PhaselessGaussian(a) => a.mul_t_vec(v),
            OperatorKind::InpaintMask(mask) => {
                let mut out = Vector::zeros(mask.n);
                for (j, &i) in mask.kept.iter().enumerate() {
                    out[i] = v[j];
                }
                out
            }
            OperatorKind::CircularBlur(b) => b.correlate(v),
            OperatorKind::CodedPhaseless { signs, blur, .. } => {
                blur.correlate(&v.padded(self.n)).hadamard(signs)
            }
        }
    }

    /// `∇_x ‖y − A(x)‖²`. For magnitude kinds this is the subgradient
    /// `2·Jᵀ((|u| − y) ⊙ sign(u))` with `u` the pre-magnitude output and
    /// `sign(0) = 0`.
    pub fn residual_gradient(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        dim_check("operator input length", self.n, x.len())?;
        dim_check("measurement length", self.m, y.len())?;
        let weighted = match &self.kind {
            OperatorKind::PhaselessGaussian(a) => {
                let u = a.mul_vec(x);
                u.zip_with(y, |ui, yi| 2.0 * (ui.abs() - yi) * sign0(ui))
            }
            OperatorKind::CodedPhaseless { .. } => {
                let u = self.coded_pre_magnitude(x);
                u.zip_with(y, |ui, yi| 2.0 * (ui.abs() - yi) * sign0(ui))
            }
            _ => {
                let ax = self.apply(x)?;
                ax.zip_with(y, |a, b| 2.0 * (a - b))
            }
        };
        Ok(self.linear_adjoint(&weighted))
    }

    /// `‖y − A(x)‖²`
    pub fn residual_sq(&self, x: &Vector, y: &Vector) -> Result<f64> {
        dim_check("measurement length", self.m, y.len())?;
        Ok(self.apply(x)?.dist_sq(y))
    }

    /// Adds N(0, σ²) noise to `A(x)`.
    pub fn measure(self: &Arc<Self>, x: &Vector, sigma: f64, rng: &mut RandomSource) -> Result<Measurement> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidValue(format!("sigma must be >= 0, got {sigma}")));
        }
        let mut y = self.apply(x)?;
        for v in y.as_mut_slice() {
            *v += sigma * rng.normal();
        }
        Ok(Measurement {
            y,
            sigma,
            operator: Arc::clone(self),
        })
    }

    /// Writes `descriptor.json` and, for kinds carrying data, `payload.tnsr`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("descriptor.json"), serde_json::to_string_pretty(&self.descriptor)?)?;
        let payload: Option<Tensor> = match &self.kind {
            OperatorKind::Identity => None,
            OperatorKind::DenseGaussian(a) | OperatorKind::PhaselessGaussian(a) => Some(a.into()),
            OperatorKind::InpaintMask(mask) => {
                let mut bits = vec![0.0; mask.n];
                for &i in &mask.kept {
                    bits[i] = 1.0;
                }
                Some(Tensor::new(vec![mask.n as u32], bits)?)
            }
            OperatorKind::CircularBlur(b) => Some(Tensor::new(
                vec![b.ksize() as u32, b.ksize() as u32],
                b.taps().to_vec(),
            )?),
            OperatorKind::CodedPhaseless { signs, blur, .. } => {
                let mut data = signs.as_slice().to_vec();
                data.extend_from_slice(blur.taps());
                Some(Tensor::new(vec![data.len() as u32], data)?)
            }
        };
        if let Some(t) = payload {
            t.write(&dir.join("payload.tnsr"))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let descriptor: OperatorDescriptor =
            serde_json::from_str(&fs::read_to_string(dir.join("descriptor.json"))?)?;
        let payload = || Tensor::read(&dir.join("payload.tnsr"));
        let n = descriptor.n;
        let kind = match descriptor.kind {
            OperatorKindTag::Identity => OperatorKind::Identity,
            OperatorKindTag::DenseGaussian => OperatorKind::DenseGaussian(payload()?.into_matrix()?),
            OperatorKindTag::PhaselessGaussian => {
                OperatorKind::PhaselessGaussian(payload()?.into_matrix()?)
            }
            OperatorKindTag::InpaintMask => {
                let bits = payload()?.into_vector()?;
                OperatorKind::InpaintMask(InpaintMask::from_mask(bits.iter().map(|&b| b != 0.0).collect()))
            }
            OperatorKindTag::CircularBlur => {
                let t = payload()?;
                let k = t.dims[0] as usize;
                OperatorKind::CircularBlur(CircularBlur::from_taps(grid_side(n)?, k, t.data)?)
            }
            OperatorKindTag::CodedPhaseless => {
                let data = payload()?.into_vector()?.into_vec();
                if data.len() < n {
                    return Err(Error::Format("coded payload shorter than signal".into()));
                }
                let taps = data[n..].to_vec();
                let k = (taps.len() as f64).sqrt().round() as usize;
                OperatorKind::CodedPhaseless {
                    signs: data[..n].to_vec().into(),
                    blur: CircularBlur::from_taps(grid_side(n)?, k, taps)?,
                    m: descriptor.m,
                }
            }
        };
        let op = Self::assemble(kind, n, descriptor.clone());
        if op.m != descriptor.m {
            return Err(Error::Format(format!(
                "descriptor says m={}, payload gives m={}",
                descriptor.m, op.m
            )));
        }
        Ok(op)
    }
}

/// Noisy measurement of a signal through a forward operator.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub y: Vector,
    pub sigma: f64,
    pub operator: Arc<ForwardOperator>,
}

impl Measurement {
    /// Wraps pre-computed observations.
    pub fn new(operator: Arc<ForwardOperator>, y: Vector, sigma: f64) -> Result<Self> {
        dim_check("measurement length", operator.output_len(), y.len())?;
        if !y.is_finite() {
            return Err(Error::InvalidValue("measurement has non-finite entries".into()));
        }
        Ok(Self { y, sigma, operator })
    }
}

/// Builds the blur operator on an `n × n` grid.
pub fn build_blur(n: usize, ksize: usize, std: f64) -> Result<ForwardOperator> {
    ForwardOperator::circular_blur(n, ksize, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(op: &ForwardOperator, x: &Vector, y: &Vector) -> Vector {
        let h = 1e-5;
        (0..x.len())
            .map(|i| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                (op.residual_sq(&xp, y).unwrap() - op.residual_sq(&xm, y).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_close(op: &ForwardOperator, seed: u64) {
        let mut rng = RandomSource::from_seed(seed);
        let x = rng.normal_vec(op.input_len());
        let y = rng.normal_vec(op.output_len()).map(f64::abs);
        let g = op.residual_gradient(&x, &y).unwrap();
        let f = fd_gradient(op, &x, &y);
        for i in 0..g.len() {
            let tol = 1e-6 * g[i].abs().max(f[i].abs()).max(1.0);
            assert!((g[i] - f[i]).abs() < tol, "coord {i}: {} vs {}", g[i], f[i]);
        }
    }

    #[test]
    fn identity_apply() {
        let op = ForwardOperator::identity(3);
        let x: Vector = vec![1.0, 2.0, 3.0].into();
        assert_eq!(op.apply(&x).unwrap(), x);
        assert!(op.apply(&Vector::zeros(2)).is_err());
    }

    #[test]
    fn phaseless_sign_invariance() {
        let op = ForwardOperator::phaseless_gaussian(10, 6, 1).unwrap();
        let mut rng = RandomSource::from_seed(2);
        let x = rng.normal_vec(6);
        assert_eq!(op.apply(&x).unwrap(), op.apply(&x.scale(-1.0)).unwrap());
    }

    #[test]
    fn inpaint_gather() {
        let op = ForwardOperator::inpaint_with_mask(vec![true, false, true]);
        assert_eq!(op.output_len(), 2);
        let y = op.apply(&vec![5.0, 6.0, 7.0].into()).unwrap();
        assert_eq!(y.as_slice(), &[5.0, 7.0]);
    }

    #[test]
    fn inpaint_mask_density() {
        let op = ForwardOperator::inpaint(10_000, 0.2, 4).unwrap();
        let frac = op.output_len() as f64 / 10_000.0;
        assert!((frac - 0.2).abs() < 0.02, "kept fraction {frac}");
    }

    #[test]
    fn noiseless_measure_is_exact_and_seeded_measure_repeats() {
        let op = Arc::new(ForwardOperator::dense_gaussian(4, 6, 3).unwrap());
        let x = RandomSource::from_seed(1).normal_vec(6);
        let m = op.measure(&x, 0.0, &mut RandomSource::from_seed(9)).unwrap();
        assert_eq!(m.y, op.apply(&x).unwrap());
        let a = op.measure(&x, 0.5, &mut RandomSource::from_seed(9)).unwrap();
        let b = op.measure(&x, 0.5, &mut RandomSource::from_seed(9)).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn noise_energy_concentrates() {
        let n = 100_000;
        let op = Arc::new(ForwardOperator::identity(n));
        let m = op.measure(&Vector::zeros(n), 1.0, &mut RandomSource::from_seed(5)).unwrap();
        let e = m.y.norm_sq() / n as f64;
        assert!((e - 1.0).abs() < 0.05, "{e}");
    }

    #[test]
    fn identity_gradient_vanishes_at_data() {
        let op = ForwardOperator::identity(4);
        let y: Vector = vec![1.0, -2.0, 0.5, 3.0].into();
        assert_eq!(op.residual_gradient(&y, &y).unwrap(), Vector::zeros(4));
    }

    #[test]
    fn gradients_match_finite_differences() {
        assert_grad_close(&ForwardOperator::dense_gaussian(5, 7, 11).unwrap(), 1);
        assert_grad_close(&ForwardOperator::phaseless_gaussian(9, 4, 12).unwrap(), 2);
        assert_grad_close(&ForwardOperator::inpaint(12, 0.5, 13).unwrap(), 3);
        assert_grad_close(&ForwardOperator::circular_blur(5, 3, 1.2).unwrap(), 4);
        let coded = OperatorDescriptor {
            kind: OperatorKindTag::CodedPhaseless,
            m: 20,
            n: 36,
            seed: 14,
            parameters: OperatorParameters {
                ksize: Some(3),
                std: Some(1.0),
                ..Default::default()
            },
        }
        .build()
        .unwrap();
        assert_grad_close(&coded, 5);
    }

    #[test]
    fn phaseless_kink_contributes_zero() {
        // A single-row operator evaluated where A·x = 0 exactly.
        let a = Matrix::new(1, 2, vec![1.0, -1.0]).unwrap();
        let op = ForwardOperator::assemble(
            OperatorKind::PhaselessGaussian(a),
            2,
            OperatorDescriptor::identity(2),
        );
        let g = op.residual_gradient(&vec![0.3, 0.3].into(), &vec![1.0].into()).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn blur_delta_kernel_is_identity() {
        let op = build_blur(6, 1, 1.0).unwrap();
        let x = RandomSource::from_seed(1).normal_vec(36);
        assert_eq!(op.apply(&x).unwrap(), x);
    }

    #[test]
    fn blur_preserves_constants_and_mass() {
        let op = build_blur(8, 5, 3.0).unwrap();
        let c = Vector::filled(64, 2.5);
        let out = op.apply(&c).unwrap();
        assert!(out.sub(&c).max_abs() < 1e-12);
        let x = RandomSource::from_seed(3).normal_vec(64);
        assert!((op.apply(&x).unwrap().sum() - x.sum()).abs() < 1e-10);
    }

    #[test]
    fn blur_impulse_response_is_kernel() {
        let side = 9;
        let op = build_blur(side, 5, 3.0).unwrap();
        let mut x = Vector::zeros(side * side);
        let c = side / 2;
        x[c * side + c] = 1.0;
        let out = op.apply(&x).unwrap();
        // Independent tabulation of the normalised Gaussian.
        let mut k = [[0.0f64; 5]; 5];
        let mut total = 0.0;
        for (a, row) in k.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let (da, db) = (a as f64 - 2.0, b as f64 - 2.0);
                *v = (-(da * da + db * db) / 18.0).exp();
                total += *v;
            }
        }
        for i in 0..side {
            for j in 0..side {
                let want = if i + 2 >= c && i <= c + 2 && j + 2 >= c && j <= c + 2 {
                    k[i + 2 - c][j + 2 - c] / total
                } else {
                    0.0
                };
                assert!((out[i * side + j] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(matches!(build_blur(8, 4, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gaussian_cs_is_isometric_in_expectation() {
        let (m, n) = (64, 128);
        let mut rng = RandomSource::from_seed(77);
        let x = rng.normal_vec(n);
        let x = x.scale(1.0 / x.norm());
        let avg: f64 = (0..200u64)
            .map(|s| {
                let op = ForwardOperator::dense_gaussian(m, n, 1000 + s).unwrap();
                op.apply(&x).unwrap().norm_sq()
            })
            .sum::<f64>()
            / 200.0;
        assert!((avg - 1.0).abs() < 0.1, "{avg}");
    }

    #[test]
    fn save_load_round_trip_every_kind() {
        let dir = tempfile::tempdir().unwrap();
        let ops = [
            ForwardOperator::identity(4),
            ForwardOperator::dense_gaussian(3, 4, 1).unwrap(),
            ForwardOperator::phaseless_gaussian(3, 4, 2).unwrap(),
            ForwardOperator::inpaint(16, 0.3, 3).unwrap(),
            build_blur(4, 3, 1.0).unwrap(),
            OperatorDescriptor {
                kind: OperatorKindTag::CodedPhaseless,
                m: 10,
                n: 16,
                seed: 4,
                parameters: OperatorParameters {
                    ksize: Some(3),
                    std: Some(1.0),
                    ..Default::default()
                },
            }
            .build()
            .unwrap(),
        ];
        for (i, op) in ops.iter().enumerate() {
            let d = dir.path().join(format!("op{i}"));
            op.save(&d).unwrap();
            let back = ForwardOperator::load(&d).unwrap();
            assert_eq!(&back, op);
            assert_eq!(&op.descriptor().build().unwrap(), op);
        }
    }
}

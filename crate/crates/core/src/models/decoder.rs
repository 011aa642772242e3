use crate::tensor::{Matrix, Vector};

/// Differentiable map from latent space to signal space.
pub trait Decoder: Sync {
    fn latent_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn decode(&self, z: &Vector) -> Vector;
    /// Vector–Jacobian product `J_D(z)ᵀ · grad_out`.
    fn pullback(&self, z: &Vector, grad_out: &Vector) -> Vector;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityDecoder(pub usize);

impl Decoder for IdentityDecoder {
    fn latent_dim(&self) -> usize {
        self.0
    }

    fn output_dim(&self) -> usize {
        self.0
    }

    fn decode(&self, z: &Vector) -> Vector {
        z.clone()
    }

    fn pullback(&self, _z: &Vector, grad_out: &Vector) -> Vector {
        grad_out.clone()
    }
}

/// `z ↦ G·z`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecoder(pub Matrix);

impl Decoder for LinearDecoder {
    fn latent_dim(&self) -> usize {
        self.0.cols()
    }

    fn output_dim(&self) -> usize {
        self.0.rows()
    }

    fn decode(&self, z: &Vector) -> Vector {
        self.0.mul_vec(z)
    }

    fn pullback(&self, _z: &Vector, grad_out: &Vector) -> Vector {
        self.0.mul_t_vec(grad_out)
    }
}

impl<D: Decoder + ?Sized> Decoder for &D {
    fn latent_dim(&self) -> usize {
        (**self).latent_dim()
    }

    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }

    fn decode(&self, z: &Vector) -> Vector {
        (**self).decode(z)
    }

    fn pullback(&self, z: &Vector, grad_out: &Vector) -> Vector {
        (**self).pullback(z, grad_out)
    }
}

impl<D: Decoder + ?Sized + Send> Decoder for Box<D> {
    fn latent_dim(&self) -> usize {
        (**self).latent_dim()
    }

    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }

    fn decode(&self, z: &Vector) -> Vector {
        (**self).decode(z)
    }

    fn pullback(&self, z: &Vector, grad_out: &Vector) -> Vector {
        (**self).pullback(z, grad_out)
    }
}

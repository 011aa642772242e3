//! One-sided Jacobi SVD and cyclic Jacobi symmetric eigensolver.

use super::{Matrix, Vector};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Thin singular value decomposition `m = U · diag(s) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × r` with orthonormal columns, `r = min(rows, cols)`.
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub s: Vector,
    /// `cols × r` with orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        Matrix::from_svd(&self.u, &self.s, &self.v)
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::InvalidValue("svd input has non-finite entries".into()));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidDimension("svd needs min(rows, cols) >= 1".into()));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    Ok(svd_tall(m))
}

/// Requires `rows >= cols`.
fn svd_tall(m: &Matrix) -> Svd {
    let rows = m.rows();
    let n = m.cols();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j).into_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for i in 0..rows {
                        a += cp[i] * cp[i];
                        b += cq[i] * cq[i];
                        g += cp[i] * cq[i];
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (c.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let s_max = order.first().map_or(0.0, |o| o.0);
    let tol = (rows.max(n) as f64) * eps * s_max;
    let mut u_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &(sv, j) in &order {
        if sv > tol && sv > 0.0 {
            u_cols.push(Some(cols[j].iter().map(|x| x / sv).collect()));
            s.push(sv);
        } else {
            u_cols.push(None);
            s.push(0.0);
        }
        v_cols.push(v[j].clone());
    }
    let u_cols = complete_orthonormal(rows, u_cols);

    Svd {
        u: Matrix::from_fn(rows, n, |i, j| u_cols[j][i]),
        s: s.into(),
        v: Matrix::from_fn(n, n, |i, j| v_cols[j][i]),
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Fills the `None` slots with unit vectors orthogonal to every other column.
fn complete_orthonormal(rows: usize, cols: Vec<Option<Vec<f64>>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut candidate = 0;
    cols.into_iter()
        .map(|c| match c {
            Some(c) => c,
            None => loop {
                assert!(candidate < rows, "orthonormal completion ran out of candidates");
                let mut e = vec![0.0; rows];
                e[candidate] = 1.0;
                candidate += 1;
                // Two Gram–Schmidt passes.
                for _ in 0..2 {
                    for b in &basis {
                        let ip: f64 = e.iter().zip(b).map(|(x, y)| x * y).sum();
                        for (x, y) in e.iter_mut().zip(b) {
                            *x -= ip * y;
                        }
                    }
                }
                let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    let e: Vec<f64> = e.iter().map(|x| x / norm).collect();
                    basis.push(e.clone());
                    break e;
                }
            },
        })
        .collect()
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Sorted non-increasing.
    pub values: Vector,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigensolver. Rejects inputs that are not symmetric within
/// `1e-9` relative to their largest entry.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "symmetric_eigen needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidValue("symmetric_eigen input has non-finite entries".into()));
    }
    let n = m.rows();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidValue(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut a = m.clone();
    let mut vecs = Matrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= (f64::EPSILON * scale).powi(2) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (vecs[(k, p)], vecs[(k, q)]);
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]).then(x.cmp(&y)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&j| a[(j, j)]).collect(),
        vectors: Matrix::from_fn(n, n, |i, j| vecs[(i, order[j])]),
    })
}

use nalgebra::{DMatrix, DVector};

use super::skew::{algebra_dim, SkewMatrix};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Acceptance threshold for `‖[x, Z] − Y‖` in [`AdAction::inverse`].
pub const AD_INVERSE_RESIDUAL: f64 = 1e-8;

/// The linear map `ad_x : Y ↦ [x, Y]` on so(n), factored once by SVD so that
/// centralizer projections and `ad_x⁻¹` can be reused at the same `x`.
#[derive(Clone, Debug)]
pub struct AdAction {
    x: SkewMatrix,
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v: DMatrix<f64>,
    kernel: Vec<usize>,
    range: Vec<usize>,
}

/// Matrix of `ad_x` in the lexicographic wedge basis; column `k` holds the
/// coordinates of `[x, e_k]`.
pub fn ad_matrix(x: &SkewMatrix) -> DMatrix<f64> {
    let n = x.dim();
    let dim = algebra_dim(n);
    let mut out = DMatrix::zeros(dim, dim);
    for (k, e) in SkewMatrix::full_basis(n).iter().enumerate() {
        out.set_column(k, &x.bracket(e).coords());
    }
    out
}

impl AdAction {
    pub fn new(x: &SkewMatrix) -> Self {
        let ad = ad_matrix(x);
        let svd = ad.svd(true, true);
        let u = svd.u.expect("svd u");
        let v = svd.v_t.expect("svd v_t").transpose();
        let sigma = svd.singular_values;
        let smax = sigma.amax();
        let (mut kernel, mut range) = (Vec::new(), Vec::new());
        for (k, s) in sigma.iter().enumerate() {
            if smax == 0.0 || *s <= RANK_TOL * smax {
                kernel.push(k);
            } else {
                range.push(k);
            }
        }
        Self {
            x: x.clone(),
            u,
            sigma,
            v,
            kernel,
            range,
        }
    }

    pub fn element(&self) -> &SkewMatrix {
        &self.x
    }

    pub fn centralizer_dim(&self) -> usize {
        self.kernel.len()
    }

    /// Killing-orthonormal basis of `𝔤_x = ker ad_x`.
    pub fn centralizer_basis(&self) -> Vec<SkewMatrix> {
        let n = self.x.dim();
        self.kernel
            .iter()
            .map(|&k| SkewMatrix::from_coords(n, self.v.column(k).as_slice()).unwrap())
            .collect()
    }

    /// Killing-orthonormal basis of the orthogonal complement `𝔤_x^⊥ = im ad_x`.
    pub fn complement_basis(&self) -> Vec<SkewMatrix> {
        let n = self.x.dim();
        self.range
            .iter()
            .map(|&k| SkewMatrix::from_coords(n, self.v.column(k).as_slice()).unwrap())
            .collect()
    }

    /// Orthogonal projection onto `𝔤_x`.
    pub fn project_centralizer(&self, y: &SkewMatrix) -> SkewMatrix {
        let c = y.coords();
        let mut out = DVector::zeros(c.len());
        for &k in &self.kernel {
            let col = self.v.column(k);
            out += col * col.dot(&c);
        }
        SkewMatrix::from_coord_vector(y.dim(), &out).unwrap()
    }

    /// Orthogonal projection onto `𝔤_x^⊥`.
    pub fn project_complement(&self, y: &SkewMatrix) -> SkewMatrix {
        y - &self.project_centralizer(y)
    }

    /// The unique `Z ⟂ 𝔤_x` with `[x, Z] = Y`.
    ///
    /// Fails with [`Error::OutsideImage`] when the residual exceeds
    /// `1e-8 · max(1, ‖Y‖)`.
    pub fn inverse(&self, y: &SkewMatrix) -> Result<SkewMatrix> {
        if y.dim() != self.x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.x.dim(),
                found: y.dim(),
            });
        }
        let c = y.coords();
        let mut z = DVector::zeros(c.len());
        for &k in &self.range {
            let coeff = self.u.column(k).dot(&c) / self.sigma[k];
            z += self.v.column(k) * coeff;
        }
        let z = SkewMatrix::from_coord_vector(y.dim(), &z)?;
        let residual = (&self.x.bracket(&z) - y).norm();
        if residual > AD_INVERSE_RESIDUAL * y.norm().max(1.0) {
            return Err(Error::OutsideImage(residual));
        }
        Ok(z)
    }
}

/// Killing-orthonormal basis of `ker ad_x = {ξ : [x, ξ] = 0}`.
pub fn centralizer_basis(x: &SkewMatrix) -> Vec<SkewMatrix> {
    AdAction::new(x).centralizer_basis()
}

/// `ad_x⁻¹ Y` restricted to the complement of the centralizer.
pub fn ad_inverse(x: &SkewMatrix, y: &SkewMatrix) -> Result<SkewMatrix> {
    AdAction::new(x).inverse(y)
}

use nalgebra::{DMatrix, DVector};

use super::skew::{check_dim, SkewMatrix};
use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// An element of SO(n).
///
/// Columns are the body axes `F_i = g f_i` seen from the space frame; rows are
/// the space axes `e_i = gᵀ E_i` seen from the body.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    m: DMatrix<f64>,
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Accepts `m` if `‖mᵀm − I‖_max ≤ 1e-10` and `det m > 0`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        check_dim(m.nrows())?;
        let defect = orthogonality_defect(&m);
        let det = m.determinant();
        if !(defect <= ORTHO_TOL) || det <= 0.0 {
            return Err(Error::NotRotation { defect, det });
        }
        Ok(Self { m })
    }

    /// Wraps a matrix the caller knows to be (close to) a rotation. The
    /// integrator uses this for raw RK4 updates, whose drift is the quantity
    /// being measured.
    pub fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn inverse(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            m: &self.m * &other.m,
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.m * v
    }

    /// `F_i = g f_i`.
    pub fn column(&self, i: usize) -> DVector<f64> {
        self.m.column(i).into_owned()
    }

    /// `e_i = gᵀ E_i`.
    pub fn row_vector(&self, i: usize) -> DVector<f64> {
        self.m.row(i).transpose()
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.m)
    }

    /// Nearest rotation in the Frobenius sense (polar factor `U Vᵀ`).
    pub fn reorthogonalize(&self) -> Self {
        let svd = self.m.clone().svd(true, true);
        let u = svd.u.expect("svd u");
        let vt = svd.v_t.expect("svd v_t");
        let mut r = &u * &vt;
        if r.determinant() < 0.0 {
            // flip the direction with the smallest singular value
            let k = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .unwrap_or(0);
            let mut u2 = u.clone();
            u2.column_mut(k).neg_mut();
            r = u2 * vt;
        }
        Self { m: r }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }
}

/// `max |(mᵀm − I)_ij|`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).amax()
}

/// `Ad_g X = g X gᵀ`.
pub fn adjoint(g: &Rotation, x: &SkewMatrix) -> Result<SkewMatrix> {
    if g.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: x.dim(),
        });
    }
    Ok(adjoint_unchecked(g.as_matrix(), x))
}

pub(crate) fn adjoint_unchecked(g: &DMatrix<f64>, x: &SkewMatrix) -> SkewMatrix {
    SkewMatrix::antisymmetrize(g * x.as_matrix() * g.transpose())
}

/// `Ad_{g⁻¹} X = gᵀ X g`.
pub(crate) fn coadjoint_unchecked(g: &DMatrix<f64>, x: &SkewMatrix) -> SkewMatrix {
    SkewMatrix::antisymmetrize(g.transpose() * x.as_matrix() * g)
}

/// Matrix exponential of a skew matrix.
///
/// Scaling and squaring with a diagonal [6/6] Padé approximant. For skew `X`
/// the approximant `q(−X)⁻¹ q(X)` is orthogonal in exact arithmetic, so the
/// orthogonality defect is pure roundoff, amplified once per squaring.
pub fn exp_so(x: &SkewMatrix) -> Rotation {
    let n = x.dim();
    let norm1 = x
        .as_matrix()
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let a = x.as_matrix() / 2f64.powi(squarings as i32);

    // Padé [6/6] coefficients c_k = (12-k)! 6! / (12! k! (6-k)!)
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let id = DMatrix::<f64>::identity(n, n);
    let mut num = id.clone() * C[0];
    let mut den = id.clone() * C[0];
    let mut pow = id;
    for (k, c) in C.iter().enumerate().skip(1) {
        pow = &pow * &a;
        num += &pow * *c;
        if k % 2 == 0 {
            den += &pow * *c;
        } else {
            den -= &pow * *c;
        }
    }
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Padé denominator of a skew matrix is invertible");
    for _ in 0..squarings {
        r = &r * &r;
    }
    Rotation { m: r }
}

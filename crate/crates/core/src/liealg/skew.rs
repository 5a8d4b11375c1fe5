//! Elements of so(n) and the basic operations on them.
//!
//! Conventions used everywhere in the crate:
//!
//! * `u ∧ v = u vᵀ − v uᵀ`, so `f_i ∧ f_j` is the elementary matrix with
//!   `+1` at `(i, j)` and `−1` at `(j, i)`.
//! * `⟨X, Y⟩ = −½ tr(XY)`, which makes `{f_i ∧ f_j}_{i<j}` orthonormal and
//!   gives `⟨X, f_i ∧ f_j⟩ = X[i][j]`.
//! * For n = 3, `hat(v)` is the matrix of `w ↦ v × w`; then
//!   `[hat(a), hat(b)] = hat(a × b)`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

const SKEW_TOL: f64 = 1e-12;

/// Number of independent coordinates of so(n).
pub fn algebra_dim(n: usize) -> usize {
    n * (n.saturating_sub(1)) / 2
}

/// Ordered wedge basis `(i, j)`, `i < j`, lexicographic.
pub fn wedge_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(algebra_dim(n));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

/// Position of `f_i ∧ f_j` (`i < j`) in the lexicographic wedge basis.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // rows 0..i contribute (n-1) + (n-2) + ... + (n-i) entries
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// A real skew-symmetric `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix {
    m: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&n), "unsupported dimension {n}");
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// Validates skew-symmetry (relative defect `1e-12`) and stores the exact
    /// antisymmetric part.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        check_dim(m.nrows())?;
        let scale = m.amax().max(1.0);
        let defect = (&m + m.transpose()).amax();
        if !(defect <= SKEW_TOL * scale) {
            return Err(Error::NotSkew(defect));
        }
        Ok(Self::antisymmetrize(m))
    }

    /// Skew part `(m − mᵀ)/2` of an arbitrary square matrix.
    pub fn antisymmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self { m: (m - t) * 0.5 }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        check_dim(n)?;
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Self::from_matrix(m)
    }

    /// Builds `Σ c_k f_{i_k} ∧ f_{j_k}` from coordinates in the lexicographic
    /// wedge basis.
    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        check_dim(n)?;
        if coords.len() != algebra_dim(n) {
            return Err(Error::DimensionMismatch {
                expected: algebra_dim(n),
                found: coords.len(),
            });
        }
        let mut m = DMatrix::zeros(n, n);
        for (c, (i, j)) in coords.iter().zip(wedge_pairs(n)) {
            m[(i, j)] = *c;
            m[(j, i)] = -*c;
        }
        Ok(Self { m })
    }

    pub fn from_coord_vector(n: usize, coords: &DVector<f64>) -> Result<Self> {
        Self::from_coords(n, coords.as_slice())
    }

    /// Coordinates `X[i][j] = ⟨X, f_i ∧ f_j⟩`, `i < j`, lexicographic.
    pub fn coords(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_iterator(
            algebra_dim(n),
            wedge_pairs(n).into_iter().map(|(i, j)| self.m[(i, j)]),
        )
    }

    /// The basis element `f_i ∧ f_j`.
    pub fn basis(n: usize, i: usize, j: usize) -> Self {
        assert!(i < n && j < n, "basis index out of range");
        let mut x = Self::zeros(n);
        x.m[(i, j)] = 1.0;
        x.m[(j, i)] = -1.0;
        x
    }

    /// The whole lexicographic wedge basis of so(n).
    pub fn full_basis(n: usize) -> Vec<Self> {
        wedge_pairs(n)
            .into_iter()
            .map(|(i, j)| Self::basis(n, i, j))
            .collect()
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

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Norm induced by the Killing metric (Euclidean norm of the coordinates).
    pub fn norm(&self) -> f64 {
        self.m.norm() / std::f64::consts::SQRT_2
    }

    /// Commutator `XY − YX`.
    ///
    /// Panics on dimension mismatch; use [`bracket`] for a checked version.
    pub fn bracket(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "bracket: dimension mismatch");
        let xy = &self.m * &other.m;
        let yx = &other.m * &self.m;
        Self { m: xy - yx }
    }

    /// Killing pairing `−½ tr(XY)`. Panics on dimension mismatch.
    pub fn killing(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "killing: dimension mismatch");
        // −½ tr(XY) = ½ Σ_ij X_ij Y_ij for skew X, Y
        0.5 * self.m.dot(&other.m)
    }

    /// Matrix-vector product `X v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.m * v
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }
}

impl Add for &SkewMatrix {
    type Output = SkewMatrix;
    fn add(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix { m: &self.m + &rhs.m }
    }
}

impl Add for SkewMatrix {
    type Output = SkewMatrix;
    fn add(self, rhs: SkewMatrix) -> SkewMatrix {
        SkewMatrix { m: self.m + rhs.m }
    }
}

impl AddAssign<&SkewMatrix> for SkewMatrix {
    fn add_assign(&mut self, rhs: &SkewMatrix) {
        self.m += &rhs.m;
    }
}

impl Sub for &SkewMatrix {
    type Output = SkewMatrix;
    fn sub(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix { m: &self.m - &rhs.m }
    }
}

impl Sub for SkewMatrix {
    type Output = SkewMatrix;
    fn sub(self, rhs: SkewMatrix) -> SkewMatrix {
        SkewMatrix { m: self.m - rhs.m }
    }
}

impl Neg for SkewMatrix {
    type Output = SkewMatrix;
    fn neg(self) -> SkewMatrix {
        SkewMatrix { m: -self.m }
    }
}

impl Neg for &SkewMatrix {
    type Output = SkewMatrix;
    fn neg(self) -> SkewMatrix {
        SkewMatrix { m: -&self.m }
    }
}

impl Mul<f64> for &SkewMatrix {
    type Output = SkewMatrix;
    fn mul(self, rhs: f64) -> SkewMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for SkewMatrix {
    type Output = SkewMatrix;
    fn mul(self, rhs: f64) -> SkewMatrix {
        SkewMatrix { m: self.m * rhs }
    }
}

impl fmt::Display for SkewMatrix {
    /// Row-major plain text, one row per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| format!("{:>12.6}", self.m[(i, j)]))
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        })
    }
}

/// `u ∧ v = u vᵀ − v uᵀ`.
pub fn wedge(u: &DVector<f64>, v: &DVector<f64>) -> Result<SkewMatrix> {
    same_dim(u.len(), v.len())?;
    check_dim(u.len())?;
    let uv = u * v.transpose();
    let vu = v * u.transpose();
    Ok(SkewMatrix { m: uv - vu })
}

pub fn bracket(x: &SkewMatrix, y: &SkewMatrix) -> Result<SkewMatrix> {
    same_dim(x.dim(), y.dim())?;
    Ok(x.bracket(y))
}

pub fn killing(x: &SkewMatrix, y: &SkewMatrix) -> Result<f64> {
    same_dim(x.dim(), y.dim())?;
    Ok(x.killing(y))
}

/// The n = 3 identification `R³ → so(3)`, `hat(v) w = v × w`.
pub fn hat(v: &Vector3<f64>) -> SkewMatrix {
    let mut m = DMatrix::zeros(3, 3);
    m[(0, 1)] = -v[2];
    m[(0, 2)] = v[1];
    m[(1, 0)] = v[2];
    m[(1, 2)] = -v[0];
    m[(2, 0)] = -v[1];
    m[(2, 1)] = v[0];
    SkewMatrix { m }
}

/// Inverse of [`hat`].
pub fn vee(x: &SkewMatrix) -> Result<Vector3<f64>> {
    if x.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: x.dim(),
        });
    }
    Ok(Vector3::new(x.m[(2, 1)], x.m[(0, 2)], x.m[(1, 0)]))
}

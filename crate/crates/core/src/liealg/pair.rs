use super::skew::{wedge_pairs, SkewMatrix};

/// The symmetric pair `so(n) = 𝔨 + 𝔡` with `𝔨 = span{f_i∧f_j : i<j<n}` (a copy
/// of so(n−1)) and `𝔡 = span{f_i∧f_n : i<n}`.
///
/// Index lists refer to positions in the lexicographic wedge basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricPairSplit {
    n: usize,
    k_indices: Vec<usize>,
    d_indices: Vec<usize>,
}

impl SymmetricPairSplit {
    pub fn new(n: usize) -> Self {
        let mut k_indices = Vec::new();
        let mut d_indices = Vec::new();
        for (idx, (_, j)) in wedge_pairs(n).into_iter().enumerate() {
            if j == n - 1 {
                d_indices.push(idx);
            } else {
                k_indices.push(idx);
            }
        }
        Self {
            n,
            k_indices,
            d_indices,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k_indices(&self) -> &[usize] {
        &self.k_indices
    }

    /// Wedge-basis positions of `f_1∧f_n, …, f_{n−1}∧f_n`, in that order.
    pub fn d_indices(&self) -> &[usize] {
        &self.d_indices
    }

    pub fn k_basis(&self) -> Vec<SkewMatrix> {
        let pairs = wedge_pairs(self.n);
        self.k_indices
            .iter()
            .map(|&k| SkewMatrix::basis(self.n, pairs[k].0, pairs[k].1))
            .collect()
    }

    pub fn d_basis(&self) -> Vec<SkewMatrix> {
        (0..self.n - 1)
            .map(|i| SkewMatrix::basis(self.n, i, self.n - 1))
            .collect()
    }

    /// `(X_𝔨, X_𝔡)`: `X_𝔨` has zero last row and column, `X_𝔡` lives only there.
    pub fn split(&self, x: &SkewMatrix) -> (SkewMatrix, SkewMatrix) {
        assert_eq!(x.dim(), self.n, "split: dimension mismatch");
        let n = self.n;
        let mut k = x.as_matrix().clone();
        let mut d = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, n - 1)] = k[(i, n - 1)];
            d[(n - 1, i)] = k[(n - 1, i)];
            k[(i, n - 1)] = 0.0;
            k[(n - 1, i)] = 0.0;
        }
        (
            SkewMatrix::antisymmetrize(k),
            SkewMatrix::antisymmetrize(d),
        )
    }

    pub fn project_k(&self, x: &SkewMatrix) -> SkewMatrix {
        self.split(x).0
    }

    pub fn project_d(&self, x: &SkewMatrix) -> SkewMatrix {
        self.split(x).1
    }

    /// Coordinates `(m_{1n}, …, m_{n−1,n})` of the 𝔡 part.
    pub fn d_coords(&self, x: &SkewMatrix) -> Vec<f64> {
        (0..self.n - 1).map(|i| x.entry(i, self.n - 1)).collect()
    }

    /// Coordinates of the 𝔨 part in the order of [`Self::k_indices`].
    pub fn k_coords(&self, x: &SkewMatrix) -> Vec<f64> {
        let c = x.coords();
        self.k_indices.iter().map(|&k| c[k]).collect()
    }

    /// `Σ c_i f_i ∧ f_n`.
    pub fn from_d_coords(&self, c: &[f64]) -> SkewMatrix {
        assert_eq!(c.len(), self.n - 1);
        let mut x = SkewMatrix::zeros(self.n);
        for (i, v) in c.iter().enumerate() {
            x += &SkewMatrix::basis(self.n, i, self.n - 1).scale(*v);
        }
        x
    }
}

/// Free-function form of [`SymmetricPairSplit::split`].
pub fn split(x: &SkewMatrix, pair: &SymmetricPairSplit) -> (SkewMatrix, SkewMatrix) {
    pair.split(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        for n in 2..=7 {
            let p = SymmetricPairSplit::new(n);
            assert_eq!(p.k_indices().len(), (n - 1) * (n - 2) / 2);
            assert_eq!(p.d_indices().len(), n - 1);
        }
    }

    #[test]
    fn split_basis_elements() {
        let p = SymmetricPairSplit::new(3);
        let e12 = SkewMatrix::basis(3, 0, 1);
        let e13 = SkewMatrix::basis(3, 0, 2);
        assert_eq!(p.split(&e12), (e12.clone(), SkewMatrix::zeros(3)));
        assert_eq!(p.split(&e13), (SkewMatrix::zeros(3), e13.clone()));
    }

    #[test]
    fn bracket_relations_on_basis() {
        let n = 5;
        let p = SymmetricPairSplit::new(n);
        let (kb, db) = (p.k_basis(), p.d_basis());
        for x in &kb {
            for y in &kb {
                assert_eq!(p.project_d(&x.bracket(y)).norm(), 0.0);
            }
            for y in &db {
                assert_eq!(p.project_k(&x.bracket(y)).norm(), 0.0);
            }
        }
        for x in &db {
            for y in &db {
                assert_eq!(p.project_d(&x.bracket(y)).norm(), 0.0);
            }
        }
    }

    #[test]
    fn d_coordinates_round_trip() {
        let p = SymmetricPairSplit::new(4);
        let x = p.from_d_coords(&[1.0, -2.0, 0.5]);
        assert_eq!(p.d_coords(&x), vec![1.0, -2.0, 0.5]);
        assert_eq!(p.project_k(&x).norm(), 0.0);
    }
}

//! The so(n+1) Lax representation of the Euler–Poisson equations with a
//! spectral parameter, and the spectral curve on the invariant set.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{vf_euler_poisson, BodyParams, EulerPoissonState, InertiaOperator};
use crate::error::{Error, Result};
use crate::liealg::SkewMatrix;

/// Matrix polynomial `Σ_k λ^k C_k` with skew coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxPolynomial {
    pub coeffs: Vec<SkewMatrix>,
}

impl LaxPolynomial {
    pub fn new(coeffs: Vec<SkewMatrix>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::InvalidParameter("empty matrix polynomial".into()));
        };
        if let Some(c) = coeffs.iter().find(|c| c.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: c.dim(),
            });
        }
        Ok(Self { coeffs })
    }

    /// Index of the last stored coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn coeff(&self, k: usize) -> SkewMatrix {
        self.coeffs.get(k).cloned().unwrap_or_else(|| SkewMatrix::zeros(self.dim()))
    }

    pub fn eval(&self, lambda: f64) -> SkewMatrix {
        self.coeffs
            .iter()
            .rev()
            .fold(SkewMatrix::zeros(self.dim()), |acc, c| &acc.scale(lambda) + c)
    }

    /// `[P, R]` as a polynomial of degree `deg P + deg R`.
    pub fn bracket(&self, other: &Self) -> Self {
        let mut out = vec![SkewMatrix::zeros(self.dim()); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, p) in self.coeffs.iter().enumerate() {
            for (j, r) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &p.bracket(r);
            }
        }
        Self { coeffs: out }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self {
            coeffs: (0..len).map(|k| &self.coeff(k) - &other.coeff(k)).collect(),
        }
    }

    /// Frobenius-type norm of each coefficient.
    pub fn coeff_norms(&self) -> Vec<f64> {
        self.coeffs.iter().map(SkewMatrix::norm).collect()
    }
}

/// `X* = diag(X, 0)`.
pub fn embed_block(x: &SkewMatrix) -> SkewMatrix {
    let n = x.dim();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(x.as_matrix());
    SkewMatrix::antisymmetrize(m)
}

/// `v* = [[0, v], [−vᵀ, 0]]`.
pub fn embed_vector(v: &DVector<f64>) -> SkewMatrix {
    let n = v.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        m[(i, n)] = v[i];
        m[(n, i)] = -v[i];
    }
    SkewMatrix::antisymmetrize(m)
}

fn r_star(n: usize, params: &BodyParams) -> SkewMatrix {
    let mut r = DVector::zeros(n);
    r[n - 1] = params.rho;
    embed_vector(&r)
}

fn check_a(a: f64) -> Result<()> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("spectral scale a must be nonzero, got {a}")));
    }
    Ok(())
}

/// `L(λ) = γ* + λ m* + λ² (𝔊𝔐/a) r*`.
pub fn lax_l(state: &EulerPoissonState, a: f64, params: &BodyParams) -> Result<LaxPolynomial> {
    check_a(a)?;
    let n = state.dim();
    LaxPolynomial::new(vec![
        embed_vector(&state.gamma),
        embed_block(&state.m),
        r_star(n, params).scale(params.grav_mass / a),
    ])
}

/// `(L, A)` with `A(λ) = ω* + λ 𝔊𝔐 r*` and `ω = A_op m`.
pub fn build_lax(
    state: &EulerPoissonState,
    op: &InertiaOperator,
    a: f64,
    params: &BodyParams,
) -> Result<(LaxPolynomial, LaxPolynomial)> {
    let l = lax_l(state, a, params)?;
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: state.dim(),
        });
    }
    let big_a = LaxPolynomial::new(vec![
        embed_block(&op.apply(&state.m)),
        r_star(state.dim(), params).scale(params.grav_mass),
    ])?;
    Ok((l, big_a))
}

/// `R(λ) = L̇(λ) − [L(λ), A(λ)]`, degree 3, with `L̇` assembled from the
/// Euler–Poisson rates.
pub fn lax_residual(
    state: &EulerPoissonState,
    op: &InertiaOperator,
    a: f64,
    params: &BodyParams,
) -> Result<LaxPolynomial> {
    let (l, big_a) = build_lax(state, op, a, params)?;
    let rate = vf_euler_poisson(state, op, params)?;
    let n1 = state.dim() + 1;
    let l_dot = LaxPolynomial::new(vec![
        embed_vector(&rate.gamma),
        embed_block(&rate.m),
        SkewMatrix::zeros(n1),
    ])?;
    Ok(l_dot.sub(&l.bracket(&big_a)))
}

/// As [`lax_residual`], with `L̇` from central differences of `L` along the
/// vector field with step `h`.
pub fn lax_residual_fd(
    state: &EulerPoissonState,
    op: &InertiaOperator,
    a: f64,
    params: &BodyParams,
    h: f64,
) -> Result<LaxPolynomial> {
    let (l, big_a) = build_lax(state, op, a, params)?;
    let rate = vf_euler_poisson(state, op, params)?;
    let shifted = |t: f64| EulerPoissonState {
        m: &state.m + &rate.m.scale(t),
        gamma: &state.gamma + &rate.gamma * t,
    };
    let (lp, lm) = (lax_l(&shifted(h), a, params)?, lax_l(&shifted(-h), a, params)?);
    let l_dot = lp.sub(&lm);
    let l_dot = LaxPolynomial {
        coeffs: l_dot.coeffs.iter().map(|c| c.scale(0.5 / h)).collect(),
    };
    Ok(l_dot.sub(&l.bracket(&big_a)))
}

/// `det(L(λ) − μ Id)`.
pub fn spectral_poly(l: &LaxPolynomial, lambda: f64, mu: f64) -> f64 {
    let m = l.eval(lambda).into_matrix();
    let k = m.nrows();
    (m - DMatrix::<f64>::identity(k, k) * mu).determinant()
}

/// Coefficients of `P(λ) = c₀ + c₂λ² + c₄λ⁴` and `Q(λ) = q λ` in
/// `det(L(λ) − μ Id) = (−μ)^{n−3}(μ⁴ + μ²P(λ) + Q(λ)²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralData {
    pub p_coeffs: [f64; 3],
    pub q_coeff: f64,
}

impl SpectralData {
    /// `(ℱ₂, 2ℱ₁/a, (ρ𝔊𝔐/a)², ℱ₃)` from the integrals of the chart.
    pub fn from_integrals(f1: f64, f2: f64, f3: f64, a: f64, params: &BodyParams) -> Self {
        Self {
            p_coeffs: [f2, 2.0 * f1 / a, (params.weight() / a).powi(2)],
            q_coeff: f3,
        }
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.p_coeffs
            .iter()
            .zip(&other.p_coeffs)
            .map(|(u, v)| (u - v).abs())
            .fold((self.q_coeff - other.q_coeff).abs(), f64::max)
    }
}

/// Interpolation nodes for the coefficient fits.
pub const SPECTRAL_NODES: [f64; 6] = [0.0, 1.0, -1.0, 2.0, -2.0, 3.0];

/// Relative tolerance on the terms that vanish on the invariant set.
pub const SPECTRAL_FIT_TOL: f64 = 1e-8;

fn interpolate(values: &[f64]) -> DVector<f64> {
    let k = SPECTRAL_NODES.len();
    let v = DMatrix::from_fn(k, k, |i, j| SPECTRAL_NODES[i].powi(j as i32));
    v.lu()
        .solve(&DVector::from_column_slice(values))
        .expect("Vandermonde matrix on distinct nodes is invertible")
}

/// Extracts [`SpectralData`] from determinant samples. At each node the
/// reduced characteristic polynomial is sampled at `μ = 1, 2, 3`; two values
/// give `P` and `Q²`, the third and the odd/higher coefficients measure the
/// departure from the factorized form.
pub fn spectral_invariants(state: &EulerPoissonState, a: f64, params: &BodyParams) -> Result<SpectralData> {
    let n = state.dim();
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let l = lax_l(state, a, params)?;
    let reduced = |lambda: f64, mu: f64| spectral_poly(&l, lambda, mu) / (-mu).powi(n as i32 - 3);
    let mut p_vals = Vec::with_capacity(SPECTRAL_NODES.len());
    let mut q_vals = Vec::with_capacity(SPECTRAL_NODES.len());
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for &lambda in &SPECTRAL_NODES {
        let (d1, d2, d3) = (reduced(lambda, 1.0), reduced(lambda, 2.0), reduced(lambda, 3.0));
        let p = ((d2 - 16.0) - (d1 - 1.0)) / 3.0;
        let q2 = (d1 - 1.0) - p;
        residual = residual.max((d3 - 81.0 - 9.0 * p - q2).abs());
        scale = scale.max(d1.abs()).max(d2.abs()).max(d3.abs());
        p_vals.push(p);
        q_vals.push(q2);
    }
    let pc = interpolate(&p_vals);
    let qc = interpolate(&q_vals);
    for k in [1, 3, 5] {
        residual = residual.max(pc[k].abs());
    }
    for k in [0, 1, 3, 4, 5] {
        residual = residual.max(qc[k].abs());
    }
    if residual > SPECTRAL_FIT_TOL * scale {
        return Err(Error::FitResidual(residual / scale));
    }
    Ok(SpectralData {
        p_coeffs: [pc[0], pc[2], pc[4]],
        q_coeff: qc[2].max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::classical::{ClassicalState, ClassicalTop, HaBranch};
    use crate::dynamics::{integrals_hess, HessChartState};
    use crate::sampling;

    fn ha_operator(n: usize, seed: u64) -> (InertiaOperator, f64) {
        let mut r = sampling::rng(seed);
        let k = (n - 1) * (n - 2) / 2;
        let a = 1.3;
        let a_k = sampling::spd(&mut r, k, 0.5, 2.0);
        let b = DMatrix::from_fn(k, n - 1, |_, _| sampling::uniform(&mut r, 0.3));
        (InertiaOperator::hess_appelrot(n, a_k, b, a).unwrap(), a)
    }

    fn invariant_state(n: usize, seed: u64) -> EulerPoissonState {
        let mut r = sampling::rng(seed);
        let s = HessChartState::new(sampling::vector(&mut r, n - 1, 1.0), sampling::unit_vector(&mut r, n)).unwrap();
        s.to_euler_poisson()
    }

    #[test]
    fn gamma_embedding_at_rest() {
        let p = BodyParams::default();
        let s = EulerPoissonState::hanging(4);
        let l0 = lax_l(&s, 1.0, &p).unwrap().eval(0.0);
        let nonzero: Vec<_> = (0..5)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .filter(|&(i, j)| l0.entry(i, j) != 0.0)
            .collect();
        assert_eq!(nonzero, vec![(3, 4), (4, 3)]);
        assert_eq!(l0.entry(3, 4).abs(), 1.0);
    }

    #[test]
    fn classical_matrices_match_the_display() {
        let top = ClassicalTop::hess_appelrot(0.8, 1.5, 2.4, 0.7, 1.3, HaBranch::Plus)
            .unwrap()
            .rotated()
            .unwrap();
        let (op, p) = top.to_wedge().unwrap();
        let a2 = 1.5;
        let mut r = sampling::rng(3);
        let cs = ClassicalState {
            m: nalgebra::Vector3::new(sampling::uniform(&mut r, 1.0), sampling::uniform(&mut r, 1.0), 0.0),
            gamma: sampling::unit_vector(&mut r, 3).fixed_rows::<3>(0).into_owned(),
        };
        let (l, am) = build_lax(&cs.to_euler_poisson(), &op, a2, &p).unwrap();
        let lambda = 0.7;
        let w = top.a * cs.m;
        let (m, g) = (cs.m, cs.gamma);
        let c = lambda * lambda * p.grav_mass * p.rho / a2;
        let expect_l = DMatrix::from_row_slice(4, 4, &[
            0.0, -lambda * m.z, lambda * m.y, g.x,
            lambda * m.z, 0.0, -lambda * m.x, g.y,
            -lambda * m.y, lambda * m.x, 0.0, g.z + c,
            -g.x, -g.y, -g.z - c, 0.0,
        ]);
        let k = lambda * p.rho * p.grav_mass;
        let expect_a = DMatrix::from_row_slice(4, 4, &[
            0.0, -w.z, w.y, 0.0,
            w.z, 0.0, -w.x, 0.0,
            -w.y, w.x, 0.0, k,
            0.0, 0.0, -k, 0.0,
        ]);
        assert!((l.eval(lambda).into_matrix() - expect_l).amax() < 1e-14);
        assert!((am.eval(lambda).into_matrix() - expect_a).amax() < 1e-14);
    }

    #[test]
    fn residual_vanishes_on_the_invariant_set() {
        for n in 3..=6 {
            let (op, a) = ha_operator(n, 10 + n as u64);
            let p = BodyParams::new(0.9, 1.4).unwrap();
            let s = invariant_state(n, 20 + n as u64);
            let r = lax_residual(&s, &op, a, &p).unwrap();
            assert_eq!(r.degree(), 3);
            for c in r.coeff_norms() {
                assert!(c < 1e-12, "n = {n}: {c}");
            }
        }
    }

    #[test]
    fn lambda_two_term_detects_off_set_and_broken_condition() {
        let n = 4;
        let (op, a) = ha_operator(n, 30);
        let p = BodyParams::default();
        let mut s = invariant_state(n, 31);
        s.m = &s.m + &SkewMatrix::basis(n, 0, 1).scale(0.4);
        let r = lax_residual(&s, &op, a, &p).unwrap();
        assert!(r.coeff_norms()[2] > 1e-3);
        assert!(r.coeff_norms()[0] < 1e-12 && r.coeff_norms()[1] < 1e-12 && r.coeff_norms()[3] < 1e-12);

        let broken = op.with_d_block_perturbation(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.0, -0.1]))).unwrap();
        let s = invariant_state(n, 32);
        let r = lax_residual(&s, &broken, a, &p).unwrap();
        assert!(r.coeff_norms()[2] > 1e-3);
    }

    #[test]
    fn finite_difference_residual_agrees() {
        let (op, a) = ha_operator(5, 40);
        let p = BodyParams::new(1.1, 0.8).unwrap();
        let mut r = sampling::rng(41);
        let s = EulerPoissonState::new(sampling::skew(&mut r, 5, 1.0), sampling::unit_vector(&mut r, 5)).unwrap();
        let exact = lax_residual(&s, &op, a, &p).unwrap();
        let fd = lax_residual_fd(&s, &op, a, &p, 1e-5).unwrap();
        for (u, v) in exact.coeffs.iter().zip(&fd.coeffs) {
            assert!((u - v).norm() < 1e-6);
        }
    }

    #[test]
    fn curve_factorizes_with_the_integrals() {
        let mut r = sampling::rng(50);
        for n in 3..=6 {
            let p = BodyParams::new(0.8, 1.2).unwrap();
            let a = 1.7;
            let s = invariant_state(n, 51 + n as u64);
            let chart = HessChartState::from_euler_poisson(&s);
            let (f1, f2, f3) = integrals_hess(&chart, a, &p);
            let fit = spectral_invariants(&s, a, &p).unwrap();
            let direct = SpectralData::from_integrals(f1, f2, f3, a, &p);
            assert!(fit.max_deviation(&direct) < 1e-9, "n = {n}: {fit:?} vs {direct:?}");
            assert!((fit.p_coeffs[0] - 1.0).abs() < 1e-12);

            let l = lax_l(&s, a, &p).unwrap();
            for _ in 0..20 {
                let lambda = sampling::uniform(&mut r, 2.0);
                let mu = sampling::uniform(&mut r, 2.0);
                let pl = f2 + 2.0 * f1 / a * lambda.powi(2) + (p.weight() / a).powi(2) * lambda.powi(4);
                let ql = lambda * f3;
                let expect = (-mu).powi(n as i32 - 3) * (mu.powi(4) + mu * mu * pl + ql * ql);
                let got = spectral_poly(&l, lambda, mu);
                assert!((got - expect).abs() <= 1e-9 * expect.abs().max(1e-3));
            }
            if n > 3 {
                assert!(spectral_poly(&l, 0.9, 0.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_matrix_determinant() {
        let l = LaxPolynomial::new(vec![SkewMatrix::zeros(4)]).unwrap();
        assert!((spectral_poly(&l, 1.3, 0.7) - 0.7f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn off_set_state_is_flagged() {
        let p = BodyParams::default();
        let mut s = invariant_state(4, 60);
        s.m = &s.m + &SkewMatrix::basis(4, 0, 2).scale(0.5);
        assert!(matches!(spectral_invariants(&s, 1.2, &p), Err(Error::FitResidual(_))));
    }
}

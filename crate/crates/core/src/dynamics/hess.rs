use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::inertia::{check_ha_condition, InertiaOperator};
use super::state::{BodyParams, HessChartState};
use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::{SkewMatrix, SymmetricPairSplit};

/// Euler–Poisson equations on the invariant set `m_𝔨 = 0` of an operator
/// satisfying the Hess–Appel'rot condition.
#[derive(Clone, Debug, PartialEq)]
pub struct HessChart {
    pub n: usize,
    /// `B : 𝔡 → 𝔨` as a `k × (n−1)` matrix.
    pub b: DMatrix<f64>,
    pub a: f64,
    pub params: BodyParams,
}

impl HessChart {
    pub fn new(n: usize, b: DMatrix<f64>, a: f64, params: BodyParams) -> Result<Self> {
        let k = (n - 1) * (n - 2) / 2;
        if b.nrows() != k || b.ncols() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: k * (n - 1),
                found: b.nrows() * b.ncols(),
            });
        }
        Ok(Self { n, b, a, params })
    }

    /// Reads `B` and `a` from an operator, which must satisfy the condition.
    pub fn from_operator(op: &InertiaOperator, params: BodyParams) -> Result<Self> {
        let (holds, a) = check_ha_condition(op);
        let a = match (holds, a) {
            (true, Some(a)) => a,
            _ => {
                let (_, _, ad) = op.blocks();
                let d = ad.nrows();
                let avg = ad.trace() / d as f64;
                let dev = (ad - DMatrix::<f64>::identity(d, d) * avg).amax();
                return Err(Error::Constraint {
                    what: "Hess-Appel'rot condition",
                    defect: dev,
                });
            }
        };
        let (_, b, _) = op.blocks();
        Self::new(op.dim(), b, a, params)
    }

    /// `Σ_{i<j<n} ω_ij f_i∧f_j = B m_𝔡` as a skew matrix with vanishing last row.
    pub fn omega_k(&self, m_d: &DVector<f64>) -> SkewMatrix {
        let pair = SymmetricPairSplit::new(self.n);
        let kc = &self.b * m_d;
        let mut coords = DVector::zeros(self.n * (self.n - 1) / 2);
        for (r, &p) in pair.k_indices().iter().enumerate() {
            coords[p] = kc[r];
        }
        SkewMatrix::from_coord_vector(self.n, &coords).expect("dimension fixed")
    }

    pub fn vector_field(&self, s: &HessChartState) -> Result<HessChartState> {
        vf_hess_coords(s, &self.b, self.a, &self.params)
    }

    pub fn integrals(&self, s: &HessChartState) -> (f64, f64, f64) {
        integrals_hess(s, self.a, &self.params)
    }
}

/// ```text
/// ṁ_in = −Σ_j ω_ij m_jn − ρ𝔊𝔐 γ_i
/// γ̇_i  = −a γ_n m_in − Σ_j ω_ij γ_j          (i < n)
/// γ̇_n  = a Σ_j γ_j m_jn
/// ```
/// with `ω_ij = ⟨B m, f_i∧f_j⟩`.
pub fn vf_hess_coords(
    s: &HessChartState,
    b: &DMatrix<f64>,
    a: f64,
    params: &BodyParams,
) -> Result<HessChartState> {
    let n = s.dim();
    let chart = HessChart::new(n, b.clone(), a, *params)?;
    let w = chart.omega_k(&s.m_d);
    let k = params.weight();
    let gn = s.gamma[n - 1];
    let mut m_dot = DVector::zeros(n - 1);
    let mut g_dot = DVector::zeros(n);
    for i in 0..n - 1 {
        let (mut wm, mut wg) = (0.0, 0.0);
        for j in 0..n - 1 {
            let wij = w.entry(i, j);
            wm += wij * s.m_d[j];
            wg += wij * s.gamma[j];
        }
        m_dot[i] = -wm - k * s.gamma[i];
        g_dot[i] = -a * gn * s.m_d[i] - wg;
    }
    g_dot[n - 1] = a * (0..n - 1).map(|j| s.gamma[j] * s.m_d[j]).sum::<f64>();
    Ok(HessChartState {
        m_d: m_dot,
        gamma: g_dot,
    })
}

/// `(ℱ₁, ℱ₂, ℱ₃)`: energy, `|γ|²`, and the norm of
/// `Σ_{i<j<n} (m_in γ_j − m_jn γ_i) f_i∧f_j`.
pub fn integrals_hess(s: &HessChartState, a: f64, params: &BodyParams) -> (f64, f64, f64) {
    let n = s.dim();
    let f1 = 0.5 * a * s.m_d.norm_squared() + params.weight() * s.gamma[n - 1];
    let f2 = s.gamma.norm_squared();
    let mut f3 = 0.0;
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            let t = s.m_d[i] * s.gamma[j] - s.m_d[j] * s.gamma[i];
            f3 += t * t;
        }
    }
    (f1, f2, f3.sqrt())
}

/// Layout of [`HessChartState::to_phase`].
impl Flow for HessChart {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = HessChartState::from_phase(self.n, state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: self.vector_field(&s)?.to_phase().flat,
        })
    }

    fn unit_vector_range(&self) -> Option<Range<usize>> {
        Some(self.n - 1..2 * self.n - 1)
    }
}

/// The n = 4 example with Hamiltonian
/// `½(a₁m₂₃² + a₂m₁₃² + a₃m₁₂²) + (a/2)Σm_i4² + m₁₂(b₁m₁₄ + b₂m₂₄ + b₃m₃₄) + ρ𝔊𝔐γ₄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hess4Coeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl Hess4Coeffs {
    /// `b₁m₁₄ + b₂m₂₄ + b₃m₃₄`, which equals `ω₁₂` on the invariant set.
    pub fn beta(&self, m14: f64, m24: f64, m34: f64) -> f64 {
        self.b1 * m14 + self.b2 * m24 + self.b3 * m34
    }

    /// The operator on so(4). 𝔨 coordinates are ordered `(m₁₂, m₁₃, m₂₃)`.
    pub fn operator(&self) -> Result<InertiaOperator> {
        let a_k = DMatrix::from_diagonal(&DVector::from_vec(vec![self.a3, self.a2, self.a1]));
        let mut b = DMatrix::zeros(3, 3);
        b[(0, 0)] = self.b1;
        b[(0, 1)] = self.b2;
        b[(0, 2)] = self.b3;
        InertiaOperator::hess_appelrot(4, a_k, b, self.a)
    }

    pub fn chart(&self, params: BodyParams) -> Result<HessChart> {
        let mut b = DMatrix::zeros(3, 3);
        b[(0, 0)] = self.b1;
        b[(0, 1)] = self.b2;
        b[(0, 2)] = self.b3;
        HessChart::new(4, b, self.a, params)
    }
}

fn check4(s: &HessChartState) -> Result<()> {
    if s.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: s.dim(),
        });
    }
    Ok(())
}

/// The seven explicit equations on `m₁₂ = m₁₃ = m₂₃ = 0`.
pub fn vf_hess4(s: &HessChartState, params: &BodyParams, c: &Hess4Coeffs) -> Result<HessChartState> {
    check4(s)?;
    let (m14, m24, m34) = (s.m_d[0], s.m_d[1], s.m_d[2]);
    let g = &s.gamma;
    let k = params.weight();
    let beta = c.beta(m14, m24, m34);
    Ok(HessChartState {
        m_d: DVector::from_vec(vec![
            -m24 * beta - k * g[0],
            m14 * beta - k * g[1],
            -k * g[2],
        ]),
        gamma: DVector::from_vec(vec![
            -c.a * g[3] * m14 - g[1] * beta,
            -c.a * g[3] * m24 + g[0] * beta,
            -c.a * g[3] * m34,
            c.a * (g[0] * m14 + g[1] * m24 + g[2] * m34),
        ]),
    })
}

/// `(ṁ₁₂, ṁ₂₃, ṁ₁₃)` for an arbitrary `m ∈ so(4)`.
pub fn hess4_k_rates(m: &SkewMatrix, c: &Hess4Coeffs) -> Result<(f64, f64, f64)> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: m.dim(),
        });
    }
    let e = |i: usize, j: usize| m.entry(i - 1, j - 1);
    let (m12, m13, m23) = (e(1, 2), e(1, 3), e(2, 3));
    let (m14, m24, m34) = (e(1, 4), e(2, 4), e(3, 4));
    let beta = c.beta(m14, m24, m34);
    let m12_dot = m13 * m23 * (c.a2 - c.a1) + m12 * (c.b1 * m24 - c.b2 * m14);
    let m23_dot = m12 * m13 * (c.a3 - c.a2) + m12 * (c.b2 * m34 - c.b3 * m24) + m13 * beta;
    let m13_dot = m23 * m12 * (c.a1 - c.a3) + m12 * (c.b1 * m34 - c.b3 * m14) - m23 * beta;
    Ok((m12_dot, m23_dot, m13_dot))
}

/// `(ℱ₁₂, ℱ₁₃, ℱ₂₃)` with `ℱ_ij = m_i4 γ_j − m_j4 γ_i`. `ℱ₁₂` is an integral for
/// all `b`; the other two only when `b₁ = b₂ = b₃ = 0`.
pub fn hess4_integrals(s: &HessChartState) -> Result<(f64, f64, f64)> {
    check4(s)?;
    let f = |i: usize, j: usize| s.m_d[i] * s.gamma[j] - s.m_d[j] * s.gamma[i];
    Ok((f(0, 1), f(0, 2), f(1, 2)))
}

/// Central-difference step of [`divergence_hess4`].
pub const DIVERGENCE_STEP: f64 = 1e-6;

/// Trace of the Jacobian of [`vf_hess4`] by central differences in each of
/// the seven coordinates. Gravity terms are off-diagonal, so `ρ𝔊𝔐` is irrelevant.
pub fn divergence_hess4(s: &HessChartState, c: &Hess4Coeffs) -> Result<f64> {
    check4(s)?;
    let params = BodyParams::default();
    let flat = s.to_phase().flat;
    let mut div = 0.0;
    for k in 0..7 {
        let mut plus = flat.clone();
        let mut minus = flat.clone();
        plus[k] += DIVERGENCE_STEP;
        minus[k] -= DIVERGENCE_STEP;
        let fp = vf_hess4(&HessChartState::from_phase(4, &PhaseState::flat(plus))?, &params, c)?;
        let fm = vf_hess4(&HessChartState::from_phase(4, &PhaseState::flat(minus))?, &params, c)?;
        let dp = fp.to_phase().flat[k];
        let dm = fm.to_phase().flat[k];
        div += (dp - dm) / (2.0 * DIVERGENCE_STEP);
    }
    Ok(div)
}

/// The seven-dimensional n = 4 system as a [`Flow`].
#[derive(Clone, Debug)]
pub struct Hess4Flow {
    pub coeffs: Hess4Coeffs,
    pub params: BodyParams,
}

impl Flow for Hess4Flow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = HessChartState::from_phase(4, state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: vf_hess4(&s, &self.params, &self.coeffs)?.to_phase().flat,
        })
    }

    fn unit_vector_range(&self) -> Option<Range<usize>> {
        Some(3..7)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::euler_poisson::vf_euler_poisson;
    use crate::dynamics::state::EulerPoissonState;
    use crate::sampling;

    fn coeffs() -> Hess4Coeffs {
        Hess4Coeffs {
            a1: 1.1,
            a2: 1.7,
            a3: 2.3,
            a: 0.9,
            b1: 0.3,
            b2: -0.2,
            b3: 0.45,
        }
    }

    fn random_chart_state(r: &mut sampling::SampleRng, n: usize) -> HessChartState {
        HessChartState::new(sampling::vector(r, n - 1, 1.0), sampling::unit_vector(r, n)).unwrap()
    }

    fn random_ha_operator(r: &mut sampling::SampleRng, n: usize) -> InertiaOperator {
        let k = (n - 1) * (n - 2) / 2;
        let a_k = sampling::spd(r, k, 1.0, 2.0);
        let b = DMatrix::from_fn(k, n - 1, |_, _| sampling::uniform(r, 0.2));
        InertiaOperator::hess_appelrot(n, a_k, b, 1.3).unwrap()
    }

    #[test]
    fn chart_agrees_with_reduced_field() {
        let mut r = sampling::rng(21);
        let p = BodyParams::new(0.6, 1.4).unwrap();
        for n in 3..=6 {
            let op = random_ha_operator(&mut r, n);
            let chart = HessChart::from_operator(&op, p).unwrap();
            for _ in 0..10 {
                let s = random_chart_state(&mut r, n);
                let ep = vf_euler_poisson(&s.to_euler_poisson(), &op, &p).unwrap();
                let hc = chart.vector_field(&s).unwrap();
                assert!((&HessChartState::from_euler_poisson(&ep).m_d - &hc.m_d).amax() < 1e-12);
                assert!((&ep.gamma - &hc.gamma).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn k_rates_vanish_on_invariant_set() {
        let mut r = sampling::rng(22);
        let pair_p = BodyParams::new(1.0, 2.0).unwrap();
        for n in 3..=6 {
            let op = random_ha_operator(&mut r, n);
            let pair = SymmetricPairSplit::new(n);
            for _ in 0..10 {
                let s = random_chart_state(&mut r, n).to_euler_poisson();
                let d = vf_euler_poisson(&s, &op, &pair_p).unwrap();
                assert!(pair.project_k(&d.m).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn dropping_b_keeps_vertical_gamma_rate() {
        let mut r = sampling::rng(23);
        let s = random_chart_state(&mut r, 5);
        let p = BodyParams::default();
        let d = vf_hess_coords(&s, &DMatrix::zeros(6, 4), 0.8, &p).unwrap();
        let expect: f64 = 0.8 * (0..4).map(|j| s.gamma[j] * s.m_d[j]).sum::<f64>();
        assert!((d.gamma[4] - expect).abs() < 1e-15);
        for i in 0..4 {
            assert!((d.m_d[i] + p.weight() * s.gamma[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn chart_integrals_stationary() {
        let mut r = sampling::rng(24);
        let p = BodyParams::new(0.5, 3.0).unwrap();
        for n in 3..=6 {
            let op = random_ha_operator(&mut r, n);
            let chart = HessChart::from_operator(&op, p).unwrap();
            let s = random_chart_state(&mut r, n);
            let d = chart.vector_field(&s).unwrap();
            assert!(s.gamma.dot(&d.gamma).abs() < 1e-14);
            let df1 = chart.a * s.m_d.dot(&d.m_d) + p.weight() * d.gamma[n - 1];
            assert!(df1.abs() < 1e-13);
        }
    }

    #[test]
    fn integrals_at_hanging_state() {
        let mut gamma = DVector::zeros(4);
        gamma[3] = 1.0;
        let s = HessChartState::new(DVector::zeros(3), gamma).unwrap();
        let p = BodyParams::new(0.5, 3.0).unwrap();
        assert_eq!(integrals_hess(&s, 1.0, &p), (1.5, 1.0, 0.0));
    }

    #[test]
    fn hess4_matches_general_chart() {
        let mut r = sampling::rng(25);
        let c = coeffs();
        let p = BodyParams::new(0.7, 1.1).unwrap();
        let op = c.operator().unwrap();
        let chart = HessChart::from_operator(&op, p).unwrap();
        for _ in 0..10 {
            let s = random_chart_state(&mut r, 4);
            let a = vf_hess4(&s, &p, &c).unwrap();
            let b = chart.vector_field(&s).unwrap();
            assert!((a.to_phase().flat - b.to_phase().flat).amax() < 1e-14);
        }
    }

    #[test]
    fn hess4_lagrange_top_limit() {
        let c = Hess4Coeffs {
            a1: 1.5,
            a2: 1.5,
            a3: 1.5,
            a: 0.7,
            b1: 0.0,
            b2: 0.0,
            b3: 0.0,
        };
        let p = BodyParams::new(1.0, 1.0).unwrap();
        let lagrange = InertiaOperator::hess_appelrot(
            4,
            DMatrix::<f64>::identity(3, 3) * 1.5,
            DMatrix::zeros(3, 3),
            0.7,
        )
        .unwrap();
        let mut r = sampling::rng(26);
        for _ in 0..10 {
            let s = random_chart_state(&mut r, 4);
            let h = vf_hess4(&s, &p, &c).unwrap();
            let ep = vf_euler_poisson(&s.to_euler_poisson(), &lagrange, &p).unwrap();
            assert!((&HessChartState::from_euler_poisson(&ep).m_d - &h.m_d).amax() < 1e-14);
            assert!((&ep.gamma - &h.gamma).amax() < 1e-14);
        }
    }

    #[test]
    fn off_set_k_rates_match_full_field() {
        let mut r = sampling::rng(27);
        let c = coeffs();
        let op = c.operator().unwrap();
        for _ in 0..10 {
            let s = EulerPoissonState::new(sampling::skew(&mut r, 4, 1.0), sampling::unit_vector(&mut r, 4))
                .unwrap();
            let d = vf_euler_poisson(&s, &op, &BodyParams::default()).unwrap();
            let (d12, d23, d13) = hess4_k_rates(&s.m, &c).unwrap();
            assert!((d.m.entry(0, 1) - d12).abs() < 1e-13);
            assert!((d.m.entry(1, 2) - d23).abs() < 1e-13);
            assert!((d.m.entry(0, 2) - d13).abs() < 1e-13);
        }
    }

    #[test]
    fn hess4_supplementary_integrals() {
        let mut r = sampling::rng(28);
        let p = BodyParams::new(0.9, 1.2).unwrap();
        let rate = |s: &HessChartState, d: &HessChartState, i: usize, j: usize| {
            d.m_d[i] * s.gamma[j] + s.m_d[i] * d.gamma[j] - d.m_d[j] * s.gamma[i] - s.m_d[j] * d.gamma[i]
        };
        let c = coeffs();
        let mut c0 = c;
        c0.b1 = 0.0;
        c0.b2 = 0.0;
        c0.b3 = 0.0;
        for _ in 0..10 {
            let s = random_chart_state(&mut r, 4);
            let d = vf_hess4(&s, &p, &c).unwrap();
            assert!(rate(&s, &d, 0, 1).abs() < 1e-14);
            let d0 = vf_hess4(&s, &p, &c0).unwrap();
            assert!(rate(&s, &d0, 0, 2).abs() < 1e-14);
            assert!(rate(&s, &d0, 1, 2).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_formula() {
        let mut r = sampling::rng(29);
        let c = coeffs();
        let mut c0 = c;
        c0.b1 = 0.0;
        c0.b2 = 0.0;
        for _ in 0..10 {
            let s = random_chart_state(&mut r, 4);
            let div = divergence_hess4(&s, &c).unwrap();
            assert!((div - (c.b2 * s.m_d[0] - c.b1 * s.m_d[1])).abs() < 1e-6);
            assert!(divergence_hess4(&s, &c0).unwrap().abs() < 1e-6);
        }
        let mut c1 = c0;
        c1.b1 = 1.0;
        let s = HessChartState::new(
            DVector::from_vec(vec![0.4, 2.0, -0.3]),
            DVector::from_vec(vec![0.1, 0.2, 0.3, 0.5]),
        )
        .unwrap();
        assert!((divergence_hess4(&s, &c1).unwrap() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn chart_rejects_generic_operator() {
        let op = InertiaOperator::generic(
            3,
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])),
        )
        .unwrap();
        assert!(HessChart::from_operator(&op, BodyParams::default()).is_err());
    }
}

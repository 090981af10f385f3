//! ℓ-weights of the oscillator and evaluation modules.
//!
//! Every component is a product of factors `(1 − q^e x)^m` where `x = ζ^s u`
//! for plus components and `x = ζ^{-s} u^{-1}` for minus components. The
//! exponents `e` are exact integer linear forms in the weight `μ`, so factor
//! lists can be compared exactly as well as evaluated.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lop::GradingConfig;
use crate::qnum::QContext;

/// Denominators below this magnitude are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-10;

/// `Σ_a mu[a] μ_{a+1} + constant`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QExp {
    pub mu: Vec<i64>,
    pub constant: i64,
}

impl QExp {
    pub fn constant(l: usize, k: i64) -> Self {
        Self {
            mu: vec![0; l + 1],
            constant: k,
        }
    }

    /// `coeff · μ_a + k`, with `a` one-based.
    pub fn mu(l: usize, a: usize, coeff: i64, k: i64) -> Self {
        let mut e = Self::constant(l, k);
        e.mu[a - 1] = coeff;
        e
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mu: self.mu.iter().zip(&other.mu).map(|(a, b)| a + b).collect(),
            constant: self.constant + other.constant,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            mu: self.mu.iter().map(|c| -c).collect(),
            constant: -self.constant,
        }
    }

    pub fn eval(&self, mu: &[f64]) -> f64 {
        self.constant as f64 + self.mu.iter().zip(mu).map(|(&c, &m)| c as f64 * m).sum::<f64>()
    }
}

impl std::fmt::Display for QExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (a, &c) in self.mu.iter().enumerate() {
            if c != 0 {
                write!(f, "{c:+}μ{} ", a + 1)?;
            }
        }
        write!(f, "{:+}", self.constant)
    }
}

/// `Π_e (1 − q^e x)^{m_e}`, with zero multiplicities removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorList {
    factors: BTreeMap<QExp, i32>,
}

impl FactorList {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn push(&mut self, e: QExp, m: i32) {
        let entry = self.factors.entry(e.clone()).or_insert(0);
        *entry += m;
        if *entry == 0 {
            self.factors.remove(&e);
        }
    }

    pub fn num(mut self, e: QExp) -> Self {
        self.push(e, 1);
        self
    }

    pub fn den(mut self, e: QExp) -> Self {
        self.push(e, -1);
        self
    }

    pub fn factors(&self) -> impl Iterator<Item = (&QExp, i32)> {
        self.factors.iter().map(|(e, &m)| (e, m))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, m) in other.factors() {
            out.push(e.clone(), m);
        }
        out
    }

    /// Substitutes `x → q^s x`.
    pub fn shift(&self, s: &QExp) -> Self {
        let mut out = Self::one();
        for (e, m) in self.factors() {
            out.push(e.add(s), m);
        }
        out
    }

    /// Substitutes `q → q^{-1}`.
    pub fn mirror(&self) -> Self {
        let mut out = Self::one();
        for (e, m) in self.factors() {
            out.push(e.neg(), m);
        }
        out
    }

    pub fn eval(&self, mu: &[f64], x: Complex64, ctx: &QContext) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for (e, m) in self.factors() {
            let f = Complex64::new(1.0, 0.0) - ctx.qpow_real(e.eval(mu)) * x;
            if m < 0 && f.norm() < POLE_THRESHOLD {
                return Err(Error::LWeightPole {
                    exponent: e.to_string(),
                    magnitude: f.norm(),
                });
            }
            acc *= f.powi(m);
        }
        Ok(acc)
    }
}

/// An ℓ-weight: weight part in the ω basis and its `±` components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LWeight {
    pub l: usize,
    pub weight: Vec<QExp>,
    pub plus: Vec<FactorList>,
    pub minus: Option<Vec<FactorList>>,
}

impl LWeight {
    pub fn trivial(l: usize) -> Self {
        Self {
            l,
            weight: vec![QExp::constant(l, 0); l],
            plus: vec![FactorList::one(); l],
            minus: Some(vec![FactorList::one(); l]),
        }
    }

    /// The product rule: weights add, components multiply.
    pub fn mul(&self, other: &Self) -> Self {
        let minus = match (&self.minus, &other.minus) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x.mul(y)).collect()),
            _ => None,
        };
        Self {
            l: self.l,
            weight: self.weight.iter().zip(&other.weight).map(|(a, b)| a.add(b)).collect(),
            plus: self.plus.iter().zip(&other.plus).map(|(a, b)| a.mul(b)).collect(),
            minus,
        }
    }

    /// The ℓ-weight of the module with spectral parameter `q^{e/s} ζ`.
    pub fn shifted(&self, e: &QExp) -> Self {
        Self {
            l: self.l,
            weight: self.weight.clone(),
            plus: self.plus.iter().map(|f| f.shift(e)).collect(),
            minus: self
                .minus
                .as_ref()
                .map(|v| v.iter().map(|f| f.shift(&e.neg())).collect()),
        }
    }

    pub fn weight_at(&self, mu: &[f64]) -> Vec<f64> {
        self.weight.iter().map(|w| w.eval(mu)).collect()
    }

    /// `Λ^+_i(ζ, u)` with `i` one-based.
    pub fn plus_at(
        &self,
        i: usize,
        mu: &[f64],
        zeta: Complex64,
        u: Complex64,
        grading: &GradingConfig,
        ctx: &QContext,
    ) -> Result<Complex64> {
        let x = zeta.powi(grading.total() as i32) * u;
        self.plus[i - 1].eval(mu, x, ctx)
    }

    /// `Λ^-_i(ζ, u)`, a function of `ζ^{-s} u^{-1}`.
    pub fn minus_at(
        &self,
        i: usize,
        mu: &[f64],
        zeta: Complex64,
        u: Complex64,
        grading: &GradingConfig,
        ctx: &QContext,
    ) -> Result<Option<Complex64>> {
        let Some(minus) = &self.minus else {
            return Ok(None);
        };
        let x = (zeta.powi(grading.total() as i32) * u).inv();
        minus[i - 1].eval(mu, x, ctx).map(Some)
    }
}

/// `Σ_{j=lo}^{hi} v_j` over one-based indices; empty when `lo > hi`.
fn range_sum(v: &[i64], lo: i64, hi: i64) -> i64 {
    (lo..=hi).map(|j| v[(j - 1) as usize]).sum()
}

/// The ℓ-weight `Ψ_{a,𝐧}` of the oscillator module `W_a` on the basis vector labelled `𝐧`.
pub fn osc_psi(a: usize, n: &[i64], l: usize) -> Result<LWeight> {
    if a == 0 || a > l + 1 {
        return Err(Error::InvalidIndex(format!("oscillator module {a} for l = {l}")));
    }
    if n.len() != l {
        return Err(Error::InvalidIndex(format!(
            "level tuple of length {} for l = {l}",
            n.len()
        )));
    }
    let li = l as i64;
    let ai = a as i64;
    let s = |lo: i64, hi: i64| range_sum(n, lo, hi);
    let c = |k: i64| QExp::constant(l, k);
    let nj = |j: i64| n[(j - 1) as usize];
    let mut weight = vec![0i64; l];
    let mut plus = vec![FactorList::one(); l];
    if a == 1 {
        weight[0] = -(2 * nj(1) + s(2, li) + li + 1);
        for i in 2..=li {
            weight[(i - 1) as usize] = -(nj(i) - nj(i - 1));
        }
        plus[0] = FactorList::one()
            .num(c(-2 * s(2, li) - li + 2))
            .den(c(-2 * s(1, li) - li))
            .den(c(-2 * s(1, li) - li + 2));
        for i in 2..=li {
            plus[(i - 1) as usize] = FactorList::one()
                .num(c(-2 * s(i - 1, li) - li + i - 1))
                .den(c(-2 * s(i, li) - li + i - 1))
                .num(c(-2 * s(i + 1, li) - li + i + 1))
                .den(c(-2 * s(i, li) - li + i + 1));
        }
    } else if a <= l {
        let top = li - ai + 1;
        for i in 1..=ai - 2 {
            weight[(i - 1) as usize] = nj(li + i - ai + 2) - nj(li + i - ai + 1);
        }
        for i in ai + 1..=li {
            weight[(i - 1) as usize] = -(nj(i - ai + 1) - nj(i - ai));
        }
        weight[a - 2] = s(1, top) - s(top + 1, li - 1) - 2 * nj(li) + li - ai + 1;
        weight[a - 1] = -(2 * nj(1) + s(2, top) - s(top + 1, li) + li - ai + 2);
        plus[a - 2] = FactorList::one().num(c(-2 * s(1, top) - li + ai));
        plus[a - 1] = FactorList::one()
            .num(c(-2 * s(2, top) - li + ai + 1))
            .den(c(-2 * s(1, top) - li + ai - 1))
            .den(c(-2 * s(1, top) - li + ai + 1));
        for i in ai + 1..=li {
            plus[(i - 1) as usize] = FactorList::one()
                .num(c(-2 * s(i - ai, top) - li + i - 1))
                .den(c(-2 * s(i - ai + 1, top) - li + i - 1))
                .num(c(-2 * s(i - ai + 2, top) - li + i + 1))
                .den(c(-2 * s(i - ai + 1, top) - li + i + 1));
        }
    } else {
        for i in 1..li {
            weight[(i - 1) as usize] = nj(i + 1) - nj(i);
        }
        weight[l - 1] = -(s(1, li - 1) + 2 * nj(li));
        plus[l - 1] = FactorList::one().num(c(1));
    }
    Ok(LWeight {
        l,
        weight: weight.into_iter().map(c).collect(),
        plus,
        minus: None,
    })
}

/// `ρ_a = l/2 − a + 1`, doubled to stay integral.
fn two_rho(a: usize, l: usize) -> i64 {
    l as i64 - 2 * a as i64 + 2
}

/// `2(μ_a + ρ_a)`, the exponent taking `ζ^s` to `(ζ^μ_a)^s`.
pub fn zeta_mu_exponent(a: usize, l: usize) -> QExp {
    QExp::mu(l, a, 2, two_rho(a, l))
}

/// `ζ^μ_a = q^{2(μ_a + ρ_a)/s} ζ`.
pub fn zeta_mu(a: usize, mu: &[f64], zeta: Complex64, grading: &GradingConfig, ctx: &QContext) -> Complex64 {
    let l = mu.len() - 1;
    let rho = two_rho(a, l) as f64 / 2.0;
    ctx.qpow_real(2.0 * (mu[a - 1] + rho) / grading.total() as f64) * zeta
}

/// Highest ℓ-weight of the evaluation module of highest weight `μ`.
pub fn highest_lweight(l: usize) -> LWeight {
    let mut weight = Vec::with_capacity(l);
    let mut plus = Vec::with_capacity(l);
    let mut minus = Vec::with_capacity(l);
    for i in 1..=l {
        let ii = i as i64;
        let mut w = QExp::constant(l, 0);
        w.mu[i - 1] = 1;
        w.mu[i] = -1;
        weight.push(w);
        plus.push(
            FactorList::one()
                .num(QExp::mu(l, i + 1, 2, 1 - ii))
                .den(QExp::mu(l, i, 2, 1 - ii)),
        );
        minus.push(
            FactorList::one()
                .num(QExp::mu(l, i + 1, -2, ii - 1))
                .den(QExp::mu(l, i, -2, ii - 1)),
        );
    }
    LWeight {
        l,
        weight,
        plus,
        minus: Some(minus),
    }
}

/// `δ = Σ_i (−2 − μ_i + μ_{i+1}) ω_i`.
pub fn delta(l: usize) -> Vec<QExp> {
    (1..=l)
        .map(|i| {
            let mut w = QExp::constant(l, -2);
            w.mu[i - 1] = -1;
            w.mu[i] = 1;
            w
        })
        .collect()
}

/// `Π_a Ψ_{a,𝐧_a}(ζ^μ_a)` as an exact ℓ-weight.
pub fn shifted_osc_product(n_full: &[Vec<i64>], l: usize) -> Result<LWeight> {
    let mut acc = LWeight::trivial(l);
    acc.minus = None;
    for a in 1..=l + 1 {
        acc = acc.mul(&osc_psi(a, &n_full[a - 1], l)?.shifted(&zeta_mu_exponent(a, l)));
    }
    Ok(acc)
}

/// Result of comparing the shifted oscillator product with the evaluation highest ℓ-weight.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftedProductReport {
    pub l: usize,
    pub mu: Vec<f64>,
    pub samples: usize,
    pub residual: f64,
    pub factors_match: bool,
    pub weight_match: bool,
}

/// Relative residual of `Π_a Ψ^+_{a,0,i}(ζ^μ_a, u) = Λ^{μ+}_{0,i}(ζ, u)` over
/// all `i` and samples, together with exact factor and weight comparisons.
pub fn check_shifted_product(
    mu: &[f64],
    samples: &[(Complex64, Complex64)],
    grading: &GradingConfig,
    ctx: &QContext,
) -> Result<ShiftedProductReport> {
    let l = mu.len() - 1;
    let zero = vec![0i64; l];
    let psis = (1..=l + 1).map(|a| osc_psi(a, &zero, l)).collect::<Result<Vec<_>>>()?;
    let lambda = highest_lweight(l);
    let mut residual: f64 = 0.0;
    for &(zeta, u) in samples {
        for i in 1..=l {
            let mut lhs = Complex64::new(1.0, 0.0);
            for (a, psi) in psis.iter().enumerate() {
                lhs *= psi.plus_at(i, mu, zeta_mu(a + 1, mu, zeta, grading, ctx), u, grading, ctx)?;
            }
            let rhs = lambda.plus_at(i, mu, zeta, u, grading, ctx)?;
            residual = residual.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0));
        }
    }
    let zeros = vec![zero; l + 1];
    let product = shifted_osc_product(&zeros, l)?;
    let shifted_lambda: Vec<QExp> = lambda.weight.iter().zip(delta(l)).map(|(w, d)| w.add(&d)).collect();
    Ok(ShiftedProductReport {
        l,
        mu: mu.to_vec(),
        samples: samples.len(),
        residual,
        factors_match: product.plus == lambda.plus,
        weight_match: product.weight == shifted_lambda,
    })
}

fn n_at(n_full: &[Vec<i64>], a: i64, j: i64) -> i64 {
    n_full[(a - 1) as usize][(j - 1) as usize]
}

/// Factor list of `Ξ^{μ+}_{𝐧,i}`, the plus component of the ℓ-weight labelled
/// by the full oscillator tuple `n_full[a−1][j−1] = n_{a,j}`.
pub fn xi_factors(n_full: &[Vec<i64>], i: usize, l: usize) -> FactorList {
    let (li, ii) = (l as i64, i as i64);
    let sum = |a: i64, lo: i64| range_sum(&n_full[(a - 1) as usize], lo, li - a + 1);
    let e = |a: i64, lo: i64, k: i64| QExp::mu(l, a as usize, 2, -2 * sum(a, lo) + ii - 2 * a + k);
    let mut f = FactorList::one();
    for a in 1..ii {
        f.push(e(a, ii - a, 1), 1);
    }
    for a in 1..=ii {
        f.push(e(a, ii - a + 1, 1), -1);
        f.push(e(a, ii - a + 1, 3), -1);
    }
    for a in 1..=ii + 1 {
        f.push(e(a, ii - a + 2, 3), 1);
    }
    f
}

/// `Ξ^{μ+}_{𝐧,i}(ζ, u)`.
pub fn conjectured_xi(
    mu: &[f64],
    n_full: &[Vec<i64>],
    i: usize,
    zeta: Complex64,
    u: Complex64,
    grading: &GradingConfig,
    ctx: &QContext,
) -> Result<Complex64> {
    let l = mu.len() - 1;
    let x = zeta.powi(grading.total() as i32) * u;
    xi_factors(n_full, i, l).eval(mu, x, ctx)
}

/// `ξ^μ_𝐧` in the ω basis.
pub fn xi_weight(n_full: &[Vec<i64>], l: usize) -> Vec<i64> {
    let li = l as i64;
    let n = |a: i64, j: i64| n_at(n_full, a, j);
    (1..=li)
        .map(|i| {
            let mut w = -2 - 2 * n(i, 1) - 2 * n(i + 1, li);
            for k in 1..i {
                w += n(k, i - k) - n(k, i - k + 1) + n(i, k - i + li + 1) - n(i + 1, k - i + li);
            }
            for k in i + 2..=li + 1 {
                w -= n(i, k - i) - n(i + 1, k - i - 1) + n(k, i - k + li + 1) - n(k, i - k + li + 2);
            }
            w
        })
        .collect()
}

/// Whether `n_{a,i}` belongs to the part `𝐧'` with `a + i > l + 1`.
pub fn is_primed(a: usize, i: usize, l: usize) -> bool {
    a + i > l + 1
}

/// `m_{a,j} = n_{a,j−a}` for `a < j ≤ l + 1`, stored as `m[a−1][j−1]`.
pub fn m_from_n(n_full: &[Vec<i64>], l: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0; l + 1]; l + 1];
    for a in 1..=l + 1 {
        for j in a + 1..=l + 1 {
            m[a - 1][j - 1] = n_full[a - 1][j - a - 1];
        }
    }
    m
}

/// `λ^μ_𝐦` in the ω basis.
pub fn lambda_m_weight(m: &[Vec<i64>], l: usize) -> Vec<QExp> {
    let mm = |a: usize, j: usize| m[a - 1][j - 1];
    (1..=l)
        .map(|i| {
            let mut k0 = -2 * mm(i, i + 1);
            for k in 1..i {
                k0 += mm(k, i) - mm(k, i + 1);
            }
            for k in i + 2..=l + 1 {
                k0 -= mm(i, k) - mm(i + 1, k);
            }
            let mut w = QExp::constant(l, k0);
            w.mu[i - 1] = 1;
            w.mu[i] = -1;
            w
        })
        .collect()
}

/// `δ_{𝐧'}`, the weight shift attached to the primed part of `𝐧`.
pub fn delta_n_prime(n_full: &[Vec<i64>], l: usize) -> Vec<QExp> {
    let li = l as i64;
    let n = |a: i64, j: i64| n_at(n_full, a, j);
    delta(l)
        .into_iter()
        .enumerate()
        .map(|(idx, mut w)| {
            let i = idx as i64 + 1;
            let mut k0 = -2 * n(i + 1, li);
            for k in 1..i {
                k0 += n(i, k - i + li + 1) - n(i + 1, k - i + li);
            }
            for k in i + 2..=li + 1 {
                k0 -= n(k, i - k + li + 1) - n(k, i - k + li + 2);
            }
            w.constant += k0;
            w
        })
        .collect()
}

/// Plus and minus factor lists of the conjectured ℓ-weight `Λ^μ_𝐦` of the
/// evaluation module, component `i`.
pub fn lambda_m_components(m: &[Vec<i64>], i: usize, l: usize) -> (FactorList, FactorList) {
    let ii = i as i64;
    let tail = |a: usize, lo: usize| (lo..=l + 1).map(|j| m[a - 1][j - 1]).sum::<i64>();
    let mut plus = FactorList::one();
    let mut minus = FactorList::one();
    let mut add = |a: usize, lo: usize, k: i64, mult: i32| {
        let ai = a as i64;
        plus.push(QExp::mu(l, a, 2, -2 * tail(a, lo) + ii - 2 * ai + k), mult);
        minus.push(QExp::mu(l, a, -2, 2 * tail(a, lo) - ii + 2 * ai - k), mult);
    };
    for a in 1..i {
        add(a, i, 1, 1);
    }
    for a in 1..=i {
        add(a, i + 1, 1, -1);
        add(a, i + 1, 3, -1);
    }
    for a in 1..=i + 1 {
        add(a, i + 2, 3, 1);
    }
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> QContext {
        QContext::real(0.7).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn random_n(rng: &mut ChaCha8Rng, l: usize) -> Vec<Vec<i64>> {
        (0..=l).map(|_| (0..l).map(|_| rng.gen_range(0..4)).collect()).collect()
    }

    #[test]
    fn last_oscillator_components() {
        for l in 1..=4 {
            let psi = osc_psi(l + 1, &vec![3; l], l).unwrap();
            for i in 1..l {
                assert!(psi.plus[i - 1].is_one());
            }
            let g = GradingConfig::uniform(l);
            let v = psi.plus_at(l, &vec![0.0; l + 1], c(0.6), c(0.9), &g, &ctx()).unwrap();
            let x = 0.6f64.powi(l as i32 + 1) * 0.9;
            assert!((v - c(1.0 - 0.7 * x)).norm() < 1e-14);
        }
    }

    #[test]
    fn first_oscillator_by_hand() {
        let g = GradingConfig::uniform(2);
        let psi = osc_psi(1, &[0, 0], 2).unwrap();
        let x = 0.3f64.powi(3) * 0.5;
        let q = 0.7f64;
        let one = (1.0 - x) / ((1.0 - x / (q * q)) * (1.0 - x));
        let two = (1.0 - q.powi(-1) * x) / (1.0 - q.powi(-1) * x) * (1.0 - q * x) / (1.0 - q * x);
        let mu = [0.0; 3];
        assert!((psi.plus_at(1, &mu, c(0.3), c(0.5), &g, &ctx()).unwrap() - c(one)).norm() < 1e-14);
        assert!((psi.plus_at(2, &mu, c(0.3), c(0.5), &g, &ctx()).unwrap() - c(two)).norm() < 1e-14);
        let w = psi.weight_at(&mu);
        assert_eq!(w, vec![-3.0, 0.0]);
    }

    #[test]
    fn invalid_oscillator_index() {
        assert!(osc_psi(0, &[0], 1).is_err());
        assert!(osc_psi(3, &[0], 1).is_err());
        assert!(osc_psi(1, &[0, 0], 1).is_err());
    }

    #[test]
    fn highest_lweight_examples() {
        let g = GradingConfig::uniform(1);
        let lam = highest_lweight(1);
        let mu = [1.0, 0.0];
        let (z, u) = (c(0.4), c(1.3));
        let x = 0.4f64.powi(2) * 1.3;
        let want = (1.0 - x) / (1.0 - 0.49 * x);
        assert!((lam.plus_at(1, &mu, z, u, &g, &ctx()).unwrap() - c(want)).norm() < 1e-14);
        assert_eq!(lam.weight_at(&mu), vec![1.0]);

        let l = 3;
        let g = GradingConfig::uniform(l);
        let flat = [0.37; 4];
        let lam = highest_lweight(l);
        assert!(lam.weight_at(&flat).iter().all(|w| w.abs() < 1e-15));
        for i in 1..=l {
            let p = lam.plus_at(i, &flat, z, u, &g, &ctx()).unwrap();
            let m = lam.minus_at(i, &flat, z, u, &g, &ctx()).unwrap().unwrap();
            assert!((p - 1.0).norm() < 1e-14 && (m - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn minus_components_mirror_plus() {
        for l in 1..=3 {
            let lam = highest_lweight(l);
            let minus = lam.minus.as_ref().unwrap();
            for (m, p) in minus.iter().zip(&lam.plus) {
                assert_eq!(*m, p.mirror());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for l in 1..=3 {
            let m = m_from_n(&random_n(&mut rng, l), l);
            for i in 1..=l {
                let (p, mi) = lambda_m_components(&m, i, l);
                assert_eq!(mi, p.mirror());
            }
        }
    }

    #[test]
    fn delta_matches_weight_gap() {
        for l in 1..=4 {
            let zeros = vec![vec![0; l]; l + 1];
            let prod = shifted_osc_product(&zeros, l).unwrap();
            let lam = highest_lweight(l);
            let d: Vec<QExp> = prod
                .weight
                .iter()
                .zip(&lam.weight)
                .map(|(p, w)| p.add(&w.neg()))
                .collect();
            assert_eq!(d, delta(l));
        }
    }

    #[test]
    fn shifted_product_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for l in 1..=3 {
            let g = GradingConfig::uniform(l);
            let mu: Vec<f64> = (0..=l).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let samples: Vec<_> = (0..10)
                .map(|_| {
                    (
                        c(rng.gen_range(0.2..0.9)),
                        Complex64::from_polar(rng.gen_range(0.3..1.2), rng.gen_range(0.0..6.0)),
                    )
                })
                .collect();
            let r = check_shifted_product(&mu, &samples, &g, &ctx()).unwrap();
            assert!(r.residual < 1e-10, "l = {l}: {}", r.residual);
            assert!(r.factors_match && r.weight_match);
        }
    }

    #[test]
    fn zero_tuple_reduces_to_highest() {
        for l in 1..=3 {
            let zeros = vec![vec![0; l]; l + 1];
            let lam = highest_lweight(l);
            for i in 1..=l {
                assert_eq!(xi_factors(&zeros, i, l), lam.plus[i - 1]);
            }
            let xi: Vec<QExp> = xi_weight(&zeros, l).into_iter().map(|k| QExp::constant(l, k)).collect();
            let want: Vec<QExp> = lam.weight.iter().zip(delta(l)).map(|(w, d)| w.add(&d)).collect();
            assert_eq!(xi, want);
        }
    }

    #[test]
    fn xi_is_the_shifted_oscillator_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in 1..=4 {
            for _ in 0..20 {
                let n = random_n(&mut rng, l);
                let prod = shifted_osc_product(&n, l).unwrap();
                for i in 1..=l {
                    assert_eq!(prod.plus[i - 1], xi_factors(&n, i, l), "l = {l}, n = {n:?}, i = {i}");
                }
                let w: Vec<i64> = prod.weight.iter().map(|e| e.constant).collect();
                assert_eq!(w, xi_weight(&n, l), "l = {l}, n = {n:?}");
            }
        }
    }

    #[test]
    fn xi_ignores_primed_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for l in 1..=4 {
            for _ in 0..20 {
                let n = random_n(&mut rng, l);
                let mut bumped = n.clone();
                for a in 1..=l + 1 {
                    for j in 1..=l {
                        if is_primed(a, j, l) {
                            bumped[a - 1][j - 1] += rng.gen_range(1..5);
                        }
                    }
                }
                for i in 1..=l {
                    assert_eq!(xi_factors(&n, i, l), xi_factors(&bumped, i, l));
                }
            }
        }
    }

    #[test]
    fn substitution_gives_evaluation_lweights() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for l in 1..=4 {
            for _ in 0..20 {
                let n = random_n(&mut rng, l);
                let m = m_from_n(&n, l);
                for i in 1..=l {
                    assert_eq!(xi_factors(&n, i, l), lambda_m_components(&m, i, l).0);
                }
            }
        }
    }

    #[test]
    fn weights_split_into_shifted_evaluation_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for l in 1..=3 {
            for _ in 0..50 {
                let n = random_n(&mut rng, l);
                let m = m_from_n(&n, l);
                let lhs: Vec<QExp> = xi_weight(&n, l).into_iter().map(|k| QExp::constant(l, k)).collect();
                let rhs: Vec<QExp> = lambda_m_weight(&m, l)
                    .iter()
                    .zip(delta_n_prime(&n, l))
                    .map(|(a, b)| a.add(&b))
                    .collect();
                assert_eq!(lhs, rhs, "l = {l}, n = {n:?}");
            }
        }
    }

    #[test]
    fn conjectured_xi_matches_factor_product_numerically() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let l = 3;
        let g = GradingConfig::uniform(l);
        for _ in 0..10 {
            let n = random_n(&mut rng, l);
            let mu: Vec<f64> = (0..=l).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (z, u) = (c(rng.gen_range(0.2..0.8)), c(rng.gen_range(0.3..1.0)));
            for i in 1..=l {
                let mut direct = c(1.0);
                for a in 1..=l + 1 {
                    let psi = osc_psi(a, &n[a - 1], l).unwrap();
                    direct *= psi
                        .plus_at(i, &mu, zeta_mu(a, &mu, z, &g, &ctx()), u, &g, &ctx())
                        .unwrap();
                }
                let xi = conjectured_xi(&mu, &n, i, z, u, &g, &ctx()).unwrap();
                assert!((xi - direct).norm() < 1e-10 * direct.norm().max(1.0));
            }
        }
    }

    #[test]
    fn pole_is_reported() {
        let f = FactorList::one().den(QExp::constant(1, 0));
        assert!(matches!(
            f.eval(&[0.0, 0.0], c(1.0), &ctx()),
            Err(Error::LWeightPole { .. })
        ));
    }

    proptest! {
        #[test]
        fn product_rule_is_pointwise(
            l in 1usize..4,
            a in 1usize..5,
            b in 1usize..5,
            k in 0i64..3,
            mu0 in -1.0f64..1.0,
            zr in 0.2f64..0.8,
            ur in 0.2f64..1.0,
        ) {
            let a = a.min(l + 1);
            let b = b.min(l + 1);
            let g = GradingConfig::uniform(l);
            let mu: Vec<f64> = (0..=l).map(|j| mu0 + 0.3 * j as f64).collect();
            let x = osc_psi(a, &vec![k; l], l).unwrap();
            let y = highest_lweight(l).mul(&osc_psi(b, &vec![0; l], l).unwrap());
            let xy = x.mul(&y);
            for i in 1..=l {
                let px = x.plus_at(i, &mu, c(zr), c(ur), &g, &ctx()).unwrap();
                let py = y.plus_at(i, &mu, c(zr), c(ur), &g, &ctx()).unwrap();
                let pxy = xy.plus_at(i, &mu, c(zr), c(ur), &g, &ctx()).unwrap();
                prop_assert!((pxy - px * py).norm() < 1e-10 * pxy.norm().max(1.0));
            }
            let wsum: Vec<f64> = x.weight_at(&mu).iter().zip(y.weight_at(&mu)).map(|(p, q)| p + q).collect();
            for (w, v) in xy.weight_at(&mu).iter().zip(wsum) {
                prop_assert!((w - v).abs() < 1e-12);
            }
        }
    }
}

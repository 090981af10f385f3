//! Functional relations between transfer operators and Q-operators: the
//! determinant representation, master TQ and TT relations, T-system,
//! Jacobi–Trudi identities, the QQ Jacobi identity, symmetry checks, and a
//! comparison with the transfer matrix built from R-matrices.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fundrep::direct_transfer;
use crate::linalg::{operator_det, rel_commutator, rel_diff, CMat, RESIDUAL_FLOOR};
use crate::qop::Chain;
use crate::rootdata::{affine_action, rho, WeylElement};

/// Default tolerance for relations evaluated on exact traces.
pub const EXACT_TOLERANCE: f64 = 1e-8;
/// Default tolerance for the comparison with the R-matrix transfer matrix.
pub const DIRECT_TOLERANCE: f64 = 1e-6;

/// Outcome of one relation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: String,
    pub parameters: String,
    pub residual: f64,
    /// Norm the residual was divided by.
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl RelationReport {
    pub fn new(relation: &str, parameters: String, residual: f64, scale: f64, tolerance: f64) -> Self {
        Self {
            relation: relation.to_string(),
            parameters,
            residual,
            scale,
            tolerance,
            pass: residual.is_finite() && residual < tolerance,
        }
    }
}

/// `T^μ(ζ)` as obtained from the determinant representation.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFromQ {
    pub mu: Vec<Complex64>,
    pub zeta: Complex64,
    pub matrix: CMat,
}

/// `‖LHS − RHS‖ / max(‖LHS‖, ‖RHS‖)` with the scale returned alongside.
fn equality(lhs: &CMat, rhs: &CMat) -> (f64, f64) {
    let scale = lhs.norm().max(rhs.norm()).max(RESIDUAL_FLOOR);
    ((lhs - rhs).norm() / scale, scale)
}

/// `‖Σ terms‖ / max ‖term‖`.
fn vanishing_sum(terms: &[CMat]) -> (f64, f64) {
    let mut acc = CMat::zeros(terms[0].nrows(), terms[0].ncols());
    let mut scale: f64 = RESIDUAL_FLOOR;
    for t in terms {
        acc += t;
        scale = scale.max(t.norm());
    }
    (acc.norm() / scale, scale)
}

fn fmt_tuple(v: &[Complex64]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{}", z.re)
            } else {
                format!("{z}")
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

fn real(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Evaluates transfer operators through universal Q-operators on one chain,
/// memoizing `Q_a` at each spectral point.
pub struct Relations<'a> {
    pub chain: &'a Chain,
    c_l_inv: DVector<Complex64>,
    rho: Vec<f64>,
    cache: Mutex<HashMap<(usize, u64, u64), CMat>>,
}

impl<'a> Relations<'a> {
    pub fn new(chain: &'a Chain) -> Result<Self> {
        let c_l_inv = chain.c_l_diagonal()?.map(|v| v.inv());
        let rho = rho(chain.l).iter().map(|r| r.to_f64().unwrap()).collect();
        Ok(Self {
            chain,
            c_l_inv,
            rho,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn l(&self) -> usize {
        self.chain.l
    }

    fn identity(&self) -> CMat {
        CMat::identity(self.chain.dim(), self.chain.dim())
    }

    /// Universal `Q_a(ζ)`.
    pub fn q(&self, a: usize, zeta: Complex64) -> Result<CMat> {
        let key = (a, zeta.re.to_bits(), zeta.im.to_bits());
        if let Some(m) = self.cache.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let m = self.chain.q_universal(a, zeta)?.matrix;
        self.cache.lock().unwrap().insert(key, m.clone());
        Ok(m)
    }

    /// Every memoized `(a, ζ, Q_a(ζ))`, sorted by `a` and then by the bits of `ζ`.
    pub fn cached(&self) -> Vec<(usize, Complex64, CMat)> {
        let cache = self.cache.lock().unwrap();
        let mut keys: Vec<_> = cache.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| {
                (
                    k.0,
                    Complex64::new(f64::from_bits(k.1), f64::from_bits(k.2)),
                    cache[&k].clone(),
                )
            })
            .collect()
    }

    /// Seeds the memo with a precomputed universal `Q_a(ζ)`.
    pub fn preload(&self, a: usize, zeta: Complex64, matrix: CMat) {
        self.cache
            .lock()
            .unwrap()
            .insert((a, zeta.re.to_bits(), zeta.im.to_bits()), matrix);
    }

    /// `q^{x/s} ζ` for complex `x`.
    pub fn shift(&self, zeta: Complex64, x: Complex64) -> Complex64 {
        self.chain.ctx.qpow(x / self.chain.s()) * zeta
    }

    /// `det(Q_a(q^{2ν_b/s} ζ))_{a,b}` divided sector-wise by `ψ(C_l)`.
    fn det_over_c(&self, nu: &[Complex64], zeta: Complex64) -> Result<CMat> {
        let l = self.l();
        let m: Vec<Vec<CMat>> = (1..=l + 1)
            .map(|a| {
                nu.iter()
                    .map(|&x| self.q(a, self.shift(zeta, 2.0 * x)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut d = operator_det(&m);
        for (i, mut row) in d.row_iter_mut().enumerate() {
            row *= self.c_l_inv[i];
        }
        Ok(d)
    }

    /// `T^μ(ζ) = C_l^{−1} det(Q_a(q^{2(μ_b+ρ_b)/s} ζ))`.
    pub fn transfer(&self, mu: &[Complex64], zeta: Complex64) -> Result<TransferFromQ> {
        assert_eq!(mu.len(), self.l() + 1, "weight must have l+1 components");
        let nu: Vec<Complex64> = mu.iter().zip(&self.rho).map(|(m, r)| m + r).collect();
        Ok(TransferFromQ {
            mu: mu.to_vec(),
            zeta,
            matrix: self.det_over_c(&nu, zeta)?,
        })
    }

    /// `S^μ(ζ) = T^{μ−ρ}(ζ)`.
    pub fn s_op(&self, mu: &[Complex64], zeta: Complex64) -> Result<CMat> {
        assert_eq!(mu.len(), self.l() + 1, "weight must have l+1 components");
        self.det_over_c(mu, zeta)
    }

    /// `T^{mω_a}` as an ε-basis tuple.
    pub fn rectangle(&self, a: usize, m: i64) -> Vec<Complex64> {
        (1..=self.l() + 1)
            .map(|i| Complex64::new(if i <= a { m as f64 } else { 0.0 }, 0.0))
            .collect()
    }

    /// `T_{a,m}(ζ) = T^{mω_a}(q^{(a−m)/s} ζ)`, with `T_{0,m} = T_{l+1,m} = T_{a,0} = 1`.
    pub fn t_am(&self, a: usize, m: i64, zeta: Complex64) -> Result<CMat> {
        if a == 0 || a == self.l() + 1 || m == 0 {
            return Ok(self.identity());
        }
        let z = self.shift(zeta, Complex64::new(a as f64 - m as f64, 0.0));
        Ok(self.transfer(&self.rectangle(a, m), z)?.matrix)
    }

    /// `T_{a,1}` extended by zero outside `0..=l+1`.
    fn t_a1(&self, a: i64, zeta: Complex64) -> Result<CMat> {
        if a < 0 || a > self.l() as i64 + 1 {
            return Ok(CMat::zeros(self.chain.dim(), self.chain.dim()));
        }
        self.t_am(a as usize, 1, zeta)
    }

    /// `Σ_b (−1)^{b−1} S^{μ̂_b}(ζ) Q_a(q^{2μ_b/s} ζ) = 0` for an `(l+2)`-tuple.
    pub fn check_master_tq(&self, a: usize, mu: &[Complex64], zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let l = self.l();
        assert_eq!(mu.len(), l + 2, "master TQ needs l+2 values");
        let terms = (0..l + 2)
            .map(|b| {
                let hat: Vec<Complex64> = mu
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != b)
                    .map(|(_, &x)| x)
                    .collect();
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                Ok(self.s_op(&hat, zeta)? * self.q(a, self.shift(zeta, 2.0 * mu[b]))? * Complex64::new(sign, 0.0))
            })
            .collect::<Result<Vec<_>>>()?;
        let (r, s) = vanishing_sum(&terms);
        Ok(RelationReport::new(
            "master-tq",
            format!("a={a} mu={} zeta={zeta}", fmt_tuple(mu)),
            r,
            s,
            tol,
        ))
    }

    /// `Σ_b (−1)^b S^{μ_1..μ̂_b..μ_{l+2}}(ζ) S^{μ_b, μ_{l+3}..μ_{2l+2}}(ζ) = 0`.
    pub fn check_master_tt(&self, mu: &[Complex64], zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let terms = self.master_tt_terms(mu, zeta)?;
        let (r, s) = vanishing_sum(&terms);
        Ok(RelationReport::new(
            "master-tt",
            format!("mu={} zeta={zeta}", fmt_tuple(mu)),
            r,
            s,
            tol,
        ))
    }

    /// The `l+2` summands of the master TT relation.
    pub fn master_tt_terms(&self, mu: &[Complex64], zeta: Complex64) -> Result<Vec<CMat>> {
        let l = self.l();
        assert_eq!(mu.len(), 2 * l + 2, "master TT needs 2l+2 values");
        (0..l + 2)
            .map(|b| {
                let hat: Vec<Complex64> = mu[..l + 2]
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != b)
                    .map(|(_, &x)| x)
                    .collect();
                let mut tail = vec![mu[b]];
                tail.extend_from_slice(&mu[l + 2..]);
                let sign = if b % 2 == 0 { -1.0 } else { 1.0 };
                Ok(self.s_op(&hat, zeta)? * self.s_op(&tail, zeta)? * Complex64::new(sign, 0.0))
            })
            .collect()
    }

    /// The `(2l+2)`-tuple that reduces the master TT relation to the T-system.
    pub fn rectangular_tuple(&self, a: usize, m: i64) -> Vec<Complex64> {
        let l = self.l();
        let r = |b: usize| l as f64 / 2.0 - b as f64 + 1.0;
        let m = m as f64;
        let mut v: Vec<f64> = (0..=a).map(|b| m + r(b)).collect();
        v.extend((a + 1..=l + 1).map(r));
        v.extend((1..a).map(|b| m + r(b)));
        v.extend((a..=l).map(r));
        real(&v)
    }

    /// `T_{a,m}(q^{−1/s}ζ) T_{a,m}(q^{1/s}ζ) = T_{a,m−1}T_{a,m+1} + T_{a−1,m}T_{a+1,m}`.
    pub fn check_t_system(&self, a: usize, m: i64, zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let one = Complex64::one();
        let lhs = self.t_am(a, m, self.shift(zeta, -one))? * self.t_am(a, m, self.shift(zeta, one))?;
        let rhs = self.t_am(a, m - 1, zeta)? * self.t_am(a, m + 1, zeta)?
            + self.t_am(a - 1, m, zeta)? * self.t_am(a + 1, m, zeta)?;
        let (r, s) = equality(&lhs, &rhs);
        Ok(RelationReport::new(
            "t-system",
            format!("a={a} m={m} zeta={zeta}"),
            r,
            s,
            tol,
        ))
    }

    /// `T_{a,m}(ζ) = det(T_{a−i+j,1}(q^{(i+j−m−1)/s} ζ))_{i,j=1..m}`.
    pub fn check_jacobi_trudi(&self, a: usize, m: usize, zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let lhs = self.t_am(a, m as i64, zeta)?;
        let entries: Vec<Vec<CMat>> = (1..=m)
            .map(|i| {
                (1..=m)
                    .map(|j| {
                        let z = self.shift(zeta, Complex64::new((i + j) as f64 - m as f64 - 1.0, 0.0));
                        self.t_a1(a as i64 - i as i64 + j as i64, z)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let rhs = operator_det(&entries);
        let (r, s) = equality(&lhs, &rhs);
        Ok(RelationReport::new(
            "jacobi-trudi",
            format!("a={a} m={m} zeta={zeta}"),
            r,
            s,
            tol,
        ))
    }

    /// Generalized `Q_𝐚` from the memoized universal `Q_a`.
    pub fn generalized(&self, a_tuple: &[usize], zeta: Complex64) -> Result<CMat> {
        Ok(self
            .chain
            .generalized_with(a_tuple, zeta, |a, z| {
                Ok(crate::qop::QOperator {
                    label: vec![a],
                    zeta: z,
                    l: self.chain.l,
                    n: self.chain.n,
                    matrix: self.q(a, z)?,
                })
            })?
            .matrix)
    }

    /// `Q_{𝐚∪b∪c}(ζ)Q_𝐚(ζ) = Q_{𝐚∪b}(q^{1/s}ζ)Q_{𝐚∪c}(q^{−1/s}ζ) − Q_{𝐚∪c}(q^{1/s}ζ)Q_{𝐚∪b}(q^{−1/s}ζ)`,
    /// the Desnanot–Jacobi identity for the shifted determinant of size `p+2`.
    pub fn check_qq_jacobi(
        &self,
        a_tuple: &[usize],
        b: usize,
        c: usize,
        zeta: Complex64,
        tol: f64,
    ) -> Result<RelationReport> {
        let one = Complex64::one();
        let with = |extra: &[usize]| {
            let mut v = a_tuple.to_vec();
            v.extend_from_slice(extra);
            v
        };
        let (down, up) = (self.shift(zeta, -one), self.shift(zeta, one));
        let lhs = self.generalized(&with(&[b, c]), zeta)? * self.generalized(a_tuple, zeta)?;
        let rhs = self.generalized(&with(&[b]), up)? * self.generalized(&with(&[c]), down)?
            - self.generalized(&with(&[c]), up)? * self.generalized(&with(&[b]), down)?;
        let (r, s) = equality(&lhs, &rhs);
        Ok(RelationReport::new(
            "qq-jacobi",
            format!("a={a_tuple:?} b={b} c={c} zeta={zeta}"),
            r,
            s,
            tol,
        ))
    }

    /// `T^{νω_{l+1}}(ζ) = 1`.
    pub fn check_constant_weight(&self, nu: Complex64, zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let t = self.transfer(&vec![nu; self.l() + 1], zeta)?.matrix;
        let (r, s) = equality(&t, &self.identity());
        Ok(RelationReport::new(
            "constant-weight",
            format!("nu={nu} zeta={zeta}"),
            r,
            s,
            tol,
        ))
    }

    /// `T^{μ+ν·1}(ζ) = T^μ(q^{2ν/s} ζ)`.
    pub fn check_shift(&self, mu: &[Complex64], nu: Complex64, zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let moved: Vec<Complex64> = mu.iter().map(|m| m + nu).collect();
        let lhs = self.transfer(&moved, zeta)?.matrix;
        let rhs = self.transfer(mu, self.shift(zeta, 2.0 * nu))?.matrix;
        let (r, s) = equality(&lhs, &rhs);
        Ok(RelationReport::new(
            "weight-shift",
            format!("mu={} nu={nu} zeta={zeta}", fmt_tuple(mu)),
            r,
            s,
            tol,
        ))
    }

    /// `T^{r_i·μ}(ζ) = −T^μ(ζ)` for the dot action of a simple reflection.
    pub fn check_weyl_antisymmetry(
        &self,
        mu: &[Complex64],
        i: usize,
        zeta: Complex64,
        tol: f64,
    ) -> Result<RelationReport> {
        let reflected = affine_action(&WeylElement::simple(self.l(), i), mu);
        let lhs = self.transfer(&reflected, zeta)?.matrix;
        let rhs = -self.transfer(mu, zeta)?.matrix;
        let (r, s) = equality(&lhs, &rhs);
        Ok(RelationReport::new(
            "weyl-antisymmetry",
            format!("mu={} i={i} zeta={zeta}", fmt_tuple(mu)),
            r,
            s,
            tol,
        ))
    }

    /// Largest relative commutator among all `Q_a(ζ_1)`, `Q_b(ζ_2)`.
    pub fn check_commuting(&self, zeta1: Complex64, zeta2: Complex64, tol: f64) -> Result<RelationReport> {
        let mut worst: f64 = 0.0;
        for a in 1..=self.l() + 1 {
            for b in 1..=self.l() + 1 {
                worst = worst.max(rel_commutator(&self.q(a, zeta1)?, &self.q(b, zeta2)?));
            }
        }
        Ok(RelationReport::new(
            "q-commuting",
            format!("zeta1={zeta1} zeta2={zeta2}"),
            worst,
            1.0,
            tol,
        ))
    }

    /// `Q_{1..l+1}(ζ) = (1 − ζ^s)^n ψ(C_l)` for the normalized Q-operators.
    pub fn check_unit(&self, zeta: Complex64, tol: f64) -> Result<RelationReport> {
        let all: Vec<usize> = (1..=self.l() + 1).collect();
        let q = self.chain.generalized_q(&all, zeta)?.matrix;
        let f = (Complex64::one() - zeta.powi(self.chain.grading.total() as i32)).powi(self.chain.n as i32);
        let c = self.c_l_inv.map(|v| f / v);
        let (r, s) = equality(&q, &CMat::from_diagonal(&c));
        Ok(RelationReport::new("unit", format!("zeta={zeta}"), r, s, tol))
    }

    /// Compare the R-matrix transfer matrix with `T^{ω_1}` after fitting one scalar per `ζ`.
    pub fn check_direct_vs_q(&self, zetas: &[Complex64], tol: f64) -> Result<RelationReport> {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = RESIDUAL_FLOOR;
        for &z in zetas {
            let from_q = self.transfer(&self.rectangle(1, 1), z)?.matrix;
            let direct = direct_transfer(z, self.chain.n, &self.chain.twist, &self.chain.grading, &self.chain.ctx)?;
            let (r, s) = proportional(&direct, &from_q);
            worst = worst.max(r);
            scale = scale.max(s);
        }
        let zs: Vec<String> = zetas.iter().map(|z| z.to_string()).collect();
        Ok(RelationReport::new(
            "direct-vs-q",
            format!("zeta=[{}]", zs.join(", ")),
            worst,
            scale,
            tol,
        ))
    }
}

/// Fit `a ≈ c·b` through the largest-magnitude entry of `b` and return the
/// relative residual of `a − c·b` and `‖b‖`.
pub fn proportional(a: &CMat, b: &CMat) -> (f64, f64) {
    let (mut best, mut idx) = (0.0, (0, 0));
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            if b[(i, j)].norm() > best {
                best = b[(i, j)].norm();
                idx = (i, j);
            }
        }
    }
    if best == 0.0 {
        return (if a.norm() == 0.0 { 0.0 } else { 1.0 }, RESIDUAL_FLOOR);
    }
    let c = a[idx] / b[idx];
    if c == Complex64::zero() {
        return (1.0, b.norm());
    }
    (rel_diff(a, &(b * c)), b.norm())
}

/// Transfer operator `T^μ(ζ)` via a fresh [`Relations`] evaluator.
pub fn transfer_from_q(mu: &[Complex64], zeta: Complex64, chain: &Chain) -> Result<TransferFromQ> {
    Relations::new(chain)?.transfer(mu, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borelhoms::TwistConfig;
    use crate::lop::GradingConfig;
    use crate::qnum::QContext;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn chain(l: usize, n: usize) -> Chain {
        Chain::standard(l, n, 0.7).unwrap()
    }

    #[test]
    fn constant_weight_is_identity() {
        for (l, n) in [(1, 2), (2, 1)] {
            let ch = chain(l, n);
            let rel = Relations::new(&ch).unwrap();
            for nu in [0.0, 1.0, -0.6] {
                let r = rel.check_constant_weight(c(nu), c(0.3), 1e-10).unwrap();
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn shift_and_reflection() {
        let ch = chain(2, 1);
        let rel = Relations::new(&ch).unwrap();
        let mu = real(&[0.3, -0.2, 0.45]);
        assert!(rel.check_shift(&mu, c(0.35), c(0.25), 1e-10).unwrap().pass);
        for i in 1..=2 {
            let r = rel.check_weyl_antisymmetry(&mu, i, c(0.25), 1e-10).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn master_relations() {
        let ch = chain(1, 2);
        let rel = Relations::new(&ch).unwrap();
        let mu = real(&[0.4, -0.3, 0.15]);
        for a in 1..=2 {
            let r = rel.check_master_tq(a, &mu, c(0.3), 1e-8).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = rel
            .check_master_tt(&real(&[0.4, -0.3, 0.15, 0.7]), c(0.3), 1e-8)
            .unwrap();
        assert!(r.pass, "{r:?}");
        // Two equal entries: every S factor on the hat side vanishes pairwise.
        let r = rel.check_master_tq(1, &real(&[0.2, 0.2, -0.5]), c(0.3), 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn familiar_tq_specialization() {
        let ch = chain(2, 1);
        let rel = Relations::new(&ch).unwrap();
        let l = 2;
        let zeta = c(0.28);
        let mu: Vec<Complex64> = (1..=l + 2).map(|b| c(l as f64 / 2.0 - b as f64 + 2.0)).collect();
        for a in 1..=l + 1 {
            let mut terms = Vec::new();
            for b in 1..=l + 2 {
                let t = if b == 1 {
                    CMat::identity(ch.dim(), ch.dim())
                } else {
                    rel.transfer(&rel.rectangle(b - 1, 1), zeta).unwrap().matrix
                };
                let sign = if b % 2 == 1 { 1.0 } else { -1.0 };
                terms.push(t * rel.q(a, rel.shift(zeta, 2.0 * mu[b - 1])).unwrap() * c(sign));
            }
            assert!(vanishing_sum(&terms).0 < 1e-8);
        }
    }

    #[test]
    fn rectangular_tuple_has_three_terms() {
        let ch = chain(2, 1);
        let rel = Relations::new(&ch).unwrap();
        let mu = rel.rectangular_tuple(1, 1);
        let terms = rel.master_tt_terms(&mu, c(0.25)).unwrap();
        let big = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        let nonzero = terms.iter().filter(|t| t.norm() > 1e-10 * big).count();
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn t_system_and_jacobi_trudi() {
        let ch = chain(1, 2);
        let rel = Relations::new(&ch).unwrap();
        let r = rel.check_t_system(1, 1, c(0.2), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(rel.check_jacobi_trudi(1, 1, c(0.2), 1e-12).unwrap().pass);
        let ch = chain(1, 1);
        let rel = Relations::new(&ch).unwrap();
        let r = rel.check_jacobi_trudi(1, 3, c(0.15), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn qq_jacobi_and_antisymmetry() {
        let ch = chain(1, 2);
        let rel = Relations::new(&ch).unwrap();
        let r = rel.check_qq_jacobi(&[], 1, 2, c(0.3), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
        let swapped = rel.check_qq_jacobi(&[], 2, 1, c(0.3), 1e-8).unwrap();
        assert!((r.residual - swapped.residual).abs() < 1e-12);
        let ch = chain(2, 1);
        let rel = Relations::new(&ch).unwrap();
        let r = rel.check_qq_jacobi(&[1], 2, 3, c(0.3), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn direct_transfer_agrees() {
        for (l, n) in [(1, 2), (2, 1)] {
            let ch = chain(l, n);
            let rel = Relations::new(&ch).unwrap();
            let r = rel
                .check_direct_vs_q(&[c(0.3), Complex64::new(0.2, 0.15)], 1e-6)
                .unwrap();
            assert!(r.pass, "l={l} n={n}: {r:?}");
        }
    }

    #[test]
    fn non_uniform_grading_unit_relation() {
        let g = GradingConfig::new(vec![2, 1]).unwrap();
        let ch = Chain::new(1, 2, TwistConfig::default_for(1), g, QContext::real(0.7).unwrap()).unwrap();
        let rel = Relations::new(&ch).unwrap();
        assert!(rel.check_unit(c(0.5), 1e-9).unwrap().pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn master_tq_random(m1 in -1.0f64..1.0, m2 in -1.0f64..1.0, m3 in -1.0f64..1.0, m4 in -1.0f64..1.0, z in 0.15f64..0.3) {
            let ch = chain(2, 1);
            let rel = Relations::new(&ch).unwrap();
            let mu = real(&[m1, m2, m3, m4]);
            for a in 1..=3 {
                let r = rel.check_master_tq(a, &mu, c(z), 1e-8).unwrap();
                prop_assert!(r.pass, "{:?}", r);
            }
        }

        #[test]
        fn transposition_flips_sign(m1 in -1.0f64..1.0, m2 in -1.0f64..1.0, z in 0.15f64..0.35) {
            let ch = chain(1, 2);
            let rel = Relations::new(&ch).unwrap();
            let a = rel.s_op(&real(&[m1, m2]), c(z)).unwrap();
            let b = rel.s_op(&real(&[m2, m1]), c(z)).unwrap();
            prop_assert!(rel_diff(&a, &(-b)) < 1e-10);
        }
    }
}

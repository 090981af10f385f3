//! The `(l+1)`-dimensional evaluation representation, its coproduct action,
//! the R-matrix obtained as a numerical intertwiner, and a transfer matrix
//! assembled directly from R-matrices.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::borelhoms::TwistConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::lop::GradingConfig;
use crate::qnum::QContext;

/// Chevalley generators of the full quantum loop algebra, with `q^{h_i}` at `ν = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepGenerator {
    E(usize),
    F(usize),
    QH(usize),
}

impl fmt::Display for RepGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepGenerator::E(i) => write!(f, "e_{i}"),
            RepGenerator::F(i) => write!(f, "f_{i}"),
            RepGenerator::QH(i) => write!(f, "q^h_{i}"),
        }
    }
}

/// `φ^{ω_1}_ζ` on `ℂ^{l+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FundRep {
    pub l: usize,
    pub zeta: Complex64,
    pub grading: GradingConfig,
    pub e: Vec<CMat>,
    pub f: Vec<CMat>,
    q: Complex64,
}

fn unit(d: usize, i: usize, j: usize, v: Complex64) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = v;
    m
}

impl FundRep {
    pub fn new(zeta: Complex64, grading: &GradingConfig, ctx: &QContext) -> Self {
        let l = grading.l();
        let d = l + 1;
        let q = ctx.q();
        let zp = |k: i64| zeta.powi(k as i32);
        let mut e = vec![unit(d, l, 0, zp(grading.s[0]) * q)];
        let mut f = vec![unit(d, 0, l, zp(-grading.s[0]) / q)];
        for i in 1..=l {
            e.push(unit(d, i - 1, i, zp(grading.s[i])));
            f.push(unit(d, i, i - 1, zp(-grading.s[i])));
        }
        Self {
            l,
            zeta,
            grading: grading.clone(),
            e,
            f,
            q,
        }
    }

    pub fn dim(&self) -> usize {
        self.l + 1
    }

    /// `φ(q^{ν h_i})`.
    pub fn q_h(&self, i: usize, nu: f64) -> CMat {
        let d = self.dim();
        let up = self.q.powf(nu);
        let down = self.q.powf(-nu);
        let mut m = CMat::identity(d, d);
        if i == 0 {
            m[(0, 0)] = down;
            m[(self.l, self.l)] = up;
        } else {
            m[(i - 1, i - 1)] = up;
            m[(i, i)] = down;
        }
        m
    }

    pub fn generator(&self, g: RepGenerator) -> Result<CMat> {
        let i = match g {
            RepGenerator::E(i) | RepGenerator::F(i) | RepGenerator::QH(i) => i,
        };
        if i > self.l {
            return Err(Error::UnknownGenerator(g.to_string()));
        }
        Ok(match g {
            RepGenerator::E(_) => self.e[i].clone(),
            RepGenerator::F(_) => self.f[i].clone(),
            RepGenerator::QH(_) => self.q_h(i, 1.0),
        })
    }
}

/// Kronecker product with the first factor on the most significant index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Swap of the two tensor legs of `ℂ^d ⊗ ℂ^d`.
pub fn flip(d: usize) -> CMat {
    let mut p = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            p[(i * d + j, j * d + i)] = Complex64::one();
        }
    }
    p
}

/// `(φ_{ζ1} ⊗ φ_{ζ2})(Δ(x))`.
pub fn coproduct_matrix(
    gen: RepGenerator,
    zeta1: Complex64,
    zeta2: Complex64,
    grading: &GradingConfig,
    ctx: &QContext,
) -> Result<CMat> {
    let r1 = FundRep::new(zeta1, grading, ctx);
    let r2 = FundRep::new(zeta2, grading, ctx);
    coproduct_on(gen, &r1, &r2)
}

fn coproduct_on(gen: RepGenerator, r1: &FundRep, r2: &FundRep) -> Result<CMat> {
    let d = r1.dim();
    let id = CMat::identity(d, d);
    Ok(match gen {
        RepGenerator::QH(i) => kron(&r1.generator(gen)?, &r2.q_h(i, 1.0)),
        RepGenerator::E(i) => kron(&r1.generator(gen)?, &id) + kron(&r1.q_h(i, 1.0), &r2.generator(gen)?),
        RepGenerator::F(i) => kron(&r1.generator(gen)?, &r2.q_h(i, -1.0)) + kron(&id, &r2.generator(gen)?),
    })
}

/// `(φ_{ζ1} ⊗ φ_{ζ2})(Δ'(x))` with `Δ' = Π ∘ Δ`.
pub fn opposite_coproduct_matrix(
    gen: RepGenerator,
    zeta1: Complex64,
    zeta2: Complex64,
    grading: &GradingConfig,
    ctx: &QContext,
) -> Result<CMat> {
    let p = flip(grading.l() + 1);
    Ok(&p * coproduct_matrix(gen, zeta2, zeta1, grading, ctx)? * &p)
}

/// Intertwiner `R(ζ1, ζ2)` with the `(v_1⊗v_1, v_1⊗v_1)` entry fixed to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    pub zeta1: Complex64,
    pub zeta2: Complex64,
    pub matrix: CMat,
    /// Ratio of the two smallest singular values of the linear system.
    pub gap: f64,
}

/// Relative singular-value threshold for null-space extraction.
pub const NULL_SPACE_THRESHOLD: f64 = 1e-10;

fn intertwining_generators(l: usize) -> Vec<RepGenerator> {
    (0..=l)
        .map(RepGenerator::E)
        .chain((0..=l).map(RepGenerator::F))
        .chain((1..=l).map(RepGenerator::QH))
        .collect()
}

/// Entries `(r, c)` of `ℂ^d ⊗ ℂ^d` whose tensor legs carry the same weight multiset.
fn weight_preserving_entries(d: usize) -> Vec<(usize, usize)> {
    let key = |x: usize| {
        let (a, b) = (x / d, x % d);
        (a.min(b), a.max(b))
    };
    let m = d * d;
    (0..m)
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .filter(|&(r, c)| key(r) == key(c))
        .collect()
}

/// Solve `R Δ(x) = Δ'(x) R` over `x ∈ {e_0..e_l, q^{h_1}..q^{h_l}}`. The Cartan
/// equations are imposed by restricting `R` to weight-preserving entries.
pub fn solve_intertwiner(
    zeta1: Complex64,
    zeta2: Complex64,
    grading: &GradingConfig,
    ctx: &QContext,
) -> Result<RMatrix> {
    let l = grading.l();
    let m = (l + 1) * (l + 1);
    let unknowns = weight_preserving_entries(l + 1);
    let mut slot = vec![usize::MAX; m * m];
    for (u, &(r, c)) in unknowns.iter().enumerate() {
        slot[r * m + c] = u;
    }
    let gens: Vec<RepGenerator> = intertwining_generators(l)
        .into_iter()
        .filter(|g| matches!(g, RepGenerator::E(_)))
        .collect();
    let mut system = CMat::zeros(gens.len() * m * m, unknowns.len());
    for (g_idx, &g) in gens.iter().enumerate() {
        let a = coproduct_matrix(g, zeta1, zeta2, grading, ctx)?;
        let b = opposite_coproduct_matrix(g, zeta1, zeta2, grading, ctx)?;
        for r in 0..m {
            for c in 0..m {
                let row = g_idx * m * m + r * m + c;
                for k in 0..m {
                    let u = slot[r * m + k];
                    if u != usize::MAX {
                        system[(row, u)] += a[(k, c)];
                    }
                    let u = slot[k * m + c];
                    if u != usize::MAX {
                        system[(row, u)] -= b[(r, k)];
                    }
                }
            }
        }
    }
    let svd = system.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::DegenerateSpectralPoint(0))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let top = svd.singular_values[order[order.len() - 1]];
    let thr = NULL_SPACE_THRESHOLD * top;
    let nullity = order.iter().filter(|&&i| svd.singular_values[i] <= thr).count();
    if nullity != 1 {
        return Err(Error::DegenerateSpectralPoint(nullity));
    }
    let gap = svd.singular_values[order[0]] / svd.singular_values[order[1]];
    let v: DVector<Complex64> = v_t.row(order[0]).adjoint();
    let mut r = CMat::zeros(m, m);
    for (u, &(i, j)) in unknowns.iter().enumerate() {
        r[(i, j)] = v[u];
    }
    let pivot = r[(0, 0)];
    if pivot.norm() < NULL_SPACE_THRESHOLD * r.norm() {
        return Err(Error::DegenerateSpectralPoint(1));
    }
    r /= pivot;
    Ok(RMatrix {
        zeta1,
        zeta2,
        matrix: r,
        gap,
    })
}

/// `max_x ‖R Δ(x) − Δ'(x) R‖ / (‖R‖ ‖Δ(x)‖)` over all `e_i`, `f_i`, `q^{h_i}`.
pub fn intertwiner_residual(r: &RMatrix, grading: &GradingConfig, ctx: &QContext) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for g in intertwining_generators(grading.l()) {
        let a = coproduct_matrix(g, r.zeta1, r.zeta2, grading, ctx)?;
        let b = opposite_coproduct_matrix(g, r.zeta1, r.zeta2, grading, ctx)?;
        let res = (&r.matrix * &a - &b * &r.matrix).norm() / (r.matrix.norm() * a.norm());
        worst = worst.max(res);
    }
    Ok(worst)
}

/// Embed a two-leg operator acting on legs `(p, q)` of `(ℂ^d)^{⊗k}`, leg 0 most significant.
pub fn embed_two_leg(op: &CMat, d: usize, k: usize, p: usize, q: usize) -> CMat {
    let dim = d.pow(k as u32);
    let digit = |idx: usize, leg: usize| (idx / d.pow((k - 1 - leg) as u32)) % d;
    let weight = |leg: usize| d.pow((k - 1 - leg) as u32);
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let (cp, cq) = (digit(col, p), digit(col, q));
        let base = col - cp * weight(p) - cq * weight(q);
        for rp in 0..d {
            for rq in 0..d {
                let v = op[(rp * d + rq, cp * d + cq)];
                if v != Complex64::zero() {
                    out[(base + rp * weight(p) + rq * weight(q), col)] += v;
                }
            }
        }
    }
    out
}

/// `φ^{ω_1}(q^t)` for the twist with `(ε_i − ε_j)(t) = τ_i − τ_j`.
pub fn twist_matrix(twist: &TwistConfig, ctx: &QContext) -> CMat {
    let mean = twist.tau.iter().sum::<f64>() / twist.tau.len() as f64;
    CMat::from_diagonal(&DVector::from_iterator(
        twist.tau.len(),
        twist.tau.iter().map(|t| ctx.qpow_real(t - mean)),
    ))
}

/// Largest chain length accepted by [`direct_transfer`].
pub const DIRECT_MAX_SITES: usize = 4;

/// `tr_0((φ(q^t) ⊗ 1) R^{[0,n]}(ζ,1) ⋯ R^{[0,1]}(ζ,1))`.
pub fn direct_transfer(
    zeta: Complex64,
    n: usize,
    twist: &TwistConfig,
    grading: &GradingConfig,
    ctx: &QContext,
) -> Result<CMat> {
    if n > DIRECT_MAX_SITES {
        return Err(Error::ResourceExceeded(format!(
            "direct transfer supports at most {DIRECT_MAX_SITES} sites, got {n}"
        )));
    }
    let d = grading.l() + 1;
    let r = solve_intertwiner(zeta, Complex64::one(), grading, ctx)?;
    let k = n + 1;
    let tw = twist_matrix(twist, ctx);
    let mut mono = kron(&tw, &CMat::identity(d.pow(n as u32), d.pow(n as u32)));
    for site in (1..=n).rev() {
        mono *= embed_two_leg(&r.matrix, d, k, 0, site);
    }
    let qd = d.pow(n as u32);
    let mut out = CMat::zeros(qd, qd);
    for a in 0..d {
        out += mono.view((a * qd, a * qd), (qd, qd));
    }
    Ok(out)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::borelhoms::affine_cartan;
    use crate::linalg::{rel_commutator, rel_diff};
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn ctx() -> QContext {
        QContext::real(0.7).unwrap()
    }

    #[test]
    fn representation_relations() {
        let ctx = ctx();
        for l in 1..=3 {
            let g = GradingConfig::uniform(l);
            let rep = FundRep::new(Complex64::new(0.8, 0.3), &g, &ctx);
            let cm = affine_cartan(l);
            for i in 0..=l {
                let up = rep.q_h(i, 0.37);
                let down = rep.q_h(i, -0.37);
                for j in 0..=l {
                    let lhs = &up * &rep.e[j] * &down;
                    let rhs = &rep.e[j] * ctx.qpow_real(0.37 * cm[i][j] as f64);
                    assert!((lhs - rhs).norm() < 1e-12);
                    let comm = &rep.e[i] * &rep.f[j] - &rep.f[j] * &rep.e[i];
                    let want = if i == j {
                        (rep.q_h(i, 1.0) - rep.q_h(i, -1.0)) / ctx.kappa()
                    } else {
                        CMat::zeros(l + 1, l + 1)
                    };
                    assert!((comm - want).norm() < 1e-12, "l={l} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn coproduct_shapes() {
        let ctx = ctx();
        let g = GradingConfig::uniform(2);
        let (z1, z2) = (c(0.6), c(1.3));
        let r1 = FundRep::new(z1, &g, &ctx);
        let r2 = FundRep::new(z2, &g, &ctx);
        let h = coproduct_matrix(RepGenerator::QH(1), z1, z2, &g, &ctx).unwrap();
        assert!((h - kron(&r1.q_h(1, 1.0), &r2.q_h(1, 1.0))).norm() < 1e-15);
        let e = coproduct_matrix(RepGenerator::E(2), z1, z1, &g, &ctx).unwrap();
        assert!(e.rank(1e-12) <= 6);
        let p = flip(3);
        let op = opposite_coproduct_matrix(RepGenerator::E(1), z1, z2, &g, &ctx).unwrap();
        let direct = &p * coproduct_matrix(RepGenerator::E(1), z2, z1, &g, &ctx).unwrap() * &p;
        assert!((op - direct).norm() < 1e-15);
    }

    #[test]
    fn intertwiner_and_yang_baxter() {
        let ctx = ctx();
        for l in 1..=2 {
            let g = GradingConfig::uniform(l);
            let d = l + 1;
            let z = [
                Complex64::new(0.7, 0.2),
                Complex64::new(1.4, -0.3),
                Complex64::new(0.45, 0.5),
            ];
            let r12 = solve_intertwiner(z[0], z[1], &g, &ctx).unwrap();
            assert!(intertwiner_residual(&r12, &g, &ctx).unwrap() < 1e-10);
            let r13 = solve_intertwiner(z[0], z[2], &g, &ctx).unwrap();
            let r23 = solve_intertwiner(z[1], z[2], &g, &ctx).unwrap();
            let e12 = embed_two_leg(&r12.matrix, d, 3, 0, 1);
            let e13 = embed_two_leg(&r13.matrix, d, 3, 0, 2);
            let e23 = embed_two_leg(&r23.matrix, d, 3, 1, 2);
            let lhs = &e12 * &e13 * &e23;
            let rhs = &e23 * &e13 * &e12;
            assert!(rel_diff(&lhs, &rhs) < 1e-8, "l={l}: {}", rel_diff(&lhs, &rhs));
        }
    }

    #[test]
    fn depends_on_ratio_only() {
        let ctx = ctx();
        let g = GradingConfig::uniform(2);
        let (z1, z2) = (Complex64::new(0.9, 0.1), c(0.5));
        let base = solve_intertwiner(z1, z2, &g, &ctx).unwrap();
        for cc in [c(1.7), Complex64::new(0.4, 0.9), c(2.3)] {
            let r = solve_intertwiner(cc * z1, cc * z2, &g, &ctx).unwrap();
            assert!(rel_diff(&base.matrix, &r.matrix) < 1e-9);
        }
    }

    #[test]
    fn direct_transfer_commutes() {
        let ctx = ctx();
        for (l, n) in [(1, 2), (2, 2)] {
            let g = GradingConfig::uniform(l);
            let tw = TwistConfig::default_for(l);
            let t1 = direct_transfer(c(0.4), n, &tw, &g, &ctx).unwrap();
            let t2 = direct_transfer(Complex64::new(0.3, 0.25), n, &tw, &g, &ctx).unwrap();
            assert!(rel_commutator(&t1, &t2) < 1e-8);
            let rep = FundRep::new(Complex64::one(), &g, &ctx);
            for i in 1..=l {
                let mut h = CMat::identity(1, 1);
                for _ in 0..n {
                    h = kron(&h, &rep.q_h(i, 1.0));
                }
                assert!(rel_commutator(&t1, &h) < 1e-10);
            }
        }
        assert!(direct_transfer(
            c(0.4),
            5,
            &TwistConfig::default_for(1),
            &GradingConfig::uniform(1),
            &ctx
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn intertwiner_residual_is_small(re1 in 0.3f64..1.5, im1 in -0.5f64..0.5, re2 in 0.3f64..1.5, l in 1usize..3) {
            let ctx = ctx();
            let g = GradingConfig::uniform(l);
            let z1 = Complex64::new(re1, im1);
            let z2 = c(re2);
            prop_assume!((z1 - z2).norm() > 0.05);
            let r = solve_intertwiner(z1, z2, &g, &ctx).unwrap();
            prop_assert!(intertwiner_residual(&r, &g, &ctx).unwrap() < 1e-10);
        }
    }
}

//! The basic L-operator with oscillator auxiliary space and its rotated
//! family `L_a(ζ)`, `a = 1..l+1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscalg::OscExpr;
use crate::qnum::{f_series, ExpKey, QContext};

/// Grading integers `s_0..s_l` of the spectral parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingConfig {
    pub s: Vec<i64>,
}

impl GradingConfig {
    pub fn new(s: Vec<i64>) -> Result<Self> {
        let g = Self { s };
        if g.total() <= 0 {
            return Err(Error::InvalidConfig(format!(
                "grading total must be positive, got {}",
                g.total()
            )));
        }
        Ok(g)
    }

    /// `s_i = 1` for all `i`, so `s = l + 1`.
    pub fn uniform(l: usize) -> Self {
        Self { s: vec![1; l + 1] }
    }

    pub fn l(&self) -> usize {
        self.s.len() - 1
    }

    pub fn total(&self) -> i64 {
        self.s.iter().sum()
    }

    /// `s_{ij} = Σ_{k=i}^{j−1} s_k`.
    pub fn s_range(&self, i: usize, j: usize) -> i64 {
        (i..j).map(|k| self.s[k]).sum()
    }

    /// `(σs)_i = s_{i+1 mod l+1}`.
    pub fn rotate(&self) -> Self {
        let m = self.s.len();
        Self {
            s: (0..m).map(|i| self.s[(i + 1) % m]).collect(),
        }
    }

    pub fn rotate_by(&self, a: usize) -> Self {
        (0..a).fold(self.clone(), |g, _| g.rotate())
    }
}

/// `(l+1) × (l+1)` matrix over `Osc_q^{⊗l}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LOperator {
    pub l: usize,
    pub a: usize,
    pub zeta: Complex64,
    pub grading: GradingConfig,
    /// ζ power carried by the grade-changing part of each entry.
    pub zeta_powers: Vec<Vec<i64>>,
    pub entries: Vec<Vec<OscExpr>>,
}

impl LOperator {
    pub fn dim(&self) -> usize {
        self.l + 1
    }

    /// Entry `(i, j)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> &OscExpr {
        &self.entries[i - 1][j - 1]
    }

    /// Entrywise equality after relative pruning at `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .all(|(x, y)| x.approx_eq(y, tol))
    }
}

fn zpow(zeta: Complex64, k: i64) -> Complex64 {
    if k == 0 {
        Complex64::one()
    } else {
        zeta.powi(k as i32)
    }
}

/// Exponent list with `value` on modes `lo..hi` (1-based, `hi` exclusive).
fn range_exps(lo: usize, hi: usize, value: i64) -> Vec<(usize, u32, u32, ExpKey)> {
    (lo..hi).map(|k| (k, 0, 0, ExpKey::int(value))).collect()
}

fn set_mode(f: &mut Vec<(usize, u32, u32, ExpKey)>, k: usize, alpha: u32, beta: u32, e: i64) {
    f.retain(|x| x.0 != k);
    f.push((k, alpha, beta, ExpKey::int(e)));
}

/// The basic L-operator `L(ζ)`, normalized by `e^{−F_{l+1}(ζ^s)}`.
pub fn build_l(zeta: Complex64, grading: &GradingConfig, ctx: &QContext) -> LOperator {
    let l = grading.l();
    let s = grading.total();
    let kappa = ctx.kappa();
    let mut entries = vec![vec![OscExpr::zero(l); l + 1]; l + 1];
    let mut zp = vec![vec![0i64; l + 1]; l + 1];

    for i in 1..=l {
        for j in 1..i {
            let p = grading.s_range(j, i);
            let mut f = range_exps(j + 1, i, 1);
            set_mode(&mut f, j, 0, 1, 2);
            set_mode(&mut f, i, 1, 0, -1);
            let c = kappa * zpow(zeta, p) * ctx.qpow_int(i as i64 - j as i64 - 2);
            entries[i - 1][j - 1] = OscExpr::monomial(l, c, &f);
            zp[i - 1][j - 1] = p;
        }
    }
    for j in 1..=l {
        let p = grading.s_range(j, l + 1);
        let mut f = range_exps(j + 1, l + 1, 1);
        set_mode(&mut f, j, 0, 1, 2);
        let c = zpow(zeta, p) * ctx.qpow_int(l as i64 - j as i64);
        entries[l][j - 1] = OscExpr::monomial(l, c, &f);
        zp[l][j - 1] = p;
    }
    for i in 1..=l {
        let p = s - grading.s_range(i, l + 1);
        let mut f = range_exps(1, i, 1);
        set_mode(&mut f, i, 1, 0, -1);
        let c = -kappa * zpow(zeta, p) * ctx.qpow_int(i as i64 - 2);
        entries[i - 1][l] = OscExpr::monomial(l, c, &f);
        zp[i - 1][l] = p;
    }
    for i in 1..=l {
        entries[i - 1][i - 1] = OscExpr::q_pow_n(l, i, ExpKey::int(1));
    }
    let down = OscExpr::monomial(l, Complex64::one(), &range_exps(1, l + 1, -1));
    let up = OscExpr::monomial(l, -zpow(zeta, s) * ctx.qpow_int(l as i64), &range_exps(1, l + 1, 1));
    entries[l][l] = down.add(&up, ctx);

    LOperator {
        l,
        a: l + 1,
        zeta,
        grading: grading.clone(),
        zeta_powers: zp,
        entries,
    }
}

/// `O = q^{−1} E_{1,l+1} + Σ_i E_{i+1,i}`.
pub fn o_matrix(l: usize, ctx: &QContext) -> DMatrix<Complex64> {
    let mut o = DMatrix::zeros(l + 1, l + 1);
    o[(0, l)] = ctx.q().inv();
    for i in 0..l {
        o[(i + 1, i)] = Complex64::one();
    }
    o
}

/// `O M O^{−1}` for an operator-valued matrix `M`.
fn conjugate(m: &LOperator, ctx: &QContext) -> LOperator {
    let l = m.l;
    let o = o_matrix(l, ctx);
    let oinv = o.clone().try_inverse().expect("O is invertible");
    let mut entries = vec![vec![OscExpr::zero(l); l + 1]; l + 1];
    let mut zp = vec![vec![0i64; l + 1]; l + 1];
    for i in 0..=l {
        for k in 0..=l {
            let mut acc = OscExpr::zero(l);
            for j in 0..=l {
                if o[(i, j)] == Complex64::zero() {
                    continue;
                }
                for n in 0..=l {
                    if oinv[(n, k)] == Complex64::zero() || m.entries[j][n].is_zero() {
                        continue;
                    }
                    acc = acc.add(&m.entries[j][n].scale(o[(i, j)] * oinv[(n, k)]), ctx);
                    zp[i][k] = m.zeta_powers[j][n];
                }
            }
            entries[i][k] = acc;
        }
    }
    LOperator {
        l,
        a: m.a,
        zeta: m.zeta,
        grading: m.grading.clone(),
        zeta_powers: zp,
        entries,
    }
}

/// `L_a(ζ) = O^a L(ζ)|_{s → σ^a(s)} O^{−a}`.
pub fn build_l_a(a: usize, zeta: Complex64, grading: &GradingConfig, ctx: &QContext) -> Result<LOperator> {
    let l = grading.l();
    if a == 0 || a > l + 1 {
        return Err(Error::InvalidIndex(format!(
            "family index a = {a} outside 1..={}",
            l + 1
        )));
    }
    let mut lop = build_l(zeta, &grading.rotate_by(a), ctx);
    for _ in 0..a {
        lop = conjugate(&lop, ctx);
    }
    lop.a = a;
    lop.grading = grading.clone();
    Ok(lop)
}

/// Operator-valued matrix product `X Y` with oscillator order preserved.
fn mat_mul(x: &[Vec<OscExpr>], y: &[Vec<OscExpr>], l: usize, ctx: &QContext) -> Vec<Vec<OscExpr>> {
    let d = x.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let mut acc = OscExpr::zero(l);
                    for j in 0..d {
                        if x[i][j].is_zero() || y[j][k].is_zero() {
                            continue;
                        }
                        acc = acc.add(&x[i][j].multiply(&y[j][k], ctx), ctx);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// `L(ζ)` assembled from the factors `R_≺ R_∼ R_≻ K` of the universal R-matrix
/// in `o_ζ ⊗ φ^{ω_1}`, divided by `e^{F_{l+1}(ζ^s)}`.
pub fn build_l_factored_oracle(zeta: Complex64, grading: &GradingConfig, ctx: &QContext) -> Result<LOperator> {
    let l = grading.l();
    let s = grading.total();
    let kappa = ctx.kappa();
    let id = |d: usize| -> Vec<Vec<OscExpr>> {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { OscExpr::one(l) } else { OscExpr::zero(l) })
                    .collect()
            })
            .collect()
    };

    let mut r_prec = id(l + 1);
    for i in 1..=l {
        for j in i + 1..=l {
            let mut f = range_exps(i + 1, j, 1);
            set_mode(&mut f, i, 0, 1, 1);
            set_mode(&mut f, j, 1, 0, -1);
            let c = kappa * zpow(zeta, grading.s_range(i, j)) * ctx.qpow_int(j as i64 - i as i64 - 2);
            // b_i b†_j q^{N_ij − N_j}: modes i..j−1 carry +1 and mode j carries −1.
            r_prec[j - 1][i - 1] = OscExpr::monomial(l, c, &f);
        }
        let mut f = range_exps(i + 1, l + 1, 1);
        set_mode(&mut f, i, 0, 1, 1);
        let c = zpow(zeta, grading.s_range(i, l + 1)) * ctx.qpow_int(l as i64 - i as i64);
        r_prec[l][i - 1] = OscExpr::monomial(l, c, &f);
    }

    let fz = f_series(l, zpow(zeta, s), ctx)?;
    let ef = fz.exp();
    let mut r_sim = id(l + 1);
    for (k, row) in r_sim.iter_mut().enumerate() {
        let diag = if k < l {
            ef
        } else {
            ef * (Complex64::one() - ctx.qpow_int(-(l as i64)) * zpow(zeta, s))
        };
        row[k] = OscExpr::scalar(l, diag);
    }

    let mut r_succ = id(l + 1);
    for i in 1..=l {
        let f = range_exps(i + 1, l + 1, 1);
        let mut f = f;
        set_mode(&mut f, i, 1, 0, 0);
        let c = -kappa * zpow(zeta, s - grading.s_range(i, l + 1)) * ctx.qpow_int(-(i as i64));
        r_succ[i - 1][l] = OscExpr::monomial(l, c, &f);
    }

    let mut k_mat = id(l + 1);
    for m in 1..=l {
        k_mat[m - 1][m - 1] = OscExpr::q_pow_n(l, m, ExpKey::int(1));
    }
    k_mat[l][l] = OscExpr::monomial(l, Complex64::one(), &range_exps(1, l + 1, -1));

    let prod = mat_mul(
        &mat_mul(&mat_mul(&r_prec, &r_sim, l, ctx), &r_succ, l, ctx),
        &k_mat,
        l,
        ctx,
    );
    let norm = ef.inv();
    let entries = prod
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.scale(norm)).collect())
        .collect();
    let reference = build_l(zeta, grading, ctx);
    Ok(LOperator { entries, ..reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> QContext {
        QContext::real(0.7).unwrap()
    }

    #[test]
    fn diagonal_entries() {
        let ctx = ctx();
        for l in 1..=3 {
            let g = GradingConfig::uniform(l);
            let z = Complex64::new(0.4, 0.1);
            let lop = build_l(z, &g, &ctx);
            for i in 1..=l {
                assert_eq!(*lop.entry(i, i), OscExpr::q_pow_n(l, i, ExpKey::int(1)));
            }
            let corner = lop.entry(l + 1, l + 1);
            assert_eq!(corner.len(), 2);
            let minus: Vec<ExpKey> = vec![ExpKey::int(-1); l];
            let key: Vec<_> = minus
                .iter()
                .map(|e| crate::oscalg::ModeFactor {
                    alpha: 0,
                    beta: 0,
                    exp: e.clone(),
                })
                .collect();
            assert_eq!(corner.coeff(&key), Complex64::one());
        }
    }

    #[test]
    fn factored_oracle_matches_rank_one() {
        let ctx = ctx();
        let g = GradingConfig::uniform(1);
        let z = Complex64::new(0.5, 0.0);
        let a = build_l(z, &g, &ctx);
        let b = build_l_factored_oracle(z, &g, &ctx).unwrap();
        assert!(a.approx_eq(&b, 1e-12), "{:?}\n{:?}", a.entries, b.entries);
    }

    #[test]
    fn o_matrix_cycle() {
        let ctx = ctx();
        for l in 1..=4 {
            let o = o_matrix(l, &ctx);
            let mut p = DMatrix::identity(l + 1, l + 1);
            for _ in 0..=l {
                p = &o * p;
            }
            let want = DMatrix::<Complex64>::identity(l + 1, l + 1) * ctx.q().inv();
            assert!((p - want).norm() < 1e-14);
        }
    }

    #[test]
    fn family_top_member_is_basic() {
        let ctx = ctx();
        for l in 1..=3 {
            let g = GradingConfig::new((0..=l as i64).map(|i| 1 + i % 2).collect()).unwrap();
            let z = Complex64::new(0.3, 0.2);
            let top = build_l_a(l + 1, z, &g, &ctx).unwrap();
            assert!(top.approx_eq(&build_l(z, &g, &ctx), 1e-13));
        }
    }

    #[test]
    fn grading_rejects_non_positive_total() {
        assert!(GradingConfig::new(vec![1, -1]).is_err());
        assert_eq!(GradingConfig::uniform(2).rotate_by(3), GradingConfig::uniform(2));
        let g = GradingConfig::new(vec![1, 2, 3]).unwrap();
        assert_eq!(g.rotate().s, vec![2, 3, 1]);
        assert_eq!(g.s_range(1, 3), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn factored_oracle_matches(l in 1usize..4, r in 0.1f64..0.8, th in 0.0..std::f64::consts::TAU) {
            let ctx = ctx();
            let g = GradingConfig::uniform(l);
            let z = Complex64::from_polar(r, th);
            let a = build_l(z, &g, &ctx);
            let b = build_l_factored_oracle(z, &g, &ctx).unwrap();
            prop_assert!(a.approx_eq(&b, 1e-12));
        }

        #[test]
        fn entries_are_grade_homogeneous(l in 1usize..4, a in 1usize..5) {
            let ctx = ctx();
            let a = 1 + (a - 1) % (l + 1);
            let lop = build_l_a(a, Complex64::new(0.6, 0.0), &GradingConfig::uniform(l), &ctx).unwrap();
            for row in &lop.entries {
                for e in row {
                    if !e.is_zero() {
                        prop_assert!(e.grade().is_some());
                    }
                }
            }
        }
    }
}

//! Q-operators on the `n`-site chain `(ℂ^{l+1})^{⊗n}`: monodromy entries,
//! oscillator traces, the `ζ^{D_a}` dressing, generalized determinants and
//! the diagonal `ψ(C_l)`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borelhoms::{twist_diagonal, TwistConfig};
use crate::error::{Error, Result};
use crate::linalg::{operator_det, CMat};
use crate::lop::{build_l_a, GradingConfig, LOperator};
use crate::oscalg::{Chi, OscExpr};
use crate::qnum::{f_series, QContext};

/// Occupation numbers `k_1..k_{l+1}` of a weight sector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorLabel {
    pub k: Vec<usize>,
}

impl SectorLabel {
    pub fn new(k: Vec<usize>) -> Self {
        Self { k }
    }

    pub fn n(&self) -> usize {
        self.k.iter().sum()
    }

    /// `k_𝐚 = Σ_i k_{a_i}` with 1-based labels.
    pub fn k_of(&self, a: &[usize]) -> usize {
        a.iter().map(|&x| self.k[x - 1]).sum()
    }
}

/// Digits of a basis index, site 1 first (most significant).
pub fn basis_digits(idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut x = idx;
    for p in (0..n).rev() {
        out[p] = x % d;
        x /= d;
    }
    out
}

pub fn sector_of(idx: usize, n: usize, l: usize) -> SectorLabel {
    let mut k = vec![0; l + 1];
    for d in basis_digits(idx, n, l + 1) {
        k[d] += 1;
    }
    SectorLabel { k }
}

/// All sectors with `Σ k_i = n`, in lexicographic order.
pub fn sectors(l: usize, n: usize) -> Vec<SectorLabel> {
    let mut out: Vec<SectorLabel> = (0..(l + 1).pow(n as u32)).map(|i| sector_of(i, n, l)).collect();
    out.sort();
    out.dedup();
    out
}

/// Basis indices spanning `U_k`.
pub fn sector_indices(k: &SectorLabel, n: usize, l: usize) -> Vec<usize> {
    (0..(l + 1).pow(n as u32))
        .filter(|&i| sector_of(i, n, l) == *k)
        .collect()
}

/// `χ_a`: `l − a + 1` copies of `χ^-` followed by `a − 1` copies of `χ^+`.
pub fn chi_signs(a: usize, l: usize) -> Vec<Chi> {
    (0..l)
        .map(|k| if k < l + 1 - a { Chi::Minus } else { Chi::Plus })
        .collect()
}

/// Parameters shared by every operator on one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub l: usize,
    pub n: usize,
    pub twist: TwistConfig,
    pub grading: GradingConfig,
    pub ctx: QContext,
}

/// A complex matrix on `(ℂ^{l+1})^{⊗n}` labelled by its family indices.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    pub label: Vec<usize>,
    pub zeta: Complex64,
    pub l: usize,
    pub n: usize,
    pub matrix: CMat,
}

impl QOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sector_block(&self, k: &SectorLabel) -> CMat {
        let idx = sector_indices(k, self.n, self.l);
        CMat::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])])
    }

    /// Largest entry coupling different sectors.
    pub fn off_sector_max(&self) -> f64 {
        let d = self.dim();
        let labels: Vec<SectorLabel> = (0..d).map(|i| sector_of(i, self.n, self.l)).collect();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if labels[i] != labels[j] {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }
}

/// `L_{i_n j_n} ⋯ L_{i_1 j_1}` (1-based indices, site `n` leftmost).
pub fn monodromy_entry(l_op: &LOperator, i_multi: &[usize], j_multi: &[usize], ctx: &QContext) -> OscExpr {
    let mut acc = OscExpr::one(l_op.l);
    for p in (0..i_multi.len()).rev() {
        let e = l_op.entry(i_multi[p], j_multi[p]);
        if e.is_zero() {
            return OscExpr::zero(l_op.l);
        }
        acc = acc.multiply(e, ctx);
    }
    acc
}

impl Chain {
    pub fn new(l: usize, n: usize, twist: TwistConfig, grading: GradingConfig, ctx: QContext) -> Result<Self> {
        if twist.tau.len() != l + 1 {
            return Err(Error::InvalidConfig(format!(
                "twist has {} components, expected {}",
                twist.tau.len(),
                l + 1
            )));
        }
        if grading.s.len() != l + 1 {
            return Err(Error::InvalidConfig(format!(
                "grading has {} components, expected {}",
                grading.s.len(),
                l + 1
            )));
        }
        if n == 0 {
            return Err(Error::InvalidConfig("chain length must be positive".into()));
        }
        let ctx = ctx.with_tau(&twist.tau);
        Ok(Self {
            l,
            n,
            twist,
            grading,
            ctx,
        })
    }

    /// Default twist, uniform grading.
    pub fn standard(l: usize, n: usize, q: f64) -> Result<Self> {
        Self::new(
            l,
            n,
            TwistConfig::default_for(l),
            GradingConfig::uniform(l),
            QContext::real(q)?,
        )
    }

    pub fn dim(&self) -> usize {
        (self.l + 1).pow(self.n as u32)
    }

    pub fn s(&self) -> f64 {
        self.grading.total() as f64
    }

    /// `Q'_a(ζ)` with entries `tr_{χ_a}(L_{i_n j_n} ⋯ L_{i_1 j_1} o_a(q^t))`.
    pub fn q_prime(&self, a: usize, zeta: Complex64) -> Result<QOperator> {
        let l = self.l;
        let lop = build_l_a(a, zeta, &self.grading, &self.ctx)?;
        let twist = twist_diagonal(a, l);
        let signs = chi_signs(a, l);
        let d = self.dim();
        let digits: Vec<Vec<usize>> = (0..d)
            .map(|i| basis_digits(i, self.n, l + 1).into_iter().map(|x| x + 1).collect())
            .collect();
        let labels: Vec<SectorLabel> = (0..d).map(|i| sector_of(i, self.n, l)).collect();
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| labels[i] == labels[j])
            .collect();
        let values: Vec<Result<(usize, usize, Complex64)>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let m = monodromy_entry(&lop, &digits[i], &digits[j], &self.ctx);
                if m.is_zero() {
                    return Ok((i, j, Complex64::zero()));
                }
                let t = m.multiply(&twist, &self.ctx).trace_exact(&signs, &self.ctx)?;
                Ok((i, j, t))
            })
            .collect();
        let mut matrix = CMat::zeros(d, d);
        for v in values {
            let (i, j, t) = v?;
            matrix[(i, j)] = t;
        }
        Ok(QOperator {
            label: vec![a],
            zeta,
            l,
            n: self.n,
            matrix,
        })
    }

    /// Eigenvalue of `D_a` on sector `k`.
    pub fn dressing_exponent(&self, a: usize, k: &SectorLabel) -> f64 {
        let l = self.l;
        let t = self.twist.t();
        let pre = self.s() / (2.0 * (l as f64 + 1.0));
        let mut acc = 0.0;
        for j in 1..=l {
            let x = k.k[j - 1] as f64 - k.k[j] as f64 - t[j - 1];
            if j < a {
                acc += j as f64 * x;
            } else {
                acc -= (l - j + 1) as f64 * x;
            }
        }
        pre * acc
    }

    /// Diagonal of `ζ^{D_a}` over the basis.
    pub fn dressing_diagonal(&self, a: usize, zeta: Complex64) -> DVector<Complex64> {
        let lz = zeta.ln();
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| {
                let k = sector_of(i, self.n, self.l);
                (lz * self.dressing_exponent(a, &k)).exp()
            }),
        )
    }

    /// `Q_a(ζ) = ζ^{D_a} Q'_a(ζ)`.
    pub fn q_operator(&self, a: usize, zeta: Complex64) -> Result<QOperator> {
        let mut q = self.q_prime(a, zeta)?;
        let dz = self.dressing_diagonal(a, zeta);
        for i in 0..q.dim() {
            let f = dz[i];
            for j in 0..q.dim() {
                q.matrix[(i, j)] *= f;
            }
        }
        Ok(q)
    }

    /// `e^{n F_{l+1}(ζ^s)}`, the factor removed by the L-operator normalization.
    pub fn universal_factor(&self, zeta: Complex64) -> Result<Complex64> {
        let zs = zeta.powi(self.grading.total() as i32);
        Ok((f_series(self.l, zs, &self.ctx)? * self.n as f64).exp())
    }

    /// `Q_a` without the `e^{−nF}` normalization.
    pub fn q_universal(&self, a: usize, zeta: Complex64) -> Result<QOperator> {
        let mut q = self.q_operator(a, zeta)?;
        q.matrix *= self.universal_factor(zeta)?;
        Ok(q)
    }

    /// Shift `ζ ↦ q^{x/s} ζ` on the principal branch.
    pub fn shift(&self, zeta: Complex64, x: f64) -> Complex64 {
        self.ctx.qpow_real(x / self.s()) * zeta
    }

    /// `Q_𝐚(ζ) = det(Q_{a_i}(q^{(p−2j+1)/s} ζ))`.
    pub fn generalized_q(&self, a_tuple: &[usize], zeta: Complex64) -> Result<QOperator> {
        self.generalized_with(a_tuple, zeta, |a, z| self.q_operator(a, z))
    }

    pub fn generalized_with<F>(&self, a_tuple: &[usize], zeta: Complex64, q: F) -> Result<QOperator>
    where
        F: Fn(usize, Complex64) -> Result<QOperator>,
    {
        for (i, a) in a_tuple.iter().enumerate() {
            if *a == 0 || *a > self.l + 1 {
                return Err(Error::InvalidIndex(format!("family index {a}")));
            }
            if a_tuple[..i].contains(a) {
                return Err(Error::RepeatedIndex(*a));
            }
        }
        let p = a_tuple.len();
        let matrix = if p == 0 {
            CMat::identity(self.dim(), self.dim())
        } else {
            let m: Vec<Vec<CMat>> = a_tuple
                .iter()
                .map(|&a| {
                    (1..=p)
                        .map(|j| {
                            let z = self.shift(zeta, p as f64 - 2.0 * j as f64 + 1.0);
                            q(a, z).map(|x| x.matrix)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            operator_det(&m)
        };
        Ok(QOperator {
            label: a_tuple.to_vec(),
            zeta,
            l: self.l,
            n: self.n,
            matrix,
        })
    }

    /// Exponent `h'_{ij} = k_i − k_j − (τ_i − τ_j)` on sector `k`.
    pub fn h_prime(&self, k: &SectorLabel, i: usize, j: usize) -> f64 {
        k.k[i - 1] as f64 - k.k[j - 1] as f64 - (self.twist.tau[i - 1] - self.twist.tau[j - 1])
    }

    /// `ψ(C_l) = Π_{i<j} q^{h'_ij/2} (1 − q^{h'_ij})^{−1}` per basis vector.
    pub fn c_l_diagonal(&self) -> Result<DVector<Complex64>> {
        let l = self.l;
        let mut out = DVector::zeros(self.dim());
        for idx in 0..self.dim() {
            let k = sector_of(idx, self.n, l);
            let mut v = Complex64::one();
            for i in 1..=l + 1 {
                for j in i + 1..=l + 1 {
                    let e = self.h_prime(&k, i, j);
                    let qe = self.ctx.qpow_real(e);
                    let den = Complex64::one() - qe;
                    if den.norm() < self.ctx.tolerance() {
                        return Err(Error::CartanPole {
                            sector: k.k.clone(),
                            i,
                            j,
                            magnitude: den.norm(),
                        });
                    }
                    v *= self.ctx.qpow_real(e / 2.0) / den;
                }
            }
            out[idx] = v;
        }
        Ok(out)
    }
}

/// Free-function form of [`Chain::q_prime`].
pub fn q_prime(a: usize, zeta: Complex64, chain: &Chain) -> Result<QOperator> {
    chain.q_prime(a, zeta)
}

/// Free-function form of [`Chain::q_operator`].
pub fn q_operator(a: usize, zeta: Complex64, chain: &Chain) -> Result<QOperator> {
    chain.q_operator(a, zeta)
}

/// Free-function form of [`Chain::generalized_q`].
pub fn generalized_q(a_tuple: &[usize], zeta: Complex64, chain: &Chain) -> Result<QOperator> {
    chain.generalized_q(a_tuple, zeta)
}

/// Free-function form of [`Chain::c_l_diagonal`].
pub fn c_l_diagonal(chain: &Chain) -> Result<DVector<Complex64>> {
    chain.c_l_diagonal()
}

/// Metadata written next to a binary matrix dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub version: u32,
    pub rows: usize,
    pub cols: usize,
    pub label: Vec<usize>,
    pub l: usize,
    pub n: usize,
    pub zeta: [f64; 2],
    pub tau: Vec<f64>,
    pub grading: Vec<i64>,
    pub q: [f64; 2],
}

pub const MATRIX_FORMAT_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `<stem>.bin` (row-major little-endian `re, im` pairs) and `<stem>.json`.
pub fn save_operator(q: &QOperator, chain: &Chain, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(q.dim() * q.dim() * 16);
    for i in 0..q.matrix.nrows() {
        for j in 0..q.matrix.ncols() {
            let v = q.matrix[(i, j)];
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    fs::write(&bin, bytes).map_err(|e| io_err(&bin, e))?;
    let meta = MatrixSidecar {
        version: MATRIX_FORMAT_VERSION,
        rows: q.matrix.nrows(),
        cols: q.matrix.ncols(),
        label: q.label.clone(),
        l: q.l,
        n: q.n,
        zeta: [q.zeta.re, q.zeta.im],
        tau: chain.twist.tau.clone(),
        grading: chain.grading.s.clone(),
        q: [chain.ctx.q().re, chain.ctx.q().im],
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&json, text).map_err(|e| io_err(&json, e))?;
    Ok((bin, json))
}

/// Reads a dump written by [`save_operator`].
pub fn load_operator(stem: &Path) -> Result<(QOperator, MatrixSidecar)> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let text = fs::read_to_string(&json).map_err(|e| io_err(&json, e))?;
    let meta: MatrixSidecar = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if meta.version != MATRIX_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported matrix format version {}",
            meta.version
        )));
    }
    let bytes = fs::read(&bin).map_err(|e| io_err(&bin, e))?;
    if bytes.len() != meta.rows * meta.cols * 16 {
        return Err(Error::Format(format!(
            "{}: expected {} bytes, found {}",
            bin.display(),
            meta.rows * meta.cols * 16,
            bytes.len()
        )));
    }
    let word = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let matrix = DMatrix::from_fn(meta.rows, meta.cols, |i, j| {
        let k = 2 * (i * meta.cols + j);
        Complex64::new(word(k), word(k + 1))
    });
    let q = QOperator {
        label: meta.label.clone(),
        zeta: Complex64::new(meta.zeta[0], meta.zeta[1]),
        l: meta.l,
        n: meta.n,
        matrix,
    };
    Ok((q, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rel_commutator, rel_diff};
    use crate::lop::build_l;
    use crate::oscalg::{to_truncated, truncated_trace, TruncatedFock};
    use crate::qnum::ExpKey;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn sector_bookkeeping() {
        assert_eq!(basis_digits(5, 3, 2), vec![1, 0, 1]);
        assert_eq!(sector_of(5, 3, 1).k, vec![1, 2]);
        assert_eq!(sectors(2, 2).len(), 6);
        let k = SectorLabel::new(vec![1, 1, 0]);
        assert_eq!(sector_indices(&k, 2, 2), vec![1, 3]);
        assert_eq!(chi_signs(1, 3), vec![Chi::Minus; 3]);
        assert_eq!(chi_signs(3, 3), vec![Chi::Minus, Chi::Plus, Chi::Plus]);
    }

    #[test]
    fn monodromy_small_cases() {
        let ctx = QContext::real(0.7).unwrap();
        for l in 1..=3 {
            let lop = build_l(c(0.4), &GradingConfig::uniform(l), &ctx);
            assert_eq!(monodromy_entry(&lop, &[2], &[1], &ctx), lop.entry(2, 1).clone());
            let sq = monodromy_entry(&lop, &[1, 1], &[1, 1], &ctx);
            assert_eq!(sq, OscExpr::q_pow_n(l, 1, ExpKey::int(2)));
        }
        let lop = build_l(c(0.4), &GradingConfig::uniform(1), &ctx);
        let fwd = monodromy_entry(&lop, &[1, 2], &[2, 1], &ctx);
        let rev = lop.entry(1, 2).multiply(lop.entry(2, 1), &ctx);
        assert!(!fwd.approx_eq(&rev, 1e-8));
    }

    #[test]
    fn off_sector_entries_vanish() {
        let chain = Chain::standard(2, 2, 0.7).unwrap();
        let ctx = &chain.ctx;
        for a in 1..=3 {
            let lop = build_l_a(a, c(0.5), &chain.grading, ctx).unwrap();
            let tw = twist_diagonal(a, 2);
            let signs = chi_signs(a, 2);
            for i in 0..9 {
                for j in 0..9 {
                    if sector_of(i, 2, 2) == sector_of(j, 2, 2) {
                        continue;
                    }
                    let di: Vec<usize> = basis_digits(i, 2, 3).iter().map(|x| x + 1).collect();
                    let dj: Vec<usize> = basis_digits(j, 2, 3).iter().map(|x| x + 1).collect();
                    let m = monodromy_entry(&lop, &di, &dj, ctx).multiply(&tw, ctx);
                    assert_eq!(m.trace_exact(&signs, ctx).unwrap(), Complex64::zero());
                }
            }
        }
    }

    #[test]
    fn single_site_matches_truncated_traces() {
        let twist = TwistConfig::new(vec![-2.3, 0.43]);
        let chain = Chain::new(1, 1, twist, GradingConfig::uniform(1), QContext::real(0.7).unwrap()).unwrap();
        let ctx = &chain.ctx;
        let zeta = c(0.45);
        let q = chain.q_prime(2, zeta).unwrap();
        let lop = build_l_a(2, zeta, &chain.grading, ctx).unwrap();
        let tw = twist_diagonal(2, 1);
        let fock = [TruncatedFock::new(60, Chi::Plus, ctx)];
        for i in 1..=2 {
            for j in 1..=2 {
                let m = lop.entry(i, j).multiply(&tw, ctx);
                let t = truncated_trace(&m, &fock);
                assert!((t - q.matrix[(i - 1, j - 1)]).norm() < 1e-10 * t.norm().max(1.0));
            }
        }
        // The dense oracle agrees with the per-mode shortcut.
        let m = lop.entry(1, 1).multiply(&tw, ctx);
        let dense = to_truncated(&m, &fock).trace();
        assert!((dense - truncated_trace(&m, &fock)).norm() < 1e-12);
    }

    #[test]
    fn depends_on_zeta_power_only() {
        let chain = Chain::standard(2, 2, 0.7).unwrap();
        let z = c(0.6);
        let rot = z * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / chain.s());
        for a in 1..=3 {
            let x = chain.q_prime(a, z).unwrap();
            let y = chain.q_prime(a, rot).unwrap();
            assert!(rel_diff(&x.matrix, &y.matrix) < 1e-10);
        }
    }

    #[test]
    fn dressing_relations() {
        let chain = Chain::standard(2, 2, 0.7).unwrap();
        let s = chain.s();
        for k in sectors(2, 2) {
            for b in 1..=3 {
                for cc in 1..=3 {
                    let lhs = 2.0 * (chain.dressing_exponent(b, &k) - chain.dressing_exponent(cc, &k)) / s;
                    let rhs =
                        -(k.k[b - 1] as f64) + k.k[cc - 1] as f64 + chain.twist.tau[b - 1] - chain.twist.tau[cc - 1];
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
        let zero = Chain::new(
            2,
            3,
            TwistConfig::new(vec![0.0; 3]),
            GradingConfig::uniform(2),
            QContext::real(0.7).unwrap(),
        )
        .unwrap();
        let bal = SectorLabel::new(vec![1, 1, 1]);
        for a in 1..=3 {
            assert!(zero.dressing_exponent(a, &bal).abs() < 1e-15);
        }
        let one = Chain::standard(1, 1, 0.7).unwrap();
        let k = SectorLabel::new(vec![1, 0]);
        let t1 = one.twist.tau[0] - one.twist.tau[1];
        assert!((one.dressing_exponent(1, &k) - (one.s() / 4.0) * -(1.0 - t1)).abs() < 1e-14);
    }

    #[test]
    fn commuting_family() {
        let chain = Chain::standard(1, 2, 0.7).unwrap();
        let z = [c(0.35), c(0.55)];
        for a in 1..=2 {
            for b in 1..=2 {
                let x = chain.q_operator(a, z[0]).unwrap();
                let y = chain.q_operator(b, z[1]).unwrap();
                assert!(rel_commutator(&x.matrix, &y.matrix) < 1e-10);
                assert_eq!(x.off_sector_max(), 0.0);
            }
        }
    }

    #[test]
    fn unit_relation() {
        for (l, n) in [(1, 1), (1, 2), (2, 1)] {
            let chain = Chain::standard(l, n, 0.7).unwrap();
            let c_l = chain.c_l_diagonal().unwrap();
            let all: Vec<usize> = (1..=l + 1).collect();
            for z in [0.3, 0.5] {
                let zeta = c(z);
                let q = chain.generalized_q(&all, zeta).unwrap();
                let f = (Complex64::one() - zeta.powi(chain.s() as i32)).powi(n as i32);
                let want = CMat::from_diagonal(&c_l.map(|v| v * f));
                assert!(
                    rel_diff(&q.matrix, &want) < 1e-9,
                    "l={l} n={n}: {}",
                    rel_diff(&q.matrix, &want)
                );
            }
        }
    }

    #[test]
    fn generalized_labels() {
        let chain = Chain::standard(1, 2, 0.7).unwrap();
        let e = chain.generalized_q(&[], c(0.4)).unwrap();
        assert_eq!(e.matrix, CMat::identity(4, 4));
        assert!(matches!(
            chain.generalized_q(&[1, 1], c(0.4)),
            Err(Error::RepeatedIndex(1))
        ));
        let a = chain.generalized_q(&[1, 2], c(0.4)).unwrap();
        let b = chain.generalized_q(&[2, 1], c(0.4)).unwrap();
        assert!(rel_diff(&a.matrix, &(-b.matrix)) < 1e-12);
    }

    #[test]
    fn cartan_diagonal_single_site() {
        let chain = Chain::standard(1, 1, 0.7).unwrap();
        let d = chain.c_l_diagonal().unwrap();
        let e = 1.0 - (chain.twist.tau[0] - chain.twist.tau[1]);
        let want = 0.7f64.powf(e / 2.0) / (1.0 - 0.7f64.powf(e));
        assert!((d[0].re - want).abs() < 1e-12 * want.abs());
        let bad = Chain::new(
            1,
            1,
            TwistConfig::new(vec![1.0, 0.0]),
            GradingConfig::uniform(1),
            QContext::real(0.7).unwrap(),
        )
        .unwrap();
        assert!(matches!(bad.c_l_diagonal(), Err(Error::CartanPole { .. })));
    }

    #[test]
    fn persistence_round_trip() {
        let chain = Chain::standard(1, 2, 0.7).unwrap();
        let q = chain.q_operator(1, c(0.4)).unwrap();
        let dir = std::env::temp_dir().join(format!("loopq-persist-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let stem = dir.join("q1");
        save_operator(&q, &chain, &stem).unwrap();
        let (back, meta) = load_operator(&stem).unwrap();
        assert_eq!(back.matrix, q.matrix);
        assert_eq!(meta.rows, 4);
        fs::remove_dir_all(&dir).unwrap();
    }
}

//! The q-oscillator algebra `Osc_q^{⊗l}` in exact normal-ordered form.
//!
//! Each mode carries generators `b`, `b†` and `q^{νN}` subject to
//! `b†b = [N]_q`, `bb† = [N+1]_q`, `q^{νN} b† q^{−νN} = q^ν b†`. Products
//! are rewritten to sums of `b†^α b^β q^{EN}` per mode, with exponents kept
//! as exact [`ExpKey`]s, and traced in closed form over `χ±`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnum::{ExpKey, QContext};

/// One mode of a normal-ordered monomial: `b†^alpha b^beta q^{exp·N}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeFactor {
    pub alpha: u32,
    pub beta: u32,
    pub exp: ExpKey,
}

impl ModeFactor {
    pub fn unit() -> Self {
        Self {
            alpha: 0,
            beta: 0,
            exp: ExpKey::zero(),
        }
    }

    pub fn grade(&self) -> i64 {
        self.alpha as i64 - self.beta as i64
    }
}

/// A coefficient times one [`ModeFactor`] per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscMonomial {
    pub coeff: Complex64,
    pub modes: Vec<ModeFactor>,
}

/// The two Fock modules of a single oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chi {
    Plus,
    Minus,
}

/// Finite sum of normal-ordered monomials over a fixed number of modes.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExprRepr", from = "ExprRepr")]
pub struct OscExpr {
    modes: usize,
    terms: BTreeMap<Vec<ModeFactor>, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct ExprRepr {
    modes: usize,
    terms: Vec<OscMonomial>,
}

impl From<OscExpr> for ExprRepr {
    fn from(e: OscExpr) -> Self {
        ExprRepr {
            modes: e.modes,
            terms: e.monomials().collect(),
        }
    }
}

impl From<ExprRepr> for OscExpr {
    fn from(r: ExprRepr) -> Self {
        let mut e = OscExpr::zero(r.modes);
        for m in r.terms {
            *e.terms.entry(m.modes).or_insert_with(Complex64::zero) += m.coeff;
        }
        e
    }
}

/// Sums keyed terms and drops those that cancel relative to their inputs.
struct Accumulator<K: Ord> {
    map: BTreeMap<K, (Complex64, f64)>,
}

impl<K: Ord> Accumulator<K> {
    fn new() -> Self {
        Self { map: BTreeMap::new() }
    }

    fn add(&mut self, key: K, c: Complex64) {
        let e = self.map.entry(key).or_insert((Complex64::zero(), 0.0));
        e.0 += c;
        e.1 = e.1.max(c.norm());
    }

    fn finish(self, tol: f64) -> BTreeMap<K, Complex64> {
        self.map
            .into_iter()
            .filter(|(_, (s, m))| s.norm() > tol * m && *s != Complex64::zero())
            .map(|(k, (s, _))| (k, s))
            .collect()
    }
}

type ExpPoly = BTreeMap<ExpKey, Complex64>;

/// `G(N) ↦ G(N) [N + c]_q`.
fn times_q_number_shift(g: &ExpPoly, c: i64, ctx: &QContext) -> ExpPoly {
    let kinv = ctx.kappa().inv();
    let up = ctx.qpow_int(c) * kinv;
    let down = -ctx.qpow_int(-c) * kinv;
    let mut acc = Accumulator::new();
    for (e, v) in g {
        acc.add(e + &ExpKey::int(1), v * up);
        acc.add(e - &ExpKey::int(1), v * down);
    }
    acc.finish(ctx.tolerance())
}

/// Normal-ordered product of two single-mode factors.
fn mode_product(f1: &ModeFactor, f2: &ModeFactor, ctx: &QContext) -> Vec<(ModeFactor, Complex64)> {
    let grade2 = f2.alpha as i64 - f2.beta as i64;
    let c0 = if grade2 == 0 || f1.exp.is_zero() {
        Complex64::one()
    } else {
        ctx.qpow_key(&f1.exp.scale_int(grade2))
    };

    // b^{β1} b†^{α2} = Σ b†^x b^y G(N)
    let mut unit = ExpPoly::new();
    unit.insert(ExpKey::zero(), Complex64::one());
    let mut parts: Vec<(u32, u32, ExpPoly)> = vec![(f2.alpha, 0, unit)];
    for _ in 0..f1.beta {
        let mut next: BTreeMap<(u32, u32), Accumulator<ExpKey>> = BTreeMap::new();
        for (x, y, g) in parts {
            let (nx, ny, ng) = if x >= 1 {
                (x - 1, y, times_q_number_shift(&g, x as i64 - y as i64, ctx))
            } else {
                (x, y + 1, g)
            };
            let acc = next.entry((nx, ny)).or_insert_with(Accumulator::new);
            for (e, v) in ng {
                acc.add(e, v);
            }
        }
        parts = next
            .into_iter()
            .map(|((x, y), acc)| (x, y, acc.finish(ctx.tolerance())))
            .collect();
    }

    let total = &f1.exp + &f2.exp;
    let mut out = Vec::new();
    for (x, y, g) in parts {
        for (e, v) in g {
            let shift = if f2.beta == 0 || e.is_zero() {
                Complex64::one()
            } else {
                ctx.qpow_key(&e.scale_int(-(f2.beta as i64)))
            };
            out.extend(canonical(f1.alpha + x, y + f2.beta, &e + &total, c0 * v * shift, ctx));
        }
    }
    out
}

/// Rewrites `b†^α b^β q^{EN}` so that `min(α, β) = 0`, using
/// `b†^m b^m = [N]_q [N−1]_q ⋯ [N−m+1]_q`.
fn canonical(alpha: u32, beta: u32, exp: ExpKey, coeff: Complex64, ctx: &QContext) -> Vec<(ModeFactor, Complex64)> {
    let m = alpha.min(beta);
    if m == 0 {
        return vec![(ModeFactor { alpha, beta, exp }, coeff)];
    }
    let mut g = ExpPoly::new();
    g.insert(ExpKey::zero(), Complex64::one());
    for j in 0..m {
        g = times_q_number_shift(&g, -(j as i64), ctx);
    }
    let rest = (beta - m) as i64;
    g.into_iter()
        .map(|(e, v)| {
            let shift = if rest == 0 {
                Complex64::one()
            } else {
                ctx.qpow_key(&e.scale_int(-rest))
            };
            (
                ModeFactor {
                    alpha: alpha - m,
                    beta: beta - m,
                    exp: &e + &exp,
                },
                coeff * v * shift,
            )
        })
        .collect()
}

impl OscExpr {
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(modes: usize, c: Complex64) -> Self {
        let mut e = Self::zero(modes);
        if c != Complex64::zero() {
            e.terms.insert(vec![ModeFactor::unit(); modes], c);
        }
        e
    }

    pub fn one(modes: usize) -> Self {
        Self::scalar(modes, Complex64::one())
    }

    /// `coeff · Π_k b_k†^α b_k^β q^{E N_k}` from `(k, α, β, E)` with `k` 1-based.
    ///
    /// Each mode must already be canonical (`α = 0` or `β = 0`); see [`OscExpr::word`].
    pub fn monomial(modes: usize, coeff: Complex64, factors: &[(usize, u32, u32, ExpKey)]) -> Self {
        let mut key = vec![ModeFactor::unit(); modes];
        for (k, alpha, beta, exp) in factors {
            assert!(alpha.min(beta) == &0, "non-canonical factor on mode {k}");
            let f = &mut key[k - 1];
            f.alpha = *alpha;
            f.beta = *beta;
            f.exp = exp.clone();
        }
        let mut e = Self::zero(modes);
        if coeff != Complex64::zero() {
            e.terms.insert(key, coeff);
        }
        e
    }

    /// `coeff · Π_k b_k†^α b_k^β q^{E N_k}` for arbitrary powers, brought to canonical form.
    pub fn word(modes: usize, coeff: Complex64, factors: &[(usize, u32, u32, ExpKey)], ctx: &QContext) -> Self {
        let mut per_mode: Vec<Vec<(ModeFactor, Complex64)>> = vec![vec![(ModeFactor::unit(), Complex64::one())]; modes];
        for (k, alpha, beta, exp) in factors {
            per_mode[k - 1] = canonical(*alpha, *beta, exp.clone(), Complex64::one(), ctx);
        }
        let mut acc = Accumulator::new();
        let mut partial: Vec<(Vec<ModeFactor>, Complex64)> = vec![(Vec::new(), coeff)];
        for options in &per_mode {
            let mut next = Vec::new();
            for (key, c) in &partial {
                for (f, v) in options {
                    let mut nk = key.clone();
                    nk.push(f.clone());
                    next.push((nk, c * v));
                }
            }
            partial = next;
        }
        for (key, c) in partial {
            acc.add(key, c);
        }
        Self {
            modes,
            terms: acc.finish(ctx.tolerance()),
        }
    }

    pub fn b(modes: usize, k: usize) -> Self {
        Self::monomial(modes, Complex64::one(), &[(k, 0, 1, ExpKey::zero())])
    }

    pub fn bdag(modes: usize, k: usize) -> Self {
        Self::monomial(modes, Complex64::one(), &[(k, 1, 0, ExpKey::zero())])
    }

    /// `q^{E N_k}`.
    pub fn q_pow_n(modes: usize, k: usize, exp: ExpKey) -> Self {
        Self::monomial(modes, Complex64::one(), &[(k, 0, 0, exp)])
    }

    /// `q^{Σ_k E_k N_k}` from one exponent per mode.
    pub fn q_pow_n_multi(exps: &[ExpKey]) -> Self {
        let key = exps
            .iter()
            .map(|e| ModeFactor {
                alpha: 0,
                beta: 0,
                exp: e.clone(),
            })
            .collect();
        let mut e = Self::zero(exps.len());
        e.terms.insert(key, Complex64::one());
        e
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn monomials(&self) -> impl Iterator<Item = OscMonomial> + '_ {
        self.terms.iter().map(|(k, c)| OscMonomial {
            coeff: *c,
            modes: k.clone(),
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[ModeFactor], &Complex64)> {
        self.terms.iter().map(|(k, c)| (k.as_slice(), c))
    }

    /// Coefficient of the monomial with the given key, zero if absent.
    pub fn coeff(&self, key: &[ModeFactor]) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Per-mode grade `α_k − β_k`, if every monomial agrees.
    pub fn grade(&self) -> Option<Vec<i64>> {
        let mut it = self.terms.keys();
        let first: Vec<i64> = it.next()?.iter().map(ModeFactor::grade).collect();
        for k in it {
            if k.iter().map(ModeFactor::grade).ne(first.iter().copied()) {
                return None;
            }
        }
        Some(first)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::zero() {
            return Self::zero(self.modes);
        }
        Self {
            modes: self.modes,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    fn combine(&self, other: &Self, sign: f64, tol: f64) -> Self {
        assert_eq!(self.modes, other.modes, "mode count mismatch");
        let mut acc = Accumulator::new();
        for (k, v) in &self.terms {
            acc.add(k.clone(), *v);
        }
        for (k, v) in &other.terms {
            acc.add(k.clone(), v * sign);
        }
        Self {
            modes: self.modes,
            terms: acc.finish(tol),
        }
    }

    pub fn add(&self, other: &Self, ctx: &QContext) -> Self {
        self.combine(other, 1.0, ctx.tolerance())
    }

    pub fn sub(&self, other: &Self, ctx: &QContext) -> Self {
        self.combine(other, -1.0, ctx.tolerance())
    }

    /// Normal-ordered product `self · other`.
    pub fn multiply(&self, other: &Self, ctx: &QContext) -> Self {
        assert_eq!(self.modes, other.modes, "mode count mismatch");
        let mut acc = Accumulator::new();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let per_mode: Vec<Vec<(ModeFactor, Complex64)>> =
                    k1.iter().zip(k2).map(|(f1, f2)| mode_product(f1, f2, ctx)).collect();
                let mut partial: Vec<(Vec<ModeFactor>, Complex64)> = vec![(Vec::new(), c1 * c2)];
                for options in &per_mode {
                    let mut next = Vec::with_capacity(partial.len() * options.len());
                    for (key, c) in &partial {
                        for (f, v) in options {
                            let mut nk = key.clone();
                            nk.push(f.clone());
                            next.push((nk, c * v));
                        }
                    }
                    partial = next;
                }
                for (key, c) in partial {
                    acc.add(key, c);
                }
            }
        }
        Self {
            modes: self.modes,
            terms: acc.finish(ctx.tolerance()),
        }
    }

    /// Difference vanishes after relative pruning.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.modes != other.modes {
            return false;
        }
        let scale = self.max_coeff().max(other.max_coeff()).max(1e-300);
        let mut keys: Vec<&Vec<ModeFactor>> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.into_iter()
            .all(|k| (self.coeff(k) - other.coeff(k)).norm() <= tol * scale)
    }

    /// Closed-form trace over `χ_{signs[0]} ⊗ … ⊗ χ_{signs[l-1]}`.
    pub fn trace_exact(&self, signs: &[Chi], ctx: &QContext) -> Result<Complex64> {
        assert_eq!(signs.len(), self.modes, "one sign per mode");
        let mut total = Complex64::zero();
        let mut cache: BTreeMap<(usize, u32, ExpKey), Complex64> = BTreeMap::new();
        'outer: for (key, c) in &self.terms {
            let mut prod = *c;
            for f in key {
                if f.alpha != f.beta {
                    continue 'outer;
                }
            }
            for (k, f) in key.iter().enumerate() {
                let ck = (k, f.alpha, f.exp.clone());
                let t = match cache.get(&ck) {
                    Some(t) => *t,
                    None => {
                        let t = mode_trace(f.alpha, &f.exp, signs[k], ctx)?;
                        cache.insert(ck, t);
                        t
                    }
                };
                prod *= t;
            }
            total += prod;
        }
        Ok(total)
    }
}

/// Trace of `b†^α b^α q^{EN}` on one Fock module.
fn mode_trace(alpha: u32, exp: &ExpKey, sign: Chi, ctx: &QContext) -> Result<Complex64> {
    let mut g = ExpPoly::new();
    g.insert(exp.clone(), Complex64::one());
    for j in 0..alpha {
        g = times_q_number_shift(&g, -(j as i64), ctx);
    }
    let s = match sign {
        Chi::Plus => 1.0,
        Chi::Minus => -1.0,
    };
    let mut t = Complex64::zero();
    for (e, v) in g {
        let den = Complex64::one() - ctx.qpow_key(&e);
        if den.norm() < ctx.tolerance() {
            return Err(Error::TracePole {
                exponent: e.to_string(),
                magnitude: den.norm(),
            });
        }
        t += v * s / den;
    }
    Ok(t)
}

impl fmt::Debug for OscExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for OscExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (key, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (k, m) in key.iter().enumerate() {
                if m.alpha > 0 {
                    write!(f, " b†{}^{}", k + 1, m.alpha)?;
                }
                if m.beta > 0 {
                    write!(f, " b{}^{}", k + 1, m.beta)?;
                }
                if !m.exp.is_zero() {
                    write!(f, " q^[({})N{}]", m.exp, k + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Truncated Fock module `span{w_0..w_{cutoff-1}}` of one oscillator.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub cutoff: usize,
    pub sign: Chi,
    pub b: DMatrix<Complex64>,
    pub bdag: DMatrix<Complex64>,
    q: Complex64,
    tau: Vec<f64>,
}

impl TruncatedFock {
    pub fn new(cutoff: usize, sign: Chi, ctx: &QContext) -> Self {
        assert!(cutoff >= 1, "cutoff must be positive");
        let qn = |n: usize| (ctx.qpow_int(n as i64) - ctx.qpow_int(-(n as i64))) / ctx.kappa();
        let mut b = DMatrix::zeros(cutoff, cutoff);
        let mut bdag = DMatrix::zeros(cutoff, cutoff);
        for n in 0..cutoff {
            match sign {
                Chi::Plus => {
                    if n + 1 < cutoff {
                        bdag[(n + 1, n)] = Complex64::one();
                    }
                    if n >= 1 {
                        b[(n - 1, n)] = qn(n);
                    }
                }
                Chi::Minus => {
                    if n + 1 < cutoff {
                        b[(n + 1, n)] = Complex64::one();
                    }
                    if n >= 1 {
                        bdag[(n - 1, n)] = -qn(n);
                    }
                }
            }
        }
        Self {
            cutoff,
            sign,
            b,
            bdag,
            q: ctx.q(),
            tau: ctx.tau().to_vec(),
        }
    }

    /// Diagonal of `q^{νN}`.
    pub fn q_pow_n_diag(&self, nu: f64) -> Vec<Complex64> {
        let lnq = self.q.ln();
        (0..self.cutoff)
            .map(|n| {
                let e = match self.sign {
                    Chi::Plus => nu * n as f64,
                    Chi::Minus => -nu * (n as f64 + 1.0),
                };
                (lnq * e).exp()
            })
            .collect()
    }

    pub fn q_pow_n(&self, nu: f64) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.q_pow_n_diag(nu)))
    }

    /// Matrix of `b†^α b^β q^{EN}` on this module.
    pub fn factor_matrix(&self, f: &ModeFactor) -> DMatrix<Complex64> {
        let mut m = self.q_pow_n(f.exp.eval(&self.tau));
        for _ in 0..f.beta {
            m = &self.b * m;
        }
        for _ in 0..f.alpha {
            m = &self.bdag * m;
        }
        m
    }
}

/// Dense matrix of `x` on `⊗_k` truncated modules (Kronecker order: mode 1 first).
pub fn to_truncated(x: &OscExpr, focks: &[TruncatedFock]) -> DMatrix<Complex64> {
    assert_eq!(focks.len(), x.modes(), "one module per mode");
    let dim: usize = focks.iter().map(|f| f.cutoff).product();
    let mut out = DMatrix::zeros(dim, dim);
    for (key, c) in x.terms() {
        let mut m = DMatrix::from_element(1, 1, *c);
        for (f, fock) in key.iter().zip(focks) {
            m = m.kronecker(&fock.factor_matrix(f));
        }
        out += m;
    }
    if x.modes() == 0 {
        return DMatrix::from_element(1, 1, x.coeff(&[]));
    }
    out
}

/// Trace of `x` on truncated modules, computed per mode without forming Kronecker products.
pub fn truncated_trace(x: &OscExpr, focks: &[TruncatedFock]) -> Complex64 {
    let mut total = Complex64::zero();
    for (key, c) in x.terms() {
        let mut prod = *c;
        for (f, fock) in key.iter().zip(focks) {
            prod *= fock.factor_matrix(f).trace();
        }
        total += prod;
    }
    total
}

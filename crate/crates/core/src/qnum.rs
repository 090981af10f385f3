//! Scalar q-arithmetic, exact exponent keys and the normalization series `F_{l+1}`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of terms summed by [`f_series`].
pub const SERIES_TERM_CAP: usize = 100_000;

/// Branch convention for complex powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Branch {
    #[default]
    Principal,
}

/// Numeric context: deformation parameter, tolerances and twist values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QContext {
    q: Complex64,
    tolerance: f64,
    series_tolerance: f64,
    tau: Vec<f64>,
    branch: Branch,
}

impl QContext {
    /// Builds a context, rejecting `q` near `0`, `1` or `-1`.
    pub fn new(q: Complex64) -> Result<Self> {
        let tolerance = 1e-12;
        if q.norm() < tolerance {
            return Err(Error::DegenerateContext("q = 0".into()));
        }
        if (q - 1.0).norm() < tolerance || (q + 1.0).norm() < tolerance {
            return Err(Error::DegenerateContext(format!("q = {q} is ±1")));
        }
        Ok(Self {
            q,
            tolerance,
            series_tolerance: 1e-17,
            tau: Vec::new(),
            branch: Branch::Principal,
        })
    }

    pub fn real(q: f64) -> Result<Self> {
        Self::new(Complex64::new(q, 0.0))
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_series_tolerance(mut self, tolerance: f64) -> Self {
        self.series_tolerance = tolerance;
        self
    }

    /// Twist values `τ_1..τ_{l+1}` used to evaluate [`ExpKey`]s.
    pub fn with_tau(mut self, tau: &[f64]) -> Self {
        self.tau = tau.to_vec();
        self
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// `κ_q = q - q^{-1}`, always recomputed from `q`.
    pub fn kappa(&self) -> Complex64 {
        self.q - self.q.inv()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn series_tolerance(&self) -> f64 {
        self.series_tolerance
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// `q^ν` on the principal branch.
    pub fn qpow(&self, nu: Complex64) -> Complex64 {
        (nu * self.q.ln()).exp()
    }

    pub fn qpow_real(&self, nu: f64) -> Complex64 {
        if nu.fract() == 0.0 && nu.abs() < 1e6 {
            return self.q.powi(nu as i32);
        }
        self.qpow(Complex64::new(nu, 0.0))
    }

    pub fn qpow_int(&self, k: i64) -> Complex64 {
        self.q.powi(k as i32)
    }

    /// `q^E` with `E` evaluated at the context twist.
    pub fn qpow_key(&self, e: &ExpKey) -> Complex64 {
        if e.is_constant() {
            let c = e.constant;
            if *c.denom() == 1 {
                return self.qpow_int(*c.numer());
            }
        }
        self.qpow_real(e.eval(&self.tau))
    }
}

/// `[ν]_q = (q^ν − q^{−ν}) / (q − q^{−1})`.
pub fn q_number(nu: Complex64, ctx: &QContext) -> Result<Complex64> {
    let q = ctx.q();
    if (q - 1.0).norm() < ctx.tolerance() || (q + 1.0).norm() < ctx.tolerance() {
        return Err(Error::DegenerateContext(format!("q = {q} is ±1")));
    }
    Ok((ctx.qpow(nu) - ctx.qpow(-nu)) / ctx.kappa())
}

/// `1 / [m]_x`, evaluated in the form that stays bounded as `x^m` grows.
fn inv_q_number_at(x: Complex64, m: u32) -> Complex64 {
    let y = if x.norm() > 1.0 { x.inv() } else { x };
    let y2 = y * y;
    let y2m = y2.powu(m);
    if (Complex64::new(1.0, 0.0) - y2m).norm() < 1e-300 {
        return Complex64::new(1.0 / m as f64, 0.0);
    }
    y.powu(m - 1) * (1.0 - y2) / (1.0 - y2m)
}

/// `F_{l+1}(z) = Σ_{n≥1} z^n / (n [l+1]_{q^n})`.
pub fn f_series(l: usize, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(Error::Divergence(z.norm()));
    }
    if z == Complex64::zero() {
        return Ok(Complex64::zero());
    }
    let m = (l + 1) as u32;
    let q = ctx.q();
    let mut qn = Complex64::new(1.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::zero();
    for n in 1..=SERIES_TERM_CAP {
        qn *= q;
        zn *= z;
        let term = zn * inv_q_number_at(qn, m) / n as f64;
        sum += term;
        if term.norm() <= ctx.series_tolerance() * sum.norm().max(1e-300) {
            return Ok(sum);
        }
        if zn.norm() < 1e-300 {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence(SERIES_TERM_CAP))
}

/// Exact exponent `c_0 + Σ_a c_a τ_a` with rational coefficients.
///
/// The twist vector is stored without trailing zeros, so derived equality
/// and ordering are exact and canonical.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct ExpKey {
    constant: Rational64,
    twist: Vec<Rational64>,
}

impl ExpKey {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn int(c: i64) -> Self {
        Self::rational(Rational64::from_integer(c))
    }

    pub fn rational(c: Rational64) -> Self {
        Self {
            constant: c,
            twist: Vec::new(),
        }
    }

    /// The exponent `τ_a`, with `a` counted from 1.
    pub fn tau(a: usize) -> Self {
        assert!(a >= 1, "twist index starts at 1");
        let mut twist = vec![Rational64::zero(); a];
        twist[a - 1] = Rational64::from_integer(1);
        Self {
            constant: Rational64::zero(),
            twist,
        }
    }

    pub fn new(constant: Rational64, twist: Vec<Rational64>) -> Self {
        let mut k = Self { constant, twist };
        k.trim();
        k
    }

    fn trim(&mut self) {
        while self.twist.last().is_some_and(|c| c.is_zero()) {
            self.twist.pop();
        }
    }

    pub fn constant(&self) -> Rational64 {
        self.constant
    }

    /// Coefficient of `τ_a` (1-based).
    pub fn twist_coeff(&self, a: usize) -> Rational64 {
        self.twist.get(a - 1).copied().unwrap_or_else(Rational64::zero)
    }

    pub fn twist_coeffs(&self) -> &[Rational64] {
        &self.twist
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.twist.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.twist.is_empty()
    }

    pub fn scale(&self, r: Rational64) -> Self {
        Self::new(self.constant * r, self.twist.iter().map(|c| *c * r).collect())
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale(Rational64::from_integer(k))
    }

    /// Numeric value at the given twist; missing entries count as zero.
    pub fn eval(&self, tau: &[f64]) -> f64 {
        let mut v = self.constant.to_f64().unwrap_or(f64::NAN);
        for (a, c) in self.twist.iter().enumerate() {
            let t = tau.get(a).copied().unwrap_or(0.0);
            v += c.to_f64().unwrap_or(f64::NAN) * t;
        }
        v
    }
}

impl PartialOrd for ExpKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExpKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.constant
            .cmp(&other.constant)
            .then_with(|| self.twist.cmp(&other.twist))
    }
}

impl fmt::Debug for ExpKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExpKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (a, c) in self.twist.iter().enumerate() {
            if !c.is_zero() {
                write!(f, "{:+}τ{}", c, a + 1)?;
            }
        }
        Ok(())
    }
}

impl Add for &ExpKey {
    type Output = ExpKey;
    fn add(self, rhs: &ExpKey) -> ExpKey {
        let n = self.twist.len().max(rhs.twist.len());
        let twist = (0..n)
            .map(|i| {
                self.twist.get(i).copied().unwrap_or_else(Rational64::zero)
                    + rhs.twist.get(i).copied().unwrap_or_else(Rational64::zero)
            })
            .collect();
        ExpKey::new(self.constant + rhs.constant, twist)
    }
}

impl Add for ExpKey {
    type Output = ExpKey;
    fn add(self, rhs: ExpKey) -> ExpKey {
        &self + &rhs
    }
}

impl Neg for &ExpKey {
    type Output = ExpKey;
    fn neg(self) -> ExpKey {
        ExpKey {
            constant: -self.constant,
            twist: self.twist.iter().map(|c| -*c).collect(),
        }
    }
}

impl Neg for ExpKey {
    type Output = ExpKey;
    fn neg(self) -> ExpKey {
        -&self
    }
}

impl Sub for &ExpKey {
    type Output = ExpKey;
    fn sub(self, rhs: &ExpKey) -> ExpKey {
        self + &(-rhs)
    }
}

impl Sub for ExpKey {
    type Output = ExpKey;
    fn sub(self, rhs: ExpKey) -> ExpKey {
        &self - &rhs
    }
}

impl Mul<Rational64> for &ExpKey {
    type Output = ExpKey;
    fn mul(self, rhs: Rational64) -> ExpKey {
        self.scale(rhs)
    }
}

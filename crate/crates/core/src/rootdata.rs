//! Root and weight data of `gl_{l+1}`: Cartan matrix and inverse, ρ,
//! fundamental weights, and the Weyl group `S_{l+1}` with its affine action.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartan data in exact arithmetic. Weights are (l+1)-tuples in the ε basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSystem {
    pub l: usize,
    pub cartan: Vec<Vec<i64>>,
    pub cartan_inverse: Vec<Vec<Rational64>>,
    pub rho: Vec<Rational64>,
    pub fundamental_weights: Vec<Vec<Rational64>>,
}

impl RootSystem {
    pub fn new(l: usize) -> Self {
        assert!(l >= 1, "rank must be positive");
        let fundamental_weights = (1..=l + 1)
            .map(|i| {
                (1..=l + 1)
                    .map(|j| if j <= i { Rational64::one() } else { Rational64::zero() })
                    .collect()
            })
            .collect();
        Self {
            l,
            cartan: cartan_matrix(l),
            cartan_inverse: cartan_inverse(l),
            rho: rho(l),
            fundamental_weights,
        }
    }

    pub fn rho_f64(&self) -> Vec<f64> {
        self.rho.iter().map(|r| r.to_f64().unwrap()).collect()
    }
}

/// Tridiagonal `a_ij = 2δ_ij − δ_{i,j+1} − δ_{i+1,j}` of size `l × l`.
pub fn cartan_matrix(l: usize) -> Vec<Vec<i64>> {
    (0..l)
        .map(|i| {
            (0..l)
                .map(|j| match i.abs_diff(j) {
                    0 => 2,
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

/// `c_ij = i(l − j + 1)/(l + 1)` for `i ≤ j`, extended symmetrically.
pub fn cartan_inverse(l: usize) -> Vec<Vec<Rational64>> {
    let d = (l + 1) as i64;
    (1..=l as i64)
        .map(|i| {
            (1..=l as i64)
                .map(|j| {
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    Rational64::new(a * (l as i64 - b + 1), d)
                })
                .collect()
        })
        .collect()
}

/// `ρ_a = l/2 − a + 1`.
pub fn rho(l: usize) -> Vec<Rational64> {
    (1..=l as i64 + 1)
        .map(|a| Rational64::new(l as i64, 2) - Rational64::from_integer(a - 1))
        .collect()
}

/// ε-basis tuple to ω coordinates `(μ_i − μ_{i+1})_{i=1..l}`.
pub fn to_omega_coords<T>(mu: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T>,
{
    mu.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Weights `λ_1..λ_{l+1}` of the defining representation in ω coordinates.
pub fn basis_weights(l: usize) -> Vec<Vec<i64>> {
    (1..=l + 1)
        .map(|m| {
            let mut v = vec![0i64; l];
            if m <= l {
                v[m - 1] += 1;
            }
            if m >= 2 {
                v[m - 2] -= 1;
            }
            v
        })
        .collect()
}

/// A permutation of `{1..l+1}` (stored 0-based as images) with its sign.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeylElement {
    pub perm: Vec<usize>,
    pub sign: i32,
}

impl WeylElement {
    pub fn from_perm(perm: Vec<usize>) -> Self {
        let sign = parity(&perm);
        Self { perm, sign }
    }

    pub fn identity(l: usize) -> Self {
        Self::from_perm((0..=l).collect())
    }

    /// Simple reflection `r_i` swapping positions `i` and `i+1` (1-based).
    pub fn simple(l: usize, i: usize) -> Self {
        let mut p: Vec<usize> = (0..=l).collect();
        p.swap(i - 1, i);
        Self::from_perm(p)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_perm(other.perm.iter().map(|&i| self.perm[i]).collect())
    }

    /// Linear action: `(wμ)_{w(i)} = μ_i`.
    pub fn act<T: Copy + Default>(&self, mu: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); mu.len()];
        for (i, &wi) in self.perm.iter().enumerate() {
            out[wi] = mu[i];
        }
        out
    }
}

fn parity(perm: &[usize]) -> i32 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `w·μ = w(μ + ρ) − ρ`.
pub fn affine_action(w: &WeylElement, mu: &[Complex64]) -> Vec<Complex64> {
    let l = mu.len() - 1;
    let r: Vec<f64> = rho(l).iter().map(|x| x.to_f64().unwrap()).collect();
    let shifted: Vec<Complex64> = mu.iter().zip(&r).map(|(m, r)| m + r).collect();
    w.act(&shifted).into_iter().zip(&r).map(|(m, r)| m - r).collect()
}

/// All of `S_{l+1}` in lexicographic order, identity first.
pub fn weyl_enumerate(l: usize) -> Result<Vec<WeylElement>> {
    if l > 4 {
        return Err(Error::RankTooLarge(l));
    }
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..=l).collect();
    loop {
        out.push(WeylElement::from_perm(p.clone()));
        if !next_permutation(&mut p) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

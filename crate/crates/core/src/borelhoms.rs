//! Homomorphisms `o_a = o ∘ σ^{−a}` from the positive Borel subalgebra into
//! `Osc_q^{⊗l}`, and the images of the twist element `q^t`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscalg::OscExpr;
use crate::qnum::{ExpKey, QContext};
use crate::rootdata::cartan_inverse;

/// Generators of the positive Borel subalgebra: `e_i` and `q^{ν h_i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    E(usize),
    QH(usize),
}

impl FromStr for Generator {
    type Err = Error;

    /// Accepts `e0`, `e_2`, `h1`, `q^h_3`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches("q^").replace('_', "");
        let bad = || Error::UnknownGenerator(s.to_string());
        let (head, idx) = t.split_at(t.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?);
        let i: usize = idx.parse().map_err(|_| bad())?;
        match head {
            "e" => Ok(Generator::E(i)),
            "h" => Ok(Generator::QH(i)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::E(i) => write!(f, "e_{i}"),
            Generator::QH(i) => write!(f, "q^h_{i}"),
        }
    }
}

/// Twist parameters `τ_1..τ_{l+1}`; `t_a = τ_a − τ_{a+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistConfig {
    pub tau: Vec<f64>,
}

impl TwistConfig {
    pub fn new(tau: Vec<f64>) -> Self {
        Self { tau }
    }

    /// Arithmetic-like default, perturbed by irrational offsets per component.
    pub fn default_for(l: usize) -> Self {
        let tau = (0..=l)
            .map(|a| {
                let base = 3.1 - 1.2 * a as f64;
                let wobble = ((a as f64 + 1.0) * std::f64::consts::SQRT_2).fract() * 0.037;
                base + wobble
            })
            .collect();
        Self { tau }
    }

    pub fn l(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn t(&self) -> Vec<f64> {
        self.tau.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Rejects twists with `τ_i − τ_j` within `margin` of an integer.
    pub fn validate(&self, margin: f64) -> Result<()> {
        for i in 0..self.tau.len() {
            for j in i + 1..self.tau.len() {
                let d = self.tau[i] - self.tau[j];
                if (d - d.round()).abs() < margin {
                    return Err(Error::InvalidConfig(format!(
                        "twist not generic: τ_{} − τ_{} = {d} is near an integer",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Affine Cartan matrix of `sl_{l+1}` with indices `0..=l`.
pub fn affine_cartan(l: usize) -> Vec<Vec<i64>> {
    let m = l + 1;
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        2
                    } else if m == 2 {
                        -2
                    } else if (i + 1) % m == j || (j + 1) % m == i {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

/// Per-mode exponents of `o(q^{ν h_i})`.
fn base_cartan_exponents(i: usize, nu: &ExpKey, l: usize) -> Vec<ExpKey> {
    let mut e = vec![ExpKey::zero(); l];
    if i == 0 {
        for x in e.iter_mut() {
            *x = nu.clone();
        }
        e[0] = &e[0] + nu;
    } else if i < l {
        e[i] = nu.clone();
        e[i - 1] = -nu;
    } else {
        for x in e.iter_mut() {
            *x = -nu;
        }
        e[l - 1] = &e[l - 1] - nu;
    }
    e
}

fn base_e(i: usize, l: usize, ctx: &QContext) -> OscExpr {
    if i == 0 {
        let mut f = vec![(1usize, 1u32, 0u32, ExpKey::zero())];
        f.extend((2..=l).map(|k| (k, 0, 0, ExpKey::int(1))));
        OscExpr::monomial(l, Complex64::one(), &f)
    } else if i < l {
        OscExpr::monomial(
            l,
            -ctx.q().inv(),
            &[(i, 0, 1, ExpKey::int(1)), (i + 1, 1, 0, ExpKey::int(-1))],
        )
    } else {
        OscExpr::monomial(l, -ctx.kappa().inv(), &[(l, 0, 1, ExpKey::int(1))])
    }
}

/// Index of the generator that `σ^{−a}` sends `x_i` to.
pub fn rotated_index(i: usize, a: usize, l: usize) -> usize {
    let m = l + 1;
    (i + m * (a / m + 1) - a) % m
}

/// Image of a generator under `o_a`, with `q^{νh_i}` taking the exponent `ν`.
pub fn o_image(gen: Generator, nu: &ExpKey, a: usize, l: usize, ctx: &QContext) -> Result<OscExpr> {
    let i = match gen {
        Generator::E(i) | Generator::QH(i) => i,
    };
    if i > l {
        return Err(Error::UnknownGenerator(gen.to_string()));
    }
    if a == 0 {
        return Err(Error::InvalidIndex(format!("family index a = {a}")));
    }
    let j = rotated_index(i, a, l);
    Ok(match gen {
        Generator::E(_) => base_e(j, l, ctx),
        Generator::QH(_) => OscExpr::q_pow_n_multi(&base_cartan_exponents(j, nu, l)),
    })
}

/// Per-mode exponents of `o_a(q^t)` as exact linear forms in `τ`, where
/// `t = Σ_i t_i ω_i^∨` so that `α_i(t) = t_i` and `(ε_i − ε_j)(t) = τ_i − τ_j`.
pub fn twist_exponents(a: usize, l: usize) -> Vec<ExpKey> {
    let cinv = cartan_inverse(l);
    let mut total = vec![ExpKey::zero(); l];
    for i in 1..=l {
        let t = &ExpKey::tau(i) - &ExpKey::tau(i + 1);
        for j in 1..=l {
            let coeff = t.scale(cinv[i - 1][j - 1]);
            let e = base_cartan_exponents(rotated_index(j, a, l), &coeff, l);
            for (acc, x) in total.iter_mut().zip(e) {
                *acc = &*acc + &x;
            }
        }
    }
    total
}

/// `o_a(q^t)` as a single exponential monomial.
pub fn twist_diagonal(a: usize, l: usize) -> OscExpr {
    OscExpr::q_pow_n_multi(&twist_exponents(a, l))
}

/// Labels and images of all `2(l+1)` generators for a fixed family index.
#[derive(Clone, Debug)]
pub struct BorelImageTable {
    pub l: usize,
    pub a: usize,
    pub e: Vec<OscExpr>,
}

impl BorelImageTable {
    pub fn new(a: usize, l: usize, ctx: &QContext) -> Result<Self> {
        let e = (0..=l)
            .map(|i| o_image(Generator::E(i), &ExpKey::zero(), a, l, ctx))
            .collect::<Result<_>>()?;
        Ok(Self { l, a, e })
    }

    pub fn cartan(&self, i: usize, nu: &ExpKey, ctx: &QContext) -> Result<OscExpr> {
        o_image(Generator::QH(i), nu, self.a, self.l, ctx)
    }
}

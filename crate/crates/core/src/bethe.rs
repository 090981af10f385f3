//! Eigenvalue polynomials of generalized Q-operators on weight sectors, the
//! nested Bethe equations they satisfy, and a Newton solver for those equations.

use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, eigenvector, CMat};
use crate::qop::{sector_indices, Chain, SectorLabel};

/// Relative spacing below which two eigenvalues of the probe combination are treated as equal.
pub const EIGEN_SEPARATION: f64 = 1e-8;
/// Relative residual allowed when checking that a probe eigenvector is common to the family.
pub const COMMON_EIGENVECTOR_TOLERANCE: f64 = 1e-9;
/// Relative fit residual allowed for the eigenvalue polynomial.
pub const FIT_TOLERANCE: f64 = 1e-7;
/// Default Newton iteration cap.
pub const NEWTON_MAX_ITERATIONS: usize = 200;

/// Common eigenvectors of all `Q_a(ζ)` on one weight sector.
#[derive(Clone, Debug)]
pub struct SectorEigenbasis {
    pub sector: SectorLabel,
    /// Basis positions of the sector inside `(ℂ^{l+1})^{⊗n}`.
    pub indices: Vec<usize>,
    /// Unit eigenvectors in sector coordinates.
    pub vectors: Vec<DVector<Complex64>>,
}

fn block(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

impl SectorEigenbasis {
    /// Diagonalizes a random combination of `Q_a` at two spectral points and
    /// verifies that each eigenvector is shared by every `Q_a`.
    pub fn new(chain: &Chain, k: &SectorLabel, seed: u64) -> Result<Self> {
        let l = chain.l;
        if k.k.len() != l + 1 || k.n() != chain.n {
            return Err(Error::InvalidIndex(format!(
                "sector {:?} for l = {l}, n = {}",
                k.k, chain.n
            )));
        }
        let indices = sector_indices(k, chain.n, l);
        let d = indices.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes = [Complex64::new(0.37, 0.0), Complex64::new(0.58, 0.0)];
        let mut blocks = Vec::new();
        let mut combo = CMat::zeros(d, d);
        for &z in &probes {
            for a in 1..=l + 1 {
                let b = block(&chain.q_operator(a, z)?.matrix, &indices);
                let w = Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
                combo += &b * w;
                blocks.push(b);
            }
        }
        let ev = eigenvalues(&combo).ok_or_else(|| Error::EigenTracking("Schur iteration did not converge".into()))?;
        let scale = ev.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for i in 0..ev.len() {
            for j in i + 1..ev.len() {
                if (ev[i] - ev[j]).norm() < EIGEN_SEPARATION * scale {
                    return Err(Error::EigenTracking(format!(
                        "sector {:?}: eigenvalues {} and {} of the probe combination coincide",
                        k.k, ev[i], ev[j]
                    )));
                }
            }
        }
        let mut vectors = Vec::with_capacity(d);
        for &lambda in &ev {
            let v = eigenvector(&combo, lambda);
            for b in &blocks {
                let mu = v.dotc(&(b * &v));
                let res = (b * &v - &v * mu).norm() / b.norm().max(f64::MIN_POSITIVE);
                if res > COMMON_EIGENVECTOR_TOLERANCE {
                    return Err(Error::EigenTracking(format!(
                        "sector {:?}: probe eigenvector is not common to the family (residual {res:.3e})",
                        k.k
                    )));
                }
            }
            vectors.push(v);
        }
        Ok(Self {
            sector: k.clone(),
            indices,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Eigenvalue of a full-space operator along eigenline `line`.
    pub fn eigenvalue(&self, m: &CMat, line: usize) -> Complex64 {
        let v = &self.vectors[line];
        let b = block(m, &self.indices);
        v.dotc(&(b * v))
    }
}

/// `Q_{𝐚,k}(ζ) = c ζ^{ΣD} Π_j (ζ^s − z_j)` along one eigenline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BethePolynomial {
    pub a_tuple: Vec<usize>,
    pub sector: Vec<usize>,
    pub eigenline: usize,
    pub leading: Complex64,
    pub prefactor_exponent: f64,
    pub roots: Vec<Complex64>,
    pub degree: usize,
    /// Largest relative misfit at the sample points.
    pub fit_residual: f64,
}

impl BethePolynomial {
    /// `Q_∅ = 1`.
    pub fn empty(k: &SectorLabel, eigenline: usize) -> Self {
        Self {
            a_tuple: Vec::new(),
            sector: k.k.clone(),
            eigenline,
            leading: Complex64::one(),
            prefactor_exponent: 0.0,
            roots: Vec::new(),
            degree: 0,
            fit_residual: 0.0,
        }
    }

    /// `Q_{1..l+1} = (1 − ζ^s)^n ψ(C_l)`, with every root at `z = 1`.
    pub fn full(chain: &Chain, k: &SectorLabel, eigenline: usize) -> Result<Self> {
        let idx = sector_indices(k, chain.n, chain.l)[0];
        let c = chain.c_l_diagonal()?[idx];
        let sign = if chain.n.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(Self {
            a_tuple: (1..=chain.l + 1).collect(),
            sector: k.k.clone(),
            eigenline,
            leading: c * sign,
            prefactor_exponent: 0.0,
            roots: vec![Complex64::one(); chain.n],
            degree: chain.n,
            fit_residual: 0.0,
        })
    }

    pub fn eval(&self, zeta: Complex64, s: i64) -> Complex64 {
        let z = zeta.powi(s as i32);
        let pre = if self.prefactor_exponent == 0.0 {
            Complex64::one()
        } else {
            (zeta.ln() * self.prefactor_exponent).exp()
        };
        self.roots.iter().fold(self.leading * pre, |acc, r| acc * (z - r))
    }
}

/// Positive real `ζ` whose `ζ^s` sit at Chebyshev nodes of `[z_lo, z_hi]`.
pub fn chebyshev_samples(count: usize, z_lo: f64, z_hi: f64, s: i64) -> Vec<Complex64> {
    let (mid, half) = ((z_lo + z_hi) / 2.0, (z_hi - z_lo) / 2.0);
    (0..count)
        .map(|j| {
            let x = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos();
            Complex64::new((mid + half * x).powf(1.0 / s as f64), 0.0)
        })
        .collect()
}

fn horner(c: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::zero();
    let mut dp = Complex64::zero();
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Roots of `Σ c_i x^i` through the companion matrix, refined by Newton steps.
pub fn polynomial_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    if lead.norm() == 0.0 {
        return Err(Error::DegenerateRoot("vanishing leading coefficient".into()));
    }
    let mut comp = CMat::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::one();
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let mut roots = eigenvalues(&comp).ok_or_else(|| Error::DegenerateRoot("companion Schur failed".into()))?;
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = horner(c, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() <= 1e-16 * r.norm().max(1.0) {
                break;
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Sum of `D_{a,k}` over the tuple.
pub fn prefactor_exponent(chain: &Chain, a_tuple: &[usize], k: &SectorLabel) -> f64 {
    a_tuple.iter().map(|&a| chain.dressing_exponent(a, k)).sum()
}

/// Samples `Q_𝐚` along one eigenline, removes `ζ^{ΣD}`, fits a polynomial of
/// degree `k_𝐚` in `z = ζ^s` and extracts its roots.
pub fn eigen_polynomial(
    chain: &Chain,
    basis: &SectorEigenbasis,
    a_tuple: &[usize],
    eigenline: usize,
    samples: &[Complex64],
) -> Result<BethePolynomial> {
    let k = &basis.sector;
    if a_tuple.is_empty() {
        return Ok(BethePolynomial::empty(k, eigenline));
    }
    let degree = k.k_of(a_tuple);
    if samples.len() < degree + 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least {} spectral samples for degree {degree}, got {}",
            degree + 2,
            samples.len()
        )));
    }
    let s = chain.grading.total();
    let pre = prefactor_exponent(chain, a_tuple, k);
    let zs: Vec<Complex64> = samples.iter().map(|z| z.powi(s as i32)).collect();
    let vals: Vec<Complex64> = samples
        .iter()
        .map(|&z| {
            let q = chain.generalized_q(a_tuple, z)?;
            Ok(basis.eigenvalue(&q.matrix, eigenline) / (z.ln() * pre).exp())
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = zs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
        (lo.min(z.re), hi.max(z.re))
    });
    let mid = Complex64::new((lo + hi) / 2.0, 0.0);
    let half = Complex64::new(((hi - lo) / 2.0).max(1e-3), 0.0);
    let xs: Vec<Complex64> = zs.iter().map(|z| (z - mid) / half).collect();
    let vander = CMat::from_fn(xs.len(), degree + 1, |i, j| xs[i].powi(j as i32));
    let rhs = DVector::from_column_slice(&vals);
    let svd = vander.clone().svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::DegenerateRoot(e.to_string()))?;
    let fitted = &vander * &coeffs;
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let fit_residual = (0..vals.len())
        .map(|i| (fitted[i] - vals[i]).norm() / scale)
        .fold(0.0, f64::max);
    if fit_residual > FIT_TOLERANCE {
        return Err(Error::DegreeMismatch {
            expected: degree,
            residual: fit_residual,
        });
    }
    let c: Vec<Complex64> = coeffs.iter().copied().collect();
    let xroots = polynomial_roots(&c)?;
    let roots = xroots.iter().map(|x| mid + half * x).collect();
    let leading = c[degree] / half.powi(degree as i32);
    Ok(BethePolynomial {
        a_tuple: a_tuple.to_vec(),
        sector: k.k.clone(),
        eigenline,
        leading,
        prefactor_exponent: pre,
        roots,
        degree,
        fit_residual,
    })
}

/// One nested Bethe equation evaluated at one root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BAEReport {
    pub path: Vec<usize>,
    pub level: usize,
    pub root_index: usize,
    pub root: Complex64,
    pub residual: f64,
}

/// Twist prefactor and product side of the level-`i` equation at root `m`,
/// given the roots of `Q_{𝐚_{i−1}}`, `Q_{𝐚_i}`, `Q_{𝐚_{i+1}}`.
#[allow(clippy::too_many_arguments)]
pub fn bae_sides(
    path: &[usize],
    level: usize,
    prev: &[Complex64],
    cur: &[Complex64],
    next: &[Complex64],
    m: usize,
    tau: &[f64],
    q: Complex64,
) -> Result<(Complex64, Complex64)> {
    let zm = cur[m];
    let q2 = q * q;
    let lhs = (q.ln() * (tau[path[level] - 1] - tau[path[level - 1] - 1])).exp();
    let mut rhs = Complex64::one();
    let guard = |num: Complex64, den: Complex64| -> Result<Complex64> {
        if den.norm() <= 1e-13 * (num.norm() + zm.norm()).max(1e-300) {
            return Err(Error::DegenerateRoot(format!(
                "root {zm} collides with a shifted partner"
            )));
        }
        Ok(num / den)
    };
    for z in prev.iter().chain(next) {
        rhs *= guard(zm - q * z, q * zm - z)?;
    }
    for (j, z) in cur.iter().enumerate() {
        if j != m {
            rhs *= guard(q2 * zm - z, zm - q2 * z)?;
        }
    }
    Ok((lhs, rhs))
}

/// `|LHS/RHS − 1|` for the level-`i` equation at root `m`.
pub fn bae_residual(
    path: &[usize],
    level: usize,
    polys: [&BethePolynomial; 3],
    m: usize,
    tau: &[f64],
    q: Complex64,
) -> Result<BAEReport> {
    let (lhs, rhs) = bae_sides(
        path,
        level,
        &polys[0].roots,
        &polys[1].roots,
        &polys[2].roots,
        m,
        tau,
        q,
    )?;
    Ok(BAEReport {
        path: path.to_vec(),
        level,
        root_index: m,
        root: polys[1].roots[m],
        residual: (lhs / rhs - 1.0).norm(),
    })
}

/// Polynomials for `𝐚_0 .. 𝐚_{l+1}` along `path` on one eigenline.
pub fn path_polynomials(
    chain: &Chain,
    basis: &SectorEigenbasis,
    path: &[usize],
    eigenline: usize,
    samples: &[Complex64],
) -> Result<Vec<BethePolynomial>> {
    let l = chain.l;
    validate_path(path, l)?;
    let mut out = vec![BethePolynomial::empty(&basis.sector, eigenline)];
    for i in 1..=l {
        out.push(eigen_polynomial(chain, basis, &path[..i], eigenline, samples)?);
    }
    out.push(BethePolynomial::full(chain, &basis.sector, eigenline)?);
    Ok(out)
}

fn validate_path(path: &[usize], l: usize) -> Result<()> {
    let mut seen = vec![false; l + 1];
    if path.len() != l + 1 {
        return Err(Error::InvalidIndex(format!(
            "path {path:?} must be a permutation of 1..={}",
            l + 1
        )));
    }
    for &a in path {
        if a == 0 || a > l + 1 || seen[a - 1] {
            return Err(Error::InvalidIndex(format!(
                "path {path:?} must be a permutation of 1..={}",
                l + 1
            )));
        }
        seen[a - 1] = true;
    }
    Ok(())
}

/// Residuals of every level and root along `path`.
pub fn path_residuals(path: &[usize], polys: &[BethePolynomial], tau: &[f64], q: Complex64) -> Result<Vec<BAEReport>> {
    let l = polys.len() - 2;
    let mut out = Vec::new();
    for i in 1..=l {
        for m in 0..polys[i].roots.len() {
            out.push(bae_residual(
                path,
                i,
                [&polys[i - 1], &polys[i], &polys[i + 1]],
                m,
                tau,
                q,
            )?);
        }
    }
    Ok(out)
}

/// Outcome of the Newton solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSolution {
    /// Roots per level `1..=l`.
    pub roots: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn level_sizes(path: &[usize], k: &SectorLabel) -> Vec<usize> {
    (1..path.len()).map(|i| k.k_of(&path[..i])).collect()
}

fn bae_system(
    path: &[usize],
    sizes: &[usize],
    x: &[Complex64],
    n: usize,
    tau: &[f64],
    q: Complex64,
) -> Result<Vec<Complex64>> {
    let mut levels: Vec<Vec<Complex64>> = vec![Vec::new()];
    let mut off = 0;
    for &sz in sizes {
        levels.push(x[off..off + sz].to_vec());
        off += sz;
    }
    levels.push(vec![Complex64::one(); n]);
    let mut out = Vec::with_capacity(x.len());
    for i in 1..levels.len() - 1 {
        for m in 0..levels[i].len() {
            let (lhs, rhs) = bae_sides(path, i, &levels[i - 1], &levels[i], &levels[i + 1], m, tau, q)?;
            out.push((rhs / lhs).ln());
        }
    }
    Ok(out)
}

/// Damped Newton iteration on the logarithmic nested Bethe equations.
pub fn solve_bae_newton(
    path: &[usize],
    k: &SectorLabel,
    initial: &[Vec<Complex64>],
    tau: &[f64],
    q: Complex64,
    max_iterations: usize,
) -> Result<NewtonSolution> {
    let l = path.len() - 1;
    validate_path(path, l)?;
    let sizes = level_sizes(path, k);
    for (i, (init, &sz)) in initial.iter().zip(&sizes).enumerate() {
        if init.len() != sz {
            return Err(Error::InvalidConfig(format!(
                "level {} needs {sz} initial roots, got {}",
                i + 1,
                init.len()
            )));
        }
    }
    let n = k.n();
    let mut x: Vec<Complex64> = initial.iter().flatten().copied().collect();
    let dim = x.len();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let split = |x: &[Complex64]| {
        let mut out = Vec::new();
        let mut off = 0;
        for &sz in &sizes {
            out.push(x[off..off + sz].to_vec());
            off += sz;
        }
        out
    };
    if dim == 0 {
        return Ok(NewtonSolution {
            roots: vec![Vec::new(); l],
            residuals: Vec::new(),
            iterations: 0,
        });
    }
    let mut f = bae_system(path, &sizes, &x, n, tau, q)?;
    for it in 0..max_iterations {
        let fnorm = norm(&f);
        if fnorm < 1e-13 {
            let residuals = f.iter().map(|g| (g.exp() - 1.0).norm()).collect();
            return Ok(NewtonSolution {
                roots: split(&x),
                residuals,
                iterations: it,
            });
        }
        let mut jac = CMat::zeros(dim, dim);
        for j in 0..dim {
            let h = 1e-7 * x[j].norm().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let fp = bae_system(path, &sizes, &xp, n, tau, q)?;
            let fm = bae_system(path, &sizes, &xm, n, tau, q)?;
            for i in 0..dim {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&f))
            .ok_or(Error::SingularJacobian)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<Complex64> = x.iter().zip(step.iter()).map(|(a, b)| a - b * t).collect();
            if let Ok(ft) = bae_system(path, &sizes, &trial, n, tau, q) {
                if norm(&ft) < fnorm {
                    x = trial;
                    f = ft;
                    break;
                }
            }
            t /= 2.0;
            if t < 1e-10 {
                return Err(Error::NewtonNonConvergence {
                    iterations: it,
                    residual: fnorm,
                });
            }
        }
    }
    Err(Error::NewtonNonConvergence {
        iterations: max_iterations,
        residual: norm(&f),
    })
}

/// Master TQ relation on the eigenvalues of one eigenline.
pub fn scalar_master_tq(
    rel: &crate::funcrel::Relations<'_>,
    basis: &SectorEigenbasis,
    eigenline: usize,
    a: usize,
    mu: &[Complex64],
    zeta: Complex64,
) -> Result<f64> {
    let l = rel.l();
    let mut acc = Complex64::zero();
    let mut scale: f64 = f64::MIN_POSITIVE;
    for b in 0..l + 2 {
        let hat: Vec<Complex64> = mu
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != b)
            .map(|(_, &x)| x)
            .collect();
        let s = basis.eigenvalue(&rel.s_op(&hat, zeta)?, eigenline);
        let qv = basis.eigenvalue(&rel.q(a, rel.shift(zeta, 2.0 * mu[b]))?, eigenline);
        let term = s * qv * if b % 2 == 0 { 1.0 } else { -1.0 };
        scale = scale.max(term.norm());
        acc += term;
    }
    Ok(acc.norm() / scale)
}

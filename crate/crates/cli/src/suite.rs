//! Suite orchestration: builds the list of checks from a configuration, runs
//! independent checks on a worker pool and assembles the report in a fixed order.

use std::time::Instant;

use loopq::bethe::{chebyshev_samples, path_polynomials, path_residuals, BAEReport, BethePolynomial, SectorEigenbasis};
use loopq::funcrel::{RelationReport, Relations};
use loopq::fundrep::DIRECT_MAX_SITES;
use loopq::lop::GradingConfig;
use loopq::lweight::{
    check_shifted_product, delta_n_prime, is_primed, lambda_m_weight, m_from_n, xi_factors, xi_weight, QExp,
};
use loopq::qnum::QContext;
use loopq::qop::{sectors, Chain, SectorLabel};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

type SectorLines = Vec<(BetheLine, Vec<BAEReport>)>;

pub const SCHEMA_VERSION: u32 = 1;

/// One relation check, with its inputs fixed before any work starts.
#[derive(Clone, Debug)]
enum RelationCheck {
    Commuting(Complex64, Complex64),
    Unit(Complex64),
    MasterTq(usize, Vec<Complex64>, Complex64),
    MasterTt(Vec<Complex64>, Complex64),
    TSystem(usize, i64, Complex64),
    JacobiTrudi(usize, usize, Complex64),
    QqJacobi(Vec<usize>, usize, usize, Complex64),
    ConstantWeight(Complex64, Complex64),
    Shift(Vec<Complex64>, Complex64, Complex64),
    WeylAntisymmetry(Vec<Complex64>, usize, Complex64),
    Direct(Vec<Complex64>),
}

impl RelationCheck {
    fn run(&self, rel: &Relations, tol: f64, direct_tol: f64) -> loopq::Result<RelationReport> {
        match self {
            Self::Commuting(a, b) => rel.check_commuting(*a, *b, tol),
            Self::Unit(z) => rel.check_unit(*z, tol),
            Self::MasterTq(a, mu, z) => rel.check_master_tq(*a, mu, *z, tol),
            Self::MasterTt(mu, z) => rel.check_master_tt(mu, *z, tol),
            Self::TSystem(a, m, z) => rel.check_t_system(*a, *m, *z, tol),
            Self::JacobiTrudi(a, m, z) => rel.check_jacobi_trudi(*a, *m, *z, tol),
            Self::QqJacobi(a, b, c, z) => rel.check_qq_jacobi(a, *b, *c, *z, tol),
            Self::ConstantWeight(nu, z) => rel.check_constant_weight(*nu, *z, tol),
            Self::Shift(mu, nu, z) => rel.check_shift(mu, *nu, *z, tol),
            Self::WeylAntisymmetry(mu, i, z) => rel.check_weyl_antisymmetry(mu, *i, *z, tol),
            Self::Direct(zs) => rel.check_direct_vs_q(zs, direct_tol),
        }
    }
}

fn real_tuple(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
        .collect()
}

/// Every `(𝐚, b, c)` with `𝐚 ∪ {b, c}` of distinct indices in `1..=l+1`.
pub fn qq_jacobi_index_choices(l: usize) -> Vec<(Vec<usize>, usize, usize)> {
    let all: Vec<usize> = (1..=l + 1).collect();
    let mut out = Vec::new();
    for mask in 0..(1u32 << (l + 1)) {
        let a: Vec<usize> = all.iter().copied().filter(|i| mask & (1 << (i - 1)) != 0).collect();
        if a.len() + 2 > l + 1 {
            continue;
        }
        for &b in &all {
            for &c in &all {
                if b < c && !a.contains(&b) && !a.contains(&c) {
                    out.push((a.clone(), b, c));
                }
            }
        }
    }
    out
}

fn relation_checks(config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<RelationCheck> {
    let l = config.l;
    let zetas = config.zetas();
    let mut checks = Vec::new();
    for (idx, &z) in zetas.iter().enumerate() {
        checks.push(RelationCheck::Commuting(z, zetas[(idx + 1) % zetas.len()]));
        checks.push(RelationCheck::Unit(z));
        for a in 1..=l + 1 {
            checks.push(RelationCheck::MasterTq(a, real_tuple(rng, l + 2), z));
        }
        checks.push(RelationCheck::MasterTt(real_tuple(rng, 2 * l + 2), z));
        checks.push(RelationCheck::TSystem(1, 1, z));
        checks.push(RelationCheck::JacobiTrudi(1, 2, z));
        for (a, b, c) in qq_jacobi_index_choices(l) {
            checks.push(RelationCheck::QqJacobi(a, b, c, z));
        }
        checks.push(RelationCheck::ConstantWeight(real_tuple(rng, 1)[0], z));
        let mu = real_tuple(rng, l + 1);
        checks.push(RelationCheck::Shift(mu.clone(), real_tuple(rng, 1)[0] * 0.4, z));
        for i in 1..=l {
            checks.push(RelationCheck::WeylAntisymmetry(mu.clone(), i, z));
        }
    }
    if config.n <= DIRECT_MAX_SITES {
        checks.push(RelationCheck::Direct(zetas));
    }
    checks
}

/// Roots along one path on one eigenline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheLine {
    pub sector: Vec<usize>,
    pub eigenline: usize,
    pub path: Vec<usize>,
    pub polynomials: Vec<BethePolynomial>,
}

/// One exact or numeric ℓ-weight identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LWeightCheck {
    pub kind: String,
    pub parameters: String,
    pub residual: f64,
    pub exact_match: bool,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub relations_seconds: f64,
    pub bethe_seconds: f64,
    pub lweights_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub loopq: String,
    pub loopq_cli: String,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            loopq: loopq::VERSION.to_string(),
            loopq_cli: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    pub versions: Versions,
    pub relations: Vec<RelationReport>,
    pub bethe: Vec<BetheLine>,
    pub bae: Vec<BAEReport>,
    pub lweights: Vec<LWeightCheck>,
    pub timing: Timing,
    pub passed: bool,
}

impl Report {
    /// Number of failing entries across all families.
    pub fn failures(&self) -> usize {
        let tol = self.config.tolerances.bethe;
        self.relations.iter().filter(|r| !r.pass).count()
            + self
                .bae
                .iter()
                .filter(|r| r.residual.is_nan() || r.residual >= tol)
                .count()
            + self.lweights.iter().filter(|r| !r.pass).count()
    }
}

fn run_relations(config: &RunConfig, chain: &Chain, rng: &mut ChaCha8Rng) -> Result<Vec<RelationReport>, CliError> {
    let rel = Relations::new(chain)?;
    let checks = relation_checks(config, rng);
    let tol = config.tolerances.relations;
    let direct = config.tolerances.direct;
    checks
        .par_iter()
        .map(|c| c.run(&rel, tol, direct).map_err(CliError::check(format!("{c:?}"))))
        .collect()
}

/// Identity path and the paths obtained by swapping the first two entries and by rotating.
pub fn bethe_paths(l: usize) -> Vec<Vec<usize>> {
    let id: Vec<usize> = (1..=l + 1).collect();
    let mut swapped = id.clone();
    swapped.swap(0, 1);
    let mut paths = vec![id.clone(), swapped];
    if l >= 2 {
        let mut rotated = vec![l + 1];
        rotated.extend(1..=l);
        paths.push(rotated);
    }
    paths
}

fn run_bethe(config: &RunConfig, chain: &Chain) -> Result<(Vec<BetheLine>, Vec<BAEReport>), CliError> {
    let labels: Vec<SectorLabel> = if config.bethe_sectors.is_empty() {
        sectors(config.l, config.n)
    } else {
        config.bethe_sectors.iter().cloned().map(SectorLabel::new).collect()
    };
    let samples = chebyshev_samples(config.n + 4, 0.05, 0.6, chain.grading.total());
    let paths = bethe_paths(config.l);
    let per_sector: Vec<Result<SectorLines, CliError>> = labels
        .par_iter()
        .enumerate()
        .map(|(idx, k)| {
            let context = |what: &str| format!("bethe sector {:?}: {what}", k.k);
            let basis = SectorEigenbasis::new(chain, k, config.seed.wrapping_add(idx as u64))
                .map_err(CliError::check(context("eigenbasis")))?;
            let mut out = Vec::new();
            for line in 0..basis.len() {
                for path in &paths {
                    let ctx = context(&format!("line {line}, path {path:?}"));
                    let polys =
                        path_polynomials(chain, &basis, path, line, &samples).map_err(CliError::check(ctx.clone()))?;
                    let reps =
                        path_residuals(path, &polys, &chain.twist.tau, chain.ctx.q()).map_err(CliError::check(ctx))?;
                    out.push((
                        BetheLine {
                            sector: k.k.clone(),
                            eigenline: line,
                            path: path.clone(),
                            polynomials: polys,
                        },
                        reps,
                    ));
                }
            }
            Ok(out)
        })
        .collect();
    let mut lines = Vec::new();
    let mut bae = Vec::new();
    for sector in per_sector {
        for (line, reps) in sector? {
            lines.push(line);
            bae.extend(reps);
        }
    }
    Ok((lines, bae))
}

fn fmt_reals(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn run_lweights(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<LWeightCheck>, CliError> {
    let l = config.l;
    let tol = config.tolerances.lweights;
    let ctx = QContext::real(config.q)?;
    let grading: GradingConfig = config.grading_config();
    let mut out = Vec::new();
    for draw in 0..config.lweight_draws {
        let mu: Vec<f64> = (0..=l).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let zeta = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(-1.0..1.0));
        let u = Complex64::from_polar(rng.gen_range(0.2..1.5), rng.gen_range(0.0..std::f64::consts::TAU));
        let r = check_shifted_product(&mu, &[(zeta, u)], &grading, &ctx)
            .map_err(CliError::check(format!("l-weight draw {draw}")))?;
        let exact = r.factors_match && r.weight_match;
        out.push(LWeightCheck {
            kind: "shifted-product".into(),
            parameters: format!("mu={} zeta={zeta:.6} u={u:.6}", fmt_reals(&mu)),
            residual: r.residual,
            exact_match: exact,
            tolerance: tol,
            pass: exact && r.residual < tol,
        });

        let n: Vec<Vec<i64>> = (0..=l).map(|_| (0..l).map(|_| rng.gen_range(0..4)).collect()).collect();
        let mut bumped = n.clone();
        for a in 1..=l + 1 {
            for j in 1..=l {
                if is_primed(a, j, l) {
                    bumped[a - 1][j - 1] += rng.gen_range(1..5);
                }
            }
        }
        let independent = (1..=l).all(|i| xi_factors(&n, i, l) == xi_factors(&bumped, i, l));
        out.push(LWeightCheck {
            kind: "primed-independence".into(),
            parameters: format!("n={n:?} bumped={bumped:?}"),
            residual: 0.0,
            exact_match: independent,
            tolerance: tol,
            pass: independent,
        });

        let lhs: Vec<QExp> = xi_weight(&n, l).into_iter().map(|k| QExp::constant(l, k)).collect();
        let rhs: Vec<QExp> = lambda_m_weight(&m_from_n(&n, l), l)
            .iter()
            .zip(delta_n_prime(&n, l))
            .map(|(a, b)| a.add(&b))
            .collect();
        out.push(LWeightCheck {
            kind: "weight-split".into(),
            parameters: format!("n={n:?}"),
            residual: 0.0,
            exact_match: lhs == rhs,
            tolerance: tol,
            pass: lhs == rhs,
        });
    }
    Ok(out)
}

/// Runs the selected check families. Deterministic in everything except timing.
pub fn run_suite(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let chain = config.chain()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut timing = Timing::default();

    let mut relations = Vec::new();
    if config.suite.relations {
        let t = Instant::now();
        relations = run_relations(config, &chain, &mut rng)?;
        timing.relations_seconds = t.elapsed().as_secs_f64();
    }
    let (mut bethe, mut bae) = (Vec::new(), Vec::new());
    if config.suite.bethe {
        let t = Instant::now();
        (bethe, bae) = run_bethe(config, &chain)?;
        timing.bethe_seconds = t.elapsed().as_secs_f64();
    }
    let mut lweights = Vec::new();
    if config.suite.lweights {
        let t = Instant::now();
        lweights = run_lweights(config, &mut rng)?;
        timing.lweights_seconds = t.elapsed().as_secs_f64();
    }
    timing.total_seconds = start.elapsed().as_secs_f64();

    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        versions: Versions::current(),
        relations,
        bethe,
        bae,
        lweights,
        timing,
        passed: false,
    };
    report.passed = report.failures() == 0;
    Ok(report)
}

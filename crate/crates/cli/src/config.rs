//! Run configuration: a single TOML document with every default embedded.

use std::path::{Path, PathBuf};

use loopq::borelhoms::TwistConfig;
use loopq::lop::GradingConfig;
use loopq::qnum::QContext;
use loopq::qop::Chain;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest rank accepted; the symmetry checks enumerate the Weyl group.
pub const MAX_RANK: usize = 4;

/// Residual tolerances per family of checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub relations: f64,
    pub direct: f64,
    pub bethe: f64,
    pub lweights: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relations: loopq::funcrel::EXACT_TOLERANCE,
            direct: loopq::funcrel::DIRECT_TOLERANCE,
            bethe: 1e-6,
            lweights: 1e-10,
        }
    }
}

/// Which check families run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSelection {
    pub relations: bool,
    pub bethe: bool,
    pub lweights: bool,
}

impl Default for SuiteSelection {
    fn default() -> Self {
        Self::all()
    }
}

impl SuiteSelection {
    pub fn all() -> Self {
        Self {
            relations: true,
            bethe: true,
            lweights: true,
        }
    }

    pub fn none() -> Self {
        Self {
            relations: false,
            bethe: false,
            lweights: false,
        }
    }

    /// Parses a comma list of `relations`, `bethe`, `lweights`, `all`, or a
    /// single `<family>-only`.
    pub fn parse(list: &str) -> Result<Self, CliError> {
        let mut sel = Self::none();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.trim_end_matches("-only") {
                "all" => sel = Self::all(),
                "relations" => sel.relations = true,
                "bethe" => sel.bethe = true,
                "lweights" => sel.lweights = true,
                other => return Err(CliError::Config(format!("unknown suite entry `{other}`"))),
            }
        }
        if sel == Self::none() {
            return Err(CliError::Config(format!("suite list `{list}` selects nothing")));
        }
        Ok(sel)
    }
}

/// Where and what to write.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub dump_matrices: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("loopq-out"),
            csv: true,
            dump_matrices: false,
        }
    }
}

/// Complete description of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub l: usize,
    pub n: usize,
    pub q: f64,
    /// Accept `q` outside `(0, 1)`.
    pub allow_any_q: bool,
    /// Grading `s_0..s_l`; uniform when absent.
    pub grading: Option<Vec<i64>>,
    /// Twist `τ_1..τ_{l+1}`; a fixed generic default when absent.
    pub tau: Option<Vec<f64>>,
    /// Distance from the integers that every `τ_i − τ_j` must keep.
    pub genericity_margin: f64,
    /// Spectral points `[re, im]` for the relation checks.
    pub zeta_samples: Vec<[f64; 2]>,
    /// Sectors `k` for the Bethe checks; every sector when empty.
    pub bethe_sectors: Vec<Vec<usize>>,
    /// Random draws for the ℓ-weight checks.
    pub lweight_draws: usize,
    pub tolerances: Tolerances,
    pub suite: SuiteSelection,
    pub output: OutputConfig,
    pub seed: u64,
    /// Upper bound on `n·(l+1)^n`.
    pub max_states: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            l: 2,
            n: 2,
            q: 0.7,
            allow_any_q: false,
            grading: None,
            tau: None,
            genericity_margin: 1e-3,
            zeta_samples: vec![[0.2, 0.0], [0.18, 0.07], [0.15, -0.05]],
            bethe_sectors: Vec::new(),
            lweight_draws: 10,
            tolerances: Tolerances::default(),
            suite: SuiteSelection::all(),
            output: OutputConfig::default(),
            seed: 2024,
            max_states: 5000,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn grading_config(&self) -> GradingConfig {
        self.grading
            .clone()
            .map(|s| GradingConfig { s })
            .unwrap_or_else(|| GradingConfig::uniform(self.l))
    }

    pub fn twist_config(&self) -> TwistConfig {
        self.tau
            .clone()
            .map(TwistConfig::new)
            .unwrap_or_else(|| TwistConfig::default_for(self.l))
    }

    pub fn zetas(&self) -> Vec<Complex64> {
        self.zeta_samples.iter().map(|z| Complex64::new(z[0], z[1])).collect()
    }

    /// `n·(l+1)^n`, saturating.
    pub fn work_estimate(&self) -> usize {
        let d = (self.l + 1).checked_pow(self.n as u32).unwrap_or(usize::MAX);
        d.saturating_mul(self.n)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.l == 0 || self.l > MAX_RANK {
            return bad(format!("l = {} outside 1..={MAX_RANK}", self.l));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !self.q.is_finite() || self.q <= 0.0 {
            return bad(format!("q = {} must be positive", self.q));
        }
        if !self.allow_any_q && self.q >= 1.0 {
            return bad(format!("q = {} outside (0, 1); set allow_any_q to override", self.q));
        }
        if let Some(s) = &self.grading {
            if s.len() != self.l + 1 {
                return bad(format!("grading has {} entries, expected {}", s.len(), self.l + 1));
            }
            GradingConfig::new(s.clone())?;
        }
        let twist = self.twist_config();
        if twist.tau.len() != self.l + 1 {
            return bad(format!("tau has {} entries, expected {}", twist.tau.len(), self.l + 1));
        }
        twist.validate(self.genericity_margin)?;
        if self.zeta_samples.is_empty() {
            return bad("at least one spectral sample is required".into());
        }
        if self.zeta_samples.iter().any(|z| z[0] == 0.0 && z[1] == 0.0) {
            return bad("spectral samples must be nonzero".into());
        }
        for k in &self.bethe_sectors {
            if k.len() != self.l + 1 || k.iter().sum::<usize>() != self.n {
                return bad(format!(
                    "sector {k:?} is not a composition of n = {} into {} parts",
                    self.n,
                    self.l + 1
                ));
            }
        }
        let t = &self.tolerances;
        if [t.relations, t.direct, t.bethe, t.lweights]
            .iter()
            .any(|&x| x.is_nan() || x <= 0.0)
        {
            return bad("tolerances must be positive".into());
        }
        if self.work_estimate() > self.max_states {
            return Err(CliError::Resource(format!(
                "n·(l+1)^n = {} exceeds max_states = {}",
                self.work_estimate(),
                self.max_states
            )));
        }
        Ok(())
    }

    pub fn chain(&self) -> Result<Chain, CliError> {
        self.validate()?;
        let ctx = QContext::real(self.q)?;
        Ok(Chain::new(
            self.l,
            self.n,
            self.twist_config(),
            self.grading_config(),
            ctx,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("l = 1\nn = 3\n[suite]\nbethe = false\n").unwrap();
        assert_eq!((c.l, c.n, c.q), (1, 3, 0.7));
        assert!(c.suite.relations && !c.suite.bethe);
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let with = |f: &dyn Fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate()
        };
        assert!(matches!(with(&|c| c.q = 1.3), Err(CliError::Config(_))));
        assert!(with(&|c| {
            c.q = 1.3;
            c.allow_any_q = true
        })
        .is_ok());
        assert!(with(&|c| c.tau = Some(vec![0.0, 1.0, 0.5])).is_err());
        assert!(with(&|c| c.tau = Some(vec![0.0, 0.3])).is_err());
        assert!(with(&|c| c.bethe_sectors = vec![vec![1, 0, 0]]).is_err());
        assert!(matches!(with(&|c| c.n = 9), Err(CliError::Resource(_))));
    }

    #[test]
    fn suite_lists() {
        assert_eq!(
            SuiteSelection::parse("lweights-only").unwrap(),
            SuiteSelection {
                relations: false,
                bethe: false,
                lweights: true
            }
        );
        assert!(!SuiteSelection::parse("relations, bethe").unwrap().lweights);
        assert_eq!(SuiteSelection::parse("all").unwrap(), SuiteSelection::all());
        assert!(SuiteSelection::parse("nothing").is_err());
        assert!(SuiteSelection::parse("").is_err());
    }
}

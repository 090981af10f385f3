//! Binary dumps of the Q-operators behind the QQ Jacobi checks, and a replay
//! that re-runs those checks on the reloaded matrices alone.

use std::fs;
use std::path::Path;

use loopq::funcrel::{RelationReport, Relations};
use loopq::qop::{load_operator, save_operator, QOperator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::suite::qq_jacobi_index_choices;

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    pub a: usize,
    pub zeta: [f64; 2],
    pub stem: String,
}

/// Contents of `index.json`: the stored operators and the residuals they produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpIndex {
    pub zeta: [f64; 2],
    pub operators: Vec<DumpEntry>,
    pub checks: Vec<RelationReport>,
}

fn qq_reports(rel: &Relations, zeta: Complex64, tol: f64) -> Result<Vec<RelationReport>, CliError> {
    qq_jacobi_index_choices(rel.l())
        .into_iter()
        .map(|(a, b, c)| {
            rel.check_qq_jacobi(&a, b, c, zeta, tol)
                .map_err(CliError::check(format!("qq-jacobi a={a:?} b={b} c={c}")))
        })
        .collect()
}

/// Runs every QQ Jacobi check at the first spectral sample and stores each
/// universal `Q_a` it used under `dir`.
pub fn dump_qq_jacobi(config: &RunConfig, dir: &Path) -> Result<DumpIndex, CliError> {
    let chain = config.chain()?;
    let rel = Relations::new(&chain)?;
    let zeta = config.zetas()[0];
    let checks = qq_reports(&rel, zeta, config.tolerances.relations)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut operators = Vec::new();
    for (idx, (a, z, matrix)) in rel.cached().into_iter().enumerate() {
        let stem = format!("q{a}_{idx:03}");
        let op = QOperator {
            label: vec![a],
            zeta: z,
            l: chain.l,
            n: chain.n,
            matrix,
        };
        save_operator(&op, &chain, &dir.join(&stem))?;
        operators.push(DumpEntry {
            a,
            zeta: [z.re, z.im],
            stem,
        });
    }
    let index = DumpIndex {
        zeta: [zeta.re, zeta.im],
        operators,
        checks,
    };
    let path = dir.join(INDEX_FILE);
    let text = serde_json::to_string_pretty(&index).expect("index serializes");
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(index)
}

/// Reloads a dump and repeats its QQ Jacobi checks without computing any
/// Q-operator. Fails if a check needs an operator the dump lacks.
pub fn replay_qq_jacobi(config: &RunConfig, dir: &Path) -> Result<Vec<RelationReport>, CliError> {
    let path = dir.join(INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let index: DumpIndex = serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))?;
    let chain = config.chain()?;
    let rel = Relations::new(&chain)?;
    for entry in &index.operators {
        let (op, meta) = load_operator(&dir.join(&entry.stem))?;
        if meta.l != chain.l || meta.n != chain.n || meta.tau != chain.twist.tau {
            return Err(CliError::Config(format!(
                "dump {} belongs to a different chain",
                entry.stem
            )));
        }
        rel.preload(entry.a, op.zeta, op.matrix);
    }
    let before = rel.cached().len();
    let reports = qq_reports(
        &rel,
        Complex64::new(index.zeta[0], index.zeta[1]),
        config.tolerances.relations,
    )?;
    if rel.cached().len() != before {
        return Err(CliError::Config(
            "dump is missing operators needed by the replay".into(),
        ));
    }
    Ok(reports)
}

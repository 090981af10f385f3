use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loopq::lop::build_l;
use loopq::qnum::QContext;
use loopq_cli::persist::dump_qq_jacobi;
use loopq_cli::report::summary_rows;
use loopq_cli::{emit_report, run_suite, CliError, Format, Report, RunConfig, SuiteSelection};
use num_complex::Complex64;

#[derive(Parser, Debug)]
#[command(
    name = "loopq",
    version,
    about = "Numerical checks of Q-operator functional relations on small spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    l: Option<usize>,

    #[arg(long, global = true)]
    n: Option<usize>,

    #[arg(long, global = true)]
    q: Option<f64>,

    /// Twist components, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    tau: Option<Vec<f64>>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma list of relations, bethe, lweights (or `<family>-only`).
    #[arg(long, global = true)]
    suite: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the selected check families and write a report.
    Verify {
        /// Also store the Q-operators behind the QQ Jacobi checks.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Extract Bethe roots and their equation residuals.
    Bethe,
    /// Check the ℓ-weight factorization identities.
    Lweights,
    /// Print and store the L-operator at one spectral point.
    DumpL {
        /// Spectral parameter as `re,im`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5,0")]
        zeta: Vec<f64>,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(l) = cli.l {
        config.l = l;
    }
    if let Some(n) = cli.n {
        config.n = n;
    }
    if let Some(q) = cli.q {
        config.q = q;
    }
    if let Some(tau) = &cli.tau {
        config.tau = Some(tau.clone());
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(s) = &cli.suite {
        config.suite = SuiteSelection::parse(s)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Bethe => {
            config.suite = SuiteSelection {
                bethe: true,
                ..SuiteSelection::none()
            }
        }
        Command::Lweights => {
            config.suite = SuiteSelection {
                lweights: true,
                ..SuiteSelection::none()
            }
        }
        Command::Verify { dump_matrices } => config.output.dump_matrices |= dump_matrices,
        Command::DumpL { .. } => {}
    }
    config.validate()?;
    Ok(config)
}

fn write_report(report: &Report) -> Result<(), CliError> {
    let mut formats = vec![Format::Json];
    if report.config.output.csv {
        formats.push(Format::CsvSummary);
    }
    for path in emit_report(report, &report.config.output.dir, &formats)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_summary(report: &Report) {
    let count = |pass: usize, total: usize, what: &str| {
        if total > 0 {
            println!("{what}: {pass}/{total} pass");
        }
    };
    let rows = summary_rows(report);
    let rel = rows.iter().filter(|r| r.kind == "relation");
    count(rel.clone().filter(|r| r.pass).count(), rel.count(), "relations");
    let bae = rows.iter().filter(|r| r.kind == "bethe");
    count(bae.clone().filter(|r| r.pass).count(), bae.count(), "bethe equations");
    count(
        report.lweights.iter().filter(|r| r.pass).count(),
        report.lweights.len(),
        "l-weight identities",
    );
    for r in rows.iter().filter(|r| !r.pass) {
        println!(
            "FAIL {} {} {}: residual {:.3e} (tolerance {:.1e})",
            r.kind, r.name, r.parameters, r.residual, r.tolerance
        );
    }
    for r in report.lweights.iter().filter(|r| !r.pass) {
        println!("FAIL l-weight {} {}: residual {:.3e}", r.kind, r.parameters, r.residual);
    }
    println!(
        "{}",
        if report.passed {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let config = build_config(cli)?;
    match &cli.command {
        Command::DumpL { zeta } => {
            let z = Complex64::new(zeta[0], zeta.get(1).copied().unwrap_or(0.0));
            let ctx = QContext::real(config.q)?.with_tau(&config.twist_config().tau);
            let l_op = build_l(z, &config.grading_config(), &ctx);
            for i in 1..=config.l + 1 {
                for j in 1..=config.l + 1 {
                    println!("L[{i}][{j}] = {}", l_op.entry(i, j));
                }
            }
            let dir = &config.output.dir;
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let path = dir.join("l_operator.json");
            let text = serde_json::to_string_pretty(&l_op).expect("L-operator serializes");
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Bethe => {
            let report = run_suite(&config)?;
            for line in &report.bethe {
                println!("sector {:?} line {} path {:?}", line.sector, line.eigenline, line.path);
                for p in &line.polynomials[1..line.polynomials.len() - 1] {
                    let roots: Vec<String> = p.roots.iter().map(|z| format!("{z:.10}")).collect();
                    println!("  Q{:?}: [{}]", p.a_tuple, roots.join(", "));
                }
            }
            print_summary(&report);
            write_report(&report)?;
            Ok(report.passed)
        }
        Command::Verify { .. } | Command::Lweights => {
            let report = run_suite(&config)?;
            print_summary(&report);
            write_report(&report)?;
            if config.output.dump_matrices {
                let dir = config.output.dir.join("matrices");
                let index = dump_qq_jacobi(&config, &dir)?;
                println!("stored {} operators in {}", index.operators.len(), dir.display());
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

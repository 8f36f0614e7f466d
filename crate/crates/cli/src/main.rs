//! `noether`: verify built-in models, run property suites, and compute
//! Euler–Lagrange expressions and adjoints of operators read from files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use noether_core::models::{select, Model};
use noether_core::property::{run_suite, PropertyConfig, Suite};
use noether_core::random::Profile;
use noether_core::report::VerificationReport;
use noether_core::syntax::print;
use noether_core::varcalc::euler_lagrange;
use noether_core::{op_equal, Density, Error, LinearDiffOp, Role};

#[derive(Parser, Debug)]
#[command(name = "noether", version, about = "Exact checks of gauge symmetries and Noether identities")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Residual terms shown per failing check.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    residual_terms: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a model's verification suite: `cs`, `bf:<n>:<p>:<q>` or `all`.
    Verify { selector: String },
    /// Print the adjoint of an operator file.
    Eta {
        file: PathBuf,
        /// Also check that applying the adjoint twice returns the input.
        #[arg(long)]
        roundtrip: bool,
    },
    /// Print the Euler–Lagrange expressions of a density file.
    El {
        file: PathBuf,
        /// Comma-separated dynamic field families to vary (default: all).
        #[arg(long, value_delimiter = ',')]
        fields: Vec<String>,
    },
    /// Run a randomized exact property suite.
    Property {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Operator order bound.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
        /// Coefficient degree bound.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        degree: u32,
        #[arg(long, hide = true)]
        corrupt_eta: bool,
    },
    /// Write a model's bundle, density and operators as JSON files.
    Dump {
        selector: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn color_enabled() -> bool {
    std::env::var("NOETHER_COLOR").is_ok_and(|v| v == "1")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn verify(cli: &Cli, selector: &str) -> Outcome {
    let models = select(selector)?;
    let mut checks = Vec::new();
    for m in &models {
        checks.extend(m.verify()?);
    }
    let report = VerificationReport::from_checks(&checks, cli.residual_terms as usize);
    match cli.format {
        Format::Text => print!("{}", report.render_text(color_enabled())),
        Format::Json => println!("{}", pretty(&report.to_json())),
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn eta(file: &Path, roundtrip: bool) -> Outcome {
    let op = LinearDiffOp::from_json(&read(file)?)?;
    let adj = op.adjoint_eta()?;
    println!("{}", pretty(&adj.to_json()));
    if roundtrip {
        if op_equal(&adj.adjoint_eta()?, &op) {
            eprintln!("roundtrip: ok");
        } else {
            eprintln!("roundtrip: FAILED");
            return Err(Failure::Checks);
        }
    }
    Ok(())
}

fn el(file: &Path, fields: &[String]) -> Outcome {
    let density = Density::from_json(&read(file)?)?;
    let spec = density.spec.clone();
    let families = if fields.is_empty() {
        spec.families_with_role(Role::DynamicField)
    } else {
        let mut out = Vec::new();
        for name in fields {
            let f = spec.family_id(name)?;
            if spec.role(f) != Role::DynamicField {
                return Err(Failure::Usage(format!("`{name}` is not a dynamic field")));
            }
            out.push(f);
        }
        out
    };
    let map: serde_json::Map<String, Value> = euler_lagrange(&density, &families)
        .iter()
        .map(|(c, e)| (spec.coord_name(c), Value::String(print(e, &spec))))
        .collect();
    println!("{}", pretty(&Value::Object(map)));
    Ok(())
}

fn property(cli: &Cli, suite: &str, trials: u64, seed: u64, order: u64, degree: u32, corrupt: bool) -> Outcome {
    let suite: Suite = suite.parse()?;
    let cfg = PropertyConfig {
        trials: trials as usize,
        seed,
        profile: Profile {
            max_order: order as usize,
            max_degree: degree,
            ..Profile::default()
        },
        corrupt_eta: corrupt,
    };
    let out = run_suite(suite, &cfg);
    match cli.format {
        Format::Json => {
            let mut v = json!({
                "suite": suite.name(),
                "trials": out.trials,
                "seed": seed,
                "status": if out.passed() { "pass" } else { "fail" },
                "failures": out.failures,
                "millis": out.millis,
            });
            if let Some(cx) = &out.first_failure {
                v["counterexample"] = json!({
                    "trial": cx.trial,
                    "seed": cx.seed,
                    "description": cx.description,
                });
            }
            println!("{}", pretty(&v));
        }
        Format::Text => {
            let tag = if out.passed() { "PASS" } else { "FAIL" };
            println!(
                "{tag}  {suite}  {} trials, {} failed, seed {seed}  ({} ms)",
                out.trials, out.failures, out.millis
            );
            if let Some(cx) = &out.first_failure {
                println!("failing seed: {} (trial {})", cx.seed, cx.trial);
                println!("counterexample:");
                for line in cx.description.lines() {
                    println!("  {line}");
                }
            }
        }
    }
    if out.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn model_files(m: &Model) -> BTreeMap<String, Value> {
    let stem = m.name.replace(':', "-");
    let mut files = BTreeMap::new();
    files.insert(format!("{stem}.bundle.json"), m.spec.to_value());
    files.insert(format!("{stem}.density.json"), m.lagrangian.to_json());
    files.insert(format!("{stem}.symmetry.json"), m.gauge_symmetry.to_json());
    if let Some(chain) = &m.chain {
        for (k, stage) in chain.stages.iter().enumerate() {
            files.insert(format!("{stem}.stage{k}.json"), stage.to_json());
        }
    }
    files
}

fn dump(selector: &str, out: &Path) -> Outcome {
    let models = select(selector)?;
    fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    for m in &models {
        for (name, v) in model_files(m) {
            let path = out.join(&name);
            fs::write(&path, pretty(&v) + "\n")
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Verify { selector } => verify(cli, selector),
        Command::Eta { file, roundtrip } => eta(file, *roundtrip),
        Command::El { file, fields } => el(file, fields),
        Command::Property {
            suite,
            trials,
            seed,
            order,
            degree,
            corrupt_eta,
        } => property(cli, suite, *trials, *seed, *order, *degree, *corrupt_eta),
        Command::Dump { selector, out } => dump(selector, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

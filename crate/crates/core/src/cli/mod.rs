//! Problem files, built-in fixtures and the `fibasym` command line.

mod fixtures;
mod pipeline;
mod problem;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use fixtures::{fixture, FIXTURES};
pub use pipeline::{
    classify_problem, coarea_problem, mellin_check, predict_problem, schedule_csv,
    schedule_problem, validate_problem, Comparison, MellinCheck, Validation,
};
pub use problem::{Fiber, LevelFunction, OracleSpec, ProblemSpec, Tolerances};

use crate::error::{Error, Result};
use crate::germ::Case;
use crate::oracle::samples_csv;
use crate::sphere::density_csv;

/// Exit code of a validation whose gap exceeds the tolerance.
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fibasym",
    version,
    about = "Leading asymptotics of degenerate fiber integrals, checked against brute force"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem description (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Use a built-in problem instead of --spec.
    #[arg(long, global = true)]
    pub fixture: Option<String>,
    /// Directory for emitted JSON/CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative gap accepted by `validate`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub z_min: Option<f64>,
    #[arg(long, global = true)]
    pub z_max: Option<f64>,
    #[arg(long, global = true)]
    pub z_points: Option<usize>,
    /// Sphere rule order.
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the critical point (JSON).
    Classify,
    /// Exponent/log schedule (CSV num,den,logpower).
    Schedule {
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Leading term with provenance (JSON).
    Predict,
    /// Co-area density LVol(w) (CSV w,lvol).
    Coarea,
    /// Predict, run the oracle, fit and compare (JSON).
    Validate,
    /// Run a built-in fixture end to end.
    Example { name: String },
    /// List the built-in fixtures.
    Fixtures,
    /// Print the problem description with every default filled in.
    Spec,
    /// Residual of the damped Mellin identity M[e^{it}](1/2) = √π e^{iπ/4}.
    MellinCheck,
}

impl Cli {
    fn load(&self, name: Option<&str>) -> Result<ProblemSpec> {
        let mut spec = match (name.or(self.fixture.as_deref()), &self.spec) {
            (Some(n), None) => fixture(n).ok_or_else(|| {
                Error::input(
                    "cli",
                    "run",
                    format!("unknown fixture `{n}`; known: {}", FIXTURES.join(", ")),
                )
            })?,
            (None, Some(path)) => ProblemSpec::from_json(&std::fs::read_to_string(path)?)?,
            (Some(_), Some(_)) => {
                return Err(Error::input(
                    "cli",
                    "run",
                    "give either --spec or a fixture, not both",
                ))
            }
            (None, None) => {
                return Err(Error::input(
                    "cli",
                    "run",
                    "a problem is required: --spec FILE or --fixture NAME",
                ))
            }
        };
        if let Some(s) = self.seed {
            spec.geometry.seed = s;
            spec.oracle.quad.seed = s;
            spec.tolerances.classify.seed = s;
        }
        if let Some(t) = self.tolerance {
            spec.tolerances.relative_gap = t;
        }
        if let Some(z) = self.z_min {
            spec.oracle.z_min = z;
        }
        if let Some(z) = self.z_max {
            spec.oracle.z_max = z;
        }
        if let Some(p) = self.z_points {
            spec.oracle.z_points = p;
        }
        if let Some(q) = self.quad_order {
            spec.geometry.rule_order = q;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("outputs serialize") + "\n"
}

fn emit(out: Option<&Path>, file: &str, text: &str) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(file), text)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(i32, String)> {
    let out = cli.out.as_deref();
    let mut code = 0;
    let text = match &cli.command {
        Command::Classify => {
            let c = classify_problem(&cli.load(None)?)?;
            if c.case == Case::Unsupported {
                eprintln!(
                    "germ::classify: Unsupported (min tangential gradient {:?}); {}",
                    c.diagnostics.min_tangential_gradient,
                    c.diagnostics
                        .note
                        .as_deref()
                        .unwrap_or("hypotheses not met")
                );
                code = 2;
            }
            let t = json(&c);
            emit(out, "classification.json", &t)?;
            t
        }
        Command::Schedule { count } => {
            let t = schedule_csv(&schedule_problem(&cli.load(None)?, *count)?);
            emit(out, "schedule.csv", &t)?;
            t
        }
        Command::Predict => {
            let t = json(&predict_problem(&cli.load(None)?)?);
            emit(out, "prediction.json", &t)?;
            t
        }
        Command::Coarea => {
            let t = density_csv(&coarea_problem(&cli.load(None)?)?);
            emit(out, "coarea.csv", &t)?;
            t
        }
        Command::Validate | Command::Example { .. } => {
            let name = match &cli.command {
                Command::Example { name } => Some(name.as_str()),
                _ => None,
            };
            let spec = cli.load(name)?;
            let v = validate_problem(&spec)?;
            emit(out, "spec.json", &(spec.to_json() + "\n"))?;
            emit(out, "prediction.json", &json(&v.prediction))?;
            emit(out, "samples.csv", &samples_csv(&v.samples))?;
            emit(out, "fit.json", &json(&v.comparison.fit))?;
            let t = json(&v.comparison);
            emit(out, "validation.json", &t)?;
            if !v.comparison.pass {
                eprintln!(
                    "cli::validate: relative gap {:.3e} exceeds tolerance {:.3e}",
                    v.comparison.relative_gap, v.comparison.tolerance
                );
                code = EXIT_VALIDATION;
            }
            t
        }
        Command::Fixtures => FIXTURES.iter().map(|f| format!("{f}\n")).collect(),
        Command::Spec => cli.load(None)?.to_json() + "\n",
        Command::MellinCheck => {
            let m = mellin_check()?;
            if !m.pass {
                code = EXIT_VALIDATION;
            }
            let t = json(&m);
            emit(out, "mellin.json", &t)?;
            t
        }
    };
    Ok((code, text))
}

/// Run one command; returns the process exit code and reports errors on stderr.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(cli)),
            Err(e) => Err(Error::input(
                "cli",
                "run",
                format!("cannot start {t} threads: {e}"),
            )),
        },
        None => execute(cli),
    };
    let written = result.and_then(|(code, text)| {
        stdout.write_all(text.as_bytes())?;
        Ok(code)
    });
    written.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use qbnet::bayesnet::joint_distribution;
use qbnet::models::{figure2_data, figure3_data, Figure2Config, Figure3Config};
use qbnet::numeric::log_grid;
use qbnet::povm::{distribution_via_broadcast, first_law_check, jarzynski_check, povm_distribution, verify_povm};
use qbnet::protocol::{expected_acceptance_rate, low_population_eigenstates, postselect_distribution, sample_protocol};
use qbnet::report::{comparison_csv, distribution_csv, fmt_f64};
use qbnet::{Error, PathDistribution, Scenario};

use crate::scenario_file::{Overrides, ScenarioFile};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "qbnet", version, about = "Multi-time path probabilities of quantum dynamic Bayesian networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Uniform validation tolerance, overriding the file's options.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Raise the copy-space dimension and path enumeration caps.
    #[arg(long, global = true, value_name = "N")]
    pub cap_override: Option<usize>,
    /// Write the output here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact joint distribution of all paths.
    Exact {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Route::Eq1)]
        method: Route,
        /// Emit all four routes side by side with their maximum deviation.
        #[arg(long)]
        compare_all: bool,
    },
    /// Shot-based simulation of the postselection protocol.
    Sample {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// POVM validity, first law and Jarzynski checks.
    #[command(allow_negative_numbers = true)]
    Check {
        file: PathBuf,
        /// Energies of the two time points, e.g. "1,-1;2,-2".
        #[arg(long, allow_hyphen_values = true)]
        energies: Option<String>,
        /// Inverse temperature for the Jarzynski check.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Temperature sweeps of the two worked examples.
    #[command(allow_negative_numbers = true)]
    Figure {
        #[arg(value_enum)]
        name: FigureName,
        /// Comma-separated coherence/correlation parameters.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Option<Vec<f64>>,
        /// Lower end of the temperature grid (T for fig2, T_B for fig3).
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        g0: Option<f64>,
        #[arg(long)]
        g1: Option<f64>,
        #[arg(long)]
        phase: Option<f64>,
        /// Fixed T_A for fig3.
        #[arg(long)]
        t_a: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Eq1,
    Postselect,
    Broadcast,
    Povm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig2,
    Fig3,
}

fn version() -> String {
    format!("qbnet {}", env!("CARGO_PKG_VERSION"))
}

fn load(path: &FsPath, cli: &Cli) -> Result<Scenario, CliError> {
    Ok(load_file(path)?.build(overrides(cli)?)?)
}

fn load_file(path: &FsPath) -> Result<ScenarioFile, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    Ok(ScenarioFile::parse(&src)?)
}

fn overrides(cli: &Cli) -> Result<Overrides, CliError> {
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Parse(format!("--tol must be positive, got {tol}")));
        }
    }
    Ok(Overrides {
        tol: cli.tol,
        cap: cli.cap_override,
    })
}

fn scenario_header(command: &str, sc: &Scenario) -> Vec<(String, String)> {
    vec![
        ("command".into(), command.into()),
        ("version".into(), version()),
        ("fingerprint".into(), sc.fingerprint().into()),
        ("dims".into(), format!("{:?}", sc.dims())),
        ("n_times".into(), sc.n_times().to_string()),
    ]
}

fn route(sc: &Scenario, r: Route) -> qbnet::Result<PathDistribution> {
    match r {
        Route::Eq1 => joint_distribution(sc),
        Route::Postselect => postselect_distribution(sc),
        Route::Broadcast => distribution_via_broadcast(sc),
        Route::Povm => povm_distribution(sc),
    }
}

fn flagged_header(sc: &Scenario, header: &mut Vec<(String, String)>) {
    let flagged = low_population_eigenstates(sc);
    if !flagged.is_empty() {
        header.push(("low_population_eigenstates".into(), format!("{flagged:?}")));
    }
}

/// Parses "e,e,…;e,e,…" into the energy lists of the two time points.
pub fn parse_energies(s: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let lists = s
        .split(';')
        .map(|part| {
            part.split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Parse(format!("--energies: {e}")))?;
    match <[Vec<f64>; 2]>::try_from(lists) {
        Ok([a, b]) => Ok((a, b)),
        Err(l) => Err(CliError::Parse(format!(
            "--energies needs two ';'-separated lists, found {}",
            l.len()
        ))),
    }
}

fn skipped(name: &str, reason: &str) -> String {
    format!("[{name}]\nskipped = {reason}\n")
}

fn check(cli: &Cli, file: &FsPath, energies: Option<&str>, beta: Option<f64>) -> Result<(String, bool), CliError> {
    let parsed = load_file(file)?;
    let sc = parsed.build(overrides(cli)?)?;
    let energies = match energies {
        Some(s) => Some(parse_energies(s)?),
        None => match (&parsed.options.energies, parsed.energies()) {
            (Some(_), None) => return Err(CliError::Parse("options.energies needs exactly two lists".into())),
            (_, e) => e,
        },
    };
    let beta = beta.or(parsed.beta());

    let mut out = String::new();
    let _ = write!(
        out,
        "[scenario]\nversion = {}\nfingerprint = {}\ndims = {:?}\nn_times = {}\n",
        version(),
        sc.fingerprint(),
        sc.dims(),
        sc.n_times()
    );

    let povm = verify_povm(&sc)?;
    let mut pass = povm.pass;
    out.push_str(&povm.to_report().to_text());

    match &energies {
        Some((e0, e1)) => {
            let fl = first_law_check(&sc, e0, e1)?;
            pass &= fl.pass;
            out.push_str(&fl.to_report().to_text());
        }
        None => out.push_str(&skipped("first_law", "no energies given")),
    }

    match (&energies, beta) {
        (Some((e0, e1)), Some(beta)) => match jarzynski_check(&sc, e0, e1, beta) {
            Ok(j) => {
                pass &= j.pass;
                out.push_str(&j.to_report().to_text());
            }
            Err(e @ Error::NotThermalInput { .. }) => {
                out.push_str(&skipped("jarzynski", &format!("NotThermalInput: {e}")))
            }
            Err(e) => return Err(e.into()),
        },
        (None, _) => out.push_str(&skipped("jarzynski", "no energies given")),
        (_, None) => out.push_str(&skipped("jarzynski", "no beta given")),
    }
    let _ = write!(out, "[summary]\npass = {pass}\n");
    Ok((out, pass))
}

fn figure(
    name: FigureName,
    a: &Option<Vec<f64>>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    points: Option<usize>,
    g: (Option<f64>, Option<f64>, Option<f64>),
    t_a: Option<f64>,
) -> Result<String, CliError> {
    let bad = |m: String| CliError::Validation(Error::InvalidParameter(m));
    let grid = |lo: f64, hi: f64, n: usize| -> Result<Vec<f64>, CliError> {
        let (lo, hi, n) = (t_min.unwrap_or(lo), t_max.unwrap_or(hi), points.unwrap_or(n));
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
            return Err(bad(format!("temperature grid needs 0 < t_min <= t_max and points > 0 (got {lo}, {hi}, {n})")));
        }
        Ok(log_grid(lo, hi, n))
    };
    let table = match name {
        FigureName::Fig2 => {
            if t_a.is_some() {
                return Err(CliError::Parse("--t-a applies to fig3 only".into()));
            }
            let mut cfg = Figure2Config {
                temperatures: grid(0.05, 10.0, 200)?,
                ..Figure2Config::default()
            };
            if let Some(a) = a {
                cfg.a_values = a.clone();
            }
            cfg.g0 = g.0.unwrap_or(cfg.g0);
            cfg.g1 = g.1.unwrap_or(cfg.g1);
            cfg.phase = g.2.unwrap_or(cfg.phase);
            figure2_data(&cfg)
        }
        FigureName::Fig3 => {
            if g.0.is_some() || g.1.is_some() || g.2.is_some() {
                return Err(CliError::Parse("--g0, --g1 and --phase apply to fig2 only".into()));
            }
            let mut cfg = Figure3Config {
                t_b: grid(0.05, 5.0, 200)?,
                ..Figure3Config::default()
            };
            if let Some(a) = a {
                cfg.a_values = a.clone();
            }
            if let Some(t) = t_a {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(bad(format!("--t-a must be positive, got {t}")));
                }
                cfg.t_a = t;
            }
            figure3_data(&cfg)
        }
    };
    Ok(table.to_csv())
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Runs one command; returns the exit code on success.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let (text, code) = match &cli.command {
        Command::Exact { file, method, compare_all } => {
            let sc = load(file, cli)?;
            let mut header = scenario_header("exact", &sc);
            if *compare_all {
                let dists = [Route::Eq1, Route::Postselect, Route::Broadcast, Route::Povm]
                    .into_iter()
                    .map(|r| route(&sc, r))
                    .collect::<Result<Vec<_>, _>>()?;
                flagged_header(&sc, &mut header);
                let refs: Vec<&PathDistribution> = dists.iter().collect();
                (comparison_csv(&refs, &header), 0)
            } else {
                let dist = route(&sc, *method)?;
                header.push(("method".into(), dist.method.as_str().into()));
                if *method == Route::Postselect {
                    flagged_header(&sc, &mut header);
                }
                header.push(("total".into(), fmt_f64(dist.total)));
                (distribution_csv(&dist, &header), 0)
            }
        }
        Command::Sample { file, shots, seed } => {
            let sc = load(file, cli)?;
            let report = sample_protocol(&sc, *shots, *seed)?;
            let mut header = scenario_header("sample", &sc);
            header.push((
                "expected_acceptance_rate".into(),
                fmt_f64(expected_acceptance_rate(&sc)),
            ));
            (report.to_csv(&header), 0)
        }
        Command::Check { file, energies, beta } => {
            let (text, pass) = check(cli, file, energies.as_deref(), *beta)?;
            (text, if pass { 0 } else { 1 })
        }
        Command::Figure { name, a, t_min, t_max, points, g0, g1, phase, t_a } => (
            figure(*name, a, *t_min, *t_max, *points, (*g0, *g1, *phase), *t_a)?,
            0,
        ),
    };
    emit(cli, &text)?;
    Ok(code)
}

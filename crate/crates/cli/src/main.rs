//! Command-line front end: single runs, Monte-Carlo sweeps, the
//! per-subcarrier jammer analysis table, and fixture emission.
//!
//! Diagnostics go to stderr; data goes to stdout or `--output`. A flat
//! `key=value` config file may supply any flag's default; explicit flags
//! win. Relative `--output` paths land in `$SECURE_OFDMA_OUTPUT_DIR` when
//! that is set.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::{env, fs};

use clap::{Args, Parser, Subcommand};

use secure_ofdma_core::{
    analyze_subcarrier, builtin_fixture, emit_channels, emit_csv, generate_channels,
    load_channels, run_scheme, run_sweep, summary_table, ChannelRealization, ScenarioConfig,
    SchemeKind, SweepAxis, SweepSpec, SweepValue, BUILTIN_FIXTURE_NAME,
};

#[derive(Parser)]
#[command(name = "secure-ofdma", version, about = "Secure OFDMA resource allocation toolkit")]
struct Cli {
    /// Flat key=value file supplying flag defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on one scenario and print the per-user secure rates.
    Run(RunArgs),
    /// Sweep one scenario knob over a grid, averaging over trials.
    Sweep(SweepArgs),
    /// Print the jammer analysis table (thresholds, optima, windows) for a fixture.
    Analyze(AnalyzeArgs),
    /// Emit a channel fixture in the loadable text format.
    Fixture(FixtureArgs),
}

/// Scenario knobs shared by `run` and `sweep`.
#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Number of untrusted users.
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    subcarriers: Option<usize>,
    /// Source budget as P_S/sigma^2 in dB.
    #[arg(long)]
    ps_db: Option<f64>,
    /// Jammer budget as P_J/sigma^2 in dB.
    #[arg(long)]
    pj_db: Option<f64>,
    /// Jammer coordinates as X,Y in the unit square.
    #[arg(long, value_name = "X,Y")]
    jammer_pos: Option<String>,
    /// Per-user rate weights, comma separated.
    #[arg(long, value_name = "W1,W2,...")]
    weights: Option<String>,
    /// Master seed; trial k draws from seed XOR k.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// One of jpa, jpaso, epa, ospwj, pfa, oda, pfaso, odaso.
    #[arg(long)]
    scheme: Option<String>,
    /// Headline metric: sumrate or maxmin.
    #[arg(long)]
    objective: Option<String>,
    /// Run on a stored fixture (name or path) instead of a random draw.
    #[arg(long)]
    fixture: Option<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Swept knob: ps_db, pj_db, num_users or jammer_pos.
    #[arg(long)]
    var: Option<String>,
    /// Either start:step:stop or a comma list (positions as X;Y).
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Comma list of scheme names.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output shape: csv or summary.
    #[arg(long)]
    emit: Option<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Fixture name or path; defaults to the built-in table.
    #[arg(long)]
    fixture: Option<String>,
    /// Source budget as P_S/sigma^2 in dB, split equally per subcarrier.
    #[arg(long)]
    ps_db: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Fixture name or path; defaults to the built-in table.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let defaults = match &cli.config {
        Some(path) => match FileDefaults::load(path) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => FileDefaults::default(),
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args, &defaults),
        Command::Sweep(args) => sweep(args, &defaults),
        Command::Analyze(args) => analyze(args, &defaults),
        Command::Fixture(args) => fixture(args, &defaults),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Flag defaults read from a flat key=value file; `-` and `_` in keys are
/// interchangeable.
#[derive(Default)]
struct FileDefaults(HashMap<String, String>);

impl FileDefaults {
    fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("reading config {}: {e}", path.display()))?;
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {} is not key=value: {line}", i + 1))?;
            map.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(FileDefaults(map))
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.0.get(key).cloned()
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| format!("config key {key}: {e}")),
        }
    }
}

fn parse_position(text: &str) -> Result<(f64, f64), String> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| format!("position wants X,Y, got {text}"))?;
    let parse = |s: &str| {
        s.trim().parse::<f64>().map_err(|_| format!("bad coordinate {s} in position {text}"))
    };
    Ok((parse(x)?, parse(y)?))
}

fn parse_weights(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad weight {t}")))
        .collect()
}

fn scenario_from(args: &ScenarioArgs, file: &FileDefaults) -> Result<ScenarioConfig, String> {
    let users = match args.users {
        Some(u) => u,
        None => file.get("users")?.unwrap_or(8),
    };
    let subcarriers = match args.subcarriers {
        Some(n) => n,
        None => file.get("subcarriers")?.unwrap_or(64),
    };
    let mut cfg = ScenarioConfig::new(users, subcarriers);
    if let Some(db) = or_file(args.ps_db, file, "ps-db")? {
        cfg = cfg.with_source_db(db);
    }
    if let Some(db) = or_file(args.pj_db, file, "pj-db")? {
        cfg = cfg.with_jammer_db(db);
    }
    if let Some(text) = args.jammer_pos.clone().or_else(|| file.raw("jammer-pos")) {
        cfg.jammer_pos = parse_position(&text)?;
    }
    if let Some(text) = args.weights.clone().or_else(|| file.raw("weights")) {
        cfg.weights = parse_weights(&text)?;
    }
    if let Some(seed) = or_file(args.seed, file, "seed")? {
        cfg.rng_seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn or_file<T: FromStr>(flag: Option<T>, file: &FileDefaults, key: &str) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn load_fixture(name: &str) -> Result<ChannelRealization, String> {
    if name == BUILTIN_FIXTURE_NAME {
        return Ok(builtin_fixture());
    }
    let text =
        fs::read_to_string(name).map_err(|e| format!("fixture {name}: {e}"))?;
    load_channels(&text).map_err(|e| format!("fixture {name}: {e}"))
}

/// Relative output paths land in `$SECURE_OFDMA_OUTPUT_DIR` when it is set.
fn deliver(output: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match output {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => {
            let target = match env::var_os("SECURE_OFDMA_OUTPUT_DIR") {
                Some(dir) if p.is_relative() => Path::new(&dir).join(p),
                _ => p.clone(),
            };
            fs::write(&target, text).map_err(|e| format!("writing {}: {e}", target.display()))?;
            eprintln!("wrote {}", target.display());
            Ok(())
        }
    }
}

fn parse_scheme(name: &str) -> Result<SchemeKind, String> {
    SchemeKind::parse(name).ok_or_else(|| {
        let all: Vec<&str> = SchemeKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown scheme {name}; expected one of {}", all.join(", "))
    })
}

fn run(args: RunArgs, file: &FileDefaults) -> Result<(), String> {
    let scheme = args.scheme.or_else(|| file.raw("scheme")).unwrap_or_else(|| "jpa".into());
    let kind = parse_scheme(&scheme)?;
    let objective =
        args.objective.or_else(|| file.raw("objective")).unwrap_or_else(|| "sumrate".into());
    if objective != "sumrate" && objective != "maxmin" {
        return Err(format!("objective must be sumrate or maxmin, got {objective}"));
    }

    let fixture_name = args.fixture.or_else(|| file.raw("fixture"));
    let (ch, cfg) = match fixture_name {
        Some(name) => {
            let ch = load_fixture(&name)?;
            let mut cfg = ScenarioConfig::new(ch.num_users(), ch.num_subcarriers());
            cfg.noise_variance = ch.noise_variance;
            // budgets, weights and seed still come from the flags
            let flags = scenario_from(&args.scenario, file)?;
            cfg.source_budget = flags.source_budget;
            cfg.jammer_budget = flags.jammer_budget;
            cfg.rng_seed = flags.rng_seed;
            if let Some(text) = args.scenario.weights.clone().or_else(|| file.raw("weights")) {
                cfg.weights = parse_weights(&text)?;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            (ch, cfg)
        }
        None => {
            let cfg = scenario_from(&args.scenario, file)?;
            (generate_channels(&cfg), cfg)
        }
    };

    let out = run_scheme(kind, &ch, &cfg);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "scheme {kind}: {} users, {} subcarriers, seed {}",
        cfg.num_users, cfg.num_subcarriers, cfg.rng_seed
    );
    let _ = writeln!(text, "user  secure_rate");
    for (m, r) in out.user_rates.iter().enumerate() {
        let _ = writeln!(text, "u{:<4} {r:.6}", m + 1);
    }
    if objective == "maxmin" {
        let min = out.user_rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let _ = writeln!(text, "min rate {min:.6}");
        let _ = writeln!(text, "fairness index {:.6}", 1.0 - out.fairness_gap);
    } else {
        let _ = writeln!(text, "sum weighted rate {:.6}", out.sum_weighted_rate);
    }
    deliver(args.output.as_ref(), &text)
}

/// Expands start:step:stop (inclusive) or splits a comma list; positions
/// spell as X;Y so they survive the comma split.
fn parse_grid(text: &str) -> Result<Vec<SweepValue>, String> {
    let t = text.trim();
    let pieces: Vec<&str> = t.split(':').collect();
    match pieces.len() {
        3 => {
            let nums: Vec<f64> = pieces
                .iter()
                .map(|p| p.trim().parse().map_err(|_| format!("bad grid bound {p}")))
                .collect::<Result<_, String>>()?;
            let (start, step, stop) = (nums[0], nums[1], nums[2]);
            if step <= 0.0 {
                return Err(format!("grid step must be positive, got {step}"));
            }
            if stop < start {
                return Err(format!("grid stop {stop} precedes start {start}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| SweepValue::Scalar(start + step * k as f64)).collect())
        }
        1 => t
            .split(',')
            .map(|p| SweepValue::parse(p).ok_or_else(|| format!("bad grid value {p}")))
            .collect(),
        _ => Err(format!("grid wants start:step:stop or a comma list, got {t}")),
    }
}

fn sweep(args: SweepArgs, file: &FileDefaults) -> Result<(), String> {
    let var = args
        .var
        .or_else(|| file.raw("var"))
        .ok_or("sweep needs --var (ps_db, pj_db, num_users or jammer_pos)")?;
    let axis = SweepAxis::parse(&var).ok_or_else(|| format!("unknown sweep variable {var}"))?;
    let grid_text = args.grid.or_else(|| file.raw("grid")).ok_or("sweep needs --grid")?;
    let grid = parse_grid(&grid_text)?;
    let schemes = args
        .schemes
        .or_else(|| file.raw("schemes"))
        .unwrap_or_else(|| "jpa".into())
        .split(',')
        .map(parse_scheme)
        .collect::<Result<Vec<_>, _>>()?;
    let trials = or_file(args.trials, file, "trials")?.unwrap_or(500);
    let emit = args.emit.or_else(|| file.raw("emit")).unwrap_or_else(|| "csv".into());

    let base = scenario_from(&args.scenario, file)?;
    let spec = SweepSpec { axis, grid, base, trials, schemes };
    let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
    let text = match emit.as_str() {
        "csv" => emit_csv(&rows),
        "summary" => summary_table(&rows),
        other => return Err(format!("emit must be csv or summary, got {other}")),
    };
    deliver(args.output.as_ref(), &text)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn dash() -> String {
    "-".into()
}

fn analyze(args: AnalyzeArgs, file: &FileDefaults) -> Result<(), String> {
    let name = args
        .fixture
        .or_else(|| file.raw("fixture"))
        .unwrap_or_else(|| BUILTIN_FIXTURE_NAME.into());
    let ch = load_fixture(&name)?;
    let ps_db = or_file(args.ps_db, file, "ps-db")?.unwrap_or(10.0);
    let budget = ch.noise_variance * 10f64.powf(ps_db / 10.0);
    let ps = budget / ch.num_subcarriers() as f64;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "fixture {name}: {} users, {} subcarriers, noise variance {}",
        ch.num_users(),
        ch.num_subcarriers(),
        ch.noise_variance
    );
    let _ = writeln!(
        text,
        "source budget {} ({ps_db} dB over noise), equal split {} per subcarrier",
        num(budget),
        num(ps)
    );
    let _ = writeln!(text);
    let _ = writeln!(
        text,
        "{:<5}{:<7}{:<7}{:>9}  {:>9}  {:>9}  window",
        "sub", "owner", "eve", "ps_th", "pj_cap", "pj_best"
    );
    let mut snatch_lines = Vec::new();
    for n in 0..ch.num_subcarriers() {
        let a = analyze_subcarrier(&ch, n, ps);
        let _ = writeln!(
            text,
            "c{:<4}u{:<6}u{:<6}{:>9}  {:>9}  {:>9}  {}",
            n + 1,
            a.main_user + 1,
            a.eavesdropper + 1,
            if a.improvable { num(a.ps_threshold) } else { dash() },
            a.pj_threshold_improve.map(num).unwrap_or_else(dash),
            a.pj_opt.map(num).unwrap_or_else(dash),
            a.bounds
                .map(|b| format!("[{}, {})", num(b.lower), num(b.upper)))
                .unwrap_or_else(dash),
        );
        for s in &a.snatch_options {
            snatch_lines.push(format!(
                "c{:<4}u{:<6}{:>9}  {:>9}  {}",
                n + 1,
                s.user + 1,
                num(s.threshold),
                num(s.pj_opt),
                s.bounds
                    .map(|b| format!("[{}, {})", num(b.lower), num(b.upper)))
                    .unwrap_or_else(dash),
            ));
        }
    }
    if !snatch_lines.is_empty() {
        let _ = writeln!(text);
        let _ = writeln!(
            text,
            "snatch options\n{:<5}{:<7}{:>9}  {:>9}  window",
            "sub", "user", "pj_th", "pj_best"
        );
        for line in snatch_lines {
            let _ = writeln!(text, "{line}");
        }
    }
    deliver(args.output.as_ref(), &text)
}

fn fixture(args: FixtureArgs, file: &FileDefaults) -> Result<(), String> {
    let name = args
        .name
        .or_else(|| file.raw("fixture"))
        .unwrap_or_else(|| BUILTIN_FIXTURE_NAME.into());
    let ch = load_fixture(&name)?;
    deliver(args.output.as_ref(), &emit_channels(&ch))
}

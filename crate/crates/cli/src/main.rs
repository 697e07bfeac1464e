//! `elastoscat`: dictionary building, synthetic measurements, localization,
//! identification and table reproduction from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver or pipeline
//! failure, 4 a reproduced table missed its tolerances.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastoscat::experiment::{open_store, reproduce, simulate, ExperimentConfig, Stage, TableId};
use elastoscat::forward::ScattererKind;
use elastoscat::geometry::build_dictionary_shapes;
use elastoscat::imaging::{identify, locate, IndicatorChoice, IndicatorMap, Measurement};
use elastoscat::{Error, Vec3};

#[derive(Parser)]
#[command(name = "elastoscat", version, about = "Elastic scatterer localization and identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `kind`.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Overrides `indicator`.
    #[arg(long, value_enum)]
    indicator: Option<IndicatorArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Rigid,
    Medium,
}

#[derive(Clone, Copy, ValueEnum)]
enum IndicatorArg {
    Ip,
    IpPhaseless,
    Is,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Locate,
    Identify,
}

#[derive(Subcommand)]
enum Command {
    /// Dictionary operations.
    Dict {
        #[command(subcommand)]
        action: DictAction,
    },
    /// Simulates the configured scene and writes a measurement file.
    Forward {
        #[command(flatten)]
        common: Common,
        /// Frequency to simulate at.
        #[arg(long, value_enum, default_value = "locate")]
        stage: StageArg,
    },
    /// Stage one: localizes the scatterer from a measurement file.
    Locate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        measurement: PathBuf,
    },
    /// Stage two: matches a measurement against the dictionary at a location.
    Identify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        measurement: PathBuf,
        /// Location as `x,y,z`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        location: Vec3,
    },
    /// Runs one of the tables T1..T8 for all six shapes.
    Reproduce {
        table: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum DictAction {
    /// Builds the entries of all six shapes for the nominal incidence.
    Build {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_point(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

enum Failure {
    Config(String),
    Pipeline(String),
    Acceptance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Pipeline(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Pipeline(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Pipeline(e.to_string())
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    if let Some(kind) = common.kind {
        cfg.kind = match kind {
            KindArg::Rigid => ScattererKind::Rigid,
            KindArg::Medium => ScattererKind::Medium,
        };
    }
    if let Some(ind) = common.indicator {
        cfg.indicator = match ind {
            IndicatorArg::Ip => IndicatorChoice::Ip,
            IndicatorArg::IpPhaseless => IndicatorChoice::IpPhaseless,
            IndicatorArg::Is => IndicatorChoice::Is,
            IndicatorArg::Auto => IndicatorChoice::Auto,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_measurement(path: &Path) -> Result<Measurement, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let m: Measurement = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    m.validate()?;
    Ok(m)
}

fn map_csv(stage: &str, map: &IndicatorMap, out: &mut String) {
    for (p, v) in map.points.iter().zip(&map.values) {
        let _ = writeln!(out, "{stage},{:.6},{:.6},{:.6},{v:.12}", p[0], p[1], p[2]);
    }
}

fn dict_build(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let root = cfg.store_root(&common.out);
    let mut store = open_store(&cfg, cfg.kind, &root)?;
    let d = cfg.grid_center.normalize();
    let mut built = 0;
    for shape in build_dictionary_shapes() {
        let start = Instant::now();
        let n = store.ensure(std::slice::from_ref(&shape), &d, &cfg.polarization)?;
        if n > 0 {
            eprintln!("shape {}: built in {:.2?}", shape.id, start.elapsed());
        }
        built += n;
    }
    println!("{} entries built, {} in {}", built, store.entries().len(), store.dir().display());
    Ok(())
}

fn forward(common: &Common, stage: StageArg) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let (stage, name) = match stage {
        StageArg::Locate => (Stage::Locate, "locate"),
        StageArg::Identify => (Stage::Identify, "identify"),
    };
    let start = Instant::now();
    let m = simulate(&cfg, cfg.kind, cfg.shape_id, stage)?;
    eprintln!("forward solve: {:.2?}", start.elapsed());
    let path = common.out.join(format!("measurement_{name}.json"));
    write_json(&path, &serde_json::to_value(&m)?)?;
    println!("{}", path.display());
    Ok(())
}

fn run_locate(common: &Common, measurement: &Path) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let m = read_measurement(measurement)?;
    let (which, _) = cfg.indicator.resolve(m.noise_level, &m.material);
    let start = Instant::now();
    let loc = locate(&m, &cfg.grid()?, which)?;
    eprintln!("locate ({which:?}): {:.2?}", start.elapsed());
    let mut csv = String::from("stage,z1,z2,z3,value\n");
    map_csv("coarse", &loc.coarse, &mut csv);
    map_csv("fine", &loc.fine, &mut csv);
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join("indicator_map.csv"), csv)?;
    write_json(
        &common.out.join("location.json"),
        &serde_json::json!({
            "indicator": loc.indicator,
            "estimate": loc.estimate,
            "value": loc.value,
            "config_hash": cfg.hash()?,
        }),
    )?;
    println!("{:.6},{:.6},{:.6}", loc.estimate[0], loc.estimate[1], loc.estimate[2]);
    Ok(())
}

fn run_identify(common: &Common, measurement: &Path, location: &Vec3) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let m = read_measurement(measurement)?;
    let (_, which) = cfg.indicator.resolve(m.noise_level, &m.material);
    let mut store = open_store(&cfg, cfg.kind, &cfg.store_root(&common.out))?;
    let start = Instant::now();
    let entries = elastoscat::experiment::entries_for(&cfg, &mut store, location)?;
    let ident = identify(&m, &entries, location, which)?;
    eprintln!("identify ({which:?}): {:.2?}", start.elapsed());
    let mut csv = String::from("shape,raw,normalized\n");
    for ((id, r), n) in ident.shape_ids.iter().zip(&ident.raw).zip(&ident.normalized) {
        let _ = writeln!(csv, "{id},{r:.12},{n:.6}");
    }
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join("identification.csv"), csv)?;
    write_json(
        &common.out.join("identification.json"),
        &serde_json::json!({
            "identification": ident,
            "location": location,
            "config_hash": cfg.hash()?,
            "dictionary_hash": store.manifest.config_hash,
        }),
    )?;
    println!("{}", ident.shape_id);
    Ok(())
}

fn run_reproduce(table: &str, common: &Common) -> Result<(), Failure> {
    let table: TableId = table.parse()?;
    let cfg = load_config(common)?;
    let start = Instant::now();
    let result = reproduce(table, &cfg, &common.out)?;
    eprintln!("{table}: {:.2?}", start.elapsed());
    result.write(&common.out)?;
    for line in &result.checks {
        println!("{line}");
    }
    let verdict = if result.passed { "PASS" } else { "FAIL" };
    println!("{table} {verdict}");
    if result.passed {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("{table} missed its tolerances")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dict { action: DictAction::Build { common } } => dict_build(common),
        Command::Forward { common, stage } => forward(common, *stage),
        Command::Locate { common, measurement } => run_locate(common, measurement),
        Command::Identify { common, measurement, location } => run_identify(common, measurement, location),
        Command::Reproduce { table, common } => run_reproduce(table, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Acceptance(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(4)
        }
    }
}

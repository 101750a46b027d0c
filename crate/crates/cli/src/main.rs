use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ultralap::assoc::{AssociatedFunction, RoumieuAssociatedFunction};
use ultralap::config::{RunConfig, SequenceSpec, Stage};
use ultralap::grid::GridSpec;
use ultralap::laplace::laplace_forward;
use ultralap::subord::build_subordinate;
use ultralap::suite::{run_stage, run_suite, AssocRow, StageReport, SCHEMA_VERSION};
use ultralap::weights_seq::RSequence;
use ultralap::Error;

#[derive(Parser)]
#[command(name = "ultralap", version, about = "Certify weight sequences, ultrapolynomials and Laplace transforms of ultradistributions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration; defaults apply to omitted fields.
    #[arg(long, global = true, env = "ULTRALAP_CFG")]
    cfg: Option<PathBuf>,
    /// Directory for reports; stdout when omitted.
    #[arg(long, global = true, env = "ULTRALAP_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true, env = "ULTRALAP_JOBS")]
    jobs: Option<usize>,
    /// Seed for random probe sampling; overrides the config.
    #[arg(long, global = true, env = "ULTRALAP_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Weight-sequence conditions.
    #[command(subcommand)]
    Seq(SeqCmd),
    /// Associated functions.
    #[command(subcommand)]
    Assoc(AssocCmd),
    /// Subordinate functions.
    #[command(subcommand)]
    Subord(SubordCmd),
    /// Ultrapolynomial certificates.
    #[command(subcommand)]
    Poly(CertifyCmd),
    /// Analytic weight bounds.
    #[command(subcommand)]
    Weights(CertifyCmd),
    /// Forward transforms, certificates and the reconstruction chain.
    #[command(subcommand)]
    Laplace(LaplaceCmd),
    /// Configured pipelines.
    #[command(subcommand)]
    Suite(SuiteCmd),
}

#[derive(Subcommand)]
enum SeqCmd {
    /// Check (M.1), (M.2) and (M.3).
    Check {
        #[arg(long, env = "ULTRALAP_SEQ")]
        seq: Option<String>,
    },
}

#[derive(Subcommand)]
enum AssocCmd {
    /// Tabulate M (and N_r when --r is given) as CSV.
    Eval {
        /// `gevrey:S[:P_MAX]` or a TOML config whose sequence is used.
        #[arg(long, env = "ULTRALAP_SEQ")]
        seq: Option<String>,
        /// `log:A:B:N` or `lin:A:B:N`.
        #[arg(long)]
        rho_grid: Option<String>,
        /// `linear`, `log`, `affine:SLOPE:INTERCEPT`, `power:SCALE:EXP` or `geometric:A:B`.
        #[arg(long)]
        r: Option<String>,
    },
}

#[derive(Subcommand)]
enum SubordCmd {
    /// Build a subordinate function from `rho,g` samples.
    Build {
        #[arg(long)]
        g: PathBuf,
        #[arg(long, env = "ULTRALAP_SEQ")]
        seq: Option<String>,
    },
}

#[derive(Subcommand)]
enum CertifyCmd {
    Certify,
}

#[derive(Subcommand)]
enum LaplaceCmd {
    /// Transform grid as CSV (xi, eta, re_f, im_f).
    Forward,
    Certify,
    Reconstruct,
    Contour,
}

#[derive(Subcommand)]
enum SuiteCmd {
    Run,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Contract(String),
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config { .. }) => Failure::Config(e),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Contract(what)) => {
            eprintln!("ultralap: hard contract failed: {what}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("ultralap: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("ultralap: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if let Some(n) = g.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(anyhow!("--jobs: {e}")))?;
    }
    let mut cfg = match &g.cfg {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let sink = Sink { out: g.out.clone() };
    match cli.command {
        Command::Seq(SeqCmd::Check { seq }) => {
            override_sequence(&mut cfg, seq.as_deref())?;
            stage(&sink, &cfg, Stage::SeqCheck, "seq_check")
        }
        Command::Assoc(AssocCmd::Eval { seq, rho_grid, r }) => {
            override_sequence(&mut cfg, seq.as_deref())?;
            if let Some(spec) = rho_grid {
                cfg.assoc.rho_grid =
                    spec.parse::<GridSpec>().map_err(|e| config_error("--rho-grid", e.to_string()))?;
            }
            cfg.validate()?;
            assoc_eval(&sink, &cfg, r.as_deref())
        }
        Command::Subord(SubordCmd::Build { g, seq }) => {
            override_sequence(&mut cfg, seq.as_deref())?;
            subord_build(&sink, &cfg, &g)
        }
        Command::Poly(CertifyCmd::Certify) => stage(&sink, &cfg, Stage::PolyCertify, "poly_certify"),
        Command::Weights(CertifyCmd::Certify) => stage(&sink, &cfg, Stage::WeightsCertify, "weights_certify"),
        Command::Laplace(cmd) => match cmd {
            LaplaceCmd::Forward => laplace_forward_csv(&sink, &cfg),
            LaplaceCmd::Certify => stage(&sink, &cfg, Stage::LaplaceCertify, "laplace_certify"),
            LaplaceCmd::Reconstruct => stage(&sink, &cfg, Stage::Reconstruct, "reconstruct"),
            LaplaceCmd::Contour => stage(&sink, &cfg, Stage::Contour, "contour"),
        },
        Command::Suite(SuiteCmd::Run) => {
            let report = run_suite(&cfg);
            sink.json("report", &serde_json::to_value(&report).map_err(anyhow::Error::from)?)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = report.stages.iter().filter(|s| !s.passed).map(|s| s.stage.name()).collect();
                Err(Failure::Contract(failed.join(", ")))
            }
        }
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Failure {
    Failure::Config(Error::Config { path: path.into(), message: message.into() }.into())
}

/// `--seq` is either a sequence spec or the path of a config holding one.
fn override_sequence(cfg: &mut RunConfig, seq: Option<&str>) -> Result<(), Failure> {
    let Some(s) = seq else { return Ok(()) };
    cfg.sequence = if Path::new(s).is_file() {
        RunConfig::load(Path::new(s))?.sequence
    } else {
        SequenceSpec::parse(s)?
    };
    cfg.validate()?;
    Ok(())
}

struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    fn write(&self, name: &str, ext: &str, bytes: &[u8]) -> anyhow::Result<()> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(format!("{name}.{ext}"));
                fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            }
            None => io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    fn json(&self, name: &str, v: &Value) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, "json", s.as_bytes())
    }

    fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
        self.write(name, "csv", &bytes)
    }
}

fn stage(sink: &Sink, cfg: &RunConfig, stage: Stage, name: &str) -> Result<(), Failure> {
    let report: StageReport = run_stage(cfg, stage);
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "stage": report.stage,
        "passed": report.passed,
        "data": report.data,
        "seconds": report.seconds,
    });
    sink.json(name, &v)?;
    if report.passed {
        return Ok(());
    }
    match report.data.get("error").and_then(Value::as_str) {
        Some(msg) if msg.starts_with("config error") => Err(Failure::Config(anyhow!("{msg}"))),
        Some(msg) => Err(Failure::Contract(format!("{name}: {msg}"))),
        None => Err(Failure::Contract(name.into())),
    }
}

fn parse_r(spec: &str, n: usize) -> Result<RSequence, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<f64, Failure> {
        parts
            .get(i)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| config_error("--r", format!("`{spec}`: expected a number in field {i}")))
    };
    let r = match parts[0] {
        "linear" => RSequence::linear(n),
        "log" => RSequence::log(n),
        "affine" => RSequence::affine(num(1)?, num(2)?, n),
        "power" => RSequence::power(num(1)?, num(2)?, n),
        "geometric" => RSequence::geometric(num(1)?, num(2)?, n),
        other => return Err(config_error("--r", format!("unknown r family `{other}`"))),
    };
    r.map_err(|e| config_error("--r", e.to_string()))
}

fn assoc_eval(sink: &Sink, cfg: &RunConfig, r: Option<&str>) -> Result<(), Failure> {
    let seq = cfg.sequence.build()?;
    let af = AssociatedFunction::new(&seq)?;
    let roumieu = match r {
        Some(spec) => Some(RoumieuAssociatedFunction::new(&seq, &parse_r(spec, seq.p_max())?)?),
        None => None,
    };
    let rows = cfg
        .assoc
        .rho_grid
        .points()
        .into_iter()
        .map(|rho| {
            Ok(AssocRow {
                rho,
                m: af.eval(rho)?,
                n: roumieu.as_ref().map(|n| n.eval(rho)).transpose()?,
                argmax_p: af.argmax(rho)?,
            })
        })
        .collect::<ultralap::Result<Vec<_>>>()?;
    sink.csv("assoc", &rows)?;
    Ok(())
}

#[derive(Deserialize)]
struct Sample {
    rho: f64,
    g: f64,
}

#[derive(Serialize)]
struct TableRow {
    rho: f64,
    eps: f64,
}

fn subord_build(sink: &Sink, cfg: &RunConfig, path: &Path) -> Result<(), Failure> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    let samples: Vec<Sample> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| config_error("--g", format!("{}: {e}", path.display())))?;
    if samples.is_empty() {
        return Err(config_error("--g", "no samples"));
    }
    let rho: Vec<f64> = samples.iter().map(|s| s.rho).collect();
    let g: Vec<f64> = samples.iter().map(|s| s.g).collect();
    let af = AssociatedFunction::new(&cfg.sequence.build()?)?;
    let sf = build_subordinate(&rho, &g, &af)?;
    let table: Vec<TableRow> = sf.rho.iter().zip(&sf.eps).map(|(&rho, &eps)| TableRow { rho, eps }).collect();
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "rho1": sf.rho1,
        "Cprime": sf.c_prime,
        "ln_Cprime": sf.ln_c_prime,
        "slope": sf.slope,
        "trivial": sf.trivial,
        "hypothesis": sf.hypothesis,
        "note": sf.note,
        "table": table,
    });
    sink.json("subord", &v)?;
    Ok(())
}

#[derive(Serialize)]
struct ForwardRow {
    xi: f64,
    eta: f64,
    re_f: f64,
    im_f: f64,
}

fn laplace_forward_csv(sink: &Sink, cfg: &RunConfig) -> Result<(), Failure> {
    let l = &cfg.laplace;
    let t = l.distribution.build()?;
    let grid = laplace_forward(&t, &l.xi, &l.eta.points())?;
    let mut rows = Vec::with_capacity(grid.xi.len() * grid.eta.len());
    for (&xi, row) in grid.xi.iter().zip(&grid.values) {
        for (&eta, f) in grid.eta.iter().zip(row) {
            rows.push(ForwardRow { xi, eta, re_f: f.re, im_f: f.im });
        }
    }
    if rows.iter().any(|r| !(r.re_f.is_finite() && r.im_f.is_finite())) {
        return Err(Failure::Contract("laplace forward: non-finite transform value".into()));
    }
    sink.csv("forward", &rows)?;
    Ok(())
}

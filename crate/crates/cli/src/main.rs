//! `qlc`: command-line front end for the code laboratory.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qlc::config::{self, BoundsConfig, EntropyConfig, RegionConfig};
use qlc::codes::Caps;
use qlc::experiments::{self, CoveringExperimentConfig, PtpConfig, SumsetExperimentConfig};
use qlc::md::{self, MdExampleParams};
use qlc::report::{Format, RunReport};
use qlc::{bounds, prob, Error, Exec};

#[derive(Parser, Debug)]
#[command(name = "qlc", version, about = "Quasi-linear code experiments and bound evaluation")]
struct Cli {
    /// TOML configuration for the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the report file; stdout when absent.
    #[arg(long, global = true, env = "QLC_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Largest set the enumerators may materialise.
    #[arg(long, global = true)]
    cap: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Run trials on a single thread, in order.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Records,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Records => Format::Records,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Entropies of pmfs and conditional entropies of a joint.
    Entropy,
    /// Sumset growth of random quasi-linear codes.
    Sumset,
    /// Monte Carlo covering experiment for a pair of codes.
    Covering,
    /// Point-to-point lossy source coding with a binned coset code.
    Ptp,
    /// The three-descriptions example over GF(3).
    MdExample,
    /// Evaluate a user-supplied entropy/rate constraint system.
    RegionCheck,
    /// Single-letter covering bounds and second-moment exponents.
    Bounds,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::Sumset => "sumset",
            Command::Covering => "covering",
            Command::Ptp => "ptp",
            Command::MdExample => "md-example",
            Command::RegionCheck => "region-check",
            Command::Bounds => "bounds",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_infeasible() => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn need_config<T: serde::de::DeserializeOwned>(cli: &Cli) -> qlc::Result<T> {
    match &cli.config {
        Some(p) => config::load_toml(p),
        None => Err(Error::Config(format!("{} requires --config", cli.command.name()))),
    }
}

fn apply_caps(caps: &mut Caps, cli: &Cli) {
    if let Some(c) = cli.cap {
        caps.set = c;
    }
}

fn run(cli: &Cli) -> qlc::Result<RunReport> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Entropy => {
            let cfg: EntropyConfig = need_config(cli)?;
            let mut r = RunReport::new("entropy", cli.seed.unwrap_or(0), serde_json::to_value(&cfg).expect("config"));
            for (i, p) in cfg.pmfs.iter().enumerate() {
                r.records.push(json!({"pmf": i, "probs": p.probs(), "entropy_bits": p.entropy()}));
            }
            if !cfg.queries.is_empty() {
                let j = cfg.joint.as_ref().ok_or_else(|| Error::Config("queries need a joint".into()))?;
                for q in &cfg.queries {
                    let h = prob::conditional_entropy(j, &q.targets, &q.given)?;
                    r.records.push(json!({"targets": q.targets, "given": q.given, "entropy_bits": h}));
                }
            }
            Ok(r)
        }
        Command::Sumset => {
            let mut cfg: SumsetExperimentConfig = need_config(cli)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            apply_caps(&mut cfg.caps, cli);
            Ok(experiments::run_sumset_experiment(&cfg, exec)?.report)
        }
        Command::Covering => {
            let mut cfg: CoveringExperimentConfig = need_config(cli)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            apply_caps(&mut cfg.caps, cli);
            Ok(experiments::run_covering_experiment(&cfg, exec)?.report)
        }
        Command::Ptp => {
            let mut cfg: PtpConfig = need_config(cli)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            apply_caps(&mut cfg.caps, cli);
            Ok(experiments::run_ptp_experiment(&cfg, exec)?.report)
        }
        Command::MdExample => {
            let p: MdExampleParams = match &cli.config {
                Some(path) => config::load_toml(path)?,
                None => MdExampleParams::default(),
            };
            md::run_md_example(&p)
        }
        Command::RegionCheck => {
            let cfg: RegionConfig = need_config(cli)?;
            let rep = md::eval_region_constraints(&cfg.system, &cfg.params)?;
            let mut r = RunReport::new("region-check", cli.seed.unwrap_or(0), serde_json::to_value(&cfg).expect("config"));
            r.records.extend(rep.records.iter().map(|b| serde_json::to_value(b).expect("record")));
            r.records.push(json!({"feasible": rep.feasible}));
            Ok(r)
        }
        Command::Bounds => {
            let cfg: BoundsConfig = need_config(cli)?;
            let rep = bounds::eval_bounds(&cfg.scenario)?;
            let mut r = RunReport::new("bounds", cli.seed.unwrap_or(0), serde_json::to_value(&cfg).expect("config"));
            r.records.push(serde_json::to_value(&rep).expect("report"));
            if matches!(cfg.scenario.scheme, bounds::Scheme::Nqlc { .. }) {
                let e = bounds::eval_second_moment_exponents(&cfg.scenario)?;
                r.records.push(serde_json::to_value(&e).expect("report"));
            }
            Ok(r)
        }
    }
}

fn write_report(dir: &Path, r: &RunReport, text: &str, format: Format) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let path = dir.join(format!("{}-{stamp}-{}.{}", r.command, r.seed, format.extension()));
    std::fs::write(&path, text)?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let start = Instant::now();
    let result = std::panic::catch_unwind(|| qlc::exec::with_threads(cli.threads, || run(&cli)));
    let report = match result {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
        Err(_) => return ExitCode::from(3),
    };
    let format = Format::from(cli.format);
    let text = report.render(format);
    match &cli.out {
        Some(dir) => match write_report(dir, &report, &text, format) {
            Ok(path) => eprintln!("wrote {}", path.display()),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        },
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    eprintln!("{}: {:.3}s", cli.command.name(), start.elapsed().as_secs_f64());
    ExitCode::SUCCESS
}

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use loctime::harness::identities::identity_checks;
use loctime::harness::studies::{
    gamma_study, representation_defaults, representation_study, scaling_study, write_gamma_csv,
    GAMMA_EPS_LIST,
};
use loctime::harness::{run_ensemble_to_file, sweep, Check, ExperimentConfig, Thresholds};
use loctime::Error;

#[derive(Parser)]
#[command(name = "loctime", version, about = "Monte Carlo laboratory for CLTs of Brownian local-time moduli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic identity suite (no random numbers).
    Identities,
    /// Clark-Ocone, reversed-Tanaka and gamma checks under grid refinement.
    Representation(RunArgs),
    /// Ensemble run with the distributional report of the L^p law.
    Clt {
        #[command(flatten)]
        run: RunArgs,
        /// Exponent of the modulus.
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=3))]
        p: u32,
    },
    /// Scaling exponents of the sup-modulus and of local-time increments.
    Scaling(RunArgs),
    /// Per-path gamma estimates by both representations.
    Gamma(RunArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn gamma_defaults() -> ExperimentConfig {
    ExperimentConfig {
        n_paths: 100,
        n_steps: 1 << 12,
        h_list: vec![0.3],
        ..Default::default()
    }
}

/// Defaults, then the config file, then `LOCTIME_OUT`, then flags.
fn effective_config(base: ExperimentConfig, args: &RunArgs) -> loctime::Result<ExperimentConfig> {
    let mut value = serde_json::to_value(&base).expect("config serializes");
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        // strict parse first so unknown keys are reported
        ExperimentConfig::from_json(&text)?;
        let file: Value = serde_json::from_str(&text).map_err(|e| Error::Usage(e.to_string()))?;
        if let (Some(dst), Some(src)) = (value.as_object_mut(), file.as_object()) {
            for (k, v) in src {
                dst.insert(k.clone(), v.clone());
            }
        }
    }
    let mut c: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| Error::Usage(format!("invalid config: {e}")))?;
    if let Ok(dir) = std::env::var("LOCTIME_OUT") {
        if !dir.is_empty() {
            c.out_dir = PathBuf::from(dir);
        }
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(n) = args.paths {
        c.n_paths = n;
    }
    if let Some(n) = args.n_steps {
        c.n_steps = n;
    }
    if let Some(t) = args.t {
        c.t = t;
    }
    if let Some(h) = &args.h_list {
        c.h_list = h.clone();
    }
    if let Some(d) = &args.out_dir {
        c.out_dir = d.clone();
    }
    c.validate()?;
    for w in c.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(c)
}

fn init_threads(limit: Option<usize>) -> loctime::Result<()> {
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    let n = match limit {
        Some(0) => return Err(Error::Usage("--threads must be at least 1".into())),
        Some(k) => k.min(hw),
        None => hw,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))
}

fn create(path: &Path) -> loctime::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn write_json(path: &Path, value: &Value) -> loctime::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn print_checks(checks: &[Check]) -> Outcome {
    for c in checks {
        println!("{}", c.line());
    }
    if checks.iter().all(|c| c.pass) {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn prepare(base: ExperimentConfig, args: &RunArgs) -> loctime::Result<ExperimentConfig> {
    let config = effective_config(base, args)?;
    init_threads(args.threads)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_at(&config.out_dir))?;
    Ok(config)
}

fn cmd_identities() -> loctime::Result<Outcome> {
    let start = std::time::Instant::now();
    let checks = identity_checks()?;
    let outcome = print_checks(&checks);
    println!("identities: {} checks in {:.2?}", checks.len(), start.elapsed());
    Ok(outcome)
}

fn cmd_representation(args: &RunArgs) -> loctime::Result<Outcome> {
    let config = prepare(representation_defaults(), args)?;
    let study = representation_study(&config)?;
    let csv = config.out_dir.join("representation_residuals.csv");
    study.write_csv(&config, create(&csv)?).map_err(io_at(&csv))?;
    println!("median Clark-Ocone relative residual per level: {:?}", study.clark_ocone_median);
    println!("median reversed-Tanaka residual per level:      {:?}", study.tanaka_median);
    println!("gamma RMS for eps = {GAMMA_EPS_LIST:?}: {:?}", study.gamma_rms);
    write_json(
        &config.out_dir.join("representation.json"),
        &json!({
            "clark_ocone_median": study.clark_ocone_median,
            "tanaka_median": study.tanaka_median,
            "gamma_eps": GAMMA_EPS_LIST,
            "gamma_rms": study.gamma_rms,
            "checks": study.checks,
            "pass": study.pass(),
            "config": config,
        }),
    )?;
    Ok(print_checks(&study.checks))
}

fn cmd_clt(args: &RunArgs, p: u32) -> loctime::Result<Outcome> {
    let config = prepare(ExperimentConfig::default(), args)?;
    let records_path = config.out_dir.join("records.csv");
    let records = run_ensemble_to_file(&config, &records_path)?;
    let report = sweep(&config, &records, p, &Thresholds::default())?;
    write_json(&config.out_dir.join(format!("report_p{p}.json")), &report.to_json())?;
    let plot = config.out_dir.join(format!("sweep_p{p}.csv"));
    report.write_plot_csv(create(&plot)?).map_err(io_at(&plot))?;
    if report.under_resolved {
        eprintln!("warning: report marked under-resolved");
    }
    for e in &report.entries {
        println!(
            "h = {:<6} n = {:<6} mean {:+.4} var {:.4} kurt {:.3} KS D {:.4} (p {:.3e}) ratio {:.2}",
            e.h, e.n, e.mean, e.var, e.kurt, e.ks_d, e.ks_p, e.second_moment_ratio
        );
    }
    Ok(print_checks(&report.checks))
}

fn cmd_scaling(args: &RunArgs) -> loctime::Result<Outcome> {
    let config = prepare(ExperimentConfig::default(), args)?;
    let study = scaling_study(&config)?;
    let csv = config.out_dir.join("scaling.csv");
    {
        use std::io::Write;
        let mut out = create(&csv)?;
        let w = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(out, "# config={}", config.embedded_json())?;
            writeln!(out, "quantity,x,mean")?;
            for (h, m) in study.h.iter().zip(&study.modulus_sup_mean) {
                writeln!(out, "modulus_sup,{},{}", loctime::fmt17(*h), loctime::fmt17(*m))?;
            }
            for (d, m) in &study.increment_sup_mean {
                writeln!(out, "increment_sup,{},{}", loctime::fmt17(*d), loctime::fmt17(*m))?;
            }
            out.flush()
        };
        w(&mut out).map_err(io_at(&csv))?;
    }
    write_json(
        &config.out_dir.join("scaling.json"),
        &json!({ "study": study, "pass": study.pass(), "config": config }),
    )?;
    Ok(print_checks(&study.checks))
}

fn cmd_gamma(args: &RunArgs) -> loctime::Result<Outcome> {
    let config = prepare(gamma_defaults(), args)?;
    let (pairs, rms) = gamma_study(&config)?;
    let csv = config.out_dir.join("gamma.csv");
    write_gamma_csv(&config, &pairs, create(&csv)?).map_err(io_at(&csv))?;
    let checks: Vec<Check> = (1..rms.len())
        .map(|k| {
            Check::at_most(
                format!("gamma RMS eps={} vs eps={}", GAMMA_EPS_LIST[k], GAMMA_EPS_LIST[k - 1]),
                rms[k],
                rms[k - 1],
            )
        })
        .collect();
    write_json(
        &config.out_dir.join("gamma.json"),
        &json!({ "gamma_eps": GAMMA_EPS_LIST, "gamma_rms": rms, "checks": checks, "config": config }),
    )?;
    Ok(print_checks(&checks))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Identities => cmd_identities(),
        Command::Representation(a) => cmd_representation(a),
        Command::Clt { run, p } => cmd_clt(run, *p),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Gamma(a) => cmd_gamma(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

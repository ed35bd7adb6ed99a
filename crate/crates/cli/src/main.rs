//! `edrknn`: run simulation grids, estimate EDR directions for a CSV
//! dataset, check the asymptotic variance plug-ins, and tabulate kernel
//! moments.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use edrknn_core::{
    clt_diagnostic, estimate_edr, kernel_moment, run_experiment, BandwidthRule, DMatrix, EstimatorConfig,
    ExperimentConfig, KernelKind, Method, Model, RngSeed, Sample,
};
use serde::Serialize;

const KERNEL_NAMES: [&str; 6] = ["gaussian", "epanechnikov", "biweight", "triweight", "triangular", "all"];

#[derive(Parser, Debug)]
#[command(name = "edrknn", version, about = "Sliced inverse regression with k-NN kernel estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte Carlo grid and write one row per (model, n, kernel, method) cell.
    Experiment(ExperimentArgs),
    /// Estimate Λ̂, its spectrum and the EDR directions for a CSV dataset.
    Estimate(EstimateArgs),
    /// Compare the σ_A² plug-in with the spread of √n Tr(Aᵀ(Λ̂ - Λ)) on Model 1.
    Diagnose(DiagnoseArgs),
    /// Tabulate numerical moments of every kernel.
    KernelsCheck(OutputArgs),
}

#[derive(Args, Debug, Clone)]
struct EstimatorArgs {
    /// Exponent c in k_n = max(2, floor(n^c)).
    #[arg(long, default_value_t = 0.85, value_parser = parse_kn_exponent)]
    kn_exponent: f64,
    /// Exponent c in the density floor b_n = n^(-c).
    #[arg(long, default_value_t = 0.09, value_parser = parse_bn_exponent)]
    bn_exponent: f64,
    /// Explicit bandwidth for the fixed method (default: 1.06·sd(y)·n^(-1/5)).
    #[arg(long, value_parser = parse_positive)]
    bandwidth: Option<f64>,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            kn_exponent: self.kn_exponent,
            bn_exponent: self.bn_exponent,
            fixed_bandwidth_rule: match self.bandwidth {
                Some(h) => BandwidthRule::Explicit(h),
                None => BandwidthRule::SilvermanLike,
            },
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodChoice {
    Knn,
    Fixed,
    Both,
}

impl MethodChoice {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Knn => vec![Method::Knn],
            MethodChoice::Fixed => vec![Method::Fixed],
            MethodChoice::Both => Method::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Model id, repeatable (default: all).
    #[arg(long, value_parser = PossibleValuesParser::new(["1", "2", "3", "all"]))]
    model: Vec<String>,
    /// Sample size, repeatable (default: 50 100 200 400).
    #[arg(long = "n", value_parser = clap::value_parser!(u64).range(10..))]
    n: Vec<u64>,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
    /// Kernel, repeatable (default: all).
    #[arg(long, value_parser = PossibleValuesParser::new(KERNEL_NAMES))]
    kernel: Vec<String>,
    #[arg(long, value_enum, default_value_t = MethodChoice::Both)]
    method: MethodChoice,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, env = "EDRKNN_SEED", default_value_t = 42)]
    seed: u64,
    /// Worker threads; the report does not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Headered CSV with columns x1..xd, y.
    #[arg(long)]
    input: PathBuf,
    /// Number of predictor columns d.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    dim: u64,
    /// Number of EDR directions N (1 <= N < d).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    directions: u64,
    #[arg(long, default_value = "gaussian", value_parser = PossibleValuesParser::new(&KERNEL_NAMES[..5]))]
    kernel: String,
    #[arg(long, value_enum, default_value_t = MethodChoice::Knn)]
    method: MethodChoice,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Only model 1 has an analytic Λ.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    model: u8,
    #[arg(long = "n", default_value_t = 400, value_parser = clap::value_parser!(u64).range(10..))]
    n: u64,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(3..))]
    replicates: u64,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(10..))]
    calibration_n: u64,
    /// Weight matrix A as a single unit entry "row,col" (1-based).
    #[arg(long, default_value = "1,1", value_parser = parse_entry)]
    weight: (usize, usize),
    #[arg(long, default_value = "gaussian", value_parser = PossibleValuesParser::new(&KERNEL_NAMES[..5]))]
    kernel: String,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, env = "EDRKNN_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_in_range(s: &str, lo: f64, hi: f64) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > lo && v <= hi {
        Ok(v)
    } else {
        Err(format!("must lie in ({lo}, {hi}]"))
    }
}

fn parse_kn_exponent(s: &str) -> Result<f64, String> {
    parse_in_range(s, 0.5, 0.9)
}

fn parse_bn_exponent(s: &str) -> Result<f64, String> {
    parse_in_range(s, 0.0, 0.1)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    parse_in_range(s, 0.0, f64::MAX)
}

fn parse_entry(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    let r: usize = r.trim().parse().map_err(|_| "bad row")?;
    let c: usize = c.trim().parse().map_err(|_| "bad column")?;
    if r == 0 || c == 0 {
        return Err("indices are 1-based".into());
    }
    Ok((r, c))
}

fn kernels_from(names: &[String]) -> Vec<KernelKind> {
    if names.is_empty() || names.iter().any(|k| k == "all") {
        return KernelKind::ALL.to_vec();
    }
    let mut out: Vec<KernelKind> = Vec::new();
    for name in names {
        let k = name.parse().expect("validated by clap");
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn models_from(ids: &[String]) -> Vec<Model> {
    if ids.is_empty() || ids.iter().any(|m| m == "all") {
        return Model::ALL.to_vec();
    }
    let mut out: Vec<Model> = Vec::new();
    for id in ids {
        let m = Model::from_id(id.parse().expect("validated by clap")).expect("validated by clap");
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

fn emit(out: &OutputArgs, text: &str) -> anyhow::Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        models: models_from(&args.model),
        sample_sizes: if args.n.is_empty() {
            vec![50, 100, 200, 400]
        } else {
            args.n.iter().map(|&n| n as usize).collect()
        },
        replicates: args.replicates as usize,
        kernels: kernels_from(&args.kernel),
        methods: args.method.methods(),
        estimator: args.estimator.config(),
        master_seed: RngSeed(args.seed),
        threads: args.threads as usize,
    };
    let report = run_experiment(&cfg)?;
    let text = match args.out.format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json()?,
    };
    emit(&args.out, &text)
}

fn read_dataset(path: &Path, dim: usize) -> anyhow::Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() != dim + 1 {
        bail!(
            "{}: expected {} columns (x1..x{dim}, y), found {}",
            path.display(),
            dim + 1,
            headers.len()
        );
    }
    let (mut rows, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("{}: data row {}: not a number", path.display(), line + 1))?;
        ys.push(values[dim]);
        rows.push(values[..dim].to_vec());
    }
    Ok(Sample::from_rows(&rows, &ys)?)
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    input: String,
    #[serde(flatten)]
    estimate: &'a edrknn_core::EdrEstimate,
    k_n: usize,
    b_n: f64,
}

fn estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let dim = args.dim as usize;
    let sample = read_dataset(&args.input, dim)?;
    let method = match args.method {
        MethodChoice::Knn => Method::Knn,
        MethodChoice::Fixed => Method::Fixed,
        MethodChoice::Both => bail!("estimate takes a single method (knn or fixed)"),
    };
    let cfg = args
        .estimator
        .config()
        .with_kernel(args.kernel.parse()?)
        .with_method(method);
    let est = estimate_edr(&sample, &cfg, args.directions as usize)?;
    let text = match args.out.format {
        Format::Json => {
            let out = EstimateOutput {
                input: args.input.display().to_string(),
                estimate: &est,
                k_n: cfg.k_n(sample.n()),
                b_n: cfg.b_n(sample.n()),
            };
            serde_json::to_string_pretty(&out)? + "\n"
        }
        Format::Csv => {
            let mut rows = Vec::new();
            let mut push = |quantity: &str, index: usize, values: Vec<f64>| {
                let mut r = vec![quantity.to_string(), index.to_string()];
                r.extend(values.into_iter().map(real));
                r.resize(dim + 2, String::new());
                rows.push(r);
            };
            for i in 0..dim {
                push("lambda_hat", i + 1, est.lambda_hat.row(i).iter().copied().collect());
            }
            for j in 0..dim {
                push("eigenvalue", j + 1, vec![est.eigenvalues[j]]);
            }
            for j in 0..est.n_directions() {
                push("direction", j + 1, est.directions.column(j).iter().copied().collect());
            }
            let mut header = vec!["quantity".to_string(), "index".to_string()];
            header.extend((1..=dim).map(|j| format!("c{j}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            format!(
                "# input: {}\n# n: {}\n# k_n: {}\n# b_n: {}\n# bandwidth_rule: {}\n# config: {}\n{}",
                args.input.display(),
                sample.n(),
                cfg.k_n(sample.n()),
                real(cfg.b_n(sample.n())),
                cfg.fixed_bandwidth_rule.describe(),
                serde_json::to_string(&cfg)?,
                csv_string(&header, &rows)?
            )
        }
    };
    emit(&args.out, &text)
}

#[derive(Serialize)]
struct DiagnoseOutput {
    model: u8,
    weight: (usize, usize),
    seed: u64,
    config: EstimatorConfig,
    #[serde(flatten)]
    diagnostics: edrknn_core::AsymptoticDiagnostics,
}

fn diagnose(args: DiagnoseArgs) -> anyhow::Result<()> {
    let model = Model::from_id(args.model)?;
    let d = model.dim();
    let (r, c) = args.weight;
    if r > d || c > d {
        bail!("weight entry ({r},{c}) outside a {d}x{d} matrix");
    }
    let mut a = DMatrix::zeros(d, d);
    a[(r - 1, c - 1)] = 1.0;
    let cfg = args.estimator.config().with_kernel(args.kernel.parse()?);
    let diag = clt_diagnostic(
        model,
        &a,
        args.n as usize,
        args.replicates as usize,
        RngSeed(args.seed),
        args.calibration_n as usize,
        &cfg,
        args.threads as usize,
    )?;
    let text = match args.out.format {
        Format::Json => {
            let out = DiagnoseOutput {
                model: args.model,
                weight: args.weight,
                seed: args.seed,
                config: cfg,
                diagnostics: diag,
            };
            serde_json::to_string_pretty(&out)? + "\n"
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = [
                ("n", diag.n.to_string()),
                ("replicates", diag.replicates.to_string()),
                ("calibration_n", diag.calibration_n.to_string()),
                ("sigma_a_sq_plugin", real(diag.sigma_a_sq_plugin)),
                ("sigma_a_sq_empirical", real(diag.sigma_a_sq_empirical)),
                ("variance_ratio", real(diag.sigma_a_sq_empirical / diag.sigma_a_sq_plugin)),
                ("t_mean", real(diag.t_mean)),
                ("normality_stat", real(diag.normality_stat)),
                ("normality_p_value", real(diag.normality_p_value)),
            ]
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v])
            .collect();
            format!(
                "# model: {}\n# weight: {r},{c}\n# seed: {}\n# config: {}\n{}",
                args.model,
                args.seed,
                serde_json::to_string(&cfg)?,
                csv_string(&["quantity", "value"], &rows)?
            )
        }
    };
    emit(&args.out, &text)
}

const QUAD_STEP: f64 = 1e-4;
const GAUSSIAN_HALFWIDTH: f64 = 12.0;

#[derive(Serialize)]
struct KernelRow {
    kernel: KernelKind,
    moment0: f64,
    moment1: f64,
    moment2: f64,
    moment3: f64,
    mode_value: f64,
}

fn kernels_check(out: OutputArgs) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for k in KernelKind::ALL {
        let hw = k.support_radius().unwrap_or(GAUSSIAN_HALFWIDTH);
        let m = |order| kernel_moment(k, order, QUAD_STEP, hw);
        rows.push(KernelRow {
            kernel: k,
            moment0: m(0)?,
            moment1: m(1)?,
            moment2: m(2)?,
            moment3: m(3)?,
            mode_value: k.mode_value(),
        });
    }
    let text = match out.format {
        Format::Json => {
            let doc = serde_json::json!({
                "quad_step": QUAD_STEP,
                "gaussian_halfwidth": GAUSSIAN_HALFWIDTH,
                "kernels": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.kernel.to_string(),
                        real(r.moment0),
                        real(r.moment1),
                        real(r.moment2),
                        real(r.moment3),
                        real(r.mode_value),
                    ]
                })
                .collect();
            format!(
                "# quad_step: {QUAD_STEP}\n# gaussian_halfwidth: {GAUSSIAN_HALFWIDTH}\n{}",
                csv_string(&["kernel", "moment0", "moment1", "moment2", "moment3", "mode_value"], &body)?
            )
        }
    };
    emit(&out, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Experiment(a) => experiment(a),
        Command::Estimate(a) => estimate(a),
        Command::Diagnose(a) => diagnose(a),
        Command::KernelsCheck(a) => kernels_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

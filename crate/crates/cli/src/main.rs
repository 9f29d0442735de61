use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cycleweights::asympt::{self, SingularPolynomial};
use cycleweights::exact::{self, HTable};
use cycleweights::observables;
use cycleweights::sampler::{self, SamplerState};
use cycleweights::{tvd, Error, WeightModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "cycleweights",
    version,
    about = "Exact tables, asymptotics and sampling for weighted random permutations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
    /// Worker threads for sampling; never changes output bytes
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Exact normalization constants h_0..h_n
    Hn,
    /// Saddle point r of vP'(r) = n e^{-r} with the fitted singular polynomial
    Saddle,
    /// Exact against asymptotic h_n over --n-list
    Compare,
    /// Exact law of the first lexicographic cycle length L_1
    Dist,
    /// Total variation distance d_b(n) to the Poisson product
    Tvd,
    /// Sampled cycle types, one per line
    Sample,
    /// Rescaled Young-diagram profile statistics against the limit shape
    Shape,
    /// Total cycle count against its Gaussian limit
    K0n,
    /// Scaled first cycle length against Exp(1)
    L1,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModelKind {
    LogPower,
    Constant,
    Custom,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug, Clone)]
struct Opts {
    #[arg(long, global = true, value_enum, default_value = "log-power")]
    model: ModelKind,
    #[arg(long, global = true, default_value_t = 1)]
    k: u32,
    /// Lower coefficients a_0..a_{k-1} of the log-power weights
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    lower_coeffs: Vec<f64>,
    /// θ for --model constant, θ_1,θ_2,... for --model custom
    #[arg(long, global = true, value_delimiter = ',')]
    theta: Vec<f64>,
    #[arg(long, global = true, default_value_t = 100)]
    n: usize,
    #[arg(long, global = true, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long, global = true, default_value_t = 2)]
    b: usize,
    #[arg(long, global = true, default_value_t = 1.0)]
    v: f64,
    #[arg(long, global = true, default_value_t = 1000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Comma list of x values, or lo:hi:count for an even grid
    #[arg(long, global = true, default_value = "0.5,1,2")]
    grid: String,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

/// Everything that determines the output bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunConfig {
    command: Command,
    model: ModelKind,
    k: u32,
    lower_coeffs: Vec<f64>,
    theta: Vec<f64>,
    n: usize,
    n_list: Vec<usize>,
    b: usize,
    v: f64,
    samples: usize,
    seed: u64,
    grid: String,
    format: Format,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Self {
        let o = &cli.opts;
        Self {
            command: cli.command,
            model: o.model,
            k: o.k,
            lower_coeffs: o.lower_coeffs.clone(),
            theta: o.theta.clone(),
            n: o.n,
            n_list: o.n_list.clone(),
            b: o.b,
            v: o.v,
            samples: o.samples,
            seed: o.seed,
            grid: o.grid.clone(),
            format: o.format,
        }
    }

    fn weight_model(&self) -> Result<WeightModel, Error> {
        match self.model {
            ModelKind::LogPower => {
                if self.lower_coeffs.is_empty() {
                    WeightModel::log_power(self.k)
                } else {
                    WeightModel::log_power_with(
                        self.k,
                        self.lower_coeffs.clone(),
                        cycleweights::weights::DEFAULT_VALIDATION_HORIZON,
                    )
                }
            }
            ModelKind::Constant => match self.theta.as_slice() {
                [t] => WeightModel::constant(*t),
                _ => Err(Error::Usage("--model constant needs exactly one --theta".into())),
            },
            ModelKind::Custom => WeightModel::custom(self.theta.clone()),
        }
    }

    fn grid(&self) -> Result<Vec<f64>, Error> {
        parse_grid(&self.grid)
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Usage(format!("bad --grid '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            if count < 2 {
                return Err(bad());
            }
            Ok((0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect())
        }
        [list] => list.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect(),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

/// Twelve significant digits, `%g` style.
fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s)
    } else {
        format!("{}e{}", trim_zeros(mant), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) if x.is_finite() => {
                let v: f64 = fmt_num(*x).parse().expect("formatted number parses");
                json!(v)
            }
            Cell::Num(_) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

struct Output {
    meta: Vec<(String, f64)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Output {
    fn new(columns: Vec<&'static str>) -> Self {
        Self {
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    fn with_r(mut self, r: f64) -> Self {
        self.meta.push(("r".into(), r));
        self
    }
}

fn render(cfg: &RunConfig, out: &Output) -> String {
    match cfg.format {
        Format::Csv => {
            let mut s = format!("# cycleweights {VERSION}\n");
            s += &format!("# config: {}\n", serde_json::to_string(cfg).expect("config serializes"));
            for (key, val) in &out.meta {
                s += &format!("# {key}: {}\n", fmt_num(*val));
            }
            s += &out.columns.join(",");
            s.push('\n');
            for row in &out.rows {
                s += &row.iter().map(Cell::csv).collect::<Vec<_>>().join(",");
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let meta: Map<String, Value> = out
                .meta
                .iter()
                .map(|(k, v)| (k.clone(), Cell::Num(*v).json()))
                .collect();
            let results: Vec<Value> = out
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = out
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.to_string(), cell.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({ "version": VERSION, "config": cfg, "meta": meta, "results": results });
            let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
            s.push('\n');
            s
        }
    }
}

fn fitted_poly(model: &WeightModel) -> Result<SingularPolynomial, Error> {
    Ok(asympt::fit_default(model)?.poly)
}

fn sampler_state(cfg: &RunConfig) -> Result<SamplerState, Error> {
    SamplerState::new(cfg.weight_model()?, cfg.n, cfg.seed)
}

fn run(cfg: &RunConfig, workers: usize) -> Result<Output, Error> {
    let model = cfg.weight_model()?;
    match cfg.command {
        Command::Hn => {
            let table = HTable::new(&model, cfg.n)?;
            let mut out = Output::new(vec!["n", "h_exact", "h_sign", "h_logabs"]);
            for (n, &lh) in table.log_h().iter().enumerate() {
                let sign = if lh == f64::NEG_INFINITY { 0 } else { 1 };
                out.rows.push(vec![
                    Cell::Int(n as u64),
                    Cell::Num(lh.exp()),
                    Cell::Int(sign),
                    Cell::Num(lh),
                ]);
            }
            Ok(out)
        }
        Command::Saddle => {
            let fit = asympt::fit_default(&model)?;
            let sp = asympt::solve_saddle(&fit.poly, cfg.n as f64, cfg.v)?;
            let mut out = Output::new(vec![
                "n",
                "v",
                "r",
                "initial_guess",
                "relative_residual",
                "p",
                "dp",
                "ddp",
            ])
            .with_r(sp.r);
            out.rows.push(vec![
                Cell::Int(cfg.n as u64),
                Cell::Num(cfg.v),
                Cell::Num(sp.r),
                Cell::Num(asympt::saddle_initial_guess(cfg.n as f64, cfg.v, fit.poly.k())),
                Cell::Num(sp.relative_residual()),
                Cell::Num(sp.p),
                Cell::Num(sp.dp),
                Cell::Num(sp.ddp),
            ]);
            for (j, c) in fit.poly.coeffs().iter().enumerate() {
                out.meta.push((format!("c_{j}"), *c));
            }
            Ok(out)
        }
        Command::Compare => {
            if cfg.n_list.is_empty() {
                return Err(Error::Usage("compare needs --n-list".into()));
            }
            let poly = fitted_poly(&model)?;
            let max = *cfg.n_list.iter().max().expect("non-empty");
            let table = HTable::new(&model, max)?;
            let mut out = Output::new(vec!["n", "h_exact_log", "h_asym_log", "ratio", "r"]);
            for &n in &cfg.n_list {
                table.require_positive(n)?;
                let (asym, sp) = asympt::hn_asymptotic_at(&poly, n as f64, 1.0)?;
                let exact_log = table.log_h()[n];
                out.rows.push(vec![
                    Cell::Int(n as u64),
                    Cell::Num(exact_log),
                    Cell::Num(asym.logabs),
                    Cell::Num((asym.logabs - exact_log).exp()),
                    Cell::Num(sp.r),
                ]);
            }
            Ok(out)
        }
        Command::Dist => {
            let table = HTable::new(&model, cfg.n)?;
            let law = exact::l1_distribution(&table, cfg.n)?;
            let mut out = Output::new(vec!["m", "prob", "cdf"]);
            let mut cdf = 0.0;
            for (m, p) in law.iter() {
                cdf += p;
                out.rows.push(vec![Cell::Int(*m as u64), Cell::Num(p), Cell::Num(cdf)]);
            }
            Ok(out)
        }
        Command::Tvd => {
            let est = tvd::dtv_via_formula(&model, cfg.n, cfg.b)?;
            let mut out = Output::new(vec!["n", "b", "dtv", "upper"]);
            out.rows.push(vec![
                Cell::Int(cfg.n as u64),
                Cell::Int(cfg.b as u64),
                Cell::Num(est.value),
                Cell::Num(est.upper),
            ]);
            Ok(out)
        }
        Command::Sample => {
            let state = sampler_state(cfg)?;
            let samples = state.sample_batch(cfg.samples, workers)?;
            let mut out = Output::new(vec!["cycle_type"]);
            for line in sampler::serialize_samples(&samples).lines() {
                out.rows.push(vec![Cell::Text(line.to_string())]);
            }
            Ok(out)
        }
        Command::Shape => {
            let poly = fitted_poly(&model)?;
            let (scaling, sp) = observables::saddle_scaling(&poly, cfg.n)?;
            let state = sampler_state(cfg)?;
            let samples = state.sample_batch(cfg.samples, workers)?;
            let reports = observables::profile_statistics(&samples, &cfg.grid()?, &scaling)?;
            let mut out = Output::new(vec![
                "x",
                "mean_profile",
                "w_inf",
                "mean_shift",
                "variance_emp",
                "variance_theory",
                "z_n_allowance",
            ])
            .with_r(sp.r);
            out.meta.push(("n_star".into(), scaling.n_star));
            out.meta.push(("n_bar".into(), scaling.n_bar));
            for r in reports {
                out.rows.push(
                    [
                        r.x,
                        r.mean_profile,
                        r.w_inf,
                        r.mean_shift,
                        r.variance_emp,
                        r.variance_theory,
                        r.z_n_allowance,
                    ]
                    .into_iter()
                    .map(Cell::Num)
                    .collect(),
                );
            }
            Ok(out)
        }
        Command::K0n => {
            let state = sampler_state(cfg)?;
            let rep = observables::k0n_clt_check(&state, cfg.samples, workers)?;
            let mut out = Output::new(vec![
                "n",
                "samples",
                "mean_emp",
                "mean_exact",
                "var_emp",
                "var_scale",
                "ks_stat",
            ]);
            out.rows.push(vec![
                Cell::Int(rep.n as u64),
                Cell::Int(rep.samples as u64),
                Cell::Num(rep.mean_emp),
                Cell::Num(rep.mean_exact),
                Cell::Num(rep.var_emp),
                Cell::Num(rep.var_scale),
                Cell::Num(rep.ks_stat),
            ]);
            Ok(out)
        }
        Command::L1 => {
            let poly = fitted_poly(&model)?;
            let state = sampler_state(cfg)?;
            let rep = observables::l1_scaling_check(&state, &poly, cfg.samples, workers)?;
            let mut out =
                Output::new(vec!["n", "samples", "mean_scaled", "exact_mean_scaled", "ks_vs_exp1"]).with_r(rep.r);
            out.rows.push(vec![
                Cell::Int(cfg.n as u64),
                Cell::Int(cfg.samples as u64),
                Cell::Num(rep.mean_scaled),
                Cell::Num(rep.exact_mean_scaled),
                Cell::Num(rep.ks_vs_exp1),
            ]);
            Ok(out)
        }
    }
}

fn exit_code(err: &Error) -> (u8, &'static str) {
    match err {
        Error::Usage(_) => (2, "usage"),
        Error::Domain(_) | Error::MeasureUndefined { .. } => (3, "domain"),
        Error::Numerical(_) | Error::Convergence(_) => (4, "numerical"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig::from_cli(&cli);
    let result = run(&cfg, cli.workers.max(1)).map(|out| render(&cfg, &out));
    let text = match result {
        Ok(text) => text,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            eprintln!("error[{kind}]: {}", err.to_string().replace('\n', " "));
            return ExitCode::from(code);
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[usage]: cannot write output: {e}");
            ExitCode::from(2)
        }
    }
}

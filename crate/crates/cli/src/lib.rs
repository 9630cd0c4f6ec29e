//! The `adelic` command line.
//!
//! [`run`] parses arguments and writes the primary output to a caller-supplied
//! writer, so commands can be replayed in-process (the `verify determinism`
//! suite does exactly that).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use adelic_core::adele::{haar_volume, AdelePoint, Region, SamplerConfig};
use adelic_core::cauchy::{
    solve_adelic, solve_homogeneous, solve_nonhomogeneous, ForcingGrid, Quadrature, RealGrid, Solution, SymbolSpec,
    DEFAULT_DUHAMEL_NODES,
};
use adelic_core::heatkernel::{
    normalization, real_normalization, tail_mass_bound, z_adelic, z_finite, KernelParams,
};
use adelic_core::markov::{auto_truncation, sample_paths, transition_prob_ball, Truncation, MAX_DISCARDED_MASS};
use adelic_core::numeric::{fmt_f64, Certified};
use adelic_core::primepow::{next_pp, parse_rational, phi, pp_closed_range, pp_range, prev_pp, PrimePower, Radius};
use adelic_core::radial::RadialStep;
use adelic_core::verify;

#[derive(Parser, Debug)]
#[command(name = "adelic", version, about = "Heat kernels, jump processes and parabolic solvers on the adeles")]
pub struct Cli {
    /// JSON object of parameter defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Write the result here instead of stdout; a `<output>.meta.json`
    /// sidecar records the run.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Sidecar path when writing to stdout.
    #[arg(long, global = true)]
    pub meta: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for Monte Carlo commands.
    #[arg(long, global = true, env = "ADELIC_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Φ(x) = lcm(1..⌊x⌋), or 1/lcm(1..⌈1/x⌉−1) below 1.
    Phi { x: String },
    /// Neighbours and ranges in the order of prime powers.
    Ppow {
        #[command(subcommand)]
        op: PpowOp,
    },
    /// Adelic norm of a point in text form.
    Norm { point: String },
    /// Haar volume of a ball or sphere.
    Volume {
        #[arg(value_enum)]
        kind: RegionArg,
        radius: String,
    },
    /// Exact Fourier transform of a radial step function (JSON).
    Ft { input: PathBuf },
    /// Heat kernel evaluation.
    Kernel {
        #[command(subcommand)]
        op: KernelOp,
    },
    /// Simulate paths of the jump process.
    Simulate(SimulateArgs),
    /// P(t, x, B_ε(center)).
    Transition(TransitionArgs),
    /// Cauchy problem solvers.
    Solve {
        #[command(subcommand)]
        op: SolveOp,
    },
    /// Run an invariant suite: one of the core suites, `determinism` or `all`.
    Verify { suite: String },
}

#[derive(Subcommand, Debug)]
pub enum PpowOp {
    /// Smallest prime power > x.
    Next { x: String },
    /// Largest prime power < x.
    Prev { x: String },
    /// Prime powers q with a < q ≤ b.
    Range { a: String, b: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Ball,
    Sphere,
}

#[derive(Args, Debug, Clone, Default)]
pub struct KernelArgs {
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Real exponent; evaluates the kernel on A = ℝ × A_f.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum KernelOp {
    /// Z(x, t) at a radius (`0` or a prime power).
    Eval {
        #[command(flatten)]
        k: KernelArgs,
        #[arg(long)]
        radius: Option<String>,
        /// Real coordinate (needs --beta).
        #[arg(long)]
        x_real: Option<f64>,
    },
    /// ∫ Z_t; the real factor is included when --beta is given.
    Normalize {
        #[command(flatten)]
        k: KernelArgs,
    },
    /// Bound on ∫_{‖y‖>ε} Z_t.
    Tail {
        #[command(flatten)]
        k: KernelArgs,
        #[arg(long)]
        eps: Option<String>,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimulateArgs {
    #[arg(long)]
    pub t_step: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub r_min: Option<String>,
    #[arg(long)]
    pub r_max: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub prime_cutoff: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TransitionArgs {
    #[command(flatten)]
    pub k: KernelArgs,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolveArgs {
    /// Initial datum as radial-step JSON.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fail unless the solution is an exact step function.
    #[arg(long)]
    pub exact: bool,
    /// Radii at which evaluable solutions are tabulated (comma separated).
    #[arg(long)]
    pub radii: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum SolveOp {
    /// u = Z_t ∗ u₀.
    Homogeneous {
        #[command(flatten)]
        s: SolveArgs,
    },
    /// u = Z_t ∗ u₀ + ∫₀ᵗ Z_{t−τ} ∗ f(τ) dτ.
    Duhamel {
        #[command(flatten)]
        s: SolveArgs,
        #[arg(long)]
        forcing: Option<PathBuf>,
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Factorized data on A: real grid CSV and finite radial step.
    Adelic {
        #[command(flatten)]
        s: SolveArgs,
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Simpson,
    Trapezoid,
}

/// Keys accepted in a config file.
const CONFIG_KEYS: &[&str] = &[
    "t", "alpha", "beta", "tol", "seed", "t_step", "steps", "paths", "r_min", "r_max", "depth", "prime_cutoff",
    "radius", "x_real", "eps", "x", "center", "input", "forcing", "real", "rule", "nodes", "radii", "format",
];

/// Parameter resolution: flag, then config file, then default.
struct Params {
    config: Map<String, Value>,
    /// Resolved values, echoed into the sidecar.
    used: Map<String, Value>,
}

impl Params {
    fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => Map::new(),
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", p.display())))?;
                let Value::Object(m) = v else {
                    return Err(usage("config file must hold a JSON object"));
                };
                if let Some(k) = m.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
                    return Err(usage(format!("unknown config key {k:?}")));
                }
                m
            }
        };
        Ok(Params { config, used: Map::new() })
    }

    fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.config.get(key) {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.parse().map_err(|e| usage(format!("config {key}: {e}")))?),
                Some(other) => Some(
                    other
                        .to_string()
                        .parse()
                        .map_err(|e| usage(format!("config {key}: {e}")))?,
                ),
            },
        };
        if let Some(v) = &v {
            self.used.insert(key.to_string(), v.clone().into());
        }
        Ok(v)
    }

    fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T>
    where
        T: FromStr + Clone + Into<Value>,
        T::Err: std::fmt::Display,
    {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => match default {
                Some(d) => {
                    self.used.insert(key.to_string(), d.clone().into());
                    Ok(d)
                }
                None => Err(usage(format!("missing --{}", key.replace('_', "-")))),
            },
        }
    }

    fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let s = self.get::<String>(key, flag.map(|p| p.to_string_lossy().into_owned()), None)?;
        Ok(PathBuf::from(s))
    }
}

/// A usage error (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

/// Exit code for an error: 2 usage, 3 tolerance, 4 cancellation, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use adelic_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() || cause.downcast_ref::<clap::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidArgument(_) | E::NotPrime(_) | E::Parse(_) | E::OutOfRange(_) => 2,
                E::Tolerance { .. } | E::Quadrature(_) | E::GridTooCoarse { .. } | E::NegativeKernel(_) => 3,
                E::IndeterminateCancellation { .. } => 4,
            };
        }
    }
    1
}

/// Result of one command: primary output plus sidecar fields.
struct Outcome {
    body: String,
    error_bounds: Value,
    seed: Option<u64>,
    passed: bool,
    extra_files: Vec<(PathBuf, String)>,
}

impl Outcome {
    fn text(body: String) -> Self {
        Outcome {
            body,
            error_bounds: Value::Null,
            seed: None,
            passed: true,
            extra_files: Vec::new(),
        }
    }
}

/// Parses `0`, `p^k`, or a rational that is a prime power.
fn parse_radius(s: &str) -> Result<Radius> {
    if s == "0" {
        return Ok(Radius::Zero);
    }
    Ok(Radius::Pp(parse_prime_power(s)?))
}

fn parse_prime_power(s: &str) -> Result<PrimePower> {
    if s.contains('^') {
        return Ok(s.parse::<PrimePower>()?);
    }
    let x = parse_rational(s)?;
    let q = prev_pp(&x)?.succ();
    if q.to_ratio() != x {
        return Err(usage(format!("{s} is not a prime power")));
    }
    Ok(q)
}

fn certified_out(c: &Certified<f64>, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", json!({ "value": c.value, "error_bound": c.error_bound })),
        Format::Csv => format!("{c}\n"),
    }
}

fn exact_out(v: impl std::fmt::Display, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", json!({ "value": v.to_string(), "error_bound": 0 })),
        Format::Csv => format!("{v}\n"),
    }
}

fn read(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn kernel_params(p: &mut Params, k: &KernelArgs, beta_allowed: bool) -> Result<(KernelParams, f64)> {
    let t = p.get("t", k.t, None)?;
    let alpha = p.get("alpha", k.alpha, None)?;
    let beta = if beta_allowed { p.opt("beta", k.beta)? } else { None };
    let tol = p.get("tol", k.tol, Some(1e-10))?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(usage(format!("tol must be positive, got {tol}")));
    }
    Ok((KernelParams::new(t, alpha, beta)?, tol))
}

fn check_tolerance(what: &str, c: &Certified<f64>, tol: f64) -> Result<()> {
    if c.error_bound > tol {
        return Err(adelic_core::Error::Tolerance {
            what: what.into(),
            requested: tol,
            achieved: c.error_bound,
        }
        .into());
    }
    Ok(())
}

/// Default radii for tabulating evaluable solutions: 0 and 1/8 … 8.
fn table_radii(p: &mut Params, flag: Option<String>) -> Result<Vec<Radius>> {
    match p.opt("radii", flag)? {
        None => {
            let mut v = vec![Radius::Zero];
            v.extend(
                pp_closed_range(&PrimePower::new(2, -3)?, &PrimePower::new(2, 3)?)
                    .into_iter()
                    .map(Radius::Pp),
            );
            Ok(v)
        }
        Some(s) => s.split(',').map(|r| parse_radius(r.trim())).collect(),
    }
}

fn solution_out(sol: &Solution, radii: &[Radius], tol: f64, exact: bool, format: Format) -> Result<(String, f64)> {
    match sol {
        Solution::Exact(step) => Ok((format!("{}\n", step.to_json()), 0.0)),
        Solution::Evaluable(_) if exact => Err(sol.clone().into_exact().unwrap_err().into()),
        Solution::Evaluable(_) => tabulate(radii, tol, format, |r| sol.eval(r, tol)),
    }
}

fn tabulate(
    radii: &[Radius],
    tol: f64,
    format: Format,
    f: impl Fn(&Radius) -> adelic_core::Result<Certified<f64>>,
) -> Result<(String, f64)> {
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for r in radii {
        let c = f(r)?;
        check_tolerance("solution value", &c, tol)?;
        worst = worst.max(c.error_bound);
        rows.push((r.to_string(), c));
    }
    let body = match format {
        Format::Csv => {
            let mut s = String::from("radius,value,error_bound\n");
            for (r, c) in &rows {
                s.push_str(&format!("{r},{},{}\n", fmt_f64(c.value), fmt_f64(c.error_bound)));
            }
            s
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|(r, c)| json!({ "radius": r, "value": c.value, "error_bound": c.error_bound }))
                .collect();
            format!("{}\n", Value::Array(v))
        }
    };
    Ok((body, worst))
}

fn read_step(path: &Path) -> Result<RadialStep<BigRational>> {
    Ok(RadialStep::from_json_str(&read(path)?)?)
}

fn execute(cli: &Cli, p: &mut Params) -> Result<Outcome> {
    let format = match cli.format {
        Some(f) => f,
        None => match p.config.get("format").and_then(Value::as_str) {
            Some("json") => Format::Json,
            Some("csv") | None => Format::Csv,
            Some(other) => return Err(usage(format!("unknown format {other:?}"))),
        },
    };
    match &cli.command {
        Command::Phi { x } => {
            let v = phi(&parse_rational(x)?)?;
            Ok(Outcome::text(exact_out(v.as_ratio(), format)))
        }
        Command::Ppow { op } => {
            let body = match op {
                PpowOp::Next { x } => exact_out(next_pp(&parse_rational(x)?)?, format),
                PpowOp::Prev { x } => exact_out(prev_pp(&parse_rational(x)?)?, format),
                PpowOp::Range { a, b } => {
                    let qs = pp_range(&parse_rational(a)?, &parse_rational(b)?)?;
                    match format {
                        Format::Csv => qs.iter().map(|q| format!("{q}\n")).collect(),
                        Format::Json => format!(
                            "{}\n",
                            Value::Array(qs.iter().map(|q| Value::String(q.to_string())).collect())
                        ),
                    }
                }
            };
            Ok(Outcome::text(body))
        }
        Command::Norm { point } => {
            let x: AdelePoint = point.parse()?;
            Ok(Outcome::text(exact_out(x.norm(), format)))
        }
        Command::Volume { kind, radius } => {
            let r = parse_prime_power(radius)?;
            let region = match kind {
                RegionArg::Ball => Region::ball(AdelePoint::zero(), r),
                RegionArg::Sphere => Region::sphere(AdelePoint::zero(), r),
            };
            Ok(Outcome::text(exact_out(haar_volume(&region)?.as_ratio(), format)))
        }
        Command::Ft { input } => {
            let f = read_step(input)?;
            Ok(Outcome::text(format!("{}\n", f.fourier().to_json())))
        }
        Command::Kernel { op } => kernel(p, op, format),
        Command::Simulate(a) => simulate(cli, p, a, format),
        Command::Transition(a) => {
            let (params, tol) = kernel_params(p, &a.k, false)?;
            let x: AdelePoint = p.get::<String>("x", a.x.clone(), Some("0".into()))?.parse()?;
            let center: AdelePoint = p.get::<String>("center", a.center.clone(), Some("0".into()))?.parse()?;
            let eps = parse_prime_power(&p.get::<String>("eps", a.eps.clone(), None)?)?;
            let c = transition_prob_ball(params.t, params.alpha, &x, &center, &eps, tol)?;
            check_tolerance("transition probability", &c, tol)?;
            let mut o = Outcome::text(certified_out(&c, format));
            o.error_bounds = json!(c.error_bound);
            Ok(o)
        }
        Command::Solve { op } => solve(cli, p, op, format),
        Command::Verify { suite } => run_verify(suite),
    }
}

fn kernel(p: &mut Params, op: &KernelOp, format: Format) -> Result<Outcome> {
    let c = match op {
        KernelOp::Eval { k, radius, x_real } => {
            let (params, tol) = kernel_params(p, k, true)?;
            let r = parse_radius(&p.get::<String>("radius", radius.clone(), Some("0".into()))?)?;
            match params.beta {
                None => {
                    if x_real.is_some() {
                        return Err(usage("--x-real needs --beta"));
                    }
                    z_finite(&r, &params, tol)?
                }
                Some(_) => z_adelic(p.get("x_real", *x_real, Some(0.0))?, &r, &params, tol)?,
            }
        }
        KernelOp::Normalize { k } => {
            let (params, tol) = kernel_params(p, k, true)?;
            match params.beta {
                None => normalization(&params, tol)?,
                Some(_) => {
                    let fin = normalization(&params, tol / 4.0)?;
                    let real = real_normalization(&params, tol / 4.0)?;
                    Certified::new(
                        fin.value * real.value,
                        fin.error_bound * real.value.abs() + real.error_bound * fin.value.abs() + fin.error_bound * real.error_bound,
                    )
                }
            }
        }
        KernelOp::Tail { k, eps } => {
            let (params, _) = kernel_params(p, k, false)?;
            let eps = parse_prime_power(&p.get::<String>("eps", eps.clone(), None)?)?;
            tail_mass_bound(&eps, &params)?
        }
    };
    let tol = p.used.get("tol").and_then(Value::as_f64).unwrap_or(f64::INFINITY);
    if !matches!(op, KernelOp::Tail { .. }) {
        check_tolerance("heat kernel", &c, tol)?;
    }
    let mut o = Outcome::text(certified_out(&c, format));
    o.error_bounds = json!(c.error_bound);
    Ok(o)
}

fn simulate(cli: &Cli, p: &mut Params, a: &SimulateArgs, format: Format) -> Result<Outcome> {
    let dt = p.get("t_step", a.t_step, None)?;
    let steps = p.get("steps", a.steps, None)?;
    let alpha = p.get("alpha", a.alpha, None)?;
    let beta = p.opt("beta", a.beta)?;
    let seed = p.get("seed", a.seed, Some(0))?;
    let n_paths = p.get("paths", a.paths, Some(1))?;
    let depth = p.get("depth", a.depth, Some(SamplerConfig::default().depth))?;
    let prime_cutoff = p.get("prime_cutoff", a.prime_cutoff, Some(13))?;
    if n_paths == 0 {
        return Err(usage("--paths must be at least 1"));
    }
    let params = KernelParams::new(dt, alpha, beta)?;
    let (auto_min, auto_max) = auto_truncation(&params, MAX_DISCARDED_MASS / 10.0)?;
    let r_min = match p.opt::<String>("r_min", a.r_min.clone())? {
        Some(s) => parse_prime_power(&s)?,
        None => auto_min,
    };
    let r_max = match p.opt::<String>("r_max", a.r_max.clone())? {
        Some(s) => parse_prime_power(&s)?,
        None => auto_max,
    };
    p.used.insert("r_min".into(), json!(r_min.to_string()));
    p.used.insert("r_max".into(), json!(r_max.to_string()));
    let trunc = Truncation {
        r_min,
        r_max,
        sampler: SamplerConfig { depth, prime_cutoff },
    };
    let threads = cli.threads.unwrap_or(1).max(1);
    let paths = sample_paths(&params, n_paths, steps, dt, &trunc, seed, threads)?;
    let render = |path: &adelic_core::markov::PathSample| match format {
        Format::Csv => path.to_csv(),
        Format::Json => format!(
            "{}\n",
            json!({
                "seed": path.seed,
                "times": path.times,
                "radii": path.radii.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "real": path.real,
                "points": path.points.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            })
        ),
    };
    let mut o = Outcome::text(render(&paths[0]));
    o.seed = Some(seed);
    o.error_bounds = json!({
        "discarded_mass_per_step": MAX_DISCARDED_MASS,
        "tail_resamples": paths.iter().map(|x| x.tail_resamples).collect::<Vec<_>>(),
        "precision_resamples": paths.iter().map(|x| x.cancellation_resamples).collect::<Vec<_>>(),
    });
    // further paths go next to the output file
    if n_paths > 1 {
        let base = cli
            .output
            .as_ref()
            .ok_or_else(|| usage("--paths > 1 needs --output"))?;
        for (i, path) in paths.iter().enumerate().skip(1) {
            o.extra_files.push((numbered(base, i), render(path)));
        }
    }
    Ok(o)
}

/// `paths.csv` → `paths.1.csv`.
fn numbered(base: &Path, i: usize) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    base.with_file_name(name)
}

fn solve(cli: &Cli, p: &mut Params, op: &SolveOp, format: Format) -> Result<Outcome> {
    let s = match op {
        SolveOp::Homogeneous { s } | SolveOp::Duhamel { s, .. } | SolveOp::Adelic { s, .. } => s,
    };
    let input = p.path("input", s.input.clone())?;
    let u0 = read_step(&input)?;
    let t = p.get("t", s.t, None)?;
    let alpha = p.get("alpha", s.alpha, None)?;
    let tol = p.get("tol", s.tol, Some(1e-8))?;
    let radii = table_radii(p, s.radii.clone())?;
    match op {
        SolveOp::Homogeneous { .. } => {
            let sol = solve_homogeneous(&u0, t, &SymbolSpec::new(alpha, None)?)?;
            let (body, err) = solution_out(&sol, &radii, tol, s.exact, format)?;
            let mut o = Outcome::text(body);
            o.error_bounds = json!(err);
            Ok(o)
        }
        SolveOp::Duhamel { forcing, rule, nodes, .. } => {
            let forcing_path = p.path("forcing", forcing.clone())?;
            let grid = ForcingGrid::from_json_str(&read(&forcing_path)?)?;
            let rule = match p.get("rule", rule.map(|r| format!("{r:?}").to_lowercase()), Some("simpson".into()))?.as_str() {
                "simpson" => Quadrature::Simpson,
                "trapezoid" => Quadrature::Trapezoid,
                other => return Err(usage(format!("unknown rule {other:?}"))),
            };
            let m = p.get("nodes", *nodes, Some(DEFAULT_DUHAMEL_NODES))?;
            let sol = solve_nonhomogeneous(&u0, &grid, t, &SymbolSpec::new(alpha, None)?, rule, m)?;
            let (body, err) = match &sol.solution {
                // the spectral part is exact; the τ-quadrature error is still reported
                Solution::Exact(step) => {
                    let (_, qerr) = tabulate(&radii, tol, format, |r| sol.eval(r, tol))?;
                    (format!("{}\n", step.to_json()), qerr)
                }
                Solution::Evaluable(_) if s.exact => return Err(sol.solution.clone().into_exact().unwrap_err().into()),
                Solution::Evaluable(_) => tabulate(&radii, tol, format, |r| sol.eval(r, tol))?,
            };
            let mut o = Outcome::text(body);
            o.error_bounds = json!(err);
            Ok(o)
        }
        SolveOp::Adelic { real, beta, .. } => {
            let real_path = p.path("real", real.clone())?;
            let beta = p.get("beta", *beta, None)?;
            let grid = RealGrid::from_csv(&read(&real_path)?)?;
            let (real_out, fin) = solve_adelic(&grid, &u0, t, &SymbolSpec::new(alpha, Some(beta))?, tol)?;
            let (fin_body, err) = solution_out(&fin, &radii, tol, s.exact, format)?;
            let mut o = Outcome::text(real_out.to_csv());
            o.error_bounds = json!({ "real_refinement_tol": tol / 2.0, "finite": err });
            match &cli.output {
                Some(base) => o.extra_files.push((base.with_extension("fin.json"), fin_body)),
                None => o.body.push_str(&format!("\n{fin_body}")),
            }
            Ok(o)
        }
    }
}

/// Suite report without wall-clock times, so the output is reproducible;
/// timings go to stderr and the sidecar.
fn render_report(r: &verify::SuiteReport) -> String {
    let mut s = format!(
        "[{}] {} {} ({} checks, budget {} s)\n",
        if r.passed() { "PASS" } else { "FAIL" },
        r.id,
        r.suite,
        r.checks.len(),
        r.budget.as_secs()
    );
    for c in &r.checks {
        s.push_str(&format!("  {} {}: {}\n", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail));
    }
    s
}

fn run_verify(suite: &str) -> Result<Outcome> {
    let names: Vec<&str> = match suite {
        "all" => verify::SUITES.iter().copied().chain(["determinism"]).collect(),
        s => vec![s],
    };
    let mut body = String::new();
    let mut passed = true;
    let mut timings = Map::new();
    for name in names {
        let start = Instant::now();
        if name == "determinism" {
            let (ok, report) = determinism()?;
            passed &= ok;
            body.push_str(&report);
        } else {
            let r = verify::run_suite(name).map_err(|e| match e {
                adelic_core::Error::InvalidArgument(m) => usage(m),
                other => other.into(),
            })?;
            passed &= r.passed();
            body.push_str(&render_report(&r));
        }
        let secs = start.elapsed().as_secs_f64();
        eprintln!("{name}: {secs:.2} s");
        timings.insert(name.to_string(), json!(secs));
    }
    let mut o = Outcome::text(body);
    o.passed = passed;
    o.error_bounds = json!({ "suite_wall_time_s": timings });
    Ok(o)
}

/// Commands replayed by the determinism suite; `{dir}` is a scratch directory
/// holding the files in [`DETERMINISM_FIXTURES`].
pub const DETERMINISM_COMMANDS: &[&[&str]] = &[
    &["phi", "10"],
    &["phi", "1/7"],
    &["ppow", "next", "8"],
    &["ppow", "prev", "1/3"],
    &["ppow", "range", "1/10", "30"],
    &["norm", "2:-1:=1;3:0:=2"],
    &["volume", "sphere", "3^1"],
    &["kernel", "eval", "--t", "1", "--alpha", "2", "--radius", "2"],
    &["kernel", "eval", "--t", "1", "--alpha", "2", "--beta", "1.5", "--x-real", "0.3", "--radius", "1/3"],
    &["kernel", "normalize", "--t", "1", "--alpha", "2", "--tol", "1e-6"],
    &["kernel", "tail", "--t", "0.5", "--alpha", "2", "--eps", "2"],
    &["transition", "--t", "0.1", "--alpha", "2", "--x", "2:-2:=1", "--eps", "2"],
    &["simulate", "--t-step", "0.1", "--steps", "1000", "--alpha", "2", "--seed", "7"],
    &["simulate", "--t-step", "0.1", "--steps", "200", "--alpha", "2", "--beta", "1", "--seed", "7", "--threads", "3"],
    &["verify", "volume"],
    &["ft", "{dir}/lizorkin.json"],
    &["solve", "homogeneous", "--input", "{dir}/lizorkin.json", "--t", "0.5", "--alpha", "2", "--exact"],
    &["solve", "homogeneous", "--input", "{dir}/ball.json", "--t", "0.5", "--alpha", "2"],
    &["solve", "duhamel", "--input", "{dir}/lizorkin.json", "--forcing", "{dir}/forcing.json", "--t", "1", "--alpha", "2", "--tol", "1e-6"],
];

/// Small inputs for the determinism suite: a ball indicator, a function whose
/// transform vanishes near 0, and a forcing grid built from it.
pub const DETERMINISM_FIXTURES: &[(&str, &str)] = &[
    ("ball.json", r#"{"inner_radius":"2^-1","support_radius":"2^-1","inner_value":"1","values":{}}"#),
    ("lizorkin.json", r#"{"inner_radius":"3^-1","inner_value":"1","support_radius":"2^-1","values":{"2^-1":"-1"}}"#),
    (
        "forcing.json",
        r#"{"interpolation":"linear","nodes":[{"time":0,"step":{"inner_radius":"3^-1","inner_value":"1","support_radius":"2^-1","values":{"2^-1":"-1"}}},{"time":1,"step":{"inner_radius":"3^-1","inner_value":"-2","support_radius":"2^-1","values":{"2^-1":"2"}}}]}"#,
    ),
];

fn determinism() -> Result<(bool, String)> {
    let dir = std::env::temp_dir().join(format!("adelic-determinism-{}", std::process::id()));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in DETERMINISM_FIXTURES {
        fs::write(dir.join(name), body)?;
    }
    let dir_str = dir.to_string_lossy().into_owned();
    let mut lines = Vec::new();
    let mut ok = true;
    for cmd in DETERMINISM_COMMANDS {
        let args: Vec<String> = std::iter::once("adelic")
            .chain(cmd.iter().copied())
            .map(|a| a.replace("{dir}", &dir_str))
            .collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        run(&args, &mut a)?;
        run(&args, &mut b)?;
        let same = a == b;
        ok &= same;
        lines.push(format!(
            "  {} {} ({} bytes)",
            if same { "ok  " } else { "FAIL" },
            cmd.join(" "),
            a.len()
        ));
    }
    let _ = fs::remove_dir_all(&dir);
    let mut out = format!("[{}] 10 determinism ({} checks)\n", if ok { "PASS" } else { "FAIL" }, lines.len());
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    Ok((ok, out))
}

/// Runs the command line `args` (including the program name), writing the
/// primary output to `out` unless `--output` is given.
///
/// Returns `Ok(false)` when a `verify` suite fails.
pub fn run(args: &[String], out: &mut dyn Write) -> Result<bool> {
    let cli = Cli::try_parse_from(args)?;
    let mut params = Params::load(cli.config.as_deref())?;
    let start = Instant::now();
    let outcome = execute(&cli, &mut params)?;
    let meta_path = match (&cli.output, &cli.meta) {
        (_, Some(m)) => Some(m.clone()),
        (Some(o), None) => Some(PathBuf::from(format!("{}.meta.json", o.display()))),
        (None, None) => None,
    };
    match &cli.output {
        Some(path) => fs::write(path, &outcome.body).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(outcome.body.as_bytes())?,
    }
    for (path, body) in &outcome.extra_files {
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(meta) = meta_path {
        let sidecar = json!({
            "command": args.iter().skip(1).collect::<Vec<_>>(),
            "config": Value::Object(params.used),
            "seed": outcome.seed,
            "error_bounds": outcome.error_bounds,
            "passed": outcome.passed,
            "wall_time_s": start.elapsed().as_secs_f64(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        fs::write(&meta, format!("{:#}\n", sidecar)).with_context(|| format!("writing {}", meta.display()))?;
    }
    Ok(outcome.passed)
}

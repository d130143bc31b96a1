//! Command-line front end: single evaluations, optimization, SNR and relay
//! position sweeps, and simulator validation runs.
//!
//! Every command reads an optional flat JSON scenario file; command-line
//! flags override its keys. Sweeps write CSV, everything else JSON, except
//! `simulate` which prints a z-score table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::NetworkConfig;
use crate::mac::{build_chain, shares, CollisionModel, MacParams, MacScheme};
use crate::optimizer::{improvement_percent, maximize, OptResult, OptSettings};
use crate::rates::{evaluate, Scheme};
use crate::sim::{compare, simulate, SimConfig};

pub const DEFAULT_SNR_DB: f64 = 0.0;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_SIGMA: f64 = 0.002;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed scenario.
    #[error("{0}")]
    Usage(String),
    /// Well-formed input the model rejects.
    #[error("{0}")]
    Validation(String),
    /// Simulation disagreed with the analytic model.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "coop-relay",
    version,
    about = "Throughput analysis of a random-access relay network"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shares and per-flow rates of one scheme at fixed MAC parameters (JSON).
    Eval(CommonArgs),
    /// Optimized max-min rates and cooperative gains at one scenario (JSON).
    Optimize(CommonArgs),
    /// Optimized rates over a range of SNRs (CSV).
    SweepSnr(SweepArgs),
    /// Optimized rates over relay positions at fixed SNR (CSV).
    SweepBeta(SweepArgs),
    /// Monte Carlo check of the analytic time shares.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// `literal` or `refined`.
    #[arg(long, value_parser = parse_collision_model)]
    pub collision_model: Option<CollisionModel>,
    /// Scheme name; sweeps and `optimize` take a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub scheme: Vec<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub t_f: Option<f64>,
    #[arg(long)]
    pub t_n: Option<f64>,
    #[arg(long)]
    pub t_r: Option<f64>,
    /// Output file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_phases: Option<u64>,
    /// Relative error injected into the analytic s_f before comparing.
    #[arg(long, hide = true)]
    pub perturb_s_f: Option<f64>,
}

fn parse_collision_model(s: &str) -> std::result::Result<CollisionModel, String> {
    match s {
        "literal" => Ok(CollisionModel::Literal),
        "refined" => Ok(CollisionModel::Refined),
        _ => Err(format!("expected `literal` or `refined`, got `{s}`")),
    }
}

/// Scenario file contents. All keys are optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub snr_db: Option<f64>,
    /// Linear unit-distance SNR; alternative to `snr_db`.
    pub power: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub collision_model: Option<CollisionModel>,
    pub scheme: Option<String>,
    pub schemes: Option<Vec<Scheme>>,
    pub tau: Option<f64>,
    pub t_f: Option<f64>,
    pub t_n: Option<f64>,
    pub t_r: Option<f64>,
    pub tau_grid_points: Option<usize>,
    pub simplex_step: Option<f64>,
    pub refine_iters: Option<usize>,
    pub refine_shrink: Option<f64>,
    pub min_step: Option<f64>,
    pub snr_db_start: Option<f64>,
    pub snr_db_stop: Option<f64>,
    pub snr_db_step: Option<f64>,
    pub beta_start: Option<f64>,
    pub beta_stop: Option<f64>,
    pub beta_step: Option<f64>,
    pub n_phases: Option<u64>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::Usage(format!("scenario: {}", e.inner()))
            } else {
                CliError::Usage(format!("scenario key `{path}`: {}", e.inner()))
            }
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn settings(&self) -> CliResult<OptSettings> {
        let d = OptSettings::default();
        let s = OptSettings {
            tau_grid_points: self.tau_grid_points.unwrap_or(d.tau_grid_points),
            simplex_step: self.simplex_step.unwrap_or(d.simplex_step),
            refine_iters: self.refine_iters.unwrap_or(d.refine_iters),
            refine_shrink: self.refine_shrink.unwrap_or(d.refine_shrink),
            min_step: self.min_step.unwrap_or(d.min_step),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Scenario with the command-line overrides applied.
struct Resolved {
    scenario: Scenario,
    schemes: Vec<String>,
    out: Option<PathBuf>,
}

fn resolve(args: &CommonArgs) -> CliResult<Resolved> {
    let mut sc = match &args.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if sc.snr_db.is_some() && sc.power.is_some() {
        return Err(CliError::Usage(
            "scenario key `power`: give either `snr_db` or `power`, not both".into(),
        ));
    }
    if let Some(v) = args.snr_db {
        sc.snr_db = Some(v);
        sc.power = None;
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if args.$f.is_some() { sc.$f = args.$f; } )* };
    }
    set!(beta, gamma, sigma, collision_model, tau, t_f, t_n, t_r);
    let schemes = if !args.scheme.is_empty() {
        args.scheme.clone()
    } else if let Some(list) = &sc.schemes {
        list.iter().map(|s| s.name().to_string()).collect()
    } else {
        sc.scheme.iter().cloned().collect()
    };
    Ok(Resolved {
        scenario: sc,
        schemes,
        out: args.out.clone(),
    })
}

impl Resolved {
    fn power(&self) -> f64 {
        match (self.scenario.power, self.scenario.snr_db) {
            (Some(p), _) => p,
            (None, db) => db_to_linear(db.unwrap_or(DEFAULT_SNR_DB)),
        }
    }

    fn sigma(&self) -> f64 {
        self.scenario.sigma.unwrap_or(DEFAULT_SIGMA)
    }

    fn config(&self) -> CliResult<NetworkConfig> {
        let sc = &self.scenario;
        Ok(NetworkConfig::new(
            self.power(),
            sc.beta.unwrap_or(DEFAULT_BETA),
            sc.gamma.unwrap_or(DEFAULT_GAMMA),
            self.sigma(),
        )?
        .with_collision_model(sc.collision_model.unwrap_or_default()))
    }

    /// Transmission schemes to report; all five when none are named.
    fn schemes(&self) -> CliResult<Vec<Scheme>> {
        if self.schemes.is_empty() {
            return Ok(Scheme::ALL.to_vec());
        }
        let mut out: Vec<Scheme> = self
            .schemes
            .iter()
            .map(|s| s.parse::<Scheme>().map_err(CliError::Usage))
            .collect::<CliResult<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn single_scheme(&self) -> CliResult<&str> {
        match self.schemes.as_slice() {
            [one] => Ok(one),
            [] => Err(CliError::Usage("missing `scheme`".into())),
            _ => Err(CliError::Usage("expected exactly one `scheme`".into())),
        }
    }

    /// MAC parameters from `t_f`, `t_n`, `t_r`, `tau`. Missing packetsizes
    /// are filled so they sum to one, with `t_r = 0` when both are missing.
    fn params(&self) -> CliResult<MacParams> {
        let sc = &self.scenario;
        let t_f = sc
            .t_f
            .ok_or_else(|| CliError::Usage("missing `t_f`".into()))?;
        let tau = sc
            .tau
            .ok_or_else(|| CliError::Usage("missing `tau`".into()))?;
        let (t_n, t_r) = match (sc.t_n, sc.t_r) {
            (Some(n), Some(r)) => (n, r),
            (Some(n), None) => (n, (1.0 - t_f - n).max(0.0)),
            (None, Some(r)) => ((1.0 - t_f - r).max(0.0), r),
            (None, None) => ((1.0 - t_f).max(0.0), 0.0),
        };
        Ok(MacParams::new(t_f, t_n, t_r, tau)?)
    }

    fn emit(&self, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
        match &self.out {
            Some(p) => fs::write(p, text)
                .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display()))),
            None => stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Validation(format!("cannot write output: {e}"))),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Formats like C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Eval(a) => cmd_eval(&resolve(&a)?, stdout),
        Command::Optimize(a) => cmd_optimize(&resolve(&a)?, stdout),
        Command::SweepSnr(a) => cmd_sweep(&a, Axis::Snr, stdout),
        Command::SweepBeta(a) => cmd_sweep(&a, Axis::Beta, stdout),
        Command::Simulate(a) => cmd_simulate(&a, stdout),
    }
}

#[derive(Serialize)]
struct EvalOutput {
    scheme: Scheme,
    config: NetworkConfig,
    params: MacParams,
    shares: crate::mac::TimeShares,
    c_f: f64,
    c_n: f64,
    min_rate: f64,
}

fn cmd_eval(r: &Resolved, stdout: &mut dyn Write) -> CliResult<()> {
    let scheme: Scheme = r.single_scheme()?.parse().map_err(CliError::Usage)?;
    let config = r.config()?;
    let params = r.params()?;
    let rate = evaluate(scheme, &config, &params)?;
    let out = EvalOutput {
        scheme,
        config,
        params,
        shares: rate.shares,
        c_f: rate.c_f,
        c_n: rate.c_n,
        min_rate: rate.min_rate,
    };
    r.emit(&to_json(&out), stdout)
}

#[derive(Serialize)]
struct OptimizeOutput {
    config: NetworkConfig,
    settings: OptSettings,
    results: Vec<OptResult>,
    no_coop: f64,
    /// Percent gain over `no_coop` for each requested cooperative scheme.
    improvement: std::collections::BTreeMap<Scheme, f64>,
}

/// Optima of the requested schemes plus the non-cooperative benchmark.
fn optimize_at(
    config: &NetworkConfig,
    settings: &OptSettings,
    schemes: &[Scheme],
) -> CliResult<(Vec<OptResult>, f64)> {
    let direct = maximize(Scheme::DirectLink, config, settings)?;
    let two_hop = maximize(Scheme::TwoHop, config, settings)?;
    let no_coop = direct.best_rate.max(two_hop.best_rate);
    let results = schemes
        .iter()
        .map(|&s| match s {
            Scheme::DirectLink => Ok(direct),
            Scheme::TwoHop => Ok(two_hop),
            _ => maximize(s, config, settings),
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok((results, no_coop))
}

fn improvements(results: &[OptResult], no_coop: f64) -> Vec<(Scheme, f64)> {
    results
        .iter()
        .filter(|o| Scheme::COOPERATIVE.contains(&o.scheme))
        .map(|o| {
            (
                o.scheme,
                improvement_percent(o.best_rate, no_coop).unwrap_or(f64::NAN),
            )
        })
        .collect()
}

fn cmd_optimize(r: &Resolved, stdout: &mut dyn Write) -> CliResult<()> {
    let config = r.config()?;
    let settings = r.scenario.settings()?;
    let (results, no_coop) = optimize_at(&config, &settings, &r.schemes()?)?;
    let out = OptimizeOutput {
        config,
        settings,
        improvement: improvements(&results, no_coop).into_iter().collect(),
        results,
        no_coop,
    };
    r.emit(&to_json(&out), stdout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Snr,
    Beta,
}

impl Axis {
    fn column(self) -> &'static str {
        match self {
            Axis::Snr => "snr_db",
            Axis::Beta => "beta",
        }
    }
}

/// Inclusive arithmetic range; the endpoint is kept when it lies on the grid.
pub fn sweep_points(start: f64, stop: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(CliError::Validation(format!(
            "invalid sweep range {start}..{stop} step {step}"
        )));
    }
    if stop < start {
        return Err(CliError::Validation(format!(
            "empty sweep range {start}..{stop}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

pub fn sweep_header(axis: &str, schemes: &[Scheme]) -> String {
    let mut cols = vec![axis.to_string()];
    cols.extend(
        schemes
            .iter()
            .map(|s| format!("rate_{}", s.name().replace('-', "_"))),
    );
    cols.push("no_coop".into());
    cols.extend(
        schemes
            .iter()
            .filter(|s| Scheme::COOPERATIVE.contains(s))
            .map(|s| format!("improvement_{}", s.name().replace('-', "_"))),
    );
    cols.join(",")
}

fn cmd_sweep(args: &SweepArgs, axis: Axis, stdout: &mut dyn Write) -> CliResult<()> {
    let r = resolve(&args.common)?;
    let sc = &r.scenario;
    let (own, other) = match axis {
        Axis::Snr => (
            [sc.snr_db_start, sc.snr_db_stop, sc.snr_db_step],
            [
                ("beta_start", sc.beta_start),
                ("beta_stop", sc.beta_stop),
                ("beta_step", sc.beta_step),
            ],
        ),
        Axis::Beta => (
            [sc.beta_start, sc.beta_stop, sc.beta_step],
            [
                ("snr_db_start", sc.snr_db_start),
                ("snr_db_stop", sc.snr_db_stop),
                ("snr_db_step", sc.snr_db_step),
            ],
        ),
    };
    if let Some((key, _)) = other.iter().find(|(_, v)| v.is_some()) {
        return Err(CliError::Usage(format!(
            "scenario key `{key}`: a {} sweep takes only its own axis range",
            axis.column()
        )));
    }
    let defaults = match axis {
        Axis::Snr => [-20.0, 30.0, 1.0],
        Axis::Beta => [0.05, 0.95, 0.05],
    };
    let pick = |k: usize, flag: Option<f64>| flag.or(own[k]).unwrap_or(defaults[k]);
    let points = sweep_points(pick(0, args.start), pick(1, args.stop), pick(2, args.step))?;

    let base = r.config()?;
    let settings = sc.settings()?;
    let schemes = r.schemes()?;
    let configs = points
        .iter()
        .map(|&x| match axis {
            Axis::Snr => base.with_power(db_to_linear(x)),
            Axis::Beta => base.with_beta(x),
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let rows = configs
        .par_iter()
        .map(|c| optimize_at(c, &settings, &schemes))
        .collect::<CliResult<Vec<_>>>()?;

    let mut csv = sweep_header(axis.column(), &schemes);
    csv.push('\n');
    for (x, (results, no_coop)) in points.iter().zip(&rows) {
        let mut fields = vec![format_sig(*x)];
        fields.extend(results.iter().map(|o| format_sig(o.best_rate)));
        fields.push(format_sig(*no_coop));
        fields.extend(
            improvements(results, *no_coop)
                .iter()
                .map(|(_, v)| format_sig(*v)),
        );
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    r.emit(&csv, stdout)
}

#[derive(Serialize)]
struct SimulateOutput {
    scheme: MacScheme,
    params: MacParams,
    sigma: f64,
    collision_model: CollisionModel,
    n_phases: u64,
    seed: u64,
    counts: [u64; 6],
    checks: Vec<crate::sim::ShareCheck>,
    pass: bool,
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let r = resolve(&args.common)?;
    let name = r.single_scheme()?;
    // A MAC name, or a transmission scheme standing for its MAC.
    let mac = name
        .parse::<MacScheme>()
        .or_else(|e| {
            name.parse::<Scheme>()
                .map(Scheme::mac_scheme)
                .map_err(|_| e)
        })
        .map_err(CliError::Usage)?;
    let sigma = r.sigma();
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CliError::Validation(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    let params = r.params()?;
    let model = r.scenario.collision_model.unwrap_or_default();
    let cfg = SimConfig {
        n_phases: args.n_phases.or(r.scenario.n_phases).unwrap_or(1_000_000),
        seed: args.seed.or(r.scenario.seed).unwrap_or(0),
        scheme: mac,
        params,
        sigma,
        collision_model: model,
    };
    let stats = simulate(&cfg)?;
    let mut analytic = shares(mac, &params, sigma, model)?;
    if let Some(eps) = args.perturb_s_f {
        analytic.s_f *= 1.0 + eps;
    }
    let mut report = compare(&stats, &analytic);
    if mac == MacScheme::NaiveDF || mac == MacScheme::IdleForward {
        let chain = build_chain(mac, &params, sigma, model)?;
        let occ = stats.occupancy_check(chain.stationary[1]);
        report.pass &= occ.pass;
        report.checks.push(occ);
    }

    let mut table = format!(
        "scheme {mac}  n_phases {}  seed {}\n{:<10} {:>14} {:>14} {:>12} {:>9} {:>11}  result\n",
        cfg.n_phases, cfg.seed, "share", "empirical", "analytic", "std_error", "z", "rel_error"
    );
    for c in &report.checks {
        table.push_str(&format!(
            "{:<10} {:>14.9} {:>14.9} {:>12.3e} {:>9.3} {:>11.3e}  {}\n",
            c.name,
            c.empirical,
            c.analytic,
            c.std_error,
            c.z,
            c.rel_error,
            if c.pass { "pass" } else { "FAIL" }
        ));
    }
    table.push_str(if report.pass {
        "overall: pass\n"
    } else {
        "overall: FAIL\n"
    });

    let out_err = |e: std::io::Error| CliError::Validation(format!("cannot write output: {e}"));
    stdout.write_all(table.as_bytes()).map_err(out_err)?;
    if let Some(p) = &r.out {
        let json = SimulateOutput {
            scheme: mac,
            params,
            sigma,
            collision_model: model,
            n_phases: cfg.n_phases,
            seed: cfg.seed,
            counts: stats.counts,
            checks: report.checks.clone(),
            pass: report.pass,
        };
        fs::write(p, to_json(&json))
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display())))?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failed(
            "simulation disagrees with the analytic shares".into(),
        ))
    }
}

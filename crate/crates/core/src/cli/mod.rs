//! `blink` command-line interface.
//!
//! Every command takes laboratory units (μs, μK, μm, kHz, mK) and converts
//! to SI once. Commands that write files put them in `--out` together with
//! a [`RunManifest`](crate::manifest::RunManifest).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{
    effective_scaling_for, linspace, max_atoms, scaling_curve, AnalyticTrap, AtomSpec, MassConvention,
};
use crate::config::McConfig;
use crate::constants::{omega_from_khz, MHZ, RB87_MASS, UK, UM, US};
use crate::dynamics::{sweep_heatmap, BlinkTiming, SimConfig, TrapModel};
use crate::error::{Error, Result};
use crate::manifest::OutputDir;
use crate::rearrange::{
    builtin_scenario, compile_scenario, schedule_to_rf, simulate_rearrangement, validate_schedule,
    AodCalibration, Scenario, ScenarioFile, ScheduleLimits,
};
use crate::resonance::{
    admissible_band, find_resonances, is_periodic, resonant_ton_np1, resonant_ton_np2, ResonanceQuery,
};

#[derive(Debug, Parser)]
#[command(name = "blink", version, about = "Blinking optical tweezer toolkit")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissible band and resonant on-times.
    Resonance(ResonanceArgs),
    /// Array size and worst-case survival along the resonance.
    Scale(ScaleArgs),
    /// Array size and worst-case survival at chosen timings.
    Survive(SurviveArgs),
    /// Monte Carlo survival heatmap from a JSON config.
    Mc(McArgs),
    /// Compile, validate and optionally simulate a rearrangement.
    Rearrange(RearrangeArgs),
}

#[derive(Debug, Args)]
pub struct ResonanceArgs {
    #[arg(long, default_value_t = 64.0)]
    pub omega_khz: f64,
    #[arg(long, default_value_t = 10.0, conflicts_with = "s")]
    pub toff_us: f64,
    /// Dimensionless shear ω·t_off; overrides --toff-us.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long = "np", default_value_t = 1)]
    pub n_p: u32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Convention {
    TwoSided,
    PlainErf,
}

impl From<Convention> for MassConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::TwoSided => Self::TwoSided,
            Convention::PlainErf => Self::PlainErf,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyticArgs {
    #[arg(long, default_value_t = 64.0)]
    pub omega_khz: f64,
    #[arg(long, default_value_t = 0.9)]
    pub d_um: f64,
    #[arg(long, default_value_t = 13.0)]
    pub temperature_uk: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lifetime_loss: f64,
    #[arg(long, value_enum, default_value = "two-sided")]
    #[serde(skip)]
    pub convention: Convention,
    /// Use this array size instead of the bound from the timing.
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub trise_us: f64,
    /// Write CSV and manifest here instead of printing to stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScaleArgs {
    #[command(flatten)]
    pub common: AnalyticArgs,
    #[arg(long, default_value_t = 0.0)]
    pub toff_min_us: f64,
    #[arg(long, default_value_t = 15.0)]
    pub toff_max_us: f64,
    #[arg(long, default_value_t = 151)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SurviveArgs {
    #[command(flatten)]
    pub common: AnalyticArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub toff_us: Vec<f64>,
    /// On-times matching --toff-us; the k = 0 resonance when omitted.
    #[arg(long, value_delimiter = ',')]
    pub ton_us: Vec<f64>,
    #[arg(long = "np", default_value_t = 1)]
    pub n_p: u32,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub nblink: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimTrap {
    Harmonic,
    Gaussian,
}

#[derive(Debug, Args, Serialize)]
pub struct RearrangeArgs {
    /// Built-in name (rotation, vacancy, worm, fall) or a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 20.0)]
    pub lattice_um: f64,
    #[arg(long, default_value_t = 1.1)]
    pub ton_us: f64,
    #[arg(long, default_value_t = 10.0)]
    pub toff_us: f64,
    /// Minimum number of cycles; moves may extend the run.
    #[arg(long, default_value_t = 0)]
    pub nblink: u32,
    /// Slots per cycle; 0 picks as many as the timing allows.
    #[arg(long, default_value_t = 0)]
    pub nslots: u32,
    #[arg(long, default_value_t = 0.13)]
    pub v_max: f64,
    #[arg(long, default_value_t = 7.5)]
    pub min_sep_um: f64,
    #[arg(long, default_value_t = 1.0)]
    pub trise_us: f64,
    #[arg(long, default_value_t = 80.0)]
    pub aod_origin_mhz: f64,
    #[arg(long, default_value_t = 0.5)]
    pub aod_slope_mhz_per_um: f64,
    /// Allowed AOD band as `lo,hi` in MHz.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub aod_band_mhz: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.5)]
    pub x_shift_us: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, value_enum, default_value = "harmonic")]
    pub trap: SimTrap,
    #[arg(long, default_value_t = 64.0)]
    pub omega_khz: f64,
    #[arg(long, default_value_t = 0.9)]
    pub d_um: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ellipticity: f64,
    #[arg(long, default_value_t = 13.0)]
    pub temperature_uk: f64,
    /// Power ramp time of the simulated trap.
    #[arg(long, default_value_t = 0.0)]
    pub sim_ramp_us: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lifetime_loss: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Process exit status for an error: 3 for numeric failures, 2 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let argv: Vec<String> = std::env::args().collect();
    let go = || match cli.command {
        Command::Resonance(a) => cmd_resonance(&a).map(|text| print!("{text}")),
        Command::Scale(a) => cmd_scale(&a, argv),
        Command::Survive(a) => cmd_survive(&a, argv),
        Command::Mc(a) => cmd_mc(&a, argv),
        Command::Rearrange(a) => cmd_rearrange(&a, argv),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn us(t: f64) -> String {
    format!("{:.6}", t / US)
}

/// Text report of the band and resonances for one query.
pub fn cmd_resonance(a: &ResonanceArgs) -> Result<String> {
    let omega = omega_from_khz(a.omega_khz);
    let t_off = match a.s {
        Some(s) => s / omega,
        None => a.toff_us * US,
    };
    let q = ResonanceQuery::new(omega, t_off, a.k, a.n_p)?;
    let mut out = String::new();
    writeln!(out, "omega_khz: {}", a.omega_khz).unwrap();
    writeln!(out, "t_off_us: {}", us(t_off)).unwrap();
    writeln!(out, "s: {:.6}", q.shear()).unwrap();
    let band = admissible_band(&q)?;
    match band {
        Some(b) => writeln!(out, "band_k{}_us: ({}, {}]", a.k, us(b.t_on_min), us(b.t_on_max)).unwrap(),
        None => writeln!(out, "band_k{}_us: empty", a.k).unwrap(),
    }
    let solutions = match a.n_p {
        1 => vec![resonant_ton_np1(omega, t_off, a.k)?],
        2 => {
            let (x, y) = resonant_ton_np2(omega, t_off)?;
            let shift = a.k as f64 * PI / omega;
            vec![x + shift, y + shift]
        }
        _ => find_resonances(&q)?,
    };
    if solutions.is_empty() {
        writeln!(out, "t_on_us: none").unwrap();
    }
    for t in solutions {
        let p = is_periodic(omega, t, t_off, a.n_p, 1e-9)?;
        writeln!(out, "t_on_us: {} (n_p = {}, residual {:.1e})", us(t), a.n_p, p.residual).unwrap();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRow {
    pub t_off: f64,
    pub t_on: f64,
    pub m: u32,
    pub p_worst: f64,
    pub m_eff: f64,
    pub m_eff_star: f64,
    pub accessible: bool,
}

pub const SCALE_HEADER: [&str; 7] = ["t_off_us", "t_on_us", "M", "P_worst", "M_eff", "M_eff_star", "accessible"];

pub fn scale_csv(rows: &[ScaleRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCALE_HEADER)?;
    for r in rows {
        w.write_record([
            us(r.t_off),
            us(r.t_on),
            r.m.to_string(),
            format!("{:.10}", r.p_worst),
            format!("{:.10}", r.m_eff),
            format!("{}", r.m_eff_star),
            r.accessible.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn analytic_inputs(a: &AnalyticArgs) -> Result<(AnalyticTrap, AtomSpec)> {
    let trap = AnalyticTrap::new(omega_from_khz(a.omega_khz), a.d_um * UM)?
        .with_alpha(a.alpha)?
        .with_lifetime_loss(a.lifetime_loss)?
        .with_convention(a.convention.into());
    Ok((trap, AtomSpec::rb87(a.temperature_uk * UK)?))
}

pub fn scale_rows(a: &ScaleArgs) -> Result<Vec<ScaleRow>> {
    let (trap, atom) = analytic_inputs(&a.common)?;
    if !(a.toff_min_us >= 0.0 && a.toff_max_us >= a.toff_min_us) {
        return Err(Error::InvalidArgument("need 0 <= toff-min-us <= toff-max-us".into()));
    }
    let points = if a.toff_max_us == a.toff_min_us { 1 } else { a.points };
    if points == 0 {
        return Err(Error::InvalidArgument("points must be at least 1".into()));
    }
    let grid: Vec<f64> = linspace(a.toff_min_us, a.toff_max_us, points)
        .into_iter()
        .map(|v| v * US)
        .collect();
    scaling_curve(&trap, &atom, &grid, a.common.trise_us * US)?
        .into_iter()
        .map(|p| {
            let r = match a.common.m {
                Some(m) => effective_scaling_for(m, &trap, &atom, p.t_off, 1)?,
                None => p.report,
            };
            Ok(ScaleRow {
                t_off: p.t_off,
                t_on: p.t_on_resonant,
                m: r.m,
                p_worst: r.p_worst,
                m_eff: r.m_eff,
                m_eff_star: r.m_eff_star,
                accessible: p.accessible,
            })
        })
        .collect()
}

pub fn survive_rows(a: &SurviveArgs) -> Result<Vec<ScaleRow>> {
    let (trap, atom) = analytic_inputs(&a.common)?;
    if !a.ton_us.is_empty() && a.ton_us.len() != a.toff_us.len() {
        return Err(Error::InvalidArgument("--ton-us needs one value per --toff-us".into()));
    }
    a.toff_us
        .iter()
        .enumerate()
        .map(|(i, &toff)| {
            let t_off = toff * US;
            let t_on = match a.ton_us.get(i) {
                Some(&v) => v * US,
                None => resonant_ton_np1(trap.omega, t_off, 0)?,
            };
            let m = match a.common.m {
                Some(m) => m,
                None => max_atoms(t_on, t_off)?,
            };
            let r = effective_scaling_for(m, &trap, &atom, t_off, a.n_p)?;
            Ok(ScaleRow {
                t_off,
                t_on,
                m: r.m,
                p_worst: r.p_worst,
                m_eff: r.m_eff,
                m_eff_star: r.m_eff_star,
                accessible: t_on >= a.common.trise_us * US,
            })
        })
        .collect()
}

fn emit_csv(out: &Option<PathBuf>, name: &str, bytes: &[u8], argv: Vec<String>, config: &impl Serialize) -> Result<()> {
    match out {
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
        Some(dir) => {
            let mut o = OutputDir::create(dir)?;
            o.write(name, bytes)?;
            o.finish(argv, serde_json::to_value(config)?, None)?;
            Ok(())
        }
    }
}

fn cmd_scale(a: &ScaleArgs, argv: Vec<String>) -> Result<()> {
    let rows = scale_rows(a)?;
    emit_csv(&a.common.out, "scale.csv", &scale_csv(&rows)?, argv, a)
}

fn cmd_survive(a: &SurviveArgs, argv: Vec<String>) -> Result<()> {
    let rows = survive_rows(a)?;
    emit_csv(&a.common.out, "survive.csv", &scale_csv(&rows)?, argv, a)
}

/// Runs the heatmap described by `args` and writes `heatmap.csv` plus the
/// manifest. Returns the CSV bytes.
pub fn run_mc(args: &McArgs, argv: Vec<String>) -> Result<Vec<u8>> {
    let mut cfg = McConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if let Some(n) = args.nblink {
        cfg.n_blink = n;
    }
    cfg.validate()?;
    let heat = sweep_heatmap(&cfg.base_sim()?, &cfg.t_on_values(), &cfg.t_off_values())?;
    let mut csv = Vec::new();
    heat.write_csv(&mut csv)?;
    let mut out = OutputDir::create(&args.out)?;
    out.write("heatmap.csv", &csv)?;
    out.finish(argv, serde_json::to_value(&cfg)?, Some(cfg.seed))?;
    Ok(csv)
}

fn cmd_mc(a: &McArgs, argv: Vec<String>) -> Result<()> {
    let csv = run_mc(a, argv)?;
    let rows = csv.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    println!("wrote {rows} cells to {}", a.out.join("heatmap.csv").display());
    Ok(())
}

fn load_scenario(name: &str, lattice: f64) -> Result<Scenario> {
    match builtin_scenario(name, lattice) {
        Ok(s) => Ok(s),
        Err(_) if Path::new(name).exists() => {
            let text = std::fs::read_to_string(name)?;
            serde_json::from_str::<ScenarioFile>(&text)
                .map_err(|e| Error::Config(format!("{name}: {e}")))?
                .into_scenario()
        }
        Err(e) => Err(e),
    }
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn cmd_rearrange(a: &RearrangeArgs, argv: Vec<String>) -> Result<()> {
    let lattice = a.lattice_um * UM;
    let scenario = load_scenario(&a.scenario, lattice)?;
    let timing = BlinkTiming::new(a.ton_us * US, a.toff_us * US, a.nblink, a.nslots.max(1))?;
    let limits = ScheduleLimits {
        v_max: a.v_max,
        min_site_separation: a.min_sep_um * UM,
        rise_time: a.trise_us * US,
    };
    let schedule = compile_scenario(&scenario, &timing, a.v_max)?;
    let violations = validate_schedule(&schedule, &timing, &limits)?;
    let slope = a.aod_slope_mhz_per_um * MHZ / UM;
    let cal = AodCalibration {
        band: a.aod_band_mhz.as_ref().map(|b| [b[0] * MHZ, b[1] * MHZ]),
        x_axis_shift: a.x_shift_us * US,
        ..AodCalibration::new(a.aod_origin_mhz * MHZ, a.aod_origin_mhz * MHZ, slope, slope)?
    };
    let rf = schedule_to_rf(&schedule, &cal)?;

    let mut out = OutputDir::create(&a.out)?;
    out.write("scenario.json", &pretty(&ScenarioFile::from_scenario(&scenario, Some(lattice)))?)?;
    out.write("schedule.json", &pretty(&schedule)?)?;
    let mut rf_csv = Vec::new();
    rf.write_csv(&mut rf_csv)?;
    out.write("rf.csv", &rf_csv)?;
    out.write("violations.json", &pretty(&violations)?)?;
    println!(
        "{}: {} cycles x {} slots, {} violation(s)",
        schedule.scenario,
        schedule.cycles.len(),
        schedule.n_slots,
        violations.len()
    );
    if !violations.is_empty() {
        out.finish(argv, serde_json::to_value(a)?, Some(a.seed))?;
        return Err(Error::Constraint(format!(
            "{} violation(s); see {}",
            violations.len(),
            a.out.join("violations.json").display()
        )));
    }
    if a.simulate {
        let omega = omega_from_khz(a.omega_khz);
        let d = a.d_um * UM;
        let trap = match a.trap {
            SimTrap::Harmonic => TrapModel::harmonic_cutoff(omega, d)?,
            SimTrap::Gaussian => TrapModel::gaussian_matched(omega, d, RB87_MASS, a.ellipticity)?,
        }
        .with_ramps(a.sim_ramp_us * US, a.sim_ramp_us * US)?;
        let mut sim = SimConfig::new(trap, AtomSpec::rb87(a.temperature_uk * UK)?, timing);
        sim.n_samples = a.samples;
        sim.seed = a.seed;
        sim.lifetime_loss = a.lifetime_loss;
        let report = simulate_rearrangement(&scenario, &timing, &limits, &sim)?;
        for atom in &report.atoms {
            println!("atom {:>2}: P = {:.4} +/- {:.4}", atom.atom, atom.p, atom.stderr);
        }
        println!("mean: {:.4}", report.mean);
        out.write("report.json", &pretty(&report)?)?;
    }
    out.finish(argv, serde_json::to_value(a)?, Some(a.seed))?;
    Ok(())
}

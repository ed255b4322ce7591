use std::path::Path;

use log::info;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use tamewave_core::grid::write_field;
use tamewave_core::linsolve::{mode_decay_rate, solve_forward, LinearOpSpec};
use tamewave_core::mellin::{find_resonances, spectral_gap};
use tamewave_core::nashmoser::{lambda_limit, run as run_nash_moser};
use tamewave_core::scenario::solve_scenario;
use tamewave_core::smoothing::{audit_smoothing, Mollifier, SmoothingSchedule};
use tamewave_core::tame::{audit_tame, TameAuditSetup, TameOp};
use tamewave_core::Error;

use crate::config::{Config, Family};
use crate::output::{fmt, write_csv, write_json};
use crate::{CliError, Command, Context};

pub fn run(cmd: Command, ctx: &Context) -> Result<(), CliError> {
    let family = if cmd == Command::Kg { Family::KleinGordon } else { Family::Wave };
    let (mut cfg, base_dir) = Config::load(ctx.config.as_deref(), family)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    info!("running {cmd:?} with seed {}", cfg.seed);
    match cmd {
        Command::SmoothingAudit => smoothing(&cfg, &ctx.out),
        Command::TameAudit => tame(&cfg, &ctx.out),
        Command::Resonances => resonances(&cfg, &ctx.out),
        Command::SolveLinear => linear(&cfg, &base_dir, &ctx.out),
        Command::NashMoser => nash_moser(&cfg, &base_dir, &ctx.out),
        Command::SolveQuasilinear => quasilinear(&cfg, "wave", &base_dir, &ctx.out),
        Command::Kg => quasilinear(&cfg, "klein-gordon", &base_dir, &ctx.out),
    }
}

#[derive(Serialize)]
struct SmoothingSummary {
    s: f64,
    t: f64,
    estimate_id: String,
    max_ratio: f64,
    slope: Option<f64>,
    slope_ci: Option<(f64, f64)>,
}

fn smoothing(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let a = &cfg.smoothing_audit;
    let schedule = SmoothingSchedule {
        theta0: a.theta0,
        mollifier: Mollifier,
    };
    let cells: Vec<(f64, f64)> = a.s.iter().flat_map(|s| a.t.iter().map(move |t| (*s, *t))).collect();
    let reports = cells
        .par_iter()
        .map(|&(s, t)| {
            info!("smoothing audit s={s} t={t}");
            audit_smoothing(&schedule, s, t, &a.thetas, a.samples, cfg.seed).map(|r| (s, t, r))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (s, t, reps) in &reports {
        for r in reps {
            for e in &r.ratios {
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    fmt(*s),
                    fmt(*t),
                    r.estimate_id,
                    fmt(e.param),
                    e.sample,
                    fmt(e.ratio)
                ));
            }
            summary.push(SmoothingSummary {
                s: *s,
                t: *t,
                estimate_id: r.estimate_id.clone(),
                max_ratio: r.max_ratio,
                slope: r.slope,
                slope_ci: r.slope_ci,
            });
        }
    }
    write_csv(out, "smoothing_audit.csv", "s,t,estimate_id,theta,sample_id,ratio", &rows)?;
    write_json(out, "summary.json", &summary)
}

#[derive(Serialize)]
struct TameSummary {
    estimate_id: String,
    grid: &'static str,
    max_ratio: f64,
}

fn tame(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let a = &cfg.tame_audit;
    let ops = a
        .ops
        .iter()
        .map(|id| match id.as_str() {
            "product" => Ok(TameOp::Product),
            "reciprocal" => Ok(TameOp::Reciprocal { a: a.a, c0: a.c0 }),
            "composition" => Ok(TameOp::Composition(a.function.clone())),
            other => TameOp::parse(other),
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let coarse = TameAuditSetup::coarse();
    let mut setups = vec![("coarse", coarse)];
    if a.refine {
        setups.push(("refined", coarse.refined()));
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for op in &ops {
        for (name, setup) in &setups {
            info!("tame audit {} on the {name} grid", op.id());
            let r = audit_tame(op, a.s, a.mu, setup, a.samples, cfg.seed)?;
            for e in &r.ratios {
                rows.push(format!("{},{name},{},{},{}", r.estimate_id, fmt(e.param), e.sample, fmt(e.ratio)));
            }
            summary.push(TameSummary {
                estimate_id: r.estimate_id.clone(),
                grid: name,
                max_ratio: r.max_ratio,
            });
        }
    }
    write_csv(out, "tame_audit.csv", "estimate_id,grid,amplitude,sample_id,ratio", &rows)?;
    write_json(out, "summary.json", &summary)
}

#[derive(Serialize)]
struct Pair {
    re: f64,
    im: f64,
}

impl From<Complex64> for Pair {
    fn from(z: Complex64) -> Self {
        Pair { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct ResonanceSummary {
    sigma1: Pair,
    /// `None` (JSON null) when there is a single level.
    gap: Option<f64>,
    count: usize,
}

fn resonances(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let rs = find_resonances(&cfg.operator, cfg.resonances.k_max, cfg.resonances.search_bound)?;
    let all = rs.all();
    let rows: Vec<String> = all
        .iter()
        .map(|(k, z)| format!("{k},{},{}", fmt(z.re), fmt(z.im)))
        .collect();
    write_csv(out, "resonances.csv", "k,re,im", &rows)?;
    let (s1, gap) = spectral_gap(&rs)?;
    write_json(
        out,
        "summary.json",
        &ResonanceSummary {
            sigma1: s1.into(),
            gap: gap.is_finite().then_some(gap),
            count: all.len(),
        },
    )
}

#[derive(Serialize)]
struct LinearSummary {
    modes: Vec<LinearMode>,
    support_floor: f64,
}

#[derive(Serialize)]
struct LinearMode {
    k: i64,
    predicted_rate: f64,
    measured_rate: Option<f64>,
}

fn linear(cfg: &Config, base_dir: &Path, out: &Path) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let f = cfg.forcing_field(grid, base_dir)?;
    let l = LinearOpSpec::constant(cfg.operator, grid)?;
    let u = solve_forward(&l, &f)?;
    let k_max = cfg.linear.modes.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0) as u32;
    let rs = find_resonances(&cfg.operator, k_max, cfg.resonances.search_bound)?;
    let window = (cfg.linear.window[0], cfg.linear.window[1]);
    let mut modes = Vec::new();
    for &k in &cfg.linear.modes {
        // the zero resonance only sets the limit; the next root sets the rate
        let lead = rs.modes[&k]
            .iter()
            .find(|z| z.norm() > 1e-12)
            .copied()
            .ok_or_else(|| Error::config(format!("no decaying resonance for mode {k}")))?;
        let measured = mode_decay_rate(&u, k, lead.re.abs(), window);
        modes.push(LinearMode {
            k,
            predicted_rate: -lead.im,
            measured_rate: measured,
        });
    }
    let rows: Vec<String> = modes
        .iter()
        .map(|m| {
            let measured = m.measured_rate.map(fmt).unwrap_or_default();
            format!("{},{},{}", m.k, fmt(m.predicted_rate), measured)
        })
        .collect();
    write_csv(out, "decay.csv", "k,predicted_rate,measured_rate", &rows)?;
    write_field(&u, &out.join("u.bin"))?;
    write_json(
        out,
        "summary.json",
        &LinearSummary {
            modes,
            support_floor: u.support_floor(),
        },
    )
}

#[derive(Serialize)]
struct NashMoserSummary {
    converged: bool,
    iterations: u32,
    final_residual: f64,
    required_regularity: u64,
    theta0: f64,
    lambda_limit: f64,
    support_floor: f64,
}

fn nash_moser(cfg: &Config, base_dir: &Path, out: &Path) -> Result<(), CliError> {
    let sc = cfg.scenario("nash-moser", base_dir)?;
    let outcome = run_nash_moser(&sc.problem, &sc.nash_moser, &Mollifier)?;
    write_trace(out, &outcome.trace)?;
    write_field(&outcome.u, &out.join("u.bin"))?;
    write_json(
        out,
        "summary.json",
        &NashMoserSummary {
            converged: true,
            iterations: outcome.iterations,
            final_residual: outcome.trace.steps.last().map_or(0.0, |s| s.residual_norm),
            required_regularity: sc.nash_moser.required_regularity(),
            theta0: sc.nash_moser.theta0,
            lambda_limit: lambda_limit(sc.nash_moser.theta0)?,
            support_floor: outcome.u.support_floor(),
        },
    )
}

#[derive(Serialize)]
struct QuasilinearSummary {
    scenario: String,
    converged: bool,
    iterations: u32,
    final_residual: f64,
    refined_residual: f64,
    constant: Pair,
    fit_residual: f64,
    tail_norm: f64,
    decay_rate: Option<f64>,
    sigma1: Pair,
    leading_exponent: Option<Pair>,
    leading_amplitude: Option<Pair>,
}

fn quasilinear(cfg: &Config, name: &str, base_dir: &Path, out: &Path) -> Result<(), CliError> {
    let sc = cfg.scenario(name, base_dir)?;
    let sol = solve_scenario(&sc)?;
    write_trace(out, &sol.outcome.trace)?;
    write_field(&sol.outcome.u, &out.join("u.bin"))?;
    write_field(&sol.expansion.remainder, &out.join("remainder.bin"))?;
    write_json(
        out,
        "summary.json",
        &QuasilinearSummary {
            scenario: sc.name.clone(),
            converged: true,
            iterations: sol.outcome.iterations,
            final_residual: sol.outcome.trace.steps.last().map_or(0.0, |s| s.residual_norm),
            refined_residual: sol.refined_residual,
            constant: sol.expansion.constant.into(),
            fit_residual: sol.expansion.fit_residual,
            tail_norm: sol.expansion.tail_norm,
            decay_rate: sol.decay_rate,
            sigma1: sol.sigma1.into(),
            leading_exponent: sol.leading_term.map(|t| t.0.into()),
            leading_amplitude: sol.leading_term.map(|t| t.1.into()),
        },
    )
}

fn write_trace(out: &Path, trace: &tamewave_core::nashmoser::IterationTrace) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let file = std::fs::File::create(out.join("trace.csv"))?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

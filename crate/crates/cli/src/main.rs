//! `le2`: stability toolkit for the two-layer coupled Lengyel-Epstein system
//! on an interval. Subcommands cover nullcline geometry, the layered reduced
//! profile, interface states at positive width, the slow spectral basis and
//! scalar constants, the steady-bifurcation curve, delayed-coupling Hopf
//! points, direct simulation, threshold scans, parameter sweeps, and a
//! validation battery.
//!
//! Exit codes: 0 success, 2 parameter/regime diagnostics, 3 numerical
//! failures.

mod cache;
mod config;
mod output;
mod pipeline;
mod sweep;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use cache::Cache;
use config::FileConfig;
use le2_core::kinetics::{constant_steady_state, Alpha, ModelParams};
use le2_core::nullcline::{fold_points, Branch};
use le2_core::simulate::{
    rightmost_real, run_simulation, threshold_scan, EigMethod, EigMode, PerturbMode, PerturbSpec,
    SimConfig, System, Verdict,
};
use le2_core::slep::{Slep, XYArgs};
use le2_core::spectral::eig_slow;
use le2_core::steady::{geometric_schedule, solve_layered_eps, LayeredStateEps};
use output::{fmt, write_json, CsvWriter, ResolvedConfig};
use pipeline::{build_constants, build_profile, PipelineOpts};
use sweep::Axis;

#[derive(Parser)]
#[command(name = "le2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Kinetic constant (activator-inhibitor regime needs a > (5/3)sqrt(15)).
    #[arg(long)]
    a: Option<f64>,
    /// Complexing factor (> 1).
    #[arg(long)]
    sigma: Option<f64>,
    /// Inhibitor intra-reactor diffusion rate.
    #[arg(long)]
    d: Option<f64>,
    /// Domain length.
    #[arg(long)]
    ell: Option<f64>,
    /// Relative reaction-time parameter.
    #[arg(long)]
    tau: Option<f64>,
    /// Interface width parameter.
    #[arg(long)]
    eps: Option<f64>,
    /// Activator inter-reactor exchange rate.
    #[arg(long)]
    k1: Option<f64>,
    /// Inhibitor inter-reactor exchange rate.
    #[arg(long)]
    k2: Option<f64>,
    /// Inverse mean delay of the coupling kernel, or `inf`.
    #[arg(long)]
    alpha: Option<String>,
    /// Line-oriented `key = value` config file (flags take precedence).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cache directory (default `$LE2_CACHE_DIR` or `.le2-cache`).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Nodes of the uniform spectral grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of explicitly computed slow modes.
    #[arg(long)]
    modes: Option<usize>,
}

struct Resolved {
    params: ModelParams<f64>,
    opts: PipelineOpts,
    cache_dir: Option<PathBuf>,
    config: ResolvedConfig,
}

impl ParamArgs {
    fn resolve(&self, subcommand: &str) -> anyhow::Result<Resolved> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let num = |flag: Option<f64>, key: &str, default: f64| -> anyhow::Result<f64> {
            Ok(config::resolve(flag, file.get_f64(key)?, default))
        };
        let alpha = match self
            .alpha
            .clone()
            .or_else(|| file.values.get("alpha").cloned())
        {
            None => Alpha::Infinite,
            Some(s) if s == "inf" || s == "infinite" => Alpha::Infinite,
            Some(s) => Alpha::Finite(
                s.parse::<f64>()
                    .with_context(|| format!("alpha = `{s}` is neither a number nor `inf`"))?,
            ),
        };
        let params = ModelParams {
            a: num(self.a, "a", 10.0)?,
            sigma: num(self.sigma, "sigma", 8.0)?,
            eps: num(self.eps, "eps", 0.05)?,
            tau: num(self.tau, "tau", 14.527)?,
            d: num(self.d, "d", 1.0)?,
            k1: num(self.k1, "k1", 0.0)?,
            k2: num(self.k2, "k2", 0.0)?,
            ell: num(self.ell, "ell", 1.0)?,
            alpha,
        };
        let defaults = PipelineOpts::default();
        let opts = PipelineOpts {
            grid_m: self
                .grid
                .or(file.get_f64("grid")?.map(|x| x as usize))
                .unwrap_or(defaults.grid_m),
            n_modes: self
                .modes
                .or(file.get_f64("modes")?.map(|x| x as usize))
                .unwrap_or(defaults.n_modes),
            state_grid_n: defaults.state_grid_n,
        };
        let cache_dir = self.cache_dir.clone().or_else(|| {
            file.values
                .get("cache_dir")
                .map(PathBuf::from)
        });
        let mut rc = ResolvedConfig::new();
        rc.set("subcommand", subcommand)
            .set("a", params.a)
            .set("sigma", params.sigma)
            .set("eps", params.eps)
            .set("tau", params.tau)
            .set("d", params.d)
            .set("k1", params.k1)
            .set("k2", params.k2)
            .set("ell", params.ell)
            .set(
                "alpha",
                match params.alpha {
                    Alpha::Finite(x) => fmt(x),
                    Alpha::Infinite => "inf".to_string(),
                },
            )
            .set("grid", opts.grid_m)
            .set("modes", opts.n_modes);
        Ok(Resolved {
            params,
            opts,
            cache_dir,
            config: rc,
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScanParam {
    Tau,
    K2,
    Alpha,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScanCriterion {
    Eigs,
    Sim,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SystemArg {
    Decoupled2,
    Coupled4,
    Coupled6Delayed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepTask {
    ClassifyMap,
    TuringCurve,
    LambdaCurves,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fold points, the Maxwell root, and sampled branch curves.
    Nullclines {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// The matched layered reduced profile.
    Reduced {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interface state at positive width by continuation.
    Steady {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Nodes of the state grid.
        #[arg(long, default_value_t = 1201)]
        state_grid: usize,
    },
    /// Slow spectral basis (eigenvalues and layer traces).
    Spectral {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The scalar constants feeding every stability equation.
    Constants {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-bifurcation curve k2 = xi(k1).
    TuringCurve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k1_min: f64,
        #[arg(long)]
        k1_max: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Delayed-coupling Hopf point at (k1, k2).
    Hopf {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Region classification of a point of the (k1, k2) quadrant.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time integration with diagnostics.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        amplitude: f64,
        #[arg(long, value_enum, default_value = "antisymmetric")]
        perturb: PerturbArg,
        #[arg(long, default_value_t = 20)]
        record_stride: usize,
        #[arg(long, default_value_t = 601)]
        state_grid: usize,
        /// Time-series CSV (t, asym_norm, dev_norm).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Field snapshot CSV (t, x, u1, v1, u2, v2).
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
        /// Record snapshots every this many steps (default: final state only).
        #[arg(long)]
        snapshot_stride: Option<usize>,
    },
    /// Bisection of a stability threshold in tau, k2, or alpha.
    Scan {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        param: ScanParam,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long, value_enum, default_value = "eigs")]
        criterion: ScanCriterion,
        #[arg(long, default_value_t = 601)]
        state_grid: usize,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parallel parameter sweeps with deterministic output order.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        task: SweepTask,
        /// Axis spec `name:min:max:count[:log]`; repeatable.
        #[arg(long)]
        axis: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = rayon default).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Validation batteries (`slep`).
    Validate {
        #[command(flatten)]
        params: ParamArgs,
        /// Which battery to run.
        suite: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PerturbArg {
    Symmetric,
    Antisymmetric,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<le2_core::Error>() {
                Some(le2_core::Error::Domain(_))
                | Some(le2_core::Error::Regime(_))
                | Some(le2_core::Error::Bracket(_)) => 2,
                Some(le2_core::Error::Convergence(_)) | Some(le2_core::Error::Eigen(_)) => 3,
                None => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Nullclines {
            params,
            format,
            out,
            samples,
        } => {
            let r = params.resolve("nullclines")?;
            let p = &r.params;
            let b = fold_points(p.a)?;
            let vhat = b.find_vhat(p.sigma)?;
            let mut cfg = r.config.clone();
            cfg.set("u_lo", fmt(b.u_lo))
                .set("u_hi", fmt(b.u_hi))
                .set("v_lo", fmt(b.v_lo))
                .set("v_hi", fmt(b.v_hi))
                .set("v_hat", fmt(vhat));
            match format {
                Format::Csv => {
                    let mut w = CsvWriter::create(
                        out.as_deref(),
                        &cfg,
                        &["v", "h_minus", "h_zero", "h_plus"],
                    )?;
                    for i in 0..samples {
                        let v = b.v_lo
                            + (b.v_hi - b.v_lo) * (i as f64 + 0.5) / samples as f64;
                        w.row(&[
                            fmt(v),
                            fmt(b.eval(v, Branch::Minus)?),
                            fmt(b.eval(v, Branch::Zero)?),
                            fmt(b.eval(v, Branch::Plus)?),
                        ])?;
                    }
                    w.finish()?;
                }
                Format::Json => {
                    let (us, vs) = constant_steady_state(p.a);
                    write_json(
                        out.as_deref(),
                        &cfg,
                        serde_json::json!({
                            "u_lo": b.u_lo, "u_hi": b.u_hi,
                            "v_lo": b.v_lo, "v_hi": b.v_hi,
                            "v_hat": vhat,
                            "constant_state": { "u": us, "v": vs },
                        }),
                    )?;
                }
            }
            Ok(())
        }
        Command::Reduced { params, out } => {
            let r = params.resolve("reduced")?;
            let profile = build_profile(&r.params)?;
            let mut u_left = Vec::new();
            let mut u_right = Vec::new();
            for i in 0..profile.grid.len() {
                let v = profile.v[i];
                u_left.push(
                    profile
                        .branches
                        .h_minus(v.min(profile.v_hat))
                        .unwrap_or(f64::NAN),
                );
                u_right.push(
                    profile
                        .branches
                        .h_plus(v.max(profile.v_hat))
                        .unwrap_or(f64::NAN),
                );
            }
            write_json(
                out.as_deref(),
                &r.config,
                serde_json::json!({
                    "x_star": profile.x_star,
                    "v_hat": profile.v_hat,
                    "grid": profile.grid.x,
                    "V": profile.v,
                    "U_left_of_layer": u_left,
                    "U_right_of_layer": u_right,
                    "slope_mismatch": profile.slope_mismatch,
                }),
            )?;
            Ok(())
        }
        Command::Steady {
            params,
            format,
            out,
            state_grid,
        } => {
            let r = params.resolve("steady")?;
            let st = load_state(&r, state_grid)?;
            let mut cfg = r.config.clone();
            cfg.set("state_grid", state_grid)
                .set("newton_residual", fmt(st.newton_residual));
            match format {
                Format::Csv => {
                    let mut w = CsvWriter::create(out.as_deref(), &cfg, &["x", "u", "v"])?;
                    for i in 0..st.grid.len() {
                        w.row(&[fmt(st.grid.x[i]), fmt(st.u[i]), fmt(st.v[i])])?;
                    }
                    w.finish()?;
                }
                Format::Json => {
                    write_json(
                        out.as_deref(),
                        &cfg,
                        serde_json::json!({
                            "eps": st.eps,
                            "grid": st.grid.x,
                            "u": st.u,
                            "v": st.v,
                            "newton_residual": st.newton_residual,
                            "residual_floor": st.residual_floor,
                        }),
                    )?;
                }
            }
            Ok(())
        }
        Command::Spectral { params, out } => {
            let r = params.resolve("spectral")?;
            let profile = build_profile(&r.params)?;
            let basis = eig_slow(&profile, r.params.d, r.opts.n_modes, r.opts.grid_m)?;
            write_json(
                out.as_deref(),
                &r.config,
                serde_json::to_value(&basis)?,
            )?;
            Ok(())
        }
        Command::Constants { params, out } => {
            let r = params.resolve("constants")?;
            let cache = Cache::open(r.cache_dir.as_deref())?;
            let c = build_constants(&r.params, &r.opts, &cache)?;
            write_json(
                out.as_deref(),
                &r.config,
                serde_json::json!({
                    "rho0_star": c.rho0_star,
                    "kappa_star": c.kappa_star,
                    "c1_star": c.c1_star,
                    "c2_star": c.c2_star,
                    "c1c2": c.c1c2,
                    "tau_star": c.tau_star,
                    "mu_star": c.mu_star,
                    "v_hat": c.v_hat,
                    "x_star": c.x_star,
                    "m_prime_vhat": c.m_prime_vhat,
                    "integral_g_left": c.integral_g_left,
                    "gamma0": c.sum.gamma0(),
                    "n_modes": c.sum.weights.len(),
                }),
            )?;
            Ok(())
        }
        Command::TuringCurve {
            params,
            k1_min,
            k1_max,
            samples,
            out,
        } => {
            let r = params.resolve("turing-curve")?;
            let cache = Cache::open(r.cache_dir.as_deref())?;
            let c = build_constants(&r.params, &r.opts, &cache)?;
            let slep = Slep::new(&c, r.params.tau)?;
            let mut cfg = r.config.clone();
            cfg.set("rho0_star", fmt(c.rho0_star));
            let mut w = CsvWriter::create(out.as_deref(), &cfg, &["k1", "xi_k1"])?;
            for i in 0..samples {
                let k1 = k1_min
                    + (k1_max - k1_min) * i as f64 / (samples.max(2) - 1) as f64;
                let xi = slep.turing_curve_xi(k1)?;
                w.row(&[fmt(k1), fmt(xi)])?;
            }
            w.finish()?;
            Ok(())
        }
        Command::Hopf { params, out } => {
            let r = params.resolve("hopf")?;
            let cache = Cache::open(r.cache_dir.as_deref())?;
            let c = build_constants(&r.params, &r.opts, &cache)?;
            let slep = Slep::new(&c, r.params.tau)?;
            let h = slep.find_hopf(r.params.k1, r.params.k2)?;
            write_json(out.as_deref(), &r.config, serde_json::to_value(&h)?)?;
            Ok(())
        }
        Command::Classify { params, out } => {
            let r = params.resolve("classify")?;
            let cache = Cache::open(r.cache_dir.as_deref())?;
            let c = build_constants(&r.params, &r.opts, &cache)?;
            let slep = Slep::new(&c, r.params.tau)?;
            let point = slep.classify(r.params.k1, r.params.k2)?;
            write_json(out.as_deref(), &r.config, serde_json::to_value(&point)?)?;
            Ok(())
        }
        Command::Simulate {
            params,
            system,
            t_end,
            dt,
            amplitude,
            perturb,
            record_stride,
            state_grid,
            out,
            snapshot_out,
            snapshot_stride,
        } => {
            let r = params.resolve("simulate")?;
            let system = match system {
                SystemArg::Decoupled2 => System::Decoupled2,
                SystemArg::Coupled4 => System::Coupled4,
                SystemArg::Coupled6Delayed => System::Coupled6Delayed,
            };
            let base = load_state(&r, state_grid)?;
            let sim = SimConfig {
                system,
                params: r.params,
                dt,
                t_end,
                perturb: PerturbSpec {
                    mode: match perturb {
                        PerturbArg::Symmetric => PerturbMode::Symmetric,
                        PerturbArg::Antisymmetric => PerturbMode::Antisymmetric,
                    },
                    amplitude,
                },
                record_stride,
                snapshot_stride: if snapshot_out.is_some() {
                    snapshot_stride
                } else {
                    None
                },
            };
            let (state, diag) = run_simulation(&base, &sim)?;
            let mut cfg = r.config.clone();
            cfg.set("system", format!("{system:?}"))
                .set("t_end", fmt(t_end))
                .set("verdict", format!("{:?}", diag.verdict))
                .set("log_slope", fmt(diag.log_slope))
                .set("peak_count", diag.peak_count)
                .set("amplitude_ratio", fmt(diag.amplitude_ratio));
            let mut w = CsvWriter::create(
                out.as_deref(),
                &cfg,
                &["t", "asym_norm", "dev_norm"],
            )?;
            for i in 0..diag.times.len() {
                w.row(&[
                    fmt(diag.times[i]),
                    fmt(diag.asym_norm[i]),
                    fmt(diag.dev_norm[i]),
                ])?;
            }
            w.finish()?;
            if let Some(snap) = snapshot_out {
                let cols: &[&str] = match system {
                    System::Decoupled2 => &["t", "x", "u1", "v1"],
                    _ => &["t", "x", "u1", "v1", "u2", "v2"],
                };
                let mut w = CsvWriter::create(Some(&snap), &cfg, cols)?;
                let finals = vec![(state.t, state.fields.clone())];
                let frames: &[(f64, Vec<Vec<f64>>)] = if diag.snapshots.is_empty() {
                    &finals
                } else {
                    &diag.snapshots
                };
                for (t, fields) in frames {
                    for i in 0..base.grid.len() {
                        let mut row = vec![fmt(*t), fmt(base.grid.x[i])];
                        for f in fields.iter().take(cols.len() - 2) {
                            row.push(fmt(f[i]));
                        }
                        w.row(&row)?;
                    }
                }
                w.finish()?;
            }
            Ok(())
        }
        Command::Scan {
            params,
            param,
            min,
            max,
            criterion,
            state_grid,
            t_end,
            out,
        } => {
            let r = params.resolve("scan")?;
            let base = load_state(&r, state_grid)?;
            let p = r.params;
            let eig_pred = |value: f64| -> le2_core::Result<bool> {
                let (tau, mode) = match param {
                    ScanParam::Tau => (value, EigMode::DecoupledOrSym),
                    ScanParam::K2 => (
                        p.tau,
                        EigMode::AntisymNondelayed {
                            k1: p.k1,
                            k2: value,
                        },
                    ),
                    ScanParam::Alpha => (
                        p.tau,
                        EigMode::AntisymDelayed {
                            k1: p.k1,
                            k2: p.k2,
                            alpha: value,
                        },
                    ),
                };
                Ok(rightmost_real(&base, tau, mode, EigMethod::Auto)? > 0.0)
            };
            let sim_pred = |value: f64| -> le2_core::Result<bool> {
                let mut pp = p;
                let system = match param {
                    ScanParam::Tau => {
                        pp.tau = value;
                        System::Decoupled2
                    }
                    ScanParam::K2 => {
                        pp.k2 = value;
                        System::Coupled4
                    }
                    ScanParam::Alpha => {
                        pp.alpha = Alpha::Finite(value);
                        System::Coupled6Delayed
                    }
                };
                let sim = SimConfig {
                    system,
                    params: pp,
                    dt: None,
                    t_end: t_end.unwrap_or(200.0),
                    perturb: PerturbSpec {
                        mode: PerturbMode::Antisymmetric,
                        amplitude: 1e-4,
                    },
                    record_stride: 20,
                    snapshot_stride: None,
                };
                let (_, diag) = run_simulation(&base, &sim)?;
                match diag.verdict {
                    Verdict::Growth | Verdict::SustainedOscillation => Ok(true),
                    Verdict::Decay => Ok(false),
                    Verdict::Inconclusive => Err(le2_core::Error::Convergence(format!(
                        "inconclusive simulation verdict at {param:?} = {value}"
                    ))),
                }
            };
            let mut result = serde_json::Map::new();
            result.insert("param".into(), serde_json::json!(format!("{param:?}")));
            match criterion {
                ScanCriterion::Eigs => {
                    let c = threshold_scan(eig_pred, min, max, 1e-3)?;
                    result.insert("critical_eigs".into(), serde_json::json!(c));
                }
                ScanCriterion::Sim => {
                    let c = threshold_scan(sim_pred, min, max, 1e-3)?;
                    result.insert("critical_sim".into(), serde_json::json!(c));
                }
                ScanCriterion::Both => {
                    let ce = threshold_scan(eig_pred, min, max, 1e-3)?;
                    let cs = threshold_scan(sim_pred, min, max, 1e-3)?;
                    result.insert("critical_eigs".into(), serde_json::json!(ce));
                    result.insert("critical_sim".into(), serde_json::json!(cs));
                }
            }
            write_json(out.as_deref(), &r.config, serde_json::Value::Object(result))?;
            Ok(())
        }
        Command::Sweep {
            params,
            task,
            axis,
            out,
            workers,
        } => {
            let r = params.resolve("sweep")?;
            if workers > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global()
                    .ok();
            }
            let cache = Cache::open(r.cache_dir.as_deref())?;
            let c = build_constants(&r.params, &r.opts, &cache)?;
            let slep = Slep::new(&c, r.params.tau)?;
            let axes: Vec<Axis> = axis
                .iter()
                .map(|s| Axis::parse(s))
                .collect::<anyhow::Result<_>>()?;
            let mut cfg = r.config.clone();
            cfg.set("task", format!("{task:?}"))
                .set("rho0_star", fmt(c.rho0_star));
            for a in &axes {
                cfg.set(
                    &format!("axis_{}", a.name),
                    format!("{}:{}:{}:{}", a.min, a.max, a.count, a.log),
                );
            }
            let (columns, rows): (Vec<&str>, _) = match task {
                SweepTask::ClassifyMap => {
                    expect_axes(&axes, &["k1", "k2"])?;
                    let task_fn = |p: &[f64]| -> anyhow::Result<Vec<String>> {
                        let pt = slep.classify(p[0], p[1])?;
                        Ok(vec![format!("{:?}", pt.label)])
                    };
                    (vec!["k1", "k2", "label", "error"], sweep::run(&axes, task_fn))
                }
                SweepTask::TuringCurve => {
                    expect_axes(&axes, &["k1"])?;
                    let task_fn = |p: &[f64]| -> anyhow::Result<Vec<String>> {
                        Ok(vec![fmt(slep.turing_curve_xi(p[0])?)])
                    };
                    (vec!["k1", "xi_k1", "error"], sweep::run(&axes, task_fn))
                }
                SweepTask::LambdaCurves => {
                    expect_axes(&axes, &["alpha"])?;
                    let (k1, k2) = (r.params.k1, r.params.k2);
                    let task_fn = |p: &[f64]| -> anyhow::Result<Vec<String>> {
                        let l1 = slep.lambda_i1(p[0], k1, k2)?;
                        let l2 = slep.lambda_i2(p[0], k1, k2)?;
                        Ok(vec![fmt(l1), fmt(l2)])
                    };
                    (
                        vec!["alpha", "lam_i1", "lam_i2", "error"],
                        sweep::run(&axes, task_fn),
                    )
                }
            };
            let mut w = CsvWriter::create(out.as_deref(), &cfg, &columns)?;
            let n_value_cols = columns.len() - axes.len() - 1;
            for (point, outcome) in rows {
                let mut fields: Vec<String> = point.iter().map(|x| fmt(*x)).collect();
                match outcome {
                    Ok(vals) => {
                        fields.extend(vals);
                        fields.push(String::new());
                    }
                    Err(e) => {
                        fields.extend(vec![String::new(); n_value_cols]);
                        fields.push(e);
                    }
                }
                w.row(&fields)?;
            }
            w.finish()?;
            Ok(())
        }
        Command::Validate { params, suite } => {
            let r = params.resolve("validate")?;
            match suite.as_str() {
                "slep" => validate_slep(&r),
                other => anyhow::bail!("unknown validation suite `{other}` (available: slep)"),
            }
        }
    }
}

fn expect_axes(axes: &[Axis], names: &[&str]) -> anyhow::Result<()> {
    let got: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    if got.as_slice() != names {
        anyhow::bail!("this task needs axes {names:?}, got {got:?}");
    }
    Ok(())
}

/// Solve (or reuse from cache) a layered interface state.
fn load_state(r: &Resolved, state_grid: usize) -> anyhow::Result<LayeredStateEps> {
    let p = &r.params;
    let cache = Cache::open(r.cache_dir.as_deref())?;
    let key = format!(
        "le2-state-v1|a={:.17e}|sigma={:.17e}|d={:.17e}|ell={:.17e}|eps={:.17e}|n={state_grid}",
        p.a, p.sigma, p.d, p.ell, p.eps
    );
    const MAGIC: &[u8; 8] = b"LE2STAT1";
    if let Some(blob) = cache.lookup(&key) {
        if let Ok(mut rd) = cache::BlobReader::new(&blob, MAGIC) {
            let read = (|| -> anyhow::Result<LayeredStateEps> {
                let eps = rd.f64()?;
                let newton_residual = rd.f64()?;
                let residual_floor = rd.f64()?;
                let x_star = rd.f64()?;
                let x = rd.slice()?;
                let u = rd.slice()?;
                let v = rd.slice()?;
                let grid = le2_core::grid::Grid::from_sorted_nodes(x, p.ell);
                Ok(LayeredStateEps {
                    eps,
                    grid,
                    u,
                    v,
                    newton_residual,
                    residual_floor,
                    a: p.a,
                    sigma: p.sigma,
                    d: p.d,
                    ell: p.ell,
                    x_star,
                })
            })();
            if let Ok(st) = read {
                return Ok(st);
            }
        }
    }
    let profile = build_profile(p)?;
    let sched = geometric_schedule(0.08_f64.max(p.eps), p.eps, 0.7);
    let st = solve_layered_eps(p, &profile, &sched, state_grid)?;
    let mut w = cache::BlobWriter::new(MAGIC);
    w.f64(st.eps)
        .f64(st.newton_residual)
        .f64(st.residual_floor)
        .f64(st.x_star)
        .slice(&st.grid.x)
        .slice(&st.u)
        .slice(&st.v);
    cache.store(&key, &w.finish())?;
    Ok(st)
}

/// The response-sum validation battery: sign and identity checks plus the
/// symmetric-mode no-crossing confirmation. Prints one line per check.
fn validate_slep(r: &Resolved) -> anyhow::Result<()> {
    let cache = Cache::open(r.cache_dir.as_deref())?;
    let c = build_constants(&r.params, &r.opts, &cache)?;
    let slep = Slep::new(&c, r.params.tau)?;
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {name}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };
    let x000 = slep.x(XYArgs {
        lam_r: 0.0,
        lam_i2: 0.0,
        k2: 0.0,
    })?;
    check("X(0,0,0) > rho0*", x000 > c.rho0_star);
    let mut signs_ok = true;
    let mut identity_ok = true;
    let mut y_bound_ok = true;
    for i in 0..10 {
        for j in 0..10 {
            for m in 0..10 {
                let (lr, li2, k2) = (0.4 * i as f64, 0.8 * j as f64, 2.0 * m as f64);
                let h = 1e-5;
                let args = |lr: f64, li2: f64, k2: f64| XYArgs {
                    lam_r: lr,
                    lam_i2: li2.max(0.0),
                    k2,
                };
                signs_ok &= slep.x(args(lr, li2 + h, k2))? < slep.x(args(lr, li2 - h, k2))?;
                signs_ok &= slep.y(args(lr, li2 + h, k2))? < slep.y(args(lr, li2 - h, k2))?;
                signs_ok &= slep.y(args(lr + h, li2, k2))? < slep.y(args(lr - h, li2, k2))?;
                if i + j + m > 0 {
                    y_bound_ok &= slep.y(args(lr, li2, k2))? < c.tau_star;
                }
            }
        }
    }
    for k2 in [0.0, 1.0, 7.0, 40.0] {
        let h = 1e-6;
        let dx = (slep.x(XYArgs {
            lam_r: h,
            lam_i2: 0.0,
            k2,
        })? - slep.x(XYArgs {
            lam_r: -h,
            lam_i2: 0.0,
            k2,
        })?) / (2.0 * h);
        let y = slep.y(XYArgs {
            lam_r: 0.0,
            lam_i2: 0.0,
            k2,
        })?;
        identity_ok &= (dx + y).abs() < 1e-6 * y;
    }
    check("monotone responses (dX/dlamI2, dY/dlamI2, dY/dlamR < 0)", signs_ok);
    check("identity dX/dlamR(0,0,k2) = -Y(0,0,k2)", identity_ok);
    check("no-crossing bound Y < tau* off the origin", y_bound_ok);
    let alphas: Vec<f64> = (1..=24).map(|i| 0.002 * i as f64).collect();
    let lambdas: Vec<f64> = (1..=32).map(|i| 0.05 * (i * i) as f64).collect();
    let rep = slep.slep1_no_crossing_check(r.params.k1.max(0.1), &alphas, &lambdas);
    check("symmetric-mode delayed equation has no crossings", rep.is_ok());
    if !all_ok {
        anyhow::bail!("validation failed");
    }
    Ok(())
}

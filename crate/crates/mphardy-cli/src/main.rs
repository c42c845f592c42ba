//! Command-line entry point: wires a config file to the verification
//! batteries and writes CSV reports. Exit codes: 0 success, 1 a checked
//! inequality or verdict did not hold, 2 usage/config error.

use clap::{Args, Parser, Subcommand};
use mphardy::config::{FileConfig, ProblemConfig};
use mphardy::eig::EigOptions;
use mphardy::error::Error;
use mphardy::grid::Grid;
use mphardy::hardy::{lambda1_estimate, HardyConstants};
use mphardy::measure::WeightedGaussianMeasure;
use mphardy::operator::{DiscreteOperator, DriftScheme};
use mphardy::parabolic::{blowup_scan, default_u0, evolve, EvolveOptions, Verdict};
use mphardy::report::{fmt_f64, write_csv, RunManifest};
use mphardy::suite::{
    self, ims_checks, inequality_suite, measure_checks, optimality_scan, run_suite, CheckOutcome,
    Status, SuiteParams, SuiteReport,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "mphardy", version, about = "Weighted multipolar Hardy inequality and Ornstein–Uhlenbeck evolution checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Path to the TOML problem configuration.
    config: PathBuf,
    /// Directory for CSV reports.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Root seed for all randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the coupling c.
    #[arg(long)]
    c: Option<f64>,
    /// Override points per axis for the main grids.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Measure-level checks: normalization, radial moments, drift bound,
    /// weight equivalence.
    MeasureCheck(Common),
    /// Random-bump suite for the weighted inequality.
    VerifyHardy {
        #[command(flatten)]
        common: Common,
        /// Number of random test bumps.
        #[arg(long, default_value_t = 50)]
        bumps: usize,
    },
    /// Improved-constant suite at coupling c₀/n.
    Improved {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        bumps: usize,
    },
    /// Bottom of the spectrum of the discrete form.
    Lambda1 {
        #[command(flatten)]
        common: Common,
        /// Cutoff levels; raw potential when omitted.
        #[arg(long, value_delimiter = ',')]
        k_cuts: Vec<f64>,
    },
    /// Rayleigh-quotient divergence probe.
    Optimality {
        #[command(flatten)]
        common: Common,
        /// Probe exponents γ ∈ (1−N/2, 0).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        pole: usize,
    },
    /// Partition-of-unity property and chain checks.
    ImsCheck {
        #[command(flatten)]
        common: Common,
        /// Plateau fraction ρ ∈ (0,1).
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Radial profile (only "cosine" is implemented).
        #[arg(long, default_value = "cosine")]
        profile: String,
    },
    /// Evolve the cut-off problem and report norms and the fitted rate.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_cut: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Drift discretization: "weighted-form" (default) or "upwind".
        #[arg(long, default_value = "weighted-form")]
        scheme: String,
        /// Cutoff semantics: "coupling" for min(V, c·k) or "absolute"
        /// for min(V, k).
        #[arg(long, default_value = "coupling")]
        cutoff_scale: String,
    },
    /// Cutoff scan with the bounded/growing verdict.
    BlowupScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        k_cuts: Vec<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Verdict gate δ.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
    /// Full check battery in dependency order.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Run at reduced sizes (fast smoke scale).
        #[arg(long)]
        reduced: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

struct Loaded {
    cfg: ProblemConfig,
    params: SuiteParams,
    out_dir: PathBuf,
    seed: u64,
}

fn load(common: &Common) -> Result<Loaded, Error> {
    let fc = FileConfig::load(&common.config)?;
    let mut cfg = fc.problem()?;
    if let Some(c) = common.c {
        cfg.coupling = c;
    }
    cfg.ensure_valid()?;
    let mut params = SuiteParams::acceptance();
    params.apply_file(&fc)?;
    if let Some(m) = common.m {
        params.m_hardy = m;
        params.m_lambda = m;
        params.m_evolve = m;
        params.m_ims = m;
        params.m_quad = m;
    }
    if let Some(seed) = common.seed {
        params.seed = seed;
    }
    if let Some(r) = fc.grid.radius {
        params.lambda_radius = params.lambda_radius.min(r);
        params.scan_radius = params.scan_radius.min(r);
    }
    Ok(Loaded {
        cfg,
        seed: params.seed,
        params,
        out_dir: common.out_dir.clone(),
    })
}

fn print_outcomes(outcomes: &[CheckOutcome]) -> bool {
    let report = SuiteReport {
        outcomes: outcomes.to_vec(),
    };
    print!("{}", report.render());
    report.all_passed()
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.cmd {
        Command::MeasureCheck(common) => {
            let l = load(&common)?;
            let mc = measure_checks(&l.cfg, &l.params)?;
            write_csv(
                &l.out_dir.join("measure_check.csv"),
                &RunManifest::new(l.cfg.hash(), "measure-check", l.seed),
                &suite::MEASURE_CSV_HEADER,
                &mc.rows,
            )?;
            Ok(print_outcomes(&mc.outcomes))
        }
        Command::VerifyHardy { common, bumps } => {
            let l = load(&common)?;
            let mut params = l.params.clone();
            params.hardy_bumps = bumps;
            let hs = inequality_suite(&l.cfg, &params, false)?;
            write_csv(
                &l.out_dir.join("hardy_report.csv"),
                &RunManifest::new(l.cfg.hash(), "verify-hardy", l.seed),
                &suite::HARDY_CSV_HEADER,
                &hs.rows,
            )?;
            Ok(print_outcomes(&[hs.outcome]))
        }
        Command::Improved { common, bumps } => {
            let l = load(&common)?;
            let mut params = l.params.clone();
            params.hardy_bumps = bumps;
            let hs = inequality_suite(&l.cfg, &params, true)?;
            write_csv(
                &l.out_dir.join("hardy_report.csv"),
                &RunManifest::new(l.cfg.hash(), "improved", l.seed),
                &suite::HARDY_CSV_HEADER,
                &hs.rows,
            )?;
            Ok(print_outcomes(&[hs.outcome]))
        }
        Command::Lambda1 { common, k_cuts } => {
            let l = load(&common)?;
            let measure = WeightedGaussianMeasure::new(&l.cfg)?;
            let derived = measure.derived().clone();
            let grid = Arc::new(Grid::new(
                derived.barycenter.clone(),
                l.params.lambda_radius,
                l.params.m_lambda,
            )?);
            let opts = EigOptions::default();
            let mut rows = Vec::new();
            let mut outcomes = Vec::new();
            let levels: Vec<Option<f64>> = if k_cuts.is_empty() {
                vec![None]
            } else {
                k_cuts.iter().map(|&k| Some(k)).collect()
            };
            for k in levels {
                let t = std::time::Instant::now();
                let est = lambda1_estimate(&l.cfg, &measure, &grid, k, &opts)?;
                let label = k.map(|v| v.to_string()).unwrap_or_else(|| "raw".into());
                rows.push(vec![
                    label.clone(),
                    fmt_f64(est.lambda1),
                    fmt_f64(est.residual),
                ]);
                outcomes.push(CheckOutcome {
                    name: format!("lambda1[{label}]"),
                    status: Status::Pass,
                    detail: format!("λ₁ = {:.6}, residual {:.2e}", est.lambda1, est.residual),
                    seconds: t.elapsed().as_secs_f64(),
                });
            }
            write_csv(
                &l.out_dir.join("lambda1.csv"),
                &RunManifest::new(l.cfg.hash(), "lambda1", l.seed),
                &suite::LAMBDA_CSV_HEADER,
                &rows,
            )?;
            Ok(print_outcomes(&outcomes))
        }
        Command::Optimality {
            common,
            gammas,
            pole,
        } => {
            let l = load(&common)?;
            let mut params = l.params.clone();
            if !gammas.is_empty() {
                params.probe_gammas = gammas;
            }
            if pole >= l.cfg.pole_count() {
                return Err(Error::Input(format!("no pole with index {pole}")));
            }
            let os = optimality_scan(&l.cfg, &params)?;
            write_csv(
                &l.out_dir.join("optimality.csv"),
                &RunManifest::new(l.cfg.hash(), "optimality", l.seed),
                &suite::OPTIMALITY_CSV_HEADER,
                &os.rows,
            )?;
            // Standalone trend assertion: the bounds must strictly decrease.
            let decreasing = os.bounds.windows(2).all(|w| w[1] < w[0]);
            let outcome = CheckOutcome {
                name: "optimality-trend".into(),
                status: if decreasing { Status::Pass } else { Status::Fail },
                detail: format!("R_bound = {:.3?}", os.bounds),
                seconds: 0.0,
            };
            Ok(print_outcomes(&[outcome]))
        }
        Command::ImsCheck {
            common,
            rho,
            profile,
        } => {
            if profile != "cosine" {
                return Err(Error::Input(format!(
                    "unknown profile `{profile}` (only \"cosine\" is implemented)"
                )));
            }
            let l = load(&common)?;
            let mut params = l.params.clone();
            params.rho = rho;
            let ic = ims_checks(&l.cfg, &params)?;
            write_csv(
                &l.out_dir.join("ims_report.csv"),
                &RunManifest::new(l.cfg.hash(), "ims-check", l.seed),
                &suite::IMS_CSV_HEADER,
                &ic.rows,
            )?;
            Ok(print_outcomes(&ic.outcomes))
        }
        Command::Evolve {
            common,
            k_cut,
            dt,
            t_final,
            scheme,
            cutoff_scale,
        } => {
            let l = load(&common)?;
            let scheme = match scheme.as_str() {
                "weighted-form" => DriftScheme::WeightedForm,
                "upwind" => DriftScheme::Upwind,
                other => {
                    return Err(Error::Input(format!(
                        "unknown scheme `{other}` (weighted-form or upwind)"
                    )))
                }
            };
            let measure = WeightedGaussianMeasure::new(&l.cfg)?;
            let derived = measure.derived().clone();
            let grid = Arc::new(Grid::new(
                derived.barycenter.clone(),
                l.params.scan_radius,
                l.params.m_evolve,
            )?);
            let k = k_cut.or_else(|| (l.cfg.coupling > 0.0).then_some(64.0));
            let op = match (cutoff_scale.as_str(), k) {
                ("coupling", k) => {
                    DiscreteOperator::assemble(&l.cfg, &measure, grid.clone(), k, scheme)?
                }
                ("absolute", Some(k)) => DiscreteOperator::assemble_with(
                    &l.cfg,
                    &measure,
                    grid.clone(),
                    mphardy::operator::PotentialMode::CappedAbsolute(k),
                    scheme,
                )?,
                ("absolute", None) => {
                    return Err(Error::Input(
                        "an absolute cutoff needs an explicit --k-cut".into(),
                    ))
                }
                (other, _) => {
                    return Err(Error::Input(format!(
                        "unknown cutoff scale `{other}` (coupling or absolute)"
                    )))
                }
            };
            let dt = dt.unwrap_or(l.params.dt).min(0.9 * op.dt_threshold());
            let t_final = t_final.unwrap_or(l.params.t_final);
            let u0 = default_u0(&measure, &grid)?;
            let rep = evolve(&u0, &op, dt, t_final, &EvolveOptions::default())?;
            let rows: Vec<Vec<String>> = rep
                .times
                .iter()
                .zip(&rep.log_norms)
                .zip(&rep.min_values)
                .map(|((t, ln), mv)| vec![fmt_f64(*t), fmt_f64(ln.exp()), fmt_f64(*mv)])
                .collect();
            write_csv(
                &l.out_dir.join("evolution.csv"),
                &RunManifest::new(l.cfg.hash(), "evolve", l.seed),
                &suite::EVOLUTION_CSV_HEADER,
                &rows,
            )?;
            let mut pass = rep.positive;
            let mut detail = format!(
                "ω̂ = {:.4}, M̂ = {:.3}, positive: {}, verdict {}",
                rep.omega_hat, rep.m_hat, rep.positive, rep.verdict
            );
            if l.cfg.coupling <= derived.c0 && l.cfg.pole_count() >= 2 && l.cfg.coupling > 0.0 {
                let consts = HardyConstants::new(&l.cfg)?;
                let rate_ok = rep.omega_hat <= consts.k_const + 0.5;
                detail.push_str(&format!(", rate bound K+0.5 = {:.3}", consts.k_const + 0.5));
                pass &= rate_ok;
            }
            let outcome = CheckOutcome {
                name: "evolve".into(),
                status: if pass { Status::Pass } else { Status::Fail },
                detail,
                seconds: 0.0,
            };
            Ok(print_outcomes(&[outcome]))
        }
        Command::BlowupScan {
            common,
            k_cuts,
            dt,
            t_final,
            delta,
        } => {
            let l = load(&common)?;
            let measure = WeightedGaussianMeasure::new(&l.cfg)?;
            let derived = measure.derived().clone();
            let grid = Arc::new(Grid::new(
                derived.barycenter.clone(),
                l.params.scan_radius,
                l.params.m_evolve,
            )?);
            let u0 = default_u0(&measure, &grid)?;
            let cuts = if k_cuts.is_empty() {
                l.params.k_cuts_scan.clone()
            } else {
                k_cuts
            };
            let rep = blowup_scan(
                &u0,
                &l.cfg,
                &measure,
                &grid,
                &cuts,
                dt.unwrap_or(l.params.dt),
                t_final.unwrap_or(l.params.t_final),
                delta,
            )?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.k_cut.to_string(),
                        fmt_f64(r.final_log_norm.exp()),
                        fmt_f64(r.ln_ratio.exp()),
                        rep.verdict.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &l.out_dir.join("scan.csv"),
                &RunManifest::new(l.cfg.hash(), "blowup-scan", l.seed),
                &suite::SCAN_CSV_HEADER,
                &rows,
            )?;
            let expect = if l.cfg.coupling > derived.c0 {
                Verdict::Growing
            } else {
                Verdict::Bounded
            };
            let pass = rep.verdict == expect && rep.positive;
            let outcome = CheckOutcome {
                name: "blowup-scan".into(),
                status: if pass { Status::Pass } else { Status::Fail },
                detail: format!(
                    "verdict {} (expected {expect} for c = {} vs c₀ = {}), positive: {}",
                    rep.verdict, l.cfg.coupling, derived.c0, rep.positive
                ),
                seconds: 0.0,
            };
            Ok(print_outcomes(&[outcome]))
        }
        Command::Suite { common, reduced } => {
            let l = load(&common)?;
            let params = if reduced {
                let mut p = SuiteParams::reduced();
                p.seed = l.seed;
                p
            } else {
                l.params.clone()
            };
            let report = run_suite(&l.cfg, &params, &l.out_dir)?;
            print!("{}", report.render());
            Ok(report.all_passed())
        }
    }
}

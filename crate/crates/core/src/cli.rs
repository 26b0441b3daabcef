//! `skew-ifs <subcommand> [--config path] [--lambda f] [--seed n] [--out dir] [--workers k]`
//!
//! Exit codes: 0 ok, 1 verification failure, 2 config or DSL error, 3 numeric
//! or I/O error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bellman::{optimal_sequences, solve_value, subaction, Sign};
use crate::circle::{CirclePoint, TailPolicy};
use crate::config::{Overrides, RunConfig};
use crate::ergopt::{
    cycle_oracle, discount_limit_schedule, discounted_holonomy_defect, dual_functional,
    empirical_discounted, grid_for_lambda, integrate_payoff, support_check, truncation_for,
    MeasureKind, SupportMode, Trace, DEFAULT_TEST_ORDER,
};
use crate::error::{Error, Result};
use crate::io::{
    config_hash, write_cloud_csv, write_grid_csv, write_json, write_measure_csv,
    write_schedule_csv, write_sidecar, write_svg, Mark, Series, Sidecar,
};
use crate::skew::{
    lambda_cloud_chaos, lambda_cloud_enumerate, nonattractor_trace, orbit, CloudMeta, ControlWord,
    PointCloud, SymbolStream, CHAOS_X0, CHAOS_Y0,
};
use crate::srb::{sample_srb, Observable};
use crate::verify::{interpolation_slack, run_suite};

/// Largest grid the discount schedule may use.
pub const SCHEDULE_GRID_CAP: usize = 1 << 16;

#[derive(Debug, Parser)]
#[command(name = "skew-ifs", version, about = "Skew-product IFS on the cylinder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Caps the worker pool; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Forward orbits under constant and random controls, plus the orbit of 1/3.
    Orbit,
    /// Chaos-game and enumerated clouds of the invariant set.
    Attractor,
    /// Upper and lower boundary graphs.
    Boundary,
    /// SRB statistics.
    Srb,
    /// Optimal discounted measure and its certificates.
    Optimize,
    /// Discount-limit table.
    Limit,
    /// Property suite.
    Verify,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Syntax { .. }
        | Error::SeamDiscontinuity { .. }
        | Error::InteriorDiscontinuity { .. }
        | Error::Breakpoints { .. } => 2,
        _ => 3,
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    let ov = Overrides {
        lambda: cli.lambda,
        seed: cli.seed,
    };
    let cfg = RunConfig::resolve(cli.config.as_deref(), &ov)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &cfg, &cli.out))
}

fn dispatch(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<i32> {
    let ctx = Ctx {
        cfg,
        out,
        hash: config_hash(cfg)?,
    };
    match cmd {
        Command::Orbit => ctx.orbit(),
        Command::Attractor => ctx.attractor(),
        Command::Boundary => ctx.boundary(),
        Command::Srb => ctx.srb(),
        Command::Optimize => ctx.optimize(),
        Command::Limit => ctx.limit(),
        Command::Verify => ctx.verify(),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    hash: String,
}

impl Ctx<'_> {
    fn sidecar<T: Serialize>(&self, csv: &Path, artifact: &str, details: T) -> Result<()> {
        write_sidecar(
            csv,
            &Sidecar {
                artifact: artifact.into(),
                config_hash: self.hash.clone(),
                seed: self.cfg.seed,
                lambda: self.cfg.lambda,
                details: json!({ "config": self.cfg, "run": details }),
            },
        )
    }

    fn cloud(&self, name: &str, cloud: &PointCloud) -> Result<PathBuf> {
        let path = self.out.join(format!("{name}.csv"));
        write_cloud_csv(&path, cloud)?;
        self.sidecar(&path, name, json!({ "meta": cloud.meta, "error_radius": cloud.error_radius, "points": cloud.len() }))?;
        Ok(path)
    }

    fn orbit(&self) -> Result<i32> {
        let (cfg, f) = (self.cfg, self.cfg.family()?);
        let x0 = CirclePoint::from_f64_with_tail(CHAOS_X0, TailPolicy::Random(cfg.seed));
        let mut runs: Vec<(String, ControlWord)> = (0..f.len())
            .map(|k| (format!("orbit_const{k}"), ControlWord::constant(k, 0)))
            .collect();
        runs.push((
            "orbit_random".into(),
            ControlWord::random(cfg.seed, f.len()),
        ));
        let mut layers = Vec::new();
        for (name, ctrl) in &runs {
            let cloud = orbit(&x0, CHAOS_Y0, ctrl, cfg.n_points, 0, &f, cfg.lambda)?;
            let path = self.cloud(name, &cloud)?;
            println!("{name}: {} states -> {}", cloud.len(), path.display());
            layers.push(cloud.points);
        }

        // the x = 1/3 orbit from y0 = 1.4 under a random control, kept from step 500
        let c = SymbolStream::random(cfg.seed, 3, f.len());
        let trace = nonattractor_trace(1.4, &c, 2000, &f, cfg.lambda)?;
        let points: Vec<(f64, f64)> = trace[500..].iter().map(|(x, y)| (x.to_f64(), *y)).collect();
        let cloud = PointCloud {
            points,
            error_radius: 0.0,
            meta: CloudMeta {
                source: "orbit of 1/3".into(),
                lambda: cfg.lambda,
                seed: Some(cfg.seed),
                burn_in: Some(500),
                ..Default::default()
            },
        };
        let path = self.cloud("orbit_nonattractor", &cloud)?;
        println!(
            "orbit_nonattractor: {} states -> {}",
            cloud.len(),
            path.display()
        );

        let colors = ["#22c", "black", "#c22", "#2a2", "#a2a"];
        let series: Vec<Series> = layers
            .iter()
            .enumerate()
            .map(|(i, pts)| Series {
                points: pts,
                color: colors[i % colors.len()],
                mark: Mark::Dots,
            })
            .collect();
        write_svg(&self.out.join("orbit.svg"), "orbits", &series)?;
        write_svg(
            &self.out.join("orbit_nonattractor.svg"),
            "orbit of 1/3",
            &[Series {
                points: &cloud.points,
                color: "black",
                mark: Mark::Dots,
            }],
        )?;
        Ok(0)
    }

    fn attractor(&self) -> Result<i32> {
        let (cfg, f) = (self.cfg, self.cfg.family()?);
        let chaos = lambda_cloud_chaos(&f, cfg.lambda, cfg.n_points, cfg.burn_in, cfg.seed)?;
        let p1 = self.cloud("attractor_chaos", &chaos)?;
        let (depth, grid) = enumeration_size(f.len());
        let enumerated = lambda_cloud_enumerate(&f, cfg.lambda, depth, grid, ENUMERATION_POINTS)?;
        let p2 = self.cloud("attractor_enumerate", &enumerated)?;
        write_svg(
            &self.out.join("attractor.svg"),
            "invariant set",
            &[
                Series {
                    points: &enumerated.points,
                    color: "#9ab",
                    mark: Mark::Dots,
                },
                Series {
                    points: &chaos.points,
                    color: "black",
                    mark: Mark::Dots,
                },
            ],
        )?;
        println!(
            "attractor: {} chaos points -> {}",
            chaos.len(),
            p1.display()
        );
        println!(
            "attractor: {} enumerated points -> {}",
            enumerated.len(),
            p2.display()
        );
        Ok(0)
    }

    fn boundary(&self) -> Result<i32> {
        let (cfg, f) = (self.cfg, self.cfg.family()?);
        let mut lines = Vec::new();
        for (sign, name) in [(Sign::Max, "boundary_upper"), (Sign::Min, "boundary_lower")] {
            let v = solve_value(&f, cfg.lambda, sign, cfg.grid_n, cfg.tol)?;
            let path = self.out.join(format!("{name}.csv"));
            write_grid_csv(&path, &v.grid)?;
            self.sidecar(
                &path,
                name,
                json!({ "sign": sign, "grid_n": v.n(), "tol": v.tol, "iterations": v.iterations, "last_change": v.last_change }),
            )?;
            println!(
                "{name}: tol {:.3e}, {} sweeps -> {}",
                v.tol,
                v.iterations,
                path.display()
            );
            let pts: Vec<(f64, f64)> = (0..v.n())
                .map(|i| (v.grid.node(i), v.grid.values()[i]))
                .collect();
            lines.push(pts);
        }
        let cloud = lambda_cloud_chaos(&f, cfg.lambda, cfg.n_points, cfg.burn_in, cfg.seed)?;
        write_svg(
            &self.out.join("boundary.svg"),
            "boundaries",
            &[
                Series {
                    points: &cloud.points,
                    color: "#bbb",
                    mark: Mark::Dots,
                },
                Series {
                    points: &lines[0],
                    color: "#c22",
                    mark: Mark::Line,
                },
                Series {
                    points: &lines[1],
                    color: "#22c",
                    mark: Mark::Line,
                },
            ],
        )?;
        Ok(0)
    }

    fn srb(&self) -> Result<i32> {
        let (cfg, f) = (self.cfg, self.cfg.family()?);
        let n = cfg.n_points.max(100);
        let y = sample_srb(&f, cfg.lambda, &Observable::Y, n, cfg.tol, cfg.seed)?;
        let past = sample_srb(
            &f,
            cfg.lambda,
            &Observable::PotentialAtPast,
            n,
            cfg.tol,
            cfg.seed,
        )?;
        let path = self.out.join("srb.json");
        let report = json!({
            "config_hash": self.hash,
            "config": cfg,
            "estimates": [y, past],
            "time_average_of_payoff": (1.0 - cfg.lambda) * y.mean,
        });
        write_json(&path, &report)?;
        println!(
            "srb: E[y] = {:.10} +- {:.2e} -> {}",
            y.mean,
            y.std_error,
            path.display()
        );
        Ok(0)
    }

    fn optimize(&self) -> Result<i32> {
        let (cfg, f) = (self.cfg, self.cfg.family()?);
        let lambda = cfg.lambda;
        let v = solve_value(&f, lambda, Sign::Max, cfg.grid_n, cfg.tol)?;
        let (z, vmax) = v.argmax();
        let x0 = CirclePoint::from_f64(z);
        let meas_tol = 1e-10;
        let path = optimal_sequences(&v, &f, &x0, truncation_for(&f, lambda, meas_tol))?;
        let mu = empirical_discounted(&x0, &path.control(), lambda, meas_tol, &f)?;
        let nu = Trace::Dirac { z };
        let tail_mass = match mu.kind {
            MeasureKind::Discounted { tail_mass, .. } => tail_mass,
            _ => 0.0,
        };
        let report = json!({
            "m_lambda": (1.0 - lambda) * vmax,
            "argmax": z,
            "tol": v.tol,
            "integral_of_payoff": integrate_payoff(&mu, &f)?,
            "holonomy_defect": discounted_holonomy_defect(&mu, &nu, lambda, DEFAULT_TEST_ORDER)?,
            "tail_mass": tail_mass,
            "support_residual": support_check(&mu, &v.grid, &f, SupportMode::Discounted(lambda))?,
            "support_tolerance": 2.0 * v.tol + interpolation_slack(&v, &f),
            "dual_value": dual_functional(&v.grid, &f, lambda, &nu)?,
            "subaction_residual": subaction(&v, &f)?.residual,
            "oracle": cycle_oracle(&f, cfg.oracle_len)?,
        });
        let csv = self.out.join("measure.csv");
        write_measure_csv(&csv, &mu)?;
        self.sidecar(&csv, "discounted_measure", &report)?;
        write_json(&self.out.join("optimize.json"), &report)?;
        println!(
            "optimize: m_lambda = {:.12} (tol {:.2e}) -> {}",
            (1.0 - lambda) * vmax,
            v.tol,
            csv.display()
        );
        Ok(0)
    }

    fn limit(&self) -> Result<i32> {
        let (cfg, f) = (self.cfg, self.cfg.family()?);
        let cap = SCHEDULE_GRID_CAP.max(cfg.grid_n);
        let grids: Vec<usize> = cfg
            .lambda_schedule
            .iter()
            .map(|&l| grid_for_lambda(cfg.grid_n, l, cap))
            .collect();
        let rows = discount_limit_schedule(&f, &cfg.lambda_schedule, &grids, 1e-7, cfg.oracle_len)?;
        let path = self.out.join("limit.csv");
        write_schedule_csv(&path, &rows)?;
        self.sidecar(
            &path,
            "discount_limit",
            json!({ "rows": rows, "u_tol": 1e-7, "grid_cap": cap }),
        )?;
        for r in &rows {
            println!(
                "limit: lambda {:<6} umax {:.9} oracle {:.9} gap {:.3e} (N = {})",
                r.lambda, r.umax, r.oracle, r.gap, r.grid_n
            );
        }
        Ok(0)
    }

    fn verify(&self) -> Result<i32> {
        let checks = run_suite(self.cfg)?;
        for c in &checks {
            println!("{}", c.line());
        }
        Ok(if checks.iter().all(|c| c.passed) {
            0
        } else {
            1
        })
    }
}

/// Cap on the enumerated cloud written by `attractor`.
const ENUMERATION_POINTS: u128 = 1 << 18;

/// Largest `(depth, grid)` with `(2m)^depth grid` within [`ENUMERATION_POINTS`].
fn enumeration_size(m: usize) -> (usize, usize) {
    let grid = 256u128;
    let branches = 2 * m as u128;
    let mut depth = 0;
    while branches.pow(depth + 1) * grid <= ENUMERATION_POINTS && depth < 12 {
        depth += 1;
    }
    (depth as usize, grid as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_fits_budget() {
        assert_eq!(enumeration_size(2), (5, 256));
        assert_eq!(enumeration_size(1), (10, 256));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(
            exit_code(&Error::NonConvergence {
                iterations: 1,
                last_change: 1.0
            }),
            3
        );
        assert_eq!(run(["skew-ifs", "nonsense"]), 2);
    }
}

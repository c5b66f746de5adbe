use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use droplet::enum_oracle::{enumerate_distribution, site_magnetizations};
use droplet::experiment::{run_sweep, write_outputs, ExperimentConfig};
use droplet::lattice::Boundary;
use droplet::sampler::{estimate_bulk_parallel, ChainParams};
use droplet::variational::{minimize_phi, PhiParams};
use droplet::wulff::{
    axis_tension_closed_form, build_wulff, estimate_tau, SurfaceTension, TauSettings, OCTANT_DIRECTIONS,
};
use droplet::Error;

#[derive(Parser)]
#[command(name = "droplet", version, about = "Ising droplets at fixed magnetization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimizers of the droplet rate function over a range of deficits.
    Phi {
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, default_value_t = 0.0)]
        delta_from: f64,
        #[arg(long, default_value_t = 3.0)]
        delta_to: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Surface tension from dual-temperature transfer matrices.
    Tau {
        #[arg(long)]
        beta: f64,
        /// Strip widths as `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "10,12")]
        widths: String,
        /// Separations used in the decay fit, `a..b` inclusive.
        #[arg(long, default_value = "40..80")]
        lengths: String,
        /// Single lattice direction `k1,k2`; all octant directions when absent.
        #[arg(long)]
        direction: Option<String>,
    },
    /// Wulff shape for the estimated (or a constant) surface tension.
    Wulff {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Use the constant tension `tau0` instead of the transfer-matrix estimate.
        #[arg(long)]
        tau0: Option<f64>,
        #[arg(long, default_value = "10,12")]
        widths: String,
    },
    /// Spontaneous magnetization and susceptibility under plus boundary conditions.
    Bulk {
        #[arg(long)]
        beta: f64,
        #[arg(long = "L")]
        side: usize,
        #[arg(long, default_value_t = 20_000)]
        sweeps: usize,
        #[arg(long, default_value_t = 2000)]
        thermalization: usize,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Deficit sweep driven by a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write every retained grid under `<out>/snapshots`.
        #[arg(long)]
        spill: bool,
    },
    /// Exact law of a small plus-boundary box.
    Enumerate {
        #[arg(long = "L")]
        side: usize,
        #[arg(long)]
        beta: f64,
        /// Print per-site magnetizations conditioned on this total magnetization.
        #[arg(long)]
        target_m: Option<i64>,
    },
}

fn parse_list(s: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::InvalidArgument(format!("cannot parse `{s}` as a list or range"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn parse_direction(s: &str) -> Result<(i64, i64), Error> {
    let bad = || Error::InvalidArgument(format!("cannot parse `{s}` as k1,k2"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn tau_settings(widths: &str, lengths: Option<&str>) -> Result<TauSettings, Error> {
    let mut settings = TauSettings { widths: parse_list(widths)?, ..TauSettings::default() };
    if let Some(l) = lengths {
        let v = parse_list(l)?;
        settings.lengths = v[0]..=*v.last().expect("nonempty");
    }
    Ok(settings)
}

fn run(command: Command) -> Result<ExitCode, Error> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match command {
        Command::Phi { d, delta_from, delta_to, step } => {
            if !(step > 0.0) || delta_to < delta_from {
                return Err(Error::InvalidArgument("need step > 0 and delta_to >= delta_from".into()));
            }
            writeln!(out, "delta,d,phi_star,lambda_delta,lambda_plus")?;
            let n = ((delta_to - delta_from) / step + 1e-9).floor() as usize;
            for i in 0..=n {
                let delta = delta_from + i as f64 * step;
                let sol = minimize_phi(PhiParams::new(delta, d)?)?;
                let lp = sol.lambda_plus.map(|x| x.to_string()).unwrap_or_default();
                writeln!(out, "{delta},{d},{},{},{lp}", sol.phi_star, sol.lambda_delta)?;
            }
        }
        Command::Tau { beta, widths, lengths, direction } => {
            let settings = tau_settings(&widths, Some(&lengths))?;
            let dirs = match direction {
                Some(s) => vec![parse_direction(&s)?],
                None => OCTANT_DIRECTIONS.to_vec(),
            };
            writeln!(out, "k1,k2,theta,tau,error,axis_closed_form")?;
            for k in dirs {
                let est = estimate_tau(beta, k, &settings)?;
                let theta = (k.1 as f64).atan2(k.0 as f64);
                writeln!(out, "{},{},{theta},{},{},{}", k.0, k.1, est.tau, est.error, axis_tension_closed_form(beta))?;
            }
        }
        Command::Wulff { beta, n, tau0, widths } => {
            let tau = match tau0 {
                Some(t) => SurfaceTension::constant(t)?,
                None => SurfaceTension::dual_estimated(beta, &tau_settings(&widths, None)?)?,
            };
            let w = build_wulff(&tau, n)?;
            let doc = serde_json::json!({
                "beta": beta,
                "n_directions": n,
                "w1": w.w1,
                "area": w.area(),
                "diameter": w.diameter(),
                "tau_min": tau.tau_min(),
                "tau_max": tau.tau_max(),
                "vertices": w.vertices_json(),
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
        Command::Bulk { beta, side, sweeps, thermalization, chains, seed } => {
            let params = ChainParams { beta, sweeps, thermalization, sample_stride: 1, seed, target_m: None };
            let b = estimate_bulk_parallel(side, &params, chains)?;
            serde_json::to_writer_pretty(&mut out, &b)?;
            writeln!(out)?;
        }
        Command::Sweep { config, out: dir, spill } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let spill_dir = spill.then(|| dir.join("snapshots"));
            let result = run_sweep(&cfg, spill_dir.as_deref())?;
            write_outputs(&result, &dir)?;
            let aborted = result.summary.aborted_points();
            if aborted > 0 {
                eprintln!("{aborted} deficit point(s) aborted; see summary.json");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Enumerate { side, beta, target_m } => {
            let law = enumerate_distribution(side, beta, Boundary::Plus)?;
            match target_m {
                None => {
                    writeln!(out, "M,probability")?;
                    for (m, p) in &law.magnetization_pmf {
                        writeln!(out, "{m},{p}")?;
                    }
                }
                Some(m) => {
                    writeln!(out, "x,y,magnetization")?;
                    for (i, v) in site_magnetizations(&law, Some(m))?.iter().enumerate() {
                        writeln!(out, "{},{},{v}", i % side, i / side)?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

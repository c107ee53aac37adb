use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use flowroot::manifold::{sample_grid, Point};
use flowroot_cli::config::{Check, ScenarioConfig};
use flowroot_cli::export::{write_field_csv, write_trajectory_csv};
use flowroot_cli::runner::{run_scenario, trajectory, RunReport};
use flowroot_cli::scenarios::{builtin, list_scenarios};

#[derive(Parser)]
#[command(name = "flowroot", version, about = "Root systems to the identity: verification, flows and symmetry checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML) or built-in scenario name
    scenario: String,
    /// Grid resolution
    #[arg(long)]
    grid: Option<usize>,
    /// Grid seed
    #[arg(long)]
    seed: Option<u64>,
    /// Root-system depth
    #[arg(long)]
    depth: Option<u32>,
    /// Tolerance for conditions 2 to 5 (the lemma gets ten times this)
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory
    #[arg(long, env = "FLOWROOT_OUT_DIR", default_value = "flowroot-out")]
    out: PathBuf,
    /// Report path (default: <out>/<scenario>.json)
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every check of a scenario
    Run(Common),
    /// List built-in scenarios
    List,
    /// Run only the root-system conditions and the lemma
    Verify(Common),
    /// Extract the vector field and export it as CSV
    Extract(Common),
    /// Export a flow trajectory as CSV
    Integrate {
        #[command(flatten)]
        common: Common,
        /// Start point coordinates (default: first grid point)
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
    },
    /// Run only the intertwining and group-probe checks
    Symmetry(Common),
}

fn load(c: &Common) -> Result<ScenarioConfig> {
    let path = Path::new(&c.scenario);
    let mut cfg = if path.is_file() {
        ScenarioConfig::load(path)?
    } else if let Some(b) = builtin(&c.scenario) {
        b
    } else {
        bail!("{} is neither a file nor a built-in scenario (see `flowroot list`)", c.scenario);
    };
    if let Some(g) = c.grid {
        cfg.grid.resolution = g;
    }
    if let Some(s) = c.seed {
        cfg.grid.seed = s;
    }
    if let Some(d) = c.depth {
        cfg.source.set_depth(d);
        if let Some(p) = cfg.symmetry.as_mut().and_then(|s| s.partner.as_mut()) {
            p.set_depth(d);
        }
    }
    if let Some(t) = c.tol {
        cfg.tolerances.override_with(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(r: &RunReport) {
    for s in &r.stages {
        if let Some(e) = &s.error {
            println!("ERROR {}/{}: {e}", s.stage, s.subject);
        }
        for e in &s.entries {
            let verdict = if e.informational {
                "INFO"
            } else if e.passed {
                "PASS"
            } else {
                "FAIL"
            };
            println!(
                "{verdict} {}/{} {}: residual {:.3e} (tolerance {:.3e})",
                s.stage, s.subject, e.check, e.residual, e.tolerance
            );
        }
    }
    println!(
        "{}: {}",
        r.scenario,
        if r.passed { "passed".to_string() } else { format!("FAILED at {}", r.failed_stage.as_deref().unwrap_or("?")) }
    );
}

fn execute(cfg: &ScenarioConfig, c: &Common) -> Result<bool> {
    let (report, artifacts) = run_scenario(cfg);
    std::fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    let json = c.json.clone().unwrap_or_else(|| c.out.join(format!("{}.json", cfg.name)));
    std::fs::write(&json, report.to_json()).with_context(|| format!("writing {}", json.display()))?;
    print_summary(&report);
    println!("report: {}", json.display());
    if let Some(f) = &artifacts.field {
        let path = c.out.join(format!("{}-field.csv", cfg.name));
        write_field_csv(&path, f)?;
        println!("field: {}", path.display());
    }
    Ok(report.passed)
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => {
            for (name, desc) in list_scenarios() {
                println!("{name}\t{desc}");
            }
            Ok(true)
        }
        Cmd::Run(c) => execute(&load(&c)?, &c),
        Cmd::Verify(c) => {
            let mut cfg = load(&c)?;
            cfg.restrict(Check::is_condition);
            if cfg.checks.is_empty() {
                cfg.checks = Check::ALL.iter().copied().filter(|x| x.is_condition()).collect();
            }
            execute(&cfg, &c)
        }
        Cmd::Extract(c) => {
            let mut cfg = load(&c)?;
            if cfg.extract.is_none() {
                bail!("scenario {} has no [extract] section", cfg.name);
            }
            cfg.checks = vec![Check::Extract];
            execute(&cfg, &c)
        }
        Cmd::Symmetry(c) => {
            let mut cfg = load(&c)?;
            cfg.restrict(|x| matches!(x, Check::Intertwine | Check::GroupProbe));
            if cfg.checks.is_empty() {
                bail!("scenario {} requests no symmetry checks", cfg.name);
            }
            execute(&cfg, &c)
        }
        Cmd::Integrate {
            common,
            point,
            steps,
            t_max,
        } => {
            let cfg = load(&common)?;
            let p = match point {
                Some(coords) => Point::from_coords(cfg.manifold, &coords)?,
                None => sample_grid(cfg.manifold, cfg.grid.resolution, cfg.grid.seed)?[0].clone(),
            };
            let rows = trajectory(&cfg, &p, steps, t_max)?;
            std::fs::create_dir_all(&common.out)?;
            let path = common.out.join(format!("{}-trajectory.csv", cfg.name));
            write_trajectory_csv(&path, cfg.manifold, &rows)?;
            println!("trajectory: {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

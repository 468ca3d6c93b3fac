use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bvdamage::config::RunConfig;
use bvdamage::io::{self, CmdOutcome};
use bvdamage::Result;

#[derive(Parser)]
#[command(name = "bvdamage", version, about = "Viscous and vanishing-viscosity runs of a damage/plasticity model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single viscous run.
    Solve(Common),
    /// Vanishing-parameter ladder.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Ladder levels run concurrently.
        #[arg(long, default_value_t = 1)]
        level_parallelism: usize,
    },
    /// Viscous run with reparameterized curves and contact potentials.
    Reparam(Common),
    /// Discrete Gronwall checks on a data file or a seeded random suite.
    CheckGronwall {
        #[command(flatten)]
        common: Common,
        /// Instances separated by blank lines.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Brute-force oracle comparisons.
    Selftest(Common),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn run(cmd: &Cmd) -> Result<CmdOutcome> {
    match cmd {
        Cmd::Solve(c) => {
            let (cfg, out) = load(c)?;
            io::cmd_solve(&cfg, &out)
        }
        Cmd::Sweep { common, level_parallelism } => {
            let (cfg, out) = load(common)?;
            io::cmd_sweep(&cfg, &out, *level_parallelism)
        }
        Cmd::Reparam(c) => {
            let (cfg, out) = load(c)?;
            io::cmd_reparam(&cfg, &out)
        }
        Cmd::CheckGronwall { common, data, trials } => {
            let (cfg, out) = load(common)?;
            io::cmd_check_gronwall(data.as_deref(), cfg.seed, *trials, &out)
        }
        Cmd::Selftest(c) => {
            let (cfg, _) = load(c)?;
            io::cmd_selftest(cfg.seed, c.out.as_deref().or(cfg.out.as_deref()))
        }
    }
}

fn name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Solve(_) => "solve",
        Cmd::Sweep { .. } => "sweep",
        Cmd::Reparam(_) => "reparam",
        Cmd::CheckGronwall { .. } => "check-gronwall",
        Cmd::Selftest(_) => "selftest",
    }
}

fn out_dir(cmd: &Cmd) -> Option<&Path> {
    match cmd {
        Cmd::Solve(c) | Cmd::Reparam(c) | Cmd::Selftest(c) => c.out.as_deref(),
        Cmd::Sweep { common, .. } | Cmd::CheckGronwall { common, .. } => common.out.as_deref(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(o) => {
            // A closed stdout must not turn a finished run into a failure.
            let mut so = std::io::stdout().lock();
            let _ = writeln!(so, "{}", o.message);
            for f in &o.files {
                let _ = writeln!(so, "wrote {}", f.display());
            }
            if o.ok { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => {
            let rec = io::error_record(name(&cli.cmd), &e);
            eprint!("{rec}");
            if let Some(dir) = out_dir(&cli.cmd) {
                let _ = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("error.txt"), &rec));
            }
            ExitCode::from(2)
        }
    }
}

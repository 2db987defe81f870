use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dedsim::commands;
use dedsim::{load_config, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "dedsim", version, about = "Mode-matched filtering of fiber photon pairs: modes, visibility sweeps, filter design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the first two SFWM modes and the filter's fundamental mode.
    Modes(Common),
    /// Visibility, QBER and key fraction against pair probability.
    SweepPpair(Common),
    /// Weak-pump visibility against band detuning.
    SweepDetuning(Common),
    /// Optimize a super-Gaussian filter and export its profile.
    Optimize(Common),
    /// Solve Raman gain ratios from saturated-visibility targets.
    Calibrate(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file; omitted means all defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    type Cmd = fn(&RunConfig, &Path) -> Result<Vec<PathBuf>, CliError>;
    let (common, f): (&Common, Cmd) = match &cli.command {
        Command::Modes(c) => (c, commands::cmd_modes),
        Command::SweepPpair(c) => (c, commands::cmd_sweep_ppair),
        Command::SweepDetuning(c) => (c, commands::cmd_sweep_detuning),
        Command::Optimize(c) => (c, commands::cmd_optimize),
        Command::Calibrate(c) => (c, commands::cmd_calibrate),
    };
    let (cfg, out) = common.load()?;
    f(&cfg, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iim_core::bench::{plan, run, sweep, sweep_csv, ExperimentConfig, ExperimentKind, SweepAxis};
use iim_core::error::{Error, Result};
use iim_core::normal_fields::NormalKind;

#[derive(Parser)]
#[command(name = "iim-bench", version, about = "Run immersed interface experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run the cross product of the given axes and print a comparison table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated source pressures (wall offsets for channel runs).
        #[arg(long, value_delimiter = ',')]
        pressures: Vec<f64>,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',')]
        grids: Vec<usize>,
        /// Comma-separated normal methods.
        #[arg(long, value_delimiter = ',')]
        normals: Vec<NormalKind>,
    },
    /// Normal accuracy report on analytic shapes.
    Normals(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment kind, used when no config file is given.
    #[arg(long, short = 'e')]
    experiment: Option<ExperimentKind>,
    /// Override a config key, e.g. `--set controller.p_target=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and plan without running.
    #[arg(long)]
    dry_run: bool,
}

impl Common {
    fn load(&self, default: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::new(self.experiment.unwrap_or(default)),
        };
        if let (Some(kind), Some(_)) = (self.experiment, &self.config) {
            if kind != cfg.experiment {
                return Err(Error::Config(format!(
                    "--experiment {} conflicts with config file experiment {}",
                    kind.name(),
                    cfg.experiment.name()
                )));
            }
        }
        cfg = cfg.with_overrides(&self.sets)?;
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.display().to_string());
        }
        Ok(cfg)
    }

    fn dry_run(&self, cfg: &ExperimentConfig) -> Result<()> {
        let resolved = cfg.resolve()?;
        print!("{}", plan(&resolved));
        println!();
        print!("{}", toml::to_string(&resolved).map_err(|e| Error::Config(e.to_string()))?);
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.load(ExperimentKind::PressurizedCylinder)?;
            if common.dry_run {
                return common.dry_run(&cfg);
            }
            let art = run(&cfg)?;
            print!("{}", art.summary.to_toml()?);
        }
        Command::Normals(common) => {
            let mut cfg = common.load(ExperimentKind::NormalsReport)?;
            cfg.experiment = ExperimentKind::NormalsReport;
            if common.dry_run {
                return common.dry_run(&cfg);
            }
            let art = run(&cfg)?;
            print!("{}", art.normals_csv()?);
        }
        Command::Sweep {
            common,
            pressures,
            grids,
            normals,
        } => {
            let cfg = common.load(ExperimentKind::PressurizedCylinder)?;
            let mut axes = Vec::new();
            if !pressures.is_empty() {
                axes.push(SweepAxis::Pressure(pressures));
            }
            if !grids.is_empty() {
                axes.push(SweepAxis::Grid(grids));
            }
            if !normals.is_empty() {
                axes.push(SweepAxis::Normal(normals));
            }
            if common.dry_run {
                let runs: usize = axes.iter().map(SweepAxis::len).product();
                if axes.is_empty() {
                    return Err(Error::Config("sweep needs at least one of --pressures, --grids, --normals".into()));
                }
                println!("{runs} runs over {} axes", axes.len());
                return common.dry_run(&cfg);
            }
            let rows = sweep(&cfg, &axes)?;
            let table = sweep_csv(&rows)?;
            if let Some(dir) = &cfg.output.dir {
                std::fs::write(PathBuf::from(dir).join("sweep.csv"), &table)?;
            }
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

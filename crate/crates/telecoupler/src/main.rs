use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use telecoupler::{run, Experiment, ExperimentConfig, Format, SweepSpec};
use telecoupler_core::bounds::Constants;

#[derive(Parser, Debug)]
#[command(name = "telecoupler", version, about = "Telegraph-to-Brownian coupling experiments")]
struct Cli {
    experiment: Experiment,
    /// Diffusive ratio T*/L*^2.
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    /// Comma-separated, strictly increasing T* values.
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,1024")]
    tstars: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// `k1=..,k2=..,k3=..,C=..`; missing entries default to 1.
    #[arg(long)]
    constants: Option<Constants>,
    /// Walk lengths for kmt-gap.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = ExperimentConfig::new(cli.experiment, cli.out);
    cfg.sweep = SweepSpec {
        zeta: cli.zeta,
        t_stars: cli.tstars,
    };
    cfg.replicates = cli.replicates;
    cfg.seed = cli.seed;
    cfg.format = cli.format;
    if let Some(c) = cli.constants {
        cfg.constants = c;
    }
    if let Some(s) = cli.sizes {
        cfg.kmt_sizes = s;
    }
    match run(&cfg) {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{}", c.line());
            }
            for p in &summary.written {
                log::info!("wrote {}", p.display());
            }
            if summary.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

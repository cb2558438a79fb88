use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nf_isac::beamforming::BeamDesign;
use nf_isac::experiments::{
    default_antenna_grid, default_distance_grid, run_fig1_dof, run_fig2_correlation,
    run_fig3_beampattern, run_fig4_tradeoff, run_fig5_power, run_music, CsvFile,
};
use nf_isac::scenario::{load_scenario, Scenario};

/// Near-field ISAC experiment runners: DoF, correlation, beampattern,
/// rate/RCRB trade-off, power minimization and 2D-MUSIC, written as CSV.
#[derive(Parser)]
#[command(name = "nf-isac", version, about)]
struct Cli {
    /// Scenario JSON file; omitted = built-in default scenario.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory for CSV files (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// RNG seed override; omitted = the scenario's rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Point-to-point spatial DoF versus array separation.
    Dof,
    /// Two-user channel correlation versus antenna count.
    Correlation,
    /// Angle-range beampatterns per design model and sensing weight.
    Beampattern {
        /// Sensing weights to evaluate.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0])]
        rho: Vec<f64>,
    },
    /// Communication-rate / estimation-bound trade-off frontiers.
    Tradeoff {
        /// Target ranges in meters; omitted = the scenario target range.
        #[arg(long, value_delimiter = ',')]
        target_ranges: Option<Vec<f64>>,
    },
    /// Minimum transmit power versus SINR threshold.
    Power,
    /// 2D-MUSIC localization of the scenario users.
    Music {
        /// Echo SNR in dB.
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
        /// Number of snapshots; omitted = the scenario's sensing_snapshots.
        #[arg(long)]
        snapshots: Option<usize>,
    },
}

fn run(cli: Cli) -> nf_isac::Result<()> {
    let scenario = match &cli.scenario {
        Some(path) => load_scenario(path)?,
        None => Scenario::paper_default(),
    };
    let seed = cli.seed.unwrap_or(scenario.rng_seed);
    let files: Vec<CsvFile> = match cli.command {
        Command::Dof => {
            let geom = scenario.tx_geometry()?;
            vec![run_fig1_dof(&scenario, &default_distance_grid(&geom), seed)?]
        }
        Command::Correlation => {
            vec![run_fig2_correlation(&scenario, &default_antenna_grid(), seed)?]
        }
        Command::Beampattern { rho } => run_fig3_beampattern(
            &scenario,
            &rho,
            &[BeamDesign::Nfbf, BeamDesign::Ffbf],
            seed,
        )?,
        Command::Tradeoff { target_ranges } => {
            let ranges = target_ranges.unwrap_or_else(|| vec![scenario.target.range_m]);
            let rho_grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
            vec![run_fig4_tradeoff(&scenario, &rho_grid, &ranges, seed)?]
        }
        Command::Power => vec![run_fig5_power(&scenario, seed)?],
        Command::Music { snr_db, snapshots } => {
            let l = snapshots.unwrap_or(scenario.sensing_snapshots);
            run_music(&scenario, snr_db, l, seed)?
        }
    };
    std::fs::create_dir_all(&cli.out)?;
    for f in &files {
        let path = cli.out.join(&f.name);
        std::fs::write(&path, &f.content)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

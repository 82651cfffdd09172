use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use brw_core::config::{Command, Conventions, RunConfig, SignalPolarization};
use brw_core::run::{resolve_out_dir, run};
use brw_core::solver::Polarization;
use brw_core::units::FwhmConvention;

/// Photon-pair simulation for AlGaAs Bragg-reflection waveguides.
///
/// Outputs are CSV (data) and JSON (metadata); each file starts with a
/// metadata header holding the full configuration.
#[derive(Debug, Parser)]
#[command(name = "brwsim", version)]
struct Cli {
    /// graded, m_core, or a stack/parameter JSON file.
    #[arg(long, global = true, default_value = "graded")]
    preset: String,
    /// Output directory (default: $BRWSIM_OUT_DIR, else the working directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Reading of the pump FWHM: intensity or amplitude.
    #[arg(long, global = true, default_value = "intensity")]
    pump_fwhm_mode: FwhmConvention,
    /// Reading of the filter FWHM: intensity or amplitude.
    #[arg(long, global = true, default_value = "intensity")]
    filter_fwhm_mode: FwhmConvention,
    /// Polarization of the signal photon (te or tm).
    #[arg(long, global = true, default_value = "te")]
    signal_polarization: Polarization,
    #[command(subcommand)]
    action: Action,
}

#[derive(Debug, Subcommand)]
enum Action {
    #[command(flatten)]
    Compute(Command),
    /// Run a JSON config, or replay the config stored in an output file.
    Run {
        #[arg(long, conflicts_with = "from_output", required_unless_present = "from_output")]
        config: Option<PathBuf>,
        #[arg(long)]
        from_output: Option<PathBuf>,
    },
    /// Check a JSON config and list every violation.
    Validate { config: PathBuf },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_COMPUTE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_dir = resolve_out_dir(cli.out_dir.as_deref());
    let loaded = match cli.action {
        Action::Compute(command) => Ok(RunConfig {
            preset: cli.preset,
            command,
            conventions: Conventions {
                pump_fwhm_mode: cli.pump_fwhm_mode,
                filter_fwhm_mode: cli.filter_fwhm_mode,
                polarization_assignment: SignalPolarization(cli.signal_polarization),
            },
        }),
        Action::Run { config: Some(p), .. } => RunConfig::load(p),
        Action::Run { from_output: Some(p), .. } => RunConfig::from_output(p),
        Action::Run { .. } => unreachable!("clap requires one source"),
        Action::Validate { config } => {
            return match RunConfig::load(&config) {
                Ok(cfg) => report_violations(&cfg).map_or(ExitCode::SUCCESS, ExitCode::from),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            };
        }
    };
    let cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(code) = report_violations(&cfg) {
        return ExitCode::from(code);
    }
    match run(&cfg, &out_dir) {
        Ok(out) => {
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            println!("{}", serde_json::to_string_pretty(&out.results).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error in {}: {e}", cfg.command.name());
            ExitCode::from(EXIT_COMPUTE)
        }
    }
}

fn report_violations(cfg: &RunConfig) -> Option<u8> {
    let v = cfg.validate();
    if v.is_empty() {
        return None;
    }
    for x in &v {
        eprintln!("config error: {x}");
    }
    Some(EXIT_CONFIG)
}

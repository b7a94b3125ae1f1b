use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpest::config::{ScenarioConfig, ScenarioKind};
use cpest::error::CliError;
use cpest::experiments::{run_curve, run_dir, run_scenario, small_te_sweep, write_curve, write_json, write_run, write_sweep};
use cpest::verify::{run_verify, VerifyOptions};

/// Output root when neither `--out` nor the config sets one.
const OUT_ENV: &str = "CPEST_OUT";

#[derive(Parser, Debug)]
#[command(name = "cpest", version, about = "On-line estimation of wind-turbine power-coefficient parameters")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output root (default: $CPEST_OUT, then output.dir, then ./out)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Noise seed (replaces the config's `seed`)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Dotted config key and TOML value, e.g. integration.t_final=50
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate, estimate and write timeseries.csv, curve.csv, summary.json
    Run,
    /// Simulate, estimate and write only curve.csv
    Curve,
    /// Sweep constant generator torque and check the disturbance is O(Te)
    SweepTe {
        /// Te / J values (default: sweep.te_over_inertia)
        #[arg(long, value_delimiter = ',')]
        te: Option<Vec<f64>>,
    },
    /// Run the oracle suite
    Verify {
        /// Only checks whose name contains this
        #[arg(long)]
        filter: Option<String>,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true)]
        corrupt_adjugate: bool,
    },
    /// Print the full default configuration of a scenario
    PrintDefaults {
        #[arg(default_value = "S1")]
        scenario: String,
    },
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        ScenarioConfig::load(self.config.as_deref(), &overrides)
    }

    fn out_root(&self, cfg: &ScenarioConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match cli.command {
        Command::Run => {
            let cfg = common.load()?;
            let report = run_scenario(&cfg)?;
            let dir = run_dir(&common.out_root(&cfg), &cfg);
            write_run(&dir, &cfg, &report)?;
            let s = &report.summary;
            println!("scenario   {}", s.scenario);
            println!("output     {}", dir.display());
            println!("c_true     {:.5} {:.6} {:.5}", s.c_true[0], s.c_true[1], s.c_true[2]);
            println!("c_hat      {:.5} {:.6} {:.5}", s.c_hat[0], s.c_hat[1], s.c_hat[2]);
            println!("errors     {:.3e} {:.3e} {:.3e}", s.normalized_errors[0], s.normalized_errors[1], s.normalized_errors[2]);
            println!("z_star     {:.5} (true {:.5})", s.z_star_hat, s.z_star_true);
            println!("delta      {:.5}", s.delta_final);
            println!("lambda_max {:.4} -> {:.4}", s.lambda_max_f_initial, s.lambda_max_f_final);
            if let Some(e) = &s.abort {
                return Err(CliError::Numeric(e.clone()));
            }
        }
        Command::Curve => {
            let cfg = common.load()?;
            let report = run_scenario(&cfg)?;
            let dir = run_dir(&common.out_root(&cfg), &cfg);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("curve.csv");
            write_curve(&path, &run_curve(&report, &cfg))?;
            println!("{}", path.display());
            if let Some(e) = &report.summary.abort {
                return Err(CliError::Numeric(e.clone()));
            }
        }
        Command::SweepTe { te } => {
            let cfg = common.load()?;
            let te = te.unwrap_or_else(|| cfg.sweep.te_over_inertia.clone());
            if te.iter().any(|v| !(*v >= 0.0)) {
                return Err(CliError::Config("--te values must be >= 0".into()));
            }
            let report = small_te_sweep(&cfg, &te)?;
            let dir = common.out_root(&cfg).join(format!("sweep-te-seed{}", cfg.seed));
            std::fs::create_dir_all(&dir)?;
            write_sweep(&dir.join("sweep.csv"), &report)?;
            write_json(&dir.join("sweep.json"), &report)?;
            println!("{:>8} {:>12} {:>12} {:>12}", "Te/J", "sup|d|", "sup|d|/Te", "max err");
            for r in &report.rows {
                let ratio = r.sup_d_over_te.map_or("-".to_string(), |v| format!("{v:.4e}"));
                let worst = r.normalized_errors.iter().cloned().fold(0.0, f64::max);
                println!("{:>8} {:>12.4e} {:>12} {:>12.4e}", r.te_over_inertia, r.sup_d, ratio, worst);
            }
            println!("spread {:?} -> {}", report.ratio_spread, if report.pass { "PASS" } else { "FAIL" });
            if let Some(e) = report.rows.iter().find_map(|r| r.abort.clone()) {
                return Err(CliError::Numeric(e));
            }
            if !report.pass {
                return Err(CliError::Verification("sup|d| / |Te| varies by more than a factor of 2".into()));
            }
        }
        Command::Verify { filter, json, corrupt_adjugate } => {
            let seed = common.seed.unwrap_or(0);
            let report = run_verify(&VerifyOptions { seed, corrupt_adjugate, filter });
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                for c in &report.checks {
                    let status = if c.pass { "PASS" } else { "FAIL" };
                    let meta: Vec<String> = c.metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    println!(
                        "{status} {:<24} residual={:<10.3e} tol={:<8.1e} {:>9.1} ms  {}",
                        c.name,
                        c.max_residual,
                        c.tolerance,
                        c.runtime_ms,
                        meta.join(" ")
                    );
                }
                println!("{} checks in {:.1} s", report.checks.len(), report.runtime_ms / 1e3);
            }
            if !report.pass {
                return Err(CliError::Verification(report.failures().join(", ")));
            }
        }
        Command::PrintDefaults { scenario } => {
            let kind: ScenarioKind = scenario.parse().map_err(CliError::Config)?;
            print!("{}", ScenarioConfig::preset(kind).to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cpest: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

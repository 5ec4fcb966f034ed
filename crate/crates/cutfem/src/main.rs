use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cutfem::config::RunConfig;
use cutfem::driver::{
    run_check, run_convergence, run_single, run_translation_sweep, write_sweep_csv, DriverError,
    SweepOptions,
};

#[derive(Parser)]
#[command(name = "cutfem", about = "Cut finite element solver for semilinear elliptic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single refinement level and write its artifacts.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Refinement level (halves the base mesh size this many times).
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Run the convergence study over all configured levels.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Solve all seven levels instead of the six default ones.
        #[arg(long)]
        full: bool,
    },
    /// Run the built-in property suite and report pass/fail per check.
    Check,
}

/// Config file plus per-field overrides; every flag mirrors a config key.
#[derive(Args)]
struct CommonArgs {
    /// JSON config file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    gamma_d: Option<f64>,
    #[arg(long)]
    gamma_1: Option<f64>,
    #[arg(long)]
    base_h: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_parser = parse_point, value_name = "X,Y")]
    center: Option<[f64; 2]>,
    #[arg(long)]
    volume_degree: Option<u32>,
    #[arg(long)]
    interface_degree: Option<u32>,
    #[arg(long)]
    error_degree: Option<u32>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    newton_max_iter: Option<usize>,
    #[arg(long)]
    local_length_scales: bool,
    #[arg(long)]
    translate_reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<String>,
}

fn parse_point(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated numbers".to_string());
    }
    let x = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let y = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok([x, y])
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, DriverError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_json_file(path).map_err(DriverError::Config)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:ident) => {
                if let Some(value) = self.$field.clone() {
                    config.$field = value;
                }
            };
        }
        set!(problem);
        set!(p);
        set!(gamma_d);
        set!(gamma_1);
        set!(base_h);
        set!(levels);
        set!(center);
        set!(volume_degree);
        set!(interface_degree);
        set!(error_degree);
        set!(newton_tol);
        set!(newton_max_iter);
        set!(translate_reps);
        set!(seed);
        if self.local_length_scales {
            config.local_length_scales = true;
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = if dir.is_empty() {
                None
            } else {
                Some(dir.clone())
            };
        }
        Ok(config)
    }
}

fn cmd_solve(common: &CommonArgs, level: usize) -> Result<(), DriverError> {
    let config = common.resolve()?;
    if config.translate_reps > 0 {
        let runs = run_translation_sweep(
            &config,
            level,
            config.translate_reps,
            &SweepOptions::default(),
        )?;
        if let Some(dir) = &config.output_dir {
            std::fs::create_dir_all(dir)?;
            let file = std::fs::File::create(PathBuf::from(dir).join("sweep.csv"))?;
            write_sweep_csv(&runs, file)?;
        }
        let errs: Vec<f64> = runs.iter().map(|r| r.err_h1_full).collect();
        let (min, max) = errs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        println!(
            "sweep: {} repetitions at level {}, H1 error in [{:.5e}, {:.5e}] (ratio {:.3})",
            runs.len(),
            level,
            min,
            max,
            max / min
        );
        return Ok(());
    }
    let run = run_single(&config, level)?;
    println!(
        "level {}: h = {:.6e}, {} active elements, {} dofs, newton iterations = {}",
        run.level, run.h, run.n_active_elements, run.n_dofs, run.report.iterations
    );
    println!(
        "errors: H1 = {:.5e}, L2 = {:.5e}, star = {:.5e}",
        run.errors.err_h1_full(),
        run.errors.err_l2,
        run.errors.err_star
    );
    Ok(())
}

fn cmd_convergence(common: &CommonArgs, full: bool) -> Result<bool, DriverError> {
    let mut config = common.resolve()?;
    if full {
        config.levels = config.levels.max(7);
    }
    let outcome = run_convergence(&config)?;
    let mut stdout = std::io::stdout().lock();
    outcome.table.write_csv(&mut stdout)?;
    if let Some(path) = &outcome.table_path {
        eprintln!("table written to {}", path.display());
    }
    eprintln!(
        "mean EOC: H1 = {:.3}, L2 = {:.3}, star = {:.3} -> {}",
        outcome.table.mean_eoc_h1,
        outcome.table.mean_eoc_l2,
        outcome.table.mean_eoc_star,
        if outcome.within_bands {
            "within bands"
        } else {
            "outside bands"
        }
    );
    Ok(outcome.within_bands)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<u8, DriverError> = match &cli.command {
        Command::Solve { common, level } => cmd_solve(common, *level).map(|()| 0),
        Command::Convergence { common, full } => {
            cmd_convergence(common, *full).map(|ok| if ok { 0 } else { 4 })
        }
        Command::Check => {
            let results = run_check();
            let mut failed = false;
            for result in &results {
                println!(
                    "{} {} ({})",
                    if result.passed { "PASS" } else { "FAIL" },
                    result.name,
                    result.detail
                );
                failed |= !result.passed;
            }
            Ok(if failed { 2 } else { 0 })
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

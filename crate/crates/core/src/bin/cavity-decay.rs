use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cavity_decay::sweep::{
    run_sweep, verify, write_rows, OutputFormat, Overrides, Preset, SweepConfig, SweepError,
    VerifyOptions, Wavelength,
};

/// Decay rate and power loss of a dipole in an absorbing multilayer sphere.
#[derive(Parser)]
#[command(name = "cavity-decay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the frequency grid and write one row of rates per frequency.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration file (all keys optional).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base parameter set: fig2, fig3 or fig4 (default fig3).
    #[arg(long)]
    preset: Option<String>,
    /// Output file; `.json` selects JSON, anything else CSV. Default stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the verification battery after the sweep.
    #[arg(long)]
    verify: bool,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    #[arg(long)]
    eps_b: Option<f64>,
    /// Oscillator strength Ω in units of ω₀.
    #[arg(long)]
    strength: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps_ext: Option<f64>,
    /// Sphere radius R in units of c/ω₀.
    #[arg(long)]
    sphere_radius: Option<f64>,
    /// R_c as a fraction of the wavelength.
    #[arg(long)]
    onsager_fraction: Option<f64>,
    /// Explicit R_m (default: equal to R_c).
    #[arg(long)]
    rm: Option<f64>,
    #[arg(long, value_parser = ["vacuum", "medium"])]
    wavelength: Option<String>,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_count: Option<usize>,
    /// Comma-separated column subset.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Scale the closed-form coefficient inside the verification battery.
    #[arg(long, hide = true)]
    corrupt_closed_form: Option<f64>,
}

impl SweepArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            eps_b: self.eps_b,
            strength: self.strength,
            gamma: self.gamma,
            eps_ext: self.eps_ext,
            sphere_radius: self.sphere_radius,
            onsager_fraction: self.onsager_fraction,
            rm: self.rm,
            wavelength: self.wavelength.as_deref().map(|w| match w {
                "medium" => Wavelength::Medium,
                _ => Wavelength::Vacuum,
            }),
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            omega_count: self.omega_count,
            columns: self.columns.clone(),
            format: self.format.as_deref().map(|f| match f {
                "json" => OutputFormat::Json,
                _ => OutputFormat::Csv,
            }),
            verify: self.verify,
        }
    }

    fn config(&self) -> Result<SweepConfig, SweepError> {
        let base = self.preset.as_deref().map(Preset::from_name).transpose()?;
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::from_file(path, base)?,
            None => SweepConfig::preset(base.unwrap_or(Preset::Fig3)),
        };
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }

    fn output_format(&self, cfg: &SweepConfig) -> OutputFormat {
        if self.format.is_some() {
            return cfg.format;
        }
        match self
            .out
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| e.to_str())
        {
            Some("json") => OutputFormat::Json,
            Some("csv") => OutputFormat::Csv,
            _ => cfg.format,
        }
    }
}

fn sweep(args: &SweepArgs) -> Result<ExitCode, SweepError> {
    let cfg = args.config()?;
    let rows = run_sweep(&cfg)?;
    let format = args.output_format(&cfg);
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_rows(&rows, &cfg, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_rows(&rows, &cfg, format, &mut w)?;
            w.flush()?;
        }
    }
    if !cfg.verify {
        return Ok(ExitCode::SUCCESS);
    }
    let options = VerifyOptions {
        corrupt_closed_form: args.corrupt_closed_form,
    };
    let report = verify(&cfg, &options)?;
    for check in &report.checks {
        eprintln!("{check}");
    }
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for check in report.failures() {
            eprintln!("verification failed: {}", check.name);
        }
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Sweep(args) => match sweep(&args) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}

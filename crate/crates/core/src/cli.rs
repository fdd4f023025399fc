//! `sas` command line: simulate, migrate, enhance, psf, info, pgm.
//!
//! Exit status: 0 success, 1 usage or inconsistent settings, 2 bad input
//! data, 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backprojection::psf_metrics;
use crate::config::{
    beam_focusing_steps, AngleVariant, EnhanceConfig, MigrationConfig, PhiVariant, SoundSpeed,
};
use crate::enhance::{detect_and_normalize, enhance};
use crate::error::{Error, Result};
use crate::forward::synthesize_sas;
use crate::grid::Grid2D;
use crate::io;
use crate::migrate::migrate;
use crate::record::{SasRecord, Sampling};
use crate::scene::{Envelope, PulseSpec};

#[derive(Debug, Parser)]
#[command(name = "sas", version, about = "Synthetic aperture sonar imaging toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a record from a scatterer table.
    Simulate(SimulateArgs),
    /// Migrate a record into an image.
    Migrate(MigrateArgs),
    /// Variational enhancement of an image.
    Enhance(EnhanceArgs),
    /// Peak and -3 dB widths near a point, as JSON.
    Psf(PsfArgs),
    /// Print the header of a record or field file as JSON.
    Info(InfoArgs),
    /// Export a field as 16-bit PGM.
    Pgm(PgmArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EnvelopeArg {
    Gaussian,
    RaisedCosine,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// CSV of `x,z,amplitude`.
    #[arg(long)]
    pub scatterers: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub n_traces: usize,
    #[arg(long, default_value_t = 512)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dx_track: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub c: f64,
    /// Carrier frequency in Hz.
    #[arg(long, default_value_t = 12e3)]
    pub freq: f64,
    #[arg(long, value_enum, default_value_t = EnvelopeArg::Gaussian)]
    pub envelope: EnvelopeArg,
    /// Envelope duration in seconds (default: two carrier periods).
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(name = "15")]
    Deg15,
    #[value(name = "45")]
    Deg45,
    #[value(name = "65")]
    Deg65,
    Custom,
}

#[derive(Debug, Args)]
pub struct MigrateArgs {
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Deg15)]
    pub variant: VariantArg,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Focusing rows (default: all output rows).
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Choose M to span this beam width (radians) instead.
    #[arg(long, conflicts_with = "m")]
    pub beam_width: Option<f64>,
    /// Depth step (default: c dt / 2).
    #[arg(long)]
    pub dz: Option<f64>,
    /// Output grid `nx,nz,dx,dz,x0,z0` (default: one column per trace,
    /// rows of `dz` down to the deepest recorded range).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid2D>,
    /// Sound speed (default: the record's).
    #[arg(long)]
    pub c: Option<f64>,
    /// CSV of `z_top,c`; overrides `--c`.
    #[arg(long)]
    pub layers: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhiArg {
    Gaussian,
    Bv,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = PhiArg::Bv)]
    pub phi: PhiArg,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    /// Relative stationarity residual to stop at.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub linear_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Skip envelope detection and scaling to [0, 1].
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct PsfArgs {
    pub input: PathBuf,
    /// Search center `x,z` in meters.
    #[arg(long, value_parser = parse_pair)]
    pub near: (f64, f64),
    /// Search radius in meters (default: 5 pixels).
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct PgmArgs {
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Fixed gray range `lo,hi` (default: field min and max).
    #[arg(long, value_parser = parse_pair)]
    pub range: Option<(f64, f64)>,
    /// Export the magnitude.
    #[arg(long)]
    pub abs: bool,
}

fn parse_numbers(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = parse_numbers(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_grid(s: &str) -> std::result::Result<Grid2D, String> {
    let v = parse_numbers(s, 6)?;
    let count = |x: f64, name: &str| {
        if x.fract() == 0.0 && x >= 0.0 {
            Ok(x as usize)
        } else {
            Err(format!("{name} must be a whole number, got {x}"))
        }
    };
    Grid2D::new(count(v[0], "nx")?, count(v[1], "nz")?, v[2], v[3], v[4], v[5])
        .map_err(|e| e.to_string())
}

/// Resolves migrate flags against the record. Returns the configuration and
/// any warnings about ignored flags.
pub fn migration_config(
    args: &MigrateArgs,
    record: &SasRecord<f64>,
) -> Result<(MigrationConfig, Vec<String>)> {
    let mut warnings = Vec::new();
    let variant = match args.variant {
        VariantArg::Custom => AngleVariant::Custom {
            alpha: args
                .alpha
                .ok_or_else(|| Error::Config("--variant custom needs --alpha".into()))?,
            beta: args
                .beta
                .ok_or_else(|| Error::Config("--variant custom needs --beta".into()))?,
        },
        named => {
            let v = match named {
                VariantArg::Deg15 => AngleVariant::Deg15,
                VariantArg::Deg45 => AngleVariant::Deg45,
                _ => AngleVariant::Deg65,
            };
            if args.alpha.is_some() || args.beta.is_some() {
                let (a, b) = v.coefficients();
                warnings.push(format!(
                    "--alpha/--beta ignored: variant {} fixes (alpha, beta) = ({a}, {b})",
                    match named {
                        VariantArg::Deg15 => "15",
                        VariantArg::Deg45 => "45",
                        _ => "65",
                    }
                ));
            }
            v
        }
    };
    let sound_speed = match &args.layers {
        Some(path) => {
            if args.c.is_some() {
                warnings.push("--c ignored: --layers given".into());
            }
            SoundSpeed::Layered(io::read_layers(File::open(path)?)?)
        }
        None => SoundSpeed::Constant(args.c.unwrap_or(record.c)),
    };
    sound_speed.validate()?;
    let c_ref = sound_speed.reference();
    let dz = args.dz.unwrap_or(c_ref * record.dt / 2.0);
    if !(dz.is_finite() && dz > 0.0) {
        return Err(Error::Config(format!("--dz must be positive, got {dz}")));
    }
    let output_grid = match args.grid {
        Some(g) => g,
        None => {
            let z_max = c_ref * record.sampling().t_end() / 2.0;
            let nz = ((z_max / dz).floor() as usize + 1).max(1);
            Grid2D::new(record.n_traces, nz, record.dx_track, dz, 0.0, 0.0)?
        }
    };
    let focusing_steps = match (args.m, args.beam_width) {
        (Some(m), _) => m,
        (None, Some(theta)) => {
            let z_max = output_grid.z(output_grid.nz - 1).max(dz);
            beam_focusing_steps(theta, z_max, record.dx_track, output_grid.nz)
        }
        (None, None) => output_grid.nz,
    };
    let config = MigrationConfig {
        variant,
        focusing_steps,
        sound_speed,
        dz,
        output_grid,
    };
    config.validate()?;
    Ok((config, warnings))
}

pub fn enhance_config(args: &EnhanceArgs) -> Result<EnhanceConfig> {
    let cfg = EnhanceConfig {
        beta: args.beta,
        variant: match args.phi {
            PhiArg::Gaussian => PhiVariant::Gaussian,
            PhiArg::Bv => PhiVariant::Bv,
            PhiArg::Hybrid => PhiVariant::Hybrid { delta: args.delta },
        },
        epsilon: args.eps,
        max_iters: args.max_iters,
        linear_tol: args.linear_tol,
        fixedpoint_tol: args.tol,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => {
            let scatterers = io::read_scatterers(File::open(&a.scatterers)?)?;
            let pulse = PulseSpec::new(
                a.freq,
                match a.envelope {
                    EnvelopeArg::Gaussian => Envelope::Gaussian,
                    EnvelopeArg::RaisedCosine => Envelope::RaisedCosine,
                },
                a.duration.unwrap_or(2.0 / a.freq),
            )?;
            let sampling = Sampling {
                n_traces: a.n_traces,
                n_samples: a.n_samples,
                dt: a.dt,
                dx_track: a.dx_track,
                t0: a.t0,
                c: a.c,
            };
            let record = synthesize_sas::<f64>(&scatterers, sampling, &pulse)?;
            io::write_sas_file(&a.out, &record)
        }
        Command::Migrate(a) => {
            let record = io::read_sas_file(&a.input)?;
            let (config, warnings) = migration_config(a, &record)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let image = migrate(&record, &config)?;
            io::write_field_file(&a.out, &image)
        }
        Command::Enhance(a) => {
            let cfg = enhance_config(a)?;
            let field = io::read_field_file(&a.input)?;
            let input = if a.raw { field } else { detect_and_normalize(&field) };
            let report = enhance(&input, &cfg)?;
            if !report.converged {
                eprintln!(
                    "warning: stopped after {} iterations at relative residual {:e}",
                    report.iterations, report.relative_residual
                );
            }
            io::write_field_file(&a.out, &report.image)
        }
        Command::Psf(a) => {
            let field = io::read_field_file(&a.input)?;
            let g = field.grid();
            let radius = a.radius.unwrap_or(5.0 * g.dx.max(g.dz));
            let report = psf_metrics(&field, a.near, radius)?;
            serde_json::to_writer_pretty(&mut *stdout, &report).map_err(std::io::Error::from)?;
            writeln!(stdout)?;
            Ok(())
        }
        Command::Info(a) => {
            let header = io::read_header(&mut BufReader::new(File::open(&a.input)?))?;
            serde_json::to_writer_pretty(&mut *stdout, &header).map_err(std::io::Error::from)?;
            writeln!(stdout)?;
            Ok(())
        }
        Command::Pgm(a) => {
            let mut field = io::read_field_file(&a.input)?;
            if a.abs {
                field = field.magnitude();
            }
            let norm = match a.range {
                Some((lo, hi)) => io::Normalization::Fixed(lo, hi),
                None => io::Normalization::MinMax,
            };
            let mut w = create(&a.out)?;
            io::export_pgm(&mut w, &field, norm)?;
            w.flush()?;
            Ok(())
        }
    }
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_numerical() => 3,
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli, &mut std::io::stdout().lock())),
            Err(e) => Err(Error::Config(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(&cli, &mut std::io::stdout().lock()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

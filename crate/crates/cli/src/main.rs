use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use eulerseg::calibration::{sample_volumes, solve_coefficients};
use eulerseg::chimap::ChiMapParams;
use eulerseg::io::{
    encode_pgm, i32_payload, max_normalized_levels, read_bvol, read_pgm, write_bvol, Bvol, BvolPayload,
};
use eulerseg::octet::fraction_string;
use eulerseg::perf::{run_sweep, to_csv, SweepConfig};
use eulerseg::report::{write_metrics, MetricsReport};
use eulerseg::tvd::threshold_mask_normalized;
use eulerseg::{
    betti, chi, chi_map, noise_mask, sample_threshold, violation_map, BinaryGrid, ChiMapMode, Error, OctetClassTable,
    ViolationMap, DEFAULT_PATCH,
};

#[derive(Parser)]
#[command(name = "eulerseg", version, about = "Exact topology measures for binary segmentation grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Euler characteristic.
    Chi {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Write the χ-map as an int32 BVOL holding χ times the pattern scale.
    ChiMap {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the Betti vector.
    Betti {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Write the JSON metrics report comparing a prediction with ground truth.
    Metrics {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Write the violation map as an int32 BVOL plus a normalized raster.
    Violation {
        pred: PathBuf,
        gt: PathBuf,
        /// BVOL output; the raster goes next to it (.pgm for 2D, f32 .norm.bvol for 3D).
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Replace high-violation cells of the prediction with sigmoid Gaussian noise.
    Mask {
        pred: PathBuf,
        violation: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Cut on the max-normalized violation map; drawn from --seed when absent.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Solve the 3D octet-class coefficients from sampled volumes.
    #[command(name = "derive-3d-coefficients")]
    Derive3d {
        #[arg(long, default_value_t = 600)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time chi and chi-map across a size sweep and write CSV.
    Bench {
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PATCH)]
        patch: usize,
        /// Largest 2D extent; the 3D sweep is capped at a quarter of it, at least 16.
        #[arg(long)]
        size: Option<usize>,
    },
}

#[derive(Args)]
struct MapArgs {
    #[arg(long, default_value_t = DEFAULT_PATCH)]
    patch: usize,
    /// Defaults to the patch size in tiled mode and 1 in dense mode.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Tiled)]
    mode: Mode,
}

impl MapArgs {
    fn params(&self) -> Result<ChiMapParams, Failure> {
        let mode = match self.mode {
            Mode::Tiled => ChiMapMode::Tiled,
            Mode::Dense => ChiMapMode::Dense,
        };
        ChiMapParams::new(self.patch, self.stride, mode).map_err(Failure::core)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Tiled,
    Dense,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pgm,
    Bvol,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn format(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn core(err: Error) -> Self {
        let code = match err {
            Error::InvalidParameter(_) => 1,
            Error::InternalConsistency(_) | Error::Calibration(_) => 3,
            _ => 2,
        };
        Self { code, message: err.to_string() }
    }

    fn at(path: &Path, err: Error) -> Self {
        let mut f = Self::core(err);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("eulerseg: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Chi { input, format } => {
            let grid = load_grid(&input, format)?;
            println!("{}", chi(&grid).map_err(Failure::core)?);
        }
        Command::ChiMap { input, output, map, format } => {
            let params = map.params()?;
            let grid = load_grid(&input, format)?;
            let m = chi_map(&grid, &params).map_err(Failure::core)?;
            let payload = i32_payload(m.scaled.iter().copied()).map_err(Failure::core)?;
            let vol = Bvol::new(m.dims.clone(), payload).map_err(Failure::core)?;
            save(&output, &write_bvol(&vol))?;
        }
        Command::Betti { input, format } => {
            let grid = load_grid(&input, format)?;
            println!("{}", betti(&grid).map_err(Failure::core)?);
        }
        Command::Metrics { pred, gt, output, map, format } => {
            let params = map.params()?;
            let (p, g) = (load_grid(&pred, format)?, load_grid(&gt, format)?);
            let report = MetricsReport::compute(&p, &g, &params).map_err(Failure::core)?;
            emit(output.as_deref(), &write_metrics(&report))?;
        }
        Command::Violation { pred, gt, output, map, format } => {
            let params = map.params()?;
            let (p, g) = (load_grid(&pred, format)?, load_grid(&gt, format)?);
            let v = violation_map(&p, &g, &params).map_err(Failure::core)?;
            write_violation(&output, &v)?;
        }
        Command::Mask { pred, violation, output, threshold, seed, format } => {
            let t = threshold.unwrap_or_else(|| sample_threshold(seed));
            if !t.is_finite() {
                return Err(Failure::usage(format!("threshold must be finite, got {t}")));
            }
            let p = load_grid(&pred, format)?;
            let v = load_violation(&violation)?;
            let mask = threshold_mask_normalized(&v, t).map_err(Failure::core)?;
            let masked = noise_mask(&p, &mask, seed).map_err(Failure::core)?;
            let vol = Bvol::new(masked.dims, BvolPayload::F32(masked.values)).map_err(Failure::core)?;
            save(&output, &write_bvol(&vol))?;
        }
        Command::Derive3d { samples, size, seed, output } => {
            let set = sample_volumes(samples, size, seed).map_err(Failure::core)?;
            let cal = solve_coefficients(&set).map_err(Failure::core)?;
            let table = OctetClassTable::get();
            let classes: Vec<_> = (0..table.representative.len())
                .map(|c| {
                    json!({
                        "class": c,
                        "representative": table.representative[c],
                        "orbit_size": table.orbit_size[c],
                        "coefficient": fraction_string(&cal.coefficients.weights[c]),
                    })
                })
                .collect();
            let doc = json!({
                "samples": samples,
                "size": size,
                "seed": seed,
                "rank": cal.rank,
                "unique": cal.unique,
                "nonzero": cal.coefficients.nonzero_count(),
                "classes": classes,
            });
            let mut text = serde_json::to_vec_pretty(&doc).expect("json values serialize");
            text.push(b'\n');
            emit(output.as_deref(), &text)?;
        }
        Command::Bench { output, seed, patch, size } => {
            let mut cfg = SweepConfig { seed, patch, ..SweepConfig::default() };
            if let Some(max) = size {
                cfg.extents_2d.retain(|&e| e <= max);
                let max3 = (max / 4).max(16);
                cfg.extents_3d.retain(|&e| e <= max3);
            }
            let rows = run_sweep(&cfg).map_err(Failure::core)?;
            emit(output.as_deref(), to_csv(&rows).as_bytes())?;
        }
    }
    Ok(())
}

fn resolve_format(path: &Path, format: Option<Format>) -> Result<Format, Failure> {
    if let Some(f) = format {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("pgm") => Ok(Format::Pgm),
        Some("bvol") => Ok(Format::Bvol),
        _ => Err(Failure::usage(format!("{}: unknown file extension, pass --format pgm|bvol", path.display()))),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::format(format!("{}: {e}", path.display())))
}

fn load_grid(path: &Path, format: Option<Format>) -> Result<BinaryGrid, Failure> {
    let format = resolve_format(path, format)?;
    let bytes = read(path)?;
    match format {
        Format::Pgm => read_pgm(&bytes),
        Format::Bvol => read_bvol(&bytes).and_then(|v| v.to_grid()),
    }
    .map_err(|e| Failure::at(path, e))
}

/// Violation maps come back as written by `violation`: nonnegative integers
/// in scaled units. Only relative values matter for normalized thresholds.
fn load_violation(path: &Path) -> Result<ViolationMap, Failure> {
    let vol = read_bvol(&read(path)?).map_err(|e| Failure::at(path, e))?;
    let bad = |what: &str| Failure::format(format!("{}: violation map {what}", path.display()));
    let scaled: Vec<u64> = match &vol.payload {
        BvolPayload::I32(v) => v.iter().map(|&x| u64::try_from(x).map_err(|_| bad("has negative values"))).collect(),
        BvolPayload::U8(v) => Ok(v.iter().map(|&x| x as u64).collect()),
        _ => Err(bad("must be an int32 or uint8 volume")),
    }?;
    Ok(ViolationMap { dims: vol.dims, scale: 1, scaled })
}

fn write_violation(output: &Path, v: &ViolationMap) -> Result<(), Failure> {
    let payload = i32_payload(v.scaled.iter().map(|&x| x as i64)).map_err(Failure::core)?;
    let vol = Bvol::new(v.dims.clone(), payload).map_err(Failure::core)?;
    save(output, &write_bvol(&vol))?;
    if v.dims.len() == 2 {
        let levels = max_normalized_levels(&v.scaled);
        save(&output.with_extension("pgm"), &encode_pgm(v.dims[0], v.dims[1], &levels))?;
    } else {
        let norm = v.normalized().into_iter().map(|x| x as f32).collect();
        let raster = Bvol::new(v.dims.clone(), BvolPayload::F32(norm)).map_err(Failure::core)?;
        save(&output.with_extension("norm.bvol"), &write_bvol(&raster))?;
    }
    Ok(())
}

fn save(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::format(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => save(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| Failure::format(format!("stdout: {e}"))),
    }
}

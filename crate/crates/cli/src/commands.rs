//! Subcommand implementations, callable without going through `main`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lf_core::color::{lf_rgb_to_ycbcr, lf_ycbcr_to_rgb};
use lf_core::{bicubic_resample_sai, lf_metrics, load_lf, luma, save_lf, LfDims, LightField4D, PlaneKind, Scale};
use mdfn::{count_parameters, Mdfn, MdfnConfig};
use mdfn_train::dataset::cache_dir_from_env;
use mdfn_train::synthetic::synthetic_lf;
use mdfn_train::{ingest_dataset, RunSummary, TrainConfig, Trainer};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::render::{filter_grid, prepare, save_image};
use crate::report::{MetricRow, MetricsReport};

#[derive(Debug, Parser)]
#[command(name = "lfmdfn", version, about = "Light field super-resolution with dynamic micro-lens filters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a key=value config file.
    Train(TrainArgs),
    /// Score super-resolution on a dataset against its ground truth.
    Eval(EvalArgs),
    /// Super-resolve one light field.
    Sr(SrArgs),
    /// Render the dynamic filters generated for one LR pixel.
    Filters(FiltersArgs),
    /// Export an epipolar-plane image.
    Epi(EpiArgs),
    /// Print the layer-by-layer parameter count of a model config.
    Params(ParamsArgs),
    /// Write procedurally generated light fields (layered scenes).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Training config; optional when resuming from --checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `dataset_root`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory for the loss log and checkpoints.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Overrides the upsampling factor `r`.
    #[arg(long)]
    pub scale: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write 0 in the elapsed_ms column so logs are reproducible.
    #[arg(long)]
    pub deterministic: bool,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Model checkpoint; not needed with --oracle or --bicubic.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub scale: Option<usize>,
    /// Report file; the format follows --format.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
    /// Score the ground truth against itself (pipeline check).
    #[arg(long, conflicts_with = "bicubic")]
    pub oracle: bool,
    /// Score plain bicubic upsampling instead of a model.
    #[arg(long)]
    pub bicubic: bool,
    /// Report a wall time of 0.
    #[arg(long)]
    pub deterministic: bool,
    /// LR tile edge for inference.
    #[arg(long, default_value_t = mdfn::DEFAULT_TILE)]
    pub tile: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SrArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Low-resolution light field.
    #[arg(long)]
    pub input: PathBuf,
    /// Output path; `.png` writes a view grid, a directory or extension-less
    /// path writes view files, anything else the raw container.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub scale: Option<usize>,
    #[arg(long, default_value_t = mdfn::DEFAULT_TILE)]
    pub tile: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FiltersArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Angular view `u,v`.
    #[arg(long, value_parser = parse_pair)]
    pub view: (usize, usize),
    /// LR pixel `x,y`.
    #[arg(long, value_parser = parse_pair)]
    pub pixel: (usize, usize),
    /// PNG heat grid; the raw values go next to it as `.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EpiArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `h` fixes (u, x) and spans (v, y); `v` fixes (v, y) and spans (u, x).
    #[arg(long, value_parser = parse_epi_kind)]
    pub kind: PlaneKind,
    /// The two fixed indices, `a,b`.
    #[arg(long, value_parser = parse_pair)]
    pub fixed: (usize, usize),
    #[arg(long)]
    pub out: PathBuf,
    /// Integer nearest-neighbour magnification.
    #[arg(long, default_value_t = 1)]
    pub scale: usize,
    /// Stretch the value range to full contrast.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ParamsArgs {
    /// Model or training config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory; one raw `.lf4d` file per light field.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long, default_value_t = 7)]
    pub angular: usize,
    #[arg(long, default_value_t = 64)]
    pub spatial: usize,
    /// 1 (luma) or 3 (RGB).
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not an index"));
    Ok((p(a)?, p(b)?))
}

pub fn parse_epi_kind(s: &str) -> Result<PlaneKind, String> {
    match s {
        "h" | "horizontal" => Ok(PlaneKind::EpiHorizontal),
        "v" | "vertical" => Ok(PlaneKind::EpiVertical),
        other => match PlaneKind::from_str(other) {
            Ok(k @ (PlaneKind::EpiHorizontal | PlaneKind::EpiVertical)) => Ok(k),
            _ => Err(format!("`{s}` is not an EPI kind (h or v)")),
        },
    }
}

/// Creates the parent directory of `path` and probes that it accepts files.
pub fn ensure_writable(path: &Path) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::output(path, e))?;
    let probe = dir.join(format!(".lfmdfn-probe-{}", std::process::id()));
    fs::write(&probe, b"").map_err(|e| CliError::output(path, e))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

fn ensure_dir_writable(dir: &Path) -> CliResult<()> {
    ensure_writable(&dir.join("probe"))
}

fn load_model(path: &Path, scale: Option<usize>) -> CliResult<Mdfn> {
    let model = Mdfn::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if let Some(r) = scale {
        if r != model.cfg.r {
            return Err(CliError::input(format!(
                "checkpoint {} was trained for x{}, but --scale is {r}",
                path.display(),
                model.cfg.r
            )));
        }
    }
    Ok(model)
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<RunSummary> {
    let file_cfg = match &args.config {
        Some(path) => {
            let mut cfg = TrainConfig::load(path)?;
            if let Some(r) = args.scale {
                cfg.model.r = r;
            }
            if let Some(seed) = args.seed {
                cfg.seed = seed;
                cfg.model.seed = seed;
            }
            Some(cfg)
        }
        None => None,
    };
    let mut trainer = match (&args.checkpoint, file_cfg) {
        (Some(ckpt), cfg) => {
            let mut t = Trainer::resume(ckpt)?;
            if let Some(cfg) = cfg {
                if cfg.model != t.cfg.model {
                    return Err(CliError::input(format!("{} describes a different model than the checkpoint", ckpt.display())));
                }
                t.cfg = cfg;
            }
            t
        }
        (None, Some(cfg)) => {
            cfg.validate()?;
            Trainer::new(cfg)?
        }
        (None, None) => return Err(CliError::input("train needs --config or --checkpoint")),
    };
    if let Some(root) = &args.dataset {
        trainer.cfg.dataset_root = root.clone();
    }
    trainer.cfg.deterministic |= args.deterministic;
    if !trainer.cfg.dataset_root.is_dir() {
        return Err(CliError::input(format!("dataset_root {} is not a directory", trainer.cfg.dataset_root.display())));
    }
    ensure_dir_writable(&args.out)?;
    let ds = ingest_dataset(&trainer.cfg.dataset_root, trainer.cfg.r(), cache_dir_from_env().as_deref())?;
    let quiet = args.quiet;
    let summary = trainer.run(&ds, &args.out, |rec| {
        if !quiet {
            println!("step {:>6}  loss {:.6}", rec.step, rec.loss);
        }
    })?;
    if !quiet {
        println!("final checkpoint: {}", summary.final_checkpoint.display());
    }
    Ok(summary)
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<MetricsReport> {
    let start = Instant::now();
    let model = match (&args.checkpoint, args.oracle || args.bicubic) {
        (_, true) => None,
        (Some(path), false) => Some(load_model(path, args.scale)?),
        (None, false) => return Err(CliError::input("--checkpoint is required unless --oracle or --bicubic is given")),
    };
    let r = model.as_ref().map_or(args.scale.unwrap_or(2), |m| m.cfg.r);
    if !matches!(r, 2 | 4) {
        return Err(CliError::input(format!("--scale must be 2 or 4, got {r}")));
    }
    if let Some(out) = &args.out {
        ensure_writable(out)?;
    }
    let ds = ingest_dataset(&args.dataset, r, cache_dir_from_env().as_deref())?;
    let mut rows = Vec::with_capacity(ds.len());
    for item in &ds.items {
        let sr = match &model {
            _ if args.oracle => item.hr.clone(),
            None => bicubic_resample_sai(&item.lr, Scale::up(r))?,
            Some(m) => m.super_resolve_tiled(&item.lr, args.tile)?,
        };
        let s = lf_metrics(&item.hr, &sr)?;
        rows.push(MetricRow { name: item.name.clone(), psnr: s.psnr, ssim: s.ssim });
    }
    let method = if args.oracle {
        "oracle"
    } else if args.bicubic {
        "bicubic"
    } else {
        "model"
    };
    let mut report = MetricsReport::new(method, r, rows);
    if let Some(m) = &model {
        report.parameters = Some(count_parameters(&m.cfg).total);
        report.config = m.cfg.to_text();
    }
    report.wall_ms = if args.deterministic { 0 } else { start.elapsed().as_millis() };
    if let Some(out) = &args.out {
        let text = match args.format {
            ReportFormat::Csv => report.to_csv(),
            ReportFormat::Json => report.to_json(),
        };
        fs::write(out, text).map_err(|e| CliError::output(out, e))?;
    }
    Ok(report)
}

/// Y through the model, chroma through bicubic upsampling.
pub fn superresolve_lf(model: &Mdfn, lf: &LightField4D, tile: usize) -> CliResult<LightField4D> {
    let d = lf.dims();
    match d.c {
        1 => Ok(model.super_resolve_tiled(lf, tile)?),
        3 => {
            let ycc = lf_rgb_to_ycbcr(lf)?;
            let y = model.super_resolve_tiled(&ycc.channel(0)?, tile)?;
            let up = |c| -> CliResult<LightField4D> { Ok(bicubic_resample_sai(&ycc.channel(c)?, Scale::up(model.cfg.r))?) };
            let stacked = LightField4D::stack_channels(&[y, up(1)?, up(2)?])?;
            Ok(lf_ycbcr_to_rgb(&stacked)?.map(|v| v.clamp(0.0, 1.0)))
        }
        c => Err(CliError::input(format!("expected 1 or 3 channels, got {c}"))),
    }
}

pub fn cmd_superresolve(args: &SrArgs) -> CliResult<(LfDims, LfDims)> {
    let model = load_model(&args.checkpoint, args.scale)?;
    ensure_writable(&args.out)?;
    let lf = load_lf(&args.input).map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    let start = Instant::now();
    let sr = superresolve_lf(&model, &lf, args.tile)?;
    let elapsed = start.elapsed();
    save_lf(&sr, &args.out).map_err(|e| CliError::output(&args.out, e))?;
    println!("input  {}", lf.dims());
    println!("output {}", sr.dims());
    println!("time   {:.3} s", elapsed.as_secs_f64());
    Ok((lf.dims(), sr.dims()))
}

/// Writes the heat grid and its JSON dump; returns the filters.
pub fn cmd_inspect_filters(args: &FiltersArgs) -> CliResult<Vec<Vec<f32>>> {
    let model = load_model(&args.checkpoint, None)?;
    ensure_writable(&args.out)?;
    let lf = luma(&load_lf(&args.input).map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?)?;
    let (u, v) = args.view;
    let (x, y) = args.pixel;
    let filters = model.filters_at(&lf, u, v, x, y)?;
    let (r, d) = (model.cfg.r, model.cfg.d);
    filter_grid(&filters, r, d).save(&args.out).map_err(|e| CliError::output(&args.out, e))?;
    let tiles: Vec<_> = filters
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let taps: Vec<&[f32]> = f.chunks(d).collect();
            json!({ "offset": [k / r, k % r], "taps": taps, "sum": f.iter().map(|&a| a as f64).sum::<f64>() })
        })
        .collect();
    let dump = json!({ "view": [u, v], "pixel": [x, y], "r": r, "d": d, "filters": tiles });
    let json_path = args.out.with_extension("json");
    fs::write(&json_path, serde_json::to_string_pretty(&dump).expect("serializes") + "\n")
        .map_err(|e| CliError::output(&json_path, e))?;
    Ok(filters)
}

pub fn cmd_export_epi(args: &EpiArgs) -> CliResult<lf_core::Image2D> {
    ensure_writable(&args.out)?;
    let lf = load_lf(&args.input).map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    let epi = lf.view_epi(args.kind, args.fixed.0, args.fixed.1)?;
    let img = prepare(&epi, args.scale, args.normalize);
    save_image(&img, &args.out)?;
    Ok(img)
}

pub fn cmd_params(args: &ParamsArgs) -> CliResult<mdfn::ParamReport> {
    let cfg = match &args.config {
        None => MdfnConfig::default(),
        Some(p) => TrainConfig::load(p).map(|c| c.model).or_else(|_| {
            let text = fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            MdfnConfig::parse(&text).map_err(CliError::from)
        })?,
    };
    Ok(count_parameters(&cfg))
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<Vec<PathBuf>> {
    if !matches!(args.channels, 1 | 3) {
        return Err(CliError::input(format!("--channels must be 1 or 3, got {}", args.channels)));
    }
    ensure_dir_writable(&args.out)?;
    let dims = LfDims::new(args.angular, args.angular, args.spatial, args.spatial, args.channels);
    (0..args.count)
        .map(|i| {
            let lf = synthetic_lf(dims, args.seed.wrapping_add(i as u64))?;
            let path = args.out.join(format!("synth_{i:03}.lf4d"));
            save_lf(&lf, &path).map_err(|e| CliError::output(&path, e))?;
            Ok(path)
        })
        .collect()
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a).map(drop),
        Command::Eval(a) => {
            let report = cmd_eval(&a)?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Sr(a) => cmd_superresolve(&a).map(drop),
        Command::Filters(a) => {
            let filters = cmd_inspect_filters(&a)?;
            println!("wrote {} filters to {} and {}", filters.len(), a.out.display(), a.out.with_extension("json").display());
            Ok(())
        }
        Command::Epi(a) => {
            let img = cmd_export_epi(&a)?;
            println!("wrote {}x{} EPI to {}", img.height, img.width, a.out.display());
            Ok(())
        }
        Command::Params(a) => {
            println!("{}", cmd_params(&a)?);
            Ok(())
        }
        Command::Synth(a) => {
            let paths = cmd_synth(&a)?;
            println!("wrote {} light fields to {}", paths.len(), a.out.display());
            Ok(())
        }
    }
}

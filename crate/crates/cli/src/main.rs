//! `ubem`: reconstruct city geometry, compute shading masks and view factors,
//! partition, simulate and benchmark from one key=value config file.
//!
//! Exit codes: 0 success, 2 config error, 3 input parse error, 4 runtime
//! error. Logs go to standard error; machine-readable outputs to files only.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use ubem_core::pipeline::{
    bench_scaling, compute_masks, compute_view_factors, emit_report_csv, emit_report_json,
    load_inputs, make_plan, parse_report_csv, parse_report_json, reconstruct, run_pipeline,
    PipelineError, RunConfig,
};
use ubem_core::radiation::mask_to_csv;

#[derive(Parser)]
#[command(name = "ubem", version, about = "Urban building energy simulation pipeline")]
struct Cli {
    /// Key = value run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the scene from footprints (and elevation) and export OBJ.
    Reconstruct,
    /// Compute per-face shading masks and export one CSV per face.
    Shading,
    /// Compute inter-building view factors and export JSON.
    Viewfactor,
    /// Compute the workload partition plan and export JSON.
    Partition,
    /// Full run: reconstruct, radiate, simulate, export results.
    Simulate,
    /// Scaling sweep over worker counts; emits a benchmark report.
    Bench {
        /// Comma-separated worker counts; must include 1.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        counts: Vec<usize>,
    },
    /// Convert a benchmark report between JSON and CSV.
    Report {
        /// Existing report (.json or .csv).
        #[arg(long)]
        input: PathBuf,
        /// Output format.
        #[arg(long)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| PipelineError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_kv(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.n_workers = workers;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_out(cfg: &RunConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        PipelineError::Config(format!("cannot create {}: {e}", cfg.out_dir.display()))
    })
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| PipelineError::Runtime {
        stage: "post-proc",
        msg: format!("cannot write {}: {e}", path.display()),
    })
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Reconstruct => {
            let cfg = load_config(&cli)?;
            ensure_out(&cfg)?;
            let inputs = load_inputs(&cfg)?;
            let (scene, _terrain) = reconstruct(&cfg, &inputs)?;
            let path = cfg.out_dir.join("scene.obj");
            let mut buf = Vec::new();
            ubem_core::mesh::write_obj(&scene, &mut buf).map_err(|e| PipelineError::Runtime {
                stage: "post-proc",
                msg: e.to_string(),
            })?;
            write_file(&path, &buf)?;
            log::info!(
                "wrote {} ({} buildings, {} triangles)",
                path.display(),
                scene.building_ids().count(),
                scene.mesh.len()
            );
        }
        Command::Shading => {
            let cfg = load_config(&cli)?;
            let mask_dir = cfg.out_dir.join("masks");
            std::fs::create_dir_all(&mask_dir).map_err(|e| {
                PipelineError::Config(format!("cannot create {}: {e}", mask_dir.display()))
            })?;
            let inputs = load_inputs(&cfg)?;
            let (scene, _) = reconstruct(&cfg, &inputs)?;
            let masks = compute_masks(&cfg, &scene)?;
            for (face_id, mask) in &masks {
                let name: String = face_id
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                    .collect();
                write_file(&mask_dir.join(format!("{name}.csv")), mask_to_csv(mask).as_bytes())?;
            }
            log::info!("wrote {} masks to {}", masks.len(), mask_dir.display());
        }
        Command::Viewfactor => {
            let cfg = load_config(&cli)?;
            ensure_out(&cfg)?;
            let inputs = load_inputs(&cfg)?;
            let (scene, _) = reconstruct(&cfg, &inputs)?;
            let vf = compute_view_factors(&cfg, &scene)?;
            let path = cfg.out_dir.join("view_factors.json");
            let json = serde_json::to_string_pretty(&vf).expect("matrix serializes");
            write_file(&path, json.as_bytes())?;
            log::info!("wrote {} ({} surfaces)", path.display(), vf.n());
        }
        Command::Partition => {
            let cfg = load_config(&cli)?;
            ensure_out(&cfg)?;
            let inputs = load_inputs(&cfg)?;
            let (scene, terrain) = reconstruct(&cfg, &inputs)?;
            let plan = make_plan(&cfg, &scene, terrain.as_ref());
            let path = cfg.out_dir.join("partition.json");
            let json = serde_json::to_string_pretty(&ubem_core::partition::plan_to_json(&plan))
                .expect("plan serializes");
            write_file(&path, json.as_bytes())?;
            log::info!("wrote {} ({} parts)", path.display(), plan.n_parts);
        }
        Command::Simulate => {
            let cfg = load_config(&cli)?;
            let out = run_pipeline(&cfg)?;
            log::info!(
                "simulated {} buildings: total {:.3} kWh; pre {:.6}s sim {:.6}s post {:.6}s wall {:.6}s",
                out.n_buildings,
                out.total_heating_kwh,
                out.timings.pre_s,
                out.timings.sim_s,
                out.timings.post_s,
                out.timings.wall_s,
            );
        }
        Command::Bench { counts } => {
            let cfg = load_config(&cli)?;
            ensure_out(&cfg)?;
            let report = bench_scaling(&cfg, counts)?;
            write_file(&cfg.out_dir.join("bench.json"), emit_report_json(&report).as_bytes())?;
            write_file(&cfg.out_dir.join("bench.csv"), emit_report_csv(&report).as_bytes())?;
            log::info!(
                "benchmark sweep over {:?} workers done ({}complete)",
                counts,
                if report.incomplete { "in" } else { "" }
            );
        }
        Command::Report { input, format } => {
            let out_dir = match (&cli.out, &cli.config) {
                (Some(out), _) => out.clone(),
                (None, Some(_)) => load_config(&cli)?.out_dir,
                (None, None) => {
                    return Err(PipelineError::Config(
                        "--out (or --config) is required for report conversion".into(),
                    ))
                }
            };
            std::fs::create_dir_all(&out_dir).map_err(|e| {
                PipelineError::Config(format!("cannot create {}: {e}", out_dir.display()))
            })?;
            let text = std::fs::read_to_string(input).map_err(|e| {
                PipelineError::Config(format!("cannot read {}: {e}", input.display()))
            })?;
            let report = if text.trim_start().starts_with('{') {
                parse_report_json(&text)?
            } else {
                parse_report_csv(&text)?
            };
            let (name, body) = match format {
                ReportFormat::Json => ("report.json", emit_report_json(&report)),
                ReportFormat::Csv => ("report.csv", emit_report_csv(&report)),
            };
            let path = out_dir.join(name);
            write_file(&path, body.as_bytes())?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use config::{ExperimentConfig, CONFIG_SCHEMA};

const OUTPUT_SCHEMA: &str = "anisoperi-output/1";

#[derive(Parser)]
#[command(name = "anisoperi", version, about = "Anisotropic isoperimetry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    BodyInfo,
    DensityAudit,
    Xray,
    Verify,
    Transport,
    John,
    Constants,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::BodyInfo => "body-info",
            Command::DensityAudit => "density-audit",
            Command::Xray => "xray",
            Command::Verify => "verify",
            Command::Transport => "transport",
            Command::John => "john",
            Command::Constants => "constants",
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<(ExperimentConfig, u64)> {
    let path = path.ok_or_else(|| anisoperi::Error::Schema("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(anisoperi::Error::Io)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(anisoperi::Error::Json)?;
    if cfg.schema != CONFIG_SCHEMA {
        return Err(anisoperi::Error::Schema(format!("expected schema {CONFIG_SCHEMA}, got {}", cfg.schema)).into());
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    let seed = cfg.seed.ok_or_else(|| anisoperi::Error::Schema("a seed is required (config or --seed)".into()))?;
    Ok((cfg, seed))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn tolerances(cfg: &ExperimentConfig) -> Value {
    json!({
        "boundary_rel": anisoperi::body::BOUNDARY_TOL_REL,
        "frame_reject": anisoperi::frame::FRAME_REJECT_TOL,
        "tangency": anisoperi::density::TANGENCY_TOL,
        "fiber_quadrature": anisoperi::density::FIBER_QUAD_TOL,
        "density_audit": cfg.density.tol,
        "minimizing_rel": anisoperi::body::MINIMIZING_REL_TOL,
        "densify_excess": anisoperi::xray::audit::DENSIFY_EXCESS,
        "cg": anisoperi::transport::CG_TOL,
        "degenerate_area": anisoperi::mesh::DEGENERATE_AREA,
        "john": cfg.john.tol,
    })
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| anisoperi::Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let (cfg, seed) = load_config(cli.config.as_deref(), cli.seed)?;
    let canonical = serde_json::to_string(&cfg)?;
    let config_hash = sha256_hex(canonical.as_bytes());
    let outcome = match cli.command {
        Command::BodyInfo => commands::body_info(&cfg, seed),
        Command::DensityAudit => commands::density_audit(&cfg, seed),
        Command::Xray => commands::xray(&cfg, seed),
        Command::Verify => commands::verify(&cfg, seed),
        Command::Transport => commands::transport(&cfg, seed),
        Command::John => commands::john(&cfg, seed),
        Command::Constants => commands::constants_cmd(&cfg, seed),
    }?;
    let name = cli.command.name();
    let envelope = json!({
        "schema": OUTPUT_SCHEMA,
        "command": name,
        "config_hash": config_hash,
        "seed": seed,
        "tolerances": tolerances(&cfg),
        "result": outcome.result,
    });
    let text = serde_json::to_string_pretty(&envelope)?;
    println!("{text}");
    if let Some(dir) = &cli.out {
        write_run(dir, name, &config_hash, seed, &canonical, &text, &outcome.files)?;
    }
    Ok(())
}

fn write_run(
    dir: &Path,
    name: &str,
    config_hash: &str,
    seed: u64,
    canonical: &str,
    report: &str,
    files: &[(String, String)],
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(anisoperi::Error::Io)?;
    let mut all = vec![("config.json".to_string(), canonical.to_string()), (format!("{name}.json"), report.to_string())];
    all.extend(files.iter().cloned());
    let mut entries = Vec::new();
    for (file, body) in &all {
        std::fs::write(dir.join(file), body).map_err(anisoperi::Error::Io)?;
        entries.push(json!({ "file": file, "bytes": body.len(), "sha256": sha256_hex(body.as_bytes()) }));
    }
    let manifest = json!({
        "schema": "anisoperi-manifest/1",
        "command": name,
        "config_hash": config_hash,
        "seed": seed,
        "files": entries,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?).map_err(anisoperi::Error::Io)?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use anisoperi::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Numerical(_)) | Some(E::ProgramTooLarge { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

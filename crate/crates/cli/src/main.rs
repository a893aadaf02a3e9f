//! Command-line front end: run simulations, generate datasets, and audit
//! exported chains.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fedchain_core::config::{parse_config, SimulationConfig};
use fedchain_core::data::generate_synthetic;
use fedchain_core::driver::run_simulation;
use fedchain_core::ledger::{export_chain, verify_export, ChainVerdict, UpdateArchive};
use fedchain_core::numerics::seeded_rng;
use fedchain_core::report::{accuracy_chart, metrics_csv, summary_text, traffic_chart};

#[derive(Parser)]
#[command(
    name = "fedchain",
    about = "Deterministic simulator of ledger-audited federated intrusion detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full simulation and write its artifacts to a directory.
    Simulate {
        /// Configuration file (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the configured random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a labeled synthetic dataset as CSV.
    GenData {
        /// Configuration file; the `synthetic.*`, `seed`, and `data.*`
        /// keys drive generation.
        #[arg(long)]
        config: PathBuf,
        /// Destination CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify an exported chain, optionally against its archive.
    VerifyChain {
        /// `ledger.export` file produced by `simulate`.
        export: PathBuf,
        /// Archive directory of updates to cross-check record digests.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Simulate { config, seed, out } => simulate(&config, seed, &out),
        Command::GenData { config, out } => gen_data(&config, &out),
        Command::VerifyChain { export, archive } => verify_chain(&export, archive.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn simulate(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<ExitCode> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let output = run_simulation(&cfg).context("running simulation")?;

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let write = |name: &str, contents: &str| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    };
    write("metrics.csv", &metrics_csv(&output.rounds))?;
    let summary = summary_text(&cfg, &output);
    write("summary.txt", &summary)?;
    write("ledger.export", &export_chain(&output.chain))?;
    write("accuracy.svg", &accuracy_chart(&output))?;
    write("bytes.svg", &traffic_chart(&output))?;

    let archive_dir = out_dir.join("archive");
    fs::create_dir_all(&archive_dir)
        .with_context(|| format!("creating archive directory {}", archive_dir.display()))?;
    for (digest, bytes) in output.archive.iter() {
        let path = archive_dir.join(format!("{}.bin", hex::encode(digest)));
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }

    print!("{summary}");
    println!(
        "\nwrote metrics.csv, summary.txt, ledger.export, accuracy.svg, bytes.svg and {} archive entries to {}",
        output.archive.len(),
        out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn gen_data(config: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let mut rng = seeded_rng(cfg.seed, 0);
    let data: fedchain_core::Dataset =
        generate_synthetic(&cfg.synthetic, &mut rng).context("generating dataset")?;

    let positive = cfg
        .positive_labels
        .first()
        .cloned()
        .unwrap_or_else(|| "attack".into());
    let mut csv = String::new();
    csv.push_str(&data.feature_names().join(","));
    csv.push(',');
    csv.push_str(&cfg.label_column);
    csv.push('\n');
    for i in 0..data.len() {
        let (x, y) = data.row(i);
        for v in x.iter() {
            csv.push_str(&format!("{v},"));
        }
        csv.push_str(if y == 1 { &positive } else { "benign" });
        csv.push('\n');
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} rows ({} features, {:.1}% positive) to {}",
        data.len(),
        data.feature_dim(),
        data.positive_fraction() * 100.0,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_archive_dir(dir: &Path) -> Result<UpdateArchive> {
    let mut archive = UpdateArchive::new();
    let entries =
        fs::read_dir(dir).with_context(|| format!("reading archive directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .with_context(|| format!("archive entry {} has no readable name", path.display()))?;
        let raw = hex::decode(stem)
            .with_context(|| format!("archive entry {} is not named by a digest", path.display()))?;
        let digest: [u8; 32] = raw
            .try_into()
            .map_err(|_| anyhow::anyhow!("archive entry {} is not a 32-byte digest", path.display()))?;
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        archive.insert_raw(digest, bytes);
    }
    Ok(archive)
}

fn verify_chain(export: &Path, archive_dir: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(export)
        .with_context(|| format!("reading export {}", export.display()))?;
    let archive = match archive_dir {
        Some(dir) => Some(load_archive_dir(dir)?),
        None => None,
    };
    let verdict = verify_export(&text, archive.as_ref())
        .with_context(|| format!("parsing export {}", export.display()))?;
    match verdict {
        ChainVerdict::Valid => {
            let blocks = text.lines().filter(|l| !l.trim().is_empty()).count();
            println!("chain valid: {blocks} blocks, every hash link and record digest checks out");
            Ok(ExitCode::SUCCESS)
        }
        ChainVerdict::Invalid { height, cause } => {
            bail!("chain invalid at height {height}: {cause}");
        }
    }
}

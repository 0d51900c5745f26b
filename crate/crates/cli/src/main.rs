use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use stablerank_cli::commands;
use stablerank_cli::config::{load_contour, ClassificationConfig, PipelineConfig};
use stablerank_cli::pipeline;
use stablerank_cli::server::{self, Workspace, WORKSPACE_ENV};
use stablerank_core::io::BarcodeFormat;
use stablerank_core::ExtendedReal;

/// Stable ranks of persistence barcodes: simulation, persistence,
/// invariants, classification and a JSON API.
#[derive(Parser)]
#[command(name = "stablerank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate point clouds as CSV files under OUT/<process>/.
    Simulate {
        /// Process name (poisson, normal, matern, thomas,
        /// baddeley-silverman, ifs) or a JSON spec.
        #[arg(long)]
        process: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vietoris-Rips barcodes of a point-cloud CSV.
    Persist {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        degrees: Vec<usize>,
        #[arg(long)]
        max_filtration: Option<f64>,
        /// ripser, json or csv.
        #[arg(long, default_value = "ripser")]
        format: BarcodeFormat,
    },
    /// Stable rank of one barcode file, printed as JSON.
    Stablerank {
        #[arg(long)]
        contour: PathBuf,
        #[arg(long)]
        barcode: PathBuf,
        /// Degree to read from multi-degree files.
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// Print the 2D invariant instead.
        #[arg(long)]
        two_d: bool,
        /// Truncation grid for --two-d (default: from the barcode).
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<ExtendedReal>,
    },
    /// Stem plot CSV of a barcode file.
    Stemplot {
        #[arg(long)]
        barcode: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: usize,
    },
    /// Contour lines as CSV.
    Contourlines {
        #[arg(long)]
        contour: PathBuf,
        #[arg(long = "t", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 2, required = true)]
        s_range: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Cross-validated nearest-mean classification of a stored dataset.
    Classify {
        /// A pipeline output directory.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        contour: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        train_size: usize,
        #[arg(long, default_value_t = 20)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Run a configured pipeline (TOML config or a previous manifest.json).
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Check a run directory against the hashes in its manifest.
    Verify { dir: PathBuf },
    /// Serve the JSON API over a workspace of runs.
    Serve {
        #[arg(long, env = WORKSPACE_ENV)]
        workspace: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory with the built viewer, served at /.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let out = match cli.command {
        Command::Simulate {
            process,
            count,
            seed,
            out,
        } => commands::simulate(&commands::parse_process(&process)?, count, seed, &out)?,
        Command::Persist {
            input,
            degrees,
            max_filtration,
            format,
        } => commands::persist(&input, &degrees, max_filtration, format)?,
        Command::Stablerank {
            contour,
            barcode,
            degree,
            two_d,
            alphas,
        } => commands::stablerank(&contour, &barcode, degree, two_d.then_some(&alphas[..]))?,
        Command::Stemplot { barcode, degree } => commands::stemplot(&barcode, degree)?,
        Command::Contourlines {
            contour,
            ts,
            s_range,
            samples,
        } => commands::contourlines(
            &load_contour(&contour)?,
            &ts,
            (s_range[0], s_range[1]),
            samples,
        )?,
        Command::Classify {
            dataset,
            contour,
            train_size,
            folds,
            seed,
            p,
        } => {
            let contour = match contour {
                Some(path) => load_contour(&path)?,
                None => stablerank_core::Contour::standard(),
            };
            let params = ClassificationConfig {
                train_size,
                folds,
                seed,
                p,
                combined: true,
            };
            commands::classify(&dataset, &contour, &params)?
        }
        Command::Pipeline { config, out, quiet } => {
            let cfg = PipelineConfig::load(&config)?;
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .context("no output directory: pass --out or set output_dir")?;
            let report = pipeline::run(&cfg, &dir, !quiet)?;
            serde_json::to_string_pretty(&report.summary)? + "\n"
        }
        Command::Verify { dir } => {
            let bad = pipeline::verify(&dir)?;
            if !bad.is_empty() {
                anyhow::bail!(
                    "{} file(s) differ from the manifest: {}",
                    bad.len(),
                    bad.join(", ")
                );
            }
            "ok\n".into()
        }
        Command::Serve {
            workspace,
            addr,
            static_dir,
        } => {
            let ws = Workspace::load(&workspace)?;
            eprintln!(
                "[stablerank] {} dataset(s) in {}",
                ws.datasets.len(),
                workspace.display()
            );
            tokio::runtime::Runtime::new()?.block_on(server::serve(
                ws,
                static_dir.as_deref(),
                &addr,
            ))?;
            String::new()
        }
    };
    print!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

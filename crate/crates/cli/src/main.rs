//! `irsap`: design codebooks, run experiments, dump power patterns.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irsap_core::codebook::{build_multi_user_codebook, build_single_user_codebook, design_codeword, sector_rng, SectorSamples};
use irsap_core::eval::power_patterns;
use irsap_core::experiments::pattern_tables_csv;
use irsap_core::oracle::{earv_agreement, exhaustive_quantized_optimum, OracleTarget, DEFAULT_ORACLE_CAP};
use irsap_core::persist::{load_codebook, save_codebook};
use irsap_core::*;

#[derive(Parser)]
#[command(name = "irsap", version, about = "Passive reflection codebooks for an IRS-integrated access point")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (all cores when omitted).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Design a single-user codebook (design.D) or a union (design.D_list).
    Design {
        #[command(flatten)]
        common: Common,
        /// Output codebook file.
        #[arg(long, default_value = "codebook.json")]
        out: PathBuf,
    },
    /// Run an experiment and write `<name>.csv` plus a metadata sidecar.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Experiment name; the configuration's `experiment` when omitted.
        #[arg(long)]
        experiment: Option<String>,
        /// Precomputed codebooks; missing sector counts are designed.
        #[arg(long)]
        codebook: Vec<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Elevation and azimuth power tables of one codeword.
    Patterns {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        codebook: PathBuf,
        /// Position of the codeword in the file, from 0.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Cross-check the channel model and the optimiser against brute force.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Random directions and patterns for the response comparison.
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

fn exit_code(err: &Error) -> u8 {
    if err.is_solver_failure() {
        return 3;
    }
    match err {
        Error::HashMismatch { .. } => 4,
        Error::Config { .. }
        | Error::UnknownExperiment(_)
        | Error::InvalidArgument(_)
        | Error::Format { .. }
        | Error::Io { .. }
        | Error::CapExceeded { .. } => 2,
        _ => 1,
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config {
                field: "--threads".into(),
                message: "must be at least 1".into(),
            });
        }
        // only fails when a pool already exists, which is harmless here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        }),
        None => Ok(()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn design(common: &Common, out: &Path) -> Result<()> {
    let cfg = load(common)?;
    let geom = cfg.geometry()?;
    let couplings = ReflectionCouplings::new(&geom);
    let sdp = cfg.sdp.options();
    let codebook = match &cfg.design.sector_list {
        Some(list) => {
            let book = build_multi_user_codebook(list, &couplings, &cfg.ao, &sdp, cfg.seed)?;
            for e in &book.entries {
                println!("D={} d={} objective={}", e.sector.sectors, e.sector.index, e.objective);
            }
            book
        }
        None => {
            let (book, designs) = build_single_user_codebook(cfg.design.sectors, &couplings, &cfg.ao, &sdp, cfg.seed)?;
            for d in &designs {
                println!(
                    "D={} d={} objective={} sweeps={}",
                    d.spec.sectors,
                    d.spec.index,
                    d.objective,
                    d.trace.len() - 1
                );
            }
            book
        }
    };
    ensure_parent(out)?;
    save_codebook(&codebook, out)?;
    println!("wrote {} codewords to {}", codebook.len(), out.display());
    Ok(())
}

fn eval(common: &Common, experiment: Option<&str>, codebooks: &[PathBuf], out: &Path) -> Result<()> {
    let cfg = load(common)?;
    let name = experiment
        .or(cfg.experiment.as_deref())
        .ok_or_else(|| Error::Config {
            field: "experiment".into(),
            message: "no experiment named on the command line or in the configuration".into(),
        })?;
    let kind: ExperimentKind = name.parse()?;
    let hash = cfg.content_hash();
    let mut ctx = ExperimentContext::new(cfg)?;
    for path in codebooks {
        let book = load_codebook(path, Some(ctx.geometry_hash()))?;
        ctx.add_codebook(book)?;
    }
    let result = ctx.run(kind)?;
    let (csv, meta) = result.write(out, &hash)?;
    println!("wrote {} and {}", csv.display(), meta.display());
    Ok(())
}

fn patterns(common: &Common, codebook: &Path, index: usize, out: &Path) -> Result<()> {
    let cfg = load(common)?;
    let geom = cfg.geometry()?;
    let couplings = ReflectionCouplings::new(&geom);
    let book = load_codebook(codebook, Some(couplings.geometry_hash()))?;
    let entry = book.entries.get(index).ok_or_else(|| {
        Error::InvalidArgument(format!("codeword {index} requested, the codebook has {}", book.len()))
    })?;
    let tables = power_patterns(Some(&entry.pattern), &couplings, &cfg.patterns)?;
    let (elevation, azimuth) = pattern_tables_csv(&tables);
    let stem = format!("pattern_D{}_d{}", entry.sector.sectors, entry.sector.index);
    let e = out.join(format!("{stem}_elevation.csv"));
    let a = out.join(format!("{stem}_azimuth.csv"));
    write(&e, &elevation)?;
    write(&a, &azimuth)?;
    println!("wrote {} and {}", e.display(), a.display());
    Ok(())
}

fn oracle_check(common: &Common, cases: usize) -> Result<bool> {
    let cfg = load(common)?;
    let geom = cfg.geometry()?;
    let worst = earv_agreement(&geom, cases, cfg.seed)?;
    let mut ok = worst <= 1e-12;
    println!("response agreement over {cases} cases: max difference {worst:e} ({})", if ok { "ok" } else { "MISMATCH" });

    let couplings = ReflectionCouplings::new(&geom);
    let spec = SectorSpec::new(cfg.design.sectors, 1)?;
    let samples = SectorSamples::new(&couplings, spec, cfg.ao.samples)?;
    let target = OracleTarget::average_power(&geom, &samples.directions, samples.los.norm_sqr());
    match exhaustive_quantized_optimum(&target, 16, DEFAULT_ORACLE_CAP) {
        Ok(opt) => {
            let design = design_codeword(spec, &couplings, &cfg.ao, &cfg.sdp.options(), &mut sector_rng(cfg.seed, spec))?;
            let ratio = design.objective / opt.value;
            ok &= ratio >= 0.95;
            println!("sector 1 of {}: optimiser / 16-level optimum = {ratio}", spec.sectors);
        }
        Err(Error::CapExceeded { size, .. }) => {
            println!("exhaustive search skipped: {size} assignments exceed the cap of {DEFAULT_ORACLE_CAP}");
        }
        Err(e) => return Err(e),
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Design { common, out } => design(common, out).map(|_| true),
        Command::Eval {
            common,
            experiment,
            codebook,
            out,
        } => eval(common, experiment.as_deref(), codebook, out).map(|_| true),
        Command::Patterns {
            common,
            codebook,
            index,
            out,
        } => patterns(common, codebook, *index, out).map(|_| true),
        Command::OracleCheck { common, cases } => oracle_check(common, *cases),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

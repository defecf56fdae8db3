use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use localpop::correlate::ChannelVertices;
use localpop::decompose::decompose_indegree;
use localpop::distfit::{fit, select_best, Family, FitOptions, Sample, XminPolicy};
use localpop::generate::{generate, write_citations, write_labels, GeneratorConfig};
use localpop::groups::Tier;
use localpop::ingest::{ingest, CitationFormat, Ingested, LabelFormat};
use localpop::report::{
    canonical_json, digest_file, emit_ccdf, run_cross_tier, run_tier1, run_tier2, write_run, AnalysisOptions,
    AnalysisRun, CrossTierRequest, RunConfig, Tables, Timings,
};

#[derive(Parser)]
#[command(name = "localpop", version, about = "Local popularity analysis of labeled citation graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the dataset and print edge accounting as key=value lines.
    IngestCheck(DataArgs),
    /// Write per-vertex global, internal and external indegrees as CSV.
    Decompose {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1, value_parser = parse_tier)]
        tier: u8,
        /// Restrict to one category (tier 2 only).
        #[arg(long)]
        scope: Option<u8>,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Category-level distribution, popularity and correlation study.
    AnalyzeTier1(AnalyzeArgs),
    /// Subcategory-level study within each category.
    AnalyzeTier2(AnalyzeArgs),
    /// Subcategory-to-category channels and their correlations.
    CrossTier {
        #[command(flatten)]
        analyze: AnalyzeArgs,
        /// JSON file with `channels` and `correlations`; the standard
        /// combinations when omitted.
        #[arg(long)]
        request: Option<PathBuf>,
    },
    /// Fit all families to a degree sample and print the best-fit set as JSON.
    Fit {
        /// One non-negative integer per line; zeros are ignored.
        input: PathBuf,
        /// Fit only this family.
        #[arg(long)]
        family: Option<Family>,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Empirical and fitted complementary CDFs of a degree sample.
    Ccdf {
        input: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic labeled citation graph from a JSON or TOML config.
    Generate {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    citations: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Lower tail cutoff: a positive integer or `ks-scan`.
    #[arg(long, default_value = "1")]
    xmin: XminPolicy,
    /// Significance level for best-fit selection.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum tail size for a fit.
    #[arg(long, default_value_t = 50)]
    min_tail: usize,
}

impl FitArgs {
    fn options(&self) -> Result<FitOptions> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            bail!("threshold must lie in (0, 1), got {}", self.threshold);
        }
        Ok(FitOptions {
            xmin: self.xmin,
            min_tail: self.min_tail.max(1),
            threshold: self.threshold,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VertexFilter {
    All,
    CitedByEither,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Vertices entering channel-pair correlations.
    #[arg(long, value_enum, default_value = "all")]
    channel_vertices: VertexFilter,
    #[arg(long)]
    out_dir: PathBuf,
}

impl AnalyzeArgs {
    fn options(&self) -> Result<AnalysisOptions> {
        Ok(AnalysisOptions {
            fit: self.fit.options()?,
            channel_vertices: match self.channel_vertices {
                VertexFilter::All => ChannelVertices::All,
                VertexFilter::CitedByEither => ChannelVertices::CitedByEither,
            },
        })
    }
}

fn parse_tier(s: &str) -> Result<u8, String> {
    match s {
        "1" | "2" => Ok(s.parse().expect("digit")),
        _ => Err(format!("tier must be 1 or 2, got `{s}`")),
    }
}

fn load(data: &DataArgs) -> Result<Ingested> {
    ingest(&data.citations, &data.labels, &CitationFormat::default(), &LabelFormat::default()).with_context(|| {
        format!(
            "loading {} and {}",
            data.citations.display(),
            data.labels.display()
        )
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_sample(path: &Path) -> Result<Sample> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split([',', '\t', ' ']).next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        match field.parse::<u64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}:{}: `{field}` is not a non-negative integer", path.display(), i + 1),
        }
    }
    Ok(Sample::new(values))
}

fn analyze<T, F>(command: &str, args: &AnalyzeArgs, tier: Option<Tier>, run: F) -> Result<()>
where
    T: Tables,
    F: FnOnce(&Ingested, &AnalysisOptions) -> Result<T>,
{
    let options = args.options()?;
    let mut timings = Timings::default();
    let start = Instant::now();
    let data = load(&args.data)?;
    timings.record("ingest", start.elapsed().as_secs_f64());
    let start = Instant::now();
    let outputs = run(&data, &options)?;
    timings.record("analysis", start.elapsed().as_secs_f64());
    let dataset = vec![digest_file(&args.data.citations)?, digest_file(&args.data.labels)?];
    let config = RunConfig {
        command: command.to_string(),
        tier,
        scope: None,
        options,
    };
    write_run(&args.out_dir, &AnalysisRun::new(dataset, config, outputs), &timings)?;
    eprintln!("wrote {}", args.out_dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestCheck(data) => {
            let d = load(&data)?;
            print!("{}", d.report.to_key_value());
            println!("label_rows={}", d.labels.rows);
            println!("label_skipped_unlabeled={}", d.labels.skipped_unlabeled);
            println!("label_skipped_inconsistent={}", d.labels.skipped_inconsistent);
            println!("vertex_count={}", d.graph.vertex_count());
            if !d.report.is_conserved() {
                bail!("edge counts do not add up");
            }
        }
        Command::Decompose {
            data,
            tier,
            scope,
            output: path,
        } => {
            let tier = Tier::from_number(tier).expect("validated by parser");
            if scope.is_some() && tier == Tier::Category {
                bail!("--scope applies to tier 2 only");
            }
            let d = load(&data)?;
            let dec = decompose_indegree(&d.graph, tier, scope)?;
            let mut out = output(path.as_deref())?;
            dec.write_columns(&d.graph, &mut out)?;
            out.flush()?;
        }
        Command::AnalyzeTier1(args) => {
            analyze("analyze-tier1", &args, Some(Tier::Category), |d, o| Ok(run_tier1(&d.graph, o)?))?
        }
        Command::AnalyzeTier2(args) => {
            analyze("analyze-tier2", &args, Some(Tier::Subcategory), |d, o| Ok(run_tier2(&d.graph, o)?))?
        }
        Command::CrossTier { analyze: args, request } => {
            let request = match request {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => CrossTierRequest::standard(),
            };
            analyze("cross-tier", &args, None, |d, o| Ok(run_cross_tier(&d.graph, &request, o)))?
        }
        Command::Fit {
            input,
            family,
            fit: fit_args,
            output: path,
        } => {
            let options = fit_args.options()?;
            let sample = read_sample(&input)?;
            let text = match family {
                Some(f) => canonical_json(&fit(&sample, f, &options)?)?,
                None => canonical_json(&select_best(&sample, &options)?)?,
            };
            let mut out = output(path.as_deref())?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        Command::Ccdf {
            input,
            fit: fit_args,
            output: path,
        } => {
            let options = fit_args.options()?;
            let sample = read_sample(&input)?;
            let best = select_best(&sample, &options)?;
            let out = output(path.as_deref())?;
            emit_ccdf(&sample, &best.fits, out)?;
        }
        Command::Generate { config, out_dir, seed } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: GeneratorConfig = match config.extension().and_then(|e| e.to_str()) {
                Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", config.display()))?,
                _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?,
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let graph = generate(&cfg)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let citations = out_dir.join("citations.csv");
            let labels = out_dir.join("labels.csv");
            write_citations(&graph, BufWriter::new(File::create(&citations)?))?;
            write_labels(&graph, BufWriter::new(File::create(&labels)?))?;
            eprintln!(
                "wrote {} vertices and {} edges to {}",
                graph.vertex_count(),
                graph.edge_count(),
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use geotext_core::geocode::{CachedGeocoder, GeoTables, Geocoder, HttpGeocoder};
use geotext_core::layout::render_svg;
use geotext_core::pipeline::input::{read_input, write_jsonl, InputError};
use geotext_core::pipeline::shard::{merge_shards, read_shard, select_shard, write_shard, ShardError};
use geotext_core::pipeline::{ConfigError, ConfigFile, InputRecord, Pipeline, PipelineConfig, PipelineError, PresetName, SiteKey};
use geotext_core::store::{Dataset, Store, StoreError};
use geotext_core::synth::{generate_with, SynthConfig};
use geotext_core::timebin::TimeBin;
use geotext_server::api::{chained_layouts, DEFAULT_CLOUD_RADIUS, DEFAULT_MAX_TAGS};
use geotext_server::{AppState, ServerConfig};

#[derive(Parser)]
#[command(name = "geotext", version, about = "Keyphrase maps over geotagged, timestamped text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset directory from input records.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        geo: GeoArgs,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add records to an existing dataset.
    Append {
        #[arg(long)]
        dataset: PathBuf,
        inputs: Vec<PathBuf>,
        /// Defaults to the configuration stored in the dataset.
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        geo: GeoArgs,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Map one round-robin share of the input into a contribution file.
    Shard {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        geo: GeoArgs,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduce contribution files into a dataset directory.
    Merge {
        #[arg(required = true)]
        shards: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a dataset over HTTP. SIGHUP reloads it.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Write one SVG tag-cloud frame per bin for a site.
    CloudSvg {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lat: String,
        #[arg(long, allow_hyphen_values = true)]
        lon: String,
        /// `FIRST..LAST` or a single bin label; all bins when omitted.
        #[arg(long)]
        bins: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_TAGS)]
        max_tags: usize,
        #[arg(long, default_value_t = DEFAULT_CLOUD_RADIUS)]
        radius: f64,
        /// Overlay each tag's sparkline.
        #[arg(long)]
        spark: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time ingestion on synthetic documents; prints CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
        docs: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,4")]
        workers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,4")]
        ngram: Vec<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Runs per configuration; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
    /// Write synthetic award-like records as JSON lines.
    Synth {
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 400)]
        sites: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// nsf, twitter or custom.
    #[arg(long)]
    preset: Option<PresetName>,
    /// JSON config: a preset name plus overrides.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn given(&self) -> bool {
        self.preset.is_some() || self.config.is_some()
    }

    fn resolve(&self) -> Result<PipelineConfig, ConfigError> {
        match &self.config {
            Some(path) => {
                let mut file = ConfigFile::read(path)?;
                if let Some(p) = self.preset {
                    file.preset = Some(format!("{p:?}").to_lowercase());
                }
                file.resolve()
            }
            None => {
                let cfg = PipelineConfig::preset(self.preset.unwrap_or(PresetName::Nsf));
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }
}

#[derive(Args)]
struct GeoArgs {
    /// Extra `zip,lat,lon` table.
    #[arg(long)]
    zips: Option<PathBuf>,
    /// Extra gazetteer (`name admin country lat lon [population]`, tab-separated).
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Cache file for the external geocoder (used when GEOTEXT_GEOCODER_URL is set).
    #[arg(long, default_value = ".geotext-geocache.tsv")]
    geocoder_cache: PathBuf,
}

/// Exit status 1 for I/O failures, 2 for configuration or contract
/// violations.
enum Failure {
    Io(anyhow::Error),
    Contract(anyhow::Error),
}

impl Failure {
    fn io(e: impl Into<anyhow::Error>) -> Self {
        Failure::Io(e.into())
    }
    fn contract(e: impl Into<anyhow::Error>) -> Self {
        Failure::Contract(e.into())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) | ConfigError::Corpus(_) => Failure::io(e),
            _ => Failure::contract(e),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => c.into(),
            e => Failure::contract(e),
        }
    }
}

impl From<ShardError> for Failure {
    fn from(e: ShardError) -> Self {
        match e {
            ShardError::Io(_) => Failure::io(e),
            e => Failure::contract(e),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::io(e)
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::io(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

fn geocoder(args: &GeoArgs) -> Result<Geocoder, Failure> {
    let mut tables = GeoTables::bundled();
    if let Some(p) = &args.zips {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        tables.add_zip_csv(&text, &p.display().to_string()).map_err(Failure::contract)?;
    }
    if let Some(p) = &args.gazetteer {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        tables.add_gazetteer_tsv(&text, &p.display().to_string()).map_err(Failure::contract)?;
    }
    let external = match HttpGeocoder::from_env() {
        Some(http) => Some(CachedGeocoder::new(Box::new(http), Some(args.geocoder_cache.clone())).map_err(Failure::io)?),
        None => None,
    };
    Ok(Geocoder::new(tables, external))
}

fn pipeline(config: PipelineConfig, geo: &GeoArgs) -> Result<Pipeline, Failure> {
    let corpus = Arc::new(config.corpus.load().map_err(ConfigError::from)?);
    Ok(Pipeline::new(config, corpus, Arc::new(geocoder(geo)?))?)
}

fn read_inputs(paths: &[PathBuf]) -> Result<Vec<InputRecord>, Failure> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_input(p)?);
    }
    Ok(all)
}

fn report(ds: &Dataset) {
    let m = &ds.manifest;
    println!("records read: {}", m.records_read);
    println!("records kept: {}", m.records_kept);
    for (reason, n) in &m.skipped {
        println!("skipped {}: {n}", reason.as_str());
    }
    println!(
        "sites: {}  bins: {}  summaries: {}  triples: {}",
        m.site_count,
        m.bins.len(),
        m.summary_count,
        m.triple_count
    );
    println!("fingerprint: {}", m.fingerprint);
}

fn ingest(inputs: &[PathBuf], config: &ConfigArgs, geo: &GeoArgs, workers: usize, out: &Path) -> Outcome {
    let p = pipeline(config.resolve()?, geo)?;
    let records = read_inputs(inputs)?;
    let ds = p.run(&records, workers);
    ds.write_dir(out)?;
    report(&ds);
    Ok(())
}

fn append(dataset: &Path, inputs: &[PathBuf], config: &ConfigArgs, geo: &GeoArgs, workers: usize) -> Outcome {
    let existing = Dataset::read_dir(dataset)?;
    let cfg = if config.given() {
        config.resolve()?
    } else {
        existing.manifest.config.clone()
    };
    let p = pipeline(cfg, geo)?;
    let records = read_inputs(inputs)?;
    let ds = p.append(&existing, &records, workers)?;
    ds.write_dir(dataset)?;
    report(&ds);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn shard(inputs: &[PathBuf], config: &ConfigArgs, geo: &GeoArgs, index: usize, count: usize, workers: usize, out: &Path) -> Outcome {
    if count == 0 || index >= count {
        return Err(Failure::contract(anyhow!("--index must be below --count (got {index} of {count})")));
    }
    let p = pipeline(config.resolve()?, geo)?;
    let records = select_shard(&read_inputs(inputs)?, index, count);
    let agg = p.map_all(&records, workers);
    let mut buf = Vec::new();
    write_shard(&agg, p.fingerprint(), p.config().granularity, &mut buf)?;
    fs::write(out, buf).with_context(|| format!("writing {}", out.display()))?;
    println!("shard {index}/{count}: {} records -> {}", agg.stats.records_read, out.display());
    Ok(())
}

fn merge(shards: &[PathBuf], config: &ConfigArgs, out: &Path) -> Outcome {
    let cfg = config.resolve()?;
    let corpus = cfg.corpus.load().map_err(ConfigError::from)?;
    let fingerprint = cfg.fingerprint(&corpus);
    let mut files = Vec::new();
    for p in shards {
        let name = p.display().to_string();
        let text = fs::read_to_string(p).with_context(|| format!("reading {name}"))?;
        files.push((name.clone(), read_shard(&text, &name)?));
    }
    let ds = merge_shards(files, &fingerprint)?.into_dataset(&cfg, &fingerprint);
    ds.write_dir(out)?;
    report(&ds);
    Ok(())
}

fn serve(dataset: &Path, host: &str, port: u16, cors_origin: Option<String>) -> Outcome {
    let config = ServerConfig {
        cors_origin,
        ..ServerConfig::default()
    };
    let state = Arc::new(AppState::open(dataset, config)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        tracing::info!("serving {} on http://{}", dataset.display(), listener.local_addr()?);
        #[cfg(unix)]
        {
            let reload = state.clone();
            tokio::spawn(async move {
                use tokio::signal::unix::{signal, SignalKind};
                let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
                while hup.recv().await.is_some() {
                    match reload.reload() {
                        Ok(()) => tracing::info!("dataset reloaded"),
                        Err(e) => tracing::warn!("reload failed, keeping previous dataset: {e}"),
                    }
                }
            });
        }
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        geotext_server::serve(listener, state, shutdown).await
    })?;
    Ok(())
}

fn bin_range(store: &Store, range: Option<&str>) -> Result<Vec<TimeBin>, Failure> {
    let g = store.dataset().manifest.granularity;
    let parse = |l: &str| TimeBin::parse_label(l.trim(), g).map_err(Failure::contract);
    match range {
        None => Ok(store.bins().to_vec()),
        Some(s) => {
            let (a, b) = match s.split_once("..") {
                Some((a, b)) => (parse(a)?, parse(b)?),
                None => {
                    let a = parse(s)?;
                    (a, a)
                }
            };
            if b < a {
                return Err(Failure::contract(anyhow!("empty bin range {s}")));
            }
            let mut bins = vec![a];
            while *bins.last().expect("nonempty") < b {
                bins.push(bins.last().expect("nonempty").next());
            }
            Ok(bins)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cloud_svg(
    dataset: &Path,
    lat: &str,
    lon: &str,
    bins: Option<&str>,
    max_tags: usize,
    radius: f64,
    spark: bool,
    out: &Path,
) -> Outcome {
    let store = Store::open(dataset)?;
    let site = SiteKey::parse(lat, lon).ok_or_else(|| Failure::contract(anyhow!("bad coordinates {lat},{lon}")))?;
    if !(radius.is_finite() && radius > 0.0) || max_tags == 0 {
        return Err(Failure::contract(anyhow!("radius and max_tags must be positive")));
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for bin in bin_range(&store, bins)? {
        let (_, layout) = chained_layouts(&store, site, bin, max_tags, radius);
        let series: Option<BTreeMap<String, Vec<f64>>> = spark.then(|| {
            layout
                .placed
                .iter()
                .map(|b| (b.phrase.clone(), store.query_spark(site, &b.phrase).into_iter().map(|(_, v)| v).collect()))
                .collect()
        });
        let path = out.join(format!("cloud-{}.svg", bin.label()));
        fs::write(&path, render_svg(&layout, series.as_ref())).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn bench(docs: &[usize], workers: &[usize], ngram: &[usize], seed: u64, repeat: usize) -> Outcome {
    let max_docs = docs.iter().copied().max().unwrap_or(0);
    let records: Vec<InputRecord> = generate_with(&SynthConfig {
        docs: max_docs,
        seed,
        ..SynthConfig::default()
    })
    .into_iter()
    .map(Ok)
    .collect();
    let geo = Arc::new(Geocoder::offline(GeoTables::bundled()));
    let mut out = std::io::stdout().lock();
    writeln!(out, "docs,workers,ngram,seconds")?;
    for &n in ngram {
        let mut cfg = PipelineConfig::nsf();
        cfg.params.max_ngram = n;
        let corpus = Arc::new(cfg.corpus.load().map_err(ConfigError::from)?);
        let p = Pipeline::new(cfg, corpus, geo.clone())?;
        for &d in docs {
            for &w in workers {
                let best = (0..repeat.max(1))
                    .map(|_| {
                        let t = Instant::now();
                        std::hint::black_box(p.run(&records[..d], w));
                        t.elapsed().as_secs_f64()
                    })
                    .fold(f64::INFINITY, f64::min);
                writeln!(out, "{d},{w},{n},{best:.4}")?;
            }
        }
    }
    Ok(())
}

fn synth(docs: usize, seed: u64, sites: usize, out: &Path) -> Outcome {
    let records = generate_with(&SynthConfig {
        docs,
        seed,
        sites,
        ..SynthConfig::default()
    });
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write_jsonl(&records, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Ingest {
            inputs,
            config,
            geo,
            workers,
            out,
        } => ingest(&inputs, &config, &geo, workers, &out),
        Command::Append {
            dataset,
            inputs,
            config,
            geo,
            workers,
        } => append(&dataset, &inputs, &config, &geo, workers),
        Command::Shard {
            inputs,
            config,
            geo,
            index,
            count,
            workers,
            out,
        } => shard(&inputs, &config, &geo, index, count, workers, &out),
        Command::Merge { shards, config, out } => merge(&shards, &config, &out),
        Command::Serve {
            dataset,
            port,
            host,
            cors_origin,
        } => serve(&dataset, &host, port, cors_origin),
        Command::CloudSvg {
            dataset,
            lat,
            lon,
            bins,
            max_tags,
            radius,
            spark,
            out,
        } => cloud_svg(&dataset, &lat, &lon, bins.as_deref(), max_tags, radius, spark, &out),
        Command::Bench {
            docs,
            workers,
            ngram,
            seed,
            repeat,
        } => bench(&docs, &workers, &ngram, seed, repeat),
        Command::Synth { docs, seed, sites, out } => synth(docs, seed, sites, &out),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Contract(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use temporal_embed::align::{align_series_with, AlignOptions};
use temporal_embed::embed::{embed_snapshots, EmbeddingMatrix, RawEmbedding};
use temporal_embed::graph::{
    build_snapshots, clustering_coefficient, collapse_multi_edges, ingest_edge_list, NodeIndex,
    TemporalGraph,
};
use temporal_embed::pipeline::{
    evaluate_run_dir, layout, load_dataset, run_pipeline, run_suite, RunConfig, Suite,
};
use temporal_embed::synth::{generate_temporal_graph, DegreeTarget, SynthConfig};
use temporal_embed::{Error, Result};

/// Temporal node embeddings for link prediction and node classification.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Run seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disable scheduling-dependent parallelism for byte-identical output.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct EdgeArgs {
    /// `src<TAB>dst<TAB>timestamp[<TAB>weight]` edge list.
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    directed: bool,
    #[arg(long)]
    weighted: bool,
    /// Collapse repeated interactions into buckets of this width.
    #[arg(long)]
    collapse: Option<i64>,
}

impl EdgeArgs {
    fn load(&self) -> Result<TemporalGraph> {
        let g = ingest_edge_list(&self.edges, self.directed, self.weighted)?;
        match self.collapse {
            Some(w) => collapse_multi_edges(&g, w),
            None => Ok(g),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an edge list; write it normalized with a summary.
    Ingest(EdgeArgs),
    /// Summarize the cumulative snapshots of an edge list.
    Snapshot {
        #[command(flatten)]
        edges: EdgeArgs,
        /// Number of snapshots.
        #[arg(long = "steps", short = 'T')]
        steps: usize,
    },
    /// Embed every snapshot of the configured dataset.
    Embed,
    /// Align a directory of per-snapshot embeddings.
    Align {
        /// Directory of `.temb` files, taken in file-name order.
        #[arg(long)]
        input: PathBuf,
        /// Force det(R) = +1.
        #[arg(long)]
        proper_rotation: bool,
    },
    /// Run the full pipeline and write a run directory.
    Train,
    /// Re-evaluate a run directory from its checkpoint and split.
    Eval {
        #[arg(long)]
        run: PathBuf,
    },
    /// Generate a synthetic temporal graph.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long = "steps", short = 'T')]
        steps: usize,
        #[arg(long, default_value = "linear")]
        target: DegreeTarget,
    },
    /// Run every configuration of a suite file under each of its seeds.
    Suite {
        #[arg(long)]
        suite: PathBuf,
    },
}

macro_rules! say {
    ($($t:tt)*) => { emit(&format!($($t)*)) };
}

macro_rules! sayln {
    ($($t:tt)*) => { emit(&format!("{}\n", format_args!($($t)*))) };
}

// A closed pipe (e.g. `| head`) is not an error worth reporting.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing output: {e}");
        std::process::exit(1);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !msg.contains(&text) {
                    msg.push_str(&format!("\n  caused by: {text}"));
                }
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::invalid("this command needs --config"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.deterministic |= cli.deterministic;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    let out = cli
        .out
        .as_deref()
        .ok_or_else(|| Error::invalid("this command needs --out"))?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    Ok(out)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn tsv(g: &TemporalGraph) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    g.write_tsv(&mut buf)
        .map_err(|e| Error::io("<memory>", e))?;
    Ok(buf)
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage,
            source: Box::new(e),
        },
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(args) => {
            let g = staged("ingest", args.load())?;
            let out = out_dir(cli)?;
            let last = staged("snapshot", build_snapshots(&g, 1))?;
            let summary = json!({
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "distinct_timestamps": g.distinct_timestamps().len(),
                "time_range": g.time_range(),
                "directed": g.is_directed(),
                "clustering_coefficient": clustering_coefficient(last.last()),
            });
            write(&out.join("edges.tsv"), tsv(&g)?)?;
            write(&out.join("summary.json"), format!("{summary:#}\n"))?;
            sayln!("{summary:#}");
        }
        Command::Snapshot { edges, steps } => {
            let g = staged("ingest", edges.load())?;
            let series = staged("snapshot", build_snapshots(&g, *steps))?;
            let mut table = String::from("step\tboundary\tnodes\tedges\tclustering\n");
            for (k, (s, b)) in series
                .snapshots()
                .iter()
                .zip(series.boundaries())
                .enumerate()
            {
                table.push_str(&format!(
                    "{k}\t{b}\t{}\t{}\t{:.6}\n",
                    s.present_count(),
                    s.edge_count(),
                    clustering_coefficient(s)
                ));
            }
            if let Some(out) = &cli.out {
                write(&out.join("snapshots.tsv"), &table)?;
            }
            say!("{table}");
        }
        Command::Embed => {
            let cfg = run_config(cli)?;
            staged("config", cfg.validate())?;
            let out = cfg
                .out
                .as_deref()
                .ok_or_else(|| Error::invalid("embed needs --out or `out` in the config"))?;
            let data = staged("ingest", load_dataset(&cfg))?;
            let series = staged("snapshot", build_snapshots(&data.graph, cfg.steps))?;
            let (walk, skipgram, _) = cfg.stage_configs();
            let mats = staged("embed", embed_snapshots(&series, &walk, &skipgram))?;
            for (k, m) in mats.iter().enumerate() {
                let mut buf = Vec::new();
                m.write_binary(&mut buf).map_err(|e| Error::io(out, e))?;
                write(&out.join("raw").join(layout::step_file(k)), buf)?;
            }
            sayln!(
                "wrote {} embeddings to {}",
                mats.len(),
                out.join("raw").display()
            );
        }
        Command::Align {
            input,
            proper_rotation,
        } => {
            let mats = staged("align", read_embedding_dir(input))?;
            let opts = AlignOptions {
                proper_rotation: *proper_rotation,
                ..AlignOptions::default()
            };
            let aligned = staged("align", align_series_with(&mats, &opts))?;
            let out = out_dir(cli)?;
            let mut rot = Vec::new();
            for (k, (m, r)) in aligned.matrices.iter().zip(&aligned.rotations).enumerate() {
                let mut buf = Vec::new();
                m.write_binary(&mut buf).map_err(|e| Error::io(out, e))?;
                write(
                    &out.join(layout::ALIGNED_DIR).join(layout::step_file(k)),
                    buf,
                )?;
                r.write_tsv(&mut rot).map_err(|e| Error::io(out, e))?;
            }
            write(&out.join(layout::ROTATIONS), rot)?;
            sayln!("aligned {} embeddings", aligned.matrices.len());
        }
        Command::Train => {
            let cfg = run_config(cli)?;
            if cfg.out.is_none() {
                return Err(Error::invalid("train needs --out or `out` in the config"));
            }
            let run = run_pipeline(&cfg)?;
            say!("{}", run.report.to_json());
        }
        Command::Eval { run } => {
            let report = evaluate_run_dir(run)?;
            if let Some(out) = &cli.out {
                report.write(&out.join(layout::REPORT))?;
            }
            say!("{}", report.to_json());
        }
        Command::Synth {
            n,
            m,
            steps,
            target,
        } => {
            let cfg = SynthConfig {
                n: *n,
                m: *m,
                steps: *steps,
                target: *target,
                seed: cli.seed.unwrap_or(0),
            };
            let synth = staged("synth", generate_temporal_graph(&cfg))?;
            let out = out_dir(cli)?;
            let last = staged("snapshot", build_snapshots(&synth.graph, 1))?;
            let summary = json!({
                "config": cfg,
                "l1_distance": synth.l1_distance,
                "clustering_coefficient": clustering_coefficient(last.last()),
            });
            write(&out.join("edges.tsv"), tsv(&synth.graph)?)?;
            write(&out.join("synth.json"), format!("{summary:#}\n"))?;
            sayln!("{summary:#}");
        }
        Command::Suite { suite } => {
            let suite = staged("suite", Suite::load(suite))?;
            let outcome = run_suite(&suite, cli.out.as_deref());
            let csv = outcome.to_csv();
            match &cli.out {
                Some(out) => write(&out.join("suite.csv"), &csv)?,
                None => say!("{csv}"),
            }
            for f in &outcome.failures {
                eprintln!("run {} seed {} failed: {}", f.config_id, f.seed, f.message);
            }
        }
    }
    Ok(())
}

/// Reads `.temb` files in name order into one shared node index.
fn read_embedding_dir(dir: &Path) -> Result<Vec<EmbeddingMatrix>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "temb"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no .temb files in {}",
            dir.display()
        )));
    }
    let mut raws = Vec::new();
    let mut nodes = NodeIndex::new();
    for p in &paths {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        let raw = RawEmbedding::read(&bytes[..])?;
        for n in &raw.names {
            nodes.intern(n);
        }
        raws.push(bytes);
    }
    let nodes = Arc::new(nodes);
    raws.iter()
        .map(|b| EmbeddingMatrix::read_binary(&b[..], &nodes))
        .collect()
}

//! Command-line driver. Subcommands mirror the pipeline stages so each
//! step can be run and inspected on its own; `run` executes them all.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cgforge::pipeline::{
    self, export_dot, EnsembleDocument, GraphDocument, PipelineConfig, TierPalette,
};
use cgforge::Error;

#[derive(Parser)]
#[command(name = "cgforge", version, about = "Learn averaged causal graphs from discrete data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's number of ensemble runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the config's edge-frequency threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> cgforge::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::from_path(&self.config)?;
        cfg.apply_overrides(self.seed, self.runs, self.threshold, self.out.clone())?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write all output documents.
    Run(ConfigArgs),
    /// Load and preprocess the data, then print a dataset summary.
    Ingest(ConfigArgs),
    /// Learn the bootstrap ensemble and write the edge-frequency document.
    Learn(ConfigArgs),
    /// Threshold an edge-frequency document into the averaged graph.
    Average(ConfigArgs),
    /// Extract the Markov blanket subgraph of the configured targets.
    Mb(ConfigArgs),
    /// Render a graph document as Graphviz DOT.
    Export {
        /// Graph document (JSON) to render.
        #[arg(long)]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Optional config supplying tier color overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn read_to_string(path: &PathBuf) -> cgforge::Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
        path: path.clone(),
        source,
    })
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_run(args: &ConfigArgs) -> cgforge::Result<()> {
    let cfg = args.load()?;
    let out = pipeline::run_pipeline(&cfg)?;
    print_warnings(&out.warnings);
    println!(
        "learned {} runs; averaged graph: {} nodes, {} edges (threshold {})",
        cfg.runs,
        out.full_document.variables.len(),
        out.full_document.edges.len(),
        cfg.threshold
    );
    if !out.averaged.dropped_in_repair.is_empty() {
        eprintln!(
            "warning: cycle repair removed {} edge(s)",
            out.averaged.dropped_in_repair.len()
        );
    }
    println!(
        "markov blanket of {:?}: {} nodes, {} edges",
        cfg.targets,
        out.mb_document.variables.len(),
        out.mb_document.edges.len()
    );
    for path in &out.written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_ingest(args: &ConfigArgs) -> cgforge::Result<()> {
    let cfg = args.load()?;
    let pre = pipeline::preprocess(&cfg)?;
    print_warnings(&pre.warnings);
    println!(
        "dataset: {} rows, {} learning columns",
        pre.dataset.row_count(),
        pre.dataset.var_count()
    );
    for v in pre.dataset.variables() {
        println!("  {:<24} tier {:<3} arity {}", v.name, v.tier, v.arity());
    }
    Ok(())
}

fn cmd_learn(args: &ConfigArgs) -> cgforge::Result<()> {
    let cfg = args.load()?;
    let pre = pipeline::preprocess(&cfg)?;
    print_warnings(&pre.warnings);
    let (table, summaries) = pipeline::learn_frequencies(&cfg, &pre.dataset)?;
    let doc = EnsembleDocument::from_table(
        pre.dataset.variables(),
        &table,
        Some(pipeline::provenance(&cfg)),
    )?;
    let path = cfg.out.join("edge_frequencies.json");
    pipeline::write_atomic(&path, &doc.to_json()?)?;
    let capped = summaries.iter().filter(|s| s.hit_iteration_cap).count();
    if capped > 0 {
        eprintln!("warning: {capped} run(s) hit the iteration cap");
    }
    println!(
        "learned {} runs over {} variables; wrote {}",
        summaries.len(),
        pre.dataset.var_count(),
        path.display()
    );
    Ok(())
}

fn cmd_average(args: &ConfigArgs) -> cgforge::Result<()> {
    let cfg = args.load()?;
    let freq_path = cfg.out.join("edge_frequencies.json");
    let doc = EnsembleDocument::from_json(&read_to_string(&freq_path)?)?;
    let (averaged, full) = pipeline::average_stage(&cfg, &doc)?;
    if !averaged.dropped_in_repair.is_empty() {
        eprintln!(
            "warning: cycle repair removed {} edge(s)",
            averaged.dropped_in_repair.len()
        );
    }
    let json_path = cfg.out.join("full_graph.json");
    pipeline::write_atomic(&json_path, &full.to_json()?)?;
    let dot_path = cfg.out.join("full_graph.dot");
    pipeline::write_atomic(&dot_path, &export_dot(&full, &cfg.palette)?)?;
    println!(
        "averaged graph: {} edges at threshold {}; wrote {} and {}",
        full.edges.len(),
        cfg.threshold,
        json_path.display(),
        dot_path.display()
    );
    Ok(())
}

fn cmd_mb(args: &ConfigArgs) -> cgforge::Result<()> {
    let cfg = args.load()?;
    let full_path = cfg.out.join("full_graph.json");
    let full = GraphDocument::from_json(&read_to_string(&full_path)?)?;
    let mb = pipeline::mb_stage(&cfg, &full)?;
    let json_path = cfg.out.join("markov_blanket.json");
    pipeline::write_atomic(&json_path, &mb.to_json()?)?;
    let dot_path = cfg.out.join("markov_blanket.dot");
    pipeline::write_atomic(&dot_path, &export_dot(&mb, &cfg.palette)?)?;
    println!(
        "markov blanket of {:?}: {} nodes, {} edges; wrote {} and {}",
        cfg.targets,
        mb.variables.len(),
        mb.edges.len(),
        json_path.display(),
        dot_path.display()
    );
    Ok(())
}

fn cmd_export(
    input: &PathBuf,
    output: Option<&PathBuf>,
    config: Option<&PathBuf>,
) -> cgforge::Result<()> {
    let doc = GraphDocument::from_json(&read_to_string(input)?)?;
    let palette = match config {
        Some(path) => PipelineConfig::from_path(path)?.palette,
        None => TierPalette::default(),
    };
    let dot = export_dot(&doc, &palette)?;
    match output {
        Some(path) => {
            pipeline::write_atomic(path, &dot)?;
            println!("wrote {}", path.display());
        }
        None => print!("{dot}"),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> cgforge::Result<()> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Learn(args) => cmd_learn(args),
        Command::Average(args) => cmd_average(args),
        Command::Mb(args) => cmd_mb(args),
        Command::Export {
            input,
            output,
            config,
        } => cmd_export(input, output.as_ref(), config.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

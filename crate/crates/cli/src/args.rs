//! Command-line surface. Generate flags mirror `PipelineConfig` fields and
//! override values from `--config`.

use std::path::PathBuf;

use chartkit::dataset::Stage;
use chartkit::table::{ChartType, TableFormat};
use clap::{Args, Parser, Subcommand};

use crate::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "chartkit", version, about = "Synthetic chart datasets, chart metrics and MoE routing demos")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render charts and write instruction records for the selected stages.
    Generate(Box<GenerateArgs>),
    /// Score a predictions JSONL file.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// chartqa, chart2table, chart2text or opencqa.
        #[arg(long)]
        task: String,
        /// none, chart_type or question_type.
        #[arg(long, default_value = "none")]
        group_by: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Per-subset chart and sample counts of a generated dataset.
    Stats {
        /// records.jsonl or the directory holding it.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Router statistics, auxiliary loss and top-k dispatch for a logits file.
    MoeDemo {
        /// CSV (one token per line) or JSON matrix.
        #[arg(long)]
        logits: PathBuf,
        #[arg(long, default_value_t = chartkit::moe::DEFAULT_TOP_K)]
        k: usize,
        #[arg(long, default_value_t = chartkit::moe::DEFAULT_LAMBDA)]
        lambda: f64,
        /// Task loss to combine with the auxiliary loss.
        #[arg(long, default_value_t = 0.0)]
        l_reg: f64,
        #[arg(long)]
        no_renormalize: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render one table to a PNG plus annotation sidecar.
    Render {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_parser = parse_chart_type)]
        chart_type: Option<ChartType>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 480)]
        width: u32,
        #[arg(long, default_value_t = 360)]
        height: u32,
        #[arg(long, default_value_t = 0)]
        style_seed: u64,
        #[arg(long)]
        data_labels: bool,
    },
    /// Simulated OCR of a rendered chart.
    Ocr {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Print the full model input with this instruction.
        #[arg(long)]
        instruction: Option<String>,
    },
    /// Ranked chart types for a table.
    Recommend {
        #[arg(long)]
        table: PathBuf,
    },
    /// Write random tables for use as generator input.
    SynthTables {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: TableFormat,
    },
}

#[derive(Debug, Default, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub char_substitution_rate: Option<f64>,
    #[arg(long)]
    pub token_drop_rate: Option<f64>,
    #[arg(long)]
    pub merge_adjacent_rate: Option<f64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

impl NoiseArgs {
    pub fn apply(&self, n: &mut chartkit::ocr::NoiseConfig) {
        if let Some(v) = self.char_substitution_rate {
            n.char_substitution_rate = v;
        }
        if let Some(v) = self.token_drop_rate {
            n.token_drop_rate = v;
        }
        if let Some(v) = self.merge_adjacent_rate {
            n.merge_adjacent_rate = v;
        }
        if let Some(v) = self.noise_seed {
            n.rng_seed = v;
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct GenerateArgs {
    /// JSON file with any subset of the pipeline fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input_dir: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub synth_tables: Option<usize>,
    #[arg(long)]
    pub charts_per_table: Option<usize>,
    #[arg(long)]
    pub questions_per_chart: Option<usize>,
    #[arg(long)]
    pub prompt_variants: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_scribble: Option<bool>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated, e.g. `I,II`.
    #[arg(long, value_delimiter = ',', value_parser = parse_stage)]
    pub stages: Option<Vec<Stage>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub external_llm: Option<bool>,
    #[arg(long)]
    pub external_endpoint: Option<String>,
    #[arg(long)]
    pub external_model: Option<String>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub workers: Option<usize>,
}

macro_rules! set {
    ($cfg:expr, $args:expr, $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

impl GenerateArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if self.input_dir.is_some() {
            cfg.input_dir = self.input_dir.clone();
        }
        set!(
            cfg,
            self,
            output_dir,
            synth_tables,
            charts_per_table,
            questions_per_chart,
            prompt_variants,
            include_scribble,
            seed,
            stages,
            external_llm,
            width,
            height,
            workers
        );
        self.noise.apply(&mut cfg.noise);
        if let Some(e) = &self.external_endpoint {
            cfg.external.endpoint = e.clone();
        }
        if let Some(m) = &self.external_model {
            cfg.external.model = m.clone();
        }
        Ok(cfg)
    }
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::from_name(s).ok_or_else(|| format!("unknown stage {s:?} (I, II, III)"))
}

fn parse_chart_type(s: &str) -> Result<ChartType, String> {
    ChartType::from_name(s).ok_or_else(|| format!("unknown chart type {s:?}"))
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    TableFormat::from_extension(s).ok_or_else(|| format!("unknown format {s:?} (csv, json, md)"))
}

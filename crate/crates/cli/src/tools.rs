//! Single-purpose helpers behind the small subcommands.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use chartkit::ocr::{assemble_model_input, extract, NoiseConfig};
use chartkit::render::{render_fitted, ChartSpec, RenderedChart};
use chartkit::synth::random_table;
use chartkit::table::{parse_table, recommend_chart, serialize_table, ChartType, ChartTypeRecommendation, DataTable, TableFormat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;

pub fn read_table(path: &Path) -> anyhow::Result<DataTable> {
    let format = path
        .extension()
        .and_then(|e| e.to_str())
        .and_then(TableFormat::from_extension)
        .ok_or_else(|| anyhow!("{}: unknown table extension (csv, json, md)", path.display()))?;
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_table(&bytes, format).with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_recommend(table: &Path) -> anyhow::Result<Vec<ChartTypeRecommendation>> {
    Ok(recommend_chart(&read_table(table)?)?)
}

/// Renders to `output` plus its annotation sidecar. Without a chart type
/// the best recommendation is used.
pub fn cmd_render(
    table: &Path,
    chart_type: Option<ChartType>,
    output: &Path,
    (width, height): (u32, u32),
    style_seed: u64,
    data_labels: bool,
) -> anyhow::Result<RenderedChart> {
    let t = read_table(table)?;
    let chart_type = match chart_type {
        Some(c) => c,
        None => recommend_chart(&t)?[0].chart_type,
    };
    let spec = ChartSpec::for_table(&t, chart_type, width, height, style_seed).with_data_labels(data_labels);
    let chart = render_fitted(&t, &spec)?;
    chart.save(output).with_context(|| format!("writing {}", output.display()))?;
    Ok(chart)
}

/// Simulated OCR of a rendered chart, returned as the serialized model
/// input when an instruction is given, otherwise as the bare OCR text.
pub fn cmd_ocr(image: &Path, noise: &NoiseConfig, instruction: Option<&str>) -> anyhow::Result<String> {
    let chart = RenderedChart::load(image).with_context(|| format!("loading chart {}", image.display()))?;
    let ocr = extract(&chart, noise)?;
    Ok(match instruction {
        Some(i) => assemble_model_input(&ocr, i, &image.display().to_string()).serialize(),
        None => ocr.prompt_string,
    })
}

/// Writes `count` random tables, cycling through the chart types.
pub fn cmd_synth_tables(count: usize, seed: u64, out_dir: &Path, format: TableFormat) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let ext = match format {
        TableFormat::Csv => "csv",
        TableFormat::Json => "json",
        TableFormat::Markdown => "md",
    };
    (0..count)
        .map(|i| {
            let chart_type = ChartType::ALL[i % ChartType::ALL.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["table", &i.to_string()]));
            let t = random_table(&mut rng, chart_type);
            let name = format!("table_{i:04}.{ext}");
            let path = out_dir.join(&name);
            fs::write(&path, serialize_table(&t, format)).with_context(|| format!("writing {}", path.display()))?;
            Ok(name)
        })
        .collect()
}

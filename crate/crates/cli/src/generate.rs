//! Dataset generation: tables to charts to instruction records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chartkit::dataset::{
    build_stage_manifest, write_records, InstructionRecord, Manifest, Stage, Task, META_CHART_ID, META_CHART_TYPE,
    META_SUBSET,
};
use chartkit::ocr::{assemble_model_input, extract, NoiseConfig, OcrResult, IMAGE_PLACEHOLDER};
use chartkit::qa::{
    gen_cot_table_answer, gen_low_level_qa, gen_multi_turn_batch, gen_summary, sample_instruction, Conversation,
    ExternalChatClient, GeneratorBackend, InstructionTask, MultiTurnJob, QASample, QaError,
};
use chartkit::render::{render_fitted, BBox, ChartSpec, RenderedChart};
use chartkit::synth::random_table;
use chartkit::table::{parse_table, recommend_chart, serialize_table, ChartType, DataTable, TableFormat};
use chartkit::visual_prompt::{make_prompt, overlay, sample_prompt_kinds_n};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{derive_seed, PipelineConfig};

pub const SUBSET_VISUAL_PROMPT: &str = "visual_prompt";
pub const SUBSET_CHART_TO_TABLE: &str = "ocr_chart_to_table";
pub const SUBSET_SUMMARY: &str = "ocr_summary";
pub const SUBSET_MULTI_TURN: &str = "ocr_multi_turn";
pub const SUBSET_CHART_QA: &str = "chart_qa";
pub const SUBSET_TABLE_INSTRUCTION: &str = "chart_to_table_instruction";

/// Written to `manifest.json` next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: Manifest,
    pub config: PipelineConfig,
    pub seed: u64,
    pub noise_seed: u64,
    pub tables: usize,
    pub charts: usize,
    /// Input tables no chart type applies to.
    pub skipped_tables: Vec<String>,
    /// Stage name to manifest file, relative to the output root.
    pub stage_manifests: BTreeMap<String, String>,
}

struct NamedTable {
    name: String,
    table: DataTable,
    /// Chart type the table was synthesized for.
    intended: Option<ChartType>,
}

struct ChartJob<'a> {
    id: String,
    table: &'a NamedTable,
    chart_type: ChartType,
}

struct ChartOutput {
    records: Vec<InstructionRecord>,
    ocr: OcrResult,
}

fn load_tables(cfg: &PipelineConfig) -> anyhow::Result<Vec<NamedTable>> {
    let Some(dir) = &cfg.input_dir else {
        return Ok((0..cfg.synth_tables)
            .map(|i| {
                let chart_type = ChartType::ALL[i % ChartType::ALL.len()];
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["table", &i.to_string()]));
                NamedTable {
                    name: format!("synth_{i:04}"),
                    table: random_table(&mut rng, chart_type),
                    intended: Some(chart_type),
                }
            })
            .collect());
    };
    let mut paths: Vec<(PathBuf, TableFormat)> = fs::read_dir(dir)
        .with_context(|| format!("reading input directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("listing {}", dir.display()))?
        .into_iter()
        .filter_map(|p| {
            let f = p.extension().and_then(|e| e.to_str()).and_then(TableFormat::from_extension)?;
            Some((p, f))
        })
        .collect();
    paths.sort_by(|a, b| a.0.cmp(&b.0));
    paths
        .into_iter()
        .map(|(p, f)| {
            let bytes = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
            let table = parse_table(&bytes, f).with_context(|| format!("parsing {}", p.display()))?;
            Ok(NamedTable {
                name: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                table,
                intended: None,
            })
        })
        .collect()
}

fn chart_types(t: &NamedTable, n: usize) -> Option<Vec<ChartType>> {
    let recs = recommend_chart(&t.table).ok()?;
    let mut out: Vec<ChartType> = t.intended.into_iter().collect();
    for r in recs {
        if !out.contains(&r.chart_type) {
            out.push(r.chart_type);
        }
    }
    out.truncate(n);
    Some(out)
}

fn base_record(id: String, stage: Stage, task: Task, image_ref: &str, subset: &str, job: &ChartJob) -> InstructionRecord {
    let mut r = InstructionRecord::new(id, stage, task, image_ref);
    r.metadata.insert(META_SUBSET.into(), json!(subset));
    r.metadata.insert(META_CHART_ID.into(), json!(job.id));
    r.metadata.insert(META_CHART_TYPE.into(), json!(job.chart_type.name()));
    r.metadata.insert("source_table".into(), json!(job.table.name));
    r
}

/// Union of the marks a question refers to, if it has positive area.
fn target_bbox(chart: &RenderedChart, q: &QASample) -> Option<BBox> {
    let boxes: Vec<BBox> = chart
        .marks()
        .iter()
        .filter(|m| q.target_elements.iter().any(|e| e.series == m.series && e.category == m.category))
        .map(|m| m.bbox)
        .collect();
    let first = *boxes.first()?;
    let u = boxes[1..].iter().fold(first, |a, b| a.union(b));
    let (w, h) = (chart.width() as f64, chart.height() as f64);
    (u.area() > 0.0 && u.within(w, h)).then_some(u)
}

fn visual_prompt_records(
    cfg: &PipelineConfig,
    job: &ChartJob,
    chart: &RenderedChart,
    out_dir: &Path,
) -> anyhow::Result<Vec<InstructionRecord>> {
    let spec = chart.spec();
    let qa_seed = derive_seed(cfg.seed, &[&job.id, "qa"]);
    let usable: Vec<(QASample, BBox)> = gen_low_level_qa(&job.table.table, spec, qa_seed)?
        .into_iter()
        .filter_map(|q| target_bbox(chart, &q).map(|b| (q, b)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[&job.id, "questions"]));
    let picked: Vec<&(QASample, BBox)> = usable.choose_multiple(&mut rng, cfg.questions_per_chart).collect();
    let mut out = Vec::new();
    for (qi, (q, bbox)) in picked.into_iter().enumerate() {
        let qtag = format!("q{qi}");
        let kinds = sample_prompt_kinds_n(
            derive_seed(cfg.seed, &[&job.id, &qtag, "kinds"]),
            cfg.prompt_variants,
            cfg.include_scribble,
        );
        for kind in kinds {
            let seed = derive_seed(cfg.seed, &[&job.id, &qtag, kind.name()]);
            let prompt = make_prompt(kind, *bbox, (chart.width(), chart.height()), seed)?;
            let image_ref = format!("images/{}_{qtag}_{}.png", job.id, kind.name());
            let path = out_dir.join(&image_ref);
            fs::write(&path, overlay(chart, &prompt).image.encode_png())
                .with_context(|| format!("writing {}", path.display()))?;
            let id = format!("{}_vp_{qtag}_{}", job.id, kind.name());
            let mut r = base_record(id, Stage::II, Task::LowLevelQa, &image_ref, SUBSET_VISUAL_PROMPT, job);
            r.conversation.push_round(format!("{IMAGE_PLACEHOLDER}\n{}", q.question), &q.answer);
            r.metadata.insert("template_id".into(), json!(q.template_id));
            r.metadata.insert("qa_task".into(), serde_json::to_value(q.task)?);
            r.metadata.insert("prompt".into(), serde_json::to_value(&prompt)?);
            r.metadata.insert("prompt_seed".into(), json!(seed));
            out.push(r);
        }
    }
    Ok(out)
}

fn single_turn(
    job: &ChartJob,
    ocr: &OcrResult,
    image_ref: &str,
    (id_suffix, stage, task, subset): (&str, Stage, Task, &str),
    instruction: &str,
    answer: String,
) -> InstructionRecord {
    let layout = assemble_model_input(ocr, instruction, image_ref);
    let mut r = base_record(format!("{}_{id_suffix}", job.id), stage, task, image_ref, subset, job);
    r.ocr_prompt = ocr.prompt_string.clone();
    r.conversation.push_round(layout.serialize(), answer);
    r.metadata.insert("instruction".into(), json!(instruction));
    r
}

fn chart_records(cfg: &PipelineConfig, job: &ChartJob, out_dir: &Path) -> anyhow::Result<ChartOutput> {
    let t = &job.table.table;
    let style_seed = derive_seed(cfg.seed, &[&job.id, "style"]);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[&job.id, "chart"]));
    let spec = ChartSpec::for_table(t, job.chart_type, cfg.width, cfg.height, style_seed).with_data_labels(rng.gen_bool(0.5));
    let chart = render_fitted(t, &spec).with_context(|| format!("rendering {}", job.id))?;
    let image_ref = format!("images/{}.png", job.id);
    let path = out_dir.join(&image_ref);
    chart.save(&path).with_context(|| format!("writing {}", path.display()))?;

    let noise = NoiseConfig {
        rng_seed: derive_seed(cfg.noise.rng_seed, &[&job.id, "ocr"]),
        ..cfg.noise
    };
    let ocr = extract(&chart, &noise)?;
    let stages = &cfg.stages;
    let mut records = Vec::new();
    let inst = |task, name: &str| sample_instruction(task, derive_seed(cfg.seed, &[&job.id, name]));

    if stages.contains(&Stage::I) {
        let i = inst(InstructionTask::ChartToTable, "c2t");
        let answer = gen_cot_table_answer(t, &spec).text();
        let key = ("c2t", Stage::I, Task::ChartToTable, SUBSET_CHART_TO_TABLE);
        records.push(single_turn(job, &ocr, &image_ref, key, i, answer));
    }
    if stages.contains(&Stage::II) {
        let detailed = rng.gen_bool(0.5);
        let task = if detailed { InstructionTask::DetailedSummary } else { InstructionTask::BriefSummary };
        let key = ("sum", Stage::II, Task::Summarization, SUBSET_SUMMARY);
        let mut r = single_turn(job, &ocr, &image_ref, key, inst(task, "sum"), gen_summary(t, detailed));
        r.metadata.insert("detailed".into(), json!(detailed));
        records.push(r);
        records.extend(visual_prompt_records(cfg, job, &chart, out_dir)?);
    }
    if stages.contains(&Stage::III) {
        let i = inst(InstructionTask::ChartToTable, "table");
        let table = serialize_table(t, TableFormat::Markdown);
        let key = ("table", Stage::III, Task::ChartToTable, SUBSET_TABLE_INSTRUCTION);
        records.push(single_turn(job, &ocr, &image_ref, key, i, table));
        let qs = gen_low_level_qa(t, &spec, derive_seed(cfg.seed, &[&job.id, "chartqa"]))?;
        if let Some(q) = qs.choose(&mut rng) {
            let key = ("cqa", Stage::III, Task::ChartQa, SUBSET_CHART_QA);
            let mut r = single_turn(job, &ocr, &image_ref, key, &q.question, q.answer.clone());
            r.metadata.insert("template_id".into(), json!(q.template_id));
            records.push(r);
        }
    }
    Ok(ChartOutput { records, ocr })
}

fn multi_turn_records(
    cfg: &PipelineConfig,
    jobs: &[ChartJob],
    outputs: &[ChartOutput],
) -> anyhow::Result<Vec<InstructionRecord>> {
    let backend = if cfg.external_llm {
        GeneratorBackend::External(ExternalChatClient::new(cfg.external.clone())?)
    } else {
        GeneratorBackend::DeterministicTemplates
    };
    let max_in_flight = if cfg.external_llm { cfg.external.max_in_flight } else { cfg.workers };
    let mt_jobs: Vec<MultiTurnJob> = jobs
        .iter()
        .map(|j| MultiTurnJob {
            id: j.id.clone(),
            table: &j.table.table,
            seed: derive_seed(cfg.seed, &[&j.id, "multi_turn"]),
        })
        .collect();
    let by_id: BTreeMap<&str, (&ChartJob, &ChartOutput)> =
        jobs.iter().zip(outputs).map(|(j, o)| (j.id.as_str(), (j, o))).collect();
    let mut out = Vec::new();
    for (id, result) in gen_multi_turn_batch(&mt_jobs, &backend, max_in_flight) {
        let mt = match result {
            Ok(mt) => mt,
            Err(QaError::NoNumericData) => continue,
            Err(e) => return Err(anyhow!(e).context(format!("multi-turn generation for {id}"))),
        };
        let (job, o) = by_id[id.as_str()];
        let image_ref = format!("images/{}.png", job.id);
        let mut r = base_record(format!("{id}_mt"), Stage::II, Task::NumVisReasoning, &image_ref, SUBSET_MULTI_TURN, job);
        r.ocr_prompt = o.ocr.prompt_string.clone();
        let mut conv = Conversation::default();
        for (i, round) in mt.rounds.iter().enumerate() {
            let q = if i == 0 {
                assemble_model_input(&o.ocr, &round.question, &image_ref).serialize()
            } else {
                round.question.clone()
            };
            conv.push_round(q, &round.answer);
        }
        r.conversation = conv;
        r.metadata.insert("backend".into(), json!(mt.backend));
        if let Some(v) = mt.validated {
            r.metadata.insert("validated".into(), json!(v));
        }
        out.push(r);
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Renders every chart, builds the records of the selected stages, and
/// writes `images/`, `records.jsonl`, `manifest.json` and one manifest per
/// stage under the output directory.
pub fn cmd_generate(cfg: &PipelineConfig) -> anyhow::Result<RunManifest> {
    cfg.validate()?;
    let tables = load_tables(cfg)?;
    let out_dir = &cfg.output_dir;
    fs::create_dir_all(out_dir.join("images")).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut skipped = Vec::new();
    let mut jobs = Vec::new();
    for (ti, t) in tables.iter().enumerate() {
        match chart_types(t, cfg.charts_per_table) {
            Some(types) => jobs.extend(types.into_iter().map(|chart_type| ChartJob {
                id: format!("t{ti:04}_{}", chart_type.name()),
                table: t,
                chart_type,
            })),
            None => skipped.push(t.name.clone()),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let outputs: Vec<ChartOutput> =
        pool.install(|| jobs.par_iter().map(|j| chart_records(cfg, j, out_dir)).collect::<anyhow::Result<_>>())?;
    let mut records: Vec<InstructionRecord> = Vec::new();
    if cfg.stages.contains(&Stage::II) {
        records.extend(multi_turn_records(cfg, &jobs, &outputs)?);
    }
    records.extend(outputs.into_iter().flat_map(|o| o.records));
    records.sort_by(|a, b| a.id.cmp(&b.id));

    let dataset = write_records(&records, &out_dir.join("records.jsonl"))?.with_config_hash(cfg.hash());
    let mut stage_manifests = BTreeMap::new();
    for &stage in &cfg.stages {
        let subset: Vec<InstructionRecord> = records.iter().filter(|r| r.stage == stage).cloned().collect();
        let m = build_stage_manifest(stage, &subset)?.with_config_hash(cfg.hash());
        let name = format!("manifest_stage_{}.json", stage.name());
        write_json(&out_dir.join(&name), &m)?;
        stage_manifests.insert(stage.name().to_string(), name);
    }
    let run = RunManifest {
        dataset,
        config: cfg.clone(),
        seed: cfg.seed,
        noise_seed: cfg.noise.rng_seed,
        tables: tables.len(),
        charts: jobs.len(),
        skipped_tables: skipped,
        stage_manifests,
    };
    write_json(&out_dir.join("manifest.json"), &run)?;
    Ok(run)
}

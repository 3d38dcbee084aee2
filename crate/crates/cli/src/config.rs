use std::path::{Path, PathBuf};

use anyhow::Context;
use chartkit::dataset::Stage;
use chartkit::ocr::NoiseConfig;
use chartkit::qa::ExternalChatConfig;
use chartkit::render::MIN_SIDE_PX;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory of `.csv`, `.json` or `.md` tables. Without one,
    /// `synth_tables` random tables are generated from `seed`.
    pub input_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub synth_tables: usize,
    pub charts_per_table: usize,
    pub questions_per_chart: usize,
    /// Visual prompts drawn per question, each of a different kind.
    pub prompt_variants: usize,
    pub include_scribble: bool,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub external_llm: bool,
    pub external: ExternalChatConfig,
    pub width: u32,
    pub height: u32,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_dir: None,
            output_dir: PathBuf::from("out"),
            synth_tables: 10,
            charts_per_table: 1,
            questions_per_chart: 2,
            prompt_variants: 3,
            include_scribble: false,
            noise: NoiseConfig::none(),
            seed: 0,
            stages: Stage::ALL.to_vec(),
            external_llm: false,
            external: ExternalChatConfig::default(),
            width: 480,
            height: 360,
            workers: 4,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::InvalidConfig(m));
        for (name, v) in [
            ("charts_per_table", self.charts_per_table),
            ("questions_per_chart", self.questions_per_chart),
            ("prompt_variants", self.prompt_variants),
            ("workers", self.workers),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.input_dir.is_none() && self.synth_tables == 0 {
            return bad("synth_tables must be at least 1 without an input_dir".into());
        }
        let kinds = if self.include_scribble { 5 } else { 4 };
        if self.prompt_variants > kinds {
            return bad(format!("prompt_variants {} exceeds the {kinds} available prompt kinds", self.prompt_variants));
        }
        if self.width < MIN_SIDE_PX || self.height < MIN_SIDE_PX {
            return bad(format!("image size must be at least {MIN_SIDE_PX}px per side"));
        }
        if self.stages.is_empty() {
            return bad("no stages selected".into());
        }
        self.noise.validate().map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

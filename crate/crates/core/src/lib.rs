//! Synthetic chart-understanding data: tables, rendered charts with
//! annotations, visual prompts, QA and instruction records, simulated OCR,
//! evaluation metrics, and mixture-of-experts routing numerics.

pub mod dataset;
pub mod metrics;
pub mod moe;
pub mod ocr;
pub mod qa;
pub mod raster;
pub mod render;
pub mod synth;
pub mod table;
pub mod visual_prompt;

pub use dataset::{InstructionRecord, Manifest, Stage, Task};
pub use metrics::{Metric, MetricReport};
pub use ocr::{NoiseConfig, OcrResult};
pub use qa::QASample;
pub use render::{render, render_fitted, BBox, ChartSpec, RenderedChart};
pub use table::{Cell, ChartType, DataTable, TableError, TableFormat};
pub use visual_prompt::{PromptKind, VisualPrompt};

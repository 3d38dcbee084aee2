//! Batch driver for the chartkit pipeline. Every subcommand is a plain
//! function here so tests can call it without spawning the binary.

pub mod args;
pub mod config;
pub mod evaluate;
pub mod generate;
pub mod moe_demo;
pub mod stats;
pub mod tools;

use sha2::{Digest, Sha256};

pub use config::PipelineConfig;
pub use evaluate::{cmd_evaluate, EvalTask};
pub use generate::{cmd_generate, RunManifest};
pub use moe_demo::{cmd_moe_demo, MoeDemoReport};
pub use stats::cmd_stats;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown task {0:?}; expected one of chartqa, chart2table, chart2text, opencqa")]
    UnknownTask(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// I/O anywhere in the cause chain means exit 2; everything else is a
/// validation failure.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

/// Machine-readable error line for stderr.
pub fn error_json(e: &anyhow::Error) -> String {
    let code = exit_code(e);
    serde_json::json!({
        "error": {
            "kind": if code == EXIT_IO { "io" } else { "validation" },
            "exit_code": code,
            "message": format!("{e:#}"),
        }
    })
    .to_string()
}

/// Child seed for a named purpose, so adding a consumer never shifts the
/// streams of the others.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

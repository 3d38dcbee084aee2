use std::fs;
use std::path::Path;
use std::process::Command;

use chartkit::dataset::{read_records, Stage, Task};
use chartkit::metrics::GroupBy;
use chartkit_cli::tools::cmd_synth_tables;
use chartkit_cli::{cmd_evaluate, cmd_generate, cmd_moe_demo, cmd_stats, PipelineConfig};

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        output_dir: out.to_path_buf(),
        seed: 11,
        ..Default::default()
    }
}

#[test]
fn ten_tables_give_at_least_sixty_visual_prompt_records() {
    let dir = tempfile::tempdir().unwrap();
    let m = cmd_generate(&config(dir.path())).unwrap();
    assert!(m.charts >= 10);
    assert!(m.dataset.task_counts[&Task::LowLevelQa] >= 10 * 2 * 3);
    assert!(dir.path().join("images").is_dir());
    assert!(dir.path().join("manifest.json").is_file());
    let recs = read_records(&dir.path().join("records.jsonl")).unwrap();
    assert!(recs.windows(2).all(|w| w[0].id < w[1].id));
    for r in &recs {
        assert!(dir.path().join(&r.image_ref).is_file(), "{}", r.image_ref);
        r.check_stage().unwrap();
    }
}

#[test]
fn stage_selection_and_input_tables() {
    let dir = tempfile::tempdir().unwrap();
    let tables = dir.path().join("tables");
    cmd_synth_tables(4, 2, &tables, chartkit::table::TableFormat::Csv).unwrap();
    let cfg = PipelineConfig {
        input_dir: Some(tables),
        stages: vec![Stage::I],
        charts_per_table: 2,
        ..config(&dir.path().join("out"))
    };
    let m = cmd_generate(&cfg).unwrap();
    assert_eq!(m.tables, 4);
    assert_eq!(m.charts, 8);
    assert_eq!(m.dataset.task_counts.keys().copied().collect::<Vec<_>>(), [Task::ChartToTable]);
    assert_eq!(m.stage_manifests.len(), 1);
}

#[test]
fn evaluate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("qa.jsonl");
    fs::write(&p, "{\"id\":\"1\",\"prediction\":\"12\",\"gold\":\"12\"}\n{\"id\":\"2\",\"prediction\":\"Yes\",\"gold\":\"Yes\"}\n").unwrap();
    let (r, path) = cmd_evaluate(&p, "chartqa", GroupBy::None, None).unwrap();
    assert_eq!(r.overall, 100.0);
    assert!(path.is_file() && path.with_extension("txt").is_file());

    let t = dir.path().join("t.jsonl");
    let gold = "| k | a | b |\\n|---|---|---|\\n| x | 1 | 2 |\\n| y | 3 | 4 |";
    let perm = "| k | b | a |\\n|---|---|---|\\n| y | 4 | 3 |\\n| x | 2 | 1 |";
    fs::write(&t, format!("{{\"id\":\"1\",\"prediction\":\"{perm}\",\"gold\":\"{gold}\"}}\n")).unwrap();
    assert_eq!(cmd_evaluate(&t, "chart2table", GroupBy::None, None).unwrap().0.overall, 1.0);

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"1\",\"prediction\":\"1\",\"gold\":\"1\"}\n{\"id\":\"2\"\n").unwrap();
    let e = cmd_evaluate(&bad, "chartqa", GroupBy::None, None).unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
    assert!(cmd_evaluate(&p, "vqa", GroupBy::None, None).is_err());
}

#[test]
fn stats_of_empty_dataset_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("records.jsonl"), "").unwrap();
    let s = cmd_stats(dir.path()).unwrap();
    assert!(s.subsets.is_empty());
    assert_eq!((s.total.charts, s.total.samples, s.total.samples_per_chart), (0, 0, 0.0));
}

#[test]
fn moe_demo_examples() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = dir.path().join("u.json");
    fs::write(&uniform, "{\"logits\": [[0,0,0,0],[0,0,0,0]]}").unwrap();
    let r = cmd_moe_demo(&uniform, 2, 0.01, 0.0, true).unwrap();
    assert!((r.aux_loss - 1.0).abs() < 1e-12);

    let three = dir.path().join("l.csv");
    fs::write(&three, "e0,e1,e2\n0.1,2.0,-1\n3,3,0.5\n").unwrap();
    let r = cmd_moe_demo(&three, 2, 0.01, 0.0, true).unwrap();
    for picks in &r.dispatch.tokens {
        assert!((picks.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(r.losses.lambda, 0.01);
}

#[test]
fn binary_reports_errors_as_json_with_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_chartkit");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["generate", "--input-dir", "/definitely/missing", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let j: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(j["error"]["kind"], "io");

    let out = Command::new(bin)
        .args(["generate", "--prompt-variants", "9", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = Command::new(bin).args(["generate", "--synth-tables", "2", "--output-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

use std::path::Path;
use std::process::ExitCode;

use chartkit_cli::args::{Cli, Command};
use chartkit_cli::{evaluate, moe_demo, stats, tools};
use clap::Parser;
use serde::Serialize;

fn write_json<T: Serialize>(path: &Path, v: &T) -> anyhow::Result<()> {
    use anyhow::Context;
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.resolve()?;
            let m = chartkit_cli::cmd_generate(&cfg)?;
            println!(
                "{} records from {} charts ({} tables) written to {}",
                m.dataset.total,
                m.charts,
                m.tables,
                cfg.output_dir.display()
            );
        }
        Command::Evaluate {
            predictions,
            task,
            group_by,
            output_dir,
        } => {
            let by = evaluate::parse_group_by(&group_by)?;
            let (report, path) = chartkit_cli::cmd_evaluate(&predictions, &task, by, output_dir.as_deref())?;
            print!("{}", report.to_text());
            println!("report: {}", path.display());
        }
        Command::Stats { dataset, output } => {
            let s = chartkit_cli::cmd_stats(&dataset)?;
            print!("{}", stats::stats_text(&s));
            if let Some(o) = output {
                write_json(&o, &s)?;
            }
        }
        Command::MoeDemo {
            logits,
            k,
            lambda,
            l_reg,
            no_renormalize,
            output,
        } => {
            let r = chartkit_cli::cmd_moe_demo(&logits, k, lambda, l_reg, !no_renormalize)?;
            print!("{}", moe_demo::report_text(&r));
            if let Some(o) = output {
                write_json(&o, &r)?;
            }
        }
        Command::Render {
            table,
            chart_type,
            output,
            width,
            height,
            style_seed,
            data_labels,
        } => {
            let c = tools::cmd_render(&table, chart_type, &output, (width, height), style_seed, data_labels)?;
            println!("{} chart with {} marks written to {}", c.spec().chart_type, c.marks().len(), output.display());
        }
        Command::Ocr {
            image,
            noise,
            instruction,
        } => {
            let mut n = chartkit::ocr::NoiseConfig::none();
            noise.apply(&mut n);
            println!("{}", tools::cmd_ocr(&image, &n, instruction.as_deref())?);
        }
        Command::Recommend { table } => {
            for r in tools::cmd_recommend(&table)? {
                println!("{} {}", r.confidence_rank, r.chart_type);
            }
        }
        Command::SynthTables {
            count,
            seed,
            output_dir,
            format,
        } => {
            let names = tools::cmd_synth_tables(count, seed, &output_dir, format)?;
            println!("{} tables written to {}", names.len(), output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", chartkit_cli::error_json(&e));
            ExitCode::from(chartkit_cli::exit_code(&e) as u8)
        }
    }
}

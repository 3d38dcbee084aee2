use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use chartkit::moe::{
    aux_loss, combine_losses, dispatch_topk, load_stats, router_probs, token_share_histogram, Dispatch, LoadStats,
    LossBundle, RouterLogits,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoeDemoReport {
    pub tokens: usize,
    pub experts: usize,
    pub k: usize,
    pub renormalize: bool,
    pub load_stats: LoadStats,
    pub aux_loss: f64,
    /// `lambda` is always echoed so reports are never read without it.
    pub losses: LossBundle,
    pub dispatch: Dispatch,
    pub token_share: Vec<f64>,
}

/// Reads a JSON matrix (bare or under `"logits"`) or a CSV with one token
/// per line. A non-numeric first CSV line is taken as a header.
pub fn read_logits(path: &Path) -> anyhow::Result<RouterLogits> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let rows: Vec<Vec<f64>> = if is_json {
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let m = v.get("logits").cloned().unwrap_or(v);
        serde_json::from_value(m).context("expected a matrix of numbers")?
    } else {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            match parsed {
                Ok(r) => rows.push(r),
                Err(_) if i == 0 => {}
                Err(e) => bail!("line {}: {e}", i + 1),
            }
        }
        rows
    };
    Ok(RouterLogits::new(rows)?)
}

pub fn cmd_moe_demo(
    logits_path: &Path,
    k: usize,
    lambda: f64,
    l_reg: f64,
    renormalize: bool,
) -> anyhow::Result<MoeDemoReport> {
    let logits = read_logits(logits_path)?;
    let probs = router_probs(&logits);
    let stats = load_stats(&probs);
    let aux = aux_loss(&stats, logits.experts());
    let dispatch = dispatch_topk(&probs, k, renormalize)?;
    Ok(MoeDemoReport {
        tokens: logits.tokens(),
        experts: logits.experts(),
        k,
        renormalize,
        losses: combine_losses(l_reg, aux, lambda)?,
        token_share: token_share_histogram(&dispatch, logits.experts()),
        load_stats: stats,
        aux_loss: aux,
        dispatch,
    })
}

pub fn report_text(r: &MoeDemoReport) -> String {
    let mut s = format!("tokens {}  experts {}  k {}  renormalize {}\n\n", r.tokens, r.experts, r.k, r.renormalize);
    let _ = writeln!(s, "expert  {:>8}  {:>8}  {:>8}  share", "F", "P", "tokens");
    for e in 0..r.experts {
        let share = r.token_share[e];
        let bar = "#".repeat((share * 40.0).round() as usize);
        let _ = writeln!(
            s,
            "{e:>6}  {:>8.4}  {:>8.4}  {:>8.4}  {bar}",
            r.load_stats.f[e], r.load_stats.p[e], share
        );
    }
    let _ = writeln!(s, "\naux_loss {:.6}", r.aux_loss);
    let _ = writeln!(
        s,
        "total = l_reg {} + lambda {} * aux {:.6} = {:.6}\n\ndispatch:",
        r.losses.l_reg, r.losses.lambda, r.losses.l_aux, r.losses.total
    );
    for (t, picks) in r.dispatch.tokens.iter().enumerate() {
        let cells: Vec<String> = picks.iter().map(|(e, w)| format!("e{e}:{w:.4}")).collect();
        let _ = writeln!(s, "  token {t:>4}  {}", cells.join("  "));
    }
    s
}

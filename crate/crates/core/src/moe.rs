//! Reference numerics for a mixture-of-experts layer: router softmax, top-k
//! dispatch, load statistics, the load-balancing auxiliary loss, token NLL
//! and a finite-difference check of the auxiliary-loss gradient.
//!
//! Argmax ties resolve to the lowest expert index everywhere. Sums over
//! tokens use pairwise summation so results do not depend on batch layout
//! beyond row order.

use serde::{Deserialize, Serialize};

/// Weight of the auxiliary loss when none is configured.
pub const DEFAULT_LAMBDA: f64 = 0.01;
/// Experts per token in the demo unless configured.
pub const DEFAULT_TOP_K: usize = 2;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MoeError {
    #[error("non-finite value at token {token}, column {col}")]
    NonFiniteInput { token: usize, col: usize },
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("target {target} at step {step} is outside the vocabulary")]
    TargetOutOfRange { step: usize, target: usize },
    #[error("negative loss term {0}")]
    NegativeLoss(f64),
    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    InvalidStep(f64),
    #[error("token {token}: top-2 logit margin {margin} is within 10h; a perturbation could flip the argmax")]
    TieTooClose { token: usize, margin: f64 },
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Router logits, `L` tokens by `N` experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RouterLogits {
    rows: Vec<Vec<f64>>,
}

impl RouterLogits {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MoeError> {
        check_matrix(&rows, 2)?;
        Ok(RouterLogits { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn tokens(&self) -> usize {
        self.rows.len()
    }

    pub fn experts(&self) -> usize {
        self.rows[0].len()
    }
}

impl TryFrom<Vec<Vec<f64>>> for RouterLogits {
    type Error = MoeError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, MoeError> {
        RouterLogits::new(rows)
    }
}

impl From<RouterLogits> for Vec<Vec<f64>> {
    fn from(l: RouterLogits) -> Self {
        l.rows
    }
}

fn check_matrix(rows: &[Vec<f64>], min_cols: usize) -> Result<(), MoeError> {
    let Some(first) = rows.first() else {
        return Err(MoeError::Shape("no tokens".into()));
    };
    if first.len() < min_cols {
        return Err(MoeError::Shape(format!("{} columns, need at least {min_cols}", first.len())));
    }
    for (t, r) in rows.iter().enumerate() {
        if r.len() != first.len() {
            return Err(MoeError::Shape(format!("token {t} has {} columns, expected {}", r.len(), first.len())));
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(MoeError::NonFiniteInput { token: t, col });
        }
    }
    Ok(())
}

/// Numerically stable softmax of one row.
pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let s = pairwise_sum(&e);
    e.into_iter().map(|v| v / s).collect()
}

/// Per-token softmax over experts.
pub fn router_probs(logits: &RouterLogits) -> Vec<Vec<f64>> {
    logits.rows.iter().map(|r| softmax(r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    /// Share of tokens whose top expert is i.
    pub f: Vec<f64>,
    /// Mean router probability of expert i.
    pub p: Vec<f64>,
}

pub fn load_stats(probs: &[Vec<f64>]) -> LoadStats {
    let l = probs.len();
    let n = probs.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; n];
    for row in probs {
        counts[argmax(row)] += 1;
    }
    let f = counts.iter().map(|&c| c as f64 / l as f64).collect();
    let p = (0..n)
        .map(|j| {
            let col: Vec<f64> = probs.iter().map(|r| r[j]).collect();
            pairwise_sum(&col) / l as f64
        })
        .collect();
    LoadStats { f, p }
}

/// `N * sum_i F_i * P_i`.
pub fn aux_loss(stats: &LoadStats, n: usize) -> f64 {
    let terms: Vec<f64> = stats.f.iter().zip(&stats.p).map(|(f, p)| f * p).collect();
    n as f64 * pairwise_sum(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NllLoss {
    /// Mean negative log-likelihood; `+inf` when a target had probability 0.
    pub value: f64,
    pub zero_probability_target: bool,
}

/// Mean over steps of `-ln p(target)`.
pub fn nll_loss(token_probs: &[Vec<f64>], targets: &[usize]) -> Result<NllLoss, MoeError> {
    check_matrix(token_probs, 1)?;
    if token_probs.len() != targets.len() {
        return Err(MoeError::Shape(format!("{} steps but {} targets", token_probs.len(), targets.len())));
    }
    let mut terms = Vec::with_capacity(targets.len());
    for (step, (row, &target)) in token_probs.iter().zip(targets).enumerate() {
        let p = *row.get(target).ok_or(MoeError::TargetOutOfRange { step, target })?;
        if p <= 0.0 {
            return Ok(NllLoss {
                value: f64::INFINITY,
                zero_probability_target: true,
            });
        }
        terms.push(-p.ln());
    }
    Ok(NllLoss {
        value: pairwise_sum(&terms) / terms.len() as f64,
        zero_probability_target: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBundle {
    pub l_reg: f64,
    pub l_aux: f64,
    pub lambda: f64,
    pub total: f64,
}

/// `L = L_reg + lambda * L_aux`.
pub fn combine_losses(l_reg: f64, l_aux: f64, lambda: f64) -> Result<LossBundle, MoeError> {
    for v in [l_reg, l_aux, lambda] {
        if v < 0.0 || v.is_nan() {
            return Err(MoeError::NegativeLoss(v));
        }
    }
    Ok(LossBundle {
        l_reg,
        l_aux,
        lambda,
        total: l_reg + lambda * l_aux,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub k: usize,
    /// Per token, `(expert, weight)` in decreasing probability order.
    pub tokens: Vec<Vec<(usize, f64)>>,
}

/// Picks each token's `k` most probable experts. With `renormalize` the
/// selected probabilities are rescaled to sum to 1.
pub fn dispatch_topk(probs: &[Vec<f64>], k: usize, renormalize: bool) -> Result<Dispatch, MoeError> {
    check_matrix(probs, 1)?;
    let n = probs[0].len();
    if k == 0 || k > n {
        return Err(MoeError::InvalidK { k, n });
    }
    let tokens = probs
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..n).collect();
            // stable: equal probabilities keep the lower index first
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
            let chosen: Vec<(usize, f64)> = idx[..k].iter().map(|&i| (i, row[i])).collect();
            if !renormalize {
                return chosen;
            }
            let s = pairwise_sum(&chosen.iter().map(|c| c.1).collect::<Vec<_>>());
            chosen.into_iter().map(|(i, p)| (i, p / s)).collect()
        })
        .collect();
    Ok(Dispatch { k, tokens })
}

/// Weighted sum of the selected experts' outputs per token.
/// `expert_outputs[e][t]` is expert `e`'s output vector for token `t`.
pub fn combine_expert_outputs(d: &Dispatch, expert_outputs: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>, MoeError> {
    let dim = expert_outputs
        .first()
        .and_then(|e| e.first())
        .map(Vec::len)
        .ok_or_else(|| MoeError::Shape("no expert outputs".into()))?;
    d.tokens
        .iter()
        .enumerate()
        .map(|(t, picks)| {
            let mut out = vec![0.0; dim];
            for &(e, w) in picks {
                let y = expert_outputs
                    .get(e)
                    .and_then(|rows| rows.get(t))
                    .filter(|y| y.len() == dim)
                    .ok_or_else(|| MoeError::Shape(format!("missing output of expert {e} for token {t}")))?;
                for (o, v) in out.iter_mut().zip(y) {
                    *o += w * v;
                }
            }
            Ok(out)
        })
        .collect()
}

/// Share of top-k assignments that went to each expert.
pub fn token_share_histogram(d: &Dispatch, n_experts: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_experts];
    let mut total = 0usize;
    for picks in &d.tokens {
        for &(e, _) in picks {
            if e < n_experts {
                counts[e] += 1;
                total += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}

/// Auxiliary loss as a function of the logits with `f` held fixed.
fn frozen_aux(rows: &[Vec<f64>], f: &[f64]) -> f64 {
    let probs: Vec<Vec<f64>> = rows.iter().map(|r| softmax(r)).collect();
    let stats = LoadStats {
        f: f.to_vec(),
        p: load_stats(&probs).p,
    };
    aux_loss(&stats, f.len())
}

/// Gradient of the auxiliary loss with respect to the logits, treating the
/// argmax shares `F` as constants:
/// `d/dz_tk = N/L * p_tk * (F_k - sum_j F_j p_tj)`.
pub fn aux_loss_grad(logits: &RouterLogits) -> Vec<Vec<f64>> {
    let probs = router_probs(logits);
    let f = load_stats(&probs).f;
    let (l, n) = (logits.tokens() as f64, logits.experts() as f64);
    probs
        .iter()
        .map(|p| {
            let fp: f64 = f.iter().zip(p).map(|(a, b)| a * b).sum();
            p.iter().zip(&f).map(|(pk, fk)| n / l * pk * (fk - fp)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub analytic: Vec<Vec<f64>>,
    pub numeric: Vec<Vec<f64>>,
    pub max_abs_error: f64,
    pub h: f64,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_abs_error <= tol
    }
}

/// Compares [`aux_loss_grad`] with central differences of the same frozen-F
/// objective.
pub fn aux_grad_check(logits: &RouterLogits, h: f64) -> Result<GradCheckReport, MoeError> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(MoeError::InvalidStep(h));
    }
    for (token, row) in logits.rows.iter().enumerate() {
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let margin = sorted[0] - sorted[1];
        if margin <= 10.0 * h {
            return Err(MoeError::TieTooClose { token, margin });
        }
    }
    let analytic = aux_loss_grad(logits);
    let f = load_stats(&router_probs(logits)).f;
    let mut rows = logits.rows.clone();
    let mut numeric = vec![vec![0.0; logits.experts()]; logits.tokens()];
    let mut max_abs_error: f64 = 0.0;
    for t in 0..rows.len() {
        for k in 0..rows[t].len() {
            let z = rows[t][k];
            rows[t][k] = z + h;
            let up = frozen_aux(&rows, &f);
            rows[t][k] = z - h;
            let down = frozen_aux(&rows, &f);
            rows[t][k] = z;
            numeric[t][k] = (up - down) / (2.0 * h);
            max_abs_error = max_abs_error.max((numeric[t][k] - analytic[t][k]).abs());
        }
    }
    Ok(GradCheckReport {
        analytic,
        numeric,
        max_abs_error,
        h,
    })
}

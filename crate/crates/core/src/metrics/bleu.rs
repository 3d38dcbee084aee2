//! Corpus BLEU-4 with uniform weights and a brevity penalty. Higher-order
//! precisions use add-one smoothing; unigram precision is left as is, so no
//! word overlap at all scores zero.

use std::collections::HashMap;

use super::MetricError;

pub const MAX_ORDER: usize = 4;

/// Lowercases, splits on whitespace, and makes every ASCII punctuation mark
/// its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.to_lowercase().chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if c.is_ascii_punctuation() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Sufficient statistics for one or more sentence pairs; they add up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

impl BleuStats {
    pub fn of_pair(hyp: &str, reference: &str) -> Self {
        let h = tokenize(hyp);
        let r = tokenize(reference);
        let mut s = BleuStats {
            hyp_len: h.len(),
            ref_len: r.len(),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let hn = ngrams(&h, n);
            let rn = ngrams(&r, n);
            s.totals[n - 1] = h.len().saturating_sub(n - 1);
            s.matches[n - 1] = hn.iter().map(|(g, c)| (*c).min(rn.get(g).copied().unwrap_or(0))).sum();
        }
        s
    }

    pub fn add(mut self, o: &BleuStats) -> Self {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }

    /// Score in [0, 100].
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = (self.matches[0] as f64 / self.totals[0] as f64).ln();
        for n in 1..MAX_ORDER {
            log_sum += ((self.matches[n] + 1) as f64 / (self.totals[n] + 1) as f64).ln();
        }
        let bp = if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
    }
}

/// Corpus-level BLEU over aligned hypothesis/reference lists.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(hypotheses: &[S], references: &[T]) -> Result<f64, MetricError> {
    if hypotheses.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let stats = hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| BleuStats::of_pair(h.as_ref(), r.as_ref()))
        .fold(BleuStats::default(), |acc, s| acc.add(&s));
    Ok(stats.score())
}

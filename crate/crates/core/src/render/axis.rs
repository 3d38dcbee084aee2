//! Value-axis ranges and nice-number ticks.

/// Rounds `x` to 1, 2, 5 or 10 times a power of ten.
fn nice(x: f64, round: bool) -> f64 {
    let exp = x.log10().floor();
    let f = x / 10f64.powf(exp);
    let nf = if round {
        if f < 1.5 {
            1.0
        } else if f < 3.0 {
            2.0
        } else if f < 7.0 {
            5.0
        } else {
            10.0
        }
    } else if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nf * 10f64.powf(exp)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Ticks {
    pub step: f64,
    pub first: i64,
    pub last: i64,
    pub decimals: usize,
}

impl Ticks {
    /// Covers `[lo, hi]` with about `target` ticks on multiples of a nice step.
    pub fn covering(lo: f64, hi: f64, target: usize) -> Ticks {
        debug_assert!(hi > lo);
        let range = nice(hi - lo, false);
        let step = nice(range / (target.max(2) - 1) as f64, true);
        let first = (lo / step).floor() as i64;
        let last = (hi / step).ceil() as i64;
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        Ticks {
            step,
            first,
            last,
            decimals,
        }
    }

    pub fn lo(&self) -> f64 {
        self.first as f64 * self.step
    }

    pub fn hi(&self) -> f64 {
        self.last as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (self.first..=self.last).map(move |k| k as f64 * self.step)
    }

    pub fn label(&self, v: f64) -> String {
        let s = format!("{:.*}", self.decimals, v);
        if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    }
}

/// Bars always include the zero baseline: `[min(0, 1.1 min), max(0, 1.1 max)]`.
pub(crate) fn bar_range(min: f64, max: f64) -> (f64, f64) {
    let lo = (1.1 * min).min(0.0);
    let hi = (1.1 * max).max(0.0);
    if hi - lo <= 0.0 {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// Lines and scatter plots pad the data range by 5% on each side.
pub(crate) fn padded_range(min: f64, max: f64) -> (f64, f64) {
    let span = max - min;
    if span <= 0.0 {
        let pad = (min.abs() * 0.05).max(1.0);
        (min - pad, max + pad)
    } else {
        (min - 0.05 * span, max + 0.05 * span)
    }
}

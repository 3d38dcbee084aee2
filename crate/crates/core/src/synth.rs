//! Seeded random tables shaped for each chart type. Used to bootstrap
//! datasets without external table sources, and by tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::table::{Cell, ChartType, DataTable};

const PLACES: &[&str] = &[
    "USA", "China", "India", "Japan", "Brazil", "France", "Italy", "Spain", "Canada", "Mexico", "Kenya", "Chile",
    "Peru", "Egypt", "Norway", "Sweden", "Poland", "Ghana", "Nepal", "Cuba",
];
const GROUPS: &[&str] = &[
    "Male", "Female", "Urban", "Rural", "Online", "Retail", "Men", "Women", "Export", "Import", "Public", "Private",
];
const MEASURES: &[&str] = &["Revenue", "Share", "Users", "Sales", "Votes", "Growth", "Output", "Visits"];
const TITLES: &[&str] = &[
    "Share of respondents",
    "Annual revenue",
    "Market share by region",
    "Monthly active users",
    "Survey results",
    "Production output",
    "Approval ratings",
    "Energy use",
];

fn value<R: Rng>(rng: &mut R, scale: f64, allow_negative: bool) -> f64 {
    let lo = if allow_negative { -0.4 * scale } else { 0.02 * scale };
    let v: f64 = rng.gen_range(lo..scale);
    let decimals = rng.gen_range(0..=2);
    let f = 10f64.powi(decimals);
    let v = (v * f).round() / f;
    if !allow_negative && v <= 0.0 {
        1.0 / f
    } else {
        v
    }
}

/// A random table that `recommend_chart` accepts for `chart_type`.
pub fn random_table<R: Rng>(rng: &mut R, chart_type: ChartType) -> DataTable {
    let scale = 10f64.powi(rng.gen_range(0..=4)) * rng.gen_range(1.0..9.0);
    let title = TITLES.choose(rng).copied().unwrap_or_default();
    let (row_label, categories, n_series): (&str, Vec<String>, usize) = match chart_type {
        ChartType::Pie | ChartType::Bar => {
            let n = rng.gen_range(2..=if chart_type == ChartType::Pie { 8 } else { 10 });
            ("Country", pick(rng, PLACES, n), 1)
        }
        ChartType::StackedBar | ChartType::GroupedBar => {
            let n = rng.gen_range(2..=7);
            ("Country", pick(rng, PLACES, n), rng.gen_range(2..=4))
        }
        ChartType::Line | ChartType::GroupedLine => {
            let n = rng.gen_range(3..=10);
            let start = rng.gen_range(1990..2015);
            let cats = (0..n).map(|i| (start + i).to_string()).collect();
            ("Year", cats, if chart_type == ChartType::Line { 1 } else { rng.gen_range(2..=4) })
        }
        ChartType::Scatter => {
            let n = rng.gen_range(3..=12);
            let mut xs: Vec<i64> = (0..40).collect();
            xs.shuffle(rng);
            let mut xs: Vec<i64> = xs.into_iter().take(n).collect();
            xs.sort_unstable();
            ("Hours", xs.iter().map(|x| x.to_string()).collect(), 1)
        }
    };
    let series: Vec<String> = if n_series == 1 {
        vec![MEASURES.choose(rng).copied().unwrap_or("Value").to_string()]
    } else {
        pick(rng, GROUPS, n_series)
    };
    let allow_negative = matches!(chart_type, ChartType::Bar | ChartType::Line | ChartType::GroupedLine | ChartType::Scatter)
        && rng.gen_bool(0.2);
    let cells = categories
        .iter()
        .map(|_| series.iter().map(|_| Cell::number(value(rng, scale, allow_negative))).collect())
        .collect();
    DataTable::new(title, row_label, series, categories, cells).expect("synthetic table is valid")
}

fn pick<R: Rng>(rng: &mut R, pool: &[&str], n: usize) -> Vec<String> {
    pool.choose_multiple(rng, n).map(|s| s.to_string()).collect()
}

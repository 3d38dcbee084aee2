//! Template summaries of a table, used as reference answers for the
//! summarization subset.

use super::format_answer;
use crate::table::DataTable;

type Point<'a> = (&'a str, f64);

fn extremes<'a>(points: &[Point<'a>]) -> Option<(Point<'a>, Point<'a>)> {
    let first = *points.first()?;
    let (mut hi, mut lo) = (first, first);
    for &p in &points[1..] {
        if p.1 > hi.1 {
            hi = p;
        }
        if p.1 < lo.1 {
            lo = p;
        }
    }
    Some((hi, lo))
}

/// One or two sentences for `detailed = false`; one more sentence per
/// series otherwise. Ties name the first category.
pub fn gen_summary(t: &DataTable, detailed: bool) -> String {
    let series = t.series();
    let names: Vec<&str> = series.iter().map(|s| s.name).collect();
    let by = if t.category_label().is_empty() { "category" } else { t.category_label() };
    let mut s = if t.title().is_empty() {
        String::from("The chart")
    } else {
        format!("The chart titled \"{}\"", t.title())
    };
    s.push_str(&format!(" shows {} by {by} across {} categories.", names.join(", "), t.categories().len()));
    let parts: Vec<(&str, Vec<(&str, f64)>)> = series.iter().map(|x| (x.name, x.points.clone())).collect();
    if !detailed {
        let all: Vec<(&str, f64)> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
        if let Some(((hc, hv), _)) = extremes(&all) {
            s.push_str(&format!(" The highest value is {} for {hc}.", format_answer(hv)));
        }
        return s;
    }
    for (name, points) in &parts {
        if let Some(((hc, hv), (lc, lv))) = extremes(points) {
            s.push_str(&format!(
                " {name} peaks at {} in {hc} and is lowest at {} in {lc}.",
                format_answer(hv),
                format_answer(lv)
            ));
        }
    }
    s
}

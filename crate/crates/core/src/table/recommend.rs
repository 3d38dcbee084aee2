//! Rule-based chart recommendation.
//!
//! | categories | numeric series | ranking                                  |
//! |------------|----------------|------------------------------------------|
//! | text       | 1              | bar, pie (when eligible), line           |
//! | text       | >= 2           | grouped_bar, stacked_bar (non-negative), grouped_line |
//! | numeric    | 1              | scatter, line                            |
//! | numeric    | >= 2           | grouped_line                             |
//!
//! Pie is eligible only with every value >= 0 and at most 12 slices. Scatter
//! plots carry no legend, so they are only offered for a single series.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_number, DataTable, TableError};

pub const PIE_MAX_SLICES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartType {
    Pie,
    Bar,
    StackedBar,
    GroupedBar,
    Line,
    GroupedLine,
    Scatter,
}

impl ChartType {
    pub const ALL: [ChartType; 7] = [
        ChartType::Pie,
        ChartType::Bar,
        ChartType::StackedBar,
        ChartType::GroupedBar,
        ChartType::Line,
        ChartType::GroupedLine,
        ChartType::Scatter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChartType::Pie => "pie",
            ChartType::Bar => "bar",
            ChartType::StackedBar => "stacked_bar",
            ChartType::GroupedBar => "grouped_bar",
            ChartType::Line => "line",
            ChartType::GroupedLine => "grouped_line",
            ChartType::Scatter => "scatter",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ChartType::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Grouped and stacked variants carry a legend of series names.
    pub fn is_multi_series(self) -> bool {
        matches!(self, ChartType::StackedBar | ChartType::GroupedBar | ChartType::GroupedLine)
    }

    pub fn is_bar_family(self) -> bool {
        matches!(self, ChartType::Bar | ChartType::StackedBar | ChartType::GroupedBar)
    }

    pub fn is_line_family(self) -> bool {
        matches!(self, ChartType::Line | ChartType::GroupedLine)
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartTypeRecommendation {
    pub chart_type: ChartType,
    /// 1 is the best fit.
    pub confidence_rank: u32,
}

pub fn recommend_chart(t: &DataTable) -> Result<Vec<ChartTypeRecommendation>, TableError> {
    let series = t.series();
    if series.is_empty() {
        return Err(TableError::NoChartApplicable);
    }
    let numeric_keys = t.categories().iter().all(|c| parse_number(c).is_some());
    let non_negative = series.iter().flat_map(|s| &s.points).all(|(_, v)| *v >= 0.0);

    use ChartType::*;
    let types: Vec<ChartType> = match (numeric_keys, series.len()) {
        (false, 1) => {
            let pie_ok = non_negative && series[0].points.len() <= PIE_MAX_SLICES;
            if pie_ok {
                vec![Bar, Pie, Line]
            } else {
                vec![Bar, Line]
            }
        }
        (false, _) => {
            if non_negative {
                vec![GroupedBar, StackedBar, GroupedLine]
            } else {
                vec![GroupedBar, GroupedLine]
            }
        }
        (true, 1) => vec![Scatter, Line],
        (true, _) => vec![GroupedLine],
    };
    Ok(types
        .into_iter()
        .enumerate()
        .map(|(i, chart_type)| ChartTypeRecommendation {
            chart_type,
            confidence_rank: i as u32 + 1,
        })
        .collect())
}

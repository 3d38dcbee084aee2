//! Data tables: the ground truth behind every chart, question, and metric.
//!
//! A [`DataTable`] keeps its row-header column apart from the data cells.
//! The header of that column (the top-left corner of a CSV or markdown grid)
//! is stored as [`DataTable::row_label`] and usually names the category axis.

mod format;
mod number;
mod recommend;
mod triples;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use format::{extract_markdown_table, parse_table, serialize_table, TableFormat};
pub use number::{format_number, parse_number};
pub use recommend::{recommend_chart, ChartType, ChartTypeRecommendation};
pub use triples::{to_triples, TableTripleSet, Triple};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TableError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("table has no data rows or no data columns")]
    EmptyTable,
    #[error("no chart type applies to a table without numeric cells")]
    NoChartApplicable,
}

/// A single table value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Number {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    Text {
        value: String,
    },
    Empty,
}

impl Cell {
    pub fn number(value: f64) -> Self {
        Cell::Number { value, unit: None }
    }

    pub fn text(value: impl Into<String>) -> Self {
        Cell::Text {
            value: value.into(),
        }
    }

    /// Interprets raw cell text: blank becomes [`Cell::Empty`], numeric-looking
    /// text becomes a number with its unit recorded, everything else is text.
    pub fn parse(raw: &str) -> Self {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Cell::Empty;
        }
        match parse_number(trimmed) {
            Some((value, unit)) => Cell::Number { value, unit },
            None => Cell::text(trimmed),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Cell::Empty)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Number { value, unit } => f.write_str(&format_number(*value, unit.as_deref())),
            Cell::Text { value } => f.write_str(value),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesAxis {
    /// Each data column is a series; row headers are the categories.
    #[default]
    ColumnsAreSeries,
    /// Each row is a series; column headers are the categories.
    RowsAreSeries,
}

/// One numeric series of a table, in category order. Categories whose cell is
/// not a number are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(&'a str, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct DataTable {
    title: String,
    row_label: String,
    column_headers: Vec<String>,
    row_headers: Vec<String>,
    cells: Vec<Vec<Cell>>,
    series_axis: SeriesAxis,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    #[serde(default)]
    title: String,
    #[serde(default)]
    row_label: String,
    column_headers: Vec<String>,
    row_headers: Vec<String>,
    cells: Vec<Vec<Cell>>,
    #[serde(default)]
    series_axis: SeriesAxis,
}

impl TryFrom<RawTable> for DataTable {
    type Error = TableError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        DataTable::new(raw.title, raw.row_label, raw.column_headers, raw.row_headers, raw.cells)
            .map(|t| t.with_series_axis(raw.series_axis))
    }
}

impl From<DataTable> for RawTable {
    fn from(t: DataTable) -> Self {
        RawTable {
            title: t.title,
            row_label: t.row_label,
            column_headers: t.column_headers,
            row_headers: t.row_headers,
            cells: t.cells,
            series_axis: t.series_axis,
        }
    }
}

fn check_headers(kind: &str, headers: &[String]) -> Result<(), TableError> {
    let mut seen = HashSet::new();
    for h in headers {
        if h.trim().is_empty() {
            return Err(TableError::Schema(format!("empty {kind} header")));
        }
        if !seen.insert(h.as_str()) {
            return Err(TableError::Schema(format!("duplicate {kind} header {h:?}")));
        }
    }
    Ok(())
}

impl DataTable {
    pub fn new(
        title: impl Into<String>,
        row_label: impl Into<String>,
        column_headers: Vec<String>,
        row_headers: Vec<String>,
        cells: Vec<Vec<Cell>>,
    ) -> Result<Self, TableError> {
        if column_headers.is_empty() || row_headers.is_empty() {
            return Err(TableError::EmptyTable);
        }
        check_headers("column", &column_headers)?;
        check_headers("row", &row_headers)?;
        if cells.len() != row_headers.len() {
            return Err(TableError::Schema(format!(
                "{} cell rows for {} row headers",
                cells.len(),
                row_headers.len()
            )));
        }
        for (i, row) in cells.iter().enumerate() {
            if row.len() != column_headers.len() {
                return Err(TableError::Schema(format!(
                    "row {} has {} cells, expected {}",
                    i,
                    row.len(),
                    column_headers.len()
                )));
            }
            for cell in row {
                match cell {
                    Cell::Number { value, .. } if !value.is_finite() => {
                        return Err(TableError::Schema("non-finite number".into()))
                    }
                    Cell::Text { value } if value.trim().is_empty() => {
                        return Err(TableError::Schema("blank text cell".into()))
                    }
                    _ => {}
                }
            }
        }
        Ok(DataTable {
            title: title.into(),
            row_label: row_label.into(),
            column_headers,
            row_headers,
            cells,
            series_axis: SeriesAxis::ColumnsAreSeries,
        })
    }

    /// Builds an all-numeric table with one series per column.
    pub fn from_numbers(
        title: &str,
        row_label: &str,
        column_headers: &[&str],
        rows: &[(&str, &[f64])],
    ) -> Result<Self, TableError> {
        DataTable::new(
            title,
            row_label,
            column_headers.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|(h, _)| h.to_string()).collect(),
            rows.iter()
                .map(|(_, vals)| vals.iter().map(|v| Cell::number(*v)).collect())
                .collect(),
        )
    }

    pub fn with_series_axis(mut self, axis: SeriesAxis) -> Self {
        self.series_axis = axis;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn row_label(&self) -> &str {
        &self.row_label
    }

    pub fn column_headers(&self) -> &[String] {
        &self.column_headers
    }

    pub fn row_headers(&self) -> &[String] {
        &self.row_headers
    }

    pub fn cells(&self) -> &[Vec<Cell>] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&Cell> {
        self.cells.get(row).and_then(|r| r.get(col))
    }

    pub fn series_axis(&self) -> SeriesAxis {
        self.series_axis
    }

    pub fn n_rows(&self) -> usize {
        self.row_headers.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_headers.len()
    }

    pub fn numeric_cell_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.as_number().is_some()).count()
    }

    /// Category labels in axis order.
    pub fn categories(&self) -> &[String] {
        match self.series_axis {
            SeriesAxis::ColumnsAreSeries => &self.row_headers,
            SeriesAxis::RowsAreSeries => &self.column_headers,
        }
    }

    /// Label for the category axis.
    pub fn category_label(&self) -> &str {
        &self.row_label
    }

    fn series_cell(&self, series: usize, category: usize) -> &Cell {
        match self.series_axis {
            SeriesAxis::ColumnsAreSeries => &self.cells[category][series],
            SeriesAxis::RowsAreSeries => &self.cells[series][category],
        }
    }

    fn all_series_names(&self) -> &[String] {
        match self.series_axis {
            SeriesAxis::ColumnsAreSeries => &self.column_headers,
            SeriesAxis::RowsAreSeries => &self.row_headers,
        }
    }

    /// Every series holding at least one number. Text cells inside such a
    /// series are treated as missing points.
    pub fn series(&self) -> Vec<Series<'_>> {
        let cats = self.categories();
        self.all_series_names()
            .iter()
            .enumerate()
            .filter_map(|(s, name)| {
                let points: Vec<(&str, f64)> = cats
                    .iter()
                    .enumerate()
                    .filter_map(|(c, cat)| {
                        self.series_cell(s, c).as_number().map(|v| (cat.as_str(), v))
                    })
                    .collect();
                (!points.is_empty()).then_some(Series {
                    name: name.as_str(),
                    points,
                })
            })
            .collect()
    }

    /// The numeric value at (series, category), if any.
    pub fn value(&self, series: &str, category: &str) -> Option<f64> {
        let s = self.all_series_names().iter().position(|n| n == series)?;
        let c = self.categories().iter().position(|n| n == category)?;
        self.series_cell(s, c).as_number()
    }

    /// Compares everything except the title.
    pub fn same_data(&self, other: &DataTable) -> bool {
        self.row_label == other.row_label
            && self.column_headers == other.column_headers
            && self.row_headers == other.row_headers
            && self.cells == other.cells
            && self.series_axis == other.series_axis
    }
}

//! Readers and writers for the three table formats.
//!
//! * CSV (RFC 4180): the first record is the header row. Its first field is
//!   the row label; the remaining fields are column headers. Every later
//!   record starts with a row header.
//! * JSON: `{"title", "row_label"?, "series_axis"?, "columns": [..],
//!   "rows": [{"header", "cells": [..]}]}` where a cell is a number, a string
//!   (read with the same rules as CSV text), or `null`.
//! * Markdown: optional `Title: ...` and `Series: rows|columns` lines, then a
//!   GitHub-flavored pipe table. `\|` escapes a pipe and `<br>` a newline.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Cell, DataTable, SeriesAxis, TableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl TableFormat {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "csv" => Some(TableFormat::Csv),
            "json" => Some(TableFormat::Json),
            "md" | "markdown" => Some(TableFormat::Markdown),
            _ => None,
        }
    }
}

pub fn parse_table(source: &[u8], format: TableFormat) -> Result<DataTable, TableError> {
    let text = std::str::from_utf8(source).map_err(|e| TableError::Parse {
        line: 0,
        message: format!("invalid UTF-8: {e}"),
    })?;
    match format {
        TableFormat::Csv => parse_csv(text),
        TableFormat::Json => parse_json(text),
        TableFormat::Markdown => parse_markdown(text),
    }
}

pub fn serialize_table(table: &DataTable, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => write_csv(table),
        TableFormat::Json => write_json(table),
        TableFormat::Markdown => write_markdown(table),
    }
}

fn build(
    title: String,
    row_label: String,
    header: Vec<String>,
    rows: Vec<(String, Vec<Cell>)>,
) -> Result<DataTable, TableError> {
    if header.is_empty() || rows.is_empty() {
        return Err(TableError::EmptyTable);
    }
    let (row_headers, cells) = rows.into_iter().unzip();
    DataTable::new(title, row_label, header, row_headers, cells)
}

fn parse_csv(text: &str) -> Result<DataTable, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| TableError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        // skip fully blank lines
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        records.push(rec);
    }
    let Some(head) = records.first() else {
        return Err(TableError::EmptyTable);
    };
    let width = head.len();
    let row_label = head[0].trim().to_string();
    let header: Vec<String> = head.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in records.iter().enumerate().skip(1) {
        if rec.len() != width {
            return Err(TableError::Schema(format!(
                "record {} has {} fields, header has {}",
                i + 1,
                rec.len(),
                width
            )));
        }
        rows.push((
            rec[0].trim().to_string(),
            rec.iter().skip(1).map(Cell::parse).collect(),
        ));
    }
    build(String::new(), row_label, header, rows)
}

fn write_csv(t: &DataTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec![t.row_label().to_string()];
    head.extend(t.column_headers().iter().cloned());
    // writing into a Vec cannot fail
    w.write_record(&head).expect("in-memory csv");
    for (h, row) in t.row_headers().iter().zip(t.cells()) {
        let mut rec = vec![h.clone()];
        rec.extend(row.iter().map(|c| c.to_string()));
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    #[serde(default)]
    title: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    row_label: String,
    #[serde(default, skip_serializing_if = "is_default_axis")]
    series_axis: SeriesAxis,
    columns: Vec<String>,
    rows: Vec<JsonRow>,
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    header: String,
    cells: Vec<Value>,
}

fn is_default_axis(a: &SeriesAxis) -> bool {
    *a == SeriesAxis::ColumnsAreSeries
}

fn json_cell(v: &Value) -> Result<Cell, TableError> {
    match v {
        Value::Null => Ok(Cell::Empty),
        Value::Number(n) => n.as_f64().map(Cell::number).ok_or_else(|| TableError::Parse {
            line: 0,
            message: format!("unrepresentable number {n}"),
        }),
        Value::String(s) => Ok(Cell::parse(s)),
        other => Err(TableError::Parse {
            line: 0,
            message: format!("unsupported cell value {other}"),
        }),
    }
}

fn parse_json(text: &str) -> Result<DataTable, TableError> {
    let raw: JsonTable = serde_json::from_str(text).map_err(|e| TableError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut rows = Vec::with_capacity(raw.rows.len());
    for (i, row) in raw.rows.iter().enumerate() {
        if row.cells.len() != raw.columns.len() {
            return Err(TableError::Schema(format!(
                "row {} has {} cells, expected {}",
                i,
                row.cells.len(),
                raw.columns.len()
            )));
        }
        let cells = row.cells.iter().map(json_cell).collect::<Result<Vec<_>, _>>()?;
        rows.push((row.header.clone(), cells));
    }
    Ok(build(raw.title, raw.row_label, raw.columns, rows)?.with_series_axis(raw.series_axis))
}

fn write_json(t: &DataTable) -> String {
    let rows = t
        .row_headers()
        .iter()
        .zip(t.cells())
        .map(|(h, row)| JsonRow {
            header: h.clone(),
            cells: row
                .iter()
                .map(|c| match c {
                    Cell::Number { value, unit: None } => serde_json::json!(value),
                    Cell::Empty => Value::Null,
                    other => Value::String(other.to_string()),
                })
                .collect(),
        })
        .collect();
    let doc = JsonTable {
        title: t.title().to_string(),
        row_label: t.row_label().to_string(),
        series_axis: t.series_axis(),
        columns: t.column_headers().to_vec(),
        rows,
    };
    serde_json::to_string_pretty(&doc).expect("table json")
}

fn split_pipe_row(line: &str) -> Vec<String> {
    let mut s = line.trim();
    if let Some(rest) = s.strip_prefix('|') {
        s = rest;
    }
    if s.ends_with('|') && !s.ends_with("\\|") {
        s = &s[..s.len() - 1];
    }
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    cells.push(cur);
    cells.into_iter().map(|c| c.trim().replace("<br>", "\n")).collect()
}

fn is_delimiter_row(cells: &[String]) -> bool {
    !cells.is_empty()
        && cells.iter().all(|c| {
            let c = c.trim();
            let c = c.strip_prefix(':').unwrap_or(c);
            let c = c.strip_suffix(':').unwrap_or(c);
            !c.is_empty() && c.bytes().all(|b| b == b'-')
        })
}

fn parse_markdown(text: &str) -> Result<DataTable, TableError> {
    let mut title = String::new();
    let mut axis = SeriesAxis::ColumnsAreSeries;
    let mut lines = text.lines().enumerate().peekable();

    // metadata block
    while let Some(&(n, line)) = lines.peek() {
        let l = line.trim();
        if l.is_empty() {
            lines.next();
        } else if let Some(v) = l.strip_prefix("Title:") {
            title = v.trim().replace("<br>", "\n");
            lines.next();
        } else if let Some(v) = l.strip_prefix("Series:") {
            axis = match v.trim() {
                "rows" => SeriesAxis::RowsAreSeries,
                "columns" => SeriesAxis::ColumnsAreSeries,
                other => {
                    return Err(TableError::Parse {
                        line: n + 1,
                        message: format!("unknown series axis {other:?}"),
                    })
                }
            };
            lines.next();
        } else {
            break;
        }
    }

    let Some((head_no, head_line)) = lines.next() else {
        return Err(TableError::EmptyTable);
    };
    if !head_line.contains('|') {
        return Err(TableError::Parse {
            line: head_no + 1,
            message: "expected a pipe table header".into(),
        });
    }
    let head = split_pipe_row(head_line);
    let delim_ok = lines
        .next()
        .map(|(_, l)| is_delimiter_row(&split_pipe_row(l)))
        .unwrap_or(false);
    if !delim_ok {
        return Err(TableError::Parse {
            line: head_no + 2,
            message: "missing delimiter row".into(),
        });
    }
    if head.len() < 2 {
        return Err(TableError::EmptyTable);
    }

    let mut rows = Vec::new();
    let mut ended = false;
    for (n, line) in lines {
        if line.trim().is_empty() {
            ended = true;
            continue;
        }
        if ended || !line.contains('|') {
            return Err(TableError::Parse {
                line: n + 1,
                message: "unexpected content after table".into(),
            });
        }
        let cells = split_pipe_row(line);
        if cells.len() != head.len() {
            return Err(TableError::Schema(format!(
                "line {} has {} cells, header has {}",
                n + 1,
                cells.len(),
                head.len()
            )));
        }
        rows.push((cells[0].clone(), cells[1..].iter().map(|c| Cell::parse(c)).collect()));
    }
    Ok(build(title, head[0].clone(), head[1..].to_vec(), rows)?.with_series_axis(axis))
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', "<br>")
}

fn write_markdown(t: &DataTable) -> String {
    let mut out = String::new();
    if !t.title().is_empty() {
        out.push_str(&format!("Title: {}\n", md_escape(t.title())));
    }
    if t.series_axis() == SeriesAxis::RowsAreSeries {
        out.push_str("Series: rows\n");
    }
    let mut head = vec![md_escape(t.row_label())];
    head.extend(t.column_headers().iter().map(|h| md_escape(h)));
    out.push_str(&format!("| {} |\n", head.join(" | ")));
    out.push_str(&format!("|{}\n", " --- |".repeat(head.len())));
    for (h, row) in t.row_headers().iter().zip(t.cells()) {
        let mut cells = vec![md_escape(h)];
        cells.extend(row.iter().map(|c| md_escape(&c.to_string())));
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}

/// Finds the last markdown table in free text (for example the final step of
/// a step-by-step answer) and parses it, including any `Title:` / `Series:`
/// lines directly above it.
pub fn extract_markdown_table(text: &str) -> Result<DataTable, TableError> {
    let lines: Vec<&str> = text.lines().collect();
    let is_row = |l: &str| l.trim_start().starts_with('|');
    let Some(last) = lines.iter().rposition(|l| is_row(l)) else {
        return Err(TableError::EmptyTable);
    };
    let mut first = last;
    while first > 0 && is_row(lines[first - 1]) {
        first -= 1;
    }
    while first > 0 {
        let prev = lines[first - 1].trim();
        if prev.starts_with("Title:") || prev.starts_with("Series:") {
            first -= 1;
        } else {
            break;
        }
    }
    parse_markdown(&lines[first..=last].join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_basic() {
        let t = parse_table(b"x,y\nA,1\nB,2", TableFormat::Csv).unwrap();
        assert_eq!(t.row_label(), "x");
        assert_eq!(t.column_headers(), ["y"]);
        assert_eq!(t.row_headers(), ["A", "B"]);
        assert_eq!(t.cells(), [vec![Cell::number(1.0)], vec![Cell::number(2.0)]]);
    }

    #[test]
    fn csv_ragged_row() {
        let err = parse_table(b"x,y\nA,1\nB", TableFormat::Csv).unwrap_err();
        assert!(matches!(err, TableError::Schema(_)), "{err:?}");
    }

    #[test]
    fn csv_units_and_quotes() {
        let t = parse_table(b"k,v\n\"a, b\",\"1,234\"\nc,45%\nd,$3.2\ne,", TableFormat::Csv).unwrap();
        assert_eq!(t.row_headers()[0], "a, b");
        assert_eq!(t.cell(0, 0), Some(&Cell::number(1234.0)));
        assert_eq!(t.cell(1, 0), Some(&Cell::Number { value: 45.0, unit: Some("%".into()) }));
        assert_eq!(t.cell(2, 0), Some(&Cell::Number { value: 3.2, unit: Some("$".into()) }));
        assert_eq!(t.cell(3, 0), Some(&Cell::Empty));
    }

    #[test]
    fn csv_duplicate_header() {
        let err = parse_table(b"x,y,y\nA,1,2", TableFormat::Csv).unwrap_err();
        assert!(matches!(err, TableError::Schema(_)));
        let err = parse_table(b"x,y\nA,1\nA,2", TableFormat::Csv).unwrap_err();
        assert!(matches!(err, TableError::Schema(_)));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse_table(b"", TableFormat::Csv).unwrap_err(), TableError::EmptyTable);
        assert_eq!(parse_table(b"x,y\n", TableFormat::Csv).unwrap_err(), TableError::EmptyTable);
        assert_eq!(parse_table(b"x\nA\n", TableFormat::Csv).unwrap_err(), TableError::EmptyTable);
    }

    #[test]
    fn markdown_minimal() {
        // hand-parsed: header [h1, h2]; one body row [a, 3.5]
        let t = parse_table(b"|h1|h2|\n|-|-|\n|a|3.5|", TableFormat::Markdown).unwrap();
        assert_eq!(t.n_rows(), 1);
        assert_eq!(t.row_label(), "h1");
        assert_eq!(t.column_headers(), ["h2"]);
        assert_eq!(t.row_headers(), ["a"]);
        assert_eq!(t.cell(0, 0), Some(&Cell::number(3.5)));
    }

    #[test]
    fn markdown_metadata_and_escapes() {
        let src = "Title: Sales | 2020\nSeries: rows\n\n| k | a\\|b | c |\n|:--|--:|:-:|\n| r1 | x\\|y | 2 |\n";
        let t = parse_table(src.as_bytes(), TableFormat::Markdown).unwrap();
        assert_eq!(t.title(), "Sales | 2020");
        assert_eq!(t.series_axis(), SeriesAxis::RowsAreSeries);
        assert_eq!(t.column_headers(), ["a|b", "c"]);
        assert_eq!(t.cell(0, 0), Some(&Cell::text("x|y")));
    }

    #[test]
    fn markdown_errors() {
        assert!(matches!(
            parse_table(b"|a|b|\n|x|y|", TableFormat::Markdown),
            Err(TableError::Parse { .. })
        ));
        assert!(matches!(
            parse_table(b"|a|b|\n|-|-|\n|x|", TableFormat::Markdown),
            Err(TableError::Schema(_))
        ));
        assert!(matches!(
            parse_table(b"|a|b|\n|-|-|\n|x|1|\n\ntrailing", TableFormat::Markdown),
            Err(TableError::Parse { .. })
        ));
    }

    #[test]
    fn json_cells() {
        let src = r#"{"title":"T","row_label":"k","columns":["a","b"],
            "rows":[{"header":"r","cells":[1.5,"45%"]},{"header":"s","cells":[null,"hi"]}]}"#;
        let t = parse_table(src.as_bytes(), TableFormat::Json).unwrap();
        assert_eq!(t.title(), "T");
        assert_eq!(t.cell(0, 1), Some(&Cell::Number { value: 45.0, unit: Some("%".into()) }));
        assert_eq!(t.cell(1, 0), Some(&Cell::Empty));
        assert_eq!(t.cell(1, 1), Some(&Cell::text("hi")));
        let bad = r#"{"columns":["a"],"rows":[{"header":"r","cells":[1,2]}]}"#;
        assert!(matches!(parse_table(bad.as_bytes(), TableFormat::Json), Err(TableError::Schema(_))));
    }

    #[test]
    fn extracts_last_table_from_prose() {
        let text = "Step 1: read.\nStep 4: table\nTitle: Demo\n| k | v |\n| --- | --- |\n| A | 10 |\nDone.";
        let t = extract_markdown_table(text).unwrap();
        assert_eq!(t.title(), "Demo");
        assert_eq!(t.cell(0, 0), Some(&Cell::number(10.0)));
    }

    fn header() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9 |,\"]{0,8}".prop_map(|s| s.trim().to_string())
    }

    fn cell() -> impl Strategy<Value = Cell> {
        prop_oneof![
            (-1e6f64..1e6).prop_map(Cell::number),
            (-1e3f64..1e3, prop::sample::select(vec!["%", "$"]))
                .prop_map(|(v, u)| Cell::Number { value: v, unit: Some(u.into()) }),
            "[a-z][a-z |,]{0,6}[a-z]".prop_map(Cell::text),
            Just(Cell::Empty),
        ]
    }

    fn table() -> impl Strategy<Value = DataTable> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            (
                prop::collection::btree_set(header(), c..=c),
                prop::collection::btree_set(header(), r..=r),
                prop::collection::vec(prop::collection::vec(cell(), c..=c), r..=r),
                header(),
            )
                .prop_filter_map("headers", |(cols, rows, cells, label)| {
                    DataTable::new(
                        "",
                        label,
                        cols.into_iter().collect(),
                        rows.into_iter().collect(),
                        cells,
                    )
                    .ok()
                })
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(t in table()) {
            for fmt in [TableFormat::Csv, TableFormat::Json, TableFormat::Markdown] {
                let text = serialize_table(&t, fmt);
                let back = parse_table(text.as_bytes(), fmt).unwrap();
                prop_assert_eq!(&back, &t, "{:?}\n{}", fmt, text);
            }
        }
    }
}

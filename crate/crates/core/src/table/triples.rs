use serde::{Deserialize, Serialize};

use super::{Cell, DataTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub row_key: String,
    pub col_key: String,
    pub value: Cell,
}

/// A table flattened to (row, column, value) triples, sorted by key so that
/// row and column order do not matter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TableTripleSet {
    triples: Vec<Triple>,
}

impl TableTripleSet {
    /// Sorts and checks key uniqueness. Empty cells are dropped.
    pub fn from_triples(mut triples: Vec<Triple>) -> Result<Self, String> {
        triples.retain(|t| !t.value.is_empty());
        triples.sort_by(|a, b| (&a.row_key, &a.col_key).cmp(&(&b.row_key, &b.col_key)));
        if let Some(w) = triples
            .windows(2)
            .find(|w| w[0].row_key == w[1].row_key && w[0].col_key == w[1].col_key)
        {
            return Err(format!("duplicate key ({}, {})", w[0].row_key, w[0].col_key));
        }
        Ok(TableTripleSet { triples })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

pub fn to_triples(t: &DataTable) -> TableTripleSet {
    let mut triples = Vec::with_capacity(t.n_rows() * t.n_cols());
    for (r, row) in t.row_headers().iter().zip(t.cells()) {
        for (c, cell) in t.column_headers().iter().zip(row) {
            if !cell.is_empty() {
                triples.push(Triple {
                    row_key: r.clone(),
                    col_key: c.clone(),
                    value: cell.clone(),
                });
            }
        }
    }
    // headers are unique per axis, so keys are unique
    TableTripleSet::from_triples(triples).expect("validated table")
}

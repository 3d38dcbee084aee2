use serde::{Deserialize, Serialize};

use crate::render::ChartSpec;
use crate::table::{extract_markdown_table, serialize_table, DataTable, TableError, TableFormat};

/// A step-by-step answer that ends in the full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoTAnswer {
    pub steps: Vec<String>,
    pub final_table: DataTable,
}

impl CoTAnswer {
    pub fn text(&self) -> String {
        self.steps.join("\n\n")
    }
}

fn list(items: &[&str]) -> String {
    items.join(", ")
}

pub fn gen_cot_table_answer(t: &DataTable, spec: &ChartSpec) -> CoTAnswer {
    let series = t.series();
    let names: Vec<&str> = series.iter().map(|s| s.name).collect();
    let cats: Vec<&str> = t.categories().iter().map(String::as_str).collect();

    let title = if t.title().is_empty() {
        "has no title".to_string()
    } else {
        format!("is titled \"{}\"", t.title())
    };
    let step1 = format!("Step 1: This is a {} chart and it {}.", spec.chart_type.name().replace('_', " "), title);

    let axis = if t.category_label().is_empty() {
        "The x-axis".to_string()
    } else {
        format!("The x-axis ({})", t.category_label())
    };
    let step2 = if names.len() > 1 {
        format!("Step 2: {axis} lists {}. The legend shows {}.", list(&cats), list(&names))
    } else {
        format!("Step 2: {axis} lists {}. The values measure {}.", list(&cats), list(&names))
    };

    let mut step3 = String::from("Step 3: Reading the values in category order:");
    for s in &series {
        let pts: Vec<String> = s.points.iter().map(|(c, v)| format!("{c} = {v}")).collect();
        step3.push_str(&format!("\n- {}: {}", s.name, pts.join(", ")));
    }

    let step4 = format!("Step 4: The final table is:\n{}", serialize_table(t, TableFormat::Markdown).trim_end());
    CoTAnswer {
        steps: vec![step1, step2, step3, step4],
        final_table: t.clone(),
    }
}

/// Recovers the table from the last step of an answer text.
pub fn parse_cot_answer(text: &str) -> Result<DataTable, TableError> {
    extract_markdown_table(text)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionTask {
    ChartToTable,
    BriefSummary,
    DetailedSummary,
}

pub const CHART_TO_TABLE_TEMPLATES: [&str; 11] = [
    "Extract and organize the data from the chart into a clear and concise table.",
    "Create a detailed table reflecting the exact data points and categories shown in the chart.",
    "Reconstruct the chart's data into a structured table, ensuring all elements are captured.",
    "Translate the chart into a data table with precise values and labels as displayed.",
    "Convert the charted information into a comprehensive table, including all relevant details.",
    "Develop a tabular summary that encapsulates all the quantitative information from the chart.",
    "Compile the data depicted in the chart into a well-organized table for easy interpretation.",
    "Arrange the information contained within the chart into a methodical and detailed data table.",
    "Replicate the chart's information accurately in table format, with corresponding data entries.",
    "Catalog the chart data into a table, mirroring the exact figures and trends shown.",
    "Transcribe the visual data points from the chart into a systematic table format.",
];

// The source listing breaks the eighth line with a stray line break where a
// comma belongs; it is restored here.
pub const BRIEF_SUMMARY_TEMPLATES: [&str; 9] = [
    "Describe the image concisely.",
    "Provide a brief description of the given image.",
    "Offer a succinct explanation of the picture presented.",
    "Summarize the visual content of the image.",
    "Give a short and clear explanation of the subsequent image.",
    "Share a concise interpretation of the image provided.",
    "Present a compact description of the photo's key features.",
    "Relay a brief, clear account of the picture shown.",
    "Render a clear and concise summary of the photo.",
];

pub const DETAILED_SUMMARY_TEMPLATES: [&str; 10] = [
    "Describe the following image in detail.",
    "Provide a detailed description of the given image.",
    "Give an elaborate explanation of the image you see.",
    "Share a comprehensive rundown of the presented image.",
    "Offer a thorough analysis of the image.",
    "Explain the various aspects of the image before you.",
    "Clarify the contents of the displayed image with great detail.",
    "Characterize the image using a well-detailed description.",
    "Break down the elements of the image in a detailed manner.",
    "Walk through the important details of the image.",
];

pub fn instruction_templates(task: InstructionTask) -> &'static [&'static str] {
    match task {
        InstructionTask::ChartToTable => &CHART_TO_TABLE_TEMPLATES,
        InstructionTask::BriefSummary => &BRIEF_SUMMARY_TEMPLATES,
        InstructionTask::DetailedSummary => &DETAILED_SUMMARY_TEMPLATES,
    }
}

/// A template for `task`, uniform over the list.
pub fn sample_instruction(task: InstructionTask, rng_seed: u64) -> &'static str {
    let list = instruction_templates(task);
    list[ChaCha8Rng::seed_from_u64(rng_seed).gen_range(0..list.len())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_templates_are_reachable() {
        let hit = |task, s: &str| (0..500).any(|seed| sample_instruction(task, seed) == s);
        assert!(hit(InstructionTask::BriefSummary, "Describe the image concisely."));
        assert!(hit(
            InstructionTask::ChartToTable,
            "Extract and organize the data from the chart into a clear and concise table."
        ));
        assert_eq!(
            sample_instruction(InstructionTask::DetailedSummary, 9),
            sample_instruction(InstructionTask::DetailedSummary, 9)
        );
    }

    #[test]
    fn every_template_appears() {
        for task in [InstructionTask::ChartToTable, InstructionTask::BriefSummary, InstructionTask::DetailedSummary] {
            let seen: std::collections::HashSet<_> = (0..2000).map(|s| sample_instruction(task, s)).collect();
            assert_eq!(seen.len(), instruction_templates(task).len());
        }
    }
}

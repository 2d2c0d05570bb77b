//! Report files.

use roofkit_core::report::{render_markdown, AnalysisReport};

use crate::error::{Error, Result};
use crate::machine_io::from_json;

/// Pretty JSON with a trailing newline. Key order follows the struct.
pub fn report_to_json(report: &AnalysisReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

pub fn report_from_json(text: &str, origin: &str) -> Result<AnalysisReport> {
    from_json(text, origin)
}

pub fn report_to_markdown(report: &AnalysisReport) -> String {
    render_markdown(report)
}

/// Serializes and checks that the text parses back to the same report.
pub fn checked_report_json(report: &AnalysisReport) -> Result<String> {
    let text = report_to_json(report);
    let back = report_from_json(&text, "serialized report")
        .map_err(|e| Error::Internal(format!("report does not parse back: {e}")))?;
    // NaN never equals itself, so compare the re-serialized text instead
    if report_to_json(&back) != text {
        return Err(Error::Internal("report JSON does not round-trip".into()));
    }
    Ok(text)
}

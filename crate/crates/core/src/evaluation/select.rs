//! Model selection and the per-model comparison table.

use std::io::Write;

use crate::error::Result;
use crate::models::ModelKind;

/// Model with the highest score; ties go to the lower
/// [`ModelKind::precedence`]. `None` for an empty input.
pub fn select_best(results: &[(ModelKind, f64)]) -> Option<ModelKind> {
    results
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.precedence().cmp(&a.0.precedence())))
        .map(|(k, _)| k)
}

/// Writes `model,accuracy` rows in the order given.
pub fn write_accuracy_table<W: Write>(results: &[(ModelKind, f64)], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["model", "accuracy"])?;
    for (kind, acc) in results {
        w.write_record([kind.display_name().to_string(), acc.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

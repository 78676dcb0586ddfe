//! End-to-end run on the bundled synthetic fixture, exported to a directory.
//!
//! ```text
//! cargo run --example full_run -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use admitfair::models::ModelKind;
use admitfair::pipeline::{export_report, run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/full_run".into()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);

    let config = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&config)?;
    let b = &run.bundle;

    if let Some(log) = &b.cleaning {
        println!("cleaning: {} -> {} rows", log.rows_before, log.rows_after);
    }
    println!("{:<20} {:>10} {:>10}", "model", "uncleaned", "cleaned");
    for kind in ModelKind::ALL {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |a| format!("{:.1}%", 100.0 * a));
        println!(
            "{:<20} {:>10} {:>10}",
            kind.display_name(),
            fmt(b.uncleaned_cv_accuracy(kind)),
            fmt(b.cv_accuracy(kind))
        );
    }
    println!("selected: {}", b.selected_model.display_name());
    println!("test accuracy: {:.3}", b.test_report.accuracy);
    for a in &b.fairness.attributes {
        println!(
            "{}: dp gap {:.3}, eo gap {:.3}{}",
            a.attribute,
            a.dp_gap,
            a.eo_gap,
            if a.flagged { " (flagged)" } else { "" }
        );
    }
    for path in export_report(&run, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

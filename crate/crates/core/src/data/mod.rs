//! Ingestion: CSV parsing, harmonization of several sources, imputation,
//! missingness filtering, anomaly cleaning and the synthetic generator.

pub mod clean;
pub mod csv_io;
pub mod prep;
pub mod synth;
pub mod table;

pub use clean::{clean_anomalies, CleaningLog, CleaningRule};
pub use csv_io::{parse_csv, read_csv, to_csv_string, write_csv, write_csv_file, ParseOptions};
pub use prep::{drop_high_missingness, impute, merge_outer, CONTEXT_COLUMN};
pub use synth::{generate_synthetic, SyntheticConfig, PROBABILITY_COLUMN};
pub use table::{Cell, Column, ColumnKind, DataTable};

//! Series ingestion, aggregation, splitting, windowing and synthesis.

mod io;
mod series;
mod synthetic;
mod windows;

pub use io::{
    decode_binary, encode_binary, load_binary, load_csv, load_dataset, save_binary, save_csv, CsvOptions,
    MissingPolicy, DATASET_MAGIC, DATASET_VERSION,
};
pub use series::{aggregate, chronological_split, RawSeries};
pub use synthetic::{synthetic_generate, SyntheticSpec, SYNTHETIC_SEED_OFFSET};
pub use windows::{make_windows, window_count, WindowedDataset};

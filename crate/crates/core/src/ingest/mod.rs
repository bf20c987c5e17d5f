//! Loading, aligning, normalizing and segmenting dated series and documents.

mod documents;
mod frame;
mod segment;
mod windows;

pub use documents::{
    load_documents_jsonl, parse_documents_jsonl, write_documents_jsonl, Category, DocumentRecord,
    DocumentScores,
};
pub use frame::{
    align_and_fill, load_series_csv, minmax_normalize, read_series_csv, write_series_csv,
    FillPolicy, MinMaxScaler, SeriesFrame,
};
pub use segment::{segment, snap_to_trading_day, SegmentationSpec, Segments};
pub use windows::{make_direction_labels, make_supervised_windows, SupervisedSet};

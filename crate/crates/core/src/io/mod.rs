//! File formats: numeric tables, Netpbm images, model files, histogram text.

pub mod export;
pub mod model_file;
pub mod pnm;
pub mod schema;
pub mod table;

pub use export::{write_class_histogram, write_pairs, write_param_histogram};
pub use model_file::{
    decode_model, encode_model, load_model, save_model, ModelFile, ModelFileError, Payload,
    FORMAT_VERSION,
};
pub use pnm::{load_pnm, save_pnm, PnmError};
pub use schema::{normalize_value, ColumnRole, ColumnSchema, ColumnSpec};
pub use table::{load_table, parse_table, RawTable};

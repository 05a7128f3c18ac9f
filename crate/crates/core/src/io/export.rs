use std::io::Write;

use crate::index::ClassHistogram;
use crate::predictor::ParamHistogram;

/// Writes `key count` lines sorted by key.
pub fn write_pairs<W, I, K, C>(mut out: W, pairs: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (K, C)>,
    K: std::fmt::Display,
    C: std::fmt::Display,
{
    for (k, c) in pairs {
        writeln!(out, "{k} {c}")?;
    }
    Ok(())
}

pub fn write_class_histogram<W: Write>(out: W, h: &ClassHistogram) -> std::io::Result<()> {
    write_pairs(out, h.iter())
}

pub fn write_param_histogram<W: Write>(out: W, h: &ParamHistogram) -> std::io::Result<()> {
    write_pairs(out, h.as_slice().iter().copied())
}

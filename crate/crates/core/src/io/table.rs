//! Numeric text tables: comma- or whitespace-separated, optional header line.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl RawTable {
    pub fn width(&self) -> Option<usize> {
        self.rows
            .first()
            .map(Vec::len)
            .or(self.header.as_ref().map(Vec::len))
    }
}

fn split(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses table text. `origin` names the source in error messages.
pub fn parse_table(text: &str, origin: &str) -> Result<RawTable> {
    let mut table = RawTable::default();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells = split(line);
        if let Some(w) = width {
            if cells.len() != w {
                return Err(Error::Csv {
                    path: origin.to_owned(),
                    line: line_no,
                    message: format!("expected {w} columns, found {}", cells.len()),
                });
            }
        }
        let parsed: Vec<Option<f64>> = cells.iter().map(|c| parse_cell(c)).collect();
        if width.is_none() && table.header.is_none() && parsed.iter().any(Option::is_none) {
            table.header = Some(cells.iter().map(|c| c.to_string()).collect());
            width = Some(cells.len());
            continue;
        }
        let mut row = Vec::with_capacity(cells.len());
        for (cell, value) in cells.iter().zip(parsed) {
            match value {
                Some(v) => row.push(v),
                None => {
                    return Err(Error::Csv {
                        path: origin.to_owned(),
                        line: line_no,
                        message: format!("non-numeric cell {cell:?}"),
                    })
                }
            }
        }
        width = Some(row.len());
        table.rows.push(row);
    }
    Ok(table)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_table(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_without_header() {
        let t = parse_table("1 1 -0.0007 100.0\n1 2  0.0019 100.0 \n\n", "t").unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1], vec![1.0, 2.0, 0.0019, 100.0]);
    }

    #[test]
    fn comma_with_header() {
        let t = parse_table("r,g,b\n1,2,3\n4, 5 ,6\n", "t").unwrap();
        assert_eq!(t.header.unwrap(), vec!["r", "g", "b"]);
        assert_eq!(t.rows[1], vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_table("1,2\n3,x\n", "data.csv").unwrap_err();
        assert!(matches!(e, Error::Csv { line: 2, .. }), "{e}");
        let e = parse_table("1 2\n3\n", "data.csv").unwrap_err();
        assert!(matches!(e, Error::Csv { line: 2, .. }));
        assert!(parse_table("a b\n1 nan\n", "t").is_err());
    }
}

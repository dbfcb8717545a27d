//! LibSVM text format: `label idx:val idx:val ...` with 1-based, strictly
//! increasing indices. Labels may be encoded as `{-1, +1}` or `{0, 1}`; the
//! zero label maps to `-1`.

use std::io::{BufRead, Write};

use super::Dataset;
use crate::error::{Error, Result};

/// Parse a LibSVM stream into a dense dataset. The dimension is the largest
/// feature index seen unless `dim_override` forces it. Unmentioned features
/// are zero; blank lines are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R, dim_override: Option<usize>) -> Result<Dataset> {
    let mut labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line_id = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_id,
            message: format!("read failure: {e}"),
        })?;
        let mut tokens = line.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue; // blank line
        };
        labels.push(parse_label(label_tok, line_id)?);

        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut last_index = 0usize;
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_id,
                message: format!("malformed feature token '{tok}', expected idx:val"),
            })?;
            let idx: usize = idx_str.parse().map_err(|_| Error::Parse {
                line: line_id,
                message: format!("bad feature index '{idx_str}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_id,
                    message: "feature indices are 1-based; got 0".into(),
                });
            }
            if idx <= last_index {
                return Err(Error::Parse {
                    line: line_id,
                    message: format!("feature index {idx} not strictly increasing after {last_index}"),
                });
            }
            let val: f64 = val_str.parse().map_err(|_| Error::Parse {
                line: line_id,
                message: format!("bad feature value '{val_str}'"),
            })?;
            last_index = idx;
            row.push((idx - 1, val));
        }
        max_index = max_index.max(last_index);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty dataset".into(),
        });
    }
    let dim = match dim_override {
        Some(d) => {
            if d < max_index {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("dimension override {d} is below the largest index {max_index}"),
                });
            }
            d
        }
        None => max_index,
    };
    if dim == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "no features present and no dimension override given".into(),
        });
    }

    let mut features = vec![0.0; rows.len() * dim];
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            features[r * dim + c] = v;
        }
    }
    Dataset::new(features, labels, dim)
}

fn parse_label(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad label '{tok}'"),
    })?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 || v == 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::Parse {
            line,
            message: format!("unknown label value '{tok}', expected -1/+1 or 0/1"),
        })
    }
}

/// Emit a dataset in LibSVM text form (only nonzero features, 1-based).
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for j in 0..data.rows() {
        let label = if data.label(j) > 0.0 { "+1" } else { "-1" };
        write!(out, "{label}")?;
        for (c, &v) in data.row(j).iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{}", c + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::synth_dataset;

    #[test]
    fn parses_basic_rows() {
        let text = "+1 1:0.5 3:2.0\n-1\n";
        let data = parse_libsvm(text.as_bytes(), Some(3)).unwrap();
        assert_eq!(data.rows(), 2);
        assert_eq!(data.dim(), 3);
        assert_eq!(data.row(0), &[0.5, 0.0, 2.0]);
        assert_eq!(data.label(0), 1.0);
        assert_eq!(data.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(data.label(1), -1.0);
    }

    #[test]
    fn zero_one_labels_map_to_signs() {
        let data = parse_libsvm("0 1:1\n1 1:2\n".as_bytes(), None).unwrap();
        assert_eq!(data.label(0), -1.0);
        assert_eq!(data.label(1), 1.0);
    }

    #[test]
    fn dimension_is_max_index_without_override() {
        let data = parse_libsvm("+1 2:1.0\n-1 5:3.0\n".as_bytes(), None).unwrap();
        assert_eq!(data.dim(), 5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_libsvm("+1 1:0.5\n-1 nonsense\n".as_bytes(), None).unwrap_err();
        assert!(format!("{err}").contains("line 2"), "{err}");

        let err = parse_libsvm("+1 3:1 2:1\n".as_bytes(), None).unwrap_err();
        assert!(format!("{err}").contains("strictly increasing"), "{err}");

        let err = parse_libsvm("5 1:1\n".as_bytes(), None).unwrap_err();
        assert!(format!("{err}").contains("label"), "{err}");

        let err = parse_libsvm("+1 0:1\n".as_bytes(), None).unwrap_err();
        assert!(format!("{err}").contains("1-based"), "{err}");
    }

    #[test]
    fn round_trip_preserves_values() {
        let data = synth_dataset(5, 7, 40, 0.3).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&data, &mut buf).unwrap();
        let back = parse_libsvm(buf.as_slice(), Some(7)).unwrap();
        assert_eq!(back, data);
    }
}

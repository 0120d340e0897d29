//! Plain-text matrix format for profiles.
//!
//! Dense: a header `n m symmetric_flag` (flag 0 or 1) followed by `n` rows
//! of `m` space-separated decimal entries. Sparse: a header `n m nnz`
//! followed by `nnz` lines `i j value` with 1-based indices. Values are
//! written with shortest round-trip formatting, so save/load is exact at
//! full f64 precision.
//!
//! A dense header is recognized when the third field is 0 or 1, the number
//! of data lines equals `n`, and (for flag 1) the matrix is square; anything
//! else parses as sparse.

use super::{FamilyTag, StdDevProfile, Storage};
use crate::error::{Error, Result};
use ndarray::Array2;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

impl StdDevProfile {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_text(&mut file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_text(file)
    }

    /// Writes the profile in the storage-matched variant: dense storage is
    /// written dense, coordinate storage is written as triplets.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        match &self.storage {
            Storage::Dense(mat) => {
                writeln!(w, "{} {} {}", self.nrows, self.ncols, self.symmetric as u8)?;
                for i in 0..self.nrows {
                    let row: Vec<String> = (0..self.ncols).map(|j| format!("{}", mat[(i, j)])).collect();
                    writeln!(w, "{}", row.join(" "))?;
                }
            }
            Storage::Sparse { rows, nnz, .. } => {
                writeln!(w, "{} {} {}", self.nrows, self.ncols, nnz)?;
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_text(r: impl Read) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines: Vec<(usize, String)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                lines.push((idx + 1, trimmed.to_string()));
            }
        }
        let Some((header_line, header)) = lines.first().cloned() else {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            });
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("header must have 3 fields, got {}", fields.len()),
            });
        }
        let parse_usize = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: header_line,
                msg: format!("invalid {what}: {s}"),
            })
        };
        let n = parse_usize(fields[0], "row count")?;
        let m = parse_usize(fields[1], "column count")?;
        let third = parse_usize(fields[2], "flag/nnz field")?;
        if n == 0 || m == 0 {
            return Err(Error::Parse {
                line: header_line,
                msg: "dimensions must be positive".into(),
            });
        }
        let data = &lines[1..];

        let dense_candidate = third <= 1
            && data.len() == n
            && data
                .iter()
                .all(|(_, l)| l.split_whitespace().count() == m)
            && (third == 0 || n == m);
        if dense_candidate {
            let mut entries = Array2::zeros((n, m));
            for (i, (line_no, line)) in data.iter().enumerate() {
                for (j, tok) in line.split_whitespace().enumerate() {
                    entries[(i, j)] = parse_value(tok, *line_no)?;
                }
            }
            let profile = StdDevProfile::from_dense(entries, FamilyTag::Custom)?;
            if third == 1 && !profile.is_symmetric() {
                return Err(Error::Parse {
                    line: header_line,
                    msg: "symmetric flag set but entries are not symmetric".into(),
                });
            }
            return Ok(profile);
        }

        // sparse triplets
        if data.len() != third {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("expected {} triplet lines, found {}", third, data.len()),
            });
        }
        let mut entries = Array2::zeros((n, m));
        let mut seen = std::collections::HashSet::new();
        for (line_no, line) in data {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Parse {
                    line: *line_no,
                    msg: format!("triplet must have 3 fields, got {}", toks.len()),
                });
            }
            let i = toks[0].parse::<usize>().map_err(|_| Error::Parse {
                line: *line_no,
                msg: format!("invalid row index {}", toks[0]),
            })?;
            let j = toks[1].parse::<usize>().map_err(|_| Error::Parse {
                line: *line_no,
                msg: format!("invalid column index {}", toks[1]),
            })?;
            if i == 0 || i > n || j == 0 || j > m {
                return Err(Error::Parse {
                    line: *line_no,
                    msg: format!("index ({i}, {j}) out of range for {n} x {m} (1-based)"),
                });
            }
            if !seen.insert((i, j)) {
                return Err(Error::Parse {
                    line: *line_no,
                    msg: format!("duplicate entry for ({i}, {j})"),
                });
            }
            entries[(i - 1, j - 1)] = parse_value(toks[2], *line_no)?;
        }
        StdDevProfile::from_dense(entries, FamilyTag::Custom)
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v = tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value {tok}"),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Parse {
            line,
            msg: format!("value {v} must be finite and non-negative"),
        });
    }
    Ok(v)
}

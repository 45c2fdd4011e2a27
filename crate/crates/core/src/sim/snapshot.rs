//! Plain-text height map snapshots.
//!
//! ```text
//! dough-heightmap 1
//! resolution 0.001
//! origin -0.15 -0.15
//! dims 300 300
//! <rows lines of `cols` space-separated heights, row 0 first>
//! ```

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::HeightMap;
use crate::geometry::Vec2;

const MAGIC: &str = "dough-heightmap 1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub fn write_snapshot(hm: &HeightMap, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "resolution {}", hm.resolution)?;
    writeln!(out, "origin {} {}", hm.origin.x, hm.origin.y)?;
    writeln!(out, "dims {} {}", hm.rows, hm.cols)?;
    for row in hm.heights.chunks(hm.cols) {
        let line: Vec<String> = row.iter().map(|h| h.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_snapshot(input: impl BufRead) -> Result<HeightMap, SnapshotError> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), SnapshotError> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(SnapshotError::Parse { line: 0, msg: format!("missing {what}") }),
        }
    };
    let (n, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(SnapshotError::Parse { line: n, msg: "not a height map snapshot".into() });
    }
    let field = |(n, l): (usize, String), key: &str, count: usize| -> Result<Vec<f64>, SnapshotError> {
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(SnapshotError::Parse { line: n, msg: format!("expected `{key}`") });
        }
        let vals: Vec<f64> = it
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| SnapshotError::Parse { line: n, msg: format!("{e}") })?;
        if vals.len() != count {
            return Err(SnapshotError::Parse { line: n, msg: format!("`{key}` takes {count} values") });
        }
        Ok(vals)
    };
    let res = field(next("resolution")?, "resolution", 1)?[0];
    let origin = field(next("origin")?, "origin", 2)?;
    let dims = field(next("dims")?, "dims", 2)?;
    let (rows, cols) = (dims[0] as usize, dims[1] as usize);
    let mut hm = HeightMap::new(res, Vec2::new(origin[0], origin[1]), rows, cols);
    for row in 0..rows {
        let (n, l) = next("row")?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| SnapshotError::Parse { line: n, msg: format!("{e}") })?;
        if vals.len() != cols {
            return Err(SnapshotError::Parse { line: n, msg: format!("expected {cols} heights, got {}", vals.len()) });
        }
        hm.heights[row * cols..(row + 1) * cols].copy_from_slice(&vals);
    }
    Ok(hm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn snapshot_roundtrip(rows in 1usize..6, cols in 1usize..6, seed in proptest::collection::vec(0.0f64..0.02, 36)) {
            let mut hm = HeightMap::new(0.001, Vec2::new(-0.01, 0.02), rows, cols);
            for (h, s) in hm.heights.iter_mut().zip(&seed) {
                *h = *s;
            }
            let mut buf = Vec::new();
            write_snapshot(&hm, &mut buf).unwrap();
            let back = read_snapshot(&buf[..]).unwrap();
            prop_assert_eq!(back, hm);
        }
    }

    #[test]
    fn rejects_short_row() {
        let text = "dough-heightmap 1\nresolution 0.001\norigin 0 0\ndims 1 2\n0.1\n";
        assert!(matches!(read_snapshot(text.as_bytes()), Err(SnapshotError::Parse { line: 5, .. })));
    }
}

//! Plain-text matrix files.
//!
//! ```text
//! rows cols
//! v00 v01 ... v0(cols-1)
//! ...
//! ```
//!
//! Binary matrices use `0`/`1`; weight matrices use the shortest decimal form
//! that parses back to the same `f64`, so round trips are bit-exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::snn::WeightMatrix;

fn parse_header(line: Option<(usize, &str)>) -> Result<(usize, usize)> {
    let (n, line) = line.ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    let bad = || Error::Parse {
        line: n + 1,
        msg: format!("expected `rows cols`, got `{line}`"),
    };
    if fields.len() != 2 {
        return Err(bad());
    }
    let rows = fields[0].parse().map_err(|_| bad())?;
    let cols = fields[1].parse().map_err(|_| bad())?;
    Ok((rows, cols))
}

fn parse_body<T>(text: &str, mut parse: impl FnMut(&str) -> Option<T>) -> Result<(usize, usize, Vec<T>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (rows, cols) = parse_header(lines.next())?;
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (n, line) in lines {
        let before = values.len();
        for tok in line.split_whitespace() {
            let v = parse(tok).ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: format!("bad entry `{tok}`"),
            })?;
            values.push(v);
        }
        if values.len() - before != cols {
            return Err(Error::Parse {
                line: n + 1,
                msg: format!("expected {cols} entries, got {}", values.len() - before),
            });
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header declares {rows} rows, found {seen_rows}"),
        });
    }
    Ok((rows, cols, values))
}

pub fn format_bits(rows: usize, cols: usize, bits: &[u8]) -> String {
    let mut out = format!("{rows} {cols}\n");
    for r in bits.chunks(cols.max(1)).take(rows) {
        let line: Vec<&str> = r.iter().map(|&b| if b == 0 { "0" } else { "1" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_bits(text: &str) -> Result<(usize, usize, Vec<u8>)> {
    parse_body(text, |tok| match tok {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    })
}

pub fn format_weights(w: &WeightMatrix) -> String {
    let mut out = format!("{} {}\n", w.rows(), w.cols());
    for i in 0..w.rows() {
        for (j, v) in w.row(i).iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn parse_weights(text: &str) -> Result<WeightMatrix> {
    let (rows, cols, values) = parse_body(text, |tok| tok.parse::<f64>().ok())?;
    WeightMatrix::from_vec(rows, cols, values)
}

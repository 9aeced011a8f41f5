//! Plain-text input: one value per line, or `index,count` pairs.
//!
//! Blank lines and lines starting with `#` are skipped. The first data
//! line may be a header if it contains letters.

use crate::error::{Error, Result};
use crate::pearson::validate_probs;

/// Counts as read from a file, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    /// Present when the file used `index,count` rows.
    pub index: Option<Vec<u64>>,
    pub counts: Vec<u64>,
}

impl CountTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Dense `counts[j]` for outcome `j`. Without an index column the row
    /// position is the outcome.
    pub fn by_outcome(&self) -> Vec<u64> {
        match &self.index {
            None => self.counts.clone(),
            Some(idx) => {
                let len = idx.iter().copied().max().map_or(0, |m| m as usize + 1);
                let mut out = vec![0u64; len];
                for (&i, &c) in idx.iter().zip(&self.counts) {
                    out[i as usize] += c;
                }
                out
            }
        }
    }
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut first = true;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .filter(move |(_, l)| {
            let header = first && l.chars().any(|c| c.is_ascii_alphabetic()) && l.parse::<f64>().is_err();
            first = false;
            !header
        })
}

fn parse_u64(line: usize, field: &str) -> Result<u64> {
    field
        .trim()
        .parse::<u64>()
        .or_else(|_| parse_err(line, format!("expected a nonnegative integer, found {:?}", field.trim())))
}

pub fn parse_counts(text: &str) -> Result<CountTable> {
    let mut index = Vec::new();
    let mut counts = Vec::new();
    let mut paired: Option<bool> = None;
    for (line, l) in data_lines(text) {
        let fields: Vec<&str> = l.split(',').collect();
        let is_pair = match fields.len() {
            1 => false,
            2 => true,
            k => return parse_err(line, format!("expected 1 or 2 fields, found {k}")),
        };
        if *paired.get_or_insert(is_pair) != is_pair {
            return parse_err(line, "mixes plain counts with index,count rows");
        }
        if is_pair {
            let i = parse_u64(line, fields[0])?;
            if index.contains(&i) {
                return parse_err(line, format!("index {i} repeated"));
            }
            index.push(i);
            counts.push(parse_u64(line, fields[1])?);
        } else {
            counts.push(parse_u64(line, fields[0])?);
        }
    }
    if counts.is_empty() {
        return parse_err(0, "no data");
    }
    Ok(CountTable {
        index: paired.unwrap_or(false).then_some(index),
        counts,
    })
}

/// One finite real per line.
pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        match l.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => return parse_err(line, format!("expected a finite number, found {l:?}")),
        }
    }
    if out.is_empty() {
        return parse_err(0, "no data");
    }
    Ok(out)
}

/// Probabilities, one per line (or `index,prob`), summing to one.
pub fn parse_probs(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let field = l.rsplit(',').next().unwrap_or(l).trim();
        match field.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => return parse_err(line, format!("expected a probability, found {field:?}")),
        }
    }
    if out.is_empty() {
        return parse_err(0, "no data");
    }
    validate_probs(&out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_paired() {
        let t = parse_counts("3\n\n# note\n4\n5\n").unwrap();
        assert_eq!(t.counts, vec![3, 4, 5]);
        assert_eq!(t.index, None);
        assert_eq!(t.by_outcome(), vec![3, 4, 5]);
        let t = parse_counts("value,count\n0,2\n3,7\n").unwrap();
        assert_eq!(t.index, Some(vec![0, 3]));
        assert_eq!(t.by_outcome(), vec![2, 0, 0, 7]);
        assert_eq!(t.total(), 9);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_counts("1\n2\nx\n").unwrap_err(), Error::Parse { line: 3, message: "expected a nonnegative integer, found \"x\"".into() });
        assert!(matches!(parse_counts("1\n-2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_counts("1\n2,3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_counts("1,2\n1,3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_counts("1,2,3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_counts(""), Err(Error::Parse { line: 0, .. })));
        assert!(matches!(parse_reals("1.5\nnan\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_reals("\n\n"), Err(Error::Parse { line: 0, .. })));
    }

    #[test]
    fn reals_and_probs() {
        assert_eq!(parse_reals("x\n1.5\n-2e3\n").unwrap(), vec![1.5, -2000.0]);
        assert_eq!(parse_probs("0.25\n0.75\n").unwrap(), vec![0.25, 0.75]);
        assert_eq!(parse_probs("1,0.5\n2,0.5\n").unwrap(), vec![0.5, 0.5]);
        assert!(parse_probs("0.2\n0.2\n").is_err());
    }
}

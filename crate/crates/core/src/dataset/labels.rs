use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::LabeledPointSet;
use crate::error::{Error, Result};

/// Reads `index<TAB>label` rows and returns the label of each point index.
///
/// Rows may appear in any order but must cover `0..count` exactly once.
pub fn read_labels(path: &Path, count: usize) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, count)
}

pub(crate) fn parse(text: &str, count: usize) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let (index, label) = line.split_once('\t').ok_or_else(|| Error::UnknownLabelColumn {
            line: lineno,
            reason: "expected index<TAB>label".into(),
        })?;
        let index: usize = index.trim().parse().map_err(|_| Error::UnknownLabelColumn {
            line: lineno,
            reason: format!("bad index {index:?}"),
        })?;
        if label.is_empty() || label.contains('\t') {
            return Err(Error::UnknownLabelColumn {
                line: lineno,
                reason: format!("bad label column {label:?}"),
            });
        }
        rows.push((lineno, index, label));
    }
    if rows.len() != count {
        return Err(Error::CountMismatch {
            expected: count,
            found: rows.len(),
        });
    }
    let mut out: Vec<Option<String>> = vec![None; count];
    for (lineno, index, label) in rows {
        let slot = out.get_mut(index).ok_or(Error::IndexOutOfRange { index, len: count })?;
        if slot.is_some() {
            return Err(Error::UnknownLabelColumn {
                line: lineno,
                reason: format!("duplicate index {index}"),
            });
        }
        *slot = Some(label.to_string());
    }
    Ok(out.into_iter().map(|s| s.expect("all indices covered")).collect())
}

pub(crate) fn render(set: &LabeledPointSet) -> String {
    let mut s = String::new();
    for (i, &l) in set.labels().iter().enumerate() {
        writeln!(s, "{i}\t{}", set.label_name(l)).unwrap();
    }
    s
}

pub fn write_labels(path: &Path, set: &LabeledPointSet) -> Result<()> {
    fs::write(path, render(set)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_out_of_order_rows() {
        let labels = parse("1\tNOUN\n0\tVERB\n2\tNOUN\n", 3).unwrap();
        assert_eq!(labels, ["VERB", "NOUN", "NOUN"]);
    }

    #[test]
    fn count_mismatch() {
        assert!(matches!(
            parse("0\ta\n1\tb\n2\tc\n", 4),
            Err(Error::CountMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn missing_column() {
        assert!(matches!(
            parse("0\ta\n1\n", 2),
            Err(Error::UnknownLabelColumn { line: 2, .. })
        ));
        assert!(matches!(
            parse("0\ta\nx\tb\n", 2),
            Err(Error::UnknownLabelColumn { line: 2, .. })
        ));
        assert!(matches!(
            parse("0\t\n", 1),
            Err(Error::UnknownLabelColumn { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_and_out_of_range() {
        assert!(matches!(parse("0\ta\n0\tb\n", 2), Err(Error::UnknownLabelColumn { .. })));
        assert!(matches!(
            parse("0\ta\n5\tb\n", 2),
            Err(Error::IndexOutOfRange { index: 5, len: 2 })
        ));
    }

    #[test]
    fn tolerates_crlf() {
        assert_eq!(parse("0\ta\r\n1\tb\r\n", 2).unwrap(), ["a", "b"]);
    }
}

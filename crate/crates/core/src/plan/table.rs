use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use super::parse::{ParseError, ParseErrorKind};

/// CSV condition table: one row per trial, one column per bound value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ConditionTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    /// Column → value map for one row.
    pub fn bindings(&self, row: usize) -> Option<BTreeMap<String, String>> {
        let cells = self.rows.get(row)?;
        Some(self.header.iter().cloned().zip(cells.iter().cloned()).collect())
    }
}

pub fn load_table(path: &Path) -> Result<ConditionTable, ParseError> {
    let bytes = std::fs::read(path).map_err(|e| {
        ParseError::new(ParseErrorKind::Io, format!("cannot read {}: {e}", path.display()))
    })?;
    parse_table(&bytes)
}

/// Parses RFC 4180 CSV (LF or CRLF). Cells are kept verbatim.
pub fn parse_table(bytes: &[u8]) -> Result<ConditionTable, ParseError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(ParseError::new(ParseErrorKind::EmptyHeader, "table has no header")),
        Some(rec) => rec.map_err(csv_error)?,
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header.iter().any(String::is_empty) {
        return Err(
            ParseError::new(ParseErrorKind::EmptyHeader, "header has an empty column name").at_line(1),
        );
    }
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateColumn,
                format!("column {name:?} appears more than once"),
            )
            .at_line(1));
        }
    }

    let mut rows = Vec::new();
    for (index, record) in records.enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize);
        if record.len() != header.len() {
            let mut err = ParseError::new(
                ParseErrorKind::RaggedRow,
                format!(
                    "row {} has {} cells, header has {}",
                    index + 1,
                    record.len(),
                    header.len()
                ),
            );
            err.line = line;
            return Err(err);
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(ConditionTable { header, rows })
}

fn csv_error(err: csv::Error) -> ParseError {
    let line = err.position().map(|p| p.line() as usize);
    let mut out = ParseError::new(ParseErrorKind::Syntax, err.to_string());
    out.line = line;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_row_table() {
        let t = parse_table(b"sound,image,corrAns\na.wav,a.svg,s\nb.wav,b.svg,n\nc.wav,c.svg,n\n").unwrap();
        assert_eq!(t.header, ["sound", "image", "corrAns"]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.bindings(1).unwrap()["corrAns"], "n");
    }

    #[test]
    fn header_only_is_valid() {
        let t = parse_table(b"sound,corrAns\n").unwrap();
        assert!(t.rows.is_empty());
    }

    #[test]
    fn ragged_row_reports_row_number() {
        let err = parse_table(b"a,b\n1,2\n3\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::RaggedRow);
        assert!(err.message.starts_with("row 2 "), "{}", err.message);
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn crlf_stripped_whitespace_kept() {
        let t = parse_table(b"a,b\r\n x ,\"y, z\"\r\n").unwrap();
        assert_eq!(t.rows[0], [" x ", "y, z"]);
    }

    #[test]
    fn header_errors() {
        assert_eq!(parse_table(b"").unwrap_err().kind, ParseErrorKind::EmptyHeader);
        assert_eq!(parse_table(b"a,,b\n").unwrap_err().kind, ParseErrorKind::EmptyHeader);
        assert_eq!(parse_table(b"a,a\n").unwrap_err().kind, ParseErrorKind::DuplicateColumn);
    }
}

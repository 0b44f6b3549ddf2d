//! Justification ledger: `FILE:LINE:CHECK_ID: reason` lines, `#` comments.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub file: String,
    pub line: u32,
    pub check_id: String,
    pub reason: String,
    pub author: Option<String>,
    /// Line of the entry in the ledger file.
    pub source_line: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JustificationLedger {
    pub entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ledger line {line}: {message}")]
pub struct LedgerError {
    pub line: u32,
    pub message: String,
}

/// Whether a ledger file name `entry` designates the diagnosed `file`:
/// equal, or a trailing path of it.
pub fn same_file(entry: &str, file: &str) -> bool {
    entry == file || (file.ends_with(entry) && file[..file.len() - entry.len()].ends_with('/'))
}

impl JustificationLedger {
    /// Parse ledger text; `known_checks` lists the accepted check ids.
    pub fn parse(text: &str, known_checks: &[&str]) -> Result<Self, LedgerError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i as u32 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| LedgerError { line: n, message: m.to_string() };
            let mut parts = line.splitn(4, ':');
            let file = parts.next().filter(|s| !s.is_empty()).ok_or_else(|| err("missing file"))?;
            let line_no = parts.next().ok_or_else(|| err("missing line number"))?;
            let line_no: u32 = line_no.trim().parse().map_err(|_| err(&format!("invalid line number '{line_no}'")))?;
            if line_no == 0 {
                return Err(err("line numbers start at 1"));
            }
            let check = parts.next().map(str::trim).filter(|s| !s.is_empty()).ok_or_else(|| err("missing check id"))?;
            if !known_checks.contains(&check) {
                return Err(err(&format!("unknown check id '{check}'")));
            }
            let reason = parts.next().map(str::trim).filter(|s| !s.is_empty()).ok_or_else(|| err("missing reason"))?;
            let (author, reason) = match reason.strip_prefix('[').and_then(|r| r.split_once(']')) {
                Some((a, rest)) => (Some(a.trim().to_string()), rest.trim().to_string()),
                None => (None, reason.to_string()),
            };
            entries.push(LedgerEntry {
                file: file.trim().to_string(),
                line: line_no,
                check_id: check.to_string(),
                reason,
                author,
                source_line: n,
            });
        }
        Ok(JustificationLedger { entries })
    }

    pub fn find(&self, file: &str, line: u32, check_id: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.line == line && e.check_id == check_id && same_file(&e.file, file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KNOWN: &[&str] = &["effectless", "file-deref-r22-5"];

    #[test]
    fn parses_entries_and_comments() {
        let l = JustificationLedger::parse(
            "# reviewed\n\nsrc/a.c:12:effectless: [jd] configuration hook\nb.c:3:file-deref-r22-5: vendor API\n",
            KNOWN,
        )
        .unwrap();
        assert_eq!(l.entries.len(), 2);
        assert_eq!(l.entries[0].author.as_deref(), Some("jd"));
        assert_eq!(l.entries[0].reason, "configuration hook");
        assert_eq!(l.entries[1].source_line, 4);
        assert!(l.find("/work/src/a.c", 12, "effectless").is_some());
        assert!(l.find("a.c", 12, "effectless").is_none());
        assert!(l.find("src/a.c", 13, "effectless").is_none());
    }

    #[test]
    fn rejects_malformed_lines() {
        for (text, line) in [
            ("a.c:x:effectless: r", 1),
            ("# c\na.c:1:nope: r", 2),
            ("a.c:1:effectless", 1),
            ("a.c:1:effectless:   ", 1),
            ("a.c", 1),
        ] {
            let e = JustificationLedger::parse(text, KNOWN).unwrap_err();
            assert_eq!(e.line, line, "{text}");
        }
    }
}

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct FileId(pub u32);

/// A location in some source file. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SourceSpan {
    pub file: FileId,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(file: FileId, line: u32, column: u32, length: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourceSpan { file, line, column, length }
    }

    /// Span starting at `self` and ending where `end` ends, when both are on
    /// the same line; otherwise `self`.
    pub fn to(self, end: SourceSpan) -> SourceSpan {
        if end.file == self.file && end.line == self.line && end.column >= self.column {
            SourceSpan { length: end.column + end.length - self.column, ..self }
        } else {
            self
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub name: String,
    pub path: Option<PathBuf>,
    pub text: String,
    /// Synthetic files (command line, builtin profile) are not on disk.
    pub synthetic: bool,
}

/// Owns every file text seen while preprocessing one translation unit.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn new() -> Self {
        SourceMap::default()
    }

    pub fn add(&mut self, name: impl Into<String>, path: Option<PathBuf>, text: String) -> FileId {
        let id = FileId(self.files.len() as u32);
        self.files.push(SourceFile { name: name.into(), path, text, synthetic: false });
        id
    }

    pub fn add_synthetic(&mut self, name: impl Into<String>, text: String) -> FileId {
        let id = self.add(name, None, text);
        self.files[id.0 as usize].synthetic = true;
        id
    }

    pub fn get(&self, id: FileId) -> &SourceFile {
        &self.files[id.0 as usize]
    }

    pub fn name(&self, id: FileId) -> &str {
        &self.files[id.0 as usize].name
    }

    pub fn files(&self) -> impl Iterator<Item = (FileId, &SourceFile)> {
        self.files.iter().enumerate().map(|(i, f)| (FileId(i as u32), f))
    }

    pub fn find_path(&self, path: &std::path::Path) -> Option<FileId> {
        self.files()
            .find(|(_, f)| f.path.as_deref() == Some(path))
            .map(|(id, _)| id)
    }

    /// The text of `span` as it appears in its file, if the span is in range.
    pub fn snippet(&self, span: SourceSpan) -> Option<&str> {
        let text = &self.get(span.file).text;
        let line = text.lines().nth(span.line as usize - 1)?;
        let start = span.column as usize - 1;
        line.get(start..start + span.length as usize)
    }
}

//! Tab-separated report files with a one-line header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join("\t");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    /// Appends a row; tabs and line breaks inside fields become spaces.
    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        assert_eq!(
            fields.len(),
            self.columns,
            "row width must match the header"
        );
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push('\t');
            }
            let mut cell = String::new();
            write!(cell, "{f}").expect("writing to a String");
            self.text.push_str(&cell.replace(['\t', '\n', '\r'], " "));
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }
}

//! Self-describing key/value text documents.
//!
//! Used for reports, audit trails and model files:
//!
//! ```text
//! # blbf report
//! [meta]
//! version = 0.1.0
//! [row.etips]
//! ips = 1.6900000000000001e-1
//! ```
//!
//! Sections and keys keep insertion order, so rendering is deterministic.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::fmt_f64;

pub const NOT_APPLICABLE: &str = "n/a";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        let key = key.into();
        let value = value.into();
        debug_assert!(!value.contains('\n'));
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn set_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.set(key, fmt_f64(value))
    }

    pub fn set_opt_f64(&mut self, key: impl Into<String>, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.set_f64(key, v),
            None => self.set(key, NOT_APPLICABLE),
        }
    }

    pub fn set_f64_list(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let joined = values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ");
        self.set(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Format(format!("section [{}] lacks key `{key}`", self.name)))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("[{}] {key}: not a number: {raw}", self.name)))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("[{}] {key}: not a count: {raw}", self.name)))
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("[{}] {key}: not an integer: {raw}", self.name)))
    }

    pub fn require_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        raw.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Format(format!("[{}] {key}: bad number {t}", self.name)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub title: String,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            sections: Vec::new(),
        }
    }

    /// Returns the named section, creating it at the end if absent.
    pub fn section(&mut self, name: &str) -> &mut Section {
        if let Some(i) = self.sections.iter().position(|s| s.name == name) {
            return &mut self.sections[i];
        }
        self.sections.push(Section::new(name));
        self.sections.last_mut().unwrap()
    }

    pub fn get_section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require_section(&self, name: &str) -> Result<&Section> {
        self.get_section(name)
            .ok_or_else(|| Error::Format(format!("missing section [{name}]")))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        for section in &self.sections {
            let _ = writeln!(out, "[{}]", section.name);
            for (k, v) in &section.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(title) = line.strip_prefix("# ") {
                if lineno == 0 {
                    doc.title = title.to_string();
                }
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                doc.sections.push(Section::new(name));
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", lineno + 1)))?;
            let section = doc
                .sections
                .last_mut()
                .ok_or_else(|| Error::Format(format!("line {}: entry outside any section", lineno + 1)))?;
            section.entries.push((k.to_string(), v.to_string()));
        }
        Ok(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Writes via a temporary sibling file and a rename.
    pub fn write_atomic(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut doc = Document::new("blbf test");
        doc.section("meta").set("version", "1").set_f64("x", 0.1);
        doc.section("row.a")
            .set_opt_f64("ips", None)
            .set_f64_list("v", &[1.0, -2.5]);
        let parsed = Document::parse(&doc.render()).unwrap();
        assert_eq!(parsed, doc);
        let row = parsed.require_section("row.a").unwrap();
        assert_eq!(row.get("ips"), Some(NOT_APPLICABLE));
        assert_eq!(row.require_f64_list("v").unwrap(), vec![1.0, -2.5]);
        assert_eq!(parsed.require_section("meta").unwrap().require_f64("x").unwrap(), 0.1);
    }

    #[test]
    fn entry_before_section_is_rejected() {
        assert!(Document::parse("# t\nx = 1\n").is_err());
    }
}

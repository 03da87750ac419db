//! Sectioned `key = value` records.
//!
//! ```text
//! # comment
//! kind = region
//!
//! [constraints]
//! x_bound = 0.0123
//! ```
//!
//! Keys are `[A-Za-z0-9_.-]+`, values run to the end of the line with
//! surrounding blanks trimmed. Entries before the first header belong to
//! the unnamed section `""`. Section names and keys are unique.

use std::fmt;

use crate::error::{Error, Result};

const MAX_LINE: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Record {
    sections: Vec<Section>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

fn valid_value(v: &str) -> bool {
    !v.contains(['\n', '\r']) && v.trim() == v
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section)?.get(key)
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<f64> {
        let raw = self.get(section, key).ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))?;
        raw.parse().map_err(|_| Error::Config(format!("[{section}] {key}: not a number: {raw}")))
    }

    /// Appends `key = value` to `section`, creating the section at the end
    /// if needed.
    pub fn push(&mut self, section: &str, key: &str, value: impl fmt::Display) -> Result<()> {
        let value = value.to_string();
        if !valid_key(key) || !(section.is_empty() || valid_key(section)) {
            return Err(Error::Config(format!("invalid record key [{section}] {key}")));
        }
        if !valid_value(&value) {
            return Err(Error::Config(format!("invalid record value for {key}: {value:?}")));
        }
        let idx = match self.sections.iter().position(|s| s.name == section) {
            Some(i) => i,
            None if section.is_empty() => {
                self.sections.insert(0, Section::default());
                0
            }
            None => {
                self.sections.push(Section { name: section.to_string(), entries: Vec::new() });
                self.sections.len() - 1
            }
        };
        let sec = &mut self.sections[idx];
        if sec.get(key).is_some() {
            return Err(Error::Config(format!("duplicate key [{section}] {key}")));
        }
        sec.entries.push((key.to_string(), value));
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rec = Record::new();
        let mut current = String::new();
        let mut seen: Vec<String> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let at = |msg: &str| Error::Config(format!("line {}: {msg}", no + 1));
            if raw.len() > MAX_LINE {
                return Err(at("line too long"));
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?.trim();
                if !valid_key(name) {
                    return Err(at("invalid section name"));
                }
                if seen.iter().any(|s| s == name) {
                    return Err(at("duplicate section"));
                }
                seen.push(name.to_string());
                current = name.to_string();
                rec.sections.push(Section { name: current.clone(), entries: Vec::new() });
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| at("expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(at("invalid key"));
            }
            rec.push(&current, k, v).map_err(|e| at(&e.to_string()))?;
        }
        Ok(rec)
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.sections {
            if !s.name.is_empty() {
                if !first {
                    writeln!(f)?;
                }
                writeln!(f, "[{}]", s.name)?;
            }
            for (k, v) in &s.entries {
                writeln!(f, "{k} = {v}")?;
            }
            first = false;
        }
        Ok(())
    }
}

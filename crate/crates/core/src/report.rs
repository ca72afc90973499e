//! Run reports: a human-readable text and a line-oriented machine twin.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Item {
    Heading(String),
    Text(String),
    Field { key: String, value: String },
    Check { name: String, passed: bool, detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub command: String,
    pub target: String,
    items: Vec<Item>,
}

impl Report {
    pub fn new(command: &str, target: &str) -> Self {
        Report { command: command.into(), target: target.into(), items: Vec::new() }
    }

    pub fn heading(&mut self, text: impl Into<String>) {
        self.items.push(Item::Heading(text.into()));
    }

    /// Free text, possibly multi-line; appears in both forms.
    pub fn text(&mut self, text: impl Into<String>) {
        self.items.push(Item::Text(text.into()));
    }

    pub fn field(&mut self, key: &str, value: impl ToString) {
        self.items.push(Item::Field { key: key.into(), value: value.to_string() });
    }

    /// Records a pass/fail check. `detail` is shown for failures, e.g. a
    /// residual dump.
    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.items.push(Item::Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| !matches!(i, Item::Check { passed: false, .. }))
    }

    pub fn failed_checks(&self) -> Vec<String> {
        self.items
            .iter()
            .filter_map(|i| match i {
                Item::Check { name, passed: false, .. } => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn append(&mut self, other: Report) {
        self.items.extend(other.items);
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== {} {} ==", self.command, self.target);
        for item in &self.items {
            match item {
                Item::Heading(h) => {
                    let _ = writeln!(out, "\n-- {h}");
                }
                Item::Text(t) => {
                    for line in t.lines() {
                        let _ = writeln!(out, "{line}");
                    }
                }
                Item::Field { key, value } => {
                    let _ = writeln!(out, "{key}: {value}");
                }
                Item::Check { name, passed, detail } => {
                    let _ = writeln!(out, "[{}] {name}", if *passed { "pass" } else { "FAIL" });
                    if !passed {
                        for line in detail.lines() {
                            let _ = writeln!(out, "    {line}");
                        }
                    }
                }
            }
        }
        let _ = writeln!(out, "\nresult: {}", if self.passed() { "pass" } else { "FAIL" });
        out
    }

    /// One `key = value` record per line; multi-line values are split into
    /// numbered records.
    pub fn machine(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "target = {}", self.target);
        let mut section = String::from("main");
        let mut text_count = 0;
        for item in &self.items {
            match item {
                Item::Heading(h) => {
                    section = h.to_lowercase().replace(' ', "_");
                    text_count = 0;
                }
                Item::Text(t) => {
                    for line in t.lines() {
                        let _ = writeln!(out, "{section}.text.{text_count} = {line}");
                        text_count += 1;
                    }
                }
                Item::Field { key, value } => {
                    let mut lines = value.lines();
                    let first = lines.next().unwrap_or("");
                    let rest: Vec<&str> = lines.collect();
                    if rest.is_empty() {
                        let _ = writeln!(out, "{section}.{key} = {first}");
                    } else {
                        for (i, l) in std::iter::once(first).chain(rest).enumerate() {
                            let _ = writeln!(out, "{section}.{key}.{i} = {l}");
                        }
                    }
                }
                Item::Check { name, passed, detail } => {
                    let _ = writeln!(out, "check.{name} = {}", if *passed { "pass" } else { "fail" });
                    if !passed {
                        for (i, l) in detail.lines().enumerate() {
                            let _ = writeln!(out, "check.{name}.residual.{i} = {l}");
                        }
                    }
                }
            }
        }
        let _ = writeln!(out, "status = {}", if self.passed() { "pass" } else { "fail" });
        out
    }

    pub fn basename(&self) -> String {
        format!("{}-{}", self.command, self.target)
    }

    /// Writes `<basename>.txt` and `<basename>.report` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        let human = dir.join(format!("{}.txt", self.basename()));
        let machine = dir.join(format!("{}.report", self.basename()));
        std::fs::write(&human, self.human()).map_err(|e| Error::Config(format!("cannot write {}: {e}", human.display())))?;
        std::fs::write(&machine, self.machine())
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", machine.display())))?;
        Ok((human, machine))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_forms() {
        let mut r = Report::new("spectrum", "p2");
        r.heading("Profile");
        r.field("char_poly", "lambda^3 - 27*Q");
        r.text("(lambda^3 - 27; 1; 1/3; 4)");
        r.check("cayley-hamilton", true, "");
        r.check("grading", false, "c_{012}\nsecond line");
        assert!(!r.passed());
        assert_eq!(r.failed_checks(), vec!["grading".to_string()]);
        let h = r.human();
        assert!(h.contains("[FAIL] grading\n    c_{012}\n    second line"));
        let m = r.machine();
        assert!(m.contains("profile.char_poly = lambda^3 - 27*Q\n"));
        assert!(m.contains("profile.text.0 = (lambda^3 - 27; 1; 1/3; 4)\n"));
        assert!(m.contains("check.grading.residual.1 = second line\n"));
        assert!(m.ends_with("status = fail\n"));
    }

    #[test]
    fn writes_twins() {
        let dir = tempfile::tempdir().unwrap();
        let r = Report::new("qrr", "p1");
        let (h, m) = r.write(dir.path()).unwrap();
        assert_eq!(h.file_stem(), m.file_stem());
        assert_eq!(std::fs::read_to_string(m).unwrap(), r.machine());
    }
}

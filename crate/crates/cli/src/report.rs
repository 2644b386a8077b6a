use std::fmt::Write;

/// Output of a command: human-readable lines plus `key=value` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    lines: Vec<String>,
    pairs: Vec<(String, String)>,
    failed: bool,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a line to the text report only.
    pub fn line(&mut self, text: impl Into<String>) -> &mut Self {
        self.lines.push(text.into());
        self
    }

    /// Adds a value to both reports, labelled for humans and keyed for scripts.
    pub fn value(&mut self, label: &str, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        self.lines.push(format!("{label:<20} {value}"));
        self.pairs.push((key.to_owned(), value));
        self
    }

    /// Adds a pair to the key=value report only.
    pub fn pair(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.pairs.push((key.to_owned(), value.to_string()));
        self
    }

    /// Marks the report as a validation failure (exit code 1).
    pub fn fail(&mut self) -> &mut Self {
        self.failed = true;
        self
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn text(&self) -> String {
        self.lines.iter().fold(String::new(), |mut s, l| {
            let _ = writeln!(s, "{l}");
            s
        })
    }

    pub fn kv(&self) -> String {
        self.pairs.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }
}

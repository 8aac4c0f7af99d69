use std::fmt::Write as _;

use super::RunConfig;

pub const REPORT_HEADER: &str = "iris-report 1";

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Pairs(Vec<(String, String)>),
    Rows(Vec<String>),
}

/// Plain-text run report: header, echoed configuration, then named sections.
///
/// Contains nothing time- or host-dependent, so identical runs produce
/// identical bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    command: String,
    config: Vec<(&'static str, String)>,
    sections: Vec<(String, Block)>,
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: cfg.entries(),
            sections: Vec::new(),
        }
    }

    pub fn section(&mut self, name: &str, pairs: Vec<(String, String)>) {
        self.sections.push((name.to_string(), Block::Pairs(pairs)));
    }

    pub fn table(&mut self, name: &str, rows: Vec<String>) {
        self.sections.push((name.to_string(), Block::Rows(rows)));
    }

    /// Value of `key` in section `name`.
    pub fn get(&self, name: &str, key: &str) -> Option<&str> {
        self.sections.iter().find_map(|(n, b)| match b {
            Block::Pairs(p) if n == name => {
                p.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
            }
            _ => None,
        })
    }

    pub fn rows(&self, name: &str) -> Option<&[String]> {
        self.sections.iter().find_map(|(n, b)| match b {
            Block::Rows(r) if n == name => Some(r.as_slice()),
            _ => None,
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{REPORT_HEADER}");
        let _ = writeln!(s, "command {}", self.command);
        let _ = writeln!(s, "\n[config]");
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (name, block) in &self.sections {
            let _ = writeln!(s, "\n[{name}]");
            match block {
                Block::Pairs(p) => {
                    for (k, v) in p {
                        let _ = writeln!(s, "{k} = {v}");
                    }
                }
                Block::Rows(r) => {
                    for line in r {
                        let _ = writeln!(s, "{line}");
                    }
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_stable() {
        let cfg = RunConfig::default();
        let mut r = Report::new("evaluate", &cfg);
        r.section("summary", vec![("images".into(), "3".into())]);
        r.table("images", vec!["a 0".into(), "b 1".into()]);
        let text = r.render();
        assert!(text.starts_with("iris-report 1\ncommand evaluate\n\n[config]\nseed = 42\n"));
        assert!(text.ends_with("\n[summary]\nimages = 3\n\n[images]\na 0\nb 1\n"));
        assert_eq!(r.get("summary", "images"), Some("3"));
        assert_eq!(r.rows("images").unwrap().len(), 2);
        assert_eq!(text, r.clone().render());
    }
}

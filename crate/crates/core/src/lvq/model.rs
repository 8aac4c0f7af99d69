//! Text model format.
//!
//! ```text
//! iris-lvq-model 1
//! input lbp-p8-r1-u2-stats7
//! dimension 5907
//! classes 0 1 2
//! members 3
//! member 0 alpha 0.1 epochs 500 seed 42 prototypes_per_class 2 cap 40 prototypes 6
//! log 0.95 0.97 ...
//! proto 0 0.013 0.2 ...
//! ```

use std::fmt::Write as _;

use super::{Codebook, LvqConfig, Prototype, TrainedEnsemble};
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "iris-lvq-model 1";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

pub fn save_model(ens: &TrainedEnsemble) -> String {
    let mut s = String::new();
    let tag = if ens.input_tag.is_empty() {
        "-"
    } else {
        ens.input_tag.as_str()
    };
    let classes: Vec<String> = ens.classes().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(s, "{MODEL_HEADER}");
    let _ = writeln!(s, "input {tag}");
    let _ = writeln!(s, "dimension {}", ens.dimension());
    let _ = writeln!(s, "classes {}", classes.join(" "));
    let _ = writeln!(s, "members {}", ens.members.len());
    for (i, (m, cfg)) in ens.members.iter().zip(&ens.member_configs).enumerate() {
        let _ = writeln!(
            s,
            "member {i} alpha {} epochs {} seed {} prototypes_per_class {} cap {} prototypes {}",
            cfg.learning_rate,
            cfg.epochs,
            cfg.seed,
            cfg.prototypes_per_class,
            cfg.total_prototypes_cap,
            m.len()
        );
        let _ = writeln!(s, "log {}", join(&ens.training_log[i]).trim_end());
        for p in m.prototypes() {
            let _ = writeln!(s, "proto {} {}", p.label, join(&p.vector));
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            what: "model",
            line: self.line,
            reason: reason.into(),
        }
    }

    /// Next line split into its keyword and the remaining fields.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (i, line) = self.inner.next().ok_or_else(|| Error::Format {
            what: "model",
            line: self.line + 1,
            reason: format!("missing `{key}` line"),
        })?;
        self.line = i + 1;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(fields.collect())
    }

    fn parse<T: std::str::FromStr>(&self, v: &str) -> Result<T> {
        v.parse().map_err(|_| self.err(format!("bad value {v:?}")))
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let f = self.keyed(key)?;
        match f[..] {
            [v] => self.parse(v),
            _ => Err(self.err(format!("`{key}` takes one value"))),
        }
    }
}

pub fn load_model(text: &str) -> Result<TrainedEnsemble> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    match lines.inner.next() {
        Some((_, l)) if l.trim() == MODEL_HEADER => lines.line = 1,
        _ => return Err(lines.err(format!("expected header {MODEL_HEADER:?}"))),
    }
    let tag: String = lines.single("input")?;
    let dimension: usize = lines.single("dimension")?;
    let classes = lines
        .keyed("classes")?
        .iter()
        .map(|c| lines.parse::<usize>(c))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = lines.single("members")?;

    let mut members = Vec::with_capacity(n);
    let mut configs = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    for i in 0..n {
        let f = lines.keyed("member")?;
        let [index, "alpha", alpha, "epochs", epochs, "seed", seed, "prototypes_per_class", ppc, "cap", cap, "prototypes", count] =
            f[..]
        else {
            return Err(lines.err("malformed member line"));
        };
        if lines.parse::<usize>(index)? != i {
            return Err(lines.err(format!("expected member {i}")));
        }
        let cfg = LvqConfig {
            learning_rate: lines.parse(alpha)?,
            epochs: lines.parse(epochs)?,
            seed: lines.parse(seed)?,
            prototypes_per_class: lines.parse(ppc)?,
            total_prototypes_cap: lines.parse(cap)?,
        };
        let count: usize = lines.parse(count)?;
        let log = lines
            .keyed("log")?
            .iter()
            .map(|v| lines.parse::<f64>(v))
            .collect::<Result<Vec<_>>>()?;
        let mut protos = Vec::with_capacity(count);
        for _ in 0..count {
            let f = lines.keyed("proto")?;
            let (label, values) = f
                .split_first()
                .ok_or_else(|| lines.err("prototype without label"))?;
            let vector = values
                .iter()
                .map(|v| lines.parse::<f64>(v))
                .collect::<Result<Vec<_>>>()?;
            if vector.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: vector.len(),
                });
            }
            protos.push(Prototype {
                vector,
                label: lines.parse(label)?,
            });
        }
        members.push(Codebook::new(dimension, protos)?);
        configs.push(cfg);
        logs.push(log);
    }
    let ens = TrainedEnsemble::new(
        members,
        configs,
        logs,
        if tag == "-" { String::new() } else { tag },
    )?;
    if ens.classes().into_iter().collect::<Vec<_>>() != classes {
        return Err(Error::Format {
            what: "model",
            line: 4,
            reason: "class table does not match the prototypes".into(),
        });
    }
    Ok(ens)
}

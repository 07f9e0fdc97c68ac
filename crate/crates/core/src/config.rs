//! Flat key-value run configuration.
//!
//! A config file holds `key = value` lines; `#` starts a comment. Every key
//! appears at most once except `walk.term`, which repeats, one line per
//! sphere of the one-step law:
//!
//! ```text
//! family = A
//! rank = 2
//! q = 2
//! walk.term = 1,0 : 1
//! walk.term = 0,1 : 1
//! seed = 7
//! ```
//!
//! Command-line flags override file values; the merged result is the
//! resolved config echoed into every report.

use std::fmt::Write as _;

use crate::root_system::{Coweight, Family, RootSystem};
use crate::{Error, Result};

/// Parsed config file: ordered (key, value) pairs, repeats preserved.
#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    entries: Vec<(String, String)>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            entries.push((key.to_string(), value.to_string()));
        }
        Ok(FileConfig { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Last value wins for scalar keys.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// All values, in file order, for repeatable keys.
    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }
}

/// Parse a coweight: either explicit coordinates `c1,...,cn` or the
/// shorthand `λJ`/`lJ` for the J-th fundamental coweight (1-based).
pub fn parse_coweight(rank: usize, s: &str) -> Result<Coweight> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('λ').or_else(|| s.strip_prefix('l')) {
        let j: usize = rest
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad fundamental coweight index in `{s}`")))?;
        if j == 0 || j > rank {
            return Err(Error::Config(format!(
                "fundamental coweight index {j} out of range 1..={rank}"
            )));
        }
        let mut c = vec![0i64; rank];
        c[j - 1] = 1;
        return Ok(c);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != rank {
        return Err(Error::Config(format!(
            "coweight `{s}` has {} coordinates, expected {rank}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<i64>()
                .map_err(|_| Error::Config(format!("bad coweight coordinate `{p}`")))
        })
        .collect()
}

/// Parse one walk term `coweight[:weight]`; the weight defaults to 1.
pub fn parse_walk_term(rank: usize, s: &str) -> Result<(Coweight, f64)> {
    let (cw, w) = match s.rsplit_once(':') {
        Some((cw, w)) => {
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad walk weight in `{s}`")))?;
            (cw, w)
        }
        None => (s, 1.0),
    };
    Ok((parse_coweight(rank, cw)?, w))
}

/// Parse a walk flag value: terms separated by `;`.
pub fn parse_walk_terms(rank: usize, s: &str) -> Result<Vec<(Coweight, f64)>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_walk_term(rank, t))
        .collect()
}

pub fn parse_family(s: &str) -> Result<Family> {
    s.parse::<Family>()
        .map_err(|_| Error::Config(format!("unknown family `{s}`")))
}

/// A torus character given on the command line: per-axis complex values,
/// either `n` real numbers or `2n` numbers read as re,im pairs.
pub fn parse_character(rank: usize, s: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad character component `{p}`")))
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(f64, f64)> = if vals.len() == rank {
        vals.iter().map(|&re| (re, 0.0)).collect()
    } else if vals.len() == 2 * rank {
        vals.chunks(2).map(|c| (c[0], c[1])).collect()
    } else {
        return Err(Error::Config(format!(
            "character `{s}` has {} components, expected {rank} (real) or {} (re,im pairs)",
            vals.len(),
            2 * rank
        )));
    };
    let mut xi = Vec::with_capacity(rank);
    let mut theta = Vec::with_capacity(rank);
    for (re, im) in pairs {
        let norm = (re * re + im * im).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Config(
                "character components must be finite and nonzero".into(),
            ));
        }
        xi.push(norm.ln());
        theta.push(im.atan2(re));
    }
    Ok((xi, theta))
}

/// The fully merged configuration of one run, echoed into every report so
/// output is self-describing and reruns are reproducible.
#[derive(Clone, Debug)]
pub struct Resolved {
    pairs: Vec<(String, String)>,
}

impl Resolved {
    pub fn new() -> Self {
        Resolved { pairs: Vec::new() }
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn push_list<T: std::fmt::Display>(&mut self, key: &str, values: &[T]) {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.pairs.push((key.to_string(), joined));
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// `# key = value` lines for CSV output.
    pub fn csv_comments(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    /// JSON object (string-valued, insertion order preserved).
    pub fn json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.pairs {
            match map.get_mut(k.as_str()) {
                // Repeated keys (walk.term) fold into an array.
                Some(serde_json::Value::Array(a)) => a.push(v.clone().into()),
                Some(prev) => {
                    let first = prev.take();
                    *prev = serde_json::Value::Array(vec![first, v.clone().into()]);
                }
                None => {
                    map.insert(k.clone(), v.clone().into());
                }
            }
        }
        serde_json::Value::Object(map)
    }
}

impl Default for Resolved {
    fn default() -> Self {
        Self::new()
    }
}

/// Broadcast a single q to every node of the diagram when only one value
/// is given; otherwise pass the list through for the parameter module to
/// validate.
pub fn q_values(rs: &RootSystem, given: &[f64]) -> Vec<f64> {
    if given.len() == 1 {
        vec![given[0]; rs.rank() + 1]
    } else {
        given.to_vec()
    }
}

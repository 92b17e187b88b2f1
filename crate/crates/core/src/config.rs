//! Experiment configuration: `[section]` headers and `key = value` lines, `#`
//! comments, plus the compact graph descriptions shared with the CLI.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::builders::{
    cycle_graph, grid_graph, path_graph, product_graph, random_connected_graph, regular_tree,
    DEFAULT_VERTEX_CAP,
};
use crate::error::{Error, Result};
use crate::metric_graph::MetricGraph;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(Error::Parse {
                    line: line_no,
                    msg: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "empty section name".into(),
                    });
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "empty key".into(),
                });
            }
            let section = sections.entry(current.clone()).or_default();
            if section
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Config { sections })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::input(format!("missing [{section}] {key}")))
    }

    /// Parsed value or `default` when absent.
    pub fn value<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|e| Error::input(format!("[{section}] {key} = '{s}': {e}"))),
        }
    }

    /// Comma-separated list.
    pub fn list(&self, section: &str, key: &str) -> Vec<String> {
        self.get(section, key)
            .map(|s| {
                s.split(',')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Compact graph description: `tree:B:R`, `path:N`, `cycle:N`, `grid:W:H`,
/// `product-tree:B:R`, `random:N:EXTRA:SEED` or a path to a graph file.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Tree { branching: usize, depth: usize },
    Path(usize),
    Cycle(usize),
    Grid(usize, usize),
    ProductTree { branching: usize, depth: usize },
    Random { n: usize, extra: usize, seed: u64 },
    File(String),
}

fn field<T: FromStr>(parts: &[&str], i: usize, spec: &str) -> Result<T> {
    parts
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::input(format!("bad graph description '{spec}'")))
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let arity = |k: usize| -> Result<()> {
            if parts.len() == k + 1 {
                Ok(())
            } else {
                Err(Error::input(format!("'{s}' needs {k} numeric fields")))
            }
        };
        match parts[0] {
            "tree" => {
                arity(2)?;
                Ok(GraphSpec::Tree {
                    branching: field(&parts, 1, s)?,
                    depth: field(&parts, 2, s)?,
                })
            }
            "path" => {
                arity(1)?;
                Ok(GraphSpec::Path(field(&parts, 1, s)?))
            }
            "cycle" => {
                arity(1)?;
                Ok(GraphSpec::Cycle(field(&parts, 1, s)?))
            }
            "grid" => {
                arity(2)?;
                Ok(GraphSpec::Grid(field(&parts, 1, s)?, field(&parts, 2, s)?))
            }
            "product-tree" => {
                arity(2)?;
                Ok(GraphSpec::ProductTree {
                    branching: field(&parts, 1, s)?,
                    depth: field(&parts, 2, s)?,
                })
            }
            "random" => {
                arity(3)?;
                Ok(GraphSpec::Random {
                    n: field(&parts, 1, s)?,
                    extra: field(&parts, 2, s)?,
                    seed: field(&parts, 3, s)?,
                })
            }
            _ => Ok(GraphSpec::File(s.trim().to_string())),
        }
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<MetricGraph> {
        match *self {
            GraphSpec::Tree { branching, depth } => {
                regular_tree(branching, depth, DEFAULT_VERTEX_CAP)
            }
            GraphSpec::Path(n) => path_graph(n),
            GraphSpec::Cycle(n) => cycle_graph(n),
            GraphSpec::Grid(w, h) => grid_graph(w, h),
            GraphSpec::ProductTree { branching, depth } => {
                let t = regular_tree(branching, depth, DEFAULT_VERTEX_CAP)?;
                product_graph(&t, &t, DEFAULT_VERTEX_CAP)
            }
            GraphSpec::Random { n, extra, seed } => {
                random_connected_graph(n, extra, 1.0, 1.0, seed)
            }
            GraphSpec::File(ref p) => MetricGraph::read(Path::new(p)),
        }
    }
}

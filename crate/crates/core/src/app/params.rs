//! INI-style parameter files with command-line overrides.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Flat map of `Group.Key` paths to raw string values.
///
/// Every getter marks its key as used so leftovers (usually typos) can be
/// reported when a run finishes.
#[derive(Debug, Default, Clone)]
pub struct ParameterTree {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl ParameterTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `[Group]` / `[A.B]` headers, `Key = Value` lines and `#`
    /// comments. Later assignments win.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut tree = ParameterTree::new();
        let mut group = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: &str| Error::ParameterSyntax {
                line: i + 1,
                msg: format!("{msg}: `{}`", raw.trim()),
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax("unterminated group header"))?
                    .trim();
                if !valid_path(name) {
                    return Err(syntax("invalid group name"));
                }
                group = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `Key = Value`"))?;
            let key = key.trim();
            if !valid_path(key) {
                return Err(syntax("invalid key"));
            }
            let full = if group.is_empty() {
                key.to_string()
            } else {
                format!("{group}.{key}")
            };
            tree.values.insert(full, value.trim().to_string());
        }
        Ok(tree)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::MissingParameter(key.to_string()))?;
        convert(key, v)
    }

    /// Like [`get`](Self::get) but falls back to `default` when the key is
    /// absent. A present but malformed value is still an error.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(v) => convert(key, v),
            None => Ok(default),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)
    }

    pub fn get_string(&self, key: &str) -> Result<String> {
        self.get(key)
    }

    /// Whitespace- or comma-separated list.
    pub fn get_vec<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::MissingParameter(key.to_string()))?;
        split_list(v).map(|s| convert(key, s)).collect()
    }

    pub fn get_vec_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        if self.contains(key) {
            self.get_vec(key)
        } else {
            self.used.borrow_mut().insert(key.to_string());
            Ok(default)
        }
    }

    /// Keys that were never read.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.values
            .keys()
            .filter(|k| !used.contains(*k))
            .cloned()
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

fn valid_path(s: &str) -> bool {
    !s.is_empty()
        && s.split('.').all(|part| {
            !part.is_empty()
                && part
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        })
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

fn convert<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::ParameterType {
        key: key.to_string(),
        value: v.to_string(),
        ty: std::any::type_name::<T>(),
    })
}

/// Builds the tree from the arguments following the scenario name.
///
/// A leading argument without a dash names the parameter file; otherwise
/// `default_file` is read if it exists. `-Group.Key value` pairs override
/// file values.
pub fn parse_parameters(args: &[String], default_file: &str) -> Result<ParameterTree> {
    let mut rest = args;
    let mut tree = match rest.first() {
        Some(f) if !f.starts_with('-') => {
            rest = &rest[1..];
            ParameterTree::from_file(f)?
        }
        _ if Path::new(default_file).is_file() => ParameterTree::from_file(default_file)?,
        _ => ParameterTree::new(),
    };
    let mut it = rest.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix('-')
            .filter(|k| valid_path(k))
            .ok_or_else(|| {
                Error::InvalidArgument(format!("expected `-Group.Key value`, got `{flag}`"))
            })?;
        let value = it
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("missing value for `{flag}`")))?;
        tree.set(key, value.clone());
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn file_values_and_groups() {
        let t = ParameterTree::parse_str(
            "# comment\n[TimeLoop]\nTEnd = 259200\nDtMax = 3600 # inline\n\n[Grid.Soil]\nCells = 16 16\n",
        )
        .unwrap();
        assert_eq!(t.get_f64("TimeLoop.TEnd").unwrap(), 259200.0);
        assert_eq!(t.get_vec::<usize>("Grid.Soil.Cells").unwrap(), vec![16, 16]);
        assert_eq!(t.unused(), vec!["TimeLoop.DtMax".to_string()]);
    }

    #[test]
    fn command_line_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.input");
        std::fs::write(&path, "[TimeLoop]\nTEnd = 259200\n").unwrap();
        let a = args(&[
            path.to_str().unwrap(),
            "-TimeLoop.TEnd",
            "10",
            "-Problem.Name",
            "x",
        ]);
        let t = parse_parameters(&a, "does-not-exist.input").unwrap();
        assert_eq!(t.get_f64("TimeLoop.TEnd").unwrap(), 10.0);
        assert_eq!(t.get_string("Problem.Name").unwrap(), "x");
        // negative values are values, not flags
        let t = parse_parameters(&args(&["-A.B", "-5"]), "does-not-exist.input").unwrap();
        assert_eq!(t.get::<i64>("A.B").unwrap(), -5);
        assert!(parse_parameters(&args(&["-A.B"]), "none").is_err());
    }

    #[test]
    fn errors_name_the_key_or_line() {
        let t = ParameterTree::parse_str("[A]\nx = abc\n").unwrap();
        match t.get_f64("A.missing") {
            Err(Error::MissingParameter(k)) => assert_eq!(k, "A.missing"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(t.get_f64("A.x"), Err(Error::ParameterType { .. })));
        assert!(matches!(
            t.get_or("A.x", 1.0),
            Err(Error::ParameterType { .. })
        ));
        assert_eq!(t.get_or("A.y", 2.5).unwrap(), 2.5);
        match ParameterTree::parse_str("[A]\nok = 1\nbroken line\n") {
            Err(Error::ParameterSyntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(ParameterTree::parse_str("[A\n").is_err());
        assert!(ParameterTree::parse_str("[A..B]\n").is_err());
    }
}

//! Flat `key = value` text files. `#` starts a comment; keys may repeat.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValues {
    pub origin: PathBuf,
    pub entries: Vec<Entry>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Parse { path: origin.to_path_buf(), line: i + 1, message: "empty key".into() });
            }
            entries.push(Entry { key: key.to_string(), value: v.trim().to_string(), line: i + 1 });
        }
        Ok(Self { origin: origin.to_path_buf(), entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Last value for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn all(&self, key: &str) -> impl Iterator<Item = &Entry> {
        let key = key.to_string();
        self.entries.iter().filter(move |e| e.key == key)
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { path: self.origin.clone(), line, message: message.into() }
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| self.error(e.line, format!("{key}: {err}"))),
        }
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?.ok_or_else(|| self.error(0, format!("missing required key '{key}'")))
    }

    /// Fails on any key outside `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !known.contains(&e.key.as_str())) {
            Some(e) => Err(self.error(e.line, format!("unknown key '{}'", e.key))),
            None => Ok(()),
        }
    }
}

/// Renders `(key, value)` lines.
pub fn render(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Parses `AxB` / `AxBxC` dimension strings.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims: Option<Vec<usize>> = s.split(['x', 'X']).map(|p| p.trim().parse::<usize>().ok().filter(|&d| d > 0)).collect();
    dims.filter(|d| !d.is_empty()).ok_or_else(|| Error::invalid(format!("bad dimensions '{s}', expected e.g. 23x32")))
}

pub fn format_dims(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

pub fn parse_dims2(s: &str) -> Result<(usize, usize)> {
    match parse_dims(s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(Error::invalid(format!("expected HxW, got '{s}'"))),
    }
}

pub fn parse_dims3(s: &str) -> Result<[usize; 3]> {
    match parse_dims(s)?.as_slice() {
        &[a, b, c] => Ok([a, b, c]),
        _ => Err(Error::invalid(format!("expected AxBxC, got '{s}'"))),
    }
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad number '{p}' in list '{s}'"))))
        .collect()
}

pub fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_comments_and_repeats() {
        let kv = KeyValues::parse("# head\na = 1\n\nb=two # note\na = 3\n", Path::new("c")).unwrap();
        assert_eq!(kv.get("a"), Some("3"));
        assert_eq!(kv.get("b"), Some("two"));
        assert_eq!(kv.all("a").count(), 2);
        assert_eq!(kv.parsed::<u32>("a").unwrap(), Some(3));
        assert!(matches!(kv.parsed::<u32>("b"), Err(Error::Parse { line: 4, .. })));
        assert!(kv.reject_unknown(&["a"]).is_err());
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(KeyValues::parse("ok = 1\nnope\n", Path::new("c")), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn dims() {
        assert_eq!(parse_dims2("23x32").unwrap(), (23, 32));
        assert_eq!(parse_dims3("4x5x6").unwrap(), [4, 5, 6]);
        assert!(parse_dims2("23x0").is_err());
        assert!(parse_dims2("23").is_err());
        assert_eq!(format_dims(&[113, 136, 113]), "113x136x113");
    }
}

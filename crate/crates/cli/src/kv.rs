//! Flat `key = value` text used by run configs, design files and truth
//! sidecars. `#` starts a comment line; blank lines are ignored. List values
//! are comma separated.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed key/value pairs that remember their source line. Keys are consumed
/// with `take*`; [`KvMap::finish`] rejects anything left over.
#[derive(Debug, Default)]
pub struct KvMap {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "", format!("expected key = value, got {s:?}")))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::parse(line, "", "empty key"));
            }
            if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
                return Err(Error::parse(line, key, "key given twice"));
            }
        }
        Ok(Self { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::parse(line, key, format!("{v:?}: {e}"))),
        }
    }

    pub fn take_or<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn take_required<T>(&mut self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.take(key)?
            .ok_or_else(|| Error::ConfigInvalid(format!("missing required key {key:?}")))
    }

    /// A comma-separated list.
    pub fn take_list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) if v.is_empty() => {
                let _ = line;
                Ok(Some(Vec::new()))
            }
            Some((line, v)) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|e| Error::parse(line, key, format!("{x:?}: {e}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Errors on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::parse(line, key, "unknown key")),
        }
    }
}

/// Accumulates `key = value` lines.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        self.out.push_str("# ");
        self.out.push_str(text);
        self.out.push('\n');
        self
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.out.push_str(&format!("{key} = {value}\n"));
        self
    }

    pub fn put_list<T: Display>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.put(key, joined.join(","))
    }

    pub fn finish(self) -> String {
        self.out
    }
}

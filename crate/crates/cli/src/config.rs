//! Flat TOML config files and the precedence rule flags > file > defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use svmpi::data::format_float;
use svmpi::feature_select::WeightRoute;
use svmpi::generators::{AdSet, NormalScale};
use svmpi::interval::Method;
use svmpi::KernelFamily;

/// A value that can come from a flag or a config file and be echoed back.
pub trait Setting: Sized {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

impl Setting for f64 {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        match v {
            toml::Value::Float(f) => Ok(*f),
            toml::Value::Integer(i) => Ok(*i as f64),
            toml::Value::String(s) => s.trim().parse().map_err(|_| format!("expected a number, found {s:?}")),
            other => Err(format!("expected a number, found {other}")),
        }
    }

    fn render(&self) -> String {
        format_float(*self)
    }
}

fn toml_unsigned(v: &toml::Value) -> std::result::Result<u64, String> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::String(s) => s.trim().parse().map_err(|_| format!("expected a nonnegative integer, found {s:?}")),
        other => Err(format!("expected a nonnegative integer, found {other}")),
    }
}

impl Setting for u64 {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        toml_unsigned(v)
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Setting for usize {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        toml_unsigned(v).and_then(|u| usize::try_from(u).map_err(|e| e.to_string()))
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Setting for bool {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        match v {
            toml::Value::Boolean(b) => Ok(*b),
            toml::Value::String(s) => s.trim().parse().map_err(|_| format!("expected true or false, found {s:?}")),
            other => Err(format!("expected true or false, found {other}")),
        }
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Setting for String {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            other => Err(format!("expected a string, found {other}")),
        }
    }

    fn render(&self) -> String {
        self.clone()
    }
}

impl Setting for PathBuf {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        String::from_toml(v).map(PathBuf::from)
    }

    fn render(&self) -> String {
        self.display().to_string()
    }
}

/// Lists come as TOML arrays or as comma-separated strings.
impl<T: Setting> Setting for Vec<T> {
    fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
        match v {
            toml::Value::Array(items) => items.iter().map(T::from_toml).collect(),
            toml::Value::String(s) => s
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| T::from_toml(&toml::Value::String(p.trim().to_owned())))
                .collect(),
            other => Err(format!("expected a list, found {other}")),
        }
    }

    fn render(&self) -> String {
        self.iter().map(Setting::render).collect::<Vec<_>>().join(",")
    }
}

macro_rules! parsed_setting {
    ($($t:ty),*) => {$(
        impl Setting for $t {
            fn from_toml(v: &toml::Value) -> std::result::Result<Self, String> {
                String::from_toml(v)?.parse::<$t>().map_err(|e| e.to_string())
            }

            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

parsed_setting!(Method, AdSet, KernelFamily, WeightRoute, NormalScale);

/// Resolves each key from its flag, then the config file, then a default,
/// and records the outcome in resolution order.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, toml::Value>,
    used: BTreeSet<String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut r = Resolver::default();
        let Some(path) = path else {
            r.resolved.push(("config".into(), "none".into()));
            return Ok(r);
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        r.file = Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        r.resolved.push(("config".into(), path.display().to_string()));
        Ok(r)
    }

    pub fn parse(text: &str) -> Result<BTreeMap<String, toml::Value>> {
        let table: toml::Table = text.parse()?;
        let mut out = BTreeMap::new();
        for (k, v) in table {
            if matches!(v, toml::Value::Table(_)) {
                bail!("config must be flat; key {k:?} holds a table");
            }
            out.insert(k.replace('_', "-"), v);
        }
        Ok(out)
    }

    #[cfg(test)]
    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Resolver {
            file: Self::parse(text)?,
            ..Default::default()
        })
    }

    fn lookup<T: Setting>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if let Some(v) = flag {
            self.used.insert(key.to_owned());
            return Ok(Some(v));
        }
        match self.file.get(key) {
            Some(v) => {
                self.used.insert(key.to_owned());
                T::from_toml(v).map(Some).map_err(|e| anyhow!("config key {key:?}: {e}"))
            }
            None => Ok(None),
        }
    }

    pub fn get<T: Setting>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = self.lookup(key, flag)?.unwrap_or(default);
        self.resolved.push((key.to_owned(), v.render()));
        Ok(v)
    }

    pub fn get_opt<T: Setting>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let v = self.lookup(key, flag)?;
        let shown = v.as_ref().map(Setting::render).unwrap_or_else(|| "none".into());
        self.resolved.push((key.to_owned(), shown));
        Ok(v)
    }

    pub fn require<T: Setting>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        match self.lookup(key, flag)? {
            Some(v) => {
                self.resolved.push((key.to_owned(), v.render()));
                Ok(v)
            }
            None => bail!("missing required setting --{key} (flag or config key)"),
        }
    }

    /// Fails on config keys this command does not understand, then returns
    /// the resolved `(key, value)` pairs.
    pub fn finish(self) -> Result<Vec<(String, String)>> {
        let unknown: Vec<&str> = self.file.keys().filter(|k| !self.used.contains(*k)).map(String::as_str).collect();
        if !unknown.is_empty() {
            bail!("unknown config key(s) for this command: {}", unknown.join(", "));
        }
        Ok(self.resolved)
    }
}

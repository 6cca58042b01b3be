//! Line-oriented `key=value` result manifests.
//!
//! Keys keep insertion order so reruns produce identical files. Floats are
//! written with 12 significant digits, rationals exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::meshkit::io::hex_digest;
use crate::verify::{fmt_value, write_atomic};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

fn check_key(key: &str) -> Result<()> {
    if key.is_empty() || key.contains(['=', '\n', '#']) || key.trim() != key {
        return Err(Error::Invalid(format!("bad manifest key {key:?}")));
    }
    Ok(())
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        check_key(key).expect("manifest keys are static identifiers");
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, fmt_value(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, found {line:?}"),
            })?;
            let k = k.trim();
            check_key(k).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            m.set(k, v.trim());
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// SHA-256 of arbitrary text (configs, tables) as lowercase hex.
pub fn text_hash(text: &str) -> String {
    hex_digest(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_order() {
        let mut m = Manifest::new();
        m.set("epsilon", "1/31").set_f64("c1bl", -0.3038219423756).set("dofs", 1234);
        m.set("epsilon", "1/10");
        let back = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.entries()[0], ("epsilon".to_string(), "1/10".to_string()));
        // 12 significant digits
        assert!((back.get_f64("c1bl").unwrap() + 0.3038219423756).abs() < 5e-13);
        assert_eq!(back.get("c1bl").unwrap(), "-3.03821942376e-1");
    }

    #[test]
    fn parse_error_names_line() {
        let err = Manifest::parse("a=1\n\nnot a pair\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}

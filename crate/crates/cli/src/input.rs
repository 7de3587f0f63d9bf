//! Reading spec files. Every file read is recorded for the manifest.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use smc_core::probability::ChainSpec;

use crate::CliError;

#[derive(Default)]
pub struct Inputs {
    seen: RefCell<Map<String, Value>>,
}

impl Inputs {
    pub fn recorded(&self) -> Value {
        Value::Object(self.seen.borrow().clone())
    }

    pub fn text(&self, path: &Path) -> Result<String, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let recorded = serde_json::from_str(&text).unwrap_or_else(|_| Value::String(text.clone()));
        self.seen.borrow_mut().insert(path.display().to_string(), recorded);
        Ok(text)
    }

    pub fn value(&self, path: &Path) -> Result<Value, CliError> {
        let text = self.text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))
    }

    /// Decode with the failing key path in the diagnostic.
    pub fn decode<T: DeserializeOwned>(&self, path: &Path, value: Value) -> Result<T, CliError> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let at = e.path().to_string();
            let at = if at == "." {
                "top level".to_string()
            } else {
                format!("key `{at}`")
            };
            CliError::Spec(format!("{}: {at}: {}", path.display(), e.inner()))
        })
    }

    pub fn load<T: DeserializeOwned>(&self, path: &Path) -> Result<T, CliError> {
        let v = self.value(path)?;
        self.decode(path, v)
    }

    pub fn chain(&self, path: &Path) -> Result<ChainSpec, CliError> {
        let v = self.value(path)?;
        ChainSpec::from_json_value(&v).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))
    }

    /// Replace `"chain": "<file>"` references, relative to `origin`, by the file contents.
    pub fn resolve_chain_refs(&self, origin: &Path, value: &mut Value) -> Result<(), CliError> {
        match value {
            Value::Object(map) => {
                if let Some(Value::String(r)) = map.get("chain") {
                    let target = relative_to(origin, r);
                    let chain = self.chain(&target)?;
                    map.insert(
                        "chain".into(),
                        serde_json::to_value(chain).map_err(|e| CliError::Spec(e.to_string()))?,
                    );
                }
                for v in map.values_mut() {
                    self.resolve_chain_refs(origin, v)?;
                }
            }
            Value::Array(items) => {
                for v in items {
                    self.resolve_chain_refs(origin, v)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// A JSON file that may contain chain references.
    pub fn load_with_refs<T: DeserializeOwned>(&self, path: &Path) -> Result<T, CliError> {
        let mut v = self.value(path)?;
        self.resolve_chain_refs(path, &mut v)?;
        self.decode(path, v)
    }
}

fn relative_to(origin: &Path, reference: &str) -> PathBuf {
    let r = Path::new(reference);
    if r.is_absolute() {
        r.to_path_buf()
    } else {
        origin.parent().unwrap_or(Path::new(".")).join(r)
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad list entry `{s}`")))
        .collect()
}

/// `start:stop:count`, endpoints included.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("grid `{text}` is not start:stop:count"));
    };
    let start: f64 = a.parse().map_err(|_| format!("bad grid start `{a}`"))?;
    let stop: f64 = b.parse().map_err(|_| format!("bad grid stop `{b}`"))?;
    let count: usize = c.parse().map_err(|_| format!("bad grid count `{c}`"))?;
    if count == 0 {
        return Err("grid count must be positive".into());
    }
    Ok(smc_core::numeric::linspace(start, stop, count))
}

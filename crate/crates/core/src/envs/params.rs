use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Named physical parameters with defaults, overridable from config.
pub struct ParamSet<'a> {
    env: &'static str,
    overrides: &'a BTreeMap<String, f64>,
    known: Vec<&'static str>,
}

impl<'a> ParamSet<'a> {
    pub fn new(env: &'static str, overrides: &'a BTreeMap<String, f64>) -> Self {
        Self {
            env,
            overrides,
            known: Vec::new(),
        }
    }

    pub fn get(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.known.push(key);
        let v = self.overrides.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::InvalidConfig(format!("env.params.{key} must be finite")));
        }
        Ok(v)
    }

    pub fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v <= 0.0 {
            return Err(Error::InvalidConfig(format!("env.params.{key} must be > 0")));
        }
        Ok(v)
    }

    pub fn non_negative(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v < 0.0 {
            return Err(Error::InvalidConfig(format!("env.params.{key} must be >= 0")));
        }
        Ok(v)
    }

    /// Rejects any override key that was never requested.
    pub fn finish(self) -> Result<()> {
        if let Some(k) = self.overrides.keys().find(|k| !self.known.contains(&k.as_str())) {
            return Err(Error::InvalidConfig(format!(
                "unknown parameter env.params.{k} for {} (known: {})",
                self.env,
                self.known.join(", ")
            )));
        }
        Ok(())
    }
}

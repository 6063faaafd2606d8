//! Configuration files, presets and command-line overrides.

use std::path::Path;

use serde_json::Value;

use super::presets::Preset;
use crate::config::SimulationConfig;
use crate::error::{Error, Result};

/// Parses `key=value`. The value is read as JSON when it parses, otherwise
/// as a bare string, so `expiry_period=null` and `selling_mechanism=SPA`
/// both work.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::config("override", format!("expected key=value, got `{s}`")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(Error::config("override", format!("empty key in `{s}`")));
    }
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
    Ok((key.to_string(), value))
}

/// Reads a JSON or TOML (by extension) configuration fragment.
pub fn read_config_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let value = if is_toml {
        let t: toml::Table = toml::from_str(&text).map_err(|e| Error::config("config", e.to_string()))?;
        serde_json::to_value(t)?
    } else {
        serde_json::from_str(&text).map_err(|e| Error::config("config", e.to_string()))?
    };
    if !value.is_object() {
        return Err(Error::config("config", "top level must be a table of parameters"));
    }
    Ok(value)
}

/// Layers a configuration: preset (or defaults), then the file, then the
/// overrides. The result is validated.
pub fn load_config(preset: Option<&str>, file: Option<&Path>, overrides: &[(String, Value)]) -> Result<SimulationConfig> {
    let base = match preset {
        Some(name) => Preset::from_name(name)?.config(),
        None => SimulationConfig::default(),
    };
    let mut merged = serde_json::to_value(base)?;
    let map = merged.as_object_mut().expect("config serializes to an object");
    if let Some(path) = file {
        if let Value::Object(fragment) = read_config_file(path)? {
            map.extend(fragment);
        }
    }
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    let config: SimulationConfig = serde_json::from_value(merged).map_err(|e| Error::config("config", e.to_string()))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn override_parsing() {
        assert_eq!(parse_override("runs=3").unwrap(), ("runs".into(), Value::from(3)));
        assert_eq!(parse_override("expiry_period=null").unwrap().1, Value::Null);
        assert_eq!(parse_override("selling_mechanism=SPA").unwrap().1, Value::from("SPA"));
        assert!(parse_override("runs").is_err());
    }

    #[test]
    fn preset_with_override() {
        let ov = [parse_override("secondary_market=true").unwrap()];
        let c = load_config(Some("fixed-spa"), None, &ov).unwrap();
        assert!(c.secondary_market);
        assert_eq!(c.max_tickets, 1024);
    }

    #[test]
    fn amm_with_expiry_rejected() {
        let ov = [parse_override("expiry_period=64").unwrap()];
        let err = load_config(Some("flexible-amm"), None, &ov).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("reimbursement_factor"));
    }

    #[test]
    fn unknown_key_named() {
        let ov = [parse_override("max_tikets=3").unwrap()];
        let err = load_config(None, None, &ov).unwrap_err();
        assert!(err.to_string().contains("max_tikets"), "{err}");
    }

    #[test]
    fn type_mismatch_named() {
        let ov = [parse_override("max_tickets=lots").unwrap()];
        let err = load_config(None, None, &ov).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn toml_and_json_files() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(f, "selling_mechanism = \"SPA\"\nagent_bidding_strategy = \"truthful\"\nmax_tickets = 7").unwrap();
        let c = load_config(None, Some(f.path()), &[]).unwrap();
        assert_eq!(c.max_tickets, 7);

        let mut j = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        write!(j, r#"{{"timesteps": 12, "price_vola": null}}"#).unwrap();
        let c = load_config(Some("simple-fpa"), Some(j.path()), &[]).unwrap();
        assert_eq!(c.timesteps, 12);
        assert_eq!(c.price_vola, None);
        assert_eq!(c.max_tickets, 32);
    }
}

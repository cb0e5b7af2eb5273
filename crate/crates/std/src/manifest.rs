use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

/// Provenance block attached to every JSON output under `"manifest"`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Every resolved parameter, defaults included.
    pub parameters: Value,
    pub seed: u64,
    pub version: String,
    /// Wall-clock seconds; the only field that differs between identical runs.
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn finish<P: Serialize>(subcommand: &str, parameters: &P, seed: u64, started: Instant) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            parameters: serde_json::to_value(parameters).unwrap_or(Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: started.elapsed().as_secs_f64(),
        }
    }
}

/// Serializes `body` with the manifest inserted under `"manifest"`.
pub fn with_manifest<B: Serialize>(body: &B, manifest: &RunManifest) -> Value {
    let mut v = serde_json::to_value(body).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        map.insert(
            "manifest".into(),
            serde_json::to_value(manifest).unwrap_or(Value::Null),
        );
    }
    v
}

/// Drops `manifest.duration_secs`, leaving what must be reproducible.
pub fn strip_duration(v: &mut Value) {
    if let Some(m) = v.get_mut("manifest").and_then(Value::as_object_mut) {
        m.remove("duration_secs");
    }
}

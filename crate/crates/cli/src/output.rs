//! Output envelope and formatting helpers.

use serde::Serialize;
use serde_json::{json, Value};

/// FNV-1a 64-bit content hash; deterministic for identical spec bytes.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("fnv1a64:{h:016x}")
}

/// Round to 12 significant digits (the envelope print precision).
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// JSON value for a float that may be infinite (`serde_json` would render it
/// as null): non-finite values become the strings "inf" / "-inf".
pub fn float_value(x: f64) -> Value {
    if x.is_finite() {
        json!(sig12(x))
    } else if x.is_nan() {
        Value::Null
    } else {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.to_string())
    }
}

/// Round every float in a JSON tree to 12 significant digits.
pub fn round_values(value: Value) -> Value {
    match value {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                Value::Number(n)
            } else if let Some(f) = n.as_f64() {
                json!(sig12(f))
            } else {
                Value::Number(n)
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_values).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_values(v))).collect())
        }
        other => other,
    }
}

#[derive(Serialize)]
pub struct Envelope {
    pub command: String,
    pub spec_digest: Option<String>,
    pub parameters: Value,
    pub results: Value,
    pub version: &'static str,
}

impl Envelope {
    pub fn new(command: &str, spec_digest: Option<String>, parameters: Value, results: Value) -> Self {
        Envelope {
            command: command.to_string(),
            spec_digest,
            parameters,
            results: round_values(results),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn print(&self) {
        println!("{}", serde_json::to_string_pretty(self).expect("envelope serializes"));
    }
}

/// serde_json loses the special values; non-finite floats become strings.
pub fn fmt_csv(x: f64) -> String {
    if x.is_finite() {
        format!("{}", sig12(x))
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

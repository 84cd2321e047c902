//! JSON model files.
//!
//! ```json
//! {
//!   "sigma": 0.0,
//!   "gamma": 0.5,
//!   "jumps": [ { "rate": 1.0, "law": "exponential", "params": { "mean": 1.0 } } ]
//! }
//! ```
//!
//! Exactly one of `gamma` (Levy-Khintchine drift) or `c` (effective drift)
//! must be present. Laws: `exponential {mean}`, `erlang {shape, mean}`,
//! `deterministic {size}`, `uniform {lo, hi}`.

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::levy_model::{JumpComponent, LevyModel, MagnitudeLaw};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    sigma: f64,
    gamma: Option<f64>,
    c: Option<f64>,
    #[serde(default)]
    jumps: Vec<RawJump>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJump {
    rate: f64,
    law: String,
    #[serde(default)]
    params: Map<String, Value>,
}

fn invalid(field: String, reason: impl Into<String>) -> Error {
    Error::InvalidModel {
        field,
        reason: reason.into(),
    }
}

fn take_f64(params: &Map<String, Value>, prefix: &str, key: &str) -> Result<f64> {
    match params.get(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| invalid(format!("{prefix}.{key}"), format!("expected a number, got {v}"))),
        None => Err(invalid(format!("{prefix}.{key}"), "missing")),
    }
}

fn check_keys(params: &Map<String, Value>, prefix: &str, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(invalid(
                format!("{prefix}.{k}"),
                format!("unknown parameter; expected one of {allowed:?}"),
            ));
        }
    }
    Ok(())
}

fn parse_law(raw: &RawJump, i: usize) -> Result<MagnitudeLaw> {
    let prefix = format!("jumps[{i}].params");
    let p = &raw.params;
    let law = match raw.law.as_str() {
        "exponential" => {
            check_keys(p, &prefix, &["mean"])?;
            MagnitudeLaw::Exponential {
                mean: take_f64(p, &prefix, "mean")?,
            }
        }
        "erlang" => {
            check_keys(p, &prefix, &["shape", "mean"])?;
            let shape = match p.get("shape") {
                Some(v) => v
                    .as_u64()
                    .filter(|&s| s >= 1 && s <= 64)
                    .ok_or_else(|| {
                        invalid(
                            format!("{prefix}.shape"),
                            format!("expected an integer in 1..=64, got {v}"),
                        )
                    })? as u32,
                None => return Err(invalid(format!("{prefix}.shape"), "missing")),
            };
            MagnitudeLaw::Erlang {
                shape,
                mean: take_f64(p, &prefix, "mean")?,
            }
        }
        "deterministic" => {
            check_keys(p, &prefix, &["size"])?;
            MagnitudeLaw::Deterministic {
                size: take_f64(p, &prefix, "size")?,
            }
        }
        "uniform" => {
            check_keys(p, &prefix, &["lo", "hi"])?;
            MagnitudeLaw::Uniform {
                lo: take_f64(p, &prefix, "lo")?,
                hi: take_f64(p, &prefix, "hi")?,
            }
        }
        other => {
            return Err(invalid(
                format!("jumps[{i}].law"),
                format!("unknown law `{other}`; expected exponential, erlang, deterministic or uniform"),
            ))
        }
    };
    law.validate()
        .map_err(|(name, reason)| invalid(format!("{prefix}.{name}"), reason))?;
    Ok(law)
}

/// Parses a model from JSON text.
pub fn parse_model(text: &str) -> Result<LevyModel> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| Error::ConfigSyntax {
        line: e.line(),
        column: e.column(),
        reason: e.to_string(),
    })?;
    let mut jumps = Vec::with_capacity(raw.jumps.len());
    for (i, j) in raw.jumps.iter().enumerate() {
        let law = parse_law(j, i)?;
        jumps.push(JumpComponent { rate: j.rate, law });
    }
    match (raw.gamma, raw.c) {
        (Some(g), None) => LevyModel::new(raw.sigma, g, jumps),
        (None, Some(c)) => LevyModel::with_effective_drift(raw.sigma, c, jumps),
        (Some(_), Some(_)) => Err(invalid("c".into(), "give either gamma or c, not both")),
        (None, None) => Err(invalid("gamma".into(), "missing (or give the effective drift c)")),
    }
}

/// Serialises a model back to the JSON schema, using the `gamma` field.
pub fn model_to_json(model: &LevyModel) -> String {
    let jumps: Vec<Value> = model
        .jumps()
        .iter()
        .map(|j| {
            let (law, params) = match j.law {
                MagnitudeLaw::Exponential { mean } => ("exponential", serde_json::json!({ "mean": mean })),
                MagnitudeLaw::Erlang { shape, mean } => {
                    ("erlang", serde_json::json!({ "shape": shape, "mean": mean }))
                }
                MagnitudeLaw::Deterministic { size } => ("deterministic", serde_json::json!({ "size": size })),
                MagnitudeLaw::Uniform { lo, hi } => ("uniform", serde_json::json!({ "lo": lo, "hi": hi })),
            };
            serde_json::json!({ "rate": j.rate, "law": law, "params": params })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "sigma": model.sigma(),
        "gamma": model.gamma(),
        "jumps": jumps,
    }))
    .expect("model serialises")
}

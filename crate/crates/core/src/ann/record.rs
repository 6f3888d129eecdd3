//! `key = value` text record for [`NetworkModel`].
//!
//! Floats are written in Rust's shortest round-trip form, so a reload is
//! bit-identical.

use std::collections::BTreeMap;

use super::{NetworkKind, NetworkModel, Normalizer};
use crate::error::{Error, Result};

const HEADER: &str = "# chanpred network model v1";

const KEYS: [&str; 14] = [
    "kind",
    "hidden_neurons",
    "input_weights",
    "output_weights",
    "centers",
    "widths",
    "trained",
    "in_min",
    "in_max",
    "out_min",
    "out_max",
    "target_lo",
    "target_hi",
    "version",
];

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(super) fn write(m: &NetworkModel) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("version", "1".into());
    line("kind", m.kind.to_string());
    line("hidden_neurons", m.hidden_neurons().to_string());
    line("input_weights", join(&m.input_weights));
    line("output_weights", join(&m.output_weights));
    line("centers", join(&m.centers));
    line("widths", join(&m.widths));
    line("trained", m.norm.is_some().to_string());
    if let Some(n) = &m.norm {
        line("in_min", format!("{:?}", n.in_min));
        line("in_max", format!("{:?}", n.in_max));
        line("out_min", format!("{:?}", n.out_min));
        line("out_max", format!("{:?}", n.out_max));
        line("target_lo", format!("{:?}", n.target_lo));
        line("target_hi", format!("{:?}", n.target_hi));
    }
    out
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: "<model record>".into(),
        line,
        message: message.into(),
    }
}

pub(super) fn read(text: &str) -> Result<NetworkModel> {
    let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(lineno, "expected `key = value`"))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(bad(lineno, format!("unknown key `{k}`")));
        }
        if fields.insert(k, (lineno, v.trim())).is_some() {
            return Err(bad(lineno, format!("duplicate key `{k}`")));
        }
    }
    let get = |k: &str| -> Result<(usize, &str)> {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| bad(0, format!("missing key `{k}`")))
    };
    let float = |k: &str| -> Result<f64> {
        let (l, v) = get(k)?;
        v.parse::<f64>().map_err(|e| bad(l, format!("`{k}`: {e}")))
    };
    let floats = |k: &str| -> Result<Vec<f64>> {
        let (l, v) = get(k)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(l, format!("`{k}`: {e}")))
            })
            .collect()
    };

    let (l, version) = get("version")?;
    if version != "1" {
        return Err(bad(l, format!("unsupported record version {version}")));
    }
    let (l, kind) = get("kind")?;
    let kind: NetworkKind = kind.parse().map_err(|e: Error| bad(l, e.to_string()))?;
    let (l, m) = get("hidden_neurons")?;
    let m: usize = m
        .parse()
        .map_err(|e| bad(l, format!("`hidden_neurons`: {e}")))?;
    let input_weights = floats("input_weights")?;
    let output_weights = floats("output_weights")?;
    if output_weights.len() != m {
        return Err(bad(
            get("output_weights")?.0,
            format!(
                "expected {m} output weights, found {}",
                output_weights.len()
            ),
        ));
    }
    let (l, trained) = get("trained")?;
    let norm = match trained {
        "true" => Some(Normalizer::with_band(
            float("in_min")?,
            float("in_max")?,
            float("out_min")?,
            float("out_max")?,
            float("target_lo")?,
            float("target_hi")?,
        )?),
        "false" => None,
        other => {
            return Err(bad(
                l,
                format!("`trained` must be true or false, got `{other}`"),
            ))
        }
    };
    NetworkModel::from_parts(
        kind,
        input_weights,
        output_weights,
        floats("centers")?,
        floats("widths")?,
        norm,
    )
}

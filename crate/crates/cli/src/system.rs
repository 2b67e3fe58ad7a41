use num_bigint::BigUint;
use orbitstat::systems::{Builtin, SigmaSource};
use orbitstat::{Error, Result};

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedSpec(msg.into())
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| malformed(format!("{key}={v}: expected a non-negative integer")))
}

/// `builtin:NAME[,key=value...]`.
pub fn parse_builtin(spec: &str) -> Result<Builtin> {
    let mut parts = spec.split(',');
    let name = parts.next().unwrap_or("").trim().to_ascii_uppercase();
    let mut q = None;
    let mut p = None;
    let mut n = None;
    let mut values = None;
    for kv in parts {
        let (k, v) = kv.split_once('=').ok_or_else(|| malformed(format!("expected key=value, got {kv:?}")))?;
        match k.trim() {
            "q" => q = Some(parse_u64(k, v)?),
            "p" => p = Some(parse_u64(k, v)?),
            "n" => n = Some(parse_u64(k, v)?),
            "values" => {
                values = Some(v.split(':').map(|x| parse_u64(k, x)).collect::<Result<Vec<_>>>()?);
            }
            other => return Err(malformed(format!("unknown builtin parameter {other:?}"))),
        }
    }
    let b = match name.as_str() {
        "FF" => Builtin::FF { q: q.unwrap_or(2) },
        "E" => Builtin::E { p: p.ok_or_else(|| malformed("E needs p=..."))?, n: n.ok_or_else(|| malformed("E needs n=..."))? },
        "GA" => Builtin::GA,
        "GM" => Builtin::GM,
        "PERIODIC" => Builtin::Periodic(values.ok_or_else(|| malformed("periodic needs values=a:b:..."))?),
        other => return Err(malformed(format!("unknown builtin {other:?} (FF, E, GA, GM, periodic)"))),
    };
    b.check()?;
    Ok(b)
}

/// `builtin:...`, `table:[...]`, inline JSON, or a path to a JSON file.
pub fn parse_system(spec: &str) -> Result<SigmaSource> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        return Ok(SigmaSource::Builtin(parse_builtin(rest)?));
    }
    if let Some(rest) = spec.strip_prefix("table:") {
        let v: Vec<serde_json::Value> = serde_json::from_str(rest)
            .map_err(|e| malformed(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let table = v
            .iter()
            .enumerate()
            .map(|(i, x)| match x {
                serde_json::Value::Number(n) if n.is_u64() => Ok(BigUint::from(n.as_u64().expect("u64"))),
                serde_json::Value::String(s) => s.parse::<BigUint>().map_err(|_| malformed(format!("entry {}: {s:?}", i + 1))),
                other => Err(malformed(format!("entry {}: expected a natural number, got {other}", i + 1))),
            })
            .collect::<Result<Vec<_>>>()?;
        if table.is_empty() {
            return Err(malformed("empty table"));
        }
        return Ok(SigmaSource::Table(table));
    }
    if spec.trim_start().starts_with('{') {
        return SigmaSource::from_json(spec);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| malformed(format!("{spec}: {e}")))?;
    SigmaSource::from_json(&text).map_err(|e| match e {
        Error::MalformedSpec(m) => Error::MalformedSpec(format!("{spec}: {m}")),
        other => other,
    })
}

//! JSON documents for channels, codes, algebras, ensembles and recovery
//! reports. Matrices are row-major lists of `[re, im]` pairs; floats are
//! written with 17 significant digits so a round trip is exact.

use std::io;

use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::channels::{BlockAlgebra, Isometry, KrausChannel, TpMode};
use crate::discrimination::StateEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::qec::CodeSpec;
use crate::recovery::RecoveryReport;

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Shortest decimal with exactly 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..16).contains(&exp) {
        format!("{x:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

struct Digits17<F>(F);

impl<F: Formatter> Formatter for Digits17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn write_with<F: Formatter>(v: &Value, f: F) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(f));
    serde::Serialize::serialize(v, &mut ser).expect("JSON values always serialize");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

pub fn to_string(v: &Value) -> String {
    write_with(v, CompactFormatter)
}

pub fn to_string_pretty(v: &Value) -> String {
    write_with(v, PrettyFormatter::new())
}

pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| schema(format!("malformed JSON: {e}")))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| schema(format!("{what} must be a number")))
}

pub fn matrix_from_json(v: &Value) -> Result<ComplexMatrix> {
    let rows = v.as_array().ok_or_else(|| schema("matrix must be a list of rows"))?;
    let cols = rows
        .first()
        .and_then(Value::as_array)
        .map(Vec::len)
        .ok_or_else(|| schema("matrix needs at least one row"))?;
    let mut m = ComplexMatrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| schema(format!("row {i} is not a list")))?;
        if row.len() != cols {
            return Err(schema(format!("row {i} has {} entries, expected {cols}", row.len())));
        }
        for (j, entry) in row.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| schema(format!("entry ({i},{j}) must be [re, im]")))?;
            m[(i, j)] = C64::new(number(&pair[0], "re")?, number(&pair[1], "im")?);
        }
    }
    Ok(m)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(format!("missing field '{key}'")))
}

fn object(v: &Value) -> Result<&Map<String, Value>> {
    v.as_object().ok_or_else(|| schema("expected a JSON object"))
}

fn usize_field(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    field(obj, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(format!("'{key}' must be a non-negative integer")))
}

/// A channel document: the channel plus its name and optional role.
#[derive(Debug, Clone)]
pub struct ChannelDoc {
    pub name: String,
    pub role: Option<String>,
    pub channel: KrausChannel,
}

pub fn channel_to_json(ch: &KrausChannel, name: &str) -> Value {
    json!({
        "name": name,
        "dim_in": ch.dim_in(),
        "dim_out": ch.dim_out(),
        "tp_mode": match ch.tp_mode() {
            TpMode::TracePreserving => "tp",
            TpMode::TraceNonincreasing => "tni",
        },
        "kraus": ch.kraus().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

/// Parses a channel document. Shape problems are schema errors; a map that
/// violates its declared normalization is reported as such.
pub fn channel_from_json(v: &Value) -> Result<ChannelDoc> {
    let obj = object(v)?;
    let name = field(obj, "name")?
        .as_str()
        .ok_or_else(|| schema("'name' must be a string"))?
        .to_string();
    let role = match obj.get("role") {
        None | Some(Value::Null) => None,
        Some(r) => Some(r.as_str().ok_or_else(|| schema("'role' must be a string"))?.to_string()),
    };
    let dim_in = usize_field(obj, "dim_in")?;
    let dim_out = usize_field(obj, "dim_out")?;
    let tp_mode = match field(obj, "tp_mode")?.as_str() {
        Some("tp") => TpMode::TracePreserving,
        Some("tni") => TpMode::TraceNonincreasing,
        _ => return Err(schema("'tp_mode' must be \"tp\" or \"tni\"")),
    };
    let kraus = field(obj, "kraus")?
        .as_array()
        .ok_or_else(|| schema("'kraus' must be a list of matrices"))?
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    if kraus.is_empty() {
        return Err(schema("'kraus' is empty"));
    }
    if let Some(k) = kraus.iter().find(|k| k.shape() != (dim_out, dim_in)) {
        return Err(schema(format!(
            "Kraus operator is {}x{}, declared {dim_out}x{dim_in}",
            k.nrows(),
            k.ncols()
        )));
    }
    if dim_in == 0 || dim_out == 0 {
        return Err(schema("dimensions must be positive"));
    }
    let channel = KrausChannel::new(dim_in, dim_out, kraus, tp_mode)?;
    Ok(ChannelDoc { name, role, channel })
}

pub fn code_to_json(code: &CodeSpec) -> Value {
    let mut v = channel_to_json(&code.encoding.as_channel(), &code.label);
    v["role"] = json!("encoding");
    v
}

/// An encoding is a one-Kraus isometric channel with `"role": "encoding"`.
pub fn code_from_json(v: &Value) -> Result<CodeSpec> {
    let doc = channel_from_json(v)?;
    if doc.role.as_deref() != Some("encoding") {
        return Err(schema("code documents need \"role\": \"encoding\""));
    }
    let [k] = doc.channel.kraus() else {
        return Err(schema("an encoding has exactly one Kraus operator"));
    };
    Ok(CodeSpec::new(Isometry::encoding(k.clone())?, doc.name))
}

pub fn algebra_to_json(alg: &BlockAlgebra) -> Value {
    json!({
        "dim": alg.dim(),
        "blocks": alg.blocks().iter().map(|(n, m)| json!([n, m])).collect::<Vec<_>>(),
        "basis": matrix_to_json(alg.basis()),
    })
}

pub fn algebra_from_json(v: &Value) -> Result<BlockAlgebra> {
    let obj = object(v)?;
    let dim = usize_field(obj, "dim")?;
    let blocks = field(obj, "blocks")?
        .as_array()
        .ok_or_else(|| schema("'blocks' must be a list of [n, m] pairs"))?
        .iter()
        .map(|b| match b.as_array().map(|p| p.as_slice()) {
            Some([n, m]) => match (n.as_u64(), m.as_u64()) {
                (Some(n), Some(m)) => Ok((n as usize, m as usize)),
                _ => Err(schema("block sizes must be integers")),
            },
            _ => Err(schema("each block is an [n, m] pair")),
        })
        .collect::<Result<Vec<_>>>()?;
    let basis = matrix_from_json(field(obj, "basis")?)?;
    if basis.shape() != (dim, dim) {
        return Err(schema(format!("basis must be {dim}x{dim}")));
    }
    BlockAlgebra::new(blocks, basis)
}

pub fn ensemble_to_json(ens: &StateEnsemble) -> Value {
    json!({
        "dim": ens.dim(),
        "states": ens.states().iter().map(|s| matrix_to_json(s.matrix())).collect::<Vec<_>>(),
    })
}

pub fn ensemble_from_json(v: &Value) -> Result<StateEnsemble> {
    let obj = object(v)?;
    let dim = usize_field(obj, "dim")?;
    let states = field(obj, "states")?
        .as_array()
        .ok_or_else(|| schema("'states' must be a list of matrices"))?
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    if states.is_empty() {
        return Err(schema("'states' is empty"));
    }
    if states.iter().any(|s| s.shape() != (dim, dim)) {
        return Err(schema(format!("every state must be {dim}x{dim}")));
    }
    StateEnsemble::from_matrices(states)
}

pub fn report_to_json(r: &RecoveryReport) -> Value {
    json!({
        "f0": r.f0_value,
        "rho0": matrix_to_json(r.rho0.matrix()),
        "rho0_rank": r.rho0_rank,
        "full_rank": r.rho0_full_rank,
        "unique": r.rho0_unique_heuristic,
        "bounds": [r.lower_bound, r.upper_bound],
        "recovery": r.recovery.as_ref().map(|c| channel_to_json(c, "recovery")),
        "warnings": r.warnings,
    })
}

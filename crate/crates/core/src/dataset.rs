//! JSON dataset persistence.
//!
//! ```json
//! { "meta":    { "format_version": "1", "seed": 42, "bases": [2,3,5,7,11],
//!                "created_utc": "...", "params_grid": { ... } },
//!   "records": [ { "p1": "…", "p2": "…", "p3": "…", "n": "…", "n_bits": 350,
//!                  "k": 17, "M": 21, "residues_mod35": [2,18,8],
//!                  "mr_passed": [2,3,5,7,11], "mr_first_fail": null,
//!                  "lucas": null | { "D": 5, "d_bits": …, "s": …,
//!                                    "u_residue": "…", "u_residue_bits": …,
//!                                    "n_bits": …, "delta": …,
//!                                    "strong_lucas_pass": false,
//!                                    "lucas_pseudoprime": false,
//!                                    "v_zero_round": null,
//!                                    "gcd_shortcut": null } } ] }
//! ```
//!
//! Big integers are decimal strings. Strict loading rejects unknown fields;
//! compat loading maps a few obvious aliases and keeps everything else
//! verbatim, re-emitting it on save.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::forge::CompositeRecord;
use crate::lucasprobe::CollapseMeasurement;
use crate::ntkernel::is_prime_oracle;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Strict,
    Compat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub format_version: String,
    pub seed: u64,
    pub bases: Vec<u64>,
    pub created_utc: String,
    pub params_grid: Value,
    /// Unknown meta fields kept in compat mode.
    pub extra: Map<String, Value>,
}

impl DatasetMeta {
    pub fn new(seed: u64, bases: Vec<u64>, created_utc: String, params_grid: Value) -> Self {
        DatasetMeta {
            format_version: FORMAT_VERSION.to_string(),
            seed,
            bases,
            created_utc,
            params_grid,
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub meta: DatasetMeta,
    pub records: Vec<CompositeRecord>,
    /// Unknown per-record fields kept in compat mode, keyed by record index.
    pub record_extras: BTreeMap<usize, Map<String, Value>>,
    /// Names of fields the compat loader could not map.
    pub unmapped_fields: Vec<String>,
}

impl DatasetFile {
    pub fn new(meta: DatasetMeta, records: Vec<CompositeRecord>) -> Self {
        DatasetFile {
            meta,
            records,
            record_extras: BTreeMap::new(),
            unmapped_fields: Vec::new(),
        }
    }
}

/// Current UTC time, RFC 3339 with second precision.
pub fn utc_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// RFC 3339 rendering of a Unix timestamp.
pub fn utc_from_unix(secs: i64) -> Option<String> {
    chrono::DateTime::from_timestamp(secs, 0)
        .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn big(v: &BigUint) -> Value {
    Value::String(v.to_str_radix(10))
}

fn opt<T: Into<Value>>(v: Option<T>) -> Value {
    v.map_or(Value::Null, Into::into)
}

pub fn measurement_to_json(m: &CollapseMeasurement) -> Value {
    json!({
        "D": opt(m.discriminant),
        "d_bits": m.d_bits,
        "s": m.s,
        "u_residue": m.u_residue.as_ref().map_or(Value::Null, big),
        "u_residue_bits": opt(m.u_residue_bits),
        "n_bits": m.n_bits,
        "delta": opt(m.delta),
        "strong_lucas_pass": m.strong_lucas_pass,
        "lucas_pseudoprime": m.lucas_pseudoprime,
        "v_zero_round": opt(m.v_zero_round),
        "gcd_shortcut": m.gcd_shortcut.as_ref().map_or(Value::Null, big),
    })
}

pub fn record_to_json(r: &CompositeRecord) -> Value {
    json!({
        "p1": big(&r.p1),
        "p2": big(&r.p2),
        "p3": big(&r.p3),
        "n": big(&r.n),
        "n_bits": r.n_bits,
        "k": r.k,
        "M": r.m,
        "residues_mod35": r.residues_mod35,
        "mr_passed": r.mr_passed,
        "mr_first_fail": opt(r.mr_first_fail),
        "lucas": r.lucas.as_ref().map_or(Value::Null, measurement_to_json),
    })
}

pub fn to_json_value(data: &DatasetFile) -> Value {
    let mut meta = data.meta.extra.clone();
    meta.insert("format_version".into(), json!(data.meta.format_version));
    meta.insert("seed".into(), json!(data.meta.seed));
    meta.insert("bases".into(), json!(data.meta.bases));
    meta.insert("created_utc".into(), json!(data.meta.created_utc));
    meta.insert("params_grid".into(), data.meta.params_grid.clone());
    let records: Vec<Value> = data
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = record_to_json(r);
            if let (Some(extra), Value::Object(obj)) = (data.record_extras.get(&i), &mut v) {
                for (key, value) in extra {
                    obj.entry(key.clone()).or_insert_with(|| value.clone());
                }
            }
            v
        })
        .collect();
    json!({ "meta": Value::Object(meta), "records": records })
}

pub fn to_json_string(data: &DatasetFile) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_json_value(data))?;
    s.push('\n');
    Ok(s)
}

const RECORD_ALIASES: &[(&str, &str)] = &[
    ("m", "M"),
    ("bits", "n_bits"),
    ("bit_size", "n_bits"),
    ("residues", "residues_mod35"),
    ("residue_pattern", "residues_mod35"),
    ("residues_mod_35", "residues_mod35"),
    ("mr_bases_passed", "mr_passed"),
    ("lucas_measurement", "lucas"),
];

struct Fields<'a> {
    index: usize,
    prefix: &'a str,
    obj: Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn err(&self, field: &str, reason: impl Into<String>) -> Error {
        Error::Field {
            index: self.index,
            field: format!("{}{}", self.prefix, field),
            reason: reason.into(),
        }
    }

    fn take(&mut self, field: &str) -> Result<Value> {
        self.obj
            .remove(field)
            .ok_or_else(|| self.err(field, "missing"))
    }

    fn big(&mut self, field: &str) -> Result<BigUint> {
        let v = self.take(field)?;
        parse_big(&v).ok_or_else(|| self.err(field, "expected a decimal integer string"))
    }

    fn opt_big(&mut self, field: &str) -> Result<Option<BigUint>> {
        match self.take(field)? {
            Value::Null => Ok(None),
            v => parse_big(&v)
                .map(Some)
                .ok_or_else(|| self.err(field, "expected a decimal integer string or null")),
        }
    }

    fn uint<T: TryFrom<u64>>(&mut self, field: &str) -> Result<T> {
        let v = self.take(field)?;
        self.uint_value(field, &v)
    }

    fn uint_value<T: TryFrom<u64>>(&self, field: &str, v: &Value) -> Result<T> {
        let raw = v
            .as_u64()
            .ok_or_else(|| self.err(field, format!("expected an unsigned integer, got {v}")))?;
        T::try_from(raw).map_err(|_| {
            self.err(
                field,
                format!("{raw} overflows {} bits", std::mem::size_of::<T>() * 8),
            )
        })
    }

    fn opt_uint<T: TryFrom<u64>>(&mut self, field: &str) -> Result<Option<T>> {
        match self.take(field)? {
            Value::Null => Ok(None),
            v => self.uint_value(field, &v).map(Some),
        }
    }

    fn opt_int(&mut self, field: &str) -> Result<Option<i64>> {
        match self.take(field)? {
            Value::Null => Ok(None),
            v => v
                .as_i64()
                .map(Some)
                .ok_or_else(|| self.err(field, format!("expected a 64-bit integer, got {v}"))),
        }
    }

    fn boolean(&mut self, field: &str) -> Result<bool> {
        let v = self.take(field)?;
        v.as_bool()
            .ok_or_else(|| self.err(field, format!("expected a boolean, got {v}")))
    }

    fn uint_list(&mut self, field: &str) -> Result<Vec<u64>> {
        let v = self.take(field)?;
        let arr = v
            .as_array()
            .ok_or_else(|| self.err(field, "expected an array"))?;
        arr.iter().map(|x| self.uint_value(field, x)).collect()
    }

    /// Whatever is left after all known fields were taken.
    fn leftovers(self, mode: LoadMode) -> Result<Map<String, Value>> {
        if mode == LoadMode::Strict {
            if let Some(key) = self.obj.keys().next() {
                return Err(self.err(key, "unknown field (strict mode)"));
            }
        }
        Ok(self.obj)
    }
}

fn parse_big(v: &Value) -> Option<BigUint> {
    let s = v.as_str()?;
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
}

fn measurement_from_json(index: usize, v: Value, mode: LoadMode) -> Result<CollapseMeasurement> {
    let Value::Object(obj) = v else {
        return Err(Error::Field {
            index,
            field: "lucas".into(),
            reason: "expected an object or null".into(),
        });
    };
    let mut f = Fields {
        index,
        prefix: "lucas.",
        obj,
    };
    let m = CollapseMeasurement {
        discriminant: f.opt_int("D")?,
        d_bits: f.uint("d_bits")?,
        s: f.uint("s")?,
        u_residue: f.opt_big("u_residue")?,
        u_residue_bits: f.opt_uint("u_residue_bits")?,
        n_bits: f.uint("n_bits")?,
        delta: f.opt_uint("delta")?,
        strong_lucas_pass: f.boolean("strong_lucas_pass")?,
        lucas_pseudoprime: f.boolean("lucas_pseudoprime")?,
        v_zero_round: f.opt_uint("v_zero_round")?,
        gcd_shortcut: f.opt_big("gcd_shortcut")?,
    };
    f.leftovers(LoadMode::Strict).or_else(|e| {
        if mode == LoadMode::Compat {
            Ok(Map::new())
        } else {
            Err(e)
        }
    })?;
    Ok(m)
}

/// Parses one record; returns it with any unmapped fields (compat mode).
pub fn record_from_json(
    index: usize,
    v: &Value,
    mode: LoadMode,
) -> Result<(CompositeRecord, Map<String, Value>)> {
    let Value::Object(obj) = v else {
        return Err(Error::Field {
            index,
            field: "<record>".into(),
            reason: "expected an object".into(),
        });
    };
    let mut obj = obj.clone();
    if mode == LoadMode::Compat {
        for (alias, canonical) in RECORD_ALIASES {
            if !obj.contains_key(*canonical) {
                if let Some(val) = obj.remove(*alias) {
                    obj.insert((*canonical).to_string(), val);
                }
            }
        }
        for optional in ["mr_first_fail", "lucas"] {
            obj.entry(optional).or_insert(Value::Null);
        }
        obj.entry("mr_passed").or_insert(json!([]));
    }
    let mut f = Fields {
        index,
        prefix: "",
        obj,
    };
    let p1 = f.big("p1")?;
    let p2 = f.big("p2")?;
    let p3 = f.big("p3")?;
    let n = f.big("n")?;
    let n_bits: u64 = f.uint("n_bits")?;
    let k: u64 = f.uint("k")?;
    let m: u64 = f.uint("M")?;
    let residues = f.uint_list("residues_mod35")?;
    let residues_mod35: [u8; 3] = match residues.as_slice() {
        [a, b, c] if *a < 35 && *b < 35 && *c < 35 => [*a as u8, *b as u8, *c as u8],
        _ => return Err(f.err("residues_mod35", "expected three residues in [0, 35)")),
    };
    let mr_passed = f.uint_list("mr_passed")?;
    let mr_first_fail = f.opt_uint("mr_first_fail")?;
    let lucas = match f.take("lucas")? {
        Value::Null => None,
        lv => Some(measurement_from_json(index, lv, mode)?),
    };
    let extras = f.leftovers(mode)?;
    let record = CompositeRecord {
        p1,
        p2,
        p3,
        n,
        n_bits,
        k,
        m,
        residues_mod35,
        mr_passed,
        mr_first_fail,
        lucas,
    };
    Ok((record, extras))
}

fn field(index: usize, name: &str, reason: impl Into<String>) -> Error {
    Error::Field {
        index,
        field: name.into(),
        reason: reason.into(),
    }
}

/// Checks every record invariant, naming the first offending field.
pub fn validate_record(index: usize, r: &CompositeRecord) -> Result<()> {
    if &(&r.p1 * &r.p2) * &r.p3 != r.n {
        return Err(field(index, "n", "n != p1 * p2 * p3"));
    }
    if r.p1 < BigUint::from(2u8) {
        return Err(field(index, "p1", "p1 < 2"));
    }
    let h = &r.p1 - 1u32;
    if &h * r.k + 1u32 != r.p2 {
        return Err(field(index, "p2", "p2 != k (p1 - 1) + 1"));
    }
    if &h * r.m + 1u32 != r.p3 {
        return Err(field(index, "p3", "p3 != M (p1 - 1) + 1"));
    }
    if r.p1 == r.p2 || r.p1 == r.p3 || r.p2 == r.p3 {
        return Err(field(index, "p2", "factors are not distinct"));
    }
    if r.n_bits != r.n.bits() {
        return Err(field(index, "n_bits", format!("n has {} bits", r.n.bits())));
    }
    let expected = [&r.p1, &r.p2, &r.p3].map(|p| (p % 35u32).try_into().unwrap_or(u8::MAX));
    if expected != r.residues_mod35 {
        return Err(field(
            index,
            "residues_mod35",
            format!("expected {expected:?}"),
        ));
    }
    let n_minus_one = &r.n - 1u32;
    for (name, p) in [("p1", &r.p1), ("p2", &r.p2), ("p3", &r.p3)] {
        if !is_prime_oracle(p) {
            return Err(field(index, name, "not prime"));
        }
        if !(&n_minus_one % (p - 1u32)).is_zero() {
            return Err(field(index, "n", format!("({name} - 1) does not divide n - 1")));
        }
    }
    if let Some(fail) = r.mr_first_fail {
        if r.mr_passed.contains(&fail) {
            return Err(field(index, "mr_first_fail", "base also listed as passed"));
        }
    }
    if let Some(m) = &r.lucas {
        validate_measurement(index, r, m)?;
    }
    Ok(())
}

fn validate_measurement(index: usize, r: &CompositeRecord, m: &CollapseMeasurement) -> Result<()> {
    let f = |name: &str, reason: &str| field(index, &format!("lucas.{name}"), reason);
    if m.n_bits != r.n_bits {
        return Err(f("n_bits", "differs from record n_bits"));
    }
    let n_plus_one = &r.n + 1u32;
    let s = n_plus_one.trailing_zeros().unwrap_or(0);
    if m.s as u64 != s || m.d_bits != (n_plus_one >> s as usize).bits() {
        return Err(f("s", "does not match n + 1 = d * 2^s"));
    }
    match (&m.u_residue, m.u_residue_bits, m.delta, &m.gcd_shortcut) {
        (None, None, None, Some(g)) => {
            if g.is_zero() || !(&r.n % g).is_zero() {
                return Err(f("gcd_shortcut", "not a divisor of n"));
            }
            if m.strong_lucas_pass || m.lucas_pseudoprime {
                return Err(f("strong_lucas_pass", "set on a gcd shortcut"));
            }
        }
        (Some(u), Some(u_bits), Some(delta), None) => {
            if u >= &r.n {
                return Err(f("u_residue", "not reduced mod n"));
            }
            if u.bits() != u_bits {
                return Err(f("u_residue_bits", "does not match u_residue"));
            }
            if m.lucas_pseudoprime != u.is_zero() {
                return Err(f("lucas_pseudoprime", "must be true exactly when u_residue = 0"));
            }
            let expected = if u.is_zero() { m.n_bits } else { m.n_bits - u_bits };
            if delta != expected {
                return Err(f("delta", "must equal n_bits - u_residue_bits"));
            }
            if u.is_zero() && !m.strong_lucas_pass {
                return Err(f("strong_lucas_pass", "U_d = 0 implies a pass"));
            }
            if m.v_zero_round.is_some_and(|r| r >= m.s) {
                return Err(f("v_zero_round", "must be below s"));
            }
        }
        _ => {
            return Err(f(
                "delta",
                "either u_residue/u_residue_bits/delta or gcd_shortcut must be set",
            ))
        }
    }
    Ok(())
}

fn meta_from_json(v: &Value, mode: LoadMode) -> Result<DatasetMeta> {
    let Value::Object(obj) = v else {
        return Err(Error::Dataset("`meta` must be an object".into()));
    };
    let mut obj = obj.clone();
    let mut get = |key: &str| obj.remove(key);
    let bad = |key: &str, what: &str| Error::Dataset(format!("meta.{key}: {what}"));
    let format_version = match get("format_version") {
        Some(Value::String(s)) => s,
        None if mode == LoadMode::Compat => FORMAT_VERSION.to_string(),
        _ => return Err(bad("format_version", "expected a string")),
    };
    let seed = match get("seed") {
        Some(v) => v.as_u64().ok_or_else(|| bad("seed", "expected an unsigned 64-bit integer"))?,
        None if mode == LoadMode::Compat => 0,
        None => return Err(bad("seed", "missing")),
    };
    let bases = match get("bases") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| x.as_u64().ok_or_else(|| bad("bases", "expected unsigned integers")))
            .collect::<Result<Vec<_>>>()?,
        None if mode == LoadMode::Compat => Vec::new(),
        _ => return Err(bad("bases", "expected an array")),
    };
    let created_utc = match get("created_utc") {
        Some(Value::String(s)) => s,
        None if mode == LoadMode::Compat => String::new(),
        _ => return Err(bad("created_utc", "expected a string")),
    };
    let params_grid = match get("params_grid") {
        Some(v) => v,
        None if mode == LoadMode::Compat => Value::Null,
        None => return Err(bad("params_grid", "missing")),
    };
    if mode == LoadMode::Strict {
        if let Some(key) = obj.keys().next() {
            return Err(bad(key, "unknown field (strict mode)"));
        }
    }
    Ok(DatasetMeta {
        format_version,
        seed,
        bases,
        created_utc,
        params_grid,
        extra: obj,
    })
}

pub fn parse_dataset(text: &str, mode: LoadMode) -> Result<DatasetFile> {
    let root: Value = serde_json::from_str(text)?;
    let (meta_v, records_v) = match &root {
        Value::Object(obj) => (obj.get("meta"), obj.get("records")),
        // Compat: a bare array of records.
        Value::Array(_) if mode == LoadMode::Compat => (None, Some(&root)),
        _ => return Err(Error::Dataset("expected an object with `meta` and `records`".into())),
    };
    if let Value::Object(obj) = &root {
        if mode == LoadMode::Strict {
            if let Some(key) = obj.keys().find(|k| *k != "meta" && *k != "records") {
                return Err(Error::Dataset(format!("unknown top-level field `{key}`")));
            }
        }
    }
    let meta = match meta_v {
        Some(v) => meta_from_json(v, mode)?,
        None if mode == LoadMode::Compat => meta_from_json(&json!({}), mode)?,
        None => return Err(Error::Dataset("missing `meta`".into())),
    };
    let records_arr = records_v
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Dataset("`records` must be an array".into()))?;
    let mut data = DatasetFile::new(meta, Vec::with_capacity(records_arr.len()));
    let mut unmapped = std::collections::BTreeSet::new();
    for (i, rv) in records_arr.iter().enumerate() {
        let (record, extras) = record_from_json(i, rv, mode)?;
        validate_record(i, &record)?;
        if !extras.is_empty() {
            unmapped.extend(extras.keys().cloned());
            data.record_extras.insert(i, extras);
        }
        data.records.push(record);
    }
    data.unmapped_fields = unmapped.into_iter().collect();
    Ok(data)
}

pub fn load_dataset(path: &Path, mode: LoadMode) -> Result<DatasetFile> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, mode)
}

/// Validates every record and writes the file. With `append`, records of an
/// existing file at `path` are kept in front of the new ones.
pub fn save_dataset(data: &DatasetFile, path: &Path, append: bool) -> Result<()> {
    for (i, r) in data.records.iter().enumerate() {
        validate_record(i, r)?;
    }
    let merged;
    let to_write = if append && path.exists() {
        let mut existing = load_dataset(path, LoadMode::Compat)?;
        let offset = existing.records.len();
        existing.records.extend(data.records.iter().cloned());
        for (i, extra) in &data.record_extras {
            existing.record_extras.insert(offset + i, extra.clone());
        }
        merged = existing;
        &merged
    } else {
        data
    };
    std::fs::write(path, to_json_string(to_write)?)?;
    Ok(())
}

/// Record invariants that make `n` a Carmichael number (Korselt).
pub fn is_korselt_record(r: &CompositeRecord) -> bool {
    let n_minus_one = &r.n - 1u32;
    [&r.p1, &r.p2, &r.p3]
        .iter()
        .all(|p| n_minus_one.is_multiple_of(&(*p - 1u32)))
}

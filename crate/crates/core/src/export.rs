//! Lossless CSV and JSON encodings of a [`JointDistribution`].
//!
//! CSV files start with `# key=value` metadata lines followed by the header
//! `k,r,pi`; probabilities are printed with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JointDistribution, Method, ModelParams};

/// A table plus free-form metadata such as residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct Export {
    pub table: JointDistribution<f64>,
    pub extra: BTreeMap<String, String>,
}

impl Export {
    pub fn new(table: JointDistribution<f64>) -> Self {
        Self {
            table,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format `{other}`"))),
        }
    }
}

pub fn write(e: &Export, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(to_csv(e)),
        Format::Json => to_json(e),
    }
}

pub fn parse(s: &str, format: Format) -> Result<Export> {
    match format {
        Format::Csv => from_csv(s),
        Format::Json => from_json(s),
    }
}

pub fn to_csv(e: &Export) -> String {
    let t = &e.table;
    let mut out = String::new();
    let _ = writeln!(out, "# m={}", t.m());
    let _ = writeln!(out, "# rho={:.16e}", t.rho());
    let _ = writeln!(out, "# r_max={}", t.r_max);
    let _ = writeln!(out, "# method={}", t.method);
    let _ = writeln!(out, "# tol={:.16e}", t.tol);
    let _ = writeln!(out, "# flushed={}", t.flushed);
    for (k, v) in &e.extra {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("k,r,pi\n");
    for (k, r, p) in t.iter() {
        let _ = writeln!(out, "{k},{r},{p:.16e}");
    }
    out
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value for `{key}`: `{v}`")))
}

pub fn from_csv(s: &str) -> Result<Export> {
    let mut meta = BTreeMap::new();
    let mut lines = s.lines().enumerate();
    let mut header = false;
    for (i, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `# key=value`", i + 1)))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        } else if line.trim() == "k,r,pi" {
            header = true;
            break;
        } else if !line.trim().is_empty() {
            return Err(Error::Parse(format!("line {}: expected header `k,r,pi`", i + 1)));
        }
    }
    if !header {
        return Err(Error::Parse("missing header `k,r,pi`".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 fields", i + 1)));
        }
        rows.push(Row {
            k: num("k", f[0])?,
            r: num("r", f[1])?,
            pi: num("pi", f[2])?,
        });
    }
    assemble(meta, rows)
}

#[derive(Serialize, Deserialize)]
struct Row {
    k: usize,
    r: usize,
    pi: f64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    m: usize,
    rho: f64,
    r_max: usize,
    method: Method,
    tol: f64,
    flushed: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    meta: Meta,
    rows: Vec<Row>,
}

pub fn to_json(e: &Export) -> Result<String> {
    let t = &e.table;
    let doc = Document {
        meta: Meta {
            m: t.m(),
            rho: t.rho(),
            r_max: t.r_max,
            method: t.method,
            tol: t.tol,
            flushed: t.flushed,
            extra: e.extra.clone(),
        },
        rows: t.iter().map(|(k, r, pi)| Row { k, r, pi }).collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json(s: &str) -> Result<Export> {
    let doc: Document = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    build(doc.meta, doc.rows)
}

fn assemble(mut meta: BTreeMap<String, String>, rows: Vec<Row>) -> Result<Export> {
    let mut take = |key: &str| {
        meta.remove(key)
            .ok_or_else(|| Error::Parse(format!("missing metadata `{key}`")))
    };
    let m = Meta {
        m: num("m", &take("m")?)?,
        rho: num("rho", &take("rho")?)?,
        r_max: num("r_max", &take("r_max")?)?,
        method: take("method")?.parse()?,
        tol: num("tol", &take("tol")?)?,
        flushed: num("flushed", &take("flushed")?)?,
        extra: BTreeMap::new(),
    };
    let mut e = build(m, rows)?;
    e.extra = meta;
    Ok(e)
}

fn build(meta: Meta, rows: Vec<Row>) -> Result<Export> {
    let w = meta.r_max + 1;
    let n = (meta.m + 1) * w;
    if rows.len() != n {
        return Err(Error::Parse(format!("{} rows, expected {n}", rows.len())));
    }
    let mut values = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    for row in rows {
        if row.k > meta.m || row.r > meta.r_max {
            return Err(Error::Parse(format!("row ({}, {}) outside the table", row.k, row.r)));
        }
        let i = row.k * w + row.r;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Parse(format!("duplicate row ({}, {})", row.k, row.r)));
        }
        values[i] = row.pi;
    }
    // Not validated: empirical and asymptotic tables must load as written.
    let params = ModelParams {
        m: meta.m,
        rho: meta.rho,
    };
    let mut table = JointDistribution::from_values(params, meta.r_max, values, meta.method, meta.tol)?;
    table.flushed = meta.flushed;
    Ok(Export {
        table,
        extra: meta.extra,
    })
}

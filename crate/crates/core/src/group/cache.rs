//! Versioned text cache of an enumerated word ball.
//!
//! ```text
//! anosov-ball-cache v1 preset=<descriptor> radius=<r> dim=<d> count=<n>
//! <word>;<d² entries>;<jordan>;<cartan>
//! ```
//! Fields are `;`-separated, values inside a field `,`-separated, numbers
//! printed with 17 significant digits. Equal inputs give byte-identical files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::group::{is_freely_reduced, GroupElement};

pub const CACHE_VERSION: u32 = 1;
const MAGIC: &str = "anosov-ball-cache";

/// One cached element.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub word: Vec<i32>,
    pub entries: Vec<f64>,
    pub jordan: Vec<f64>,
    pub cartan: Vec<f64>,
}

/// A parsed cache file.
#[derive(Clone, Debug, PartialEq)]
pub struct BallCache {
    pub version: u32,
    pub descriptor: String,
    pub radius: usize,
    pub dim: usize,
    pub entries: Vec<CacheEntry>,
}

fn push_numbers(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x:.16e}").expect("writing to a String");
    }
}

/// Serializes a ball.
pub fn format_ball_cache(descriptor: &str, radius: usize, elements: &[GroupElement]) -> Result<String> {
    if descriptor.is_empty() || descriptor.contains(char::is_whitespace) {
        return Err(Error::Parse {
            line: 1,
            message: format!("descriptor {descriptor:?} must be one non-empty token"),
        });
    }
    let dim = elements.first().map_or(0, |g| g.dim());
    let mut out = format!(
        "{MAGIC} v{CACHE_VERSION} preset={descriptor} radius={radius} dim={dim} count={}\n",
        elements.len()
    );
    for g in elements {
        let word: Vec<String> = g.word().iter().map(|l| l.to_string()).collect();
        out.push_str(&word.join(","));
        out.push(';');
        push_numbers(&mut out, &g.mat().row_major());
        out.push(';');
        push_numbers(&mut out, g.jordan()?.coords());
        out.push(';');
        push_numbers(&mut out, g.cartan()?.coords());
        out.push('\n');
    }
    Ok(out)
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn header_field<'a>(token: Option<&'a str>, key: &str) -> Result<&'a str> {
    let token = token.ok_or_else(|| err(1, format!("missing {key}=")))?;
    token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| err(1, format!("expected {key}=…, found {token:?}")))
}

fn parse_numbers(field: &str, expected: usize, line: usize, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = field
        .split(',')
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line, format!("{what}: bad number {t:?}")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(err(line, format!("{what}: expected {expected} values, found {}", vals.len())));
    }
    Ok(vals)
}

/// Parses and validates a cache file.
pub fn parse_ball_cache(text: &str) -> Result<BallCache> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let mut tokens = header.split(' ');
    if tokens.next() != Some(MAGIC) {
        return Err(err(1, "not a ball cache"));
    }
    let version = tokens
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| err(1, "bad version"))?;
    if version != CACHE_VERSION {
        return Err(err(1, format!("unsupported version {version}")));
    }
    let descriptor = header_field(tokens.next(), "preset")?.to_string();
    let parse_usize = |s: &str, key: &str| s.parse::<usize>().map_err(|_| err(1, format!("bad {key} {s:?}")));
    let radius = parse_usize(header_field(tokens.next(), "radius")?, "radius")?;
    let dim = parse_usize(header_field(tokens.next(), "dim")?, "dim")?;
    let count = parse_usize(header_field(tokens.next(), "count")?, "count")?;
    if tokens.next().is_some() {
        return Err(err(1, "trailing header tokens"));
    }
    if dim > 16 {
        return Err(err(1, format!("dimension {dim} too large")));
    }
    let mut entries = Vec::new();
    for (idx, l) in lines.enumerate() {
        let line = idx + 2;
        let fields: Vec<&str> = l.split(';').collect();
        if fields.len() != 4 {
            return Err(err(line, format!("expected 4 fields, found {}", fields.len())));
        }
        let word: Vec<i32> = if fields[0].is_empty() {
            Vec::new()
        } else {
            fields[0]
                .split(',')
                .map(|t| t.parse::<i32>().map_err(|_| err(line, format!("bad letter {t:?}"))))
                .collect::<Result<_>>()?
        };
        if !is_freely_reduced(&word) {
            return Err(err(line, "word is not freely reduced"));
        }
        if word.len() > radius {
            return Err(err(line, format!("word longer than radius {radius}")));
        }
        entries.push(CacheEntry {
            word,
            entries: parse_numbers(fields[1], dim * dim, line, "entries")?,
            jordan: parse_numbers(fields[2], dim, line, "jordan")?,
            cartan: parse_numbers(fields[3], dim, line, "cartan")?,
        });
    }
    if entries.len() != count {
        return Err(err(1, format!("header count {count}, found {} entries", entries.len())));
    }
    Ok(BallCache {
        version,
        descriptor,
        radius,
        dim,
        entries,
    })
}

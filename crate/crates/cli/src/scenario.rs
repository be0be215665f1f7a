//! Scenario files: flat `key = value` lines with one-dot sections.
//!
//! ```text
//! # deformed reflection group
//! preset.name = reflection
//! preset.t = 2.0
//! ball.radius = 8
//! outputs.svg = true
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown or repeated keys are
//! errors reported with their line number.

use std::collections::BTreeMap;

use anosov_core::group::{
    preset_fuchsian_triangle, preset_reflection_deformation, preset_sym2_triangle, Presentation, DEDUPE_TOL, MIN_NORM,
};
use anosov_core::matrix::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const MIN_RADIUS: usize = 1;
pub const MAX_RADIUS: usize = 14;

/// A scenario-file problem at `line` (0 when the key is missing altogether).
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("line {line}, field {field:?}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

fn cfg_err(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Which generators to use.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PresetSpec {
    Sym2Triangle { p: u32, q: u32, r: u32 },
    FuchsianTriangle { p: u32, q: u32, r: u32 },
    Reflection { p: u32, q: u32, r: u32, t: f64 },
    Single { generators: Vec<Vec<f64>> },
    Custom { generators: Vec<Vec<f64>> },
    /// Near-identity random generators, a non-discrete control.
    Noise { count: usize, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub dedupe: f64,
    pub proximal: f64,
    pub hull: f64,
    pub opposite: f64,
    pub min_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifySettings {
    pub depth: f64,
    pub budget: usize,
    pub grid_step: f64,
    pub n_max: usize,
    /// Number of chambers (ball elements) sampled.
    pub chambers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outputs {
    pub cone: bool,
    pub boundary: bool,
    pub svg: bool,
    pub classification: bool,
    pub report: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub preset: PresetSpec,
    pub radius: usize,
    pub tol: Tolerances,
    pub classify: ClassifySettings,
    pub outputs: Outputs,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            dedupe: DEDUPE_TOL,
            proximal: 1e-9,
            hull: 1e-8,
            opposite: 1e-6,
            min_norm: MIN_NORM,
        }
    }
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            depth: anosov_core::classify::DEFAULT_DEPTH,
            budget: anosov_core::symspace::DEFAULT_BUDGET,
            grid_step: 0.02,
            n_max: 12,
            chambers: 10,
        }
    }
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            cone: true,
            boundary: true,
            svg: true,
            classification: true,
            report: true,
        }
    }
}

impl Scenario {
    /// A scenario with default settings around `preset`.
    pub fn with_preset(preset: PresetSpec, radius: usize) -> Self {
        Scenario {
            preset,
            radius,
            tol: Tolerances::default(),
            classify: ClassifySettings::default(),
            outputs: Outputs::default(),
            seed: 0,
        }
    }

    pub fn set_radius(&mut self, radius: usize) -> Result<(), ConfigError> {
        check_radius(radius, 0)?;
        self.radius = radius;
        Ok(())
    }
}

fn check_radius(radius: usize, line: usize) -> Result<(), ConfigError> {
    if (MIN_RADIUS..=MAX_RADIUS).contains(&radius) {
        Ok(())
    } else {
        Err(cfg_err(
            line,
            "ball.radius",
            format!("radius {radius} outside [{MIN_RADIUS}, {MAX_RADIUS}]"),
        ))
    }
}

impl PresetSpec {
    /// The generating set; `seed` only affects the noise preset.
    pub fn build(&self, seed: u64) -> anosov_core::Result<Presentation> {
        let mats = |gens: &[Vec<f64>]| -> anosov_core::Result<Vec<Mat>> {
            gens.iter()
                .map(|g| Mat::from_row_slice((g.len() as f64).sqrt().round() as usize, g))
                .collect()
        };
        match self {
            PresetSpec::Sym2Triangle { p, q, r } => preset_sym2_triangle(*p, *q, *r),
            PresetSpec::FuchsianTriangle { p, q, r } => preset_fuchsian_triangle(*p, *q, *r),
            PresetSpec::Reflection { p, q, r, t } => preset_reflection_deformation(*p, *q, *r, *t),
            PresetSpec::Single { generators } => Presentation::single(mats(generators)?.remove(0)),
            PresetSpec::Custom { generators } => Presentation::custom(mats(generators)?),
            PresetSpec::Noise { count, amplitude } => Presentation::custom(noise_generators(*count, *amplitude, seed)),
        }
    }
}

/// `count` unimodular 3×3 matrices within about `amplitude` of the identity.
pub fn noise_generators(count: usize, amplitude: f64, seed: u64) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let e: Vec<f64> = (0..9)
                .map(|k| if k % 4 == 0 { 1.0 } else { 0.0 } + rng.random_range(-amplitude..amplitude))
                .collect();
            let m = Mat::from_row_slice(3, &e).expect("nine entries");
            m.scale(m.det().powf(-1.0 / 3.0))
        })
        .collect()
}

struct Entry {
    line: usize,
    value: String,
}

struct Fields {
    map: BTreeMap<String, Entry>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.map.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse::<T>()
                .map_err(|_| cfg_err(e.line, key, format!("cannot parse {:?}", e.value))),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let line = self.map.get(key).map_or(0, |e| e.line);
        let v = self.parse(key, default)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(cfg_err(line, key, format!("{v} must be positive and finite")))
        }
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let line = self.map.get(key).map_or(0, |e| e.line);
        let v = self.parse(key, default)?;
        if v == 0 {
            return Err(cfg_err(line, key, "must be at least 1"));
        }
        Ok(v)
    }
}

fn parse_matrices(e: &Entry, key: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    let mut out = Vec::new();
    for (k, block) in e.value.split(';').enumerate() {
        let vals = block
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| cfg_err(e.line, key, format!("matrix {}: bad number", k + 1)))?;
        let d = (vals.len() as f64).sqrt().round() as usize;
        if d < 2 || d * d != vals.len() {
            return Err(cfg_err(
                e.line,
                key,
                format!("matrix {} has {} entries, not a square of at least 4", k + 1, vals.len()),
            ));
        }
        if out.first().is_some_and(|f: &Vec<f64>| f.len() != vals.len()) {
            return Err(cfg_err(e.line, key, format!("matrix {} has a different size", k + 1)));
        }
        let det = Mat::from_row_slice(d, &vals).map(|m| m.det()).unwrap_or(0.0);
        if (det - 1.0).abs() > 1e-9 {
            return Err(cfg_err(e.line, key, format!("matrix {} has determinant {det}", k + 1)));
        }
        out.push(vals);
    }
    Ok(out)
}

fn parse_bool(e: &Entry, key: &str) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(cfg_err(e.line, key, format!("expected true or false, found {v:?}"))),
    }
}

fn triangle(f: &mut Fields, defaults: (u32, u32, u32)) -> Result<(u32, u32, u32), ConfigError> {
    Ok((
        f.parse("preset.p", defaults.0)?,
        f.parse("preset.q", defaults.1)?,
        f.parse("preset.r", defaults.2)?,
    ))
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| cfg_err(line, content, "expected key = value"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.matches('.').count() > 1 || key.starts_with('.') || key.ends_with('.') {
            return Err(cfg_err(line, key, "keys are a name or section.name"));
        }
        if value.is_empty() {
            return Err(cfg_err(line, key, "empty value"));
        }
        if map.contains_key(key) {
            return Err(cfg_err(line, key, "repeated key"));
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    let mut f = Fields { map };

    let name = f
        .take("preset.name")
        .ok_or_else(|| cfg_err(0, "preset.name", "missing"))?;
    let preset = match name.value.as_str() {
        "sym2-triangle" => {
            let (p, q, r) = triangle(&mut f, (2, 3, 7))?;
            PresetSpec::Sym2Triangle { p, q, r }
        }
        "fuchsian-triangle" => {
            let (p, q, r) = triangle(&mut f, (2, 3, 7))?;
            PresetSpec::FuchsianTriangle { p, q, r }
        }
        "reflection" => {
            let (p, q, r) = triangle(&mut f, (3, 3, 4))?;
            let t = f.positive("preset.t", 2.0)?;
            PresetSpec::Reflection { p, q, r, t }
        }
        kind @ ("single" | "custom") => {
            let e = f
                .take("preset.generators")
                .ok_or_else(|| cfg_err(name.line, "preset.generators", format!("required by {kind}")))?;
            let generators = parse_matrices(&e, "preset.generators")?;
            if kind == "single" {
                if generators.len() != 1 {
                    return Err(cfg_err(e.line, "preset.generators", "single takes exactly one matrix"));
                }
                PresetSpec::Single { generators }
            } else {
                PresetSpec::Custom { generators }
            }
        }
        "noise" => PresetSpec::Noise {
            count: f.count("preset.count", 2)?,
            amplitude: f.positive("preset.amplitude", 1e-2)?,
        },
        other => return Err(cfg_err(name.line, "preset.name", format!("unknown preset {other:?}"))),
    };

    let radius_line = f.map.get("ball.radius").map_or(0, |e| e.line);
    let radius = f.parse("ball.radius", 8usize)?;
    check_radius(radius, radius_line)?;

    let d = Tolerances::default();
    let tol = Tolerances {
        dedupe: f.positive("tol.dedupe", d.dedupe)?,
        proximal: f.positive("tol.proximal", d.proximal)?,
        hull: f.positive("tol.hull", d.hull)?,
        opposite: f.positive("tol.opposite", d.opposite)?,
        min_norm: f.positive("tol.min_norm", d.min_norm)?,
    };

    let c = ClassifySettings::default();
    let step_line = f.map.get("classify.grid_step").map_or(0, |e| e.line);
    let classify = ClassifySettings {
        depth: f.positive("classify.depth", c.depth)?,
        budget: f.count("classify.budget", c.budget)?,
        grid_step: f.positive("classify.grid_step", c.grid_step)?,
        n_max: f.count("classify.n_max", c.n_max)?,
        chambers: f.parse("classify.chambers", c.chambers)?,
    };
    if classify.grid_step > 0.02 {
        return Err(cfg_err(step_line, "classify.grid_step", "grid step must be at most 0.02"));
    }

    let mut outputs = Outputs::default();
    for (key, slot) in [
        ("outputs.cone", &mut outputs.cone),
        ("outputs.boundary", &mut outputs.boundary),
        ("outputs.svg", &mut outputs.svg),
        ("outputs.classification", &mut outputs.classification),
        ("outputs.report", &mut outputs.report),
    ] {
        if let Some(e) = f.take(key) {
            *slot = parse_bool(&e, key)?;
        }
    }
    let seed = f.parse("seed", 0u64)?;

    if let Some((key, e)) = f.map.iter().next() {
        return Err(cfg_err(e.line, key, "unknown key"));
    }
    Ok(Scenario {
        preset,
        radius,
        tol,
        classify,
        outputs,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_comments() {
        let s = parse_scenario("# c\npreset.name = reflection # inline\n\nball.radius=6\n").unwrap();
        assert_eq!(s.preset, PresetSpec::Reflection { p: 3, q: 3, r: 4, t: 2.0 });
        assert_eq!(s.radius, 6);
        assert_eq!(s.tol, Tolerances::default());
    }

    #[test]
    fn errors_carry_line_and_field() {
        let e = parse_scenario("preset.name = sym2-triangle\nball.radius = 15\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (2, "ball.radius"));
        let e = parse_scenario("preset.name = nope\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (1, "preset.name"));
        let e = parse_scenario("preset.name = reflection\nball.colour = red\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (2, "ball.colour"));
        let e = parse_scenario("preset.name = reflection\npreset.name = reflection\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_scenario("a.b.c = 1\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert_eq!(parse_scenario("seed = 3\n").unwrap_err().line, 0);
    }

    #[test]
    fn matrices() {
        let s = parse_scenario("preset.name = single\npreset.generators = 2 0 0; 0 1 0\n");
        assert!(s.is_err());
        let s = parse_scenario("preset.name = custom\npreset.generators = 2 0 0 0.5; 1,1,0,1\n").unwrap();
        let PresetSpec::Custom { generators } = &s.preset else { panic!() };
        assert_eq!(generators.len(), 2);
        assert!(s.preset.build(0).is_ok());
        let e = parse_scenario("preset.name = custom\npreset.generators = 2 0 0 1\n").unwrap_err();
        assert!(e.message.contains("determinant"));
    }

    #[test]
    fn noise_is_seeded() {
        assert_eq!(noise_generators(2, 1e-2, 5), noise_generators(2, 1e-2, 5));
        assert_ne!(noise_generators(2, 1e-2, 5), noise_generators(2, 1e-2, 6));
    }
}

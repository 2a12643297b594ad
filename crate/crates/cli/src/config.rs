//! TOML experiment configuration.
//!
//! A config has top-level keys `experiment`, `base_seed`, `n_samples`, `output` and two
//! tables, `[model]` and `[params]`. Parsing collects every problem it finds (unknown keys,
//! type mismatches, range violations) before reporting, so one `validate` run lists them all.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use orbital_rmt::ensembles::{ShapeFunction, SymmetryClass};
use orbital_rmt::operators::{BandModelSpec, LatticeBox, OrbitalKind, OrbitalModelSpec};
use orbital_rmt::repformula::QuadratureSpec;
use serde::Serialize;
use toml::{Table, Value};

use crate::defaults;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Wegner,
    Minami,
    Locdecay,
    Dos,
    Bandloc,
    Repformula,
    Tail,
    Smallball,
    Lowerbound,
    Pertshift,
    Walkcheck,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Wegner,
        Experiment::Minami,
        Experiment::Locdecay,
        Experiment::Dos,
        Experiment::Bandloc,
        Experiment::Repformula,
        Experiment::Tail,
        Experiment::Smallball,
        Experiment::Lowerbound,
        Experiment::Pertshift,
        Experiment::Walkcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Wegner => "wegner",
            Experiment::Minami => "minami",
            Experiment::Locdecay => "locdecay",
            Experiment::Dos => "dos",
            Experiment::Bandloc => "bandloc",
            Experiment::Repformula => "repformula",
            Experiment::Tail => "tail",
            Experiment::Smallball => "smallball",
            Experiment::Lowerbound => "lowerbound",
            Experiment::Pertshift => "pertshift",
            Experiment::Walkcheck => "walkcheck",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformationKind {
    Zero,
    Random,
    Identity,
}

/// Fixed (non-random across realizations) matrix `H0` or `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeformationConfig {
    #[serde(rename = "type")]
    pub kind: DeformationKind,
    /// Within-block amplitude (random) or multiple of the identity (identity).
    pub scale: f64,
    /// Off-block amplitude for `random`.
    pub coupling: f64,
    /// Seed of the stream that draws a `random` deformation.
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Sharp,
    Indicator,
    Gaussian,
    Susy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    BlockAnderson { d: usize, l: u32, n: usize, g: f64, symmetry: SymmetryClass },
    WegnerOrbital { d: usize, l: u32, n: usize, g: f64, symmetry: SymmetryClass },
    DeformedBlock { block_sizes: Vec<usize>, symmetry: SymmetryClass, h0: DeformationConfig },
    Band { d: usize, l: u32, shape: ShapeName, width: u32, symmetry: SymmetryClass },
    SingleBlock { n: usize, symmetry: SymmetryClass, a: DeformationConfig },
}

impl ModelConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelConfig::BlockAnderson { .. } => "block_anderson",
            ModelConfig::WegnerOrbital { .. } => "wegner_orbital",
            ModelConfig::DeformedBlock { .. } => "deformed_block",
            ModelConfig::Band { .. } => "band",
            ModelConfig::SingleBlock { .. } => "single_block",
        }
    }

    pub fn symmetry(&self) -> SymmetryClass {
        match self {
            ModelConfig::BlockAnderson { symmetry, .. }
            | ModelConfig::WegnerOrbital { symmetry, .. }
            | ModelConfig::DeformedBlock { symmetry, .. }
            | ModelConfig::Band { symmetry, .. }
            | ModelConfig::SingleBlock { symmetry, .. } => *symmetry,
        }
    }

    pub fn orbital_spec(&self) -> Option<orbital_rmt::Result<OrbitalModelSpec>> {
        let (d, l, n, g, s, kind) = match *self {
            ModelConfig::BlockAnderson { d, l, n, g, symmetry } => (d, l, n, g, symmetry, OrbitalKind::BlockAnderson),
            ModelConfig::WegnerOrbital { d, l, n, g, symmetry } => (d, l, n, g, symmetry, OrbitalKind::WegnerOrbital),
            _ => return None,
        };
        Some(LatticeBox::new(d, l).and_then(|lat| OrbitalModelSpec::new(lat, n, g, s, kind)))
    }

    pub fn band_spec(&self) -> Option<orbital_rmt::Result<BandModelSpec>> {
        match *self {
            ModelConfig::Band { d, l, shape, width, symmetry } => Some(
                LatticeBox::new(d, l)
                    .and_then(|lat| Ok((lat, shape_function(shape, width, d)?)))
                    .and_then(|(lat, sh)| BandModelSpec::new(lat, sh, symmetry)),
            ),
            _ => None,
        }
    }
}

pub fn shape_function(shape: ShapeName, width: u32, d: usize) -> orbital_rmt::Result<ShapeFunction> {
    match shape {
        ShapeName::Sharp => ShapeFunction::sharp_cutoff(width),
        ShapeName::Indicator => ShapeFunction::indicator(width, d),
        ShapeName::Gaussian => ShapeFunction::gaussian(width, d),
        ShapeName::Susy => ShapeFunction::susy_kernel(width, d),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    E1,
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Wegner {
        interval: [f64; 2],
    },
    Minami {
        m: u32,
        center: f64,
        lengths: Vec<f64>,
        batches: usize,
    },
    Locdecay {
        s: f64,
        lambda: f64,
        probe: Probe,
        #[serde(skip_serializing_if = "Option::is_none")]
        fit_window: Option<[f64; 2]>,
        batches: usize,
    },
    Dos {
        lo: f64,
        hi: f64,
        bins: usize,
    },
    Bandloc {
        widths: Vec<u32>,
        s: f64,
        lambda: f64,
        batches: usize,
    },
    Repformula {
        interval: [f64; 2],
        quadrature: QuadratureSpec,
    },
    Tail {
        t_grid: Vec<f64>,
        s: f64,
    },
    Smallball {
        eps_grid: Vec<f64>,
    },
    Lowerbound {
        /// Window length; resolved from `t_fraction · s₂` when not given.
        t: f64,
    },
    Pertshift {
        a: f64,
        batches: usize,
    },
    Walkcheck {
        lambda: f64,
        k_max: usize,
        x: Vec<i64>,
        y: Vec<i64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub base_seed: u64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub model: ModelConfig,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Every problem found in a config document.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "error: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

type Errors = RefCell<Vec<String>>;

trait FromValue: Sized {
    const TYPE: &'static str;
    fn from_value(v: &Value) -> Option<Self>;
}

impl FromValue for f64 {
    const TYPE: &'static str = "a number";
    fn from_value(v: &Value) -> Option<Self> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl FromValue for i64 {
    const TYPE: &'static str = "an integer";
    fn from_value(v: &Value) -> Option<Self> {
        v.as_integer()
    }
}

macro_rules! unsigned {
    ($($t:ty),*) => {$(
        impl FromValue for $t {
            const TYPE: &'static str = "a non-negative integer";
            fn from_value(v: &Value) -> Option<Self> {
                v.as_integer().and_then(|i| <$t>::try_from(i).ok())
            }
        }
    )*};
}
unsigned!(u32, u64, usize);

impl FromValue for String {
    const TYPE: &'static str = "a string";
    fn from_value(v: &Value) -> Option<Self> {
        v.as_str().map(str::to_owned)
    }
}

impl<T: FromValue> FromValue for Vec<T> {
    const TYPE: &'static str = "an array";
    fn from_value(v: &Value) -> Option<Self> {
        v.as_array()?.iter().map(T::from_value).collect()
    }
}

/// One table of the document; records which keys were read.
struct Section<'a> {
    path: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
    errors: &'a Errors,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table, errors: &'a Errors) -> Self {
        Section { path: path.to_owned(), table, used: RefCell::new(BTreeSet::new()), errors }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_owned()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn error(&self, msg: String) {
        self.errors.borrow_mut().push(msg);
    }

    fn mark(&self, k: &str) {
        self.used.borrow_mut().insert(k.to_owned());
    }

    fn has(&self, k: &str) -> bool {
        self.table.contains_key(k)
    }

    fn get<T: FromValue>(&self, k: &str) -> Option<T> {
        self.used.borrow_mut().insert(k.to_owned());
        let v = self.table.get(k)?;
        let out = T::from_value(v);
        if out.is_none() {
            self.error(format!("`{}` must be {}", self.key(k), T::TYPE));
        }
        out
    }

    fn or<T: FromValue>(&self, k: &str, default: T) -> T {
        if self.has(k) {
            self.get(k).unwrap_or(default)
        } else {
            self.used.borrow_mut().insert(k.to_owned());
            default
        }
    }

    fn req<T: FromValue>(&self, k: &str) -> Option<T> {
        if !self.has(k) {
            self.used.borrow_mut().insert(k.to_owned());
            self.error(format!("missing key `{}`", self.key(k)));
            return None;
        }
        self.get(k)
    }

    fn parsed<T: FromStr<Err = String>>(&self, k: &str, default: Option<T>) -> Option<T> {
        let raw: Option<String> = match default {
            Some(_) if !self.has(k) => {
                self.used.borrow_mut().insert(k.to_owned());
                return default;
            }
            _ => self.req(k),
        };
        match raw?.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(format!("`{}`: {e}", self.key(k)));
                None
            }
        }
    }

    fn sub(&self, k: &str) -> Option<&'a Table> {
        self.used.borrow_mut().insert(k.to_owned());
        match self.table.get(k)? {
            Value::Table(t) => Some(t),
            _ => {
                self.error(format!("`{}` must be a table", self.key(k)));
                None
            }
        }
    }

    fn check(&self, ok: bool, k: &str, msg: impl fmt::Display) {
        if !ok {
            self.error(format!("`{}`: {msg}", self.key(k)));
        }
    }

    fn finish(self) {
        let used = self.used.borrow();
        for k in self.table.keys() {
            if !used.contains(k) {
                self.errors.borrow_mut().push(format!("unknown key `{}`", self.key(k)));
            }
        }
    }
}

fn parse_enum<T>(s: &Section, k: &str, default: Option<&str>, names: &[(&str, T)]) -> Option<T>
where
    T: Copy,
{
    let raw: String = match default {
        Some(d) => s.or(k, d.to_owned()),
        None => s.req(k)?,
    };
    match names.iter().find(|(n, _)| *n == raw) {
        Some((_, v)) => Some(*v),
        None => {
            let list: Vec<&str> = names.iter().map(|(n, _)| *n).collect();
            s.error(format!("`{}`: unknown value `{raw}` (expected one of {})", s.key(k), list.join(", ")));
            None
        }
    }
}

fn symmetry(s: &Section) -> SymmetryClass {
    parse_enum(
        s,
        "symmetry",
        Some("orthogonal"),
        &[("orthogonal", SymmetryClass::Orthogonal), ("unitary", SymmetryClass::Unitary)],
    )
    .unwrap_or(SymmetryClass::Orthogonal)
}

fn pair(s: &Section, k: &str, default: Option<[f64; 2]>) -> Option<[f64; 2]> {
    if !s.has(k) {
        s.mark(k);
        return default;
    }
    let v: Vec<f64> = s.get(k)?;
    if v.len() != 2 {
        s.error(format!("`{}` must have exactly two entries", s.key(k)));
        return None;
    }
    Some([v[0], v[1]])
}

fn interval(s: &Section, k: &str, default: [f64; 2]) -> [f64; 2] {
    let iv = pair(s, k, Some(default)).unwrap_or(default);
    s.check(iv[0] < iv[1] && iv.iter().all(|x| x.is_finite()), k, "interval must satisfy a < b");
    iv
}

fn fractional_s(s: &Section) -> f64 {
    let v = s.or("s", defaults::S);
    s.check(v > 0.0 && v < 1.0, "s", format!("fractional moment exponent must satisfy 0 < s < 1, got {v}"));
    v
}

fn deformation(s: &Section, k: &str) -> DeformationConfig {
    let default = DeformationConfig { kind: DeformationKind::Zero, scale: 1.0, coupling: 0.0, seed: 0 };
    let Some(t) = s.sub(k) else {
        return default;
    };
    let d = Section::new(&s.key(k), t, s.errors);
    let kind = parse_enum(
        &d,
        "type",
        Some("zero"),
        &[("zero", DeformationKind::Zero), ("random", DeformationKind::Random), ("identity", DeformationKind::Identity)],
    )
    .unwrap_or(DeformationKind::Zero);
    // every key is read for every type so the resolved echo parses back unchanged
    let (scale, coupling, seed) = match kind {
        DeformationKind::Random => (defaults::H0_WITHIN, defaults::H0_COUPLING, defaults::H0_SEED),
        _ => (1.0, 0.0, 0),
    };
    let out = DeformationConfig { kind, scale: d.or("scale", scale), coupling: d.or("coupling", coupling), seed: d.or("seed", seed) };
    d.check(out.scale.is_finite() && out.coupling.is_finite(), "scale", "deformation amplitudes must be finite");
    d.finish();
    out
}

fn lattice_keys(m: &Section) -> (usize, u32) {
    let d: usize = m.or("d", 1);
    let l: u32 = m.req("l").unwrap_or(1);
    m.check((1..=3).contains(&d), "d", "dimension must be 1, 2 or 3");
    (d, l)
}

fn parse_model(m: &Section, experiment: Experiment) -> Option<ModelConfig> {
    let kind = parse_enum(
        m,
        "kind",
        None,
        &[
            ("block_anderson", 0u8),
            ("wegner_orbital", 1),
            ("deformed_block", 2),
            ("band", 3),
            ("single_block", 4),
        ],
    )?;
    if experiment == Experiment::Pertshift {
        if kind != 0 {
            m.error("`model.kind`: pertshift runs on the block Anderson model".into());
            return None;
        }
        let l: u32 = m.or("l", 1);
        m.check(l == 1, "l", "pertshift uses the box of side 3 (L = 1)");
        // g is derived from params.a; a given value must agree (as in a resolved echo)
        let g: f64 = m.or("g", f64::NAN);
        let d: usize = m.or("d", 1);
        m.check((1..=3).contains(&d), "d", "dimension must be 1, 2 or 3");
        let n: usize = m.or("n", defaults::PERTSHIFT_N);
        m.check(n >= 32, "n", "N ≥ 32 is needed so the level spacing separates orders");
        return Some(ModelConfig::BlockAnderson { d, l: 1, n, g, symmetry: symmetry(m) });
    }
    let model = match kind {
        0 | 1 => {
            let (d, l) = lattice_keys(m);
            let n: usize = m.req("n").unwrap_or(1);
            let g: f64 = m.req("g").unwrap_or(0.0);
            m.check(n >= 1, "n", "block size N must be ≥ 1");
            m.check(g >= 0.0 && g.is_finite(), "g", "coupling g must be finite and ≥ 0");
            let symmetry = symmetry(m);
            if kind == 0 {
                ModelConfig::BlockAnderson { d, l, n, g, symmetry }
            } else {
                ModelConfig::WegnerOrbital { d, l, n, g, symmetry }
            }
        }
        2 => {
            let block_sizes: Vec<usize> = m.req("block_sizes").unwrap_or_default();
            m.check(!block_sizes.is_empty() && !block_sizes.contains(&0), "block_sizes", "need at least one block, all of size ≥ 1");
            let symmetry = symmetry(m);
            ModelConfig::DeformedBlock { block_sizes, symmetry, h0: deformation(m, "h0") }
        }
        3 => {
            let (d, l) = lattice_keys(m);
            let shape = parse_enum(
                m,
                "shape",
                Some("sharp"),
                &[
                    ("sharp", ShapeName::Sharp),
                    ("indicator", ShapeName::Indicator),
                    ("gaussian", ShapeName::Gaussian),
                    ("susy", ShapeName::Susy),
                ],
            )
            .unwrap_or(ShapeName::Sharp);
            let width: u32 = m.req("width").unwrap_or(1);
            m.check(width >= 1, "width", "band width W must be ≥ 1");
            m.check(shape != ShapeName::Sharp || d == 1, "shape", "the sharp cutoff is one-dimensional");
            ModelConfig::Band { d, l, shape, width, symmetry: symmetry(m) }
        }
        _ => {
            let n: usize = m.req("n").unwrap_or(1);
            m.check(n >= 1, "n", "matrix size N must be ≥ 1");
            let symmetry = symmetry(m);
            ModelConfig::SingleBlock { n, symmetry, a: deformation(m, "a") }
        }
    };
    let allowed: &[&str] = match experiment {
        Experiment::Wegner | Experiment::Minami | Experiment::Dos | Experiment::Lowerbound => {
            &["block_anderson", "wegner_orbital", "deformed_block", "band", "single_block"]
        }
        Experiment::Locdecay | Experiment::Walkcheck => &["block_anderson", "wegner_orbital"],
        Experiment::Bandloc => &["band"],
        Experiment::Repformula => &["deformed_block", "single_block"],
        Experiment::Tail | Experiment::Smallball => &["single_block"],
        Experiment::Pertshift => unreachable!(),
    };
    if !allowed.contains(&model.kind_name()) {
        m.error(format!(
            "`model.kind`: {experiment} needs one of {}, got {}",
            allowed.join(", "),
            model.kind_name()
        ));
    }
    Some(model)
}

fn grid(p: &Section, k: &str, default: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Vec<f64> {
    let v: Vec<f64> = p.or(k, default.to_vec());
    p.check(!v.is_empty() && v.iter().all(|&x| ok(x) && x.is_finite()), k, what);
    v
}

fn band_side(model: &ModelConfig) -> Option<(u32, usize)> {
    match model {
        ModelConfig::Band { l, width, .. } => Some((*width, 2 * *l as usize + 1)),
        _ => None,
    }
}

fn parse_params(p: &Section, experiment: Experiment, model: Option<&ModelConfig>) -> Option<Params> {
    Some(match experiment {
        Experiment::Wegner => Params::Wegner { interval: interval(p, "interval", defaults::WEGNER_INTERVAL) },
        Experiment::Minami => {
            let m: u32 = p.or("m", defaults::MINAMI_M);
            p.check(m >= 1, "m", "Minami order m must be ≥ 1");
            let lengths = grid(p, "lengths", &defaults::MINAMI_LENGTHS, |x| x > 0.0, "lengths must be positive");
            Params::Minami { m, center: p.or("center", 0.0), lengths, batches: p.or("batches", defaults::BATCHES) }
        }
        Experiment::Locdecay => {
            let s = fractional_s(p);
            let probe = parse_enum(p, "probe", Some("e1"), &[("e1", Probe::E1), ("sphere", Probe::Sphere)]).unwrap_or(Probe::E1);
            let fit_window = pair(p, "fit_window", None);
            Params::Locdecay {
                s,
                lambda: p.or("lambda", defaults::LAMBDA),
                probe,
                fit_window,
                batches: p.or("batches", defaults::BATCHES),
            }
        }
        Experiment::Dos => {
            let (lo, hi) = (p.or("lo", defaults::DOS_RANGE[0]), p.or("hi", defaults::DOS_RANGE[1]));
            p.check(lo < hi, "lo", "histogram range must satisfy lo < hi");
            let bins: usize = p.or("bins", defaults::DOS_BINS);
            p.check(bins >= 1, "bins", "need at least one bin");
            Params::Dos { lo, hi, bins }
        }
        Experiment::Bandloc => {
            let s = fractional_s(p);
            let side = model.and_then(band_side);
            let default_w = side.map(|(w, _)| vec![w]).unwrap_or_default();
            let widths: Vec<u32> = p.or("widths", default_w);
            if let Some((_, side)) = side {
                for &w in &widths {
                    p.check(
                        w >= 1 && side % w as usize == 0,
                        "widths",
                        format!("band width W = {w} must divide 2L+1 = {side}"),
                    );
                }
            }
            if let Some(ModelConfig::Band { shape, .. }) = model {
                p.check(*shape == ShapeName::Sharp, "widths", "band localisation uses the sharp cutoff shape");
            }
            p.check(!widths.is_empty(), "widths", "need at least one width");
            Params::Bandloc { widths, s, lambda: p.or("lambda", defaults::LAMBDA), batches: p.or("batches", defaults::BATCHES) }
        }
        Experiment::Repformula => {
            let iv = interval(p, "interval", defaults::REP_INTERVAL);
            let d = QuadratureSpec::default();
            let quad = match p.sub("quadrature") {
                None => d,
                Some(t) => {
                    let q = Section::new("params.quadrature", t, p.errors);
                    let spec = QuadratureSpec {
                        lambda_min_nodes: q.or("lambda_min_nodes", d.lambda_min_nodes),
                        lambda_nodes_per_eta: q.or("lambda_nodes_per_eta", d.lambda_nodes_per_eta),
                        t_nodes: q.or("t_nodes", d.t_nodes),
                        xi_nodes: q.or("xi_nodes", d.xi_nodes),
                        eta_schedule: q.or("eta_schedule", d.eta_schedule.clone()),
                    };
                    if let Err(e) = spec.validate() {
                        q.error(format!("`params.quadrature`: {e}"));
                    }
                    q.finish();
                    spec
                }
            };
            Params::Repformula { interval: iv, quadrature: quad }
        }
        Experiment::Tail => {
            let t_grid = grid(p, "t_grid", &defaults::TAIL_T_GRID, |t| t >= 1.0, "every t must satisfy t ≥ 1");
            Params::Tail { t_grid, s: fractional_s(p) }
        }
        Experiment::Smallball => {
            if let Some(ModelConfig::SingleBlock { a, .. }) = model {
                if a.kind == DeformationKind::Zero || a.scale == 0.0 {
                    p.error("`model.a`: the small-ball check needs a nonzero A".into());
                }
            }
            Params::Smallball {
                eps_grid: grid(p, "eps_grid", &defaults::SMALLBALL_EPS, |e| e > 0.0, "every ε must be positive"),
            }
        }
        Experiment::Lowerbound => {
            let s2 = model.and_then(exact_s2).unwrap_or(f64::NAN);
            if p.has("t") && p.has("t_fraction") {
                p.error("`params.t` and `params.t_fraction` are mutually exclusive".into());
            }
            let t = if p.has("t") {
                p.get::<f64>("t").unwrap_or(f64::NAN)
            } else {
                let frac = p.or("t_fraction", defaults::LOWERBOUND_T_FRACTION);
                p.check(frac > 0.0 && frac < 1.0, "t_fraction", "t_fraction must lie in (0, 1)");
                frac * s2
            };
            p.check(t > 0.0 && t < s2, "t", format!("window length must satisfy 0 < t < s₂ = {s2}"));
            Params::Lowerbound { t }
        }
        Experiment::Pertshift => {
            let a = p.or("a", defaults::PERTSHIFT_A);
            p.check(a >= 0.0 && a.is_finite(), "a", "a must be finite and ≥ 0");
            Params::Pertshift { a, batches: p.or("batches", defaults::BATCHES) }
        }
        Experiment::Walkcheck => {
            let lattice = model.and_then(|m| m.orbital_spec()).and_then(|s| s.ok()).map(|s| s.lattice);
            let lattice = lattice?;
            let l = lattice.l as i64;
            let x: Vec<i64> = p.or("x", vec![-l; lattice.d]);
            let y: Vec<i64> = p.or("y", vec![l; lattice.d]);
            for (k, site) in [("x", &x), ("y", &y)] {
                p.check(lattice.contains(site), k, format!("site {site:?} is outside the box"));
            }
            let k_max: usize = p.or("k_max", lattice.size().saturating_sub(1));
            p.check(lattice.size() <= 12, "k_max", "walk enumeration is limited to boxes of at most 12 sites");
            Params::Walkcheck { lambda: p.or("lambda", defaults::WALK_LAMBDA), k_max, x, y }
        }
    })
}

/// `√(E tr H² / Σ N_j)` from the covariance structure.
fn exact_s2(model: &ModelConfig) -> Option<f64> {
    let m = crate::run::random_model(model).ok()?;
    Some((m.exact_trace_second_moment()? / m.total_dim() as f64).sqrt())
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![format!("malformed TOML: {e}")]))?;
    let errors: Errors = RefCell::new(Vec::new());
    let top = Section::new("", &table, &errors);
    let experiment = top.parsed::<Experiment>("experiment", None);
    let version: u32 = top.or("schema_version", SCHEMA_VERSION);
    top.check(version == SCHEMA_VERSION, "schema_version", format!("unsupported schema version (this build reads {SCHEMA_VERSION})"));
    let base_seed: u64 = top.or("base_seed", defaults::BASE_SEED);
    let n_samples: usize = top.or("n_samples", experiment.map(defaults::n_samples).unwrap_or(1));
    let output: Option<String> = top.get("output");
    let model_table = top.sub("model");
    let params_table = top.sub("params");
    let empty = Table::new();
    let mut model = None;
    if let Some(exp) = experiment {
        top.check(n_samples >= defaults::min_samples(exp), "n_samples", format!("need at least {} samples", defaults::min_samples(exp)));
        match model_table {
            Some(t) => {
                let m = Section::new("model", t, &errors);
                model = parse_model(&m, exp);
                m.finish();
            }
            None => errors.borrow_mut().push("missing table `[model]`".into()),
        }
        if let Some(m) = model.as_ref().filter(|_| exp != Experiment::Pertshift) {
            check_model(m, &errors);
        }
        let p = Section::new("params", params_table.unwrap_or(&empty), &errors);
        let params = parse_params(&p, exp, model.as_ref());
        p.finish();
        top.finish();
        let errs = errors.into_inner();
        return match (errs.is_empty(), model, params) {
            (true, Some(mut model), Some(params)) => {
                if let (ModelConfig::BlockAnderson { n, g, .. }, Params::Pertshift { a, .. }) = (&mut model, &params) {
                    let derived = a / (*n as f64).sqrt();
                    if !g.is_nan() && (*g - derived).abs() > 1e-12 * derived.max(1.0) {
                        return Err(ConfigErrors(vec![format!(
                            "`model.g`: pertshift derives g = a/√N = {derived} from params.a, got {g}"
                        )]));
                    }
                    *g = derived;
                }
                Ok(ExperimentConfig { schema_version: SCHEMA_VERSION, experiment: exp, base_seed, n_samples, output, model, params })
            }
            (true, _, _) => Err(ConfigErrors(vec!["incomplete configuration".into()])),
            (false, _, _) => Err(ConfigErrors(errs)),
        };
    }
    top.finish();
    Err(ConfigErrors(errors.into_inner()))
}

/// Constructor-level checks (sizes, shape/dimension agreement) without sampling.
fn check_model(model: &ModelConfig, errors: &Errors) {
    let res = match model {
        ModelConfig::BlockAnderson { .. } | ModelConfig::WegnerOrbital { .. } => model.orbital_spec().map(|r| r.map(|_| ())),
        ModelConfig::Band { .. } => model.band_spec().map(|r| r.and_then(|s| s.validate())),
        _ => None,
    };
    if let Some(Err(e)) = res {
        errors.borrow_mut().push(format!("`model`: {e}"));
    }
}

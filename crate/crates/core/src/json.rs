//! JSON model format (`"schema": "ovconv/1"`).
//!
//! Complex scalars are `[re, im]` pairs (a bare number is read as real);
//! matrices are row-major nested arrays. Every object rejects unknown keys.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{CpMap, Mat, C64};
use crate::convolve::{IdentityCase, IdentityName};
use crate::fock::JSpec;
use crate::law::{Law, Node};
use crate::realization::Realization;
use crate::{Error, Result};

pub const SCHEMA: &str = "ovconv/1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex(pub C64);

impl Serialize for Complex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Real(f64),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Complex(C64::new(re, im)),
            Repr::Real(re) => Complex(C64::new(re, 0.0)),
        })
    }
}

/// Row-major nested array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatJson(pub Vec<Vec<Complex>>);

impl MatJson {
    pub fn from_mat(m: &Mat) -> Self {
        MatJson((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Complex(m[(i, j)])).collect()).collect())
    }

    pub fn to_mat(&self) -> Result<Mat> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || self.0.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("matrix must be a nonempty rectangular array".into()));
        }
        Ok(Mat::from_fn(rows, cols, |i, j| self.0[i][j].0))
    }

    fn square(&self, d: usize, what: &str) -> Result<Mat> {
        let m = self.to_mat()?;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!("{what} must be {d}x{d}")));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpMapDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatJson>,
    /// `t·id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<f64>,
}

/// A CP map given inline or by name from the model's `cpmaps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CpMapJson {
    Name(String),
    Def(CpMapDef),
}

impl CpMapJson {
    pub fn from_map(map: &CpMap) -> Self {
        let def = match map.kraus() {
            Some(k) => CpMapDef { kraus: Some(k.iter().map(MatJson::from_mat).collect()), choi: None, scalar: None },
            None => CpMapDef { kraus: None, choi: Some(MatJson::from_mat(map.choi())), scalar: None },
        };
        CpMapJson::Def(def)
    }

    fn resolve(&self, d: usize, named: &BTreeMap<String, CpMap>) -> Result<CpMap> {
        let def = match self {
            CpMapJson::Name(n) => {
                return named.get(n).cloned().ok_or_else(|| Error::Parse(format!("unknown cpmap {n:?}")))
            }
            CpMapJson::Def(def) => def,
        };
        match (&def.kraus, &def.choi, def.scalar) {
            (Some(k), None, None) => {
                let ops = k.iter().map(|m| m.square(d, "Kraus operator")).collect::<Result<Vec<_>>>()?;
                CpMap::from_kraus(d, ops)
            }
            (None, Some(c), None) => CpMap::from_choi(d, c.square(d * d, "Choi matrix")?),
            (None, None, Some(t)) => Ok(CpMap::scalar(d, t)),
            _ => Err(Error::Parse("cpmap needs exactly one of kraus, choi, scalar".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawJson {
    PointMass { p: MatJson },
    Atomic { atoms: Vec<f64>, weights: Vec<f64> },
    Realization {
        d: usize,
        m: usize,
        p: MatJson,
        alpha: MatJson,
        #[serde(rename = "T")]
        t: MatJson,
    },
    Bernoulli { s: CpMapJson },
    Semicircular { s: CpMapJson },
    Boolean { args: Vec<LawJson> },
    Monotone { args: Vec<LawJson> },
    Orthogonal { args: Vec<LawJson> },
    Free { args: Vec<LawJson> },
    Sfree { args: Vec<LawJson> },
    BooleanPower { arg: Box<LawJson>, alpha: CpMapJson },
    FreePower { arg: Box<LawJson>, alpha: CpMapJson },
    BTransform { arg: Box<LawJson>, s: CpMapJson },
    Phi { arg: Box<LawJson> },
    Ref { name: String },
}

pub fn realization_to_json(r: &Realization) -> LawJson {
    LawJson::Realization {
        d: r.d(),
        m: r.m(),
        p: MatJson::from_mat(r.p()),
        alpha: MatJson::from_mat(r.alpha()),
        t: MatJson::from_mat(r.t()),
    }
}

impl LawJson {
    /// The tree of `law`, with all maps inlined.
    pub fn from_law(law: &Law) -> Self {
        let pair = |a: &Law, b: &Law| vec![Self::from_law(a), Self::from_law(b)];
        let boxed = |l: &Law| Box::new(Self::from_law(l));
        match law.node() {
            Node::PointMass(p) => LawJson::PointMass { p: MatJson::from_mat(p) },
            Node::Atomic { atoms, weights } => LawJson::Atomic { atoms: atoms.clone(), weights: weights.clone() },
            Node::Realization(r) => realization_to_json(r),
            Node::Bernoulli(s) => LawJson::Bernoulli { s: CpMapJson::from_map(s) },
            Node::Semicircular(s) => LawJson::Semicircular { s: CpMapJson::from_map(s) },
            Node::Boolean(parts) => LawJson::Boolean { args: parts.iter().map(|p| Self::from_law(p)).collect() },
            Node::Monotone(a, b) => LawJson::Monotone { args: pair(a, b) },
            Node::Orthogonal(a, b) => LawJson::Orthogonal { args: pair(a, b) },
            Node::Free(a, b) => LawJson::Free { args: pair(a, b) },
            Node::SFree(a, b) => LawJson::Sfree { args: pair(a, b) },
            Node::BooleanPower(mu, alpha) => LawJson::BooleanPower { arg: boxed(mu), alpha: CpMapJson::from_map(alpha) },
            Node::FreePower { mu, alpha, .. } => LawJson::FreePower { arg: boxed(mu), alpha: CpMapJson::from_map(alpha) },
            Node::BTrans { mu, s, .. } => LawJson::BTransform { arg: boxed(mu), s: CpMapJson::from_map(s) },
            Node::Phi(mu) => LawJson::Phi { arg: boxed(mu) },
        }
    }
}

/// Resolves law definitions against each other and a set of named maps.
struct Resolver<'a> {
    d: usize,
    defs: &'a BTreeMap<String, LawJson>,
    cpmaps: &'a BTreeMap<String, CpMap>,
    done: BTreeMap<String, Law>,
    active: BTreeSet<String>,
}

impl Resolver<'_> {
    fn named(&mut self, name: &str) -> Result<Law> {
        if let Some(l) = self.done.get(name) {
            return Ok(l.clone());
        }
        if !self.active.insert(name.to_string()) {
            return Err(Error::Parse(format!("law {name:?} refers to itself")));
        }
        let def = self.defs.get(name).ok_or_else(|| Error::Parse(format!("unknown law {name:?}")))?;
        let law = self.build(def)?;
        self.active.remove(name);
        self.done.insert(name.to_string(), law.clone());
        Ok(law)
    }

    fn map(&self, m: &CpMapJson) -> Result<CpMap> {
        m.resolve(self.d, self.cpmaps)
    }

    fn two(&mut self, args: &[LawJson]) -> Result<(Law, Law)> {
        match args {
            [a, b] => Ok((self.build(a)?, self.build(b)?)),
            _ => Err(Error::Parse(format!("binary node needs 2 args, got {}", args.len()))),
        }
    }

    fn build(&mut self, j: &LawJson) -> Result<Law> {
        let law = match j {
            LawJson::PointMass { p } => Law::point_mass(p.square(self.d, "p")?)?,
            LawJson::Atomic { atoms, weights } => Law::atomic(atoms.clone(), weights.clone())?,
            LawJson::Realization { d, m, p, alpha, t } => {
                let alpha = alpha.to_mat()?;
                if alpha.nrows() != m * d {
                    return Err(Error::DimensionMismatch(format!("alpha must have {} rows", m * d)));
                }
                Law::realization(Realization::new(*d, p.to_mat()?, alpha, t.to_mat()?)?)
            }
            LawJson::Bernoulli { s } => Law::bernoulli(self.map(s)?)?,
            LawJson::Semicircular { s } => Law::semicircular(self.map(s)?)?,
            LawJson::Boolean { args } => Law::boolean(args.iter().map(|a| self.build(a)).collect::<Result<_>>()?)?,
            LawJson::Monotone { args } => self.two(args).and_then(|(a, b)| Law::monotone(a, b))?,
            LawJson::Orthogonal { args } => self.two(args).and_then(|(a, b)| Law::orthogonal(a, b))?,
            LawJson::Free { args } => self.two(args).and_then(|(a, b)| Law::free(a, b))?,
            LawJson::Sfree { args } => self.two(args).and_then(|(a, b)| Law::sfree(a, b))?,
            LawJson::BooleanPower { arg, alpha } => Law::boolean_power(self.build(arg)?, self.map(alpha)?)?,
            LawJson::FreePower { arg, alpha } => Law::free_power(self.build(arg)?, self.map(alpha)?)?,
            LawJson::BTransform { arg, s } => Law::b_transform(self.build(arg)?, self.map(s)?)?,
            LawJson::Phi { arg } => Law::phi(self.build(arg)?),
            LawJson::Ref { name } => self.named(name)?,
        };
        if law.d() != self.d {
            return Err(Error::DimensionMismatch(format!("law over M_{} in a model with d = {}", law.d(), self.d)));
        }
        Ok(law)
    }
}

fn resolve_cpmaps(d: usize, defs: &BTreeMap<String, CpMapJson>) -> Result<BTreeMap<String, CpMap>> {
    let none = BTreeMap::new();
    defs.iter()
        .map(|(k, v)| match v {
            CpMapJson::Name(_) => Err(Error::Parse(format!("cpmap {k:?} must be defined inline"))),
            CpMapJson::Def(_) => Ok((k.clone(), v.resolve(d, &none)?)),
        })
        .collect()
}

fn resolve_laws(
    d: usize,
    defs: &BTreeMap<String, LawJson>,
    cpmaps: &BTreeMap<String, CpMap>,
) -> Result<BTreeMap<String, Law>> {
    let mut r = Resolver { d, defs, cpmaps, done: BTreeMap::new(), active: BTreeSet::new() };
    for name in defs.keys() {
        r.named(name)?;
    }
    Ok(r.done)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    pub d: usize,
    #[serde(default)]
    pub cpmaps: BTreeMap<String, CpMapJson>,
    #[serde(default)]
    pub laws: BTreeMap<String, LawJson>,
}

/// A model with every name resolved.
#[derive(Clone, Debug)]
pub struct Model {
    pub d: usize,
    pub cpmaps: BTreeMap<String, CpMap>,
    pub laws: BTreeMap<String, Law>,
}

impl Model {
    pub fn law(&self, name: &str) -> Result<&Law> {
        self.laws.get(name).ok_or_else(|| Error::Parse(format!("model has no law {name:?}")))
    }
}

fn check_schema(schema: &str) -> Result<()> {
    if schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema {schema:?}, expected {SCHEMA:?}")));
    }
    Ok(())
}

impl ModelFile {
    pub fn resolve(&self) -> Result<Model> {
        check_schema(&self.schema)?;
        if self.d == 0 {
            return Err(Error::Parse("d must be positive".into()));
        }
        let cpmaps = resolve_cpmaps(self.d, &self.cpmaps)?;
        let laws = resolve_laws(self.d, &self.laws, &cpmaps)?;
        Ok(Model { d: self.d, cpmaps, laws })
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.resolve()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCaseJson {
    pub name: String,
    pub d: usize,
    pub laws: BTreeMap<String, LawJson>,
    #[serde(default)]
    pub cpmaps: BTreeMap<String, CpMapJson>,
    pub levels: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl IdentityCaseJson {
    pub fn from_case(case: &IdentityCase) -> Self {
        let d = case.laws.values().next().map(Law::d).or_else(|| case.cpmaps.values().next().map(CpMap::d));
        Self {
            name: case.name.to_string(),
            d: d.unwrap_or(1),
            laws: case.laws.iter().map(|(k, v)| (k.clone(), LawJson::from_law(v))).collect(),
            cpmaps: case.cpmaps.iter().map(|(k, v)| (k.clone(), CpMapJson::from_map(v))).collect(),
            levels: case.levels.clone(),
            samples: case.samples,
            seed: case.seed,
            tol: case.tol,
        }
    }

    pub fn to_case(&self) -> Result<IdentityCase> {
        let name: IdentityName = self.name.parse()?;
        let cpmaps = resolve_cpmaps(self.d, &self.cpmaps)?;
        let laws = resolve_laws(self.d, &self.laws, &cpmaps)?;
        Ok(IdentityCase {
            name,
            laws,
            cpmaps,
            levels: self.levels.clone(),
            samples: self.samples,
            seed: self.seed,
            tol: self.tol,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JSpecJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffix_rule: Option<String>,
}

impl JSpecJson {
    pub fn to_spec(&self) -> Result<JSpec> {
        if self.kind != "CUSTOM" {
            if self.words.is_some() || self.suffix_rule.is_some() {
                return Err(Error::Parse(format!("{} takes no words or suffix_rule", self.kind)));
            }
            return self.kind.parse();
        }
        let words: BTreeSet<Vec<usize>> = self.words.clone().unwrap_or_default().into_iter().collect();
        for w in &words {
            if w.contains(&0) || w.windows(2).any(|p| p[0] == p[1]) {
                return Err(Error::Parse(format!("word {w:?} is not alternating over 1-based letters")));
            }
        }
        let suffix_last = match &self.suffix_rule {
            None => None,
            Some(rule) => match rule.strip_prefix("last=").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Some(k),
                _ => return Err(Error::Parse(format!("bad suffix_rule {rule:?}, expected last=<k>"))),
            },
        };
        Ok(JSpec::Custom { words, suffix_last })
    }

    pub fn from_spec(spec: &JSpec) -> Self {
        match spec {
            JSpec::Custom { words, suffix_last } => Self {
                kind: "CUSTOM".into(),
                words: Some(words.iter().cloned().collect()),
                suffix_rule: suffix_last.map(|k| format!("last={k}")),
            },
            other => Self { kind: other.to_string(), words: None, suffix_rule: None },
        }
    }
}

/// JSON value of a matrix as nested `[re, im]` arrays.
pub fn mat_value(m: &Mat) -> serde_json::Value {
    serde_json::to_value(MatJson::from_mat(m)).expect("matrices serialize")
}

/// Parses a JSON matrix, e.g. an evaluation point.
pub fn parse_mat(text: &str) -> Result<Mat> {
    let m: MatJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    m.to_mat()
}

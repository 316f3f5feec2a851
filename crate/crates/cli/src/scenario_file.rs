//! The TOML scenario format.
//!
//! ```toml
//! version = 1
//! dims = [2]
//!
//! [state]
//! matrix = [[[0.5, 0.0], [0.5, 0.0]],
//!           [[0.5, 0.0], [0.5, 0.0]]]
//! # or: model = "coherent_qubit" with a [state.params] table
//!
//! [[times]]
//! label = "t0"
//! unitary = "identity"
//! basis = "computational"
//!
//! [[times]]
//! label = "t1"
//! unitary = { adiabatic_phase = 0.3 }
//! basis = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
//!
//! [options]
//! tol = 1e-9
//! evolution = "cumulative"
//! energies = [[1.0, -1.0], [2.0, -2.0]]
//! ```
//!
//! Complex entries are `[re, im]` pairs. Shape problems are reported with the
//! line of the offending row or entry.

use std::fmt;

use qbnet::bayesnet::{computational_basis, Settings};
use qbnet::models::{self, CoherentQubitParams, QubitPairParams};
use qbnet::qstate::validate_density;
use qbnet::{ComplexOperator, DVector, Scenario, TimePoint, Tolerances, Unitary, C64};
use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;
use toml::Spanned;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, field: impl Into<String>, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: Some(line_of(self.src, span.start)),
            field: field.into(),
            message: message.into(),
        })
    }
}

type Entry = Spanned<Vec<f64>>;
type Row = Spanned<Vec<Entry>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: Spanned<u32>,
    dims: Option<Spanned<Vec<usize>>>,
    state: Spanned<RawState>,
    #[serde(default)]
    times: Vec<Spanned<RawTime>>,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    matrix: Option<Spanned<Vec<Row>>>,
    model: Option<Spanned<String>>,
    params: Option<Spanned<toml::Table>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    label: Option<String>,
    unitary: Option<Spanned<RawUnitary>>,
    basis: Option<Spanned<RawBasis>>,
}

#[derive(Debug)]
enum RawUnitary {
    Named(String),
    AdiabaticPhase(f64),
    Matrix(Vec<Row>),
}

#[derive(Debug)]
enum RawBasis {
    Named(String),
    Vectors(Vec<Row>),
}

struct UnitaryVisitor;

impl<'de> Visitor<'de> for UnitaryVisitor {
    type Value = RawUnitary;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("\"identity\", \"partial_swap\", { adiabatic_phase = φ } or a matrix of [re, im] entries")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<RawUnitary, E> {
        Ok(RawUnitary::Named(v.to_owned()))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawUnitary, A::Error> {
        let mut phase = None;
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "adiabatic_phase" if phase.is_none() => phase = Some(map.next_value::<f64>()?),
                "adiabatic_phase" => return Err(de::Error::duplicate_field("adiabatic_phase")),
                other => return Err(de::Error::unknown_field(other, &["adiabatic_phase"])),
            }
        }
        phase
            .map(RawUnitary::AdiabaticPhase)
            .ok_or_else(|| de::Error::missing_field("adiabatic_phase"))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawUnitary, A::Error> {
        let mut rows = Vec::new();
        while let Some(row) = seq.next_element::<Row>()? {
            rows.push(row);
        }
        Ok(RawUnitary::Matrix(rows))
    }
}

impl<'de> Deserialize<'de> for RawUnitary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(UnitaryVisitor)
    }
}

struct BasisVisitor;

impl<'de> Visitor<'de> for BasisVisitor {
    type Value = RawBasis;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("\"computational\", \"sigma_z_product\" or a list of vectors of [re, im] entries")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<RawBasis, E> {
        Ok(RawBasis::Named(v.to_owned()))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawBasis, A::Error> {
        let mut vectors = Vec::new();
        while let Some(v) = seq.next_element::<Row>()? {
            vectors.push(v);
        }
        Ok(RawBasis::Vectors(vectors))
    }
}

impl<'de> Deserialize<'de> for RawBasis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(BasisVisitor)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    tol: Option<f64>,
    degeneracy_tol: Option<f64>,
    dim_cap: Option<usize>,
    enumeration_cap: Option<usize>,
    evolution: Option<Spanned<String>>,
    energies: Option<Vec<Vec<f64>>>,
    beta: Option<f64>,
    allow_initial_unitary: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubitParams {
    beta: f64,
    #[serde(default = "one")]
    g0: f64,
    #[serde(default = "two")]
    g1: f64,
    #[serde(default)]
    a: f64,
    #[serde(default)]
    phase: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPairParams {
    beta_a: f64,
    beta_b: f64,
    #[serde(default)]
    a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evolution {
    /// Each unitary maps t_0 to t_n.
    Cumulative,
    /// Each unitary maps t_{n−1} to t_n.
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Matrix(ComplexOperator),
    CoherentQubit(CoherentQubitParams),
    QubitPair(QubitPairParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub label: String,
    pub unitary: ComplexOperator,
    pub basis: Vec<DVector<C64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileOptions {
    pub tol: Option<f64>,
    pub degeneracy_tol: Option<f64>,
    pub dim_cap: Option<usize>,
    pub enumeration_cap: Option<usize>,
    pub evolution: Option<Evolution>,
    pub energies: Option<Vec<Vec<f64>>>,
    pub beta: Option<f64>,
    pub allow_initial_unitary: bool,
}

/// A parsed but not yet validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub dims: Vec<usize>,
    pub state: StateSpec,
    pub times: Vec<TimeSpec>,
    pub options: FileOptions,
}

/// Flags that take precedence over the file's `[options]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub cap: Option<usize>,
}

impl ScenarioFile {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let raw: RawFile = toml::from_str(src).map_err(|e| ParseError {
            line: e.span().map(|s| line_of(src, s.start)),
            field: "<document>".into(),
            message: e.message().trim().to_owned(),
        })?;
        let cx = Ctx { src };
        if *raw.version.get_ref() != FORMAT_VERSION {
            return cx.err(
                raw.version.span(),
                "version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", raw.version.get_ref()),
            );
        }

        let state_span = raw.state.span();
        let raw_state = raw.state.into_inner();
        let (state, model_dims) = match (raw_state.matrix, raw_state.model) {
            (Some(_), Some(m)) => return cx.err(m.span(), "state.model", "give either `matrix` or `model`, not both"),
            (None, None) => return cx.err(state_span, "state", "missing `matrix` or `model`"),
            (Some(m), None) => {
                if let Some(p) = raw_state.params {
                    return cx.err(p.span(), "state.params", "parameters only apply to a named model");
                }
                (StateSpec::Matrix(parse_matrix(&cx, "state.matrix", &m)?), None)
            }
            (None, Some(model)) => parse_model(&cx, &model, raw_state.params, state_span)?,
        };

        let dims = match (raw.dims, model_dims) {
            (Some(d), Some(md)) if d.get_ref() != &md => {
                return cx.err(d.span(), "dims", format!("model requires dims {md:?}"))
            }
            (Some(d), _) => {
                if d.get_ref().is_empty() || d.get_ref().contains(&0) {
                    return cx.err(d.span(), "dims", "dims must be a non-empty list of positive integers");
                }
                d.into_inner()
            }
            (None, Some(md)) => md,
            (None, None) => match &state {
                StateSpec::Matrix(m) => vec![m.dim()],
                _ => unreachable!("models always fix their dims"),
            },
        };
        let d = dims.iter().try_fold(1usize, |acc, &x| acc.checked_mul(x)).ok_or_else(|| ParseError {
            line: None,
            field: "dims".into(),
            message: "dimension product overflows".into(),
        })?;

        let times = if raw.times.is_empty() {
            match &state {
                StateSpec::CoherentQubit(p) => default_times(&[
                    ComplexOperator::identity(2),
                    models::adiabatic_phase(p.phase),
                ]),
                StateSpec::QubitPair(_) => {
                    default_times(&[ComplexOperator::identity(4), models::partial_swap()])
                }
                StateSpec::Matrix(_) => Vec::new(),
            }
        } else {
            raw.times
                .iter()
                .enumerate()
                .map(|(n, t)| parse_time(&cx, n, t, &dims, d))
                .collect::<Result<_, _>>()?
        };

        let o = raw.options;
        let evolution = match o.evolution {
            None => None,
            Some(e) => match e.get_ref().as_str() {
                "cumulative" => Some(Evolution::Cumulative),
                "incremental" => Some(Evolution::Incremental),
                other => {
                    return cx.err(
                        e.span(),
                        "options.evolution",
                        format!("unknown evolution `{other}`, expected \"cumulative\" or \"incremental\""),
                    )
                }
            },
        };
        Ok(Self {
            dims,
            state,
            times,
            options: FileOptions {
                tol: o.tol,
                degeneracy_tol: o.degeneracy_tol,
                dim_cap: o.dim_cap,
                enumeration_cap: o.enumeration_cap,
                evolution,
                energies: o.energies,
                beta: o.beta,
                allow_initial_unitary: o.allow_initial_unitary.unwrap_or(false),
            },
        })
    }

    pub fn settings(&self, overrides: Overrides) -> Settings {
        let mut s = Settings::default();
        if let Some(tol) = overrides.tol.or(self.options.tol) {
            s.tol = Tolerances::uniform(tol);
        }
        if let Some(t) = self.options.degeneracy_tol {
            s.tol.degeneracy = t;
        }
        if let Some(cap) = self.options.dim_cap {
            s.dim_cap = cap;
        }
        if let Some(cap) = self.options.enumeration_cap {
            s.enumeration_cap = cap;
        }
        if let Some(cap) = overrides.cap {
            s.dim_cap = cap;
            s.enumeration_cap = cap;
        }
        s.allow_initial_unitary = self.options.allow_initial_unitary;
        s
    }

    pub fn state_operator(&self) -> qbnet::Result<ComplexOperator> {
        match &self.state {
            StateSpec::Matrix(m) => Ok(m.clone()),
            StateSpec::CoherentQubit(p) => models::coherent_qubit_state(p),
            StateSpec::QubitPair(p) => models::qubit_pair_state(p),
        }
    }

    /// Validates everything and builds the engine scenario.
    pub fn build(&self, overrides: Overrides) -> qbnet::Result<Scenario> {
        let settings = self.settings(overrides);
        let tol = settings.tol;
        let rho = validate_density(&self.state_operator()?, &tol)?;
        let mut times = Vec::with_capacity(self.times.len());
        let mut previous: Option<Unitary> = None;
        for t in &self.times {
            let step = Unitary::new(t.unitary.clone(), &tol)?;
            let unitary = match (self.options.evolution, &previous) {
                (Some(Evolution::Incremental), Some(prev)) => step.compose(prev, &tol)?,
                _ => step,
            };
            previous = Some(unitary.clone());
            times.push(TimePoint::new(t.label.clone(), unitary, t.basis.clone(), &tol)?);
        }
        Scenario::new(self.dims.clone(), rho, times, settings)
    }

    /// (initial, final) energies from the file, or the model's own levels.
    pub fn energies(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if let Some(e) = &self.options.energies {
            return match e.as_slice() {
                [a, b] => Some((a.clone(), b.clone())),
                _ => None,
            };
        }
        match &self.state {
            StateSpec::CoherentQubit(p) => Some(p.energies()),
            _ => None,
        }
    }

    /// Inverse temperature of the initial state, if known.
    pub fn beta(&self) -> Option<f64> {
        self.options.beta.or(match &self.state {
            StateSpec::CoherentQubit(p) => Some(p.beta),
            _ => None,
        })
    }
}

fn default_times(unitaries: &[ComplexOperator]) -> Vec<TimeSpec> {
    unitaries
        .iter()
        .enumerate()
        .map(|(n, u)| TimeSpec {
            label: format!("t{n}"),
            unitary: u.clone(),
            basis: computational_basis(u.dim()),
        })
        .collect()
}

fn parse_model(
    cx: &Ctx,
    model: &Spanned<String>,
    params: Option<Spanned<toml::Table>>,
    state_span: std::ops::Range<usize>,
) -> Result<(StateSpec, Option<Vec<usize>>), ParseError> {
    let (span, table) = match params {
        Some(p) => (p.span(), p.into_inner()),
        None => (state_span, toml::Table::new()),
    };
    let bad = |e: toml::de::Error| cx.err::<()>(span.clone(), "state.params", e.message().trim()).unwrap_err();
    match model.get_ref().as_str() {
        "coherent_qubit" => {
            let p: RawQubitParams = toml::Value::Table(table).try_into().map_err(bad)?;
            Ok((
                StateSpec::CoherentQubit(CoherentQubitParams {
                    beta: p.beta,
                    g0: p.g0,
                    g1: p.g1,
                    a: p.a,
                    phase: p.phase,
                }),
                Some(vec![2]),
            ))
        }
        "qubit_pair" => {
            let p: RawPairParams = toml::Value::Table(table).try_into().map_err(bad)?;
            Ok((
                StateSpec::QubitPair(QubitPairParams {
                    beta_a: p.beta_a,
                    beta_b: p.beta_b,
                    a: p.a,
                }),
                Some(vec![2, 2]),
            ))
        }
        other => cx.err(
            model.span(),
            "state.model",
            format!("unknown model `{other}`, expected \"coherent_qubit\" or \"qubit_pair\""),
        ),
    }
}

fn parse_entry(cx: &Ctx, field: &str, e: &Entry) -> Result<C64, ParseError> {
    match e.get_ref().as_slice() {
        [re, im] => Ok(C64::new(*re, *im)),
        other => cx.err(
            e.span(),
            field,
            format!("complex entry must be [re, im], found {} numbers", other.len()),
        ),
    }
}

fn parse_vector(cx: &Ctx, field: &str, row: &Row, len: usize) -> Result<Vec<C64>, ParseError> {
    if row.get_ref().len() != len {
        return cx.err(
            row.span(),
            field,
            format!("has {} entries, expected {len}", row.get_ref().len()),
        );
    }
    row.get_ref()
        .iter()
        .enumerate()
        .map(|(j, e)| parse_entry(cx, &format!("{field}[{j}]"), e))
        .collect()
}

fn parse_matrix(cx: &Ctx, field: &str, m: &Spanned<Vec<Row>>) -> Result<ComplexOperator, ParseError> {
    let n = m.get_ref().len();
    if n == 0 {
        return cx.err(m.span(), field, "matrix has no rows");
    }
    let rows = m
        .get_ref()
        .iter()
        .enumerate()
        .map(|(i, r)| parse_vector(cx, &format!("{field}[{i}]"), r, n))
        .collect::<Result<Vec<_>, _>>()?;
    ComplexOperator::from_rows(&rows).map_err(|e| ParseError {
        line: Some(line_of(cx.src, m.span().start)),
        field: field.into(),
        message: e.to_string(),
    })
}

fn parse_time(cx: &Ctx, n: usize, t: &Spanned<RawTime>, dims: &[usize], d: usize) -> Result<TimeSpec, ParseError> {
    let field = format!("times[{n}]");
    let raw = t.get_ref();
    let unitary = match &raw.unitary {
        None => ComplexOperator::identity(d),
        Some(u) => match u.get_ref() {
            RawUnitary::Named(name) => match name.as_str() {
                "identity" => ComplexOperator::identity(d),
                "partial_swap" if dims == [2, 2] => models::partial_swap(),
                "partial_swap" => {
                    return cx.err(u.span(), format!("{field}.unitary"), "partial_swap requires dims = [2, 2]")
                }
                other => {
                    return cx.err(
                        u.span(),
                        format!("{field}.unitary"),
                        format!("unknown unitary `{other}`, expected \"identity\" or \"partial_swap\""),
                    )
                }
            },
            RawUnitary::AdiabaticPhase(phase) if d == 2 => models::adiabatic_phase(*phase),
            RawUnitary::AdiabaticPhase(_) => {
                return cx.err(u.span(), format!("{field}.unitary"), "adiabatic_phase requires a single qubit")
            }
            RawUnitary::Matrix(rows) => {
                let spanned = Spanned::new(u.span(), rows.clone());
                let m = parse_matrix(cx, &format!("{field}.unitary"), &spanned)?;
                if m.dim() != d {
                    return cx.err(
                        u.span(),
                        format!("{field}.unitary"),
                        format!("matrix is {0}x{0}, expected {d}x{d}", m.dim()),
                    );
                }
                m
            }
        },
    };
    let basis = match &raw.basis {
        None => computational_basis(d),
        Some(b) => match b.get_ref() {
            RawBasis::Named(name) => match name.as_str() {
                "computational" => computational_basis(d),
                // σ_z eigenvalue +1 is index 0, so the product basis is the computational one
                "sigma_z_product" if dims.iter().all(|&x| x == 2) => computational_basis(d),
                "sigma_z_product" => {
                    return cx.err(b.span(), format!("{field}.basis"), "sigma_z_product requires qubit subsystems")
                }
                other => {
                    return cx.err(
                        b.span(),
                        format!("{field}.basis"),
                        format!("unknown basis `{other}`, expected \"computational\" or \"sigma_z_product\""),
                    )
                }
            },
            RawBasis::Vectors(vs) => {
                if vs.len() != d {
                    return cx.err(b.span(), format!("{field}.basis"), format!("has {} vectors, expected {d}", vs.len()));
                }
                vs.iter()
                    .enumerate()
                    .map(|(k, v)| parse_vector(cx, &format!("{field}.basis[{k}]"), v, d).map(DVector::from_vec))
                    .collect::<Result<_, _>>()?
            }
        },
    };
    Ok(TimeSpec {
        label: raw.label.clone().unwrap_or_else(|| format!("t{n}")),
        unitary,
        basis,
    })
}

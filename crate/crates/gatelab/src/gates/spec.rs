//! Gate-spec mini-language: `name` or `name:key=value(,key=value)*`.
//!
//! | name       | keys                   |
//! |------------|------------------------|
//! | `id`       | `dims` or `n`          |
//! | `cnot`, `dcnot`, `sqrtswap`, `p9` | none |
//! | `swap`     | `n`                    |
//! | `fswap`    | `t` (required), `n`    |
//! | `csalpha`  | `alpha` (required)     |
//! | `fourier`  | `n`                    |
//! | `cadd`     | `n`                    |
//! | `diag`     | `eps` (required), `dims`, `seed` |
//! | `ctrlu`    | `n`, `rank`, `seed`    |
//! | `cartan`   | `c1`, `c2`, `c3`       |
//! | `haar`     | `dims`, `seed`         |
//! | `file`     | `path` (or a bare path after the colon) |
//!
//! Omitted dimensions are taken from the caller's hint, else `2x2`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{
    cartan_gate, cnot, controlled_add, controlled_unitary, cs_alpha, dcnot, diagonal_interaction, fourier_gate,
    fractional_swap, haar_gate, perm_p9, sqrt_swap, CartanCoords,
};
use crate::bipartite::{swap_operator, BipartiteOperator, Dims};
use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::random::{haar_unitary, party, rng_from};

#[derive(Clone, Debug, PartialEq)]
pub enum GateSpec {
    Identity { dims: Option<Dims> },
    Cnot,
    Dcnot,
    Swap { n: Option<usize> },
    SqrtSwap,
    FractionalSwap { t: f64, n: Option<usize> },
    CsAlpha { alpha: f64 },
    Fourier { n: Option<usize> },
    ControlledAdd { n: Option<usize> },
    Diagonal { eps: f64, dims: Option<Dims>, seed: Option<u64> },
    ControlledUnitary { n: Option<usize>, rank: Option<usize>, seed: Option<u64> },
    Cartan(CartanCoords),
    P9,
    Haar { dims: Option<Dims>, seed: Option<u64> },
    File { path: PathBuf },
}

const FAMILIES: &[(&str, &[&str])] = &[
    ("id", &["dims", "n"]),
    ("cnot", &[]),
    ("dcnot", &[]),
    ("swap", &["n"]),
    ("sqrtswap", &[]),
    ("fswap", &["t", "n"]),
    ("csalpha", &["alpha"]),
    ("fourier", &["n"]),
    ("cadd", &["n"]),
    ("diag", &["eps", "dims", "seed"]),
    ("ctrlu", &["n", "rank", "seed"]),
    ("cartan", &["c1", "c2", "c3"]),
    ("p9", &[]),
    ("haar", &["dims", "seed"]),
    ("file", &["path"]),
];

struct Field<'a> {
    key: &'a str,
    value: &'a str,
    key_at: usize,
    value_at: usize,
}

struct Fields<'a> {
    items: Vec<Field<'a>>,
    end: usize,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Option<&Field<'a>> {
        self.items.iter().find(|f| f.key == key)
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<(T, usize)>, ParseError> {
        let Some(f) = self.get(key) else { return Ok(None) };
        f.value
            .parse::<T>()
            .map(|v| Some((v, f.value_at)))
            .map_err(|_| ParseError::new(f.value_at, ParseErrorKind::Malformed, format!("{key} expects {what}, got {:?}", f.value)))
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ParseError> {
        match self.parse::<f64>(key, "a real number")? {
            Some((v, at)) if !v.is_finite() => {
                Err(ParseError::new(at, ParseErrorKind::OutOfRange, format!("{key} must be finite")))
            }
            other => Ok(other.map(|(v, _)| v)),
        }
    }

    fn unit_interval(&self, key: &str) -> Result<Option<f64>, ParseError> {
        let v = self.real(key)?;
        if let Some(x) = v {
            if !(0.0..=1.0).contains(&x) {
                let at = self.get(key).map_or(0, |f| f.value_at);
                return Err(ParseError::new(at, ParseErrorKind::OutOfRange, format!("{key} must lie in [0, 1], got {x}")));
            }
        }
        Ok(v)
    }

    fn required_unit_interval(&self, key: &str) -> Result<f64, ParseError> {
        self.unit_interval(key)?.ok_or_else(|| self.missing(key))
    }

    fn order(&self, key: &str) -> Result<Option<usize>, ParseError> {
        match self.parse::<usize>(key, "a nonnegative integer")? {
            Some((v, at)) if v < 2 => {
                Err(ParseError::new(at, ParseErrorKind::OutOfRange, format!("{key} must be at least 2, got {v}")))
            }
            other => Ok(other.map(|(v, _)| v)),
        }
    }

    fn dims(&self) -> Result<Option<Dims>, ParseError> {
        let Some(f) = self.get("dims") else { return Ok(None) };
        let (a, b) = f
            .value
            .split_once('x')
            .ok_or_else(|| ParseError::new(f.value_at, ParseErrorKind::Malformed, format!("dims must look like NxM, got {:?}", f.value)))?;
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| ParseError::new(f.value_at, ParseErrorKind::Malformed, format!("dims must look like NxM, got {:?}", f.value)))
        };
        let (n, m) = (parse(a)?, parse(b)?);
        Dims::new(n, m)
            .map(Some)
            .map_err(|_| ParseError::new(f.value_at, ParseErrorKind::OutOfRange, format!("dims must be at least 2x2, got {}", f.value)))
    }

    fn seed(&self) -> Result<Option<u64>, ParseError> {
        Ok(self.parse::<u64>("seed", "an unsigned 64-bit integer")?.map(|(v, _)| v))
    }

    fn missing(&self, key: &str) -> ParseError {
        ParseError::new(self.end, ParseErrorKind::MissingKey, format!("missing required key {key:?}"))
    }
}

fn split_fields<'a>(text: &'a str, start: usize, allowed: &[&str]) -> Result<Fields<'a>, ParseError> {
    let body = &text[start..];
    let mut items: Vec<Field<'a>> = Vec::new();
    let mut at = start;
    for item in body.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ParseError::new(at, ParseErrorKind::Malformed, format!("expected key=value, got {item:?}")))?;
        if key.is_empty() {
            return Err(ParseError::new(at, ParseErrorKind::Malformed, "empty key"));
        }
        if !allowed.contains(&key) {
            let expected = if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") };
            return Err(ParseError::new(at, ParseErrorKind::UnknownKey, format!("unknown key {key:?} (expected one of: {expected})")));
        }
        if items.iter().any(|f| f.key == key) {
            return Err(ParseError::new(at, ParseErrorKind::Malformed, format!("duplicate key {key:?}")));
        }
        items.push(Field {
            key,
            value,
            key_at: at,
            value_at: at + key.len() + 1,
        });
        at += item.len() + 1;
    }
    Ok(Fields { items, end: text.len() })
}

pub fn parse_gate_spec(text: &str) -> Result<GateSpec, ParseError> {
    let (name, rest) = match text.find(':') {
        Some(k) => (&text[..k], Some(k + 1)),
        None => (text, None),
    };
    let Some(&(_, allowed)) = FAMILIES.iter().find(|(f, _)| *f == name) else {
        let names: Vec<&str> = FAMILIES.iter().map(|(f, _)| *f).collect();
        return Err(ParseError::new(
            0,
            ParseErrorKind::UnknownFamily,
            format!("unknown gate {name:?} (expected one of: {})", names.join(", ")),
        ));
    };
    if name == "file" {
        let Some(start) = rest else {
            return Err(ParseError::new(text.len(), ParseErrorKind::MissingKey, "file needs a path"));
        };
        let raw = text[start..].strip_prefix("path=").unwrap_or(&text[start..]);
        if raw.is_empty() {
            return Err(ParseError::new(text.len(), ParseErrorKind::MissingKey, "file needs a path"));
        }
        return Ok(GateSpec::File { path: PathBuf::from(raw) });
    }
    let fields = match rest {
        Some(start) if start == text.len() => {
            return Err(ParseError::new(start, ParseErrorKind::Malformed, "expected key=value after ':'"));
        }
        Some(start) => split_fields(text, start, allowed)?,
        None => Fields {
            items: Vec::new(),
            end: text.len(),
        },
    };
    let spec = match name {
        "id" => {
            let dims = match (fields.dims()?, fields.order("n")?) {
                (Some(_), Some(_)) => {
                    let at = fields.get("n").map_or(0, |f| f.key_at);
                    return Err(ParseError::new(at, ParseErrorKind::Malformed, "give either dims or n, not both"));
                }
                (Some(d), None) => Some(d),
                (None, Some(n)) => Some(Dims::square(n).expect("n >= 2 checked")),
                (None, None) => None,
            };
            GateSpec::Identity { dims }
        }
        "cnot" => GateSpec::Cnot,
        "dcnot" => GateSpec::Dcnot,
        "sqrtswap" => GateSpec::SqrtSwap,
        "p9" => GateSpec::P9,
        "swap" => GateSpec::Swap { n: fields.order("n")? },
        "fswap" => GateSpec::FractionalSwap {
            t: fields.real("t")?.ok_or_else(|| fields.missing("t"))?,
            n: fields.order("n")?,
        },
        "csalpha" => GateSpec::CsAlpha {
            alpha: fields.required_unit_interval("alpha")?,
        },
        "fourier" => GateSpec::Fourier { n: fields.order("n")? },
        "cadd" => GateSpec::ControlledAdd { n: fields.order("n")? },
        "diag" => GateSpec::Diagonal {
            eps: fields.required_unit_interval("eps")?,
            dims: fields.dims()?,
            seed: fields.seed()?,
        },
        "ctrlu" => {
            let n = fields.order("n")?;
            let rank = fields.parse::<usize>("rank", "a positive integer")?;
            if let Some((r, at)) = rank {
                let upper = n.map_or(usize::MAX, |n| n - 1);
                if r == 0 || r > upper {
                    return Err(ParseError::new(at, ParseErrorKind::OutOfRange, format!("rank must lie in [1, n-1], got {r}")));
                }
            }
            GateSpec::ControlledUnitary {
                n,
                rank: rank.map(|(r, _)| r),
                seed: fields.seed()?,
            }
        }
        "cartan" => GateSpec::Cartan(CartanCoords::new(
            fields.real("c1")?.unwrap_or(0.0),
            fields.real("c2")?.unwrap_or(0.0),
            fields.real("c3")?.unwrap_or(0.0),
        )),
        "haar" => GateSpec::Haar {
            dims: fields.dims()?,
            seed: fields.seed()?,
        },
        _ => unreachable!("family table and match are in sync"),
    };
    Ok(spec)
}

impl FromStr for GateSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_gate_spec(s)
    }
}

impl GateSpec {
    pub fn family(&self) -> &'static str {
        match self {
            GateSpec::Identity { .. } => "id",
            GateSpec::Cnot => "cnot",
            GateSpec::Dcnot => "dcnot",
            GateSpec::Swap { .. } => "swap",
            GateSpec::SqrtSwap => "sqrtswap",
            GateSpec::FractionalSwap { .. } => "fswap",
            GateSpec::CsAlpha { .. } => "csalpha",
            GateSpec::Fourier { .. } => "fourier",
            GateSpec::ControlledAdd { .. } => "cadd",
            GateSpec::Diagonal { .. } => "diag",
            GateSpec::ControlledUnitary { .. } => "ctrlu",
            GateSpec::Cartan(_) => "cartan",
            GateSpec::P9 => "p9",
            GateSpec::Haar { .. } => "haar",
            GateSpec::File { .. } => "file",
        }
    }

    /// Whether building the gate consumes randomness.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            GateSpec::Diagonal { .. } | GateSpec::ControlledUnitary { .. } | GateSpec::Haar { .. }
        )
    }

    /// Random and without a `seed` key of its own.
    pub fn needs_seed(&self) -> bool {
        match self {
            GateSpec::Diagonal { seed, .. } | GateSpec::ControlledUnitary { seed, .. } | GateSpec::Haar { seed, .. } => {
                seed.is_none()
            }
            _ => false,
        }
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn render(&self) -> String {
        let mut keys: Vec<(&str, String)> = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                keys.push((k, v));
            }
        };
        match self {
            GateSpec::Identity { dims } => push("dims", dims.map(|d| d.to_string())),
            GateSpec::Swap { n } | GateSpec::Fourier { n } | GateSpec::ControlledAdd { n } => {
                push("n", n.map(|n| n.to_string()))
            }
            GateSpec::FractionalSwap { t, n } => {
                push("t", Some(t.to_string()));
                push("n", n.map(|n| n.to_string()));
            }
            GateSpec::CsAlpha { alpha } => push("alpha", Some(alpha.to_string())),
            GateSpec::Diagonal { eps, dims, seed } => {
                push("eps", Some(eps.to_string()));
                push("dims", dims.map(|d| d.to_string()));
                push("seed", seed.map(|s| s.to_string()));
            }
            GateSpec::ControlledUnitary { n, rank, seed } => {
                push("n", n.map(|n| n.to_string()));
                push("rank", rank.map(|r| r.to_string()));
                push("seed", seed.map(|s| s.to_string()));
            }
            GateSpec::Cartan(c) => {
                push("c1", Some(c.c1.to_string()));
                push("c2", Some(c.c2.to_string()));
                push("c3", Some(c.c3.to_string()));
            }
            GateSpec::Haar { dims, seed } => {
                push("dims", dims.map(|d| d.to_string()));
                push("seed", seed.map(|s| s.to_string()));
            }
            GateSpec::File { path } => push("path", Some(path.display().to_string())),
            GateSpec::Cnot | GateSpec::Dcnot | GateSpec::SqrtSwap | GateSpec::P9 => {}
        }
        if keys.is_empty() {
            return self.family().to_string();
        }
        let body: Vec<String> = keys.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}:{}", self.family(), body.join(","))
    }

    /// Builds the operator. `hint` supplies dimensions the spec leaves out
    /// (and must agree with any it states); `fallback_seed` seeds random
    /// families that carry no `seed` key.
    pub fn build(&self, hint: Option<Dims>, fallback_seed: Option<u64>) -> Result<BipartiteOperator> {
        let seed = |own: &Option<u64>| {
            own.or(fallback_seed).ok_or_else(|| {
                Error::invalid(format!("gate {:?} is random and needs a seed", self.render()))
            })
        };
        let square_from_hint = |n: &Option<usize>| -> Result<usize> {
            match (n, hint) {
                (Some(n), _) => Ok(*n),
                (None, Some(h)) if h.is_square() => Ok(h.n()),
                (None, Some(h)) => Err(Error::invalid(format!("{} needs n = m, got dims {h}", self.family()))),
                (None, None) => Ok(2),
            }
        };
        let dims_from_hint = |d: &Option<Dims>| -> Dims { d.or(hint).unwrap_or_else(|| Dims::square(2).expect("valid")) };
        let op = match self {
            GateSpec::Identity { dims } => BipartiteOperator::identity(dims_from_hint(dims)),
            GateSpec::Cnot => cnot(),
            GateSpec::Dcnot => dcnot(),
            GateSpec::SqrtSwap => sqrt_swap(),
            GateSpec::P9 => perm_p9(),
            GateSpec::Swap { n } => swap_operator(square_from_hint(n)?)?,
            GateSpec::FractionalSwap { t, n } => fractional_swap(*t, square_from_hint(n)?)?,
            GateSpec::CsAlpha { alpha } => cs_alpha(*alpha)?,
            GateSpec::Fourier { n } => fourier_gate(square_from_hint(n)?)?,
            GateSpec::ControlledAdd { n } => controlled_add(square_from_hint(n)?)?,
            GateSpec::Cartan(c) => cartan_gate(*c),
            GateSpec::Diagonal { eps, dims, seed: own } => {
                let mut rng = rng_from(seed(own)?, &[party::GATE]);
                diagonal_interaction(dims_from_hint(dims), *eps, &mut rng)?
            }
            GateSpec::Haar { dims, seed: own } => haar_gate(dims_from_hint(dims), &mut rng_from(seed(own)?, &[party::GATE])),
            GateSpec::ControlledUnitary { n, rank, seed: own } => {
                let n = square_from_hint(n)?;
                let ub = haar_unitary(n, &mut rng_from(seed(own)?, &[party::B]));
                controlled_unitary(n, rank.unwrap_or(n / 2), &ub)?
            }
            GateSpec::File { path } => crate::io::read_matrix_file(path)?,
        };
        if let Some(h) = hint {
            if op.dims() != h {
                return Err(Error::DimensionMismatch(format!(
                    "gate {} acts on {}, but dims {h} were requested",
                    self.render(),
                    op.dims()
                )));
            }
        }
        op.check_unitary()?;
        Ok(op)
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

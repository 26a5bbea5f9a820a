//! Rate functions `φ: ℕ → ℝ+` and their log-ratio limits
//! `γ = limsup φ(n)/log n`, `δ = liminf φ(n)/log n` (natural log).

mod parser;

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub use parser::Node;

use crate::bigmath::ln_big;
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;

/// A point `n` carried together with `ln n`, so that forms built from
/// `log n` stay finite for `n` far beyond `f64` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arg {
    pub n: f64,
    pub ln_n: f64,
}

impl Arg {
    pub fn from_u64(n: u64) -> Self {
        let nf = n as f64;
        Arg { n: nf, ln_n: nf.ln() }
    }

    pub fn from_big(n: &BigUint) -> Self {
        Arg { n: n.to_f64().unwrap_or(f64::INFINITY), ln_n: ln_big(n) }
    }

    /// The (generally non-integer) point `e^t`.
    pub fn from_ln(t: f64) -> Self {
        Arg { n: t.exp(), ln_n: t }
    }
}

#[derive(Clone, Debug)]
pub struct PhiExpr {
    source: String,
    node: Node,
}

impl PhiExpr {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn node(&self) -> &Node {
        &self.node
    }
}

impl PartialEq for PhiExpr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

/// How a [`PhiSpec::Table`] continues past its last entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Continue with the slope of the last two entries.
    #[default]
    Linear,
    /// Hold the last value.
    Constant,
}

/// A monotone rate function whose `φ(n)/log n` oscillates between `δ` and `γ`.
///
/// In `t = log n`, odd block boundaries `t_0 < t_1 < ⋯` start at
/// `t_0 = log 4` and grow by `max(growth, g_j/δ)`, where `g_j` is the ratio
/// targeted at boundary `j` (`γ`, or `max(δ,1)·(j+2)` when `γ = ∞`). Then
///
/// ```text
/// φ(e^t) = max(δ·t, g_j·t_j)    for t_j ≤ t < t_{j+1}
/// φ(e^t) = δ·t                  for t < t_0
/// ```
///
/// so the ratio jumps to `g_j` at `t_j` and decays back to `δ` before
/// `t_{j+1}`. With the default growth 4 the boundaries are `a_{2k+1}` of
/// `a_k = 2^{2^k}`, i.e. `n = 4, 256, 2^32, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscLog {
    delta: f64,
    gamma: ExtReal,
    growth: f64,
}

impl OscLog {
    pub const DEFAULT_GROWTH: f64 = 4.0;

    pub fn new(delta: f64, gamma: ExtReal) -> Result<Self> {
        OscLog::with_growth(delta, gamma, OscLog::DEFAULT_GROWTH)
    }

    pub fn with_growth(delta: f64, gamma: ExtReal, growth: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Invalid(format!("OscLog needs 0 < δ < ∞, got {delta}")));
        }
        if gamma < ExtReal::Finite(delta) {
            return Err(Error::Invalid(format!("OscLog needs γ ≥ δ, got γ={gamma}, δ={delta}")));
        }
        if !(growth > 1.0 && growth.is_finite()) {
            return Err(Error::Invalid(format!("OscLog block growth must exceed 1, got {growth}")));
        }
        Ok(OscLog { delta, gamma, growth })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> ExtReal {
        self.gamma
    }

    fn level(&self, j: usize) -> f64 {
        match self.gamma {
            ExtReal::Finite(g) => g,
            ExtReal::Infinity => self.delta.max(1.0) * (j as f64 + 2.0),
        }
    }

    /// Odd block boundaries `(t_j, g_j)` with `t_j ≤ t_max`, plus the first one beyond.
    pub fn boundaries(&self, t_max: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut t = 2.0 * std::f64::consts::LN_2;
        let mut j = 0;
        loop {
            let g = self.level(j);
            out.push((t, g));
            if t > t_max || !t.is_finite() {
                return out;
            }
            t *= self.growth.max(g / self.delta);
            j += 1;
        }
    }

    fn value(&self, t: f64) -> f64 {
        let mut floor = 0.0;
        for (tj, g) in self.boundaries(t) {
            if tj > t {
                break;
            }
            floor = g * tj;
        }
        (self.delta * t).max(floor)
    }

    fn scaled(&self, c: f64) -> OscLog {
        OscLog { delta: self.delta * c, gamma: self.gamma.scale(c), growth: self.growth }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiWire", into = "PhiWire")]
pub enum PhiSpec {
    /// `c · n^a · (log n)^b`
    PowerLog { c: f64, a: f64, b: f64 },
    /// `log n`
    LogN,
    Expr(PhiExpr),
    /// `values[k]` is `φ(k+1)`.
    Table { values: Vec<f64>, extension: Extension },
    OscLog(OscLog),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Estimated { horizon: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaDelta {
    pub gamma: ExtReal,
    pub delta: ExtReal,
    pub provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "n", rename_all = "snake_case")]
pub enum Monotonicity {
    Ok,
    /// First `n` with `φ(n+1) < φ(n)`.
    Violation(u64),
}

/// Parses an expression in `n` and normalizes `c·n^a·(log n)^b` products.
pub fn parse_phi(text: &str) -> Result<PhiSpec> {
    let node = parser::parse(text)?;
    let spec = match node.as_power_log() {
        Some((c, a, b)) if c == 1.0 && a == 0.0 && b == 1.0 => PhiSpec::LogN,
        Some((c, a, b)) if c > 0.0 && a >= 0.0 && c.is_finite() => PhiSpec::PowerLog { c, a, b },
        _ => PhiSpec::Expr(PhiExpr { source: text.trim().to_string(), node }),
    };
    let at2 = spec.raw(Arg::from_u64(2));
    if at2.is_nan() || at2 <= 0.0 {
        return Err(Error::Domain(format!("φ(2) = {at2} is not positive for '{}'", text.trim())));
    }
    Ok(spec)
}

impl PhiSpec {
    pub fn table(values: Vec<f64>, extension: Extension) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("empty φ table".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("table entry {v} is not a positive real")));
        }
        Ok(PhiSpec::Table { values, extension })
    }

    pub fn power_log(c: f64, a: f64, b: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || a < 0.0 {
            return Err(Error::Invalid(format!("PowerLog needs c > 0 and a ≥ 0, got c={c}, a={a}")));
        }
        Ok(PhiSpec::PowerLog { c, a, b })
    }

    fn log_based(&self) -> bool {
        match self {
            PhiSpec::LogN | PhiSpec::OscLog(_) => true,
            PhiSpec::PowerLog { b, .. } => *b != 0.0,
            PhiSpec::Expr(e) => e.node.contains_log(),
            PhiSpec::Table { .. } => false,
        }
    }

    /// The defining formula, with no special handling of `n = 1`.
    fn raw(&self, arg: Arg) -> f64 {
        match self {
            PhiSpec::LogN => arg.ln_n,
            PhiSpec::PowerLog { c, a, b } => {
                let pow = if *a == 0.0 {
                    1.0
                } else if arg.n.is_finite() {
                    arg.n.powf(*a)
                } else {
                    (a * arg.ln_n).exp()
                };
                let log = if *b == 0.0 { 1.0 } else { arg.ln_n.powf(*b) };
                c * pow * log
            }
            PhiSpec::Expr(e) => e.node.eval(arg.n, arg.ln_n),
            PhiSpec::Table { values, extension } => {
                let len = values.len() as f64;
                if arg.n <= len {
                    return values[(arg.n.round() as usize).max(1) - 1];
                }
                let last = values[values.len() - 1];
                match extension {
                    Extension::Constant => last,
                    Extension::Linear if values.len() >= 2 => {
                        let slope = last - values[values.len() - 2];
                        last + (arg.n - len) * slope
                    }
                    Extension::Linear => last,
                }
            }
            PhiSpec::OscLog(o) => o.value(arg.ln_n),
        }
    }

    /// `φ(n)`. Log-based forms take `φ(1) := φ(2)/2`.
    pub fn eval_arg(&self, arg: Arg) -> Result<f64> {
        let v = if arg.ln_n == 0.0 && self.log_based() {
            self.raw(Arg::from_u64(2)) / 2.0
        } else {
            self.raw(arg)
        };
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Domain(format!("φ({}) = {v} is not positive", arg.n)))
        }
    }

    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("φ is defined on n ≥ 1".into()));
        }
        self.eval_arg(Arg::from_u64(n))
    }

    /// [`PhiSpec::eval`] for arguments beyond `u64`.
    pub fn eval_wide(&self, n: u128) -> Result<f64> {
        match u64::try_from(n) {
            Ok(small) => self.eval(small),
            Err(_) => self.eval_big(&BigUint::from(n)),
        }
    }

    pub fn eval_big(&self, n: &BigUint) -> Result<f64> {
        match n.to_u64() {
            Some(v) => self.eval(v),
            None => self.eval_arg(Arg::from_big(n)),
        }
    }

    /// `φ(n)/log n`.
    pub fn log_ratio(&self, arg: Arg) -> Result<f64> {
        Ok(self.eval_arg(arg)? / arg.ln_n)
    }

    /// `γ` and `δ`: closed form where known, otherwise the running sup/inf of
    /// `φ(n)/log n` over `[horizon/10, horizon]`.
    pub fn gamma_delta(&self, horizon: u64) -> GammaDelta {
        let analytic = |gamma, delta| GammaDelta { gamma, delta, provenance: Provenance::Analytic };
        match self {
            PhiSpec::LogN => analytic(ExtReal::ONE, ExtReal::ONE),
            PhiSpec::PowerLog { c, a, b } => {
                let v = if *a > 0.0 || *b > 1.0 {
                    ExtReal::INF
                } else if *b == 1.0 {
                    ExtReal::Finite(*c)
                } else {
                    ExtReal::ZERO
                };
                analytic(v, v)
            }
            PhiSpec::OscLog(o) => analytic(o.gamma, ExtReal::Finite(o.delta)),
            PhiSpec::Expr(_) | PhiSpec::Table { .. } => self.estimate_gamma_delta(horizon),
        }
    }

    fn estimate_gamma_delta(&self, horizon: u64) -> GammaDelta {
        let horizon = horizon.max(100);
        let lo = (horizon / 10).max(2);
        let span = horizon - lo + 1;
        const MAX_SAMPLES: u64 = 1_000_000;
        let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut visit = |n: u64| {
            if let Ok(r) = self.log_ratio(Arg::from_u64(n)) {
                sup = sup.max(r);
                inf = inf.min(r);
            }
        };
        if span <= MAX_SAMPLES {
            (lo..=horizon).for_each(&mut visit);
        } else {
            let (a, b) = ((lo as f64).ln(), (horizon as f64).ln());
            for k in 0..MAX_SAMPLES {
                let t = a + (b - a) * k as f64 / (MAX_SAMPLES - 1) as f64;
                visit(t.exp().round() as u64);
            }
        }
        let clamp = |x: f64| ExtReal::new(x.max(0.0)).unwrap_or(ExtReal::ZERO);
        GammaDelta {
            gamma: clamp(sup),
            delta: clamp(inf.min(sup)),
            provenance: Provenance::Estimated { horizon },
        }
    }

    /// Checks `φ(n+1) ≥ φ(n)` for `2 ≤ n < horizon`.
    pub fn validate_monotone(&self, horizon: u64) -> Result<Monotonicity> {
        if horizon < 2 {
            return Err(Error::Invalid(format!("monotonicity horizon must be ≥ 2, got {horizon}")));
        }
        let mut prev = self.eval(2)?;
        for n in 2..horizon {
            let next = self.eval(n + 1)?;
            if next < prev {
                return Ok(Monotonicity::Violation(n));
            }
            prev = next;
        }
        Ok(Monotonicity::Ok)
    }

    /// `c · φ`.
    pub fn scaled(&self, c: f64) -> Result<PhiSpec> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Invalid(format!("scale factor must be finite and positive, got {c}")));
        }
        Ok(match self {
            PhiSpec::LogN => PhiSpec::PowerLog { c, a: 0.0, b: 1.0 },
            PhiSpec::PowerLog { c: c0, a, b } => PhiSpec::PowerLog { c: c0 * c, a: *a, b: *b },
            PhiSpec::OscLog(o) => PhiSpec::OscLog(o.scaled(c)),
            PhiSpec::Table { values, extension } => PhiSpec::Table {
                values: values.iter().map(|v| v * c).collect(),
                extension: *extension,
            },
            PhiSpec::Expr(e) => PhiSpec::Expr(PhiExpr {
                source: format!("{c}*({})", e.source),
                node: Node::Mul(Box::new(Node::Num(c)), Box::new(e.node.clone())),
            }),
        })
    }

    /// Points in `[t_lo, t_hi]` (in `log n`) where `φ(n)/log n` is extremal.
    /// Witness searches try these before falling back to a grid.
    pub fn ratio_extremes(&self, t_lo: f64, t_hi: f64) -> Vec<f64> {
        let PhiSpec::OscLog(o) = self else { return Vec::new() };
        let mut out = Vec::new();
        for (tj, _) in o.boundaries(t_hi) {
            if tj >= t_lo && tj <= t_hi {
                out.push(tj);
                // just below the boundary the ratio is closest to δ
                let below = tj * (1.0 - 1e-9);
                if below >= t_lo {
                    out.push(below);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSpec::LogN => f.write_str("log(n)"),
            PhiSpec::PowerLog { c, a, b } => {
                let mut parts = Vec::new();
                if *c != 1.0 || (*a == 0.0 && *b == 0.0) {
                    parts.push(format!("{c}"));
                }
                if *a != 0.0 {
                    parts.push(if *a == 1.0 { "n".into() } else { format!("n^{a}") });
                }
                if *b != 0.0 {
                    parts.push(if *b == 1.0 { "log(n)".into() } else { format!("log(n)^{b}") });
                }
                f.write_str(&parts.join("*"))
            }
            PhiSpec::Expr(e) => f.write_str(&e.source),
            PhiSpec::Table { values, extension } => {
                write!(f, "table[{} entries, {:?} extension]", values.len(), extension)
            }
            PhiSpec::OscLog(o) => write!(f, "osc-log(delta={}, gamma={})", o.delta, o.gamma),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PhiWire {
    PowerLog { c: f64, a: f64, b: f64 },
    LogN,
    Expr { source: String },
    Table { values: Vec<f64>, #[serde(default)] extension: Extension },
    OscLog { delta: f64, gamma: ExtReal, #[serde(default = "default_growth")] growth: f64 },
}

fn default_growth() -> f64 {
    OscLog::DEFAULT_GROWTH
}

impl From<PhiSpec> for PhiWire {
    fn from(p: PhiSpec) -> Self {
        match p {
            PhiSpec::PowerLog { c, a, b } => PhiWire::PowerLog { c, a, b },
            PhiSpec::LogN => PhiWire::LogN,
            PhiSpec::Expr(e) => PhiWire::Expr { source: e.source },
            PhiSpec::Table { values, extension } => PhiWire::Table { values, extension },
            PhiSpec::OscLog(o) => PhiWire::OscLog { delta: o.delta, gamma: o.gamma, growth: o.growth },
        }
    }
}

impl TryFrom<PhiWire> for PhiSpec {
    type Error = Error;

    fn try_from(w: PhiWire) -> Result<Self> {
        match w {
            PhiWire::PowerLog { c, a, b } => PhiSpec::power_log(c, a, b),
            PhiWire::LogN => Ok(PhiSpec::LogN),
            PhiWire::Expr { source } => {
                let node = parser::parse(&source)?;
                Ok(PhiSpec::Expr(PhiExpr { source, node }))
            }
            PhiWire::Table { values, extension } => PhiSpec::table(values, extension),
            PhiWire::OscLog { delta, gamma, growth } => {
                Ok(PhiSpec::OscLog(OscLog::with_growth(delta, gamma, growth)?))
            }
        }
    }
}

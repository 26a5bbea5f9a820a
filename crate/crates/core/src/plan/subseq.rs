//! Auxiliary subsequences feeding the case constructions.
//!
//! [`build_subseq1`] interpolates between witnesses of `γ` and `δ` so that
//! `log n_{i+1}/log n_i → C`; [`build_subseq2_i`] and [`build_subseq2_ii`]
//! pick terms on which `φ` grows by bounded steps.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::PlanCaps;
use crate::bigmath::{ceil_exp, ceil_exp_exp, ln_big, round_pow_ln};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::phi::{Arg, PhiSpec};

/// Margin added to strict lower bounds on `log n` before searching.
const STRICT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// `|φ(n)/log n − γ| < 1/k` (or `> k` when `γ = ∞`).
    Gamma,
    /// The same for `δ`, evaluated at `n + 1`.
    Delta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubseqTerm {
    #[serde(with = "crate::bigmath::decimal")]
    pub n: BigUint,
    pub ln_n: f64,
    /// Index `k` of the block that produced this term.
    pub stage: u64,
    /// `log r_i / log r_{i−1}` for the interpolation points `r`.
    pub log_step: Option<f64>,
    pub witness: Option<Witness>,
}

/// Output of [`build_subseq1`]; `truncated` records why it stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct Subseq {
    pub terms: Vec<SubseqTerm>,
    pub truncated: Option<Error>,
}

impl Subseq {
    /// Converts early termination into an error.
    pub fn complete(self) -> Result<Self> {
        match self.truncated {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Output of the bounded-step builders: the driving sequence `n` and the selected `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subseq2 {
    pub n: Vec<u128>,
    pub m: Vec<u128>,
}

struct Budget {
    left: u64,
    cap: u64,
}

impl Budget {
    fn new(cap: u64) -> Self {
        Budget { left: cap, cap }
    }

    fn spend(&mut self, what: impl FnOnce() -> String) -> Result<()> {
        if self.left == 0 {
            return Err(Error::SearchCap { what: what(), cap: self.cap });
        }
        self.left -= 1;
        Ok(())
    }
}

/// Smallest integer `n ≥ e^{t_min}` found on a geometric grid in `log n`
/// (plus any extremal points `phi` reports) with `accept(φ(n + shift), log(n + shift))`.
fn search_witness(
    phi: &PhiSpec,
    t_min: f64,
    grid_step: f64,
    shift: u32,
    accept: impl Fn(f64, f64) -> bool,
    caps: &PlanCaps,
    what: impl Fn() -> String,
) -> Result<(BigUint, f64)> {
    let t_max = caps.max_digits as f64 * std::f64::consts::LN_10;
    if t_min > t_max {
        return Err(Error::DigitCap { digits: crate::bigmath::digits_for_ln(t_min), cap: caps.max_digits });
    }
    let hints = phi.ratio_extremes(t_min, t_max);
    let mut hints = hints.into_iter().peekable();
    let mut budget = Budget::new(caps.search_evals);
    let mut t = t_min;
    loop {
        let next = t * (1.0 + grid_step);
        let mut candidates = vec![t];
        while let Some(&h) = hints.peek() {
            if h >= next {
                break;
            }
            if h > t {
                candidates.push(h);
            }
            hints.next();
        }
        for c in candidates {
            budget.spend(&what)?;
            let n = ceil_exp(c, caps.max_digits)?;
            let probe = &n + shift;
            let ln_probe = ln_big(&probe);
            let Ok(value) = phi.eval_big(&probe) else { continue };
            if accept(value, ln_probe) {
                let ln_n = ln_big(&n);
                return Ok((n, ln_n));
            }
        }
        if next > t_max {
            return Err(Error::DigitCap {
                digits: crate::bigmath::digits_for_ln(next),
                cap: caps.max_digits,
            });
        }
        t = next;
    }
}

fn overflow(what: String) -> Error {
    Error::SearchCap { what: format!("{what} inside the 128-bit range"), cap: u64::MAX }
}

fn target_check(target: ExtReal, k: u64) -> impl Fn(f64, f64) -> bool {
    move |value, ln_n| {
        let ratio = value / ln_n;
        match target {
            ExtReal::Finite(g) => (ratio - g).abs() < 1.0 / k as f64,
            ExtReal::Infinity => ratio > k as f64,
        }
    }
}

fn witness_search(
    phi: &PhiSpec,
    which: Witness,
    target: ExtReal,
    k: u64,
    t_min: f64,
    caps: &PlanCaps,
) -> Result<(BigUint, f64)> {
    let shift = match which {
        Witness::Gamma => 0,
        Witness::Delta => 1,
    };
    let what = || format!("{which:?} witness at k = {k} (log n ≥ {t_min:.6})").to_lowercase();
    search_witness(phi, t_min, 1.0 / (8.0 * k as f64), shift, target_check(target, k), caps, what)
}

/// A sequence with `limsup φ(n_i)/log n_i = γ`, `liminf φ(n_i+1)/log(n_i+1) = δ`
/// and `log n_{i+1}/log n_i → C`, built in blocks that alternate between a
/// `γ`-witness and a `δ`-witness.
///
/// For `C > 1`, block `k` picks a witness `m` with
/// `log log m ≥ log log n_k + k log C`, sets
/// `d = ⌊(log log m − log log n_k)/log C⌋` and fills
/// `n_{k+j} = ⌈r_{k+j}⌉` with `log log r` linear in `j`, ending at `m`.
/// For `C = 1`, block `k` picks `m` with `log m ≥ (k+1)²`, sets
/// `d = ⌊√(log m) − k⌋` and fills `n_{k+j} = ⌈e^{(k+j)²}⌉`, ending at `m`.
///
/// Both start from `n_1 = 3`. On hitting the digit or search cap the terms
/// found so far are returned with `truncated` set.
pub fn build_subseq1(phi: &PhiSpec, c: f64, gamma: ExtReal, delta: ExtReal, horizon: usize, caps: &PlanCaps) -> Subseq {
    let mut terms = vec![SubseqTerm {
        n: BigUint::from(3u32),
        ln_n: 3f64.ln(),
        stage: 1,
        log_step: None,
        witness: None,
    }];
    let truncated = if !(c >= 1.0 && c.is_finite()) {
        Some(Error::Invalid(format!("ratio constant C must be ≥ 1, got {c}")))
    } else {
        let mut which = Witness::Gamma;
        loop {
            if terms.len() >= horizon {
                break None;
            }
            let target = match which {
                Witness::Gamma => gamma,
                Witness::Delta => delta,
            };
            let block = if c > 1.0 {
                block_geometric(phi, c, which, target, &terms, caps)
            } else {
                block_square(phi, which, target, &terms, caps)
            };
            match block {
                Ok(block) => terms.extend(block),
                Err(e) => break Some(e),
            }
            which = match which {
                Witness::Gamma => Witness::Delta,
                Witness::Delta => Witness::Gamma,
            };
        }
    };
    terms.truncate(horizon.max(1));
    Subseq { terms, truncated }
}

fn block_geometric(
    phi: &PhiSpec,
    c: f64,
    which: Witness,
    target: ExtReal,
    terms: &[SubseqTerm],
    caps: &PlanCaps,
) -> Result<Vec<SubseqTerm>> {
    let k = terms.len() as u64;
    let start = terms.last().expect("nonempty");
    let lnc = c.ln();
    let t_min = start.ln_n * c.powf(k as f64) * (1.0 + STRICT);
    let (m, ln_m) = witness_search(phi, which, target, k, t_min, caps)?;
    let (a, b) = (start.ln_n.ln(), ln_m.ln());
    let d = (((b - a) / lnc).floor() as u64).max(k);
    let mut out = Vec::with_capacity(d as usize);
    let mut prev_ln_r = start.ln_n;
    for j in 1..=d {
        let v = a + (j as f64 / d as f64) * (b - a);
        let (n, ln_n) = if j == d {
            (m.clone(), ln_m)
        } else {
            let n = ceil_exp_exp(v, caps.max_digits)?;
            let ln = ln_big(&n);
            (n, ln)
        };
        let ln_r = if j == d { ln_m } else { v.exp() };
        out.push(SubseqTerm {
            n,
            ln_n,
            stage: k,
            log_step: Some(ln_r / prev_ln_r),
            witness: (j == d).then_some(which),
        });
        prev_ln_r = ln_r;
    }
    Ok(out)
}

fn block_square(
    phi: &PhiSpec,
    which: Witness,
    target: ExtReal,
    terms: &[SubseqTerm],
    caps: &PlanCaps,
) -> Result<Vec<SubseqTerm>> {
    let k = terms.len() as u64;
    let t_min = ((k + 1) * (k + 1)) as f64 * (1.0 + STRICT);
    let (m, ln_m) = witness_search(phi, which, target, k, t_min, caps)?;
    let d = ((ln_m.sqrt() - k as f64).floor() as u64).max(1);
    let mut out = Vec::with_capacity(d as usize);
    for j in 1..d {
        let e = ((k + j) * (k + j)) as f64;
        let n = ceil_exp(e, caps.max_digits)?;
        let ln_n = ln_big(&n);
        out.push(SubseqTerm { n, ln_n, stage: k, log_step: None, witness: None });
    }
    out.push(SubseqTerm { n: m, ln_n: ln_m, stage: k, log_step: None, witness: Some(which) });
    Ok(out)
}

/// `min{n > from : φ(n) > level}` by doubling then bisection.
fn next_above(phi: &PhiSpec, from: u128, level: f64, budget: &mut Budget) -> Result<u128> {
    let what = || format!("min n with φ(n) > {level} above {from}");
    let mut lo = from;
    let mut step = 1u128;
    let mut hi = loop {
        budget.spend(what)?;
        let hi = from.checked_add(step).ok_or_else(|| overflow(what()))?;
        if phi.eval_wide(hi)? > level {
            break hi;
        }
        lo = hi;
        step = step.checked_mul(2).ok_or_else(|| overflow(what()))?;
    };
    while hi - lo > 1 {
        budget.spend(what)?;
        let mid = lo + (hi - lo) / 2;
        if phi.eval_wide(mid)? > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn select_m(phi: &PhiSpec, n: &[u128]) -> Result<Vec<u128>> {
    n.windows(2)
        .map(|w| Ok(if phi.eval_wide(w[1])? - phi.eval_wide(w[0])? <= 2.0 { w[0] } else { w[1] - 1 }))
        .collect()
}

fn subseq2(phi: &PhiSpec, horizon: usize, caps: &PlanCaps, log_jump: bool) -> (Subseq2, Option<Error>) {
    let mut budget = Budget::new(caps.search_evals);
    let mut n = vec![3u128];
    let mut stop = None;
    while n.len() <= horizon {
        let cur = *n.last().expect("nonempty");
        let step = (|| -> Result<u128> {
            let level = phi.eval_wide(cur)? + 1.0;
            if log_jump {
                let jump = round_pow_ln(&BigUint::from(cur), 1.0, 1.0, true, caps.max_digits)?
                    .to_u128()
                    .ok_or_else(|| overflow(format!("⌈n log n⌉ for n = {cur}")))?;
                if phi.eval_wide(jump)? <= level {
                    return Ok(jump);
                }
            }
            next_above(phi, cur, level, &mut budget)
        })();
        match step {
            Ok(next) => n.push(next),
            Err(e) => {
                stop = Some(e);
                break;
            }
        }
    }
    let m = select_m(phi, &n);
    match m {
        Ok(m) => (Subseq2 { n, m }, stop),
        Err(e) => (Subseq2 { n, m: Vec::new() }, Some(e)),
    }
}

/// `n_1 = 3`, `n_{i+1} = min{n : φ(n) > φ(n_i) + 1}`, and
/// `m_i = n_i` if `φ(n_{i+1}) − φ(n_i) ≤ 2`, else `n_{i+1} − 1`.
///
/// The result satisfies `φ(m_{i+1}) − φ(m_i + 1) ≤ 3` and `φ(m_{i+1}) − φ(m_i) > 1`.
pub fn build_subseq2_i(phi: &PhiSpec, horizon: usize, caps: &PlanCaps) -> Result<Subseq2> {
    match subseq2(phi, horizon, caps, false) {
        (s, None) => Ok(s),
        (_, Some(e)) => Err(e),
    }
}

/// As [`build_subseq2_i`], but `n_{i+1} = ⌈n_i log n_i⌉` whenever that does
/// not raise `φ` by more than 1.
pub fn build_subseq2_ii(phi: &PhiSpec, horizon: usize, caps: &PlanCaps) -> Result<Subseq2> {
    match subseq2(phi, horizon, caps, true) {
        (s, None) => Ok(s),
        (_, Some(e)) => Err(e),
    }
}

/// Partial variants used by the planner: whatever was built before a cap hit.
pub(crate) fn subseq2_partial(phi: &PhiSpec, horizon: usize, caps: &PlanCaps, log_jump: bool) -> (Subseq2, Option<Error>) {
    subseq2(phi, horizon, caps, log_jump)
}

/// Smallest `n ≥ e^{t_min}` accepted by `accept(φ(n), log n)`, used by case (ii).
pub(crate) fn search_where(
    phi: &PhiSpec,
    t_min: f64,
    grid_step: f64,
    accept: impl Fn(f64, f64) -> bool,
    caps: &PlanCaps,
    what: impl Fn() -> String,
) -> Result<(BigUint, f64)> {
    search_witness(phi, t_min * (1.0 + STRICT), grid_step, 0, accept, caps, what)
}

/// `φ(n)/log n` for a big integer.
pub(crate) fn ratio_at(phi: &PhiSpec, n: &BigUint) -> Result<f64> {
    phi.log_ratio(Arg::from_big(n))
}

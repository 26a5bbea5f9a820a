//! Recurrence-rate trajectories `log R_n / φ(n)`, finite-window estimates of
//! their liminf and limsup, close-return witnesses, and box-counting
//! dimension fits.

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::bigmath::{decimal, ln_big};
use crate::cantor::InsertionPlan;
use crate::error::{Error, Result};
use crate::phi::PhiSpec;
use crate::return_time::{return_times_all, ReturnTime};
use crate::shift::{distance, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// `R` is the return time.
    Exact,
    /// The return time is at least `R`; `ratio` is a lower bound.
    AtLeast,
}

/// One point `(n, R_n, log R_n / φ(n))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    #[serde(with = "decimal")]
    pub n: BigUint,
    #[serde(rename = "R", with = "decimal")]
    pub r: BigUint,
    pub ratio: f64,
    pub kind: RateKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Return times observed on a materialized word.
    Word,
    /// Return times predicted by an insertion plan.
    Plan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTrajectory {
    pub source: RateSource,
    pub entries: Vec<RateEntry>,
}

/// Which `n` a plan-level trajectory visits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanSampling {
    /// The upper end `n_{i+1}` of every certified bracket.
    Breakpoints,
    /// Every certified `n` in the range.
    Range(RangeInclusive<u64>),
}

fn ratio(phi: &PhiSpec, n: &BigUint, r: &BigUint) -> Result<f64> {
    let value = phi.eval_big(n)?;
    if value <= 0.0 {
        return Err(Error::Domain(format!("φ({n}) = {value} is not positive")));
    }
    Ok(ln_big(r) / value)
}

impl RateTrajectory {
    /// Trajectory of a finite word over `n_range`, which must lie in `1..=|w|`.
    /// Return times not settled by the word enter as [`RateKind::AtLeast`].
    pub fn from_word(w: &Word, phi: &PhiSpec, n_range: RangeInclusive<u64>) -> Result<Self> {
        if n_range.is_empty() {
            return Err(Error::Invalid("empty n range".into()));
        }
        let len = w.len() as u64;
        if *n_range.start() == 0 || *n_range.end() > len {
            return Err(Error::OutOfRange { index: *n_range.end().max(n_range.start()), len });
        }
        let all = return_times_all(w);
        let entries = n_range
            .map(|n| {
                let (r, kind) = match all[n as usize - 1] {
                    ReturnTime::Exact(j) => (j, RateKind::Exact),
                    ReturnTime::LowerBound(j) => (j + 1, RateKind::AtLeast),
                };
                let (n, r) = (BigUint::from(n), BigUint::from(r));
                Ok(RateEntry { ratio: ratio(phi, &n, &r)?, n, r, kind })
            })
            .collect::<Result<_>>()?;
        Ok(RateTrajectory { source: RateSource::Word, entries })
    }

    /// Trajectory predicted by `plan` on its certified brackets.
    pub fn from_plan(plan: &InsertionPlan, phi: &PhiSpec, sampling: PlanSampling) -> Result<Self> {
        let brackets = plan.certified_brackets();
        let mut entries = Vec::new();
        match sampling {
            PlanSampling::Breakpoints => {
                for b in &brackets {
                    entries.push(RateEntry {
                        ratio: ratio(phi, &b.hi, &b.ell)?,
                        n: b.hi.clone(),
                        r: b.ell.clone(),
                        kind: RateKind::Exact,
                    });
                }
            }
            PlanSampling::Range(range) => {
                for n in range {
                    let n = BigUint::from(n);
                    let Some(b) = brackets.iter().find(|b| b.lo < n && n <= b.hi) else { continue };
                    entries.push(RateEntry {
                        ratio: ratio(phi, &n, &b.ell)?,
                        r: b.ell.clone(),
                        n,
                        kind: RateKind::Exact,
                    });
                }
            }
        }
        if entries.is_empty() {
            return Err(Error::Invalid("no certified n in the requested range".into()));
        }
        Ok(RateTrajectory { source: RateSource::Plan, entries })
    }
}

/// Finite-window estimates of `liminf` and `limsup` of the ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// Number of trailing entries inspected.
    pub window: usize,
    pub exact: usize,
    pub bounds: usize,
}

/// Infimum and supremum of the ratios in the final `tail_fraction` of `traj`.
///
/// Lower-bound entries are left out of the infimum and count toward the
/// supremum, since the true ratio there is at least the recorded one.
pub fn running_extremes(traj: &RateTrajectory, tail_fraction: f64) -> Result<RateEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Invalid(format!("tail fraction must be in (0, 1], got {tail_fraction}")));
    }
    let len = traj.entries.len();
    if len == 0 {
        return Err(Error::Estimation("empty trajectory".into()));
    }
    let window = ((len as f64 * tail_fraction).ceil() as usize).clamp(1, len);
    let tail = &traj.entries[len - window..];
    let exact: Vec<f64> = tail.iter().filter(|e| e.kind == RateKind::Exact).map(|e| e.ratio).collect();
    if exact.is_empty() {
        return Err(Error::Estimation(format!("all {window} entries in the window are lower bounds")));
    }
    let alpha_hat = exact.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_hat = tail.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(RateEstimate { alpha_hat, beta_hat, window, exact: exact.len(), bounds: window - exact.len() })
}

/// A length `n` whose return is fast: `R_n < n^s` with `s = α + ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloseReturn {
    pub n: u64,
    #[serde(rename = "R")]
    pub r: u64,
    /// Common-prefix length of `x` and `σ^R x` within the word.
    pub agreement: u64,
    /// Whether `d(σ^R x, x) < m^{−R^{1/s}}` held on direct comparison.
    pub rechecked: bool,
}

/// Every `n ≤ |w|` with exact `R_n < n^{α+ε}`, each rechecked against the
/// distance between `w` and its shift by `R_n`.
pub fn close_return_witnesses(w: &Word, alpha: f64, eps: f64) -> Result<Vec<CloseReturn>> {
    let s = alpha + eps;
    if !(alpha >= 0.0 && eps > 0.0 && s < 1.0) {
        return Err(Error::Invalid(format!("need α ≥ 0, ε > 0 and α + ε < 1, got α = {alpha}, ε = {eps}")));
    }
    let all = return_times_all(w);
    let len = w.len();
    let mut out = Vec::new();
    for (k, rt) in all.iter().enumerate() {
        let n = k as u64 + 1;
        let Some(r) = rt.exact() else { continue };
        if (r as f64) >= (n as f64).powf(s) {
            continue;
        }
        let head = w.prefix(len - r as usize)?;
        let shifted = w.shifted(r as usize);
        let agreement = distance(&shifted, &head)?.agreement() as u64;
        let rechecked = agreement >= n && agreement as f64 > (r as f64).powf(1.0 / s);
        out.push(CloseReturn { n, r, agreement, rechecked });
    }
    Ok(out)
}

/// Least-squares fit of `log N_n` against `n log m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub estimate: f64,
    pub intercept: f64,
    pub depths: usize,
    /// All counts were equal; the estimate is 0 by convention.
    pub degenerate: bool,
}

/// Box-counting slope from `(depth, log N_depth)` pairs.
pub fn box_dimension(log_counts: &[(u64, f64)], m: u32) -> Result<DimensionFit> {
    if log_counts.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 depths, got {}", log_counts.len())));
    }
    if m < 2 {
        return Err(Error::AlphabetSize(m));
    }
    let depths = log_counts.len();
    let first = log_counts[0].1;
    if log_counts.iter().all(|&(_, y)| y == first) {
        return Ok(DimensionFit { estimate: 0.0, intercept: first, depths, degenerate: true });
    }
    let lnm = f64::from(m).ln();
    let k = depths as f64;
    let xs: Vec<f64> = log_counts.iter().map(|&(n, _)| n as f64 * lnm).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = log_counts.iter().map(|c| c.1).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, &(_, y)) in xs.iter().zip(log_counts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(Error::Invalid("all depths are equal".into()));
    }
    let estimate = sxy / sxx;
    Ok(DimensionFit { estimate, intercept: my - estimate * mx, depths, degenerate: false })
}

/// `(n, log N_n)` for the depth-`n` cylinders meeting `F_p`.
pub fn fp_log_counts(p: u32, m: u32, depths: impl IntoIterator<Item = u64>) -> Vec<(u64, f64)> {
    depths.into_iter().map(|n| (n, crate::cantor::fp_log_count(p, n, m))).collect()
}

//! The zero-one law for `dim_H E^φ_{α,β}` and the six constructions of
//! full-dimension insertion plans.
//!
//! `dim = 1` iff `α ≥ 1/γ` and `β ≥ 1/δ` (with `1/0 = ∞`, `1/∞ = 0`). When it
//! is 1, the target falls in exactly one of the cases
//!
//! | case | guard |
//! |------|-------|
//! | (i)   | `α = β = ∞` |
//! | (ii)  | `β = ∞`, `α < ∞` |
//! | (iii) | `A = B = ∞` |
//! | (iv)  | `A < B = ∞` |
//! | (v)   | `1 ≤ A ≤ B < ∞` |
//! | (vi)  | `B < A` |
//!
//! with `A`, `B` from [`compute_ab`].

mod cases;
pub mod subseq;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

pub use cases::rho_coefficients;
pub use subseq::{build_subseq1, build_subseq2_i, build_subseq2_ii, Subseq, Subseq2, SubseqTerm, Witness};

use crate::cantor::{CaseTag, InsertionPlan, PlanTerm};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::phi::{GammaDelta, PhiSpec, Provenance};
use crate::shift::Alphabet;

/// Limits on plan generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCaps {
    /// Largest decimal length of any `n_i` or `ℓ_i`.
    pub max_digits: u64,
    /// Evaluations of `φ` allowed per witness or subsequence search.
    pub search_evals: u64,
}

impl Default for PlanCaps {
    fn default() -> Self {
        PlanCaps { max_digits: 20_000, search_evals: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    /// Block length of the base point in `F_p`.
    pub p: u32,
    pub alphabet: Alphabet,
    pub caps: PlanCaps,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions { p: 3, alphabet: Alphabet::binary(), caps: PlanCaps::default() }
    }
}

/// `1` iff `α ≥ 1/γ` and `β ≥ 1/δ`, else `0`.
pub fn dichotomy(alpha: ExtReal, beta: ExtReal, gamma: ExtReal, delta: ExtReal) -> u8 {
    u8::from(alpha.at_least(gamma.recip()) && beta.at_least(delta.recip()))
}

fn table_entry(x: ExtReal, g: ExtReal, names: (&str, &str)) -> Result<ExtReal> {
    match (x, g) {
        (ExtReal::Finite(a), ExtReal::Finite(c)) if a > 0.0 && c > 0.0 => Ok(ExtReal::Finite(a * c)),
        (ExtReal::Finite(0.0), ExtReal::Infinity) => Ok(ExtReal::ONE),
        (ExtReal::Finite(_), ExtReal::Infinity) => Ok(ExtReal::INF),
        _ => Err(Error::OutsideCaseTable(format!("{} = {x}, {} = {g}", names.0, names.1))),
    }
}

/// `A` from `(α, γ)` and `B` from `(β, δ)`:
/// `αγ` when both are finite and positive, `1` for `(0, ∞)`, `∞` for `(>0, ∞)`.
pub fn compute_ab(alpha: ExtReal, beta: ExtReal, gamma: ExtReal, delta: ExtReal) -> Result<(ExtReal, ExtReal)> {
    Ok((table_entry(alpha, gamma, ("α", "γ"))?, table_entry(beta, delta, ("β", "δ"))?))
}

/// `(φ, α, β)` together with `φ`'s log-ratio limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileTarget {
    pub phi: PhiSpec,
    pub alpha: ExtReal,
    pub beta: ExtReal,
    pub gamma: ExtReal,
    pub delta: ExtReal,
    pub provenance: Provenance,
}

impl ProfileTarget {
    /// `horizon` bounds the estimation window when `γ`, `δ` have no closed form.
    pub fn new(phi: PhiSpec, alpha: ExtReal, beta: ExtReal, horizon: u64) -> Result<Self> {
        let gd = phi.gamma_delta(horizon);
        ProfileTarget::with_limits(phi, alpha, beta, gd)
    }

    pub fn with_limits(phi: PhiSpec, alpha: ExtReal, beta: ExtReal, gd: GammaDelta) -> Result<Self> {
        if alpha > beta {
            return Err(Error::Invalid(format!("need α ≤ β, got α = {alpha}, β = {beta}")));
        }
        if gd.delta > gd.gamma {
            return Err(Error::Estimation(format!("δ = {} exceeds γ = {}", gd.delta, gd.gamma)));
        }
        Ok(ProfileTarget { phi, alpha, beta, gamma: gd.gamma, delta: gd.delta, provenance: gd.provenance })
    }

    pub fn dimension(&self) -> u8 {
        dichotomy(self.alpha, self.beta, self.gamma, self.delta)
    }

    pub fn ab(&self) -> Result<(ExtReal, ExtReal)> {
        compute_ab(self.alpha, self.beta, self.gamma, self.delta)
    }

    pub fn classify(&self) -> Classification {
        let ab = self.ab().ok();
        let dimension = self.dimension();
        let case = if dimension == 1 { select_case(self).ok() } else { None };
        Classification {
            dimension,
            gamma: self.gamma,
            delta: self.delta,
            a: ab.map(|v| v.0),
            b: ab.map(|v| v.1),
            case,
            provenance: self.provenance,
        }
    }
}

/// The zero-one verdict with the quantities that decide it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub dimension: u8,
    pub gamma: ExtReal,
    pub delta: ExtReal,
    #[serde(rename = "A")]
    pub a: Option<ExtReal>,
    #[serde(rename = "B")]
    pub b: Option<ExtReal>,
    pub case: Option<CaseTag>,
    pub provenance: Provenance,
}

fn approx_eq(x: ExtReal, y: ExtReal) -> bool {
    x.at_least(y) && y.at_least(x)
}

/// Which construction applies, assuming the dimension is 1.
pub fn select_case(t: &ProfileTarget) -> Result<CaseTag> {
    let (alpha, beta) = (t.alpha, t.beta);
    if alpha.is_infinite() {
        return Ok(CaseTag::I);
    }
    if beta.is_infinite() {
        let gamma_ok = if alpha.is_zero() { t.gamma.is_infinite() } else { t.gamma.at_least(alpha.recip()) };
        if !gamma_ok {
            return Err(Error::OutsideCaseTable(format!("β = ∞ needs γ ≥ 1/α, got γ = {}, α = {alpha}", t.gamma)));
        }
        return Ok(CaseTag::Ii);
    }
    let (a, b) = t.ab()?;
    let guards = [
        (CaseTag::Iii, a.is_infinite() && b.is_infinite()),
        (CaseTag::Iv, b.is_infinite() && !a.is_infinite()),
        (CaseTag::V, !b.is_infinite() && a.at_least(ExtReal::ONE) && b.at_least(a)),
        (CaseTag::Vi, !b.at_least(a) && b.at_least(ExtReal::ONE)),
    ];
    let hits: Vec<CaseTag> = guards.iter().filter(|g| g.1).map(|g| g.0).collect();
    assert!(hits.len() <= 1, "case guards overlap: {hits:?} for A = {a}, B = {b}");
    hits.first()
        .copied()
        .ok_or_else(|| Error::OutsideCaseTable(format!("no case matches A = {a}, B = {b}")))
}

/// A plan whose realization lies in `E^φ_{α,β}`.
///
/// Terms that break `ℓ_{i+1} ≥ ℓ_i + n_i + 3` (the constructions only
/// guarantee it for large `i`) are raised to the bound and flagged
/// `repaired`. Generation stops at the first value exceeding the digit cap
/// or a failed search; the plan then carries `truncated`.
pub fn plan_full_dimension(target: &ProfileTarget, horizon: u64, opts: &PlanOptions) -> Result<InsertionPlan> {
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be ≥ 1".into()));
    }
    let dimension = target.dimension();
    if dimension == 0 {
        return Err(Error::DimensionZero(format!(
            "α = {}, β = {}, γ = {}, δ = {}: need α ≥ 1/γ and β ≥ 1/δ",
            target.alpha, target.beta, target.gamma, target.delta
        )));
    }
    let tag = select_case(target)?;
    let h = horizon as usize;
    let caps = &opts.caps;
    let (mut terms, stop) = match tag {
        CaseTag::I => cases::case_i(target, h, caps),
        CaseTag::Ii => cases::case_ii(target, h, caps),
        CaseTag::Iii => cases::case_iii(target, h, caps),
        CaseTag::Iv => cases::case_iv(target, h, caps),
        CaseTag::V => cases::case_v(target, h, caps),
        CaseTag::Vi => cases::case_vi(target, h, caps),
        CaseTag::Manual => unreachable!("select_case never returns Manual"),
    };
    repair_spacing(&mut terms);
    if terms.is_empty() {
        return Err(stop.unwrap_or_else(|| Error::InvalidPlan("no terms generated".into())));
    }
    let mut plan = InsertionPlan::new(opts.p, opts.alphabet, tag, terms)?;
    plan.horizon = horizon;
    plan.truncated = stop.map(|e| e.to_string());
    Ok(plan)
}

fn repair_spacing(terms: &mut [PlanTerm]) {
    for k in 1..terms.len() {
        let need: BigUint = &terms[k - 1].ell + &terms[k - 1].n + 3u32;
        if terms[k].ell < need {
            terms[k].ell = need;
            terms[k].repaired = true;
        }
    }
}

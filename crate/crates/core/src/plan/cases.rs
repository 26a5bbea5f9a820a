//! One builder per case. Each returns the terms it managed to produce and the
//! error that stopped it early, if any.

use num_bigint::BigUint;

use super::subseq::{build_subseq1, ratio_at, search_where, subseq2_partial};
use super::{approx_eq, PlanCaps, ProfileTarget};
use crate::bigmath::{ceil_exp, round_pow_ln};
use crate::cantor::PlanTerm;
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;

type Built = (Vec<PlanTerm>, Option<Error>);

fn finite(x: ExtReal, name: &str) -> Result<f64> {
    x.finite().ok_or_else(|| Error::OutsideCaseTable(format!("{name} must be finite here")))
}

/// `n_i = i`, `ℓ_i = max(⌈e^{iφ(i)}⌉, ℓ_{i−1} + n_{i−1} + 3, i²(i+3))`, `ℓ_0 = 1`, `n_0 = 0`.
pub(super) fn case_i(t: &ProfileTarget, horizon: usize, caps: &PlanCaps) -> Built {
    let mut terms: Vec<PlanTerm> = Vec::with_capacity(horizon);
    let mut prev = (BigUint::from(1u32), BigUint::from(0u32));
    for i in 1..=horizon as u64 {
        let step = || -> Result<BigUint> {
            let e = ceil_exp(i as f64 * t.phi.eval(i)?, caps.max_digits)?;
            let spacing = &prev.0 + &prev.1 + 3u32;
            let cubic = BigUint::from(i * i * (i + 3));
            Ok(e.max(spacing).max(cubic))
        };
        match step() {
            Ok(ell) => {
                prev = (ell.clone(), BigUint::from(i));
                terms.push(PlanTerm::new(i, i.into(), ell));
            }
            Err(e) => return (terms, Some(e)),
        }
    }
    (terms, None)
}

/// `n_i` found in log space with `φ(n_i) > iφ(n_{i−1}+1)`, `log n_i > iφ(n_{i−1}+1)`,
/// `log n_i > log n_{i−1} + i² + 2` and `φ(n_i)/log n_i → γ` (increasing when `γ = ∞`);
/// `n_0 = 1`. Then `ℓ_i` is `⌈e^{αφ(n_i)}⌉`, `⌈n_i^{αγ} log n_i⌉` or `⌈n_i log n_i⌉`
/// according to `(α, γ)`.
pub(super) fn case_ii(t: &ProfileTarget, horizon: usize, caps: &PlanCaps) -> Built {
    let mut terms = Vec::with_capacity(horizon);
    let mut prev_ln = 0.0;
    let mut prev_n = BigUint::from(1u32);
    let mut prev_ratio = 0.0f64;
    for i in 1..=horizon as u64 {
        let step = || -> Result<(BigUint, f64, f64, BigUint)> {
            let base = t.phi.eval_big(&(&prev_n + 1u32))?;
            let fi = i as f64;
            let bound = fi * base;
            let t_min = bound.max(prev_ln + fi * fi + 2.0);
            let gamma = t.gamma;
            let accept = move |value: f64, ln_n: f64| {
                let ratio = value / ln_n;
                let close = match gamma {
                    ExtReal::Finite(g) => (ratio - g).abs() < 1.0 / fi,
                    ExtReal::Infinity => ratio > fi.max(prev_ratio),
                };
                value > bound && ln_n > bound && ln_n > prev_ln + fi * fi + 2.0 && close
            };
            let what = || format!("case (ii) term n_{i}");
            let (n, ln_n) = search_where(&t.phi, t_min, 1.0 / (8.0 * fi), accept, caps, what)?;
            let ratio = ratio_at(&t.phi, &n)?;
            let ell = match (t.alpha, t.gamma) {
                (ExtReal::Finite(a), ExtReal::Infinity) if a > 0.0 => {
                    ceil_exp(a * t.phi.eval_big(&n)?, caps.max_digits)?
                }
                (ExtReal::Finite(a), ExtReal::Finite(g)) if a > 0.0 => {
                    round_pow_ln(&n, a * g, 1.0, true, caps.max_digits)?
                }
                (ExtReal::Finite(0.0), ExtReal::Infinity) => {
                    round_pow_ln(&n, 1.0, 1.0, true, caps.max_digits)?
                }
                (a, g) => {
                    return Err(Error::OutsideCaseTable(format!("case (ii) has no ℓ for α = {a}, γ = {g}")))
                }
            };
            Ok((n, ln_n, ratio, ell))
        };
        match step() {
            Ok((n, ln_n, ratio, ell)) => {
                prev_ln = ln_n;
                prev_ratio = ratio;
                prev_n = n.clone();
                terms.push(PlanTerm::new(i, n, ell));
            }
            Err(e) => return (terms, Some(e)),
        }
    }
    (terms, None)
}

/// Over `m_i` from the bounded-step subsequence, exponents `log ℓ̃` run in
/// phases: `βφ(m_k)` at a phase start, then `(2β−α)/2·φ(m_k) + α/2·φ(m_{k+j})`
/// while `φ(m_{k+j}) < (2β/α − 1)φ(m_k)`, then `αφ(m_{k+d})` at the first `d`
/// reaching it; the next phase starts at `k + d + 1`. `ℓ_i = ⌈ℓ̃_i⌉`.
pub(super) fn case_iii(t: &ProfileTarget, horizon: usize, caps: &PlanCaps) -> Built {
    let (alpha, beta) = match (finite(t.alpha, "α"), finite(t.beta, "β")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (Vec::new(), Some(e)),
    };
    let (sub, mut stop) = subseq2_partial(&t.phi, horizon, caps, false);
    let mut phis = Vec::with_capacity(sub.m.len());
    for &m in &sub.m {
        match t.phi.eval_wide(m) {
            Ok(v) => phis.push(v),
            Err(e) => {
                stop.get_or_insert(e);
                break;
            }
        }
    }
    let len = phis.len();
    let mut exps: Vec<(f64, u64)> = Vec::with_capacity(len);
    let mut k = 0;
    while k < len {
        exps.push((beta * phis[k], k as u64 + 1));
        let threshold = (2.0 * beta / alpha - 1.0) * phis[k];
        let mut j = 1;
        while k + j < len && phis[k + j] < threshold {
            exps.push(((2.0 * beta - alpha) / 2.0 * phis[k] + alpha / 2.0 * phis[k + j], k as u64 + 1));
            j += 1;
        }
        if k + j < len {
            exps.push((alpha * phis[k + j], k as u64 + 1));
        }
        k += j + 1;
    }
    let mut terms = Vec::with_capacity(len);
    for (idx, (e, stage)) in exps.into_iter().enumerate() {
        match ceil_exp(e, caps.max_digits) {
            Ok(ell) => {
                let mut term = PlanTerm::new(idx as u64 + 1, sub.m[idx].into(), ell);
                term.stage = Some(stage);
                terms.push(term);
            }
            Err(e) => return (terms, Some(e)),
        }
    }
    (terms, stop)
}

/// `n_1 = 3`, `n_i = max(⌈e^{βφ(n_{i−1}+1)}⌉, n_{i−1} + 1)`, `ℓ_i = ⌈n_i log n_i⌉`.
pub(super) fn case_iv(t: &ProfileTarget, horizon: usize, caps: &PlanCaps) -> Built {
    let beta = match finite(t.beta, "β") {
        Ok(b) => b,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let mut terms: Vec<PlanTerm> = Vec::with_capacity(horizon);
    let mut n = BigUint::from(3u32);
    for i in 1..=horizon as u64 {
        let step = || -> Result<(BigUint, BigUint)> {
            let n_i = if i == 1 {
                n.clone()
            } else {
                let next = &n + 1u32;
                ceil_exp(beta * t.phi.eval_big(&next)?, caps.max_digits)?.max(next)
            };
            let ell = round_pow_ln(&n_i, 1.0, 1.0, true, caps.max_digits)?;
            Ok((n_i, ell))
        };
        match step() {
            Ok((n_i, ell)) => {
                n = n_i.clone();
                terms.push(PlanTerm::new(i, n_i, ell));
            }
            Err(e) => return (terms, Some(e)),
        }
    }
    (terms, None)
}

/// `n_i` from the interpolating subsequence with `C = B/A`, `ℓ_i = ⌈n_i^A log n_i⌉`.
pub(super) fn case_v(t: &ProfileTarget, horizon: usize, caps: &PlanCaps) -> Built {
    let (a, b) = match t.ab() {
        Ok(ab) => ab,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let (a, b) = match (finite(a, "A"), finite(b, "B")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (Vec::new(), Some(e)),
    };
    let c = if approx_eq(ExtReal::Finite(a), ExtReal::Finite(b)) { 1.0 } else { b / a };
    let sub = build_subseq1(&t.phi, c, t.gamma, t.delta, horizon, caps);
    let mut terms = Vec::with_capacity(sub.terms.len());
    for (idx, s) in sub.terms.into_iter().enumerate() {
        match round_pow_ln(&s.n, a, 1.0, true, caps.max_digits) {
            Ok(ell) => {
                let mut term = PlanTerm::new(idx as u64 + 1, s.n, ell);
                term.stage = Some(s.stage);
                terms.push(term);
            }
            Err(e) => return (terms, Some(e)),
        }
    }
    (terms, sub.truncated)
}

/// The affine exponent `ρ(x) = Cx + D` of case (vi).
pub fn rho_coefficients(alpha: f64, beta: f64, gamma: ExtReal, delta: f64) -> (f64, f64) {
    match gamma {
        ExtReal::Finite(g) => ((alpha * g - beta * delta) / (g - delta), (beta - alpha) * g * delta / (g - delta)),
        ExtReal::Infinity => (alpha, (beta - alpha) * delta),
    }
}

/// Over `m_i` from the log-jump subsequence,
/// `ℓ_i = ⌊m_i^{ρ(x_i)} φ(m_i) log m_i⌋` with `x_i = φ(m_i)/log m_i`
/// clamped to `[δ, γ]`.
pub(super) fn case_vi(t: &ProfileTarget, horizon: usize, caps: &PlanCaps) -> Built {
    let (alpha, beta, delta) = match (finite(t.alpha, "α"), finite(t.beta, "β"), finite(t.delta, "δ")) {
        (Ok(a), Ok(b), Ok(d)) => (a, b, d),
        (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => return (Vec::new(), Some(e)),
    };
    let (c, d) = rho_coefficients(alpha, beta, t.gamma, delta);
    let (lo, hi) = (beta * delta, t.gamma.finite().map_or(f64::INFINITY, |g| alpha * g));
    let (sub, stop) = subseq2_partial(&t.phi, horizon, caps, true);
    let mut terms = Vec::with_capacity(sub.m.len());
    for (idx, &m) in sub.m.iter().enumerate() {
        let step = || -> Result<(BigUint, f64)> {
            let value = t.phi.eval_wide(m)?;
            let x = (value / (m as f64).ln()).clamp(delta, t.gamma.to_f64());
            let rho = (c * x + d).clamp(lo, hi);
            let ell = round_pow_ln(&BigUint::from(m), rho, value, false, caps.max_digits)?;
            Ok((ell, rho))
        };
        match step() {
            Ok((ell, rho)) => {
                let mut term = PlanTerm::new(idx as u64 + 1, m.into(), ell);
                term.rho = Some(rho);
                terms.push(term);
            }
            Err(e) => return (terms, Some(e)),
        }
    }
    (terms, stop)
}

//! The Cantor set `F_p`, insertion words, and insertion plans `{n_i}, {ℓ_i}`
//! whose realizations have prescribed return times.
//!
//! Given a point `x ∈ F_p`, term `k` of a plan inserts
//! `w_k = 1 · x⁽ᵏ⁻¹⁾|ₙₖ · x̄ · 1` (with `x̄ = x⁽ᵏ⁻¹⁾_{n_k+1} + 1 mod m`) so that its
//! first symbol lands at position `ℓ_k`. Because `ℓ_{k+1} ≥ ℓ_k + n_k + 3`,
//! later words sit after earlier ones and `ℓ_k` is also the final position.
//! The result satisfies `R_n = ℓ_{i+1}` for `n_i < n ≤ n_{i+1}` once `n_i > p`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bigmath::{decimal, ln_big};
use crate::error::{Error, Result};
use crate::return_time::{return_time_naive, return_times_all, ReturnTime};
use crate::shift::{Alphabet, Base, Event, FreeSymbols, LazySequence, Word};

fn check_p(p: u32) -> Result<()> {
    if p <= 2 {
        return Err(Error::Invalid(format!("F_p needs p > 2, got {p}")));
    }
    Ok(())
}

/// The first `len` symbols of the canonical `F_p` point with the given interiors.
pub fn build_fp_prefix(p: u32, free: FreeSymbols, len: usize, alphabet: Alphabet) -> Result<Word> {
    check_p(p)?;
    if let FreeSymbols::Constant(s) = free {
        alphabet.check(s)?;
    }
    let mut out = Vec::with_capacity(len);
    Base::Fp { p, free }.fill(1, len as u64, alphabet.size(), &mut out)?;
    Word::new(out, alphabet)
}

/// Whether `w` is the prefix of some point of `F_p`.
pub fn fp_membership(w: &Word, p: u32) -> bool {
    if p <= 2 {
        return false;
    }
    let p = p as usize;
    w.symbols().iter().enumerate().all(|(i, &s)| {
        let j = i + 1;
        if j <= p {
            s == 0
        } else {
            let r = (j - 1) % p;
            if r == 0 || r == p - 1 {
                s == 1
            } else {
                true
            }
        }
    })
}

/// Number of unconstrained positions among `1..=n` for points of `F_p`.
pub fn fp_free_positions(p: u32, n: u64) -> u64 {
    let p = p as u64;
    if p <= 2 || n <= p {
        return 0;
    }
    let q = n - p;
    (q / p) * (p - 2) + (q % p).saturating_sub(1)
}

/// Exact number of length-`n` prefixes of points of `F_p`.
pub fn fp_cylinder_count(p: u32, n: u64, m: u32) -> BigUint {
    let free = fp_free_positions(p, n);
    BigUint::from(m).pow(u32::try_from(free).expect("free-position count fits u32"))
}

/// `log N_n` for [`fp_cylinder_count`], without forming the integer.
pub fn fp_log_count(p: u32, n: u64, m: u32) -> f64 {
    fp_free_positions(p, n) as f64 * (m as f64).ln()
}

/// `1 · prev[1..=n_k] · ((prev[n_k+1] + 1) mod m) · 1`.
pub fn make_insertion_word(prev: &Word, n_k: usize) -> Result<Word> {
    if prev.len() < n_k + 1 {
        return Err(Error::BaseTooShort { needed: n_k as u64 + 1, have: prev.len() as u64 });
    }
    let m = prev.alphabet().size();
    let mut out = Vec::with_capacity(n_k + 3);
    out.push(1);
    out.extend_from_slice(&prev.symbols()[..n_k]);
    out.push(((prev.symbols()[n_k] as u32 + 1) % m) as u8);
    out.push(1);
    Word::new(out, prev.alphabet())
}

/// Which construction produced a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Manual,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::I => "i",
            CaseTag::Ii => "ii",
            CaseTag::Iii => "iii",
            CaseTag::Iv => "iv",
            CaseTag::V => "v",
            CaseTag::Vi => "vi",
            CaseTag::Manual => "manual",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanTerm {
    pub i: u64,
    #[serde(with = "decimal")]
    pub n: BigUint,
    #[serde(with = "decimal")]
    pub ell: BigUint,
    /// Exponent `ρ(φ(m_i)/log m_i)` used by case (vi).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Block index `k` of the subsequence construction that emitted `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<u64>,
    /// `ℓ` was raised to `ℓ_{i-1} + n_{i-1} + 3` to meet the spacing condition.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub repaired: bool,
}

impl PlanTerm {
    pub fn new(i: u64, n: BigUint, ell: BigUint) -> Self {
        PlanTerm { i, n, ell, rho: None, stage: None, repaired: false }
    }
}

/// Sequences `{n_i}` and `{ℓ_i}` together with the base block parameter `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertionPlan {
    pub p: u32,
    pub m: Alphabet,
    pub case_tag: CaseTag,
    pub horizon: u64,
    pub terms: Vec<PlanTerm>,
    /// Set when generation stopped before `horizon` terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<String>,
}

/// A range `n_i < n ≤ n_{i+1}` on which `R_n = ℓ_{i+1}` is guaranteed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    /// 1-based index `i` of the lower endpoint.
    pub i: u64,
    #[serde(with = "decimal")]
    pub lo: BigUint,
    #[serde(with = "decimal")]
    pub hi: BigUint,
    #[serde(with = "decimal")]
    pub ell: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(with = "decimal")]
    pub ell: BigUint,
    pub bracket: u64,
    /// Predictions hold for `n` strictly above this value.
    #[serde(with = "decimal")]
    pub threshold: BigUint,
}

impl InsertionPlan {
    pub fn new(p: u32, m: Alphabet, case_tag: CaseTag, terms: Vec<PlanTerm>) -> Result<Self> {
        let horizon = terms.len() as u64;
        let plan = InsertionPlan { p, m, case_tag, horizon, terms, truncated: None };
        plan.validate()?;
        Ok(plan)
    }

    /// A hand-specified plan.
    pub fn manual(p: u32, m: Alphabet, n: &[u64], ell: &[u64]) -> Result<Self> {
        if n.len() != ell.len() {
            return Err(Error::LengthMismatch { left: n.len(), right: ell.len() });
        }
        let terms = n
            .iter()
            .zip(ell)
            .enumerate()
            .map(|(k, (&n, &l))| PlanTerm::new(k as u64 + 1, n.into(), l.into()))
            .collect();
        InsertionPlan::new(p, m, CaseTag::Manual, terms)
    }

    /// Checks positivity, strict growth of both sequences and `p > 2`.
    pub fn validate(&self) -> Result<()> {
        check_p(self.p).map_err(|e| Error::InvalidPlan(e.to_string()))?;
        for (k, t) in self.terms.iter().enumerate() {
            if t.i != k as u64 + 1 {
                return Err(Error::InvalidPlan(format!("term {} carries index {}", k + 1, t.i)));
            }
            if t.n.is_zero() || t.ell.is_zero() {
                return Err(Error::InvalidPlan(format!("term {} is not positive", t.i)));
            }
            if k > 0 {
                let prev = &self.terms[k - 1];
                if t.n <= prev.n {
                    return Err(Error::InvalidPlan(format!("n is not strictly increasing at i={}", t.i)));
                }
                if t.ell <= prev.ell {
                    return Err(Error::InvalidPlan(format!("ℓ is not strictly increasing at i={}", t.i)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// 0-based index of the first term that is actually inserted (`ℓ_k − 1 > p`).
    pub fn first_insertion(&self) -> Option<usize> {
        let p = BigUint::from(self.p) + 1u32;
        self.terms.iter().position(|t| t.ell > p)
    }

    /// 0-based index `i` from which brackets are certified: `n_i > p`,
    /// `ℓ_i − 1 > p`, and every later term has `n_j < ℓ_j`.
    pub fn certification_start(&self) -> Option<usize> {
        let p = BigUint::from(self.p);
        let p1 = &p + 1u32;
        let from = self.terms.iter().rposition(|t| t.n >= t.ell).unwrap_or(0);
        (from..self.terms.len()).find(|&k| self.terms[k].n > p && self.terms[k].ell > p1)
    }

    /// Certified brackets `(n_i, n_{i+1}]`, in order.
    pub fn certified_brackets(&self) -> Vec<Bracket> {
        let Some(start) = self.certification_start() else { return Vec::new() };
        self.terms
            .windows(2)
            .enumerate()
            .skip(start)
            .map(|(k, w)| Bracket {
                i: k as u64 + 1,
                lo: w[0].n.clone(),
                hi: w[1].n.clone(),
                ell: w[1].ell.clone(),
            })
            .collect()
    }

    /// `ℓ_{i+1}` for the bracket `n_i < n ≤ n_{i+1}` containing `n`.
    pub fn predicted_return_time(&self, n: &BigUint) -> Result<Prediction> {
        let start = self
            .certification_start()
            .ok_or_else(|| Error::InvalidPlan(format!("no term has n_i > p = {}", self.p)))?;
        let threshold = self.terms[start].n.clone();
        if *n <= threshold {
            return Err(Error::Invalid(format!(
                "n = {n} is not above the certification threshold {threshold}"
            )));
        }
        let last = &self.terms[self.terms.len() - 1].n;
        if n > last {
            return Err(Error::Invalid(format!("n = {n} is beyond the plan horizon n = {last}")));
        }
        let k = self.terms.partition_point(|t| t.n < *n);
        Ok(Prediction { ell: self.terms[k].ell.clone(), bracket: k as u64, threshold })
    }

    /// `ℓ_{i+1}` for a `u64` argument; see [`InsertionPlan::predicted_return_time`].
    pub fn predict(&self, n: u64) -> Result<Prediction> {
        self.predicted_return_time(&BigUint::from(n))
    }
}

/// Outcome of [`check_plan_conditions`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    /// Indices `i` with `ℓ_{i+1} < ℓ_i + n_i + 3`.
    pub spacing_failures: Vec<u64>,
    /// `i(n_i + 3)/ℓ_i`, evaluated in log space.
    pub density: Vec<f64>,
    pub density_final: f64,
    /// Whether the final half of `density` is nonincreasing.
    pub density_settles: bool,
    pub eps: f64,
}

impl PlanReport {
    pub fn spacing_ok(&self) -> bool {
        self.spacing_failures.is_empty()
    }

    pub fn density_ok(&self) -> bool {
        self.density_settles && self.density_final < self.eps
    }

    pub fn passed(&self) -> bool {
        self.spacing_ok() && self.density_ok()
    }
}

/// Checks `ℓ_{i+1} ≥ ℓ_i + n_i + 3` exactly and reports the trend of `i(n_i+3)/ℓ_i`.
pub fn check_plan_conditions(plan: &InsertionPlan, eps: f64) -> Result<PlanReport> {
    if plan.is_empty() {
        return Err(Error::InvalidPlan("plan has no terms".into()));
    }
    let spacing_failures = plan
        .terms
        .windows(2)
        .filter(|w| w[1].ell < &w[0].ell + &w[0].n + 3u32)
        .map(|w| w[0].i)
        .collect();
    let density: Vec<f64> = plan
        .terms
        .iter()
        .map(|t| ((t.i as f64).ln() + ln_big(&(&t.n + 3u32)) - ln_big(&t.ell)).exp())
        .collect();
    let tail = &density[density.len() / 2..];
    let density_settles = tail.windows(2).all(|w| w[1] <= w[0]);
    Ok(PlanReport {
        spacing_failures,
        density_final: *density.last().expect("nonempty"),
        density,
        density_settles,
        eps,
    })
}

fn check_base(base: &Base, plan: &InsertionPlan) -> Result<()> {
    match base {
        Base::Fp { p, .. } if *p != plan.p => Err(Error::InvalidPlan(format!(
            "base uses F_{p} but the plan was built for p = {}",
            plan.p
        ))),
        Base::Explicit(w) if !fp_membership(w, plan.p) => {
            Err(Error::InvalidPlan(format!("explicit base is not in F_{}", plan.p)))
        }
        Base::Periodic(_) => Err(Error::InvalidPlan("insertions need a base point of F_p".into())),
        _ => Ok(()),
    }
}

/// Realizes the plan on `base` using every term.
pub fn apply_insertions(base: Base, plan: &InsertionPlan) -> Result<LazySequence> {
    apply_insertions_through(base, plan, plan.len())
}

/// Realizes the first `terms` terms of the plan on `base`.
pub fn apply_insertions_through(base: Base, plan: &InsertionPlan, terms: usize) -> Result<LazySequence> {
    plan.validate()?;
    check_base(&base, plan)?;
    let alphabet = plan.m;
    let mut seq = LazySequence::new(base.clone(), Vec::new(), alphabet)?;
    let Some(k0) = plan.first_insertion() else { return Ok(seq) };
    let mut events = Vec::new();
    for t in plan.terms.iter().take(terms).skip(k0) {
        let n = t.n.to_u64().filter(|&n| n < seq.cap()).ok_or_else(|| Error::Capacity {
            requested: (&t.n + 1u32).to_string(),
            cap: seq.cap(),
        })?;
        let prev = seq.prefix(n + 1)?;
        let word = make_insertion_word(&prev, n as usize)?;
        events.push(Event { pos: t.ell.clone(), word });
        seq = LazySequence::new(base.clone(), events.clone(), alphabet)?;
    }
    Ok(seq)
}

/// Which return-time routine verifies a realized plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Direct scan per `n`.
    Naive,
    /// Single Z-array pass.
    Fast,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub n: u64,
    #[serde(with = "decimal")]
    pub predicted: BigUint,
    pub observed: ReturnTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketCheck {
    #[serde(flatten)]
    pub bracket: Bracket,
    pub checked: u64,
    pub mismatches: u64,
}

/// Result of realizing a plan and comparing observed and predicted `R_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub prefix_len: u64,
    pub brackets: Vec<BracketCheck>,
    /// Certified brackets too large to materialize under the cap.
    pub skipped: Vec<Bracket>,
    pub checked: u64,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Realizes the plan on the `F_p` point with interiors `free`, materializes
/// the shortest prefix covering every certified bracket that fits under
/// `cap` (needing `ℓ_{i+1} + n_{i+1}` symbols), and checks `R_n` for each `n`.
pub fn verify_plan(plan: &InsertionPlan, free: FreeSymbols, cap: u64, oracle: Oracle) -> Result<VerifyReport> {
    let fits = |b: &Bracket| {
        let need = &b.ell + &b.hi;
        need.to_u64().is_some_and(|v| v <= cap)
    };
    let (usable, skipped): (Vec<Bracket>, Vec<Bracket>) =
        plan.certified_brackets().into_iter().partition(fits);
    // Brackets are ordered and their requirements grow, so `usable` is a prefix.
    let prefix_len = usable.iter().map(|b| (&b.ell + &b.hi).to_u64().unwrap_or(0)).max().unwrap_or(0);
    let terms = usable.last().map_or(0, |b| b.i as usize + 1);
    let seq = apply_insertions_through(Base::Fp { p: plan.p, free }, plan, terms)?.with_cap(cap);
    let word = seq.prefix(prefix_len)?;
    let fast = match oracle {
        Oracle::Fast => Some(return_times_all(&word)),
        Oracle::Naive => None,
    };
    let mut brackets = Vec::with_capacity(usable.len());
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for b in usable {
        let (lo, hi) = (b.lo.to_u64().expect("fits"), b.hi.to_u64().expect("fits"));
        let want = b.ell.to_u64().expect("fits");
        let mut bad = 0;
        for n in lo + 1..=hi {
            let observed = match &fast {
                Some(all) => all[n as usize - 1],
                None => return_time_naive(&word, n as usize)?,
            };
            if observed != ReturnTime::Exact(want) {
                bad += 1;
                mismatches.push(Mismatch { n, predicted: b.ell.clone(), observed });
            }
        }
        checked += hi - lo;
        brackets.push(BracketCheck { bracket: b, checked: hi - lo, mismatches: bad });
    }
    Ok(VerifyReport { prefix_len, brackets, skipped, checked, mismatches })
}

/// Deletes the inserted words from a realized prefix, leaving base symbols.
pub fn strip_insertions(seq: &LazySequence, prefix: &Word) -> Word {
    let mut keep = vec![true; prefix.len()];
    for ev in seq.events() {
        let Some(start) = ev.pos.to_usize() else { break };
        for j in start..start + ev.word.len() {
            if j <= keep.len() {
                keep[j - 1] = false;
            }
        }
    }
    let symbols = prefix.symbols().iter().zip(&keep).filter(|(_, k)| **k).map(|(s, _)| *s).collect();
    Word::new(symbols, prefix.alphabet()).expect("symbols come from a valid word")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(s: &str) -> Word {
        Word::parse(s, Alphabet::binary()).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn fp_prefix_examples() {
        let a = Alphabet::binary();
        let w = build_fp_prefix(3, FreeSymbols::Constant(0), 9, a).unwrap();
        assert_eq!(w.to_string(), "000101101");
        let w = build_fp_prefix(4, FreeSymbols::Constant(1), 8, a).unwrap();
        assert_eq!(w.to_string(), "00001111");
        assert!(build_fp_prefix(2, FreeSymbols::Constant(0), 8, a).is_err());
        for seed in 0..5 {
            let w = build_fp_prefix(5, FreeSymbols::Seeded(seed), 200, Alphabet::new(3).unwrap()).unwrap();
            assert!(fp_membership(&w, 5));
        }
    }

    #[test]
    fn membership_examples() {
        assert!(fp_membership(&bin("000101101"), 3));
        assert!(!fp_membership(&bin("001"), 3));
        let w = build_fp_prefix(4, FreeSymbols::Seeded(9), 64, Alphabet::binary()).unwrap();
        // pinned positions: 1..=4 and the ends of each later block
        for j in [1usize, 4, 5, 8, 9, 64] {
            let mut s = w.symbols().to_vec();
            s[j - 1] ^= 1;
            assert!(!fp_membership(&Word::new(s, Alphabet::binary()).unwrap(), 4), "j={j}");
        }
    }

    #[test]
    fn cylinder_counts_match_enumeration() {
        assert_eq!(fp_cylinder_count(4, 4, 2), big(1));
        assert_eq!(fp_cylinder_count(4, 12, 2), big(16));
        for p in [3u32, 4, 5] {
            for n in 1..=16u32 {
                let count = (0u32..1 << n)
                    .filter(|bits| {
                        let s = (0..n).map(|k| ((bits >> k) & 1) as u8).collect();
                        fp_membership(&Word::new(s, Alphabet::binary()).unwrap(), p)
                    })
                    .count();
                assert_eq!(fp_cylinder_count(p, n as u64, 2), big(count as u64), "p={p} n={n}");
            }
        }
        let n = 4000;
        let e = fp_log_count(4, n, 2) / (n as f64 * 2f64.ln());
        assert!((e - 0.5).abs() < 0.01);
    }

    #[test]
    fn insertion_word_examples() {
        assert_eq!(make_insertion_word(&bin("0010"), 3).unwrap().to_string(), "100111");
        let t = Word::parse("0120", Alphabet::new(3).unwrap()).unwrap();
        assert_eq!(make_insertion_word(&t, 2).unwrap().to_string(), "10101");
        assert!(matches!(make_insertion_word(&bin("001"), 3), Err(Error::BaseTooShort { .. })));
        let w = make_insertion_word(&bin("0101100"), 5).unwrap();
        assert_eq!(w.len(), 8);
    }

    #[test]
    fn prediction_examples() {
        let plan = InsertionPlan::manual(3, Alphabet::binary(), &[4, 8, 16], &[64, 256, 1024]).unwrap();
        let p = plan.predict(5).unwrap();
        assert_eq!((p.ell, p.threshold), (big(256), big(4)));
        assert_eq!(plan.predict(8).unwrap().ell, big(256));
        assert_eq!(plan.predict(9).unwrap().ell, big(1024));
        assert_eq!(plan.predict(16).unwrap().ell, big(1024));
        assert!(plan.predict(4).is_err());
        assert!(plan.predict(17).is_err());
        let brackets = plan.certified_brackets();
        assert_eq!(brackets.len(), 2);
        assert_eq!((brackets[0].lo.clone(), brackets[0].hi.clone()), (big(4), big(8)));
    }

    #[test]
    fn plan_validation() {
        let a = Alphabet::binary();
        assert!(InsertionPlan::manual(3, a, &[4, 4], &[10, 20]).is_err());
        assert!(InsertionPlan::manual(3, a, &[4, 5], &[10, 10]).is_err());
        assert!(InsertionPlan::manual(2, a, &[4, 5], &[10, 20]).is_err());
        assert!(InsertionPlan::manual(3, a, &[4], &[10, 20]).is_err());
    }

    #[test]
    fn condition_checks() {
        let n: Vec<u64> = (1..=25).collect();
        let ell: Vec<u64> = n.iter().map(|i| i.pow(4)).collect();
        let plan = InsertionPlan::manual(3, Alphabet::binary(), &n, &ell).unwrap();
        let r = check_plan_conditions(&plan, 0.01).unwrap();
        assert!(r.spacing_ok());
        assert!(r.passed(), "{:?}", r.density_final);
        assert!((r.density[1] - 2.0 * 5.0 / 16.0).abs() < 1e-12);

        let mut flat = plan.clone();
        for t in &mut flat.terms {
            t.ell = big(100);
        }
        let r = check_plan_conditions(&flat, 0.01).unwrap();
        assert_eq!(r.spacing_failures.first(), Some(&1));
        assert!(!r.passed());
    }

    #[test]
    fn plan_json_round_trip() {
        let mut plan = InsertionPlan::manual(3, Alphabet::binary(), &[4, 8], &[64, 256]).unwrap();
        plan.terms[1].ell = BigUint::from(10u32).pow(60);
        plan.terms[1].repaired = true;
        let text = serde_json::to_string(&plan).unwrap();
        assert!(text.contains(r#""ell":"1000000000000000000000000000000000000000000000000000000000000""#));
        assert!(text.contains(r#""case_tag":"manual""#));
        let back: InsertionPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back, plan);
    }

    fn naive_realization(base: &[u8], plan: &InsertionPlan, m: u32) -> Vec<u8> {
        let mut x = base.to_vec();
        let p1 = plan.p as u64 + 1;
        for t in &plan.terms {
            let (n, l) = (t.n.to_u64().unwrap() as usize, t.ell.to_u64().unwrap());
            if l <= p1 {
                continue;
            }
            let mut w = vec![1u8];
            w.extend_from_slice(&x[..n]);
            w.push(((x[n] as u32 + 1) % m) as u8);
            w.push(1);
            let at = l as usize - 1;
            x.splice(at..at, w);
        }
        x
    }

    #[test]
    fn insertions_match_sequential_definition() {
        let a = Alphabet::new(3).unwrap();
        let plan = InsertionPlan::manual(4, a, &[2, 5, 9, 14], &[4, 12, 40, 90]).unwrap();
        let free = FreeSymbols::Seeded(3);
        let base = build_fp_prefix(4, free, 400, a).unwrap();
        let want = naive_realization(base.symbols(), &plan, 3);
        let seq = apply_insertions(Base::Fp { p: 4, free }, &plan).unwrap();
        assert_eq!(seq.events().len(), 3, "ℓ_1 − 1 ≤ p is skipped");
        assert_eq!(seq.prefix(300).unwrap().symbols(), &want[..300]);

        let one = apply_insertions_through(Base::Fp { p: 4, free }, &plan, 2).unwrap();
        assert_eq!(one.prefix(39).unwrap(), seq.prefix(39).unwrap());

        let empty = InsertionPlan::manual(4, a, &[], &[]).unwrap();
        let same = apply_insertions(Base::Fp { p: 4, free }, &empty).unwrap();
        assert_eq!(same.prefix(100).unwrap(), base.prefix(100).unwrap());

        let prefix = seq.prefix(300).unwrap();
        let stripped = strip_insertions(&seq, &prefix);
        assert_eq!(stripped.symbols(), &base.symbols()[..stripped.len()]);
    }

    #[test]
    fn insertion_words_split_from_prefix_at_n_plus_one() {
        let a = Alphabet::binary();
        let plan = InsertionPlan::manual(3, a, &[4, 8, 16], &[64, 256, 1024]).unwrap();
        let seq = apply_insertions(Base::Fp { p: 3, free: FreeSymbols::Constant(0) }, &plan).unwrap();
        let x = seq.prefix(2000).unwrap();
        for (ev, t) in seq.events().iter().zip(&plan.terms) {
            let n = t.n.to_usize().unwrap();
            let interior = &ev.word.symbols()[1..];
            assert_eq!(&interior[..n], &x.symbols()[..n]);
            assert_ne!(interior[n], x.symbols()[n]);
        }
    }

    #[test]
    fn base_must_match_plan() {
        let plan = InsertionPlan::manual(3, Alphabet::binary(), &[4, 8], &[64, 256]).unwrap();
        let other = Base::Fp { p: 4, free: FreeSymbols::Constant(0) };
        assert!(matches!(apply_insertions(other, &plan), Err(Error::InvalidPlan(_))));
        let periodic = Base::Periodic(bin("0"));
        assert!(apply_insertions(periodic, &plan).is_err());
    }

    #[test]
    fn small_plans_realize_predicted_return_times() {
        let a = Alphabet::binary();
        let plans = [
            InsertionPlan::manual(3, a, &[4, 8, 16], &[64, 256, 1024]).unwrap(),
            InsertionPlan::manual(3, a, &[4, 6, 9, 13, 20], &[30, 60, 120, 240, 480]).unwrap(),
            InsertionPlan::manual(5, a, &[6, 7, 30], &[20, 40, 400]).unwrap(),
        ];
        for plan in &plans {
            for free in [FreeSymbols::Constant(0), FreeSymbols::Constant(1), FreeSymbols::Seeded(1)] {
                for oracle in [Oracle::Naive, Oracle::Fast] {
                    let r = verify_plan(plan, free, 1_000_000, oracle).unwrap();
                    assert!(r.checked > 0);
                    assert!(r.passed(), "{plan:?} {free:?}: {:?}", r.mismatches);
                }
            }
        }
    }
}

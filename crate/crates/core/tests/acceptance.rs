//! End-to-end acceptance checks. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) before asserting. Criteria run one at a time.

use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recurrencelab::bigmath::ln_big;
use recurrencelab::cantor::{verify_plan, CaseTag, InsertionPlan, Oracle};
use recurrencelab::phi::{parse_phi, OscLog, PhiSpec};
use recurrencelab::plan::{
    build_subseq2_i, build_subseq2_ii, dichotomy, plan_full_dimension, rho_coefficients, PlanCaps, PlanOptions,
    ProfileTarget,
};
use recurrencelab::rates::{
    box_dimension, close_return_witnesses, fp_log_counts, running_extremes, PlanSampling, RateTrajectory,
};
use recurrencelab::return_time::{return_time_naive, return_times_all};
use recurrencelab::shift::{Alphabet, FreeSymbols, Word};
use recurrencelab::ExtReal;

/// Held by every criterion so that wall-clock budgets are measured without
/// competing test threads.
static EXCLUSIVE: Mutex<()> = Mutex::new(());

fn exclusive() -> MutexGuard<'static, ()> {
    EXCLUSIVE.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion}: {verdict} ({})\n", detail.as_ref());
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {criterion} failed: {}", detail.as_ref());
}

fn er(x: f64) -> ExtReal {
    ExtReal::new(x).unwrap()
}

fn random_word(rng: &mut ChaCha8Rng, len: usize, m: u32, bias: f64) -> Word {
    let symbols = (0..len)
        .map(|_| if rng.gen_bool(bias) { 0 } else { rng.gen_range(0..m) as u8 })
        .collect();
    Word::new(symbols, Alphabet::new(m).unwrap()).unwrap()
}

fn log_phi() -> PhiSpec {
    parse_phi("log(n)").unwrap()
}

#[test]
fn criterion_01_oracle_equivalence() {
    let _guard = exclusive();
    let mut rng = ChaCha8Rng::seed_from_u64(20_001);
    let start = Instant::now();
    let (mut mismatches, mut compared, mut longest) = (0u64, 0u64, 0usize);
    for k in 0..1000 {
        let m = [2, 3, 5][k % 3];
        // log-uniform lengths in [10, 10^4], with the extreme length always present
        let len = if k < 3 { 10_000 } else { 10f64.powf(rng.gen_range(1.0..4.0)).round() as usize };
        let bias = [0.0, 0.5][(k / 3) % 2];
        let w = random_word(&mut rng, len, m, bias);
        let fast = return_times_all(&w);
        for (i, r) in fast.iter().enumerate() {
            compared += 1;
            if *r != return_time_naive(&w, i + 1).unwrap() {
                mismatches += 1;
            }
        }
        longest = longest.max(len);
    }
    let elapsed = start.elapsed();
    report(
        1,
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("1000 words up to length {longest}, {compared} values, {mismatches} mismatches, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_exact_return_times_on_plans() {
    let _guard = exclusive();
    let binary = Alphabet::binary();
    let ternary = Alphabet::new(3).unwrap();
    let opts = PlanOptions::default();
    let log_v = ProfileTarget::new(log_phi(), er(1.0), er(1.0), 1000).unwrap();
    let log_i = ProfileTarget::new(log_phi(), ExtReal::INF, ExtReal::INF, 1000).unwrap();
    let plans = vec![
        ("manual p=3", InsertionPlan::manual(3, binary, &[4, 8, 16], &[64, 256, 1024]).unwrap(), FreeSymbols::Constant(0)),
        (
            "manual p=3 five terms",
            InsertionPlan::manual(3, binary, &[4, 6, 9, 13, 20], &[30, 60, 120, 240, 480]).unwrap(),
            FreeSymbols::Seeded(7),
        ),
        ("manual p=5", InsertionPlan::manual(5, binary, &[6, 7, 30], &[20, 40, 400]).unwrap(), FreeSymbols::Seeded(1)),
        ("manual m=3", InsertionPlan::manual(3, ternary, &[4, 8, 16], &[64, 256, 1024]).unwrap(), FreeSymbols::Seeded(3)),
        ("case v log α=β=1", plan_full_dimension(&log_v, 3, &opts).unwrap(), FreeSymbols::Constant(0)),
        ("case i log horizon 7", plan_full_dimension(&log_i, 7, &opts).unwrap(), FreeSymbols::Seeded(11)),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, plan, free) in &plans {
        let ell_max = plan.terms.iter().map(|t| t.ell.to_u64().unwrap()).max().unwrap();
        let r = verify_plan(plan, *free, 2_000_000, Oracle::Naive).unwrap();
        let fine = ell_max <= 1_000_000 && r.skipped.is_empty() && r.checked > 0 && r.passed();
        ok &= fine;
        details.push(format!("{name}: {} n checked, {} mismatches", r.checked, r.mismatches.len()));
    }
    assert!(plans.iter().any(|p| p.1.case_tag == CaseTag::V));
    report(2, ok && plans.len() >= 5, details.join("; "));
}

#[test]
fn criterion_03_fp_dimension() {
    let _guard = exclusive();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for p in [3u32, 4, 5, 10] {
        let top = 200 * u64::from(p);
        let step = 5 * u64::from(p) + 1;
        let fit = box_dimension(&fp_log_counts(p, 2, (step..=top).step_by(step as usize)), 2).unwrap();
        let want = f64::from(p - 2) / f64::from(p);
        worst = worst.max((fit.estimate - want).abs());
        details.push(format!("p={p}: {:.5} vs {want:.5}", fit.estimate));
    }
    let elapsed = start.elapsed();
    report(
        3,
        worst < 0.02 && elapsed < Duration::from_secs(1),
        format!("{}; max error {worst:.2e}, {elapsed:.2?}", details.join(", ")),
    );
}

#[test]
fn criterion_04_log_dichotomy_grid() {
    let _guard = exclusive();
    let grid = [0.0, 0.5, 0.99, 1.0, 2.0, f64::INFINITY];
    let mut points = 0;
    let mut wrong = Vec::new();
    for &a in &grid {
        for &b in grid.iter().filter(|&&b| b >= a) {
            let (alpha, beta) = (ExtReal::from(a), ExtReal::from(b));
            let c = ProfileTarget::new(log_phi(), alpha, beta, 1000).unwrap().classify();
            points += 1;
            if c.dimension != u8::from(a >= 1.0) {
                wrong.push(format!("({alpha}, {beta})"));
            }
        }
    }
    report(4, wrong.is_empty(), format!("{points} grid points, mismatches: {wrong:?}"));
}

fn gauges() -> Vec<(&'static str, PhiSpec)> {
    ["log(n)", "n", "2*log(n)^1.5"].into_iter().map(|s| (s, parse_phi(s).unwrap())).collect()
}

#[test]
fn criterion_05_bounded_steps() {
    let _guard = exclusive();
    let mut violations = 0;
    let mut details = Vec::new();
    for (name, phi) in gauges() {
        let s = build_subseq2_i(&phi, 30, &PlanCaps::default()).unwrap();
        let f = |n: u128| phi.eval_wide(n).unwrap();
        for w in s.m.windows(2) {
            if !(f(w[1]) - f(w[0] + 1) <= 3.0 && f(w[1]) - f(w[0]) > 1.0) {
                violations += 1;
            }
        }
        details.push(format!("{name}: {} terms", s.m.len()));
        violations += usize::from(s.m.len() < 30);
    }
    report(5, violations == 0, format!("{}; {violations} violations", details.join(", ")));
}

#[test]
fn criterion_06_log_jumps() {
    let _guard = exclusive();
    let mut problems = Vec::new();
    for (name, phi) in gauges() {
        let s = build_subseq2_ii(&phi, 30, &PlanCaps::default()).unwrap();
        let f = |n: u128| phi.eval_wide(n).unwrap();
        let m = &s.m;
        if m.len() < 30 {
            problems.push(format!("{name}: only {} terms", m.len()));
        }
        for w in m.windows(2) {
            let (a, b) = (w[0] as f64, w[1] as f64);
            if !(b >= a * a.ln() || f(w[1]) - f(w[0]) > 1.0) {
                problems.push(format!("{name}: disjunction fails at m = {}", w[0]));
            }
        }
        let tail = &m[m.len() - m.len() / 3 - 1..];
        let (mut worst_phi, mut worst_log): (f64, f64) = (0.0, 0.0);
        for w in tail.windows(2) {
            worst_phi = worst_phi.max((f(w[1]) / f(w[0] + 1) - 1.0).abs());
            worst_log = worst_log.max(((w[1] as f64).ln() / (w[0] as f64).ln() - 1.0).abs());
        }
        if worst_phi > 0.1 || worst_log > 0.1 {
            problems.push(format!("{name}: tail deviations {worst_phi:.3}, {worst_log:.3}"));
        }
    }
    report(6, problems.is_empty(), format!("three gauges, 30 terms each; problems: {problems:?}"));
}

#[test]
fn criterion_07_plan_level_rates() {
    let _guard = exclusive();
    let opts = PlanOptions::default();
    let target = ProfileTarget::new(log_phi(), er(2.0), er(2.0), 1000).unwrap();
    let plan = plan_full_dimension(&target, 20, &opts).unwrap();
    let traj = RateTrajectory::from_plan(&plan, &log_phi(), PlanSampling::Breakpoints).unwrap();
    let est = running_extremes(&traj, 0.5).unwrap();
    let close = |x: f64| (x - 2.0).abs() <= 0.2;
    let case_v = plan.case_tag == CaseTag::V && plan.len() == 20 && close(est.alpha_hat) && close(est.beta_hat);

    let target = ProfileTarget::new(log_phi(), ExtReal::INF, ExtReal::INF, 1000).unwrap();
    let plan = plan_full_dimension(&target, 30, &opts).unwrap();
    let ratios: Vec<f64> = RateTrajectory::from_plan(&plan, &log_phi(), PlanSampling::Breakpoints)
        .unwrap()
        .entries
        .iter()
        .map(|e| e.ratio)
        .collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let (first, last) = (ratios[0], *ratios.last().unwrap());
    let case_i = plan.case_tag == CaseTag::I && increasing && last > 5.0 * first;
    report(
        7,
        case_v && case_i,
        format!(
            "case v estimates ({:.4}, {:.4}) over {} breakpoints; case i ratios {first:.3} to {last:.3}, increasing: {increasing}",
            est.alpha_hat, est.beta_hat, est.window
        ),
    );
}

#[test]
fn criterion_08_case_vi_exponent_bounds() {
    let _guard = exclusive();
    let phi = PhiSpec::OscLog(OscLog::new(0.5, er(2.0)).unwrap());
    let target = ProfileTarget::new(phi.clone(), er(2.0), er(2.5), 1000).unwrap();
    let plan = plan_full_dimension(&target, 20, &PlanOptions::default()).unwrap();
    let (alpha, beta) = (2.0, 2.5);
    let (gamma, delta) = (target.gamma, target.delta.finite().unwrap());
    let (lo, hi) = (beta * delta, alpha * gamma.finite().unwrap());
    let (c, d) = rho_coefficients(alpha, beta, gamma, delta);
    let mut violations = 0;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in &plan.terms {
        let x = phi.eval_big(&t.n).unwrap() / ln_big(&t.n);
        let rho = c * x + d;
        min = min.min(rho);
        max = max.max(rho);
        let stored = t.rho.unwrap();
        if rho < lo - 1e-9 || rho > hi + 1e-9 || (stored - rho).abs() > 1e-9 {
            violations += 1;
        }
    }
    report(
        8,
        plan.case_tag == CaseTag::Vi && plan.len() == 20 && violations == 0,
        format!("{} terms, ρ in [{min:.4}, {max:.4}] ⊆ [{lo}, {hi}], {violations} violations", plan.len()),
    );
}

/// `n` with a return at some shift `j < n^s`, by direct comparison.
fn brute_force_witnesses(w: &Word, s: f64) -> Vec<u64> {
    let x = w.symbols();
    let len = x.len();
    (1..=len)
        .filter(|&n| {
            let bound = (n as f64).powf(s);
            (1..len - n + 1).take_while(|&j| (j as f64) < bound).any(|j| x[j..j + n] == x[..n])
        })
        .map(|n| n as u64)
        .collect()
}

#[test]
fn criterion_09_close_return_witnesses() {
    let _guard = exclusive();
    let mut rng = ChaCha8Rng::seed_from_u64(90_009);
    let (mut differing, mut failed_recheck, mut total) = (0, 0, 0);
    for k in 0..100 {
        let bias = [0.0, 0.6, 0.9, 0.97][k % 4];
        let w = random_word(&mut rng, 10_000, 2, bias);
        let got = close_return_witnesses(&w, 0.5, 0.1).unwrap();
        let ns: Vec<u64> = got.iter().map(|c| c.n).collect();
        differing += usize::from(ns != brute_force_witnesses(&w, 0.6));
        failed_recheck += got.iter().filter(|c| !c.rechecked).count();
        total += got.len();
    }
    report(
        9,
        differing == 0 && failed_recheck == 0,
        format!("100 words of length 10^4, {total} witnesses, {differing} differing lists, {failed_recheck} failed rechecks"),
    );
}

#[test]
fn criterion_10_scaling_invariance() {
    let _guard = exclusive();
    let mut rng = ChaCha8Rng::seed_from_u64(100_010);
    let special = [0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 10.0, f64::INFINITY];
    let pick = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.6) {
            ExtReal::from(special[rng.gen_range(0..special.len())])
        } else {
            er(rng.gen_range(0.0..10.0))
        }
    };
    let mut mismatches = 0;
    let mut ones = 0;
    for _ in 0..10_000 {
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let (alpha, beta) = if a <= b { (a, b) } else { (b, a) };
        let (g, d) = (pick(&mut rng), pick(&mut rng));
        let (gamma, delta) = if g >= d { (g, d) } else { (d, g) };
        let base = dichotomy(alpha, beta, gamma, delta);
        ones += u32::from(base);
        for c in [0.1, 1.0, 7.0] {
            if dichotomy(alpha.scale(1.0 / c), beta.scale(1.0 / c), gamma.scale(c), delta.scale(c)) != base {
                mismatches += 1;
            }
        }
    }
    report(10, mismatches == 0, format!("10^4 tuples × 3 scalings, {ones} with dimension 1, {mismatches} mismatches"));
}

//! First return times `R_n(x) = min{ j ≥ 1 : x_{j+1} ⋯ x_{j+n} = x_1 ⋯ x_n }`
//! and the variant `R'_n` with `j ≥ n`, certified from a finite prefix.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::Word;

/// What a finite prefix certifies about a return time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ReturnTime {
    /// The return time equals this value.
    Exact(u64),
    /// The return time is strictly greater than this value.
    LowerBound(u64),
}

impl ReturnTime {
    pub fn exact(self) -> Option<u64> {
        match self {
            ReturnTime::Exact(j) => Some(j),
            ReturnTime::LowerBound(_) => None,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, ReturnTime::Exact(_))
    }
}

fn check_n(w: &[u8], n: usize) -> Result<()> {
    if n == 0 || n > w.len() {
        return Err(Error::OutOfRange { index: n as u64, len: w.len() as u64 });
    }
    Ok(())
}

/// Brute-force scan over shifts `j = min_shift, min_shift + 1, …`.
fn scan(w: &[u8], n: usize, min_shift: usize) -> ReturnTime {
    let len = w.len();
    let head = &w[..n];
    let shifts = min_shift..=len - n;
    let found = if n >= 8 {
        let word = |j: usize| u64::from_ne_bytes(w[j..j + 8].try_into().expect("8 bytes"));
        let lead = word(0);
        shifts.into_iter().find(|&j| word(j) == lead && w[j..j + n] == *head)
    } else {
        shifts.into_iter().find(|&j| w[j..j + n] == *head)
    };
    found.map_or(ReturnTime::LowerBound((len - n) as u64), |j| ReturnTime::Exact(j as u64))
}

/// `R_n` by direct comparison of every shift. Kept as the reference oracle.
pub fn return_time_naive(w: &Word, n: usize) -> Result<ReturnTime> {
    check_n(w.symbols(), n)?;
    Ok(scan(w.symbols(), n, 1))
}

/// `R'_n`: as [`return_time_naive`] but only shifts `j ≥ n` count.
///
/// When no admissible shift fits, the prefix certifies `R'_n > max(n-1, len-n)`.
pub fn return_time_prime(w: &Word, n: usize) -> Result<ReturnTime> {
    check_n(w.symbols(), n)?;
    Ok(match scan(w.symbols(), n, n) {
        ReturnTime::LowerBound(b) => ReturnTime::LowerBound(b.max(n as u64 - 1)),
        exact => exact,
    })
}

/// Z-array: `z[j]` is the length of the longest common prefix of `s` and
/// `s[j..]`, with `z[0] = s.len()`.
pub fn z_array(s: &[u8]) -> Vec<usize> {
    let n = s.len();
    let mut z = vec![0; n];
    if n == 0 {
        return z;
    }
    z[0] = n;
    let (mut l, mut r) = (0usize, 0usize);
    for i in 1..n {
        let mut k = if i < r { (r - i).min(z[i - l]) } else { 0 };
        while i + k < n && s[k] == s[i + k] {
            k += 1;
        }
        z[i] = k;
        if i + k > r {
            l = i;
            r = i + k;
        }
    }
    z
}

/// `R_1, …, R_L` of a word of length `L` in `O(L)`.
///
/// With `z` the Z-array, `R_n = min{ j ≥ 1 : z[j] ≥ n }`. Bucketing each shift
/// by its `z` value and taking suffix minima over the buckets gives every `n`
/// in one sweep.
pub fn return_times_all(w: &Word) -> Vec<ReturnTime> {
    let s = w.symbols();
    let len = s.len();
    let z = z_array(s);
    // first[v] = smallest shift j ≥ 1 with z[j] == v
    let mut first = vec![usize::MAX; len + 1];
    for j in (1..len).rev() {
        first[z[j]] = j;
    }
    let mut out = vec![ReturnTime::LowerBound(0); len];
    let mut best = usize::MAX;
    for n in (1..=len).rev() {
        best = best.min(first[n]);
        out[n - 1] = if best == usize::MAX {
            ReturnTime::LowerBound((len - n) as u64)
        } else {
            ReturnTime::Exact(best as u64)
        };
    }
    out
}

/// `R'_1, …, R'_L` in `O(L log L)`: shifts are added to an ordered set as `n`
/// decreases past their `z` value, and `R'_n` is the first member `≥ n`.
pub fn return_times_prime_all(w: &Word) -> Vec<ReturnTime> {
    let s = w.symbols();
    let len = s.len();
    let z = z_array(s);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); len + 1];
    for (j, &v) in z.iter().enumerate().skip(1) {
        buckets[v].push(j);
    }
    let mut live = BTreeSet::new();
    let mut out = vec![ReturnTime::LowerBound(0); len];
    for n in (1..=len).rev() {
        live.extend(buckets[n].iter().copied());
        out[n - 1] = match live.range(n..).next() {
            Some(&j) => ReturnTime::Exact(j as u64),
            None => ReturnTime::LowerBound(((len - n).max(n - 1)) as u64),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::Alphabet;
    use proptest::prelude::*;

    fn word(s: &str, m: u32) -> Word {
        Word::parse(s, Alphabet::new(m).unwrap()).unwrap()
    }

    use ReturnTime::{Exact, LowerBound};

    #[test]
    fn naive_examples() {
        assert_eq!(return_time_naive(&word("000000", 2), 3).unwrap(), Exact(1));
        assert_eq!(return_time_naive(&word("010101", 2), 2).unwrap(), Exact(2));
        assert_eq!(return_time_naive(&word("001001001", 2), 2).unwrap(), Exact(3));
        assert_eq!(return_time_naive(&word("001001001", 2), 1).unwrap(), Exact(1));
        assert_eq!(return_time_naive(&word("0101", 2), 3).unwrap(), LowerBound(1));
        assert!(return_time_naive(&word("01", 2), 0).is_err());
        assert!(return_time_naive(&word("01", 2), 3).is_err());
    }

    #[test]
    fn fast_examples() {
        assert_eq!(
            return_times_all(&word("0101", 2)),
            vec![Exact(2), Exact(2), LowerBound(1), LowerBound(0)]
        );
        let zeros = return_times_all(&word(&"0".repeat(50), 2));
        assert!(zeros[..49].iter().all(|&r| r == Exact(1)));
        assert_eq!(zeros[49], LowerBound(0));
    }

    #[test]
    fn prime_examples() {
        assert_eq!(return_time_prime(&word("000000", 2), 3).unwrap(), Exact(3));
        assert_eq!(return_time_prime(&word("010101", 2), 2).unwrap(), Exact(2));
        assert_eq!(return_time_prime(&word("0000", 2), 3).unwrap(), LowerBound(2));
    }

    #[test]
    fn z_array_matches_definition() {
        let s = word("0010010001", 2);
        let z = z_array(s.symbols());
        for (j, &v) in z.iter().enumerate() {
            let lcp = s.symbols().iter().zip(&s.symbols()[j..]).take_while(|(a, b)| a == b).count();
            assert_eq!(v, lcp);
        }
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        prop_oneof![Just(2u32), Just(3), Just(5)].prop_flat_map(|m| {
            proptest::collection::vec(0..m as u8, 1..200)
                .prop_map(move |v| Word::new(v, Alphabet::new(m).unwrap()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn fast_equals_naive(w in arb_word()) {
            let fast = return_times_all(&w);
            for n in 1..=w.len() {
                prop_assert_eq!(fast[n - 1], return_time_naive(&w, n).unwrap());
            }
        }

        #[test]
        fn prime_fast_equals_naive(w in arb_word()) {
            let fast = return_times_prime_all(&w);
            for n in 1..=w.len() {
                prop_assert_eq!(fast[n - 1], return_time_prime(&w, n).unwrap());
            }
        }

        #[test]
        fn exact_return_times_are_monotone(w in arb_word()) {
            let r = return_times_all(&w);
            for pair in r.windows(2) {
                if let (Exact(a), Exact(b)) = (pair[0], pair[1]) {
                    prop_assert!(b >= a);
                }
            }
        }

        #[test]
        fn prime_dominates(w in arb_word()) {
            let r = return_times_all(&w);
            let rp = return_times_prime_all(&w);
            for n in 1..=w.len() {
                if let (Exact(a), Exact(b)) = (r[n - 1], rp[n - 1]) {
                    prop_assert!(b >= a.max(n as u64));
                    if a >= n as u64 {
                        prop_assert_eq!(a, b);
                    }
                }
            }
        }
    }
}

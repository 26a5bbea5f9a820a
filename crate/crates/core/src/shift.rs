//! Symbols, finite words, lazily indexed infinite sequences and the
//! ultrametric on the full shift over `m` symbols.
//!
//! Positions are 1-based throughout, matching the usual `x = x_1 x_2 ⋯`
//! convention; conversion to 0-based storage happens only inside this module.

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of symbols a sequence may materialize.
pub const DEFAULT_CAP: u64 = 10_000_000;

const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alphabet(u32);

impl Alphabet {
    /// Alphabet sizes are limited to 36 so words serialize as digit strings.
    pub fn new(m: u32) -> Result<Self> {
        if (2..=36).contains(&m) {
            Ok(Alphabet(m))
        } else {
            Err(Error::AlphabetSize(m))
        }
    }

    pub fn binary() -> Self {
        Alphabet(2)
    }

    pub fn size(self) -> u32 {
        self.0
    }

    pub fn check(self, symbol: u8) -> Result<u8> {
        if (symbol as u32) < self.0 {
            Ok(symbol)
        } else {
            Err(Error::Symbol { symbol: symbol as u32, m: self.0 })
        }
    }
}

impl TryFrom<u32> for Alphabet {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        Alphabet::new(m)
    }
}

impl From<Alphabet> for u32 {
    fn from(a: Alphabet) -> u32 {
        a.0
    }
}

/// A finite word over an [`Alphabet`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<u8>,
    alphabet: Alphabet,
}

impl Word {
    pub fn new(symbols: Vec<u8>, alphabet: Alphabet) -> Result<Self> {
        for &s in &symbols {
            alphabet.check(s)?;
        }
        Ok(Word { symbols, alphabet })
    }

    pub(crate) fn from_trusted(symbols: Vec<u8>, alphabet: Alphabet) -> Self {
        debug_assert!(symbols.iter().all(|&s| (s as u32) < alphabet.size()));
        Word { symbols, alphabet }
    }

    /// Parses a digit string (`0-9`, then `a-z` for alphabets above 10).
    pub fn parse(text: &str, alphabet: Alphabet) -> Result<Self> {
        let mut symbols = Vec::with_capacity(text.len());
        for (pos, c) in text.trim().char_indices() {
            let v = c.to_digit(36).ok_or_else(|| Error::Parse {
                pos,
                msg: format!("'{c}' is not a symbol digit"),
            })?;
            if v >= alphabet.size() {
                return Err(Error::Symbol { symbol: v, m: alphabet.size() });
            }
            symbols.push(v as u8);
        }
        Ok(Word { symbols, alphabet })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The `j`-th symbol, 1-based.
    pub fn at(&self, j: usize) -> Option<u8> {
        j.checked_sub(1).and_then(|i| self.symbols.get(i).copied())
    }

    /// The prefix `w_1 ⋯ w_n`.
    pub fn prefix(&self, n: usize) -> Result<Word> {
        if n > self.len() {
            return Err(Error::OutOfRange { index: n as u64, len: self.len() as u64 });
        }
        Ok(Word::from_trusted(self.symbols[..n].to_vec(), self.alphabet))
    }

    /// `σ^k(w)` truncated to the available symbols.
    pub fn shifted(&self, k: usize) -> Word {
        let start = k.min(self.len());
        Word::from_trusted(self.symbols[start..].to_vec(), self.alphabet)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.symbols.iter().map(|&b| DIGITS[b as usize] as char).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self}, m={})", self.alphabet.size())
    }
}

/// How the interior symbols of each `F_p` block are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeSymbols {
    Constant(u8),
    /// Counter-based ChaCha stream: position `j` reads word `j` of the stream,
    /// so random access and sequential generation agree.
    Seeded(u64),
}

impl Default for FreeSymbols {
    fn default() -> Self {
        FreeSymbols::Constant(0)
    }
}

/// Where the symbols of a [`LazySequence`] come from before insertions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Base {
    /// `w w w ⋯`
    Periodic(Word),
    /// A finite word; reading past its end is an error.
    Explicit(Word),
    /// The canonical point of `F_p`: `p` leading zeros, then blocks of
    /// length `p` whose first and last symbols are 1.
    Fp { p: u32, free: FreeSymbols },
}

impl Base {
    fn validate(&self, alphabet: Alphabet) -> Result<()> {
        match self {
            Base::Periodic(w) | Base::Explicit(w) => {
                if w.alphabet != alphabet {
                    return Err(Error::AlphabetMismatch {
                        left: w.alphabet.size(),
                        right: alphabet.size(),
                    });
                }
                if matches!(self, Base::Periodic(_)) && w.is_empty() {
                    return Err(Error::Invalid("periodic base word is empty".into()));
                }
            }
            Base::Fp { p, free } => {
                if *p <= 2 {
                    return Err(Error::Invalid(format!("F_p needs p > 2, got {p}")));
                }
                if let FreeSymbols::Constant(s) = free {
                    alphabet.check(*s)?;
                }
            }
        }
        Ok(())
    }

    /// Known length of the base, if finite.
    pub fn finite_len(&self) -> Option<u64> {
        match self {
            Base::Explicit(w) => Some(w.len() as u64),
            _ => None,
        }
    }

    /// Appends base symbols `start..start+count` (1-based) to `out`.
    pub(crate) fn fill(&self, start: u64, count: u64, m: u32, out: &mut Vec<u8>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        match self {
            Base::Periodic(w) => {
                let period = w.len() as u64;
                let mut i = ((start - 1) % period) as usize;
                for _ in 0..count {
                    out.push(w.symbols[i]);
                    i += 1;
                    if i == w.len() {
                        i = 0;
                    }
                }
            }
            Base::Explicit(w) => {
                let end = start - 1 + count;
                if end > w.len() as u64 {
                    return Err(Error::BaseTooShort { needed: end, have: w.len() as u64 });
                }
                out.extend_from_slice(&w.symbols[(start - 1) as usize..end as usize]);
            }
            Base::Fp { p, free } => {
                let p = *p as u64;
                let mut rng = match free {
                    FreeSymbols::Seeded(seed) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        rng.set_word_pos(start as u128);
                        Some(rng)
                    }
                    FreeSymbols::Constant(_) => None,
                };
                for j in start..start + count {
                    let random = rng.as_mut().map(|r| r.next_u32());
                    out.push(fp_symbol(j, p, *free, m, random));
                }
            }
        }
        Ok(())
    }

    fn symbol(&self, j: u64, m: u32) -> Result<u8> {
        let mut out = Vec::with_capacity(1);
        self.fill(j, 1, m, &mut out)?;
        Ok(out[0])
    }
}

fn fp_symbol(j: u64, p: u64, free: FreeSymbols, m: u32, random: Option<u32>) -> u8 {
    if j <= p {
        return 0;
    }
    let r = (j - 1) % p;
    if r == 0 || r == p - 1 {
        return 1;
    }
    match (free, random) {
        (FreeSymbols::Constant(s), _) => s,
        (FreeSymbols::Seeded(_), Some(v)) => (v % m) as u8,
        (FreeSymbols::Seeded(_), None) => unreachable!("seeded stream without rng"),
    }
}

/// A word inserted into a sequence. `pos` is the 1-based position of the
/// word's first symbol in the final, fully inserted sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub pos: BigUint,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Placed {
    /// `None` when the position does not fit in `u64`; such events lie
    /// beyond any materializable index.
    start: Option<u64>,
    /// Total inserted length of all earlier events.
    inserted_before: u64,
}

/// An infinite sequence given by a base source plus inserted words.
///
/// Event positions are in final coordinates, so reading index `j` only needs
/// the events at or before `j`. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LazySequence {
    base: Base,
    events: Vec<Event>,
    placed: Vec<Placed>,
    alphabet: Alphabet,
    cap: u64,
}

impl LazySequence {
    pub fn new(base: Base, events: Vec<Event>, alphabet: Alphabet) -> Result<Self> {
        base.validate(alphabet)?;
        let mut placed = Vec::with_capacity(events.len());
        let mut inserted = 0u64;
        let mut next_free = BigUint::from(1u32);
        for (k, ev) in events.iter().enumerate() {
            if ev.word.alphabet != alphabet {
                return Err(Error::AlphabetMismatch {
                    left: ev.word.alphabet.size(),
                    right: alphabet.size(),
                });
            }
            if ev.pos < next_free {
                return Err(Error::EventOrder { index: k });
            }
            next_free = &ev.pos + ev.word.len();
            placed.push(Placed { start: ev.pos.to_u64(), inserted_before: inserted });
            inserted += ev.word.len() as u64;
        }
        Ok(LazySequence { base, events, placed, alphabet, cap: DEFAULT_CAP })
    }

    pub fn periodic(word: Word) -> Result<Self> {
        let a = word.alphabet;
        LazySequence::new(Base::Periodic(word), Vec::new(), a)
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn check_cap(&self, j: u64) -> Result<()> {
        if j > self.cap {
            return Err(Error::Capacity { requested: j.to_string(), cap: self.cap });
        }
        Ok(())
    }

    /// Number of events whose word starts at or before `j`.
    fn events_through(&self, j: u64) -> usize {
        self.placed.partition_point(|p| p.start.is_some_and(|s| s <= j))
    }

    /// The `j`-th symbol of the sequence, `j ≥ 1`.
    pub fn index(&self, j: u64) -> Result<u8> {
        if j == 0 {
            return Err(Error::OutOfRange { index: 0, len: self.cap });
        }
        self.check_cap(j)?;
        let k = self.events_through(j);
        if k == 0 {
            return self.base.symbol(j, self.alphabet.size());
        }
        let pl = &self.placed[k - 1];
        let start = pl.start.expect("events_through only counts placed events");
        let word = &self.events[k - 1].word;
        let off = j - start;
        if off < word.len() as u64 {
            return Ok(word.symbols[off as usize]);
        }
        let base_j = j - pl.inserted_before - word.len() as u64;
        self.base.symbol(base_j, self.alphabet.size())
    }

    /// `x_1 ⋯ x_len`.
    pub fn prefix(&self, len: u64) -> Result<Word> {
        self.check_cap(len)?;
        let mut out = Vec::with_capacity(len as usize);
        let m = self.alphabet.size();
        let mut j = 1u64; // next final position
        let mut base_j = 1u64; // next base position
        for (ev, pl) in self.events.iter().zip(&self.placed) {
            let Some(start) = pl.start.filter(|&s| s <= len) else { break };
            self.base.fill(base_j, start - j, m, &mut out)?;
            base_j += start - j;
            let take = (ev.word.len() as u64).min(len + 1 - start) as usize;
            out.extend_from_slice(&ev.word.symbols[..take]);
            j = start + take as u64;
        }
        if j <= len {
            self.base.fill(base_j, len + 1 - j, m, &mut out)?;
        }
        Ok(Word::from_trusted(out, self.alphabet))
    }

    /// A copy keeping only the first `k` events.
    pub fn truncated(&self, k: usize) -> LazySequence {
        let k = k.min(self.events.len());
        LazySequence {
            base: self.base.clone(),
            events: self.events[..k].to_vec(),
            placed: self.placed[..k].to_vec(),
            alphabet: self.alphabet,
            cap: self.cap,
        }
    }
}

/// Finite-depth view of `d(x, y) = m^{-k}`, `k` the length of the longest
/// common prefix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrefixDistance {
    /// The words first differ after `agree` common symbols.
    Exact { agree: usize, value: f64 },
    /// No difference within `depth` symbols. The true distance of any
    /// extensions is at most `m^{-depth}`; [`PrefixDistance::value`] reports 0.
    Indistinguishable { depth: usize, bound: f64 },
}

impl PrefixDistance {
    pub fn value(&self) -> f64 {
        match self {
            PrefixDistance::Exact { value, .. } => *value,
            PrefixDistance::Indistinguishable { .. } => 0.0,
        }
    }

    /// Number of leading symbols known to agree.
    pub fn agreement(&self) -> usize {
        match self {
            PrefixDistance::Exact { agree, .. } => *agree,
            PrefixDistance::Indistinguishable { depth, .. } => *depth,
        }
    }

    /// Smallest upper bound on the distance the prefixes certify.
    pub fn upper_bound(&self) -> f64 {
        match self {
            PrefixDistance::Exact { value, .. } => *value,
            PrefixDistance::Indistinguishable { bound, .. } => *bound,
        }
    }
}

/// Distance between equal-length words under the shift metric.
pub fn distance(x: &Word, y: &Word) -> Result<PrefixDistance> {
    if x.alphabet != y.alphabet {
        return Err(Error::AlphabetMismatch { left: x.alphabet.size(), right: y.alphabet.size() });
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let m = x.alphabet.size() as f64;
    let agree = x.symbols.iter().zip(&y.symbols).take_while(|(a, b)| a == b).count();
    Ok(if agree == x.len() {
        PrefixDistance::Indistinguishable { depth: agree, bound: m.powi(-(agree as i32)) }
    } else {
        PrefixDistance::Exact { agree, value: m.powi(-(agree as i32)) }
    })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BaseWire {
    Periodic { word: String },
    Explicit { word: String },
    Fp { p: u32, #[serde(default)] free: FreeSymbols },
}

#[derive(Serialize, Deserialize)]
struct EventWire {
    pos: String,
    word: String,
}

#[derive(Serialize, Deserialize)]
struct SequenceWire {
    base: BaseWire,
    events: Vec<EventWire>,
    m: u32,
}

impl Serialize for LazySequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let base = match &self.base {
            Base::Periodic(w) => BaseWire::Periodic { word: w.to_string() },
            Base::Explicit(w) => BaseWire::Explicit { word: w.to_string() },
            Base::Fp { p, free } => BaseWire::Fp { p: *p, free: *free },
        };
        let events = self
            .events
            .iter()
            .map(|e| EventWire { pos: e.pos.to_string(), word: e.word.to_string() })
            .collect();
        SequenceWire { base, events, m: self.alphabet.size() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LazySequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = SequenceWire::deserialize(d)?;
        let build = || -> Result<LazySequence> {
            let a = Alphabet::new(wire.m)?;
            let base = match wire.base {
                BaseWire::Periodic { word } => Base::Periodic(Word::parse(&word, a)?),
                BaseWire::Explicit { word } => Base::Explicit(Word::parse(&word, a)?),
                BaseWire::Fp { p, free } => Base::Fp { p, free },
            };
            let events = wire
                .events
                .iter()
                .map(|e| {
                    let pos = e.pos.parse::<BigUint>().map_err(|err| Error::Parse {
                        pos: 0,
                        msg: format!("event position '{}': {err}", e.pos),
                    })?;
                    Ok(Event { pos, word: Word::parse(&e.word, a)? })
                })
                .collect::<Result<Vec<_>>>()?;
            LazySequence::new(base, events, a)
        };
        build().map_err(D::Error::custom)
    }
}

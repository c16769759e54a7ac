//! Block strings and the `(T, Z, R)` statistics.
//!
//! A string of length `n` is the first `n` symbols of an infinite alternating
//! sequence of blocks whose lengths are i.i.d. uniform on `{l-1, l, l+1}`. The
//! trailing segment is the *rest*: it is non-empty exactly when the last block
//! was cut at position `n`, so the rest length always lies in `[0, l]`.
//!
//! With `N1`, `N2`, `N3` the numbers of complete blocks of length `l-1`, `l`,
//! `l+1`:
//!
//! ```text
//! T = N1 + N2 + N3
//! Z = N2 - N1 - N3
//! R = n - ((l-1) N1 + l N2 + (l+1) N3)
//! ```
//!
//! and `(T, Z, R)` determines the counts through an affine map.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, RandomSeed};

/// Default cap on the number of strings [`enumerate_xi`] may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Block parameter `l` and string length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelParams {
    l: usize,
    n: usize,
}

impl ModelParams {
    /// Requires `l >= 2` (so that blocks of length `l-1` are non-empty) and
    /// `n >= 1`.
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParams(format!("l = {l} must be at least 2")));
        }
        if n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        Ok(Self { l, n })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.l, n)
    }

    pub fn short_len(&self) -> usize {
        self.l - 1
    }

    pub fn long_len(&self) -> usize {
        self.l + 1
    }

    pub fn classify(&self, len: usize) -> Option<BlockClass> {
        match len {
            x if x == self.l - 1 => Some(BlockClass::Short),
            x if x == self.l => Some(BlockClass::Regular),
            x if x == self.l + 1 => Some(BlockClass::Long),
            _ => None,
        }
    }

    /// Number of block lengths `b` in `{l-1, l, l+1}` with `b > r`; three
    /// when `r = 0`.
    pub fn survival_count(&self, r: usize) -> usize {
        if r == 0 {
            return 3;
        }
        [self.l - 1, self.l, self.l + 1]
            .iter()
            .filter(|&&b| b > r)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockClass {
    Short,
    Regular,
    Long,
}

/// Number of complete blocks of each length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BlockCounts {
    /// blocks of length `l-1`
    pub n1: u64,
    /// blocks of length `l`
    pub n2: u64,
    /// blocks of length `l+1`
    pub n3: u64,
}

impl BlockCounts {
    pub fn new(n1: u64, n2: u64, n3: u64) -> Self {
        Self { n1, n2, n3 }
    }

    pub fn total(&self) -> u64 {
        self.n1 + self.n2 + self.n3
    }

    /// Symbols covered by the complete blocks.
    pub fn covered_len(&self, l: usize) -> u64 {
        let l = l as u64;
        self.n1 * (l - 1) + self.n2 * l + self.n3 * (l + 1)
    }

    pub fn tzr(&self, r: usize) -> TzrStats {
        TzrStats {
            t: self.total() as i64,
            z: self.n2 as i64 - self.n1 as i64 - self.n3 as i64,
            r: r as i64,
        }
    }

    /// `(n1 + n2 + n3)! / (n1! n2! n3!)`, saturating at `u128::MAX`.
    pub fn multinomial(&self) -> u128 {
        let mut acc: u128 = 1;
        let mut k: u128 = 0;
        for count in [self.n1, self.n2, self.n3] {
            for i in 1..=u128::from(count) {
                k += 1;
                // acc * k / i stays integral: acc is a product of binomials
                let Some(next) = acc.checked_mul(k) else {
                    return u128::MAX;
                };
                acc = next / i;
            }
        }
        acc
    }
}

/// The triple `(T, Z, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TzrStats {
    pub t: i64,
    pub z: i64,
    pub r: i64,
}

impl TzrStats {
    pub fn new(t: i64, z: i64, r: i64) -> Self {
        Self { t, z, r }
    }
}

impl fmt::Display for TzrStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.t, self.z, self.r)
    }
}

/// A binary string with its block provenance.
///
/// Symbols alternate between blocks, starting from `initial`; the rest
/// segment carries the symbol following the last complete block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockString {
    initial: u8,
    blocks: Vec<usize>,
    rest: usize,
    truncated: bool,
}

impl BlockString {
    /// Builds and validates a block string against `params`.
    pub fn new(
        params: &ModelParams,
        initial: u8,
        blocks: Vec<usize>,
        rest: usize,
        truncated: bool,
    ) -> Result<Self> {
        let s = Self {
            initial,
            blocks,
            rest,
            truncated,
        };
        s.validate(params)?;
        Ok(s)
    }

    pub(crate) fn from_parts_unchecked(initial: u8, blocks: Vec<usize>, rest: usize) -> Self {
        Self {
            initial,
            blocks,
            rest,
            truncated: rest > 0,
        }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.initial > 1 {
            return Err(Error::InvalidString(format!(
                "initial symbol {} is not binary",
                self.initial
            )));
        }
        if let Some((i, &b)) = self
            .blocks
            .iter()
            .enumerate()
            .find(|(_, &b)| params.classify(b).is_none())
        {
            return Err(Error::InvalidString(format!(
                "block {i} has length {b}, outside {{{}, {}, {}}}",
                params.l - 1,
                params.l,
                params.l + 1
            )));
        }
        if self.rest > params.l {
            return Err(Error::InvalidString(format!(
                "rest length {} exceeds l = {}",
                self.rest, params.l
            )));
        }
        if self.rest == 0 && self.truncated {
            return Err(Error::InvalidString(
                "an empty rest cannot be truncated".into(),
            ));
        }
        if self.len() != params.n {
            return Err(Error::InvalidString(format!(
                "length {} differs from n = {}",
                self.len(),
                params.n
            )));
        }
        Ok(())
    }

    pub fn initial(&self) -> u8 {
        self.initial
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut Vec<usize> {
        &mut self.blocks
    }

    pub fn rest(&self) -> usize {
        self.rest
    }

    pub(crate) fn set_rest(&mut self, rest: usize) {
        self.rest = rest;
        self.truncated = rest > 0;
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().sum::<usize>() + self.rest
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symbols as bytes `0` / `1`.
    pub fn symbols(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        let mut symbol = self.initial;
        for &b in &self.blocks {
            out.extend(std::iter::repeat_n(symbol, b));
            symbol ^= 1;
        }
        out.extend(std::iter::repeat_n(symbol, self.rest));
        out
    }

    /// Symbols as ASCII `'0'` / `'1'`.
    pub fn to_ascii(&self) -> String {
        self.symbols().iter().map(|&s| char::from(b'0' + s)).collect()
    }

    pub fn counts(&self, params: &ModelParams) -> BlockCounts {
        let mut c = BlockCounts::default();
        for &b in &self.blocks {
            match params.classify(b) {
                Some(BlockClass::Short) => c.n1 += 1,
                Some(BlockClass::Regular) => c.n2 += 1,
                Some(BlockClass::Long) => c.n3 += 1,
                None => {}
            }
        }
        c
    }

    /// Positions (block indices) of the blocks of the given class.
    pub fn indices_of(&self, params: &ModelParams, class: BlockClass) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, &b)| params.classify(b) == Some(class))
            .map(|(i, _)| i)
            .collect()
    }
}

/// How to read the trailing run when parsing raw symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalRun {
    /// The final block is known to have been cut at `n`: the trailing run is
    /// the rest.
    Cut,
    /// No provenance. A trailing run shorter than `l-1` is the rest, a run of
    /// length `l-1`, `l` or `l+1` is a complete block. This is lossy: a cut
    /// block that happens to show `l-1` or `l` symbols is read as complete.
    Classify,
}

/// Draws `count` i.i.d. block lengths uniform on `{l-1, l, l+1}`.
pub fn sample_block_lengths(params: &ModelParams, seed: RandomSeed, count: usize) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    (0..count)
        .map(|_| params.l - 1 + rng.gen_range(0..3usize))
        .collect()
}

/// Lays out the first `n` symbols of the block sequence given by `lengths`,
/// which must cover at least `n` symbols.
pub fn from_block_lengths<I>(params: &ModelParams, initial: u8, lengths: I) -> Result<BlockString>
where
    I: IntoIterator<Item = usize>,
{
    let mut blocks = Vec::new();
    let mut covered = 0usize;
    for b in lengths {
        if params.classify(b).is_none() {
            return Err(Error::InvalidString(format!("block length {b}")));
        }
        if covered + b <= params.n {
            blocks.push(b);
            covered += b;
            if covered == params.n {
                return BlockString::new(params, initial, blocks, 0, false);
            }
        } else {
            let rest = params.n - covered;
            return BlockString::new(params, initial, blocks, rest, true);
        }
    }
    Err(Error::InvalidString(format!(
        "block lengths cover only {covered} of {} symbols",
        params.n
    )))
}

/// Draws a string of the model: a fair initial symbol followed by i.i.d.
/// block lengths, cut at `n`.
pub fn build_string(params: &ModelParams, seed: RandomSeed) -> BlockString {
    let mut rng = seed::rng(seed);
    let initial = rng.gen_range(0..2u8);
    let lengths = std::iter::repeat_with(|| params.l - 1 + rng.gen_range(0..3usize));
    from_block_lengths(params, initial, lengths).expect("an unbounded stream covers n")
}

/// Recovers block provenance from raw `'0'`/`'1'` symbols.
pub fn parse_symbols(params: &ModelParams, text: &str, final_run: FinalRun) -> Result<BlockString> {
    let bytes = text.as_bytes();
    if bytes.len() != params.n {
        return Err(Error::InvalidString(format!(
            "length {} differs from n = {}",
            bytes.len(),
            params.n
        )));
    }
    if let Some(pos) = bytes.iter().position(|&c| c != b'0' && c != b'1') {
        return Err(Error::InvalidSymbol {
            symbol: bytes[pos],
            position: pos,
        });
    }
    let mut runs: Vec<usize> = Vec::new();
    for w in bytes.chunk_by(|a, b| a == b) {
        runs.push(w.len());
    }
    let initial = bytes[0] - b'0';
    let last = runs.pop().expect("n >= 1");
    let rest = match final_run {
        FinalRun::Cut => last,
        FinalRun::Classify if last < params.l - 1 => last,
        FinalRun::Classify => {
            runs.push(last);
            0
        }
    };
    BlockString::new(params, initial, runs, rest, rest > 0)
}

/// `(T, Z, R)` from block provenance.
pub fn compute_tzr(params: &ModelParams, s: &BlockString) -> TzrStats {
    s.counts(params).tzr(s.rest)
}

/// Inverts `(T, Z, R)` into block counts:
///
/// ```text
/// N1 = ((2l+1) T - Z)/4 - (n-R)/2
/// N2 = (T + Z)/2
/// N3 = (-(2l-1) T - Z)/4 + (n-R)/2
/// ```
///
/// Fails unless all three are non-negative integers and `R` is in `[0, l]`.
pub fn counts_from_tzr(params: &ModelParams, stats: TzrStats) -> Result<BlockCounts> {
    let invalid = |reason| Error::InvalidTzr {
        t: stats.t,
        z: stats.z,
        r: stats.r,
        n: params.n,
        l: params.l,
        reason,
    };
    let TzrStats { t, z, r } = stats;
    if t < 0 {
        return Err(invalid("t is negative"));
    }
    if r < 0 || r > params.l as i64 {
        return Err(invalid("r outside [0, l]"));
    }
    if (t + z).rem_euclid(2) != 0 {
        return Err(invalid("t + z is odd"));
    }
    let l = params.l as i64;
    let covered = params.n as i64 - r;
    let n1_x4 = (2 * l + 1) * t - z - 2 * covered;
    let n3_x4 = -(2 * l - 1) * t - z + 2 * covered;
    if n1_x4.rem_euclid(4) != 0 || n3_x4.rem_euclid(4) != 0 {
        return Err(invalid("block counts are not integers"));
    }
    let (n1, n2, n3) = (n1_x4 / 4, (t + z) / 2, n3_x4 / 4);
    if n1 < 0 || n2 < 0 || n3 < 0 {
        return Err(invalid("a block count is negative"));
    }
    Ok(BlockCounts::new(n1 as u64, n2 as u64, n3 as u64))
}

/// Table of `ln k!` for `k <= max`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0f64;
        table.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn get(&self, k: u64) -> f64 {
        self.table[k as usize]
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }
}

/// Exact joint law of `(T, Z, R)` for fixed `(l, n)`:
///
/// ```text
/// P(T=t, Z=z, R=r) = t! / (N1! N2! N3!) * 3^-t * P(B > r)
/// ```
///
/// where `P(B > r)` is the probability that the cut block is longer than the
/// visible rest (one when `r = 0`).
#[derive(Debug, Clone)]
pub struct TzrLaw {
    params: ModelParams,
    ln_fact: LogFactorials,
}

impl TzrLaw {
    pub fn new(params: ModelParams) -> Self {
        // t never exceeds n / (l - 1)
        let max_t = params.n / (params.l - 1) + 1;
        Self {
            params,
            ln_fact: LogFactorials::new(max_t),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn log_prob(&self, stats: TzrStats) -> Result<f64> {
        let c = counts_from_tzr(&self.params, stats)?;
        Ok(self.log_prob_counts(c, stats.r as usize))
    }

    pub fn log_prob_counts(&self, c: BlockCounts, r: usize) -> f64 {
        let t = c.total();
        let survival = self.params.survival_count(r) as f64 / 3.0;
        self.ln_fact.get(t) - self.ln_fact.get(c.n1) - self.ln_fact.get(c.n2) - self.ln_fact.get(c.n3)
            - t as f64 * 3f64.ln()
            + survival.ln()
    }
}

/// Log-probability of `(T, Z, R) = stats`.
pub fn joint_prob_tzr(params: &ModelParams, stats: TzrStats) -> Result<f64> {
    TzrLaw::new(*params).log_prob(stats)
}

/// Draws a string uniformly from the strings whose statistics are `stats`:
/// a uniform permutation of the block multiset, a fair initial symbol and a
/// rest of length `r`.
pub fn sample_conditional(params: &ModelParams, stats: TzrStats, seed: RandomSeed) -> Result<BlockString> {
    let c = counts_from_tzr(params, stats)?;
    let mut rng = seed::rng(seed);
    let initial = rng.gen_range(0..2u8);
    let mut blocks = multiset(params, c);
    blocks.shuffle(&mut rng);
    Ok(BlockString::from_parts_unchecked(
        initial,
        blocks,
        stats.r as usize,
    ))
}

fn multiset(params: &ModelParams, c: BlockCounts) -> Vec<usize> {
    let mut blocks = Vec::with_capacity(c.total() as usize);
    blocks.extend(std::iter::repeat_n(params.l - 1, c.n1 as usize));
    blocks.extend(std::iter::repeat_n(params.l, c.n2 as usize));
    blocks.extend(std::iter::repeat_n(params.l + 1, c.n3 as usize));
    blocks
}

/// Every string with statistics `stats`, both initial symbols, in
/// lexicographic block order. Fails with [`Error::TooLarge`] when the support
/// exceeds `cap`.
pub fn enumerate_xi(params: &ModelParams, stats: TzrStats, cap: u128) -> Result<Vec<BlockString>> {
    let c = counts_from_tzr(params, stats)?;
    let size = c.multinomial().saturating_mul(2);
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let rest = stats.r as usize;
    let mut blocks = multiset(params, c);
    let mut arrangements = Vec::with_capacity((size / 2) as usize);
    loop {
        arrangements.push(blocks.clone());
        if !next_permutation(&mut blocks) {
            break;
        }
    }
    let mut out = Vec::with_capacity(size as usize);
    for initial in 0..2u8 {
        for a in &arrangements {
            out.push(BlockString::from_parts_unchecked(initial, a.clone(), rest));
        }
    }
    Ok(out)
}

fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|x| *x > v[i]).expect("v[i+1] > v[i]");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

//! Length of the longest common subsequence of two binary strings.
//!
//! Two engines compute the same quantity:
//!
//! - [`Engine::Reference`]: the textbook quadratic dynamic program with a single
//!   rolling row.
//! - [`Engine::BitParallel`]: a row-encoding algorithm that packs one DP row
//!   into machine words (Allison–Dix / Hyyrö). For a fixed string `y`, bit `j`
//!   of `V` is zero iff the DP row increases at column `j`; each symbol of `x`
//!   updates the row with one add and a few bitwise ops per word, so the cost
//!   is `|x| * ceil(|y| / 64)` word operations.
//!
//! Inputs are slices of `0`/`1` bytes.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest accepted input.
pub const MAX_INPUT_LEN: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Reference,
    #[default]
    BitParallel,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Engine::Reference),
            "bitparallel" | "bit-parallel" => Ok(Engine::BitParallel),
            other => Err(Error::InvalidArgument(format!("unknown engine {other:?}"))),
        }
    }
}

fn check_input(s: &[u8]) -> Result<()> {
    if s.len() > MAX_INPUT_LEN {
        return Err(Error::InputTooLarge {
            len: s.len(),
            cap: MAX_INPUT_LEN,
        });
    }
    if let Some(position) = s.iter().position(|&c| c > 1) {
        return Err(Error::InvalidSymbol {
            symbol: s[position],
            position,
        });
    }
    Ok(())
}

/// Converts ASCII `'0'`/`'1'` into `0`/`1` bytes.
pub fn parse_binary(text: &str) -> Result<Vec<u8>> {
    text.bytes()
        .enumerate()
        .map(|(position, c)| match c {
            b'0' => Ok(0),
            b'1' => Ok(1),
            symbol => Err(Error::InvalidSymbol { symbol, position }),
        })
        .collect()
}

pub fn lcs_len(x: &[u8], y: &[u8], engine: Engine) -> Result<usize> {
    check_input(x)?;
    check_input(y)?;
    Ok(match engine {
        Engine::Reference => reference(x, y),
        Engine::BitParallel => BitParallelLcs::new(y).against(x),
    })
}

fn reference(x: &[u8], y: &[u8]) -> usize {
    let mut row = vec![0u32; y.len() + 1];
    for &a in x {
        let mut diag = 0u32;
        for (j, &b) in y.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if a == b {
                diag + 1
            } else {
                up.max(row[j])
            };
            diag = up;
        }
    }
    row[y.len()] as usize
}

/// Match masks of a fixed binary string, reusable against many partners.
#[derive(Debug, Clone)]
pub struct BitParallelLcs {
    len: usize,
    masks: [Vec<u64>; 2],
}

impl BitParallelLcs {
    /// `y` must be binary; use [`lcs_len`] for checked input.
    pub fn new(y: &[u8]) -> Self {
        let words = y.len().div_ceil(64);
        let mut masks = [vec![0u64; words], vec![0u64; words]];
        for (j, &c) in y.iter().enumerate() {
            masks[usize::from(c & 1)][j / 64] |= 1u64 << (j % 64);
        }
        Self {
            len: y.len(),
            masks,
        }
    }

    pub fn prepared(y: &[u8]) -> Result<Self> {
        check_input(y)?;
        Ok(Self::new(y))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// LCS length between the prepared string and `x`.
    pub fn against(&self, x: &[u8]) -> usize {
        if self.len == 0 {
            return 0;
        }
        let words = self.masks[0].len();
        let mut v = vec![u64::MAX; words];
        for &c in x {
            let m = &self.masks[usize::from(c & 1)];
            let mut carry = false;
            for (vw, &mw) in v.iter_mut().zip(m) {
                let u = *vw & mw;
                let (s1, c1) = vw.overflowing_add(u);
                let (s2, c2) = s1.overflowing_add(u64::from(carry));
                carry = c1 || c2;
                *vw = s2 | (*vw & !mw);
            }
        }
        let full = self.len / 64;
        let mut ones: usize = v[..full].iter().map(|w| w.count_ones() as usize).sum();
        let tail = self.len % 64;
        if tail > 0 {
            ones += (v[full] & ((1u64 << tail) - 1)).count_ones() as usize;
        }
        self.len - ones
    }
}

/// A fixed right-hand string `y` prepared for repeated queries with one engine.
#[derive(Debug, Clone)]
pub struct LcsTarget<'a> {
    y: &'a [u8],
    fast: Option<BitParallelLcs>,
}

impl<'a> LcsTarget<'a> {
    pub fn new(y: &'a [u8], engine: Engine) -> Result<Self> {
        check_input(y)?;
        let fast = match engine {
            Engine::Reference => None,
            Engine::BitParallel => Some(BitParallelLcs::new(y)),
        };
        Ok(Self { y, fast })
    }

    pub fn lcs(&self, x: &[u8]) -> Result<usize> {
        check_input(x)?;
        Ok(match &self.fast {
            Some(bp) => bp.against(x),
            None => reference(x, self.y),
        })
    }
}

/// Element-wise [`lcs_len`], evaluated in parallel; the output order matches
/// the input order and errors are reported per index.
pub fn lcs_len_batch<S: AsRef<[u8]> + Sync>(pairs: &[(S, S)], engine: Engine) -> Vec<Result<usize>> {
    pairs
        .par_iter()
        .map(|(x, y)| lcs_len(x.as_ref(), y.as_ref(), engine))
        .collect()
}

#[derive(Debug, Deserialize)]
struct PairRecord {
    x: String,
    y: String,
}

#[derive(Debug, Serialize)]
struct LcsRecord {
    index: usize,
    lcs: usize,
}

/// Reads a CSV with header `x,y` of ASCII binary strings.
pub fn read_pairs_csv<R: io::Read>(reader: R) -> Result<Vec<(Vec<u8>, Vec<u8>)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<PairRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidArgument(format!("row {i}: {e}")))?;
        out.push((parse_binary(rec.x.trim())?, parse_binary(rec.y.trim())?));
    }
    Ok(out)
}

/// Writes `index,lcs` rows with LF line endings.
pub fn write_lcs_csv<W: io::Write>(writer: W, values: &[usize]) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for (index, &lcs) in values.iter().enumerate() {
        wtr.serialize(LcsRecord { index, lcs })?;
    }
    wtr.flush()
}

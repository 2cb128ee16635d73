//! Pairwise-independent hashing of 64-bit token ids into `[0, J)`.
//!
//! The family is `h(x) = ((a·x + b) mod p) mod J` with the Mersenne prime
//! `p = 2^61 − 1`. Coefficients are drawn from a ChaCha8 stream seeded with
//! the family seed, so the same seed yields the same family on every
//! platform.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// The Mersenne prime `2^61 − 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

const FNV_OFFSET: u64 = 14695981039346656037;
const FNV_PRIME: u64 = 1099511628211;

/// FNV-1a 64-bit digest of a token's bytes.
pub fn tokenize(token: &[u8]) -> u64 {
    token
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

#[inline]
fn reduce61(x: u128) -> u64 {
    // x < 2^122 here, so two folds suffice.
    let folded = (x & MERSENNE_61 as u128) + (x >> 61);
    let folded = (folded & MERSENNE_61 as u128) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashSpec {
    pub a: u64,
    pub b: u64,
    pub j_buckets: u64,
}

impl HashSpec {
    pub fn new(a: u64, b: u64, j_buckets: u64) -> Result<Self> {
        if a == 0 || a >= MERSENNE_61 || b >= MERSENNE_61 {
            return invalid(format!("hash coefficients out of range: a={a}, b={b}"));
        }
        if j_buckets == 0 {
            return invalid("bucket count must be at least 1");
        }
        Ok(HashSpec { a, b, j_buckets })
    }

    pub const fn modulus(&self) -> u64 {
        MERSENNE_61
    }

    #[inline]
    pub fn hash(&self, token_id: u64) -> usize {
        hash_token(self, token_id)
    }
}

#[inline]
pub fn hash_token(spec: &HashSpec, token_id: u64) -> usize {
    let x = reduce61(token_id as u128);
    let y = reduce61(spec.a as u128 * x as u128 + spec.b as u128);
    (y % spec.j_buckets) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    specs: Vec<HashSpec>,
    seed: u64,
}

/// Draws `n` hash functions into `j` buckets from a ChaCha8 stream seeded with `seed`.
pub fn draw_family(n: usize, j: usize, seed: u64) -> Result<HashFamily> {
    if n == 0 {
        return invalid("a hash family needs at least one row");
    }
    if j == 0 {
        return invalid("bucket count must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = (0..n)
        .map(|_| {
            let a = rng.random_range(1..MERSENNE_61);
            let b = rng.random_range(0..MERSENNE_61);
            HashSpec { a, b, j_buckets: j as u64 }
        })
        .collect();
    Ok(HashFamily { specs, seed })
}

impl HashFamily {
    pub fn from_specs(specs: Vec<HashSpec>, seed: u64) -> Result<Self> {
        let Some(first) = specs.first() else {
            return invalid("a hash family needs at least one row");
        };
        if specs.iter().any(|s| s.j_buckets != first.j_buckets) {
            return invalid("all hash rows must share the same bucket count");
        }
        Ok(HashFamily { specs, seed })
    }

    pub fn rows(&self) -> usize {
        self.specs.len()
    }

    pub fn buckets(&self) -> usize {
        self.specs[0].j_buckets as usize
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn specs(&self) -> &[HashSpec] {
        &self.specs
    }

    #[inline]
    pub fn bucket(&self, row: usize, token_id: u64) -> usize {
        hash_token(&self.specs[row], token_id)
    }

    /// Text record: `N J p seed` followed by one `a b` line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.rows(),
            self.buckets(),
            MERSENNE_61,
            self.seed
        );
        for s in &self.specs {
            let _ = writeln!(out, "{} {}", s.a, s.b);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing hash family header".into(),
        })?;
        let fields = parse_u64_fields(header, hline + 1)?;
        let [n, j, p, seed] = fields[..] else {
            return Err(Error::Parse {
                line: hline + 1,
                msg: "expected `N J p seed`".into(),
            });
        };
        if p != MERSENNE_61 {
            return Err(Error::Parse {
                line: hline + 1,
                msg: format!("unsupported modulus {p}"),
            });
        }
        let mut specs = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let (idx, line) = lines.next().ok_or(Error::Parse {
                line: hline + 2 + specs.len(),
                msg: "missing hash row".into(),
            })?;
            let f = parse_u64_fields(line, idx + 1)?;
            let [a, b] = f[..] else {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected `a b`".into(),
                });
            };
            specs.push(HashSpec::new(a, b, j).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?);
        }
        HashFamily::from_specs(specs, seed)
    }
}

pub(crate) fn parse_u64_fields(line: &str, lineno: usize) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|f| {
            f.parse::<u64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad integer {f:?}: {e}"),
            })
        })
        .collect()
}

/// SplitMix64 finalizer; a cheap bijective mixer for counter-based streams.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Idealized hash for tests and oracles: each (row, symbol) pair gets an
/// independent uniform bucket derived from a counter-based generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerfectHash {
    pub rows: usize,
    pub j_buckets: usize,
    pub seed: u64,
}

impl PerfectHash {
    pub fn new(rows: usize, j_buckets: usize, seed: u64) -> Result<Self> {
        if rows == 0 || j_buckets == 0 {
            return invalid("perfect hash needs at least one row and one bucket");
        }
        Ok(PerfectHash { rows, j_buckets, seed })
    }

    #[inline]
    pub fn bucket(&self, row: usize, token_id: u64) -> usize {
        let key = splitmix64(self.seed ^ splitmix64(row as u64 ^ splitmix64(token_id)));
        ((key as u128 * self.j_buckets as u128) >> 64) as usize
    }
}

/// Either a drawn universal family or the idealized test-only hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HashScheme {
    Universal(HashFamily),
    Perfect(PerfectHash),
}

impl HashScheme {
    pub fn rows(&self) -> usize {
        match self {
            HashScheme::Universal(f) => f.rows(),
            HashScheme::Perfect(p) => p.rows,
        }
    }

    pub fn buckets(&self) -> usize {
        match self {
            HashScheme::Universal(f) => f.buckets(),
            HashScheme::Perfect(p) => p.j_buckets,
        }
    }

    #[inline]
    pub fn bucket(&self, row: usize, token_id: u64) -> usize {
        match self {
            HashScheme::Universal(f) => f.bucket(row, token_id),
            HashScheme::Perfect(p) => p.bucket(row, token_id),
        }
    }
}

impl From<HashFamily> for HashScheme {
    fn from(f: HashFamily) -> Self {
        HashScheme::Universal(f)
    }
}

impl From<PerfectHash> for HashScheme {
    fn from(p: PerfectHash) -> Self {
        HashScheme::Perfect(p)
    }
}

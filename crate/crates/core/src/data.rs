//! Token sources: Zipf streams, one-token-per-line text and UCI bag-of-words.

use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::hashing::tokenize;

/// Inverse-CDF sampler for `Pr[rank = r] ∝ r^{−c}` on `1..=vocab`.
#[derive(Debug, Clone)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(exponent: f64, vocab: usize) -> Result<Self> {
        if !(exponent > 1.0) || !exponent.is_finite() {
            return invalid(format!("Zipf exponent must exceed 1, got {exponent}"));
        }
        if vocab == 0 {
            return invalid("vocabulary must hold at least one rank");
        }
        let mut cdf = Vec::with_capacity(vocab);
        let mut acc = 0.0;
        for r in 1..=vocab {
            acc += (r as f64).powf(-exponent);
            cdf.push(acc);
        }
        for v in cdf.iter_mut() {
            *v /= acc;
        }
        Ok(Zipf { cdf })
    }

    pub fn vocab(&self) -> usize {
        self.cdf.len()
    }

    /// `Pr[rank = r]`.
    pub fn prob(&self, rank: usize) -> f64 {
        match rank {
            0 => 0.0,
            1 => self.cdf[0],
            r if r <= self.cdf.len() => self.cdf[r - 1] - self.cdf[r - 2],
            _ => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&v| v <= u);
        idx.min(self.cdf.len() - 1) + 1
    }
}

/// `m` i.i.d. Zipf ranks.
pub fn generate_zipf(exponent: f64, m: u64, vocab: usize, seed: u64) -> Result<Vec<usize>> {
    let z = Zipf::new(exponent, vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| z.sample(&mut rng)).collect())
}

/// Token ids in stream order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenStream {
    pub ids: Vec<u64>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// One token per line; blank lines are skipped and trailing `\r` is dropped.
pub fn read_token_lines(reader: impl BufRead) -> Result<TokenStream> {
    let mut ids = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let token = line.strip_suffix('\r').unwrap_or(&line);
        if !token.is_empty() {
            ids.push(tokenize(token.as_bytes()));
        }
    }
    Ok(TokenStream { ids })
}

/// UCI bag-of-words: three header lines `D`, `W`, `NNZ`, then `docID wordID count`
/// triples. Each triple contributes `count` occurrences of `wordID`.
pub fn read_uci_bow(reader: impl BufRead) -> Result<TokenStream> {
    let mut lines = reader.lines().enumerate();
    let mut header = [0u64; 3];
    for (slot, name) in header.iter_mut().zip(["D", "W", "NNZ"]) {
        let (i, line) = lines
            .next()
            .ok_or(Error::Parse { line: 0, msg: format!("missing header line {name}") })?;
        let line = line?;
        *slot = line.trim().parse().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("header {name}: {:?}: {e}", line.trim()),
        })?;
    }
    let mut ids = Vec::new();
    let mut triples = 0u64;
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line: i + 1, msg };
        if f.len() != 3 {
            return Err(bad(format!("expected `docID wordID count`, found {} fields", f.len())));
        }
        let nums: Vec<u64> = f
            .iter()
            .map(|s| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if nums[1] == 0 || nums[1] > header[1] {
            return Err(bad(format!("wordID {} outside 1..={}", nums[1], header[1])));
        }
        let id = tokenize(f[1].as_bytes());
        ids.extend(std::iter::repeat_n(id, nums[2] as usize));
        triples += 1;
    }
    if triples != header[2] {
        return Err(Error::Parse {
            line: 3,
            msg: format!("header announces {} triples, found {triples}", header[2]),
        });
    }
    Ok(TokenStream { ids })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_basics() {
        assert!(Zipf::new(1.0, 10).is_err());
        assert!(generate_zipf(2.0, 50, 1, 3).unwrap().iter().all(|&r| r == 1));
        let z = Zipf::new(2.0, 3).unwrap();
        let norm = 1.0 + 0.25 + 1.0 / 9.0;
        assert!((z.prob(2) - 0.25 / norm).abs() < 1e-15);
        assert_eq!(generate_zipf(1.5, 100, 1000, 8).unwrap(), generate_zipf(1.5, 100, 1000, 8).unwrap());
    }

    #[test]
    fn rank_one_frequency() {
        let m = 100_000u64;
        let ranks = generate_zipf(2.5, m, 10_000, 11).unwrap();
        let p = Zipf::new(2.5, 10_000).unwrap().prob(1);
        let ones = ranks.iter().filter(|&&r| r == 1).count() as f64;
        let sd = (m as f64 * p * (1.0 - p)).sqrt();
        assert!((ones - m as f64 * p).abs() < 3.0 * sd);
    }

    #[test]
    fn uci_fixture() {
        let text = "2\n3\n3\n1 1 2\n1 3 1\n2 2 3\n";
        let s = read_uci_bow(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.ids[0], tokenize(b"1"));
        assert_eq!(s.ids.iter().filter(|&&t| t == tokenize(b"2")).count(), 3);
        let err = read_uci_bow("2\n3\n3\n1 1 2\n1 x 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        assert!(read_uci_bow("2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn lines() {
        let s = read_token_lines("a\r\n\nb\na\n".as_bytes()).unwrap();
        assert_eq!(s.ids, vec![tokenize(b"a"), tokenize(b"b"), tokenize(b"a")]);
    }
}

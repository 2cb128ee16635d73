//! The count-min counter matrix and the frequentist CMS / CMM estimators.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::hashing::{draw_family, parse_u64_fields, HashFamily, HashScheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchMatrix {
    counts: Vec<u64>,
    m: u64,
    scheme: HashScheme,
}

/// The counters `C_{n, h_n(v)}` a query token lands on, one per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedRow {
    pub values: Vec<u64>,
}

impl HashedRow {
    pub fn new(values: Vec<u64>) -> Self {
        HashedRow { values }
    }

    pub fn min(&self) -> u64 {
        self.values.iter().copied().min().unwrap_or(0)
    }
}

impl SketchMatrix {
    pub fn new(scheme: impl Into<HashScheme>) -> Self {
        let scheme = scheme.into();
        let cells = scheme.rows() * scheme.buckets();
        SketchMatrix { counts: vec![0; cells], m: 0, scheme }
    }

    /// Builds a sketch from explicit counts, checking that every row sums to `m`.
    pub fn from_counts(scheme: impl Into<HashScheme>, counts: Vec<u64>) -> Result<Self> {
        let scheme = scheme.into();
        let (n, j) = (scheme.rows(), scheme.buckets());
        if counts.len() != n * j {
            return invalid(format!("expected {} counters, got {}", n * j, counts.len()));
        }
        let m: u64 = counts[..j].iter().sum();
        for (r, row) in counts.chunks(j).enumerate() {
            let s: u64 = row.iter().sum();
            if s != m {
                return invalid(format!("row {r} sums to {s}, row 0 sums to {m}"));
            }
        }
        Ok(SketchMatrix { counts, m, scheme })
    }

    pub fn rows(&self) -> usize {
        self.scheme.rows()
    }

    pub fn buckets(&self) -> usize {
        self.scheme.buckets()
    }

    pub fn total(&self) -> u64 {
        self.m
    }

    pub fn scheme(&self) -> &HashScheme {
        &self.scheme
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row(&self, n: usize) -> &[u64] {
        let j = self.buckets();
        &self.counts[n * j..(n + 1) * j]
    }

    #[inline]
    pub fn update(&mut self, token_id: u64) {
        let j = self.buckets();
        for n in 0..self.rows() {
            let b = self.scheme.bucket(n, token_id);
            let cell = &mut self.counts[n * j + b];
            *cell = cell.checked_add(1).expect("sketch counter overflow");
        }
        self.m = self.m.checked_add(1).expect("sketch total overflow");
    }

    pub fn extend<I: IntoIterator<Item = u64>>(&mut self, tokens: I) {
        for t in tokens {
            self.update(t);
        }
    }

    pub fn hashed_row(&self, token_id: u64) -> HashedRow {
        let j = self.buckets();
        let values = (0..self.rows())
            .map(|n| self.counts[n * j + self.scheme.bucket(n, token_id)])
            .collect();
        HashedRow { values }
    }

    /// Cellwise sum of two sketches built with the same hash scheme.
    pub fn merge(&mut self, other: &SketchMatrix) -> Result<()> {
        if self.scheme != other.scheme {
            return invalid("cannot merge sketches built with different hash families");
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a = a.checked_add(*b).ok_or_else(|| Error::Numeric("counter overflow".into()))?;
        }
        self.m += other.m;
        Ok(())
    }

    /// Snapshot text: `N J m seed`, then one line of space-separated counts per row.
    pub fn to_snapshot(&self) -> Result<String> {
        let HashScheme::Universal(family) = &self.scheme else {
            return invalid("only sketches over a drawn hash family can be serialized");
        };
        let mut out = format!("{} {} {} {}\n", self.rows(), self.buckets(), self.m, family.seed());
        for n in 0..self.rows() {
            let line: Vec<String> = self.row(n).iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        Ok(out)
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hidx, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty snapshot".into(),
        })?;
        let h = parse_u64_fields(header, hidx + 1)?;
        let [n, j, m, seed] = h[..] else {
            return Err(Error::Parse {
                line: hidx + 1,
                msg: "expected header `N J m seed`".into(),
            });
        };
        let family = draw_family(n as usize, j as usize, seed).map_err(|e| Error::Parse {
            line: hidx + 1,
            msg: e.to_string(),
        })?;
        let mut counts = Vec::with_capacity((n * j) as usize);
        for (idx, line) in lines {
            counts.extend(parse_u64_fields(line, idx + 1)?);
        }
        let sketch = SketchMatrix::from_counts(family, counts).map_err(|e| Error::Parse {
            line: hidx + 1,
            msg: e.to_string(),
        })?;
        if sketch.m != m {
            return Err(Error::Parse {
                line: hidx + 1,
                msg: format!("header says m={m} but rows sum to {}", sketch.m),
            });
        }
        Ok(sketch)
    }
}

pub fn hash_family_of(sketch: &SketchMatrix) -> Option<&HashFamily> {
    match sketch.scheme() {
        HashScheme::Universal(f) => Some(f),
        HashScheme::Perfect(_) => None,
    }
}

/// Classic count-min estimate: the smallest counter.
pub fn cms_estimate(row: &HashedRow) -> u64 {
    row.min()
}

/// Count-mean-min: median over rows of the counter minus the expected
/// collision mass `(m − c)/(J − 1)`, clamped to `[0, cms]`.
pub fn cmm_estimate(row: &HashedRow, m: u64, j: usize) -> Result<f64> {
    if j < 2 {
        return invalid("count-mean-min needs at least two buckets");
    }
    if row.values.is_empty() {
        return invalid("empty hashed row");
    }
    let mut corrected: Vec<f64> = row
        .values
        .iter()
        .map(|&c| c as f64 - (m as f64 - c as f64) / (j as f64 - 1.0))
        .collect();
    corrected.sort_by(f64::total_cmp);
    let k = corrected.len();
    let median = if k % 2 == 1 {
        corrected[k / 2]
    } else {
        0.5 * (corrected[k / 2 - 1] + corrected[k / 2])
    };
    Ok(median.clamp(0.0, cms_estimate(row) as f64))
}

//! Multi-indices ν ∈ ℕ₀ⁿ and the graded ordering of a level-truncated basis.
//!
//! Indices are ordered by total order |ν| first; within a level, by
//! lexicographic order with the largest leading entry first, so for n = 2 the
//! sequence starts (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ... Truncations
//! at increasing levels are therefore prefixes of one another.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis size a [`TruncationSpec`] will materialize.
pub const MAX_BASIS_SIZE: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct MultiIndex {
    entries: Vec<usize>,
    order: usize,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "multi-index must have at least one entry".into(),
            ));
        }
        let order = entries.iter().sum();
        Ok(Self { entries, order })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            entries: vec![0; dim.max(1)],
            order: 0,
        }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// |ν| = Σ νⱼ.
    pub fn order(&self) -> usize {
        self.order
    }
}

impl From<MultiIndex> for Vec<usize> {
    fn from(m: MultiIndex) -> Self {
        m.entries
    }
}

impl TryFrom<Vec<usize>> for MultiIndex {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        MultiIndex::new(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// C(n, k) with overflow detection.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    usize::try_from(acc).ok()
}

/// Number of ν ∈ ℕ₀^parts with |ν| = total.
fn compositions(total: usize, parts: usize) -> usize {
    if parts == 0 {
        return usize::from(total == 0);
    }
    binomial(total + parts - 1, parts - 1).unwrap_or(usize::MAX)
}

/// All ν ∈ ℕ₀ⁿ with |ν| = s, largest leading entry first.
pub fn enumerate_level(n: usize, s: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be positive");
    let mut out = Vec::with_capacity(compositions(s, n));
    let mut current = vec![0usize; n];
    fill_level(&mut current, 0, s, s, &mut out);
    out
}

fn fill_level(
    current: &mut [usize],
    pos: usize,
    remaining: usize,
    level: usize,
    out: &mut Vec<MultiIndex>,
) {
    let n = current.len();
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(MultiIndex {
            entries: current.to_vec(),
            order: level,
        });
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill_level(current, pos + 1, remaining - v, level, out);
    }
}

/// A level cutoff {ν : |ν| ≤ N} in dimension n together with its graded ordering.
#[derive(Debug, Clone)]
pub struct TruncationSpec {
    dim: usize,
    level: usize,
    indices: Vec<MultiIndex>,
    level_offsets: Vec<usize>,
}

impl PartialEq for TruncationSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.level == other.level
    }
}

impl Eq for TruncationSpec {}

impl TruncationSpec {
    pub fn new(dim: usize, level: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let size = binomial(level + dim, dim)
            .filter(|&d| d <= MAX_BASIS_SIZE)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "basis for dim={dim}, level={level} exceeds {MAX_BASIS_SIZE} functions"
                ))
            })?;
        let mut indices = Vec::with_capacity(size);
        let mut level_offsets = Vec::with_capacity(level + 2);
        for s in 0..=level {
            level_offsets.push(indices.len());
            indices.extend(enumerate_level(dim, s));
        }
        level_offsets.push(indices.len());
        debug_assert_eq!(indices.len(), size);
        Ok(Self {
            dim,
            level,
            indices,
            level_offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// D = C(N + n, n).
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Rank range occupied by the shell |ν| = s.
    pub fn shell_range(&self, s: usize) -> std::ops::Range<usize> {
        assert!(s <= self.level, "shell {s} above cutoff {}", self.level);
        self.level_offsets[s]..self.level_offsets[s + 1]
    }

    pub fn rank(&self, nu: &MultiIndex) -> Result<usize> {
        if nu.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: nu.dim(),
            });
        }
        if nu.order() > self.level {
            return Err(Error::OutOfRange(format!(
                "multi-index {nu} has order {} above cutoff {}",
                nu.order(),
                self.level
            )));
        }
        let mut before = 0;
        let mut remaining = nu.order();
        let n = self.dim;
        for (j, &v) in nu.entries()[..n - 1].iter().enumerate() {
            for larger in v + 1..=remaining {
                before += compositions(remaining - larger, n - j - 1);
            }
            remaining -= v;
        }
        Ok(self.level_offsets[nu.order()] + before)
    }

    pub fn unrank(&self, i: usize) -> Result<&MultiIndex> {
        self.indices.get(i).ok_or_else(|| {
            Error::OutOfRange(format!("rank {i} outside basis of size {}", self.size()))
        })
    }
}

//! Shared domain types: context vectors, per-round context tuples, and
//! append-only histories with batch bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite feature vector attached to one action in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidContext("dimension must be at least 1".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidContext(format!("non-finite coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    /// Builds a vector without the finiteness check. Callers guarantee the invariant.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }
}

impl AsRef<[f64]> for ContextVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Majority,
    Minority,
}

/// Round type on the two-bridge instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundKind {
    /// Only the top bridge is reachable.
    A,
    /// Both bridges are reachable.
    B,
    /// Only the bottom bridge is reachable.
    C,
}

/// The tuple of contexts offered in one round. `None` marks an unavailable action.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextRound {
    contexts: Vec<Option<ContextVector>>,
    group: Group,
    kind: Option<RoundKind>,
    round_index: usize,
}

pub(crate) const TOP: [f64; 2] = [1.0, 0.0];
pub(crate) const BOTTOM: [f64; 2] = [0.0, 1.0];

impl ContextRound {
    pub fn new(
        contexts: Vec<Option<ContextVector>>,
        group: Group,
        kind: Option<RoundKind>,
        round_index: usize,
    ) -> Result<Self> {
        if round_index == 0 {
            return Err(Error::InvalidContext("round index starts at 1".into()));
        }
        let mut dim = None;
        for c in contexts.iter().flatten() {
            match dim {
                None => dim = Some(c.dim()),
                Some(d) if d != c.dim() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: c.dim(),
                    })
                }
                _ => {}
            }
        }
        if dim.is_none() {
            return Err(Error::InvalidContext("no available action".into()));
        }
        let round = Self {
            contexts,
            group,
            kind,
            round_index,
        };
        if let Some(kind) = kind {
            if !round.matches_two_bridge(kind) {
                return Err(Error::InvalidContext(format!(
                    "availability pattern does not match round kind {kind:?}"
                )));
            }
        }
        Ok(round)
    }

    pub(crate) fn new_unchecked(
        contexts: Vec<Option<ContextVector>>,
        group: Group,
        kind: Option<RoundKind>,
        round_index: usize,
    ) -> Self {
        Self {
            contexts,
            group,
            kind,
            round_index,
        }
    }

    fn matches_two_bridge(&self, kind: RoundKind) -> bool {
        let avail: Vec<&[f64]> = self.available().map(|(_, x)| x.as_slice()).collect();
        let all = |v: &[f64; 2]| avail.iter().all(|x| *x == v.as_slice());
        match kind {
            RoundKind::A => all(&TOP),
            RoundKind::C => all(&BOTTOM),
            RoundKind::B => {
                avail.iter().any(|x| *x == TOP.as_slice())
                    && avail.iter().any(|x| *x == BOTTOM.as_slice())
                    && avail
                        .iter()
                        .all(|x| *x == TOP.as_slice() || *x == BOTTOM.as_slice())
            }
        }
    }

    pub fn contexts(&self) -> &[Option<ContextVector>] {
        &self.contexts
    }

    /// Number of action slots, available or not.
    pub fn num_actions(&self) -> usize {
        self.contexts.len()
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn kind(&self) -> Option<RoundKind> {
        self.kind
    }

    pub fn round_index(&self) -> usize {
        self.round_index
    }

    pub fn dim(&self) -> usize {
        self.available().next().map(|(_, x)| x.dim()).unwrap_or(0)
    }

    pub fn context(&self, action: usize) -> Option<&ContextVector> {
        self.contexts.get(action).and_then(Option::as_ref)
    }

    /// Iterates over `(action index, context)` for available actions.
    pub fn available(&self) -> impl Iterator<Item = (usize, &ContextVector)> {
        self.contexts
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
    }

    pub fn num_available(&self) -> usize {
        self.contexts.iter().filter(|c| c.is_some()).count()
    }

    /// True when every available action carries the same context, so every
    /// action is equivalent for any linear scoring rule.
    pub fn all_available_identical(&self) -> bool {
        let mut it = self.available();
        let first = match it.next() {
            Some((_, x)) => x.as_slice(),
            None => return true,
        };
        it.all(|(_, x)| x.as_slice() == first)
    }

    pub fn first_available(&self) -> usize {
        self.available()
            .next()
            .map(|(i, _)| i)
            .expect("round has an available action")
    }
}

/// Previous-batch boundary for round `t` with batch size `batch_size`: `Y * floor((t-1)/Y)`.
/// Rounds in the first batch return 0.
pub fn last_batch_end(t: usize, batch_size: usize) -> usize {
    assert!(t >= 1 && batch_size >= 1, "t and batch size start at 1");
    batch_size * ((t - 1) / batch_size)
}

/// Append-only list of observed `(context, reward)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    entries: Vec<(ContextVector, f64)>,
    batch_size: usize,
}

impl History {
    pub fn new(batch_size: usize) -> Self {
        assert!(batch_size >= 1, "batch size must be at least 1");
        Self {
            entries: Vec::new(),
            batch_size,
        }
    }

    pub fn with_capacity(batch_size: usize, capacity: usize) -> Self {
        let mut h = Self::new(batch_size);
        h.entries.reserve(capacity);
        h
    }

    pub fn push(&mut self, x: ContextVector, reward: f64) {
        self.entries.push((x, reward));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn entries(&self) -> &[(ContextVector, f64)] {
        &self.entries
    }

    /// Number of batches with at least one entry: `ceil(len / Y)`.
    pub fn num_batches(&self) -> usize {
        self.entries.len().div_ceil(self.batch_size)
    }

    /// Entries of batch `b` (1-based): rounds `(b-1)Y+1 ..= min(bY, len)`.
    pub fn batch_slice(&self, batch: usize) -> Result<&[(ContextVector, f64)]> {
        let start = batch.saturating_sub(1) * self.batch_size;
        if batch == 0 || start >= self.entries.len() {
            return Err(Error::EmptyBatch {
                batch,
                len: self.entries.len(),
                batch_size: self.batch_size,
            });
        }
        let end = (start + self.batch_size).min(self.entries.len());
        Ok(&self.entries[start..end])
    }
}

//! Bounded top-K selection under the retrieval order: higher score first,
//! equal scores by ascending passage id.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::ScoredPassage;

/// Ranking order between two scored passages; `Less` means `a` ranks first.
pub fn rank_order(a: &ScoredPassage, b: &ScoredPassage) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.passage_id.cmp(&b.passage_id))
}

/// Borrowed candidate; its `Ord` puts worse candidates higher so a max-heap
/// keeps the current worst on top.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate<'a> {
    pub score: f64,
    pub raw_dot: f64,
    pub id: &'a str,
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.id.cmp(other.id))
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

pub(crate) struct TopK<'a> {
    heap: BinaryHeap<Candidate<'a>>,
    k: usize,
}

impl<'a> TopK<'a> {
    pub fn new(k: usize) -> Self {
        TopK {
            heap: BinaryHeap::with_capacity(k + 1),
            k,
        }
    }

    pub fn push(&mut self, c: Candidate<'a>) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(worst) = self.heap.peek() {
            if c < *worst {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    /// Best first.
    pub fn into_sorted(self) -> Vec<Candidate<'a>> {
        self.heap.into_sorted_vec()
    }
}

/// `raw × weight`, with negative zero folded into positive zero so that
/// every zero score compares equal and serializes identically.
#[inline]
pub fn weighted_score(raw_dot: f64, weight: f64) -> f64 {
    let s = raw_dot * weight;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::NodeId;

#[derive(Debug, Clone, Copy)]
struct Entry {
    score: f64,
    id: Reverse<NodeId>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then(self.id.cmp(&other.id))
    }
}

/// Open nodes keyed by score; node ids double as creation order.
#[derive(Debug, Default, Clone)]
pub struct Frontier {
    heap: BinaryHeap<Entry>,
}

impl Frontier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: NodeId, score: f64) {
        self.heap.push(Entry { score, id: Reverse(id) });
    }

    /// Removes and returns the best node; `None` means the frontier is exhausted.
    pub fn select_best(&mut self) -> Option<(NodeId, f64)> {
        self.heap.pop().map(|e| (e.id.0, e.score))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

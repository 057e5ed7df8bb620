//! Search-tree snapshots and proof-script files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NodeId, NodeStatus, PassResult, SearchNode};
use crate::artifact::{write_jsonl, write_text_lines, ArtifactError, ArtifactMeta};
use crate::env::protocol::WireGoal;

/// One node of a search tree as written to a snapshot file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub tactic: Option<String>,
    pub step_logprob: f64,
    pub cumulative: f64,
    pub depth: u32,
    pub score: Option<f64>,
    pub status: NodeStatus,
    pub goals: Vec<WireGoal>,
    pub born: Option<usize>,
    pub expanded_at: Option<usize>,
}

impl From<&SearchNode> for NodeRecord {
    fn from(n: &SearchNode) -> Self {
        NodeRecord {
            id: n.id,
            parent: n.parent,
            tactic: n.tactic.clone(),
            step_logprob: n.step_logprob,
            cumulative: n.cumulative,
            depth: n.depth,
            score: n.score,
            status: n.status,
            goals: n.state.goals.iter().map(WireGoal::from).collect(),
            born: n.born,
            expanded_at: n.expanded_at,
        }
    }
}

pub fn node_records(result: &PassResult) -> Vec<NodeRecord> {
    result.nodes.iter().map(NodeRecord::from).collect()
}

pub fn write_snapshot(path: &Path, meta: &ArtifactMeta, result: &PassResult) -> Result<(), ArtifactError> {
    write_jsonl(path, Some(meta), &node_records(result))
}

/// One tactic per line, preceded by the metadata comment.
pub fn write_script(path: &Path, meta: &ArtifactMeta, script: &[String]) -> Result<(), ArtifactError> {
    write_text_lines(path, Some(meta), script)
}

//! Generator for the corrupted-corpus fixture: a document of theorem blocks
//! and a planted set of formal candidates that the corrupting informalizer
//! mangles. Exactly half of all candidate slots are planted.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Document;

const SUBJECTS: &[&str] = &[
    "every finite group",
    "every cyclic group",
    "the sum of two even integers",
    "every subgroup of an abelian group",
    "the product of two odd integers",
    "every field",
    "the kernel of a group homomorphism",
    "every prime greater than two",
];

const CLAIMS: &[&str] = &[
    "has a well-defined order",
    "is closed under the group operation",
    "is even",
    "is normal",
    "is odd",
    "has no zero divisors",
    "is a subgroup",
    "is odd",
];

/// One planted label per candidate slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotLabel {
    pub formal: String,
    pub corrupted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorruptedFixture {
    pub document: Document,
    pub fan_out: usize,
    pub labels: Vec<SlotLabel>,
}

impl CorruptedFixture {
    pub fn planted(&self) -> BTreeSet<String> {
        self.labels.iter().filter(|l| l.corrupted).map(|l| l.formal.clone()).collect()
    }

    pub fn clean(&self) -> BTreeSet<String> {
        self.labels.iter().filter(|l| !l.corrupted).map(|l| l.formal.clone()).collect()
    }
}

/// Formal text the distinct-suffix formalizer produces for slot `j`.
pub fn slot_formal(statement: &str, j: usize) -> String {
    format!("example : {statement} := by -- candidate {j}")
}

pub fn corrupted_fixture(statements: usize, fan_out: usize, seed: u64) -> CorruptedFixture {
    let mut text = String::from("Exercises in elementary algebra.\n\n");
    let mut formals = Vec::new();
    for i in 0..statements {
        let statement = format!(
            "For case {}, {} {}.",
            i + 1,
            SUBJECTS[i % SUBJECTS.len()],
            CLAIMS[(i / SUBJECTS.len() + i) % CLAIMS.len()]
        );
        text.push_str(&format!("Theorem {}. {statement}\n\n", i + 1));
        formals.extend((0..fan_out).map(|j| slot_formal(&statement, j)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: BTreeSet<usize> =
        rand::seq::index::sample(&mut rng, formals.len(), formals.len() / 2).into_iter().collect();
    let labels = formals
        .into_iter()
        .enumerate()
        .map(|(i, formal)| SlotLabel { formal, corrupted: planted.contains(&i) })
        .collect();
    CorruptedFixture { document: Document { id: "corrupted".into(), text }, fan_out, labels }
}

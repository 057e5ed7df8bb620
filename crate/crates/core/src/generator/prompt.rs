use crate::retrieval::Premise;

const PREAMBLE: &str = "\
A formal proof is a complete, kernel-checked derivation of a proposition. \
While it is being built with tactics, the proof state lists the goals that \
remain open together with the local hypotheses available for each of them.

How tactics relate to the state:
1. A tactic is one step that transforms the proof state.
2. A step may close the first goal, or replace it with simpler subgoals.
3. The state shown after a step is exactly what is left to prove.
4. When no goals remain, the proof is finished and can be checked.";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PromptContext {
    pub nl_description: Option<String>,
    /// Header, statement, and the tactics applied so far.
    pub proof_prefix: String,
    pub state: String,
    pub premises: Vec<Premise>,
}

/// Header and tactics-so-far, with the natural-language description as a doc comment.
pub fn proof_prefix(statement: &str, nl_description: Option<&str>, tactics: &[String]) -> String {
    let mut out = String::new();
    if let Some(nl) = nl_description {
        out.push_str(&format!("/-- {nl} -/\n"));
    }
    out.push_str(&format!("theorem goal : {statement} := by\n"));
    for t in tactics {
        out.push_str(&format!("  {t}\n"));
    }
    out
}

pub fn assemble_prompt(ctx: &PromptContext) -> String {
    let mut out = String::new();
    out.push_str(PREAMBLE);
    out.push_str("\n\nHere is the FORMAL PROOF before the current state:\n");
    out.push_str(&ctx.proof_prefix);
    if !ctx.proof_prefix.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("\nHere is the current STATE:\n");
    out.push_str(&ctx.state);
    out.push_str("\nPlease generate a tactic in lean4 to solve the state.\n");
    if !ctx.premises.is_empty() {
        out.push_str("\nAnd here're some theorems that may be helpful:\n");
        for (i, p) in ctx.premises.iter().enumerate() {
            out.push_str(&format!(
                "\nID:{i}\n\nFormal name: {}\n\nInformal name: {}\n\nFormal statement: {}\n",
                p.formal_name, p.informal_name, p.formal_statement
            ));
        }
    }
    out
}

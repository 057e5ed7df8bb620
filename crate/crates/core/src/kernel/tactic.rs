//! Toy tactic language and its single-step semantics.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::{is_identifier, Formula};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub formula: Formula,
}

impl Hypothesis {
    pub fn new(name: impl Into<String>, formula: Formula) -> Self {
        Self { name: name.into(), formula }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub hypotheses: Vec<Hypothesis>,
    pub target: Formula,
}

impl Goal {
    pub fn new(target: Formula) -> Self {
        Self { hypotheses: Vec::new(), target }
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Formula> {
        self.hypotheses.iter().find(|h| h.name == name).map(|h| &h.formula)
    }

    fn has_name(&self, name: &str) -> bool {
        self.hypotheses.iter().any(|h| h.name == name)
    }

    /// Canonical fresh name for `intro`: `h`, then `h1`, `h2`, ...
    pub fn fresh_name(&self) -> String {
        if !self.has_name("h") {
            return "h".to_string();
        }
        (1..).map(|i| format!("h{i}")).find(|n| !self.has_name(n)).expect("unbounded name supply")
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.hypotheses {
            writeln!(f, "{} : {}", h.name, h.formula)?;
        }
        write!(f, "⊢ {}", self.target)
    }
}

/// Renders a goal list the way prompts and snapshots show it.
pub fn render_goals(goals: &[Goal]) -> String {
    if goals.is_empty() {
        return "no goals".to_string();
    }
    goals.iter().map(Goal::to_string).collect::<Vec<_>>().join("\n\n")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tactic {
    Intro(String),
    Exact(String),
    Apply(String),
    Split,
    Left,
    Right,
    Cases(String),
    Destruct(String),
    Absurd(String),
    Trivial,
    Assumption,
}

pub const TEMPLATES: [&str; 11] =
    ["intro", "exact", "apply", "split", "left", "right", "cases", "destruct", "absurd", "trivial", "assumption"];

impl Tactic {
    pub fn parse(text: &str) -> Result<Tactic, String> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let named = |ctor: fn(String) -> Tactic| -> Result<Tactic, String> {
            match words.as_slice() {
                [_, name] if is_identifier(name) => Ok(ctor(name.to_string())),
                [kw, name] => Err(format!("`{kw}` expects an identifier, got {name:?}")),
                [kw, ..] => Err(format!("`{kw}` expects exactly one identifier")),
                [] => unreachable!(),
            }
        };
        let bare = |t: Tactic| -> Result<Tactic, String> {
            if words.len() == 1 {
                Ok(t)
            } else {
                Err(format!("`{}` takes no arguments", words[0]))
            }
        };
        match words.first().copied() {
            None => Err("empty tactic".to_string()),
            Some("intro") => named(Tactic::Intro),
            Some("exact") => named(Tactic::Exact),
            Some("apply") => named(Tactic::Apply),
            Some("cases") => named(Tactic::Cases),
            Some("destruct") => named(Tactic::Destruct),
            Some("absurd") => named(Tactic::Absurd),
            Some("split") => bare(Tactic::Split),
            Some("left") => bare(Tactic::Left),
            Some("right") => bare(Tactic::Right),
            Some("trivial") => bare(Tactic::Trivial),
            Some("assumption") => bare(Tactic::Assumption),
            Some(other) => Err(format!("unknown tactic `{other}`")),
        }
    }

    pub fn template(&self) -> &'static str {
        match self {
            Tactic::Intro(_) => "intro",
            Tactic::Exact(_) => "exact",
            Tactic::Apply(_) => "apply",
            Tactic::Split => "split",
            Tactic::Left => "left",
            Tactic::Right => "right",
            Tactic::Cases(_) => "cases",
            Tactic::Destruct(_) => "destruct",
            Tactic::Absurd(_) => "absurd",
            Tactic::Trivial => "trivial",
            Tactic::Assumption => "assumption",
        }
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tactic::Intro(h)
            | Tactic::Exact(h)
            | Tactic::Apply(h)
            | Tactic::Cases(h)
            | Tactic::Destruct(h)
            | Tactic::Absurd(h) => write!(f, "{} {h}", self.template()),
            _ => f.write_str(self.template()),
        }
    }
}

/// Template of a tactic string (its first word), if any.
pub fn template_of(tactic: &str) -> Option<&str> {
    tactic.split_whitespace().next()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepError {
    Inapplicable(String),
    NoProgress,
}

fn inapplicable<T>(msg: impl Into<String>) -> Result<T, StepError> {
    Err(StepError::Inapplicable(msg.into()))
}

fn lookup<'g>(goal: &'g Goal, name: &str) -> Result<&'g Formula, StepError> {
    goal.hypothesis(name).ok_or_else(|| StepError::Inapplicable(format!("unknown hypothesis `{name}`")))
}

/// Applies `tactic` to the first goal and returns the new goal list.
pub fn step(goals: &[Goal], tactic: &Tactic) -> Result<Vec<Goal>, StepError> {
    let Some((goal, rest)) = goals.split_first() else {
        return inapplicable("no goals");
    };
    let replaced: Vec<Goal> = match tactic {
        Tactic::Intro(name) => {
            let Formula::Implies(premise, conclusion) = &goal.target else {
                return inapplicable("target is not an implication");
            };
            if goal.has_name(name) {
                return inapplicable(format!("name `{name}` already in use"));
            }
            let mut next = goal.clone();
            next.hypotheses.push(Hypothesis::new(name.clone(), (**premise).clone()));
            next.target = (**conclusion).clone();
            vec![next]
        }
        Tactic::Exact(name) => {
            if lookup(goal, name)? != &goal.target {
                return inapplicable(format!("`{name}` does not match the target"));
            }
            vec![]
        }
        Tactic::Apply(name) => {
            let Formula::Implies(premise, conclusion) = lookup(goal, name)? else {
                return inapplicable(format!("`{name}` is not an implication"));
            };
            if **conclusion != goal.target {
                return inapplicable(format!("conclusion of `{name}` does not match the target"));
            }
            vec![Goal { hypotheses: goal.hypotheses.clone(), target: (**premise).clone() }]
        }
        Tactic::Split => {
            let Formula::And(lhs, rhs) = &goal.target else {
                return inapplicable("target is not a conjunction");
            };
            vec![
                Goal { hypotheses: goal.hypotheses.clone(), target: (**lhs).clone() },
                Goal { hypotheses: goal.hypotheses.clone(), target: (**rhs).clone() },
            ]
        }
        Tactic::Left | Tactic::Right => {
            let Formula::Or(lhs, rhs) = &goal.target else {
                return inapplicable("target is not a disjunction");
            };
            let chosen = if *tactic == Tactic::Left { lhs } else { rhs };
            vec![Goal { hypotheses: goal.hypotheses.clone(), target: (**chosen).clone() }]
        }
        Tactic::Cases(name) => {
            let Formula::Or(lhs, rhs) = lookup(goal, name)? else {
                return inapplicable(format!("`{name}` is not a disjunction"));
            };
            let with = |f: &Formula| {
                let mut g = goal.clone();
                for h in g.hypotheses.iter_mut().filter(|h| h.name == *name) {
                    h.formula = f.clone();
                }
                g
            };
            vec![with(lhs), with(rhs)]
        }
        Tactic::Destruct(name) => {
            let Formula::And(lhs, rhs) = lookup(goal, name)? else {
                return inapplicable(format!("`{name}` is not a conjunction"));
            };
            let (first, second) = (format!("{name}_1"), format!("{name}_2"));
            if goal.has_name(&first) || goal.has_name(&second) {
                return inapplicable(format!("names `{first}`/`{second}` already in use"));
            }
            let mut hypotheses = Vec::with_capacity(goal.hypotheses.len() + 1);
            for h in &goal.hypotheses {
                if h.name == *name {
                    hypotheses.push(Hypothesis::new(first.clone(), (**lhs).clone()));
                    hypotheses.push(Hypothesis::new(second.clone(), (**rhs).clone()));
                } else {
                    hypotheses.push(h.clone());
                }
            }
            vec![Goal { hypotheses, target: goal.target.clone() }]
        }
        Tactic::Absurd(name) => {
            if *lookup(goal, name)? != Formula::Falsity {
                return inapplicable(format!("`{name}` is not ⊥"));
            }
            vec![]
        }
        Tactic::Trivial => {
            if goal.target != Formula::Truth {
                return inapplicable("target is not ⊤");
            }
            vec![]
        }
        Tactic::Assumption => {
            if !goal.hypotheses.iter().any(|h| h.formula == goal.target) {
                return inapplicable("no hypothesis matches the target");
            }
            vec![]
        }
    };
    let mut next = replaced;
    next.extend_from_slice(rest);
    if next.as_slice() == goals {
        return Err(StepError::NoProgress);
    }
    Ok(next)
}

/// Tactics that succeed on the first goal, in a fixed order, decided from the
/// shapes of the target and hypotheses alone.
pub fn applicable_tactics(goal: &Goal) -> Vec<Tactic> {
    let mut out = Vec::new();
    match &goal.target {
        Formula::Implies(..) => out.push(Tactic::Intro(goal.fresh_name())),
        Formula::And(..) => out.push(Tactic::Split),
        Formula::Or(..) => {
            out.push(Tactic::Left);
            out.push(Tactic::Right);
        }
        Formula::Truth => out.push(Tactic::Trivial),
        Formula::Atom(_) | Formula::Falsity => {}
    }
    for h in &goal.hypotheses {
        let name = h.name.clone();
        if h.formula == goal.target {
            out.push(Tactic::Exact(name.clone()));
        }
        match &h.formula {
            // `apply` onto an identical target leaves the goal unchanged.
            Formula::Implies(premise, conclusion) if **conclusion == goal.target && **premise != goal.target => {
                out.push(Tactic::Apply(name))
            }
            Formula::Or(..) => out.push(Tactic::Cases(name)),
            Formula::And(..) if !goal.has_name(&format!("{name}_1")) && !goal.has_name(&format!("{name}_2")) => {
                out.push(Tactic::Destruct(name))
            }
            Formula::Falsity => out.push(Tactic::Absurd(name)),
            _ => {}
        }
    }
    if goal.hypotheses.iter().any(|h| h.formula == goal.target) {
        out.push(Tactic::Assumption);
    }
    out
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{AssemblyError, ConversationExample, Origin};
use crate::prompts::PromptMethod;
use crate::rng;
use crate::tokenize::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetName {
    Topic,
    Scen,
    Cont,
    Gen,
    Tran,
    GenTran,
    GenreasTranToklim,
    GenreasTranExlim,
    GenreasTranFull,
}

impl SubsetName {
    pub const ALL: [SubsetName; 9] = [
        SubsetName::Topic,
        SubsetName::Scen,
        SubsetName::Cont,
        SubsetName::Gen,
        SubsetName::Tran,
        SubsetName::GenTran,
        SubsetName::GenreasTranToklim,
        SubsetName::GenreasTranExlim,
        SubsetName::GenreasTranFull,
    ];

    /// Subsets sampled down to the common token cap.
    pub const TOKEN_LIMITED: [SubsetName; 7] = [
        SubsetName::Topic,
        SubsetName::Scen,
        SubsetName::Cont,
        SubsetName::Gen,
        SubsetName::Tran,
        SubsetName::GenTran,
        SubsetName::GenreasTranToklim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubsetName::Topic => "topic",
            SubsetName::Scen => "scen",
            SubsetName::Cont => "cont",
            SubsetName::Gen => "gen",
            SubsetName::Tran => "tran",
            SubsetName::GenTran => "gen_tran",
            SubsetName::GenreasTranToklim => "genreas_tran_toklim",
            SubsetName::GenreasTranExlim => "genreas_tran_exlim",
            SubsetName::GenreasTranFull => "genreas_tran_full",
        }
    }
}

impl fmt::Display for SubsetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubsetName {
    type Err = AssemblyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SubsetName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| AssemblyError::UnknownSubset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    WithReasoning,
    WithoutReasoning,
}

/// Declarative description of one training subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub name: SubsetName,
    /// Generated-example families included.
    pub methods: Vec<PromptMethod>,
    pub include_translated: bool,
    pub include_reasoning: bool,
    pub budgeted: bool,
}

impl SubsetSpec {
    pub fn of(name: SubsetName) -> Self {
        use PromptMethod::*;
        let all = vec![Topic, Scenario, Context];
        let (methods, include_translated, include_reasoning, budgeted) = match name {
            SubsetName::Topic => (vec![Topic], false, false, true),
            SubsetName::Scen => (vec![Scenario], false, false, true),
            SubsetName::Cont => (vec![Context], false, false, true),
            SubsetName::Gen => (all, false, false, true),
            SubsetName::Tran => (vec![], true, false, true),
            SubsetName::GenTran => (all, true, false, true),
            SubsetName::GenreasTranToklim => (all, true, true, true),
            SubsetName::GenreasTranExlim => (all, true, true, false),
            SubsetName::GenreasTranFull => (all, true, true, false),
        };
        Self { name, methods, include_translated, include_reasoning, budgeted }
    }

    pub fn counting_mode(&self) -> CountingMode {
        if self.include_reasoning {
            CountingMode::WithReasoning
        } else {
            CountingMode::WithoutReasoning
        }
    }

    pub fn admits(&self, ex: &ConversationExample) -> bool {
        match ex.origin {
            Origin::Translated => self.include_translated,
            Origin::Generated => ex.method.is_some_and(|m| self.methods.contains(&m)),
        }
    }
}

/// Turn contents, plus the reasoning trace when `include_reasoning`.
pub fn example_tokens(ex: &ConversationExample, include_reasoning: bool, counter: &dyn TokenCounter) -> u64 {
    let content: usize = ex.turns.iter().map(|t| counter.count(&t.content)).sum();
    let reasoning = match (&ex.reasoning_trace, include_reasoning) {
        (Some(r), true) => counter.count(r),
        _ => 0,
    };
    (content + reasoning) as u64
}

/// The pool filtered to `spec`, with traces stripped when it excludes them.
pub fn candidate_pool(spec: &SubsetSpec, pool: &[ConversationExample]) -> Vec<ConversationExample> {
    pool.iter()
        .filter(|ex| spec.admits(ex))
        .map(|ex| if spec.include_reasoning { ex.clone() } else { ex.clone().without_reasoning() })
        .collect()
}

/// Common cap for the token-limited subsets: the smallest of their
/// unsampled token totals. Subsets with no candidates at all (say, no
/// translation corpus) do not pull the cap to zero; they are left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub per_subset_cap: u64,
    pub candidate_totals: BTreeMap<SubsetName, u64>,
}

pub fn compute_budget(pool: &[ConversationExample], counter: &dyn TokenCounter) -> TokenBudget {
    let candidate_totals: BTreeMap<SubsetName, u64> = SubsetName::TOKEN_LIMITED
        .iter()
        .map(|&name| {
            let spec = SubsetSpec::of(name);
            let total = pool
                .iter()
                .filter(|ex| spec.admits(ex))
                .map(|ex| example_tokens(ex, spec.include_reasoning, counter))
                .sum();
            (name, total)
        })
        .collect();
    let per_subset_cap = candidate_totals.values().copied().filter(|&t| t > 0).min().unwrap_or(0);
    TokenBudget { per_subset_cap, candidate_totals }
}

fn shuffled(mut examples: Vec<ConversationExample>, rng_seed: u64, name: SubsetName) -> Vec<ConversationExample> {
    let mut rng = rng::stream(rng_seed, &format!("subset-{name}"));
    examples.shuffle(&mut rng);
    examples
}

/// Builds one subset.
///
/// Token-limited subsets draw whole examples in seeded random order until
/// the next one would overflow the cap. The example-limited subset takes
/// exactly the examples of the token-limited generated+translated subset and
/// restores their reasoning traces. The full subset is everything, shuffled.
pub fn build_subset(
    spec: &SubsetSpec,
    pool: &[ConversationExample],
    budget: Option<&TokenBudget>,
    rng_seed: u64,
    counter: &dyn TokenCounter,
) -> Result<Vec<ConversationExample>, AssemblyError> {
    match spec.name {
        SubsetName::GenreasTranExlim => {
            let base = build_subset(&SubsetSpec::of(SubsetName::GenTran), pool, budget, rng_seed, counter)?;
            let by_id: std::collections::HashMap<&str, &ConversationExample> =
                pool.iter().map(|ex| (ex.source_id.as_str(), ex)).collect();
            Ok(base
                .into_iter()
                .map(|ex| match by_id.get(ex.source_id.as_str()) {
                    Some(orig) => ConversationExample { reasoning_trace: orig.reasoning_trace.clone(), ..ex },
                    None => ex,
                })
                .collect())
        }
        _ if !spec.budgeted => Ok(shuffled(candidate_pool(spec, pool), rng_seed, spec.name)),
        _ => {
            let budget = budget.ok_or_else(|| AssemblyError::MissingBudget(spec.name.to_string()))?;
            let cap = budget.per_subset_cap;
            let order = shuffled(candidate_pool(spec, pool), rng_seed, spec.name);
            let sizes: Vec<u64> = order.iter().map(|ex| example_tokens(ex, spec.include_reasoning, counter)).collect();
            let available: u64 = sizes.iter().sum();
            if available < cap {
                return Err(AssemblyError::BudgetInfeasible { subset: spec.name.to_string(), available, cap });
            }
            let mut total = 0;
            let mut taken = 0;
            for &size in &sizes {
                if total + size > cap {
                    break;
                }
                total += size;
                taken += 1;
            }
            let mut order = order;
            order.truncate(taken);
            Ok(order)
        }
    }
}

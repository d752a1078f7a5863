//! Assumption generation: explore the open system composed with the
//! interface actor and the error automaton, then turn the error behaviour
//! into a deterministic assumption over the component's interface.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::aml::{ActorDef, Model};
use crate::infm::{default_infm_capacity, is_chain_method, synthesize_infm, InfoSpec};
use crate::lts::{
    backward_propagate_pi, determinize_complete, flatten_sequences, reconfigure_psi,
    reduce_weak_trace, remove_pi, rename, write_aut, Action, AutError, Lts, PiVerdict, PsiError,
};
use crate::property::{compose_property_lts, ErrDfa};
use crate::semantics::{default_state_cap, SemanticsError};

#[derive(Debug, thiserror::Error)]
pub enum AssumeError {
    #[error("cannot tell which actor is missing: {0}")]
    NoComponent(String),
    #[error("interface actor is named `{found}` but the missing component is `{expected}`")]
    OverrideName { expected: String, found: String },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    Aut(#[from] AutError),
}

#[derive(Debug, Clone)]
pub struct AssumeConfig {
    pub state_cap: usize,
    /// Mailbox bound of the synthesized interface actor.
    pub infm_capacity: Option<usize>,
    /// Directory receiving every intermediate LTS as `.aut`.
    pub trace_dir: Option<PathBuf>,
}

impl Default for AssumeConfig {
    fn default() -> Self {
        AssumeConfig {
            state_cap: default_state_cap(),
            infm_capacity: None,
            trace_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssumptionOutcome {
    AlwaysHolds,
    NeverHolds,
    Assumption(Lts),
}

impl AssumptionOutcome {
    pub fn assumption(&self) -> Option<&Lts> {
        match self {
            AssumptionOutcome::Assumption(l) => Some(l),
            _ => None,
        }
    }
}

/// Sizes of the intermediate results, `(states, transitions)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub property: (usize, usize),
    /// The property LTS counted the way a process-algebra encoding reports
    /// it: one step per send, empty takes silent, reduced modulo weak trace
    /// equivalence, and the error state reached through one extra `pi`
    /// step.
    pub property_reduced: (usize, usize),
    pub reconfigured: (usize, usize),
    pub reduced: (usize, usize),
    pub propagated: Option<(usize, usize)>,
    pub assumption: Option<(usize, usize)>,
}

fn size(l: &Lts) -> (usize, usize) {
    (l.num_states(), l.num_transitions())
}

#[derive(Debug, Clone)]
pub struct AssumptionRun {
    pub outcome: AssumptionOutcome,
    pub stats: PipelineStats,
    pub component: String,
    pub infm: ActorDef,
    /// The reduced LTS just before π propagation.
    pub reduced: Lts,
    /// The determinized LTS with π still present.
    pub with_pi: Option<Lts>,
}

/// Keeps only the sends that cross the boundary between the open system
/// and the component: an open actor's sends to the component, and the
/// component's sends to the open actors.
pub fn hide_internal_c1(l: &Lts, component: &str) -> Lts {
    rename(l, |a| match a {
        Action::Take { taker, sends } => {
            let keep = |r: &str| {
                if taker == component {
                    r != component
                } else {
                    r == component
                }
            };
            Action::take(
                taker.clone(),
                sends
                    .iter()
                    .filter(|s| keep(&s.receiver))
                    .cloned()
                    .collect(),
            )
        }
        other => other.clone(),
    })
}

fn send_level_size(property: &Lts) -> (usize, usize) {
    let sends = rename(property, |a| match a {
        Action::Take { sends, .. } => Action::from_sends(sends.clone()),
        other => other.clone(),
    });
    let r = reduce_weak_trace(&flatten_sequences(&sends));
    let extra = usize::from(r.pi().is_some());
    (r.num_states() + extra, r.num_transitions() + extra)
}

/// Name of the missing component.
pub fn component_name(open: &Model, info: &InfoSpec) -> Result<String, AssumeError> {
    if let Some(c) = &info.component {
        return Ok(c.clone());
    }
    match open.external_targets().as_slice() {
        [one] => Ok(one.clone()),
        [] => Err(AssumeError::NoComponent(
            "the open system sends to no undeclared actor".into(),
        )),
        many => Err(AssumeError::NoComponent(format!(
            "candidates are {}",
            many.join(", ")
        ))),
    }
}

/// The assumption alphabet: receipt of each interface message, plus every
/// send that occurs in some expected response.
pub fn assumption_alphabet(info: &InfoSpec, infm: Option<&ActorDef>) -> Vec<Action> {
    let mut set: BTreeSet<Action> = match infm {
        Some(a) => a
            .method_names()
            .filter(|m| !is_chain_method(m))
            .map(Action::rcv)
            .collect(),
        None => info.messages().iter().map(|m| Action::rcv(m)).collect(),
    };
    set.extend(info.response_sends().into_iter().map(Action::Snd));
    set.into_iter().collect()
}

fn dump(dir: &Option<PathBuf>, name: &str, l: &Lts) -> Result<(), AssumeError> {
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(|source| AutError::Io {
            path: d.display().to_string(),
            source,
        })?;
        write_aut(l, &Path::new(d).join(format!("{name}.aut")))?;
    }
    Ok(())
}

pub fn generate_assumption(
    open: &Model,
    info: &InfoSpec,
    d: &ErrDfa,
    infm_override: Option<&ActorDef>,
    config: &AssumeConfig,
) -> Result<AssumptionRun, AssumeError> {
    let component = component_name(open, info)?;
    let infm = match infm_override {
        Some(a) if a.name != component => {
            return Err(AssumeError::OverrideName {
                expected: component,
                found: a.name.clone(),
            })
        }
        Some(a) => a.clone(),
        None => {
            let cap = config
                .infm_capacity
                .unwrap_or_else(|| default_infm_capacity(open));
            synthesize_infm(info, &component, cap)
        }
    };
    let mut closed = open.clone();
    closed.actors.push(infm.clone());

    let space = compose_property_lts(&closed, d, config.state_cap)?;
    let property = space.lts;
    dump(&config.trace_dir, "1_property", &property)?;
    let mut stats = PipelineStats {
        property: size(&property),
        property_reduced: send_level_size(&property),
        ..Default::default()
    };

    let hidden = hide_internal_c1(&property, &component);
    dump(&config.trace_dir, "2_hidden", &hidden)?;
    let psi = reconfigure_psi(&hidden, &component)?;
    stats.reconfigured = size(&psi);
    dump(&config.trace_dir, "3_psi", &psi)?;
    let reduced = reduce_weak_trace(&psi);
    stats.reduced = size(&reduced);
    dump(&config.trace_dir, "4_reduced", &reduced)?;

    let finish = |outcome, stats, with_pi| AssumptionRun {
        outcome,
        stats,
        component: component.clone(),
        infm: infm.clone(),
        reduced: reduced.clone(),
        with_pi,
    };
    if reduced.pi().is_none() {
        return Ok(finish(AssumptionOutcome::AlwaysHolds, stats, None));
    }
    let (propagated, verdict) = backward_propagate_pi(&reduced);
    stats.propagated = Some(size(&propagated));
    dump(&config.trace_dir, "5_propagated", &propagated)?;
    if verdict == PiVerdict::InitialIsPi {
        return Ok(finish(AssumptionOutcome::NeverHolds, stats, None));
    }
    let alphabet = assumption_alphabet(info, infm_override);
    let det = determinize_complete(&propagated, &alphabet);
    dump(&config.trace_dir, "6_complete", &det)?;
    let ta = remove_pi(&det);
    stats.assumption = Some(size(&ta));
    dump(&config.trace_dir, "7_assumption", &ta)?;
    Ok(finish(AssumptionOutcome::Assumption(ta), stats, Some(det)))
}

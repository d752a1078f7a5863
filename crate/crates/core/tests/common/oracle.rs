//! Compositional against monolithic verdicts on generated instances.

use super::gen::{capacity_binding, instance, Instance, Knobs};
use agcheck::assume::{generate_assumption, AssumeConfig, AssumptionOutcome};
use agcheck::mcheck::{check_component, verify_monolithic, ComponentVerdict, MonolithicVerdict};

pub const CAP: usize = 50_000;

pub enum Probe {
    /// Outside the premise or too large to explore.
    Skipped,
    Agreed,
    Disagreed(String),
}

pub fn probe(inst: &Instance, require_premise: bool) -> Probe {
    let cfg = AssumeConfig {
        state_cap: CAP,
        ..Default::default()
    };
    let Ok(run) = generate_assumption(&inst.open, &inst.info, &inst.perr, None, &cfg) else {
        return Probe::Skipped;
    };
    if require_premise {
        let mut with_infm = inst.open.clone();
        with_infm.actors.push(run.infm.clone());
        if capacity_binding(&inst.closed(), "M", CAP) != Some(false)
            || capacity_binding(&with_infm, "M", CAP) != Some(false)
        {
            return Probe::Skipped;
        }
    }
    let Ok(v) = check_component(&inst.component, &inst.open, &inst.info, &run.outcome, CAP) else {
        return Probe::Skipped;
    };
    if let ComponentVerdict::RejectedNonCompliant(x) = &v {
        panic!(
            "seed {}: generated component not compliant: {x:?}",
            inst.seed
        );
    }
    let Ok(mono) = verify_monolithic(&inst.closed(), &inst.perr, CAP) else {
        return Probe::Skipped;
    };
    let accepted = v == ComponentVerdict::Accepted;
    let holds = mono == MonolithicVerdict::Holds;
    if accepted == holds {
        Probe::Agreed
    } else {
        let kind = match run.outcome {
            AssumptionOutcome::AlwaysHolds => "always holds",
            AssumptionOutcome::NeverHolds => "never holds",
            AssumptionOutcome::Assumption(_) => "assumption",
        };
        Probe::Disagreed(format!(
            "seed {}: compositional {v:?} ({kind}), monolithic {mono:?}\n{}\n{}\n{}",
            inst.seed,
            inst.closed(),
            inst.info,
            inst.perr_text
        ))
    }
}

/// Runs the oracle on `n` instances satisfying the premise and returns the
/// disagreements.
pub fn sweep(n: usize, knobs: Knobs) -> (usize, Vec<String>) {
    let (mut checked, mut bad) = (0, Vec::new());
    let mut seed = 0;
    while checked < n {
        seed += 1;
        let Some(inst) = instance(seed, knobs) else {
            continue;
        };
        match probe(&inst, true) {
            Probe::Skipped => {}
            Probe::Agreed => checked += 1,
            Probe::Disagreed(d) => {
                checked += 1;
                bad.push(d)
            }
        }
    }
    (checked, bad)
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use agcheck::aml::{parse_model, ActorDef, Model};
use agcheck::assume::{generate_assumption, AssumeConfig, AssumptionRun};
use agcheck::infm::{parse_info, InfoSpec};
use agcheck::property::{parse_perr, ErrDfa};

pub fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(path)
}

pub fn read(path: &str) -> String {
    std::fs::read_to_string(fixture(path)).unwrap()
}

pub fn model(path: &str) -> Model {
    parse_model(&read(path)).unwrap()
}

pub fn actor(path: &str) -> ActorDef {
    model(path).actors.remove(0)
}

pub fn info(path: &str, open: &Model) -> InfoSpec {
    parse_info(&read(path), open).unwrap().info
}

pub fn perr(path: &str) -> ErrDfa {
    parse_perr(&read(path)).unwrap()
}

/// One case study: open system, interface, error automaton, interface
/// actor from the figures, and the candidate component.
pub struct Case {
    pub open: Model,
    pub info: InfoSpec,
    pub perr: ErrDfa,
    pub infm: ActorDef,
    pub component: ActorDef,
}

impl Case {
    pub fn load(dir: &str, open: &str, info_file: &str, perr_file: &str) -> Case {
        let open = model(&format!("{dir}/{open}"));
        Case {
            info: info(&format!("{dir}/{info_file}"), &open),
            perr: perr(&format!("{dir}/{perr_file}")),
            infm: actor(&format!("{dir}/infm.aml")),
            component: actor(&format!("{dir}/component.aml")),
            open,
        }
    }

    pub fn mutex() -> Case {
        Case::load("mutex", "open.aml", "mutex.info", "mutex.perr")
    }

    pub fn quadricopter_single() -> Case {
        Case::load(
            "quadricopter",
            "open_single.aml",
            "observer.info",
            "observer.perr",
        )
    }

    pub fn quadricopter_multi() -> Case {
        Case::load(
            "quadricopter",
            "open_multi.aml",
            "observer.info",
            "observer.perr",
        )
    }

    pub fn eft() -> Case {
        Case::load("eft", "open.aml", "purchase.info", "purchase.perr")
    }

    /// Runs the pipeline with the interface actor from the figures.
    pub fn assume(&self) -> AssumptionRun {
        generate_assumption(
            &self.open,
            &self.info,
            &self.perr,
            Some(&self.infm),
            &AssumeConfig::default(),
        )
        .unwrap()
    }

    pub fn closed(&self) -> Model {
        let mut m = self.open.clone();
        m.actors.push(self.component.clone());
        m
    }
}

pub mod gen;
pub mod laws;
pub mod oracle;

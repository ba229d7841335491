//! Structured pass/fail reports produced by the verification suites.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckItem {
    pub identity: String,
    pub params: String,
    pub pass: bool,
    /// A short description of the failing data, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub items: Vec<CheckItem>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Report {
        Report { name: name.into(), items: Vec::new() }
    }

    pub fn record(&mut self, identity: impl Into<String>, params: impl Into<String>, pass: bool) {
        self.items.push(CheckItem {
            identity: identity.into(),
            params: params.into(),
            pass,
            witness: None,
        });
    }

    pub fn record_witness(
        &mut self,
        identity: impl Into<String>,
        params: impl Into<String>,
        pass: bool,
        witness: impl Into<String>,
    ) {
        let witness = if pass { None } else { Some(witness.into()) };
        self.items.push(CheckItem {
            identity: identity.into(),
            params: params.into(),
            pass,
            witness,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.pass)
    }

    pub fn merge(&mut self, other: Report) {
        self.items.extend(other.items);
    }

    pub fn summary(&self) -> String {
        let total = self.items.len();
        let passed = self.items.iter().filter(|i| i.pass).count();
        format!("{}: {}/{} checks passed", self.name, passed, total)
    }
}

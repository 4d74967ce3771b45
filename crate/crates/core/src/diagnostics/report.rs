use serde::{Deserialize, Serialize};
use serde_json::Value;

/// JSON report emitted by every diagnostic check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub inputs: Value,
    pub margins: Value,
    pub pass: bool,
    pub seed: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain JSON");
        s.push('\n');
        s
    }
}

//! The JSON report and its exit-code mapping.

use std::path::Path;

use ctrfn_core::numlin::Tolerance;
use serde::Serialize;
use serde_json::Value;

use crate::config::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Inconclusive,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Error => 1,
            Status::Inconclusive => 2,
        }
    }

    /// The worse of two statuses.
    pub fn join(self, other: Status) -> Status {
        self.max(other)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Command,
    /// The config exactly as given.
    pub config: Value,
    pub tolerance: Tolerance,
    pub seed: u64,
    pub status: Status,
    pub results: Value,
    /// Exactness records of every truncated computation behind the results.
    pub certificates: Vec<Value>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn failed(command: Command, config: Value, tolerance: Tolerance, seed: u64, error: String) -> Self {
        Self {
            command,
            config,
            tolerance,
            seed,
            status: Status::Error,
            results: Value::Null,
            certificates: Vec::new(),
            warnings: Vec::new(),
            error: Some(error),
        }
    }

    /// Pretty JSON with a trailing newline. Object keys come out sorted, so
    /// equal reports give equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&serde_json::to_value(self).expect("report serializes"))
            .expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, out: Option<&Path>) -> std::io::Result<()> {
        match out {
            Some(path) => std::fs::write(path, self.to_json()),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(self.to_json().as_bytes())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::Error.exit_code(), 1);
        assert_eq!(Status::Inconclusive.exit_code(), 2);
        assert_eq!(Status::Ok.join(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Error.join(Status::Inconclusive), Status::Error);
    }

    #[test]
    fn keys_are_sorted() {
        let r = Report::failed(
            Command::Build,
            serde_json::json!({"z": 1, "a": 2}),
            Tolerance::default(),
            0,
            "boom".into(),
        );
        let s = r.to_json();
        assert!(s.find("\"a\"").unwrap() < s.find("\"z\"").unwrap());
        assert!(s.find("\"certificates\"").unwrap() < s.find("\"command\"").unwrap());
        assert!(s.ends_with("}\n"));
    }
}

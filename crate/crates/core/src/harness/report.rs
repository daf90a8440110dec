//! Deterministic report rows with CSV and summary-JSON serialization.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use super::HarnessError;

/// One check outcome. `constant` carries a fitted value when the check is
/// quantitative; boolean checks leave it empty. Wall time stays in memory
/// only, so serialized artifacts are byte-reproducible.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub suite: String,
    pub check: String,
    pub constant: Option<f64>,
    pub passed: bool,
    pub witness: String,
    pub j: u32,
    pub seed: u64,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    check: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    constant: Option<f64>,
    passed: bool,
    witness: &'a str,
    j: u32,
}

#[derive(Serialize)]
struct Summary<'a> {
    version: u32,
    suite: &'a str,
    seed: u64,
    all_pass: bool,
    rows: Vec<SummaryRow<'a>>,
}

impl Report {
    pub fn new(suite: &str, seed: u64) -> Self {
        Report { suite: suite.to_string(), seed, rows: Vec::new() }
    }

    pub fn push_constant(&mut self, check: &str, value: f64, passed: bool, witness: String, j: u32) {
        self.rows.push(ReportRow {
            suite: self.suite.clone(),
            check: check.to_string(),
            constant: Some(value),
            passed,
            witness,
            j,
            seed: self.seed,
            wall: Duration::ZERO,
        });
    }

    pub fn push_flag(&mut self, check: &str, passed: bool, witness: String, j: u32) {
        self.rows.push(ReportRow {
            suite: self.suite.clone(),
            check: check.to_string(),
            constant: None,
            passed,
            witness,
            j,
            seed: self.seed,
            wall: Duration::ZERO,
        });
    }

    pub fn set_wall(&mut self, wall: Duration) {
        for row in &mut self.rows {
            row.wall = wall;
        }
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    /// CSV with the fixed schema `suite,check,constant,witness,J,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,constant,witness,J,seed\n");
        for r in &self.rows {
            let constant = match (r.constant, r.passed) {
                (Some(c), true) => format!("{c}"),
                (Some(c), false) => format!("{c} (FAIL)"),
                (None, true) => "pass".to_string(),
                (None, false) => "fail".to_string(),
            };
            let witness = r.witness.replace(',', ";");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.suite, r.check, constant, witness, r.j, r.seed
            ));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let summary = Summary {
            version: 1,
            suite: &self.suite,
            seed: self.seed,
            all_pass: self.all_pass(),
            rows: self
                .rows
                .iter()
                .map(|r| SummaryRow {
                    check: &r.check,
                    constant: r.constant,
                    passed: r.passed,
                    witness: &r.witness,
                    j: r.j,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serialization")
    }

    /// Write `<dir>/<suite>.csv` and `<dir>/<suite>.summary.json`.
    pub fn write_files(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
        std::fs::write(dir.join(format!("{}.csv", self.suite)), self.to_csv())
            .map_err(|e| HarnessError::Io(e.to_string()))?;
        std::fs::write(
            dir.join(format!("{}.summary.json", self.suite)),
            self.summary_json(),
        )
        .map_err(|e| HarnessError::Io(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_deterministic_and_comma_safe() {
        let mut r = Report::new("demo", 7);
        r.push_constant("fit", 1.25, true, "s00:k-1:(2;0)".into(), 6);
        r.push_flag("gate", false, "trial,3".into(), 6);
        let a = r.to_csv();
        let b = r.to_csv();
        assert_eq!(a, b);
        assert!(a.contains("s00:k-1:(2;0)"));
        assert!(a.contains("trial;3"));
        assert!(a.contains("fail"));
        assert!(!r.all_pass());
        let json = r.summary_json();
        assert!(json.contains("\"all_pass\": false"));
    }
}

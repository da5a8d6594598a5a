//! Scenario reports: one block per analysis plus expectation checks.

use serde::Serialize;
use serde_json::Value;

use crate::scenario::{Analysis, Expectation, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisBlock {
    pub analysis: Analysis,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationOutcome {
    pub metric: String,
    pub expected: f64,
    pub tol: f64,
    pub actual: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub histlab_version: &'static str,
    pub scenario: String,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub results: Vec<AnalysisBlock>,
    pub expectations: Vec<ExpectationOutcome>,
    pub passed: bool,
    /// Wall-clock time; the only field that varies between identical runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl Report {
    pub fn new(
        scenario: &str,
        seed: Option<u64>,
        tolerance: f64,
        results: Vec<AnalysisBlock>,
    ) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            histlab_version: histlab::VERSION,
            scenario: scenario.to_string(),
            seed,
            tolerance,
            results,
            expectations: Vec::new(),
            passed: true,
            duration_ms: None,
        }
    }

    pub fn block(&self, analysis: Analysis) -> Option<&AnalysisBlock> {
        self.results.iter().find(|b| b.analysis == analysis)
    }

    /// Looks up `analysis.a.b.0.c` in the result data; numbers and booleans only.
    pub fn metric(&self, path: &str) -> Option<f64> {
        let mut parts = path.split('.');
        let analysis = Analysis::from_name(parts.next()?)?;
        let mut v = self.block(analysis)?.data.as_ref()?;
        for p in parts {
            v = match v {
                Value::Object(m) => m.get(p)?,
                Value::Array(a) => a.get(p.parse::<usize>().ok()?)?,
                _ => return None,
            };
        }
        match v {
            Value::Number(n) => n.as_f64(),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    /// Checks the expectations whose analysis ran; sets `passed`.
    pub fn evaluate<'a>(
        &mut self,
        expect: impl IntoIterator<Item = (&'a String, &'a Expectation)>,
    ) {
        for (metric, e) in expect {
            let ran = metric
                .split('.')
                .next()
                .and_then(Analysis::from_name)
                .is_some_and(|a| self.block(a).is_some());
            if !ran {
                continue;
            }
            let tol = e.tol.unwrap_or(self.tolerance);
            let actual = self.metric(metric);
            let passed = actual.is_some_and(|a| (a - e.value).abs() <= tol);
            self.expectations.push(ExpectationOutcome {
                metric: metric.clone(),
                expected: e.value,
                tol,
                actual,
                passed,
            });
        }
        self.passed = self.results.iter().all(|b| b.status == Status::Ok)
            && self.expectations.iter().all(|e| e.passed);
    }

    /// Serialized report without the timing field.
    pub fn body_json(&self) -> String {
        let mut copy = self.clone();
        copy.duration_ms = None;
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report() -> Report {
        let block = AnalysisBlock {
            analysis: Analysis::Lg,
            status: Status::Ok,
            data: Some(json!({ "max": { "k": 1.5, "violated": true }, "rows": [{ "k": 0.25 }] })),
            error: None,
        };
        Report::new("t", None, 1e-9, vec![block])
    }

    #[test]
    fn metric_walks_objects_arrays_and_bools() {
        let r = report();
        assert_eq!(r.metric("lg.max.k"), Some(1.5));
        assert_eq!(r.metric("lg.max.violated"), Some(1.0));
        assert_eq!(r.metric("lg.rows.0.k"), Some(0.25));
        assert_eq!(r.metric("lg.rows.1.k"), None);
        assert_eq!(r.metric("history.norm"), None);
    }

    #[test]
    fn expectations_for_analyses_that_did_not_run_are_skipped() {
        let mut r = report();
        let mut expect = std::collections::BTreeMap::new();
        expect.insert(
            "lg.max.k".to_string(),
            Expectation {
                value: 1.5,
                tol: None,
            },
        );
        expect.insert(
            "history.norm".to_string(),
            Expectation {
                value: 1.0,
                tol: None,
            },
        );
        r.evaluate(&expect);
        assert_eq!(r.expectations.len(), 1);
        assert!(r.passed);
    }

    #[test]
    fn body_json_omits_timing() {
        let mut r = report();
        r.duration_ms = Some(12);
        assert!(!r.body_json().contains("duration_ms"));
    }
}

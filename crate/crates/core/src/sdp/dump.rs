//! JSON form of an instance and its solution:
//! `{"k", "d", "r", "x", "Z", "value", "X"}` with matrices as dense row-major
//! nested arrays.

use serde::{Deserialize, Serialize};

use super::{SdpSolution, TestingProgramInstance};
use crate::error::{Error, Result};
use crate::json::{self, real, real_rows, real_vec};
use crate::points::Points;

#[derive(Debug, Clone, Serialize)]
pub struct SdpDump {
    pub k: usize,
    pub d: usize,
    #[serde(with = "real")]
    pub r: f64,
    #[serde(with = "real_vec")]
    pub x: Vec<f64>,
    #[serde(rename = "Z", with = "real_rows")]
    pub z: Vec<Vec<f64>>,
    #[serde(with = "real")]
    pub value: f64,
    #[serde(rename = "X", with = "real_rows")]
    pub moment_matrix: Vec<Vec<f64>>,
}

impl SdpDump {
    pub fn new(inst: &TestingProgramInstance, sol: &SdpSolution) -> Self {
        SdpDump {
            k: inst.k(),
            d: inst.d(),
            r: inst.r,
            x: inst.x.clone(),
            z: inst.bucket_means.to_rows(),
            value: sol.value,
            moment_matrix: json::matrix_rows(&sol.moment_matrix),
        }
    }

    pub fn to_json(&self) -> String {
        json::to_string(self)
    }
}

#[derive(Debug, Deserialize)]
struct InstanceDoc {
    k: Option<usize>,
    d: Option<usize>,
    r: f64,
    x: Vec<f64>,
    #[serde(rename = "Z")]
    z: Vec<Vec<f64>>,
}

/// Reads `{"r", "x", "Z"}` (the `k`/`d` fields are optional and checked if present).
pub fn instance_from_json(text: &str) -> Result<TestingProgramInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance JSON: {e}")))?;
    let z = Points::from_rows(&doc.z)?;
    if doc.k.is_some_and(|k| k != z.len()) || doc.d.is_some_and(|d| d != doc.x.len()) {
        return Err(Error::Parse("instance JSON: k/d fields disagree with x and Z".into()));
    }
    TestingProgramInstance::new(doc.x, doc.r, z)
}

//! JSON helpers: every float is written with 17 significant digits so that
//! outputs are byte-stable and round-trip exactly. Non-finite values become
//! `null`.

use nalgebra::DMatrix;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let text = format!("{:.16e}", self.0);
            RawValue::from_string(text).map_err(serde::ser::Error::custom)?.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub mod real {
    use super::*;
    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        Real(*x).serialize(s)
    }
}

pub mod real_vec {
    use super::*;
    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&Real(*x))?;
        }
        seq.end()
    }
}

pub mod real_rows {
    use super::*;
    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in rows {
            let r: Vec<Real> = r.iter().map(|&x| Real(x)).collect();
            seq.serialize_element(&r)?;
        }
        seq.end()
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn to_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory JSON serialization cannot fail");
    s.push('\n');
    s
}

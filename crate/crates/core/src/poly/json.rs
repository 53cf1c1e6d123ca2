//! Polynomial text format: a JSON array of `{"exponents": [..], "coeff": x}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SparsePolynomial;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    exponents: Vec<i64>,
    coeff: f64,
}

#[derive(Serialize)]
struct TermOut<'a> {
    exponents: &'a [u32],
    coeff: f64,
}

/// Parses the term-list format. The variable count is the length of the
/// exponent vectors, which must all agree.
pub fn from_json(text: &str) -> Result<SparsePolynomial> {
    let records: Vec<TermRecord> = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        let message = message.rsplit_once(" at line ").map_or(message.as_str(), |(m, _)| m);
        Error::Parse(format!("line {} column {}: {message}", e.line(), e.column()))
    })?;
    from_records(records)
}

fn from_records(records: Vec<TermRecord>) -> Result<SparsePolynomial> {
    let n = match records.first() {
        Some(r) => r.exponents.len(),
        None => return Err(Error::Parse("polynomial has no terms".into())),
    };
    let mut p = SparsePolynomial::zero(n);
    for (t, r) in records.into_iter().enumerate() {
        if r.exponents.len() != n {
            return Err(Error::Parse(format!(
                "term {t}: field \"exponents\" has length {}, expected {n}",
                r.exponents.len()
            )));
        }
        let mut exps = Vec::with_capacity(n);
        for (i, &e) in r.exponents.iter().enumerate() {
            if e < 0 {
                return Err(Error::Parse(format!(
                    "term {t}: field \"exponents[{i}]\" = {e} is negative"
                )));
            }
            exps.push(u32::try_from(e).map_err(|_| {
                Error::Parse(format!("term {t}: field \"exponents[{i}]\" = {e} is too large"))
            })?);
        }
        if !r.coeff.is_finite() {
            return Err(Error::Parse(format!("term {t}: field \"coeff\" is not finite")));
        }
        p.add_term(exps, r.coeff);
    }
    Ok(p)
}

fn records(p: &SparsePolynomial) -> Vec<TermOut<'_>> {
    p.terms()
        .iter()
        .map(|(e, &c)| TermOut { exponents: e, coeff: c })
        .collect()
}

/// The zero polynomial is written as one zero term so that `n` survives.
impl Serialize for SparsePolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_empty() {
            let zeros = vec![0u32; self.n()];
            return [TermOut { exponents: &zeros, coeff: 0.0 }].serialize(serializer);
        }
        records(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparsePolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let recs = Vec::<TermRecord>::deserialize(deserializer)?;
        from_records(recs).map_err(serde::de::Error::custom)
    }
}

pub fn to_json(p: &SparsePolynomial) -> String {
    serde_json::to_string(p).expect("polynomial terms serialize")
}

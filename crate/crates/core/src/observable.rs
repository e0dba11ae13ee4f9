//! Pauli-sum observables O = Σᵢ cᵢ Pᵢ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::FORMAT_VERSION;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("observable has no terms")]
    Empty,
    #[error("invalid Pauli character {0:?} (expected one of I, X, Y, Z)")]
    BadPauli(char),
    #[error("Pauli strings have inconsistent lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("empty Pauli string")]
    EmptyString,
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("unsupported format version {0}")]
    Format(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    paulis: Vec<usize>,
}

impl PauliTerm {
    pub fn new(coeff: f64, label: &str) -> Result<Self, ObservableError> {
        if !coeff.is_finite() {
            return Err(ObservableError::NonFinite(coeff));
        }
        if label.is_empty() {
            return Err(ObservableError::EmptyString);
        }
        let paulis = label
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(ObservableError::BadPauli(other)),
            })
            .collect::<Result<_, _>>()?;
        Ok(PauliTerm { coeff, paulis })
    }

    /// Per-qubit Pauli indices, qubit 0 first.
    pub fn paulis(&self) -> &[usize] {
        &self.paulis
    }

    pub fn label(&self) -> String {
        self.paulis.iter().map(|&p| ['I', 'X', 'Y', 'Z'][p]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<PauliTerm>,
}

impl Observable {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self, ObservableError> {
        let first = terms.first().ok_or(ObservableError::Empty)?.paulis.len();
        for t in &terms {
            if t.paulis.len() != first {
                return Err(ObservableError::LengthMismatch(first, t.paulis.len()));
            }
        }
        Ok(Observable { terms })
    }

    /// Single Pauli string with coefficient 1. Panics on a malformed label.
    pub fn parse_single(label: &str) -> Self {
        Observable::new(vec![PauliTerm::new(1.0, label).expect("valid Pauli label")]).expect("one term")
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn num_qubits(&self) -> usize {
        self.terms[0].paulis.len()
    }

    /// Σ|cᵢ|, an upper bound on the largest eigenvalue modulus.
    pub fn o_max(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// `self + scale · other`.
    pub fn combined(&self, other: &Observable, scale: f64) -> Observable {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| PauliTerm { coeff: t.coeff * scale, paulis: t.paulis.clone() }));
        Observable::new(terms).expect("matching lengths")
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let doc: ObservableDoc = serde_json::from_str(text)?;
        Ok(Observable::try_from(doc)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ObservableDoc::from(self)).expect("observable serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDoc {
    #[serde(default = "crate::default_format")]
    pub format: u32,
    pub terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub coeff: f64,
    pub pauli: String,
}

impl TryFrom<ObservableDoc> for Observable {
    type Error = ObservableError;

    fn try_from(doc: ObservableDoc) -> Result<Self, ObservableError> {
        if doc.format != FORMAT_VERSION {
            return Err(ObservableError::Format(doc.format));
        }
        let terms = doc.terms.iter().map(|t| PauliTerm::new(t.coeff, &t.pauli)).collect::<Result<_, _>>()?;
        Observable::new(terms)
    }
}

impl From<&Observable> for ObservableDoc {
    fn from(o: &Observable) -> Self {
        ObservableDoc {
            format: FORMAT_VERSION,
            terms: o.terms.iter().map(|t| TermDoc { coeff: t.coeff, pauli: t.label() }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_json() {
        let o = Observable::from_json(r#"{"format":1,"terms":[{"coeff":1.0,"pauli":"ZZI"},{"coeff":-0.5,"pauli":"xiy"}]}"#)
            .unwrap();
        assert_eq!(o.num_qubits(), 3);
        assert_eq!(o.terms()[1].paulis(), &[1, 0, 2]);
        assert_eq!(o.o_max(), 1.5);
        assert_eq!(Observable::from_json(&o.to_json()).unwrap(), o);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Observable::from_json(r#"{"format":1,"terms":[]}"#),
            Err(crate::Error::Observable(ObservableError::Empty))
        ));
        assert!(matches!(PauliTerm::new(1.0, "XQ"), Err(ObservableError::BadPauli('Q'))));
        let err = Observable::new(vec![PauliTerm::new(1.0, "X").unwrap(), PauliTerm::new(1.0, "XX").unwrap()]);
        assert_eq!(err, Err(ObservableError::LengthMismatch(1, 2)));
        assert!(matches!(
            Observable::from_json(r#"{"format":2,"terms":[{"coeff":1.0,"pauli":"Z"}]}"#),
            Err(crate::Error::Observable(ObservableError::Format(2)))
        ));
    }
}

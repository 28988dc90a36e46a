//! Polynomial coefficient tables, the only expression language accepted by
//! the JSON descriptors.

use serde::{Deserialize, Serialize};

use crate::ad::Real;

/// `coeff · Π q_i^powers[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    #[serde(default)]
    pub powers: Vec<u32>,
}

/// Sum of monomials in the base coordinates.
///
/// JSON accepts either a bare number (constant) or a list of
/// `{"coeff": c, "powers": [..]}` terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolynomialRepr {
    Constant(f64),
    Terms(Vec<Monomial>),
}

impl From<PolynomialRepr> for Polynomial {
    fn from(r: PolynomialRepr) -> Self {
        match r {
            PolynomialRepr::Constant(c) => Polynomial::constant(c),
            PolynomialRepr::Terms(terms) => Polynomial { terms },
        }
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        if p.terms.iter().all(|t| t.powers.iter().all(|&e| e == 0)) {
            PolynomialRepr::Constant(p.terms.iter().map(|t| t.coeff).sum())
        } else {
            PolynomialRepr::Terms(p.terms)
        }
    }
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        Polynomial {
            terms: vec![Monomial {
                coeff: c,
                powers: Vec::new(),
            }],
        }
    }

    /// `c · q_i` in `dim` variables.
    pub fn linear(c: f64, i: usize) -> Self {
        let mut powers = vec![0; i + 1];
        powers[i] = 1;
        Polynomial {
            terms: vec![Monomial { coeff: c, powers }],
        }
    }

    pub fn term(coeff: f64, powers: &[u32]) -> Self {
        Polynomial {
            terms: vec![Monomial {
                coeff,
                powers: powers.to_vec(),
            }],
        }
    }

    pub fn plus(mut self, other: Polynomial) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Highest variable index referenced, plus one.
    pub fn arity(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.powers.iter().rposition(|&e| e > 0).map_or(0, |p| p + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn eval<T: Real>(&self, q: &[T]) -> T {
        let mut acc = T::zero();
        for t in &self.terms {
            let mut v = T::from_f64(t.coeff);
            for (i, &e) in t.powers.iter().enumerate() {
                if e > 0 {
                    v *= q[i].powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_constant_and_terms() {
        let c: Polynomial = serde_json::from_str("2.5").unwrap();
        assert_eq!(c.eval(&[0.0_f64]), 2.5);
        let p: Polynomial =
            serde_json::from_str(r#"[{"coeff": 3.0, "powers": [1, 2]}, {"coeff": -1.0}]"#).unwrap();
        assert_eq!(p.eval(&[2.0_f64, 3.0]), 3.0 * 2.0 * 9.0 - 1.0);
        assert_eq!(p.arity(), 2);
    }

    #[test]
    fn constant_roundtrips_as_number() {
        let s = serde_json::to_string(&Polynomial::constant(4.0)).unwrap();
        assert_eq!(s, "4.0");
    }
}

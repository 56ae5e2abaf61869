use serde::{Deserialize, Serialize};

use crate::domain::DialogueState;
use crate::error::{Error, Result};

/// How per-slot divergences combine into the junction divergence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlAggregate {
    #[default]
    Sum,
    Max,
}

/// `D_KL(p || q)` in nats. Every entry must be strictly positive.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::NumericDomain(format!("zero probability entry ({a}, {b})")));
        }
        d += a * (a / b).ln();
    }
    // rounding can leave a tiny negative residue for near-identical inputs
    Ok(d.max(0.0))
}

/// Divergence between two states' belief vectors, combined over slots.
pub fn kl_divergence(s0: &DialogueState, s1: &DialogueState) -> Result<f64> {
    kl_divergence_with(s0, s1, KlAggregate::Sum)
}

pub fn kl_divergence_with(s0: &DialogueState, s1: &DialogueState, agg: KlAggregate) -> Result<f64> {
    if s0.beliefs.len() != s1.beliefs.len() {
        return Err(Error::InvalidInput("states from different schemas".into()));
    }
    let mut total: f64 = 0.0;
    for (p, q) in s0.beliefs.iter().zip(&s1.beliefs) {
        let d = kl_discrete(p, q)?;
        total = match agg {
            KlAggregate::Sum => total + d,
            KlAggregate::Max => total.max(d),
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_discrete(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn hand_example_and_asymmetry() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl_discrete(&p, &q).unwrap() - expected).abs() < 1e-12);
        let back = kl_discrete(&q, &p).unwrap();
        assert!((back - (0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln())).abs() < 1e-12);
        assert!((back - expected).abs() > 1e-3);
    }

    #[test]
    fn zero_entry_is_domain_error() {
        assert!(matches!(
            kl_discrete(&[1.0, 0.0], &[0.5, 0.5]),
            Err(Error::NumericDomain(_))
        ));
    }
}

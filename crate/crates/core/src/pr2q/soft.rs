//! Closed-form soft operators over one joint-Q row `Q(s, a_i, .)`.

use crate::{Error, Result};

fn check_row(row: &[f64]) -> Result<()> {
    if row.is_empty() {
        return Err(Error::Empty("Q row"));
    }
    if let Some(x) = row.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("Q row entry {x}")));
    }
    Ok(())
}

/// `log sum exp(row)`, shifted by the row maximum so large entries do not overflow.
pub fn soft_marginal(row: &[f64]) -> Result<f64> {
    check_row(row)?;
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = row.iter().map(|x| (x - m).exp()).sum();
    Ok(m + s.ln())
}

/// Softmax of the row: `exp(Q(s,a_i,a_-i) - Q(s,a_i))` with the soft marginal
/// as the normalizer.
pub fn opponent_conditional(row: &[f64]) -> Result<Vec<f64>> {
    check_row(row)?;
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

/// Softmax of `beta * values`; `None` means the greedy limit, which puts all
/// mass on the first maximizer.
pub fn softmax_policy(values: &[f64], beta: Option<f64>) -> Vec<f64> {
    match beta {
        Some(beta) => {
            let scaled: Vec<f64> = values.iter().map(|v| beta * v).collect();
            opponent_conditional(&scaled).expect("finite values")
        }
        None => {
            let best = argmax(values);
            (0..values.len()).map(|i| f64::from(u8::from(i == best))).collect()
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `rho(a_-i | s, a_i)` for every `(s, a_i)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPolicyTable {
    n_states: usize,
    n_own: usize,
    n_opp: usize,
    probs: Vec<f64>,
}

impl ConditionalPolicyTable {
    pub fn uniform(n_states: usize, n_own: usize, n_opp: usize) -> Self {
        ConditionalPolicyTable {
            n_states,
            n_own,
            n_opp,
            probs: vec![1.0 / n_opp as f64; n_states * n_own * n_opp],
        }
    }

    /// Closed-form conditional of every row of a joint table.
    pub fn from_joint(q: &crate::approx::QTable) -> Result<Self> {
        let mut t = ConditionalPolicyTable::uniform(q.n_states(), q.n_own(), q.n_opp());
        for s in 0..q.n_states() {
            for a in 0..q.n_own() {
                let row = opponent_conditional(q.joint_row(s, a))?;
                t.set_row(s, a, &row)?;
            }
        }
        Ok(t)
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_own + a) * self.n_opp;
        &self.probs[start..start + self.n_opp]
    }

    pub fn set_row(&mut self, s: usize, a: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.n_opp {
            return Err(Error::Shape {
                expected: self.n_opp,
                got: row.len(),
            });
        }
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ProbabilityDomain {
                name: "rho",
                value: row.iter().copied().find(|p| !(0.0..=1.0).contains(p)).unwrap(),
            });
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::ProbabilityDomain { name: "rho row sum", value: total });
        }
        let start = (s * self.n_own + a) * self.n_opp;
        self.probs[start..start + self.n_opp].copy_from_slice(row);
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_own(&self) -> usize {
        self.n_own
    }

    pub fn n_opp(&self) -> usize {
        self.n_opp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn marginal_examples() {
        assert_abs_diff_eq!(soft_marginal(&[0.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(soft_marginal(&[1.0; 3]).unwrap(), 1.0 + 3f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            soft_marginal(&[1000.0, 1000.0]).unwrap(),
            1000.0 + 2f64.ln(),
            epsilon = 1e-12
        );
        assert!(matches!(soft_marginal(&[]), Err(Error::Empty(_))));
        assert!(matches!(soft_marginal(&[f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(opponent_conditional(&[-7.0, -7.0]).unwrap(), vec![0.5, 0.5]);
        let p = opponent_conditional(&[3f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-15);
        assert!(opponent_conditional(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn greedy_ties_go_low() {
        assert_eq!(softmax_policy(&[1.0, 2.0, 2.0], None), vec![0.0, 1.0, 0.0]);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn table_rejects_bad_rows() {
        let mut t = ConditionalPolicyTable::uniform(1, 2, 2);
        assert!(t.set_row(0, 0, &[0.5, 0.6]).is_err());
        assert!(t.set_row(0, 0, &[1.5, -0.5]).is_err());
        assert!(t.set_row(0, 0, &[1.0]).is_err());
        t.set_row(0, 1, &[0.25, 0.75]).unwrap();
        assert_eq!(t.row(0, 1), &[0.25, 0.75]);
    }

    proptest! {
        #[test]
        fn conditional_shift_invariant(row in prop::collection::vec(-50.0..50.0f64, 1..8), c in -100.0..100.0f64) {
            let shifted: Vec<f64> = row.iter().map(|x| x + c).collect();
            let a = opponent_conditional(&row).unwrap();
            let b = opponent_conditional(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn marginal_between_max_and_max_plus_log_n(row in prop::collection::vec(-50.0..50.0f64, 1..8)) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let v = soft_marginal(&row).unwrap();
            prop_assert!(v >= m);
            prop_assert!(v <= m + (row.len() as f64).ln() + 1e-12);
        }
    }
}

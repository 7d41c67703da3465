use serde_json::json;

use super::checkpoint;
use crate::{Error, Result};

/// Dense joint table `Q(s, a_i, a_-i)` and marginal table `Q(s, a_i)` sharing
/// the same state/own-action indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_own: usize,
    n_opp: usize,
    joint: Vec<f64>,
    marginal: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_own: usize, n_opp: usize) -> Self {
        assert!(n_states > 0 && n_own > 0 && n_opp > 0, "empty table");
        QTable {
            n_states,
            n_own,
            n_opp,
            joint: vec![0.0; n_states * n_own * n_opp],
            marginal: vec![0.0; n_states * n_own],
        }
    }

    pub fn from_joint(n_states: usize, n_own: usize, n_opp: usize, joint: Vec<f64>) -> Result<Self> {
        let mut t = QTable::zeros(n_states, n_own, n_opp);
        if joint.len() != t.joint.len() {
            return Err(Error::Shape {
                expected: t.joint.len(),
                got: joint.len(),
            });
        }
        if joint.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("joint Q table".into()));
        }
        t.joint = joint;
        Ok(t)
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

    fn joint_index(&self, s: usize, a: usize, o: usize) -> usize {
        debug_assert!(s < self.n_states && a < self.n_own && o < self.n_opp);
        (s * self.n_own + a) * self.n_opp + o
    }

    pub fn joint(&self, s: usize, a: usize, o: usize) -> f64 {
        self.joint[self.joint_index(s, a, o)]
    }

    pub fn set_joint(&mut self, s: usize, a: usize, o: usize, value: f64) {
        let i = self.joint_index(s, a, o);
        self.joint[i] = value;
    }

    /// `Q(s, a_i, .)` over opponent actions.
    pub fn joint_row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.joint_index(s, a, 0);
        &self.joint[start..start + self.n_opp]
    }

    pub fn joint_values(&self) -> &[f64] {
        &self.joint
    }

    pub fn marginal(&self, s: usize, a: usize) -> f64 {
        self.marginal[s * self.n_own + a]
    }

    pub fn set_marginal(&mut self, s: usize, a: usize, value: f64) {
        self.marginal[s * self.n_own + a] = value;
    }

    pub fn marginal_values(&self) -> &[f64] {
        &self.marginal
    }

    pub fn is_finite(&self) -> bool {
        self.joint.iter().chain(&self.marginal).all(|x| x.is_finite())
    }

    /// Tabular checkpoint: joint entries followed by marginal entries.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = json!({
            "kind": "qtable",
            "shape": [self.n_states, self.n_own, self.n_opp],
            "len": self.joint.len() + self.marginal.len(),
        });
        let mut values = self.joint.clone();
        values.extend_from_slice(&self.marginal);
        checkpoint::encode(&header, &values)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, values) = checkpoint::decode(bytes)?;
        if header.get("kind").and_then(|k| k.as_str()) != Some("qtable") {
            return Err(Error::Checkpoint("not a qtable checkpoint".into()));
        }
        let shape: [usize; 3] = serde_json::from_value(
            header
                .get("shape")
                .cloned()
                .ok_or_else(|| Error::Checkpoint("missing shape".into()))?,
        )?;
        let [s, a, o] = shape;
        if s == 0 || a == 0 || o == 0 {
            return Err(Error::Checkpoint(format!("bad shape {shape:?}")));
        }
        let n_joint = s * a * o;
        if values.len() != n_joint + s * a {
            return Err(Error::Checkpoint("payload does not match shape".into()));
        }
        let mut t = QTable::zeros(s, a, o);
        t.joint.copy_from_slice(&values[..n_joint]);
        t.marginal.copy_from_slice(&values[n_joint..]);
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_shared() {
        let mut q = QTable::zeros(2, 3, 2);
        q.set_joint(1, 2, 1, 5.0);
        q.set_marginal(1, 2, 7.0);
        assert_eq!(q.joint_row(1, 2), &[0.0, 5.0]);
        assert_eq!(q.marginal(1, 2), 7.0);
        assert_eq!(q.joint_values().len(), 12);
        assert_eq!(q.marginal_values().len(), 6);
    }

    #[test]
    fn round_trip() {
        let mut q = QTable::from_joint(1, 2, 2, vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        q.set_marginal(0, 1, -0.25);
        assert_eq!(QTable::from_bytes(&q.to_bytes()).unwrap(), q);
        assert!(QTable::from_joint(1, 2, 2, vec![1.0]).is_err());
        assert!(QTable::from_joint(1, 1, 1, vec![f64::INFINITY]).is_err());
    }
}

use crate::{Error, Result};

/// Empirical `rho(a_-i | s, a_i)` from co-occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingModel {
    n_own: usize,
    n_opp: usize,
    joint: Vec<u64>,
    marginal: Vec<u64>,
}

impl CountingModel {
    pub fn new(n_states: usize, n_own: usize, n_opp: usize) -> Self {
        CountingModel {
            n_own,
            n_opp,
            joint: vec![0; n_states * n_own * n_opp],
            marginal: vec![0; n_states * n_own],
        }
    }

    pub fn observe(&mut self, s: usize, a: usize, o: usize) -> Result<()> {
        if a >= self.n_own || o >= self.n_opp || (s * self.n_own + a) >= self.marginal.len() {
            return Err(Error::Config(format!(
                "count index (s={s}, a={a}, o={o}) outside table"
            )));
        }
        self.joint[(s * self.n_own + a) * self.n_opp + o] += 1;
        self.marginal[s * self.n_own + a] += 1;
        Ok(())
    }

    pub fn count(&self, s: usize, a: usize, o: usize) -> u64 {
        self.joint[(s * self.n_own + a) * self.n_opp + o]
    }

    pub fn total(&self, s: usize, a: usize) -> u64 {
        self.marginal[s * self.n_own + a]
    }

    /// Frequency ratio, or uniform while `(s, a)` has never been seen.
    pub fn conditional(&self, s: usize, a: usize) -> Vec<f64> {
        let n = self.total(s, a);
        if n == 0 {
            return vec![1.0 / self.n_opp as f64; self.n_opp];
        }
        (0..self.n_opp)
            .map(|o| self.count(s, a, o) as f64 / n as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frequency_ratio() {
        let mut m = CountingModel::new(1, 2, 2);
        for o in [0, 0, 1, 0] {
            m.observe(0, 1, o).unwrap();
        }
        assert_eq!(m.conditional(0, 1), vec![0.75, 0.25]);
        assert_eq!(m.conditional(0, 0), vec![0.5, 0.5]);
        assert_eq!(m.total(0, 1), m.count(0, 1, 0) + m.count(0, 1, 1));
        assert!(m.observe(0, 2, 0).is_err());
    }

    #[test]
    fn recovers_sampling_distribution() {
        let target = [0.2, 0.5, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = CountingModel::new(1, 1, 3);
        for _ in 0..10_000 {
            let u: f64 = rng.random();
            let o = if u < 0.2 { 0 } else if u < 0.7 { 1 } else { 2 };
            m.observe(0, 0, o).unwrap();
        }
        let est = m.conditional(0, 0);
        let err = est.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.02, "L-inf error {err}");
    }
}

use serde::{Deserialize, Serialize};

/// Scaled tanh onto `[lo, hi]`: `a = mid + half * tanh(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Squash {
    pub lo: f64,
    pub hi: f64,
}

impl Squash {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty squash interval");
        Squash { lo, hi }
    }

    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Half-width of the interval, also used to scale actions fed to networks.
    pub fn half(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn apply(&self, u: f64) -> f64 {
        (self.mid() + self.half() * u.tanh()).clamp(self.lo, self.hi)
    }

    /// `da/du` at `u`.
    pub fn derivative(&self, u: f64) -> f64 {
        let t = u.tanh();
        self.half() * (1.0 - t * t)
    }

    /// Network-facing encoding of an action: affine map of `[lo, hi]` onto `[-1, 1]`.
    pub fn normalize(&self, a: f64) -> f64 {
        (a - self.mid()) / self.half()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_into_interval() {
        let s = Squash::new(-10.0, 10.0);
        assert_eq!(s.apply(0.0), 0.0);
        assert_eq!(s.apply(1e6), 10.0);
        assert_eq!(s.apply(-1e6), -10.0);
        let h = 1e-6;
        let fd = (s.apply(0.3 + h) - s.apply(0.3 - h)) / (2.0 * h);
        assert!((fd - s.derivative(0.3)).abs() < 1e-6);
        let t = Squash::new(0.0, 4.0);
        assert_eq!(t.apply(0.0), 2.0);
        assert_eq!(t.normalize(4.0), 1.0);
    }
}

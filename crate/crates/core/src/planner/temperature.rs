use rand::Rng;

/// Transition-test state of T-RRT.
#[derive(Debug, Clone, PartialEq)]
pub struct Temperature {
    pub value: f64,
    /// Multiplicative adaptation factor (> 1).
    pub rate: f64,
    pub fail_max: usize,
    /// Cost scale `K` in `exp(-dc / (K T))`.
    pub cost_scale: f64,
    fails: usize,
}

impl Temperature {
    pub fn new(value: f64, rate: f64, fail_max: usize, cost_scale: f64) -> Self {
        Self {
            value,
            rate,
            fail_max,
            cost_scale,
            fails: 0,
        }
    }

    pub fn acceptance_probability(&self, c_parent: f64, c_new: f64) -> f64 {
        let dc = c_new - c_parent;
        if dc <= 0.0 {
            1.0
        } else {
            (-dc / (self.cost_scale * self.value)).exp()
        }
    }

    /// Downhill moves always pass. Uphill moves pass with probability
    /// `exp(-dc / (K T))`; a pass cools the temperature, and `fail_max`
    /// consecutive rejections heat it.
    pub fn test<R: Rng + ?Sized>(&mut self, c_parent: f64, c_new: f64, rng: &mut R) -> bool {
        if c_new <= c_parent {
            return true;
        }
        let p = self.acceptance_probability(c_parent, c_new);
        if rng.gen::<f64>() < p {
            self.value /= self.rate;
            self.fails = 0;
            true
        } else {
            self.fails += 1;
            if self.fails >= self.fail_max {
                self.value *= self.rate;
                self.fails = 0;
            }
            false
        }
    }

    pub fn consecutive_fails(&self) -> usize {
        self.fails
    }
}

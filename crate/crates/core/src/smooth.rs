//! Polynomial smoothsteps: monotone `C^k` transitions from 0 at `t = 0` to 1 at `t = 1`.

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Smoothstep of order `k` (degree `2k + 1`), `C^k` at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothstep {
    order: u32,
    coeffs: [f64; 8],
    slope: f64,
}

impl Smoothstep {
    /// `order` in `1..=7`; order 2 is the quintic `6t^5 - 15t^4 + 10t^3`.
    pub fn new(order: u32) -> Self {
        assert!((1..=7).contains(&order), "smoothstep order {order} unsupported");
        let k = order;
        let mut coeffs = [0.0; 8];
        for (j, c) in coeffs.iter_mut().enumerate().take(k as usize + 1) {
            let j = j as u32;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *c = sign * binomial(k + j, j) * binomial(2 * k + 1, k - j);
        }
        // S'(t) = slope * t^k (1-t)^k
        let slope = binomial(2 * k + 1, k) * (k + 1) as f64;
        Smoothstep {
            order,
            coeffs,
            slope,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let poly = self.coeffs[..=self.order as usize]
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + c);
        t.powi(self.order as i32 + 1) * poly
    }

    pub fn d1(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        self.slope * (t * (1.0 - t)).powi(self.order as i32)
    }

    pub fn d2(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let k = self.order as i32;
        self.slope * k as f64 * (t * (1.0 - t)).powi(k - 1) * (1.0 - 2.0 * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_matches_closed_form() {
        let s = Smoothstep::new(2);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let exact = 6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3);
            assert!((s.value(t) - exact).abs() < 1e-14);
            let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
            assert!((s.d1(t) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for order in 1..=4 {
            let s = Smoothstep::new(order);
            let h = 1e-6;
            for i in 1..20 {
                let t = i as f64 / 20.0;
                let fd1 = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
                let fd2 = (s.d1(t + h) - s.d1(t - h)) / (2.0 * h);
                assert!((s.d1(t) - fd1).abs() < 1e-6, "order {order} t {t}");
                assert!((s.d2(t) - fd2).abs() < 1e-5, "order {order} t {t}");
            }
            assert!((s.value(1.0 - 1e-12) - 1.0).abs() < 1e-9);
        }
    }
}

//! Asymptotic antiderivatives of `exp(i ψ(t))` for power-law phases.
//!
//! For `ψ(t) = β t^α + γ t` with `|ψ'|` large, repeated integration by parts
//! gives `∫ e^{iψ} dt = e^{iψ(t)} Σ_n (-1)^n D_n(t)` with
//! `D_0 = 1/(iψ')` and `D_n = D_{n-1}' / (iψ')`. The derivatives are carried
//! as truncated Taylor jets, so no symbolic algebra is needed.

use num_complex::Complex64;

const MAX_TERMS: usize = 14;
const JET: usize = MAX_TERMS + 2;
type Jet = [Complex64; JET];

/// Phase `β t^α + γ t` on `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPhase {
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Result of an asymptotic antiderivative evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Tail {
    /// `e^{iψ(t)} P(t)`
    pub value: Complex64,
    /// Slowly varying amplitude `P(t)`.
    pub amplitude: Complex64,
    /// Magnitude of the last retained correction.
    pub error: f64,
}

impl PowerPhase {
    pub fn new(beta: f64, alpha: f64, gamma: f64) -> Self {
        Self { beta, alpha, gamma }
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.beta * t.powf(self.alpha) + self.gamma * t
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.beta * self.alpha * t.powf(self.alpha - 1.0) + self.gamma
    }

    /// Ratio |D_1/D_0| = |ψ''| / ψ'^2, the expansion parameter.
    pub fn smallness(&self, t: f64) -> f64 {
        let d2 = self.beta * self.alpha * (self.alpha - 1.0) * t.powf(self.alpha - 2.0);
        let r = self.rate(t);
        d2.abs() / (r * r)
    }

    /// Taylor coefficients of ψ'(t + s) up to `order`.
    fn rate_jet(&self, t: f64, order: usize) -> Jet {
        let a = self.alpha - 1.0;
        let mut out = [Complex64::new(0.0, 0.0); JET];
        let lead = self.beta * self.alpha;
        let mut coeff = lead * t.powf(a);
        for (j, slot) in out.iter_mut().enumerate().take(order + 1) {
            if j > 0 {
                coeff *= (a - (j - 1) as f64) / (j as f64 * t);
            }
            *slot = Complex64::new(coeff, 0.0);
        }
        out[0] += self.gamma;
        out
    }

    /// Amplitude `P(t)` with `d/dt (e^{iψ} P) = e^{iψ}` to asymptotic order.
    pub fn amplitude(&self, t: f64) -> (Complex64, f64) {
        // term n is roughly n!·smallness^n; size the jet to what is needed
        let small = self.smallness(t);
        let mut order = 1;
        let mut est = 1.0;
        while order < MAX_TERMS {
            est *= order as f64 * small * 2.0;
            if est < 1e-18 {
                break;
            }
            order += 1;
        }
        let len = order + 1;
        let mut a = self.rate_jet(t, order);
        // r = 1/(i ψ') as a jet
        for c in a.iter_mut().take(len) {
            *c = Complex64::new(-c.im, c.re);
        }
        let r = reciprocal(&a, len);
        let mut d = r;
        let mut n = len;
        let mut sum = d[0];
        let mut last = d[0].norm();
        let mut sign = 1.0;
        for _ in 1..=order {
            if n < 2 {
                break;
            }
            let mut deriv = [Complex64::new(0.0, 0.0); JET];
            for j in 1..n {
                deriv[j - 1] = d[j] * j as f64;
            }
            n -= 1;
            let next = multiply(&deriv, &r, n);
            let mag = next[0].norm();
            if mag >= last {
                // asymptotic series started to diverge
                break;
            }
            sign = -sign;
            sum += next[0] * sign;
            last = mag;
            d = next;
            if mag <= 1e-17 * sum.norm() {
                break;
            }
        }
        (sum, last)
    }

    pub fn antiderivative(&self, t: f64) -> Tail {
        let (amplitude, error) = self.amplitude(t);
        let value = Complex64::from_polar(1.0, self.phase(t)) * amplitude;
        Tail {
            value,
            amplitude,
            error,
        }
    }

    /// `∫_a^b e^{iψ}` for `a, b` inside the asymptotic region.
    pub fn integral(&self, a: f64, b: f64) -> Complex64 {
        self.antiderivative(b).value - self.antiderivative(a).value
    }
}

fn reciprocal(a: &Jet, n: usize) -> Jet {
    let mut r = [Complex64::new(0.0, 0.0); JET];
    r[0] = a[0].inv();
    for k in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=k {
            acc += a[j] * r[k - j];
        }
        r[k] = -acc * r[0];
    }
    r
}

fn multiply(a: &Jet, b: &Jet, n: usize) -> Jet {
    let mut out = [Complex64::new(0.0, 0.0); JET];
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=k {
            acc += a[j] * b[k - j];
        }
        out[k] = acc;
    }
    out
}

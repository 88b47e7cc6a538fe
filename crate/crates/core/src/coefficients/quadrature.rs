//! Composite Simpson quadrature and tabulated antiderivatives.

use std::fmt;
use std::sync::Arc;

pub type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Composite Simpson rule with `n` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson on `n` and `2n` subintervals; returns the Richardson-corrected value
/// and the error estimate `|S_2n − S_n| / 15`.
pub fn simpson_richardson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    let coarse = simpson(&f, a, b, n);
    let fine = simpson(&f, a, b, 2 * n);
    let err = (fine - coarse) / 15.0;
    (fine + err, err.abs())
}

/// `G(ξ) = ∫₀^ξ g` tabulated on nodes clustered at the origin
/// (`ξ_i = ξ_max (i/N)²`), evaluated by cubic Hermite interpolation with the
/// exact slopes `g(ξ_i)`. Arguments beyond `ξ_max` fall back to direct
/// quadrature from the last node.
#[derive(Clone)]
pub struct Antiderivative {
    integrand: Integrand,
    xi_max: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Accumulated Richardson error estimate over the table.
    pub error_estimate: f64,
}

impl fmt::Debug for Antiderivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Antiderivative")
            .field("xi_max", &self.xi_max)
            .field("nodes", &self.nodes.len())
            .field("error_estimate", &self.error_estimate)
            .finish()
    }
}

impl Antiderivative {
    pub fn build(integrand: Integrand, xi_max: f64, n_cells: usize) -> Self {
        let n_cells = n_cells.max(8);
        let nodes: Vec<f64> = (0..=n_cells)
            .map(|i| xi_max * (i as f64 / n_cells as f64).powi(2))
            .collect();
        let mut values = Vec::with_capacity(nodes.len());
        let mut total = 0.0;
        let mut error_estimate = 0.0;
        values.push(0.0);
        for w in nodes.windows(2) {
            let (v, e) = simpson_richardson(&*integrand, w[0], w[1], 8);
            total += v;
            error_estimate += e;
            values.push(total);
        }
        let slopes = nodes.iter().map(|&x| integrand(x)).collect();
        Self {
            integrand,
            xi_max,
            nodes,
            values,
            slopes,
            error_estimate,
        }
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    #[inline]
    pub fn derivative(&self, xi: f64) -> f64 {
        (self.integrand)(xi)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let last = self.nodes.len() - 1;
        if xi >= self.xi_max {
            let extra = xi - self.xi_max;
            if extra == 0.0 {
                return self.values[last];
            }
            let n = ((extra / (self.xi_max / last as f64)).ceil() as usize).clamp(8, 1 << 16);
            let (v, _) = simpson_richardson(&*self.integrand, self.xi_max, xi, n);
            return self.values[last] + v;
        }
        let n = last as f64;
        let mut i = ((xi / self.xi_max).sqrt() * n) as usize;
        i = i.min(last - 1);
        while i > 0 && self.nodes[i] > xi {
            i -= 1;
        }
        while i + 1 < last && self.nodes[i + 1] < xi {
            i += 1;
        }
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (xi - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn antiderivative_of_smooth_function() {
        let a = Antiderivative::build(Arc::new(|x: f64| x.cos()), 10.0, 4096);
        for &x in &[0.0, 1e-4, 0.3, 2.0, 9.99, 10.0, 12.5] {
            assert!((a.eval(x) - x.sin()).abs() < 1e-10, "x = {x}");
        }
        assert_eq!(a.derivative(0.0), 1.0);
    }
}

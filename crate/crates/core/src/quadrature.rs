//! Gauss–Legendre rules and composite integration in the logarithmic radius.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `order`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite integration: `[a, b]` is split at `breaks` and then into
    /// panels no wider than `max_width`.
    pub fn composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        max_width: f64,
        mut f: F,
    ) -> f64 {
        let mut cuts: Vec<f64> = vec![a];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
        inner.sort_by(|x, y| x.total_cmp(y));
        cuts.extend(inner);
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let panels = ((hi - lo) / max_width).ceil().max(1.0) as usize;
            let h = (hi - lo) / panels as f64;
            for k in 0..panels {
                let p0 = lo + k as f64 * h;
                let p1 = if k + 1 == panels { hi } else { p0 + h };
                total += self.integrate(p0, p1, &mut f);
            }
        }
        total
    }
}

/// Returns `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson rule on `panels` (rounded up to even) subintervals.
pub fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let m = panels.max(2).div_ceil(2) * 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for order in [1, 2, 5, 12, 20] {
            let gl = GaussLegendre::new(order);
            let s: f64 = gl.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "order {order}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(6);
        for deg in 0..12 {
            let v = gl.integrate(0.0, 2.0, |x| x.powi(deg));
            let exact = 2f64.powi(deg + 1) / (deg + 1) as f64;
            assert!((v - exact).abs() < 1e-12 * exact.max(1.0), "deg {deg}");
        }
    }

    #[test]
    fn composite_handles_breaks_and_exponentials() {
        let gl = GaussLegendre::new(12);
        let v = gl.composite(-30.0, 0.0, &[-3.0, -1.0], 0.5, |x| (2.0 * x).exp());
        let exact = 0.5 * (1.0 - (-60f64).exp());
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(0.0, 1.0, 4, |x| x * x * x);
        assert!((v - 0.25).abs() < 1e-15);
    }
}

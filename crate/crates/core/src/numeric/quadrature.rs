//! Gauss–Legendre quadrature with adaptive panel bisection.
//!
//! Integrands in this crate are smooth on compact intervals but can be sharply
//! peaked at an endpoint (powers like `u^r` with large `r`). Callers pass an
//! initial partition graded toward the peak ([`graded_toward_upper`] and
//! friends); each panel is then bisected until the two-half estimate agrees
//! with the whole-panel estimate to within its share of the tolerance.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// Fixed-order Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    noise: T,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Builds the `n`-point rule. Nodes come from Newton iteration on the
    /// three-term Legendre recurrence, carried out in `f64`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = lit(-x);
            nodes[n - 1 - i] = lit(x);
            weights[i] = lit(w);
            weights[n - 1 - i] = lit(w);
        }
        Self {
            nodes,
            weights,
            noise: T::epsilon() * lit(16.0),
        }
    }

    /// Relative accuracy of integrand evaluations. Bisection stops once the
    /// two-half difference is within this fraction of `∫|f|` on the panel.
    pub fn with_noise(mut self, rel: T) -> Self {
        self.noise = rel.max(T::epsilon() * lit(16.0));
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`, returning `(∫f, ∫|f|)`.
    pub fn panel<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T) -> (T, T) {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        let mut s = T::zero();
        let mut s_abs = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            s = s + w * v;
            s_abs = s_abs + w * v.abs();
        }
        (s * half, s_abs * half)
    }

    /// Adaptive integral over the partition `breaks` (sorted, at least two points).
    ///
    /// Converges when the summed bisection differences stay below
    /// `tol_rel · ∫|f|`, with the scale estimated from the initial partition.
    pub fn integrate<F: FnMut(T) -> T>(
        &self,
        f: F,
        breaks: &[T],
        tol_rel: T,
        max_depth: usize,
    ) -> Result<Estimate<T>> {
        self.integrate_abs(f, breaks, tol_rel, T::zero(), max_depth)
    }

    /// As [`integrate`](Self::integrate), also accepting a total error of `tol_abs`.
    pub fn integrate_abs<F: FnMut(T) -> T>(
        &self,
        mut f: F,
        breaks: &[T],
        tol_rel: T,
        tol_abs: T,
        max_depth: usize,
    ) -> Result<Estimate<T>> {
        if breaks.len() < 2 {
            return Err(Error::Domain("quadrature needs at least two breakpoints".into()));
        }
        let total = breaks[breaks.len() - 1] - breaks[0];
        let mut coarse = Vec::with_capacity(breaks.len() - 1);
        let mut scale = T::zero();
        for w in breaks.windows(2) {
            let (v, va) = self.panel(&mut f, w[0], w[1]);
            coarse.push(v);
            scale = scale + va;
        }
        let mut est = Estimate {
            value: T::zero(),
            error: T::zero(),
            panels: 0,
        };
        if scale == T::zero() || total == T::zero() {
            return Ok(est);
        }
        let tiny = T::min_positive_value();
        let budget = (tol_rel * scale).max(tol_abs);
        let mut failed = false;
        let mut stack: Vec<(T, T, T, usize)> = breaks
            .windows(2)
            .zip(coarse)
            .map(|(w, v)| (w[0], w[1], v, 0))
            .collect();
        let mut acc = super::NeumaierSum::new();
        while let Some((a, b, whole, depth)) = stack.pop() {
            let mid = (a + b) * lit(0.5);
            let (left, left_abs) = self.panel(&mut f, a, mid);
            let (right, right_abs) = self.panel(&mut f, mid, b);
            let halves = left + right;
            let diff = (halves - whole).abs();
            // below the rounding floor of the panel itself, bisection cannot help
            let floor = (left_abs + right_abs) * self.noise;
            let allowed = (budget * (b - a) / total).max(floor).max(tiny);
            if diff <= allowed || depth >= max_depth || mid <= a || mid >= b {
                if diff > allowed {
                    failed = true;
                }
                acc.add(halves);
                est.error = est.error + diff;
                est.panels += 1;
            } else {
                stack.push((a, mid, left, depth + 1));
                stack.push((mid, b, right, depth + 1));
            }
        }
        est.value = acc.value();
        if failed && est.error > budget {
            return Err(Error::Quadrature {
                estimate: to_f64(est.error / scale),
                tol: to_f64(tol_rel),
            });
        }
        Ok(est)
    }

    /// Iterated integral `∫∫ f(u, t) du dt`, adaptive in both directions.
    ///
    /// Inner integrals are held to an absolute tolerance set by a product-rule
    /// estimate of `∫∫|f|`, so slices that contribute nothing are not refined.
    pub fn integrate_2d<F: FnMut(T, T) -> T>(
        &self,
        mut f: F,
        u_breaks: &[T],
        t_breaks: &[T],
        tol_rel: T,
        max_depth: usize,
    ) -> Result<Estimate<T>> {
        if u_breaks.len() < 2 || t_breaks.len() < 2 {
            return Err(Error::Domain("quadrature needs at least two breakpoints".into()));
        }
        let inner_tol = tol_rel * lit(0.1);
        let mut rough = T::zero();
        for tw in t_breaks.windows(2) {
            let (_, v) = self.panel(
                &mut |t| {
                    let mut s = T::zero();
                    for uw in u_breaks.windows(2) {
                        s = s + self.panel(&mut |u| f(u, t), uw[0], uw[1]).1;
                    }
                    s
                },
                tw[0],
                tw[1],
            );
            rough = rough + v;
        }
        let t_len = t_breaks[t_breaks.len() - 1] - t_breaks[0];
        let inner_abs = inner_tol * rough / t_len;
        let mut inner_err: Option<Error> = None;
        let outer_rule = self.clone().with_noise(self.noise.max(inner_tol));
        let outer = outer_rule.integrate(
            |t| match self.integrate_abs(|u| f(u, t), u_breaks, inner_tol, inner_abs, max_depth) {
                Ok(e) => e.value,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    T::zero()
                }
            },
            t_breaks,
            tol_rel,
            max_depth,
        )?;
        match inner_err {
            Some(e) => Err(e),
            None => Ok(outer),
        }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    /// Sum of the accepted bisection differences.
    pub error: T,
    pub panels: usize,
}

/// Breakpoints on `[a, b]` refined geometrically toward `b`, finest width `width`.
pub fn graded_toward_upper<T: Scalar>(a: T, b: T, width: T) -> Vec<T> {
    let mut pts = vec![b];
    let mut w = width;
    while b - w > a {
        pts.push(b - w);
        w = w + w;
    }
    pts.push(a);
    pts.reverse();
    pts
}

/// Breakpoints on `[a, b]` refined geometrically toward `a`, finest width `width`.
pub fn graded_toward_lower<T: Scalar>(a: T, b: T, width: T) -> Vec<T> {
    let mut pts = vec![a];
    let mut w = width;
    while a + w < b {
        pts.push(a + w);
        w = w + w;
    }
    pts.push(b);
    pts
}

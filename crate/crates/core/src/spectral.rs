//! Semi-numerical solution for general `m`.
//!
//! `π(k,r) = Σ_{l=0}^{k} (-1)^l d(r+l) C(l+r, r) A(k,r;l)` for `r > 0` or `k = m`,
//! where `A(k,r;l)` is the `z^{k-l}` Taylor coefficient of
//! `(1-z)^{-(l+r)/(1-ρ)-1} (1-ρz)^{ρ(l+r)/(1-ρ)-1}`. Row `r = 0` is rebuilt
//! from row `r = 1` by summing the balance equations along `r = 0`.
//!
//! The sequence `d` solves an order `m+2` difference equation. It is posed as
//! a boundary-value problem: `d(0)` fixed by the corner mass, one equation per
//! `r = 1..=R`, and beyond `R` the algebraic-geometric tail
//! `d(R+j) = d(R) ρ^j ((R+1)/(R+j+1))^m`.
//!
//! The second corner condition is not imposed. It is implied by the rest,
//! and using it in place of the last difference row leaves a neutral mode
//! that grows like `ρ^{-r}` relative to `d`. It is reported as a residual.

use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::model::{validate_params, JointDistribution, Method, ModelParams, SolverConfig};
use crate::numeric::{BandLu, BandMatrix, NeumaierSum};
use crate::scalar::{from_usize, to_f64, Scalar};

/// Coefficients `a_0(s), …, a_{n_max}(s)` of `exp(Σ_j f_j z^j)` with
/// `f_j = [s(1+ρ+…+ρ^j) + 1 + ρ^j] / j`.
///
/// Works over any field, so exact rationals can be used to check it.
/// Every term is non-negative for `0 < ρ`, so the recurrence
/// `n g_n = Σ_j j f_j g_{n-j}` does not cancel.
pub fn kernel_series<F>(rho: &F, s: usize, n_max: usize) -> Vec<F>
where
    F: Num + Clone + FromPrimitive,
{
    let s_f = F::from_usize(s).expect("representable");
    // j f_j = s(1+…+ρ^j) + 1 + ρ^j
    let mut jf = Vec::with_capacity(n_max + 1);
    jf.push(F::zero());
    let mut pow = F::one();
    let mut geo = F::one();
    for _ in 1..=n_max {
        pow = pow * rho.clone();
        geo = geo + pow.clone();
        jf.push(s_f.clone() * geo.clone() + F::one() + pow.clone());
    }
    let mut g = Vec::with_capacity(n_max + 1);
    g.push(F::one());
    for n in 1..=n_max {
        let mut acc = F::zero();
        for j in 1..=n {
            acc = acc + jf[j].clone() * g[n - j].clone();
        }
        g.push(acc / F::from_usize(n).expect("representable"));
    }
    g
}

/// `A(k,r;l)` evaluated directly; zero for `l > k`.
pub fn compute_a<T: Scalar>(params: &ModelParams<T>, k: usize, r: usize, l: usize) -> T {
    if l > k {
        return T::zero();
    }
    kernel_series(&params.rho, l + r, k - l)[k - l]
}

/// Table of `A(k,r;l)` for `l <= k <= m+1` and `r + l <= s_max`.
#[derive(Clone, Debug)]
pub struct AKernel<T> {
    pub params: ModelParams<T>,
    s_max: usize,
    /// `a[s * (m+2) + n] = A(l+n, s-l; l)`.
    a: Vec<T>,
}

impl<T: Scalar> AKernel<T> {
    /// Covers every coefficient needed for a solve with truncation `r_max`.
    pub fn new(params: ModelParams<T>, r_max: usize) -> Result<Self> {
        let params = validate_params(params)?;
        let m = params.m;
        let s_max = r_max + m + 1;
        let mut a = Vec::with_capacity((s_max + 1) * (m + 2));
        for s in 0..=s_max {
            a.extend(kernel_series(&params.rho, s, m + 1));
        }
        Ok(Self { params, s_max, a })
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// `A(k,r;l)`; panics when outside the cached range.
    pub fn a(&self, k: usize, r: usize, l: usize) -> T {
        if l > k {
            return T::zero();
        }
        let n = k - l;
        let s = l + r;
        assert!(
            n <= self.params.m + 1 && s <= self.s_max,
            "A({k},{r};{l}) outside kernel cache"
        );
        self.a[s * (self.params.m + 2) + n]
    }
}

/// `|A(m,0;n) - Σ_{l=n}^{m} n(1-ρ^{m-l+1}) / (l(1-ρ)) A(l,0;n)|`.
pub fn a_identity_residual<T: Scalar>(kernel: &AKernel<T>, m: usize, n: usize) -> T {
    let rho = kernel.params.rho;
    let lhs = kernel.a(m, 0, n);
    let nf: T = from_usize(n);
    let rhs: T = (n..=m)
        .map(|l| {
            let w = nf * (T::one() - rho.powi((m - l + 1) as i32)) / (from_usize::<T>(l) * (T::one() - rho));
            w * kernel.a(l, 0, n)
        })
        .sum();
    (lhs - rhs).abs()
}

/// `d(0) = (1-ρ)ρ^m / A(m,0;0)`.
pub fn d0<T: Scalar>(kernel: &AKernel<T>) -> T {
    let p = &kernel.params;
    p.epsilon() * p.rho.powi(p.m as i32) / kernel.a(p.m, 0, 0)
}

/// `C(l + r, r)` as a product of `l` ratios.
fn binom<T: Scalar>(r: usize, l: usize) -> T {
    (1..=l).fold(T::one(), |acc, i| acc * from_usize::<T>(r + i) / from_usize::<T>(i))
}

/// Solved coefficients `d(0..=R)` with the tail rule beyond `R`.
#[derive(Clone, Debug)]
pub struct DSequence<T> {
    pub params: ModelParams<T>,
    pub r_max: usize,
    values: Vec<T>,
    /// Largest relative residual over the difference rows.
    pub max_row_residual: T,
    /// Relative residual of the unused corner condition at `(m, 0)`.
    pub corner_residual: T,
    /// Smallest over largest pivot of the banded factorisation.
    pub pivot_ratio: T,
}

impl<T: Scalar> DSequence<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `d(r)`, extended past `R` by the tail rule.
    pub fn d(&self, r: usize) -> T {
        if r <= self.r_max {
            self.values[r]
        } else {
            self.values[self.r_max] * tail_factor(&self.params, self.r_max, r)
        }
    }
}

/// `d(to) / d(from)` under the tail rule: `ρ^{to-from} ((from+1)/(to+1))^m`.
fn tail_factor<T: Scalar>(p: &ModelParams<T>, from: usize, to: usize) -> T {
    let ratio = from_usize::<T>(from + 1) / from_usize::<T>(to + 1);
    p.rho.powi((to - from) as i32) * ratio.powi(p.m as i32)
}

/// Solves for `d(0..=R)` with `R = cfg.r_max`.
#[allow(clippy::needless_range_loop)]
pub fn solve_d<T: Scalar>(params: ModelParams<T>, kernel: &AKernel<T>, cfg: &SolverConfig<T>) -> Result<DSequence<T>> {
    let params = validate_params(params)?;
    cfg.validate(&params)?;
    let (m, rr) = (params.m, cfg.r_max);
    if kernel.s_max() < rr + m + 1 || kernel.params != params {
        return Err(Error::Config(format!(
            "kernel covers s <= {}, need {}",
            kernel.s_max(),
            rr + m + 1
        )));
    }
    let rho = params.rho;
    // Unknowns u(r) = d(r) / σ(r), σ(r) = ρ^r (r+1)^{-m}. Row r is scaled by 1/σ(r),
    // so entries are σ(c)/σ(r) times the raw coefficient.
    let rel = |r: usize, c: usize| -> T {
        if c >= r {
            tail_factor(&params, r, c)
        } else {
            T::one() / tail_factor(&params, c, r)
        }
    };
    let mut mat = BandMatrix::<T>::zeros(rr + 1, 1, m + 1);
    let mut rhs = vec![T::zero(); rr + 1];
    mat.set(0, 0, T::one());
    rhs[0] = d0(kernel);
    let mf: T = from_usize(m + 1);
    for r in 1..=rr {
        let lead = mf / from_usize::<T>(m + r + 1);
        let mut add = |idx: usize, c: T| {
            if idx <= rr {
                mat.add(r, idx, c * rel(r, idx));
            } else {
                // d(idx) = u(R) σ(idx)
                mat.add(r, rr, c * rel(r, idx));
            }
        };
        for l in 0..=m + 1 {
            let c = lead * binom::<T>(r, l) * kernel.a(m + 1, r, l);
            add(r + l, if l % 2 == 0 { c } else { -c });
        }
        for l in 0..=m {
            let c = rho * binom::<T>(r - 1, l) * kernel.a(m, r - 1, l);
            add(r + l - 1, if l % 2 == 0 { -c } else { c });
        }
    }
    for i in 0..=rr {
        let (lo, hi) = mat.row_span(i);
        let big = (lo..=hi).fold(T::zero(), |a, j| a.max(mat.get(i, j).abs()));
        if big > T::zero() {
            for j in lo..=hi {
                let v = mat.get(i, j);
                mat.set(i, j, v / big);
            }
            rhs[i] = rhs[i] / big;
        }
    }
    let lu = BandLu::factor(&mat)?;
    if lu.pivot_ratio < T::epsilon() {
        return Err(Error::Singular {
            row: 0,
            pivot: 0.0,
            ratio: to_f64(lu.pivot_ratio),
        });
    }
    let u = lu.solve(&rhs);
    let row_res = mat
        .relative_residuals(&u, &rhs)
        .into_iter()
        .fold(T::zero(), |a, b| a.max(b));
    if row_res > cfg.tol_rel {
        return Err(Error::Residual {
            context: "difference rows",
            residual: to_f64(row_res),
            tol: to_f64(cfg.tol_rel),
        });
    }
    let values: Vec<T> = u
        .iter()
        .enumerate()
        .map(|(r, &v)| v * rho.powi(r as i32) / from_usize::<T>(r + 1).powi(m as i32))
        .collect();
    for (r, &v) in u.iter().enumerate() {
        // compare in scaled units, where the solution is O(1)
        if v < -cfg.tol_rel * u[0].abs().max(T::one()) {
            return Err(Error::NegativeCoefficient { r, value: to_f64(values[r]) });
        }
    }
    let mut seq = DSequence {
        params,
        r_max: rr,
        values,
        max_row_residual: row_res,
        corner_residual: T::zero(),
        pivot_ratio: lu.pivot_ratio,
    };
    seq.corner_residual = corner_residual(kernel, &seq);
    Ok(seq)
}

/// `π(k,r)` from the expansion, valid for `r > 0` or `k = m`.
fn pi_expansion<T: Scalar>(kernel: &AKernel<T>, d: &DSequence<T>, k: usize, r: usize) -> T {
    let mut s = NeumaierSum::new();
    for l in 0..=k {
        let t = d.d(r + l) * binom::<T>(r, l) * kernel.a(k, r, l);
        s.add(if l % 2 == 0 { t } else { -t });
    }
    s.value()
}

/// Row `r = 0`: `π(k,0) = (1-ρ)ρ^k - Σ_{l<k} π(l,1)/(l+1) · (1-ρ^{k-l})/(1-ρ)`.
fn row_zero<T: Scalar>(p: &ModelParams<T>, row1: &[T], k: usize) -> T {
    let rho = p.rho;
    let mut s = NeumaierSum::new();
    s.add(p.diagonal_mass(k));
    for (l, &v) in row1.iter().enumerate().take(k) {
        let w = (T::one() - rho.powi((k - l) as i32)) / (T::one() - rho);
        s.add(-v / from_usize::<T>(l + 1) * w);
    }
    s.value()
}

fn corner_residual<T: Scalar>(kernel: &AKernel<T>, d: &DSequence<T>) -> T {
    let p = &d.params;
    let m = p.m;
    let row1: Vec<T> = (0..m).map(|l| pi_expansion(kernel, d, l, 1)).collect();
    let pm0 = pi_expansion(kernel, d, m, 0);
    let pm1 = pi_expansion(kernel, d, m, 1);
    let pmm0 = row_zero(p, &row1, m - 1);
    let lhs = (T::one() + p.rho) * pm0;
    let rhs = p.rho * pmm0 + pm1 / from_usize::<T>(m + 1);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

/// Full table `π(k, r)`, `r <= d.r_max`.
pub fn reconstruct_pi<T: Scalar>(kernel: &AKernel<T>, d: &DSequence<T>) -> Result<JointDistribution<T>> {
    let p = d.params;
    let (m, rr) = (p.m, d.r_max);
    let w = rr + 1;
    let mut values = vec![T::zero(); (m + 1) * w];
    for k in 0..=m {
        for r in 0..=rr {
            if r > 0 || k == m {
                values[k * w + r] = pi_expansion(kernel, d, k, r);
            }
        }
    }
    let row1: Vec<T> = (0..m).map(|l| values[l * w + 1]).collect();
    for k in 0..m {
        values[k * w] = row_zero(&p, &row1, k);
    }
    JointDistribution::from_values(p, rr, values, Method::Spectral, d.max_row_residual)
}

/// Kernel, coefficient solve and reconstruction in one call.
pub fn solve<T: Scalar>(params: ModelParams<T>, cfg: &SolverConfig<T>) -> Result<JointDistribution<T>> {
    let kernel = AKernel::new(params, cfg.r_max)?;
    let d = solve_d(params, &kernel, cfg)?;
    reconstruct_pi(&kernel, &d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_coefficients() {
        let p = ModelParams::<f64>::new(3, 0.5).unwrap();
        assert!((compute_a(&p, 1, 2, 0) - 4.5).abs() < 1e-15);
        assert!((compute_a(&p, 2, 1, 0) - 6.0).abs() < 1e-14);
        assert_eq!(compute_a(&p, 2, 7, 2), 1.0);
        assert_eq!(compute_a(&p, 1, 7, 2), 0.0);
    }

    #[test]
    fn d0_fixtures() {
        let p = ModelParams::<f64>::new(1, 0.5).unwrap();
        let k = AKernel::new(p, 5).unwrap();
        assert!((d0(&k) - 1.0 / 6.0).abs() < 1e-16);
        let p = ModelParams::<f64>::new(2, 0.5).unwrap();
        let k = AKernel::new(p, 5).unwrap();
        assert!((d0(&k) - 1.0 / 14.0).abs() < 1e-16);
    }

    #[test]
    fn m1_recurrence_holds() {
        let rho = 0.5;
        let p = ModelParams::new(1, rho).unwrap();
        let cfg = SolverConfig::default_for(&p).with_r_max(80);
        let k = AKernel::new(p, cfg.r_max).unwrap();
        let d = solve_d(p, &k, &cfg).unwrap();
        for r in 0..40 {
            let rf = r as f64;
            let t = rho * (1.0 + rho) * (rf + 1.0) * d.d(r) - ((1.0 + 2.0 * rho) * (rf + 1.0) + 1.0) * d.d(r + 1)
                + (rf + 1.0) * d.d(r + 2);
            assert!(t.abs() <= 1e-12 * d.d(r), "r = {r}: {t:e}");
        }
    }

    #[test]
    fn corner_condition_is_implied() {
        for m in 1..=4 {
            let p = ModelParams::new(m, 0.7).unwrap();
            let cfg = SolverConfig::default_for(&p);
            let k = AKernel::new(p, cfg.r_max).unwrap();
            let d = solve_d(p, &k, &cfg).unwrap();
            assert!(d.corner_residual < 1e-12, "m = {m}: {:e}", d.corner_residual);
        }
    }
}

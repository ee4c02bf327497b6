//! Parameterization method for local stable manifolds.
//!
//! A chart `P(θ) = Σ a_α θ^α` with `P(0) = x̃` and `∂_{θ_k}P(0) = σ ξ_k`
//! solves `F(a)_α = (α·λ) a_α − g(a)_α = 0` for `|α| ≥ 2`. The finite
//! projection `2 ≤ |α| ≤ N` is block lower triangular in graded order, so it
//! is solved order by order in floats, and the approximate inverse `A` used
//! in the proof is the exact inverse of `DF^{(N)}(ā)`, applied by interval
//! forward substitution. With that choice `Z0 = 0`; `Y0`, `Z1`, `Z2` follow
//! the usual ℓ¹ estimates and the radii polynomial is checked at
//! `r0 = 2 Y0 / (1 − Z0 − Z1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{check_nonresonance, FieldError, PolyField, VerifiedEquilibrium};
use crate::interval::Interval;
use crate::linalg::{self, Mat};
use crate::series::{count_upto, exponents, for_each_split, index_of, Series, SeriesError, TaylorCoeffs};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ManifoldError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("equilibrium has no real stable direction")]
    NoStableDirection,
    #[error("finite projection residual {residual:e} above tolerance {tol:e}")]
    NewtonDiverged { residual: f64, tol: f64 },
    #[error("radii polynomial test failed at {bound}: {detail}")]
    VerificationFailed { bound: String, detail: String },
    #[error("chart file: {0}")]
    Format(String),
}

/// Data fixed before the Taylor coefficients are solved for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub equilibrium: Vec<Interval>,
    pub lambda: Vec<Interval>,
    /// Scaled eigenvectors `σ ξ_k`, one per stable direction.
    pub eigvecs: Vec<Vec<Interval>>,
    pub sigma: f64,
}

impl Skeleton {
    /// Uses every real stable eigenpair, sorted by increasing `|λ|`.
    pub fn new(eq: &VerifiedEquilibrium, sigma: f64) -> Result<Skeleton, ManifoldError> {
        let pairs = eq.stable_pairs();
        if pairs.is_empty() {
            return Err(ManifoldError::NoStableDirection);
        }
        let s = Interval::point(sigma);
        Ok(Skeleton {
            equilibrium: eq.location.clone(),
            lambda: pairs.iter().map(|p| p.value).collect(),
            eigvecs: pairs.iter().map(|p| p.vector.iter().map(|&v| v * s).collect()).collect(),
            sigma,
        })
    }

    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    pub fn n(&self) -> usize {
        self.equilibrium.len()
    }

    /// `α·λ` for the multi-index `alpha`.
    pub fn dot(&self, alpha: &[u32]) -> Interval {
        alpha.iter().zip(&self.lambda).map(|(&k, &l)| Interval::point(k as f64) * l).sum()
    }

    /// Lower bound of `λ*(N) = min_{|α|>N} |α·λ| ≥ (N+1) min|λ_k|`.
    pub fn lambda_star(&self, n_trunc: usize) -> f64 {
        let min = self.lambda.iter().map(|l| l.mig()).fold(f64::INFINITY, f64::min);
        (Interval::point((n_trunc + 1) as f64) * Interval::point(min)).lo()
    }

    /// Interval series with orders 0 and 1 from the skeleton and the
    /// higher orders from `coeffs` (`[component][storage index]`).
    pub fn with_coeffs(&self, coeffs: &[Vec<f64>], deg: usize) -> Result<TaylorCoeffs, ManifoldError> {
        let m = self.m();
        let comps = (0..self.n())
            .map(|i| {
                let mut c: Vec<Interval> = coeffs[i].iter().map(|&v| Interval::point(v)).collect();
                c[0] = self.equilibrium[i];
                for k in 0..m {
                    c[k + 1] = self.eigvecs[k][i];
                }
                Series::from_coeffs(m, deg, c, 0.0)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TaylorCoeffs::new(comps)?)
    }
}

/// Float solution of the finite projection.
#[derive(Clone, Debug)]
pub struct Projection {
    /// `coeffs[i][idx]`, graded-lex storage up to degree `N`.
    pub coeffs: Vec<Vec<f64>>,
    /// `max |F_α(ā)|` over `2 ≤ |α| ≤ N`.
    pub residual: f64,
}

/// Solves `F^{(N)}(a) = 0` order by order: at each `α` the coefficient of
/// `g(a)` is affine in `a_α` with slope `Dg(x̃)`, so
/// `(α·λ − Dg(x̃)) a_α = g(a)_α|_{a_α = 0}`. This is Newton's method with the
/// exact block-triangular Jacobian and converges in one sweep.
pub fn newton_solve_projection(
    field: &PolyField,
    skel: &Skeleton,
    n_trunc: usize,
    tol: f64,
) -> Result<Projection, ManifoldError> {
    let (m, n) = (skel.m(), skel.n());
    let prog = field.program();
    let len = count_upto(m, n_trunc);
    let exps = exponents(m, n_trunc);
    let x0: Vec<f64> = skel.equilibrium.iter().map(|v| v.mid()).collect();
    let lam: Vec<f64> = skel.lambda.iter().map(|v| v.mid()).collect();
    let jac0 = field.jacobian(&x0);
    let mut a = vec![vec![0.0; len]; n];
    for i in 0..n {
        a[i][0] = x0[i];
        for k in 0..m {
            a[i][k + 1] = skel.eigvecs[k][i].mid();
        }
    }
    let mut st = prog.incremental::<f64>(len);
    for idx in 0..len {
        let alpha = &exps[idx * m..(idx + 1) * m];
        let deg: u32 = alpha.iter().sum();
        advance(prog, &mut st, idx, alpha, &a, m);
        if deg < 2 {
            continue;
        }
        let al: f64 = alpha.iter().zip(&lam).map(|(&k, l)| k as f64 * l).sum();
        let rhs: Vec<f64> = (0..n).map(|i| prog.output_at(&st, i, idx)).collect();
        let mat: Mat<f64> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { al - jac0[i][j] } else { -jac0[i][j] }).collect())
            .collect();
        let sol = linalg::solve_f64(&mat, &rhs).map_err(FieldError::from)?;
        for i in 0..n {
            a[i][idx] = sol[i];
        }
        advance(prog, &mut st, idx, alpha, &a, m);
    }
    let residual = projection_residual(field, &a, &lam, m, n_trunc);
    if !residual.is_finite() || residual > tol {
        return Err(ManifoldError::NewtonDiverged { residual, tol });
    }
    Ok(Projection { coeffs: a, residual })
}

fn advance(prog: &crate::program::Program, st: &mut crate::program::Incremental<f64>, idx: usize, alpha: &[u32], a: &[Vec<f64>], m: usize) {
    if m == 1 {
        prog.step1(st, idx, a);
    } else {
        prog.step(st, idx, alpha, a);
    }
}

fn projection_residual(field: &PolyField, a: &[Vec<f64>], lam: &[f64], m: usize, n_trunc: usize) -> f64 {
    let prog = field.program();
    let len = count_upto(m, n_trunc);
    let exps = exponents(m, n_trunc);
    let mut st = prog.incremental::<f64>(len);
    let mut worst: f64 = 0.0;
    for idx in 0..len {
        let alpha = &exps[idx * m..(idx + 1) * m];
        advance(prog, &mut st, idx, alpha, a, m);
        if alpha.iter().sum::<u32>() < 2 {
            continue;
        }
        let al: f64 = alpha.iter().zip(lam).map(|(&k, l)| k as f64 * l).sum();
        for (i, ai) in a.iter().enumerate() {
            worst = worst.max((al * ai[idx] - prog.output_at(&st, i, idx)).abs());
        }
    }
    worst
}

/// Eigenvector scale for which the order-`N` coefficients are about `1e-16`.
pub fn default_sigma(field: &PolyField, eq: &VerifiedEquilibrium, n_trunc: usize) -> Result<f64, ManifoldError> {
    const TARGET: f64 = 1e-16;
    let n0 = n_trunc.clamp(2, 40);
    let unit = Skeleton::new(eq, 1.0)?;
    let proj = newton_solve_projection(field, &unit, n0, f64::INFINITY)?;
    let prof = degree_norms(&proj.coeffs, unit.m(), n0);
    let rate = (n0 / 2..=n0).filter(|&k| k > 0).map(|k| prof[k].powf(1.0 / k as f64)).fold(0.0, f64::max);
    if rate == 0.0 || !rate.is_finite() {
        return Ok(1.0);
    }
    let mut sigma = TARGET.powf(1.0 / n_trunc as f64) / rate;
    for _ in 0..2 {
        let skel = Skeleton::new(eq, sigma)?;
        let proj = newton_solve_projection(field, &skel, n_trunc, f64::INFINITY)?;
        let top = degree_norms(&proj.coeffs, skel.m(), n_trunc)[n_trunc];
        if top == 0.0 || !top.is_finite() {
            break;
        }
        sigma *= (TARGET / top).powf(1.0 / n_trunc as f64);
    }
    Ok(sigma)
}

/// `max_i Σ_{|α|=k} |a_{i,α}|` for each degree `k`.
fn degree_norms(a: &[Vec<f64>], m: usize, deg: usize) -> Vec<f64> {
    let mut out = vec![0.0; deg + 1];
    for ai in a {
        for (k, o) in out.iter_mut().enumerate() {
            let start = if k == 0 { 0 } else { count_upto(m, k - 1) };
            let s: f64 = ai[start..count_upto(m, k)].iter().map(|v| v.abs()).sum();
            *o = f64::max(*o, s);
        }
    }
    out
}

/// `F(a)` on `2 ≤ |α|` up to the degree of `g(a)`; orders 0 and 1 are zero.
/// `trunc` re-truncates the products (discarded mass goes to the tails).
#[allow(non_snake_case)]
pub fn assemble_F(field: &PolyField, skel: &Skeleton, a: &TaylorCoeffs, trunc: Option<usize>) -> Result<TaylorCoeffs, ManifoldError> {
    let ga = field.apply_to_series(a, trunc)?;
    Ok(f_from_g(skel, a, &ga))
}

fn f_from_g(skel: &Skeleton, a: &TaylorCoeffs, ga: &TaylorCoeffs) -> TaylorCoeffs {
    let m = skel.m();
    let deg = ga.degree();
    let exps = exponents(m, deg);
    let comps = a
        .comps
        .iter()
        .zip(&ga.comps)
        .map(|(ai, gi)| {
            let mut f = Series::zeros(m, deg);
            let coef = f.coeffs_mut();
            for (idx, c) in coef.iter_mut().enumerate().skip(m + 1) {
                let alpha = &exps[idx * m..(idx + 1) * m];
                let own = ai.coeffs().get(idx).copied().unwrap_or(Interval::ZERO);
                *c = skel.dot(alpha) * own - gi.coeffs()[idx];
            }
            f.set_tail(gi.tail());
            f
        })
        .collect();
    TaylorCoeffs::new(comps).expect("same shapes")
}

/// `DF^{(N)}(ā)` in factored form: the Taylor coefficients `C_δ` of
/// `Dg(ā)` and the diagonal blocks `D_α^{-1} = (α·λ − C_0)^{-1}`.
pub struct Linearization {
    m: usize,
    n: usize,
    n_trunc: usize,
    exps: Vec<u32>,
    /// `c[i][j]` is the series of `∂g_i/∂x_j(ā)` (tail covers the rest).
    c: Vec<Vec<Series>>,
    dinv: Vec<Mat<Interval>>,
}

impl Linearization {
    pub fn new(skel: &Skeleton, jac: Vec<Vec<Series>>, n_trunc: usize) -> Result<Linearization, ManifoldError> {
        let (m, n) = (skel.m(), skel.n());
        let exps = exponents(m, n_trunc);
        let len = count_upto(m, n_trunc);
        let c0: Mat<Interval> = (0..n).map(|i| (0..n).map(|j| jac[i][j].coeffs()[0]).collect()).collect();
        let mut dinv = vec![Vec::new(); len];
        for idx in m + 1..len {
            let al = skel.dot(&exps[idx * m..(idx + 1) * m]);
            let d: Mat<Interval> =
                (0..n).map(|i| (0..n).map(|j| if i == j { al - c0[i][j] } else { -c0[i][j] }).collect()).collect();
            dinv[idx] = linalg::inverse_interval(&d).map_err(FieldError::from)?;
        }
        Ok(Linearization { m, n, n_trunc, exps, c: jac, dinv })
    }

    /// `A^{(N)} f = DF^{(N)}(ā)^{-1} f` by forward substitution over
    /// `2 ≤ |α| ≤ N`: `y_α = D_α^{-1}(f_α + Σ_{δ≠0} C_δ y_{α−δ})`.
    pub fn apply_inverse(&self, f: &[&[Interval]]) -> Vec<Vec<Interval>> {
        let (m, n) = (self.m, self.n);
        let len = count_upto(m, self.n_trunc);
        let mut y = vec![vec![Interval::ZERO; len]; n];
        let mut s = vec![Interval::ZERO; n];
        for idx in m + 1..len {
            let alpha = &self.exps[idx * m..(idx + 1) * m];
            for i in 0..n {
                s[i] = f[i][idx];
            }
            for_each_split(alpha, |d, g| {
                if d == 0 || g <= m {
                    return;
                }
                for i in 0..n {
                    for j in 0..n {
                        if let Some(&c) = self.c[i][j].coeffs().get(d) {
                            s[i] += c * y[j][g];
                        }
                    }
                }
            });
            let sol = linalg::mat_vec(&self.dinv[idx], &s);
            for i in 0..n {
                y[i][idx] = sol[i];
            }
        }
        y
    }

    /// Entrywise bounds `M_{ij} ≥ sup_β Σ_α |(A^{(N)})_{iα, jβ}|`, the
    /// entrywise minimum of a degree-indexed and a shift-indexed majorant.
    pub fn inverse_column_bounds(&self) -> Mat<f64> {
        let a = self.degree_column_bounds();
        let b = self.shift_column_bounds();
        a.iter().zip(&b).map(|(r, s)| r.iter().zip(s).map(|(&x, &y)| x.min(y)).collect()).collect()
    }

    /// Degree-indexed majorant. For a column of degree `b`,
    /// `W_k ≤ D̂_k (δ_{k,b} I + Σ_s Ĉ_s W_{k−s})` with `D̂_k` the entrywise max
    /// of `|D_α^{-1}|` over `|α| = k` and `Ĉ_s = Σ_{|δ|=s} |C_δ|`.
    fn degree_column_bounds(&self) -> Mat<f64> {
        let (m, n, nt) = (self.m, self.n, self.n_trunc);
        let zero = || vec![vec![0.0f64; n]; n];
        let mut dhat = vec![zero(); nt + 1];
        for idx in m + 1..count_upto(m, nt) {
            let k: u32 = self.exps[idx * m..(idx + 1) * m].iter().sum();
            let d = &mut dhat[k as usize];
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].max(self.dinv[idx][i][j].mag());
                }
            }
        }
        let mut chat = vec![zero(); nt + 1];
        for s in 1..=nt.saturating_sub(2) {
            let (start, end) = (count_upto(m, s - 1), count_upto(m, s));
            for i in 0..n {
                for j in 0..n {
                    let coef = self.c[i][j].coeffs();
                    let tot: Interval = coef[start.min(coef.len())..end.min(coef.len())]
                        .iter()
                        .map(|c| Interval::point(c.mag()))
                        .sum();
                    chat[s][i][j] = tot.hi();
                }
            }
        }
        let mut best = zero();
        for b in 2..=nt {
            let mut w: Vec<Mat<f64>> = vec![zero(); nt + 1];
            w[b] = dhat[b].clone();
            let mut total = w[b].clone();
            for k in b + 1..=nt {
                let mut acc = zero();
                for s in 1..=k - b {
                    acc = add_up(&acc, &mul_up(&chat[s], &w[k - s]));
                }
                w[k] = mul_up(&dhat[k], &acc);
                total = add_up(&total, &w[k]);
            }
            for i in 0..n {
                for j in 0..n {
                    best[i][j] = best[i][j].max(total[i][j]);
                }
            }
        }
        best
    }

    /// Shift-indexed majorant.
    ///
    /// For a column `β`, forward substitution gives
    /// `|Y_{β+γ}| ≤ |D_{β+γ}^{-1}| (δ_{γ,0} I + Σ_{0<δ≤γ} |C_δ| |Y_{β+γ−δ}|)`.
    /// With `E_γ = sup_β |D_{β+γ}^{-1}|` the recursion
    /// `V_γ = E_γ (δ_{γ,0} I + Σ_δ |C_δ| V_{γ−δ})` majorizes every column at
    /// once, and `Σ_γ V_γ` bounds the column sums.
    fn shift_column_bounds(&self) -> Mat<f64> {
        let (m, n, nt) = (self.m, self.n, self.n_trunc);
        let zero = || vec![vec![0.0f64; n]; n];
        if nt < 2 {
            return zero();
        }
        let len = count_upto(m, nt);
        let glen = count_upto(m, nt - 2);
        let mags: Vec<Mat<f64>> = (0..len)
            .map(|idx| {
                if idx <= m {
                    zero()
                } else {
                    self.dinv[idx].iter().map(|r| r.iter().map(|v| v.mag()).collect()).collect()
                }
            })
            .collect();
        let mut e = vec![zero(); glen];
        let mut sum = vec![0u32; m];
        for gi in 0..glen {
            let gamma = &self.exps[gi * m..(gi + 1) * m];
            let dg: u32 = gamma.iter().sum();
            for bi in m + 1..count_upto(m, nt - dg as usize) {
                let beta = &self.exps[bi * m..(bi + 1) * m];
                for k in 0..m {
                    sum[k] = beta[k] + gamma[k];
                }
                let d = &mags[index_of(&sum)];
                for i in 0..n {
                    for j in 0..n {
                        e[gi][i][j] = e[gi][i][j].max(d[i][j]);
                    }
                }
            }
        }
        let chat: Vec<Mat<f64>> = (0..glen)
            .map(|d| {
                (0..n)
                    .map(|i| (0..n).map(|j| self.c[i][j].coeffs().get(d).map_or(0.0, |c| c.mag())).collect())
                    .collect()
            })
            .collect();
        let mut v: Vec<Mat<f64>> = Vec::with_capacity(glen);
        let mut total = zero();
        for gi in 0..glen {
            let gamma = &self.exps[gi * m..(gi + 1) * m];
            let mut acc = if gi == 0 { linalg::identity::<f64>(n) } else { zero() };
            for_each_split(gamma, |d, rest| {
                if d != 0 {
                    acc = add_up(&acc, &mul_up(&chat[d], &v[rest]));
                }
            });
            let vg = mul_up(&e[gi], &acc);
            total = add_up(&total, &vg);
            v.push(vg);
        }
        total
    }

    /// Operator norm bound of `A` (finite block plus the diagonal tail
    /// `1/(α·λ)`) on `X = (ℓ¹)^n` with the max-over-components norm.
    pub fn operator_norm(&self, lambda_star: f64) -> f64 {
        let fin = self.inverse_column_bounds();
        let tail = (Interval::ONE / Interval::point(lambda_star)).hi();
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| Interval::point(if i == j { fin[i][j].max(tail) } else { fin[i][j] }))
                    .sum::<Interval>()
                    .hi()
            })
            .fold(0.0, f64::max)
    }

    /// `‖∂g_i/∂x_j(ā)‖₁` (upper bounds, tails included).
    pub fn jacobian_norms(&self) -> Mat<f64> {
        self.c.iter().map(|row| row.iter().map(|s| s.norm()).collect()).collect()
    }
}

fn mul_up(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| Interval::point(a[i][k]) * Interval::point(b[k][j])).sum::<Interval>().hi())
                .collect()
        })
        .collect()
}

fn add_up(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(&x, &y)| (Interval::point(x) + Interval::point(y)).hi()).collect())
        .collect()
}

/// `Y0 ≥ ‖A F(ā)‖`: the finite part through [`Linearization::apply_inverse`],
/// the tail through `|F_α| / |α·λ|`, and the truncation mass through `λ*(N)`.
#[allow(non_snake_case)]
pub fn compute_Y0(skel: &Skeleton, lin: &Linearization, f: &TaylorCoeffs, n_trunc: usize) -> Interval {
    let m = skel.m();
    let len = count_upto(m, n_trunc);
    let fin_in: Vec<&[Interval]> = f.comps.iter().map(|c| &c.coeffs()[..len]).collect();
    let y = lin.apply_inverse(&fin_in);
    let lstar = Interval::point(skel.lambda_star(n_trunc));
    let exps = exponents(m, f.degree());
    let mut worst = Interval::ZERO;
    for (i, fi) in f.comps.iter().enumerate() {
        let mut acc: Interval = y[i].iter().map(|v| Interval::point(v.mag())).sum();
        for (idx, c) in fi.coeffs().iter().enumerate().skip(len) {
            if c.lo() == 0.0 && c.hi() == 0.0 {
                continue;
            }
            let al = skel.dot(&exps[idx * m..(idx + 1) * m]);
            acc += Interval::point(c.mag()) / Interval::point(al.mig());
        }
        acc += Interval::point(fi.tail()) / lstar;
        if acc.hi() > worst.hi() {
            worst = acc;
        }
    }
    worst
}

/// `Z0 ≥ ‖I − A A†‖` for explicit matrices on a single ℓ¹ block
/// (largest absolute column sum).
#[allow(non_snake_case)]
pub fn compute_Z0(a: &Mat<Interval>, adag: &Mat<Interval>) -> Interval {
    let n = a.len();
    let prod = linalg::mat_mul(a, adag);
    let mut worst = Interval::ZERO;
    for j in 0..n {
        let col: Interval = (0..n)
            .map(|i| {
                let b = if i == j { Interval::ONE - prod[i][j] } else { -prod[i][j] };
                Interval::point(b.mag())
            })
            .sum();
        if col.hi() > worst.hi() {
            worst = col;
        }
    }
    worst
}

/// `Z1 = max_i (1/λ*(N)) Σ_j ‖∂g_i/∂x_j(ā)‖₁`.
#[allow(non_snake_case)]
pub fn compute_Z1(lin: &Linearization, lambda_star: f64) -> Interval {
    let norms = lin.jacobian_norms();
    let l = Interval::point(lambda_star);
    norms
        .iter()
        .map(|row| row.iter().map(|&v| Interval::point(v)).sum::<Interval>() / l)
        .fold(Interval::ZERO, |a, b| if b.hi() > a.hi() { b } else { a })
}

/// `Z2 = ‖A‖ max_i Σ_{j,k} sup_{B_{r*}(ā)} ‖∂²g_i/∂x_j∂x_k‖₁`, the sup bounded by
/// the absolute-coefficient polynomial at `‖ā_l‖₁ + r*`.
#[allow(non_snake_case)]
pub fn compute_Z2(field: &PolyField, abar: &TaylorCoeffs, norm_a: f64, r_star: f64) -> Interval {
    let rho: Vec<Interval> =
        abar.comps.iter().map(|c| Interval::point((Interval::point(c.norm()) + Interval::point(r_star)).hi())).collect();
    let second = field.second_derivatives();
    let worst = second
        .iter()
        .map(|gi| {
            gi.iter()
                .flat_map(|row| row.iter())
                .map(|p| Interval::point(p.abs_coeffs().eval_interval(&rho).hi()))
                .sum::<Interval>()
                .hi()
        })
        .fold(0.0, f64::max);
    Interval::point(norm_a) * Interval::point(worst)
}

/// Bounds of a radii-polynomial proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiCertificate {
    #[serde(rename = "Y0")]
    pub y0: Interval,
    #[serde(rename = "Z0")]
    pub z0: Interval,
    #[serde(rename = "Z1")]
    pub z1: Interval,
    #[serde(rename = "Z2")]
    pub z2: Interval,
    pub r_star: f64,
    pub r0: Interval,
    #[serde(rename = "N")]
    pub n_trunc: usize,
}

impl RadiiCertificate {
    /// `p(r) = Z2 r² − (1 − Z1 − Z0) r + Y0` in interval arithmetic.
    pub fn radii_polynomial(&self, r: f64) -> Interval {
        let r = Interval::point(r);
        self.z2 * r * r - (Interval::ONE - self.z1 - self.z0) * r + self.y0
    }

    pub fn report(&self) -> String {
        format!(
            "N  = {}\nY0 = {:.6e}\nZ0 = {:.6e}\nZ1 = {:.6e}\nZ2 = {:.6e}\nr* = {:.6e}\nr0 = {:.6e}\np(r0) = {:.6e}\n",
            self.n_trunc,
            self.y0.hi(),
            self.z0.hi(),
            self.z1.hi(),
            self.z2.hi(),
            self.r_star,
            self.r0.hi(),
            self.radii_polynomial(self.r0.hi()).hi()
        )
    }
}

/// Checks `p(r0) < 0` at `r0 = 2 Y0 / (1 − Z0 − Z1)` and `r0 ≤ r*`.
pub fn radii_verify(
    y0: Interval,
    z0: Interval,
    z1: Interval,
    z2: Interval,
    r_star: f64,
    n_trunc: usize,
) -> Result<RadiiCertificate, ManifoldError> {
    let gap = Interval::ONE - z0 - z1;
    if gap.lo() <= 0.0 {
        return Err(ManifoldError::VerificationFailed {
            bound: "Z0 + Z1".into(),
            detail: format!("Z0 + Z1 = {:.6e} is not below 1", (z0 + z1).hi()),
        });
    }
    let r0 = (Interval::point(2.0) * Interval::point(y0.hi()) / Interval::point(gap.lo())).hi().max(f64::MIN_POSITIVE);
    let cert = RadiiCertificate { y0, z0, z1, z2, r_star, r0: Interval::point(r0), n_trunc };
    let p = cert.radii_polynomial(r0);
    if p.hi() >= 0.0 {
        return Err(ManifoldError::VerificationFailed {
            bound: "Z2".into(),
            detail: format!("p(r0) = {:.6e} is not negative (Y0 = {:.3e}, Z2 = {:.3e})", p.hi(), y0.hi(), z2.hi()),
        });
    }
    if r0 > r_star {
        return Err(ManifoldError::VerificationFailed {
            bound: "Y0".into(),
            detail: format!("r0 = {r0:.6e} exceeds r* = {r_star:.6e}"),
        });
    }
    Ok(cert)
}

/// A proven local stable manifold `P: B₁^m → R^n`.
#[derive(Clone, Debug)]
pub struct ManifoldChart {
    pub field: PolyField,
    pub equilibrium: VerifiedEquilibrium,
    pub skeleton: Skeleton,
    /// Verified coefficients; every component's tail equals `r0`.
    pub coeffs: TaylorCoeffs,
    pub certificate: RadiiCertificate,
    pub projection_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct ChartJson {
    model: String,
    equilibrium: VerifiedEquilibrium,
    skeleton: Skeleton,
    certificate: RadiiCertificate,
    projection_residual: f64,
    series: serde_json::Value,
}

impl ManifoldChart {
    pub fn m(&self) -> usize {
        self.skeleton.m()
    }
    pub fn n(&self) -> usize {
        self.skeleton.n()
    }
    pub fn n_trunc(&self) -> usize {
        self.certificate.n_trunc
    }
    pub fn r0(&self) -> f64 {
        self.certificate.r0.hi()
    }
    pub fn lambda(&self) -> &[Interval] {
        &self.skeleton.lambda
    }

    /// Enclosure of `P(θ)` for `θ` in the closed unit polydisc.
    pub fn eval(&self, theta: &[Interval]) -> Result<Vec<Interval>, ManifoldError> {
        Ok(self.coeffs.eval_enclosure(theta)?)
    }

    /// Float evaluation of `P^{(N)}` with midpoint coefficients.
    pub fn eval_f64(&self, theta: &[f64]) -> Vec<f64> {
        self.coeffs.comps.iter().map(|c| c.eval_f64(theta)).collect()
    }

    /// `∂P^{(N)}/∂θ_k` at `θ` (midpoint coefficients).
    pub fn partial_f64(&self, theta: &[f64], k: usize) -> Vec<f64> {
        let m = self.m();
        let exps = exponents(m, self.n_trunc());
        self.coeffs
            .comps
            .iter()
            .map(|c| {
                c.coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| exps[idx * m + k] > 0)
                    .map(|(idx, v)| {
                        let e = &exps[idx * m..(idx + 1) * m];
                        let mut t = v.mid() * e[k] as f64;
                        for (q, &p) in e.iter().enumerate() {
                            let p = if q == k { p - 1 } else { p };
                            t *= theta[q].powi(p as i32);
                        }
                        t
                    })
                    .sum()
            })
            .collect()
    }

    /// `max_i |Σ_k λ_k θ_k ∂_k P^{(N)}(θ) − g_i(P^{(N)}(θ))|` in floats.
    pub fn conjugacy_residual(&self, theta: &[f64]) -> f64 {
        let m = self.m();
        let exps = exponents(m, self.n_trunc());
        let lam: Vec<f64> = self.skeleton.lambda.iter().map(|l| l.mid()).collect();
        let p = self.eval_f64(theta);
        let gp = self.field.eval(&p);
        self.coeffs
            .comps
            .iter()
            .zip(gp)
            .map(|(c, gi)| {
                let lhs: f64 = c
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| {
                        let e = &exps[idx * m..(idx + 1) * m];
                        let al: f64 = e.iter().zip(&lam).map(|(&k, l)| k as f64 * l).sum();
                        e.iter().zip(theta).fold(al * v.mid(), |t, (&k, &x)| t * x.powi(k as i32))
                    })
                    .sum();
                (lhs - gi).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let series: serde_json::Value = serde_json::from_str(&self.coeffs.to_json()).expect("series json");
        serde_json::to_string_pretty(&ChartJson {
            model: self.field.name().to_string(),
            equilibrium: self.equilibrium.clone(),
            skeleton: self.skeleton.clone(),
            certificate: self.certificate.clone(),
            projection_residual: self.projection_residual,
            series,
        })
        .expect("chart json")
    }

    /// Reads a chart written by [`ManifoldChart::to_json`] for the given field.
    pub fn from_json(text: &str, field: &PolyField) -> Result<ManifoldChart, ManifoldError> {
        let j: ChartJson = serde_json::from_str(text).map_err(|e| ManifoldError::Format(e.to_string()))?;
        if j.model != field.name() {
            return Err(ManifoldError::Format(format!("chart is for {}, not {}", j.model, field.name())));
        }
        let coeffs = TaylorCoeffs::from_json(&j.series.to_string())?;
        Ok(ManifoldChart {
            field: field.clone(),
            equilibrium: j.equilibrium,
            skeleton: j.skeleton,
            coeffs,
            certificate: j.certificate,
            projection_residual: j.projection_residual,
        })
    }
}

/// Tolerance on the finite-projection residual, relative to the
/// largest coefficient.
const PROJECTION_TOL: f64 = 1e-13;

/// Full pipeline: non-resonance, projection, bounds, radii test.
pub fn build_chart(
    field: &PolyField,
    eq: &VerifiedEquilibrium,
    sigma_eig: Option<f64>,
    n_trunc: usize,
    r_star: f64,
) -> Result<ManifoldChart, ManifoldError> {
    let sigma = match sigma_eig {
        Some(s) => s,
        None => default_sigma(field, eq, n_trunc)?,
    };
    let skel = Skeleton::new(eq, sigma)?;
    check_nonresonance(&skel.lambda, n_trunc)?;
    let scale = eq.location.iter().map(|x| x.mag()).fold(1.0, f64::max);
    let proj = newton_solve_projection(field, &skel, n_trunc, PROJECTION_TOL * scale)?;
    let abar = skel.with_coeffs(&proj.coeffs, n_trunc)?;
    // exact products for one variable, truncation with tail mass otherwise
    let trunc = if skel.m() == 1 { None } else { Some(n_trunc) };
    let (f, jac) = residual_and_jacobian(field, &skel, &abar, trunc);
    let lin = Linearization::new(&skel, jac, n_trunc)?;
    let lstar = skel.lambda_star(n_trunc);
    let y0 = compute_Y0(&skel, &lin, &f, n_trunc);
    let z0 = Interval::ZERO;
    let z1 = compute_Z1(&lin, lstar);
    let z2 = compute_Z2(field, &abar, lin.operator_norm(lstar), r_star);
    let certificate = radii_verify(y0, z0, z1, z2, r_star, n_trunc)?;
    let r0 = certificate.r0.hi();
    let mut coeffs = abar;
    for c in &mut coeffs.comps {
        c.set_tail(r0);
    }
    Ok(ManifoldChart {
        field: field.clone(),
        equilibrium: eq.clone(),
        skeleton: skel,
        coeffs,
        certificate,
        projection_residual: proj.residual,
    })
}

/// `F(ā)` and the series `Dg(ā)` from one pass of the field program.
fn residual_and_jacobian(
    field: &PolyField,
    skel: &Skeleton,
    abar: &TaylorCoeffs,
    trunc: Option<usize>,
) -> (TaylorCoeffs, Vec<Vec<Series>>) {
    let n = field.n();
    let all = field.program().eval_series(&abar.comps, trunc);
    let deg = all[..n].iter().map(|s| s.degree()).max().unwrap_or(0);
    let ga = TaylorCoeffs::new(all[..n].iter().map(|s| s.extend_to(deg)).collect()).expect("same m");
    let f = f_from_g(skel, abar, &ga);
    let jac = (0..n).map(|i| (0..n).map(|j| all[field.jac_output(i, j)].clone()).collect()).collect();
    (f, jac)
}

/// Coefficient `a_α` of component `i` (zero beyond the stored degree).
pub fn coefficient(chart: &ManifoldChart, i: usize, alpha: &[u32]) -> Interval {
    let s = &chart.coeffs.comps[i];
    if alpha.iter().sum::<u32>() as usize > s.degree() {
        Interval::ZERO
    } else {
        s.coeffs()[index_of(alpha)]
    }
}

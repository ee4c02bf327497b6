//! Small dense linear algebra over floats and intervals.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::interval::Interval;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular or too ill-conditioned to enclose its inverse")]
    Singular,
    #[error("Krawczyk operator did not map the box into its interior")]
    NoContraction,
}

/// Arithmetic shared by `f64` and [`Interval`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_interval(x: Interval) -> Self;
    fn mid_f64(&self) -> f64;
    fn scale_f64(self, s: f64) -> Self;
    /// `self / k`, rounded outward for intervals.
    fn div_count(self, k: usize) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_interval(x: Interval) -> Self {
        x.mid()
    }
    fn mid_f64(&self) -> f64 {
        *self
    }
    fn scale_f64(self, s: f64) -> Self {
        self * s
    }
    fn div_count(self, k: usize) -> Self {
        self / k as f64
    }
}

impl Scalar for Interval {
    fn zero() -> Self {
        Interval::ZERO
    }
    fn one() -> Self {
        Interval::ONE
    }
    fn from_f64(x: f64) -> Self {
        Interval::point(x)
    }
    fn from_interval(x: Interval) -> Self {
        x
    }
    fn mid_f64(&self) -> f64 {
        self.mid()
    }
    fn scale_f64(self, s: f64) -> Self {
        self.scale(s)
    }
    fn div_count(self, k: usize) -> Self {
        self / Interval::point(k as f64)
    }
}

/// Row-major square or rectangular matrix as nested vectors.
pub type Mat<T> = Vec<Vec<T>>;

pub fn identity<T: Scalar>(n: usize) -> Mat<T> {
    (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect()
}

pub fn mat_mul<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![T::zero(); c]; r];
    for i in 0..r {
        for l in 0..k {
            let x = a[i][l];
            for j in 0..c {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn mat_vec<T: Scalar>(a: &Mat<T>, x: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| {
            let mut s = T::zero();
            for (r, v) in row.iter().zip(x) {
                s += *r * *v;
            }
            s
        })
        .collect()
}

pub fn to_interval(a: &Mat<f64>) -> Mat<Interval> {
    a.iter().map(|r| r.iter().map(|&x| Interval::point(x)).collect()).collect()
}

pub fn mid(a: &Mat<Interval>) -> Mat<f64> {
    a.iter().map(|r| r.iter().map(|x| x.mid()).collect()).collect()
}

pub fn to_dmatrix(a: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

pub fn from_dmatrix(a: &DMatrix<f64>) -> Mat<f64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

/// Float inverse (LU).
pub fn inverse_f64(a: &Mat<f64>) -> Result<Mat<f64>, LinalgError> {
    to_dmatrix(a).try_inverse().map(|m| from_dmatrix(&m)).ok_or(LinalgError::Singular)
}

/// Float solve of `a x = b`.
pub fn solve_f64(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let lu = to_dmatrix(a).lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    lu.solve(&rhs).map(|v| v.iter().copied().collect()).ok_or(LinalgError::Singular)
}

/// Max-row-sum norm upper bound.
pub fn norm_inf(a: &Mat<Interval>) -> f64 {
    a.iter().map(|r| r.iter().map(|x| Interval::point(x.mag())).sum::<Interval>().hi()).fold(0.0, f64::max)
}

/// Max-column-sum norm upper bound.
pub fn norm_one(a: &Mat<Interval>) -> f64 {
    let n = a[0].len();
    (0..n).map(|j| a.iter().map(|r| Interval::point(r[j].mag())).sum::<Interval>().hi()).fold(0.0, f64::max)
}

/// Enclosure of the inverse of every matrix in `a`.
///
/// Preconditioned with the float inverse `R` of the midpoint: if
/// `‖I - R a‖∞ ≤ ρ < 1`, then `a⁻¹ ∈ R + [-1,1]·ρ‖R‖∞/(1-ρ)` entrywise.
pub fn inverse_interval(a: &Mat<Interval>) -> Result<Mat<Interval>, LinalgError> {
    let n = a.len();
    let r = inverse_f64(&mid(a))?;
    let ri = to_interval(&r);
    let ra = mat_mul(&ri, a);
    let mut e = identity::<Interval>(n);
    for i in 0..n {
        for j in 0..n {
            e[i][j] = e[i][j] - ra[i][j];
        }
    }
    let rho = norm_inf(&e);
    if !(rho < 1.0) {
        return Err(LinalgError::Singular);
    }
    // a⁻¹ = (I - E)⁻¹ R = R + E (I - E)⁻¹ R, ‖E (I-E)⁻¹ R‖ ≤ ρ‖R‖/(1-ρ)
    // tighter: a⁻¹ - R - E R ∈ ρ²‖R‖/(1-ρ)
    let er = mat_mul(&e, &ri);
    let rn = norm_inf(&ri);
    let rad = (Interval::point(rho) * Interval::point(rho) * Interval::point(rn)
        / (Interval::ONE - Interval::point(rho)))
    .hi();
    Ok((0..n)
        .map(|i| (0..n).map(|j| (ri[i][j] + er[i][j]).inflate(rad)).collect())
        .collect())
}

/// Interval enclosure of the solution set of `a x = b`.
pub fn solve_interval(a: &Mat<Interval>, b: &[Interval]) -> Result<Vec<Interval>, LinalgError> {
    let inv = inverse_interval(a)?;
    Ok(mat_vec(&inv, b))
}

/// Krawczyk test for `f(x) = 0` on the box `mid ± rad`.
///
/// `f_mid` is the interval image of the (thin) center and `jac` the interval
/// Jacobian over the whole box. Returns the contracted box on success.
pub fn krawczyk_step(
    center: &[f64],
    boxed: &[Interval],
    f_mid: &[Interval],
    jac: &Mat<Interval>,
) -> Result<Vec<Interval>, LinalgError> {
    let n = center.len();
    let y = inverse_f64(&mid(jac))?;
    let yi = to_interval(&y);
    let yf = mat_vec(&yi, f_mid);
    let yj = mat_mul(&yi, jac);
    let mut m = identity::<Interval>(n);
    for i in 0..n {
        for j in 0..n {
            m[i][j] = m[i][j] - yj[i][j];
        }
    }
    let dx: Vec<Interval> = boxed.iter().zip(center).map(|(b, &c)| *b - Interval::point(c)).collect();
    let mdx = mat_vec(&m, &dx);
    let k: Vec<Interval> = (0..n).map(|i| Interval::point(center[i]) - yf[i] + mdx[i]).collect();
    if k.iter().zip(boxed).all(|(ki, bi)| ki.interior_of(bi)) {
        Ok(k)
    } else {
        Err(LinalgError::NoContraction)
    }
}

/// Float Newton refinement followed by a Krawczyk proof on a box of radius
/// `rad` (relative growth tried a few times).
pub fn verify_zero<F, J, FI, JI>(
    guess: &[f64],
    f: F,
    df: J,
    fi: FI,
    dfi: JI,
    rad: f64,
) -> Result<Vec<Interval>, LinalgError>
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> Mat<f64>,
    FI: Fn(&[Interval]) -> Vec<Interval>,
    JI: Fn(&[Interval]) -> Mat<Interval>,
{
    let mut x = guess.to_vec();
    for _ in 0..50 {
        let fx = f(&x);
        let step = solve_f64(&df(&x), &fx)?;
        let mut small = true;
        for (xi, s) in x.iter_mut().zip(&step) {
            *xi -= s;
            if s.abs() > 1e-15 * (1.0 + xi.abs()) {
                small = false;
            }
        }
        if small {
            break;
        }
    }
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut r = rad.max(1e-13 * scale);
    let center_iv: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
    let f_mid = fi(&center_iv);
    for _ in 0..12 {
        let boxed: Vec<Interval> = x.iter().map(|&v| Interval::point(v).inflate(r)).collect();
        let jac = dfi(&boxed);
        if let Ok(k) = krawczyk_step(&x, &boxed, &f_mid, &jac) {
            return Ok(k);
        }
        r *= 10.0;
    }
    Err(LinalgError::NoContraction)
}

/// Orthogonal factor `Q` of a float QR decomposition.
pub fn qr_q(a: &Mat<f64>) -> Mat<f64> {
    let qr = to_dmatrix(a).qr();
    from_dmatrix(&qr.q())
}

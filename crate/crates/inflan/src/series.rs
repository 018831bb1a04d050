//! Scalar analytic functions and their truncated Taylor expansions at the origin.
//!
//! Every function the solver can handle is a member of a closed catalog, so
//! Taylor coefficients `t_j = f^(j)(0)/j!` are available exactly to any order.
//! Raw derivatives are never stored; consumers reconstruct the scaled
//! quantities they need through the recurrences in [`raw_derivatives`] and
//! [`derivatives_over_order`].

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Hard cap on requested Taylor orders.
pub const MAX_TAYLOR_ORDER: usize = 16_384;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A scalar analytic function from the solver catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFunction {
    /// f(λ) = λ^d
    Monomial { degree: usize },
    /// f(λ) = e^{aλ}
    Exponential { rate: C64 },
    /// f(λ) = sin λ
    Sine,
    /// f(λ) = λ sin λ
    LambdaSine,
    /// f(λ) = √(aλ + b), principal branch. Requires b ≠ 0.
    SqrtShift { a: C64, b: C64 },
    /// f(λ) = g(λ0 + αλ)
    AffineComposed {
        shift: C64,
        scale: C64,
        inner: Box<ScalarFunction>,
    },
    /// f(λ) = 1
    Constant,
    /// f(λ) = -λ
    NegatedIdentity,
}

impl ScalarFunction {
    /// Wrap `self` as λ ↦ self(λ0 + αλ). Nested affine wrappers are merged.
    pub fn affine(self, shift: C64, scale: C64) -> ScalarFunction {
        match self {
            ScalarFunction::AffineComposed {
                shift: s0,
                scale: a0,
                inner,
            } => ScalarFunction::AffineComposed {
                shift: s0 + a0 * shift,
                scale: a0 * scale,
                inner,
            },
            other => ScalarFunction::AffineComposed {
                shift,
                scale,
                inner: Box::new(other),
            },
        }
    }

    /// Evaluate f(λ).
    pub fn evaluate(&self, lambda: C64) -> C64 {
        match self {
            ScalarFunction::Monomial { degree } => lambda.powu(*degree as u32),
            ScalarFunction::Exponential { rate } => (*rate * lambda).exp(),
            ScalarFunction::Sine => lambda.sin(),
            ScalarFunction::LambdaSine => lambda * lambda.sin(),
            ScalarFunction::SqrtShift { a, b } => (*a * lambda + *b).sqrt(),
            ScalarFunction::AffineComposed {
                shift,
                scale,
                inner,
            } => inner.evaluate(*shift + *scale * lambda),
            ScalarFunction::Constant => c(1.0),
            ScalarFunction::NegatedIdentity => -lambda,
        }
    }

    /// Taylor coefficients t_0..t_L at the origin.
    pub fn taylor(&self, order: usize) -> Result<PowerSeries> {
        if order > MAX_TAYLOR_ORDER {
            return Err(Error::OrderOverflow {
                requested: order,
                cap: MAX_TAYLOR_ORDER,
            });
        }
        let n = order + 1;
        let coeffs = match self {
            ScalarFunction::Monomial { degree } => {
                let mut t = vec![C64::default(); n];
                if *degree < n {
                    t[*degree] = c(1.0);
                }
                t
            }
            ScalarFunction::Exponential { rate } => exp_series(*rate, c(1.0), n),
            ScalarFunction::Sine => sine_series(C64::default(), c(1.0), n),
            ScalarFunction::LambdaSine => {
                let s = sine_series(C64::default(), c(1.0), n);
                let mut t = vec![C64::default(); n];
                for j in 1..n {
                    t[j] = s[j - 1];
                }
                t
            }
            ScalarFunction::SqrtShift { a, b } => {
                if b.norm() == 0.0 {
                    return Err(Error::BranchPointAtOrigin);
                }
                let mut lin = vec![C64::default(); n];
                lin[0] = *b;
                if n > 1 {
                    lin[1] = *a;
                }
                series_sqrt(&lin)
            }
            ScalarFunction::AffineComposed {
                shift,
                scale,
                inner,
            } => return affine_taylor(inner, *shift, *scale, order),
            ScalarFunction::Constant => {
                let mut t = vec![C64::default(); n];
                t[0] = c(1.0);
                t
            }
            ScalarFunction::NegatedIdentity => {
                let mut t = vec![C64::default(); n];
                if n > 1 {
                    t[1] = c(-1.0);
                }
                t
            }
        };
        Ok(PowerSeries { coeffs })
    }

    /// Raw derivatives f^(j)(0) for j = 0..=order, each kind through its own
    /// exact recurrence. This avoids the underflow that would come from
    /// reconstructing j!·t_j once t_j leaves the f64 range (e.g. a^j/j! for
    /// |a| < 1 underflows near j ≈ 180 while a^j is perfectly representable).
    /// Square-root kinds fall back to the scaled-coefficient recurrence; their
    /// raw derivatives grow factorially, so the scaled route covers the whole
    /// representable range.
    pub fn raw_derivatives(&self, order: usize) -> Result<Vec<C64>> {
        if order > MAX_TAYLOR_ORDER {
            return Err(Error::OrderOverflow {
                requested: order,
                cap: MAX_TAYLOR_ORDER,
            });
        }
        let n = order + 1;
        let out = match self {
            ScalarFunction::Monomial { degree } => {
                let mut raw = vec![C64::default(); n];
                if *degree < n {
                    let mut f = 1.0f64;
                    for i in 2..=*degree {
                        f *= i as f64;
                    }
                    raw[*degree] = c(f);
                }
                raw
            }
            ScalarFunction::Exponential { rate } => {
                let mut raw = vec![C64::default(); n];
                raw[0] = c(1.0);
                for j in 1..n {
                    raw[j] = raw[j - 1] * rate;
                }
                raw
            }
            ScalarFunction::Sine => sine_raw(C64::default(), c(1.0), n),
            ScalarFunction::LambdaSine => lambda_sine_raw(C64::default(), c(1.0), n),
            ScalarFunction::SqrtShift { .. } => {
                let t = self.taylor(order)?;
                raw_derivatives(t.coeffs())
            }
            ScalarFunction::Constant => {
                let mut raw = vec![C64::default(); n];
                raw[0] = c(1.0);
                raw
            }
            ScalarFunction::NegatedIdentity => {
                let mut raw = vec![C64::default(); n];
                if n > 1 {
                    raw[1] = c(-1.0);
                }
                raw
            }
            ScalarFunction::AffineComposed {
                shift,
                scale,
                inner,
            } => affine_raw(inner, *shift, *scale, order)?,
        };
        Ok(out)
    }

    /// Monomial coefficients `[c_0, .., c_d]` when the function is a polynomial.
    pub fn polynomial_coeffs(&self) -> Option<Vec<C64>> {
        match self {
            ScalarFunction::Monomial { degree } => {
                let mut p = vec![C64::default(); degree + 1];
                p[*degree] = c(1.0);
                Some(p)
            }
            ScalarFunction::Constant => Some(vec![c(1.0)]),
            ScalarFunction::NegatedIdentity => Some(vec![C64::default(), c(-1.0)]),
            ScalarFunction::AffineComposed { inner, .. } => {
                let d = inner.polynomial_coeffs()?.len() - 1;
                // composition with an affine map keeps the degree; the Taylor
                // expansion truncated at d is the exact coefficient list
                let t = self.taylor(d).ok()?;
                Some(t.coeffs.clone())
            }
            _ => None,
        }
    }
}

/// Taylor coefficients of `g(shift + scale·λ)`. Resolved per catalog kind so
/// the coefficients stay exact (no generic series composition needed).
fn affine_taylor(g: &ScalarFunction, shift: C64, scale: C64, order: usize) -> Result<PowerSeries> {
    let n = order + 1;
    let coeffs = match g {
        ScalarFunction::Monomial { degree } => {
            // (shift + scale λ)^d by squaring with truncated products
            let mut lin = vec![C64::default(); n];
            lin[0] = shift;
            if n > 1 {
                lin[1] = scale;
            }
            series_pow(&lin, *degree)
        }
        ScalarFunction::Exponential { rate } => exp_series(*rate * scale, (*rate * shift).exp(), n),
        ScalarFunction::Sine => sine_series(shift, scale, n),
        ScalarFunction::LambdaSine => {
            // (shift + scale λ) sin(shift + scale λ)
            let s = sine_series(shift, scale, n);
            let mut lin = vec![C64::default(); n];
            lin[0] = shift;
            if n > 1 {
                lin[1] = scale;
            }
            series_mul(&lin, &s)
        }
        ScalarFunction::SqrtShift { a, b } => {
            // √(a(shift + scale λ) + b) = √((a·scale)λ + (a·shift + b))
            return ScalarFunction::SqrtShift {
                a: *a * scale,
                b: *a * shift + *b,
            }
            .taylor(order);
        }
        ScalarFunction::Constant => return ScalarFunction::Constant.taylor(order),
        ScalarFunction::NegatedIdentity => {
            let mut t = vec![C64::default(); n];
            t[0] = -shift;
            if n > 1 {
                t[1] = -scale;
            }
            t
        }
        ScalarFunction::AffineComposed {
            shift: s0,
            scale: a0,
            inner,
        } => {
            // g(x) = h(s0 + a0 x): merge the two affine maps
            return affine_taylor(inner, *s0 + *a0 * shift, *a0 * scale, order);
        }
    };
    Ok(PowerSeries { coeffs })
}

/// sin^(j)(shift)·scale^j: the derivative cycle of sin at the inner point.
fn sine_raw(shift: C64, scale: C64, n: usize) -> Vec<C64> {
    let (s0, c0) = (shift.sin(), shift.cos());
    let cycle = [s0, c0, -s0, -c0];
    let mut out = vec![C64::default(); n];
    let mut pw = c(1.0);
    for (j, o) in out.iter_mut().enumerate() {
        if j > 0 {
            pw *= scale;
        }
        *o = cycle[j % 4] * pw;
    }
    out
}

/// Raw derivatives of (shift + scale·λ)·sin(shift + scale·λ) by the Leibniz
/// rule: f^(j)(0) = shift·scale^j·sin^(j)(shift) + j·scale^j·sin^(j-1)(shift).
fn lambda_sine_raw(shift: C64, scale: C64, n: usize) -> Vec<C64> {
    let (s0, c0) = (shift.sin(), shift.cos());
    let cycle = [s0, c0, -s0, -c0];
    let mut out = vec![C64::default(); n];
    let mut pw = c(1.0);
    for (j, o) in out.iter_mut().enumerate() {
        if j > 0 {
            pw *= scale;
        }
        let lead = shift * cycle[j % 4];
        let second = if j > 0 {
            c(j as f64) * cycle[(j - 1) % 4]
        } else {
            C64::default()
        };
        *o = (lead + second) * pw;
    }
    out
}

/// Raw derivatives of g(shift + scale·λ) per catalog kind.
fn affine_raw(g: &ScalarFunction, shift: C64, scale: C64, order: usize) -> Result<Vec<C64>> {
    let n = order + 1;
    let out = match g {
        ScalarFunction::Monomial { degree } => {
            // f^(j)(0) = d·(d-1)···(d-j+1)·shift^{d-j}·scale^j
            let d = *degree;
            let mut raw = vec![C64::default(); n];
            let jmax = d.min(order);
            let mut falling = 1.0f64; // d!/(d-j)!
            let mut sc_pow = c(1.0); // scale^j
            let mut sh_pow = vec![c(1.0); d + 1]; // sh_pow[i] = shift^{d-i}
            for j in (0..d).rev() {
                sh_pow[j] = sh_pow[j + 1] * shift;
            }
            for j in 0..=d {
                if j > 0 {
                    falling *= (d - j + 1) as f64;
                    sc_pow *= scale;
                }
                if j <= jmax {
                    raw[j] = c(falling) * sh_pow[j] * sc_pow;
                }
            }
            raw
        }
        ScalarFunction::Exponential { rate } => {
            let mut raw = vec![C64::default(); n];
            raw[0] = (*rate * shift).exp();
            let step = *rate * scale;
            for j in 1..n {
                raw[j] = raw[j - 1] * step;
            }
            raw
        }
        ScalarFunction::Sine => sine_raw(shift, scale, n),
        ScalarFunction::LambdaSine => lambda_sine_raw(shift, scale, n),
        ScalarFunction::SqrtShift { a, b } => {
            return ScalarFunction::SqrtShift {
                a: *a * scale,
                b: *a * shift + *b,
            }
            .raw_derivatives(order);
        }
        ScalarFunction::Constant => {
            let mut raw = vec![C64::default(); n];
            raw[0] = c(1.0);
            raw
        }
        ScalarFunction::NegatedIdentity => {
            let mut raw = vec![C64::default(); n];
            raw[0] = -shift;
            if n > 1 {
                raw[1] = -scale;
            }
            raw
        }
        ScalarFunction::AffineComposed {
            shift: s0,
            scale: a0,
            inner,
        } => return affine_raw(inner, *s0 + *a0 * shift, *a0 * scale, order),
    };
    Ok(out)
}

/// Coefficients of c0 · e^{aλ}: t_j = c0 a^j / j!.
fn exp_series(a: C64, c0: C64, n: usize) -> Vec<C64> {
    let mut t = vec![C64::default(); n];
    t[0] = c0;
    for j in 1..n {
        t[j] = t[j - 1] * a / c(j as f64);
    }
    t
}

/// Coefficients of sin(shift + scale·λ): t_j = sin(shift + jπ/2)·scale^j/j!.
fn sine_series(shift: C64, scale: C64, n: usize) -> Vec<C64> {
    let mut t = vec![C64::default(); n];
    // cycle sin, cos, -sin, -cos for the derivatives of sin at `shift`
    let (s0, c0) = (shift.sin(), shift.cos());
    let cycle = [s0, c0, -s0, -c0];
    let mut pw = c(1.0); // scale^j / j!
    for (j, tj) in t.iter_mut().enumerate() {
        if j > 0 {
            pw = pw * scale / c(j as f64);
        }
        *tj = cycle[j % 4] * pw;
    }
    t
}

fn series_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    let mut out = vec![C64::default(); n];
    for (i, &ai) in a.iter().enumerate() {
        if ai == C64::default() {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j < n {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

fn series_pow(base: &[C64], mut e: usize) -> Vec<C64> {
    let n = base.len();
    let mut result = vec![C64::default(); n];
    result[0] = c(1.0);
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = series_mul(&result, &b);
        }
        e >>= 1;
        if e > 0 {
            b = series_mul(&b, &b);
        }
    }
    result
}

/// Square root of a power series with p_0 ≠ 0 (principal branch of √p_0):
/// s_0 = √p_0, s_n = (p_n - Σ_{i=1}^{n-1} s_i s_{n-i}) / (2 s_0).
fn series_sqrt(p: &[C64]) -> Vec<C64> {
    let n = p.len();
    let mut s = vec![C64::default(); n];
    s[0] = p[0].sqrt();
    let two_s0 = s[0] * c(2.0);
    for m in 1..n {
        let mut acc = p[m];
        for i in 1..m {
            acc -= s[i] * s[m - i];
        }
        s[m] = acc / two_s0;
    }
    s
}

/// Truncated Taylor expansion at the origin: coeffs[j] = f^(j)(0)/j!.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<C64>,
}

impl PowerSeries {
    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty());
        PowerSeries { coeffs }
    }

    /// Truncation order L (highest stored coefficient index).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> C64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Evaluate the truncated polynomial Σ t_j λ^j (Horner).
    pub fn evaluate(&self, lambda: C64) -> C64 {
        let mut acc = C64::default();
        for &t in self.coeffs.iter().rev() {
            acc = acc * lambda + t;
        }
        acc
    }
}

/// ln(j!) computed without overflow; exact product below 40, Stirling above.
pub fn ln_factorial(j: usize) -> f64 {
    if j < 40 {
        let mut p = 1.0f64;
        for i in 2..=j {
            p *= i as f64;
        }
        p.ln()
    } else {
        let x = (j + 1) as f64;
        let x2 = x * x;
        (x - 0.5) * x.ln() - x
            + 0.5 * (2.0 * std::f64::consts::PI).ln()
            + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x2)
            + 1.0 / (1260.0 * x2 * x2 * x)
    }
}

/// Scale factors j!·t_j (the raw derivatives f^(j)(0)) for j = 0..=L, computed
/// by the multiplicative recurrence φ_j = φ_{j-1}·j·(t_j/t_{j-1}). Runs of zero
/// coefficients are bridged by restarting from ln(j!) + ln|t_j| in
/// log-magnitude, so factorials are never materialized on their own.
pub fn raw_derivatives(t: &[C64]) -> Vec<C64> {
    scaled_sequence(t)
}

/// (j-1)!·t_j = f^(j)(0)/j for j = 1..=L (index 0 of the result is unused and
/// set to zero). These are the entries M_j/j combines with.
pub fn derivatives_over_order(t: &[C64]) -> Vec<C64> {
    let mut out = scaled_sequence(t);
    for (j, v) in out.iter_mut().enumerate().skip(1) {
        *v /= c(j as f64);
    }
    if let Some(v0) = out.first_mut() {
        *v0 = C64::default();
    }
    out
}

/// Complex division that survives operands far below sqrt(MIN_POSITIVE),
/// where the textbook formula underflows in |b|². Smith's algorithm.
fn robust_div(a: C64, b: C64) -> C64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let den = b.re + b.im * r;
        C64::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
    } else {
        let r = b.re / b.im;
        let den = b.re * r + b.im;
        C64::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
    }
}

fn scaled_sequence(t: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::default(); t.len()];
    let mut last: Option<(usize, C64)> = None; // (index, φ value) of last nonzero
    for (j, &tj) in t.iter().enumerate() {
        if tj == C64::default() {
            continue;
        }
        let phi = match last {
            Some((l, phil)) if j == l + 1 => phil * c(j as f64) * robust_div(tj, t[l]),
            _ => {
                // restart from closed form in log-magnitude
                let mag = tj.norm();
                let ln_mag = ln_factorial(j) + mag.ln();
                let phase = C64::new(tj.re / mag, tj.im / mag);
                phase * c(ln_mag.exp())
            }
        };
        out[j] = phi;
        last = Some((j, phi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: C64, b: C64, tol: f64, msg: &str) {
        assert!(
            (a - b).norm() <= tol * (1.0 + b.norm()),
            "{msg}: {a} vs {b}"
        );
    }

    #[test]
    fn exponential_taylor() {
        // e^λ: (1, 1, 1/2, 1/6)
        let t = ScalarFunction::Exponential { rate: c(1.0) }.taylor(3).unwrap();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (j, &e) in expect.iter().enumerate() {
            assert_close(t.coeff(j), c(e), 1e-15, "e^l coeff");
        }
        // e^{-2λ}: t_j = (-2)^j / j!, raw derivatives (-2)^j
        let t = ScalarFunction::Exponential { rate: c(-2.0) }.taylor(2).unwrap();
        assert_close(t.coeff(0), c(1.0), 1e-15, "t0");
        assert_close(t.coeff(1), c(-2.0), 1e-15, "t1");
        assert_close(t.coeff(2), c(2.0), 1e-15, "t2");
        let raw = raw_derivatives(t.coeffs());
        for (s, &r) in raw.iter().enumerate() {
            assert_close(r, c((-2.0f64).powi(s as i32)), 1e-13, "raw derivative");
        }
    }

    #[test]
    fn monomial_taylor() {
        let t = ScalarFunction::Monomial { degree: 2 }.taylor(4).unwrap();
        let expect = [0.0, 0.0, 1.0, 0.0, 0.0];
        for (j, &e) in expect.iter().enumerate() {
            assert_eq!(t.coeff(j), c(e));
        }
    }

    #[test]
    fn sqrt_shift_taylor_binomial_oracle() {
        // √(4+λ) = 2 + λ/4 - λ²/64 + ... (binomial series)
        let t = ScalarFunction::SqrtShift { a: c(1.0), b: c(4.0) }.taylor(2).unwrap();
        assert_close(t.coeff(0), c(2.0), 1e-15, "s0");
        assert_close(t.coeff(1), c(0.25), 1e-15, "s1");
        assert_close(t.coeff(2), c(-1.0 / 64.0), 1e-15, "s2");
        // higher order against the general binomial series oracle
        let t = ScalarFunction::SqrtShift { a: c(0.7), b: c(2.5) }.taylor(12).unwrap();
        let b: f64 = 2.5;
        let q: f64 = 0.7 / 2.5;
        // √b · Σ C(1/2, j) q^j λ^j
        let mut binom = 1.0;
        for j in 0..=12 {
            if j > 0 {
                binom *= (0.5 - (j as f64 - 1.0)) / j as f64;
            }
            let expect = b.sqrt() * binom * q.powi(j as i32);
            assert_close(t.coeff(j), c(expect), 1e-13, "binomial oracle");
        }
    }

    #[test]
    fn sqrt_shift_branch_point_rejected() {
        let err = ScalarFunction::SqrtShift { a: c(1.0), b: C64::default() }.taylor(3);
        assert!(matches!(err, Err(Error::BranchPointAtOrigin)));
    }

    #[test]
    fn order_cap_enforced() {
        let err = ScalarFunction::Sine.taylor(MAX_TAYLOR_ORDER + 1);
        assert!(matches!(err, Err(Error::OrderOverflow { .. })));
    }

    #[test]
    fn evaluate_at_zero_is_t0() {
        let fns = catalog();
        for f in &fns {
            let t = f.taylor(4).unwrap();
            assert_close(f.evaluate(C64::default()), t.coeff(0), 1e-14, "f(0) = t0");
        }
    }

    #[test]
    fn affine_composition_matches_direct_evaluation() {
        let shift = C64::new(0.3, -0.1);
        let scale = C64::new(0.8, 0.2);
        for f in &catalog() {
            let g = f.clone().affine(shift, scale);
            for &x in &[0.1, -0.4, 0.25] {
                let lam = c(x);
                assert_close(
                    g.evaluate(lam),
                    f.evaluate(shift + scale * lam),
                    1e-14,
                    "affine evaluate",
                );
            }
            // Taylor of the composition evaluated as a polynomial approximates g
            let t = g.taylor(30).unwrap();
            let lam = c(0.05);
            assert_close(t.evaluate(lam), g.evaluate(lam), 1e-10, "affine taylor");
        }
    }

    #[test]
    fn nested_affine_merges() {
        let f = ScalarFunction::Sine
            .affine(c(0.2), c(2.0))
            .affine(c(0.1), c(0.5));
        match &f {
            ScalarFunction::AffineComposed { inner, .. } => {
                assert!(matches!(**inner, ScalarFunction::Sine));
            }
            _ => panic!("expected affine wrapper"),
        }
        // sin(0.2 + 2(0.1 + 0.5λ)) = sin(0.4 + λ)
        assert_close(f.evaluate(c(0.3)), c((0.7f64).sin()), 1e-14, "merged affine");
    }

    /// Symmetric finite-difference oracle for f^(j)(0)/j!: equally weighted
    /// samples on a circle of radius r around the origin.
    fn fd_coeff(f: &ScalarFunction, j: usize, r: f64) -> C64 {
        let m = 64usize;
        let mut acc = C64::default();
        for l in 0..m {
            let ang = 2.0 * std::f64::consts::PI * l as f64 / m as f64;
            let z = C64::from_polar(r, ang);
            let w = C64::from_polar(1.0, -(j as f64) * ang);
            acc += f.evaluate(z) * w;
        }
        acc / c(m as f64 * r.powi(j as i32))
    }

    fn catalog() -> Vec<ScalarFunction> {
        vec![
            ScalarFunction::Monomial { degree: 3 },
            ScalarFunction::Exponential { rate: C64::new(-1.3, 0.4) },
            ScalarFunction::Sine,
            ScalarFunction::LambdaSine,
            ScalarFunction::SqrtShift { a: c(1.0), b: c(4.0) },
            ScalarFunction::Constant,
            ScalarFunction::NegatedIdentity,
            ScalarFunction::LambdaSine.affine(c(0.3), c(1.5)),
        ]
    }

    #[test]
    fn taylor_matches_finite_difference_derivatives() {
        for f in &catalog() {
            let t = f.taylor(6).unwrap();
            for j in 0..=6 {
                let fd = fd_coeff(f, j, 0.5);
                let exact = t.coeff(j);
                let denom = exact.norm().max(1e-6);
                assert!(
                    (fd - exact).norm() / denom <= 1e-6,
                    "{f:?} order {j}: fd {fd} vs exact {exact}"
                );
            }
        }
    }

    #[test]
    fn ln_factorial_matches_product() {
        let mut p = 1.0f64;
        for j in 1..=170 {
            p *= j as f64;
            let rel = (ln_factorial(j) - p.ln()).abs() / p.ln().max(1.0);
            assert!(rel < 1e-13, "ln_factorial({j})");
        }
    }

    #[test]
    fn scaled_sequences_bridge_zero_runs() {
        // sine: every even coefficient is zero; raw derivatives cycle 0,1,0,-1
        let t = ScalarFunction::Sine.taylor(11).unwrap();
        let raw = raw_derivatives(t.coeffs());
        let expect = [0.0, 1.0, 0.0, -1.0];
        for (j, &r) in raw.iter().enumerate() {
            assert_close(r, c(expect[j % 4]), 1e-12, "sin raw derivative");
        }
        // f^(j)(0)/j for the same
        let over = derivatives_over_order(t.coeffs());
        for (j, &r) in over.iter().enumerate().skip(1) {
            assert_close(r, c(expect[j % 4] / j as f64), 1e-12, "sin f^(j)/j");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sqrt_series_squares_back(
                re in proptest::collection::vec(-2.0f64..2.0, 6),
                im in proptest::collection::vec(-2.0f64..2.0, 6),
                lead in 0.5f64..4.0,
            ) {
                // (sqrt p)² = p for series with p0 bounded away from zero
                let mut p: Vec<C64> = re
                    .iter()
                    .zip(&im)
                    .map(|(&r, &i)| C64::new(r, i))
                    .collect();
                p[0] = C64::new(lead, im[0] * 0.3);
                let s = series_sqrt(&p);
                let sq = series_mul(&s, &s);
                for (a, b) in sq.iter().zip(&p) {
                    prop_assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
                }
            }

            #[test]
            fn scaled_sequence_matches_materialized_factorials(
                re in proptest::collection::vec(-1.5f64..1.5, 12),
            ) {
                // at low orders the stable recurrence equals j!·t_j directly
                let t: Vec<C64> = re.iter().map(|&r| c(r)).collect();
                let raw = raw_derivatives(&t);
                let mut fact = 1.0f64;
                for (j, (r, tj)) in raw.iter().zip(&t).enumerate() {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    let direct = tj * c(fact);
                    prop_assert!((r - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
                }
            }
        }
    }

    #[test]
    fn polynomial_coeffs_detection() {
        assert_eq!(
            ScalarFunction::NegatedIdentity.polynomial_coeffs().unwrap(),
            vec![C64::default(), c(-1.0)]
        );
        assert!(ScalarFunction::Sine.polynomial_coeffs().is_none());
        // (0.5 + 2λ)^2 = 0.25 + 2λ + 4λ²
        let f = ScalarFunction::Monomial { degree: 2 }.affine(c(0.5), c(2.0));
        let p = f.polynomial_coeffs().unwrap();
        assert_close(p[0], c(0.25), 1e-15, "p0");
        assert_close(p[1], c(2.0), 1e-15, "p1");
        assert_close(p[2], c(4.0), 1e-15, "p2");
    }
}

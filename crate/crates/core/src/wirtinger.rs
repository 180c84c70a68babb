//! Finite-difference Wirtinger derivatives of functions of complex variables.
//!
//! Every derivative is taken on the real coordinates `z_a = x_a + i y_a` with
//! central stencils and then combined through
//! `d/dz = (d/dx - i d/dy) / 2`, `d/dzbar = (d/dx + i d/dy) / 2`.
//! Central stencils have error expansions in even powers of the step, so
//! Richardson extrapolation over the steps `h, 2h, 4h` lifts the second-order
//! stencils to sixth order.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::potentials::MIN_INTERIOR_MARGIN;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Richardson levels used when `richardson` is on.
const RICHARDSON_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    /// Finest step for first and second derivatives.
    pub step: f64,
    pub richardson: bool,
    /// Highest per-side order accepted by [`mixed_partial`] (at most 4).
    pub max_order: u32,
    /// Interior margin of the evaluation point, when known. The step must
    /// satisfy `step <= margin / 8`.
    pub margin: Option<f64>,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self { step: 1e-4, richardson: true, max_order: 4, margin: None }
    }
}

impl DiffConfig {
    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn with_margin(self, margin: f64) -> Self {
        Self { margin: Some(margin), ..self }
    }

    fn levels(&self) -> usize {
        if self.richardson {
            RICHARDSON_LEVELS
        } else {
            1
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidInput(format!("step must be positive, got {}", self.step)));
        }
        if let Some(m) = self.margin {
            if !(m >= MIN_INTERIOR_MARGIN) {
                return Err(Error::boundary(m, "point too close to the boundary for differentiation"));
            }
            if self.step > m / 8.0 {
                return Err(Error::boundary(m, format!("step {} exceeds margin/8", self.step)));
            }
        }
        Ok(())
    }
}

/// Neville extrapolation of central-difference values at steps `h, 2h, 4h, ...`
/// whose errors expand in powers of `h^2`.
fn richardson(mut table: Vec<Vec<Complex64>>) -> Vec<Complex64> {
    let mut factor = 4.0;
    while table.len() > 1 {
        table = table
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(fine, coarse)| (fine * factor - coarse) / (factor - 1.0)).collect())
            .collect();
        factor *= 4.0;
    }
    table.pop().unwrap_or_default()
}

fn shifted(p: &[Complex64], coord: usize, delta: f64) -> Vec<Complex64> {
    let mut q = p.to_vec();
    if coord.is_multiple_of(2) {
        q[coord / 2].re += delta;
    } else {
        q[coord / 2].im += delta;
    }
    q
}

fn stencil_error(e: Error) -> Error {
    match e {
        Error::BoundaryViolation { margin, context } => {
            Error::BoundaryViolation { margin, context: format!("stencil left the domain: {context}") }
        }
        other => other,
    }
}

/// Central first partials along the real coordinates of a vector-valued map.
/// Returns, per real coordinate `u` (`2a` for `x_a`, `2a+1` for `y_a`), the
/// derivative of every output component.
fn real_jacobian<F>(f: &F, p: &[Complex64], cfg: &DiffConfig) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>> + ?Sized,
{
    cfg.check()?;
    let mut out = Vec::with_capacity(2 * p.len());
    for u in 0..2 * p.len() {
        let mut table = Vec::with_capacity(cfg.levels());
        for level in 0..cfg.levels() {
            let h = cfg.step * f64::from(1u32 << level);
            let plus = f(&shifted(p, u, h)).map_err(stencil_error)?;
            let minus = f(&shifted(p, u, -h)).map_err(stencil_error)?;
            table.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        }
        out.push(richardson(table));
    }
    Ok(out)
}

/// `(df/dz_a)_a` for real-valued `f`.
pub fn wirtinger_gradient<F>(f: &F, p: &[Complex64], cfg: &DiffConfig) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64]) -> Result<f64> + ?Sized,
{
    let wrapped = |q: &[Complex64]| f(q).map(|v| vec![Complex64::new(v, 0.0)]);
    let jac = real_jacobian(&wrapped, p, cfg)?;
    Ok((0..p.len()).map(|a| (jac[2 * a][0] - I * jac[2 * a + 1][0]) * 0.5).collect())
}

/// Holomorphic and antiholomorphic Jacobians of a complex vector-valued map:
/// `dz[(k, a)] = dF_k/dz_a`, `dzbar[(k, a)] = dF_k/dzbar_a`.
pub fn wirtinger_jacobian<F>(
    f: &F,
    p: &[Complex64],
    cfg: &DiffConfig,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>> + ?Sized,
{
    let jac = real_jacobian(f, p, cfg)?;
    let m = jac.first().map_or(0, Vec::len);
    let n = p.len();
    let dz = DMatrix::from_fn(m, n, |k, a| (jac[2 * a][k] - I * jac[2 * a + 1][k]) * 0.5);
    let dzbar = DMatrix::from_fn(m, n, |k, a| (jac[2 * a][k] + I * jac[2 * a + 1][k]) * 0.5);
    Ok((dz, dzbar))
}

/// Mixed complex Hessian `d^2 f / dz_a dzbar_b`, Hermitian-symmetrized.
pub fn wirtinger_hessian<F>(f: &F, p: &[Complex64], cfg: &DiffConfig) -> Result<HermitianMatrix>
where
    F: Fn(&[Complex64]) -> Result<f64> + ?Sized,
{
    cfg.check()?;
    let n = p.len();
    let m = 2 * n;
    let f0 = f(p).map_err(stencil_error)?;
    let eval = |q: Vec<Complex64>| f(&q).map_err(stencil_error);
    let mut table = Vec::with_capacity(cfg.levels());
    for level in 0..cfg.levels() {
        let h = cfg.step * f64::from(1u32 << level);
        let mut real = vec![Complex64::new(0.0, 0.0); m * m];
        for u in 0..m {
            let second = (eval(shifted(p, u, h))? - 2.0 * f0 + eval(shifted(p, u, -h))?) / (h * h);
            real[u * m + u] = second.into();
            for v in u + 1..m {
                let pp = eval(shifted(&shifted(p, u, h), v, h))?;
                let pm = eval(shifted(&shifted(p, u, h), v, -h))?;
                let mp = eval(shifted(&shifted(p, u, -h), v, h))?;
                let mm = eval(shifted(&shifted(p, u, -h), v, -h))?;
                let cross = (pp - pm - mp + mm) / (4.0 * h * h);
                real[u * m + v] = cross.into();
                real[v * m + u] = cross.into();
            }
        }
        table.push(real);
    }
    let real = richardson(table);
    let r = |u: usize, v: usize| real[u * m + v].re;
    let mat = DMatrix::from_fn(n, n, |a, b| {
        let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
        Complex64::new(r(xa, xb) + r(ya, yb), r(xa, yb) - r(ya, xb)) * 0.25
    });
    Ok(HermitianMatrix::symmetrize(mat))
}

/// Finest step used by [`mixed_partial`] for a given total order. Higher
/// orders divide by `h^order`, so round-off forces larger steps.
fn mixed_step(order: u32) -> f64 {
    match order {
        0..=2 => 2e-3,
        3 => 5e-3,
        4 => 1e-2,
        5 | 6 => 3e-2,
        _ => 5e-2,
    }
}

/// Integer offsets and weights of the central stencil for the `r`-th
/// derivative in one real variable (before dividing by `h^r`).
fn stencil_1d(r: u32) -> Vec<(i32, f64)> {
    let mut acc: HashMap<i32, f64> = HashMap::new();
    let ri = r as i32;
    let mut binom = 1.0;
    for k in 0..=ri {
        let w = if k % 2 == 0 { binom } else { -binom };
        if r.is_multiple_of(2) {
            *acc.entry(ri / 2 - k).or_default() += w;
        } else {
            // Half-integer points r/2 - k averaged over their two neighbours.
            let lo = (ri - 1) / 2 - k;
            *acc.entry(lo).or_default() += 0.5 * w;
            *acc.entry(lo + 1).or_default() += 0.5 * w;
        }
        binom = binom * f64::from(ri - k) / f64::from(k + 1);
    }
    let mut out: Vec<(i32, f64)> = acc.into_iter().filter(|(_, w)| *w != 0.0).collect();
    out.sort_by_key(|(o, _)| *o);
    out
}

/// Expansion of `prod_j 2^{-(a_j+b_j)} (dx_j - i dy_j)^{a_j} (dx_j + i dy_j)^{b_j}`
/// into real partial orders per real coordinate.
fn operator_terms(a: &[u32], b: &[u32]) -> Vec<(Vec<u32>, Complex64)> {
    let mut terms: Vec<(Vec<u32>, Complex64)> = vec![(vec![0; 2 * a.len()], Complex64::new(1.0, 0.0))];
    for (j, (&aj, &bj)) in a.iter().zip(b).enumerate() {
        let factors = std::iter::repeat_n(-I, aj as usize).chain(std::iter::repeat_n(I, bj as usize));
        for y_coeff in factors {
            let mut next: HashMap<Vec<u32>, Complex64> = HashMap::new();
            for (orders, c) in &terms {
                let mut ox = orders.clone();
                ox[2 * j] += 1;
                *next.entry(ox).or_default() += c * 0.5;
                let mut oy = orders.clone();
                oy[2 * j + 1] += 1;
                *next.entry(oy).or_default() += c * y_coeff * 0.5;
            }
            terms = next.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        }
    }
    terms.sort_by(|x, y| x.0.cmp(&y.0));
    terms
}

/// `d^{|a|+|b|} f / dz^a dzbar^b` at `p`.
///
/// Tensor products of central stencils on the real coordinates, extrapolated
/// over four steps. The step schedule depends on the total order only, so
/// `f` must be smooth on a neighbourhood of radius about `0.5` around `p`
/// for fourth-order derivatives.
pub fn mixed_partial<F>(f: &F, p: &[Complex64], a: &[u32], b: &[u32], cfg: &DiffConfig) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<f64> + ?Sized,
{
    if a.len() != p.len() || b.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: a.len().min(b.len()) });
    }
    if cfg.max_order > 4 {
        return Err(Error::Capability(format!("max_order {} exceeds 4", cfg.max_order)));
    }
    let order: u32 = a.iter().chain(b).sum();
    if order > 2 * cfg.max_order {
        return Err(Error::Capability(format!(
            "mixed partial of total order {order} exceeds 2 * max_order = {}",
            2 * cfg.max_order
        )));
    }
    if order == 0 {
        return Ok(f(p).map_err(stencil_error)?.into());
    }
    let terms = operator_terms(a, b);
    let stencils: Vec<Vec<(i32, f64)>> = (0..=order).map(stencil_1d).collect();
    let levels = if cfg.richardson { 4 } else { 1 };
    let h0 = mixed_step(order);
    let mut cache: HashMap<Vec<i32>, f64> = HashMap::new();
    let mut table = Vec::with_capacity(levels);
    for level in 0..levels {
        let scale = 1i32 << level;
        let h = h0 * f64::from(scale);
        let mut total = Complex64::new(0.0, 0.0);
        for (orders, coeff) in &terms {
            // Tensor product of the 1-D stencils over the active coordinates.
            let mut points: Vec<(Vec<i32>, f64)> = vec![(vec![0; orders.len()], 1.0)];
            for (u, &r) in orders.iter().enumerate() {
                if r == 0 {
                    continue;
                }
                points = points
                    .iter()
                    .flat_map(|(off, w)| {
                        stencils[r as usize].iter().map(move |&(o, sw)| {
                            let mut off = off.clone();
                            off[u] = o;
                            (off, w * sw)
                        })
                    })
                    .collect();
            }
            let mut sum = 0.0;
            for (off, w) in points {
                let key: Vec<i32> = off.iter().map(|o| o * scale).collect();
                let value = match cache.get(&key) {
                    Some(v) => *v,
                    None => {
                        let mut q = p.to_vec();
                        for (u, &o) in key.iter().enumerate() {
                            let delta = f64::from(o) * h0;
                            if u % 2 == 0 {
                                q[u / 2].re += delta;
                            } else {
                                q[u / 2].im += delta;
                            }
                        }
                        let v = f(&q).map_err(stencil_error)?;
                        cache.insert(key, v);
                        v
                    }
                };
                sum += w * value;
            }
            total += coeff * sum;
        }
        table.push(vec![total / h.powi(order as i32)]);
    }
    Ok(richardson(table)[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn norm_sqr(z: &[Complex64]) -> f64 {
        z.iter().map(Complex64::norm_sqr).sum()
    }

    fn disc_potential(z: &[Complex64]) -> Result<f64> {
        let m = 1.0 - norm_sqr(z);
        if m <= 0.0 {
            return Err(Error::boundary(m, "outside"));
        }
        Ok(-m.ln())
    }

    #[test]
    fn gradient_examples() {
        let cfg = DiffConfig::default();
        let g = wirtinger_gradient(&|z: &[Complex64]| Ok(norm_sqr(z)), &[c(0.3)], &cfg).unwrap();
        assert_abs_diff_eq!(g[0].re, 0.3, epsilon = 1e-10);
        assert_abs_diff_eq!(g[0].im, 0.0, epsilon = 1e-10);
        let g = wirtinger_gradient(&disc_potential, &[c(0.0)], &cfg).unwrap();
        assert!(g[0].norm() < 1e-10);
        let g = wirtinger_gradient(&disc_potential, &[c(0.5)], &cfg).unwrap();
        assert_abs_diff_eq!(g[0].re, 0.5 / 0.75, epsilon = 1e-9);
    }

    #[test]
    fn gradient_of_conjugate_direction() {
        // f = Re(z^2) = (z^2 + zbar^2)/2, df/dz = z.
        let z = Complex64::new(0.2, -0.7);
        let g = wirtinger_gradient(&|q: &[Complex64]| Ok((q[0] * q[0]).re), &[z], &DiffConfig::default()).unwrap();
        assert!((g[0] - z).norm() < 1e-9);
    }

    #[test]
    fn hessian_examples() {
        let cfg = DiffConfig::default();
        let h = wirtinger_hessian(&|z: &[Complex64]| Ok(norm_sqr(z)), &[c(0.1), c(-0.4)], &cfg).unwrap();
        assert!(h.max_abs_diff(&HermitianMatrix::identity(2)) < 1e-8);
        let h = wirtinger_hessian(&disc_potential, &[c(0.0), c(0.0)], &cfg).unwrap();
        assert!(h.max_abs_diff(&HermitianMatrix::identity(2)) < 1e-8);
        let h = wirtinger_hessian(&disc_potential, &[c(0.5)], &cfg).unwrap();
        assert_abs_diff_eq!(h.get(0, 0).re, 1.0 / 0.75f64.powi(2), epsilon = 1e-7);
    }

    #[test]
    fn hessian_picks_up_complex_off_diagonal() {
        // f = |z1 + i z2|^2 has Hessian [[1, -i], [i, 1]].
        let f = |z: &[Complex64]| Ok((z[0] + I * z[1]).norm_sqr());
        let h = wirtinger_hessian(&f, &[Complex64::new(0.3, 0.1), c(-0.2)], &DiffConfig::default()).unwrap();
        assert!((h.get(0, 1) - Complex64::new(0.0, -1.0)).norm() < 1e-8);
        assert!((h.get(1, 0) - Complex64::new(0.0, 1.0)).norm() < 1e-8);
    }

    #[test]
    fn step_must_respect_margin() {
        let cfg = DiffConfig::default().with_step(1e-2).with_margin(0.05);
        let err = wirtinger_gradient(&disc_potential, &[c(0.0)], &cfg).unwrap_err();
        assert!(matches!(err, Error::BoundaryViolation { .. }));
        let cfg = DiffConfig::default().with_margin(0.0);
        assert!(wirtinger_hessian(&disc_potential, &[c(0.99)], &cfg).is_err());
    }

    #[test]
    fn stencil_leaving_domain_is_reported() {
        let cfg = DiffConfig::default().with_step(1e-3);
        let err = wirtinger_gradient(&disc_potential, &[c(0.9995)], &cfg).unwrap_err();
        assert!(matches!(err, Error::BoundaryViolation { .. }));
    }

    #[test]
    fn one_dimensional_stencils() {
        assert_eq!(stencil_1d(1), vec![(-1, -0.5), (1, 0.5)]);
        assert_eq!(stencil_1d(2), vec![(-1, 1.0), (0, -2.0), (1, 1.0)]);
        assert_eq!(stencil_1d(3), vec![(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)]);
    }

    #[test]
    fn mixed_partial_examples() {
        let cfg = DiffConfig::default();
        let quartic = |z: &[Complex64]| Ok(z[0].norm_sqr().powi(2));
        let v = mixed_partial(&quartic, &[c(0.0)], &[2], &[2], &cfg).unwrap();
        assert!((v - c(4.0)).norm() < 1e-8, "{v}");

        let v = mixed_partial(&disc_potential, &[c(0.0)], &[2], &[2], &cfg).unwrap();
        assert!((v - c(2.0)).norm() < 1e-6, "{v}");

        let hyperbolic = |z: &[Complex64]| Ok(1.0 - (1.0 - z[0].norm_sqr()).powf(1.5));
        let v = mixed_partial(&hyperbolic, &[c(0.0)], &[2], &[2], &cfg).unwrap();
        assert!((v - c(-1.5)).norm() < 1e-6, "{v}");
    }

    #[test]
    fn mixed_partial_low_orders() {
        let cfg = DiffConfig::default();
        // f = |z|^2 |w|^2: d^2/dz dwbar = 0 at generic points, d^4 / dz dw dzbar dwbar = 1.
        let f = |z: &[Complex64]| Ok(z[0].norm_sqr() * z[1].norm_sqr());
        let v = mixed_partial(&f, &[c(0.0), c(0.0)], &[1, 1], &[1, 1], &cfg).unwrap();
        assert!((v - c(1.0)).norm() < 1e-8);
        let p = [Complex64::new(0.2, 0.1), c(0.3)];
        let v = mixed_partial(&f, &p, &[1, 0], &[0, 0], &cfg).unwrap();
        assert!((v - p[0].conj() * p[1].norm_sqr()).norm() < 1e-9);
    }

    #[test]
    fn mixed_partial_rejects_high_orders() {
        let cfg = DiffConfig { max_order: 2, ..DiffConfig::default() };
        let f = |z: &[Complex64]| Ok(z[0].norm_sqr());
        assert!(matches!(mixed_partial(&f, &[c(0.0)], &[3], &[2], &cfg), Err(Error::Capability(_))));
    }

    #[test]
    fn jacobian_of_holomorphic_map() {
        // F(z) = z^2 has dF/dz = 2z and dF/dzbar = 0.
        let z = Complex64::new(0.3, 0.4);
        let (dz, dzbar) =
            wirtinger_jacobian(&|q: &[Complex64]| Ok(vec![q[0] * q[0]]), &[z], &DiffConfig::default()).unwrap();
        assert!((dz[(0, 0)] - 2.0 * z).norm() < 1e-9);
        assert!(dzbar[(0, 0)].norm() < 1e-9);
    }
}

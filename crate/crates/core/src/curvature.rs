//! Metric, determinant, Ricci and scalar curvature of the canonical metric
//! `g = i dd^c (-log(phi - |z0|^2))`, in closed form and by finite differences.
//!
//! All functions here work at unit scale: `spec.scale` is ignored, the
//! curvature identities being stated for the unscaled potential.
//!
//! Write `M = phi - |z0|^2`, `psi = -log phi`, `n = d + d0`. In coordinates
//! ordered fiber first, the metric is
//!
//! ```text
//! g_{s tbar}       = (M delta_st + zbar0_s z0_t) / M^2
//! g_{s betabar}    = phi zbar0_s psi_betabar / M^2
//! g_{alpha betabar}= phi |z0|^2 psi_alpha psi_betabar / M^2 + phi g^D_{alpha betabar} / M
//! ```
//!
//! and for Einstein factors `Ric(g^{D_i}) = c_i g^{D_i}`:
//!
//! ```text
//! det g = M^{-(n+1)} prod_i phi_i^{d+1+c_i} det g^{D_i}(0)
//! Ric   = blockdiag(0, (d+1+c_i) g^{D_i}) - (n+1) g
//! s     = tau M / phi - (n+1) n,     tau = (d+1) d + sum_i c_i d_i
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{determinant, solve_hermitian, solve_hermitian_matrix, HermitianMatrix};
use crate::potentials::{base_hessian_closed, phi, EvaluationPoint, HartogsSpec};
use crate::wirtinger::{wirtinger_gradient, wirtinger_hessian, wirtinger_jacobian, DiffConfig};

/// Step of the outer finite difference in nested derivatives.
pub const NESTED_STEP: f64 = 1e-3;

/// Default tolerance of the Einstein / extremal / constant-scalar verdicts.
pub const DEFAULT_VERDICT_TOL: f64 = 1e-3;

fn interior_margin(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<f64> {
    let margin = spec.margin(p)?;
    if !(margin > 0.0) {
        return Err(Error::boundary(margin, "point outside the Hartogs domain"));
    }
    Ok(margin)
}

/// The metric `d^2(-log(phi - |z0|^2)) / dz_a dzbar_b` from closed base derivatives.
pub fn metric_matrix(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<HermitianMatrix> {
    interior_margin(spec, p)?;
    let d0 = spec.fiber_dim;
    let d = spec.base.dim();
    let phi_v = phi(&spec.base, &p.base)?;
    let m = phi_v - p.fiber_norm_sqr();
    let psi = spec.base.neg_log_phi_gradient(&p.base)?;
    let g_base = base_hessian_closed(&spec.base, &p.base)?;
    let z0_sqr = p.fiber_norm_sqr();
    let m2 = m * m;
    let g = DMatrix::from_fn(d0 + d, d0 + d, |a, b| match (a < d0, b < d0) {
        (true, true) => {
            let delta = if a == b { m } else { 0.0 };
            (p.fiber[a].conj() * p.fiber[b] + delta) / m2
        }
        (true, false) => p.fiber[a].conj() * psi[b - d0].conj() * (phi_v / m2),
        (false, true) => p.fiber[b] * psi[a - d0] * (phi_v / m2),
        (false, false) => {
            let (al, be) = (a - d0, b - d0);
            psi[al] * psi[be].conj() * (phi_v * z0_sqr / m2) + g_base.get(al, be) * (phi_v / m)
        }
    });
    Ok(HermitianMatrix::symmetrize(g))
}

/// `det g` from the closed product formula.
pub fn det_closed(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<f64> {
    interior_margin(spec, p)?;
    let d = spec.base.dim() as f64;
    let n = spec.dim() as f64;
    let cs = spec.base.einstein_constants()?;
    let consts = spec.base.determinant_constants()?;
    let phis = spec.base.factor_phis(&p.base)?;
    let m = spec.fiber_margin(p)?;
    let mut det = m.powf(-(n + 1.0));
    for ((phi_i, c_i), k_i) in phis.iter().zip(&cs).zip(&consts) {
        det *= phi_i.powf(d + 1.0 + c_i) * k_i;
    }
    Ok(det)
}

/// `det g` computed from [`metric_matrix`].
pub fn det_direct(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<f64> {
    Ok(determinant(&metric_matrix(spec, p)?).re)
}

/// `Ric = blockdiag(0_{d0}, lambda_i g^{D_i}) - (n+1) g` with `lambda_i = d + 1 + c_i`.
pub fn ricci_closed(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<HermitianMatrix> {
    let g = metric_matrix(spec, p)?;
    let cs = spec.base.einstein_constants()?;
    let d = spec.base.dim();
    let d0 = spec.fiber_dim;
    let n = spec.dim();
    let g_base = base_hessian_closed(&spec.base, &p.base)?;
    let mut lambda = DMatrix::<Complex64>::zeros(n, n);
    let mut offset = 0;
    for (f, c) in spec.base.factors().iter().zip(&cs) {
        let l = d as f64 + 1.0 + c;
        for a in offset..offset + f.dim() {
            for b in offset..offset + f.dim() {
                lambda[(d0 + a, d0 + b)] = g_base.get(a, b) * l;
            }
        }
        offset += f.dim();
    }
    Ok(HermitianMatrix::symmetrize(lambda).add_scaled(-(n as f64 + 1.0), &g))
}

/// `-dd^c log det g` by finite differences of the log-determinant of the
/// closed metric (step [`NESTED_STEP`]).
pub fn ricci_numeric(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<HermitianMatrix> {
    let margin = interior_margin(spec, p)?;
    let d0 = spec.fiber_dim;
    let log_det = |coords: &[Complex64]| -> Result<f64> {
        let q = EvaluationPoint::from_coords(d0, coords)?;
        Ok(det_direct(spec, &q)?.ln())
    };
    let cfg = DiffConfig::default().with_step(NESTED_STEP).with_margin(margin);
    Ok(wirtinger_hessian(&log_det, &p.coords(), &cfg)?.scaled(-1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarCurvature {
    /// `tr(g^{-1} Ric)` with the closed Ricci form.
    pub trace: f64,
    /// `tau M / phi - (n+1) n`.
    pub closed: f64,
    pub tau: f64,
}

fn scalar_closed_at(spec: &HartogsSpec, tau: f64, p: &EvaluationPoint) -> Result<f64> {
    let phi_v = phi(&spec.base, &p.base)?;
    let m = phi_v - p.fiber_norm_sqr();
    if !(m > 0.0) {
        return Err(Error::boundary(m, "point outside the Hartogs domain"));
    }
    let n = spec.dim() as f64;
    Ok(tau * m / phi_v - (n + 1.0) * n)
}

pub fn scalar_curvature(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<ScalarCurvature> {
    let g = metric_matrix(spec, p)?;
    let ric = ricci_closed(spec, p)?;
    let ginv_ric = solve_hermitian_matrix(&g, ric.as_matrix())?;
    let trace = ginv_ric.trace().re;
    let tau = spec.base.tau()?.value;
    Ok(ScalarCurvature { trace, closed: scalar_closed_at(spec, tau, p)?, tau })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalResidual {
    /// `max_{alpha, eta} |d X^alpha / dzbar_eta|` for the gradient field
    /// `X^alpha = g^{alpha betabar} ds/dzbar_beta`.
    pub residual: f64,
    /// `X^{01}` computed numerically.
    pub witness_numeric: Complex64,
    /// `-tau z0_1 M^2 / phi^2`.
    pub witness_closed: Complex64,
}

/// `X^alpha = sum_beta (g^{-1})_{beta alpha} ds/dzbar_beta = conj((g^{-1} ds/dz)_alpha)`.
fn gradient_field(spec: &HartogsSpec, tau: f64, coords: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = EvaluationPoint::from_coords(spec.fiber_dim, coords)?;
    let margin = interior_margin(spec, &p)?;
    let s = |c: &[Complex64]| -> Result<f64> {
        let q = EvaluationPoint::from_coords(spec.fiber_dim, c)?;
        scalar_closed_at(spec, tau, &q)
    };
    let cfg = DiffConfig::default().with_margin(margin);
    let ds = wirtinger_gradient(&s, coords, &cfg)?;
    let g = metric_matrix(spec, &p)?;
    Ok(solve_hermitian(&g, &ds)?.iter().map(Complex64::conj).collect())
}

/// Residual of the holomorphy condition on the gradient of the scalar curvature.
pub fn extremal_residual(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<ExtremalResidual> {
    let margin = interior_margin(spec, p)?;
    let tau = spec.base.tau()?.value;
    let field = |c: &[Complex64]| gradient_field(spec, tau, c);
    let coords = p.coords();
    let cfg = DiffConfig::default().with_step(NESTED_STEP).with_margin(margin);
    let (_, dzbar) = wirtinger_jacobian(&field, &coords, &cfg)?;
    let residual = dzbar.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let phi_v = phi(&spec.base, &p.base)?;
    let m = phi_v - p.fiber_norm_sqr();
    Ok(ExtremalResidual {
        residual,
        witness_numeric: field(&coords)?[0],
        witness_closed: p.fiber[0] * (-tau * m * m / (phi_v * phi_v)),
    })
}

/// Max-norm of `Ric + (n+1) g`, from the closed Ricci form.
pub fn einstein_residual(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<f64> {
    let n = spec.dim() as f64;
    let ric = ricci_closed(spec, p)?;
    let g = metric_matrix(spec, p)?;
    Ok(ric.add_scaled(n + 1.0, &g).max_abs_entry())
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub point: EvaluationPoint,
    pub metric: HermitianMatrix,
    pub det_closed: f64,
    pub det_direct: f64,
    pub ricci_closed: HermitianMatrix,
    pub ricci_numeric: Option<HermitianMatrix>,
    pub scalar_trace: f64,
    pub scalar_closed: f64,
    pub tau: f64,
    pub einstein_residual: f64,
    pub extremal_residual: f64,
    pub extremal_witness_numeric: Complex64,
    pub extremal_witness_closed: Complex64,
}

pub fn curvature_report(spec: &HartogsSpec, p: &EvaluationPoint, with_ricci_numeric: bool) -> Result<CurvatureReport> {
    let metric = metric_matrix(spec, p)?;
    let scalar = scalar_curvature(spec, p)?;
    let extremal = extremal_residual(spec, p)?;
    Ok(CurvatureReport {
        point: p.clone(),
        det_direct: determinant(&metric).re,
        metric,
        det_closed: det_closed(spec, p)?,
        ricci_closed: ricci_closed(spec, p)?,
        ricci_numeric: if with_ricci_numeric { Some(ricci_numeric(spec, p)?) } else { None },
        scalar_trace: scalar.trace,
        scalar_closed: scalar.closed,
        tau: scalar.tau,
        einstein_residual: einstein_residual(spec, p)?,
        extremal_residual: extremal.residual,
        extremal_witness_numeric: extremal.witness_numeric,
        extremal_witness_closed: extremal.witness_closed,
    })
}

/// Reports for a sample of points, computed in parallel, in input order.
pub fn sweep(spec: &HartogsSpec, sample: &[EvaluationPoint], with_ricci_numeric: bool) -> Result<Vec<CurvatureReport>> {
    sample.par_iter().map(|p| curvature_report(spec, p, with_ricci_numeric)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdicts {
    pub is_einstein: bool,
    pub is_extremal: bool,
    pub is_constant_scalar: bool,
    /// The three verdicts agree, as they must for Einstein bases.
    pub consistent: bool,
    pub max_einstein_residual: f64,
    pub max_extremal_residual: f64,
    pub scalar_variance: f64,
    pub tau: f64,
    pub tau_exact: Option<(i64, i64)>,
    pub tolerance: f64,
    pub sample_size: usize,
}

pub const MIN_VERDICT_SAMPLE: usize = 10;

pub fn verdicts(spec: &HartogsSpec, sample: &[EvaluationPoint], tol: f64) -> Result<Verdicts> {
    if sample.len() < MIN_VERDICT_SAMPLE {
        return Err(Error::InvalidInput(format!(
            "verdicts need at least {MIN_VERDICT_SAMPLE} sample points, got {}",
            sample.len()
        )));
    }
    let rows: Vec<(f64, f64, f64)> = sample
        .par_iter()
        .map(|p| -> Result<_> {
            Ok((einstein_residual(spec, p)?, extremal_residual(spec, p)?.residual, scalar_curvature(spec, p)?.trace))
        })
        .collect::<Result<_>>()?;
    let max_einstein_residual = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_extremal_residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let count = rows.len() as f64;
    let mean = rows.iter().map(|r| r.2).sum::<f64>() / count;
    let scalar_variance = rows.iter().map(|r| (r.2 - mean).powi(2)).sum::<f64>() / count;
    let tau = spec.base.tau()?;
    let is_einstein = max_einstein_residual <= tol;
    let is_extremal = max_extremal_residual <= tol;
    let is_constant_scalar = tau.is_zero() && scalar_variance <= tol;
    Ok(Verdicts {
        is_einstein,
        is_extremal,
        is_constant_scalar,
        consistent: is_einstein == is_extremal && is_extremal == is_constant_scalar,
        max_einstein_residual,
        max_extremal_residual,
        scalar_variance,
        tau: tau.value,
        tau_exact: tau.exact.map(|r| (*r.numer(), *r.denom())),
        tolerance: tol,
        sample_size: sample.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{BaseDomainSpec, Exponent};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn disc_spec(mu: i64, d0: usize) -> HartogsSpec {
        HartogsSpec::unit(BaseDomainSpec::disc(Exponent::integer(mu)).unwrap(), d0).unwrap()
    }

    #[test]
    fn metric_examples() {
        let spec = disc_spec(1, 1);
        let g = metric_matrix(&spec, &spec.origin()).unwrap();
        assert!(g.max_abs_diff(&HermitianMatrix::identity(2)) < 1e-15);
        let p = spec.point(vec![c(0.5)], vec![c(0.0)]).unwrap();
        let g = metric_matrix(&spec, &p).unwrap();
        assert!((g.get(0, 0).re - 16.0 / 9.0).abs() < 1e-14);
        assert!(g.get(0, 1).norm() < 1e-15);
        assert!((g.get(1, 1).re - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fiber_block_at_zero_fiber_is_inverse_phi() {
        let spec = disc_spec(2, 2);
        let p = spec.point(vec![c(0.0), c(0.0)], vec![Complex64::new(0.3, 0.2)]).unwrap();
        let g = metric_matrix(&spec, &p).unwrap();
        let phi_v = phi(&spec.base, &p.base).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                let expected = if s == t { 1.0 / phi_v } else { 0.0 };
                assert!((g.get(s, t) - c(expected)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn det_examples() {
        let spec = disc_spec(1, 1);
        let p = spec.point(vec![c(0.5)], vec![c(0.0)]).unwrap();
        assert!((det_closed(&spec, &p).unwrap() - 0.75f64.powi(-3)).abs() < 1e-12);
        assert!((det_direct(&spec, &p).unwrap() - 0.75f64.powi(-3)).abs() < 1e-12);

        let fock = HartogsSpec::unit(BaseDomainSpec::fock(1, Exponent::integer(1)).unwrap(), 1).unwrap();
        let p = fock.point(vec![c(0.0)], vec![c(1.0)]).unwrap();
        let e = (-1.0f64).exp();
        assert!((det_closed(&fock, &p).unwrap() - e.powi(-3) * e.powi(2)).abs() < 1e-10);
        assert!((det_direct(&fock, &p).unwrap() - e.powi(-1)).abs() < 1e-10);
    }

    #[test]
    fn einstein_case_ricci_is_minus_three_g() {
        let spec = disc_spec(1, 1);
        let p = spec.point(vec![Complex64::new(0.3, -0.2)], vec![c(0.4)]).unwrap();
        let g = metric_matrix(&spec, &p).unwrap();
        let ric = ricci_closed(&spec, &p).unwrap();
        assert!(ric.max_abs_diff(&g.scaled(-3.0)) < 1e-12);
        assert!(einstein_residual(&spec, &p).unwrap() < 1e-12);
    }

    #[test]
    fn ricci_numeric_matches_closed() {
        for (spec, p) in [
            (disc_spec(1, 1), disc_spec(1, 1).origin()),
            (disc_spec(2, 1), disc_spec(2, 1).point(vec![c(0.2)], vec![c(0.3)]).unwrap()),
        ] {
            let num = ricci_numeric(&spec, &p).unwrap();
            let closed = ricci_closed(&spec, &p).unwrap();
            assert!(num.max_abs_diff(&closed) < 1e-3, "{}", num.max_abs_diff(&closed));
        }
    }

    #[test]
    fn scalar_examples() {
        let spec = disc_spec(1, 1);
        let p = spec.point(vec![c(0.3)], vec![c(-0.5)]).unwrap();
        let s = scalar_curvature(&spec, &p).unwrap();
        assert!((s.closed + 6.0).abs() < 1e-12 && (s.trace + 6.0).abs() < 1e-9);

        let spec = disc_spec(2, 1);
        let s = scalar_curvature(&spec, &spec.point(vec![c(0.0)], vec![c(0.4)]).unwrap()).unwrap();
        assert!((s.closed + 5.0).abs() < 1e-12 && (s.trace + 5.0).abs() < 1e-9);
        let z = c(0.4);
        let phi_v = (1.0 - 0.16f64).powi(2);
        let p = spec.point(vec![c((phi_v / 2.0).sqrt())], vec![z]).unwrap();
        let s = scalar_curvature(&spec, &p).unwrap();
        assert!((s.closed + 5.5).abs() < 1e-12 && (s.trace + 5.5).abs() < 1e-9);
    }

    #[test]
    fn extremal_witness_vanishes_on_zero_fiber() {
        let spec = disc_spec(2, 1);
        let r = extremal_residual(&spec, &spec.point(vec![c(0.0)], vec![c(0.3)]).unwrap()).unwrap();
        assert_eq!(r.witness_closed, c(0.0));
        assert!(r.witness_numeric.norm() < 1e-8);
    }

    #[test]
    fn extremal_residual_separates_cases() {
        let spec = disc_spec(1, 1);
        let p = spec.point(vec![c(0.4)], vec![c(0.3)]).unwrap();
        assert!(extremal_residual(&spec, &p).unwrap().residual <= 1e-4);

        let fock = HartogsSpec::unit(BaseDomainSpec::fock(1, Exponent::integer(1)).unwrap(), 1).unwrap();
        let p = fock.point(vec![c(0.4)], vec![c(0.3)]).unwrap();
        let r = extremal_residual(&fock, &p).unwrap();
        assert!(r.residual > 1e-3);
        assert!((r.witness_numeric - r.witness_closed).norm() < 1e-3);
    }

    #[test]
    fn verdict_requires_sample() {
        let spec = disc_spec(1, 1);
        assert!(verdicts(&spec, &[spec.origin()], 1e-3).is_err());
    }
}

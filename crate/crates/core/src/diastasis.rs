//! Power-series coefficients of the diastasis at the origin and the
//! resolvability tests built on them.
//!
//! At the origin the diastasis of `h g` is `D = -h log(phi - |z0|^2)` (with
//! `phi(0) = 1`). Three series are examined, one per target space form:
//!
//! | form       | series          | target  |
//! |------------|-----------------|---------|
//! | Euclidean  | `D`             | `C^N`   |
//! | Projective | `e^{D/h'} - 1`  | `CP^N`  |
//! | Hyperbolic | `1 - e^{-D}`    | `CH^N`  |
//!
//! (for the projective and hyperbolic forms the metric scale is folded into
//! the exponent: `e^D - 1 = (phi - t)^{-h} - 1`, `1 - e^{-D} = 1 - (phi - t)^h`
//! with `t = |z0|^2`). Coefficients are mixed partials
//! `d^{|m_j|+|m_k|} / dz^{m_j} dzbar^{m_k}` at the origin, i.e. Taylor
//! coefficients times `m_j! m_k!`.
//!
//! For radial bases the coefficient matrix is diagonal and splits into blocks
//! indexed by the total degree `i` and the fiber degree `sigma`; the block
//! rows are the pairs `(nu, alpha)` with `|nu| = sigma` over the fiber and
//! `|alpha| = i - sigma` over the base. Expanding in `t / phi` gives
//!
//! ```text
//! Euclidean   sigma >= 1: h (sigma-1)! nu! D_alpha(phi^{-sigma})
//!             sigma  = 0: h D_alpha(-log phi)
//! Projective            : (h)_sigma nu! D_alpha(phi^{-(h+sigma)})
//! Hyperbolic            : -(-h)_sigma nu! D_alpha(phi^{-(sigma-h)})
//! ```
//!
//! where `D_alpha` is the diagonal derivative coefficient at the origin.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{psd_check, HermitianMatrix, DEFAULT_PSD_RELATIVE_TOL};
use crate::multi_index::{enumerate_indices, indices_of_degree, MultiIndex};
use crate::potentials::{hartogs_potential, BaseDomainSpec, EvaluationPoint, FactorGeometry, HartogsSpec};
use crate::special::{factorial, rising_factorial, SignedLog};
use crate::wirtinger::{mixed_partial, DiffConfig};

pub const DEFAULT_TRUNCATION: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesForm {
    Euclidean,
    Projective,
    Hyperbolic,
}

impl SeriesForm {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesForm::Euclidean => "euclidean",
            SeriesForm::Projective => "projective",
            SeriesForm::Hyperbolic => "hyperbolic",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum RadialFactor {
    Ball { dim: usize, mu: f64 },
    Flat { dim: usize, mu: f64 },
}

impl RadialFactor {
    fn dim(self) -> usize {
        match self {
            RadialFactor::Ball { dim, .. } | RadialFactor::Flat { dim, .. } => dim,
        }
    }
}

fn radial_factors(base: &BaseDomainSpec) -> Result<Vec<RadialFactor>> {
    base.geometries()
        .map(|(geom, mu, _)| match geom.reduced() {
            FactorGeometry::Ball { dim } => Ok(RadialFactor::Ball { dim, mu }),
            FactorGeometry::Flat { dim } => Ok(RadialFactor::Flat { dim, mu }),
            FactorGeometry::TypeI { .. } => Err(Error::Capability("rank >= 2 Cartan series unsupported".into())),
        })
        .collect()
}

/// Splits a base index into per-factor pieces.
fn split<'a>(factors: &'a [RadialFactor], alpha: &'a MultiIndex) -> impl Iterator<Item = (RadialFactor, MultiIndex)> + 'a {
    let mut offset = 0;
    factors.iter().map(move |&f| {
        let piece = alpha.slice(offset..offset + f.dim());
        offset += f.dim();
        (f, piece)
    })
}

fn multi_factorial(m: &MultiIndex) -> SignedLog {
    m.entries().iter().map(|&k| factorial(k)).product()
}

/// `D_alpha(phi^{-s})`: the diagonal coefficient of `phi^{-s}` at the origin.
fn power_coefficient(factors: &[RadialFactor], s: f64, alpha: &MultiIndex) -> SignedLog {
    split(factors, alpha)
        .map(|(f, a)| {
            let k = a.degree();
            match f {
                // (1 - |z|^2)^{-mu s} = sum_k (mu s)_k / k! |z|^{2k}
                RadialFactor::Ball { mu, .. } => rising_factorial(mu * s, k) * multi_factorial(&a),
                // exp(s mu |z|^2) = sum_k (s mu)^k / k! |z|^{2k}
                RadialFactor::Flat { mu, .. } => SignedLog::from_f64(s * mu).powi(k) * multi_factorial(&a),
            }
        })
        .product()
}

/// `D_alpha(-log phi)`; `-log phi` is a sum over factors, so mixed-factor
/// indices vanish.
fn neg_log_coefficient(factors: &[RadialFactor], alpha: &MultiIndex) -> SignedLog {
    let mut active = split(factors, alpha).filter(|(_, a)| !a.is_zero());
    let Some((f, a)) = active.next() else { return SignedLog::ZERO };
    if active.next().is_some() {
        return SignedLog::ZERO;
    }
    let k = a.degree();
    match f {
        // -mu log(1 - |z|^2) = mu sum_{k >= 1} |z|^{2k} / k
        RadialFactor::Ball { mu, .. } => SignedLog::from_f64(mu) * factorial(k - 1) * multi_factorial(&a),
        RadialFactor::Flat { mu, .. } if k == 1 => SignedLog::from_f64(mu),
        RadialFactor::Flat { .. } => SignedLog::ZERO,
    }
}

/// Mixed partials `d^{2|alpha|} phi^{-s} / dz^alpha dzbar^beta` at the origin
/// for all `|alpha|, |beta| <= max_degree`. Radial bases give a diagonal
/// table; only diagonal pairs are stored.
pub fn base_power_coefficients(
    base: &BaseDomainSpec,
    s: f64,
    max_degree: u32,
) -> Result<BTreeMap<(MultiIndex, MultiIndex), f64>> {
    let factors = radial_factors(base)?;
    Ok(enumerate_indices(base.dim(), max_degree)
        .into_iter()
        .map(|a| {
            let v = power_coefficient(&factors, s, &a).value();
            ((a.clone(), a), v)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientBlock {
    pub form: SeriesForm,
    pub total_degree: u32,
    pub fiber_degree: u32,
    pub fiber_indices: Vec<MultiIndex>,
    pub base_indices: Vec<MultiIndex>,
    /// Rows and columns are `(nu, alpha)` pairs, fiber index major.
    pub matrix: HermitianMatrix,
}

impl CoefficientBlock {
    /// Row labels `(nu; alpha)` as joined multi-indices.
    pub fn row_indices(&self) -> Vec<MultiIndex> {
        self.fiber_indices.iter().flat_map(|nu| self.base_indices.iter().map(move |a| nu.join(a))).collect()
    }
}

fn block_entry(form: SeriesForm, factors: &[RadialFactor], h: f64, nu: &MultiIndex, alpha: &MultiIndex) -> f64 {
    let sigma = nu.degree();
    let nu_fact = multi_factorial(nu);
    let v = match form {
        SeriesForm::Euclidean if sigma == 0 => SignedLog::from_f64(h) * neg_log_coefficient(factors, alpha),
        SeriesForm::Euclidean => {
            SignedLog::from_f64(h) * factorial(sigma - 1) * nu_fact * power_coefficient(factors, f64::from(sigma), alpha)
        }
        SeriesForm::Projective => {
            rising_factorial(h, sigma) * nu_fact * power_coefficient(factors, h + f64::from(sigma), alpha)
        }
        SeriesForm::Hyperbolic => {
            SignedLog::from_f64(-1.0)
                * rising_factorial(-h, sigma)
                * nu_fact
                * power_coefficient(factors, f64::from(sigma) - h, alpha)
        }
    };
    v.value()
}

/// The `(i, sigma)` diagonal block of the coefficient matrix of `form` at scale `h`.
pub fn block(form: SeriesForm, spec: &HartogsSpec, i: u32, sigma: u32, h: f64) -> Result<CoefficientBlock> {
    if sigma > i {
        return Err(Error::InvalidInput(format!("fiber degree {sigma} exceeds total degree {i}")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("scale h must be positive, got {h}")));
    }
    let factors = radial_factors(&spec.base)?;
    let fiber_indices = indices_of_degree(spec.fiber_dim, sigma);
    let base_indices = indices_of_degree(spec.base.dim(), i - sigma);
    let diag: Vec<f64> = fiber_indices
        .iter()
        .flat_map(|nu| base_indices.iter().map(|a| block_entry(form, &factors, h, nu, a)).collect::<Vec<_>>())
        .collect();
    Ok(CoefficientBlock {
        form,
        total_degree: i,
        fiber_degree: sigma,
        fiber_indices,
        base_indices,
        matrix: HermitianMatrix::from_real_diagonal(&diag),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockFailure {
    pub i: u32,
    pub sigma: u32,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvabilityVerdict {
    pub form: SeriesForm,
    pub h: f64,
    pub truncation_degree: u32,
    pub all_psd: bool,
    /// Sum of numeric ranks of all blocks up to the truncation.
    pub rank_lower_bound: usize,
    /// Numeric rank contributed by each total degree `1..=truncation`.
    pub rank_by_degree: Vec<usize>,
    pub first_failure: Option<BlockFailure>,
    pub relative_tolerance: f64,
}

/// Blocks in the order in which they sit along the diagonal of the full
/// coefficient matrix: total degree ascending, and within a degree the
/// fiber degree descending (fiber-heavy indices come first).
fn block_order(truncation: u32) -> Vec<(u32, u32)> {
    (1..=truncation).flat_map(|i| (0..=i).rev().map(move |s| (i, s))).collect()
}

/// PSD test of every block with total degree `1..=truncation_degree`.
/// Each block is judged with tolerance `tol_rel * (1 + max |entry|)`;
/// `first_failure` is the earliest failing block in diagonal order.
pub fn resolvability(
    form: SeriesForm,
    spec: &HartogsSpec,
    h: f64,
    truncation_degree: u32,
    tol_rel: f64,
) -> Result<ResolvabilityVerdict> {
    if truncation_degree < 2 {
        return Err(Error::InvalidInput(format!("truncation degree must be at least 2, got {truncation_degree}")));
    }
    let order = block_order(truncation_degree);
    let results: Vec<(u32, u32, bool, f64, usize)> = order
        .par_iter()
        .map(|&(i, s)| {
            let b = block(form, spec, i, s, h)?;
            let v = psd_check(&b.matrix, tol_rel * (1.0 + b.matrix.max_abs_entry()))?;
            Ok((i, s, v.is_psd, v.min_eigenvalue, v.numeric_rank))
        })
        .collect::<Result<_>>()?;
    let mut rank_by_degree = vec![0; truncation_degree as usize];
    let mut first_failure = None;
    for &(i, sigma, is_psd, min_eigenvalue, rank) in &results {
        rank_by_degree[i as usize - 1] += rank;
        if !is_psd && first_failure.is_none() {
            first_failure = Some(BlockFailure { i, sigma, min_eigenvalue });
        }
    }
    Ok(ResolvabilityVerdict {
        form,
        h,
        truncation_degree,
        all_psd: first_failure.is_none(),
        rank_lower_bound: rank_by_degree.iter().sum(),
        rank_by_degree,
        first_failure,
        relative_tolerance: tol_rel,
    })
}

pub fn resolvability_default(form: SeriesForm, spec: &HartogsSpec, h: f64, truncation: u32) -> Result<ResolvabilityVerdict> {
    resolvability(form, spec, h, truncation, DEFAULT_PSD_RELATIVE_TOL)
}

/// `D(0, p) = -h log(phi - |z0|^2) + h log phi(0)`, at scale `spec.scale`.
pub fn diastasis_value(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<f64> {
    Ok(hartogs_potential(spec, p)? - hartogs_potential(spec, &spec.origin())?)
}

/// Partial sum of the Euclidean series over all blocks of total degree
/// `<= truncation_degree`, at scale `spec.scale`.
pub fn series_partial_sum(spec: &HartogsSpec, p: &EvaluationPoint, truncation_degree: u32) -> Result<f64> {
    spec.margin(p).and_then(|m| {
        if m > 0.0 {
            Ok(())
        } else {
            Err(Error::BoundaryViolation { margin: m, context: "series point outside the domain".into() })
        }
    })?;
    let coords = p.coords();
    let mut total = 0.0;
    for i in 1..=truncation_degree {
        for sigma in 0..=i {
            let b = block(SeriesForm::Euclidean, spec, i, sigma, spec.scale)?;
            total += series_terms(&b.matrix, &b.row_indices(), &coords).re;
        }
    }
    Ok(total)
}

/// `sum_{j,k} M_jk / (m_j! m_k!) eta^{m_j} conj(eta)^{m_k}`.
pub fn series_terms(m: &HermitianMatrix, rows: &[MultiIndex], eta: &[Complex64]) -> Complex64 {
    let monomial = |idx: &MultiIndex| -> Complex64 {
        idx.entries().iter().zip(eta).map(|(&k, z)| z.powu(k)).product::<Complex64>() / idx.factorial()
    };
    let mono: Vec<Complex64> = rows.iter().map(monomial).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (j, mj) in mono.iter().enumerate() {
        for (k, mk) in mono.iter().enumerate() {
            let c = m.get(j, k);
            if c != Complex64::new(0.0, 0.0) {
                total += c * mj * mk.conj();
            }
        }
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditPair {
    pub m_j: MultiIndex,
    pub m_k: MultiIndex,
    pub value: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCoefficientAudit {
    pub max_degree: u32,
    pub pairs_checked: usize,
    /// Largest `|a_{j,k}|` over pairs whose fiber or base degrees differ.
    pub max_violation: f64,
    pub worst_pair: Option<AuditPair>,
    /// `a_{j,j}` for `m_j = (1, 0, ..., 0)` by finite differences.
    pub control_numeric: f64,
    pub control_expected: f64,
}

/// Finite-difference audit of the vanishing pattern of the Euclidean series:
/// `a_{j,k} = 0` whenever `m_j` and `m_k` have different fiber degree or
/// different base degree. Pairs with `|m_j| + |m_k| <= max_degree` are checked.
pub fn cross_coefficient_audit(spec: &HartogsSpec, max_degree: u32) -> Result<CrossCoefficientAudit> {
    if max_degree > 4 {
        return Err(Error::Capability(format!("audit degree {max_degree} exceeds the finite-difference limit 4")));
    }
    let d0 = spec.fiber_dim;
    let n = spec.dim();
    let f = |coords: &[Complex64]| -> Result<f64> {
        let p = EvaluationPoint::from_coords(d0, coords)?;
        hartogs_potential(spec, &p)
    };
    let origin = spec.origin().coords();
    let cfg = DiffConfig::default();
    let fiber_degree = |m: &MultiIndex| m.entries()[..d0].iter().sum::<u32>();
    let indices: Vec<MultiIndex> = enumerate_indices(n, max_degree).into_iter().filter(|m| !m.is_zero()).collect();
    let mut pairs = Vec::new();
    for mj in &indices {
        for mk in &indices {
            let violates = fiber_degree(mj) != fiber_degree(mk) || mj.degree() - fiber_degree(mj) != mk.degree() - fiber_degree(mk);
            if violates && mj.degree() + mk.degree() <= max_degree {
                pairs.push((mj.clone(), mk.clone()));
            }
        }
    }
    let values: Vec<AuditPair> = pairs
        .into_par_iter()
        .map(|(mj, mk)| {
            let value = mixed_partial(&f, &origin, mj.entries(), mk.entries(), &cfg)?;
            Ok(AuditPair { m_j: mj, m_k: mk, value })
        })
        .collect::<Result<_>>()?;
    let worst = values.iter().max_by(|a, b| a.value.norm().total_cmp(&b.value.norm())).cloned();
    let e1 = MultiIndex::unit(n, 0);
    let control_numeric = mixed_partial(&f, &origin, e1.entries(), e1.entries(), &cfg)?.re;
    let control_expected = block(SeriesForm::Euclidean, spec, 1, 1, spec.scale)?.matrix.get(0, 0).re;
    Ok(CrossCoefficientAudit {
        max_degree,
        pairs_checked: values.len(),
        max_violation: worst.as_ref().map_or(0.0, |w| w.value.norm()),
        worst_pair: worst,
        control_numeric,
        control_expected,
    })
}

/// Dense coefficient matrix of `form` over all indices of total degree
/// `1..=max_degree`, assembled from the blocks in their diagonal order.
pub fn coefficient_matrix(form: SeriesForm, spec: &HartogsSpec, h: f64, max_degree: u32) -> Result<(Vec<MultiIndex>, HermitianMatrix)> {
    let mut rows = Vec::new();
    let mut diag = Vec::new();
    for (i, s) in block_order(max_degree) {
        let b = block(form, spec, i, s, h)?;
        rows.extend(b.row_indices());
        diag.extend((0..b.matrix.dim()).map(|k| b.matrix.get(k, k)));
    }
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |a, b| if a == b { diag[a] } else { Complex64::new(0.0, 0.0) });
    Ok((rows, HermitianMatrix::symmetrize(m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Exponent;

    fn disc(mu: i64, d0: usize) -> HartogsSpec {
        HartogsSpec::unit(BaseDomainSpec::disc(Exponent::integer(mu)).unwrap(), d0).unwrap()
    }

    fn fock(d0: usize) -> HartogsSpec {
        HartogsSpec::unit(BaseDomainSpec::fock(1, Exponent::integer(1)).unwrap(), d0).unwrap()
    }

    fn entry(b: &CoefficientBlock) -> f64 {
        b.matrix.get(0, 0).re
    }

    #[test]
    fn power_coefficient_examples() {
        let disc_base = BaseDomainSpec::disc(Exponent::integer(1)).unwrap();
        let t = base_power_coefficients(&disc_base, 1.0, 3).unwrap();
        let two = MultiIndex::new(vec![2]);
        assert!((t[&(two.clone(), two)] - 4.0).abs() < 1e-14);
        let fock_base = BaseDomainSpec::fock(1, Exponent::integer(1)).unwrap();
        let t = base_power_coefficients(&fock_base, 2.0, 2).unwrap();
        let one = MultiIndex::new(vec![1]);
        assert!((t[&(one.clone(), one)] - 2.0).abs() < 1e-14);
        let t = base_power_coefficients(&disc_base, 0.0, 4).unwrap();
        for ((a, _), v) in t {
            assert_eq!(v, if a.is_zero() { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn block_examples() {
        let spec = disc(1, 1);
        assert!((entry(&block(SeriesForm::Euclidean, &spec, 2, 2, 1.0).unwrap()) - 2.0).abs() < 1e-14);
        assert_eq!(entry(&block(SeriesForm::Hyperbolic, &spec, 2, 2, 1.0).unwrap()), 0.0);
        assert!((entry(&block(SeriesForm::Hyperbolic, &spec, 2, 2, 1.5).unwrap()) + 1.5).abs() < 1e-14);
        assert!(block(SeriesForm::Euclidean, &spec, 2, 3, 1.0).is_err());
    }

    #[test]
    fn block_dimensions() {
        let spec = HartogsSpec::unit(BaseDomainSpec::ball(2, Exponent::integer(1)).unwrap(), 2).unwrap();
        let b = block(SeriesForm::Projective, &spec, 3, 1, 0.7).unwrap();
        assert_eq!(b.fiber_indices.len(), 2);
        assert_eq!(b.base_indices.len(), 3);
        assert_eq!(b.matrix.dim(), 6);
    }

    #[test]
    fn rank_two_cartan_is_unsupported() {
        let spec = HartogsSpec::unit(BaseDomainSpec::cartan_type_i(2, 2, Exponent::integer(1)).unwrap(), 1).unwrap();
        let err = block(SeriesForm::Euclidean, &spec, 2, 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::Capability(ref m) if m.contains("rank >= 2")));
        // A single-row type I domain is a ball.
        let row = HartogsSpec::unit(BaseDomainSpec::cartan_type_i(1, 2, Exponent::integer(1)).unwrap(), 1).unwrap();
        assert!(block(SeriesForm::Euclidean, &row, 2, 1, 1.0).is_ok());
    }

    #[test]
    fn hyperbolic_sign_phenomena() {
        let spec = disc(1, 1);
        let v = resolvability_default(SeriesForm::Hyperbolic, &spec, 0.5, 10).unwrap();
        assert!(v.all_psd);
        let v = resolvability_default(SeriesForm::Hyperbolic, &spec, 1.0, 10).unwrap();
        assert!(v.all_psd);
        assert_eq!(v.rank_lower_bound, 2);
        let v = resolvability_default(SeriesForm::Hyperbolic, &spec, 1.5, 10).unwrap();
        assert!(!v.all_psd);
        let f = v.first_failure.unwrap();
        assert_eq!((f.i, f.sigma), (2, 2));
        assert!((f.min_eigenvalue + 1.5).abs() < 1e-10);
    }

    #[test]
    fn fock_hyperbolic_fails_at_degree_two() {
        for (h, sigma) in [(0.5, 0), (1.0, 0), (2.0, 2)] {
            let v = resolvability_default(SeriesForm::Hyperbolic, &fock(1), h, 6).unwrap();
            let f = v.first_failure.unwrap();
            assert_eq!((f.i, f.sigma), (2, sigma), "h = {h}");
        }
    }

    #[test]
    fn euclidean_rank_grows() {
        let spec = disc(1, 1);
        let ranks: Vec<usize> = [4, 6, 8, 10]
            .iter()
            .map(|&t| resolvability_default(SeriesForm::Euclidean, &spec, 1.0, t).unwrap().rank_lower_bound)
            .collect();
        assert_eq!(ranks, vec![14, 27, 44, 65]);
    }

    #[test]
    fn series_matches_value() {
        let spec = disc(1, 1);
        let c = |x: f64| Complex64::new(x, 0.0);
        let p = spec.point(vec![c(0.1)], vec![c(0.1)]).unwrap();
        let v = diastasis_value(&spec, &p).unwrap();
        assert!((v + 0.98f64.ln()).abs() < 1e-15);
        assert!((series_partial_sum(&spec, &p, 12).unwrap() - v).abs() < 1e-8);
        assert_eq!(diastasis_value(&spec, &spec.origin()).unwrap(), 0.0);
    }

    #[test]
    fn audit_on_disc() {
        let a = cross_coefficient_audit(&disc(1, 1), 4).unwrap();
        assert!(a.pairs_checked >= 12);
        assert!(a.max_violation <= 1e-5, "{a:?}");
        assert!((a.control_numeric - 1.0).abs() < 1e-5);
        assert_eq!(a.control_expected, 1.0);
    }
}

//! The canned regression suite: ten checks covering the determinant, Ricci
//! and scalar identities, the Einstein/extremal equivalence, the three
//! resolvability tests, the vanishing pattern of the diastasis series, series
//! convergence, and the verdict table.
//!
//! Output is deterministic for a fixed seed; timings are returned next to the
//! report, never inside it.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::curvature::{
    det_closed, det_direct, extremal_residual, metric_matrix, ricci_closed, ricci_numeric, scalar_curvature, verdicts,
    DEFAULT_VERDICT_TOL,
};
use crate::diastasis::{
    base_power_coefficients, block, cross_coefficient_audit, diastasis_value, resolvability_default, series_partial_sum,
    SeriesForm,
};
use crate::error::Result;
use crate::immersion::{verdict_table, Answer, TableRow};
use crate::multi_index::MultiIndex;
use crate::potentials::{phi, BaseDomainSpec, EvaluationPoint, Exponent, HartogsSpec};

pub const FIXTURE_SEED: u64 = 42;

/// Interior margin required of sampled points.
pub const SAMPLE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    /// Failed sub-checks, empty on success.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixturesReport {
    pub schema: &'static str,
    pub seed: u64,
    pub all_passed: bool,
    pub criteria: Vec<CriterionResult>,
    /// Rows A, B, C over the targets `C^n, C^inf, CP^n, CP^inf, CH^n, CH^inf`.
    pub table: Vec<TableRow>,
}

struct Recorder {
    measurements: Vec<Measurement>,
    failures: Vec<String>,
}

impl Recorder {
    fn new() -> Self {
        Self { measurements: Vec::new(), failures: Vec::new() }
    }

    /// Records `value <= tol`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        let name = name.into();
        if !(value <= tol) {
            self.failures.push(format!("{name}: {value:.3e} > {tol:.1e}"));
        }
        self.measurements.push(Measurement { name, value, tolerance: Some(tol) });
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        let name = name.into();
        if !ok {
            self.failures.push(name.clone());
        }
        self.measurements.push(Measurement { name, value: if ok { 1.0 } else { 0.0 }, tolerance: None });
    }

    fn value(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.push(Measurement { name: name.into(), value, tolerance: None });
    }

    fn finish(self, id: u32, name: &str) -> CriterionResult {
        CriterionResult {
            id,
            name: name.to_string(),
            passed: self.failures.is_empty(),
            measurements: self.measurements,
            failures: self.failures,
        }
    }
}

fn exp(v: i64) -> Exponent {
    Exponent::integer(v)
}

/// Bases used by the curvature identity checks, with labels.
pub fn identity_bases() -> Vec<(String, BaseDomainSpec)> {
    let r = |b: crate::Result<BaseDomainSpec>| b.expect("catalog base");
    vec![
        ("disc mu=1/2".into(), r(BaseDomainSpec::disc(Exponent::ratio(1, 2)))),
        ("disc mu=1".into(), r(BaseDomainSpec::disc(exp(1)))),
        ("disc mu=2".into(), r(BaseDomainSpec::disc(exp(2)))),
        ("ball d=2 mu=1".into(), r(BaseDomainSpec::ball(2, exp(1)))),
        ("polydisc mu=(1,2)".into(), r(BaseDomainSpec::polydisc(&[1, 1], &[exp(1), exp(2)]))),
        ("fock d=1 mu=1".into(), r(BaseDomainSpec::fock(1, exp(1)))),
    ]
}

fn identity_specs() -> Vec<(String, HartogsSpec)> {
    identity_bases()
        .into_iter()
        .flat_map(|(label, base)| {
            (1..=2).map(move |d0| (format!("{label} d0={d0}"), HartogsSpec::unit(base.clone(), d0).expect("spec")))
        })
        .collect()
}

fn disc(mu: i64, d0: usize) -> HartogsSpec {
    HartogsSpec::unit(BaseDomainSpec::disc(exp(mu)).expect("disc"), d0).expect("spec")
}

fn fock1() -> HartogsSpec {
    HartogsSpec::unit(BaseDomainSpec::fock(1, exp(1)).expect("fock"), 1).expect("spec")
}

fn per_spec_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(1000 * k as u64)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// 1. `det g` closed form vs direct determinant.
pub fn determinant_identity(seed: u64) -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    for (k, (label, spec)) in identity_specs().iter().enumerate() {
        let sample = spec.sample_interior(100, per_spec_seed(seed, k), SAMPLE_MARGIN)?;
        let errs: Vec<f64> = sample
            .par_iter()
            .map(|p| Ok(relative(det_closed(spec, p)?, det_direct(spec, p)?)))
            .collect::<Result<_>>()?;
        rec.at_most(format!("{label}: max relative error"), errs.iter().copied().fold(0.0, f64::max), 1e-8);
    }
    Ok(rec.finish(1, "determinant identity"))
}

/// 2. Closed Ricci form vs `-dd^c log det g`.
pub fn ricci_identity(seed: u64) -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    for (k, (label, spec)) in identity_specs().iter().enumerate() {
        let sample = spec.sample_interior(20, per_spec_seed(seed, k), SAMPLE_MARGIN)?;
        let errs: Vec<f64> = sample
            .par_iter()
            .map(|p| Ok(ricci_numeric(spec, p)?.max_abs_diff(&ricci_closed(spec, p)?)))
            .collect::<Result<_>>()?;
        rec.at_most(format!("{label}: max |Ric_closed - Ric_numeric|"), errs.iter().copied().fold(0.0, f64::max), 1e-3);
    }
    let spec = disc(1, 1);
    let sample = spec.sample_interior(20, seed, SAMPLE_MARGIN)?;
    let errs: Vec<f64> = sample
        .par_iter()
        .map(|p| Ok(ricci_numeric(&spec, p)?.max_abs_diff(&metric_matrix(&spec, p)?.scaled(-3.0))))
        .collect::<Result<_>>()?;
    rec.at_most("disc mu=1 d0=1: max |Ric_numeric + 3 g|", errs.iter().copied().fold(0.0, f64::max), 1e-3);
    Ok(rec.finish(2, "Ricci identity"))
}

/// Points over a few base positions with `|z0|^2 = fraction * phi(z)`.
fn fiber_fraction_points(spec: &HartogsSpec, fraction: f64) -> Result<Vec<EvaluationPoint>> {
    [0.0, 0.3, -0.5, 0.6]
        .iter()
        .map(|&x| {
            let z = vec![Complex64::new(x, 0.2 * x)];
            let r = (fraction * phi(&spec.base, &z)?).sqrt();
            spec.point(vec![Complex64::from_polar(r, 0.7)], z)
        })
        .collect()
}

/// 3. Scalar curvature: trace of the closed Ricci form vs the closed formula.
pub fn scalar_identity(seed: u64) -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    for (k, (label, spec)) in identity_specs().iter().enumerate() {
        let sample = spec.sample_interior(50, per_spec_seed(seed, k), SAMPLE_MARGIN)?;
        let mut worst: f64 = 0.0;
        for p in &sample {
            let s = scalar_curvature(spec, p)?;
            worst = worst.max((s.trace - s.closed).abs());
        }
        rec.at_most(format!("{label}: max |s_trace - s_closed|"), worst, 1e-6);
    }
    let spec = disc(1, 1);
    let mut worst: f64 = 0.0;
    for p in spec.sample_interior(50, seed, SAMPLE_MARGIN)? {
        let s = scalar_curvature(&spec, &p)?;
        worst = worst.max((s.trace + 6.0).abs()).max((s.closed + 6.0).abs());
    }
    rec.at_most("disc mu=1: max |s + 6|", worst, 1e-6);
    let spec = disc(2, 1);
    for (fraction, expected) in [(0.0, -5.0), (0.5, -5.5)] {
        let mut worst: f64 = 0.0;
        for p in fiber_fraction_points(&spec, fraction)? {
            let s = scalar_curvature(&spec, &p)?;
            worst = worst.max((s.trace - expected).abs()).max((s.closed - expected).abs());
        }
        rec.at_most(format!("disc mu=2, |z0|^2 = {fraction} phi: max |s - ({expected})|"), worst, 1e-6);
    }
    Ok(rec.finish(3, "scalar curvature identity"))
}

/// 4. Einstein, extremal and constant scalar curvature agree.
pub fn equivalence_chain(seed: u64) -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    let cases = [("disc mu=1", disc(1, 1), true), ("disc mu=2", disc(2, 1), false), ("fock mu=1", fock1(), false)];
    for (label, spec, expected) in &cases {
        let sample = spec.sample_interior(20, seed, SAMPLE_MARGIN)?;
        let v = verdicts(spec, &sample, DEFAULT_VERDICT_TOL)?;
        rec.check(format!("{label}: einstein = {expected}"), v.is_einstein == *expected);
        rec.check(format!("{label}: extremal = {expected}"), v.is_extremal == *expected);
        rec.check(format!("{label}: constant scalar = {expected}"), v.is_constant_scalar == *expected);
        rec.value(format!("{label}: max extremal residual"), v.max_extremal_residual);
        if !expected {
            let p = spec.point(vec![Complex64::new(0.4, 0.0)], vec![Complex64::new(0.3, 0.0)])?;
            let r = extremal_residual(spec, &p)?;
            rec.check(format!("{label}: extremal residual > 1e-3 at z0 = 0.4"), r.residual > 1e-3);
            rec.value(format!("{label}: extremal residual at z0 = 0.4"), r.residual);
            rec.at_most(
                format!("{label}: |witness_closed - witness_numeric|"),
                (r.witness_closed - r.witness_numeric).norm(),
                1e-3,
            );
        }
    }
    Ok(rec.finish(4, "Einstein / extremal / constant scalar equivalence"))
}

/// 5. Hyperbolic series on the disc base: PSD for `h <= 1`, sign failure above.
pub fn hyperbolic_signs() -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    let spec = disc(1, 1);
    let v = resolvability_default(SeriesForm::Hyperbolic, &spec, 0.5, 10)?;
    rec.check("h=0.5: all blocks PSD", v.all_psd);
    let v = resolvability_default(SeriesForm::Hyperbolic, &spec, 1.0, 10)?;
    rec.check("h=1: all blocks PSD", v.all_psd);
    rec.check("h=1: total rank 2", v.rank_lower_bound == 2);
    let v = resolvability_default(SeriesForm::Hyperbolic, &spec, 1.5, 10)?;
    match v.first_failure {
        Some(f) => {
            rec.check("h=1.5: first failure at (i=2, sigma=2)", (f.i, f.sigma) == (2, 2));
            rec.at_most("h=1.5: |min eigenvalue + 1.5|", (f.min_eigenvalue + 1.5).abs(), 1e-10);
        }
        None => rec.check("h=1.5: a failing block exists", false),
    }
    Ok(rec.finish(5, "hyperbolic series sign pattern"))
}

/// Criterion 6. Projective series: PSD, and each block factors as a Gamma
/// ratio times the coefficient block of `phi^{-(h+sigma)}`.
pub fn projective_factorization() -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    let spec = disc(1, 1);
    for h in [0.3, 1.0, 2.7] {
        let v = resolvability_default(SeriesForm::Projective, &spec, h, 10)?;
        rec.check(format!("h={h}: all blocks PSD"), v.all_psd);
        let mut worst: f64 = 0.0;
        for i in 1..=10u32 {
            for sigma in 0..=i {
                let b = block(SeriesForm::Projective, &spec, i, sigma, h)?;
                let s = h + f64::from(sigma);
                let ratio = gamma(s) * gamma(f64::from(sigma) + 1.0) / gamma(h);
                let table = base_power_coefficients(&spec.base, s, i - sigma)?;
                let alpha = MultiIndex::new(vec![i - sigma]);
                let expected = ratio * table[&(alpha.clone(), alpha)];
                worst = worst.max(relative(b.matrix.get(0, 0).re, expected));
            }
        }
        rec.at_most(format!("h={h}: max relative deviation from the Gamma factorization"), worst, 1e-10);
    }
    Ok(rec.finish(6, "projective series factorization"))
}

/// 7. Euclidean series: PSD on disc and Fock bases, rank growing with truncation.
pub fn euclidean_rank_growth() -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    for (label, spec) in [("disc", disc(1, 1)), ("fock", fock1())] {
        let v = resolvability_default(SeriesForm::Euclidean, &spec, 1.0, 10)?;
        rec.check(format!("{label}: all blocks PSD"), v.all_psd);
    }
    let spec = disc(1, 1);
    let ranks: Vec<usize> = [4, 6, 8, 10]
        .iter()
        .map(|&t| resolvability_default(SeriesForm::Euclidean, &spec, 1.0, t).map(|v| v.rank_lower_bound))
        .collect::<Result<_>>()?;
    for (t, r) in [4, 6, 8, 10].iter().zip(&ranks) {
        rec.value(format!("disc: rank at truncation {t}"), *r as f64);
    }
    rec.check("disc: rank strictly increasing over truncations 4, 6, 8, 10", ranks.windows(2).all(|w| w[0] < w[1]));
    Ok(rec.finish(7, "Euclidean series rank growth"))
}

/// 8. Finite-difference audit of the vanishing cross coefficients.
pub fn block_structure_audit() -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    let a = cross_coefficient_audit(&disc(1, 1), 4)?;
    rec.check("at least 12 off-structure pairs checked", a.pairs_checked >= 12);
    rec.value("pairs checked", a.pairs_checked as f64);
    rec.at_most("max |off-structure coefficient|", a.max_violation, 1e-5);
    rec.at_most("|control - analytic|", (a.control_numeric - a.control_expected).abs(), 1e-5);
    Ok(rec.finish(8, "block-structure audit"))
}

/// 9. Partial sums of the Euclidean series converge to the diastasis.
pub fn series_convergence(seed: u64) -> Result<CriterionResult> {
    let mut rec = Recorder::new();
    let spec = disc(1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        // Uniform direction in C^2, radius up to 0.1.
        let r = 0.1 * rng.random::<f64>();
        let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let t = std::f64::consts::FRAC_PI_2 * a;
        let fiber = Complex64::from_polar(r * t.cos(), std::f64::consts::TAU * b);
        let base = Complex64::from_polar(r * t.sin(), std::f64::consts::TAU * c);
        let p = spec.point(vec![fiber], vec![base])?;
        worst = worst.max((series_partial_sum(&spec, &p, 12)? - diastasis_value(&spec, &p)?).abs());
    }
    rec.at_most("max |partial sum (degree 12) - diastasis|", worst, 1e-8);
    Ok(rec.finish(9, "series convergence"))
}

/// Expected rows of the verdict table.
pub fn expected_table() -> Vec<Vec<Answer>> {
    use Answer::{Exists as Y, NotExists as N, Unknown as U};
    vec![vec![N, Y, N, Y, N, U], vec![N, N, N, Y, N, N], vec![N, Y, N, Y, N, Y]]
}

/// 10. The verdict table.
pub fn table_reproduction() -> Result<(CriterionResult, Vec<TableRow>)> {
    let mut rec = Recorder::new();
    let table = verdict_table(0.5)?;
    for (row, expected) in table.iter().zip(expected_table()) {
        rec.check(format!("row {} matches", row.label), row.answers == expected);
    }
    Ok((rec.finish(10, "verdict table"), table))
}

/// Runs every criterion in order; returns the report and per-criterion wall times.
pub fn run_fixtures(seed: u64) -> Result<(FixturesReport, Vec<(u32, Duration)>)> {
    let mut criteria = Vec::new();
    let mut timings = Vec::new();
    let mut timed = |id: u32, f: &dyn Fn() -> Result<CriterionResult>| -> Result<()> {
        let start = Instant::now();
        let r = f()?;
        timings.push((id, start.elapsed()));
        criteria.push(r);
        Ok(())
    };
    timed(1, &|| determinant_identity(seed))?;
    timed(2, &|| ricci_identity(seed))?;
    timed(3, &|| scalar_identity(seed))?;
    timed(4, &|| equivalence_chain(seed))?;
    timed(5, &hyperbolic_signs)?;
    timed(6, &projective_factorization)?;
    timed(7, &euclidean_rank_growth)?;
    timed(8, &block_structure_audit)?;
    timed(9, &|| series_convergence(seed))?;
    let start = Instant::now();
    let (table_result, table) = table_reproduction()?;
    timings.push((10, start.elapsed()));
    criteria.push(table_result);
    let all_passed = criteria.iter().all(|c| c.passed);
    Ok((FixturesReport { schema: "1", seed, all_passed, criteria, table }, timings))
}

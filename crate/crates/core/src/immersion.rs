//! Existence of Kähler immersions of `(Omega, h g)` into the complex space
//! forms `C^N`, `CP^N`, `CH^N` (finite or infinite `N`), decided from facts
//! about the base domain and cross-checked against the diastasis series.
//!
//! Decision rules, for the Hartogs domain over a base `D`:
//!
//! * `C^inf` exists iff `(D, g^D)` immerses into some `C^N`.
//! * `CP^inf` at scale `h` exists iff `(D, (h + sigma) g^D)` immerses into
//!   `CP^inf` for every integer `sigma >= 0`.
//! * `CH^inf` at scale `h` exists iff `0 < h <= 1` and `(D, h g^D)` immerses
//!   into `CH^inf`.
//! * Finite targets: the fiber part of each series has infinitely many
//!   nonzero terms, so the rank is unbounded. The single exception is the
//!   hyperbolic series at `h = 1`, whose fiber part terminates; that case is
//!   reported as unknown when the base itself has a finite-rank hyperbolic
//!   immersion.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diastasis::{resolvability_default, BlockFailure, SeriesForm};
use crate::error::{Error, Result};
use crate::potentials::{BaseDomainSpec, FactorGeometry, HartogsSpec};

/// Scales closer than this to a threshold count as equal to it.
const SCALE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "true" => Ok(Verdict::Yes),
            "no" | "false" => Ok(Verdict::No),
            "unknown" => Ok(Verdict::Unknown),
            other => Err(Error::InvalidInput(format!("expected yes/no/unknown, got `{other}`"))),
        }
    }
}

/// How a base fact depends on the metric scale `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "bound")]
pub enum ScaleRule {
    Always,
    Never,
    /// Yes for `h <= bound`, no above it.
    UpTo(f64),
    /// Yes only at `h = value`.
    Exactly(f64),
    Unknown,
}

impl ScaleRule {
    pub fn at(self, h: f64) -> Verdict {
        match self {
            ScaleRule::Always => Verdict::Yes,
            ScaleRule::Never => Verdict::No,
            ScaleRule::UpTo(b) if h <= b + SCALE_EPS => Verdict::Yes,
            ScaleRule::UpTo(_) => Verdict::No,
            ScaleRule::Exactly(v) if (h - v).abs() <= SCALE_EPS => Verdict::Yes,
            ScaleRule::Exactly(_) => Verdict::No,
            ScaleRule::Unknown => Verdict::Unknown,
        }
    }

    fn admits_some_scale(self) -> bool {
        matches!(self, ScaleRule::Always | ScaleRule::UpTo(_) | ScaleRule::Exactly(_))
    }
}

impl FromStr for ScaleRule {
    type Err = Error;
    /// `always`, `never`, `unknown`, `yes`, `no`, `upto:<h>` or `exactly:<h>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bound = |v: &str| -> Result<f64> {
            v.trim().parse().map_err(|_| Error::InvalidInput(format!("bad scale bound `{v}`")))
        };
        match s.as_str() {
            "always" | "yes" => Ok(ScaleRule::Always),
            "never" | "no" => Ok(ScaleRule::Never),
            "unknown" => Ok(ScaleRule::Unknown),
            _ => match s.split_once(':') {
                Some(("upto", v)) => Ok(ScaleRule::UpTo(bound(v)?)),
                Some(("exactly", v)) => Ok(ScaleRule::Exactly(bound(v)?)),
                _ => Err(Error::InvalidInput(format!("cannot parse scale rule `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Catalog,
    UserSupplied,
}

/// What is known about immersions of the base `(D, g^D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseImmersionFacts {
    /// `(D, g^D) -> C^N` for some `N <= inf`.
    pub euclidean: Verdict,
    /// `(D, (h + sigma) g^D) -> CP^inf` for all `sigma >= 0`, as a function of `h`.
    pub projective_all_shifts: ScaleRule,
    /// `(D, h g^D) -> CH^inf`.
    pub hyperbolic: ScaleRule,
    /// `(D, h g^D) -> CH^N` with `N` finite.
    pub hyperbolic_finite: ScaleRule,
    pub provenance: Provenance,
}

impl BaseImmersionFacts {
    pub fn unknown(provenance: Provenance) -> Self {
        Self {
            euclidean: Verdict::Unknown,
            projective_all_shifts: ScaleRule::Unknown,
            hyperbolic: ScaleRule::Unknown,
            hyperbolic_finite: ScaleRule::Unknown,
            provenance,
        }
    }

    /// Completes the facts with the implications
    /// hyperbolic for some `h` => Euclidean => projective for every `h`,
    /// and not Euclidean => never hyperbolic.
    pub fn closure(mut self) -> Self {
        if self.euclidean == Verdict::Unknown && self.hyperbolic.admits_some_scale() {
            self.euclidean = Verdict::Yes;
        }
        match self.euclidean {
            Verdict::Yes => self.projective_all_shifts = ScaleRule::Always,
            Verdict::No => {
                self.hyperbolic = ScaleRule::Never;
                self.hyperbolic_finite = ScaleRule::Never;
            }
            Verdict::Unknown => {}
        }
        self
    }
}

/// Facts for catalog bases.
///
/// Balls `(B^d, mu g_hyp)`: Euclidean yes, projective for every scale,
/// hyperbolic exactly for `h mu <= 1` and of finite rank at `h mu = 1`.
/// Products of two or more factors and flat bases: never hyperbolic (the
/// `1 - phi^h` series has the negative coefficient `-h^2 mu_1 mu_2` on
/// `|z_1 z_2|^2`, resp. `-(h mu)^2` on `|z|^4`). Type I domains of rank two
/// or more are left unknown; supply facts for them.
pub fn catalog_facts(base: &BaseDomainSpec) -> BaseImmersionFacts {
    let geometries: Vec<(FactorGeometry, f64)> = base.geometries().map(|(g, mu, _)| (g.reduced(), mu)).collect();
    let known = |hyperbolic, hyperbolic_finite| BaseImmersionFacts {
        euclidean: Verdict::Yes,
        projective_all_shifts: ScaleRule::Always,
        hyperbolic,
        hyperbolic_finite,
        provenance: Provenance::Catalog,
    };
    match geometries.as_slice() {
        [(FactorGeometry::Ball { .. }, mu)] => known(ScaleRule::UpTo(1.0 / mu), ScaleRule::Exactly(1.0 / mu)),
        [(FactorGeometry::TypeI { .. }, _)] => BaseImmersionFacts::unknown(Provenance::Catalog),
        gs if gs.iter().any(|(g, _)| matches!(g, FactorGeometry::TypeI { .. })) => {
            BaseImmersionFacts::unknown(Provenance::Catalog)
        }
        _ => known(ScaleRule::Never, ScaleRule::Never),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Target {
    #[serde(rename = "C_finite")]
    CFinite,
    #[serde(rename = "C_infinite")]
    CInfinite,
    #[serde(rename = "CP_finite")]
    CpFinite,
    #[serde(rename = "CP_infinite")]
    CpInfinite,
    #[serde(rename = "CH_finite")]
    ChFinite,
    #[serde(rename = "CH_infinite")]
    ChInfinite,
}

impl Target {
    /// Table column order.
    pub const ALL: [Target; 6] =
        [Target::CFinite, Target::CInfinite, Target::CpFinite, Target::CpInfinite, Target::ChFinite, Target::ChInfinite];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::CFinite => "C_finite",
            Target::CInfinite => "C_infinite",
            Target::CpFinite => "CP_finite",
            Target::CpInfinite => "CP_infinite",
            Target::ChFinite => "CH_finite",
            Target::ChInfinite => "CH_infinite",
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Target::CFinite | Target::CpFinite | Target::ChFinite)
    }

    /// The series whose resolvability corresponds to this target.
    pub fn series_form(self) -> SeriesForm {
        match self {
            Target::CFinite | Target::CInfinite => SeriesForm::Euclidean,
            Target::CpFinite | Target::CpInfinite => SeriesForm::Projective,
            Target::ChFinite | Target::ChInfinite => SeriesForm::Hyperbolic,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;
    /// `C`, `CP`, `CH`, optionally suffixed `_finite` / `_infinite`
    /// (also `n` / `inf`); a bare space form means the infinite target.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (form, dim) = match t.split_once(['_', 'x', '^']) {
            Some((f, d)) => (f, d),
            None => (t, "infinite"),
        };
        let finite = match dim.to_ascii_lowercase().as_str() {
            "finite" | "n" => true,
            "infinite" | "inf" | "infty" => false,
            _ => return Err(Error::InvalidInput(format!("unknown target `{s}`"))),
        };
        match (form.to_ascii_uppercase().as_str(), finite) {
            ("C", true) => Ok(Target::CFinite),
            ("C", false) => Ok(Target::CInfinite),
            ("CP", true) => Ok(Target::CpFinite),
            ("CP", false) => Ok(Target::CpInfinite),
            ("CH", true) => Ok(Target::ChFinite),
            ("CH", false) => Ok(Target::ChInfinite),
            _ => Err(Error::InvalidInput(format!("unknown target `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Exists,
    NotExists,
    Unknown,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Exists => "exists",
            Answer::NotExists => "not_exists",
            Answer::Unknown => "unknown",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Answer::Exists => "✓",
            Answer::NotExists => "×",
            Answer::Unknown => "−",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImmersionVerdict {
    pub target: Target,
    pub h: f64,
    pub answer: Answer,
    pub rule: String,
    pub provenance: Provenance,
}

fn from_verdict(v: Verdict, yes: &str, no: &str, missing: &str) -> (Answer, String) {
    match v {
        Verdict::Yes => (Answer::Exists, yes.to_string()),
        Verdict::No => (Answer::NotExists, no.to_string()),
        Verdict::Unknown => (Answer::Unknown, format!("missing base fact: {missing}")),
    }
}

/// Decides whether `(Omega, h g)` immerses into `target`, given base facts.
pub fn decide(target: Target, h: f64, facts: &BaseImmersionFacts) -> Result<ImmersionVerdict> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("scale h must be positive, got {h}")));
    }
    let facts = facts.closure();
    let (answer, rule) = match target {
        Target::CInfinite => from_verdict(
            facts.euclidean,
            "C^inf: base admits a Euclidean immersion",
            "C^inf: base admits no Euclidean immersion",
            "euclidean",
        ),
        Target::CpInfinite => from_verdict(
            facts.projective_all_shifts.at(h),
            "CP^inf: every shifted base metric (h+sigma) g^D immerses into CP^inf",
            "CP^inf: some shifted base metric (h+sigma) g^D does not immerse into CP^inf",
            "projective_all_shifts",
        ),
        Target::ChInfinite if h > 1.0 + SCALE_EPS => {
            (Answer::NotExists, "CH^inf: h > 1, the fiber coefficient of |z0|^4 is negative".to_string())
        }
        Target::ChInfinite => from_verdict(
            facts.hyperbolic.at(h),
            "CH^inf: h <= 1 and the base metric h g^D immerses into CH^inf",
            "CH^inf: the base metric h g^D does not immerse into CH^inf",
            "hyperbolic",
        ),
        Target::CFinite => (Answer::NotExists, "C^n: fiber terms of the diastasis have unbounded rank".to_string()),
        Target::CpFinite => (Answer::NotExists, "CP^n: fiber terms of e^D - 1 have unbounded rank".to_string()),
        Target::ChFinite if (h - 1.0).abs() <= SCALE_EPS && facts.hyperbolic_finite.at(1.0) != Verdict::No => (
            Answer::Unknown,
            "CH^n: at h = 1 the fiber series of 1 - e^-D terminates; rank bounded only if the base immersion is of finite rank"
                .to_string(),
        ),
        Target::ChFinite if h > 1.0 + SCALE_EPS => {
            (Answer::NotExists, "CH^n: h > 1, the fiber coefficient of |z0|^4 is negative".to_string())
        }
        Target::ChFinite => (Answer::NotExists, "CH^n: fiber terms of 1 - e^-D have unbounded rank".to_string()),
    };
    Ok(ImmersionVerdict { target, h, answer, rule, provenance: facts.provenance })
}

/// [`decide`] with the catalog facts of `spec.base`.
pub fn decide_catalog(spec: &HartogsSpec, target: Target, h: f64) -> Result<ImmersionVerdict> {
    decide(target, h, &catalog_facts(&spec.base))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub verdict: ImmersionVerdict,
    pub form: SeriesForm,
    pub truncation: u32,
    pub all_psd: bool,
    pub rank_lower_bound: usize,
    pub rank_by_degree: Vec<usize>,
    pub first_failure: Option<BlockFailure>,
    pub agreement: bool,
}

/// Compares [`decide`] with the truncated resolvability test of the matching
/// series. A contradiction is an error naming the offending block.
pub fn cross_check(
    spec: &HartogsSpec,
    target: Target,
    h: f64,
    truncation: u32,
    facts: &BaseImmersionFacts,
) -> Result<CrossCheck> {
    let verdict = decide(target, h, facts)?;
    let form = target.series_form();
    let r = resolvability_default(form, spec, h, truncation)?;
    let still_growing = r.rank_by_degree.last().is_some_and(|&k| k > 0);
    match (verdict.answer, target.is_finite()) {
        (Answer::Exists, _) => {
            if let Some(f) = r.first_failure {
                return Err(Error::Contradiction {
                    i: f.i as usize,
                    sigma: f.sigma as usize,
                    detail: format!(
                        "{target} decided to exist but the {} block has eigenvalue {:.3e}",
                        form.as_str(),
                        f.min_eigenvalue
                    ),
                });
            }
        }
        (Answer::NotExists, false) => {
            if r.first_failure.is_none() {
                return Err(Error::Contradiction {
                    i: truncation as usize,
                    sigma: 0,
                    detail: format!("{target} decided not to exist but every {} block up to degree {truncation} is PSD", form.as_str()),
                });
            }
        }
        (Answer::NotExists, true) => {
            if r.first_failure.is_none() && !still_growing {
                return Err(Error::Contradiction {
                    i: truncation as usize,
                    sigma: 0,
                    detail: format!("{target} decided not to exist but the series rank stopped growing"),
                });
            }
        }
        (Answer::Unknown, _) => {}
    }
    Ok(CrossCheck {
        verdict,
        form,
        truncation,
        all_psd: r.all_psd,
        rank_lower_bound: r.rank_lower_bound,
        rank_by_degree: r.rank_by_degree,
        first_failure: r.first_failure,
        agreement: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub answers: Vec<Answer>,
}

/// Verdict table over the six targets for three abstract bases, at scale `h`:
/// A, base with a Euclidean immersion (nothing known about CH);
/// B, base with no Euclidean immersion but projective for every scale;
/// C, base with a hyperbolic immersion for every `h <= 1`.
pub fn verdict_table(h: f64) -> Result<Vec<TableRow>> {
    let user = BaseImmersionFacts::unknown(Provenance::UserSupplied);
    let rows = [
        ("A", BaseImmersionFacts { euclidean: Verdict::Yes, ..user }),
        ("B", BaseImmersionFacts { euclidean: Verdict::No, projective_all_shifts: ScaleRule::Always, ..user }),
        ("C", BaseImmersionFacts { hyperbolic: ScaleRule::UpTo(1.0), ..user }),
    ];
    rows.iter()
        .map(|(label, facts)| {
            let answers = Target::ALL.iter().map(|&t| decide(t, h, facts).map(|v| v.answer)).collect::<Result<_>>()?;
            Ok(TableRow { label: label.to_string(), answers })
        })
        .collect()
}

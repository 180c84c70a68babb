//! Domain configuration files.
//!
//! Line-based `key = value`, `#` starts a comment. Recognised keys:
//!
//! ```text
//! base.kind              ball | polydisc | cartan_type_I | fock
//! base.dims              comma list (ball/fock: one entry; polydisc: one per factor)
//! base.shape             m, n            (cartan_type_I)
//! base.mu                comma list; one value is applied to every factor; p/q allowed
//! base.genus             comma list of per-factor overrides
//! base.einstein_constant comma list of per-factor overrides
//! fiber.dim              positive integer (default 1)
//! scale.h                positive real (default 1)
//! facts.euclidean        yes | no | unknown
//! facts.projective       always | never | unknown | upto:<h> | exactly:<h>
//! facts.hyperbolic       same grammar
//! facts.hyperbolic_finite same grammar
//! ```
//!
//! Any `facts.*` key marks the base facts as user supplied; unspecified facts
//! keep their catalog values.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::immersion::{catalog_facts, BaseImmersionFacts, Provenance, ScaleRule, Verdict};
use crate::potentials::{BaseDomainSpec, BaseKind, Exponent, HartogsSpec};

const KEYS: &[&str] = &[
    "base.kind",
    "base.dims",
    "base.shape",
    "base.mu",
    "base.genus",
    "base.einstein_constant",
    "fiber.dim",
    "scale.h",
    "facts.euclidean",
    "facts.projective",
    "facts.hyperbolic",
    "facts.hyperbolic_finite",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub spec: HartogsSpec,
    pub facts: BaseImmersionFacts,
}

impl DomainConfig {
    pub fn from_spec(spec: HartogsSpec) -> Self {
        let facts = catalog_facts(&spec.base);
        Self { spec, facts }
    }
}

impl FromStr for DomainConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_config(s)
    }
}

/// Value with the line it came from.
struct Entry {
    line: usize,
    value: String,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn list<T: FromStr>(e: &Entry, what: &str) -> Result<Vec<T>> {
    e.value
        .split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| config_err(e.line, format!("cannot parse {what} `{}`", v.trim()))))
        .collect()
}

fn single<T: FromStr>(e: &Entry, what: &str) -> Result<T> {
    e.value.trim().parse::<T>().map_err(|_| config_err(e.line, format!("cannot parse {what} `{}`", e.value)))
}

/// Re-tags library errors raised while building the domain with a line number.
fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => config_err(line, other.to_string()),
    })
}

pub fn parse_config(text: &str) -> Result<DomainConfig> {
    let mut entries: BTreeMap<&str, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| config_err(line, "expected `key = value`"))?;
        let key = key.trim();
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| config_err(line, format!("unknown key `{key}`")))?;
        if entries.contains_key(known) {
            return Err(config_err(line, format!("duplicate key `{key}`")));
        }
        entries.insert(known, Entry { line, value: value.trim().to_string() });
    }

    let kind_entry = entries.get("base.kind").ok_or_else(|| config_err(0, "missing key `base.kind`"))?;
    let kind: BaseKind = at_line(kind_entry.line, kind_entry.value.parse())?;
    let mu_line = entries.get("base.mu").map_or(kind_entry.line, |e| e.line);
    let mus: Vec<Exponent> = match entries.get("base.mu") {
        Some(e) => list(e, "exponent")?,
        None => vec![Exponent::integer(1)],
    };
    if let Some(bad) = mus.iter().find(|mu| !(mu.value() > 0.0)) {
        return Err(config_err(mu_line, format!("exponent mu must be positive, got {bad}")));
    }
    let dims: Option<Vec<usize>> = entries.get("base.dims").map(|e| list(e, "dimension")).transpose()?;
    let dims_line = entries.get("base.dims").map_or(kind_entry.line, |e| e.line);
    let one_mu = |n_factors: usize| -> Result<Exponent> {
        match mus.as_slice() {
            [mu] => Ok(*mu),
            _ => Err(config_err(mu_line, format!("expected 1 exponent for {} factor(s), got {}", n_factors, mus.len()))),
        }
    };
    let one_dim = || -> Result<usize> {
        match dims.as_deref() {
            None => Ok(1),
            Some([d]) => Ok(*d),
            Some(ds) => Err(config_err(dims_line, format!("expected one dimension, got {}", ds.len()))),
        }
    };

    let mut base = match kind {
        BaseKind::Ball => at_line(kind_entry.line, BaseDomainSpec::ball(one_dim()?, one_mu(1)?))?,
        BaseKind::Fock => at_line(kind_entry.line, BaseDomainSpec::fock(one_dim()?, one_mu(1)?))?,
        BaseKind::Polydisc => {
            let dims = dims.clone().unwrap_or_else(|| vec![1; mus.len().max(1)]);
            let mus = if mus.len() == 1 { vec![mus[0]; dims.len()] } else { mus.clone() };
            if mus.len() != dims.len() {
                return Err(config_err(mu_line, format!("{} exponents for {} factors", mus.len(), dims.len())));
            }
            at_line(dims_line, BaseDomainSpec::polydisc(&dims, &mus))?
        }
        BaseKind::CartanTypeI => {
            let e = entries
                .get("base.shape")
                .ok_or_else(|| config_err(kind_entry.line, "cartan_type_I needs `base.shape = m, n`"))?;
            let shape: Vec<usize> = list(e, "shape entry")?;
            let [m, n] = shape[..] else {
                return Err(config_err(e.line, "shape must have two entries"));
            };
            at_line(e.line, BaseDomainSpec::cartan_type_i(m, n, one_mu(1)?))?
        }
    };
    if kind != BaseKind::CartanTypeI {
        if let Some(e) = entries.get("base.shape") {
            return Err(config_err(e.line, "base.shape applies only to cartan_type_I"));
        }
    }
    let factor_count = base.factors().len();
    if let Some(e) = entries.get("base.genus") {
        let genus: Vec<f64> = list(e, "genus")?;
        if genus.len() != factor_count {
            return Err(config_err(e.line, format!("{} genus values for {factor_count} factors", genus.len())));
        }
        for (i, g) in genus.into_iter().enumerate() {
            base = at_line(e.line, base.with_genus(i, g))?;
        }
    }
    if let Some(e) = entries.get("base.einstein_constant") {
        let cs: Vec<f64> = list(e, "Einstein constant")?;
        if cs.len() != factor_count {
            return Err(config_err(e.line, format!("{} Einstein constants for {factor_count} factors", cs.len())));
        }
        for (i, c) in cs.into_iter().enumerate() {
            base = at_line(e.line, base.with_einstein_constant(i, Some(c)))?;
        }
    }

    let fiber_dim = entries.get("fiber.dim").map(|e| single::<usize>(e, "fiber dimension")).transpose()?.unwrap_or(1);
    let h = entries.get("scale.h").map(|e| single::<f64>(e, "scale")).transpose()?.unwrap_or(1.0);
    let spec_line = entries.get("fiber.dim").or(entries.get("scale.h")).map_or(kind_entry.line, |e| e.line);
    let spec = at_line(spec_line, HartogsSpec::new(base, fiber_dim, h))?;

    let mut facts = catalog_facts(&spec.base);
    let mut user = false;
    if let Some(e) = entries.get("facts.euclidean") {
        facts.euclidean = single::<Verdict>(e, "verdict")?;
        user = true;
    }
    for (key, slot) in [
        ("facts.projective", &mut facts.projective_all_shifts),
        ("facts.hyperbolic", &mut facts.hyperbolic),
        ("facts.hyperbolic_finite", &mut facts.hyperbolic_finite),
    ] {
        if let Some(e) = entries.get(key) {
            *slot = single::<ScaleRule>(e, "scale rule")?;
            user = true;
        }
    }
    if user {
        facts.provenance = Provenance::UserSupplied;
    }
    Ok(DomainConfig { spec, facts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ball_config() {
        let cfg = parse_config("# ball\nbase.kind = ball\nbase.dims = 2\nbase.mu = 3/2  # rational\nfiber.dim = 2\n").unwrap();
        assert_eq!(cfg.spec.base.dim(), 2);
        assert_eq!(cfg.spec.fiber_dim, 2);
        assert_eq!(cfg.spec.base.mus(), vec![1.5]);
        assert_eq!(cfg.facts.provenance, Provenance::Catalog);
    }

    #[test]
    fn polydisc_defaults_to_discs() {
        let cfg = parse_config("base.kind = polydisc\nbase.mu = 1, 2\n").unwrap();
        assert_eq!(cfg.spec.base.dims(), vec![1, 1]);
        assert_eq!(cfg.spec.base.einstein_constants().unwrap(), vec![-2.0, -1.0]);
        let cfg = parse_config("base.kind = polydisc\nbase.dims = 2, 1\nbase.mu = 1\n").unwrap();
        assert_eq!(cfg.spec.base.dim(), 3);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("base.kind = ball\n\nbase.colour = red\n").unwrap_err();
        assert_eq!(err, Error::Config { line: 3, message: "unknown key `base.colour`".into() });
    }

    #[test]
    fn syntax_and_value_errors_report_lines() {
        assert!(matches!(parse_config("base.kind ball"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("base.kind = ball\nbase.mu = -1"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse_config("base.kind = ball\nbase.kind = fock"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse_config("base.kind = cartan_type_I"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn user_facts_change_provenance() {
        let cfg = parse_config("base.kind = cartan_type_I\nbase.shape = 2, 2\nfacts.euclidean = yes\nfacts.hyperbolic = upto:0.5\n")
            .unwrap();
        assert_eq!(cfg.facts.provenance, Provenance::UserSupplied);
        assert_eq!(cfg.facts.euclidean, Verdict::Yes);
        assert_eq!(cfg.facts.hyperbolic, ScaleRule::UpTo(0.5));
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_config("base.kind = ball\nbase.einstein_constant = -3\n").unwrap();
        assert_eq!(cfg.spec.base.einstein_constants().unwrap(), vec![-3.0]);
    }
}

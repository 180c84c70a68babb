//! Base domains, their defining functions `phi`, and the Hartogs domain
//! `{ (z0, z) : |z0|^2 < phi(z) }` with Kähler potential `-h log(phi - |z0|^2)`.
//!
//! Catalog bases:
//!
//! | kind            | phi                         | genus   | Einstein constant |
//! |-----------------|-----------------------------|---------|-------------------|
//! | ball `B^d`      | `(1 - |z|^2)^mu`            | `d + 1` | `-(d + 1) / mu`   |
//! | polydisc        | `prod (1 - |z_i|^2)^mu_i`   | `d_i+1` | `-(d_i+1) / mu_i` |
//! | Cartan type I   | `det(I - Z Z^*)^mu`         | `m + n` | `-(m + n) / mu`   |
//! | Fock            | `exp(-mu |z|^2)`            | -       | `0`               |
//!
//! "Polydisc" is a product of balls; with all factor dimensions equal to one
//! it is the usual polydisc.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, HermitianMatrix};

/// Interior points used by derivative-based checks need at least this margin.
pub const MIN_INTERIOR_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Ball,
    Polydisc,
    CartanTypeI,
    Fock,
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::Ball => "ball",
            BaseKind::Polydisc => "polydisc",
            BaseKind::CartanTypeI => "cartan_type_I",
            BaseKind::Fock => "fock",
        }
    }
}

impl FromStr for BaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ball" | "disc" => Ok(BaseKind::Ball),
            "polydisc" => Ok(BaseKind::Polydisc),
            "cartan_type_i" | "type_i" | "cartan_i" => Ok(BaseKind::CartanTypeI),
            "fock" => Ok(BaseKind::Fock),
            other => Err(Error::InvalidInput(format!("unknown base kind `{other}`"))),
        }
    }
}

/// A positive real exponent that remembers an exact rational value when one
/// is known, so that `tau = 0` can be decided exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    value: f64,
    exact: Option<Ratio<i64>>,
}

impl Exponent {
    pub fn ratio(num: i64, den: i64) -> Self {
        let r = Ratio::new(num, den);
        Self { value: *r.numer() as f64 / *r.denom() as f64, exact: Some(r) }
    }

    pub fn integer(n: i64) -> Self {
        Self::ratio(n, 1)
    }

    /// Recovers `p/q` with `q <= 1000` when it reproduces `x` exactly in
    /// floating point; otherwise the exponent is treated as irrational.
    pub fn from_f64(x: f64) -> Self {
        Self { value: x, exact: rational_approximation(x) }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Ratio<i64>> {
        self.exact
    }
}

fn rational_approximation(x: f64) -> Option<Ratio<i64>> {
    if !x.is_finite() {
        return None;
    }
    (1..=1000i64).find_map(|q| {
        let p = (x * q as f64).round();
        (p.abs() < 1e15 && p / q as f64 == x).then(|| Ratio::new(p as i64, q))
    })
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    /// Accepts `p/q`, integers and finite decimals (parsed exactly).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse exponent `{s}`"));
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            return Ok(Self::ratio(p, q));
        }
        let value: f64 = s.parse().map_err(|_| bad())?;
        let decimal = s.strip_prefix('-').unwrap_or(s);
        let exact = match decimal.split_once('.') {
            None if !decimal.contains(['e', 'E']) => s.parse::<i64>().ok().map(Ratio::from_integer),
            Some((int, frac))
                if frac.len() <= 12 && frac.chars().all(|c| c.is_ascii_digit()) && int.chars().all(|c| c.is_ascii_digit()) =>
            {
                let digits = format!("{int}{frac}");
                let num: i64 = digits.parse().map_err(|_| bad())?;
                let num = if s.starts_with('-') { -num } else { num };
                Some(Ratio::new(num, 10i64.pow(frac.len() as u32)))
            }
            _ => rational_approximation(value),
        };
        Ok(Self { value, exact })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FactorGeometry {
    Ball { dim: usize },
    TypeI { rows: usize, cols: usize },
    Flat { dim: usize },
}

impl FactorGeometry {
    pub(crate) fn dim(self) -> usize {
        match self {
            FactorGeometry::Ball { dim } | FactorGeometry::Flat { dim } => dim,
            FactorGeometry::TypeI { rows, cols } => rows * cols,
        }
    }

    fn catalog_genus(self) -> Option<i64> {
        match self {
            FactorGeometry::Ball { dim } => Some(dim as i64 + 1),
            FactorGeometry::TypeI { rows, cols } => Some((rows + cols) as i64),
            FactorGeometry::Flat { .. } => None,
        }
    }

    /// Type I domains with a single row or column are balls.
    pub(crate) fn reduced(self) -> Self {
        match self {
            FactorGeometry::TypeI { rows, cols } if rows.min(cols) == 1 => FactorGeometry::Ball { dim: rows * cols },
            g => g,
        }
    }
}

/// One irreducible factor `D_i` of the base.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFactor {
    pub(crate) geometry: FactorGeometry,
    pub mu: Exponent,
    pub genus: Option<f64>,
    pub einstein_constant: Option<f64>,
}

impl BaseFactor {
    fn catalog(geometry: FactorGeometry, mu: Exponent) -> Result<Self> {
        if !(mu.value() > 0.0) || !mu.value().is_finite() {
            return Err(Error::InvalidInput(format!("exponent mu must be positive, got {}", mu.value())));
        }
        let genus = geometry.catalog_genus().map(|g| g as f64);
        let einstein_constant = Some(match genus {
            Some(g) => -g / mu.value(),
            None => 0.0,
        });
        Ok(Self { geometry, mu, genus, einstein_constant })
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Exact Einstein constant when the catalog values are in force and `mu` is rational.
    fn exact_einstein_constant(&self) -> Option<Ratio<i64>> {
        let c = self.einstein_constant?;
        let catalog = match self.geometry.catalog_genus() {
            Some(g) => self.mu.exact().map(|mu| Ratio::from_integer(-g) / mu),
            None => Some(Ratio::from_integer(0)),
        };
        match catalog {
            Some(r) if (*r.numer() as f64 / *r.denom() as f64 - c).abs() <= 1e-12 * (1.0 + c.abs()) => Some(r),
            _ => rational_approximation(c),
        }
    }
}

/// A base domain `D = D_1 x ... x D_m` with its defining function.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDomainSpec {
    kind: BaseKind,
    factors: Vec<BaseFactor>,
}

impl BaseDomainSpec {
    pub fn ball(dim: usize, mu: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("ball dimension must be positive".into()));
        }
        Ok(Self { kind: BaseKind::Ball, factors: vec![BaseFactor::catalog(FactorGeometry::Ball { dim }, mu)?] })
    }

    pub fn disc(mu: Exponent) -> Result<Self> {
        Self::ball(1, mu)
    }

    /// Product of balls `B^{dims[i]}` with exponents `mus[i]`.
    pub fn polydisc(dims: &[usize], mus: &[Exponent]) -> Result<Self> {
        if dims.is_empty() || dims.len() != mus.len() || dims.contains(&0) {
            return Err(Error::InvalidInput("polydisc needs matching positive dims and exponents".into()));
        }
        let factors = dims
            .iter()
            .zip(mus)
            .map(|(&dim, &mu)| BaseFactor::catalog(FactorGeometry::Ball { dim }, mu))
            .collect::<Result<_>>()?;
        Ok(Self { kind: BaseKind::Polydisc, factors })
    }

    /// Type I domain of `rows x cols` matrices; coordinates are row-major.
    pub fn cartan_type_i(rows: usize, cols: usize, mu: Exponent) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("type I shape must be positive".into()));
        }
        let (rows, cols) = (rows.min(cols), rows.max(cols));
        Ok(Self {
            kind: BaseKind::CartanTypeI,
            factors: vec![BaseFactor::catalog(FactorGeometry::TypeI { rows, cols }, mu)?],
        })
    }

    pub fn fock(dim: usize, mu: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("Fock dimension must be positive".into()));
        }
        Ok(Self { kind: BaseKind::Fock, factors: vec![BaseFactor::catalog(FactorGeometry::Flat { dim }, mu)?] })
    }

    /// Overrides the genus of one factor; the Einstein constant is re-derived
    /// as `-genus/mu` unless it was overridden too. Logs a warning when the
    /// value disagrees with the catalog.
    pub fn with_genus(mut self, factor: usize, genus: f64) -> Result<Self> {
        let f = self.factor_mut(factor)?;
        if f.geometry.catalog_genus().map(|g| g as f64) != Some(genus) {
            log::warn!("genus override {genus} for factor {factor} differs from the catalog value {:?}", f.genus);
        }
        f.genus = Some(genus);
        f.einstein_constant = Some(-genus / f.mu.value());
        Ok(self)
    }

    /// Overrides the Einstein constant of one factor (`None` removes it).
    pub fn with_einstein_constant(mut self, factor: usize, c: Option<f64>) -> Result<Self> {
        let f = self.factor_mut(factor)?;
        let catalog = match f.geometry.catalog_genus() {
            Some(g) => -(g as f64) / f.mu.value(),
            None => 0.0,
        };
        if let Some(c) = c {
            if (c - catalog).abs() > 1e-12 * (1.0 + catalog.abs()) {
                log::warn!("Einstein constant override {c} for factor {factor} is inconsistent with -genus/mu = {catalog}");
            }
        }
        f.einstein_constant = c;
        Ok(self)
    }

    fn factor_mut(&mut self, i: usize) -> Result<&mut BaseFactor> {
        let n = self.factors.len();
        self.factors
            .get_mut(i)
            .ok_or_else(|| Error::InvalidInput(format!("factor index {i} out of range ({n} factors)")))
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn factors(&self) -> &[BaseFactor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(BaseFactor::dim).collect()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.mu.value()).collect()
    }

    /// Total complex dimension `d`.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(BaseFactor::dim).sum()
    }

    pub fn bounded(&self) -> bool {
        self.kind != BaseKind::Fock
    }

    pub(crate) fn geometries(&self) -> impl Iterator<Item = (FactorGeometry, f64, usize)> + '_ {
        let mut offset = 0;
        self.factors.iter().map(move |f| {
            let o = offset;
            offset += f.dim();
            (f.geometry, f.mu.value(), o)
        })
    }

    pub fn einstein_constants(&self) -> Result<Vec<f64>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.einstein_constant.ok_or(Error::MissingEinsteinConstant { factor: i }))
            .collect()
    }

    /// `tau = (d + 1) d + sum_i c_i d_i`.
    pub fn tau(&self) -> Result<Tau> {
        let d = self.dim() as i64;
        let cs = self.einstein_constants()?;
        let value = ((d + 1) * d) as f64 + cs.iter().zip(self.dims()).map(|(c, di)| c * di as f64).sum::<f64>();
        let exact = self.factors.iter().try_fold(Ratio::from_integer((d + 1) * d), |acc, f| {
            f.exact_einstein_constant().map(|c| acc + c * Ratio::from_integer(f.dim() as i64))
        });
        Ok(Tau { value, exact })
    }

    /// Distance-like margin to the base boundary: `1 - |z|^2` per ball factor,
    /// the least eigenvalue of `I - Z Z^*` for type I, `+inf` for Fock.
    pub fn base_margin(&self, z: &[Complex64]) -> Result<f64> {
        self.check_len(z)?;
        let mut margin = f64::INFINITY;
        for (geom, _, off) in self.geometries() {
            let zi = &z[off..off + geom.dim()];
            let m = match geom {
                FactorGeometry::Ball { .. } => 1.0 - norm_sqr(zi),
                FactorGeometry::TypeI { rows, cols } => {
                    let zm = type_i_matrix(zi, rows, cols);
                    let a = DMatrix::<Complex64>::identity(rows, rows) - &zm * zm.adjoint();
                    HermitianMatrix::symmetrize(a).eigenvalues()?[0]
                }
                FactorGeometry::Flat { .. } => f64::INFINITY,
            };
            margin = margin.min(m);
        }
        Ok(margin)
    }

    fn check_len(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok(())
    }

    /// `det g^{D_i}(0)` per factor; equals `det g^{D_i} / phi_i^{c_i}` everywhere
    /// for catalog factors.
    pub fn determinant_constants(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.factors.len());
        for (geom, mu, _) in self.geometries() {
            let zero = vec![Complex64::new(0.0, 0.0); geom.dim()];
            out.push(determinant(&factor_hessian(geom, mu, &zero)?).re);
        }
        Ok(out)
    }

    /// Values `phi_i(z_i)` per factor.
    pub fn factor_phis(&self, z: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        let margin = self.base_margin(z)?;
        if !(margin > 0.0) {
            return Err(Error::boundary(margin, "base point outside D"));
        }
        Ok(self
            .geometries()
            .map(|(geom, mu, off)| {
                let zi = &z[off..off + geom.dim()];
                match geom {
                    FactorGeometry::Ball { .. } => (1.0 - norm_sqr(zi)).powf(mu),
                    FactorGeometry::TypeI { rows, cols } => {
                        let zm = type_i_matrix(zi, rows, cols);
                        let a = DMatrix::<Complex64>::identity(rows, rows) - &zm * zm.adjoint();
                        a.determinant().re.powf(mu)
                    }
                    FactorGeometry::Flat { .. } => (-mu * norm_sqr(zi)).exp(),
                }
            })
            .collect())
    }

    /// Gradient `d(-log phi)/dz_a` (holomorphic Wirtinger derivative).
    pub fn neg_log_phi_gradient(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(z)?;
        let mut grad = vec![Complex64::new(0.0, 0.0); z.len()];
        for (geom, mu, off) in self.geometries() {
            let zi = &z[off..off + geom.dim()];
            match geom {
                FactorGeometry::Ball { .. } => {
                    let w = 1.0 - norm_sqr(zi);
                    for (g, zj) in grad[off..].iter_mut().zip(zi) {
                        *g = zj.conj() * (mu / w);
                    }
                }
                FactorGeometry::TypeI { rows, cols } => {
                    let zm = type_i_matrix(zi, rows, cols);
                    let a = type_i_inverse_left(&zm)?;
                    let za = zm.adjoint() * a;
                    for r in 0..rows {
                        for c in 0..cols {
                            grad[off + r * cols + c] = za[(c, r)] * mu;
                        }
                    }
                }
                FactorGeometry::Flat { .. } => {
                    for (g, zj) in grad[off..].iter_mut().zip(zi) {
                        *g = zj.conj() * mu;
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// `tau` with an exact rational value whenever every exponent is rational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tau {
    pub value: f64,
    pub exact: Option<Ratio<i64>>,
}

impl Tau {
    /// Exact test when possible; otherwise `|tau| <= 1e-12` with a warning.
    pub fn is_zero(&self) -> bool {
        match self.exact {
            Some(r) => r == Ratio::from_integer(0),
            None => {
                log::warn!("tau = {} has no exact rational form; deciding tau = 0 by |tau| <= 1e-12", self.value);
                self.value.abs() <= 1e-12
            }
        }
    }
}

fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(Complex64::norm_sqr).sum()
}

fn type_i_matrix(z: &[Complex64], rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(rows, cols, z)
}

fn type_i_inverse_left(zm: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let m = zm.nrows();
    (DMatrix::<Complex64>::identity(m, m) - zm * zm.adjoint())
        .try_inverse()
        .ok_or_else(|| Error::boundary(0.0, "I - Z Z^* is singular"))
}

fn factor_hessian(geom: FactorGeometry, mu: f64, zi: &[Complex64]) -> Result<HermitianMatrix> {
    let n = geom.dim();
    let m = match geom {
        FactorGeometry::Ball { .. } => {
            let w = 1.0 - norm_sqr(zi);
            DMatrix::from_fn(n, n, |a, b| {
                let delta = if a == b { 1.0 / w } else { 0.0 };
                (zi[a].conj() * zi[b] / (w * w) + delta) * mu
            })
        }
        FactorGeometry::TypeI { rows, cols } => {
            let zm = type_i_matrix(zi, rows, cols);
            let a = type_i_inverse_left(&zm)?;
            let b = (DMatrix::<Complex64>::identity(cols, cols) - zm.adjoint() * &zm)
                .try_inverse()
                .ok_or_else(|| Error::boundary(0.0, "I - Z^* Z is singular"))?;
            // g_{(r c),(r' c')} = mu * A[r', r] * B[c, c'].
            DMatrix::from_fn(n, n, |i, j| {
                let (r, c) = (i / cols, i % cols);
                let (r2, c2) = (j / cols, j % cols);
                a[(r2, r)] * b[(c, c2)] * mu
            })
        }
        FactorGeometry::Flat { .. } => DMatrix::identity(n, n) * Complex64::new(mu, 0.0),
    };
    Ok(HermitianMatrix::symmetrize(m))
}

/// A Hartogs domain over `base` with `fiber_dim`-dimensional fibers and metric
/// scale `scale` (the `h` in `-h log(phi - |z0|^2)`).
#[derive(Debug, Clone, PartialEq)]
pub struct HartogsSpec {
    pub base: BaseDomainSpec,
    pub fiber_dim: usize,
    pub scale: f64,
}

impl HartogsSpec {
    pub fn new(base: BaseDomainSpec, fiber_dim: usize, scale: f64) -> Result<Self> {
        if fiber_dim == 0 {
            return Err(Error::InvalidInput("fiber dimension must be positive".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!("scale h must be positive, got {scale}")));
        }
        Ok(Self { base, fiber_dim, scale })
    }

    /// Unit-scale spec.
    pub fn unit(base: BaseDomainSpec, fiber_dim: usize) -> Result<Self> {
        Self::new(base, fiber_dim, 1.0)
    }

    /// Total dimension `n = d + d0`.
    pub fn dim(&self) -> usize {
        self.base.dim() + self.fiber_dim
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.base.clone(), self.fiber_dim, scale)
    }

    pub fn point(&self, fiber: Vec<Complex64>, base: Vec<Complex64>) -> Result<EvaluationPoint> {
        if fiber.len() != self.fiber_dim {
            return Err(Error::DimensionMismatch { expected: self.fiber_dim, got: fiber.len() });
        }
        if base.len() != self.base.dim() {
            return Err(Error::DimensionMismatch { expected: self.base.dim(), got: base.len() });
        }
        Ok(EvaluationPoint { fiber, base })
    }

    pub fn origin(&self) -> EvaluationPoint {
        EvaluationPoint {
            fiber: vec![Complex64::new(0.0, 0.0); self.fiber_dim],
            base: vec![Complex64::new(0.0, 0.0); self.base.dim()],
        }
    }

    /// `phi(z) - |z0|^2`; negative or zero outside the domain.
    pub fn fiber_margin(&self, p: &EvaluationPoint) -> Result<f64> {
        Ok(phi(&self.base, &p.base)? - p.fiber_norm_sqr())
    }

    /// `min(phi(z) - |z0|^2, base margin)`.
    pub fn margin(&self, p: &EvaluationPoint) -> Result<f64> {
        let base_margin = self.base.base_margin(&p.base)?;
        if !(base_margin > 0.0) {
            return Ok(base_margin);
        }
        Ok(self.fiber_margin(p)?.min(base_margin))
    }

    /// Margin as a function of flat coordinates; never errors (returns
    /// `-inf` for malformed or exterior input).
    pub fn margin_at(&self, coords: &[Complex64]) -> f64 {
        EvaluationPoint::from_coords(self.fiber_dim, coords)
            .and_then(|p| self.margin(&p))
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Deterministic rejection sampling of interior points with
    /// `phi - |z0|^2 >= 0.05 phi` and `margin >= min_margin`.
    pub fn sample_interior(&self, count: usize, seed: u64, min_margin: f64) -> Result<Vec<EvaluationPoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_half_width = match self.base.kind() {
            BaseKind::Fock => {
                let mu = self.base.mus()[0];
                (20f64.ln() / mu).sqrt()
            }
            _ => 1.0,
        };
        let mut out = Vec::with_capacity(count);
        let max_attempts = 2_000_000usize;
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::InvalidInput(format!(
                    "rejection sampling found only {} of {count} interior points",
                    out.len()
                )));
            }
            let draw = |n: usize, w: f64, rng: &mut ChaCha8Rng| -> Vec<Complex64> {
                (0..n).map(|_| Complex64::new(rng.random_range(-w..w), rng.random_range(-w..w))).collect()
            };
            let fiber = draw(self.fiber_dim, 1.0, &mut rng);
            let base = draw(self.base.dim(), base_half_width, &mut rng);
            let p = EvaluationPoint { fiber, base };
            let Ok(margin) = self.margin(&p) else { continue };
            if !(margin >= min_margin) {
                continue;
            }
            let phi_v = phi(&self.base, &p.base)?;
            if phi_v - p.fiber_norm_sqr() >= 0.05 * phi_v {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// A point `(z0, z)` of `C^{d0} x C^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPoint {
    pub fiber: Vec<Complex64>,
    pub base: Vec<Complex64>,
}

impl EvaluationPoint {
    pub fn fiber_norm_sqr(&self) -> f64 {
        norm_sqr(&self.fiber)
    }

    /// Flat coordinates `(z0, z)`, fiber first.
    pub fn coords(&self) -> Vec<Complex64> {
        self.fiber.iter().chain(&self.base).copied().collect()
    }

    pub fn from_coords(fiber_dim: usize, coords: &[Complex64]) -> Result<Self> {
        if coords.len() < fiber_dim {
            return Err(Error::DimensionMismatch { expected: fiber_dim, got: coords.len() });
        }
        Ok(Self { fiber: coords[..fiber_dim].to_vec(), base: coords[fiber_dim..].to_vec() })
    }

    /// Rotates the fiber coordinates by `e^{i theta}`.
    pub fn rotate_fiber(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self { fiber: self.fiber.iter().map(|z| z * r).collect(), base: self.base.clone() }
    }

    pub fn rotate_base(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self { fiber: self.fiber.clone(), base: self.base.iter().map(|z| z * r).collect() }
    }
}

/// `phi(z) = prod_i phi_i(z_i)`; errors outside the base domain.
pub fn phi(base: &BaseDomainSpec, z: &[Complex64]) -> Result<f64> {
    let v: f64 = base.factor_phis(z)?.iter().product();
    if !(v > 0.0) {
        return Err(Error::boundary(v, "phi is not positive"));
    }
    Ok(v)
}

/// `-h log(phi(z) - |z0|^2)`.
pub fn hartogs_potential(spec: &HartogsSpec, p: &EvaluationPoint) -> Result<f64> {
    let margin = spec.fiber_margin(p)?;
    if !(margin > 0.0) {
        return Err(Error::boundary(margin, "point outside the Hartogs domain"));
    }
    Ok(-spec.scale * margin.ln())
}

/// Closed-form `d^2(-log phi) / dz_a dzbar_b`, block diagonal over factors.
pub fn base_hessian_closed(base: &BaseDomainSpec, z: &[Complex64]) -> Result<HermitianMatrix> {
    base.check_len(z)?;
    let margin = base.base_margin(z)?;
    if !(margin > 0.0) {
        return Err(Error::boundary(margin, "base point outside D"));
    }
    let d = base.dim();
    let mut m = DMatrix::zeros(d, d);
    for (geom, mu, off) in base.geometries() {
        let k = geom.dim();
        let block = factor_hessian(geom, mu, &z[off..off + k])?;
        m.view_mut((off, off), (k, k)).copy_from(block.as_matrix());
    }
    Ok(HermitianMatrix::symmetrize(m))
}

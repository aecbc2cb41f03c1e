//! Capsule-versus-distance-field collision checks.
//!
//! A link is free iff `d(alpha) > r` for every `alpha` on its axis. One query
//! `d_i = d(alpha_i) > r` certifies the open interval
//! `(alpha_i - s_i, alpha_i + s_i)` with `s_i = sqrt(d_i^2 - r^2)`: every
//! circular cut of the link there lies inside the obstacle-free ball of
//! radius `d_i`. The adaptive checks walk the axis with these certified
//! steps:
//!
//! * [`check_uni`] marches from the start point to the end point.
//! * [`check_bi`] keeps a FIFO queue of uncertified intervals, shrinks each
//!   from both ends and splits the remainder at its midpoint.
//!
//! [`check_fixed`] is the classic baseline that covers the capsule with a
//! fixed chain of spheres, and [`oracle_check`] samples the axis densely.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{DistanceField, LookupMode};
use crate::geometry::Capsule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("check did not terminate within {queries} queries (last alpha {alpha})")]
    NonTermination { queries: u64, alpha: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How a safety distance `d_s` is folded into the collision test.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", content = "d_s", rename_all = "snake_case")]
pub enum SafetyMode {
    #[default]
    None,
    /// Compare `d - d_s` against `r`.
    SubtractFromDistance(f64),
    /// Compare `d` against `r + d_s`.
    AddToRadius(f64),
}

impl SafetyMode {
    pub fn safety_distance(&self) -> f64 {
        match *self {
            SafetyMode::None => 0.0,
            SafetyMode::SubtractFromDistance(ds) | SafetyMode::AddToRadius(ds) => ds,
        }
    }

    pub fn validate(&self) -> Result<(), CheckError> {
        let ds = self.safety_distance();
        if ds.is_finite() && ds >= 0.0 {
            Ok(())
        } else {
            Err(CheckError::InvalidParameter(format!(
                "safety distance must be >= 0, got {ds}"
            )))
        }
    }

    /// Effective `(distance, radius)` pair for a measured distance `d` and
    /// link radius `r`.
    #[inline]
    pub fn effective_pair(&self, d: f64, r: f64) -> (f64, f64) {
        match *self {
            SafetyMode::None => (d, r),
            SafetyMode::SubtractFromDistance(ds) => (d - ds, r),
            SafetyMode::AddToRadius(ds) => (d, r + ds),
        }
    }

    /// Radius the check compares against.
    pub fn effective_radius(&self, r: f64) -> f64 {
        self.effective_pair(0.0, r).1
    }
}

impl fmt::Display for SafetyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafetyMode::None => f.write_str("none"),
            SafetyMode::SubtractFromDistance(ds) => write!(f, "distance:{ds}"),
            SafetyMode::AddToRadius(ds) => write!(f, "radius:{ds}"),
        }
    }
}

/// Free function form of [`SafetyMode::effective_pair`].
pub fn effective_pair(d: f64, r: f64, safety: SafetyMode) -> (f64, f64) {
    safety.effective_pair(d, r)
}

/// Certified half-width `sqrt(d^2 - r^2)` of the free interval around a
/// query, or `None` unless `d > r`.
#[inline]
pub fn step_length(d: f64, r: f64) -> Option<f64> {
    // (d - r)(d + r) keeps precision when d is barely above r
    (d > r).then(|| ((d - r) * (d + r)).sqrt())
}

/// Settings shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckParams {
    pub lookup_mode: LookupMode,
    pub safety: SafetyMode,
    /// A query collides when `d_eff <= r_eff + collision_margin`.
    pub collision_margin: f64,
    pub max_queries: u64,
    /// Keep the list of queried axis parameters in the report.
    pub record_alphas: bool,
    /// Skip the final end-point query of the uni-directional march when the
    /// loop already queried exactly `alpha = length`.
    pub skip_duplicate_end_query: bool,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            lookup_mode: LookupMode::Conservative,
            safety: SafetyMode::AddToRadius(0.0),
            collision_margin: 0.0,
            max_queries: 1_000_000,
            record_alphas: false,
            skip_duplicate_end_query: false,
        }
    }
}

impl CheckParams {
    pub fn validate(&self) -> Result<(), CheckError> {
        self.safety.validate()?;
        if !(self.collision_margin.is_finite() && self.collision_margin >= 0.0) {
            return Err(CheckError::InvalidParameter(format!(
                "collision margin must be >= 0, got {}",
                self.collision_margin
            )));
        }
        if self.max_queries == 0 {
            return Err(CheckError::InvalidParameter(
                "max_queries must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Free,
    Collision,
}

impl Verdict {
    pub fn is_collision(self) -> bool {
        self == Verdict::Collision
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Free => "free",
            Verdict::Collision => "collision",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub verdict: Verdict,
    /// Number of distance lookups.
    pub queries: u64,
    /// Queried axis parameters in order, when requested.
    pub queried_alphas: Option<Vec<f64>>,
    pub effective_radius: f64,
}

enum Probe {
    Hit,
    Clear(f64),
}

/// Counts and evaluates distance queries along one capsule axis.
struct Prober<'a, F: ?Sized> {
    capsule: &'a Capsule,
    field: &'a F,
    params: &'a CheckParams,
    queries: u64,
    alphas: Option<Vec<f64>>,
}

impl<'a, F: DistanceField + ?Sized> Prober<'a, F> {
    fn new(
        capsule: &'a Capsule,
        field: &'a F,
        params: &'a CheckParams,
    ) -> Result<Self, CheckError> {
        params.validate()?;
        Ok(Self {
            capsule,
            field,
            params,
            queries: 0,
            alphas: params.record_alphas.then(Vec::new),
        })
    }

    #[inline]
    fn probe(&mut self, alpha: f64) -> Result<Probe, CheckError> {
        if self.queries >= self.params.max_queries {
            return Err(CheckError::NonTermination {
                queries: self.queries,
                alpha,
            });
        }
        self.queries += 1;
        if let Some(a) = self.alphas.as_mut() {
            a.push(alpha);
        }
        let p = self.capsule.axis.point_at_unchecked(alpha);
        let d = self.field.distance(&p, self.params.lookup_mode);
        let (d_eff, r_eff) = self.params.safety.effective_pair(d, self.capsule.radius());
        if d_eff <= r_eff + self.params.collision_margin {
            Ok(Probe::Hit)
        } else {
            // d_eff > r_eff here, so the step exists
            Ok(Probe::Clear(step_length(d_eff, r_eff).unwrap_or(0.0)))
        }
    }

    fn finish(self, verdict: Verdict) -> CheckReport {
        CheckReport {
            verdict,
            queries: self.queries,
            queried_alphas: self.alphas,
            effective_radius: self.params.safety.effective_radius(self.capsule.radius()),
        }
    }
}

/// Uni-directional march from the start point: query, step by the certified
/// half-width, repeat until past the end, then query the end point.
pub fn check_uni<F: DistanceField + ?Sized>(
    capsule: &Capsule,
    field: &F,
    params: &CheckParams,
) -> Result<CheckReport, CheckError> {
    let mut pr = Prober::new(capsule, field, params)?;
    let length = capsule.length();
    let mut alpha = 0.0;
    let mut last = f64::NAN;
    while alpha <= length {
        last = alpha;
        match pr.probe(alpha)? {
            Probe::Hit => return Ok(pr.finish(Verdict::Collision)),
            Probe::Clear(step) => alpha += step,
        }
    }
    if !(params.skip_duplicate_end_query && last == length) {
        if let Probe::Hit = pr.probe(length)? {
            return Ok(pr.finish(Verdict::Collision));
        }
    }
    Ok(pr.finish(Verdict::Free))
}

/// Bi-directional interval search.
///
/// Each interval `[lo, hi]` taken from the queue is shrunk from both ends by
/// the certified half-widths. If a gap remains, its midpoint is queried and
/// the parts of the gap left uncertified on either side of the midpoint's
/// free interval are queued.
pub fn check_bi<F: DistanceField + ?Sized>(
    capsule: &Capsule,
    field: &F,
    params: &CheckParams,
) -> Result<CheckReport, CheckError> {
    let mut pr = Prober::new(capsule, field, params)?;
    let mut queue = VecDeque::from([(0.0, capsule.length())]);
    while let Some((lo, hi)) = queue.pop_front() {
        let lo_step = match pr.probe(lo)? {
            Probe::Hit => return Ok(pr.finish(Verdict::Collision)),
            Probe::Clear(s) => s,
        };
        let hi_step = match pr.probe(hi)? {
            Probe::Hit => return Ok(pr.finish(Verdict::Collision)),
            Probe::Clear(s) => s,
        };
        let lo_bar = lo + lo_step;
        let hi_bar = hi - hi_step;
        if lo_bar < hi_bar {
            let mid = 0.5 * (lo_bar + hi_bar);
            let mid_step = match pr.probe(mid)? {
                Probe::Hit => return Ok(pr.finish(Verdict::Collision)),
                Probe::Clear(s) => s,
            };
            let mid_lo = mid - mid_step;
            let mid_hi = mid + mid_step;
            if lo_bar < mid_lo {
                queue.push_back((lo_bar, mid_lo));
            }
            if mid_hi < hi_bar {
                queue.push_back((mid_hi, hi_bar));
            }
        }
    }
    Ok(pr.finish(Verdict::Free))
}

/// Fixed chain of equal spheres covering a capsule.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDecomposition {
    /// Sphere centers as axis parameters, from 0 to the link length.
    pub centers: Vec<f64>,
    pub sphere_radius: f64,
    pub separation: f64,
}

/// Cover `capsule` with spheres spaced at most `separation` apart.
///
/// The spacing is snapped to `length / ceil(length / separation)` so the
/// last sphere sits on the end point; neighbouring spheres then intersect in
/// a circle of the link radius.
pub fn decompose(capsule: &Capsule, separation: f64) -> Result<SphereDecomposition, CheckError> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(CheckError::InvalidParameter(format!(
            "sphere separation must be positive, got {separation}"
        )));
    }
    let length = capsule.length();
    // lengths that are whole multiples of the separation up to rounding
    // must not gain a sphere
    let n = ((length / separation) - 1e-9).ceil().max(1.0) as usize;
    let spacing = length / n as f64;
    let mut centers: Vec<f64> = (0..n).map(|k| k as f64 * spacing).collect();
    centers.push(length);
    let r = capsule.radius();
    Ok(SphereDecomposition {
        centers,
        sphere_radius: (r * r + 0.25 * spacing * spacing).sqrt(),
        separation: spacing,
    })
}

/// Sphere-decomposition baseline: test every sphere center in order.
pub fn check_fixed<F: DistanceField + ?Sized>(
    capsule: &Capsule,
    field: &F,
    separation: f64,
    params: &CheckParams,
) -> Result<CheckReport, CheckError> {
    params.validate()?;
    let dec = decompose(capsule, separation)?;
    Ok(check_decomposition(capsule, &dec, field, params))
}

/// [`check_fixed`] with a precomputed decomposition.
pub fn check_decomposition<F: DistanceField + ?Sized>(
    capsule: &Capsule,
    dec: &SphereDecomposition,
    field: &F,
    params: &CheckParams,
) -> CheckReport {
    let mut alphas = params.record_alphas.then(Vec::new);
    let mut queries = 0;
    let mut verdict = Verdict::Free;
    for &alpha in &dec.centers {
        queries += 1;
        if let Some(a) = alphas.as_mut() {
            a.push(alpha);
        }
        let d = field.distance(&capsule.axis.point_at_unchecked(alpha), params.lookup_mode);
        let (d_eff, r_eff) = params.safety.effective_pair(d, dec.sphere_radius);
        if d_eff <= r_eff + params.collision_margin {
            verdict = Verdict::Collision;
            break;
        }
    }
    CheckReport {
        verdict,
        queries,
        queried_alphas: alphas,
        effective_radius: params.safety.effective_radius(dec.sphere_radius),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub verdict: Verdict,
    /// Smallest sampled `d_eff - r_eff`.
    pub min_clearance: f64,
    /// Axis parameter of the smallest clearance.
    pub argmin: f64,
    pub samples: u64,
}

/// Dense verification: sample `alpha = 0, step, 2 step, ..` and the end
/// point. Collision iff some sample has `d_eff <= r_eff`.
pub fn oracle_check<F: DistanceField + ?Sized>(
    capsule: &Capsule,
    field: &F,
    step: f64,
    params: &CheckParams,
) -> Result<OracleReport, CheckError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(CheckError::InvalidParameter(format!(
            "oracle step must be positive, got {step}"
        )));
    }
    params.safety.validate()?;
    let length = capsule.length();
    let mut min_clearance = f64::INFINITY;
    let mut argmin = 0.0;
    let mut samples = 0u64;
    let mut visit = |alpha: f64| {
        let d = field.distance(&capsule.axis.point_at_unchecked(alpha), params.lookup_mode);
        let (d_eff, r_eff) = params.safety.effective_pair(d, capsule.radius());
        let clearance = d_eff - r_eff;
        if clearance < min_clearance {
            min_clearance = clearance;
            argmin = alpha;
        }
        samples += 1;
    };
    let mut k = 0u64;
    loop {
        let alpha = k as f64 * step;
        if alpha >= length {
            break;
        }
        visit(alpha);
        k += 1;
    }
    visit(length);
    Ok(OracleReport {
        verdict: if min_clearance <= 0.0 {
            Verdict::Collision
        } else {
            Verdict::Free
        },
        min_clearance,
        argmin,
        samples,
    })
}

/// A collision checking method and its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "param", rename_all = "lowercase")]
pub enum Method {
    Uni,
    Bi,
    Fixed(f64),
    Oracle(f64),
}

impl Method {
    pub fn validate(&self) -> Result<(), CheckError> {
        match *self {
            Method::Fixed(v) | Method::Oracle(v) if !(v.is_finite() && v > 0.0) => Err(
                CheckError::InvalidParameter(format!("{self}: parameter must be positive")),
            ),
            _ => Ok(()),
        }
    }

    /// Method parameter (separation or step), if any.
    pub fn param(&self) -> Option<f64> {
        match *self {
            Method::Uni | Method::Bi => None,
            Method::Fixed(v) | Method::Oracle(v) => Some(v),
        }
    }

    pub fn check<F: DistanceField + ?Sized>(
        &self,
        capsule: &Capsule,
        field: &F,
        params: &CheckParams,
    ) -> Result<CheckReport, CheckError> {
        match *self {
            Method::Uni => check_uni(capsule, field, params),
            Method::Bi => check_bi(capsule, field, params),
            Method::Fixed(sep) => check_fixed(capsule, field, sep, params),
            Method::Oracle(step) => {
                let rep = oracle_check(capsule, field, step, params)?;
                Ok(CheckReport {
                    verdict: rep.verdict,
                    queries: rep.samples,
                    queried_alphas: None,
                    effective_radius: params.safety.effective_radius(capsule.radius()),
                })
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Uni => f.write_str("uni"),
            Method::Bi => f.write_str("bi"),
            Method::Fixed(s) => write!(f, "fixed:{s}"),
            Method::Oracle(s) => write!(f, "oracle:{s}"),
        }
    }
}

impl FromStr for Method {
    type Err = CheckError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            CheckError::InvalidParameter(format!(
                "unknown method '{s}' (bi | uni | fixed:<sep> | oracle:<step>)"
            ))
        };
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let value = |a: Option<&str>| -> Result<f64, CheckError> {
            a.ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())
        };
        let m = match (name, arg) {
            ("uni", None) => Method::Uni,
            ("bi", None) => Method::Bi,
            ("fixed", a) => Method::Fixed(value(a)?),
            ("oracle", a) => Method::Oracle(value(a)?),
            _ => return Err(bad()),
        };
        m.validate()?;
        Ok(m)
    }
}

//! Liouville-criterion machinery: Karp-type profiles, weighted `L^p`
//! tests, Caccioppoli and key-estimate audits, mean-value inequalities,
//! and growth/moment classifiers.
//!
//! All audits run on non-negative subharmonic functions over a window
//! carrying a certified intrinsic metric, and report evidence, never
//! proofs: finite data cannot decide an improper integral, so verdicts
//! come from log-log slope fits with an explicit margin, with the
//! `r² log r` boundary case flagged separately.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Harmonicity, ScalarField, VertexId, WeightedGraph};
use crate::metric::{verify_compatible, verify_intrinsic, Metric};
use crate::potential::{log_log_slope, SLOPE_MARGIN};

pub use crate::generate::{
    finite_volume_example, finite_volume_example_exact, infinite_volume_example, Attachment,
};

/// Margin below `beta = 1` required by the growth classifier.
pub const GROWTH_MARGIN: f64 = 0.1;

/// Relative tail increment below which monotone partial sums count as
/// bounded.
pub const BOUNDED_TAIL_REL: f64 = 1e-3;

/// Audit constant for the key estimate: `2 / ((p-1) ∧ 1)`.
pub fn key_estimate_constant(p: f64) -> f64 {
    2.0 / (p - 1.0).min(1.0)
}

/// Frozen audit constant for the Caccioppoli inequality:
/// `8 / ((p-1) ∧ 1)²`: the key-estimate constant squared times the
/// Young-inequality factor. Confirmed by the calibration run in
/// [`calibrate_caccioppoli`]; the empirical worst-case ratio over the
/// golden suite is [`CACCIOPPOLI_GOLDEN_MAX_RATIO`], far below this bound.
pub fn caccioppoli_constant(p: f64) -> f64 {
    let c = (p - 1.0).min(1.0);
    8.0 / (c * c)
}

/// Worst constant-free ratio `lhs (R-r)² / ||f 1_annulus||_p^p` observed
/// over the golden calibration suite. The regression gate forbids this
/// growing by more than 1%.
pub const CACCIOPPOLI_GOLDEN_MAX_RATIO: f64 = 1.2584;

pub(crate) fn ensure_increasing(radii: &[f64]) -> Result<()> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidExhaustion(
            "radius grids must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Checks the standing hypotheses of the audits: `p` in range, `f >= 0`,
/// `f` subharmonic on the complete window, metric intrinsic.
fn certify(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    p: f64,
    tol: f64,
) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::BadExponent(format!("need p in (1, inf), got {p}")));
    }
    let window = g.complete_indices();
    for &i in &window {
        let v = *f.get(g, i)?;
        if v < -tol {
            return Err(Error::NegativeFunction(v, g.id(i)));
        }
    }
    let region: Vec<VertexId> = window.iter().map(|&i| g.id(i)).collect();
    let out = g.classify(f, &region, tol)?;
    if out.verdict != Harmonicity::Harmonic && out.verdict != Harmonicity::Subharmonic {
        return Err(Error::NotSubharmonic(
            out.max_positive_part,
            out.worst_vertex.unwrap_or(g.id(0)),
        ));
    }
    let report = verify_intrinsic(g, metric, &window, tol.max(1e-12))?;
    if !report.intrinsic {
        return Err(Error::NotIntrinsic(report.max_ratio));
    }
    Ok(())
}

/// Divergence verdict for improper-integral criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralVerdict {
    DivergentEvidence,
    ConvergentEvidence,
}

/// Karp-criterion profile: `v(r) = ||f 1_{B_r}||_p^p` over a radius grid,
/// with a trapezoid estimate of `∫ r / v(r) dr` and a fitted growth
/// exponent. Growth up to `r² log r` keeps the integral divergent.
#[derive(Clone, Debug, Serialize)]
pub struct KarpProfile {
    pub p: f64,
    pub radii: Vec<f64>,
    pub v: Vec<f64>,
    pub integral_estimate: f64,
    pub fitted_exponent: f64,
    pub boundary_case: bool,
    pub verdict: IntegralVerdict,
}

pub fn karp_profile(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    p: f64,
    radii: &[f64],
    tol: f64,
) -> Result<KarpProfile> {
    ensure_increasing(radii)?;
    certify(g, metric, f, p, tol)?;
    let compat = verify_compatible(g, metric, radii)?;
    if !compat.compatible {
        return Err(Error::NotCompatible(
            "jump size or a ball degree bound is not finite".into(),
        ));
    }
    let mut v = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball = metric.ball(g, r)?;
        v.push(g.lp_power_sum(f, p, None, Some(&ball))?);
    }
    debug_assert!(v.windows(2).all(|w| w[1] >= w[0]), "v(r) must be non-decreasing");
    Ok(profile_from_sums(p, radii, v))
}

/// Verdict assembly shared with the zero-function convention: an
/// identically vanishing profile has a divergent integral by convention.
fn profile_from_sums(p: f64, radii: &[f64], v: Vec<f64>) -> KarpProfile {
    let mut integral = 0.0;
    for (rw, vw) in radii.windows(2).zip(v.windows(2)) {
        if vw[0] > 0.0 && vw[1] > 0.0 {
            integral += 0.5 * (rw[1] - rw[0]) * (rw[0] / vw[0] + rw[1] / vw[1]);
        }
    }
    if v.iter().all(|&x| x == 0.0) {
        return KarpProfile {
            p,
            radii: radii.to_vec(),
            v,
            integral_estimate: f64::INFINITY,
            fitted_exponent: 0.0,
            boundary_case: false,
            verdict: IntegralVerdict::DivergentEvidence,
        };
    }
    let slope = log_log_slope(radii, &v);
    let boundary_case = (slope - 2.0).abs() <= SLOPE_MARGIN;
    let divergent = if boundary_case {
        bounded_ratio_tail(radii, &v, |r| r * r * r.max(2.0).ln())
    } else {
        slope <= 2.0 - SLOPE_MARGIN
    };
    KarpProfile {
        p,
        radii: radii.to_vec(),
        v,
        integral_estimate: integral,
        fitted_exponent: slope,
        boundary_case,
        verdict: if divergent {
            IntegralVerdict::DivergentEvidence
        } else {
            IntegralVerdict::ConvergentEvidence
        },
    }
}

fn bounded_ratio_tail(xs: &[f64], ys: &[f64], envelope: impl Fn(f64) -> f64) -> bool {
    let ratios: Vec<f64> = xs
        .iter()
        .zip(ys.iter())
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| y / envelope(x))
        .collect();
    if ratios.len() < 2 {
        return true;
    }
    let probe = ratios[(ratios.len() * 3) / 4].max(f64::MIN_POSITIVE);
    ratios.last().unwrap() / probe <= 1.05
}

/// Weighted `L^p` test verdict: bounded partial sums of
/// `sum |f|^p m ρ_1^{-2}` imply constancy for a certified subharmonic `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightedLpVerdict {
    ConstancyImplied,
    NoConclusion,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedLpReport {
    pub p: f64,
    /// Cumulative sums, vertices ordered by distance to the base point.
    pub partial_sums: Vec<f64>,
    pub bounded: bool,
    pub verdict: WeightedLpVerdict,
}

/// Partial sums of `sum_x |f(x)|^p m(x) ρ_1^{-2}(x)` with
/// `ρ_1 = 1 ∨ ρ(·, o)`, accumulated in order of distance to the base.
pub fn weighted_lp_test(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    p: f64,
    tol: f64,
) -> Result<WeightedLpReport> {
    certify(g, metric, f, p, tol)?;
    let mut order: Vec<usize> = (0..g.n_vertices()).collect();
    order.sort_by(|&a, &b| {
        metric
            .to_base(a)
            .partial_cmp(&metric.to_base(b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut sums = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        let rho1 = metric.to_base(i).max(1.0);
        acc += f.get(g, i)?.abs().powf(p) * g.measure(i) / (rho1 * rho1);
        sums.push(acc);
    }
    let bounded = bounded_partial_sums(&sums);
    Ok(WeightedLpReport {
        p,
        partial_sums: sums,
        bounded,
        verdict: if bounded {
            WeightedLpVerdict::ConstancyImplied
        } else {
            WeightedLpVerdict::NoConclusion
        },
    })
}

/// Saturation check for monotone partial sums: the last quarter of the
/// accumulation contributes a negligible relative amount.
pub(crate) fn bounded_partial_sums(sums: &[f64]) -> bool {
    if sums.is_empty() {
        return true;
    }
    let last = *sums.last().unwrap();
    if last == 0.0 {
        return true;
    }
    let probe = sums[(sums.len() * 3) / 4];
    (last - probe) / last <= BOUNDED_TAIL_REL
}

/// Two sides of an audited inequality, with the constant split out: the
/// audit passes when `lhs <= constant_used * rhs_body / gap² + tol`.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityAudit {
    pub lhs: f64,
    pub rhs_body: f64,
    pub rhs: f64,
    /// Constant-free ratio `lhs / (rhs_body / gap²)`; the regression gate
    /// watches its maximum over the golden suite.
    pub ratio: f64,
    pub constant_used: f64,
    pub pass: bool,
    pub witness: Option<(VertexId, VertexId)>,
}

/// Left-hand-side weight of the Caccioppoli inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaccioppoliForm {
    /// `(f(x) ∨ f(y))^(p-2)`, valid for all `p` in (1, inf).
    Max,
    /// `f^(p-2)(x) + f^(p-2)(y)`, the strengthened form for `p >= 2`.
    SumPowers,
}

/// Audits the Caccioppoli-type inequality on the ball pair `(r, R)`:
/// the weighted gradient sum over `B_r` against
/// `C/(R-r)² ||f 1_{B_R \ B_r}||_p^p`, valid for `0 < r < R - 3s`.
pub fn caccioppoli_audit(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    p: f64,
    r: f64,
    big_r: f64,
    form: CaccioppoliForm,
    tol: f64,
) -> Result<InequalityAudit> {
    certify(g, metric, f, p, tol)?;
    caccioppoli_audit_certified(g, metric, f, p, r, big_r, form, tol)
}

/// Sweep over `(r, R)` pairs with one up-front certification.
pub fn caccioppoli_sweep(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    p: f64,
    pairs: &[(f64, f64)],
    form: CaccioppoliForm,
    tol: f64,
) -> Result<Vec<InequalityAudit>> {
    certify(g, metric, f, p, tol)?;
    pairs
        .iter()
        .map(|&(r, big_r)| caccioppoli_audit_certified(g, metric, f, p, r, big_r, form, tol))
        .collect()
}

fn caccioppoli_audit_certified(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    p: f64,
    r: f64,
    big_r: f64,
    form: CaccioppoliForm,
    tol: f64,
) -> Result<InequalityAudit> {
    if form == CaccioppoliForm::SumPowers && p < 2.0 {
        return Err(Error::BadExponent(format!(
            "the strengthened form needs p >= 2, got {p}"
        )));
    }
    if r <= 0.0 {
        return Err(Error::BadRadii { r, big_r });
    }
    let s = metric.jump_size(g);
    if !(r < big_r - 3.0 * s) {
        return Err(Error::RadiiViolateJumpGap { r, big_r, s });
    }
    let ball_r = metric.ball(g, r)?;
    let ball_big = metric.ball(g, big_r)?;
    let mut in_r = vec![false; g.n_vertices()];
    for &i in &ball_r {
        in_r[i] = true;
    }
    let mut in_big = vec![false; g.n_vertices()];
    for &i in &ball_big {
        in_big[i] = true;
    }

    // Ordered double sum over pairs in B_r: twice the canonical edge sum.
    let mut lhs = 0.0;
    let mut witness = None;
    let mut worst_term = 0.0;
    for e in g.oriented_edges(f)? {
        if !(in_r[e.upper] && in_r[e.lower]) {
            continue;
        }
        if e.grad == 0.0 {
            // Tied edges contribute zero regardless of orientation (the
            // convention infinity * 0 = 0 for p < 2 at zeros of f).
            continue;
        }
        let hi = *f.get(g, e.upper)?;
        let lo = *f.get(g, e.lower)?;
        let weight_term = match form {
            CaccioppoliForm::Max => hi.powf(p - 2.0),
            CaccioppoliForm::SumPowers => hi.powf(p - 2.0) + lo.powf(p - 2.0),
        };
        let term = 2.0 * e.weight * weight_term * e.grad * e.grad;
        if term > worst_term {
            worst_term = term;
            witness = Some((g.id(e.upper), g.id(e.lower)));
        }
        lhs += term;
    }

    let annulus: Vec<usize> =
        ball_big.iter().copied().filter(|&i| !in_r[i]).collect();
    let rhs_body = g.lp_power_sum(f, p, None, Some(&annulus))?;
    let gap = big_r - r;
    let constant_used = match form {
        CaccioppoliForm::Max => caccioppoli_constant(p),
        CaccioppoliForm::SumPowers => 2.0 * caccioppoli_constant(p),
    };
    let rhs = constant_used * rhs_body / (gap * gap);
    let ratio = if rhs_body > 0.0 {
        lhs * gap * gap / rhs_body
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(InequalityAudit {
        lhs,
        rhs_body,
        rhs,
        ratio,
        constant_used,
        pass: lhs <= rhs + tol * (1.0 + rhs.abs()),
        witness,
    })
}

/// Audits the key estimate: for every non-negative subharmonic `f` and
/// bounded `φ >= 0`,
/// `sum_{E_f} mu f^(p-2)(e+) φ²(e-) |∇f|²
///    <= C sum_{E_f} mu f^(p-1)(e+) φ(e-) ∇f |∇φ|`
/// with `C = 2/((p-1) ∧ 1)`.
pub fn key_estimate_audit(
    g: &WeightedGraph<f64>,
    f: &ScalarField<f64>,
    phi: &ScalarField<f64>,
    p: f64,
    tol: f64,
) -> Result<InequalityAudit> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::BadExponent(format!("need p in (1, inf), got {p}")));
    }
    // The support of φ, one hop of slack included, must consist of fully
    // known rows.
    for i in phi.support() {
        if !g.is_complete(i) {
            return Err(Error::SupportEscapesWindow(g.id(i)));
        }
        let v = *phi.get(g, i)?;
        if v < -tol {
            return Err(Error::NegativeFunction(v, g.id(i)));
        }
    }
    let mut lhs = 0.0;
    let mut rhs_body = 0.0;
    let mut witness = None;
    let mut worst = 0.0;
    for e in g.oriented_edges(f)? {
        if e.grad == 0.0 {
            continue;
        }
        let fu = *f.get(g, e.upper)?;
        if fu < 0.0 {
            return Err(Error::NegativeFunction(fu, g.id(e.upper)));
        }
        if fu == 0.0 {
            continue; // f >= 0 forces grad = 0 here; guards the power.
        }
        let phi_lo = *phi.get(g, e.lower)?;
        let phi_hi = *phi.get(g, e.upper)?;
        let term = e.weight * fu.powf(p - 2.0) * phi_lo * phi_lo * e.grad * e.grad;
        lhs += term;
        if term > worst {
            worst = term;
            witness = Some((g.id(e.upper), g.id(e.lower)));
        }
        rhs_body +=
            e.weight * fu.powf(p - 1.0) * phi_lo * e.grad * (phi_hi - phi_lo).abs();
    }
    let constant_used = key_estimate_constant(p);
    let rhs = constant_used * rhs_body;
    let ratio = if rhs_body > 0.0 {
        lhs / rhs_body
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(InequalityAudit {
        lhs,
        rhs_body,
        rhs,
        ratio,
        constant_used,
        pass: lhs <= rhs + tol * (1.0 + rhs.abs()),
        witness,
    })
}

/// Two-sided values of the edge mean-value inequalities for
/// `0 <= a <= b`:
/// (a) `b^(p-1) - a^(p-1) >= 1/2 (a^(p-2) + b^(p-2)) (b - a)` for `p >= 2`,
/// (b) `b^(p-1) - a^(p-1) >= ((p-1) ∧ 1) b^(p-2) (b - a)` for `p > 1`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MviCheck {
    pub lhs: f64,
    pub bound_half_sum: Option<f64>,
    pub bound_max_power: f64,
    pub holds_half_sum: Option<bool>,
    pub holds_max_power: bool,
}

pub fn mvi_check(a: f64, b: f64, p: f64) -> Result<MviCheck> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::BadExponent(format!("need p > 1, got {p}")));
    }
    if !(0.0 <= a && a <= b) {
        return Err(Error::BadExponent(format!("need 0 <= a <= b, got a={a}, b={b}")));
    }
    let tol = 1e-9;
    if a == b {
        return Ok(MviCheck {
            lhs: 0.0,
            bound_half_sum: (p >= 2.0).then_some(0.0),
            bound_max_power: 0.0,
            holds_half_sum: (p >= 2.0).then_some(true),
            holds_max_power: true,
        });
    }
    let lhs = b.powf(p - 1.0) - a.powf(p - 1.0);
    let bound_b = (p - 1.0).min(1.0) * b.powf(p - 2.0) * (b - a);
    let holds_b = lhs >= bound_b - tol * (lhs.abs() + bound_b.abs());
    let (bound_a, holds_a) = if p >= 2.0 {
        let ba = 0.5 * (a.powf(p - 2.0) + b.powf(p - 2.0)) * (b - a);
        (Some(ba), Some(lhs >= ba - tol * (lhs.abs() + ba.abs())))
    } else {
        (None, None)
    };
    Ok(MviCheck {
        lhs,
        bound_half_sum: bound_a,
        bound_max_power: bound_b,
        holds_half_sum: holds_a,
        holds_max_power: holds_b,
    })
}

/// Randomized grid audit of the mean-value inequalities.
#[derive(Clone, Debug, Serialize)]
pub struct MviGridReport {
    pub samples: usize,
    pub seed: u64,
    pub violations_half_sum: usize,
    pub violations_max_power: usize,
    pub checked_half_sum: usize,
}

pub fn mvi_grid_audit(samples: usize, seed: u64) -> MviGridReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations_a = 0;
    let mut violations_b = 0;
    let mut checked_a = 0;
    for _ in 0..samples {
        let x: f64 = rng.gen_range(0.0..1e6);
        let y: f64 = rng.gen_range(0.0..1e6);
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        let p: f64 = rng.gen_range(1.0..10.0) + 1e-12;
        let check = mvi_check(a, b, p).expect("grid samples satisfy the preconditions");
        if !check.holds_max_power {
            violations_b += 1;
        }
        if let Some(ok) = check.holds_half_sum {
            checked_a += 1;
            if !ok {
                violations_a += 1;
            }
        }
    }
    MviGridReport {
        samples,
        seed,
        violations_half_sum: violations_a,
        violations_max_power: violations_b,
        checked_half_sum: checked_a,
    }
}

/// Least-squares growth fit: `f(x) <= C g(ρ_1(x))^β` with `β` fitted in
/// log-log coordinates. Passing needs `β <= 1 - margin`; the envelope
/// constant is the smallest `C` making the bound pointwise.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub beta: f64,
    pub envelope_c: f64,
    pub points: usize,
    pub margin: f64,
    pub passes: bool,
}

pub fn growth_classifier(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    f: &ScalarField<f64>,
    growth: impl Fn(f64) -> f64,
    margin: f64,
) -> Result<GrowthFit> {
    let mut pts = Vec::new();
    for i in 0..g.n_vertices() {
        let fv = *f.get(g, i)?;
        let gv = growth(metric.to_base(i).max(1.0));
        if fv > 0.0 && gv > 0.0 {
            pts.push((gv.ln(), fv.ln()));
        }
    }
    if pts.len() < 2 {
        // Degenerate data (for example f identically zero) passes with any
        // exponent.
        return Ok(GrowthFit { beta: 0.0, envelope_c: 0.0, points: pts.len(), margin, passes: true });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let beta = if denom.abs() < 1e-300 { 0.0 } else { (n * sxy - sx * sy) / denom };
    let mut envelope_c = 0.0f64;
    for i in 0..g.n_vertices() {
        let fv = *f.get(g, i)?;
        let gv = growth(metric.to_base(i).max(1.0));
        if gv > 0.0 {
            envelope_c = envelope_c.max(fv / gv.powf(beta));
        }
    }
    Ok(GrowthFit {
        beta,
        envelope_c,
        points: pts.len(),
        margin,
        passes: beta <= 1.0 - margin && envelope_c.is_finite(),
    })
}

/// Moment partial sums `sum ρ_1^q m` in distance order.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub q: f64,
    pub partial_sums: Vec<f64>,
    pub bounded: bool,
}

pub fn moment(g: &WeightedGraph<f64>, metric: &Metric, q: f64) -> Result<MomentReport> {
    let mut order: Vec<usize> = (0..g.n_vertices()).collect();
    order.sort_by(|&a, &b| {
        metric
            .to_base(a)
            .partial_cmp(&metric.to_base(b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut sums = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += metric.to_base(i).max(1.0).powf(q) * g.measure(i);
        sums.push(acc);
    }
    let bounded = bounded_partial_sums(&sums);
    Ok(MomentReport { q, partial_sums: sums, bounded })
}

/// Decay probe: values `r^{-β} log m(B_{r+1} \ B_r)` over the radius
/// grid, with the tail maximum as the limsup estimate. Empty annuli count
/// as minus infinity (the strongest possible decay) and are skipped in the
/// estimate.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub beta: f64,
    pub radii: Vec<f64>,
    pub annulus_masses: Vec<f64>,
    pub values: Vec<f64>,
    pub limsup_estimate: f64,
    pub negative: bool,
}

pub fn decay_probe(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    beta: f64,
    radii: &[f64],
) -> Result<DecayReport> {
    if beta <= 0.0 {
        return Err(Error::BadExponent(format!("need beta > 0, got {beta}")));
    }
    let mut masses = Vec::new();
    let mut values = Vec::new();
    let mut kept_radii = Vec::new();
    for &r in radii {
        if r <= 0.0 {
            continue;
        }
        let inner = metric.ball(g, r)?;
        let outer = metric.ball(g, r + 1.0)?;
        let inner_mask = {
            let mut v = vec![false; g.n_vertices()];
            for &i in &inner {
                v[i] = true;
            }
            v
        };
        let mass: f64 = outer
            .iter()
            .filter(|&&i| !inner_mask[i])
            .map(|&i| g.measure(i))
            .sum();
        masses.push(mass);
        values.push(if mass > 0.0 { mass.ln() / r.powf(beta) } else { f64::NEG_INFINITY });
        kept_radii.push(r);
    }
    let tail = &values[values.len() / 2..];
    let limsup = tail
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayReport {
        beta,
        radii: kept_radii,
        annulus_masses: masses,
        values,
        limsup_estimate: limsup,
        negative: limsup < 0.0,
    })
}

/// One instance of the calibration/golden suite.
pub struct GoldenInstance {
    pub name: &'static str,
    pub graph: WeightedGraph<f64>,
    pub metric: Metric,
    pub field: ScalarField<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub exponents: Vec<f64>,
}

/// The golden suite: the integers with `f = x_+` and doubled measure
/// under the natural metric, and the finite-volume line with the absolute
/// value of its harmonic function under its path metric.
pub fn golden_suite() -> Vec<GoldenInstance> {
    let mut suite = Vec::new();
    {
        let g = crate::generate::Family::Line { mu: 1.0, m: 2.0 }.window(130, 1);
        let metric = Metric::natural(&g, VertexId(0)).expect("line window is connected");
        let field = ScalarField::from_fn(&g, |id| (id.0.max(0)) as f64);
        suite.push(GoldenInstance {
            name: "line-positive-part",
            graph: g,
            metric,
            field,
            pairs: vec![(5.0, 20.0), (10.0, 41.0), (20.0, 60.0), (10.0, 100.0), (30.0, 120.0)],
            exponents: vec![1.5, 2.0, 3.0],
        });
    }
    {
        let (g, f) = crate::generate::finite_volume_example(80);
        let metric = Metric::delta(&g, VertexId(0)).expect("window is connected");
        let field = f.map(|v| v.abs());
        suite.push(GoldenInstance {
            name: "finite-volume-abs",
            graph: g,
            metric,
            field,
            pairs: vec![(0.3, 1.5), (0.5, 1.8), (0.3, 1.8), (0.4, 1.6)],
            exponents: vec![1.5, 2.0, 3.0],
        });
    }
    suite
}

/// Calibration result: the worst constant-free ratio per instance and
/// overall, for both audited inequalities.
#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    pub per_instance: Vec<(String, f64)>,
    pub max_ratio: f64,
    pub all_pass: bool,
}

/// Runs the Caccioppoli audit over the whole golden suite and reports the
/// worst constant-free ratio. The frozen constant must dominate it.
pub fn calibrate_caccioppoli(tol: f64) -> Result<CalibrationReport> {
    let mut per_instance = Vec::new();
    let mut max_ratio = 0.0f64;
    let mut all_pass = true;
    for inst in golden_suite() {
        let mut inst_max = 0.0f64;
        for &p in &inst.exponents {
            let audits = caccioppoli_sweep(
                &inst.graph,
                &inst.metric,
                &inst.field,
                p,
                &inst.pairs,
                CaccioppoliForm::Max,
                tol,
            )?;
            for a in audits {
                inst_max = inst_max.max(a.ratio);
                all_pass &= a.pass;
            }
            if p >= 2.0 {
                let audits = caccioppoli_sweep(
                    &inst.graph,
                    &inst.metric,
                    &inst.field,
                    p,
                    &inst.pairs,
                    CaccioppoliForm::SumPowers,
                    tol,
                )?;
                for a in audits {
                    all_pass &= a.pass;
                }
            }
        }
        per_instance.push((inst.name.to_string(), inst_max));
        max_ratio = max_ratio.max(inst_max);
    }
    Ok(CalibrationReport { per_instance, max_ratio, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::Family;
    use approx::assert_relative_eq;

    fn v(i: i64) -> VertexId {
        VertexId(i)
    }

    fn line_abs_instance() -> (WeightedGraph<f64>, Metric, ScalarField<f64>) {
        let g = Family::Line { mu: 1.0, m: 1.0 }.window(300, 1);
        let d = Metric::delta(&g, v(0)).unwrap();
        let f = ScalarField::from_fn(&g, |id| id.0.abs() as f64);
        (g, d, f)
    }

    #[test]
    fn karp_profile_on_absolute_value() {
        // v(r) ~ (4 sqrt(2)/3) r³: fitted exponent 3, convergent integral.
        let (g, d, f) = line_abs_instance();
        let radii: Vec<f64> = (20..=200).step_by(10).map(|k| k as f64).collect();
        let prof = karp_profile(&g, &d, &f, 2.0, &radii, 1e-9).unwrap();
        assert!((prof.fitted_exponent - 3.0).abs() < 0.1, "slope {}", prof.fitted_exponent);
        assert_eq!(prof.verdict, IntegralVerdict::ConvergentEvidence);
        assert!(prof.v.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn karp_profile_bounded_function_on_finite_volume() {
        let (g, _) = finite_volume_example(80);
        let d = Metric::delta(&g, v(0)).unwrap();
        let ones = ScalarField::constant(&g, 1.0);
        let radii: Vec<f64> = (4..=20).map(|k| k as f64 * 0.1).collect();
        let prof = karp_profile(&g, &d, &ones, 2.0, &radii, 1e-9).unwrap();
        assert_eq!(prof.verdict, IntegralVerdict::DivergentEvidence);
    }

    #[test]
    fn karp_profile_zero_function_diverges_by_convention() {
        let (g, d, _) = line_abs_instance();
        let zero = ScalarField::constant(&g, 0.0);
        let radii: Vec<f64> = (20..=100).step_by(20).map(|k| k as f64).collect();
        let prof = karp_profile(&g, &d, &zero, 2.0, &radii, 1e-9).unwrap();
        assert_eq!(prof.verdict, IntegralVerdict::DivergentEvidence);
        assert!(prof.integral_estimate.is_infinite());
    }

    #[test]
    fn karp_rejects_bad_inputs() {
        let (g, d, f) = line_abs_instance();
        let radii = [10.0, 20.0];
        assert!(matches!(
            karp_profile(&g, &d, &f, 1.0, &radii, 1e-9),
            Err(Error::BadExponent(_))
        ));
        let neg = ScalarField::from_fn(&g, |id| id.0 as f64);
        assert!(matches!(
            karp_profile(&g, &d, &neg, 2.0, &radii, 1e-9),
            Err(Error::NegativeFunction(..))
        ));
        // Superharmonic but not subharmonic: -|x| fails (negative too);
        // use a strict local max instead.
        let bump = ScalarField::from_fn(&g, |id| if id.0 == 0 { 1.0 } else { 0.5 });
        assert!(matches!(
            karp_profile(&g, &d, &bump, 2.0, &radii, 1e-9),
            Err(Error::NotSubharmonic(..))
        ));
        // Natural metric on the unit-measure line is not intrinsic.
        let nat = Metric::natural(&g, v(0)).unwrap();
        assert!(matches!(
            karp_profile(&g, &nat, &f, 2.0, &radii, 1e-9),
            Err(Error::NotIntrinsic(_))
        ));
    }

    #[test]
    fn weighted_lp_constant_on_finite_volume_implies_constancy() {
        let (g, _) = finite_volume_example(60);
        let d = Metric::delta(&g, v(0)).unwrap();
        let c = ScalarField::constant(&g, 3.0);
        let rep = weighted_lp_test(&g, &d, &c, 2.0, 1e-9).unwrap();
        assert_eq!(rep.verdict, WeightedLpVerdict::ConstancyImplied);

        // The harmonic example at p = 2 blows up: no conclusion.
        let (g, f) = finite_volume_example(60);
        let fa = f.map(|x| x.abs());
        let rep = weighted_lp_test(&g, &d, &fa, 2.0, 1e-9).unwrap();
        assert_eq!(rep.verdict, WeightedLpVerdict::NoConclusion);
        assert!(rep.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn weighted_lp_constant_with_infinite_weighted_measure() {
        // Measure m = 2(|x|+1) keeps the natural metric intrinsic while
        // sum m rho_1^{-2} ~ sum 1/|x| diverges: a nonzero constant is
        // not weighted-integrable, which is the other branch of the
        // dichotomy (constants are the only candidates and they fail).
        use crate::graph::GraphBuilder;
        let n = 400i64;
        let mut b = GraphBuilder::new();
        for i in -n..=n {
            b.vertex(v(i), 2.0 * (i.abs() + 1) as f64).unwrap();
        }
        for i in -n..n {
            b.edge(v(i), v(i + 1), 1.0).unwrap();
        }
        b.incomplete(v(-n));
        b.incomplete(v(n));
        let g = b.build().unwrap();
        let nat = Metric::natural(&g, v(0)).unwrap();
        let c = ScalarField::constant(&g, 3.0);
        let rep = weighted_lp_test(&g, &nat, &c, 2.0, 1e-9).unwrap();
        assert_eq!(rep.verdict, WeightedLpVerdict::NoConclusion);
    }

    #[test]
    fn mvi_hand_examples() {
        let c = mvi_check(1.0, 2.0, 3.0).unwrap();
        assert_relative_eq!(c.lhs, 3.0);
        assert_relative_eq!(c.bound_half_sum.unwrap(), 1.5);
        assert!(c.holds_half_sum.unwrap());
        assert!(c.holds_max_power);

        let c = mvi_check(0.0, 1.0, 1.5).unwrap();
        assert_relative_eq!(c.lhs, 1.0);
        assert_relative_eq!(c.bound_max_power, 0.5);
        assert!(c.holds_max_power);
        assert!(c.bound_half_sum.is_none());

        let c = mvi_check(4.0, 4.0, 2.5).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.holds_max_power);

        // p = 2 gives equality in (a).
        let c = mvi_check(0.5, 2.5, 2.0).unwrap();
        assert_relative_eq!(c.lhs, c.bound_half_sum.unwrap());

        assert!(mvi_check(2.0, 1.0, 2.0).is_err());
        assert!(matches!(mvi_check(0.0, 1.0, 1.0), Err(Error::BadExponent(_))));
    }

    #[test]
    fn mvi_grid_has_no_violations() {
        let rep = mvi_grid_audit(20_000, 424242);
        assert_eq!(rep.violations_half_sum, 0);
        assert_eq!(rep.violations_max_power, 0);
        assert!(rep.checked_half_sum > 0);
    }

    #[test]
    fn caccioppoli_constant_field_passes_trivially() {
        let suite = golden_suite();
        let inst = &suite[0];
        let c = ScalarField::constant(&inst.graph, 5.0);
        let audit = caccioppoli_audit(
            &inst.graph,
            &inst.metric,
            &c,
            2.0,
            10.0,
            41.0,
            CaccioppoliForm::Max,
            1e-9,
        )
        .unwrap();
        assert_eq!(audit.lhs, 0.0);
        assert!(audit.pass);
    }

    #[test]
    fn caccioppoli_hand_computation_on_the_line() {
        // f = x_+, m = 2, p = 2, r = 10, R = 41:
        // lhs = 2 * 10, rhs body = 2 * sum_{k=11}^{41} k².
        let suite = golden_suite();
        let inst = &suite[0];
        let audit = caccioppoli_audit(
            &inst.graph,
            &inst.metric,
            &inst.field,
            2.0,
            10.0,
            41.0,
            CaccioppoliForm::Max,
            1e-9,
        )
        .unwrap();
        assert_relative_eq!(audit.lhs, 20.0);
        let oracle: f64 = (11..=41).map(|k| (k * k) as f64 * 2.0).sum();
        assert_relative_eq!(audit.rhs_body, oracle, max_relative = 1e-12);
        assert!(audit.pass);
        assert_relative_eq!(audit.ratio, 20.0 * 31.0 * 31.0 / oracle, max_relative = 1e-12);
    }

    #[test]
    fn caccioppoli_rejects_tight_radii() {
        let suite = golden_suite();
        let inst = &suite[0];
        // s = 1 on the natural metric: r = 10, R = 13 violates r < R - 3s.
        let res = caccioppoli_audit(
            &inst.graph,
            &inst.metric,
            &inst.field,
            2.0,
            10.0,
            13.0,
            CaccioppoliForm::Max,
            1e-9,
        );
        assert!(matches!(res, Err(Error::RadiiViolateJumpGap { .. })));
    }

    #[test]
    fn caccioppoli_calibration_passes_with_frozen_constant() {
        let report = calibrate_caccioppoli(1e-9).unwrap();
        assert!(report.all_pass);
        assert!(
            report.max_ratio <= CACCIOPPOLI_GOLDEN_MAX_RATIO * 1.01,
            "regression: observed {} vs frozen {}",
            report.max_ratio,
            CACCIOPPOLI_GOLDEN_MAX_RATIO
        );
        // The frozen constant truly dominates the observations.
        assert!(CACCIOPPOLI_GOLDEN_MAX_RATIO < caccioppoli_constant(3.0));
    }

    #[test]
    fn key_estimate_on_golden_suite() {
        for inst in golden_suite() {
            let s = inst.metric.jump_size(&inst.graph);
            for &p in &inst.exponents {
                for &(r, big_r) in &inst.pairs {
                    let phi = inst.metric.cutoff(&inst.graph, r + s, big_r - s).unwrap();
                    let audit =
                        key_estimate_audit(&inst.graph, &inst.field, &phi, p, 1e-9).unwrap();
                    assert!(
                        audit.pass,
                        "{} p={p} r={r} R={big_r}: lhs {} rhs {}",
                        inst.name, audit.lhs, audit.rhs
                    );
                }
            }
        }
    }

    #[test]
    fn key_estimate_zero_cases() {
        let suite = golden_suite();
        let inst = &suite[0];
        let zero = ScalarField::constant(&inst.graph, 0.0);
        let audit = key_estimate_audit(&inst.graph, &inst.field, &zero, 2.0, 1e-9).unwrap();
        assert_eq!(audit.lhs, 0.0);
        assert_eq!(audit.rhs, 0.0);
        assert!(audit.pass);

        let c = ScalarField::constant(&inst.graph, 2.0);
        let phi = inst.metric.cutoff(&inst.graph, 5.0, 20.0).unwrap();
        let audit = key_estimate_audit(&inst.graph, &c, &phi, 2.0, 1e-9).unwrap();
        assert_eq!(audit.lhs, 0.0);
        assert_eq!(audit.rhs, 0.0);
        assert!(audit.pass);
    }

    #[test]
    fn key_estimate_rejects_support_on_the_rim() {
        let g = Family::Line { mu: 1.0, m: 2.0 }.window(10, 1);
        let f = ScalarField::from_fn(&g, |id| id.0.max(0) as f64);
        // A test function supported up to the rim vertex.
        let phi = ScalarField::from_fn(&g, |id| if id.0.abs() <= 11 { 1.0 } else { 0.0 });
        assert!(matches!(
            key_estimate_audit(&g, &f, &phi, 2.0, 1e-9),
            Err(Error::SupportEscapesWindow(_))
        ));
    }

    #[test]
    fn orientation_ties_contribute_nothing() {
        // A field with many ties: audited sums agree under both tie
        // orientations because tied edges carry zero gradient.
        let g = Family::Line { mu: 1.0, m: 2.0 }.window(30, 1);
        // Plateau of ties around the origin, linear beyond: subharmonic.
        let f = ScalarField::from_fn(&g, |id| ((id.0.abs() - 10).max(0)) as f64);
        let nat = Metric::natural(&g, v(0)).unwrap();
        let audit = caccioppoli_audit(&g, &nat, &f, 2.0, 15.0, 25.0, CaccioppoliForm::Max, 1e-9)
            .unwrap();
        // Flip ties by negating ids (relabels tie orientation) and re-audit.
        let mut b = crate::graph::GraphBuilder::new();
        for i in 0..g.n_vertices() {
            b.vertex(v(-g.id(i).0), *g.measure(i)).unwrap();
        }
        for e in g.edges() {
            b.edge(v(-g.id(e.u).0), v(-g.id(e.v).0), e.weight).unwrap();
        }
        for i in 0..g.n_vertices() {
            if !g.is_complete(i) {
                b.incomplete(v(-g.id(i).0));
            }
        }
        let g2 = b.build().unwrap();
        let f2 = ScalarField::from_fn(&g2, |id| ((id.0.abs() - 10).max(0)) as f64);
        let nat2 = Metric::natural(&g2, v(0)).unwrap();
        let audit2 =
            caccioppoli_audit(&g2, &nat2, &f2, 2.0, 15.0, 25.0, CaccioppoliForm::Max, 1e-9)
                .unwrap();
        assert_relative_eq!(audit.lhs, audit2.lhs, max_relative = 1e-12);
        assert_relative_eq!(audit.rhs_body, audit2.rhs_body, max_relative = 1e-12);
    }

    #[test]
    fn growth_classifier_examples() {
        let (g, d, _) = line_abs_instance();
        let ones = ScalarField::constant(&g, 1.0);
        let fit = growth_classifier(&g, &d, &ones, |r| r * r, GROWTH_MARGIN).unwrap();
        assert!(fit.passes, "beta {}", fit.beta);

        // f = rho_1^{3/2} against g = r²: beta = 3/4.
        let f = ScalarField::from_fn(&g, |id| {
            let i = g.index(id).unwrap();
            d.to_base(i).max(1.0).powf(1.5)
        });
        let fit = growth_classifier(&g, &d, &f, |r| r * r, GROWTH_MARGIN).unwrap();
        assert_relative_eq!(fit.beta, 0.75, max_relative = 1e-9);
        assert!(fit.passes);
        assert!(fit.envelope_c <= 1.0 + 1e-9);

        // Exponential growth against a polynomial: fails.
        let f = ScalarField::from_fn(&g, |id| {
            let i = g.index(id).unwrap();
            (2.0f64).powf(d.to_base(i).max(1.0).min(60.0))
        });
        let fit = growth_classifier(&g, &d, &f, |r| r * r * r, GROWTH_MARGIN).unwrap();
        assert!(!fit.passes, "beta {}", fit.beta);
    }

    #[test]
    fn moment_and_decay_on_finite_volume() {
        let (g, _) = finite_volume_example(60);
        let d = Metric::delta(&g, v(0)).unwrap();
        // q = 0: total mass, finite.
        let rep = moment(&g, &d, 0.0).unwrap();
        assert!(rep.bounded);
        let total: f64 = (0..g.n_vertices()).map(|i| g.measure(i)).sum();
        assert_relative_eq!(*rep.partial_sums.last().unwrap(), total, max_relative = 1e-12);

        let decay = decay_probe(&g, &d, 1.0, &[0.4, 0.6, 0.8, 1.0]).unwrap();
        assert!(decay.negative, "limsup {}", decay.limsup_estimate);

        // Finite graph: every moment is finite.
        let rep = moment(&g, &d, 3.0).unwrap();
        assert!(rep.partial_sums.last().unwrap().is_finite());
    }
}

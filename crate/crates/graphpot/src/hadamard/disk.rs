//! The Poincaré disk (curvature -1 hyperbolic plane) with Möbius gyrovector
//! operations, exponential/logarithm maps, and a Karcher-descent barycenter.

use crate::error::{Error, Result};

pub type DiskPoint = [f64; 2];

/// Gradient-norm stopping threshold of the Karcher descent.
pub const KARCHER_GRAD_TOL: f64 = 1e-12;

fn dot(a: DiskPoint, b: DiskPoint) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: DiskPoint) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: DiskPoint, s: f64) -> DiskPoint {
    [a[0] * s, a[1] * s]
}

fn add(a: DiskPoint, b: DiskPoint) -> DiskPoint {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn check(p: DiskPoint) -> Result<()> {
    if !p.iter().all(|c| c.is_finite()) || norm(p) >= 1.0 {
        return Err(Error::PointOutsideSpace(format!(
            "({}, {}) is not inside the unit disk",
            p[0], p[1]
        )));
    }
    Ok(())
}

/// Möbius addition in the unit ball.
pub fn mobius_add(u: DiskPoint, v: DiskPoint) -> DiskPoint {
    let uv = dot(u, v);
    let nu2 = dot(u, u);
    let nv2 = dot(v, v);
    let denom = 1.0 + 2.0 * uv + nu2 * nv2;
    let a = (1.0 + 2.0 * uv + nv2) / denom;
    let b = (1.0 - nu2) / denom;
    add(scale(u, a), scale(v, b))
}

fn atanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// Hyperbolic distance: `2 artanh |(-u) ⊕ v|`.
pub fn distance(u: DiskPoint, v: DiskPoint) -> f64 {
    let w = mobius_add(scale(u, -1.0), v);
    let n = norm(w).min(1.0 - 1e-16);
    2.0 * atanh(n)
}

/// Tangent vector at `x` pointing to `y`, normalized so its Euclidean
/// length is the hyperbolic distance `d(x,y)`.
pub fn log_map(x: DiskPoint, y: DiskPoint) -> DiskPoint {
    let w = mobius_add(scale(x, -1.0), y);
    let n = norm(w);
    if n < 1e-300 {
        return [0.0, 0.0];
    }
    scale(w, 2.0 * atanh(n.min(1.0 - 1e-16)) / n)
}

/// Geodesic from `x` in direction `v`, reaching hyperbolic distance `|v|`
/// at unit time; inverse of [`log_map`].
pub fn exp_map(x: DiskPoint, v: DiskPoint) -> DiskPoint {
    let n = norm(v);
    if n < 1e-300 {
        return x;
    }
    let t = (n / 2.0).tanh();
    let out = mobius_add(x, scale(v, t / n));
    // Guard against rounding pushing the point onto the boundary.
    let on = norm(out);
    if on >= 1.0 {
        scale(out, (1.0 - 1e-15) / on)
    } else {
        out
    }
}

pub fn geodesic(x: DiskPoint, y: DiskPoint, t: f64) -> DiskPoint {
    exp_map(x, scale(log_map(x, y), t))
}

/// Karcher barycenter: descend the variance along the tangent mean with
/// step 1/2 until the mean's norm drops below the tolerance.
pub fn barycenter(atoms: &[(DiskPoint, f64)]) -> Result<DiskPoint> {
    if atoms.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    for (p, _) in atoms {
        check(*p)?;
    }
    let mut x = atoms
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap()
        .0;
    for _ in 0..100_000 {
        let mut mean = [0.0, 0.0];
        for &(p, w) in atoms {
            mean = add(mean, scale(log_map(x, p), w));
        }
        if norm(mean) <= KARCHER_GRAD_TOL {
            return Ok(x);
        }
        x = exp_map(x, scale(mean, 0.5));
    }
    Err(Error::SolverFailure("Karcher descent did not converge".into()))
}

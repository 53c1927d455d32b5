//! Heat semigroup probes `e^{-tL}` on finite sets.
//!
//! The generator is the Dirichlet restriction of the Laplacian to the
//! given set: the equation runs on the set, everything outside is frozen
//! to zero. Mid-size sets go through dense scaling-and-squaring; larger
//! ones fall back to classical Runge-Kutta stepping with step-doubling
//! refinement on the sparse operator.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ScalarField, VertexId, WeightedGraph};
use crate::potential::Exhaustion;

/// Above this set size the dense matrix exponential is replaced by
/// time stepping.
pub const DENSE_EXPM_LIMIT: usize = 2048;

fn free_indices(g: &WeightedGraph<f64>, set: &[VertexId]) -> Result<Vec<usize>> {
    let mut free: Vec<usize> = set.iter().map(|&id| g.index(id)).collect::<Result<_>>()?;
    free.sort_unstable();
    free.dedup();
    for &x in &free {
        if !g.is_complete(x) {
            return Err(Error::NeighborOutsideWindow { vertex: g.id(x), neighbor: None });
        }
    }
    Ok(free)
}

/// `e^{-tL} f` on `set`, Dirichlet condition outside. The returned field
/// holds the evolved values on `set` and zero elsewhere.
pub fn heat_semigroup_apply(
    g: &WeightedGraph<f64>,
    set: &[VertexId],
    t: f64,
    f: &ScalarField<f64>,
) -> Result<ScalarField<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NonPositiveTime(t));
    }
    let free = free_indices(g, set)?;
    let mut v: Vec<f64> = Vec::with_capacity(free.len());
    for &x in &free {
        v.push(*f.get(g, x)?);
    }
    let evolved = if t == 0.0 {
        v
    } else if free.len() <= DENSE_EXPM_LIMIT {
        expm_dense(g, &free, t, &v)
    } else {
        expm_stepping(g, &free, t, &v)
    };
    let mut out = ScalarField::constant(g, 0.0);
    for (a, &x) in free.iter().enumerate() {
        out.set(x, evolved[a]);
    }
    Ok(out)
}

fn expm_dense(g: &WeightedGraph<f64>, free: &[usize], t: f64, v: &[f64]) -> Vec<f64> {
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n_vertices()];
    for (a, &x) in free.iter().enumerate() {
        pos[x] = a;
    }
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (idx, &x) in free.iter().enumerate() {
        let m = *g.measure(x);
        let mut diag = 0.0;
        for &(y, w) in g.neighbors(x) {
            diag += w;
            if pos[y] != usize::MAX {
                a[(idx, pos[y])] += t * w / m;
            }
        }
        a[(idx, idx)] -= t * diag / m;
    }
    let e = a.exp();
    let vin = DMatrix::from_column_slice(k, 1, v);
    let out = e * vin;
    out.column(0).iter().copied().collect()
}

/// Classical fourth-order stepping on `v' = -Lv` with step doubling until
/// two refinements agree to 1e-12.
pub(crate) fn expm_stepping(g: &WeightedGraph<f64>, free: &[usize], t: f64, v: &[f64]) -> Vec<f64> {
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n_vertices()];
    for (a, &x) in free.iter().enumerate() {
        pos[x] = a;
    }
    // Sparse rows of -L restricted to the free set.
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(k);
    let mut max_rate = 0.0f64;
    for &x in free.iter() {
        let m = *g.measure(x);
        let mut diag = 0.0;
        let mut offs = Vec::new();
        for &(y, w) in g.neighbors(x) {
            diag += w / m;
            if pos[y] != usize::MAX {
                offs.push((pos[y], w / m));
            }
        }
        max_rate = max_rate.max(diag);
        rows.push((-diag, offs));
    }
    let matvec = |x: &[f64], out: &mut [f64]| {
        for (i, (d, offs)) in rows.iter().enumerate() {
            let mut acc = d * x[i];
            for &(j, w) in offs {
                acc += w * x[j];
            }
            out[i] = acc;
        }
    };
    let run = |steps: usize| -> Vec<f64> {
        let dt = t / steps as f64;
        let mut y = v.to_vec();
        let mut k1 = vec![0.0; k];
        let mut k2 = vec![0.0; k];
        let mut k3 = vec![0.0; k];
        let mut k4 = vec![0.0; k];
        let mut tmp = vec![0.0; k];
        for _ in 0..steps {
            matvec(&y, &mut k1);
            for i in 0..k {
                tmp[i] = y[i] + 0.5 * dt * k1[i];
            }
            matvec(&tmp, &mut k2);
            for i in 0..k {
                tmp[i] = y[i] + 0.5 * dt * k2[i];
            }
            matvec(&tmp, &mut k3);
            for i in 0..k {
                tmp[i] = y[i] + dt * k3[i];
            }
            matvec(&tmp, &mut k4);
            for i in 0..k {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    };
    // Stability of RK4 needs |lambda| dt below ~2.7; rates lie in
    // [0, 2 max_rate].
    let mut steps = ((t * max_rate).ceil() as usize).max(8);
    let mut current = run(steps);
    for _ in 0..6 {
        let finer = run(steps * 2);
        let diff = current
            .iter()
            .zip(finer.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        current = finer;
        steps *= 2;
        if diff <= 1e-12 {
            break;
        }
    }
    current
}

/// Stochastic-completeness probe along an exhaustion: the sequence
/// `e^{-tL_n} 1 (o)`, which is non-decreasing in `n` and at most 1.
#[derive(Clone, Debug, Serialize)]
pub struct HeatProbe {
    pub t: f64,
    pub values: Vec<f64>,
    pub monotone: bool,
}

pub fn stochastic_completeness_probe(
    g: &WeightedGraph<f64>,
    ex: &Exhaustion,
    t: f64,
    o: VertexId,
) -> Result<HeatProbe> {
    let oi = g.index(o)?;
    let ones = ScalarField::constant(g, 1.0);
    let mut values = Vec::with_capacity(ex.len());
    for level in ex.levels() {
        if !level.contains(&oi) {
            return Err(Error::VertexOutsideSet(o));
        }
        let ids: Vec<VertexId> = level.iter().map(|&i| g.id(i)).collect();
        let evolved = heat_semigroup_apply(g, &ids, t, &ones)?;
        let p = *evolved.get(g, oi)?;
        debug_assert!(p <= 1.0 + 1e-9, "probe above one: {p}");
        values.push(p);
    }
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    Ok(HeatProbe { t, values, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::Family;
    use crate::graph::GraphBuilder;
    use approx::assert_relative_eq;

    fn v(i: i64) -> VertexId {
        VertexId(i)
    }

    #[test]
    fn zero_time_is_identity() {
        let g = Family::Line { mu: 1.0, m: 1.0 }.window(5, 1);
        let f = ScalarField::from_fn(&g, |id| (id.0 as f64).sin());
        let set: Vec<VertexId> = (-4..=4).map(v).collect();
        let out = heat_semigroup_apply(&g, &set, 0.0, &f).unwrap();
        for &id in &set {
            assert_eq!(out.at(&g, id).unwrap(), f.at(&g, id).unwrap());
        }
        assert!(matches!(
            heat_semigroup_apply(&g, &set, -1.0, &f),
            Err(Error::NonPositiveTime(_))
        ));
    }

    #[test]
    fn single_vertex_scalar_exponential() {
        // One free vertex attached to a grounded neighbor by weight w:
        // e^{-t w/m} f.
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 2.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.edge(v(0), v(1), 3.0).unwrap();
        let g = b.build().unwrap();
        let f = ScalarField::constant(&g, 1.0);
        let out = heat_semigroup_apply(&g, &[v(0)], 0.7, &f).unwrap();
        assert_relative_eq!(
            *out.at(&g, v(0)).unwrap(),
            (-0.7 * 1.5f64).exp(),
            max_relative = 1e-12
        );
        assert_eq!(*out.at(&g, v(1)).unwrap(), 0.0);
    }

    #[test]
    fn mass_conservation_on_finite_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let n = rng.gen_range(4..20);
            let mut b = GraphBuilder::new();
            for i in 0..n {
                b.vertex(v(i), rng.gen_range(0.1..2.0)).unwrap();
            }
            for i in 1..n {
                let j = rng.gen_range(0..i);
                b.edge(v(i), v(j), rng.gen_range(0.1..2.0)).unwrap();
            }
            let g = b.build().unwrap();
            let all: Vec<VertexId> = (0..n).map(v).collect();
            let ones = ScalarField::constant(&g, 1.0);
            for t in [0.1, 1.0, 10.0] {
                let out = heat_semigroup_apply(&g, &all, t, &ones).unwrap();
                for i in 0..g.n_vertices() {
                    assert_relative_eq!(*out.get(&g, i).unwrap(), 1.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn stepping_matches_dense() {
        let g = Family::Line { mu: 1.0, m: 1.0 }.window(30, 1);
        let set: Vec<VertexId> = (-25..=25).map(v).collect();
        let f = ScalarField::from_fn(&g, |id| if id.0 == 0 { 1.0 } else { 0.0 });
        let frees: Vec<usize> = set.iter().map(|&id| g.index(id).unwrap()).collect();
        let v0: Vec<f64> = frees.iter().map(|&i| *f.try_get(i).unwrap()).collect();
        let dense = super::expm_dense(&g, &frees, 1.3, &v0);
        let stepped = super::expm_stepping(&g, &frees, 1.3, &v0);
        for (a, b) in dense.iter().zip(stepped.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn probe_monotone_and_near_one_on_the_line() {
        let g = Family::Line { mu: 1.0, m: 1.0 }.window(55, 1);
        let hops: Vec<u32> = (10..=50).step_by(10).collect();
        let ex = Exhaustion::hop_balls(&g, v(0), &hops).unwrap();
        let probe = stochastic_completeness_probe(&g, &ex, 1.0, v(0)).unwrap();
        assert!(probe.monotone);
        for &p in &probe.values {
            assert!(p > 0.0 && p <= 1.0 + 1e-12);
        }
        assert!(*probe.values.last().unwrap() >= 0.99);
    }
}

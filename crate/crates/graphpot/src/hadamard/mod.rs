//! Hadamard-space targets for harmonic maps: Euclidean space, metric
//! trees, and the Poincaré disk.
//!
//! All three models share one interface: a distance, constant-speed
//! geodesics, and the barycenter of a finitely supported probability
//! measure (the unique variance minimizer; uniqueness is what global
//! non-positive curvature buys).

pub mod disk;
pub mod tree;

use serde::Serialize;

use crate::error::{Error, Result};

pub use tree::{MetricTree, TreePoint};

/// A point of one of the target models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Point {
    Euclidean(Vec<f64>),
    Tree(TreePoint),
    Disk([f64; 2]),
}

/// A Hadamard-space model.
pub enum Space {
    Euclidean(usize),
    Tree(MetricTree),
    Disk,
}

impl Space {
    pub fn model_name(&self) -> String {
        match self {
            Space::Euclidean(n) => format!("euclidean({n})"),
            Space::Tree(_) => "metric-tree".into(),
            Space::Disk => "poincare-disk".into(),
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (Space::Euclidean(n), Point::Euclidean(v)) => {
                if v.len() != *n {
                    return Err(Error::PointOutsideSpace(format!(
                        "dimension {} != {}",
                        v.len(),
                        n
                    )));
                }
                if !v.iter().all(|c| c.is_finite()) {
                    return Err(Error::PointOutsideSpace("non-finite coordinate".into()));
                }
                Ok(())
            }
            (Space::Tree(t), Point::Tree(p)) => t.normalize(*p).map(|_| ()),
            (Space::Disk, Point::Disk(p)) => disk::check(*p),
            _ => Err(Error::PointOutsideSpace(format!(
                "point does not match the {} model",
                self.model_name()
            ))),
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match (self, a, b) {
            (Space::Euclidean(_), Point::Euclidean(x), Point::Euclidean(y)) => {
                if x.len() != y.len() {
                    return Err(Error::PointOutsideSpace("dimension mismatch".into()));
                }
                Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            }
            (Space::Tree(t), Point::Tree(p), Point::Tree(q)) => {
                Ok(t.distance(t.normalize(*p)?, t.normalize(*q)?))
            }
            (Space::Disk, Point::Disk(p), Point::Disk(q)) => Ok(disk::distance(*p, *q)),
            _ => Err(Error::PointOutsideSpace("model mismatch".into())),
        }
    }

    /// Constant-speed geodesic: `geodesic(a,b,0) = a`, `geodesic(a,b,1) = b`.
    pub fn geodesic(&self, a: &Point, b: &Point, t: f64) -> Result<Point> {
        match (self, a, b) {
            (Space::Euclidean(_), Point::Euclidean(x), Point::Euclidean(y)) => {
                if x.len() != y.len() {
                    return Err(Error::PointOutsideSpace("dimension mismatch".into()));
                }
                Ok(Point::Euclidean(
                    x.iter().zip(y).map(|(a, b)| a * (1.0 - t) + b * t).collect(),
                ))
            }
            (Space::Tree(tr), Point::Tree(p), Point::Tree(q)) => {
                Ok(Point::Tree(tr.geodesic(tr.normalize(*p)?, tr.normalize(*q)?, t)))
            }
            (Space::Disk, Point::Disk(p), Point::Disk(q)) => {
                Ok(Point::Disk(disk::geodesic(*p, *q, t)))
            }
            _ => Err(Error::PointOutsideSpace("model mismatch".into())),
        }
    }

    /// Barycenter of a finitely supported probability measure: the unique
    /// minimizer of `y ↦ Σ w_i d²(y, y_i)`.
    pub fn barycenter(&self, nu: &PointMeasure) -> Result<Point> {
        if nu.atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        for (p, _) in &nu.atoms {
            self.check_point(p)?;
        }
        match self {
            Space::Euclidean(n) => {
                let mut acc = vec![0.0; *n];
                for (p, w) in &nu.atoms {
                    let Point::Euclidean(x) = p else { unreachable!("checked above") };
                    for (a, c) in acc.iter_mut().zip(x) {
                        *a += w * c;
                    }
                }
                Ok(Point::Euclidean(acc))
            }
            Space::Tree(t) => {
                let atoms: Vec<(TreePoint, f64)> = nu
                    .atoms
                    .iter()
                    .map(|(p, w)| {
                        let Point::Tree(tp) = p else { unreachable!("checked above") };
                        (*tp, *w)
                    })
                    .collect();
                Ok(Point::Tree(t.barycenter(&atoms)?))
            }
            Space::Disk => {
                let atoms: Vec<([f64; 2], f64)> = nu
                    .atoms
                    .iter()
                    .map(|(p, w)| {
                        let Point::Disk(d) = p else { unreachable!("checked above") };
                        (*d, *w)
                    })
                    .collect();
                Ok(Point::Disk(disk::barycenter(&atoms)?))
            }
        }
    }

    /// The variance functional `Σ w_i d²(z, y_i)`.
    pub fn variance(&self, nu: &PointMeasure, z: &Point) -> Result<f64> {
        let mut acc = 0.0;
        for (p, w) in &nu.atoms {
            acc += w * self.distance(z, p)?.powi(2);
        }
        Ok(acc)
    }

    /// First moment `Σ w_i d(z, y_i)`.
    pub fn first_moment(&self, nu: &PointMeasure, z: &Point) -> Result<f64> {
        let mut acc = 0.0;
        for (p, w) in &nu.atoms {
            acc += w * self.distance(z, p)?;
        }
        Ok(acc)
    }
}

/// A finitely supported probability measure on a target space.
#[derive(Clone, Debug, Serialize)]
pub struct PointMeasure {
    atoms: Vec<(Point, f64)>,
}

impl PointMeasure {
    /// Validates positivity and normalization (within 1e-12).
    pub fn new(atoms: Vec<(Point, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if atoms.iter().any(|(_, w)| !(*w > 0.0)) {
            return Err(Error::Parse { line: 0, msg: "measure weights must be positive".into() });
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("measure weights sum to {total}, not 1"),
            });
        }
        Ok(PointMeasure { atoms })
    }

    /// Rescales positive weights to sum to one.
    pub fn normalized(atoms: Vec<(Point, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(Error::Parse { line: 0, msg: "measure has no positive mass".into() });
        }
        PointMeasure::new(atoms.into_iter().map(|(p, w)| (p, w / total)).collect())
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }
}

/// Jensen residual for the convex function `d(·, y0)`:
/// `Σ w_i d(y_i, y0) - d(b(ν), y0)`, non-negative in any Hadamard space.
pub fn jensen_audit(space: &Space, nu: &PointMeasure, y0: &Point) -> Result<f64> {
    let b = space.barycenter(nu)?;
    Ok(space.first_moment(nu, y0)? - space.distance(&b, y0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_barycenter_is_the_weighted_mean() {
        let s = Space::Euclidean(2);
        let nu = PointMeasure::new(vec![
            (Point::Euclidean(vec![0.0, 0.0]), 0.25),
            (Point::Euclidean(vec![4.0, 0.0]), 0.5),
            (Point::Euclidean(vec![0.0, 8.0]), 0.25),
        ])
        .unwrap();
        let b = s.barycenter(&nu).unwrap();
        assert_eq!(b, Point::Euclidean(vec![2.0, 2.0]));
    }

    #[test]
    fn two_atom_barycenters_are_geodesic_midpoints() {
        let cases: Vec<(Space, Point, Point)> = vec![
            (
                Space::Euclidean(2),
                Point::Euclidean(vec![1.0, 1.0]),
                Point::Euclidean(vec![-3.0, 2.0]),
            ),
            (
                Space::Tree(MetricTree::tripod(2.0)),
                Point::Tree(TreePoint::vertex(1)),
                Point::Tree(TreePoint::vertex(2)),
            ),
            (Space::Disk, Point::Disk([0.4, 0.2]), Point::Disk([-0.1, -0.5])),
        ];
        for (space, a, b) in cases {
            let nu = PointMeasure::new(vec![(a.clone(), 0.5), (b.clone(), 0.5)]).unwrap();
            let bary = space.barycenter(&nu).unwrap();
            let mid = space.geodesic(&a, &b, 0.5).unwrap();
            assert!(
                space.distance(&bary, &mid).unwrap() <= 1e-9,
                "{}: barycenter is not the midpoint",
                space.model_name()
            );
        }
    }

    #[test]
    fn collinear_measures_reduce_to_one_dimension() {
        // Atoms on a single geodesic: the barycenter is the Euclidean mean
        // of the arc-length parameters, in every model.
        let models: Vec<Space> =
            vec![Space::Euclidean(3), Space::Tree(MetricTree::tripod(5.0)), Space::Disk];
        let params = [(0.1, 0.3), (0.7, 0.5), (0.95, 0.2)];
        for space in models {
            let (a, b) = match &space {
                Space::Euclidean(_) => (
                    Point::Euclidean(vec![0.0, 1.0, -1.0]),
                    Point::Euclidean(vec![2.0, -1.0, 0.5]),
                ),
                Space::Tree(_) => {
                    (Point::Tree(TreePoint::vertex(1)), Point::Tree(TreePoint::vertex(2)))
                }
                Space::Disk => (Point::Disk([-0.6, 0.1]), Point::Disk([0.5, 0.3])),
            };
            let atoms: Vec<(Point, f64)> = params
                .iter()
                .map(|&(t, w)| (space.geodesic(&a, &b, t).unwrap(), w))
                .collect();
            let nu = PointMeasure::new(atoms).unwrap();
            let bary = space.barycenter(&nu).unwrap();
            let t_mean: f64 = params.iter().map(|&(t, w)| t * w).sum();
            let expected = space.geodesic(&a, &b, t_mean).unwrap();
            assert!(
                space.distance(&bary, &expected).unwrap() <= 1e-9,
                "{}: collinear barycenter off the geodesic mean",
                space.model_name()
            );
        }
    }

    #[test]
    fn jensen_residual_examples() {
        let s = Space::Euclidean(2);
        let y0 = Point::Euclidean(vec![0.0, 0.0]);
        // Point mass at y0: residual 0.
        let nu = PointMeasure::new(vec![(y0.clone(), 1.0)]).unwrap();
        assert_relative_eq!(jensen_audit(&s, &nu, &y0).unwrap(), 0.0);
        // Non-collinear atoms: strictly positive residual.
        let nu = PointMeasure::new(vec![
            (Point::Euclidean(vec![1.0, 0.0]), 0.5),
            (Point::Euclidean(vec![0.0, 1.0]), 0.5),
        ])
        .unwrap();
        assert!(jensen_audit(&s, &nu, &y0).unwrap() > 0.1);
    }

    #[test]
    fn measure_validation() {
        let p = Point::Euclidean(vec![0.0]);
        assert!(PointMeasure::new(vec![]).is_err());
        assert!(PointMeasure::new(vec![(p.clone(), 0.5)]).is_err());
        assert!(PointMeasure::new(vec![(p.clone(), -1.0), (p.clone(), 2.0)]).is_err());
        let nu = PointMeasure::normalized(vec![(p.clone(), 2.0), (p.clone(), 6.0)]).unwrap();
        assert_relative_eq!(nu.atoms()[0].1, 0.25);
        let s = Space::Euclidean(1);
        assert!(s.check_point(&Point::Euclidean(vec![0.0, 1.0])).is_err());
        assert!(s.check_point(&Point::Disk([0.0, 0.0])).is_err());
    }
}

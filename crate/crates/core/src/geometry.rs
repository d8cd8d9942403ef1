//! AP deployments around the typical UE at the origin.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};

/// An access point in polar coordinates relative to the UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApPoint {
    /// Distance to the UE, meters.
    pub r: f64,
    /// Polar angle in `(-pi, pi]`.
    pub theta: f64,
    pub is_los: bool,
}

/// Distances `r_1 <= ... <= r_K` of the serving APs.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedDistances(Vec<f64>);

impl OrderedDistances {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("at least one serving distance required".into()));
        }
        if values.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Domain(format!("distances must be finite and positive: {values:?}")));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain(format!("distances must be nondecreasing: {values:?}")));
        }
        Ok(OrderedDistances(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// `r_K`, the radius of the exclusion disk around the UE.
    pub fn outer(&self) -> f64 {
        *self.0.last().expect("nonempty by construction")
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// LOS probability `exp(-beta r)` of a link of length `r`.
pub fn los_probability(r: f64, beta: f64) -> f64 {
    (-beta * r).exp()
}

/// Homogeneous PPP of density `lambda` on the disk of radius `radius`.
///
/// Points come back sorted by distance (ties by angle, then draw order) and
/// with all marks set to NLOS; use [`mark_blockage`] to mark them.
pub fn sample_ppp<R: Rng + ?Sized>(lambda: f64, radius: f64, rng: &mut R) -> Vec<ApPoint> {
    let mean = lambda * PI * radius * radius;
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    } else {
        0
    };
    let mut points: Vec<ApPoint> = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            ApPoint {
                r: radius * u.sqrt(),
                theta: PI - 2.0 * PI * v,
                is_los: false,
            }
        })
        .collect();
    points.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.theta.total_cmp(&b.theta)));
    points
}

/// Independently marks each point LOS with probability `exp(-beta r)`.
///
/// This is the thinning that splits the deployment into independent LOS
/// and NLOS processes with densities `lambda p(r)` and `lambda (1 - p(r))`.
pub fn mark_blockage<R: Rng + ?Sized>(mut points: Vec<ApPoint>, beta: f64, rng: &mut R) -> Vec<ApPoint> {
    for p in points.iter_mut() {
        let u: f64 = rng.random();
        p.is_los = u < los_probability(p.r, beta);
    }
    points
}

/// Draws the `k` nearest distances of an infinite PPP directly.
///
/// `pi lambda r_j^2` are the arrival times of a unit-rate Poisson process,
/// which gives the joint density `(2 pi lambda)^k r_1...r_k exp(-pi lambda r_k^2)`
/// on `0 < r_1 <= ... <= r_k`.
pub fn sample_ordered_distances<R: Rng + ?Sized>(lambda: f64, k: usize, rng: &mut R) -> OrderedDistances {
    assert!(k >= 1, "k must be positive");
    let mut arrival = 0.0;
    let values = (0..k)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            arrival += e;
            (arrival / (PI * lambda)).sqrt()
        })
        .collect();
    OrderedDistances(values)
}

/// Writes a realization as CSV with columns `r,theta,is_los`.
pub fn write_realization_csv<W: Write>(points: &[ApPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "r,theta,is_los")?;
    for p in points {
        writeln!(out, "{},{},{}", p.r, p.theta, p.is_los)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn los_probability_values() {
        assert_eq!(los_probability(0.0, 0.3), 1.0);
        assert!((los_probability(100.0, 0.0071) - 0.491_644_197_460_965_1).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 0..100 {
            let p = los_probability(i as f64 * 3.0, 0.0071);
            assert!(p <= prev && p > 0.0);
            prev = p;
        }
    }

    #[test]
    fn ppp_is_sorted_and_in_disk() {
        let mut rng = stream(1, Purpose::Geometry, 0);
        let pts = sample_ppp(0.01, 50.0, &mut rng);
        assert!(!pts.is_empty());
        assert!(pts.windows(2).all(|w| w[0].r <= w[1].r));
        assert!(pts
            .iter()
            .all(|p| p.r >= 0.0 && p.r <= 50.0 && p.theta > -PI && p.theta <= PI && !p.is_los));
    }

    #[test]
    fn zero_beta_marks_everything_los() {
        let mut rng = stream(2, Purpose::Geometry, 0);
        let pts = sample_ppp(0.01, 100.0, &mut rng);
        let marked = mark_blockage(pts, 0.0, &mut stream(2, Purpose::Blockage, 0));
        assert!(marked.iter().all(|p| p.is_los));
    }

    #[test]
    fn marking_leaves_positions_untouched() {
        let pts = sample_ppp(0.005, 100.0, &mut stream(3, Purpose::Geometry, 0));
        let marked = mark_blockage(pts.clone(), 0.0071, &mut stream(3, Purpose::Blockage, 0));
        assert_eq!(pts.len(), marked.len());
        for (a, b) in pts.iter().zip(&marked) {
            assert_eq!(a.r.to_bits(), b.r.to_bits());
            assert_eq!(a.theta.to_bits(), b.theta.to_bits());
        }
    }

    #[test]
    fn ordered_distances_are_ordered() {
        for i in 0..1000 {
            let d = sample_ordered_distances(2.5e-3, 4, &mut stream(4, Purpose::Distances, i));
            assert!(d.values().windows(2).all(|w| w[0] <= w[1]));
            assert!(d.values().iter().all(|r| *r > 0.0 && r.is_finite()));
        }
    }

    #[test]
    fn ordered_distances_validation() {
        assert!(OrderedDistances::new(vec![]).is_err());
        assert!(OrderedDistances::new(vec![2.0, 1.0]).is_err());
        assert!(OrderedDistances::new(vec![0.0]).is_err());
        assert_eq!(OrderedDistances::new(vec![1.0, 1.0, 3.0]).unwrap().outer(), 3.0);
    }

    #[test]
    fn realization_csv() {
        let pts = [
            ApPoint { r: 1.5, theta: 0.25, is_los: true },
            ApPoint { r: 2.0, theta: -1.0, is_los: false },
        ];
        let mut buf = Vec::new();
        write_realization_csv(&pts, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "r,theta,is_los\n1.5,0.25,true\n2,-1,false\n"
        );
    }
}

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{cross2, norm2, sub2, Point, Real};

/// Minimum angular resolution for smooth radial profiles.
pub const MIN_PROFILE_SAMPLES: usize = 256;

pub type RadialProfile<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Boundary description accepted by [`build_domain`].
#[derive(Clone)]
pub enum BoundarySpec<T> {
    /// Closed polygon, vertices counter-clockwise about the origin.
    Polygon(Vec<Point<T>>),
    /// Smooth radial profile `θ ↦ r(θ)`, sampled at `samples` equally spaced
    /// angles (raised to [`MIN_PROFILE_SAMPLES`] when smaller).
    Radial { profile: RadialProfile<T>, samples: usize },
}

impl<T: Real> BoundarySpec<T> {
    pub fn disc(radius: T, samples: usize) -> Self {
        BoundarySpec::Radial {
            profile: Arc::new(move |_| radius),
            samples,
        }
    }

    /// Axis-aligned square of side `side` centred at the origin.
    pub fn centered_square(side: T) -> Self {
        let s = side * T::lit(0.5);
        BoundarySpec::Polygon(vec![[s, -s], [s, s], [-s, s], [-s, -s]])
    }

    pub fn centered_rectangle(width: T, height: T) -> Self {
        let (a, b) = (width * T::lit(0.5), height * T::lit(0.5));
        BoundarySpec::Polygon(vec![[a, -b], [a, b], [-a, b], [-a, -b]])
    }
}

impl<T> std::fmt::Debug for BoundarySpec<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundarySpec::Polygon(v) => f.debug_tuple("Polygon").field(v).finish(),
            BoundarySpec::Radial { samples, .. } => f.debug_struct("Radial").field("samples", samples).finish(),
        }
    }
}

/// A planar region star-shaped about the origin, stored as a polygon whose
/// vertices are sorted counter-clockwise by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDomain<T> {
    vertices: Vec<Point<T>>,
    smooth: bool,
    r_min: T,
    r_max: T,
}

impl<T: Real> StarDomain<T> {
    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    /// True when the polygon samples a smooth radial profile.
    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn area(&self) -> T {
        let n = self.vertices.len();
        (0..n)
            .map(|i| cross2(self.vertices[i], self.vertices[(i + 1) % n]))
            .sum::<T>()
            * T::lit(0.5)
    }

    pub fn perimeter(&self) -> T {
        let n = self.vertices.len();
        (0..n)
            .map(|i| norm2(sub2(self.vertices[(i + 1) % n], self.vertices[i])))
            .sum()
    }

    /// Point on the boundary at polygon parameter `phi ∈ [0, n_vertices)`;
    /// integer values are vertices, edges are linear in between.
    pub fn boundary_point(&self, phi: T) -> Point<T> {
        let n = self.vertices.len();
        let nt = T::count(n);
        let mut p = phi % nt;
        if p < T::zero() {
            p += nt;
        }
        let e = p.floor().to_usize().unwrap_or(0).min(n - 1);
        let f = p - T::count(e);
        let a = self.vertices[e];
        let b = self.vertices[(e + 1) % n];
        [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
    }
}

/// Validates a boundary description and returns the polygonal domain.
pub fn build_domain<T: Real>(spec: &BoundarySpec<T>) -> Result<StarDomain<T>> {
    let (vertices, smooth) = match spec {
        BoundarySpec::Polygon(v) => (v.clone(), false),
        BoundarySpec::Radial { profile, samples } => {
            let n = (*samples).max(MIN_PROFILE_SAMPLES);
            let mut v = Vec::with_capacity(n);
            for k in 0..n {
                let theta = T::TAU() * T::count(k) / T::count(n);
                let r = profile(theta);
                if !(r > T::zero()) || !r.is_finite() {
                    return Err(Error::DegenerateBoundary(format!(
                        "radial profile r({:.6}) = {} is not positive",
                        theta.to_f64_lossy(),
                        r
                    )));
                }
                v.push([r * theta.cos(), r * theta.sin()]);
            }
            (v, true)
        }
    };

    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegenerateBoundary(format!("{n} vertices")));
    }
    let mut r_min = T::infinity();
    let mut r_max = T::zero();
    for (i, v) in vertices.iter().enumerate() {
        let r = norm2(*v);
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::DegenerateBoundary(format!("vertex {i} has radius {r}")));
        }
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }

    // each edge must be seen counter-clockwise from the origin: ν·x > 0
    let mut winding = T::zero();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let edge = sub2(b, a);
        let len = norm2(edge);
        if !(len > T::zero()) {
            return Err(Error::DegenerateBoundary(format!("edge {i} has zero length")));
        }
        // ν = (e_y, -e_x)/|e|, ν·a = cross(a, b)/|e|
        let support = cross2(a, b) / len;
        if !(support > T::zero()) {
            return Err(Error::NotStarShaped(format!(
                "edge {i} has ν·x = {:e} <= 0",
                support.to_f64_lossy()
            )));
        }
        winding += cross2(a, b).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    let turns = winding / T::TAU();
    if (turns - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::DegenerateBoundary(format!(
            "boundary winds {:.6} times around the origin",
            turns.to_f64_lossy()
        )));
    }

    Ok(StarDomain {
        vertices,
        smooth,
        r_min,
        r_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disc_is_valid() {
        let d = build_domain(&BoundarySpec::<f64>::disc(1.0, 64)).unwrap();
        assert_eq!(d.vertices().len(), MIN_PROFILE_SAMPLES);
        assert!(d.is_smooth());
        assert!((d.r_min() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_is_valid_and_exact() {
        let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
        assert!(!d.is_smooth());
        assert_eq!(d.area(), 1.0);
        assert_eq!(d.perimeter(), 4.0);
        assert_eq!(d.boundary_point(0.5), [0.5, 0.0]);
    }

    #[test]
    fn nonpositive_radius_is_degenerate() {
        let spec = BoundarySpec::Radial {
            profile: Arc::new(|th: f64| if th > 1.0 && th < 2.0 { -0.2 } else { 1.0 }),
            samples: 256,
        };
        assert!(matches!(build_domain(&spec), Err(Error::DegenerateBoundary(_))));
    }

    #[test]
    fn polygon_not_visible_from_origin_is_rejected() {
        // origin outside the square
        let spec = BoundarySpec::Polygon(vec![[1.0, 0.5], [2.0, 0.5], [2.0, 1.5], [1.0, 1.5]]);
        assert!(build_domain(&spec).is_err());
        // clockwise orientation
        let cw = BoundarySpec::Polygon(vec![[1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(build_domain(&cw), Err(Error::NotStarShaped(_))));
    }

    #[test]
    fn doubly_wound_polygon_is_degenerate() {
        let v: Vec<[f64; 2]> = (0..10)
            .map(|k| {
                let th = 4.0 * std::f64::consts::PI * k as f64 / 10.0;
                [th.cos(), th.sin()]
            })
            .collect();
        assert!(matches!(
            build_domain(&BoundarySpec::Polygon(v)),
            Err(Error::DegenerateBoundary(_))
        ));
    }
}

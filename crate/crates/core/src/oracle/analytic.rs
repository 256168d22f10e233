use std::f64::consts::PI;

use serde::Serialize;

use super::bessel::{bessel_j, bessel_j_derivative, bessel_zeros};

/// Dirichlet eigenmode `J_n(j r)·cos(nφ)` (or `sin`) of the unit disc,
/// normalized in `L²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscMode {
    pub n: usize,
    pub k: usize,
    /// `j_{n,k}`
    pub zero: f64,
    pub lambda: f64,
    /// 1 for radial modes, 2 for angular ones
    pub multiplicity: usize,
    /// `true` selects the `sin(nφ)` partner
    pub sine: bool,
    norm: f64,
}

impl DiscMode {
    fn new(n: usize, k: usize, zero: f64, sine: bool) -> Self {
        // ∫₀¹ J_n(jr)² r dr = J_{n+1}(j)²/2
        let radial = 0.5 * bessel_j(n + 1, zero).powi(2);
        let angular = if n == 0 { 2.0 * PI } else { PI };
        Self {
            n,
            k,
            zero,
            lambda: zero * zero,
            multiplicity: if n == 0 { 1 } else { 2 },
            sine,
            norm: 1.0 / (radial * angular).sqrt(),
        }
    }

    fn angular(&self, phi: f64) -> (f64, f64) {
        let a = self.n as f64 * phi;
        if self.sine {
            (a.sin(), self.n as f64 * a.cos())
        } else {
            (a.cos(), -(self.n as f64) * a.sin())
        }
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        let r = x[0].hypot(x[1]);
        let (c, _) = self.angular(x[1].atan2(x[0]));
        self.norm * bessel_j(self.n, self.zero * r) * c
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        let phi = x[1].atan2(x[0]);
        let (c, dc) = self.angular(phi);
        let dr = self.norm * self.zero * bessel_j_derivative(self.n, self.zero * r) * c;
        let dphi_over_r = if r > 0.0 {
            self.norm * bessel_j(self.n, self.zero * r) * dc / r
        } else {
            0.0
        };
        let (s, co) = phi.sin_cos();
        [dr * co - dphi_over_r * s, dr * s + dphi_over_r * co]
    }

    /// `∂_r u` on the unit circle at angle `phi`.
    pub fn normal_derivative(&self, phi: f64) -> f64 {
        self.norm * self.zero * bessel_j_derivative(self.n, self.zero) * self.angular(phi).0
    }
}

/// The `k`-th radial Dirichlet mode of the unit disc (`k ≥ 1`).
pub fn analytic_disc(k: usize) -> DiscMode {
    assert!(k >= 1, "mode index starts at 1");
    DiscMode::new(0, k, bessel_zeros(0, k)[k - 1], false)
}

/// The lowest `count` Dirichlet eigenfunctions of the unit disc, sorted by
/// eigenvalue (cosine before sine).
pub fn disc_spectrum(count: usize) -> Vec<DiscMode> {
    let mut modes = Vec::new();
    let per = count + 1;
    for n in 0..=count {
        for (k, z) in bessel_zeros(n, per).into_iter().enumerate() {
            modes.push(DiscMode::new(n, k + 1, z, false));
            if n > 0 {
                modes.push(DiscMode::new(n, k + 1, z, true));
            }
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.sine.cmp(&b.sine)));
    modes.truncate(count);
    modes
}

/// `∫_{∂D}(∂_ν u)²(x·ν)ds / (2λ‖u‖²)`, both integrals by dense quadrature
/// (trapezoid in angle, composite Simpson in radius). Equals one by the
/// Rellich identity.
pub fn rellich_ratio(mode: &DiscMode, angular: usize, radial: usize) -> f64 {
    let radial = radial + radial % 2;
    let dphi = 2.0 * PI / angular as f64;
    let boundary: f64 = (0..angular)
        .map(|i| mode.normal_derivative(i as f64 * dphi).powi(2))
        .sum::<f64>()
        * dphi;
    let dr = 1.0 / radial as f64;
    let mut norm = 0.0;
    for i in 0..=radial {
        let r = i as f64 * dr;
        let w = if i == 0 || i == radial {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let ring: f64 = (0..angular)
            .map(|a| {
                let phi = a as f64 * dphi;
                mode.value([r * phi.cos(), r * phi.sin()]).powi(2)
            })
            .sum::<f64>()
            * dphi;
        norm += w * ring * r;
    }
    norm *= dr / 3.0;
    boundary / (2.0 * mode.lambda * norm)
}

/// Dirichlet mode `2 sin(mπ(x+½)) sin(nπ(y+½))` of the centered unit square.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct SquareMode {
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
}

impl SquareMode {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        2.0 * (self.m as f64 * PI * (x[0] + 0.5)).sin() * (self.n as f64 * PI * (x[1] + 0.5)).sin()
    }
}

/// Sorted square modes with their eigenvalue clusters.
#[derive(Debug, Clone, Serialize)]
pub struct SquareTable {
    pub modes: Vec<SquareMode>,
    /// distinct eigenvalues with multiplicities
    pub clusters: Vec<(f64, usize)>,
}

impl SquareTable {
    /// Number of modes with eigenvalue `lambda`.
    pub fn multiplicity(&self, lambda: f64) -> usize {
        self.modes.iter().filter(|m| (m.lambda - lambda).abs() <= 1e-12 * lambda).count()
    }
}

/// All modes with eigenvalue at most `π²(max_index² + 1)`, which is the
/// range where the table is complete, sorted by `π²(m² + n²)`.
pub fn analytic_square(max_index: usize) -> SquareTable {
    let limit = PI * PI * (max_index * max_index + 1) as f64;
    let mut modes = Vec::new();
    for m in 1..=max_index {
        for n in 1..=max_index {
            let lambda = PI * PI * (m * m + n * n) as f64;
            if lambda <= limit * (1.0 + 1e-12) {
                modes.push(SquareMode { m, n, lambda });
            }
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.m.cmp(&b.m)));
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for md in &modes {
        match clusters.last_mut() {
            Some((l, c)) if (*l - md.lambda).abs() <= 1e-12 * md.lambda => *c += 1,
            _ => clusters.push((md.lambda, 1)),
        }
    }
    SquareTable { modes, clusters }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_ground_state() {
        let m = analytic_disc(1);
        assert!((m.lambda - 5.783_185_96).abs() < 1e-8);
        assert!(m.value([1.0, 0.0]).abs() < 1e-12);
        assert!(m.value([0.0, -1.0]).abs() < 1e-12);
    }

    #[test]
    fn rellich_identity() {
        for mode in [analytic_disc(1), analytic_disc(2), disc_spectrum(3)[1]] {
            let r = rellich_ratio(&mode, 256, 4000);
            assert!((r - 1.0).abs() < 1e-10, "{r}");
        }
    }

    #[test]
    fn disc_spectrum_multiplicities() {
        let s = disc_spectrum(6);
        assert_eq!(s[0].n, 0);
        assert_eq!((s[1].n, s[2].n), (1, 1));
        assert!((s[1].lambda - s[2].lambda).abs() < 1e-14);
        assert!(s.windows(2).all(|w| w[0].lambda <= w[1].lambda));
    }

    #[test]
    fn gradient_matches_difference() {
        let m = disc_spectrum(3)[1];
        let x = [0.3, 0.4];
        let h = 1e-6;
        let g = m.gradient(x);
        let fx = (m.value([x[0] + h, x[1]]) - m.value([x[0] - h, x[1]])) / (2.0 * h);
        let fy = (m.value([x[0], x[1] + h]) - m.value([x[0], x[1] - h])) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-7 && (g[1] - fy).abs() < 1e-7);
    }

    #[test]
    fn square_table() {
        let t = analytic_square(4);
        assert!((t.modes[0].lambda - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(t.clusters[1].1, 2);
        assert!((t.clusters[1].0 - 5.0 * PI * PI).abs() < 1e-12);
        assert_eq!(t.multiplicity(8.0 * PI * PI), 1);
        // midpoint rule, exact for these trigonometric products
        let n = 64;
        let mode = t.modes[2];
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) / n as f64 - 0.5, (j as f64 + 0.5) / n as f64 - 0.5];
                s += mode.value(x).powi(2);
            }
        }
        assert!((s / (n * n) as f64 - 1.0).abs() < 1e-12);
    }
}

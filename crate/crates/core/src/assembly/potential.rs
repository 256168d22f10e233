use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Point, Real};

pub type MatrixField<T> = Arc<dyn Fn(Point<T>) -> DMatrix<T> + Send + Sync>;
pub type GradientField<T> = Arc<dyn Fn(Point<T>) -> [DMatrix<T>; 2] + Send + Sync>;
pub type HessianField<T> = Arc<dyn Fn(Point<T>) -> [[DMatrix<T>; 2]; 2] + Send + Sync>;

/// Step of the central differences used to synthesize missing derivatives.
pub const FD_STEP: f64 = 1e-5;

/// Where a derivative of the potential comes from.
#[derive(Clone)]
pub enum DerivativeSource<F> {
    Analytic(F),
    /// central differences of the next lower derivative, step [`FD_STEP`]
    FiniteDifference,
    Unavailable,
}

impl<F> DerivativeSource<F> {
    pub fn label(&self) -> &'static str {
        match self {
            DerivativeSource::Analytic(_) => "analytic",
            DerivativeSource::FiniteDifference => "finite-difference",
            DerivativeSource::Unavailable => "unavailable",
        }
    }
}

/// Symmetric `N×N` matrix-valued potential with its spatial derivatives.
#[derive(Clone)]
pub struct MatrixPotential<T> {
    n: usize,
    name: String,
    value: MatrixField<T>,
    gradient: DerivativeSource<GradientField<T>>,
    hessian: DerivativeSource<HessianField<T>>,
}

impl<T> fmt::Debug for MatrixPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixPotential")
            .field("n", &self.n)
            .field("name", &self.name)
            .field("gradient", &self.gradient.label())
            .field("hessian", &self.hessian.label())
            .finish()
    }
}

fn scalar<T: Real>(v: T) -> DMatrix<T> {
    DMatrix::from_element(1, 1, v)
}

impl<T: Real> MatrixPotential<T> {
    /// Potential with finite-difference derivatives.
    pub fn new(n: usize, name: impl Into<String>, value: MatrixField<T>) -> Self {
        Self {
            n,
            name: name.into(),
            value,
            gradient: DerivativeSource::FiniteDifference,
            hessian: DerivativeSource::FiniteDifference,
        }
    }

    pub fn with_gradient(mut self, source: DerivativeSource<GradientField<T>>) -> Self {
        self.gradient = source;
        self
    }

    pub fn with_hessian(mut self, source: DerivativeSource<HessianField<T>>) -> Self {
        self.hessian = source;
        self
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gradient_source(&self) -> &'static str {
        self.gradient.label()
    }

    pub fn hessian_source(&self) -> &'static str {
        self.hessian.label()
    }

    pub fn value(&self, x: Point<T>) -> DMatrix<T> {
        (self.value)(x)
    }

    pub fn gradient(&self, x: Point<T>) -> Result<[DMatrix<T>; 2]> {
        match &self.gradient {
            DerivativeSource::Analytic(g) => Ok(g(x)),
            DerivativeSource::FiniteDifference => Ok(self.fd_gradient(x)),
            DerivativeSource::Unavailable => Err(Error::MissingDerivative(format!("gradient of {}", self.name))),
        }
    }

    pub fn hessian(&self, x: Point<T>) -> Result<[[DMatrix<T>; 2]; 2]> {
        match &self.hessian {
            DerivativeSource::Analytic(h) => Ok(h(x)),
            DerivativeSource::FiniteDifference => {
                let step = T::lit(FD_STEP);
                let two_h = step + step;
                if let DerivativeSource::Analytic(g) = &self.gradient {
                    let gp = [g([x[0] + step, x[1]]), g([x[0], x[1] + step])];
                    let gm = [g([x[0] - step, x[1]]), g([x[0], x[1] - step])];
                    let row = |i: usize, j: usize| (&gp[i][j] - &gm[i][j]) / two_h;
                    let off = (row(0, 1) + row(1, 0)) * T::lit(0.5);
                    Ok([[row(0, 0), off.clone()], [off, row(1, 1)]])
                } else {
                    let v = |dx: T, dy: T| self.value([x[0] + dx, x[1] + dy]);
                    let h2 = step * step;
                    let c = v(T::zero(), T::zero()) * T::lit(2.0);
                    let hxx = (v(step, T::zero()) + v(-step, T::zero()) - &c) / h2;
                    let hyy = (v(T::zero(), step) + v(T::zero(), -step) - &c) / h2;
                    let hxy = (v(step, step) - v(step, -step) - v(-step, step) + v(-step, -step)) / (h2 * T::lit(4.0));
                    Ok([[hxx, hxy.clone()], [hxy, hyy]])
                }
            }
            DerivativeSource::Unavailable => Err(Error::MissingDerivative(format!("Hessian of {}", self.name))),
        }
    }

    fn fd_gradient(&self, x: Point<T>) -> [DMatrix<T>; 2] {
        let step = T::lit(FD_STEP);
        let two_h = step + step;
        let dx = (self.value([x[0] + step, x[1]]) - self.value([x[0] - step, x[1]])) / two_h;
        let dy = (self.value([x[0], x[1] + step]) - self.value([x[0], x[1] - step])) / two_h;
        [dx, dy]
    }

    /// `V^t(x) = t² V(tx)`.
    pub fn scaled_value(&self, t: T, x: Point<T>) -> DMatrix<T> {
        self.value([t * x[0], t * x[1]]) * (t * t)
    }

    /// `∂_t V^t(x) = 2t V(tx) + t² x·∇V(tx)`.
    pub fn t_first(&self, t: T, x: Point<T>) -> Result<DMatrix<T>> {
        let y = [t * x[0], t * x[1]];
        let [gx, gy] = self.gradient(y)?;
        Ok(self.value(y) * (t + t) + (gx * x[0] + gy * x[1]) * (t * t))
    }

    /// `∂²_t V^t(x) = 2V(tx) + 4t x·∇V(tx) + t² xᵀ Hess V(tx) x`.
    pub fn t_second(&self, t: T, x: Point<T>) -> Result<DMatrix<T>> {
        let y = [t * x[0], t * x[1]];
        let [gx, gy] = self.gradient(y)?;
        let [[hxx, hxy], [hyx, hyy]] = self.hessian(y)?;
        let quad = hxx * (x[0] * x[0]) + (hxy + hyx) * (x[0] * x[1]) + hyy * (x[1] * x[1]);
        Ok(self.value(y) * T::lit(2.0) + (gx * x[0] + gy * x[1]) * (T::lit(4.0) * t) + quad * (t * t))
    }

    /// Largest `|V_ij(x) − V_ji(x)|` over `points`.
    pub fn max_asymmetry(&self, points: &[Point<T>]) -> T {
        points.iter().fold(T::zero(), |acc, &p| {
            let v = self.value(p);
            let mut a = acc;
            for i in 0..self.n {
                for j in 0..i {
                    a = a.max((v[(i, j)] - v[(j, i)]).abs());
                }
            }
            a
        })
    }

    /// Largest deviation between the supplied gradient and central
    /// differences of `V` over `points`.
    pub fn gradient_defect(&self, points: &[Point<T>]) -> Result<T> {
        let mut worst = T::zero();
        for &p in points {
            let g = self.gradient(p)?;
            let fd = self.fd_gradient(p);
            for k in 0..2 {
                worst = worst.max(crate::linalg::dense::max_abs(&(&g[k] - &fd[k])));
            }
        }
        Ok(worst)
    }

    pub fn zero(n: usize) -> Self {
        polynomial(n, "zero", Vec::new())
    }

    /// `V ≡ c`, `N = 1`.
    pub fn constant(c: T) -> Self {
        polynomial(1, "constant", vec![((0, 0), vec![Monomial::new(c, 0, 0)])])
    }

    /// `V(x) = a·x`, `N = 1`.
    pub fn linear(a: [T; 2]) -> Self {
        polynomial(
            1,
            "linear",
            vec![((0, 0), vec![Monomial::new(a[0], 1, 0), Monomial::new(a[1], 0, 1)])],
        )
    }

    /// `V(x) = xᵀQx` for symmetric `Q`, `N = 1`.
    pub fn quadratic(q: [[T; 2]; 2]) -> Self {
        polynomial(
            1,
            "quadratic",
            vec![(
                (0, 0),
                vec![
                    Monomial::new(q[0][0], 2, 0),
                    Monomial::new(q[0][1] + q[1][0], 1, 1),
                    Monomial::new(q[1][1], 0, 2),
                ],
            )],
        )
    }

    /// `V(x) = A exp(−|x − c|²/w²)`, `N = 1`.
    pub fn gaussian(amplitude: T, center: Point<T>, width: T) -> Self {
        let w2 = width * width;
        let g = move |x: Point<T>| {
            let r = [x[0] - center[0], x[1] - center[1]];
            (amplitude * (-(r[0] * r[0] + r[1] * r[1]) / w2).exp(), r)
        };
        let value: MatrixField<T> = Arc::new(move |x| scalar(g(x).0));
        let grad: GradientField<T> = Arc::new(move |x| {
            let (v, r) = g(x);
            let s = -T::lit(2.0) * v / w2;
            [scalar(s * r[0]), scalar(s * r[1])]
        });
        let hess: HessianField<T> = Arc::new(move |x| {
            let (v, r) = g(x);
            let a = T::lit(4.0) * v / (w2 * w2);
            let b = T::lit(2.0) * v / w2;
            [
                [scalar(a * r[0] * r[0] - b), scalar(a * r[0] * r[1])],
                [scalar(a * r[1] * r[0]), scalar(a * r[1] * r[1] - b)],
            ]
        });
        MatrixPotential::new(1, "gaussian", value)
            .with_gradient(DerivativeSource::Analytic(grad))
            .with_hessian(DerivativeSource::Analytic(hess))
    }

    /// Block-diagonal potential `diag(V_1, …, V_k)` of scalar parts.
    pub fn diagonal(parts: Vec<MatrixPotential<T>>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|p| p.n != 1) {
            return Err(Error::InvalidInput("diagonal potential needs scalar parts".into()));
        }
        let n = parts.len();
        let parts = Arc::new(parts);
        let pv = parts.clone();
        let value: MatrixField<T> = Arc::new(move |x| {
            DMatrix::from_fn(n, n, |i, j| if i == j { pv[i].value(x)[(0, 0)] } else { T::zero() })
        });
        let name = format!(
            "diagonal({})",
            parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")
        );
        let mut out = MatrixPotential::new(n, name, value);
        if parts.iter().all(|p| matches!(p.gradient, DerivativeSource::Analytic(_))) {
            let pg = parts.clone();
            out.gradient = DerivativeSource::Analytic(Arc::new(move |x| {
                let g: Vec<_> = pg.iter().map(|p| p.gradient(x).expect("analytic")).collect();
                [0, 1].map(|k| DMatrix::from_fn(n, n, |i, j| if i == j { g[i][k][(0, 0)] } else { T::zero() }))
            }));
        } else if parts.iter().any(|p| matches!(p.gradient, DerivativeSource::Unavailable)) {
            out.gradient = DerivativeSource::Unavailable;
        }
        if parts.iter().all(|p| matches!(p.hessian, DerivativeSource::Analytic(_))) {
            let ph = parts.clone();
            out.hessian = DerivativeSource::Analytic(Arc::new(move |x| {
                let h: Vec<_> = ph.iter().map(|p| p.hessian(x).expect("analytic")).collect();
                [0, 1].map(|a| {
                    [0, 1].map(|b| DMatrix::from_fn(n, n, |i, j| if i == j { h[i][a][b][(0, 0)] } else { T::zero() }))
                })
            }));
        } else if parts.iter().any(|p| matches!(p.hessian, DerivativeSource::Unavailable)) {
            out.hessian = DerivativeSource::Unavailable;
        }
        Ok(out)
    }

    /// Two-component coupled example
    /// `V = [[a x₁², κ(1 + x₁x₂)], [κ(1 + x₁x₂), b + a x₂²]]`.
    pub fn coupled(a: T, b: T, kappa: T) -> Self {
        polynomial(
            2,
            "coupled",
            vec![
                ((0, 0), vec![Monomial::new(a, 2, 0)]),
                ((0, 1), vec![Monomial::new(kappa, 0, 0), Monomial::new(kappa, 1, 1)]),
                ((1, 1), vec![Monomial::new(b, 0, 0), Monomial::new(a, 0, 2)]),
            ],
        )
    }
}

/// `coef · x₁^px · x₂^py`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial<T> {
    pub coef: T,
    pub px: u32,
    pub py: u32,
}

impl<T: Real> Monomial<T> {
    pub fn new(coef: T, px: u32, py: u32) -> Self {
        Self { coef, px, py }
    }

    fn eval(&self, x: Point<T>, dx: u32, dy: u32) -> T {
        if dx > self.px || dy > self.py {
            return T::zero();
        }
        let falling = |p: u32, d: u32| (0..d).fold(T::one(), |acc, k| acc * T::count((p - k) as usize));
        self.coef
            * falling(self.px, dx)
            * falling(self.py, dy)
            * x[0].powi((self.px - dx) as i32)
            * x[1].powi((self.py - dy) as i32)
    }
}

/// Polynomial potential from upper-triangular entries `(i, j), i ≤ j`;
/// the lower triangle is filled by symmetry. All derivatives are analytic.
pub fn polynomial<T: Real>(n: usize, name: &str, entries: Vec<((usize, usize), Vec<Monomial<T>>)>) -> MatrixPotential<T> {
    let entries = Arc::new(entries);
    let field = move |dx: u32, dy: u32| {
        let entries = entries.clone();
        move |x: Point<T>| {
            let mut m = DMatrix::<T>::zeros(n, n);
            for ((i, j), terms) in entries.iter() {
                let v: T = terms.iter().map(|t| t.eval(x, dx, dy)).sum();
                m[(*i, *j)] = v;
                m[(*j, *i)] = v;
            }
            m
        }
    };
    let value: MatrixField<T> = Arc::new(field(0, 0));
    let (gx, gy) = (field(1, 0), field(0, 1));
    let grad: GradientField<T> = Arc::new(move |x| [gx(x), gy(x)]);
    let (hxx, hxy, hyy) = (field(2, 0), field(1, 1), field(0, 2));
    let hess: HessianField<T> = Arc::new(move |x| {
        let off = hxy(x);
        [[hxx(x), off.clone()], [off, hyy(x)]]
    });
    MatrixPotential::new(n, name, value)
        .with_gradient(DerivativeSource::Analytic(grad))
        .with_hessian(DerivativeSource::Analytic(hess))
}

/// `V^{t0}`, `V̇` and optionally `V̈` at each point.
#[derive(Debug, Clone)]
pub struct PotentialSamples<T: Real> {
    pub value: Vec<DMatrix<T>>,
    pub first: Vec<DMatrix<T>>,
    pub second: Option<Vec<DMatrix<T>>>,
}

pub fn potential_t_derivatives<T: Real>(
    v: &MatrixPotential<T>,
    t0: T,
    points: &[Point<T>],
    with_second: bool,
) -> Result<PotentialSamples<T>> {
    let value = points.iter().map(|&x| v.scaled_value(t0, x)).collect();
    let first = points.iter().map(|&x| v.t_first(t0, x)).collect::<Result<Vec<_>>>()?;
    let second = if with_second {
        Some(points.iter().map(|&x| v.t_second(t0, x)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    Ok(PotentialSamples { value, first, second })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_in_t(v: &MatrixPotential<f64>, t: f64, x: Point<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = 1e-4;
        let f = |s: f64| v.scaled_value(s, x);
        let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
        let d2 = (f(t + h) - f(t) * 2.0 + f(t - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn constant_potential_derivatives() {
        let v = MatrixPotential::constant(3.0);
        let s = potential_t_derivatives(&v, 1.0, &[[0.2, -0.1]], true).unwrap();
        assert_eq!(s.first[0][(0, 0)], 6.0);
        assert_eq!(s.second.unwrap()[0][(0, 0)], 6.0);
    }

    #[test]
    fn linear_potential_first_derivative() {
        let v = MatrixPotential::<f64>::linear([1.0, 0.0]);
        assert!((v.t_first(1.0, [1.0, 0.0]).unwrap()[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn chain_rule_matches_t_differences() {
        let pots = vec![
            MatrixPotential::gaussian(2.0, [0.1, -0.2], 0.4),
            MatrixPotential::coupled(1.5, 0.5, 0.3),
            MatrixPotential::quadratic([[1.0, 0.25], [0.25, -2.0]]),
        ];
        for v in &pots {
            for &x in &[[0.3, 0.1], [-0.2, 0.45], [0.05, -0.4]] {
                for &t in &[0.6, 1.0] {
                    let (d1, d2) = fd_in_t(v, t, x);
                    let a1 = v.t_first(t, x).unwrap();
                    let a2 = v.t_second(t, x).unwrap();
                    let scale = 1.0 + a1.amax();
                    assert!((&a1 - d1).amax() < 1e-8 * scale, "{}", v.name());
                    assert!((&a2 - d2).amax() < 1e-5 * (1.0 + a2.amax()), "{}", v.name());
                }
            }
        }
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let pts = [[0.3, 0.1], [-0.2, 0.45]];
        for v in [
            MatrixPotential::gaussian(2.0, [0.1, -0.2], 0.4),
            MatrixPotential::coupled(1.5, 0.5, 0.3),
        ] {
            assert!(v.gradient_defect(&pts).unwrap() < 1e-6);
            assert_eq!(v.max_asymmetry(&pts), 0.0);
        }
    }

    #[test]
    fn finite_difference_fallback_and_missing_hessian() {
        let base = MatrixPotential::gaussian(1.0, [0.0, 0.0], 0.5);
        let g = base.clone();
        let fd = MatrixPotential::new(1, "fd", Arc::new(move |x| g.value(x)));
        let x = [0.2, -0.1];
        let exact = base.t_second(0.8, x).unwrap();
        let approx = fd.t_second(0.8, x).unwrap();
        assert!((exact - approx).amax() < 1e-4);

        let none = MatrixPotential::new(1, "bare", Arc::new(|_x: Point<f64>| DMatrix::from_element(1, 1, 1.0)))
            .with_hessian(DerivativeSource::Unavailable);
        assert!(potential_t_derivatives(&none, 1.0, &[x], false).is_ok());
        assert!(matches!(
            potential_t_derivatives(&none, 1.0, &[x], true),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn diagonal_potential_keeps_analytic_derivatives() {
        let v = MatrixPotential::diagonal(vec![MatrixPotential::constant(1.0), MatrixPotential::linear([0.0, 2.0])]).unwrap();
        assert_eq!(v.components(), 2);
        assert_eq!(v.gradient_source(), "analytic");
        let d = v.t_first(1.0, [0.0, 1.0]).unwrap();
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(1, 1)], 6.0);
        assert_eq!(d[(0, 1)], 0.0);
    }
}

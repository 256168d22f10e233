//! TOML experiment configuration.
//!
//! ```toml
//! [domain]
//! kind = "disc"          # disc | square | rectangle | radial | polygon
//! radius = 1.0
//!
//! [mesh]
//! h = 0.1
//!
//! [potential]
//! kind = "gaussian"      # zero | constant | linear | quadratic | gaussian | diagonal | coupled | polynomial
//! amplitude = 2.0
//! center = [0.1, 0.0]
//! width = 0.3
//!
//! [bc]
//! kind = "dirichlet"     # dirichlet | robin | neumann
//!
//! [flow]
//! tau = 0.5
//! t_end = 1.0            # optional sub-interval end
//! grid_n = 33
//! branches = 4
//!
//! [target]
//! index = 1              # 1-based eigenvalue index, for `derivative`
//! t0 = 1.0
//! lambda0 = 40.0         # for `maslov`
//!
//! [tolerances]
//! cluster_tol = 1e-6
//! group_tol = 1e-5
//! fd_steps = [1e-2, 5e-3, 2.5e-3]
//!
//! [output]
//! dir = "out"
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use spectral_flow::assembly::{polynomial, Monomial};
use spectral_flow::{BoundaryCondition, BoundarySpec, MatrixPotential};
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub domain: DomainConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub bc: BcConfig,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: Spanned<String>,
    pub radius: Option<Spanned<f64>>,
    pub side: Option<Spanned<f64>>,
    pub width: Option<Spanned<f64>>,
    pub height: Option<Spanned<f64>>,
    /// `r(θ) = cos[0] + Σ cos[k]·cos(kθ) + Σ sin[k−1]·sin(kθ)`
    pub cos: Option<Spanned<Vec<f64>>>,
    pub sin: Option<Spanned<Vec<f64>>>,
    pub vertices: Option<Spanned<Vec<[f64; 2]>>>,
    pub samples: Option<Spanned<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: Spanned<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: Spanned<String>,
    pub value: Option<Spanned<f64>>,
    pub a: Option<Spanned<Vec<f64>>>,
    pub q: Option<Spanned<Vec<Vec<f64>>>>,
    pub amplitude: Option<Spanned<f64>>,
    pub center: Option<Spanned<Vec<f64>>>,
    pub width: Option<Spanned<f64>>,
    /// coupled: `[[s x₁², κ(1 + x₁x₂)], [κ(1 + x₁x₂), b + s x₂²]]`
    pub scale: Option<Spanned<f64>>,
    pub b: Option<Spanned<f64>>,
    pub kappa: Option<Spanned<f64>>,
    pub components: Option<Spanned<usize>>,
    pub parts: Option<Spanned<Vec<PotentialConfig>>>,
    pub entries: Option<Spanned<Vec<EntryConfig>>>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            kind: Spanned::new(0..0, "zero".into()),
            value: None,
            a: None,
            q: None,
            amplitude: None,
            center: None,
            width: None,
            scale: None,
            b: None,
            kappa: None,
            components: None,
            parts: None,
            entries: None,
        }
    }
}

/// One upper-triangular entry of a polynomial potential; `terms` are
/// `[coef, px, py]` for `coef·x₁^px·x₂^py`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub kind: Spanned<String>,
    pub theta: Option<Spanned<f64>>,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            kind: Spanned::new(0..0, "dirichlet".into()),
            theta: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub tau: Spanned<f64>,
    /// right end of the interval, `1` unless a sub-interval is wanted
    pub t_end: Spanned<f64>,
    pub grid_n: Spanned<usize>,
    pub branches: Spanned<usize>,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            tau: Spanned::new(0..0, 0.5),
            t_end: Spanned::new(0..0, 1.0),
            grid_n: Spanned::new(0..0, 33),
            branches: Spanned::new(0..0, 4),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub index: Option<Spanned<usize>>,
    pub lambda0: Option<Spanned<f64>>,
    #[serde(default = "one")]
    pub t0: Spanned<f64>,
}

fn one() -> Spanned<f64> {
    Spanned::new(0..0, 1.0)
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            index: None,
            lambda0: None,
            t0: one(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// relative to `max(1, |Λ|)`
    pub cluster_tol: Spanned<f64>,
    /// relative to `max(1, |Λ|)`
    pub group_tol: Spanned<f64>,
    /// finite-difference steps relative to `t0`
    pub fd_steps: Spanned<Vec<f64>>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cluster_tol: Spanned::new(0..0, 1e-6),
            group_tol: Spanned::new(0..0, 1e-5),
            fd_steps: Spanned::new(0..0, vec![1e-2, 5e-3, 2.5e-3]),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// A parsed and validated configuration with its source text.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: FlowConfig,
    src: String,
}

fn line_of(src: &str, span: &Range<usize>) -> Option<usize> {
    if span.start == 0 && span.end == 0 {
        return None;
    }
    Some(src[..span.start.min(src.len())].matches('\n').count() + 1)
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Validation {
        field: "--config".into(),
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse(&src)
}

pub fn parse(src: &str) -> Result<Loaded, CliError> {
    let config: FlowConfig = toml::from_str(src).map_err(|e| CliError::Validation {
        field: "config".into(),
        line: e.span().and_then(|s| line_of(src, &s)),
        message: e.message().to_string(),
    })?;
    let loaded = Loaded {
        config,
        src: src.to_string(),
    };
    loaded.validate()?;
    Ok(loaded)
}

impl Loaded {
    fn err<T>(&self, field: &str, span: &Range<usize>, message: impl Into<String>) -> Result<T, CliError> {
        Err(CliError::Validation {
            field: field.into(),
            line: line_of(&self.src, span),
            message: message.into(),
        })
    }

    fn positive(&self, field: &str, v: &Spanned<f64>) -> Result<f64, CliError> {
        let x = *v.get_ref();
        if !(x > 0.0 && x.is_finite()) {
            return self.err(field, &v.span(), format!("must be positive and finite, got {x}"));
        }
        Ok(x)
    }

    fn required<'a, T>(&self, field: &str, v: &'a Option<Spanned<T>>, section: &Spanned<String>) -> Result<&'a Spanned<T>, CliError> {
        match v {
            Some(x) => Ok(x),
            None => self.err(
                field,
                &section.span(),
                format!("required for kind \"{}\"", section.get_ref()),
            ),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        self.positive("mesh.h", &c.mesh.h)?;
        self.domain()?;
        self.potential_of("potential", &c.potential)?;
        self.bc(1)?;
        let tau = *c.flow.tau.get_ref();
        if !(tau > 0.0 && tau < 1.0) {
            return self.err("flow.tau", &c.flow.tau.span(), format!("must lie in (0, 1), got {tau}"));
        }
        let t_end = *c.flow.t_end.get_ref();
        if !(t_end > tau && t_end <= 1.0) {
            return self.err("flow.t_end", &c.flow.t_end.span(), format!("must lie in (tau, 1], got {t_end}"));
        }
        if *c.flow.grid_n.get_ref() < 2 {
            return self.err("flow.grid_n", &c.flow.grid_n.span(), "must be at least 2");
        }
        if *c.flow.branches.get_ref() == 0 {
            return self.err("flow.branches", &c.flow.branches.span(), "must be at least 1");
        }
        let t0 = *c.target.t0.get_ref();
        if !(t0 > 0.0 && t0 <= 1.0) {
            return self.err("target.t0", &c.target.t0.span(), format!("must lie in (0, 1], got {t0}"));
        }
        if let Some(i) = &c.target.index {
            if *i.get_ref() == 0 {
                return self.err("target.index", &i.span(), "indices start at 1");
            }
        }
        if let Some(l) = &c.target.lambda0 {
            if !l.get_ref().is_finite() {
                return self.err("target.lambda0", &l.span(), "must be finite");
            }
        }
        self.positive("tolerances.cluster_tol", &c.tolerances.cluster_tol)?;
        self.positive("tolerances.group_tol", &c.tolerances.group_tol)?;
        let steps = &c.tolerances.fd_steps;
        if steps.get_ref().len() < 2 || steps.get_ref().iter().any(|s| !(*s > 0.0 && *s < 0.5)) {
            return self.err(
                "tolerances.fd_steps",
                &steps.span(),
                "needs at least two steps, each in (0, 0.5)",
            );
        }
        if steps.get_ref().windows(2).any(|w| w[1] >= w[0]) {
            return self.err("tolerances.fd_steps", &steps.span(), "steps must be strictly decreasing");
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<BoundarySpec, CliError> {
        let d = &self.config.domain;
        let samples = d.samples.as_ref().map(|s| *s.get_ref()).unwrap_or(256);
        match d.kind.get_ref().as_str() {
            "disc" => {
                let r = match &d.radius {
                    Some(r) => self.positive("domain.radius", r)?,
                    None => 1.0,
                };
                Ok(BoundarySpec::disc(r, samples))
            }
            "square" => {
                let s = match &d.side {
                    Some(s) => self.positive("domain.side", s)?,
                    None => 1.0,
                };
                Ok(BoundarySpec::centered_square(s))
            }
            "rectangle" => {
                let w = self.positive("domain.width", self.required("domain.width", &d.width, &d.kind)?)?;
                let h = self.positive("domain.height", self.required("domain.height", &d.height, &d.kind)?)?;
                Ok(BoundarySpec::centered_rectangle(w, h))
            }
            "radial" => {
                let cos = self.required("domain.cos", &d.cos, &d.kind)?;
                let a = cos.get_ref().clone();
                let b = d.sin.as_ref().map(|s| s.get_ref().clone()).unwrap_or_default();
                if a.is_empty() {
                    return self.err("domain.cos", &cos.span(), "needs at least the constant term");
                }
                let wobble: f64 = a[1..].iter().chain(&b).map(|x| x.abs()).sum();
                if a[0] <= wobble {
                    return self.err(
                        "domain.cos",
                        &cos.span(),
                        "constant term must exceed the sum of the other magnitudes",
                    );
                }
                let profile = move |th: f64| {
                    let mut r = a[0];
                    for (k, c) in a.iter().enumerate().skip(1) {
                        r += c * (k as f64 * th).cos();
                    }
                    for (k, s) in b.iter().enumerate() {
                        r += s * ((k + 1) as f64 * th).sin();
                    }
                    r
                };
                Ok(BoundarySpec::Radial {
                    profile: Arc::new(profile),
                    samples,
                })
            }
            "polygon" => {
                let v = self.required("domain.vertices", &d.vertices, &d.kind)?;
                if v.get_ref().len() < 3 {
                    return self.err("domain.vertices", &v.span(), "needs at least three vertices");
                }
                Ok(BoundarySpec::Polygon(v.get_ref().clone()))
            }
            other => self.err(
                "domain.kind",
                &d.kind.span(),
                format!("unknown domain \"{other}\" (disc, square, rectangle, radial, polygon)"),
            ),
        }
    }

    pub fn potential(&self) -> Result<MatrixPotential, CliError> {
        self.potential_of("potential", &self.config.potential)
    }

    fn pair(&self, field: &str, v: &Spanned<Vec<f64>>) -> Result<[f64; 2], CliError> {
        match v.get_ref().as_slice() {
            [x, y] => Ok([*x, *y]),
            _ => self.err(field, &v.span(), "expected two numbers"),
        }
    }

    fn potential_of(&self, prefix: &str, p: &PotentialConfig) -> Result<MatrixPotential, CliError> {
        let f = |name: &str| format!("{prefix}.{name}");
        let num = |name: &str, v: &Option<Spanned<f64>>| -> Result<f64, CliError> {
            Ok(*self.required(&f(name), v, &p.kind)?.get_ref())
        };
        match p.kind.get_ref().as_str() {
            "zero" => {
                let n = p.components.as_ref().map(|c| *c.get_ref()).unwrap_or(1);
                if n == 0 {
                    return self.err(&f("components"), &p.kind.span(), "must be at least 1");
                }
                Ok(MatrixPotential::zero(n))
            }
            "constant" => Ok(MatrixPotential::constant(num("value", &p.value)?)),
            "linear" => Ok(MatrixPotential::linear(self.pair(&f("a"), self.required(&f("a"), &p.a, &p.kind)?)?)),
            "quadratic" => {
                let q = self.required(&f("q"), &p.q, &p.kind)?;
                let rows = q.get_ref();
                if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                    return self.err(&f("q"), &q.span(), "expected a 2×2 matrix");
                }
                if (rows[0][1] - rows[1][0]).abs() > 1e-14 * (1.0 + rows[0][1].abs()) {
                    return self.err(&f("q"), &q.span(), "must be symmetric");
                }
                Ok(MatrixPotential::quadratic([[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]]))
            }
            "gaussian" => {
                let amp = num("amplitude", &p.amplitude)?;
                let c = self.pair(&f("center"), self.required(&f("center"), &p.center, &p.kind)?)?;
                let w = self.positive(&f("width"), self.required(&f("width"), &p.width, &p.kind)?)?;
                Ok(MatrixPotential::gaussian(amp, c, w))
            }
            "coupled" => Ok(MatrixPotential::coupled(
                num("scale", &p.scale)?,
                num("b", &p.b)?,
                num("kappa", &p.kappa)?,
            )),
            "diagonal" => {
                let parts = self.required(&f("parts"), &p.parts, &p.kind)?;
                if parts.get_ref().is_empty() {
                    return self.err(&f("parts"), &parts.span(), "needs at least one part");
                }
                let built = parts
                    .get_ref()
                    .iter()
                    .enumerate()
                    .map(|(i, q)| self.potential_of(&format!("{prefix}.parts[{i}]"), q))
                    .collect::<Result<Vec<_>, _>>()?;
                if built.iter().any(|q| q.components() != 1) {
                    return self.err(&f("parts"), &parts.span(), "parts must be scalar potentials");
                }
                MatrixPotential::diagonal(built).or_else(|e| self.err(&f("parts"), &parts.span(), e.to_string()))
            }
            "polynomial" => {
                let n = *self.required(&f("components"), &p.components, &p.kind)?.get_ref();
                let entries = self.required(&f("entries"), &p.entries, &p.kind)?;
                if n == 0 {
                    return self.err(&f("components"), &p.kind.span(), "must be at least 1");
                }
                let mut out = Vec::new();
                for e in entries.get_ref() {
                    if e.row > e.col || e.col >= n {
                        return self.err(
                            &f("entries"),
                            &entries.span(),
                            format!("entry ({}, {}) must satisfy row ≤ col < {n}", e.row, e.col),
                        );
                    }
                    let mut terms = Vec::new();
                    for [c, px, py] in &e.terms {
                        if *px < 0.0 || *py < 0.0 || px.fract() != 0.0 || py.fract() != 0.0 {
                            return self.err(&f("entries"), &entries.span(), "exponents must be non-negative integers");
                        }
                        terms.push(Monomial::new(*c, *px as u32, *py as u32));
                    }
                    out.push(((e.row, e.col), terms));
                }
                Ok(polynomial(n, "polynomial", out))
            }
            other => self.err(
                &f("kind"),
                &p.kind.span(),
                format!(
                    "unknown potential \"{other}\" (zero, constant, linear, quadratic, gaussian, diagonal, coupled, polynomial)"
                ),
            ),
        }
    }

    /// Boundary condition for an `n`-component potential.
    pub fn bc(&self, n: usize) -> Result<BoundaryCondition, CliError> {
        let b = &self.config.bc;
        match b.kind.get_ref().as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::neumann(n)),
            "robin" => {
                let theta = self.required("bc.theta", &b.theta, &b.kind)?;
                if !theta.get_ref().is_finite() {
                    return self.err("bc.theta", &theta.span(), "must be finite");
                }
                Ok(BoundaryCondition::robin_constant(n, *theta.get_ref()))
            }
            other => self.err(
                "bc.kind",
                &b.kind.span(),
                format!("unknown boundary condition \"{other}\" (dirichlet, robin, neumann)"),
            ),
        }
    }

    pub fn h(&self) -> f64 {
        *self.config.mesh.h.get_ref()
    }

    pub fn interval(&self) -> (f64, f64) {
        (*self.config.flow.tau.get_ref(), *self.config.flow.t_end.get_ref())
    }

    pub fn grid_n(&self) -> usize {
        *self.config.flow.grid_n.get_ref()
    }

    pub fn branches(&self) -> usize {
        *self.config.flow.branches.get_ref()
    }

    pub fn t0(&self) -> f64 {
        *self.config.target.t0.get_ref()
    }

    pub fn index(&self) -> Result<usize, CliError> {
        match &self.config.target.index {
            Some(i) => Ok(*i.get_ref()),
            None => self.err("target.index", &(0..0), "required by this command"),
        }
    }

    pub fn lambda0(&self) -> Result<f64, CliError> {
        match &self.config.target.lambda0 {
            Some(l) => Ok(*l.get_ref()),
            None => self.err("target.lambda0", &(0..0), "required by this command"),
        }
    }

    pub fn cluster_tol(&self) -> f64 {
        *self.config.tolerances.cluster_tol.get_ref()
    }

    pub fn group_tol(&self) -> f64 {
        *self.config.tolerances.group_tol.get_ref()
    }

    pub fn fd_steps(&self) -> &[f64] {
        self.config.tolerances.fd_steps.get_ref()
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.config.output.dir.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[domain]\nkind = \"square\"\n\n[mesh]\nh = 0.2\n";

    fn field_and_line(src: &str) -> (String, Option<usize>) {
        match parse(src) {
            Err(CliError::Validation { field, line, .. }) => (field, line),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.interval(), (0.5, 1.0));
        assert_eq!(c.grid_n(), 33);
        assert_eq!(c.fd_steps(), &[1e-2, 5e-3, 2.5e-3]);
        assert_eq!(c.potential().unwrap().name(), "zero");
    }

    #[test]
    fn tau_zero_names_field_and_line() {
        let src = format!("{BASE}\n[flow]\ntau = 0.0\n");
        assert_eq!(field_and_line(&src), ("flow.tau".into(), Some(8)));
    }

    #[test]
    fn grid_and_tolerances_checked() {
        let (f, l) = field_and_line(&format!("{BASE}[flow]\ngrid_n = 1\n"));
        assert_eq!((f.as_str(), l), ("flow.grid_n", Some(7)));
        let (f, l) = field_and_line(&format!("{BASE}[tolerances]\ncluster_tol = -1e-3\n"));
        assert_eq!((f.as_str(), l), ("tolerances.cluster_tol", Some(7)));
        let (f, _) = field_and_line(&format!("{BASE}[tolerances]\nfd_steps = [1e-3, 1e-2]\n"));
        assert_eq!(f, "tolerances.fd_steps");
    }

    #[test]
    fn missing_potential_parameter() {
        let (f, l) = field_and_line(&format!("{BASE}[potential]\nkind = \"gaussian\"\namplitude = 1.0\n"));
        assert_eq!((f.as_str(), l), ("potential.center", Some(7)));
    }

    #[test]
    fn syntax_and_unknown_keys_report_lines() {
        let (f, l) = field_and_line(&format!("{BASE}[mesh2]\n"));
        assert_eq!(f, "config");
        assert_eq!(l, Some(6));
        let (_, l) = field_and_line("[domain]\nkind = \"disc\"\n[mesh]\nh = 0.1\nbogus = 1\n");
        assert_eq!(l, Some(5));
    }

    #[test]
    fn builds_every_potential_kind() {
        let kinds = [
            "kind = \"constant\"\nvalue = 2.0",
            "kind = \"linear\"\na = [1.0, 0.5]",
            "kind = \"quadratic\"\nq = [[1.0, 0.2], [0.2, 2.0]]",
            "kind = \"gaussian\"\namplitude = 1.0\ncenter = [0.0, 0.1]\nwidth = 0.3",
            "kind = \"coupled\"\nscale = 2.0\nb = 6.0\nkappa = 1.0",
            "kind = \"diagonal\"\nparts = [{ kind = \"constant\", value = 1.0 }, { kind = \"linear\", a = [1.0, 0.0] }]",
            "kind = \"polynomial\"\ncomponents = 2\nentries = [{ row = 0, col = 0, terms = [[1.0, 2, 0]] }, { row = 0, col = 1, terms = [[0.5, 0, 0]] }]",
        ];
        let sizes = [1, 1, 1, 1, 2, 2, 2];
        for (k, n) in kinds.iter().zip(sizes) {
            let c = parse(&format!("{BASE}[potential]\n{k}\n")).unwrap();
            assert_eq!(c.potential().unwrap().components(), n, "{k}");
        }
    }

    #[test]
    fn polynomial_matches_builtin_quadratic() {
        let c = parse(&format!(
            "{BASE}[potential]\nkind = \"polynomial\"\ncomponents = 1\nentries = [{{ row = 0, col = 0, terms = [[1.0, 2, 0], [0.4, 1, 1], [2.0, 0, 2]] }}]\n"
        ))
        .unwrap();
        let p = c.potential().unwrap();
        let q = MatrixPotential::quadratic([[1.0, 0.2], [0.2, 2.0]]);
        let x = [0.3, -0.2];
        assert!((p.value(x)[(0, 0)] - q.value(x)[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn radial_profile_must_stay_positive() {
        let (f, _) = field_and_line("[domain]\nkind = \"radial\"\ncos = [1.0, 0.6]\nsin = [0.5]\n[mesh]\nh = 0.1\n");
        assert_eq!(f, "domain.cos");
        assert!(parse("[domain]\nkind = \"radial\"\ncos = [1.0, 0.1]\n[mesh]\nh = 0.1\n").is_ok());
    }
}

//! Run configuration: a flat INI-style file with `[section]` headers.
//!
//! ```text
//! seed = 7
//!
//! [problem]
//! domain = centered-square
//! h = 0.03125
//! phi = exp(|x|^2/2)
//! subsolution = |x|^2
//!
//! [model]
//! name = zero
//! b = (1 + |x|^2)*exp(|x|^2)
//! ```
//!
//! `#` and `;` start comments. Unknown sections and keys are rejected with
//! their line number. [`RunConfig::emit`] writes every key including
//! defaults, and parsing the emitted text gives back the same configuration.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::path::PathBuf;

use crate::diagnostics::PogorelovParams;
use crate::solver::SolverConfig;
use crate::P2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Domain selection.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainConfig {
    UnitSquare,
    CenteredSquare,
    UnitDisc,
    LShape,
    Rectangle { lower: P2, upper: P2 },
    Disc { center: P2, radius: f64 },
    RoundedRectangle { lower: P2, upper: P2, radius: f64 },
    Polygon { vertices: Vec<P2> },
}

impl DomainConfig {
    pub fn build(&self) -> crate::model::Domain {
        use crate::model::Domain;
        match self {
            DomainConfig::UnitSquare => Domain::unit_square(),
            DomainConfig::CenteredSquare => Domain::centered_unit_square(),
            DomainConfig::UnitDisc => Domain::unit_disc(),
            DomainConfig::LShape => Domain::l_shape(),
            DomainConfig::Rectangle { lower, upper } => Domain::Rectangle {
                lower: *lower,
                upper: *upper,
            },
            DomainConfig::Disc { center, radius } => Domain::Disc {
                center: *center,
                radius: *radius,
            },
            DomainConfig::RoundedRectangle {
                lower,
                upper,
                radius,
            } => Domain::RoundedRectangle {
                lower: *lower,
                upper: *upper,
                radius: *radius,
            },
            DomainConfig::Polygon { vertices } => Domain::polygon(vertices.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    /// Built-in manufactured problem; excludes the explicit problem keys and `[model]`.
    pub instance: Option<String>,
    pub domain: DomainConfig,
    pub h: f64,
    pub phi: Option<String>,
    pub subsolution: Option<String>,
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub name: Option<String>,
    /// Remaining `[model]` keys, passed to the model registry.
    pub params: BTreeMap<String, String>,
}

/// Names accepted in `checks.names`.
pub const CHECK_NAMES: &[&str] = &[
    "regularity",
    "structure",
    "a0-eigenvalue",
    "b-positive",
    "subsolution",
    "strict-subsolution",
    "a-bounded",
    "uniform-a-convexity",
    "domain-c-convexity",
    "solution-c-convexity",
    "barrier",
    "comparison",
];

/// Checks that need a solved iterate.
pub const SOLUTION_CHECKS: &[&str] =
    &["a-bounded", "solution-c-convexity", "barrier", "comparison"];

#[derive(Debug, Clone, PartialEq)]
pub struct ChecksConfig {
    pub names: Vec<String>,
    /// Points per axis of the `x` sample grid.
    pub x_samples: usize,
    /// Random `p` samples (the origin is always added).
    pub p_samples: usize,
    /// `None` means 1.5 times the gradient range of the iterate.
    pub p_radius: Option<f64>,
    pub directions: usize,
    pub mu0: f64,
    pub delta0: f64,
    /// Random `y` samples for domain c-convexity, in `[−y_radius, y_radius]²`.
    pub y_samples: usize,
    pub y_radius: f64,
    pub polygon: usize,
    pub boundary_samples: usize,
    pub phi_bar: String,
    pub barrier_slack: f64,
    /// `solve` rejects a subsolution failing the non-strict check (exit 4).
    pub gate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub hs: Vec<f64>,
    pub pogorelov: PogorelovParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub vtk: bool,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub checks: ChecksConfig,
    pub study: StudyConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            problem: ProblemConfig {
                instance: None,
                domain: DomainConfig::CenteredSquare,
                h: 1.0 / 32.0,
                phi: None,
                subsolution: None,
                exact: None,
            },
            model: ModelConfig {
                name: None,
                params: BTreeMap::new(),
            },
            solver: SolverConfig::default(),
            checks: ChecksConfig {
                names: ["regularity", "structure", "a0-eigenvalue", "subsolution"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                x_samples: 6,
                p_samples: 48,
                p_radius: None,
                directions: crate::conditions::DIRECTION_SAMPLES,
                mu0: 1.0,
                delta0: 0.0,
                y_samples: 8,
                y_radius: 2.0,
                polygon: 256,
                boundary_samples: 128,
                phi_bar: "|x|^2".into(),
                barrier_slack: 0.1,
                gate: true,
            },
            study: StudyConfig {
                hs: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
                pogorelov: PogorelovParams::default(),
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
                csv: true,
                vtk: false,
                trace: true,
            },
        }
    }
}

type Entries = BTreeMap<String, BTreeMap<String, (usize, String)>>;

const SECTIONS: &[&str] = &[
    "", "problem", "model", "solver", "checks", "study", "output",
];

fn split(text: &str) -> Result<Entries, ConfigError> {
    let mut out: Entries = BTreeMap::new();
    let mut section = String::new();
    out.insert(section.clone(), BTreeMap::new());
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(Some(line_no), "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) || name.is_empty() {
                return Err(err(Some(line_no), format!("unknown section [{name}]")));
            }
            if out.contains_key(name) {
                return Err(err(Some(line_no), format!("duplicate section [{name}]")));
            }
            section = name.to_string();
            out.insert(section.clone(), BTreeMap::new());
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(Some(line_no), format!("expected key = value, got {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(err(Some(line_no), "empty key"));
        }
        let sec = out.get_mut(&section).expect("section inserted");
        if sec.contains_key(k) {
            return Err(err(Some(line_no), format!("duplicate key {k:?}")));
        }
        sec.insert(k.to_string(), (line_no, v.to_string()));
    }
    Ok(out)
}

struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, (usize, String)>,
}

impl<'a> Section<'a> {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(
        &mut self,
        key: &str,
        what: &str,
    ) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                err(
                    Some(line),
                    format!("{}: expected {what}, got {v:?}", self.qualified(key)),
                )
            }),
        }
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parse(key, "true or false")
    }

    fn point(&mut self, key: &str) -> Result<Option<P2>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => parse_point(&v).map(Some).ok_or_else(|| {
                err(
                    Some(line),
                    format!("{}: expected x,y, got {v:?}", self.qualified(key)),
                )
            }),
        }
    }

    fn require_point(&mut self, key: &str, domain_line: usize) -> Result<P2, ConfigError> {
        self.point(key)?.ok_or_else(|| {
            err(
                Some(domain_line),
                format!("domain needs {}", self.qualified(key)),
            )
        })
    }

    fn list(&mut self, key: &str) -> Option<(usize, Vec<String>)> {
        self.take(key).map(|(line, v)| {
            (
                line,
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            )
        })
    }

    fn qualified(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().min_by_key(|(_, (l, _))| *l) {
            Some((k, (line, _))) => Err(err(
                Some(*line),
                format!("unknown key {:?}", self.qualified(k)),
            )),
            None => Ok(()),
        }
    }
}

fn parse_point(v: &str) -> Option<P2> {
    let mut it = v.split(',').map(|s| s.trim().parse::<f64>());
    let x = it.next()?.ok()?;
    let y = it.next()?.ok()?;
    if it.next().is_some() {
        return None;
    }
    Some(P2::new(x, y))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut entries = split(text)?;
        let mut section = |name: &'static str| Section {
            name,
            entries: entries.remove(name).unwrap_or_default(),
        };
        let mut cfg = RunConfig::default();

        let mut top = section("");
        if let Some(s) = top.parse("seed", "a non-negative integer")? {
            cfg.seed = s;
        }
        top.finish()?;

        let mut p = section("problem");
        let instance = p.take("instance");
        if let Some((line, name)) = &instance {
            if !crate::instances::INSTANCE_NAMES.contains(&name.as_str()) {
                return Err(err(
                    Some(*line),
                    format!(
                        "unknown instance {name:?} (known: {})",
                        crate::instances::INSTANCE_NAMES.join(", ")
                    ),
                ));
            }
            for key in ["domain", "phi", "subsolution", "exact"] {
                if let Some((l, _)) = p.entries.get(key) {
                    return Err(err(
                        Some(*l),
                        format!("problem.{key} cannot be combined with problem.instance"),
                    ));
                }
            }
            cfg.problem.instance = Some(name.clone());
        }
        if let Some(h) = p.parse("h", "a number")? {
            cfg.problem.h = h;
        }
        if !(cfg.problem.h > 0.0) {
            return Err(err(None, "problem.h must be positive"));
        }
        if let Some((line, d)) = p.take("domain") {
            cfg.problem.domain = match d.as_str() {
                "unit-square" => DomainConfig::UnitSquare,
                "centered-square" => DomainConfig::CenteredSquare,
                "unit-disc" => DomainConfig::UnitDisc,
                "l-shape" => DomainConfig::LShape,
                "rectangle" => DomainConfig::Rectangle {
                    lower: p.require_point("lower", line)?,
                    upper: p.require_point("upper", line)?,
                },
                "disc" => DomainConfig::Disc {
                    center: p.require_point("center", line)?,
                    radius: p
                        .parse("radius", "a number")?
                        .ok_or_else(|| err(Some(line), "domain needs problem.radius"))?,
                },
                "rounded-rectangle" => DomainConfig::RoundedRectangle {
                    lower: p.require_point("lower", line)?,
                    upper: p.require_point("upper", line)?,
                    radius: p
                        .parse("radius", "a number")?
                        .ok_or_else(|| err(Some(line), "domain needs problem.radius"))?,
                },
                "polygon" => {
                    let (vl, v) = p
                        .take("vertices")
                        .ok_or_else(|| err(Some(line), "domain needs problem.vertices"))?;
                    let vertices = v
                        .split('|')
                        .map(parse_point)
                        .collect::<Option<Vec<_>>>()
                        .filter(|v| v.len() >= 3)
                        .ok_or_else(|| {
                            err(Some(vl), "problem.vertices: expected x,y | x,y | x,y ...")
                        })?;
                    DomainConfig::Polygon { vertices }
                }
                other => return Err(err(Some(line), format!("unknown domain {other:?}"))),
            };
        }
        for (key, slot) in [
            ("phi", &mut cfg.problem.phi),
            ("subsolution", &mut cfg.problem.subsolution),
            ("exact", &mut cfg.problem.exact),
        ] {
            if let Some((line, v)) = p.take(key) {
                v.parse::<crate::expr::Expr>()
                    .map_err(|e| err(Some(line), format!("problem.{key}: {e}")))?;
                *slot = Some(v);
            }
        }
        p.finish()?;

        let mut m = section("model");
        if let Some((line, _)) = m.entries.values().min_by_key(|(l, _)| *l) {
            if cfg.problem.instance.is_some() {
                return Err(err(
                    Some(*line),
                    "[model] cannot be combined with problem.instance",
                ));
            }
        }
        cfg.model.name = m.take("name").map(|(_, v)| v);
        cfg.model.params = std::mem::take(&mut m.entries)
            .into_iter()
            .map(|(k, (_, v))| (k, v))
            .collect();

        let mut s = section("solver");
        let sc = &mut cfg.solver;
        if let Some(v) = s.parse("tol", "a number")? {
            sc.tol = v;
        }
        if let Some(v) = s.parse("max_newton", "an integer")? {
            sc.max_newton = v;
        }
        if let Some(v) = s.parse("t_step0", "a number")? {
            sc.t_step0 = v;
        }
        if let Some(v) = s.parse("min_step", "a number")? {
            sc.min_step = v;
        }
        if let Some(v) = s.parse("eps_ell_factor", "a number")? {
            sc.eps_ell_factor = v;
        }
        if let Some(v) = s.parse("max_halvings", "an integer")? {
            sc.max_halvings = v;
        }
        if let Some(v) = s.parse("fast_iters", "an integer")? {
            sc.fast_iters = v;
        }
        s.finish()?;

        let mut c = section("checks");
        let cc = &mut cfg.checks;
        if let Some((line, names)) = c.list("names") {
            if let Some(bad) = names.iter().find(|n| !CHECK_NAMES.contains(&n.as_str())) {
                return Err(err(
                    Some(line),
                    format!("unknown check {bad:?} (known: {})", CHECK_NAMES.join(", ")),
                ));
            }
            cc.names = names;
        }
        if let Some(v) = c.parse("x_samples", "an integer")? {
            cc.x_samples = v;
        }
        if let Some(v) = c.parse("p_samples", "an integer")? {
            cc.p_samples = v;
        }
        if let Some((line, v)) = c.take("p_radius") {
            cc.p_radius =
                if v == "auto" {
                    None
                } else {
                    Some(v.parse().map_err(|_| {
                        err(Some(line), "checks.p_radius: expected a number or auto")
                    })?)
                };
        }
        if let Some(v) = c.parse("directions", "an integer")? {
            cc.directions = v;
        }
        if let Some(v) = c.parse("mu0", "a number")? {
            cc.mu0 = v;
        }
        if let Some(v) = c.parse("delta0", "a number")? {
            cc.delta0 = v;
        }
        if let Some(v) = c.parse("y_samples", "an integer")? {
            cc.y_samples = v;
        }
        if let Some(v) = c.parse("y_radius", "a number")? {
            cc.y_radius = v;
        }
        if let Some(v) = c.parse("polygon", "an integer")? {
            cc.polygon = v;
        }
        if let Some(v) = c.parse("boundary_samples", "an integer")? {
            cc.boundary_samples = v;
        }
        if let Some((line, v)) = c.take("phi_bar") {
            v.parse::<crate::expr::Expr>()
                .map_err(|e| err(Some(line), format!("checks.phi_bar: {e}")))?;
            cc.phi_bar = v;
        }
        if let Some(v) = c.parse("barrier_slack", "a number")? {
            cc.barrier_slack = v;
        }
        if let Some(v) = c.bool("gate")? {
            cc.gate = v;
        }
        c.finish()?;

        let mut st = section("study");
        if let Some((line, hs)) = st.list("h") {
            cfg.study.hs = hs
                .iter()
                .map(|h| h.parse::<f64>().ok().filter(|h| *h > 0.0))
                .collect::<Option<_>>()
                .ok_or_else(|| err(Some(line), "study.h: expected a list of positive numbers"))?;
        }
        if let Some(v) = st.parse("pogorelov_a", "a number")? {
            cfg.study.pogorelov.a = v;
        }
        if let Some(v) = st.parse("pogorelov_b", "a number")? {
            cfg.study.pogorelov.b = v;
        }
        if let Some(v) = st.parse("pogorelov_k", "a number")? {
            cfg.study.pogorelov.k = v;
        }
        st.finish()?;

        let mut o = section("output");
        if let Some((_, v)) = o.take("dir") {
            cfg.output.dir = PathBuf::from(v);
        }
        if let Some((line, formats)) = o.list("formats") {
            cfg.output
                .set_formats(&formats)
                .map_err(|m| err(Some(line), m))?;
        }
        if let Some(v) = o.bool("trace")? {
            cfg.output.trace = v;
        }
        o.finish()?;
        Ok(cfg)
    }

    /// Every setting, defaults included, in the format [`RunConfig::parse`] reads.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        writeln!(
            w,
            "# resolved configuration (expression grammar v{})",
            crate::expr::GRAMMAR_VERSION
        )
        .unwrap();
        writeln!(w, "seed = {}", self.seed).unwrap();
        writeln!(w, "\n[problem]").unwrap();
        let p = &self.problem;
        match &p.instance {
            Some(name) => writeln!(w, "instance = {name}").unwrap(),
            None => {
                match &p.domain {
                    DomainConfig::UnitSquare => writeln!(w, "domain = unit-square").unwrap(),
                    DomainConfig::CenteredSquare => writeln!(w, "domain = centered-square").unwrap(),
                    DomainConfig::UnitDisc => writeln!(w, "domain = unit-disc").unwrap(),
                    DomainConfig::LShape => writeln!(w, "domain = l-shape").unwrap(),
                    DomainConfig::Rectangle { lower, upper } => {
                        writeln!(w, "domain = rectangle\nlower = {},{}\nupper = {},{}", lower.x, lower.y, upper.x, upper.y)
                            .unwrap()
                    }
                    DomainConfig::Disc { center, radius } => {
                        writeln!(w, "domain = disc\ncenter = {},{}\nradius = {radius}", center.x, center.y).unwrap()
                    }
                    DomainConfig::RoundedRectangle { lower, upper, radius } => writeln!(
                        w,
                        "domain = rounded-rectangle\nlower = {},{}\nupper = {},{}\nradius = {radius}",
                        lower.x, lower.y, upper.x, upper.y
                    )
                    .unwrap(),
                    DomainConfig::Polygon { vertices } => {
                        let v: Vec<String> = vertices.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
                        writeln!(w, "domain = polygon\nvertices = {}", v.join(" | ")).unwrap()
                    }
                }
                for (k, v) in [
                    ("phi", &p.phi),
                    ("subsolution", &p.subsolution),
                    ("exact", &p.exact),
                ] {
                    if let Some(v) = v {
                        writeln!(w, "{k} = {v}").unwrap();
                    }
                }
            }
        }
        writeln!(w, "h = {}", p.h).unwrap();
        if p.instance.is_none() {
            writeln!(w, "\n[model]").unwrap();
            if let Some(n) = &self.model.name {
                writeln!(w, "name = {n}").unwrap();
            }
            for (k, v) in &self.model.params {
                writeln!(w, "{k} = {v}").unwrap();
            }
        }
        let sc = &self.solver;
        writeln!(
            w,
            "\n[solver]\ntol = {}\nmax_newton = {}\nt_step0 = {}\nmin_step = {}\neps_ell_factor = {}\nmax_halvings = {}\nfast_iters = {}",
            sc.tol, sc.max_newton, sc.t_step0, sc.min_step, sc.eps_ell_factor, sc.max_halvings, sc.fast_iters
        )
        .unwrap();
        let c = &self.checks;
        writeln!(w, "\n[checks]\nnames = {}", c.names.join(",")).unwrap();
        writeln!(
            w,
            "x_samples = {}\np_samples = {}",
            c.x_samples, c.p_samples
        )
        .unwrap();
        match c.p_radius {
            Some(r) => writeln!(w, "p_radius = {r}").unwrap(),
            None => writeln!(w, "p_radius = auto").unwrap(),
        }
        writeln!(
            w,
            "directions = {}\nmu0 = {}\ndelta0 = {}\ny_samples = {}\ny_radius = {}\npolygon = {}\nboundary_samples = {}\nphi_bar = {}\nbarrier_slack = {}\ngate = {}",
            c.directions, c.mu0, c.delta0, c.y_samples, c.y_radius, c.polygon, c.boundary_samples, c.phi_bar, c.barrier_slack, c.gate
        )
        .unwrap();
        let hs: Vec<String> = self.study.hs.iter().map(|h| h.to_string()).collect();
        let pg = &self.study.pogorelov;
        writeln!(
            w,
            "\n[study]\nh = {}\npogorelov_a = {}\npogorelov_b = {}\npogorelov_k = {}",
            hs.join(","),
            pg.a,
            pg.b,
            pg.k
        )
        .unwrap();
        let o = &self.output;
        writeln!(
            w,
            "\n[output]\ndir = {}\nformats = {}\ntrace = {}",
            o.dir.display(),
            o.formats().join(","),
            o.trace
        )
        .unwrap();
        s
    }
}

impl OutputConfig {
    pub fn set_formats(&mut self, formats: &[String]) -> Result<(), String> {
        self.csv = false;
        self.vtk = false;
        for f in formats {
            match f.as_str() {
                "csv" => self.csv = true,
                "vtk" => self.vtk = true,
                other => return Err(format!("unknown output format {other:?} (csv, vtk)")),
            }
        }
        Ok(())
    }

    pub fn formats(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.csv {
            v.push("csv");
        }
        if self.vtk {
            v.push("vtk");
        }
        v
    }
}

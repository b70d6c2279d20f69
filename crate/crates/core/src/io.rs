//! Run configuration, binary snapshots, run manifests and plain-text tables.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::collision::{AngularQuadrature, CollisionConfig, Interpolation};
use crate::error::{Result, VpbError};
use crate::field_solver::PotentialField;
use crate::phase_space::{DistributionField, FluidTriple, SpatialGrid, VelocityGrid};
use crate::quasineutral::{check_assumption_a, ElectronDensityModel, WaveCurve};
use crate::rarefaction::RarefactionProfile;
use crate::vpb_solver::{Budget, KineticState, Limiter, SchemeKind, StepScheme};

/// Environment variable that overrides `output` (the only override honoured).
pub const OUTPUT_ENV: &str = "VPBLAB_OUTPUT";

const WAVE_CURVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub v_half_width: f64,
    pub n_v: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    GeneralGamma { gamma_e: f64, a_e: f64 },
    Boltzmann { a_e: f64 },
    Tabulated { table: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveConfig {
    pub rho_minus: f64,
    pub u1_minus: f64,
    pub theta_minus: f64,
    pub rho_plus: f64,
    pub u1_plus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    HardSphere,
    Bgk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSpec {
    pub mode: CollisionKind,
    pub bgk_rate: f64,
    pub angular_points: usize,
    pub interpolation: Interpolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub t_end: f64,
    pub cfl: f64,
    pub dt: Option<f64>,
    pub n_picard: usize,
    pub picard_tol: f64,
    pub limiter: Limiter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    /// `sup_x ‖h‖_M / √ρ` of the microscopic bump.
    pub amplitude: f64,
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub times: Vec<f64>,
    pub snapshots: bool,
    pub gbar: bool,
    pub poisson_tol: f64,
    pub gbar_tol: f64,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// In `0..=i64::MAX` so it survives a TOML round trip.
    pub seed: u64,
    pub output: PathBuf,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub wave: WaveConfig,
    pub collision: CollisionSpec,
    pub scheme: SchemeConfig,
    pub perturbation: PerturbationConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output: PathBuf::from("vpblab-run"),
            grid: GridConfig {
                x_min: -40.0,
                x_max: 560.0,
                n_x: 128,
                v_half_width: 5.5,
                n_v: 24,
            },
            model: ModelConfig::GeneralGamma { gamma_e: 2.0, a_e: 1.0 },
            wave: WaveConfig {
                rho_minus: 1.0,
                u1_minus: 0.0,
                theta_minus: 1.0,
                rho_plus: 1.3,
                u1_plus: None,
                theta_plus: None,
                epsilon: 0.2,
            },
            collision: CollisionSpec {
                mode: CollisionKind::Bgk,
                bgk_rate: 1.0,
                angular_points: 14,
                interpolation: Interpolation::MaxwellianWeighted,
            },
            scheme: SchemeConfig {
                kind: SchemeKind::StrangSplit,
                t_end: 200.0,
                cfl: 0.4,
                dt: None,
                n_picard: 8,
                picard_tol: 1e-12,
                limiter: Limiter::VanLeer,
            },
            perturbation: PerturbationConfig {
                amplitude: 1e-3,
                center: 0.0,
                half_width: 20.0,
            },
            report: ReportConfig {
                times: vec![20.0, 50.0, 100.0, 200.0],
                snapshots: true,
                gbar: true,
                poisson_tol: 1e-10,
                gbar_tol: 1e-8,
            },
        }
    }
}

const TOP_KEYS: [&str; 9] = [
    "seed",
    "output",
    "grid",
    "model",
    "wave",
    "collision",
    "scheme",
    "perturbation",
    "report",
];
const GRID_KEYS: [&str; 5] = ["x_min", "x_max", "n_x", "v_half_width", "n_v"];
const MODEL_KEYS: [&str; 4] = ["kind", "gamma_e", "a_e", "table"];
const WAVE_KEYS: [&str; 7] = [
    "rho_minus",
    "u1_minus",
    "theta_minus",
    "rho_plus",
    "u1_plus",
    "theta_plus",
    "epsilon",
];
const COLLISION_KEYS: [&str; 4] = ["mode", "bgk_rate", "angular_points", "interpolation"];
const SCHEME_KEYS: [&str; 7] = ["kind", "t_end", "cfl", "dt", "n_picard", "picard_tol", "limiter"];
const PERTURBATION_KEYS: [&str; 3] = ["amplitude", "center", "half_width"];
const REPORT_KEYS: [&str; 5] = ["times", "snapshots", "gbar", "poisson_tol", "gbar_tol"];

fn nearest<'a>(key: &str, valid: &[&'a str]) -> Option<&'a str> {
    valid
        .iter()
        .map(|v| (strsim::levenshtein(key, v), *v))
        .min_by_key(|(d, _)| *d)
        .map(|(_, v)| v)
}

/// Reads typed values out of one table while collecting every violation.
struct Section<'a> {
    name: &'a str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, table: Option<&'a Table>, valid: &[&str], errors: &'a mut Vec<String>) -> Self {
        if let Some(t) = table {
            for key in t.keys() {
                if !valid.contains(&key.as_str()) {
                    let hint = nearest(key, valid)
                        .map(|n| format!("; did you mean `{n}`?"))
                        .unwrap_or_default();
                    errors.push(format!("unknown key `{key}` in [{name}]{hint}"));
                }
            }
        }
        Self { name, table, errors }
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        match self.raw(key) {
            None => default,
            Some(Value::Float(v)) => *v,
            Some(Value::Integer(v)) => *v as f64,
            Some(other) => {
                self.errors.push(format!(
                    "[{}] {key}: expected a number, found {}",
                    self.name,
                    other.type_str()
                ));
                default
            }
        }
    }

    fn opt_f64(&mut self, key: &str) -> Option<f64> {
        self.raw(key)?;
        Some(self.f64_or(key, f64::NAN))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(v)) if *v >= 0 => *v as usize,
            Some(other) => {
                self.errors.push(format!(
                    "[{}] {key}: expected a non-negative integer, found {}",
                    self.name,
                    other
                ));
                default
            }
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.errors.push(format!("[{}] {key}: expected a boolean, found {}", self.name, other.type_str()));
                default
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> T {
        match self.raw(key) {
            None => default,
            Some(Value::String(s)) => match options.iter().find(|(n, _)| n == s) {
                Some((_, v)) => *v,
                None => {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    self.errors.push(format!(
                        "[{}] {key}: unknown value `{s}`, expected one of {}",
                        self.name,
                        names.join(", ")
                    ));
                    default
                }
            },
            Some(other) => {
                self.errors.push(format!("[{}] {key}: expected a string, found {}", self.name, other.type_str()));
                default
            }
        }
    }

    fn f64_array(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        match self.raw(key) {
            None => default,
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for v in a {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(x) => out.push(*x as f64),
                        _ => {
                            self.errors.push(format!("[{}] {key}: array entries must be numbers", self.name));
                            return default;
                        }
                    }
                }
                out
            }
            Some(other) => {
                self.errors.push(format!("[{}] {key}: expected an array, found {}", self.name, other.type_str()));
                default
            }
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map(|s| s.chars().count()).unwrap_or(0) + 1;
    (line, col)
}

fn sub_table<'a>(root: &'a Table, name: &str, errors: &mut Vec<String>) -> Option<&'a Table> {
    match root.get(name) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(other) => {
            errors.push(format!("`{name}` must be a table, found {}", other.type_str()));
            None
        }
    }
}

/// Parses and validates a configuration, reporting every violation at once.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (l, c) = line_col(text, span.start);
                VpbError::Config(vec![format!("syntax error at line {l}, column {c}: {msg}")])
            }
            None => VpbError::Config(vec![format!("syntax error: {msg}")]),
        }
    })?;
    let d = RunConfig::default();
    let mut errors = Vec::new();
    for key in root.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            let hint = nearest(key, &TOP_KEYS).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
            errors.push(format!("unknown top-level key `{key}`{hint}"));
        }
    }
    let seed = match root.get("seed") {
        None => d.seed,
        Some(Value::Integer(v)) if *v >= 0 => *v as u64,
        Some(other) => {
            errors.push(format!("seed: expected a non-negative integer, found {other}"));
            d.seed
        }
    };
    let mut output = match root.get("output") {
        None => d.output.clone(),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(other) => {
            errors.push(format!("output: expected a string, found {}", other.type_str()));
            d.output.clone()
        }
    };
    if let Ok(o) = std::env::var(OUTPUT_ENV) {
        if !o.is_empty() {
            output = PathBuf::from(o);
        }
    }

    let t = sub_table(&root, "grid", &mut errors);
    let mut s = Section::new("grid", t, &GRID_KEYS, &mut errors);
    let grid = GridConfig {
        x_min: s.f64_or("x_min", d.grid.x_min),
        x_max: s.f64_or("x_max", d.grid.x_max),
        n_x: s.usize_or("n_x", d.grid.n_x),
        v_half_width: s.f64_or("v_half_width", d.grid.v_half_width),
        n_v: s.usize_or("n_v", d.grid.n_v),
    };

    let t = sub_table(&root, "model", &mut errors);
    let mut s = Section::new("model", t, &MODEL_KEYS, &mut errors);
    #[derive(Clone, Copy)]
    enum K {
        G,
        B,
        T,
    }
    let kind = s.choice("kind", K::G, &[("general_gamma", K::G), ("boltzmann", K::B), ("tabulated", K::T)]);
    let model = match kind {
        K::G => ModelConfig::GeneralGamma {
            gamma_e: s.f64_or("gamma_e", 2.0),
            a_e: s.f64_or("a_e", 1.0),
        },
        K::B => ModelConfig::Boltzmann { a_e: s.f64_or("a_e", 1.0) },
        K::T => {
            let mut table = Vec::new();
            match s.raw("table") {
                Some(Value::Array(rows)) => {
                    for (i, r) in rows.iter().enumerate() {
                        let pair = r.as_array().and_then(|p| {
                            if p.len() != 2 {
                                return None;
                            }
                            let num = |v: &Value| v.as_float().or_else(|| v.as_integer().map(|x| x as f64));
                            Some((num(&p[0])?, num(&p[1])?))
                        });
                        match pair {
                            Some(p) => table.push(p),
                            None => s.errors.push(format!("[model] table row {i}: expected [phi, rho]")),
                        }
                    }
                }
                _ => s.errors.push("[model] kind = \"tabulated\" needs `table = [[phi, rho], ...]`".into()),
            }
            ModelConfig::Tabulated { table }
        }
    };

    let t = sub_table(&root, "wave", &mut errors);
    let mut s = Section::new("wave", t, &WAVE_KEYS, &mut errors);
    let wave = WaveConfig {
        rho_minus: s.f64_or("rho_minus", d.wave.rho_minus),
        u1_minus: s.f64_or("u1_minus", d.wave.u1_minus),
        theta_minus: s.f64_or("theta_minus", d.wave.theta_minus),
        rho_plus: s.f64_or("rho_plus", d.wave.rho_plus),
        u1_plus: s.opt_f64("u1_plus"),
        theta_plus: s.opt_f64("theta_plus"),
        epsilon: s.f64_or("epsilon", d.wave.epsilon),
    };

    let t = sub_table(&root, "collision", &mut errors);
    let mut s = Section::new("collision", t, &COLLISION_KEYS, &mut errors);
    let collision = CollisionSpec {
        mode: s.choice(
            "mode",
            d.collision.mode,
            &[("bgk", CollisionKind::Bgk), ("hard_sphere", CollisionKind::HardSphere)],
        ),
        bgk_rate: s.f64_or("bgk_rate", d.collision.bgk_rate),
        angular_points: s.usize_or("angular_points", d.collision.angular_points),
        interpolation: s.choice(
            "interpolation",
            d.collision.interpolation,
            &[
                ("weighted", Interpolation::MaxwellianWeighted),
                ("trilinear", Interpolation::Trilinear),
            ],
        ),
    };

    let t = sub_table(&root, "scheme", &mut errors);
    let mut s = Section::new("scheme", t, &SCHEME_KEYS, &mut errors);
    let scheme = SchemeConfig {
        kind: s.choice(
            "kind",
            d.scheme.kind,
            &[("strang", SchemeKind::StrangSplit), ("iteration", SchemeKind::IterationScheme)],
        ),
        t_end: s.f64_or("t_end", d.scheme.t_end),
        cfl: s.f64_or("cfl", d.scheme.cfl),
        dt: s.opt_f64("dt"),
        n_picard: s.usize_or("n_picard", d.scheme.n_picard),
        picard_tol: s.f64_or("picard_tol", d.scheme.picard_tol),
        limiter: s.choice(
            "limiter",
            d.scheme.limiter,
            &[("van_leer", Limiter::VanLeer), ("upwind", Limiter::Upwind)],
        ),
    };

    let t = sub_table(&root, "perturbation", &mut errors);
    let mut s = Section::new("perturbation", t, &PERTURBATION_KEYS, &mut errors);
    let perturbation = PerturbationConfig {
        amplitude: s.f64_or("amplitude", d.perturbation.amplitude),
        center: s.f64_or("center", d.perturbation.center),
        half_width: s.f64_or("half_width", d.perturbation.half_width),
    };

    let t = sub_table(&root, "report", &mut errors);
    let mut s = Section::new("report", t, &REPORT_KEYS, &mut errors);
    let report = ReportConfig {
        times: s.f64_array("times", d.report.times.clone()),
        snapshots: s.bool_or("snapshots", d.report.snapshots),
        gbar: s.bool_or("gbar", d.report.gbar),
        poisson_tol: s.f64_or("poisson_tol", d.report.poisson_tol),
        gbar_tol: s.f64_or("gbar_tol", d.report.gbar_tol),
    };

    let cfg = RunConfig {
        seed,
        output,
        grid,
        model,
        wave,
        collision,
        scheme,
        perturbation,
        report,
    };
    errors.extend(cfg.semantic_errors());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(VpbError::Config(errors))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| VpbError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text)
}

impl RunConfig {
    fn semantic_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.seed > i64::MAX as u64 {
            e.push(format!("seed ({}) must fit a TOML integer (at most {})", self.seed, i64::MAX));
        }
        let g = &self.grid;
        if !(g.x_max > g.x_min) {
            e.push(format!("[grid] x_max ({}) must exceed x_min ({})", g.x_max, g.x_min));
        }
        if g.n_x < 2 {
            e.push(format!("[grid] n_x must be at least 2, got {}", g.n_x));
        }
        if g.n_v < 4 {
            e.push(format!("[grid] n_v must be at least 4, got {}", g.n_v));
        }
        if !(g.v_half_width > 0.0) {
            e.push(format!("[grid] v_half_width must be positive, got {}", g.v_half_width));
        }
        let w = &self.wave;
        if !(w.rho_minus > 0.0 && w.theta_minus > 0.0) {
            e.push("[wave] rho_minus and theta_minus must be positive".into());
        }
        if !(w.rho_plus > w.rho_minus) {
            e.push(format!(
                "[wave] a 3-rarefaction needs rho_plus > rho_minus ({} <= {})",
                w.rho_plus, w.rho_minus
            ));
        }
        if !(w.epsilon > 0.0) {
            e.push(format!("[wave] epsilon must be positive, got {}", w.epsilon));
        }
        match self.electron_model() {
            Err(err) => e.push(format!("[model] {err}")),
            Ok(m) => {
                let rep = check_assumption_a(&m, 400);
                if !rep.passed {
                    e.push(format!(
                        "[model] electron density violates the closure conditions: |rho_e(0)-1| = {:e}, min slope {:e} at phi = {}, min log-concavity margin {:e} at phi = {}",
                        rep.normalization_error, rep.min_slope, rep.min_slope_phi, rep.min_log_concavity, rep.min_log_concavity_phi
                    ));
                }
                if w.rho_plus > w.rho_minus && w.rho_minus > 0.0 && w.theta_minus > 0.0 {
                    match WaveCurve::new(w.rho_minus, w.u1_minus, w.theta_minus, &m) {
                        Err(err) => e.push(format!("[wave] {err}")),
                        Ok(curve) => {
                            match curve.u1_at(w.rho_plus) {
                                Ok(u) => {
                                    if let Some(up) = w.u1_plus {
                                        let r = (up - u).abs();
                                        if r > WAVE_CURVE_TOL * (1.0 + u.abs()) {
                                            e.push(format!(
                                                "[wave] right state is off the 3-wave curve: u1_plus = {up} but the curve gives {u} (residual {r:e})"
                                            ));
                                        }
                                    }
                                }
                                Err(err) => e.push(format!("[wave] {err}")),
                            }
                            let th = curve.theta_at(w.rho_plus);
                            if let Some(tp) = w.theta_plus {
                                let r = (tp - th).abs();
                                if r > WAVE_CURVE_TOL * th {
                                    e.push(format!(
                                        "[wave] right state is off the 3-wave curve: theta_plus = {tp} but the curve gives {th} (residual {r:e})"
                                    ));
                                }
                            }
                            let (lo, hi) = (w.theta_minus.min(th), w.theta_minus.max(th));
                            if !(hi < 2.0 * lo) {
                                e.push(format!(
                                    "[wave] no reference Maxwellian exists: theta range ({lo}, {hi}) needs theta_max < 2 theta_min"
                                ));
                            }
                        }
                    }
                }
            }
        }
        let c = &self.collision;
        if c.mode == CollisionKind::Bgk && !(c.bgk_rate > 0.0) {
            e.push(format!("[collision] bgk_rate must be positive, got {}", c.bgk_rate));
        }
        if AngularQuadrature::lebedev(c.angular_points).is_err() {
            e.push(format!(
                "[collision] angular_points must be one of 6, 14, 26, 38, 50, got {}",
                c.angular_points
            ));
        }
        let s = &self.scheme;
        if !(s.t_end > 0.0) {
            e.push(format!("[scheme] t_end must be positive, got {}", s.t_end));
        }
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            e.push(format!("[scheme] cfl must lie in (0, 1], got {}", s.cfl));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0) {
                e.push(format!("[scheme] dt must be positive, got {dt}"));
            } else if g.n_x >= 2 && g.n_v >= 4 && g.v_half_width > 0.0 && g.x_max > g.x_min {
                let bound = self.transport_dt_bound();
                if dt > bound {
                    e.push(format!("[scheme] dt = {dt} exceeds the transport CFL bound {bound}"));
                }
            }
        }
        if s.kind == SchemeKind::IterationScheme {
            if c.mode != CollisionKind::HardSphere {
                e.push("[scheme] kind = \"iteration\" requires [collision] mode = \"hard_sphere\"".into());
            }
            if s.n_picard == 0 {
                e.push("[scheme] n_picard must be at least 1".into());
            }
        }
        let p = &self.perturbation;
        if !(p.amplitude >= 0.0) || !(p.half_width > 0.0) {
            e.push("[perturbation] amplitude must be >= 0 and half_width > 0".into());
        }
        let r = &self.report;
        if r.times.iter().any(|t| !(*t > 0.0) || *t > s.t_end) {
            e.push(format!("[report] times must lie in (0, t_end = {}]", s.t_end));
        }
        if r.times.windows(2).any(|w| !(w[1] > w[0])) {
            e.push("[report] times must be strictly increasing".into());
        }
        if !(r.poisson_tol > 0.0) || !(r.gbar_tol > 0.0) {
            e.push("[report] tolerances must be positive".into());
        }
        e
    }

    /// `dx / max|ξ₁|` for the configured grids.
    pub fn transport_dt_bound(&self) -> f64 {
        let g = &self.grid;
        let dx = (g.x_max - g.x_min) / g.n_x as f64;
        let h = 2.0 * g.v_half_width / g.n_v as f64;
        dx / (g.v_half_width - 0.5 * h)
    }

    pub fn electron_model(&self) -> Result<ElectronDensityModel> {
        match &self.model {
            ModelConfig::GeneralGamma { gamma_e, a_e } => ElectronDensityModel::general_gamma(*gamma_e, *a_e),
            ModelConfig::Boltzmann { a_e } => ElectronDensityModel::boltzmann(*a_e),
            ModelConfig::Tabulated { table } => {
                ElectronDensityModel::tabulated(table.iter().map(|r| r.0).collect(), table.iter().map(|r| r.1).collect())
            }
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.x_min, self.grid.x_max, self.grid.n_x)
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.grid.v_half_width, self.grid.n_v)
    }

    pub fn collision_config(&self) -> Result<CollisionConfig> {
        let ang = AngularQuadrature::lebedev(self.collision.angular_points)?;
        Ok(match self.collision.mode {
            CollisionKind::HardSphere => CollisionConfig::hard_sphere(ang),
            CollisionKind::Bgk => CollisionConfig::bgk(ang, self.collision.bgk_rate)?,
        }
        .with_interpolation(self.collision.interpolation))
    }

    pub fn profile(&self) -> Result<RarefactionProfile> {
        let w = &self.wave;
        let m = self.electron_model()?;
        let left = FluidTriple::slab(w.rho_minus, w.u1_minus, w.theta_minus)?;
        RarefactionProfile::from_left(left, w.rho_plus, &m, w.epsilon)
    }

    pub fn step_scheme(&self) -> StepScheme {
        StepScheme {
            kind: self.scheme.kind,
            dt: self.scheme.dt,
            cfl: self.scheme.cfl,
            n_picard: self.scheme.n_picard,
            picard_tol: self.scheme.picard_tol,
        }
    }

    /// Canonical TOML text; `parse_config(to_toml())` reproduces `self`.
    pub fn to_toml(&self) -> String {
        let mut root = Table::new();
        root.insert("seed".into(), Value::Integer(self.seed as i64));
        root.insert("output".into(), Value::String(self.output.to_string_lossy().into_owned()));
        let mut t = Table::new();
        let g = &self.grid;
        t.insert("x_min".into(), Value::Float(g.x_min));
        t.insert("x_max".into(), Value::Float(g.x_max));
        t.insert("n_x".into(), Value::Integer(g.n_x as i64));
        t.insert("v_half_width".into(), Value::Float(g.v_half_width));
        t.insert("n_v".into(), Value::Integer(g.n_v as i64));
        root.insert("grid".into(), Value::Table(t));
        let mut t = Table::new();
        match &self.model {
            ModelConfig::GeneralGamma { gamma_e, a_e } => {
                t.insert("kind".into(), Value::String("general_gamma".into()));
                t.insert("gamma_e".into(), Value::Float(*gamma_e));
                t.insert("a_e".into(), Value::Float(*a_e));
            }
            ModelConfig::Boltzmann { a_e } => {
                t.insert("kind".into(), Value::String("boltzmann".into()));
                t.insert("a_e".into(), Value::Float(*a_e));
            }
            ModelConfig::Tabulated { table } => {
                t.insert("kind".into(), Value::String("tabulated".into()));
                t.insert(
                    "table".into(),
                    Value::Array(
                        table
                            .iter()
                            .map(|(p, r)| Value::Array(vec![Value::Float(*p), Value::Float(*r)]))
                            .collect(),
                    ),
                );
            }
        }
        root.insert("model".into(), Value::Table(t));
        let mut t = Table::new();
        let w = &self.wave;
        t.insert("rho_minus".into(), Value::Float(w.rho_minus));
        t.insert("u1_minus".into(), Value::Float(w.u1_minus));
        t.insert("theta_minus".into(), Value::Float(w.theta_minus));
        t.insert("rho_plus".into(), Value::Float(w.rho_plus));
        if let Some(u) = w.u1_plus {
            t.insert("u1_plus".into(), Value::Float(u));
        }
        if let Some(th) = w.theta_plus {
            t.insert("theta_plus".into(), Value::Float(th));
        }
        t.insert("epsilon".into(), Value::Float(w.epsilon));
        root.insert("wave".into(), Value::Table(t));
        let mut t = Table::new();
        let c = &self.collision;
        t.insert(
            "mode".into(),
            Value::String(match c.mode {
                CollisionKind::Bgk => "bgk".into(),
                CollisionKind::HardSphere => "hard_sphere".into(),
            }),
        );
        t.insert("bgk_rate".into(), Value::Float(c.bgk_rate));
        t.insert("angular_points".into(), Value::Integer(c.angular_points as i64));
        t.insert(
            "interpolation".into(),
            Value::String(match c.interpolation {
                Interpolation::MaxwellianWeighted => "weighted".into(),
                Interpolation::Trilinear => "trilinear".into(),
            }),
        );
        root.insert("collision".into(), Value::Table(t));
        let mut t = Table::new();
        let s = &self.scheme;
        t.insert(
            "kind".into(),
            Value::String(match s.kind {
                SchemeKind::StrangSplit => "strang".into(),
                SchemeKind::IterationScheme => "iteration".into(),
            }),
        );
        t.insert("t_end".into(), Value::Float(s.t_end));
        t.insert("cfl".into(), Value::Float(s.cfl));
        if let Some(dt) = s.dt {
            t.insert("dt".into(), Value::Float(dt));
        }
        t.insert("n_picard".into(), Value::Integer(s.n_picard as i64));
        t.insert("picard_tol".into(), Value::Float(s.picard_tol));
        t.insert(
            "limiter".into(),
            Value::String(match s.limiter {
                Limiter::VanLeer => "van_leer".into(),
                Limiter::Upwind => "upwind".into(),
            }),
        );
        root.insert("scheme".into(), Value::Table(t));
        let mut t = Table::new();
        let p = &self.perturbation;
        t.insert("amplitude".into(), Value::Float(p.amplitude));
        t.insert("center".into(), Value::Float(p.center));
        t.insert("half_width".into(), Value::Float(p.half_width));
        root.insert("perturbation".into(), Value::Table(t));
        let mut t = Table::new();
        let r = &self.report;
        t.insert("times".into(), Value::Array(r.times.iter().map(|v| Value::Float(*v)).collect()));
        t.insert("snapshots".into(), Value::Boolean(r.snapshots));
        t.insert("gbar".into(), Value::Boolean(r.gbar));
        t.insert("poisson_tol".into(), Value::Float(r.poisson_tol));
        t.insert("gbar_tol".into(), Value::Float(r.gbar_tol));
        root.insert("report".into(), Value::Table(t));
        toml::to_string(&root).expect("a TOML table always serializes")
    }

    /// SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// ---------------------------------------------------------------------------
// snapshots

const MAGIC: &[u8; 8] = b"VPBLABSN";
pub const SNAPSHOT_MAJOR: u16 = 1;
pub const SNAPSHOT_MINOR: u16 = 0;

/// Grid description stored with every snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub v_half_width: f64,
    pub n_v: usize,
}

impl SnapshotGrid {
    pub fn of(sg: &SpatialGrid, vg: &VelocityGrid) -> Self {
        Self {
            x_min: sg.x_min,
            x_max: sg.x_max,
            n_x: sg.n_cells,
            v_half_width: vg.half_width(),
            n_v: vg.n_per_axis(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: SnapshotGrid,
    pub state: KineticState,
    /// Moment totals at `t = 0` (drift reference).
    pub initial_totals: [f64; 5],
}

fn put_array(out: &mut String, key: &str, v: &[f64]) {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    let _ = writeln!(out, "{key} = {}", items.join(","));
}

/// Writes magic, version, a `key = value` header and the little-endian payload
/// (`F` row-major by cell then velocity node, followed by `φ`).
pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let s = &snap.state;
    let g = &snap.grid;
    let mut header = String::new();
    let _ = writeln!(header, "x_min = {:?}", g.x_min);
    let _ = writeln!(header, "x_max = {:?}", g.x_max);
    let _ = writeln!(header, "n_x = {}", g.n_x);
    let _ = writeln!(header, "v_half_width = {:?}", g.v_half_width);
    let _ = writeln!(header, "n_v = {}", g.n_v);
    let _ = writeln!(header, "t = {:?}", s.t);
    let _ = writeln!(header, "step = {}", s.step);
    let _ = writeln!(header, "nu_max = {:?}", s.nu_max);
    let _ = writeln!(header, "min_value = {:?}", s.min_value);
    let _ = writeln!(header, "bc_left = {:?}", s.phi.bc_left);
    let _ = writeln!(header, "bc_right = {:?}", s.phi.bc_right);
    put_array(&mut header, "boundary_outflow", &s.budget.boundary_outflow);
    put_array(&mut header, "electric_source", &s.budget.electric_source);
    put_array(&mut header, "initial_totals", &snap.initial_totals);
    let n_f = s.f.as_slice().len();
    let _ = writeln!(header, "payload = {}", n_f + s.phi.values.len());
    let mut buf = Vec::with_capacity(32 + header.len() + 8 * (n_f + s.phi.values.len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&SNAPSHOT_MAJOR.to_le_bytes());
    buf.extend_from_slice(&SNAPSHOT_MINOR.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(header.as_bytes());
    for v in s.f.as_slice().iter().chain(&s.phi.values) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

fn corrupt(msg: &str) -> VpbError {
    VpbError::Snapshot(format!("corrupt header: {msg}"))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path)?;
    decode_snapshot(&bytes)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 16 {
        return Err(corrupt("file shorter than the fixed header"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let major = u16::from_le_bytes([bytes[8], bytes[9]]);
    let minor = u16::from_le_bytes([bytes[10], bytes[11]]);
    if major != SNAPSHOT_MAJOR {
        return Err(VpbError::Snapshot(format!(
            "unsupported snapshot version {major}.{minor}; this build reads {SNAPSHOT_MAJOR}.x"
        )));
    }
    let hlen = u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]) as usize;
    let body = &bytes[16..];
    if body.len() < hlen {
        return Err(corrupt("truncated header"));
    }
    let header = std::str::from_utf8(&body[..hlen]).map_err(|_| corrupt("header is not UTF-8"))?;
    let mut kv = std::collections::HashMap::new();
    for line in header.lines() {
        let (k, v) = line.split_once(" = ").ok_or_else(|| corrupt("malformed header line"))?;
        kv.insert(k, v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| corrupt(&format!("missing `{k}`")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse::<f64>().map_err(|_| corrupt(&format!("bad `{k}`"))) };
    let int = |k: &str| -> Result<usize> { get(k)?.parse::<usize>().map_err(|_| corrupt(&format!("bad `{k}`"))) };
    let arr5 = |k: &str| -> Result<[f64; 5]> {
        let v: Vec<f64> = get(k)?
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| corrupt(&format!("bad `{k}`")))?;
        v.try_into().map_err(|_| corrupt(&format!("`{k}` needs five entries")))
    };
    let grid = SnapshotGrid {
        x_min: num("x_min")?,
        x_max: num("x_max")?,
        n_x: int("n_x")?,
        v_half_width: num("v_half_width")?,
        n_v: int("n_v")?,
    };
    let n_nodes = grid.n_v.checked_pow(3).ok_or_else(|| corrupt("grid too large"))?;
    let n_f = grid.n_x.checked_mul(n_nodes).ok_or_else(|| corrupt("grid too large"))?;
    let payload = int("payload")?;
    if payload != n_f + grid.n_x {
        return Err(corrupt("payload length disagrees with the grid"));
    }
    let data = &body[hlen..];
    if data.len() != 8 * payload {
        return Err(corrupt(&format!(
            "expected {} payload bytes, found {}",
            8 * payload,
            data.len()
        )));
    }
    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let f = DistributionField::from_raw(grid.n_x, n_nodes, values[..n_f].to_vec())?;
    let state = KineticState {
        t: num("t")?,
        step: get("step")?.parse().map_err(|_| corrupt("bad `step`"))?,
        f,
        phi: PotentialField {
            values: values[n_f..].to_vec(),
            bc_left: num("bc_left")?,
            bc_right: num("bc_right")?,
        },
        budget: Budget {
            boundary_outflow: arr5("boundary_outflow")?,
            electric_source: arr5("electric_source")?,
        },
        nu_max: num("nu_max")?,
        min_value: num("min_value")?,
    };
    Ok(Snapshot {
        grid,
        state,
        initial_totals: arr5("initial_totals")?,
    })
}

// ---------------------------------------------------------------------------
// tables and manifest

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Tab-separated table with a header row.
pub fn write_table(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    fs::write(path, table_text(columns, rows))?;
    Ok(())
}

pub fn table_text(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = columns.join("\t");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&cells.join("\t"));
        s.push('\n');
    }
    s
}

/// Parses a table written by [`write_table`].
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| VpbError::InvalidInput("empty table".into()))?
        .split('\t')
        .map(String::from)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split('\t')
                .map(|c| c.parse::<f64>().map_err(|_| VpbError::InvalidInput(format!("bad table cell `{c}`"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestFile {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: String,
    pub config_hash: String,
    pub version: String,
    pub elapsed_seconds: f64,
    pub steps: u64,
    pub files: Vec<ManifestFile>,
}

impl RunManifest {
    pub fn new(config: &RunConfig, elapsed_seconds: f64, steps: u64, dir: &Path, names: &[String]) -> Result<Self> {
        let mut files = Vec::new();
        for n in names {
            let bytes = fs::read(dir.join(n))?;
            files.push(ManifestFile {
                name: n.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
        let text = config.to_toml();
        Ok(Self {
            config_hash: sha256_hex(text.as_bytes()),
            config: text,
            version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed_seconds,
            steps,
            files,
        })
    }

    pub fn to_toml(&self) -> String {
        let mut root = Table::new();
        root.insert("version".into(), Value::String(self.version.clone()));
        root.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        root.insert("elapsed_seconds".into(), Value::Float(self.elapsed_seconds));
        root.insert("steps".into(), Value::Integer(self.steps as i64));
        root.insert("config".into(), Value::String(self.config.clone()));
        let files = self
            .files
            .iter()
            .map(|f| {
                let mut t = Table::new();
                t.insert("name".into(), Value::String(f.name.clone()));
                t.insert("bytes".into(), Value::Integer(f.bytes as i64));
                t.insert("sha256".into(), Value::String(f.sha256.clone()));
                Value::Table(t)
            })
            .collect();
        root.insert("files".into(), Value::Array(files));
        toml::to_string(&root).expect("a TOML table always serializes")
    }

    /// `true` when the stored hash matches the echoed configuration.
    pub fn hash_matches(&self) -> bool {
        sha256_hex(self.config.as_bytes()) == self.config_hash
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| VpbError::InvalidInput(format!("manifest: {}", e.message())))?;
        let s = |k: &str| {
            root.get(k)
                .and_then(|v| v.as_str())
                .map(String::from)
                .ok_or_else(|| VpbError::InvalidInput(format!("manifest: missing `{k}`")))
        };
        let files = root
            .get("files")
            .and_then(|v| v.as_array())
            .map(|a| {
                a.iter()
                    .filter_map(|f| {
                        Some(ManifestFile {
                            name: f.get("name")?.as_str()?.to_string(),
                            bytes: f.get("bytes")?.as_integer()? as u64,
                            sha256: f.get("sha256")?.as_str()?.to_string(),
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(Self {
            config: s("config")?,
            config_hash: s("config_hash")?,
            version: s("version")?,
            elapsed_seconds: root.get("elapsed_seconds").and_then(|v| v.as_float()).unwrap_or(f64::NAN),
            steps: root.get("steps").and_then(|v| v.as_integer()).unwrap_or(0) as u64,
            files,
        })
    }
}

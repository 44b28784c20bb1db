//! Command-line surface: a flat `key = value` run configuration, model
//! construction from it, and the `counting`, `dim-bound` and `render`
//! commands. Every command returns its file contents and summary instead of
//! printing, so the binary performs all writes from one place.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::counting::{counting_sample, estimate_order, log_radii};
use crate::covering::DEFAULT_C1;
use crate::elliptic::{EllipticFunction, Lattice, DEFAULT_POLE_EPSILON, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::mcmullen::{
    bound_table_csv, cantor_dust_spec, dimension_formula, escaping_cover_spec, mcmullen_bound,
    pole_cover_spec, points_csv, wpexp_cover_spec, EscapingPoint, NestedCoverSpec,
};
use crate::models::{
    default_offset, Branch, GluedOrderTwo, InterpolationStack, ModelFunction, PowerLift, WpCosh,
    WpExp, WpPower,
};
use crate::orbits::{render_escape_field, Classification, EscapeField, Schedule};
use crate::sphere::PlanarRegion;

/// Model family selected by the `model` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Plain,
    WpExp,
    WpCosh,
    Power,
    /// `inner(z^n)` with the inner family chosen by `lift_inner`.
    Lift,
    /// Two lattices glued along the real line with identity boundary data.
    Glued,
}

impl ModelKind {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "plain" => ModelKind::Plain,
            "wpexp" => ModelKind::WpExp,
            "wpcosh" => ModelKind::WpCosh,
            "power" => ModelKind::Power,
            "lift" => ModelKind::Lift,
            "glued" => ModelKind::Glued,
            _ => return Err(Error::Config(format!("unknown model '{s}'"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            ModelKind::Plain => "plain",
            ModelKind::WpExp => "wpexp",
            ModelKind::WpCosh => "wpcosh",
            ModelKind::Power => "power",
            ModelKind::Lift => "lift",
            ModelKind::Glued => "glued",
        }
    }
}

/// Cover specification selected by the `cover` key of `dim-bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverKind {
    /// Constant escape radius `R` with constants `C2`, `C7`.
    Pole,
    /// Escalating radii `R_k = e^k` with constants `C8`, `C9`.
    Escaping,
    /// The exponential model's spec with constants `A4`, `A5`.
    WpExp,
    /// Planar middle-thirds Cantor dust.
    Cantor,
    /// Explicit `delta`, `diam` columns read from `cover_file`.
    File,
}

impl CoverKind {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pole" => CoverKind::Pole,
            "escaping" => CoverKind::Escaping,
            "wpexp" => CoverKind::WpExp,
            "cantor" => CoverKind::Cantor,
            "file" => CoverKind::File,
            _ => return Err(Error::Config(format!("unknown cover '{s}'"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            CoverKind::Pole => "pole",
            CoverKind::Escaping => "escaping",
            CoverKind::WpExp => "wpexp",
            CoverKind::Cantor => "cantor",
            CoverKind::File => "file",
        }
    }
}

/// All parameters of a run. Unset keys take the defaults of
/// [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub truncation: usize,
    pub pole_epsilon: f64,
    /// `None` selects `(omega1 + omega2)/4`.
    pub offset: Option<Complex64>,
    pub rho: f64,
    pub branch: Branch,
    pub lift_n: u32,
    pub lift_inner: ModelKind,
    pub lower_omega1: Complex64,
    pub lower_omega2: Complex64,
    pub lower_offset: Option<Complex64>,

    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
    pub quadrature: usize,
    pub fit_min: Option<f64>,
    pub fit_max: Option<f64>,

    pub cover: CoverKind,
    pub cover_file: Option<PathBuf>,
    pub escape_radius: f64,
    pub levels: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,

    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: usize,
    pub height: usize,
    pub schedule: Schedule,
    /// Iteration cap of `render`.
    pub depth: usize,

    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Plain,
            omega1: Complex64::new(1.0, 0.0),
            omega2: Complex64::new(0.0, 1.0),
            truncation: DEFAULT_TRUNCATION,
            pole_epsilon: DEFAULT_POLE_EPSILON,
            offset: None,
            rho: 1.0,
            branch: Branch::Plus,
            lift_n: 1,
            lift_inner: ModelKind::Power,
            lower_omega1: Complex64::new(1.0, 0.0),
            lower_omega2: Complex64::new(0.0, 1.0),
            lower_offset: None,
            r_min: 10.0,
            r_max: 1000.0,
            per_decade: crate::counting::DEFAULT_RADII_PER_DECADE,
            quadrature: 1024,
            fit_min: None,
            fit_max: None,
            cover: CoverKind::Pole,
            cover_file: None,
            escape_radius: 1000.0,
            levels: 128,
            c1: DEFAULT_C1,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 1.0,
            c6: 1.0,
            c7: 1.0,
            c8: 1.0,
            c9: 1.0,
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
            a4: 1.0,
            a5: 1.0,
            x_min: 0.0,
            x_max: 4.0,
            y_min: -PI,
            y_max: PI,
            width: 256,
            height: 256,
            schedule: Schedule::Exponential,
            depth: crate::orbits::DEFAULT_CAP,
            out: None,
        }
    }
}

/// Formats a complex number as `re+imi` with round-trip float digits.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (exponents allowed).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Config(format!("invalid complex number '{s}'"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| match x {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(x),
    };
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn format_schedule(s: &Schedule) -> String {
    match s {
        Schedule::Exponential => "exp".into(),
        Schedule::Infinite => "inf".into(),
        Schedule::Constant(r) => format!("const:{r:?}"),
        Schedule::Explicit(v) => {
            let parts: Vec<String> = v.iter().map(|r| format!("{r:?}")).collect();
            format!("list:{}", parts.join(","))
        }
    }
}

fn parse_schedule(s: &str) -> Result<Schedule> {
    let bad = || Error::Config(format!("invalid schedule '{s}' (exp, inf, const:R or list:R1,R2,...)"));
    if s == "exp" {
        return Ok(Schedule::Exponential);
    }
    if s == "inf" {
        return Ok(Schedule::Infinite);
    }
    let positive = |x: &str| match x.trim().parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(v),
        _ => Err(bad()),
    };
    if let Some(r) = s.strip_prefix("const:") {
        return Ok(Schedule::Constant(positive(r)?));
    }
    if let Some(list) = s.strip_prefix("list:") {
        let v = list.split(',').map(positive).collect::<Result<Vec<_>>>()?;
        if v.is_empty() {
            return Err(bad());
        }
        return Ok(Schedule::Explicit(v));
    }
    Err(bad())
}

fn opt<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map_or_else(|| "auto".into(), f)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: '{v}' is not a finite number")))
}

fn parse_positive(key: &str, v: &str) -> Result<f64> {
    let x = parse_f64(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Config(format!("{key} must be positive, got {v}")))
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_auto<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unknown and
    /// repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "model" => self.model = ModelKind::parse(v)?,
            "omega1" => self.omega1 = parse_complex(v)?,
            "omega2" => self.omega2 = parse_complex(v)?,
            "truncation" => self.truncation = parse_usize(key, v)?,
            "pole_epsilon" => self.pole_epsilon = parse_positive(key, v)?,
            "offset" => self.offset = parse_auto(v, parse_complex)?,
            "rho" => self.rho = parse_positive(key, v)?,
            "branch" => {
                self.branch = match v {
                    "plus" => Branch::Plus,
                    "minus" => Branch::Minus,
                    _ => return Err(Error::Config(format!("branch must be plus or minus, got '{v}'"))),
                }
            }
            "lift_n" => {
                self.lift_n = v
                    .parse()
                    .map_err(|_| Error::Config(format!("lift_n: '{v}' is not an integer")))?
            }
            "lift_inner" => self.lift_inner = ModelKind::parse(v)?,
            "lower_omega1" => self.lower_omega1 = parse_complex(v)?,
            "lower_omega2" => self.lower_omega2 = parse_complex(v)?,
            "lower_offset" => self.lower_offset = parse_auto(v, parse_complex)?,
            "r_min" => self.r_min = parse_positive(key, v)?,
            "r_max" => self.r_max = parse_positive(key, v)?,
            "per_decade" => self.per_decade = parse_usize(key, v)?,
            "quadrature" => self.quadrature = parse_usize(key, v)?,
            "fit_min" => self.fit_min = parse_auto(v, |x| parse_positive(key, x))?,
            "fit_max" => self.fit_max = parse_auto(v, |x| parse_positive(key, x))?,
            "cover" => self.cover = CoverKind::parse(v)?,
            "cover_file" => self.cover_file = parse_auto(v, |x| Ok(PathBuf::from(x)))?,
            "escape_radius" => self.escape_radius = parse_positive(key, v)?,
            "levels" => self.levels = parse_usize(key, v)?,
            "c1" => self.c1 = parse_positive(key, v)?,
            "c2" => self.c2 = parse_positive(key, v)?,
            "c3" => self.c3 = parse_positive(key, v)?,
            "c4" => self.c4 = parse_positive(key, v)?,
            "c5" => self.c5 = parse_positive(key, v)?,
            "c6" => self.c6 = parse_positive(key, v)?,
            "c7" => self.c7 = parse_positive(key, v)?,
            "c8" => self.c8 = parse_positive(key, v)?,
            "c9" => self.c9 = parse_positive(key, v)?,
            "a1" => self.a1 = parse_positive(key, v)?,
            "a2" => self.a2 = parse_positive(key, v)?,
            "a3" => self.a3 = parse_positive(key, v)?,
            "a4" => self.a4 = parse_positive(key, v)?,
            "a5" => self.a5 = parse_positive(key, v)?,
            "x_min" => self.x_min = parse_f64(key, v)?,
            "x_max" => self.x_max = parse_f64(key, v)?,
            "y_min" => self.y_min = parse_f64(key, v)?,
            "y_max" => self.y_max = parse_f64(key, v)?,
            "width" => self.width = parse_usize(key, v)?,
            "height" => self.height = parse_usize(key, v)?,
            "schedule" => self.schedule = parse_schedule(v)?,
            "depth" => self.depth = parse_usize(key, v)?,
            "out" => self.out = parse_auto(v, |x| Ok(PathBuf::from(x)))?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.lift_n == 0 {
            return Err(Error::Config("lift_n must be at least 1".into()));
        }
        if matches!(self.lift_inner, ModelKind::Lift | ModelKind::Glued) {
            return Err(Error::Config("lift_inner must be plain, wpexp, wpcosh or power".into()));
        }
        if self.depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        Ok(())
    }

    /// The full configuration as `key = value` lines, parseable by
    /// [`RunConfig::parse`] back into an identical value.
    pub fn effective(&self) -> String {
        let c = format_complex;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("model", self.model.name().into());
        kv("omega1", c(self.omega1));
        kv("omega2", c(self.omega2));
        kv("truncation", self.truncation.to_string());
        kv("pole_epsilon", format!("{:?}", self.pole_epsilon));
        kv("offset", opt(&self.offset, |z| c(*z)));
        kv("rho", format!("{:?}", self.rho));
        kv(
            "branch",
            match self.branch {
                Branch::Plus => "plus",
                Branch::Minus => "minus",
            }
            .into(),
        );
        kv("lift_n", self.lift_n.to_string());
        kv("lift_inner", self.lift_inner.name().into());
        kv("lower_omega1", c(self.lower_omega1));
        kv("lower_omega2", c(self.lower_omega2));
        kv("lower_offset", opt(&self.lower_offset, |z| c(*z)));
        kv("r_min", format!("{:?}", self.r_min));
        kv("r_max", format!("{:?}", self.r_max));
        kv("per_decade", self.per_decade.to_string());
        kv("quadrature", self.quadrature.to_string());
        kv("fit_min", opt(&self.fit_min, |x| format!("{x:?}")));
        kv("fit_max", opt(&self.fit_max, |x| format!("{x:?}")));
        kv("cover", self.cover.name().into());
        kv("cover_file", opt(&self.cover_file, |p| p.display().to_string()));
        kv("escape_radius", format!("{:?}", self.escape_radius));
        kv("levels", self.levels.to_string());
        for (k, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("c5", self.c5),
            ("c6", self.c6),
            ("c7", self.c7),
            ("c8", self.c8),
            ("c9", self.c9),
            ("a1", self.a1),
            ("a2", self.a2),
            ("a3", self.a3),
            ("a4", self.a4),
            ("a5", self.a5),
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("y_min", self.y_min),
            ("y_max", self.y_max),
        ] {
            kv(k, format!("{v:?}"));
        }
        kv("width", self.width.to_string());
        kv("height", self.height.to_string());
        kv("schedule", format_schedule(&self.schedule));
        kv("depth", self.depth.to_string());
        kv("out", opt(&self.out, |p| p.display().to_string()));
        s
    }

    fn elliptic(&self, w1: Complex64, w2: Complex64) -> Result<EllipticFunction> {
        EllipticFunction::with_parameters(Lattice::new(w1, w2)?, self.truncation, self.pole_epsilon)
    }

    fn build_kind(&self, kind: ModelKind) -> Result<ModelFunction> {
        let f = || self.elliptic(self.omega1, self.omega2);
        let offset = |f: &EllipticFunction| self.offset.unwrap_or_else(|| default_offset(f));
        Ok(match kind {
            ModelKind::Plain => ModelFunction::PlainWp(f()?),
            ModelKind::WpExp => {
                let f = f()?;
                let c = offset(&f);
                ModelFunction::WpExp(WpExp::new(f, c)?)
            }
            ModelKind::WpCosh => ModelFunction::WpCosh(WpCosh::standard(self.truncation, self.pole_epsilon)?),
            ModelKind::Power => {
                let f = f()?;
                let c = offset(&f);
                ModelFunction::WpPower(WpPower::new(f, self.rho, c, self.branch)?)
            }
            ModelKind::Lift => {
                ModelFunction::PowerLift(PowerLift::new(self.build_kind(self.lift_inner)?, self.lift_n)?)
            }
            ModelKind::Glued => {
                let upper = f()?;
                let lower = self.elliptic(self.lower_omega1, self.lower_omega2)?;
                let c1 = offset(&upper);
                let c2 = self.lower_offset.unwrap_or_else(|| default_offset(&lower));
                ModelFunction::GluedOrderTwo(GluedOrderTwo::new(
                    upper,
                    lower,
                    InterpolationStack::identity(),
                    InterpolationStack::identity(),
                    c1,
                    c2,
                )?)
            }
        })
    }

    /// The model function described by the configuration.
    pub fn build_model(&self) -> Result<ModelFunction> {
        self.build_kind(self.model)
    }

    /// The render window with its pixel grid.
    pub fn region(&self) -> Result<PlanarRegion> {
        PlanarRegion::rect(self.x_min, self.x_max, self.y_min, self.y_max)?.with_resolution(self.width, self.height)
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(s) => s,
        other => other.to_string(),
    }
}

/// Files and summary produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    /// `(path, bytes)` in write order.
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub summary: String,
}

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Counting functions on a logarithmic radius grid and an order fit.
pub fn cmd_counting(cfg: &RunConfig) -> Result<CommandOutput> {
    if !(cfg.r_min < cfg.r_max) {
        return Err(Error::InvalidRadii(format!(
            "empty radius window [{}, {}]",
            cfg.r_min, cfg.r_max
        )));
    }
    let m = cfg.build_model()?;
    let radii = log_radii(cfg.r_min, cfg.r_max, cfg.per_decade)?;
    let cs = counting_sample(&m, &radii, cfg.quadrature)?;
    let (lo, hi) = (cfg.fit_min.unwrap_or(cfg.r_min), cfg.fit_max.unwrap_or(cfg.r_max));
    let est = estimate_order(&cs, lo, hi)?;
    let summary = format!(
        "model={} order_slope={:.6} intercept={:.6} rms_residual={:.3e} window=[{}, {}] radii_used={} poles_at_r_max={}",
        m.name(),
        est.slope,
        est.intercept,
        est.residual,
        lo,
        hi,
        est.radii_used,
        cs.n.last().copied().unwrap_or(0)
    );
    Ok(CommandOutput {
        files: vec![(out_path(cfg, "counting.csv"), cs.to_csv().into_bytes())],
        summary,
    })
}

/// Reads `delta` and `diam` columns from a CSV with a header row.
pub fn read_cover_file(path: &Path) -> Result<NestedCoverSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidCoverSpec("empty cover file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::InvalidCoverSpec(format!("cover file lacks a '{name}' column")))
    };
    let (id, im) = (col("delta")?, col("diam")?);
    let (mut deltas, mut diams) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| {
            fields
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidCoverSpec(format!("row {}: unreadable value", k + 1)))
        };
        deltas.push(get(id)?);
        diams.push(get(im)?);
    }
    NestedCoverSpec::from_values(&deltas, &diams)
}

/// The nested-cover bound for the configured spec next to its target.
pub fn cmd_dim_bound(cfg: &RunConfig) -> Result<CommandOutput> {
    let (spec, target) = match cfg.cover {
        CoverKind::Pole => (
            pole_cover_spec(cfg.rho, cfg.escape_radius, cfg.c2, cfg.c7, cfg.levels)?,
            Some(dimension_formula(cfg.rho)?),
        ),
        CoverKind::Escaping => (
            escaping_cover_spec(cfg.rho, cfg.c8, cfg.c9, cfg.levels)?,
            Some(dimension_formula(cfg.rho)?),
        ),
        CoverKind::WpExp => (
            wpexp_cover_spec(cfg.escape_radius, cfg.a4, cfg.a5, cfg.levels)?,
            Some(2.0),
        ),
        CoverKind::Cantor => (cantor_dust_spec(cfg.levels)?, Some(4f64.ln() / 3f64.ln())),
        CoverKind::File => {
            let path = cfg
                .cover_file
                .as_ref()
                .ok_or_else(|| Error::Config("cover = file needs cover_file".into()))?;
            (read_cover_file(path)?, None)
        }
    };
    let bounds = mcmullen_bound(&spec);
    let target_text = target.map_or_else(|| "n/a".to_string(), |t| format!("{t:.12}"));
    let gap_text = target.map_or_else(|| "n/a".to_string(), |t| format!("{:.3e}", (bounds.limit - t).abs()));
    let summary = format!(
        "cover={} levels={} limit={:.12} target={} gap={} tail_max={:.12} monotone_tail={}",
        cfg.cover.name(),
        spec.levels(),
        bounds.limit,
        target_text,
        gap_text,
        bounds.tail_max,
        bounds.monotone_tail
    );
    Ok(CommandOutput {
        files: vec![(out_path(cfg, "bound.csv"), bound_table_csv(&spec, &bounds).into_bytes())],
        summary,
    })
}

const PREPOLE_COLOR: [u8; 3] = [255, 255, 255];
const BOUNDED_COLOR: [u8; 3] = [0, 0, 0];
const UNDETERMINED_COLOR: [u8; 3] = [96, 96, 96];

/// Pixel colour: white prepoles, black bounded orbits, grey undetermined
/// orbits, and a violet-to-amber ramp over the escape depth.
pub fn pixel_color(c: &Classification, cap: usize) -> [u8; 3] {
    match *c {
        Classification::Prepole { .. } => PREPOLE_COLOR,
        Classification::Bounded => BOUNDED_COLOR,
        Classification::Undetermined { .. } => UNDETERMINED_COLOR,
        Classification::Escaping { depth } => {
            let t = (depth as f64 / cap.max(1) as f64).clamp(0.0, 1.0);
            let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
            [lerp(60.0, 255.0), lerp(0.0, 190.0), lerp(120.0, 0.0)]
        }
    }
}

/// Binary PPM, rows top to bottom.
pub fn encode_ppm(field: &EscapeField) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", field.width, field.height).into_bytes();
    out.reserve(field.width * field.height * 3);
    for j in (0..field.height).rev() {
        for i in 0..field.width {
            out.extend_from_slice(&pixel_color(&field.pixel(i, j).classification, field.cap));
        }
    }
    out
}

/// Escaping-classified pixel centres, in the field's row order.
pub fn escaping_pixels(field: &EscapeField) -> Vec<EscapingPoint> {
    let mut pts = Vec::new();
    for j in 0..field.height {
        for i in 0..field.width {
            if let Classification::Escaping { depth } = field.pixel(i, j).classification {
                pts.push(EscapingPoint {
                    z: field.center(i, j),
                    depth,
                });
            }
        }
    }
    pts
}

/// Escape-field image plus the CSV of escaping pixel centres.
pub fn cmd_render(cfg: &RunConfig) -> Result<CommandOutput> {
    let m = cfg.build_model()?;
    let region = cfg.region()?;
    let field = render_escape_field(&m, &region, &cfg.schedule, cfg.depth)?;
    let image = out_path(cfg, "escape.ppm");
    let csv = image.with_extension("csv");
    let counts = [
        field.count(|c| matches!(c, Classification::Escaping { .. })),
        field.count(|c| matches!(c, Classification::Prepole { .. })),
        field.count(|c| matches!(c, Classification::Bounded)),
        field.count(|c| matches!(c, Classification::Undetermined { .. })),
    ];
    let summary = format!(
        "model={} pixels={}x{} escaping={} prepole={} bounded={} undetermined={}",
        m.name(),
        field.width,
        field.height,
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    Ok(CommandOutput {
        files: vec![
            (image, encode_ppm(&field)),
            (csv, points_csv(&escaping_pixels(&field)).into_bytes()),
        ],
        summary,
    })
}

/// Whether an error is the caller's fault (exit code 2) rather than a
/// failed computation or validation (exit code 1).
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidRadii(_) | Error::WindowTooSmall(_) | Error::InvalidRegion(_)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_round_trip() {
        for z in [
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.25, -3.5e-7),
            Complex64::new(0.0, -0.0),
            Complex64::new(1e300, 2.5),
        ] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back.re.to_bits(), z.re.to_bits());
            assert_eq!(back.im.to_bits(), z.im.to_bits());
        }
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("1-i").unwrap(), Complex64::new(1.0, -1.0));
        assert_eq!(parse_complex("1e-3+2E+1i").unwrap(), Complex64::new(1e-3, 20.0));
        assert!(parse_complex("1+").is_err());
    }

    #[test]
    fn config_round_trip_and_strictness() {
        let cfg = RunConfig::parse(
            "model = power # comment\nrho = 0.5\noffset = 0.3+0.2i\nschedule = list:2,3.5\nout = x.csv\n",
        )
        .unwrap();
        assert_eq!(cfg.model, ModelKind::Power);
        assert_eq!(RunConfig::parse(&cfg.effective()).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&RunConfig::default().effective()).unwrap(), RunConfig::default());
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("rho = 1\nrho = 2").is_err());
        assert!(RunConfig::parse("c2 = -1").is_err());
        assert!(RunConfig::parse("rho").is_err());
    }

    #[test]
    fn ppm_header_and_size() {
        let cfg = RunConfig::parse("width = 16\nheight = 16\nschedule = inf\ndepth = 2\nx_min = 0.31\nx_max = 0.32\ny_min = 0.2\ny_max = 0.21\n")
            .unwrap();
        let out = cmd_render(&cfg).unwrap();
        let ppm = &out.files[0].1;
        let header = b"P6\n16 16\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        assert_eq!(ppm.len(), header.len() + 768);
        assert!(ppm[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn empty_window_is_usage_error() {
        let cfg = RunConfig::parse("r_min = 100\nr_max = 10").unwrap();
        assert!(is_usage_error(&cmd_counting(&cfg).unwrap_err()));
    }
}

//! Flat `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment. Unknown or repeated keys
//! are rejected. Every value is validated when the text is parsed, before any
//! field storage is allocated.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::NormExponent;
use crate::domain::{AdvectionScheme, Grid};
use crate::dynamics::{InitialKind, PhysParams, StepControl, TimeControls, Variant};
use crate::elliptic::SolverMethod;
use crate::error::{Error, Result};

/// Which verification checks a command enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Checks {
    pub energy: bool,
    pub zcheck: bool,
    pub gronwall: bool,
}

impl Checks {
    pub const NONE: Checks = Checks { energy: false, zcheck: false, gronwall: false };
    pub const ALL: Checks = Checks { energy: true, zcheck: true, gronwall: true };

    pub fn any(&self) -> bool {
        self.energy || self.zcheck || self.gronwall
    }

    /// Drops the checks that have no meaning for `variant`.
    pub fn applicable(self, variant: Variant) -> Checks {
        match variant {
            Variant::Standard => self,
            Variant::Damped => Checks { zcheck: false, gronwall: false, ..self },
        }
    }

    fn parse_list(key: &str, value: &str) -> Result<Checks> {
        let mut out = Checks::NONE;
        for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "energy" => out.energy = true,
                "zcheck" => out.zcheck = true,
                "gronwall" => out.gronwall = true,
                "all" => out = Checks::ALL,
                "none" => {}
                other => {
                    return Err(Error::config(
                        key,
                        format!("unknown check `{other}` (expected energy, zcheck, gronwall, all or none)"),
                    ))
                }
            }
        }
        Ok(out)
    }
}

impl FromStr for Checks {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Checks::parse_list("check", s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub variant: Variant,
    pub step: StepControl,
    pub t_end: f64,
    pub max_steps: usize,
    pub ic: InitialKind,
    pub seed: u64,
    pub amplitude: f64,
    pub advection: AdvectionScheme,
    pub solver: SolverMethod,
    /// Diagnostics cadence in steps.
    pub every: usize,
    pub lp: NormExponent,
    /// Output file names, resolved against the output directory.
    pub csv: PathBuf,
    pub checkpoint: PathBuf,
    /// Start from this checkpoint instead of `ic`.
    pub restart: Option<PathBuf>,
    pub checks: Checks,
    /// Energy residual bound relative to `max(gamma |grad w|^2, 4 kappa |w|^2, |dE/dt|)`.
    pub energy_tol: f64,
    /// Z residual bound relative to `|Z|_L2` at the same time.
    pub z_tol: f64,
    /// Allowed relative excess of `|Z|_p` over the Gronwall envelope.
    pub gronwall_tol: f64,
    /// Fitted rates must reach `rate_slack * C0`.
    pub rate_slack: f64,
    /// Fraction of the run, counted from the end, used for rate fits.
    pub fit_fraction: f64,
    pub sweep_gamma: Vec<f64>,
    pub sweep_kappa: Vec<f64>,
    pub sweep_parallel: bool,
    pub mms_levels: Vec<usize>,
    pub mms_t_end: f64,
    pub mms_dt_per_h: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: 64,
            ny: 64,
            lx: 1.0,
            ly: 1.0,
            gamma: 1.0,
            kappa: 0.1,
            variant: Variant::Standard,
            step: StepControl::Adaptive { cfl: 0.4, dt_max: 0.05 },
            t_end: 1.0,
            max_steps: 1_000_000,
            ic: InitialKind::RandomSmooth,
            seed: 0,
            amplitude: 0.05,
            advection: AdvectionScheme::Central2,
            solver: SolverMethod::SineTransform,
            every: 10,
            lp: NormExponent::Infinity,
            csv: PathBuf::from("diagnostics.csv"),
            checkpoint: PathBuf::from("final.chk"),
            restart: None,
            checks: Checks::ALL,
            energy_tol: 1e-3,
            z_tol: 1e-3,
            gronwall_tol: 0.05,
            rate_slack: 0.9,
            fit_fraction: 0.6,
            sweep_gamma: vec![0.5, 1.0],
            sweep_kappa: vec![0.05, 0.1],
            sweep_parallel: false,
            mms_levels: vec![32, 64, 128],
            mms_t_end: 0.5,
            mms_dt_per_h: 0.25,
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}` as a number")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(key, s))
        .collect()
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{value}`"))),
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// Parses and validates configuration text over the defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        let (mut dt, mut cfl, mut dt_max) = (None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            match key {
                "dt" => dt = Some(number::<f64>(key, value)?),
                "cfl" => cfl = Some(number::<f64>(key, value)?),
                "dt_max" => dt_max = Some(number::<f64>(key, value)?),
                _ => cfg.set(key, value)?,
            }
        }
        cfg.step = match (dt, cfl, dt_max) {
            (Some(_), Some(_), _) => return Err(Error::config("dt", "`dt` and `cfl` are mutually exclusive")),
            (Some(_), None, Some(_)) => return Err(Error::config("dt_max", "only meaningful with `cfl`")),
            (Some(dt), None, None) => StepControl::Fixed { dt },
            (None, c, m) => {
                let StepControl::Adaptive { cfl, dt_max } = RunConfig::default().step else {
                    unreachable!()
                };
                StepControl::Adaptive { cfl: c.unwrap_or(cfl), dt_max: m.unwrap_or(dt_max) }
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "nx" => self.nx = number(key, value)?,
            "ny" => self.ny = number(key, value)?,
            "lx" => self.lx = number(key, value)?,
            "ly" => self.ly = number(key, value)?,
            "gamma" => self.gamma = number(key, value)?,
            "kappa" => self.kappa = number(key, value)?,
            "variant" => self.variant = value.parse()?,
            "t_end" => self.t_end = number(key, value)?,
            "max_steps" => self.max_steps = number(key, value)?,
            "ic" => self.ic = value.parse()?,
            "seed" => self.seed = number(key, value)?,
            "amplitude" => self.amplitude = number(key, value)?,
            "advection" => self.advection = value.parse()?,
            "solver" => self.solver = value.parse()?,
            "every" => self.every = number(key, value)?,
            "lp" => self.lp = value.parse()?,
            "csv" => self.csv = PathBuf::from(value),
            "checkpoint" => self.checkpoint = PathBuf::from(value),
            "restart" => self.restart = Some(PathBuf::from(value)),
            "checks" => self.checks = Checks::parse_list(key, value)?,
            "energy_tol" => self.energy_tol = number(key, value)?,
            "z_tol" => self.z_tol = number(key, value)?,
            "gronwall_tol" => self.gronwall_tol = number(key, value)?,
            "rate_slack" => self.rate_slack = number(key, value)?,
            "fit_fraction" => self.fit_fraction = number(key, value)?,
            "sweep_gamma" => self.sweep_gamma = list(key, value)?,
            "sweep_kappa" => self.sweep_kappa = list(key, value)?,
            "sweep_parallel" => self.sweep_parallel = boolean(key, value)?,
            "mms_levels" => self.mms_levels = list(key, value)?,
            "mms_t_end" => self.mms_t_end = number(key, value)?,
            "mms_dt_per_h" => self.mms_dt_per_h = number(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Re-checks every constraint; used after command-line overrides too.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params()?;
        self.controls().validate()?;
        if self.every == 0 {
            return Err(Error::config("every", "must be at least 1"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config("amplitude", format!("must be finite, got {}", self.amplitude)));
        }
        positive("energy_tol", self.energy_tol)?;
        positive("z_tol", self.z_tol)?;
        positive("gronwall_tol", self.gronwall_tol)?;
        positive("rate_slack", self.rate_slack)?;
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) {
            return Err(Error::config("fit_fraction", format!("must lie in (0, 1], got {}", self.fit_fraction)));
        }
        if self.sweep_gamma.is_empty() {
            return Err(Error::config("sweep_gamma", "needs at least one value"));
        }
        if self.sweep_kappa.is_empty() {
            return Err(Error::config("sweep_kappa", "needs at least one value"));
        }
        for &g in &self.sweep_gamma {
            positive("sweep_gamma", g)?;
        }
        for &k in &self.sweep_kappa {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::config("sweep_kappa", format!("must be non-negative, got {k}")));
            }
        }
        if self.mms_levels.len() < 2 {
            return Err(Error::config("mms_levels", "needs at least two levels"));
        }
        if let Some(&n) = self.mms_levels.iter().find(|&&n| n < 3) {
            return Err(Error::config("mms_levels", format!("levels need at least 3 nodes, got {n}")));
        }
        positive("mms_t_end", self.mms_t_end)?;
        positive("mms_dt_per_h", self.mms_dt_per_h)?;
        let explicit = self.checks;
        if self.variant == Variant::Damped && (explicit.zcheck || explicit.gronwall) && explicit != Checks::ALL {
            return Err(Error::config("checks", "zcheck and gronwall apply to the standard variant only"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }

    pub fn params(&self) -> Result<PhysParams> {
        PhysParams::new(self.gamma, self.kappa, self.variant)
    }

    pub fn controls(&self) -> TimeControls {
        TimeControls { step: self.step, t_end: self.t_end, max_steps: self.max_steps }
    }

    /// Applies the `MPOLAR_SEED` override if `value` is present.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::config("MPOLAR_SEED", format!("cannot parse `{v}` as an unsigned integer")))?;
        }
        Ok(())
    }
}

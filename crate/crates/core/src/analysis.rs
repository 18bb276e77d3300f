//! Norms, the combined quantity `Z`, residuals of the energy and `Z`
//! balance laws, the Gronwall envelope for `||Z||_p`, and exponential decay
//! fits.
//!
//! Gradient norms use the edge-difference energy
//! [`gradient_energy`](crate::domain::gradient_energy). The velocity norm is
//! `||u||^2 = gradient_energy(psi)`, which equals `<psi, omega>` for
//! Dirichlet `psi`, so the discrete energy balance mirrors the continuum one
//! term by term.

use std::str::FromStr;

use crate::domain::{advect, gradient_energy, inner_product, integrate, AdvectionScheme, ScalarField};
use crate::dynamics::{PhysParams, State, Variant};
use crate::error::{Error, Result};

/// Exponent `p` of an `L^p` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl Default for NormExponent {
    fn default() -> Self {
        NormExponent::Infinity
    }
}

impl FromStr for NormExponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" || s == "infinity" {
            return Ok(NormExponent::Infinity);
        }
        match s.parse::<f64>() {
            Ok(p) if p >= 1.0 && p.is_finite() => Ok(NormExponent::Finite(p)),
            _ => Err(Error::config("lp", format!("expected a number >= 1 or `inf`, got `{s}`"))),
        }
    }
}

/// `(integral |f|^p)^(1/p)` with trapezoid weights, or the nodal maximum.
pub fn lp_norm(f: &ScalarField, p: NormExponent) -> f64 {
    match p {
        NormExponent::Infinity => f.max_abs(),
        NormExponent::Finite(p) if p == 2.0 => inner_product(f, f).expect("same grid").max(0.0).sqrt(),
        NormExponent::Finite(p) => integrate(&f.map(|v| v.abs().powf(p))).powf(1.0 / p),
    }
}

/// Per-record diagnostics. Fields that need a three-state window or a
/// standard-variant run are `None` when unavailable.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_u: f64,
    pub l2_w: f64,
    /// `||omega||_2`, the H1 seminorm of `u`.
    pub h1_semi_u: f64,
    /// `||grad w||_2`.
    pub h1_semi_w: f64,
    pub linf_omega: f64,
    pub linf_w: f64,
    pub linf_z: Option<f64>,
    pub lp: NormExponent,
    pub lp_z: Option<f64>,
    pub lp_w: f64,
    /// `||u||^2 + ||w||^2`.
    pub energy: f64,
    pub energy_residual: Option<f64>,
    pub z_residual_l2: Option<f64>,
    pub gronwall_envelope: Option<f64>,
}

impl DiagnosticsRecord {
    /// `||u||^2 + ||omega||^2 + ||w||^2 + ||grad w||^2`.
    pub fn h1_energy(&self) -> f64 {
        self.l2_u * self.l2_u + self.h1_semi_u * self.h1_semi_u + self.l2_w * self.l2_w + self.h1_semi_w * self.h1_semi_w
    }
}

fn l2_norms(state: &State) -> (f64, f64) {
    (
        gradient_energy(state.psi()).max(0.0).sqrt(),
        lp_norm(state.w(), NormExponent::Finite(2.0)),
    )
}

/// `E = ||u||^2 + ||w||^2`, bit-identical to the `energy` field of [`norms`].
pub fn energy(state: &State) -> f64 {
    let (l2_u, l2_w) = l2_norms(state);
    l2_u * l2_u + l2_w * l2_w
}

/// Norm fields of a record; residual and envelope fields are left empty.
pub fn norms(state: &State, params: &PhysParams, p: NormExponent) -> DiagnosticsRecord {
    let (l2_u, l2_w) = l2_norms(state);
    let z = combined_z(state, params).ok();
    DiagnosticsRecord {
        t: state.t(),
        l2_u,
        l2_w,
        h1_semi_u: lp_norm(state.omega(), NormExponent::Finite(2.0)),
        h1_semi_w: gradient_energy(state.w()).max(0.0).sqrt(),
        linf_omega: state.omega().max_abs(),
        linf_w: state.w().max_abs(),
        linf_z: z.as_ref().map(|z| z.max_abs()),
        lp: p,
        lp_z: z.as_ref().map(|z| lp_norm(z, p)),
        lp_w: lp_norm(state.w(), p),
        energy: l2_u * l2_u + l2_w * l2_w,
        energy_residual: None,
        z_residual_l2: None,
        gronwall_envelope: None,
    }
}

/// `Z = omega + (2 kappa / gamma) w`, defined for the standard variant only.
pub fn combined_z(state: &State, params: &PhysParams) -> Result<ScalarField> {
    if params.variant() != Variant::Standard {
        return Err(Error::Usage("Z is only defined for the standard variant".into()));
    }
    state
        .omega()
        .lin_comb(1.0, 2.0 * params.kappa() / params.gamma(), state.w())
}

fn uniform_step(history: [&State; 3]) -> Result<f64> {
    let d0 = history[1].t() - history[0].t();
    let d1 = history[2].t() - history[1].t();
    let scale = d0.abs().max(d1.abs()).max(history[2].t().abs());
    if !(d0 > 0.0) || (d1 - d0).abs() > 1e-9 * scale {
        return Err(Error::Usage(format!("history needs uniform positive steps, got {d0} and {d1}")));
    }
    Ok(0.5 * (d0 + d1))
}

/// Pointwise
/// `Z_t + u.grad Z - (4 kappa^2 / gamma) Z + (8 kappa^2 / gamma)(1 + kappa / gamma) w`
/// at the middle state, with `Z_t` by central difference; zero on the boundary.
pub fn z_residual_field(history: [&State; 3], params: &PhysParams, scheme: AdvectionScheme) -> Result<ScalarField> {
    let dt = uniform_step(history)?;
    let (g, k) = (params.gamma(), params.kappa());
    let z0 = combined_z(history[0], params)?;
    let z1 = combined_z(history[1], params)?;
    let z2 = combined_z(history[2], params)?;
    let mid = history[1];
    let mut r = z2
        .lin_comb(0.5 / dt, -0.5 / dt, &z0)?
        .lin_comb(1.0, 1.0, &advect(mid.u(), &z1, scheme)?)?
        .lin_comb(1.0, -4.0 * k * k / g, &z1)?
        .lin_comb(1.0, 8.0 * k * k / g * (1.0 + k / g), mid.w())?;
    r.zero_boundary();
    Ok(r)
}

/// L2 norm of [`z_residual_field`].
pub fn z_residual(history: [&State; 3], params: &PhysParams, scheme: AdvectionScheme) -> Result<f64> {
    Ok(lp_norm(&z_residual_field(history, params, scheme)?, NormExponent::Finite(2.0)))
}

/// Terms of the energy balance at the middle of a three-state window.
///
/// Standard: `1/2 dE/dt + gamma ||grad w||^2 + 4 kappa ||w||^2 = 4 kappa <w, omega>`.
/// Damped: `1/2 dE/dt + kappa ||u||^2 + gamma ||grad w||^2 = 4 kappa <w, omega>`.
///
/// The coupling `<w, omega>` equals `integral u . grad_perp w` for `w`
/// vanishing on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    pub d_energy_dt: f64,
    /// `gamma ||grad w||^2`.
    pub diffusion: f64,
    /// `4 kappa ||w||^2` (standard) or `kappa ||u||^2` (damped).
    pub zeroth_order: f64,
    /// `4 kappa <w, omega>`.
    pub coupling: f64,
}

impl EnergyBudget {
    pub fn residual(&self) -> f64 {
        (0.5 * self.d_energy_dt + self.diffusion + self.zeroth_order - self.coupling).abs()
    }

    /// `max(gamma ||grad w||^2, zeroth-order term, |dE/dt|)`.
    pub fn scale(&self) -> f64 {
        self.diffusion.max(self.zeroth_order).max(self.d_energy_dt.abs())
    }
}

fn discrete_energy(s: &State) -> f64 {
    gradient_energy(s.psi()) + inner_product(s.w(), s.w()).expect("same grid")
}

pub fn energy_budget(history: [&State; 3], params: &PhysParams) -> Result<EnergyBudget> {
    let dt = uniform_step(history)?;
    let mid = history[1];
    let (g, k) = (params.gamma(), params.kappa());
    let d_energy_dt = (discrete_energy(history[2]) - discrete_energy(history[0])) / (2.0 * dt);
    let w_sq = inner_product(mid.w(), mid.w())?;
    let zeroth_order = match params.variant() {
        Variant::Standard => 4.0 * k * w_sq,
        Variant::Damped => k * gradient_energy(mid.psi()),
    };
    Ok(EnergyBudget {
        d_energy_dt,
        diffusion: g * gradient_energy(mid.w()),
        zeroth_order,
        coupling: 4.0 * k * inner_product(mid.w(), mid.omega())?,
    })
}

/// `|LHS - RHS|` of the energy balance.
pub fn energy_residual(history: [&State; 3], params: &PhysParams) -> Result<f64> {
    Ok(energy_budget(history, params)?.residual())
}

/// Running evaluation of
/// `e^{a t} ||Z_0||_p + int_0^t e^{a (t - s)} b ||w(s)||_p ds`
/// with `a = 4 kappa^2 / gamma`, `b = (8 kappa^2 / gamma)(1 + kappa / gamma)`
/// and trapezoid quadrature in time.
#[derive(Debug, Clone)]
pub struct GronwallTracker {
    growth: f64,
    source: f64,
    z0: f64,
    t0: f64,
    last_t: f64,
    last_w: f64,
    integral: f64,
}

impl GronwallTracker {
    pub fn new(params: &PhysParams, t0: f64, z0_norm: f64, w0_norm: f64) -> Result<Self> {
        if params.variant() != Variant::Standard {
            return Err(Error::Usage("the Z envelope applies to the standard variant only".into()));
        }
        let (g, k) = (params.gamma(), params.kappa());
        Ok(GronwallTracker {
            growth: 4.0 * k * k / g,
            source: 8.0 * k * k / g * (1.0 + k / g),
            z0: z0_norm,
            t0,
            last_t: t0,
            last_w: w0_norm,
            integral: 0.0,
        })
    }

    /// Advances to time `t` where `||w||_p = w_norm`; returns the envelope.
    pub fn push(&mut self, t: f64, w_norm: f64) -> f64 {
        let h = t - self.last_t;
        let decay = (self.growth * h).exp();
        self.integral = decay * self.integral + 0.5 * h * self.source * (decay * self.last_w + w_norm);
        self.last_t = t;
        self.last_w = w_norm;
        self.value()
    }

    pub fn value(&self) -> f64 {
        (self.growth * (self.last_t - self.t0)).exp() * self.z0 + self.integral
    }
}

fn record_norms(r: &DiagnosticsRecord, p: NormExponent) -> Result<(f64, f64)> {
    let missing = || Error::Usage(format!("record at t = {} lacks the Z norm for p = {p:?}", r.t));
    match p {
        NormExponent::Infinity => Ok((r.linf_z.ok_or_else(missing)?, r.linf_w)),
        _ if r.lp == p => Ok((r.lp_z.ok_or_else(missing)?, r.lp_w)),
        _ => Err(missing()),
    }
}

/// Envelope values aligned with `records`.
pub fn gronwall_z_envelope(records: &[DiagnosticsRecord], params: &PhysParams, p: NormExponent) -> Result<Vec<f64>> {
    let Some(first) = records.first() else {
        return Ok(vec![]);
    };
    let (z0, w0) = record_norms(first, p)?;
    let mut tracker = GronwallTracker::new(params, first.t, z0, w0)?;
    let mut out = vec![tracker.value()];
    for r in &records[1..] {
        let (_, w) = record_norms(r, p)?;
        out.push(tracker.push(r.t, w));
    }
    Ok(out)
}

/// Both candidate L2 decay rates for the damped variant:
/// `(2 kappa (gamma - 4 kappa) / (gamma + 4 kappa), (gamma - 4 kappa) / C)`
/// with `C` the squared Poincare constant.
pub fn decay_rate_branches(params: &PhysParams, poincare_sq: f64) -> Result<(f64, f64)> {
    if params.variant() != Variant::Damped {
        return Err(Error::Usage("the decay rate applies to the damped variant".into()));
    }
    if !(poincare_sq > 0.0) {
        return Err(Error::Usage(format!("Poincare constant must be positive, got {poincare_sq}")));
    }
    let (g, k) = (params.gamma(), params.kappa());
    if !params.decay_regime() {
        return Err(Error::Regime { gamma: g, kappa: k });
    }
    Ok((2.0 * k * (g - 4.0 * k) / (g + 4.0 * k), (g - 4.0 * k) / poincare_sq))
}

/// Guaranteed decay rate `C0` of `||u||^2 + ||w||^2`.
pub fn predicted_c0(params: &PhysParams, poincare_sq: f64) -> Result<f64> {
    let (a, b) = decay_rate_branches(params, poincare_sq)?;
    Ok(a.min(b))
}

/// Which record quantity an exponential fit targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitQuantity {
    #[default]
    Energy,
    H1Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub fitted_rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub predicted_c0: Option<f64>,
    /// Rate implied by reading the last pre-Gronwall inequality with its
    /// `1/2 d/dt` literally, i.e. `2 C0`. Reported, never asserted.
    pub predicted_c0_half_derivative: Option<f64>,
    pub poincare_sq: Option<f64>,
}

impl DecayFit {
    /// Attaches the predicted rate; fails with a regime error outside
    /// `gamma > 4 kappa`.
    pub fn with_prediction(mut self, params: &PhysParams, poincare_sq: f64) -> Result<Self> {
        let c0 = predicted_c0(params, poincare_sq)?;
        self.predicted_c0 = Some(c0);
        self.predicted_c0_half_derivative = Some(2.0 * c0);
        self.poincare_sq = Some(poincare_sq);
        Ok(self)
    }
}

/// Window covering the last `fraction` of the records' time span.
pub fn tail_window(records: &[DiagnosticsRecord], fraction: f64) -> (f64, f64) {
    let t0 = records.first().map_or(0.0, |r| r.t);
    let t1 = records.last().map_or(0.0, |r| r.t);
    (t1 - fraction * (t1 - t0), t1)
}

/// Least-squares line through `(t, ln v)`; `rate = -slope`.
pub fn fit_exponential(times: &[f64], values: &[f64]) -> Result<(f64, f64, f64)> {
    if times.len() != values.len() || times.len() < 10 {
        return Err(Error::Usage(format!("need at least 10 samples to fit, got {}", times.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Usage(format!("cannot fit a non-positive value {v}")));
    }
    let n = times.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for (t, l) in times.iter().zip(&logs) {
        stt += (t - tm) * (t - tm);
        stl += (t - tm) * (l - lm);
    }
    if stt == 0.0 {
        return Err(Error::Usage("fit window has zero time span".into()));
    }
    let slope = stl / stt;
    let intercept = lm - slope * tm;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (t, l) in times.iter().zip(&logs) {
        let e = l - (intercept + slope * t);
        ss_res += e * e;
        ss_tot += (l - lm) * (l - lm);
    }
    // A constant series is fitted perfectly by a flat line.
    let r2 = if ss_tot <= 1e-20 * n * lm.abs().max(1.0).powi(2) {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok((-slope, intercept, r2))
}

/// Fits `quantity ~ exp(intercept - rate t)` over records inside `window`.
pub fn fit_decay_rate(records: &[DiagnosticsRecord], window: (f64, f64), quantity: FitQuantity) -> Result<DecayFit> {
    if !(window.0 < window.1) {
        return Err(Error::Usage(format!("empty fit window {window:?}")));
    }
    let tol = 1e-12 * window.1.abs().max(1.0);
    let sel: Vec<&DiagnosticsRecord> = records
        .iter()
        .filter(|r| r.t >= window.0 - tol && r.t <= window.1 + tol)
        .collect();
    let times: Vec<f64> = sel.iter().map(|r| r.t).collect();
    let values: Vec<f64> = sel
        .iter()
        .map(|r| match quantity {
            FitQuantity::Energy => r.energy,
            FitQuantity::H1Energy => r.h1_energy(),
        })
        .collect();
    let (rate, intercept, r2) = fit_exponential(&times, &values)?;
    Ok(DecayFit {
        fitted_rate: rate,
        intercept,
        r_squared: r2,
        window,
        samples: times.len(),
        predicted_c0: None,
        predicted_c0_half_derivative: None,
        poincare_sq: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::dynamics::{initial_condition, InitialKind};
    use crate::elliptic::PoissonSolver;
    use std::f64::consts::PI;

    fn record(t: f64, energy: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            l2_u: 0.0,
            l2_w: energy.sqrt(),
            h1_semi_u: 0.0,
            h1_semi_w: 0.0,
            linf_omega: 0.0,
            linf_w: 0.0,
            linf_z: Some(0.0),
            lp: NormExponent::Infinity,
            lp_z: Some(0.0),
            lp_w: 0.0,
            energy,
            energy_residual: None,
            z_residual_l2: None,
            gronwall_envelope: None,
        }
    }

    #[test]
    fn lp_norms_of_constant() {
        let g = Grid::new(17, 9, 1.0, 1.0).unwrap();
        let one = ScalarField::from_fn(g, |_, _| 1.0);
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&one, NormExponent::Finite(p)) - 1.0).abs() < 1e-12);
        }
        assert_eq!(lp_norm(&one, NormExponent::Infinity), 1.0);
        assert!("0.5".parse::<NormExponent>().is_err());
        assert_eq!("inf".parse::<NormExponent>().unwrap(), NormExponent::Infinity);
    }

    #[test]
    fn holder_sanity() {
        let g = Grid::new(21, 13, 2.0, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (5.0 * x).sin() * (y * 9.0).cos() + 0.3);
        let l2 = lp_norm(&f, NormExponent::Finite(2.0));
        assert!(l2 <= f.max_abs() * (g.lx() * g.ly()).sqrt());
    }

    #[test]
    fn eigenmode_norms_converge() {
        let mut e_w = vec![];
        let mut e_g = vec![];
        for n in [32, 64, 128] {
            let g = Grid::unit_square(n).unwrap();
            let w = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
            e_w.push((inner_product(&w, &w).unwrap() - 0.25).abs());
            e_g.push((gradient_energy(&w) - PI * PI / 2.0).abs());
        }
        // the trapezoid rule integrates sin^2 exactly on a uniform grid
        assert!(e_w.iter().all(|&e| e < 1e-14), "{e_w:?}");
        for p in e_g.windows(2) {
            assert!((p[0] / p[1]).log2() >= 1.9, "{e_g:?}");
        }
    }

    #[test]
    fn z_cases() {
        let g = Grid::unit_square(24).unwrap();
        let solver = PoissonSolver::new(g);
        let st = initial_condition(InitialKind::RandomSmooth, &solver, 2, 1.0).unwrap();
        let p0 = PhysParams::new(1.0, 0.0, Variant::Standard).unwrap();
        assert_eq!(&combined_z(&st, &p0).unwrap(), st.omega());
        let damped = PhysParams::new(1.0, 0.1, Variant::Damped).unwrap();
        assert!(matches!(combined_z(&st, &damped), Err(Error::Usage(_))));

        let p = PhysParams::new(2.0, 0.3, Variant::Standard).unwrap();
        let w = st.w().clone();
        let omega = w.scaled(-2.0 * 0.3 / 2.0);
        let s2 = State::from_vorticity(0.0, omega, w, &solver).unwrap();
        assert!(combined_z(&s2, &p).unwrap().max_abs() < 1e-15);

        let no_w = State::from_vorticity(0.0, st.omega().clone(), ScalarField::zeros(g), &solver).unwrap();
        assert_eq!(&combined_z(&no_w, &p).unwrap(), st.omega());
    }

    #[test]
    fn residuals_of_zero_history() {
        let g = Grid::unit_square(16).unwrap();
        let solver = PoissonSolver::new(g);
        let mk = |t| State::from_vorticity(t, ScalarField::zeros(g), ScalarField::zeros(g), &solver).unwrap();
        let (a, b, c) = (mk(0.0), mk(0.1), mk(0.2));
        let p = PhysParams::new(1.0, 0.2, Variant::Standard).unwrap();
        assert_eq!(z_residual([&a, &b, &c], &p, AdvectionScheme::Central2).unwrap(), 0.0);
        assert_eq!(energy_residual([&a, &b, &c], &p).unwrap(), 0.0);
        let d = mk(0.35);
        assert!(matches!(z_residual([&a, &b, &d], &p, AdvectionScheme::Central2), Err(Error::Usage(_))));
        assert!(matches!(energy_residual([&a, &b, &d], &p), Err(Error::Usage(_))));
    }

    #[test]
    fn envelope_special_cases() {
        let recs: Vec<DiagnosticsRecord> = (0..20)
            .map(|k| {
                let mut r = record(0.1 * k as f64, 1.0);
                r.linf_z = Some(if k == 0 { 2.5 } else { 1.0 });
                r.linf_w = 0.7;
                r
            })
            .collect();
        let p0 = PhysParams::new(1.0, 0.0, Variant::Standard).unwrap();
        let env = gronwall_z_envelope(&recs, &p0, NormExponent::Infinity).unwrap();
        assert!(env.iter().all(|&e| e == 2.5));

        let mut no_w = recs.clone();
        no_w.iter_mut().for_each(|r| r.linf_w = 0.0);
        let p = PhysParams::new(1.0, 0.3, Variant::Standard).unwrap();
        let env = gronwall_z_envelope(&no_w, &p, NormExponent::Infinity).unwrap();
        for (r, e) in no_w.iter().zip(&env) {
            let want = (4.0 * 0.09 * r.t).exp() * 2.5;
            assert!((e - want).abs() < 1e-12 * want);
        }

        // constant ||w||: closed form e^{at} z0 + b w (e^{at} - 1) / a, up to trapezoid error
        let env = gronwall_z_envelope(&recs, &p, NormExponent::Infinity).unwrap();
        let (a, b) = (0.36, 8.0 * 0.09 * 1.3);
        let t = recs.last().unwrap().t;
        let want = (a * t).exp() * 2.5 + b * 0.7 * ((a * t).exp() - 1.0) / a;
        assert!((env.last().unwrap() - want).abs() < 1e-3 * want);

        assert!(gronwall_z_envelope(&recs, &p, NormExponent::Finite(3.0)).is_err());
        let damped = PhysParams::new(1.0, 0.1, Variant::Damped).unwrap();
        assert!(gronwall_z_envelope(&recs, &damped, NormExponent::Infinity).is_err());
    }

    #[test]
    fn predicted_rate_examples() {
        let p = PhysParams::new(1.0, 0.1, Variant::Damped).unwrap();
        let cp2 = 1.0 / (2.0 * PI * PI);
        let (a, b) = decay_rate_branches(&p, cp2).unwrap();
        assert!((a - 0.085_714_285_714_285_71).abs() < 1e-15);
        assert!((b - 11.843_525_281_307_230).abs() < 1e-9);
        assert_eq!(predicted_c0(&p, cp2).unwrap(), a);

        let tiny = PhysParams::new(1.0, 1e-9, Variant::Damped).unwrap();
        assert!(predicted_c0(&tiny, cp2).unwrap() < 3e-9);

        let edge = PhysParams::new(1.0, 0.25, Variant::Damped).unwrap();
        assert!(matches!(predicted_c0(&edge, cp2), Err(Error::Regime { .. })));
        let std = PhysParams::new(1.0, 0.1, Variant::Standard).unwrap();
        assert!(predicted_c0(&std, cp2).is_err());
    }

    #[test]
    fn fits_exact_exponential() {
        let recs: Vec<_> = (0..500).map(|k| {
            let t = 0.01 * k as f64;
            record(t, 5.0 * (-0.3 * t).exp())
        }).collect();
        let fit = fit_decay_rate(&recs, (0.0, 5.0), FitQuantity::Energy).unwrap();
        assert!((fit.fitted_rate - 0.3).abs() < 1e-10);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat: Vec<_> = (0..50).map(|k| record(0.1 * k as f64, 2.0)).collect();
        let fit = fit_decay_rate(&flat, tail_window(&flat, 0.6), FitQuantity::Energy).unwrap();
        assert!(fit.fitted_rate.abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let few: Vec<_> = (0..5).map(|k| record(k as f64, 1.0)).collect();
        assert!(fit_decay_rate(&few, (0.0, 5.0), FitQuantity::Energy).is_err());
        let mut zero: Vec<_> = (0..20).map(|k| record(k as f64, 1.0)).collect();
        zero[7].energy = 0.0;
        assert!(matches!(fit_decay_rate(&zero, (0.0, 20.0), FitQuantity::Energy), Err(Error::Usage(_))));
        assert!(fit_decay_rate(&zero, (3.0, 3.0), FitQuantity::Energy).is_err());
    }
}

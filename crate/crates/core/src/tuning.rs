//! Derived constants: residual factors, optimal scalings, step-size bounds,
//! and guaranteed rate factors.
//!
//! Given class parameters `(eta, omega, omega_av)` and a smoothness profile,
//! [`tune`] produces everything a run needs: the scalings `lambda` (control
//! variates) and `nu` (gradient estimate), the residual factors `r` and
//! `r_av`, the Lyapunov constants `s` and `theta`, the recommended step size
//! `gamma` (the theorem bound), and the guaranteed linear rate.

use crate::compressors::{lambda_star, ClassParams};
use crate::error::{Error, Result};

/// Convergence regime the constants are derived for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Smooth objective, no composite term, gradient-dominated (linear rate).
    Pl,
    /// Composite objective with a proximable term (linear rate).
    Kl,
    /// No curvature assumption (sublinear gradient-norm bound).
    Nonconvex,
}

/// Which specialization to tune for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// General method: `lambda = lambda*`, `nu = nu*`.
    EfBv,
    /// `nu = lambda = lambda*`, and no knowledge of `omega_av` is assumed
    /// (`r_av` is computed with `omega` in place of `omega_av`).
    Ef21,
    /// `nu = 1`, `lambda = lambda*`.
    Diana,
}

/// Per-function smoothness constants of a distributed problem.
#[derive(Clone, Debug)]
pub struct SmoothnessProfile {
    /// Per-worker constants `L_i`.
    pub l_list: Vec<f64>,
    /// Root mean square of the `L_i` by default.
    pub l_tilde: f64,
    /// Smoothness of the average function; `l <= l_tilde`.
    pub l: f64,
    /// Gradient-domination constant used for the linear rate.
    pub mu: f64,
}

/// All constants of one tuned configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuneResult {
    pub lambda: f64,
    pub nu: f64,
    /// Residual factor of the control-variate update; `< 1` is required.
    pub r: f64,
    /// Residual factor of the averaged gradient estimate.
    pub r_av: f64,
    /// Slack constant entering the Lyapunov contraction.
    pub s: f64,
    /// Weight of the control-variate residual in the Lyapunov function
    /// (`+inf` when aggregation is exact, dropping the correction term).
    pub theta: f64,
    /// Recommended step size: exactly the theorem bound.
    pub gamma: f64,
    /// Guaranteed contraction factor per round; `None` in nonconvex mode.
    pub rate: Option<f64>,
    pub mode: Mode,
}

impl TuneResult {
    /// The stochastic penalty ratio `sqrt(r_av / r)`; zero if `r_av = 0`.
    pub fn sqrt_rav_over_r(&self) -> f64 {
        if self.r_av == 0.0 {
            0.0
        } else {
            (self.r_av / self.r).sqrt()
        }
    }
}

/// Residual factor `(1 - scale + scale*eta)^2 + scale^2 * variance`. With
/// `(lambda, omega)` this is `r`; with `(nu, omega_av)` it is `r_av`.
pub fn residual_factor(scale: f64, eta: f64, variance: f64) -> f64 {
    debug_assert!(scale > 0.0 && scale <= 1.0);
    debug_assert!((0.0..1.0).contains(&eta));
    debug_assert!(variance >= 0.0);
    let b = 1.0 - scale + scale * eta;
    b * b + scale * scale * variance
}

/// The scaling minimizing `r_av` over `nu` in `(0, 1]`:
/// `min((1 - eta) / ((1 - eta)^2 + omega_av), 1)`.
pub fn nu_star(eta: f64, omega_av: f64) -> f64 {
    lambda_star(eta, omega_av)
}

/// Lyapunov constants `(s, theta)` for a given pair of residual factors.
///
/// Linear-rate modes use `s = sqrt((1 + r) / (2r)) - 1`, which makes
/// `(1 + s)^2 r = (r + 1)/2`; the nonconvex mode uses `s = 1/sqrt(r) - 1`,
/// which makes `(1 + s)^2 r = 1`. In both, `theta = s (1 + s) r / r_av`.
/// Exact aggregation (`r_av = 0`) or exact communication (`r = 0`) yields
/// `theta = +inf`: the Lyapunov correction term is absent.
pub fn rate_constants(r: f64, r_av: f64, mode: Mode) -> (f64, f64) {
    debug_assert!((0.0..1.0).contains(&r));
    if r == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let s = match mode {
        Mode::Pl | Mode::Kl => ((1.0 + r) / (2.0 * r)).sqrt() - 1.0,
        Mode::Nonconvex => 1.0 / r.sqrt() - 1.0,
    };
    let theta = if r_av == 0.0 {
        f64::INFINITY
    } else {
        s * (1.0 + s) * r / r_av
    };
    (s, theta)
}

/// The largest step size allowed by the convergence guarantees:
/// `1 / (L + L~ sqrt(r_av/r) / s)` in the smooth modes and
/// `1 / (2L + L~ sqrt(r_av/r) / s)` in the composite mode. This is also the
/// recommended step size.
pub fn gamma_max(profile: &SmoothnessProfile, r: f64, r_av: f64, s: f64, mode: Mode) -> f64 {
    let penalty = if r_av == 0.0 {
        0.0
    } else {
        profile.l_tilde * (r_av / r).sqrt() / s
    };
    match mode {
        Mode::Pl | Mode::Nonconvex => 1.0 / (profile.l + penalty),
        Mode::Kl => 1.0 / (2.0 * profile.l + penalty),
    }
}

/// Guaranteed per-round contraction factor:
/// `max(1 - gamma*mu, (r+1)/2)` in the smooth regime and
/// `max(1 / (1 + gamma*mu/2), (r+1)/2)` in the composite regime.
pub fn rate_factor(gamma: f64, mu: f64, r: f64, mode: Mode) -> f64 {
    debug_assert!(r < 1.0);
    let curvature = match mode {
        Mode::Pl => 1.0 - gamma * mu,
        Mode::Kl => 1.0 / (1.0 + 0.5 * gamma * mu),
        Mode::Nonconvex => panic!("no linear rate in nonconvex mode"),
    };
    curvature.max((r + 1.0) / 2.0)
}

/// Derive all constants for one algorithm at its recommended scalings.
pub fn tune(
    params: &ClassParams,
    profile: &SmoothnessProfile,
    algorithm: Algorithm,
    mode: Mode,
) -> Result<TuneResult> {
    let lambda = lambda_star(params.eta, params.omega);
    let (nu, omega_for_av) = match algorithm {
        Algorithm::EfBv => (nu_star(params.eta, params.omega_av), params.omega_av),
        Algorithm::Ef21 => (lambda, params.omega),
        Algorithm::Diana => (1.0, params.omega_av),
    };
    finish(params, profile, lambda, nu, omega_for_av, mode)
}

/// Derive constants for explicit scalings `(lambda, nu)`. Fails when the
/// resulting residual factor violates the `r < 1` hypothesis of the
/// convergence theorems.
pub fn tune_explicit(
    params: &ClassParams,
    profile: &SmoothnessProfile,
    lambda: f64,
    nu: f64,
    mode: Mode,
) -> Result<TuneResult> {
    if !(lambda > 0.0 && lambda <= 1.0) || !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Config(format!(
            "scalings must lie in (0, 1]; got lambda = {lambda}, nu = {nu}"
        )));
    }
    finish(params, profile, lambda, nu, params.omega_av, mode)
}

fn finish(
    params: &ClassParams,
    profile: &SmoothnessProfile,
    lambda: f64,
    nu: f64,
    omega_for_av: f64,
    mode: Mode,
) -> Result<TuneResult> {
    let r = residual_factor(lambda, params.eta, params.omega);
    if r >= 1.0 {
        return Err(Error::Config(format!(
            "residual factor r = {r} >= 1 violates the r < 1 hypothesis of the \
             convergence theorems; use a smaller lambda (e.g. the optimal scaling)"
        )));
    }
    let r_av = residual_factor(nu, params.eta, omega_for_av);
    let (s, theta) = rate_constants(r, r_av, mode);
    let gamma = gamma_max(profile, r, r_av, s, mode);
    let rate = match mode {
        Mode::Pl | Mode::Kl => Some(rate_factor(gamma, profile.mu, r, mode)),
        Mode::Nonconvex => None,
    };
    Ok(TuneResult {
        lambda,
        nu,
        r,
        r_av,
        s,
        theta,
        gamma,
        rate,
        mode,
    })
}

/// Recompute `gamma` (clamping a user override to the bound) and the rate.
/// Returns the adjusted result and a warning when clamping occurred.
pub fn with_gamma_override(
    tune: &TuneResult,
    profile: &SmoothnessProfile,
    gamma: f64,
) -> Result<(TuneResult, Option<String>)> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::Config(format!("step size gamma = {gamma} must be positive")));
    }
    let bound = gamma_max(profile, tune.r, tune.r_av, tune.s, tune.mode);
    let (used, warning) = if gamma > bound {
        (
            bound,
            Some(format!(
                "requested gamma = {gamma:e} exceeds the guaranteed bound {bound:e}; clamped"
            )),
        )
    } else {
        (gamma, None)
    };
    let rate = match tune.mode {
        Mode::Pl | Mode::Kl => Some(rate_factor(used, profile.mu, tune.r, tune.mode)),
        Mode::Nonconvex => None,
    };
    Ok((
        TuneResult {
            gamma: used,
            rate,
            ..*tune
        },
        warning,
    ))
}

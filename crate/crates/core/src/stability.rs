//! Discrete-time stability of the baseline and DSR updates.
//!
//! Diagonalizing `K` splits the DSR update into one second-order system
//! per eigenvalue `λ`, with characteristic polynomial
//!
//! ```text
//! D(z) = z² − (1 − αβδt λ + (1 − βλ)) z + (1 − βλ)
//! ```
//!
//! Three routes to the same verdict are provided: the closed-form gain
//! bound, the second-order Jury conditions, and the root magnitudes.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{ControlLaw, ControllerConfig, DsrGains};
use crate::network::PinnedLaplacian;

/// Spectral radii within this distance of 1 are marginal (treated as unstable).
pub const MARGINAL_TOL: f64 = 1e-9;

// Jury inequalities must hold by more than this to count as strict.
const JURY_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Root {
    fn from(z: Complex64) -> Self {
        Root { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRoots {
    pub lambda: f64,
    pub roots: Vec<Root>,
    pub magnitudes: Vec<f64>,
}

impl ModeRoots {
    fn new(lambda: f64, roots: &[Complex64]) -> Self {
        ModeRoots {
            lambda,
            roots: roots.iter().copied().map(Root::from).collect(),
            magnitudes: roots.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.magnitudes.iter().copied().fold(0.0, f64::max)
    }

    /// Largest magnitude once this mode's dominant root is set aside.
    pub fn residual(&self) -> f64 {
        let mut m = self.magnitudes.clone();
        m.sort_by(|a, b| b.total_cmp(a));
        m.get(1).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub marginal: bool,
    pub spectral_radius: f64,
    pub modes: Vec<ModeRoots>,
    /// Index into `modes` (ascending eigenvalue order) attaining the radius.
    pub binding_mode: usize,
}

impl StabilityReport {
    fn from_modes(modes: Vec<ModeRoots>) -> Self {
        let (binding_mode, spectral_radius) = modes.iter().map(ModeRoots::radius).enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, r)| if r > best.1 { (i, r) } else { best },
        );
        StabilityReport {
            stable: spectral_radius < 1.0 - MARGINAL_TOL,
            marginal: (spectral_radius - 1.0).abs() <= MARGINAL_TOL,
            spectral_radius,
            modes,
            binding_mode,
        }
    }

    /// Largest root magnitude over all modes after removing each mode's
    /// dominant root.
    pub fn residual_radius(&self) -> f64 {
        self.modes
            .iter()
            .map(ModeRoots::residual)
            .fold(0.0, f64::max)
    }
}

/// Upper end of the stable gain interval `(0, 2/λ_max)`.
pub fn baseline_gamma_bound(lap: &PinnedLaplacian) -> f64 {
    2.0 / lap.lambda_max()
}

/// Per-mode roots `1 − γλ` of the baseline update.
pub fn baseline_report(lap: &PinnedLaplacian, gamma: f64) -> StabilityReport {
    let modes = lap
        .eigenvalues()
        .iter()
        .map(|&l| ModeRoots::new(l, &[Complex64::new(1.0 - gamma * l, 0.0)]))
        .collect();
    StabilityReport::from_modes(modes)
}

/// `(p, q)` of the monic quadratic `z² + p z + q`.
fn dsr_coefficients(lambda: f64, alpha: f64, beta: f64, dt: f64) -> (f64, f64) {
    let q = 1.0 - beta * lambda;
    let p = -(1.0 - alpha * beta * dt * lambda + q);
    (p, q)
}

/// Both roots of the per-mode characteristic quadratic.
///
/// Real roots use `t = −(p + sign(p)√disc)/2`, `z₁ = t`, `z₂ = q/t` to avoid
/// cancellation.
pub fn dsr_mode_roots(lambda: f64, alpha: f64, beta: f64, dt: f64) -> [Complex64; 2] {
    let (p, q) = dsr_coefficients(lambda, alpha, beta, dt);
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let sign = if p >= 0.0 { 1.0 } else { -1.0 };
        let t = -(p + sign * s) / 2.0;
        let other = if t != 0.0 { q / t } else { 0.0 };
        [Complex64::new(t, 0.0), Complex64::new(other, 0.0)]
    } else {
        let re = -p / 2.0;
        let im = (-disc).sqrt() / 2.0;
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Roots for a delay of `N` samples:
/// `z^{N+1} − (1 − αβδt λ + g) z^N + g` with `g = (1 − βλ)/N`.
pub fn dsr_mode_roots_delayed(lambda: f64, gains: &DsrGains, dt: f64) -> Vec<Complex64> {
    if gains.delay <= 1 {
        return dsr_mode_roots(lambda, gains.alpha, gains.beta, dt).to_vec();
    }
    let g = (1.0 - gains.beta * lambda) / gains.delay as f64;
    let lead = -(1.0 - gains.alpha * gains.beta * dt * lambda + g);
    // monic coefficients, highest degree first (excluding the leading 1)
    let degree = gains.delay + 1;
    let mut coeffs = vec![0.0; degree];
    coeffs[0] = lead;
    coeffs[degree - 1] = g;
    durand_kerner(&coeffs)
}

fn eval_monic(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &c| acc * z + c)
}

/// All roots of `z^d + c[0] z^{d−1} + … + c[d−1]`.
fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let d = coeffs.len();
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..d).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..d {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let delta = eval_monic(coeffs, z[i]) / denom;
            z[i] -= delta;
            change = change.max(delta.norm());
        }
        if change < 1e-15 {
            break;
        }
    }
    z
}

/// Second-order Jury test on `D(z)`: `D(1) > 0`, `D(−1) > 0`, `|D(0)| < 1`.
pub fn jury_stable(lambda: f64, alpha: f64, beta: f64, dt: f64) -> bool {
    let (p, q) = dsr_coefficients(lambda, alpha, beta, dt);
    let d_plus = 1.0 + p + q;
    let d_minus = 1.0 - p + q;
    d_plus > JURY_MARGIN && d_minus > JURY_MARGIN && q.abs() < 1.0 - JURY_MARGIN
}

/// Largest stable `β` for a given `α`: `4 / (λ_max (α δt + 2))`.
pub fn dsr_beta_bound(lap: &PinnedLaplacian, alpha: f64, dt: f64) -> f64 {
    4.0 / (lap.lambda_max() * (alpha * dt + 2.0))
}

/// Closed-form DSR stability: `α > 0` and `0 < β < 4 / (λ_max (α δt + 2))`.
pub fn dsr_bound_stable(lap: &PinnedLaplacian, alpha: f64, beta: f64, dt: f64) -> bool {
    alpha > 0.0 && beta > 0.0 && beta < dsr_beta_bound(lap, alpha, dt)
}

/// Per-mode roots and the spectral radius of the DSR update.
pub fn spectral_radius(lap: &PinnedLaplacian, gains: &DsrGains, dt: f64) -> StabilityReport {
    let modes = lap
        .eigenvalues()
        .iter()
        .map(|&l| ModeRoots::new(l, &dsr_mode_roots_delayed(l, gains, dt)))
        .collect();
    StabilityReport::from_modes(modes)
}

pub fn controller_report(lap: &PinnedLaplacian, controller: &ControllerConfig) -> StabilityReport {
    match controller.law {
        ControlLaw::Baseline { gamma } => baseline_report(lap, gamma),
        ControlLaw::Dsr(gains) => spectral_radius(lap, &gains, controller.dt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::StiffnessChain;

    const DT: f64 = 0.03;

    fn reference() -> PinnedLaplacian {
        PinnedLaplacian::from_chain(&StiffnessChain::reference_experiment()).unwrap()
    }

    fn residual(lambda: f64, alpha: f64, beta: f64, z: Complex64) -> f64 {
        let (p, q) = dsr_coefficients(lambda, alpha, beta, DT);
        (z * z + p * z + q).norm()
    }

    #[test]
    fn gamma_bound() {
        assert!((baseline_gamma_bound(&reference()) - 2.0 / 0.176).abs() < 0.05);
        let one =
            PinnedLaplacian::from_chain(&StiffnessChain::new(vec![], vec![1.0]).unwrap()).unwrap();
        assert_eq!(baseline_gamma_bound(&one), 2.0);
        let two =
            PinnedLaplacian::from_chain(&StiffnessChain::new(vec![], vec![2.0]).unwrap()).unwrap();
        assert_eq!(baseline_gamma_bound(&two), 1.0);
    }

    #[test]
    fn alpha_zero_has_unit_root() {
        let [a, b] = dsr_mode_roots(0.1, 0.0, 5.0, DT);
        let mut re = [a.re, b.re];
        re.sort_by(f64::total_cmp);
        assert!((re[0] - 0.5).abs() < 1e-15);
        assert!((re[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deadbeat_double_root() {
        // βλ = 1 and αβδt λ = 1
        let lambda = 0.2;
        let beta = 5.0;
        let alpha = 1.0 / (beta * DT * lambda);
        let roots = dsr_mode_roots(lambda, alpha, beta, DT);
        assert!(roots.iter().all(|z| z.norm() < 1e-7), "{roots:?}");
    }

    #[test]
    fn vieta_identities_and_residuals() {
        for &(lambda, alpha, beta) in &[
            (0.176, 0.39, 10.92),
            (0.006, 0.39, 10.92),
            (0.05, 1.7, 3.0),
            (0.1, 0.01, 0.5),
        ] {
            let [z1, z2] = dsr_mode_roots(lambda, alpha, beta, DT);
            assert!(((z1 * z2).re - (1.0 - beta * lambda)).abs() < 1e-12);
            assert!(
                ((z1 + z2).re - (2.0 - beta * lambda - alpha * beta * DT * lambda)).abs() < 1e-12
            );
            assert!(residual(lambda, alpha, beta, z1) < 1e-10);
            assert!(residual(lambda, alpha, beta, z2) < 1e-10);
        }
    }

    #[test]
    fn complex_pair_has_root_product_magnitude() {
        // slow mode with a large α: discriminant negative
        let (lambda, alpha, beta) = (0.006, 2.0, 10.92);
        let [z1, z2] = dsr_mode_roots(lambda, alpha, beta, DT);
        assert!(z1.im != 0.0);
        let expected = (1.0 - beta * lambda).sqrt();
        assert!((z1.norm() - expected).abs() < 1e-12);
        assert!((z2.norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn jury_cases() {
        assert!(jury_stable(0.176, 0.39, 10.92, DT));
        let lambda = 0.176;
        let alpha = 0.7;
        let boundary = 4.0 / (lambda * (alpha * DT + 2.0));
        assert!(!jury_stable(lambda, alpha, boundary, DT));
        assert!(!jury_stable(lambda, 1.0, 2.5 / lambda, DT));
        let [z1, z2] = dsr_mode_roots(lambda, 1.0, 2.5 / lambda, DT);
        assert!(z1.norm().max(z2.norm()) > 1.0);
    }

    #[test]
    fn closed_form_bound_cases() {
        let lap = reference();
        let bound = dsr_beta_bound(&lap, 0.39, DT);
        assert!((bound - 4.0 / (0.176 * 2.0117)).abs() < 0.05);
        assert!(dsr_bound_stable(&lap, 0.39, 10.92, DT));
        assert!(lap
            .eigenvalues()
            .iter()
            .all(|&l| jury_stable(l, 0.39, 10.92, DT)));
        assert!(!dsr_bound_stable(&lap, 0.0, 10.92, DT));
        assert!(!dsr_bound_stable(&lap, -0.1, 10.92, DT));
        assert!(!dsr_bound_stable(&lap, 0.39, 0.0, DT));
    }

    #[test]
    fn reference_gains_are_stable() {
        let r = spectral_radius(&reference(), &DsrGains::new(0.39, 10.92), DT);
        assert!(r.stable && !r.marginal);
        assert!(r.spectral_radius < 1.0);
        assert_eq!(r.modes.len(), 4);
        let max = r
            .modes
            .iter()
            .flat_map(|m| m.magnitudes.iter())
            .fold(0.0_f64, |a, &b| a.max(b));
        assert_eq!(max, r.spectral_radius);
        assert_eq!(r.modes[r.binding_mode].radius(), r.spectral_radius);
    }

    #[test]
    fn bound_violation_gives_radius_at_least_one() {
        let lap = reference();
        for &(alpha, beta) in &[(0.39, 11.4), (1.0, 12.0), (0.5, 20.0), (2.0, 30.0)] {
            assert!(!dsr_bound_stable(&lap, alpha, beta, DT));
            assert!(spectral_radius(&lap, &DsrGains::new(alpha, beta), DT).spectral_radius >= 1.0);
        }
    }

    #[test]
    fn deadbeat_mode_contributes_zero() {
        let lap =
            PinnedLaplacian::from_chain(&StiffnessChain::new(vec![], vec![0.2]).unwrap()).unwrap();
        let beta = 5.0;
        let alpha = 1.0 / (beta * DT * 0.2);
        let r = spectral_radius(&lap, &DsrGains::new(alpha, beta), DT);
        assert!(r.spectral_radius < 1e-7);
    }

    #[test]
    fn delayed_roots_reduce_to_quadratic_and_solve_polynomial() {
        let gains = DsrGains {
            alpha: 0.39,
            beta: 10.92,
            delay: 3,
        };
        for &lambda in &[0.006, 0.05, 0.176] {
            let roots = dsr_mode_roots_delayed(lambda, &gains, DT);
            assert_eq!(roots.len(), 4);
            let g = (1.0 - gains.beta * lambda) / 3.0;
            let lead = -(1.0 - gains.alpha * gains.beta * DT * lambda + g);
            for z in roots {
                let value = z.powu(4) + lead * z.powu(3) + g;
                assert!(value.norm() < 1e-12, "{value}");
            }
        }
        let one = DsrGains::new(0.39, 10.92);
        assert_eq!(
            dsr_mode_roots_delayed(0.05, &one, DT),
            dsr_mode_roots(0.05, 0.39, 10.92, DT).to_vec()
        );
    }

    #[test]
    fn baseline_modes() {
        let lap = reference();
        let r = baseline_report(&lap, 1.93);
        assert!(r.stable);
        assert_eq!(r.binding_mode, 0);
        assert!((r.spectral_radius - (1.0 - 1.93 * lap.lambda_min())).abs() < 1e-15);
        assert!(!baseline_report(&lap, baseline_gamma_bound(&lap) * 1.01).stable);
    }
}

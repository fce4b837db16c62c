//! Lattice sums for theta functions with real characteristics and for
//! second-order theta functions, with derivatives in `z` and in the
//! independent coordinates `tau_ij` (`i >= j`).
//!
//! Every sum runs over an ∞-norm box around the centre of the Gaussian
//! envelope. The box radius comes from a shell-by-shell tail bound
//! ([`truncation_radius`]), so the absolute truncation error is at most the
//! requested tolerance; if the required box is larger than the policy cap the
//! evaluation fails instead of truncating silently.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricMatrix, C64};
use crate::siegel::{RealCharacteristic, SiegelPoint};

/// Largest `|Im z_k|` accepted by the evaluators.
pub const MAX_IM_Z: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    /// Absolute bound on the discarded tail.
    pub tol: f64,
    /// Largest admissible ∞-norm radius of the lattice box.
    pub max_radius: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_radius: 40,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tol: f64, max_radius: u32) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) || max_radius < 1 {
            return Err(Error::InvalidInput(format!(
                "truncation policy needs tol > 0 and max_radius >= 1 (got {tol}, {max_radius})"
            )));
        }
        Ok(Self { tol, max_radius })
    }

    pub fn with_tol(tol: f64) -> Result<Self> {
        Self::new(tol, Self::default().max_radius)
    }
}

/// Value and derivatives of a second-order theta function at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaJet {
    pub value: C64,
    pub grad_z: Vec<C64>,
    pub hess_z: SymmetricMatrix,
    /// `d/d tau_ij` for the independent coordinates `i >= j`.
    pub dtau: SymmetricMatrix,
    /// Box radius used (0 for finite-difference jets).
    pub radius: u32,
}

/// Bound on the contribution of the shell `||k||_inf = r`:
/// `2g (2r+1)^(g-1) * weight(r) * exp(-pi lambda (r - offset)^2)`.
fn shell_bound(lambda: f64, offset: f64, g: usize, r: f64, weight: &Weight) -> f64 {
    let count = 2.0 * g as f64 * (2.0 * r + 1.0).powi(g as i32 - 1);
    let d = (r - offset).max(0.0);
    let poly = if weight.degree == 0 {
        1.0
    } else {
        (weight.scale * ((g as f64).sqrt() * r + weight.shift)).powi(weight.degree as i32)
    };
    count * poly * (-PI * lambda * d * d).exp()
}

/// Polynomial growth of the summand: `(scale * (sqrt(g) r + shift))^degree`.
#[derive(Clone, Copy, Debug)]
struct Weight {
    degree: u32,
    scale: f64,
    shift: f64,
}

const NO_WEIGHT: Weight = Weight {
    degree: 0,
    scale: 1.0,
    shift: 0.0,
};

/// Upper bound for the sum over all shells beyond `radius`.
fn tail_bound(lambda: f64, offset: f64, g: usize, radius: u32, weight: &Weight) -> f64 {
    let r = f64::from(radius) + 1.0;
    if r <= offset {
        return f64::INFINITY;
    }
    let first = shell_bound(lambda, offset, g, r, weight);
    // Successive shell ratios decrease once r exceeds the offset, so the
    // first ratio bounds a geometric majorant.
    let ratio = shell_bound(lambda, offset, g, r + 1.0, weight) / first;
    if !(ratio < 1.0) || !first.is_finite() {
        return f64::INFINITY;
    }
    first / (1.0 - ratio)
}

fn radius_for(lambda: f64, offset: f64, tol: f64, g: usize, max_radius: u32, weight: &Weight) -> Result<u32> {
    if !(lambda > 0.0) {
        return Err(Error::NotPositiveDefinite(lambda));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    const SEARCH_CAP: u64 = 1_000_000;
    let mut r = offset.max(0.0).floor() as u64;
    while r <= SEARCH_CAP {
        if tail_bound(lambda, offset, g, r as u32, weight) <= tol {
            break;
        }
        r += 1;
    }
    if r > u64::from(max_radius) {
        return Err(Error::TruncationOverflow {
            required: r,
            max_radius,
        });
    }
    Ok(r as u32)
}

/// Smallest box radius `R` whose Gaussian tail bound
/// `sum_{r > R} 2g (2r+1)^(g-1) exp(-pi lambda_min (r - ||c1||)^2)` is below `tol`.
/// Non-decreasing as `tol` or `lambda_min` shrink.
pub fn truncation_radius(im_tau_min_eig: f64, c1_norm: f64, tol: f64, g: usize, max_radius: u32) -> Result<u32> {
    radius_for(im_tau_min_eig, c1_norm, tol, g, max_radius, &NO_WEIGHT)
}

/// Like [`truncation_radius`] for a summand that also carries a polynomial
/// weight bounded by `(4 pi (sqrt(g) r + offset + 1))^degree` on shell `r`.
pub fn truncation_radius_weighted(
    lambda_min: f64,
    offset: f64,
    tol: f64,
    g: usize,
    max_radius: u32,
    degree: u32,
) -> Result<u32> {
    let weight = Weight {
        degree,
        scale: 4.0 * PI,
        shift: offset + 1.0,
    };
    radius_for(lambda_min, offset, tol, g, max_radius, &weight)
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl Compensated {
    fn add(&mut self, z: C64) {
        fn step(sum: &mut f64, comp: &mut f64, x: f64) {
            let t = *sum + x;
            if sum.abs() >= x.abs() {
                *comp += (*sum - t) + x;
            } else {
                *comp += (x - t) + *sum;
            }
            *sum = t;
        }
        step(&mut self.re, &mut self.re_c, z.re);
        step(&mut self.im, &mut self.im_c, z.im);
    }

    fn value(&self) -> C64 {
        C64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

type Shells = Arc<Vec<i32>>;

/// Lattice points of the box `[-R, R]^g`, flattened, ordered by ∞-norm shell.
fn shell_points(g: usize, radius: u32) -> Shells {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Shells>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(points) = cache.lock().unwrap().get(&(g, radius)) {
        return points.clone();
    }
    let r = radius as i32;
    let side = (2 * r + 1) as usize;
    let total = side.pow(g as u32);
    let mut pts: Vec<(i32, Vec<i32>)> = (0..total)
        .map(|mut idx| {
            let mut k = vec![0i32; g];
            for slot in k.iter_mut().rev() {
                *slot = (idx % side) as i32 - r;
                idx /= side;
            }
            (k.iter().map(|x| x.abs()).max().unwrap_or(0), k)
        })
        .collect();
    pts.sort_by_key(|(shell, _)| *shell);
    let flat: Shells = Arc::new(pts.into_iter().flat_map(|(_, k)| k).collect());
    cache.lock().unwrap().insert((g, radius), flat.clone());
    flat
}

/// The sum `sum_m exp(pi i n^t Q n + 2 pi i n^t v)`, `n = m + shift`, set up
/// over a certified box.
struct LatticeSum {
    g: usize,
    q: SymmetricMatrix,
    shift: Vec<f64>,
    v: Vec<C64>,
    centre: Vec<f64>,
    radius: u32,
}

impl LatticeSum {
    fn new(
        q: SymmetricMatrix,
        shift: &[f64],
        v: Vec<C64>,
        tol: f64,
        max_radius: u32,
        weight_degree: u32,
    ) -> Result<Self> {
        let g = q.dim();
        let im_q = q.to_matrix().im();
        let lambda = linalg::min_eigenvalue_posdef(&im_q)?;
        if lambda <= 0.0 {
            return Err(Error::NotPositiveDefinite(lambda));
        }
        // Completing the square: |term| = exp(pi v'^t Y^-1 v') exp(-pi (n+s)^t Y (n+s))
        // with Y = Im Q, v' = Im v, s = Y^-1 v'.
        let im_v: Vec<C64> = v.iter().map(|z| C64::new(z.im, 0.0)).collect();
        let s: Vec<f64> = linalg::inverse(&im_q)?.mul_vec(&im_v)?.iter().map(|z| z.re).collect();
        let prefactor_exp: f64 = PI * im_v.iter().zip(&s).map(|(a, b)| a.re * b).sum::<f64>();
        let centre: Vec<f64> = (0..g).map(|i| (-shift[i] - s[i]).round()).collect();
        let offset = (0..g)
            .map(|i| (-shift[i] - s[i] - centre[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        let s_norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let weight = if weight_degree == 0 {
            NO_WEIGHT
        } else {
            Weight {
                degree: weight_degree,
                scale: 4.0 * PI,
                shift: offset + s_norm + 1.0,
            }
        };
        let tol_eff = tol * (-prefactor_exp).exp();
        let radius = radius_for(lambda, offset, tol_eff, g, max_radius, &weight)?;
        Ok(Self {
            g,
            q,
            shift: shift.to_vec(),
            v,
            centre,
            radius,
        })
    }

    /// Calls `visit(n, term)` for every lattice point, shell by shell.
    fn for_each(&self, mut visit: impl FnMut(&[f64], C64)) {
        let g = self.g;
        let pts = shell_points(g, self.radius);
        let mut n = vec![0.0; g];
        let i_pi = C64::new(0.0, PI);
        for k in pts.chunks_exact(g) {
            for i in 0..g {
                n[i] = f64::from(k[i]) + self.centre[i] + self.shift[i];
            }
            let mut quad = C64::new(0.0, 0.0);
            let mut lin = C64::new(0.0, 0.0);
            for i in 0..g {
                quad += self.q.get(i, i) * (n[i] * n[i]);
                for j in 0..i {
                    quad += self.q.get(i, j) * (2.0 * n[i] * n[j]);
                }
                lin += self.v[i] * n[i];
            }
            let term = (i_pi * (quad + lin * 2.0)).exp();
            visit(&n, term);
        }
    }

    fn value(&self) -> C64 {
        let mut acc = Compensated::default();
        self.for_each(|_, t| acc.add(t));
        acc.value()
    }
}

fn check_z(z: &[C64], g: usize) -> Result<()> {
    if z.len() != g {
        return Err(Error::Dimension(format!("z has length {}, genus is {g}", z.len())));
    }
    let worst = z.iter().map(|w| w.im.abs()).fold(0.0, f64::max);
    if !(worst <= MAX_IM_Z) {
        return Err(Error::ArgumentOutOfRange(worst));
    }
    Ok(())
}

fn char_sum(ch: &RealCharacteristic, z: &[C64], tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<LatticeSum> {
    let g = tau.genus();
    if ch.genus() != g {
        return Err(Error::GenusMismatch {
            expected: g,
            found: ch.genus(),
        });
    }
    check_z(z, g)?;
    let v = z.iter().zip(&ch.c2).map(|(zi, c)| zi + c).collect();
    LatticeSum::new(tau.tau().clone(), &ch.c1, v, policy.tol, policy.max_radius, 0)
}

/// `theta[c1, c2](z; tau) = sum_m exp(pi i (m+c1)^t tau (m+c1) + 2 pi i (m+c1)^t (z+c2))`.
pub fn theta_char_eval(
    ch: &RealCharacteristic,
    z: &[C64],
    tau: &SiegelPoint,
    policy: &TruncationPolicy,
) -> Result<C64> {
    Ok(char_sum(ch, z, tau, policy)?.value())
}

/// Box radius [`theta_char_eval`] uses for these arguments.
pub fn theta_char_radius(
    ch: &RealCharacteristic,
    z: &[C64],
    tau: &SiegelPoint,
    policy: &TruncationPolicy,
) -> Result<u32> {
    Ok(char_sum(ch, z, tau, policy)?.radius)
}

fn second_order_sum(
    u: &[f64],
    z: &[C64],
    tau: &SiegelPoint,
    policy: &TruncationPolicy,
    degree: u32,
) -> Result<LatticeSum> {
    let g = tau.genus();
    if u.len() != g {
        return Err(Error::GenusMismatch {
            expected: g,
            found: u.len(),
        });
    }
    check_z(z, g)?;
    let q = tau.tau().map(|t| t * 2.0);
    let v = z.iter().map(|zi| zi * 2.0).collect();
    LatticeSum::new(q, u, v, policy.tol, policy.max_radius, degree)
}

/// `theta_u(z; tau) = sum_m exp(2 pi i (m+u)^t tau (m+u) + 4 pi i (m+u)^t z)`.
pub fn theta_second_order(u: &[f64], z: &[C64], tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<C64> {
    Ok(second_order_sum(u, z, tau, policy, 0)?.value())
}

pub fn theta_second_order_radius(u: &[f64], z: &[C64], tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<u32> {
    Ok(second_order_sum(u, z, tau, policy, 0)?.radius)
}

/// Second-order theta with its `z`-gradient, `z`-Hessian and `tau`-derivatives.
///
/// Term weights, with `n = m + u`: `4 pi i n_k` for the gradient,
/// `-16 pi^2 n_i n_j` for the Hessian and `2 pi i (2 - delta_ij) n_i n_j` for
/// `d/d tau_ij` (an off-diagonal coordinate appears twice in the quadratic
/// form). With these, `4 pi i (1 + delta_ij) dtau_ij = hess_ij` term by term.
pub fn theta_second_order_jet(u: &[f64], z: &[C64], tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<ThetaJet> {
    let g = tau.genus();
    let sum = second_order_sum(u, z, tau, policy, 2)?;
    let n_pairs = g * (g + 1) / 2;
    let mut value = Compensated::default();
    let mut grad = vec![Compensated::default(); g];
    let mut hess = vec![Compensated::default(); n_pairs];
    let mut dtau = vec![Compensated::default(); n_pairs];
    // Weights are applied per term so the Hessian and the tau-derivatives are
    // accumulated independently.
    let grad_w = C64::new(0.0, 4.0 * PI);
    let hess_w = -16.0 * PI * PI;
    let dtau_diag_w = C64::new(0.0, 2.0 * PI);
    let dtau_off_w = C64::new(0.0, 4.0 * PI);
    sum.for_each(|n, t| {
        value.add(t);
        let mut k = 0;
        for i in 0..g {
            grad[i].add(t * grad_w * n[i]);
            for j in 0..=i {
                let nn = n[i] * n[j];
                hess[k].add(t * (hess_w * nn));
                dtau[k].add(t * (if i == j { dtau_diag_w } else { dtau_off_w }) * nn);
                k += 1;
            }
        }
    });
    Ok(ThetaJet {
        value: value.value(),
        grad_z: grad.iter().map(Compensated::value).collect(),
        hess_z: SymmetricMatrix::from_lower(g, hess.iter().map(Compensated::value).collect())?,
        dtau: SymmetricMatrix::from_lower(g, dtau.iter().map(Compensated::value).collect())?,
        radius: sum.radius,
    })
}

/// Shifts `tau` by `delta` in the independent coordinate `(i, j)`, which moves
/// both `tau_ij` and `tau_ji`.
pub fn perturb_coordinate(tau: &SiegelPoint, i: usize, j: usize, delta: C64) -> Result<SiegelPoint> {
    let mut t = tau.tau().clone();
    t.set(i, j, t.get(i, j) + delta);
    SiegelPoint::new(t)
}

/// Central-difference jet of `theta_u` at `(z, tau)`; a test oracle for
/// [`theta_second_order_jet`]. First derivatives are Wirtinger combinations of
/// the real and imaginary directions, the `z`-Hessian uses real directions.
pub fn finite_difference_jet(
    u: &[f64],
    z: &[C64],
    tau: &SiegelPoint,
    h: f64,
    policy: &TruncationPolicy,
) -> Result<ThetaJet> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step {h} outside [1e-6, 1e-3]"
        )));
    }
    let g = tau.genus();
    let f = |zz: &[C64], t: &SiegelPoint| theta_second_order(u, zz, t, policy);
    let shifted = |k: usize, d: C64| {
        let mut out = z.to_vec();
        out[k] += d;
        out
    };
    let value = f(z, tau)?;
    let hr = C64::new(h, 0.0);
    let hi = C64::new(0.0, h);

    let mut grad_z = Vec::with_capacity(g);
    for k in 0..g {
        let dx = (f(&shifted(k, hr), tau)? - f(&shifted(k, -hr), tau)?) / (2.0 * h);
        let dy = (f(&shifted(k, hi), tau)? - f(&shifted(k, -hi), tau)?) / (2.0 * h);
        grad_z.push((dx - C64::new(0.0, 1.0) * dy) * 0.5);
    }

    let mut hess = SymmetricMatrix::zeros(g);
    for i in 0..g {
        for j in 0..=i {
            let v = if i == j {
                (f(&shifted(i, hr), tau)? - value * 2.0 + f(&shifted(i, -hr), tau)?) / (h * h)
            } else {
                let pp = f(
                    &{
                        let mut w = shifted(i, hr);
                        w[j] += hr;
                        w
                    },
                    tau,
                )?;
                let pm = f(
                    &{
                        let mut w = shifted(i, hr);
                        w[j] -= hr;
                        w
                    },
                    tau,
                )?;
                let mp = f(
                    &{
                        let mut w = shifted(i, -hr);
                        w[j] += hr;
                        w
                    },
                    tau,
                )?;
                let mm = f(
                    &{
                        let mut w = shifted(i, -hr);
                        w[j] -= hr;
                        w
                    },
                    tau,
                )?;
                (pp - pm - mp + mm) / (4.0 * h * h)
            };
            hess.set(i, j, v);
        }
    }

    let mut dtau = SymmetricMatrix::zeros(g);
    for i in 0..g {
        for j in 0..=i {
            let dx =
                (f(z, &perturb_coordinate(tau, i, j, hr)?)? - f(z, &perturb_coordinate(tau, i, j, -hr)?)?) / (2.0 * h);
            let dy =
                (f(z, &perturb_coordinate(tau, i, j, hi)?)? - f(z, &perturb_coordinate(tau, i, j, -hi)?)?) / (2.0 * h);
            dtau.set(i, j, (dx - C64::new(0.0, 1.0) * dy) * 0.5);
        }
    }

    Ok(ThetaJet {
        value,
        grad_z,
        hess_z: hess,
        dtau,
        radius: 0,
    })
}

/// Heat-equation residual `max_ij |4 pi i (1 + delta_ij) dtau_ij - hess_ij| / (1 + |hess_ij|)`.
pub fn heat_residual(jet: &ThetaJet) -> f64 {
    let g = jet.grad_z.len();
    let mut worst: f64 = 0.0;
    for i in 0..g {
        for j in 0..=i {
            let factor = if i == j { 2.0 } else { 1.0 };
            let lhs = C64::new(0.0, 4.0 * PI * factor) * jet.dtau.get(i, j);
            let rhs = jet.hess_z.get(i, j);
            worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siegel::random_siegel_point;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn zero(g: usize) -> Vec<C64> {
        vec![c(0.0, 0.0); g]
    }

    /// Brute-force genus-1 characteristic theta, |m| <= 10.
    fn oracle_char_g1(c1: f64, c2: f64, z: C64, tau: C64) -> C64 {
        (-10..=10)
            .map(|m| {
                let n = m as f64 + c1;
                (C64::i() * PI * (tau * n * n + (z + c2) * n * 2.0)).exp()
            })
            .sum()
    }

    #[test]
    fn truncation_radius_examples() {
        assert!(truncation_radius(1.0, 0.0, 1e-12, 1, 40).unwrap() <= 4);
        let mut prev = 0;
        for e in 1..=15 {
            let r = truncation_radius(1.0, 0.3, 10f64.powi(-e), 2, 40).unwrap();
            assert!(r >= prev);
            prev = r;
        }
        for g in 1..=4 {
            let small = truncation_radius(0.5, 0.0, 1e-12, g, 40).unwrap();
            let large = truncation_radius(2.0, 0.0, 1e-12, g, 40).unwrap();
            assert!(small >= large);
        }
    }

    #[test]
    fn truncation_overflow_is_explicit() {
        let err = truncation_radius(1e-4, 0.0, 1e-12, 3, 40).unwrap_err();
        assert!(matches!(err, Error::TruncationOverflow { max_radius: 40, .. }));
    }

    #[test]
    fn constant_a_at_i() {
        let tau = SiegelPoint::genus1(c(0.0, 1.0)).unwrap();
        let v = theta_char_eval(
            &RealCharacteristic::zero(1),
            &zero(1),
            &tau,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let oracle = oracle_char_g1(0.0, 0.0, c(0.0, 0.0), c(0.0, 1.0));
        assert!((v - oracle).norm() < 1e-14);
        assert!((v.re - 1.08643481).abs() < 1e-8 && v.im.abs() < 1e-15);
    }

    #[test]
    fn characteristic_theta_matches_brute_force() {
        let tau = c(0.31, 0.87);
        let z = c(0.2, -0.15);
        let got = theta_char_eval(
            &RealCharacteristic::new(vec![0.37], vec![-0.61]).unwrap(),
            &[z],
            &SiegelPoint::genus1(tau).unwrap(),
            &TruncationPolicy::default(),
        )
        .unwrap();
        let oracle = oracle_char_g1(0.37, -0.61, z, tau);
        assert!((got - oracle).norm() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn odd_characteristic_vanishes_at_zero() {
        for g in 1..=3 {
            let tau = random_siegel_point(g, 3).unwrap();
            let mut m = vec![0i64; g];
            m[0] = 1;
            let ch = RealCharacteristic::half_integer(&m, &m);
            let v = theta_char_eval(&ch, &zero(g), &tau, &TruncationPolicy::default()).unwrap();
            assert!(v.norm() < 1e-12, "g={g}: {v}");
        }
    }

    #[test]
    fn even_theta_is_even_in_z() {
        let tau = random_siegel_point(2, 8).unwrap();
        let z = vec![c(0.13, 0.05), c(-0.4, 0.2)];
        let mz: Vec<C64> = z.iter().map(|w| -w).collect();
        let p = TruncationPolicy::default();
        let a = theta_char_eval(&RealCharacteristic::zero(2), &z, &tau, &p).unwrap();
        let b = theta_char_eval(&RealCharacteristic::zero(2), &mz, &tau, &p).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn second_order_values_at_i() {
        let tau = SiegelPoint::genus1(c(0.0, 1.0)).unwrap();
        let p = TruncationPolicy::default();
        let t0 = theta_second_order(&[0.0], &zero(1), &tau, &p).unwrap();
        let th = theta_second_order(&[0.5], &zero(1), &tau, &p).unwrap();
        let oracle0 = 1.0 + 2.0 * (-2.0 * PI).exp() + 2.0 * (-8.0 * PI).exp();
        let oracle_h: f64 = 2.0
            * (0..10)
                .map(|m| (-2.0 * PI * (m as f64 + 0.5).powi(2)).exp())
                .sum::<f64>();
        assert!((t0.re - oracle0).abs() < 1e-12 && (t0.re - 1.0037349).abs() < 1e-6);
        assert!((th.re - oracle_h).abs() < 1e-12 && (th.re - 0.4157606).abs() < 1e-6);
        assert!((t0.norm_sqr() + th.norm_sqr() - 1.1803406).abs() < 1e-6);
    }

    #[test]
    fn representative_independence() {
        let tau = random_siegel_point(2, 12).unwrap();
        let p = TruncationPolicy::default();
        let z = vec![c(0.1, 0.02), c(0.0, -0.03)];
        let a = theta_second_order(&[0.5, 0.0], &z, &tau, &p).unwrap();
        let b = theta_second_order(&[1.5, -1.0], &z, &tau, &p).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn large_im_z_rejected() {
        let tau = SiegelPoint::genus1(c(0.0, 1.0)).unwrap();
        let err = theta_second_order(&[0.0], &[c(0.0, 11.0)], &tau, &TruncationPolicy::default());
        assert!(matches!(err, Err(Error::ArgumentOutOfRange(_))));
    }

    #[test]
    fn jet_gradient_vanishes_at_origin() {
        let tau = SiegelPoint::genus1(c(0.0, 1.0)).unwrap();
        let p = TruncationPolicy::default();
        let jet = theta_second_order_jet(&[0.0], &zero(1), &tau, &p).unwrap();
        assert!(jet.grad_z[0].norm() < 1e-14);
        let fd = finite_difference_jet(&[0.0], &zero(1), &tau, 1e-4, &p).unwrap();
        assert!(fd.grad_z[0].norm() < 1e-9);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = TruncationPolicy::default();
        for g in 1..=3 {
            let tau = random_siegel_point(g, 40 + g as u64).unwrap();
            let z: Vec<C64> = (0..g).map(|k| c(0.05 * k as f64, -0.03)).collect();
            for bits in 0..(1u32 << g) {
                let u: Vec<f64> = (0..g).map(|k| f64::from((bits >> (g - 1 - k)) & 1) / 2.0).collect();
                let jet = theta_second_order_jet(&u, &z, &tau, &p).unwrap();
                let fd = finite_difference_jet(&u, &z, &tau, 1e-4, &p).unwrap();
                let scale = |a: C64, b: C64| (a - b).norm() / b.norm().max(1.0);
                assert!(scale(jet.value, fd.value) < 1e-12);
                for k in 0..g {
                    assert!(scale(jet.grad_z[k], fd.grad_z[k]) < 1e-6, "grad g={g}");
                }
                for i in 0..g {
                    for j in 0..=i {
                        assert!(scale(jet.hess_z.get(i, j), fd.hess_z.get(i, j)) < 1e-6, "hess g={g}");
                        assert!(scale(jet.dtau.get(i, j), fd.dtau.get(i, j)) < 1e-6, "dtau g={g}");
                    }
                }
            }
        }
    }

    #[test]
    fn heat_equation_holds_termwise() {
        let p = TruncationPolicy::default();
        for g in 1..=3 {
            let tau = random_siegel_point(g, 70 + g as u64).unwrap();
            let jet = theta_second_order_jet(&vec![0.5; g], &zero(g), &tau, &p).unwrap();
            assert!(heat_residual(&jet) < 1e-9);
        }
    }

    #[test]
    fn two_tolerances_agree() {
        let tau = random_siegel_point(3, 5).unwrap();
        let loose = TruncationPolicy::with_tol(1e-10).unwrap();
        let tight = TruncationPolicy::with_tol(1e-13).unwrap();
        let u = [0.5, 0.0, 0.5];
        let a = theta_second_order(&u, &zero(3), &tau, &loose).unwrap();
        let b = theta_second_order(&u, &zero(3), &tau, &tight).unwrap();
        assert!((a - b).norm() < 2e-10);
        assert!(
            theta_second_order_radius(&u, &zero(3), &tau, &tight).unwrap()
                >= theta_second_order_radius(&u, &zero(3), &tau, &loose).unwrap()
        );
    }
}

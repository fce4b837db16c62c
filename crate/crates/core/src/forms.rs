//! The two (1,1)-forms on `H_g` as Hermitian coefficient matrices, the
//! coefficient matrices of the two quadratic-differential structures, and the
//! genus-one comparison.
//!
//! Convention: a form is `omega = (i/2) sum_{I,J} H_IJ dtau_I ^ dconj(tau_J)`
//! over the independent coordinates `I = (i, j)`, `i >= j`. The Siegel
//! four-index sum is folded onto this basis by grouping `dtau_ij = dtau_ji`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianMatrix, SymmetricMatrix, C64};
use crate::nullwert;
use crate::siegel::{self, SiegelPoint, SymplecticMatrix};
use crate::theta::{self, ThetaJet, TruncationPolicy};

/// Independent coordinates `(i, j)`, `i >= j`, in lexicographic order
/// `(0,0), (1,0), (1,1), (2,0), ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexPairBasis {
    g: usize,
    pairs: Vec<(usize, usize)>,
}

impl IndexPairBasis {
    pub fn new(g: usize) -> Self {
        let pairs = (0..g).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
        Self { g, pairs }
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn position(&self, i: usize, j: usize) -> usize {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        hi * (hi + 1) / 2 + lo
    }

    /// `{(i,j), (j,i)}` off the diagonal, `{(i,i)}` on it.
    fn representatives(i: usize, j: usize) -> Vec<(usize, usize)> {
        if i == j {
            vec![(i, i)]
        } else {
            vec![(i, j), (j, i)]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianFormOnSiegel {
    pub basis: IndexPairBasis,
    pub h: HermitianMatrix,
}

impl HermitianFormOnSiegel {
    pub fn entry(&self, a: usize, b: usize) -> C64 {
        self.h.get(a, b)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.h)
    }

    /// `max |A - B| / max |B|`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let diff = self.h.as_matrix().max_abs_diff(other.h.as_matrix());
        diff / other.h.as_matrix().max_abs().max(f64::MIN_POSITIVE)
    }
}

/// The Siegel metric: `H_IJ = sum_{(i,j) in rep I} sum_{(u,v) in rep J} Y^iu Y^jv`
/// with `Y = (Im tau)^-1`.
pub fn siegel_form(tau: &SiegelPoint) -> HermitianFormOnSiegel {
    let g = tau.genus();
    let y = tau.im_inverse();
    let basis = IndexPairBasis::new(g);
    let pairs = basis.pairs().to_vec();
    let h = HermitianMatrix::from_lower_fn(basis.len(), |a, b| {
        let (i0, j0) = pairs[a];
        let (u0, v0) = pairs[b];
        let mut acc = 0.0;
        for (i, j) in IndexPairBasis::representatives(i0, j0) {
            for (u, v) in IndexPairBasis::representatives(u0, v0) {
                acc += y[i * g + u] * y[j * g + v];
            }
        }
        C64::new(acc, 0.0)
    });
    HermitianFormOnSiegel { basis, h }
}

fn nullwert_jets(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<Vec<ThetaJet>> {
    let g = tau.genus();
    let zero = vec![C64::new(0.0, 0.0); g];
    nullwert::enumerate_u(g)?
        .iter()
        .map(|u| theta::theta_second_order_jet(&u.half_vector(), &zero, tau, policy))
        .collect()
}

/// `w(tau) = sum_U |theta_u(0; tau)|^2`.
pub fn w_value(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    Ok(nullwert::theta_nullwert(tau, policy)?
        .iter()
        .map(|z| z.norm_sqr())
        .sum())
}

/// Fubini-Study pullback along the nullwert map, `H_IJ = d_I dbar_J log w`:
/// `(w m_IJ - d_I conj(d_J)) / w^2` with `d_I = sum_u conj(theta_u) dtheta_u/dtau_I`
/// and `m_IJ = sum_u dtheta_u/dtau_I conj(dtheta_u/dtau_J)`.
pub fn fs_pullback_theta(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<HermitianFormOnSiegel> {
    let basis = IndexPairBasis::new(tau.genus());
    let jets = nullwert_jets(tau, policy)?;
    let pairs = basis.pairs().to_vec();
    let w: f64 = jets.iter().map(|j| j.value.norm_sqr()).sum();
    let d: Vec<C64> = pairs
        .iter()
        .map(|&(i, j)| jets.iter().map(|jet| jet.value.conj() * jet.dtau.get(i, j)).sum())
        .collect();
    let h = HermitianMatrix::from_lower_fn(basis.len(), |a, b| {
        let (i, j) = pairs[a];
        let (u, v) = pairs[b];
        let m: C64 = jets
            .iter()
            .map(|jet| jet.dtau.get(i, j) * jet.dtau.get(u, v).conj())
            .sum();
        (m * w - d[a] * d[b].conj()) / (w * w)
    });
    Ok(HermitianFormOnSiegel { basis, h })
}

/// Finite-difference oracle for [`fs_pullback_theta`].
#[derive(Clone, Debug)]
pub struct FdForm {
    pub form: HermitianFormOnSiegel,
    /// `max |H_IJ - conj(H_JI)|` of the raw stencil before symmetrization.
    pub raw_hermitian_residual: f64,
}

fn log_w_hessian(tau: &SiegelPoint, h: f64, policy: &TruncationPolicy) -> Result<Vec<f64>> {
    let basis = IndexPairBasis::new(tau.genus());
    let pairs = basis.pairs().to_vec();
    let nvar = 2 * pairs.len();
    let dir = |k: usize| -> (usize, usize, C64) {
        let (i, j) = pairs[k / 2];
        let step = if k.is_multiple_of(2) {
            C64::new(h, 0.0)
        } else {
            C64::new(0.0, h)
        };
        (i, j, step)
    };
    let f = |moves: &[(usize, f64)]| -> Result<f64> {
        let mut t = tau.tau().clone();
        for &(k, sign) in moves {
            let (i, j, step) = dir(k);
            t.set(i, j, t.get(i, j) + step * sign);
        }
        Ok(w_value(&SiegelPoint::new(t)?, policy)?.ln())
    };
    let centre = f(&[])?;
    let mut hess = vec![0.0; nvar * nvar];
    for a in 0..nvar {
        for b in a..nvar {
            let v = if a == b {
                (f(&[(a, 1.0)])? - 2.0 * centre + f(&[(a, -1.0)])?) / (h * h)
            } else {
                (f(&[(a, 1.0), (b, 1.0)])? - f(&[(a, 1.0), (b, -1.0)])? - f(&[(a, -1.0), (b, 1.0)])?
                    + f(&[(a, -1.0), (b, -1.0)])?)
                    / (4.0 * h * h)
            };
            hess[a * nvar + b] = v;
            hess[b * nvar + a] = v;
        }
    }
    Ok(hess)
}

/// Central Wirtinger second differences of `log w`, Richardson-extrapolated
/// from steps `h` and `h/2`.
pub fn fs_pullback_fd(tau: &SiegelPoint, h: f64, policy: &TruncationPolicy) -> Result<FdForm> {
    if !(1e-4..=1e-2).contains(&h) {
        return Err(Error::InvalidInput(format!("stencil step {h} outside [1e-4, 1e-2]")));
    }
    let basis = IndexPairBasis::new(tau.genus());
    let n = basis.len();
    let coarse = log_w_hessian(tau, h, policy)?;
    let fine = log_w_hessian(tau, h / 2.0, policy)?;
    let nvar = 2 * n;
    let hess: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    let at = |a: usize, b: usize| hess[a * nvar + b];
    // d_I dbar_J = (1/4)(dx_I dx_J + dy_I dy_J + i (dx_I dy_J - dy_I dx_J))
    let raw = ComplexMatrix::from_fn(n, n, |p, q| {
        let (xp, yp, xq, yq) = (2 * p, 2 * p + 1, 2 * q, 2 * q + 1);
        C64::new(at(xp, xq) + at(yp, yq), at(xp, yq) - at(yp, xq)) * 0.25
    });
    let raw_hermitian_residual = raw.max_abs_diff(&raw.conj_transpose());
    Ok(FdForm {
        form: HermitianFormOnSiegel {
            basis,
            h: HermitianMatrix::symmetrize(&raw)?,
        },
        raw_hermitian_residual,
    })
}

/// `c_ij = (1 / 2w) sum_u conj(theta_u(0)) d^2 theta_u / dz_i dz_j (0)`.
pub fn sigma_coefficients(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<SymmetricMatrix> {
    let jets = nullwert_jets(tau, policy)?;
    let w: f64 = jets.iter().map(|j| j.value.norm_sqr()).sum();
    Ok(SymmetricMatrix::from_lower_fn(tau.genus(), |i, j| {
        jets.iter()
            .map(|jet| jet.value.conj() * jet.hess_z.get(i, j))
            .sum::<C64>()
            / (2.0 * w)
    }))
}

/// The same coefficients through the heat equation:
/// `(1 / 2w) sum_u conj(theta_u) 4 pi i (1 + delta_ij) dtheta_u / dtau_ij`.
pub fn sigma_coefficients_heat(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<SymmetricMatrix> {
    let jets = nullwert_jets(tau, policy)?;
    let w: f64 = jets.iter().map(|j| j.value.norm_sqr()).sum();
    Ok(SymmetricMatrix::from_lower_fn(tau.genus(), |i, j| {
        let factor = C64::new(0.0, 4.0 * PI * if i == j { 2.0 } else { 1.0 });
        jets.iter()
            .map(|jet| jet.value.conj() * jet.dtau.get(i, j))
            .sum::<C64>()
            * factor
            / (2.0 * w)
    }))
}

/// `c_ij = -pi ((Im tau)^-1)_ij`.
pub fn eta_coefficients(tau: &SiegelPoint) -> SymmetricMatrix {
    let g = tau.genus();
    let y = tau.im_inverse();
    SymmetricMatrix::from_lower_fn(g, |i, j| C64::new(-PI * y[i * g + j], 0.0))
}

/// `sigma - eta`.
pub fn structure_difference(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<SymmetricMatrix> {
    let sigma = sigma_coefficients(tau, policy)?;
    let eta = eta_coefficients(tau);
    let g = tau.genus();
    Ok(SymmetricMatrix::from_lower_fn(g, |i, j| {
        sigma.get(i, j) - eta.get(i, j)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Genus1Constants {
    /// `sum_m exp(-pi m^2)`
    pub a: f64,
    /// `sum_m m^2 exp(-pi m^2)`
    pub b: f64,
    /// `sum_m m^4 exp(-pi m^2)`
    pub c: f64,
}

pub fn genus1_constants(policy: &TruncationPolicy) -> Result<Genus1Constants> {
    let radius = theta::truncation_radius_weighted(1.0, 0.0, policy.tol, 1, policy.max_radius, 4)? as i64;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    // Smallest terms first.
    for m in (0..=radius).rev() {
        let mult = if m == 0 { 1.0 } else { 2.0 };
        let e = mult * (-PI * (m * m) as f64).exp();
        let m2 = (m * m) as f64;
        a += e;
        b += m2 * e;
        c += m2 * m2 * e;
    }
    Ok(Genus1Constants { a, b, c })
}

/// `w` and its partial derivatives at `z = x + iy` in `H_1`, with the two
/// sides of the genus-one equality test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Genus1Record {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub w_xx: f64,
    pub w_yy: f64,
    /// `w (w_xx + w_yy) - w_x^2 - w_y^2`
    pub lhs: f64,
    /// `w^2 / (2 y^2)`
    pub rhs: f64,
    /// Coefficient of `8 pi omega^Theta` in the `(i/2) dz ^ dzbar` normalization.
    pub coeff_theta: f64,
    /// Coefficient of `pi omega^S`, i.e. `pi / y^2`.
    pub coeff_siegel: f64,
    pub ratio: f64,
}

/// Evaluates `w(x + iy) = sum_{m,n} exp(2 pi i x m n - pi y (m^2 + n^2))` and
/// its derivatives term by term.
pub fn genus1_record(z: C64, policy: &TruncationPolicy) -> Result<Genus1Record> {
    let (x, y) = (z.re, z.im);
    if !(y > 0.0) || !x.is_finite() {
        return Err(Error::NotPositiveDefinite(y));
    }
    let radius = theta::truncation_radius_weighted(y, 0.0, policy.tol, 2, policy.max_radius, 4)? as i64;
    let mut terms: Vec<(i64, [f64; 5])> = Vec::new();
    for m in -radius..=radius {
        for n in -radius..=radius {
            let mn = (m * n) as f64;
            let q = (m * m + n * n) as f64;
            let e = (-PI * y * q).exp();
            let phase = 2.0 * PI * x * mn;
            let (s, c) = phase.sin_cos();
            terms.push((
                m.abs().max(n.abs()),
                [
                    c * e,
                    -2.0 * PI * mn * s * e,
                    -PI * q * c * e,
                    -(2.0 * PI * mn).powi(2) * c * e,
                    (PI * q).powi(2) * c * e,
                ],
            ));
        }
    }
    // Outer shells first so small terms are added before large ones.
    terms.sort_by_key(|(shell, _)| std::cmp::Reverse(*shell));
    let mut acc = [0.0; 5];
    for (_, t) in &terms {
        for k in 0..5 {
            acc[k] += t[k];
        }
    }
    let [w, w_x, w_y, w_xx, w_yy] = acc;
    let lhs = w * (w_xx + w_yy) - w_x * w_x - w_y * w_y;
    let rhs = w * w / (2.0 * y * y);
    // 8 pi * (1/4) Laplacian(log w) = 2 pi lhs / w^2.
    let coeff_theta = 2.0 * PI * lhs / (w * w);
    let coeff_siegel = PI / (y * y);
    Ok(Genus1Record {
        x,
        y,
        w,
        w_x,
        w_y,
        w_xx,
        w_yy,
        lhs,
        rhs,
        coeff_theta,
        coeff_siegel,
        ratio: coeff_theta / coeff_siegel,
    })
}

/// `tau -> diag(z, tau')`.
pub fn iota_embed(z: C64, tau_prime: &SiegelPoint) -> Result<SiegelPoint> {
    let g = tau_prime.genus() + 1;
    siegel::check_genus(g)?;
    SiegelPoint::new(SymmetricMatrix::from_lower_fn(g, |i, j| match (i, j) {
        (0, 0) => z,
        (_, 0) => C64::new(0.0, 0.0),
        _ => tau_prime.get(i - 1, j - 1),
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsometryReport {
    /// `|H^Theta_g[(1,1),(1,1)](iota z) - H^Theta_1(z)|`
    pub theta_residual: f64,
    /// Same for the Siegel form.
    pub siegel_residual: f64,
}

/// Along `iota` only the `(1,1)` coordinate moves, so each pullback is the
/// `((1,1),(1,1))` entry at `iota(z)`.
pub fn iota_pullback_check(z: C64, tau_prime: &SiegelPoint, policy: &TruncationPolicy) -> Result<IsometryReport> {
    let big = iota_embed(z, tau_prime)?;
    let small = SiegelPoint::genus1(z)?;
    let theta_g = fs_pullback_theta(&big, policy)?.entry(0, 0);
    let theta_1 = fs_pullback_theta(&small, policy)?.entry(0, 0);
    let siegel_g = siegel_form(&big).entry(0, 0);
    let siegel_1 = siegel_form(&small).entry(0, 0);
    Ok(IsometryReport {
        theta_residual: (theta_g - theta_1).norm(),
        siegel_residual: (siegel_g - siegel_1).norm(),
    })
}

/// `max_u |theta_u(0; iota(z)) - theta_{u1}(0; z) theta_{u2}(0; tau')| / max |theta_u(0; iota z)|`.
pub fn splitting_residual(z: C64, tau_prime: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    let big = nullwert::theta_nullwert(&iota_embed(z, tau_prime)?, policy)?;
    let first = nullwert::theta_nullwert(&SiegelPoint::genus1(z)?, policy)?;
    let rest = nullwert::theta_nullwert(tau_prime, policy)?;
    let half = rest.len();
    let scale = big.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // alpha_1 is the most significant bit, so index = u1 * 2^(g-1) + u2.
    Ok(big
        .iter()
        .enumerate()
        .map(|(k, v)| (v - first[k / half] * rest[k % half]).norm())
        .fold(0.0, f64::max)
        / scale)
}

/// `d((Im tau)^-1)_ij / d conj(tau_uv)` in independent coordinates:
/// `-(i/2)(Y^iu Y^vj + Y^iv Y^uj)` for `u > v`, `-(i/2) Y^iu Y^uj` for `u = v`.
pub fn inverse_im_derivative(tau: &SiegelPoint, u: usize, v: usize) -> ComplexMatrix {
    let g = tau.genus();
    let y = tau.im_inverse();
    let half_i = C64::new(0.0, -0.5);
    ComplexMatrix::from_fn(g, g, |i, j| {
        let mut acc = y[i * g + u] * y[v * g + j];
        if u != v {
            acc += y[i * g + v] * y[u * g + j];
        }
        half_i * acc
    })
}

/// Central-difference Wirtinger derivative `(1/2)(d/dx + i d/dy)` of
/// `(Im tau)^-1` along the independent coordinate `(u, v)`.
pub fn inverse_im_derivative_fd(tau: &SiegelPoint, u: usize, v: usize, h: f64) -> Result<ComplexMatrix> {
    let g = tau.genus();
    let inv_at = |delta: C64| -> Result<ComplexMatrix> {
        let t = theta::perturb_coordinate(tau, u, v, delta)?;
        let y = t.im_inverse();
        ComplexMatrix::from_real(g, g, &y)
    };
    let dx = inv_at(C64::new(h, 0.0))?
        .sub(&inv_at(C64::new(-h, 0.0))?)?
        .scale(C64::new(0.5 / h, 0.0));
    let dy = inv_at(C64::new(0.0, h))?
        .sub(&inv_at(C64::new(0.0, -h))?)?
        .scale(C64::new(0.5 / h, 0.0));
    Ok(dx.add(&dy.scale(C64::new(0.0, 1.0)))?.scale(C64::new(0.5, 0.0)))
}

/// Genus-one descent of `omega^Theta`:
/// `|H(M tau) |c tau + d|^-4 - H(tau)| / |H(tau)|`.
pub fn descent_form_residual_g1(m: &SymplecticMatrix, tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    if tau.genus() != 1 {
        return Err(Error::GenusMismatch {
            expected: 1,
            found: tau.genus(),
        });
    }
    let image = siegel::mobius_action(m, tau)?;
    let jac = m.automorphy_factor(tau)?[(0, 0)];
    let before = fs_pullback_theta(tau, policy)?.entry(0, 0).re;
    let after = fs_pullback_theta(&image, policy)?.entry(0, 0).re;
    let pulled = after / jac.norm_sqr().powi(2);
    Ok((pulled - before).abs() / before.abs())
}

//! Characteristics modulo 2, the second-order nullwert map `Theta_g`, the
//! squared theta-constant map `theta^2_g`, and the Riemann addition matrix
//! relating them.
//!
//! Index conventions (frozen, they define coordinates):
//! * `U` is listed by `alpha` in lexicographic order with `alpha_1` the most
//!   significant bit, so `alpha` is also the position in the list.
//! * `E` is listed lexicographically by `(eps, delta)` with `eps` first.
//! * Unordered pairs of `U` are listed diagonal pairs first, then `(i, j)` with
//!   `i < j` in lexicographic order. [`veronese_v2`] and [`addition_matrix`]
//!   share this order.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::siegel::{self, RealCharacteristic, SiegelPoint, SymplecticMatrix};
use crate::theta::{self, TruncationPolicy};

fn parity(x: u32) -> u32 {
    x.count_ones() & 1
}

/// `u = alpha / 2` with `alpha` in `(Z/2Z)^g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharacteristicU {
    g: usize,
    alpha: u32,
}

impl CharacteristicU {
    pub fn new(g: usize, alpha: u32) -> Result<Self> {
        siegel::check_genus(g)?;
        if alpha >= 1 << g {
            return Err(Error::InvalidInput(format!("alpha {alpha:#b} has more than {g} bits")));
        }
        Ok(Self { g, alpha })
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    /// Bit mask, coordinate 1 in the most significant position.
    pub fn bits(&self) -> u32 {
        self.alpha
    }

    pub fn alpha(&self, i: usize) -> u32 {
        (self.alpha >> (self.g - 1 - i)) & 1
    }

    /// The representative in `{0, 1/2}^g`.
    pub fn half_vector(&self) -> Vec<f64> {
        (0..self.g).map(|i| f64::from(self.alpha(i)) / 2.0).collect()
    }
}

impl fmt::Display for CharacteristicU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.g {
            write!(f, "{}", self.alpha(i))?;
        }
        Ok(())
    }
}

/// `(eps, delta)` in `(Z/2Z)^g x (Z/2Z)^g` with `eps . delta = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvenCharacteristic {
    g: usize,
    eps: u32,
    delta: u32,
}

impl EvenCharacteristic {
    pub fn new(g: usize, eps: u32, delta: u32) -> Result<Self> {
        siegel::check_genus(g)?;
        if eps >= 1 << g || delta >= 1 << g {
            return Err(Error::InvalidInput(format!("characteristic has more than {g} bits")));
        }
        if parity(eps & delta) != 0 {
            return Err(Error::NotEven(format!("eps={eps:0g$b} delta={delta:0g$b}")));
        }
        Ok(Self { g, eps, delta })
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn eps_bits(&self) -> u32 {
        self.eps
    }

    pub fn delta_bits(&self) -> u32 {
        self.delta
    }

    fn bit(mask: u32, g: usize, i: usize) -> i64 {
        i64::from((mask >> (g - 1 - i)) & 1)
    }

    /// `(eps/2, delta/2)` as a real characteristic.
    pub fn to_real(&self) -> RealCharacteristic {
        let m1: Vec<i64> = (0..self.g).map(|i| Self::bit(self.eps, self.g, i)).collect();
        let m2: Vec<i64> = (0..self.g).map(|i| Self::bit(self.delta, self.g, i)).collect();
        RealCharacteristic::half_integer(&m1, &m2)
    }
}

impl fmt::Display for EvenCharacteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:0w$b};{:0w$b}]", self.eps, self.delta, w = self.g)
    }
}

pub fn enumerate_u(g: usize) -> Result<Vec<CharacteristicU>> {
    siegel::check_genus(g)?;
    (0..1u32 << g).map(|a| CharacteristicU::new(g, a)).collect()
}

pub fn enumerate_e(g: usize) -> Result<Vec<EvenCharacteristic>> {
    siegel::check_genus(g)?;
    let mut out = Vec::with_capacity((1 << (g - 1)) * ((1 << g) + 1));
    for eps in 0..1u32 << g {
        for delta in 0..1u32 << g {
            if parity(eps & delta) == 0 {
                out.push(EvenCharacteristic { g, eps, delta });
            }
        }
    }
    Ok(out)
}

/// Position of an even characteristic in [`enumerate_e`].
pub fn e_index(ch: &EvenCharacteristic) -> usize {
    let g = ch.g;
    let mut idx = 0;
    for eps in 0..1u32 << g {
        for delta in 0..1u32 << g {
            if parity(eps & delta) != 0 {
                continue;
            }
            if (eps, delta) == (ch.eps, ch.delta) {
                return idx;
            }
            idx += 1;
        }
    }
    unreachable!("even characteristic is always listed")
}

/// Unordered pairs of `0..n`: diagonal pairs first, then `i < j`.
pub fn unordered_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// `(theta_u(0; tau))_{u in U}`.
pub fn theta_nullwert(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<Vec<C64>> {
    let g = tau.genus();
    let zero = vec![C64::new(0.0, 0.0); g];
    let values = enumerate_u(g)?
        .iter()
        .map(|u| theta::theta_second_order(&u.half_vector(), &zero, tau, policy))
        .collect::<Result<Vec<_>>>()?;
    let largest = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest < 1e-10 {
        return Err(Error::NegligibleNullwert(largest));
    }
    Ok(values)
}

/// `theta^2[eps/2, delta/2](0; tau)` for one characteristic (any parity).
pub fn theta_squared(eps: u32, delta: u32, tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<C64> {
    let g = tau.genus();
    let m1: Vec<i64> = (0..g).map(|i| i64::from((eps >> (g - 1 - i)) & 1)).collect();
    let m2: Vec<i64> = (0..g).map(|i| i64::from((delta >> (g - 1 - i)) & 1)).collect();
    let zero = vec![C64::new(0.0, 0.0); g];
    let v = theta::theta_char_eval(&RealCharacteristic::half_integer(&m1, &m2), &zero, tau, policy)?;
    Ok(v * v)
}

/// `(theta^2_{eps,delta}(0; tau))_{(eps,delta) in E}`.
pub fn theta_squared_map(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<Vec<C64>> {
    enumerate_e(tau.genus())?
        .iter()
        .map(|ch| theta_squared(ch.eps, ch.delta, tau, policy))
        .collect()
}

/// `W(tau) = sum_E |theta^2_{eps,delta}(0; tau)|^2`.
pub fn w_sum(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    Ok(theta_squared_map(tau, policy)?.iter().map(|z| z.norm_sqr()).sum())
}

/// One entry `sign * sqrt(2)^sqrt2_power / 2^g` of the addition matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdditionMatrixEntry {
    pub sign: i8,
    pub sqrt2_power: u8,
    pub g: u8,
}

impl AdditionMatrixEntry {
    pub fn value(&self) -> f64 {
        let root = if self.sqrt2_power == 1 {
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
        f64::from(self.sign) * root / f64::from(1u32 << self.g)
    }
}

/// Exact number `(rational + irrational * sqrt 2) / denominator`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub rational: i64,
    pub irrational: i64,
    pub denominator: i64,
}

impl QuadraticSurd {
    pub fn is_zero(&self) -> bool {
        self.rational == 0 && self.irrational == 0
    }

    /// Exact equality with `num / den`.
    pub fn equals_rational(&self, num: i64, den: i64) -> bool {
        self.irrational == 0 && self.rational * den == num * self.denominator
    }

    pub fn to_f64(&self) -> f64 {
        (self.rational as f64 + self.irrational as f64 * std::f64::consts::SQRT_2) / self.denominator as f64
    }
}

/// The matrix `M` with rows indexed by unordered pairs of `U` and columns by `E`.
#[derive(Clone, Debug)]
pub struct AdditionMatrix {
    g: usize,
    rows: Vec<(usize, usize)>,
    cols: Vec<EvenCharacteristic>,
    entries: Vec<AdditionMatrixEntry>,
}

impl AdditionMatrix {
    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    pub fn cols(&self) -> &[EvenCharacteristic] {
        &self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> AdditionMatrixEntry {
        self.entries[row * self.cols.len() + col]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(AdditionMatrixEntry::value).collect()
    }

    /// `M^t M` in exact arithmetic.
    pub fn gram(&self) -> Vec<QuadraticSurd> {
        let n = self.cols.len();
        let denominator = 1i64 << (2 * self.g);
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let (mut rational, mut irrational) = (0i64, 0i64);
                for r in 0..self.rows.len() {
                    let x = self.entry(r, a);
                    let y = self.entry(r, b);
                    let s = i64::from(x.sign) * i64::from(y.sign);
                    if s == 0 {
                        continue;
                    }
                    match x.sqrt2_power + y.sqrt2_power {
                        0 => rational += s,
                        1 => irrational += s,
                        _ => rational += 2 * s,
                    }
                }
                out.push(QuadraticSurd {
                    rational,
                    irrational,
                    denominator,
                });
            }
        }
        out
    }

    /// Largest exact deviation of `M^t M` from `I / 2^g`, as a float; zero
    /// exactly when the identity holds.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.cols.len();
        let scale = 1i64 << self.g;
        self.gram()
            .iter()
            .enumerate()
            .map(|(k, q)| {
                let target = i64::from(k / n == k % n);
                if q.equals_rational(target, scale) {
                    0.0
                } else {
                    (q.to_f64() - target as f64 / scale as f64).abs().max(f64::MIN_POSITIVE)
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols.len() {
            return Err(Error::Dimension(format!(
                "addition matrix has {} columns, vector has {}",
                self.cols.len(),
                v.len()
            )));
        }
        Ok((0..self.rows.len())
            .map(|r| (0..self.cols.len()).map(|c| v[c] * self.entry(r, c).value()).sum())
            .collect())
    }
}

/// `M_{(a,a'),(eps,sigma)} = (-1)^{a.sigma} / 2^g` if `a + a' = eps = 0`,
/// `sqrt 2 (-1)^{a.sigma} / 2^g` if `a + a' = eps != 0`, else 0.
pub fn addition_matrix(g: usize) -> Result<AdditionMatrix> {
    let rows = unordered_pairs(1 << g);
    let cols = enumerate_e(g)?;
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for &(a, b) in &rows {
        let sum = (a ^ b) as u32;
        for ch in &cols {
            let entry = if sum == ch.eps {
                AdditionMatrixEntry {
                    sign: if parity(a as u32 & ch.delta) == 0 { 1 } else { -1 },
                    sqrt2_power: u8::from(sum != 0),
                    g: g as u8,
                }
            } else {
                AdditionMatrixEntry {
                    sign: 0,
                    sqrt2_power: 0,
                    g: g as u8,
                }
            };
            entries.push(entry);
        }
    }
    Ok(AdditionMatrix { g, rows, cols, entries })
}

/// `lambda_i^2` on diagonal pairs, `sqrt 2 lambda_i lambda_j` off the diagonal.
pub fn veronese_v2(lambda: &[C64]) -> Vec<C64> {
    unordered_pairs(lambda.len())
        .into_iter()
        .map(|(i, j)| {
            if i == j {
                lambda[i] * lambda[i]
            } else {
                lambda[i] * lambda[j] * std::f64::consts::SQRT_2
            }
        })
        .collect()
}

/// The induced permutation `T` of `E`: transform `(eps/2, delta/2)`, double,
/// reduce mod 2.
pub fn char_action_t(m: &SymplecticMatrix, ch: &EvenCharacteristic) -> Result<EvenCharacteristic> {
    if m.genus() != ch.g {
        return Err(Error::GenusMismatch {
            expected: m.genus(),
            found: ch.g,
        });
    }
    let g = ch.g;
    let out = siegel::transform_characteristic(m, &ch.to_real())?;
    let to_mask = |v: &[f64]| -> Result<u32> {
        let mut mask = 0u32;
        for (i, &x) in v.iter().enumerate() {
            let doubled = 2.0 * x;
            let k = doubled.round();
            if (doubled - k).abs() > 1e-9 {
                return Err(Error::NotEven(format!("2 * {x} is not an integer")));
            }
            if (k as i64).rem_euclid(2) == 1 {
                mask |= 1 << (g - 1 - i);
            }
        }
        Ok(mask)
    };
    let eps = to_mask(&out.c1)?;
    let delta = to_mask(&out.c2)?;
    EvenCharacteristic::new(g, eps, delta)
}

/// Residual report for the addition-formula identity
/// `M . theta^2_g(tau) = v2(Theta_g(tau))`.
#[derive(Clone, Debug)]
pub struct LfsReport {
    pub lhs: Vec<C64>,
    pub rhs: Vec<C64>,
    /// `||lhs - rhs|| / ||rhs||`.
    pub residual: f64,
}

pub fn verify_lfs(tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<LfsReport> {
    let m = addition_matrix(tau.genus())?;
    let lhs = m.apply(&theta_squared_map(tau, policy)?)?;
    let rhs = veronese_v2(&theta_nullwert(tau, policy)?);
    let diff: f64 = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let norm: f64 = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(LfsReport {
        residual: diff / norm,
        lhs,
        rhs,
    })
}

/// Modulus law `|theta^2[Mc](0; M tau)| = |det(c tau + d)| |theta^2[c](0; tau)|`
/// over all of `E`, evaluated at the transformed real characteristic itself.
/// Returns the largest residual, normalized by the largest right-hand side.
pub fn modulus_law_residual(m: &SymplecticMatrix, tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    modulus_law_residual_with(siegel::CHARACTERISTIC_CONVENTION, m, tau, policy)
}

pub fn modulus_law_residual_with(
    convention: siegel::CharacteristicConvention,
    m: &SymplecticMatrix,
    tau: &SiegelPoint,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let g = tau.genus();
    let image = siegel::mobius_action(m, tau)?;
    let jac = siegel::cocycle_det(m, tau)?.norm();
    let zero = vec![C64::new(0.0, 0.0); g];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for ch in enumerate_e(g)? {
        let src = ch.to_real();
        let dst = siegel::transform_characteristic_with(convention, m, &src)?;
        let lhs = theta::theta_char_eval(&dst, &zero, &image, policy)?.norm_sqr();
        let rhs = jac * theta::theta_char_eval(&src, &zero, tau, policy)?.norm_sqr();
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    Ok(worst / scale)
}

/// `|theta^2_{T(ch)}(0; M tau)|` against `|det(c tau + d)| |theta^2_ch(0; tau)|`
/// using the reduced characteristic `T(ch)`.
pub fn t_modulus_residual(m: &SymplecticMatrix, tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    let g = tau.genus();
    let image = siegel::mobius_action(m, tau)?;
    let jac = siegel::cocycle_det(m, tau)?.norm();
    let before = theta_squared_map(tau, policy)?;
    let after = theta_squared_map(&image, policy)?;
    let chars = enumerate_e(g)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, ch) in chars.iter().enumerate() {
        let t = char_action_t(m, ch)?;
        let lhs = after[e_index(&t)].norm();
        let rhs = jac * before[k].norm();
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(rhs);
    }
    Ok(worst / scale)
}

/// `|W(M tau) - |det(c tau + d)|^2 W(tau)| / (|det|^2 W(tau))`.
pub fn descent_residual(m: &SymplecticMatrix, tau: &SiegelPoint, policy: &TruncationPolicy) -> Result<f64> {
    let image = siegel::mobius_action(m, tau)?;
    let jac2 = siegel::cocycle_det(m, tau)?.norm_sqr();
    let expected = jac2 * w_sum(tau, policy)?;
    Ok((w_sum(&image, policy)? - expected).abs() / expected)
}

/// `T` as a permutation of the positions of [`enumerate_e`].
pub fn t_permutation(m: &SymplecticMatrix) -> Result<Vec<usize>> {
    enumerate_e(m.genus())?
        .iter()
        .map(|ch| char_action_t(m, ch).map(|t| e_index(&t)))
        .collect()
}

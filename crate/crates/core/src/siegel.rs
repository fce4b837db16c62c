//! The Siegel upper half-space `H_g`, integer symplectic matrices and their
//! action on period matrices and on real theta characteristics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, SymmetricMatrix, C64};

pub const MAX_GENUS: usize = 4;

pub fn check_genus(g: usize) -> Result<()> {
    if (1..=MAX_GENUS).contains(&g) {
        Ok(())
    } else {
        Err(Error::UnsupportedGenus(g))
    }
}

/// A point of `H_g`: symmetric `tau` with positive-definite imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct SiegelPoint {
    tau: SymmetricMatrix,
    im_min_eig: f64,
}

impl SiegelPoint {
    pub fn new(tau: SymmetricMatrix) -> Result<Self> {
        check_genus(tau.dim())?;
        if tau.lower().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("tau has non-finite entries".into()));
        }
        let im_min_eig = linalg::min_eigenvalue_posdef(&tau.to_matrix().im())?;
        if im_min_eig <= 0.0 {
            return Err(Error::NotPositiveDefinite(im_min_eig));
        }
        Ok(Self { tau, im_min_eig })
    }

    /// Row-major lower triangle, as on the command line.
    pub fn from_lower(g: usize, lower: Vec<C64>) -> Result<Self> {
        check_genus(g)?;
        Self::new(SymmetricMatrix::from_lower(g, lower)?)
    }

    /// `tau = z` in genus one.
    pub fn genus1(z: C64) -> Result<Self> {
        Self::from_lower(1, vec![z])
    }

    /// `i` times the identity.
    pub fn scaled_identity(g: usize, y: f64) -> Result<Self> {
        Self::new(SymmetricMatrix::from_lower_fn(g, |i, j| {
            if i == j {
                C64::new(0.0, y)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn genus(&self) -> usize {
        self.tau.dim()
    }

    pub fn tau(&self) -> &SymmetricMatrix {
        &self.tau
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.tau.get(i, j)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.tau.to_matrix()
    }

    /// `Im tau` as a real matrix.
    pub fn im(&self) -> Vec<f64> {
        let g = self.genus();
        (0..g * g).map(|k| self.get(k / g, k % g).im).collect()
    }

    pub fn im_min_eigenvalue(&self) -> f64 {
        self.im_min_eig
    }

    /// `(Im tau)^-1` as a real matrix in row-major order.
    pub fn im_inverse(&self) -> Vec<f64> {
        let g = self.genus();
        let im = self.matrix().im();
        let inv = linalg::inverse(&im).expect("Im tau is positive definite");
        (0..g * g).map(|k| inv[(k / g, k % g)].re).collect()
    }
}

/// An element of `Sp(2g, Z)` stored as a `2g x 2g` integer matrix
/// `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticMatrix {
    g: usize,
    m: Vec<i64>,
}

impl SymplecticMatrix {
    /// Validates `M^t J M = J` in exact integer arithmetic.
    pub fn new(g: usize, entries: Vec<i64>) -> Result<Self> {
        check_genus(g)?;
        if entries.len() != 4 * g * g {
            return Err(Error::Dimension(format!(
                "Sp(2g) with g={g} needs {} entries, got {}",
                4 * g * g,
                entries.len()
            )));
        }
        let m = Self { g, m: entries };
        if !m.is_symplectic() {
            return Err(Error::NotSymplectic);
        }
        Ok(m)
    }

    pub fn from_blocks(a: &[i64], b: &[i64], c: &[i64], d: &[i64]) -> Result<Self> {
        let g = (a.len() as f64).sqrt().round() as usize;
        if [a, b, c, d].iter().any(|blk| blk.len() != g * g) {
            return Err(Error::Dimension("blocks must be g x g".into()));
        }
        let n = 2 * g;
        let mut m = vec![0; n * n];
        for i in 0..g {
            for j in 0..g {
                m[i * n + j] = a[i * g + j];
                m[i * n + g + j] = b[i * g + j];
                m[(g + i) * n + j] = c[i * g + j];
                m[(g + i) * n + g + j] = d[i * g + j];
            }
        }
        Self::new(g, m)
    }

    pub fn identity(g: usize) -> Self {
        let n = 2 * g;
        Self {
            g,
            m: (0..n * n).map(|k| i64::from(k / n == k % n)).collect(),
        }
    }

    /// `J = [[0, -I], [I, 0]]`.
    pub fn j(g: usize) -> Self {
        let n = 2 * g;
        let mut m = vec![0; n * n];
        for i in 0..g {
            m[i * n + g + i] = -1;
            m[(g + i) * n + i] = 1;
        }
        Self { g, m }
    }

    /// `[[I, B], [0, I]]` for a symmetric integer `B`.
    pub fn translation(g: usize, b: &[i64]) -> Result<Self> {
        let id: Vec<i64> = (0..g * g).map(|k| i64::from(k / g == k % g)).collect();
        Self::from_blocks(&id, b, &vec![0; g * g], &id)
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn entries(&self) -> &[i64] {
        &self.m
    }

    fn at(&self, i: usize, j: usize) -> i64 {
        self.m[i * 2 * self.g + j]
    }

    pub fn a(&self, i: usize, j: usize) -> i64 {
        self.at(i, j)
    }

    pub fn b(&self, i: usize, j: usize) -> i64 {
        self.at(i, self.g + j)
    }

    pub fn c(&self, i: usize, j: usize) -> i64 {
        self.at(self.g + i, j)
    }

    pub fn d(&self, i: usize, j: usize) -> i64 {
        self.at(self.g + i, self.g + j)
    }

    pub fn is_symplectic(&self) -> bool {
        let n = 2 * self.g;
        let jm = Self::j(self.g);
        // M^t J M
        for r in 0..n {
            for s in 0..n {
                let mut acc = 0i64;
                for k in 0..n {
                    for l in 0..n {
                        acc += self.at(k, r) * jm.at(k, l) * self.at(l, s);
                    }
                }
                if acc != jm.at(r, s) {
                    return false;
                }
            }
        }
        true
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.g != other.g {
            return Err(Error::GenusMismatch {
                expected: self.g,
                found: other.g,
            });
        }
        let n = 2 * self.g;
        let mut m = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..n).map(|k| self.at(i, k) * other.at(k, j)).sum();
            }
        }
        Ok(Self { g: self.g, m })
    }

    fn block(&self, f: impl Fn(usize, usize) -> i64) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.g, self.g, |i, j| C64::new(f(i, j) as f64, 0.0))
    }

    /// `c tau + d`.
    pub fn automorphy_factor(&self, tau: &SiegelPoint) -> Result<ComplexMatrix> {
        self.check_same_genus(tau.genus())?;
        let c = self.block(|i, j| self.c(i, j));
        let d = self.block(|i, j| self.d(i, j));
        (&c * &tau.matrix()).add(&d)
    }

    fn check_same_genus(&self, g: usize) -> Result<()> {
        if self.g != g {
            Err(Error::GenusMismatch {
                expected: self.g,
                found: g,
            })
        } else {
            Ok(())
        }
    }
}

/// Real characteristic `(c1, c2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealCharacteristic {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl RealCharacteristic {
    pub fn new(c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        if c1.len() != c2.len() {
            return Err(Error::Dimension("c1 and c2 must have the same length".into()));
        }
        if c1.iter().chain(&c2).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("characteristic must be finite".into()));
        }
        Ok(Self { c1, c2 })
    }

    pub fn zero(g: usize) -> Self {
        Self {
            c1: vec![0.0; g],
            c2: vec![0.0; g],
        }
    }

    /// `(m1/2, m2/2)`.
    pub fn half_integer(m1: &[i64], m2: &[i64]) -> Self {
        Self {
            c1: m1.iter().map(|&m| m as f64 / 2.0).collect(),
            c2: m2.iter().map(|&m| m as f64 / 2.0).collect(),
        }
    }

    pub fn genus(&self) -> usize {
        self.c1.len()
    }
}

/// `(a tau + b)(c tau + d)^-1`, symmetrized.
pub fn mobius_action(m: &SymplecticMatrix, tau: &SiegelPoint) -> Result<SiegelPoint> {
    m.check_same_genus(tau.genus())?;
    let t = tau.matrix();
    let a = m.block(|i, j| m.a(i, j));
    let b = m.block(|i, j| m.b(i, j));
    let num = (&a * &t).add(&b)?;
    let den = m.automorphy_factor(tau)?;
    let (_, den_inv) = linalg::lu_det_inverse(&den)?;
    SiegelPoint::new(SymmetricMatrix::symmetrize(&(&num * &den_inv))?)
}

/// `det(c tau + d)`.
pub fn cocycle_det(m: &SymplecticMatrix, tau: &SiegelPoint) -> Result<C64> {
    linalg::determinant(&m.automorphy_factor(tau)?)
}

/// Which placement of the blocks the characteristic transform uses.
///
/// `Standard` maps `(c1, c2)` to
/// `(d c1 - c c2 + diag(c d^t)/2, -b c1 + a c2 + diag(a b^t)/2)`;
/// `Transposed` swaps the roles of `a` and `d` in the linear part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharacteristicConvention {
    Standard,
    Transposed,
}

/// The convention under which `|theta^2[M c](0; M tau)| = |det(c tau + d)| |theta^2[c](0; tau)|`
/// holds for every standard generator. Pinned by the modulus-law tests.
pub const CHARACTERISTIC_CONVENTION: CharacteristicConvention = CharacteristicConvention::Standard;

pub fn transform_characteristic(m: &SymplecticMatrix, ch: &RealCharacteristic) -> Result<RealCharacteristic> {
    transform_characteristic_with(CHARACTERISTIC_CONVENTION, m, ch)
}

pub fn transform_characteristic_with(
    convention: CharacteristicConvention,
    m: &SymplecticMatrix,
    ch: &RealCharacteristic,
) -> Result<RealCharacteristic> {
    let g = m.genus();
    m.check_same_genus(ch.genus())?;
    type Block = fn(&SymplecticMatrix, usize, usize) -> i64;
    let (lin_a, lin_d): (Block, Block) = match convention {
        CharacteristicConvention::Standard => (SymplecticMatrix::a, SymplecticMatrix::d),
        CharacteristicConvention::Transposed => (SymplecticMatrix::d, SymplecticMatrix::a),
    };
    let mut c1 = vec![0.0; g];
    let mut c2 = vec![0.0; g];
    for i in 0..g {
        let mut x = 0.0;
        let mut y = 0.0;
        let mut diag_cd = 0i64;
        let mut diag_ab = 0i64;
        for k in 0..g {
            x += lin_d(m, i, k) as f64 * ch.c1[k] - m.c(i, k) as f64 * ch.c2[k];
            y += -(m.b(i, k) as f64) * ch.c1[k] + lin_a(m, i, k) as f64 * ch.c2[k];
            diag_cd += m.c(i, k) * m.d(i, k);
            diag_ab += m.a(i, k) * m.b(i, k);
        }
        c1[i] = x + diag_cd as f64 / 2.0;
        c2[i] = y + diag_ab as f64 / 2.0;
    }
    Ok(RealCharacteristic { c1, c2 })
}

/// `J` followed by the translations by the symmetric elementary matrices
/// `E_kk` and `E_kl + E_lk` (k < l).
pub fn standard_generators(g: usize) -> Result<Vec<SymplecticMatrix>> {
    check_genus(g)?;
    let mut out = vec![SymplecticMatrix::j(g)];
    for k in 0..g {
        for l in k..g {
            let mut b = vec![0i64; g * g];
            b[k * g + l] = 1;
            b[l * g + k] = 1;
            out.push(SymplecticMatrix::translation(g, &b)?);
        }
    }
    Ok(out)
}

/// `tau = A + iB` with `A` symmetric uniform in `[-1, 1]` and
/// `B = Q Q^t + I/2`, `Q` uniform in `[-1, 1]`. Deterministic in `seed`.
pub fn random_siegel_point(g: usize, seed: u64) -> Result<SiegelPoint> {
    check_genus(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let re: Vec<f64> = (0..g * (g + 1) / 2).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let q: Vec<f64> = (0..g * g).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut k = 0;
    let tau = SymmetricMatrix::from_lower_fn(g, |i, j| {
        let a = re[k];
        k += 1;
        let mut b: f64 = (0..g).map(|l| q[i * g + l] * q[j * g + l]).sum();
        if i == j {
            b += 0.5;
        }
        C64::new(a, b)
    });
    SiegelPoint::new(tau)
}

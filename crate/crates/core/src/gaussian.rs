//! Small-dimension Gaussian-state algebra in shot-noise units (vacuum variance 1).
//!
//! Covariance matrices are ordered `(q_1, p_1, q_2, p_2, ...)` and the
//! symplectic form is `Ω = ⊕_k [[0, 1], [-1, 0]]`. Everything here is limited
//! to at most three modes, which is all the key-rate pipeline ever needs
//! (Bob's mode plus Eve's two environment modes).

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

/// Largest mode count a [`CovMatrix`] may carry.
pub const MAX_MODES: usize = 3;

/// Relative asymmetry tolerated when a matrix is accepted as a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symplectic eigenvalues in `[1 - PHYSICAL_TOL, 1)` are snapped to exactly 1.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Rounding allowance of computed spectra, in units of `ε·max|V_ij|`.
const SPECTRUM_ROUNDING: f64 = 64.0;

/// Physicality tolerance for eigenvalues computed from `v`: `PHYSICAL_TOL`, or
/// the eigen-solver's absolute rounding error when the entries are large.
fn physical_tol(v: &CovMatrix) -> f64 {
    rounding_tol(v.scale)
}

fn rounding_tol(scale: f64) -> f64 {
    PHYSICAL_TOL.max(SPECTRUM_ROUNDING * f64::EPSILON * scale)
}

/// Largest real part (relative to the spectral radius) accepted on an eigenvalue of `ΩV`.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-8;

/// A real 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [f64; 4]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([1.0, 0.0, 0.0, 1.0]);
    /// `diag{1, -1}`
    pub const Z: Mat2 = Mat2([1.0, 0.0, 0.0, -1.0]);
    /// Projector on the position quadrature, `diag{1, 0}`.
    pub const PROJ_Q: Mat2 = Mat2([1.0, 0.0, 0.0, 0.0]);
    /// Projector on the momentum quadrature, `diag{0, 1}`.
    pub const PROJ_P: Mat2 = Mat2([0.0, 0.0, 0.0, 1.0]);
    pub const ZERO: Mat2 = Mat2([0.0; 4]);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([a, b, c, d])
    }

    pub const fn diag(q: f64, p: f64) -> Self {
        Mat2([q, 0.0, 0.0, p])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[2 * row + col]
    }

    pub fn scale(self, s: f64) -> Self {
        Mat2(self.0.map(|x| x * s))
    }

    pub fn det(&self) -> f64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    pub fn transpose(&self) -> Self {
        Mat2([self.0[0], self.0[2], self.0[1], self.0[3]])
    }

    /// Numerical rank with an absolute tolerance on entries and determinant.
    pub fn rank(&self, tol: f64) -> usize {
        if self.det().abs() > tol {
            2
        } else if self.0.iter().any(|x| x.abs() > tol) {
            1
        } else {
            0
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

/// Which quadrature a homodyne detector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    fn index(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

/// Covariance matrix of an `n`-mode Gaussian state, `n ∈ {1, 2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    modes: usize,
    data: DMatrix<f64>,
    /// Largest entry magnitude among the matrices this one was derived from;
    /// sets the rounding allowance of its spectrum.
    scale: f64,
}

impl CovMatrix {
    /// Accepts a square, finite, symmetric matrix of size `2n`, `1 ≤ n ≤ 3`.
    ///
    /// No physicality check is made; use [`CovMatrix::state`] for that.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = data.shape();
        if rows != cols || rows % 2 != 0 || rows == 0 || rows / 2 > MAX_MODES {
            return Err(Error::Contract(format!(
                "covariance matrix must be 2n x 2n with 1 <= n <= {MAX_MODES}, got {rows} x {cols}"
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("covariance matrix has non-finite entries".into()));
        }
        let scale = data.amax().max(1.0);
        for i in 0..rows {
            for j in (i + 1)..cols {
                if (data[(i, j)] - data[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Contract(format!(
                        "covariance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let scale = data.amax();
        Ok(CovMatrix { modes: rows / 2, data, scale })
    }

    /// Like [`CovMatrix::new`] but also requires every symplectic eigenvalue to be
    /// at least `1 - PHYSICAL_TOL`.
    pub fn state(data: DMatrix<f64>) -> Result<Self> {
        let cm = CovMatrix::new(data)?;
        symplectic_spectrum(&cm)?;
        Ok(cm)
    }

    /// Averages `data` with its transpose before validating. Used after matrix
    /// products whose rounding breaks exact symmetry.
    pub(crate) fn symmetrized(data: DMatrix<f64>) -> Result<Self> {
        let sym = (&data + data.transpose()) * 0.5;
        CovMatrix::new(sym)
    }

    /// Builds a covariance matrix from a row-major grid of 2×2 blocks.
    pub fn from_blocks(blocks: &[Vec<Mat2>]) -> Result<Self> {
        let n = blocks.len();
        if blocks.iter().any(|row| row.len() != n) {
            return Err(Error::Contract("block grid must be square".into()));
        }
        let mut data = DMatrix::zeros(2 * n, 2 * n);
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                for r in 0..2 {
                    for c in 0..2 {
                        data[(2 * i + r, 2 * j + c)] = b.get(r, c);
                    }
                }
            }
        }
        CovMatrix::new(data)
    }

    /// Diagonal covariance matrix from per-quadrature variances.
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        CovMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            variances,
        )))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// The 2×2 block coupling modes `i` and `j` (the local CM when `i == j`).
    pub fn block(&self, i: usize, j: usize) -> Mat2 {
        let d = &self.data;
        Mat2([
            d[(2 * i, 2 * j)],
            d[(2 * i, 2 * j + 1)],
            d[(2 * i + 1, 2 * j)],
            d[(2 * i + 1, 2 * j + 1)],
        ])
    }

    pub fn det(&self) -> f64 {
        self.data.determinant()
    }

    /// Reduced state of the listed modes, in the given order.
    pub fn reduced(&self, keep: &[usize]) -> Result<CovMatrix> {
        if keep.is_empty() || keep.iter().any(|&k| k >= self.modes) {
            return Err(Error::Contract(format!(
                "invalid mode selection {keep:?} for a {}-mode state",
                self.modes
            )));
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let data = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.data[(idx[r], idx[c])]);
        Ok(CovMatrix::new(data)?.derived_from(self))
    }

    /// Marks `self` as computed from `parent`, inheriting its rounding scale.
    pub fn derived_from(mut self, parent: &CovMatrix) -> CovMatrix {
        self.scale = self.scale.max(parent.scale);
        self
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CovMatrix) -> Result<CovMatrix> {
        let a = self.data.nrows();
        let b = other.data.nrows();
        let mut data = DMatrix::zeros(a + b, a + b);
        data.view_mut((0, 0), (a, a)).copy_from(&self.data);
        data.view_mut((a, a), (b, b)).copy_from(&other.data);
        CovMatrix::new(data)
    }

    /// True when every symplectic eigenvalue is at least `1 - PHYSICAL_TOL`.
    pub fn is_physical(&self) -> Result<bool> {
        let raw = raw_symplectic_eigenvalues(self)?;
        let tol = physical_tol(self);
        Ok(raw.iter().all(|&nu| nu >= 1.0 - tol))
    }
}

/// Symplectic eigenvalues of a physical state, sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SympSpectrum(Vec<f64>);

impl SympSpectrum {
    /// Validates `values >= 1 - PHYSICAL_TOL`, snaps the tolerance band to 1 and
    /// sorts descending.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, PHYSICAL_TOL)
    }

    /// Eigenvalues computed from a state whose entries reach `scale`; the
    /// physicality check allows for the rounding that scale implies.
    pub(crate) fn computed(values: Vec<f64>, scale: f64) -> Result<Self> {
        Self::with_tolerance(values, rounding_tol(scale))
    }

    fn with_tolerance(values: Vec<f64>, tol: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for nu in values {
            if !nu.is_finite() || nu < 1.0 - tol {
                return Err(domain(format!(
                    "symplectic eigenvalue {nu} is below 1 (unphysical state)"
                )));
            }
            out.push(nu.max(1.0));
        }
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(SympSpectrum(out))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Von Neumann entropy `Σ h(ν_i)` in bits.
    pub fn entropy(&self) -> f64 {
        // values are validated >= 1 so h cannot fail
        self.0.iter().map(|&nu| entropy_h_unchecked(nu)).sum()
    }
}

/// `Ω` for `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Covariance matrix of a two-mode squeezed vacuum with local variance `omega`.
pub fn tmsv_cm(omega: f64) -> Result<CovMatrix> {
    if !(omega >= 1.0) || !omega.is_finite() {
        return Err(domain(format!(
            "environment variance omega must be >= 1, got {omega}"
        )));
    }
    let c = (omega * omega - 1.0).sqrt();
    let diag = Mat2::IDENTITY.scale(omega);
    let cross = Mat2::Z.scale(c);
    CovMatrix::from_blocks(&[vec![diag, cross], vec![cross, diag]])
}

/// True when no q quadrature is correlated with any p quadrature.
fn quadratures_decoupled(v: &CovMatrix) -> bool {
    let n = v.modes;
    (0..n).all(|i| (0..n).all(|j| v.data[(2 * i, 2 * j + 1)] == 0.0))
}

/// Symplectic eigenvalues of a two-mode state with uncorrelated q and p
/// quadratures, from `[V11, V12, V22]` of each quadrature block and the block
/// determinants (passed separately so callers can supply them without
/// cancellation).
///
/// With Cholesky factors `V_q = A_q A_qᵀ`, `V_p = A_p A_pᵀ`, the eigenvalues are
/// the singular values of `A_pᵀ A_q`; the 2×2 singular values are taken in the
/// closed form that adds positive terms for the larger one and divides the
/// determinant for the smaller.
pub(crate) fn decoupled_two_mode_spectrum(
    q: [f64; 3],
    p: [f64; 3],
    det_q: f64,
    det_p: f64,
) -> Result<Vec<f64>> {
    if !(q[0] > 0.0 && p[0] > 0.0) || !(det_q >= 0.0 && det_p >= 0.0) {
        return Err(Error::Numerical(format!(
            "two-mode quadrature blocks are not positive (q {q:?}, p {p:?})"
        )));
    }
    let chol = |v: [f64; 3], det: f64| {
        let l11 = v[0].sqrt();
        (l11, v[1] / l11, det.sqrt() / l11)
    };
    let (aq, gq, dq) = chol(q, det_q);
    let (ap, gp, dp) = chol(p, det_p);
    let m11 = ap * aq + gp * gq;
    let m12 = gp * dq;
    let m21 = dp * gq;
    let m22 = dp * dq;
    let big = 0.5 * ((m11 + m22).hypot(m12 - m21) + (m11 - m22).hypot(m12 + m21));
    let det_m = (aq * dq) * (ap * dp);
    if !(big > 0.0) {
        return Err(Error::Numerical("two-mode state has a vanishing spectrum".into()));
    }
    Ok(vec![big, det_m / big])
}

fn raw_symplectic_eigenvalues(v: &CovMatrix) -> Result<Vec<f64>> {
    if v.modes == 1 {
        let det = v.block(0, 0).det();
        if det < 0.0 {
            return Err(Error::Numerical(format!(
                "single-mode covariance matrix has negative determinant {det}"
            )));
        }
        return Ok(vec![det.sqrt()]);
    }
    if v.modes == 2 && quadratures_decoupled(v) {
        // ν² are the eigenvalues of V_q V_p; the small one is taken from the
        // product of roots so that it keeps its relative accuracy
        let d = &v.data;
        let (q11, q12, q22) = (d[(0, 0)], d[(0, 2)], d[(2, 2)]);
        let (p11, p12, p22) = (d[(1, 1)], d[(1, 3)], d[(3, 3)]);
        let det_q = q11 * q22 - q12 * q12;
        let det_p = p11 * p22 - p12 * p12;
        return decoupled_two_mode_spectrum([q11, q12, q22], [p11, p12, p22], det_q.max(0.0), det_p.max(0.0));
    }
    let m = symplectic_form(v.modes) * &v.data;
    let eig = m.complex_eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if let Some(z) = eig.iter().find(|z| z.re.abs() > IMAGINARY_RESIDUE_TOL * radius) {
        return Err(Error::Numerical(format!(
            "eigenvalue {} + {}i of ΩV has a real residue above tolerance",
            z.re, z.im
        )));
    }
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.im.abs()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Symplectic spectrum from the moduli of the eigenvalues of `iΩV`.
pub fn symplectic_spectrum(v: &CovMatrix) -> Result<SympSpectrum> {
    SympSpectrum::with_tolerance(raw_symplectic_eigenvalues(v)?, physical_tol(v))
}

/// `h(x) = (x+1)/2 log2((x+1)/2) - (x-1)/2 log2((x-1)/2)`, with `h(1) = 0`.
pub fn entropy_h(x: f64) -> Result<f64> {
    if !(x >= 1.0 - PHYSICAL_TOL) || x.is_nan() {
        return Err(domain(format!("h(x) requires x >= 1, got {x}")));
    }
    Ok(entropy_h_unchecked(x.max(1.0)))
}

fn entropy_h_unchecked(x: f64) -> f64 {
    if x <= 1.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x < 3.0 {
        let a = 0.5 * (x + 1.0);
        let b = 0.5 * (x - 1.0);
        a * a.log2() - b * b.log2()
    } else {
        // log2((x-1)/2) + (x+1)/2 * log2(1 + 2/(x-1)); no cancellation for large x
        (0.5 * (x - 1.0)).log2()
            + 0.5 * (x + 1.0) * (2.0 / (x - 1.0)).ln_1p() / std::f64::consts::LN_2
    }
}

/// Holevo quantity `Σ h(avg) - Σ_k w_k Σ h(cond_k)`.
pub fn holevo_from_spectra(
    avg: &SympSpectrum,
    cond: &[SympSpectrum],
    weights: &[f64],
) -> Result<f64> {
    if cond.len() != weights.len() || cond.is_empty() {
        return Err(Error::Contract(format!(
            "{} conditional spectra but {} weights",
            cond.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Contract("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!("weights sum to {total}, not 1")));
    }
    let conditional: f64 = cond
        .iter()
        .zip(weights)
        .map(|(s, &w)| w * s.entropy())
        .sum();
    Ok(avg.entropy() - conditional)
}

/// Splits `v` into the measured mode's block, the cross-block `C` (2 × rest)
/// and the remaining modes' matrix.
fn partition(v: &CovMatrix, measured: usize) -> Result<(Mat2, DMatrix<f64>, DMatrix<f64>)> {
    if v.modes < 2 || measured >= v.modes {
        return Err(Error::Contract(format!(
            "cannot measure mode {measured} of a {}-mode state and keep the rest",
            v.modes
        )));
    }
    let rest: Vec<usize> = (0..2 * v.modes)
        .filter(|&i| i / 2 != measured)
        .collect();
    let vb = v.block(measured, measured);
    let c = DMatrix::from_fn(2, rest.len(), |r, col| v.data[(2 * measured + r, rest[col])]);
    let a = DMatrix::from_fn(rest.len(), rest.len(), |r, col| v.data[(rest[r], rest[col])]);
    Ok((vb, c, a))
}

fn schur(parent: &CovMatrix, a: DMatrix<f64>, c: &DMatrix<f64>, inv: Mat2) -> Result<CovMatrix> {
    let inv = nalgebra::Matrix2::new(inv.0[0], inv.0[1], inv.0[2], inv.0[3]);
    let correction = c.transpose() * inv * c;
    Ok(CovMatrix::symmetrized(a - correction)?.derived_from(parent))
}

/// Conditional covariance matrix of the unmeasured modes after homodyne
/// detection of `quad` on `measured`.
///
/// `V_rest − Cᵀ (Π V_B Π)⁺ C`, where the pseudo-inverse of the rank-one
/// projected block is the reciprocal of its single nonzero entry.
pub fn condition_on_homodyne(v: &CovMatrix, measured: usize, quad: Quadrature) -> Result<CovMatrix> {
    let (vb, c, a) = partition(v, measured)?;
    let k = quad.index();
    let var = vb.get(k, k);
    if !(var > 0.0) {
        return Err(Error::DegenerateMeasurement(format!(
            "measured quadrature variance is {var}"
        )));
    }
    let mut pinv = Mat2::ZERO;
    pinv.0[3 * k] = 1.0 / var;
    schur(v, a, &c, pinv)
}

/// Conditional covariance matrix after heterodyne detection of `measured`:
/// `V_rest − Cᵀ (V_B + I)⁻¹ C`.
pub fn condition_on_heterodyne(v: &CovMatrix, measured: usize) -> Result<CovMatrix> {
    let (vb, c, a) = partition(v, measured)?;
    let shifted = vb + Mat2::IDENTITY;
    let det = shifted.det();
    if !(det.abs() > 0.0) {
        return Err(Error::DegenerateMeasurement(
            "V_B + I is singular".into(),
        ));
    }
    let inv = Mat2::new(shifted.0[3], -shifted.0[1], -shifted.0[2], shifted.0[0]).scale(1.0 / det);
    schur(v, a, &c, inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tmsv_vacuum_and_two() {
        let v = tmsv_cm(1.0).unwrap();
        assert_eq!(v.matrix(), &DMatrix::identity(4, 4));
        let v = tmsv_cm(2.0).unwrap();
        assert_eq!(v.block(0, 0), Mat2::diag(2.0, 2.0));
        assert_relative_eq!(v.block(0, 1).get(0, 0), 3f64.sqrt());
        assert_relative_eq!(v.block(1, 0).get(1, 1), -(3f64.sqrt()));
    }

    #[test]
    fn tmsv_rejects_subvacuum() {
        assert!(matches!(tmsv_cm(0.99), Err(Error::Domain(_))));
        assert!(tmsv_cm(f64::NAN).is_err());
    }

    #[test]
    fn tmsv_is_pure() {
        for w in [1.0, 1.5, 5.0, 1e3] {
            let s = symplectic_spectrum(&tmsv_cm(w).unwrap()).unwrap();
            for nu in s.values() {
                assert!((nu - 1.0).abs() < 1e-9, "omega {w}: {nu}");
            }
        }
    }

    #[test]
    fn thermal_spectra() {
        let s = symplectic_spectrum(&CovMatrix::diagonal(&[3.0, 3.0]).unwrap()).unwrap();
        assert_relative_eq!(s.values()[0], 3.0);
        let s = symplectic_spectrum(&CovMatrix::diagonal(&[2.0, 2.0, 5.0, 5.0]).unwrap()).unwrap();
        assert_relative_eq!(s.values()[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(s.values()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_nonsymmetric_and_bad_shape() {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 1)] = 0.5;
        assert!(matches!(CovMatrix::new(m), Err(Error::Contract(_))));
        assert!(CovMatrix::new(DMatrix::identity(3, 3)).is_err());
        assert!(CovMatrix::new(DMatrix::identity(8, 8)).is_err());
    }

    #[test]
    fn unphysical_state_is_rejected() {
        let m = DMatrix::from_diagonal_element(2, 2, 0.5);
        assert!(matches!(CovMatrix::state(m), Err(Error::Domain(_))));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_h(1.0).unwrap(), 0.0);
        assert_relative_eq!(entropy_h(3.0).unwrap(), 2.0, epsilon = 1e-14);
        // 40-digit evaluation of the defining expression
        assert_relative_eq!(
            entropy_h(2f64.sqrt()).unwrap(),
            0.798_247_926_614_287_8,
            epsilon = 1e-14
        );
        assert!(entropy_h(0.5).is_err());
        // inside the snapping band
        assert_eq!(entropy_h(1.0 - 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn entropy_branches_agree() {
        for x in [2.999_999, 3.0, 3.000_001] {
            let a = 0.5 * (x + 1.0);
            let b = 0.5 * (x - 1.0);
            let direct = a * f64::log2(a) - b * f64::log2(b);
            assert_relative_eq!(entropy_h(x).unwrap(), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn holevo_trivial_cases() {
        let pure = SympSpectrum::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(holevo_from_spectra(&pure, &[pure.clone()], &[1.0]).unwrap(), 0.0);
        let thermal = SympSpectrum::new(vec![3.0]).unwrap();
        assert_eq!(
            holevo_from_spectra(&thermal, &[thermal.clone()], &[1.0]).unwrap(),
            0.0
        );
        let err = holevo_from_spectra(&thermal, &[thermal.clone(), thermal.clone()], &[0.5, 0.6]);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn homodyne_on_tmsv() {
        for w in [1.5, 2.0, 10.0] {
            let v = tmsv_cm(w).unwrap();
            let c = condition_on_homodyne(&v, 1, Quadrature::Q).unwrap();
            assert_eq!(c.modes(), 1);
            // hand Schur complement: q -> w - (w^2-1)/w = 1/w, p unchanged
            assert_relative_eq!(c.block(0, 0).get(0, 0), 1.0 / w, epsilon = 1e-12);
            assert_relative_eq!(c.block(0, 0).get(1, 1), w, epsilon = 1e-12);
        }
    }

    #[test]
    fn heterodyne_on_tmsv() {
        for w in [1.5, 2.0, 10.0] {
            let v = tmsv_cm(w).unwrap();
            let c = condition_on_heterodyne(&v, 1).unwrap();
            // w - (w^2 - 1)/(w + 1) = 1: the remaining mode collapses to a coherent state
            let expected = w - (w * w - 1.0) / (w + 1.0);
            assert_relative_eq!(expected, 1.0, epsilon = 1e-12);
            assert_relative_eq!(c.block(0, 0).get(0, 0), expected, epsilon = 1e-12);
            assert_relative_eq!(c.block(0, 0).get(1, 1), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_conditioning_is_trivial() {
        let v = CovMatrix::diagonal(&[2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let hom = condition_on_homodyne(&v, 0, Quadrature::P).unwrap();
        let het = condition_on_heterodyne(&v, 0).unwrap();
        let expected = CovMatrix::diagonal(&[4.0, 5.0, 6.0, 7.0]).unwrap();
        assert_eq!(hom, expected);
        assert_eq!(het, expected);
    }

    #[test]
    fn zero_variance_measurement_is_degenerate() {
        let v = CovMatrix::diagonal(&[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            condition_on_homodyne(&v, 0, Quadrature::Q),
            Err(Error::DegenerateMeasurement(_))
        ));
    }

    #[test]
    fn mat2_algebra() {
        assert_eq!(Mat2::Z * Mat2::Z, Mat2::IDENTITY);
        assert_eq!((Mat2::IDENTITY + Mat2::Z).scale(0.5), Mat2::PROJ_Q);
        assert_eq!((Mat2::IDENTITY - Mat2::Z).scale(0.5), Mat2::PROJ_P);
        assert_eq!(Mat2::PROJ_Q.rank(1e-12), 1);
        assert_eq!(Mat2::new(1.0, 2.0, 3.0, 4.0).transpose(), Mat2::new(1.0, 3.0, 2.0, 4.0));
    }
}

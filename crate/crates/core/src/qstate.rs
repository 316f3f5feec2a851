//! Dense complex-matrix layer: operators, density matrices, unitaries,
//! projectors, spectral decomposition, tensor products and partial traces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::checked_pow;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Default cap on operator dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Numerical tolerances used when validating inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
    pub unitary: f64,
    pub orth: f64,
    pub norm: f64,
    /// Eigenvalues closer than this are treated as one degenerate cluster.
    pub degeneracy: f64,
    /// Populations below this are flagged when postselected on.
    pub pop_cutoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-9,
            trace: 1e-9,
            psd: 1e-9,
            unitary: 1e-9,
            orth: 1e-9,
            norm: 1e-9,
            degeneracy: 1e-9,
            pop_cutoff: 1e-14,
        }
    }
}

impl Tolerances {
    /// Sets every validation tolerance (not the degeneracy or population cutoffs) to `tol`.
    pub fn uniform(tol: f64) -> Self {
        Self {
            herm: tol,
            trace: tol,
            psd: tol,
            unitary: tol,
            orth: tol,
            norm: tol,
            ..Self::default()
        }
    }
}

/// Square dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    m: DMatrix<C64>,
}

impl ComplexOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Ok(Self {
            m: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }

    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                what: "row-major entries",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self {
            m: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            m: DMatrix::from_fn(n, n, |i, j| if i == j { C64::from(values[i]) } else { ZERO }),
        }
    }

    /// |v⟩⟨w|
    pub fn outer(v: &DVector<C64>, w: &DVector<C64>) -> Self {
        Self { m: v * w.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn row_major(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n * n).map(|k| self.m[(k / n, k % n)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self { m: &self.m * &rhs.m }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { m: &self.m + &rhs.m }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { m: &self.m - &rhs.m }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { m: &self.m * factor }
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.m * v
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Tr[self · rhs] without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.m[(i, k)] * rhs.m[(k, i)];
            }
        }
        acc
    }

    /// Largest absolute entry of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.m
            .iter()
            .zip(rhs.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖M − M†‖ in the max-entry norm.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        Self {
            m: (&self.m + self.m.adjoint()) * C64::from(0.5),
        }
    }

    /// ‖M·M† − I‖ in the max-entry norm.
    pub fn unitarity_defect(&self) -> f64 {
        let p = &self.m * self.m.adjoint();
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .hermitian_part()
            .m
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }
}

impl Serialize for ComplexOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = (0..n)
            .map(|i| (0..n).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexOperator::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A validated density matrix with its measured defects.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: ComplexOperator,
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

impl DensityMatrix {
    pub fn op(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Checks Hermiticity, unit trace and positivity; the stored operator is the
/// Hermitian part of the input.
pub fn validate_density(matrix: &ComplexOperator, tol: &Tolerances) -> Result<DensityMatrix> {
    let hermiticity_defect = matrix.hermiticity_defect();
    if hermiticity_defect > tol.herm {
        return Err(Error::NotHermitian {
            defect: hermiticity_defect,
            tol: tol.herm,
        });
    }
    let op = matrix.hermitian_part();
    let trace_defect = (op.trace() - ONE).norm();
    if trace_defect > tol.trace {
        return Err(Error::TraceNotOne {
            defect: trace_defect,
            tol: tol.trace,
        });
    }
    let min_eigenvalue = op.min_hermitian_eigenvalue();
    if min_eigenvalue < -tol.psd {
        return Err(Error::NotPositive {
            min_eigenvalue,
            tol: tol.psd,
        });
    }
    Ok(DensityMatrix {
        op,
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
    })
}

/// A validated unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    op: ComplexOperator,
    pub unitarity_defect: f64,
}

impl Unitary {
    pub fn new(op: ComplexOperator, tol: &Tolerances) -> Result<Self> {
        let unitarity_defect = op.unitarity_defect();
        if unitarity_defect > tol.unitary {
            return Err(Error::NotUnitary {
                defect: unitarity_defect,
                tol: tol.unitary,
            });
        }
        Ok(Self {
            op,
            unitarity_defect,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            op: ComplexOperator::identity(dim),
            unitarity_defect: 0.0,
        }
    }

    pub fn op(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// self · rhs
    pub fn compose(&self, rhs: &Unitary, tol: &Tolerances) -> Result<Unitary> {
        Unitary::new(self.op.mul(&rhs.op), tol)
    }
}

/// Populations and eigenvectors of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Non-increasing.
    pub populations: Vec<f64>,
    pub eigenvectors: Vec<DVector<C64>>,
    pub degeneracy_flag: bool,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    /// Σ_s P_s |s⟩⟨s|
    pub fn reconstruct(&self) -> ComplexOperator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (p, v) in self.populations.iter().zip(&self.eigenvectors) {
            m += v * v.adjoint() * C64::from(*p);
        }
        ComplexOperator { m }
    }

    /// max |⟨s|s'⟩ − δ|
    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(&self.eigenvectors)
    }
}

pub(crate) fn orthonormality_defect(vectors: &[DVector<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((a.dotc(b) - target).norm());
        }
    }
    worst
}

/// Rotates `v` so its largest-magnitude entry (lowest index on ties) is real positive.
fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let z = v[pivot];
    let phase = z.conj() / z.norm();
    v.iter_mut().for_each(|c| *c *= phase);
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
}

/// Canonical orthonormal basis of the span of `cluster`: project computational
/// basis vectors onto the span in index order and Gram–Schmidt them.
fn canonical_cluster_basis(cluster: &[DVector<C64>]) -> Vec<DVector<C64>> {
    let n = cluster[0].len();
    let k = cluster.len();
    let mut out: Vec<DVector<C64>> = Vec::with_capacity(k);
    for j in 0..n {
        if out.len() == k {
            break;
        }
        // P e_j = Σ_c |c⟩⟨c|e_j⟩
        let mut v = DVector::<C64>::zeros(n);
        for c in cluster {
            v += c * c[j].conj();
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for u in &out {
                let overlap = u.dotc(&v);
                v -= u * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / C64::from(norm));
        }
    }
    out
}

/// Eigendecomposition with populations in non-increasing order, degenerate
/// clusters replaced by the canonical basis, and fixed eigenvector phases.
pub fn spectral_decompose(
    rho: &DensityMatrix,
    degeneracy_tol: f64,
) -> Result<SpectralDecomposition> {
    let n = rho.dim();
    let eig = rho.op().matrix().clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite())
        || eig.eigenvectors.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::DecompositionFailed(
            "non-finite eigen-decomposition output".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors: Vec<DVector<C64>> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();

    let mut populations = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut degeneracy_flag = false;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] < degeneracy_tol {
            end += 1;
        }
        if end - start == 1 {
            populations.push(values[start]);
            eigenvectors.push(vectors[start].clone());
        } else {
            degeneracy_flag = true;
            let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
            let basis = canonical_cluster_basis(&vectors[start..end]);
            if basis.len() != end - start {
                return Err(Error::DecompositionFailed(format!(
                    "canonical basis for a {}-fold cluster has {} vectors",
                    end - start,
                    basis.len()
                )));
            }
            populations.extend(std::iter::repeat_n(mean, end - start));
            eigenvectors.extend(basis);
        }
        start = end;
    }
    for v in &mut eigenvectors {
        fix_phase(v);
    }
    // Round-off can push a zero eigenvalue slightly negative.
    for p in &mut populations {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    Ok(SpectralDecomposition {
        populations,
        eigenvectors,
        degeneracy_flag,
    })
}

/// Kronecker product in list order.
pub fn tensor(ops: &[&ComplexOperator], dim_cap: usize) -> Result<ComplexOperator> {
    let (first, rest) = ops.split_first().ok_or(Error::Empty)?;
    let dim = ops
        .iter()
        .fold(1u128, |acc, op| acc.saturating_mul(op.dim() as u128));
    if dim > dim_cap as u128 {
        return Err(Error::DimensionOverflow { dim, cap: dim_cap });
    }
    let mut m = first.m.clone();
    for op in rest {
        m = m.kronecker(&op.m);
    }
    Ok(ComplexOperator { m })
}

/// `op` tensored with itself `copies` times.
pub fn tensor_power(op: &ComplexOperator, copies: usize, dim_cap: usize) -> Result<ComplexOperator> {
    let refs = vec![op; copies];
    tensor(&refs, dim_cap)
}

/// Kronecker product of vectors in list order.
pub fn tensor_vectors(vs: &[&DVector<C64>]) -> DVector<C64> {
    let mut out = DVector::from_element(1, ONE);
    for v in vs {
        out = out.kronecker(*v);
    }
    out
}

/// Checks that `copies` copies of a `dim`-level system fit under `cap`.
pub fn check_copy_dim(dim: usize, copies: usize, cap: usize) -> Result<usize> {
    let total = checked_pow(dim, copies);
    if total > cap as u128 {
        return Err(Error::DimensionOverflow {
            dim: total,
            cap,
        });
    }
    Ok(total as usize)
}

/// Reduced operator on subsystem `keep` of a system factored as `dims`.
pub fn partial_trace(op: &ComplexOperator, dims: &[usize], keep: usize) -> Result<ComplexOperator> {
    let bad = || Error::BadFactorization {
        dims: dims.to_vec(),
        dim: op.dim(),
        keep,
    };
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    if keep >= dims.len() || dims.contains(&0) || total != Some(op.dim()) {
        return Err(bad());
    }
    let d_keep = dims[keep];
    let left: usize = dims[..keep].iter().product();
    let right: usize = dims[keep + 1..].iter().product();
    let mut m = DMatrix::zeros(d_keep, d_keep);
    for i in 0..d_keep {
        for j in 0..d_keep {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    let row = (l * d_keep + i) * right + r;
                    let col = (l * d_keep + j) * right + r;
                    acc += op.m[(row, col)];
                }
            }
            m[(i, j)] = acc;
        }
    }
    Ok(ComplexOperator { m })
}

/// |v⟩⟨v| for a unit vector.
pub fn projector(v: &DVector<C64>, tol_norm: f64) -> Result<ComplexOperator> {
    let norm = v.norm();
    if (norm - 1.0).abs() > tol_norm {
        return Err(Error::NotNormalized {
            norm,
            tol: tol_norm,
        });
    }
    Ok(ComplexOperator::outer(v, v))
}

/// Computational basis vector e_k of length n.
pub fn basis_vector(n: usize, k: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n);
    v[k] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_unit_vector};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn maximally_mixed_is_valid_with_zero_defects() {
        let rho = validate_density(&ComplexOperator::diagonal(&[0.5, 0.5]), &tol()).unwrap();
        assert_eq!(rho.hermiticity_defect, 0.0);
        assert_eq!(rho.trace_defect, 0.0);
        assert_eq!(rho.min_eigenvalue, 0.5);
    }

    #[test]
    fn diagonal_state_is_valid() {
        assert!(validate_density(&ComplexOperator::diagonal(&[0.7, 0.3]), &tol()).is_ok());
    }

    #[test]
    fn negative_population_is_rejected() {
        let err = validate_density(&ComplexOperator::diagonal(&[1.1, -0.1]), &tol()).unwrap_err();
        match err {
            Error::NotPositive { min_eigenvalue, tol } => {
                assert_abs_diff_eq!(min_eigenvalue, -0.1, epsilon = 1e-12);
                assert_eq!(tol, 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_and_bad_trace_are_rejected() {
        let m = ComplexOperator::from_rows(&[vec![c(0.5), c(0.1)], vec![c(0.0), c(0.5)]]).unwrap();
        assert!(matches!(validate_density(&m, &tol()), Err(Error::NotHermitian { .. })));
        let m = ComplexOperator::diagonal(&[0.5, 0.6]);
        assert!(matches!(validate_density(&m, &tol()), Err(Error::TraceNotOne { .. })));
    }

    #[test]
    fn non_square_rows_are_rejected() {
        let err = ComplexOperator::from_rows(&[vec![c(1.0), c(0.0)], vec![c(0.0)]]).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
    }

    #[test]
    fn decompose_diagonal() {
        let rho = validate_density(&ComplexOperator::diagonal(&[0.3, 0.7]), &tol()).unwrap();
        let sd = spectral_decompose(&rho, 1e-9).unwrap();
        assert_abs_diff_eq!(sd.populations[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(sd.populations[1], 0.3, epsilon = 1e-15);
        assert_eq!(sd.eigenvectors[0], basis_vector(2, 1));
        assert_eq!(sd.eigenvectors[1], basis_vector(2, 0));
        assert!(!sd.degeneracy_flag);
    }

    #[test]
    fn degenerate_cluster_uses_computational_basis() {
        let rho = validate_density(&ComplexOperator::diagonal(&[0.5, 0.5]), &tol()).unwrap();
        let sd = spectral_decompose(&rho, 1e-9).unwrap();
        assert_eq!(sd.populations, vec![0.5, 0.5]);
        assert_eq!(sd.eigenvectors, vec![basis_vector(2, 0), basis_vector(2, 1)]);
        assert!(sd.degeneracy_flag);
    }

    #[test]
    fn degenerate_cluster_in_rotated_subspace() {
        // diag(0.4, 0.4, 0.2) rotated in the (1,2) plane keeps a 2-fold cluster
        // spanned by e_0 and (e_1 + e_2)/sqrt(2).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = ComplexOperator::from_rows(&[
            vec![c(1.0), c(0.0), c(0.0)],
            vec![c(0.0), c(s), c(-s)],
            vec![c(0.0), c(s), c(s)],
        ])
        .unwrap();
        let d = ComplexOperator::diagonal(&[0.4, 0.4, 0.2]);
        let rho = validate_density(&u.mul(&d).mul(&u.adjoint()), &tol()).unwrap();
        let sd = spectral_decompose(&rho, 1e-9).unwrap();
        assert!(sd.degeneracy_flag);
        assert_abs_diff_eq!(sd.populations[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.populations[2], 0.2, epsilon = 1e-12);
        let e0 = &sd.eigenvectors[0];
        let e1 = &sd.eigenvectors[1];
        assert_abs_diff_eq!((e0 - basis_vector(3, 0)).norm(), 0.0, epsilon = 1e-12);
        let expect = DVector::from_vec(vec![c(0.0), c(s), c(s)]);
        assert_abs_diff_eq!((e1 - expect).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_qubit_populations() {
        // e^{-σz}/Z at β g0 = 1: populations e^{±1}/(2 cosh 1).
        let z = 2.0 * 1f64.cosh();
        let rho = validate_density(
            &ComplexOperator::diagonal(&[(-1f64).exp() / z, 1f64.exp() / z]),
            &tol(),
        )
        .unwrap();
        let sd = spectral_decompose(&rho, 1e-9).unwrap();
        assert_abs_diff_eq!(sd.populations[0], 1f64.exp() / z, epsilon = 1e-14);
        assert_abs_diff_eq!(sd.populations[1], (-1f64).exp() / z, epsilon = 1e-14);
        assert_abs_diff_eq!(sd.populations[0], 0.8808, epsilon = 1e-4);
    }

    #[test]
    fn phases_are_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let rho = random_density(d, &mut rng);
            let sd = spectral_decompose(&rho, 1e-9).unwrap();
            for v in &sd.eigenvectors {
                let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap();
                assert!(v[pivot].im == 0.0 && v[pivot].re > 0.0);
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let i2 = ComplexOperator::identity(2);
        assert_eq!(tensor(&[&i2, &i2], 4096).unwrap(), ComplexOperator::identity(4));
        let ab = tensor(
            &[&ComplexOperator::diagonal(&[2.0, 3.0]), &ComplexOperator::diagonal(&[5.0, 7.0])],
            4096,
        )
        .unwrap();
        assert_eq!(ab, ComplexOperator::diagonal(&[10.0, 14.0, 15.0, 21.0]));
        assert_eq!(tensor(&[&i2, &i2, &i2], 4096).unwrap().dim(), 8);
        assert!(matches!(
            tensor(&[&i2, &i2, &i2], 4),
            Err(Error::DimensionOverflow { dim: 8, cap: 4 })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(2, &mut rng);
        let sigma = random_density(3, &mut rng);
        let joint = tensor(&[rho.op(), sigma.op()], 4096).unwrap();
        let reduced = partial_trace(&joint, &[2, 3], 0).unwrap();
        assert!(reduced.max_abs_diff(rho.op()) < 1e-14);
        let reduced = partial_trace(&joint, &[2, 3], 1).unwrap();
        assert!(reduced.max_abs_diff(sigma.op()) < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        let bell = projector(&bell, 1e-9).unwrap();
        let reduced = partial_trace(&bell, &[2, 2], 0).unwrap();
        assert!(reduced.max_abs_diff(&ComplexOperator::diagonal(&[0.5, 0.5])) < 1e-15);

        assert!(matches!(
            partial_trace(&bell, &[3, 2], 0),
            Err(Error::BadFactorization { .. })
        ));
        assert!(matches!(
            partial_trace(&bell, &[2, 2], 2),
            Err(Error::BadFactorization { .. })
        ));
    }

    #[test]
    fn projector_examples() {
        assert_eq!(
            projector(&basis_vector(2, 0), 1e-9).unwrap(),
            ComplexOperator::diagonal(&[1.0, 0.0])
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = projector(&DVector::from_vec(vec![c(s), c(s)]), 1e-9).unwrap();
        for z in plus.row_major() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_eq!(z.im, 0.0);
        }
        let unnormalized = DVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(matches!(
            projector(&unnormalized, 1e-9),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn unitary_validation() {
        assert!(Unitary::new(ComplexOperator::identity(3), &tol()).is_ok());
        assert!(matches!(
            Unitary::new(ComplexOperator::diagonal(&[1.0, 0.5]), &tol()),
            Err(Error::NotUnitary { .. })
        ));
    }

    fn arb_operator() -> impl Strategy<Value = ComplexOperator> {
        (1usize..5).prop_flat_map(|n| {
            proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), n * n).prop_map(move |v| {
                let entries: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
                ComplexOperator::from_row_major(n, &entries).unwrap()
            })
        })
    }

    fn arb_integer_operator() -> impl Strategy<Value = ComplexOperator> {
        (1usize..4).prop_flat_map(|n| {
            proptest::collection::vec((-50i32..50, -50i32..50), n * n).prop_map(move |v| {
                let entries: Vec<C64> = v
                    .into_iter()
                    .map(|(re, im)| C64::new(re as f64, im as f64))
                    .collect();
                ComplexOperator::from_row_major(n, &entries).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn serialization_round_trips(op in arb_operator()) {
            let text = serde_json::to_string(&op).unwrap();
            let back: ComplexOperator = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, op);
        }

        // Integer entries keep every product exact, so the two groupings must
        // agree bit for bit.
        #[test]
        fn tensor_is_associative(a in arb_integer_operator(), b in arb_integer_operator(), c in arb_integer_operator()) {
            let left = tensor(&[&tensor(&[&a, &b], 4096).unwrap(), &c], 4096).unwrap();
            let right = tensor(&[&a, &tensor(&[&b, &c], 4096).unwrap()], 4096).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn partial_trace_of_product(a in arb_operator(), b in arb_operator()) {
            let joint = tensor(&[&a, &b], 4096).unwrap();
            let reduced = partial_trace(&joint, &[a.dim(), b.dim()], 0).unwrap();
            let expect = a.scale(b.trace());
            let scale = 1.0 + expect.max_abs();
            prop_assert!(reduced.max_abs_diff(&expect) <= 1e-12 * scale);
        }

        #[test]
        fn reconstruction_and_determinism(seed in any::<u64>(), d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(d, &mut rng);
            let sd = spectral_decompose(&rho, 1e-9).unwrap();
            prop_assert!(sd.reconstruct().max_abs_diff(rho.op()) < 1e-10);
            prop_assert!(sd.orthonormality_defect() < 1e-10);
            prop_assert!((sd.populations.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(sd.populations.windows(2).all(|w| w[0] >= w[1]));
            let again = spectral_decompose(&rho, 1e-9).unwrap();
            prop_assert_eq!(sd, again);
        }

        #[test]
        fn projector_is_idempotent(seed in any::<u64>(), d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_unit_vector(d, &mut rng);
            let p = projector(&v, 1e-9).unwrap();
            prop_assert!(p.mul(&p).max_abs_diff(&p) < 1e-12);
            prop_assert!(p.hermiticity_defect() < 1e-15);
        }
    }
}

//! Scenarios and exact path distributions of the dynamic Bayesian network:
//! P(x_0,…,x_N) = Σ_s P_s Π_n |⟨x_n|U_n|s⟩|², plus the two-projective-measurement
//! baseline.

use std::fmt;

use nalgebra::DVector;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numeric::{checked_pow, compensated_sum, CompensatedSum};
use crate::qstate::{
    orthonormality_defect, spectral_decompose, DensityMatrix, SpectralDecomposition, Tolerances,
    Unitary, C64, DEFAULT_DIM_CAP,
};

/// Default cap on the number of enumerated paths.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Tolerances, caps and execution policy carried by a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol: Tolerances,
    pub dim_cap: usize,
    pub enumeration_cap: usize,
    /// Accept a non-identity unitary at the first time point.
    pub allow_initial_unitary: bool,
    pub execution: Execution,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            dim_cap: DEFAULT_DIM_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            allow_initial_unitary: false,
            execution: Execution::default(),
        }
    }
}

/// A measurement time: cumulative evolution U_t and a complete local basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePoint {
    pub label: String,
    unitary: Unitary,
    basis: Vec<DVector<C64>>,
}

impl TimePoint {
    pub fn new(
        label: impl Into<String>,
        unitary: Unitary,
        basis: Vec<DVector<C64>>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let d = unitary.dim();
        if basis.len() != d {
            return Err(Error::DimensionMismatch {
                what: "basis size",
                expected: d,
                found: basis.len(),
            });
        }
        if let Some(v) = basis.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch {
                what: "basis vector length",
                expected: d,
                found: v.len(),
            });
        }
        let defect = orthonormality_defect(&basis);
        if defect > tol.orth {
            return Err(Error::NotOrthonormal {
                defect,
                tol: tol.orth,
            });
        }
        Ok(Self {
            label: label.into(),
            unitary,
            basis,
        })
    }

    pub fn unitary(&self) -> &Unitary {
        &self.unitary
    }

    pub fn basis(&self) -> &[DVector<C64>] {
        &self.basis
    }
}

/// Computational basis of dimension `d`.
pub fn computational_basis(d: usize) -> Vec<DVector<C64>> {
    (0..d).map(|k| crate::qstate::basis_vector(d, k)).collect()
}

/// A full problem statement: state, decomposition and measurement times.
#[derive(Debug, Clone)]
pub struct Scenario {
    dims: Vec<usize>,
    rho: DensityMatrix,
    times: Vec<TimePoint>,
    decomposition: SpectralDecomposition,
    settings: Settings,
    /// conditionals[t][x * d + s] = |⟨x_t|U_t|s⟩|²
    conditionals: Vec<Vec<f64>>,
    fingerprint: String,
}

impl Scenario {
    pub fn new(
        dims: Vec<usize>,
        rho: DensityMatrix,
        times: Vec<TimePoint>,
        settings: Settings,
    ) -> Result<Self> {
        let d = rho.dim();
        let product = dims.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
        if dims.is_empty() || product != Some(d) {
            return Err(Error::DimensionMismatch {
                what: "product of subsystem dims",
                expected: d,
                found: product.unwrap_or(usize::MAX),
            });
        }
        if d > settings.dim_cap {
            return Err(Error::DimensionOverflow {
                dim: d as u128,
                cap: settings.dim_cap,
            });
        }
        let first = times.first().ok_or(Error::NoTimePoints)?;
        for t in &times {
            if t.unitary.dim() != d {
                return Err(Error::DimensionMismatch {
                    what: "time point dimension",
                    expected: d,
                    found: t.unitary.dim(),
                });
            }
        }
        if !settings.allow_initial_unitary {
            let defect = first
                .unitary
                .op()
                .max_abs_diff(&crate::qstate::ComplexOperator::identity(d));
            if defect > settings.tol.unitary {
                return Err(Error::InitialUnitaryNotIdentity { defect });
            }
        }
        let decomposition = spectral_decompose(&rho, settings.tol.degeneracy)?;
        let conditionals = times
            .iter()
            .map(|t| {
                let evolved: Vec<DVector<C64>> = decomposition
                    .eigenvectors
                    .iter()
                    .map(|s| t.unitary.op().apply(s))
                    .collect();
                let mut table = vec![0.0; d * d];
                for (x, xv) in t.basis.iter().enumerate() {
                    for (s, sv) in evolved.iter().enumerate() {
                        table[x * d + s] = xv.dotc(sv).norm_sqr();
                    }
                }
                table
            })
            .collect();
        let fingerprint = fingerprint(&dims, &rho, &times);
        Ok(Self {
            dims,
            rho,
            times,
            decomposition,
            settings,
            conditionals,
            fingerprint,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn times(&self) -> &[TimePoint] {
        &self.times
    }

    /// N + 1
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn execution(&self) -> Execution {
        self.settings.execution
    }

    /// Same scenario with a different execution policy.
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.settings.execution = execution;
        self
    }

    /// Hex SHA-256 over dims, state, unitaries and bases.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Number of paths, d^(N+1).
    pub fn path_count(&self) -> u128 {
        checked_pow(self.dim(), self.n_times())
    }

    pub(crate) fn conditional_unchecked(&self, s: usize, t: usize, x: usize) -> f64 {
        self.conditionals[t][x * self.dim() + s]
    }

    pub(crate) fn check_enumeration(&self) -> Result<usize> {
        let paths = self.path_count();
        if paths > self.settings.enumeration_cap as u128 {
            return Err(Error::EnumerationTooLarge {
                paths,
                cap: self.settings.enumeration_cap,
            });
        }
        Ok(paths as usize)
    }

    pub fn check_path(&self, path: &Path) -> Result<()> {
        if path.0.len() != self.n_times() {
            return Err(Error::DimensionMismatch {
                what: "path length",
                expected: self.n_times(),
                found: path.0.len(),
            });
        }
        let d = self.dim();
        if let Some(&bad) = path.0.iter().find(|&&x| x >= d) {
            return Err(Error::IndexOutOfRange {
                what: "outcome",
                index: bad,
                bound: d,
            });
        }
        Ok(())
    }
}

fn fingerprint(dims: &[usize], rho: &DensityMatrix, times: &[TimePoint]) -> String {
    let mut h = Sha256::new();
    let mut put = |z: &C64| {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    };
    rho.op().row_major().iter().for_each(&mut put);
    for t in times {
        t.unitary.op().row_major().iter().for_each(&mut put);
        t.basis.iter().flat_map(|v| v.iter()).for_each(&mut put);
    }
    for d in dims {
        h.update((*d as u64).to_le_bytes());
    }
    h.update((times.len() as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Outcome indices (x_0,…,x_N), one per time point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<usize>);

impl Path {
    /// Lexicographic rank with x_0 most significant.
    pub fn index(&self, dim: usize) -> usize {
        self.0.iter().fold(0, |acc, &x| acc * dim + x)
    }

    pub fn from_index(mut index: usize, dim: usize, len: usize) -> Path {
        let mut out = vec![0; len];
        for slot in out.iter_mut().rev() {
            *slot = index % dim;
            index /= dim;
        }
        Path(out)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Which route produced a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactEq1,
    PostselectExact,
    Povm,
    Broadcast,
    Sampled,
    Tpm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactEq1 => "exact-eq1",
            Method::PostselectExact => "postselect-exact",
            Method::Povm => "povm",
            Method::Broadcast => "broadcast",
            Method::Sampled => "sampled",
            Method::Tpm => "tpm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Complete table of path probabilities in lexicographic path order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDistribution {
    pub fingerprint: String,
    pub method: Method,
    dim: usize,
    n_times: usize,
    probs: Vec<f64>,
    pub total: f64,
}

impl PathDistribution {
    pub fn new(
        fingerprint: String,
        method: Method,
        dim: usize,
        n_times: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let expected = checked_pow(dim, n_times);
        if probs.len() as u128 != expected {
            return Err(Error::DimensionMismatch {
                what: "distribution entries",
                expected: expected.min(usize::MAX as u128) as usize,
                found: probs.len(),
            });
        }
        let total = compensated_sum(probs.iter().copied());
        Ok(Self {
            fingerprint,
            method,
            dim,
            n_times,
            probs,
            total,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Raw values in lexicographic path order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, path: &Path) -> Option<f64> {
        if path.0.len() != self.n_times || path.0.iter().any(|&x| x >= self.dim) {
            return None;
        }
        Some(self.probs[path.index(self.dim)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Path, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (Path::from_index(k, self.dim, self.n_times), p))
    }

    /// Smallest raw entry.
    pub fn min_entry(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest entrywise deviation from `other` (infinite on shape mismatch).
    pub fn max_abs_diff(&self, other: &PathDistribution) -> f64 {
        if self.dim != other.dim || self.n_times != other.n_times {
            return f64::INFINITY;
        }
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Presentation value: tiny negatives from round-off are shown as zero.
pub fn clamp_for_report(p: f64) -> f64 {
    if p < 0.0 {
        0.0
    } else {
        p
    }
}

/// p(x_t | s_t) = |⟨x_t|U_t|s⟩|²
pub fn conditional_probability(
    scenario: &Scenario,
    s_index: usize,
    time_index: usize,
    x_index: usize,
) -> Result<f64> {
    let d = scenario.dim();
    if s_index >= d {
        return Err(Error::IndexOutOfRange {
            what: "eigenstate",
            index: s_index,
            bound: d,
        });
    }
    if time_index >= scenario.n_times() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: time_index,
            bound: scenario.n_times(),
        });
    }
    if x_index >= d {
        return Err(Error::IndexOutOfRange {
            what: "outcome",
            index: x_index,
            bound: d,
        });
    }
    Ok(scenario.conditional_unchecked(s_index, time_index, x_index))
}

fn path_probability_unchecked(scenario: &Scenario, outcomes: &[usize]) -> f64 {
    let pops = &scenario.decomposition().populations;
    let mut acc = CompensatedSum::new();
    for (s, &p) in pops.iter().enumerate() {
        let weight = outcomes
            .iter()
            .enumerate()
            .fold(p, |w, (t, &x)| w * scenario.conditional_unchecked(s, t, x));
        acc.add(weight);
    }
    acc.value()
}

/// Σ_s P_s Π_n p(x_n|s_n) for one path.
pub fn path_probability(scenario: &Scenario, path: &Path) -> Result<f64> {
    scenario.check_path(path)?;
    Ok(path_probability_unchecked(scenario, &path.0))
}

/// Every path probability, in lexicographic order.
pub fn joint_distribution(scenario: &Scenario) -> Result<PathDistribution> {
    let paths = scenario.check_enumeration()?;
    let (d, n) = (scenario.dim(), scenario.n_times());
    let probs = scenario.execution().map_indexed(paths, |k| {
        let path = Path::from_index(k, d, n);
        path_probability_unchecked(scenario, &path.0)
    });
    PathDistribution::new(
        scenario.fingerprint().to_string(),
        Method::ExactEq1,
        d,
        n,
        probs,
    )
}

/// Sums out every time slot not in `keep_times`.
pub fn marginal(dist: &PathDistribution, keep_times: &[usize]) -> Result<PathDistribution> {
    if keep_times.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let mut keep = keep_times.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&t| t >= dist.n_times) {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: bad,
            bound: dist.n_times,
        });
    }
    let d = dist.dim;
    let out_len = checked_pow(d, keep.len()) as usize;
    let mut acc = vec![CompensatedSum::new(); out_len];
    for (k, &p) in dist.probs.iter().enumerate() {
        let path = Path::from_index(k, d, dist.n_times);
        let reduced = keep.iter().fold(0, |a, &t| a * d + path.0[t]);
        acc[reduced].add(p);
    }
    PathDistribution::new(
        dist.fingerprint.clone(),
        dist.method,
        d,
        keep.len(),
        acc.iter().map(CompensatedSum::value).collect(),
    )
}

/// Two-projective-measurement distribution
/// P(x_0, x_1) = ⟨x_0|ρ_0|x_0⟩ |⟨x_1|U_1 U_0†|x_0⟩|², with ρ_0 = U_0 ρ U_0†.
pub fn tpm_distribution(scenario: &Scenario) -> Result<PathDistribution> {
    if scenario.n_times() != 2 {
        return Err(Error::WrongTimeCount {
            expected: 2,
            found: scenario.n_times(),
        });
    }
    let d = scenario.dim();
    let t0 = &scenario.times()[0];
    let t1 = &scenario.times()[1];
    let u0 = t0.unitary.op();
    let rho0 = u0.mul(scenario.rho().op()).mul(&u0.adjoint());
    let propagator = t1.unitary.op().mul(&u0.adjoint());
    let mut probs = Vec::with_capacity(d * d);
    for x0 in &t0.basis {
        let initial = x0.dotc(&rho0.apply(x0)).re;
        let moved = propagator.apply(x0);
        for x1 in &t1.basis {
            probs.push(initial * x1.dotc(&moved).norm_sqr());
        }
    }
    PathDistribution::new(scenario.fingerprint().to_string(), Method::Tpm, d, 2, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{validate_density, ComplexOperator};
    use crate::random::random_scenario;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn hadamard() -> Unitary {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexOperator::from_row_major(
            2,
            &[C64::from(s), C64::from(s), C64::from(s), C64::from(-s)],
        )
        .unwrap();
        Unitary::new(h, &Tolerances::default()).unwrap()
    }

    fn two_time(rho: &[f64], u1: Unitary) -> Scenario {
        let tol = Tolerances::default();
        let rho = validate_density(&ComplexOperator::diagonal(rho), &tol).unwrap();
        let times = vec![
            TimePoint::new("t0", Unitary::identity(2), computational_basis(2), &tol).unwrap(),
            TimePoint::new("t1", u1, computational_basis(2), &tol).unwrap(),
        ];
        Scenario::new(vec![2], rho, times, Settings::default()).unwrap()
    }

    #[test]
    fn conditional_examples() {
        let sc = two_time(&[1.0, 0.0], hadamard());
        // eigenvector for population 1 is |0⟩
        assert_eq!(conditional_probability(&sc, 0, 0, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(conditional_probability(&sc, 0, 1, 1).unwrap(), 0.5, epsilon = 1e-15);
        for s in 0..2 {
            for t in 0..2 {
                let total: f64 = (0..2)
                    .map(|x| conditional_probability(&sc, s, t, x).unwrap())
                    .sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
        assert!(matches!(
            conditional_probability(&sc, 2, 0, 0),
            Err(Error::IndexOutOfRange { what: "eigenstate", .. })
        ));
        assert!(matches!(
            conditional_probability(&sc, 0, 2, 0),
            Err(Error::IndexOutOfRange { what: "time", .. })
        ));
    }

    #[test]
    fn pure_state_hadamard_paths() {
        let sc = two_time(&[1.0, 0.0], hadamard());
        let p = |a, b| path_probability(&sc, &Path(vec![a, b])).unwrap();
        assert_abs_diff_eq!(p(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p(0, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p(1, 0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p(1, 1), 0.0, epsilon = 1e-15);
        assert!(matches!(
            path_probability(&sc, &Path(vec![0, 2])),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn maximally_mixed_uses_canonical_basis() {
        let sc = two_time(&[0.5, 0.5], Unitary::identity(2));
        let dist = joint_distribution(&sc).unwrap();
        assert_eq!(dist.probabilities(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_time_reduces_to_born_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 2..=4 {
            let sc = random_scenario(d, 1, Settings::default(), &mut rng);
            let dist = joint_distribution(&sc).unwrap();
            let rho = sc.rho().op();
            for (x, v) in sc.times()[0].basis().iter().enumerate() {
                let born = v.dotc(&rho.apply(v)).re;
                assert_abs_diff_eq!(dist.probabilities()[x], born, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn random_suite_nonnegative_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let d = rng.random_range(2..=4);
            let n = rng.random_range(2..=3);
            let sc = random_scenario(d, n, Settings::default(), &mut rng);
            let dist = joint_distribution(&sc).unwrap();
            assert!(dist.min_entry() >= -1e-12);
            assert!((dist.total - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sc = random_scenario(3, 3, Settings::default(), &mut rng);
        let dist = joint_distribution(&sc).unwrap();
        let first = marginal(&dist, &[0]).unwrap();
        let single = {
            let times = vec![sc.times()[0].clone()];
            let s = Scenario::new(vec![3], sc.rho().clone(), times, Settings::default()).unwrap();
            joint_distribution(&s).unwrap()
        };
        assert!(first.max_abs_diff(&single) < 1e-12);
        for keep in [&[0usize][..], &[1], &[2], &[0, 2], &[1, 2]] {
            let m = marginal(&dist, keep).unwrap();
            assert!((m.total - dist.total).abs() < 1e-12);
        }
        // Oracle: evolve ρ directly, then Born rule in the last basis.
        let last = marginal(&dist, &[2]).unwrap();
        let u = sc.times()[2].unitary().op();
        let evolved = u.mul(sc.rho().op()).mul(&u.adjoint());
        for (x, v) in sc.times()[2].basis().iter().enumerate() {
            let direct = v.dotc(&evolved.apply(v)).re;
            assert_abs_diff_eq!(last.probabilities()[x], direct, epsilon = 1e-10);
        }
        assert!(matches!(marginal(&dist, &[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(marginal(&dist, &[3]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn tpm_examples() {
        let sc = two_time(&[1.0, 0.0], Unitary::identity(2));
        assert_eq!(tpm_distribution(&sc).unwrap().probabilities(), &[1.0, 0.0, 0.0, 0.0]);

        let sc = two_time(&[0.7, 0.3], hadamard());
        let tpm = tpm_distribution(&sc).unwrap();
        let exact = joint_distribution(&sc).unwrap();
        assert!(tpm.max_abs_diff(&exact) < 1e-12);
        assert_eq!(tpm.method, Method::Tpm);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let three = random_scenario(2, 3, Settings::default(), &mut rng);
        assert!(matches!(
            tpm_distribution(&three),
            Err(Error::WrongTimeCount { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let settings = Settings {
            enumeration_cap: 10,
            ..Settings::default()
        };
        let sc = random_scenario(2, 4, settings, &mut rng);
        assert!(matches!(
            joint_distribution(&sc),
            Err(Error::EnumerationTooLarge { paths: 16, cap: 10 })
        ));
    }

    #[test]
    fn scenario_validation() {
        let tol = Tolerances::default();
        let rho = validate_density(&ComplexOperator::diagonal(&[0.5, 0.5]), &tol).unwrap();
        let t = |u: Unitary| TimePoint::new("t", u, computational_basis(2), &tol).unwrap();
        assert!(matches!(
            Scenario::new(vec![2], rho.clone(), vec![], Settings::default()),
            Err(Error::NoTimePoints)
        ));
        assert!(matches!(
            Scenario::new(vec![2], rho.clone(), vec![t(hadamard())], Settings::default()),
            Err(Error::InitialUnitaryNotIdentity { .. })
        ));
        let permissive = Settings {
            allow_initial_unitary: true,
            ..Settings::default()
        };
        assert!(Scenario::new(vec![2], rho.clone(), vec![t(hadamard())], permissive).is_ok());
        assert!(matches!(
            Scenario::new(vec![3], rho.clone(), vec![t(Unitary::identity(2))], Settings::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let skew = vec![
            DVector::from_vec(vec![C64::from(1.0), C64::from(0.0)]),
            DVector::from_vec(vec![C64::from(0.6), C64::from(0.8)]),
        ];
        assert!(matches!(
            TimePoint::new("bad", Unitary::identity(2), skew, &tol),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn execution_policies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sc = random_scenario(3, 3, Settings::default(), &mut rng);
        let par = joint_distribution(&sc.clone().with_execution(Execution::Parallel)).unwrap();
        let seq = joint_distribution(&sc.with_execution(Execution::Sequential)).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn path_index_round_trip() {
        for k in 0..81 {
            let p = Path::from_index(k, 3, 4);
            assert_eq!(p.index(3), k);
        }
        assert_eq!(Path(vec![1, 0, 2]).to_string(), "(1,0,2)");
    }
}

//! Generalized-measurement route: broadcast states, the broadcast Kraus
//! channel, POVM elements J_x = Σ_i E_i† M_x E_i, and work statistics built
//! on the path distribution.

use nalgebra::{DMatrix, DVector};

use crate::bayesnet::{joint_distribution, Method, Path, PathDistribution, Scenario};
use crate::error::{Error, Result};
use crate::numeric::{checked_pow, CompensatedSum};
use crate::protocol::build_measurement_operator;
use crate::qstate::{
    check_copy_dim, tensor_power, tensor_vectors, validate_density, ComplexOperator,
    DensityMatrix, C64,
};
use crate::report::KeyValueReport;

/// Paths per deterministic summation chunk in [`verify_povm`].
const SUM_CHUNK: usize = 64;

/// Σ_s P_s |s⋯s⟩⟨s⋯s| on `copies` copies.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastState {
    pub copies: usize,
    pub state: DensityMatrix,
}

fn broadcast_vectors(scenario: &Scenario, copies: usize) -> Vec<DVector<C64>> {
    scenario
        .decomposition()
        .eigenvectors
        .iter()
        .map(|s| tensor_vectors(&vec![s; copies]))
        .collect()
}

fn check_copies(scenario: &Scenario, copies: usize) -> Result<usize> {
    if copies == 0 {
        return Err(Error::InvalidParameter("copies must be at least 1".into()));
    }
    check_copy_dim(scenario.dim(), copies, scenario.settings().dim_cap)
}

pub fn broadcast_state(scenario: &Scenario, copies: usize) -> Result<BroadcastState> {
    let total = check_copies(scenario, copies)?;
    let mut m = DMatrix::<C64>::zeros(total, total);
    for (v, &p) in broadcast_vectors(scenario, copies)
        .iter()
        .zip(&scenario.decomposition().populations)
    {
        m += v * v.adjoint() * C64::from(p);
    }
    let state = validate_density(&ComplexOperator::from_matrix(m)?, &scenario.settings().tol)?;
    Ok(BroadcastState { copies, state })
}

/// |r, i_1, …, i_N⟩ = |r⟩ ⊗ |i_1⟩ ⊗ ⋯ ⊗ |i_N⟩ in the eigenbasis of ρ.
fn labelled_vector(eig: &[DVector<C64>], first: usize, rest: &[usize]) -> DVector<C64> {
    let mut parts: Vec<&DVector<C64>> = vec![&eig[first]];
    parts.extend(rest.iter().map(|&i| &eig[i]));
    tensor_vectors(&parts)
}

/// Eigenstate labels (i_1,…,i_N) of collective index `k`.
fn collective_labels(k: usize, d: usize, len: usize) -> Vec<usize> {
    Path::from_index(k, d, len).0
}

/// Kraus operators E_i = Σ_r |r⋯r⟩⟨r i_1⋯i_N|, one per collective index
/// i = (i_1,…,i_N) over eigenstate labels, in lexicographic order.
pub fn broadcast_kraus(scenario: &Scenario, copies: usize) -> Result<Vec<ComplexOperator>> {
    check_copies(scenario, copies)?;
    let d = scenario.dim();
    let eig = &scenario.decomposition().eigenvectors;
    let targets = broadcast_vectors(scenario, copies);
    let count = checked_pow(d, copies - 1) as usize;
    (0..count)
        .map(|k| {
            let labels = collective_labels(k, d, copies - 1);
            let total = targets[0].len();
            let mut m = DMatrix::<C64>::zeros(total, total);
            for (r, target) in targets.iter().enumerate() {
                m += target * labelled_vector(eig, r, &labels).adjoint();
            }
            ComplexOperator::from_matrix(m)
        })
        .collect()
}

/// Σ_i E_i X E_i†
pub fn apply_channel(kraus: &[ComplexOperator], x: &ComplexOperator) -> ComplexOperator {
    let mut out = ComplexOperator::zeros(x.dim());
    for e in kraus {
        out = out.add(&e.mul(x).mul(&e.adjoint()));
    }
    out
}

/// ‖Σ_i E_i† E_i − I‖ in the max-entry norm.
pub fn kraus_completeness_defect(kraus: &[ComplexOperator]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let mut sum = ComplexOperator::zeros(first.dim());
    for e in kraus {
        sum = sum.add(&e.adjoint().mul(e));
    }
    sum.max_abs_diff(&ComplexOperator::identity(first.dim()))
}

/// A POVM element J_x with its smallest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    pub path: Path,
    pub op: ComplexOperator,
    pub min_eigenvalue: f64,
}

/// Shared pieces for building J_x: E_i = V W_i† with V holding |r⋯r⟩ and
/// W_i holding |r, i⟩ as columns.
struct KrausFactors {
    broadcast: DMatrix<C64>,
    labelled: Vec<DMatrix<C64>>,
}

impl KrausFactors {
    fn new(scenario: &Scenario) -> Result<Self> {
        let copies = scenario.n_times();
        check_copies(scenario, copies)?;
        let d = scenario.dim();
        let eig = &scenario.decomposition().eigenvectors;
        let broadcast = DMatrix::from_columns(&broadcast_vectors(scenario, copies));
        let labelled = (0..checked_pow(d, copies - 1) as usize)
            .map(|k| {
                let labels = collective_labels(k, d, copies - 1);
                let cols: Vec<DVector<C64>> =
                    (0..d).map(|r| labelled_vector(eig, r, &labels)).collect();
                DMatrix::from_columns(&cols)
            })
            .collect();
        Ok(Self {
            broadcast,
            labelled,
        })
    }

    /// Σ_i E_i† M E_i = Σ_i W_i (V† M V) W_i†
    fn sandwich(&self, m: &ComplexOperator) -> ComplexOperator {
        let core = self.broadcast.adjoint() * m.matrix() * &self.broadcast;
        let total = self.broadcast.nrows();
        let mut acc = DMatrix::<C64>::zeros(total, total);
        for w in &self.labelled {
            acc += w * &core * w.adjoint();
        }
        ComplexOperator::from_matrix(acc).expect("square")
    }

    fn element(&self, scenario: &Scenario, path: &Path) -> Result<PovmElement> {
        let m = build_measurement_operator(scenario, path)?;
        let op = self.sandwich(&m);
        let min_eigenvalue = op.min_hermitian_eigenvalue();
        Ok(PovmElement {
            path: path.clone(),
            op,
            min_eigenvalue,
        })
    }
}

pub fn povm_element(scenario: &Scenario, path: &Path) -> Result<PovmElement> {
    scenario.check_path(path)?;
    KrausFactors::new(scenario)?.element(scenario, path)
}

/// Every J_x, in lexicographic path order.
pub fn povm_elements(scenario: &Scenario) -> Result<Vec<PovmElement>> {
    let paths = scenario.check_enumeration()?;
    let factors = KrausFactors::new(scenario)?;
    let (d, n) = (scenario.dim(), scenario.n_times());
    scenario
        .execution()
        .try_map_indexed(paths, |k| factors.element(scenario, &Path::from_index(k, d, n)))
}

/// Completeness and positivity of the path POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmCheck {
    pub elements: usize,
    /// ‖Σ_x J_x − I‖ in the max-entry norm.
    pub completeness_defect: f64,
    /// Smallest eigenvalue over all J_x.
    pub min_eigenvalue: f64,
    pub pass: bool,
}

impl PovmCheck {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn to_report(&self) -> KeyValueReport {
        KeyValueReport::new("verify_povm", self.pass)
            .with("elements", self.elements)
            .with_f64("completeness_defect", self.completeness_defect)
            .with_f64("min_eigenvalue", self.min_eigenvalue)
            .with_f64("tolerance", Self::TOLERANCE)
    }
}

pub fn verify_povm(scenario: &Scenario) -> Result<PovmCheck> {
    let paths = scenario.check_enumeration()?;
    let factors = KrausFactors::new(scenario)?;
    let (d, n) = (scenario.dim(), scenario.n_times());
    let chunks = paths.div_ceil(SUM_CHUNK);
    // Fixed chunks summed in order keep the result policy-independent.
    let partials = scenario.execution().try_map_indexed(chunks, |c| {
        let mut sum: Option<ComplexOperator> = None;
        let mut min_eig = f64::INFINITY;
        for k in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(paths) {
            let j = factors.element(scenario, &Path::from_index(k, d, n))?;
            min_eig = min_eig.min(j.min_eigenvalue);
            sum = Some(match sum {
                Some(s) => s.add(&j.op),
                None => j.op,
            });
        }
        Ok::<_, Error>((sum.expect("chunk is non-empty"), min_eig))
    })?;
    let total = factors.broadcast.nrows();
    let mut sum = ComplexOperator::zeros(total);
    let mut min_eigenvalue = f64::INFINITY;
    for (s, m) in partials {
        sum = sum.add(&s);
        min_eigenvalue = min_eigenvalue.min(m);
    }
    let completeness_defect = sum.max_abs_diff(&ComplexOperator::identity(total));
    Ok(PovmCheck {
        elements: paths,
        completeness_defect,
        min_eigenvalue,
        pass: completeness_defect <= PovmCheck::TOLERANCE
            && min_eigenvalue >= -PovmCheck::TOLERANCE,
    })
}

/// P(x) = Tr[J_x ρ^{⊗(N+1)}] for every path.
pub fn povm_distribution(scenario: &Scenario) -> Result<PathDistribution> {
    let paths = scenario.check_enumeration()?;
    let factors = KrausFactors::new(scenario)?;
    let (d, n) = (scenario.dim(), scenario.n_times());
    let independent = tensor_power(scenario.rho().op(), n, scenario.settings().dim_cap)?;
    let probs = scenario.execution().try_map_indexed(paths, |k| {
        let path = Path::from_index(k, d, n);
        let m = build_measurement_operator(scenario, &path)?;
        Ok::<_, Error>(factors.sandwich(&m).trace_product(&independent).re)
    })?;
    PathDistribution::new(scenario.fingerprint().to_string(), Method::Povm, d, n, probs)
}

/// P(x) = Tr[M_x ρ_bro] for every path.
pub fn distribution_via_broadcast(scenario: &Scenario) -> Result<PathDistribution> {
    let paths = scenario.check_enumeration()?;
    let (d, n) = (scenario.dim(), scenario.n_times());
    let bro = broadcast_state(scenario, n)?;
    let probs = scenario.execution().try_map_indexed(paths, |k| {
        let m = build_measurement_operator(scenario, &Path::from_index(k, d, n))?;
        Ok::<_, Error>(m.trace_product(bro.state.op()).re)
    })?;
    PathDistribution::new(
        scenario.fingerprint().to_string(),
        Method::Broadcast,
        d,
        n,
        probs,
    )
}

/// Default clustering width for work values.
pub const DEFAULT_BIN_TOL: f64 = 1e-9;

/// Distinct work values and their probabilities, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkDistribution {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
    pub bin_tol: f64,
}

impl WorkDistribution {
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(w, p)| w * p)
            .collect::<CompensatedSum>()
            .value()
    }

    /// ⟨e^{−βw}⟩
    pub fn exponential_average(&self, beta: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(w, p)| p * (-beta * w).exp())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn probability_of(&self, w: f64) -> Option<f64> {
        self.support
            .iter()
            .position(|&v| (v - w).abs() <= self.bin_tol)
            .map(|k| self.probs[k])
    }
}

fn check_two_time_energies(
    scenario: &Scenario,
    energies_initial: &[f64],
    energies_final: &[f64],
) -> Result<()> {
    if scenario.n_times() != 2 {
        return Err(Error::WrongTimeCount {
            expected: 2,
            found: scenario.n_times(),
        });
    }
    let d = scenario.dim();
    for e in [energies_initial, energies_final] {
        if e.len() != d {
            return Err(Error::BadEnergyLength {
                expected: d,
                found: e.len(),
            });
        }
    }
    Ok(())
}

/// Work distribution P(w) = Σ_{i,j: ε'_j − ε_i ≈ w} P(x_i, x_j), with values
/// clustered greedily in ascending order: a value joins the current cluster
/// when it lies within `bin_tol` of the cluster's first value.
pub fn work_values(
    scenario: &Scenario,
    energies_initial: &[f64],
    energies_final: &[f64],
    bin_tol: f64,
) -> Result<WorkDistribution> {
    check_two_time_energies(scenario, energies_initial, energies_final)?;
    if !(bin_tol >= 0.0) {
        return Err(Error::InvalidParameter("bin_tol must be non-negative".into()));
    }
    let dist = joint_distribution(scenario)?;
    let d = scenario.dim();
    let mut pairs: Vec<(f64, f64)> = dist
        .probabilities()
        .iter()
        .enumerate()
        .map(|(k, &p)| (energies_final[k % d] - energies_initial[k / d], p))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<f64> = Vec::new();
    let mut sums: Vec<CompensatedSum> = Vec::new();
    for (w, p) in pairs {
        match support.last() {
            Some(&anchor) if w - anchor <= bin_tol => sums.last_mut().unwrap().add(p),
            _ => {
                support.push(w);
                let mut s = CompensatedSum::new();
                s.add(p);
                sums.push(s);
            }
        }
    }
    let total = dist.total;
    let probs = sums.iter().map(|s| s.value() / total).collect();
    Ok(WorkDistribution {
        support,
        probs,
        bin_tol,
    })
}

/// Σ_x e[x] |x⟩⟨x| in the basis of time `t`.
fn hamiltonian(scenario: &Scenario, t: usize, energies: &[f64]) -> ComplexOperator {
    let basis = scenario.times()[t].basis();
    let n = scenario.dim();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (v, &e) in basis.iter().zip(energies) {
        m += v * v.adjoint() * C64::from(e);
    }
    ComplexOperator::from_matrix(m).expect("square")
}

/// U_t ρ U_t†
fn evolved_state(scenario: &Scenario, t: usize) -> ComplexOperator {
    let u = scenario.times()[t].unitary().op();
    u.mul(scenario.rho().op()).mul(&u.adjoint())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstLawCheck {
    pub mean_work: f64,
    /// Tr[H_1 ρ_1] − Tr[H_0 ρ_0]
    pub energy_change: f64,
    pub defect: f64,
    pub pass: bool,
}

impl FirstLawCheck {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn to_report(&self) -> KeyValueReport {
        KeyValueReport::new("first_law", self.pass)
            .with_f64("mean_work", self.mean_work)
            .with_f64("energy_change", self.energy_change)
            .with_f64("defect", self.defect)
            .with_f64("tolerance", Self::TOLERANCE)
    }
}

/// Compares ⟨w⟩ with the change of average energy for H_k diagonal in the
/// basis of time k with the given energies.
pub fn first_law_check(
    scenario: &Scenario,
    energies_initial: &[f64],
    energies_final: &[f64],
) -> Result<FirstLawCheck> {
    let work = work_values(scenario, energies_initial, energies_final, DEFAULT_BIN_TOL)?;
    let mean_work = work.mean();
    let h0 = hamiltonian(scenario, 0, energies_initial);
    let h1 = hamiltonian(scenario, 1, energies_final);
    let energy_change = h1.trace_product(&evolved_state(scenario, 1)).re
        - h0.trace_product(&evolved_state(scenario, 0)).re;
    let defect = (mean_work - energy_change).abs();
    Ok(FirstLawCheck {
        mean_work,
        energy_change,
        defect,
        pass: defect <= FirstLawCheck::TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JarzynskiCheck {
    pub beta: f64,
    /// ⟨e^{−βw}⟩
    pub exponential_average: f64,
    /// Z_1 / Z_0
    pub partition_ratio: f64,
    pub relative_error: f64,
    pub pass: bool,
}

impl JarzynskiCheck {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn to_report(&self) -> KeyValueReport {
        KeyValueReport::new("jarzynski", self.pass)
            .with_f64("beta", self.beta)
            .with_f64("exponential_average", self.exponential_average)
            .with_f64("partition_ratio", self.partition_ratio)
            .with_f64("relative_error", self.relative_error)
            .with_f64("tolerance", Self::TOLERANCE)
    }
}

fn partition_function(energies: &[f64], beta: f64) -> f64 {
    energies.iter().map(|e| (-beta * e).exp()).sum()
}

/// Largest deviation of U_0 ρ U_0† from the Gibbs state of H_0 at `beta`.
pub fn thermal_defect(scenario: &Scenario, energies_initial: &[f64], beta: f64) -> f64 {
    let z0 = partition_function(energies_initial, beta);
    let rho0 = evolved_state(scenario, 0);
    let basis = scenario.times()[0].basis();
    let mut worst: f64 = 0.0;
    for (i, xi) in basis.iter().enumerate() {
        let column = rho0.apply(xi);
        for (j, xj) in basis.iter().enumerate() {
            let target = if i == j {
                (-beta * energies_initial[i]).exp() / z0
            } else {
                0.0
            };
            worst = worst.max((xj.dotc(&column) - C64::from(target)).norm());
        }
    }
    worst
}

/// ⟨e^{−βw}⟩ against Z_1/Z_0 for a thermal initial state.
pub fn jarzynski_check(
    scenario: &Scenario,
    energies_initial: &[f64],
    energies_final: &[f64],
    beta: f64,
) -> Result<JarzynskiCheck> {
    check_two_time_energies(scenario, energies_initial, energies_final)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    let tol = scenario.settings().tol.herm;
    let defect = thermal_defect(scenario, energies_initial, beta);
    if !(defect <= tol) {
        return Err(Error::NotThermalInput { defect, tol });
    }
    let work = work_values(scenario, energies_initial, energies_final, DEFAULT_BIN_TOL)?;
    let exponential_average = work.exponential_average(beta);
    let partition_ratio =
        partition_function(energies_final, beta) / partition_function(energies_initial, beta);
    let relative_error = ((exponential_average - partition_ratio) / partition_ratio).abs();
    Ok(JarzynskiCheck {
        beta,
        exponential_average,
        partition_ratio,
        relative_error,
        pass: relative_error <= JarzynskiCheck::TOLERANCE,
    })
}

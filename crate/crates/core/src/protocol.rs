//! The two-stage measurement protocol on N+1 independent copies: stage one
//! projects every copy onto the eigenbasis of ρ and keeps runs where all
//! copies agree; stage two measures copy n in the local basis at t_n.
//!
//! [`postselect_expectation`] evaluates the postselected expectation exactly
//! on the dense copy space. [`sample_protocol`] simulates the experiment shot
//! by shot.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayesnet::{joint_distribution, Method, Path, PathDistribution, Scenario};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::qstate::{check_copy_dim, projector, tensor, tensor_power, ComplexOperator, C64};
use crate::report::{fmt_f64, header_block, path_columns};

/// Shots per independently seeded RNG stream.
pub const SHOT_BLOCK: u64 = 4096;

/// U_t† |x⟩ for every outcome x at every time.
fn local_effect_vectors(scenario: &Scenario) -> Vec<Vec<DVector<C64>>> {
    scenario
        .times()
        .iter()
        .map(|t| {
            let u_dag = t.unitary().op().adjoint();
            t.basis().iter().map(|x| u_dag.apply(x)).collect()
        })
        .collect()
}

fn measurement_operator_from(
    effects: &[Vec<DVector<C64>>],
    path: &Path,
    dim_cap: usize,
) -> Result<ComplexOperator> {
    let locals: Vec<ComplexOperator> = path
        .0
        .iter()
        .enumerate()
        .map(|(t, &x)| ComplexOperator::outer(&effects[t][x], &effects[t][x]))
        .collect();
    let refs: Vec<&ComplexOperator> = locals.iter().collect();
    tensor(&refs, dim_cap)
}

/// M_x = ⊗_n U_n† |x_n⟩⟨x_n| U_n on the (N+1)-copy space.
pub fn build_measurement_operator(scenario: &Scenario, path: &Path) -> Result<ComplexOperator> {
    scenario.check_path(path)?;
    let cap = scenario.settings().dim_cap;
    check_copy_dim(scenario.dim(), scenario.n_times(), cap)?;
    measurement_operator_from(&local_effect_vectors(scenario), path, cap)
}

/// Result of [`postselect_expectation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Postselected {
    pub probability: f64,
    /// Eigenstates whose population is below the cutoff; their terms were
    /// evaluated as P_s Π_n p(x_n|s) instead of by division.
    pub flagged_eigenstates: Vec<usize>,
}

/// Eigenstate indices with populations below `pop_cutoff`.
pub fn low_population_eigenstates(scenario: &Scenario) -> Vec<usize> {
    let cutoff = scenario.settings().tol.pop_cutoff;
    scenario
        .decomposition()
        .populations
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < cutoff)
        .map(|(s, _)| s)
        .collect()
}

/// (⊗_n Π_s) ρ_ind = ⊗_n (Π_s ρ) for every eigenstate s.
fn postselected_copy_states(scenario: &Scenario) -> Result<Vec<ComplexOperator>> {
    let copies = scenario.n_times();
    let cap = scenario.settings().dim_cap;
    let tol = scenario.settings().tol.norm;
    scenario
        .decomposition()
        .eigenvectors
        .iter()
        .map(|s| {
            let local = projector(s, tol)?.mul(scenario.rho().op());
            tensor_power(&local, copies, cap)
        })
        .collect()
}

fn postselect_from(
    scenario: &Scenario,
    effects: &[Vec<DVector<C64>>],
    states: &[ComplexOperator],
    path: &Path,
) -> Result<Postselected> {
    let m = measurement_operator_from(effects, path, scenario.settings().dim_cap)?;
    let pops = &scenario.decomposition().populations;
    let cutoff = scenario.settings().tol.pop_cutoff;
    let repeat = (scenario.n_times() - 1) as i32;
    let mut acc = CompensatedSum::new();
    let mut flagged = Vec::new();
    for (s, (&p, state)) in pops.iter().zip(states).enumerate() {
        if p < cutoff {
            flagged.push(s);
            let direct = path
                .0
                .iter()
                .enumerate()
                .fold(p, |w, (t, &x)| w * scenario.conditional_unchecked(s, t, x));
            acc.add(direct);
        } else {
            acc.add(m.trace_product(state).re / p.powi(repeat));
        }
    }
    Ok(Postselected {
        probability: acc.value(),
        flagged_eigenstates: flagged,
    })
}

/// Σ_s Tr[M_x (⊗_n Π_s) ρ_ind] / Tr[Π_s ρ]^N, evaluated on the dense copy space.
pub fn postselect_expectation(scenario: &Scenario, path: &Path) -> Result<Postselected> {
    scenario.check_path(path)?;
    check_copy_dim(scenario.dim(), scenario.n_times(), scenario.settings().dim_cap)?;
    let effects = local_effect_vectors(scenario);
    let states = postselected_copy_states(scenario)?;
    postselect_from(scenario, &effects, &states, path)
}

/// [`postselect_expectation`] for every path.
pub fn postselect_distribution(scenario: &Scenario) -> Result<PathDistribution> {
    let paths = scenario.check_enumeration()?;
    let (d, n) = (scenario.dim(), scenario.n_times());
    check_copy_dim(d, n, scenario.settings().dim_cap)?;
    let effects = local_effect_vectors(scenario);
    let states = postselected_copy_states(scenario)?;
    let probs = scenario.execution().try_map_indexed(paths, |k| {
        postselect_from(scenario, &effects, &states, &Path::from_index(k, d, n))
            .map(|r| r.probability)
    })?;
    PathDistribution::new(
        scenario.fingerprint().to_string(),
        Method::PostselectExact,
        d,
        n,
        probs,
    )
}

/// Outcome of a simulated protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotReport {
    pub seed: u64,
    pub shots_requested: u64,
    /// Shots whose stage-one outcomes agreed on every copy.
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Set when no shot survived postselection; estimates are then all zero.
    pub no_accepted_shots: bool,
    pub dim: usize,
    pub n_times: usize,
    /// Accepted shots per path, lexicographic order.
    pub counts: Vec<u64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Stage-one eigenoutcome frequencies pooled over all copies.
    pub stage1_frequencies: Vec<f64>,
    pub accepted_per_eigenstate: Vec<u64>,
}

impl ShotReport {
    pub fn estimate(&self, path: &Path) -> Option<f64> {
        (path.0.len() == self.n_times && path.0.iter().all(|&x| x < self.dim))
            .then(|| self.estimates[path.index(self.dim)])
    }

    pub fn std_error(&self, path: &Path) -> Option<f64> {
        (path.0.len() == self.n_times && path.0.iter().all(|&x| x < self.dim))
            .then(|| self.std_errors[path.index(self.dim)])
    }

    pub fn distribution(&self, fingerprint: &str) -> PathDistribution {
        PathDistribution::new(
            fingerprint.to_string(),
            Method::Sampled,
            self.dim,
            self.n_times,
            self.estimates.clone(),
        )
        .expect("estimates cover every path")
    }

    /// Header block (seed, shots, accepted, acceptance rate) followed by
    /// x0..xN,count,estimate,std_error rows.
    pub fn to_csv(&self, extra_header: &[(String, String)]) -> String {
        let mut header = extra_header.to_vec();
        header.extend([
            ("seed".to_string(), self.seed.to_string()),
            ("shots".to_string(), self.shots_requested.to_string()),
            ("accepted".to_string(), self.accepted.to_string()),
            ("acceptance_rate".to_string(), fmt_f64(self.acceptance_rate)),
            (
                "no_accepted_shots".to_string(),
                self.no_accepted_shots.to_string(),
            ),
        ]);
        let mut out = header_block(&header);
        let mut cols = path_columns(self.n_times);
        cols.extend(["count", "estimate", "std_error"].map(String::from));
        let _ = writeln!(out, "{}", cols.join(","));
        for k in 0..self.counts.len() {
            let path = Path::from_index(k, self.dim, self.n_times);
            let mut fields: Vec<String> = path.0.iter().map(|x| x.to_string()).collect();
            fields.push(self.counts[k].to_string());
            fields.push(fmt_f64(self.estimates[k]));
            fields.push(fmt_f64(self.std_errors[k]));
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Tally {
    stage1: Vec<u64>,
    accepted: Vec<u64>,
    /// paths[s * n_paths + path]
    paths: Vec<u64>,
}

impl Tally {
    fn zeros(d: usize, n_paths: usize) -> Self {
        Self {
            stage1: vec![0; d],
            accepted: vec![0; d],
            paths: vec![0; d * n_paths],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        let add = |a: &mut Vec<u64>, b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.stage1, &other.stage1);
        add(&mut self.accepted, &other.accepted);
        add(&mut self.paths, &other.paths);
        self
    }
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let w: Vec<f64> = weights.map(|x| x.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    let mut run = 0.0;
    w.iter()
        .map(|x| {
            run += x;
            run / total
        })
        .collect()
}

/// Index drawn from a cumulative table; never lands on a zero-weight tail.
fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| {
            let last = cdf[cdf.len() - 1];
            cdf.iter().position(|&c| c >= last).unwrap_or(cdf.len() - 1)
        })
}

/// Simulates the postselection protocol with per-block counter-seeded
/// streams, so results do not depend on the execution policy.
pub fn sample_protocol(scenario: &Scenario, shots: u64, seed: u64) -> Result<ShotReport> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let n_paths = scenario.check_enumeration()?;
    let d = scenario.dim();
    let copies = scenario.n_times();
    let pops = &scenario.decomposition().populations;
    let stage1_cdf = cumulative(pops.iter().copied());
    // stage2_cdf[s][t] over outcomes x
    let stage2_cdf: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|s| {
            (0..copies)
                .map(|t| cumulative((0..d).map(|x| scenario.conditional_unchecked(s, t, x))))
                .collect()
        })
        .collect();

    let blocks = shots.div_ceil(SHOT_BLOCK);
    let tally = scenario.execution().map_reduce_indexed(
        blocks as usize,
        Tally::zeros(d, n_paths),
        |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let start = b as u64 * SHOT_BLOCK;
            let end = (start + SHOT_BLOCK).min(shots);
            let mut tally = Tally::zeros(d, n_paths);
            let mut stage1 = vec![0usize; copies];
            for _ in start..end {
                for slot in stage1.iter_mut() {
                    *slot = draw(&stage1_cdf, &mut rng);
                    tally.stage1[*slot] += 1;
                }
                let s = stage1[0];
                if stage1.iter().any(|&o| o != s) {
                    continue;
                }
                tally.accepted[s] += 1;
                let path = stage2_cdf[s]
                    .iter()
                    .fold(0, |acc, cdf| acc * d + draw(cdf, &mut rng));
                tally.paths[s * n_paths + path] += 1;
            }
            tally
        },
        Tally::merge,
    );

    let accepted: u64 = tally.accepted.iter().sum();
    let pooled = (shots * copies as u64) as f64;
    let stage1_frequencies: Vec<f64> = tally.stage1.iter().map(|&c| c as f64 / pooled).collect();
    let mut counts = vec![0u64; n_paths];
    let mut estimates = vec![0.0; n_paths];
    let mut std_errors = vec![0.0; n_paths];
    for k in 0..n_paths {
        let mut est = CompensatedSum::new();
        let mut within = CompensatedSum::new();
        let mut second_moment = CompensatedSum::new();
        for s in 0..d {
            let c = tally.paths[s * n_paths + k];
            counts[k] += c;
            let n_s = tally.accepted[s];
            if n_s == 0 {
                continue;
            }
            let f = c as f64 / n_s as f64;
            let w = stage1_frequencies[s];
            est.add(w * f);
            within.add(w * w * f * (1.0 - f) / n_s as f64);
            second_moment.add(w * f * f);
        }
        let e = est.value();
        // Conditional-frequency variance plus the multinomial variance of the
        // stage-one weights.
        let weights = ((second_moment.value() - e * e) / pooled).max(0.0);
        estimates[k] = e;
        std_errors[k] = (within.value().max(0.0) + weights).sqrt();
    }
    Ok(ShotReport {
        seed,
        shots_requested: shots,
        accepted,
        acceptance_rate: accepted as f64 / shots as f64,
        no_accepted_shots: accepted == 0,
        dim: d,
        n_times: copies,
        counts,
        estimates,
        std_errors,
        stage1_frequencies,
        accepted_per_eigenstate: tally.accepted,
    })
}

/// Probability that all copies agree in stage one: Σ_s P_s^(N+1).
pub fn expected_acceptance_rate(scenario: &Scenario) -> f64 {
    let copies = scenario.n_times() as i32;
    scenario
        .decomposition()
        .populations
        .iter()
        .map(|p| p.powi(copies))
        .sum()
}

/// SplitMix64 finalizer over (seed, index), for per-rung seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub shots: u64,
    /// max over paths of |estimate − exact|
    pub max_abs_error: f64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = header_block(&[("seed".into(), self.seed.to_string())]);
        out.push_str("shots,max_abs_error,acceptance_rate\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                r.shots,
                fmt_f64(r.max_abs_error),
                fmt_f64(r.acceptance_rate)
            );
        }
        out
    }
}

/// Sampling error against the exact distribution along a shot ladder. Rung
/// k uses the seed `derive_seed(seed, k)`.
pub fn convergence_table(scenario: &Scenario, ladder: &[u64], seed: u64) -> Result<ConvergenceTable> {
    if ladder.is_empty() {
        return Err(Error::InvalidParameter("shot ladder is empty".into()));
    }
    if ladder[0] == 0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "shot ladder must be positive and strictly increasing".into(),
        ));
    }
    let exact = joint_distribution(scenario)?;
    let rows = ladder
        .iter()
        .enumerate()
        .map(|(k, &shots)| {
            let report = sample_protocol(scenario, shots, derive_seed(seed, k as u64))?;
            let max_abs_error = report
                .estimates
                .iter()
                .zip(exact.probabilities())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(ConvergenceRow {
                shots,
                max_abs_error,
                acceptance_rate: report.acceptance_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { seed, rows })
}

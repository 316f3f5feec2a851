//! The driven coherent qubit and the correlated qubit pair as scenario
//! factories, their closed-form reference expressions, and the temperature
//! sweeps built on them.
//!
//! The engine (numerical diagonalization of the explicitly built ρ) is the
//! ground truth. The closed forms are carried along as reference columns so
//! that any disagreement shows up in the emitted tables instead of being
//! assumed away.
//!
//! Energy convention: the σ_z eigenvalue +1 (computational index 0, written
//! |+⟩) carries energy +g, so ⟨+|ρ_th|+⟩ = e^{−βg}/Z.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::bayesnet::{
    computational_basis, joint_distribution, tpm_distribution, Path, Scenario, Settings,
    TimePoint,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numeric::log_grid;
use crate::qstate::{validate_density, ComplexOperator, Unitary, C64};
use crate::report::{fmt_f64, header_block};

/// ⟨+|ρ_th|+⟩ = e^{−x}/(2 cosh x) for x = βg, overflow-safe.
pub fn upper_population(x: f64) -> f64 {
    1.0 / (1.0 + (2.0 * x).exp())
}

/// Z = 2 cosh(βg)
pub fn qubit_partition_function(x: f64) -> f64 {
    2.0 * x.cosh()
}

fn check_coherence_parameter(a: f64) -> Result<()> {
    if !(a.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!("|a| must be at most 1, got {a}")));
    }
    Ok(())
}

fn check_beta(name: &str, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {beta}"
        )));
    }
    Ok(())
}

fn model_density(m: ComplexOperator, settings: &Settings) -> Result<crate::qstate::DensityMatrix> {
    validate_density(&m, &settings.tol).map_err(|e| Error::StateNotPositive(e.to_string()))
}

/// Driven coherent qubit: H_t = g_t σ_z, initial state ρ_th + ασ_x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentQubitParams {
    pub beta: f64,
    pub g0: f64,
    pub g1: f64,
    /// Coherence parameter, |a| ≤ 1.
    pub a: f64,
    /// Adiabatic phase φ of U_{t1} = exp(−iφσ_z).
    pub phase: f64,
}

impl Default for CoherentQubitParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            g0: 1.0,
            g1: 2.0,
            a: 0.0,
            phase: 0.0,
        }
    }
}

impl CoherentQubitParams {
    pub fn validate(&self) -> Result<()> {
        check_beta("beta", self.beta)?;
        check_coherence_parameter(self.a)?;
        if !self.g0.is_finite() || !self.g1.is_finite() || !self.phase.is_finite() {
            return Err(Error::InvalidParameter("g0, g1 and phase must be finite".into()));
        }
        Ok(())
    }

    /// b = Tr[σ_z ρ_th] = −tanh(β g0)
    pub fn b(&self) -> f64 {
        -(self.beta * self.g0).tanh()
    }

    /// α = a √(1 − b²) / 2
    pub fn alpha(&self) -> f64 {
        // √(1 − tanh²) = sech, evaluated directly for accuracy at low T
        self.a / (self.beta * self.g0).cosh() / 2.0
    }

    /// Energies of |+⟩, |−⟩ before and after the drive.
    pub fn energies(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.g0, -self.g0], vec![self.g1, -self.g1])
    }
}

/// [[p_th, α], [α, 1 − p_th]]
pub fn coherent_qubit_state(p: &CoherentQubitParams) -> Result<ComplexOperator> {
    p.validate()?;
    let upper = upper_population(p.beta * p.g0);
    let alpha = C64::from(p.alpha());
    ComplexOperator::from_row_major(2, &[upper.into(), alpha, alpha, (1.0 - upper).into()])
}

/// exp(−iφσ_z)
pub fn adiabatic_phase(phase: f64) -> ComplexOperator {
    ComplexOperator::from_row_major(
        2,
        &[
            C64::from_polar(1.0, -phase),
            C64::from(0.0),
            C64::from(0.0),
            C64::from_polar(1.0, phase),
        ],
    )
    .expect("2x2")
}

pub fn coherent_qubit_scenario(p: &CoherentQubitParams, settings: Settings) -> Result<Scenario> {
    let rho = model_density(coherent_qubit_state(p)?, &settings)?;
    let tol = settings.tol;
    let times = vec![
        TimePoint::new("t0", Unitary::identity(2), computational_basis(2), &tol)?,
        TimePoint::new(
            "t1",
            Unitary::new(adiabatic_phase(p.phase), &tol)?,
            computational_basis(2),
            &tol,
        )?,
    ];
    Scenario::new(vec![2], rho, times, settings)
}

/// The path (+, +).
pub fn qubit_plus_plus() -> Path {
    Path(vec![0, 0])
}

/// Closed-form P(+,+) = (1+b)/2 − α²/(4(α²+b²)) as printed for this model.
/// Reference only; the engine value is authoritative.
pub fn analytic_qubit_pp(p: &CoherentQubitParams) -> Result<f64> {
    p.validate()?;
    let (b, alpha) = (p.b(), p.alpha());
    let denominator = alpha * alpha + b * b;
    if denominator < 1e-14 {
        return Err(Error::DegenerateDenominator(denominator));
    }
    Ok((1.0 + b) / 2.0 - alpha * alpha / (4.0 * denominator))
}

/// Reference populations P_{s±} = (1 ± √(a² + b²))/2 as printed for this
/// model (compare with the engine's decomposition).
pub fn reference_qubit_populations(p: &CoherentQubitParams) -> (f64, f64) {
    let r = (p.a * p.a + p.b() * p.b()).sqrt();
    ((1.0 + r) / 2.0, (1.0 - r) / 2.0)
}

/// Correlated qubit pair ρ_th(β_A) ⊗ ρ_th(β_B) + ασ_+⊗σ_− + α*σ_−⊗σ_+,
/// α = i a / (Z_A Z_B), coupled by a partial SWAP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPairParams {
    pub beta_a: f64,
    pub beta_b: f64,
    /// Correlation parameter, |a| ≤ 1.
    pub a: f64,
}

impl Default for QubitPairParams {
    fn default() -> Self {
        Self {
            beta_a: 2.5,
            beta_b: 1.0,
            a: 0.0,
        }
    }
}

impl QubitPairParams {
    pub fn validate(&self) -> Result<()> {
        check_beta("beta_a", self.beta_a)?;
        check_beta("beta_b", self.beta_b)?;
        check_coherence_parameter(self.a)
    }

    pub fn z_a(&self) -> f64 {
        qubit_partition_function(self.beta_a)
    }

    pub fn z_b(&self) -> f64 {
        qubit_partition_function(self.beta_b)
    }

    /// Δβ = β_A − β_B
    pub fn delta_beta(&self) -> f64 {
        self.beta_a - self.beta_b
    }

    /// ξ = 2a² + 1
    pub fn xi(&self) -> f64 {
        2.0 * self.a * self.a + 1.0
    }

    /// γ = e^{2Δβ} ξ + 1
    pub fn gamma(&self) -> f64 {
        (2.0 * self.delta_beta()).exp() * self.xi() + 1.0
    }

    /// α = i a / (Z_A Z_B)
    pub fn alpha(&self) -> C64 {
        C64::new(0.0, self.a / (self.z_a() * self.z_b()))
    }
}

/// ρ_AB in the product basis |++⟩, |+−⟩, |−+⟩, |−−⟩.
pub fn qubit_pair_state(p: &QubitPairParams) -> Result<ComplexOperator> {
    p.validate()?;
    let pa = upper_population(p.beta_a);
    let pb = upper_population(p.beta_b);
    let diag = [pa * pb, pa * (1.0 - pb), (1.0 - pa) * pb, (1.0 - pa) * (1.0 - pb)];
    let alpha = p.alpha();
    let mut m = DMatrix::<C64>::from_fn(4, 4, |i, j| if i == j { diag[i].into() } else { C64::from(0.0) });
    // σ_+ ⊗ σ_− = |+−⟩⟨−+|
    m[(1, 2)] = alpha;
    m[(2, 1)] = alpha.conj();
    ComplexOperator::from_matrix(m)
}

/// The two-qubit swap S|φψ⟩ = |ψφ⟩.
pub fn swap() -> ComplexOperator {
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            m[(b * 2 + a, a * 2 + b)] = C64::from(1.0);
        }
    }
    ComplexOperator::from_matrix(m).expect("4x4")
}

/// (I + iS)/√2
pub fn partial_swap() -> ComplexOperator {
    ComplexOperator::identity(4)
        .add(&swap().scale(C64::new(0.0, 1.0)))
        .scale(C64::from(std::f64::consts::FRAC_1_SQRT_2))
}

pub fn pair_scenario(p: &QubitPairParams, settings: Settings) -> Result<Scenario> {
    let rho = model_density(qubit_pair_state(p)?, &settings)?;
    let tol = settings.tol;
    let times = vec![
        TimePoint::new("t0", Unitary::identity(4), computational_basis(4), &tol)?,
        TimePoint::new(
            "t1",
            Unitary::new(partial_swap(), &tol)?,
            computational_basis(4),
            &tol,
        )?,
    ];
    Scenario::new(vec![2, 2], rho, times, settings)
}

/// The path (+−, −+).
pub fn pair_exchange_path() -> Path {
    Path(vec![1, 2])
}

/// e^{−Δβ} / (2 Z_A Z_B): the uncorrelated term.
pub fn pair_tpm_term(p: &QubitPairParams) -> f64 {
    (-p.delta_beta()).exp() / (2.0 * p.z_a() * p.z_b())
}

/// Closed-form P(+−, −+) as printed for this model. Reference only.
pub fn analytic_pair_pmmp(p: &QubitPairParams) -> f64 {
    let zz = p.z_a() * p.z_b();
    let e2 = (2.0 * p.delta_beta()).exp();
    let gamma = p.gamma();
    pair_tpm_term(p) - p.a * gamma / (zz * (gamma + e2 * (e2 + p.xi())))
}

/// Closed-form J for the exchange path on two copies, as printed for this
/// model. Reference only; the engine builds J from the Kraus operators.
pub fn analytic_pair_povm(p: &QubitPairParams) -> ComplexOperator {
    let s = (-p.delta_beta()).exp() - p.delta_beta().exp();
    let a = p.a;
    let pref = 1.0 / (2.0 * (4.0 * a * a + s * s));
    let blk_a = C64::new(a * a + (s - a) * (s - a), 0.0) * pref;
    let blk_b = -C64::new(a * s, a * (2.0 * a - s)) * pref;
    let blk_c = C64::new(2.0 * a * a, 0.0) * pref;
    let coef = [[blk_a, blk_b], [blk_b.conj(), blk_c]];
    let mut m = DMatrix::<C64>::zeros(16, 16);
    for (bi, i) in [1usize, 2].into_iter().enumerate() {
        for (bj, j) in [1usize, 2].into_iter().enumerate() {
            for k in 0..4 {
                m[(i * 4 + k, j * 4 + k)] = coef[bi][bj];
            }
        }
    }
    ComplexOperator::from_matrix(m).expect("square")
}

/// One row of a figure table. `None` values are rendered as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub values: Vec<Option<f64>>,
    /// "ok" or the reason the row is incomplete.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<FigureRow>,
}

impl FigureTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, row order.
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let k = self.column(name).expect("known column");
        self.rows.iter().map(|r| r.values[k]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec![
            ("figure".to_string(), self.name.clone()),
            (
                "code_version".to_string(),
                format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            ),
        ];
        header.extend(self.params.iter().cloned());
        let mut out = header_block(&header);
        let mut cols = self.columns.clone();
        cols.push("status".into());
        let _ = writeln!(out, "{}", cols.join(","));
        for row in &self.rows {
            let mut fields: Vec<String> = row
                .values
                .iter()
                .map(|v| v.map(fmt_f64).unwrap_or_else(|| "NA".into()))
                .collect();
            fields.push(row.status.clone());
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

fn finish_row(values: Vec<Option<f64>>, notes: Vec<String>) -> FigureRow {
    let mut notes = notes;
    if values.iter().flatten().any(|v| !v.is_finite()) {
        notes.push("non-finite value".into());
    }
    FigureRow {
        values,
        status: if notes.is_empty() {
            "ok".into()
        } else {
            notes.join("; ").replace(',', ";")
        },
    }
}

/// Temperature sweep of P(+,+) for the coherent qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure2Config {
    pub temperatures: Vec<f64>,
    pub a_values: Vec<f64>,
    pub g0: f64,
    pub g1: f64,
    pub phase: f64,
    pub execution: Execution,
}

impl Default for Figure2Config {
    fn default() -> Self {
        Self {
            temperatures: log_grid(0.05, 10.0, 200),
            a_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            g0: 1.0,
            g1: 2.0,
            phase: 0.0,
            execution: Execution::default(),
        }
    }
}

/// Rows (T, a, engine P(+,+), TPM P(+,+), closed form), grouped by `a`.
pub fn figure2_data(cfg: &Figure2Config) -> FigureTable {
    let nt = cfg.temperatures.len();
    let rows = cfg.execution.map_indexed(nt * cfg.a_values.len(), |k| {
        let (a, t) = (cfg.a_values[k / nt], cfg.temperatures[k % nt]);
        let p = CoherentQubitParams {
            beta: 1.0 / t,
            g0: cfg.g0,
            g1: cfg.g1,
            a,
            phase: cfg.phase,
        };
        let mut notes = Vec::new();
        let (engine, tpm) = match coherent_qubit_scenario(&p, Settings::default()) {
            Ok(sc) => {
                let sc = sc.with_execution(Execution::Sequential);
                let path = qubit_plus_plus();
                let engine = joint_distribution(&sc).map(|d| d.get(&path).unwrap());
                let tpm = tpm_distribution(&sc).map(|d| d.get(&path).unwrap());
                (
                    engine.map_err(|e| notes.push(e.to_string())).ok(),
                    tpm.map_err(|e| notes.push(e.to_string())).ok(),
                )
            }
            Err(e) => {
                notes.push(e.to_string());
                (None, None)
            }
        };
        let analytic = analytic_qubit_pp(&p)
            .map_err(|e| notes.push(format!("closed form: {e}")))
            .ok();
        finish_row(vec![Some(t), Some(a), engine, tpm, analytic], notes)
    });
    FigureTable {
        name: "fig2".into(),
        params: vec![
            ("model".into(), "coherent_qubit".into()),
            ("g0".into(), fmt_f64(cfg.g0)),
            ("g1".into(), fmt_f64(cfg.g1)),
            ("phase".into(), fmt_f64(cfg.phase)),
            ("a_values".into(), list(&cfg.a_values)),
            ("temperatures".into(), format!(
                "{} points from {} to {}",
                nt,
                cfg.temperatures.first().map_or("NA".into(), |v| fmt_f64(*v)),
                cfg.temperatures.last().map_or("NA".into(), |v| fmt_f64(*v)),
            )),
            ("path".into(), "(+,+) = (0,0)".into()),
        ],
        columns: ["T", "a", "engine_pp", "tpm_pp", "analytic_pp"]
            .map(String::from)
            .to_vec(),
        rows,
    }
}

/// Sweep of P(+−, −+) over T_B at fixed T_A for the qubit pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure3Config {
    pub t_a: f64,
    pub t_b: Vec<f64>,
    pub a_values: Vec<f64>,
    pub execution: Execution,
}

impl Default for Figure3Config {
    fn default() -> Self {
        Self {
            t_a: 0.4,
            t_b: log_grid(0.05, 5.0, 200),
            a_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            execution: Execution::default(),
        }
    }
}

/// Rows (T_B, a, engine, TPM, closed form, engine − closed form), grouped by `a`.
pub fn figure3_data(cfg: &Figure3Config) -> FigureTable {
    let nt = cfg.t_b.len();
    let rows = cfg.execution.map_indexed(nt * cfg.a_values.len(), |k| {
        let (a, t_b) = (cfg.a_values[k / nt], cfg.t_b[k % nt]);
        let p = QubitPairParams {
            beta_a: 1.0 / cfg.t_a,
            beta_b: 1.0 / t_b,
            a,
        };
        let mut notes = Vec::new();
        let path = pair_exchange_path();
        let (engine, tpm) = match pair_scenario(&p, Settings::default()) {
            Ok(sc) => {
                let sc = sc.with_execution(Execution::Sequential);
                let engine = joint_distribution(&sc).map(|d| d.get(&path).unwrap());
                let tpm = tpm_distribution(&sc).map(|d| d.get(&path).unwrap());
                (
                    engine.map_err(|e| notes.push(e.to_string())).ok(),
                    tpm.map_err(|e| notes.push(e.to_string())).ok(),
                )
            }
            Err(e) => {
                notes.push(e.to_string());
                (None, None)
            }
        };
        let analytic = p.validate().ok().map(|_| analytic_pair_pmmp(&p));
        let discrepancy = engine.zip(analytic).map(|(e, c)| e - c);
        finish_row(
            vec![Some(t_b), Some(a), engine, tpm, analytic, discrepancy],
            notes,
        )
    });
    FigureTable {
        name: "fig3".into(),
        params: vec![
            ("model".into(), "qubit_pair".into()),
            ("T_A".into(), fmt_f64(cfg.t_a)),
            ("a_values".into(), list(&cfg.a_values)),
            ("T_B".into(), format!(
                "{} points from {} to {}",
                nt,
                cfg.t_b.first().map_or("NA".into(), |v| fmt_f64(*v)),
                cfg.t_b.last().map_or("NA".into(), |v| fmt_f64(*v)),
            )),
            ("delta_beta".into(), "beta_A - beta_B".into()),
            ("path".into(), "(+-,-+) = (1,2)".into()),
        ],
        columns: ["T_B", "a", "engine_pmmp", "tpm_pmmp", "analytic_pmmp", "discrepancy"]
            .map(String::from)
            .to_vec(),
        rows,
    }
}

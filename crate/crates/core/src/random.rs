//! Random states, unitaries, bases and scenarios for property suites and
//! benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bayesnet::{Scenario, Settings, TimePoint};
use crate::qstate::{validate_density, ComplexOperator, DensityMatrix, Tolerances, Unitary, C64};

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    let v: DVector<C64> = ginibre(d, 1, rng).column(0).into_owned();
    let n = v.norm();
    v / C64::from(n)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Unitary {
    let qr = ginibre(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Unitary::new(
        ComplexOperator::from_matrix(q).expect("square"),
        &Tolerances::default(),
    )
    .expect("QR factor is unitary")
}

/// Columns of a Haar-random unitary.
pub fn random_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<DVector<C64>> {
    let u = random_unitary(d, rng);
    (0..d)
        .map(|k| u.op().matrix().column(k).into_owned())
        .collect()
}

/// Full-rank random density matrix G G† / Tr(G G†).
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let op = ComplexOperator::from_matrix(m / tr).expect("square");
    validate_density(&op, &Tolerances::default()).expect("random state is valid")
}

/// Random scenario of `times` time points on a single `d`-level system:
/// identity at t0, Haar unitaries afterwards, Haar bases everywhere.
pub fn random_scenario<R: Rng + ?Sized>(
    d: usize,
    times: usize,
    settings: Settings,
    rng: &mut R,
) -> Scenario {
    let rho = random_density(d, rng);
    let points = (0..times)
        .map(|t| {
            let unitary = if t == 0 {
                Unitary::identity(d)
            } else {
                random_unitary(d, rng)
            };
            TimePoint::new(format!("t{t}"), unitary, random_basis(d, rng), &settings.tol)
                .expect("random basis is orthonormal")
        })
        .collect();
    Scenario::new(vec![d], rho, points, settings).expect("random scenario is valid")
}

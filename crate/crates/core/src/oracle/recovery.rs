use std::ops::ControlFlow;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, norm1, norm2, symmetric_pinv, DenseMatrix};
use crate::report::{sig12, sig12_vec};
use crate::ripbounds::binomial;
use crate::sensing::CompactSensingMatrix;

use super::rip::for_each_subset_with_first;

/// Default cap on `C(m, S)` for [`exhaustive_sparse_oracle`].
pub const DEFAULT_SUPPORT_LIMIT: u128 = 1_000_000;

/// A least-squares fit counts as consistent below this residual, scaled by `max(1, ‖s‖₂)`.
const CONSISTENT_RESIDUAL: f64 = 1e-8;

/// Eigenvalues of `ΦΦᵀ` below this fraction of the largest are dropped.
const PINV_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Bound on `‖Φ d − s‖₂`.
    pub feasibility_tolerance: f64,
    /// Bound on the duality gap, relative to `max(1, ‖d‖₁)`.
    pub optimality_tolerance: f64,
    pub max_iterations: u64,
    /// ADMM penalty; `None` picks one from the scale of the data.
    pub rho: Option<f64>,
    /// Iterations between support polishing and gap checks.
    pub check_every: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            feasibility_tolerance: 1e-9,
            optimality_tolerance: 1e-8,
            max_iterations: 100_000,
            rho: None,
            check_every: 10,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        let positive = self.feasibility_tolerance > 0.0
            && self.optimality_tolerance > 0.0
            && self.max_iterations > 0
            && self.check_every > 0
            && self.rho.is_none_or(|r| r > 0.0 && r.is_finite());
        if positive {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "solver settings must be positive".into(),
            ))
        }
    }
}

/// `minimize ‖d‖₁ subject to Φ d = s`, optionally with the signal that produced `s`.
#[derive(Clone, Debug)]
pub struct RecoveryProblem {
    sensing: CompactSensingMatrix,
    e: Option<Vec<f64>>,
    s: Vec<f64>,
    settings: SolverSettings,
}

impl RecoveryProblem {
    /// Measures `e` with `Φ`.
    pub fn new(
        sensing: CompactSensingMatrix,
        e: Vec<f64>,
        settings: SolverSettings,
    ) -> Result<Self> {
        let s = sensing.matvec(&e)?;
        Ok(Self {
            sensing,
            e: Some(e),
            s,
            settings,
        })
    }

    pub fn from_measurements(
        sensing: CompactSensingMatrix,
        s: Vec<f64>,
        settings: SolverSettings,
    ) -> Result<Self> {
        if s.len() != sensing.p() {
            return Err(Error::LengthMismatch {
                expected: sensing.p(),
                found: s.len(),
            });
        }
        Ok(Self {
            sensing,
            e: None,
            s,
            settings,
        })
    }

    pub fn sensing(&self) -> &CompactSensingMatrix {
        &self.sensing
    }

    pub fn e(&self) -> Option<&[f64]> {
        self.e.as_deref()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// `‖e‖₀`, when `e` is known.
    pub fn sparsity(&self) -> Option<usize> {
        self.e
            .as_ref()
            .map(|e| e.iter().filter(|&&x| x != 0.0).count())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Feasible and certified optimal within tolerance.
    Converged,
    /// Iteration cap reached; the best iterate is returned.
    MaxIterations,
    /// `s` is not in the range of `Φ`; the minimum-norm least-squares point is returned.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub termination: Termination,
    pub iterations: u64,
    /// `‖Φ d − s‖₂`.
    #[serde(serialize_with = "sig12")]
    pub residual: f64,
    #[serde(serialize_with = "sig12")]
    pub l1_norm: f64,
    /// `‖d‖₁` minus the best dual lower bound found; infinite without one.
    pub duality_gap: f64,
    /// Best `‖d‖₁` over feasible iterates at each check; nonincreasing.
    #[serde(serialize_with = "sig12_vec")]
    pub merit_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    #[serde(serialize_with = "sig12_vec")]
    pub d_hat: Vec<f64>,
    pub status: SolveStatus,
}

/// `‖d − e‖₂ / ‖e‖₂`, or `‖d‖₂` when `e = 0`.
pub fn relative_error(d: &[f64], e: &[f64]) -> f64 {
    let diff: Vec<f64> = d.iter().zip(e).map(|(a, b)| a - b).collect();
    let ne = norm2(e);
    if ne == 0.0 {
        norm2(&diff)
    } else {
        norm2(&diff) / ne
    }
}

/// Length-`m` signal with `sparsity` nonzeros on a uniform support, each
/// `±(1 + U[0,1))` with a uniform sign. Stream `index` of `seed`.
pub fn random_sparse_signal(m: usize, sparsity: usize, seed: u64, index: u64) -> Result<Vec<f64>> {
    if sparsity > m {
        return Err(Error::InvalidInput(format!(
            "sparsity {sparsity} exceeds m = {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut e = vec![0.0; m];
    let mut support = sample(&mut rng, m, sparsity).into_vec();
    support.sort_unstable();
    for j in support {
        let magnitude = 1.0 + rng.random::<f64>();
        e[j] = if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        };
    }
    Ok(e)
}

struct Operator<'a> {
    phi: &'a CompactSensingMatrix,
    /// `(ΦΦᵀ)⁺`.
    pinv: DenseMatrix,
}

impl Operator<'_> {
    fn a(&self, x: &[f64]) -> Vec<f64> {
        self.phi.matvec(x).expect("length checked")
    }

    fn at(&self, y: &[f64]) -> Vec<f64> {
        self.phi.rmatvec(y).expect("length checked")
    }

    fn pinv_mul(&self, v: &[f64]) -> Vec<f64> {
        self.pinv.matvec(v).expect("square p x p")
    }

    /// Orthogonal projection onto `{x : Φx = s}` (least-squares set if infeasible).
    fn project(&self, v: &[f64], s: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = self.a(v).iter().zip(s).map(|(a, b)| a - b).collect();
        let corr = self.at(&self.pinv_mul(&r));
        v.iter().zip(&corr).map(|(a, b)| a - b).collect()
    }

    fn residual(&self, d: &[f64], s: &[f64]) -> f64 {
        let r: Vec<f64> = self.a(d).iter().zip(s).map(|(a, b)| a - b).collect();
        norm2(&r)
    }

    /// Weak-duality bound `sᵀy / max(1, ‖Φᵀy‖∞)` on the ℓ1 minimum.
    fn dual_bound(&self, y: &[f64], s: &[f64]) -> f64 {
        let scale = self.at(y).iter().fold(1.0f64, |m, v| m.max(v.abs()));
        dot(s, y) / scale
    }

    /// Least squares on the columns `q` (0-based). Returns the embedded
    /// solution and the certificate `y = Φ_Q (Φ_QᵀΦ_Q)⁻¹ sign(c)`.
    fn polish(&self, q: &[usize], s: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let cols: Vec<Vec<f64>> = q
            .iter()
            .map(|&j| self.phi.column(j as u64 + 1).expect("in range").into_vec())
            .collect();
        let sub = DenseMatrix::from_columns(self.phi.p(), &cols).ok()?;
        let l = cholesky(&sub.gram())?;
        let c = cholesky_solve(&l, &sub.t_matvec(s).ok()?);
        let signs: Vec<f64> = c.iter().map(|v| v.signum()).collect();
        let y = sub.matvec(&cholesky_solve(&l, &signs)).ok()?;
        let mut d = vec![0.0; self.phi.m() as usize];
        for (&j, &v) in q.iter().zip(&c) {
            d[j] = v;
        }
        Some((d, y))
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Basis pursuit by ADMM on `x ∈ {Φx = s}`, `z = x`, with periodic least-squares
/// polishing on the detected support and a dual certificate for optimality.
///
/// The returned point is the feasible iterate with the smallest ℓ1 norm seen.
pub fn basis_pursuit(prob: &RecoveryProblem) -> Result<RecoveryOutcome> {
    let settings = &prob.settings;
    settings.validate()?;
    let phi = &prob.sensing;
    let s = &prob.s;
    if s.len() != phi.p() {
        return Err(Error::LengthMismatch {
            expected: phi.p(),
            found: s.len(),
        });
    }
    let m = phi.m() as usize;
    let feas_tol = settings.feasibility_tolerance;

    if s.iter().all(|&v| v == 0.0) {
        let status = SolveStatus {
            termination: Termination::Converged,
            iterations: 0,
            residual: 0.0,
            l1_norm: 0.0,
            duality_gap: 0.0,
            merit_history: vec![0.0],
        };
        return Ok(RecoveryOutcome {
            d_hat: vec![0.0; m],
            status,
        });
    }

    let op = Operator {
        phi,
        pinv: symmetric_pinv(&phi.row_gram(), PINV_REL_TOL),
    };
    let x0 = op.at(&op.pinv_mul(s));
    let r0 = op.residual(&x0, s);
    if r0 > feas_tol {
        let status = SolveStatus {
            termination: Termination::Infeasible,
            iterations: 0,
            residual: r0,
            l1_norm: norm1(&x0),
            duality_gap: f64::INFINITY,
            merit_history: Vec::new(),
        };
        return Ok(RecoveryOutcome { d_hat: x0, status });
    }

    let scale = x0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let rho = settings.rho.unwrap_or(10.0 / scale);
    let mut best = (norm1(&x0), x0.clone(), r0);
    let mut lower = f64::NEG_INFINITY;
    let mut history = vec![best.0];
    let mut z = x0;
    let mut u = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;

    let gap_ok = |l1: f64, lower: f64| l1 - lower <= settings.optimality_tolerance * l1.max(1.0);

    while iterations < settings.max_iterations {
        iterations += 1;
        let v: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        let x = op.project(&v, s);
        for i in 0..m {
            z[i] = soft(x[i] + u[i], 1.0 / rho);
            u[i] += x[i] - z[i];
        }
        if iterations % settings.check_every != 0 && iterations != settings.max_iterations {
            continue;
        }

        let mut candidates = vec![op.project(&z, s)];
        let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let support: Vec<usize> = (0..m).filter(|&i| z[i].abs() > 1e-9 * zmax).collect();
        if !support.is_empty() && support.len() <= phi.p() {
            if let Some((d, y)) = op.polish(&support, s) {
                lower = lower.max(op.dual_bound(&y, s));
                candidates.push(d);
            }
        }
        let lambda: Vec<f64> = u.iter().map(|v| rho * v).collect();
        let y = op.pinv_mul(&op.a(&lambda));
        lower = lower.max(op.dual_bound(&y, s));

        for d in candidates {
            let res = op.residual(&d, s);
            let l1 = norm1(&d);
            if res <= feas_tol && l1 < best.0 {
                best = (l1, d, res);
            }
        }
        history.push(best.0);
        if gap_ok(best.0, lower) {
            converged = true;
            break;
        }
    }

    let status = SolveStatus {
        termination: if converged {
            Termination::Converged
        } else {
            Termination::MaxIterations
        },
        iterations,
        residual: best.2,
        l1_norm: best.0,
        duality_gap: (best.0 - lower).max(0.0),
        merit_history: history,
    };
    Ok(RecoveryOutcome {
        d_hat: best.1,
        status,
    })
}

/// Sparsest consistent solution with at most `sparsity` nonzeros, by scanning
/// supports in order of size and then lexicographically.
pub fn exhaustive_sparse_oracle(prob: &RecoveryProblem, sparsity: usize) -> Result<Vec<f64>> {
    exhaustive_sparse_oracle_with_limit(prob, sparsity, DEFAULT_SUPPORT_LIMIT)
}

pub fn exhaustive_sparse_oracle_with_limit(
    prob: &RecoveryProblem,
    sparsity: usize,
    limit: u128,
) -> Result<Vec<f64>> {
    let phi = prob.sensing.materialize()?;
    let m = phi.cols();
    let sparsity = sparsity.min(m);
    if sparsity > super::MAX_ORDER {
        return Err(Error::TooLarge {
            what: "support size",
            size: sparsity as u128,
            limit: super::MAX_ORDER as u128,
        });
    }
    let supports = binomial(m as u64, sparsity as u64);
    if supports > limit.into() {
        return Err(Error::TooLarge {
            what: "supports in exhaustive search",
            size: u128::try_from(&supports).unwrap_or(u128::MAX),
            limit,
        });
    }
    let s = &prob.s;
    let tol = CONSISTENT_RESIDUAL * norm2(s).max(1.0);
    if norm2(s) <= tol {
        return Ok(vec![0.0; m]);
    }
    for size in 1..=sparsity {
        let found = (0..m).into_par_iter().find_map_first(|first| {
            let flow = for_each_subset_with_first(m, size, first, |q| {
                let sub = phi.select_columns(q);
                let Some(l) = cholesky(&sub.gram()) else {
                    return ControlFlow::Continue(());
                };
                let c = cholesky_solve(&l, &sub.t_matvec(s).expect("length p"));
                let fit = sub.matvec(&c).expect("length |q|");
                let res: Vec<f64> = fit.iter().zip(s).map(|(a, b)| a - b).collect();
                if norm2(&res) <= tol {
                    let mut d = vec![0.0; m];
                    for (&j, &v) in q.iter().zip(&c) {
                        d[j] = v;
                    }
                    ControlFlow::Break(d)
                } else {
                    ControlFlow::Continue(())
                }
            });
            match flow {
                ControlFlow::Break(d) => Some(d),
                ControlFlow::Continue(()) => None,
            }
        });
        if let Some(d) = found {
            return Ok(d);
        }
    }
    Err(Error::NoSparseSolution { sparsity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BinaryMatrix;

    fn compact(rows: &[&str]) -> CompactSensingMatrix {
        CompactSensingMatrix::from_generator(&BinaryMatrix::from_bit_strs(rows).unwrap()).unwrap()
    }

    #[test]
    fn random_signals() {
        let e = random_sparse_signal(15, 3, 5, 2).unwrap();
        assert_eq!(e.iter().filter(|v| **v != 0.0).count(), 3);
        assert!(e.iter().all(|v| *v == 0.0 || (1.0..2.0).contains(&v.abs())));
        assert_eq!(e, random_sparse_signal(15, 3, 5, 2).unwrap());
        assert_ne!(e, random_sparse_signal(15, 3, 5, 3).unwrap());
        assert!(random_sparse_signal(3, 4, 0, 0).is_err());
    }

    #[test]
    fn zero_measurement() {
        let prob = RecoveryProblem::new(
            compact(&["1100", "0110"]),
            vec![0.0; 3],
            SolverSettings::default(),
        )
        .unwrap();
        let out = basis_pursuit(&prob).unwrap();
        assert_eq!(out.d_hat, vec![0.0; 3]);
        assert_eq!(out.status.termination, Termination::Converged);
        assert_eq!(exhaustive_sparse_oracle(&prob, 2).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn one_sparse_on_orthogonal_code() {
        for j in 0..3 {
            let mut e = vec![0.0; 3];
            e[j] = -2.5;
            let prob =
                RecoveryProblem::new(compact(&["1100", "0110"]), e.clone(), Default::default())
                    .unwrap();
            let out = basis_pursuit(&prob).unwrap();
            assert_eq!(out.status.termination, Termination::Converged);
            assert!(relative_error(&out.d_hat, &e) < 1e-6);
            let oracle = exhaustive_sparse_oracle(&prob, 1).unwrap();
            assert!(relative_error(&oracle, &e) < 1e-9);
        }
    }

    #[test]
    fn merit_is_nonincreasing() {
        let s = compact(&["11100000", "00111000", "10000111"]);
        let mut e = vec![0.0; 7];
        e[2] = 1.0;
        e[5] = -0.5;
        let prob = RecoveryProblem::new(s, e, Default::default()).unwrap();
        let out = basis_pursuit(&prob).unwrap();
        assert!(out.status.merit_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.status.residual <= 1e-9);
    }

    #[test]
    fn deterministic() {
        let s = compact(&["11100000", "00111000", "10000111"]);
        let e = vec![0.0, 0.3, 0.0, 0.0, 0.0, -1.0, 0.0];
        let prob = RecoveryProblem::new(s, e, Default::default()).unwrap();
        assert_eq!(basis_pursuit(&prob).unwrap(), basis_pursuit(&prob).unwrap());
    }

    #[test]
    fn inconsistent_measurement_has_no_sparse_solution() {
        // Every column of the p = 4 code has entry sum zero, so the all-ones
        // vector is orthogonal to the column span.
        let s = compact(&["1100", "0110"]);
        let prob =
            RecoveryProblem::from_measurements(s, vec![1.0, 1.0, 1.0, 1.0], Default::default())
                .unwrap();
        assert!(matches!(
            exhaustive_sparse_oracle(&prob, 3),
            Err(Error::NoSparseSolution { sparsity: 3 })
        ));
        let out = basis_pursuit(&prob).unwrap();
        assert_eq!(out.status.termination, Termination::Infeasible);
    }

    #[test]
    fn dimension_and_settings_checks() {
        let s = compact(&["1100", "0110"]);
        assert!(matches!(
            RecoveryProblem::new(s.clone(), vec![0.0; 2], Default::default()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(
            RecoveryProblem::from_measurements(s.clone(), vec![0.0; 3], Default::default())
                .is_err()
        );
        let bad = SolverSettings {
            feasibility_tolerance: 0.0,
            ..Default::default()
        };
        let prob = RecoveryProblem::new(s, vec![1.0, 0.0, 0.0], bad).unwrap();
        assert!(basis_pursuit(&prob).is_err());
    }

    #[test]
    fn support_guard() {
        let s = compact(&["11100000", "00111000", "10000111"]);
        let prob = RecoveryProblem::new(s, vec![1.0; 7], Default::default()).unwrap();
        assert!(matches!(
            exhaustive_sparse_oracle_with_limit(&prob, 3, 34),
            Err(Error::TooLarge { .. })
        ));
    }
}

//! The two worked schedules: a two-qubit product-to-entangled evolution and
//! a four-variable 2-SAT instance with an oracle Hamiltonian.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::operator::{pauli_z, projector_x, HermitianOperator};
use super::schedule::{gap_profile, FrameClock, FuseRule, ScheduleExpr};
use super::AqcError;

/// `S(lambda) = -l^2 ln l^2 - (1 - l^2) ln (1 - l^2)` (natural log).
pub fn entanglement_entropy(lambda: f64) -> Result<f64, AqcError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(AqcError::ParameterOutOfRange("lambda", lambda));
    }
    let p = lambda * lambda;
    let q = 1.0 - p;
    Ok(-p * p.ln() - q * q.ln())
}

#[derive(Debug, Clone)]
pub struct EntanglementProblem {
    pub a: f64,
    pub lambda: f64,
    /// `P_x^0 (x) 1`.
    pub left_term: HermitianOperator,
    /// `1 (x) P_x^1`.
    pub right_term: HermitianOperator,
    pub h0: HermitianOperator,
    pub h1: HermitianOperator,
    pub standard: ScheduleExpr,
    pub o1: ScheduleExpr,
    pub o1_prime: ScheduleExpr,
    pub no_deformation: ScheduleExpr,
}

impl EntanglementProblem {
    /// Clock with `t_0 = t`, `t_1 = a * min(1, t / alpha)`.
    pub fn clock(&self, alpha: f64) -> Result<FrameClock, AqcError> {
        FrameClock::scaled_pair(self.a, alpha)
    }

    /// Final ground state `lambda |00> + sqrt(1 - lambda^2) |11>`.
    pub fn target_state(&self) -> Vec<Complex64> {
        entangled_state(self.lambda)
    }

    pub fn schedules(&self) -> [(&'static str, &ScheduleExpr); 4] {
        [
            ("standard", &self.standard),
            ("O1", &self.o1),
            ("O1prime", &self.o1_prime),
            ("no_deformation", &self.no_deformation),
        ]
    }
}

fn entangled_state(lambda: f64) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 4];
    v[0] = Complex64::new(lambda, 0.0);
    v[3] = Complex64::new((1.0 - lambda * lambda).sqrt(), 0.0);
    v
}

pub fn build_entanglement_problem(a: f64, lambda: f64) -> Result<EntanglementProblem, AqcError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(AqcError::ParameterOutOfRange("a", a));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(AqcError::ParameterOutOfRange("lambda", lambda));
    }
    let left_term = projector_x(0, 2, 0)?;
    let right_term = projector_x(1, 2, 1)?;
    let h0 = left_term.combine(1.0 - a, &right_term, a)?;
    let h1 = HermitianOperator::projector_complement(&entangled_state(lambda))?;

    let l = || ScheduleExpr::leaf("P0x1", left_term.clone());
    let r = || ScheduleExpr::leaf("1xP1", right_term.clone());
    let target = || ScheduleExpr::leaf("H1", h1.clone());
    let f0 = FuseRule::Frame(0);
    let f1 = FuseRule::Frame(1);

    let standard = ScheduleExpr::fuse(f0, ScheduleExpr::leaf("H0", h0.clone()), target());
    let o1 = ScheduleExpr::fuse(f0, ScheduleExpr::fuse(f1, l(), r()), target());
    let o1_prime = ScheduleExpr::fuse(
        f0,
        ScheduleExpr::fuse(f1, l(), target()),
        ScheduleExpr::fuse(f1, r(), target()),
    );
    let no_deformation = ScheduleExpr::fuse(
        f0,
        ScheduleExpr::fuse(FuseRule::ClampedTime(a), l(), r()),
        target(),
    );
    Ok(EntanglementProblem {
        a,
        lambda,
        left_term,
        right_term,
        h0,
        h1,
        standard,
        o1,
        o1_prime,
        no_deformation,
    })
}

/// Computation times of the four schedules at one `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub entropy: f64,
    pub standard: f64,
    pub o1: f64,
    pub o1_prime: f64,
    pub no_deformation: f64,
}

/// `count` evenly spaced values in `[0.05, 0.95]`.
pub fn default_lambdas(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        n => (0..n)
            .map(|i| 0.05 + 0.9 * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn entanglement_sweep(
    a: f64,
    alpha: f64,
    lambdas: &[f64],
    grid: usize,
    degeneracy_tol: f64,
) -> Result<Vec<SweepRow>, AqcError> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let problem = build_entanglement_problem(a, lambda)?;
            let clock = problem.clock(alpha)?;
            let time = |e: &ScheduleExpr| -> Result<f64, AqcError> {
                Ok(gap_profile(e, &clock, grid, degeneracy_tol)?.computation_time)
            };
            Ok(SweepRow {
                lambda,
                entropy: entanglement_entropy(lambda)?,
                standard: time(&problem.standard)?,
                o1: time(&problem.o1)?,
                o1_prime: time(&problem.o1_prime)?,
                no_deformation: time(&problem.no_deformation)?,
            })
        })
        .collect()
}

/// The four satisfying assignments of
/// `((x1 & x2) | (!x1 & !x2)) & ((x3 & x4) | (!x3 & !x4))`.
pub const TWOSAT_SOLUTIONS: [[u8; 4]; 4] = [[0, 0, 0, 0], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 1, 1]];

#[derive(Debug, Clone)]
pub struct TwoSatProblem {
    pub h0: HermitianOperator,
    pub oracle: HermitianOperator,
    pub h1: HermitianOperator,
    /// The four clause projectors `P^4, P^2 N^2, N^2 P^2, N^4` with
    /// `P = P_z`, `N = 1 - P_z`.
    pub clause_terms: [HermitianOperator; 4],
    pub g: ScheduleExpr,
    pub standard: ScheduleExpr,
    pub standard_g: ScheduleExpr,
    pub o1: ScheduleExpr,
    pub o1_prime: ScheduleExpr,
    pub o1_g: ScheduleExpr,
    pub o1_prime_g: ScheduleExpr,
}

impl TwoSatProblem {
    pub fn clock(alpha: f64) -> Result<FrameClock, AqcError> {
        FrameClock::new(alpha, 2)
    }

    /// Uniform superposition of the satisfying assignments.
    pub fn oracle_state() -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        for bits in TWOSAT_SOLUTIONS {
            let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            v[idx] = Complex64::new(0.5, 0.0);
        }
        v
    }

    pub fn schedules(&self) -> [(&'static str, &ScheduleExpr); 6] {
        [
            ("standard_H1", &self.standard),
            ("standard_G", &self.standard_g),
            ("O1", &self.o1),
            ("O1prime", &self.o1_prime),
            ("O1_G", &self.o1_g),
            ("O1prime_G", &self.o1_prime_g),
        ]
    }
}

fn product(factors: &[&DMatrix<f64>]) -> Result<HermitianOperator, AqcError> {
    let m = factors
        .iter()
        .fold(DMatrix::<f64>::identity(1, 1), |acc, f| acc.kronecker(*f));
    HermitianOperator::from_real(m)
}

pub fn build_twosat_problem() -> Result<TwoSatProblem, AqcError> {
    let n = 4;
    let id2 = DMatrix::<f64>::identity(2, 2);
    let p = (&id2 - pauli_z()) * 0.5;
    let q = &id2 - &p;

    // Uniform convex combination of the single-site projectors.
    let mut h0 = HermitianOperator::zeros(n);
    for site in 0..n {
        h0 = h0.combine(1.0, &projector_x(0, n, site)?, 0.25)?;
    }

    let clause_terms = [
        product(&[&p, &p, &p, &p])?,
        product(&[&p, &p, &q, &q])?,
        product(&[&q, &q, &p, &p])?,
        product(&[&q, &q, &q, &q])?,
    ];
    let id = HermitianOperator::identity(n);
    let mut sum = HermitianOperator::zeros(n);
    for term in &clause_terms {
        sum = sum.combine(1.0, term, 1.0)?;
    }
    let h1 = id.combine(1.0, &sum, -0.25)?;
    let oracle = HermitianOperator::projector_complement(&TwoSatProblem::oracle_state())?;

    let complement = |i: usize, name: &str| -> Result<ScheduleExpr, AqcError> {
        Ok(ScheduleExpr::leaf(name, id.combine(1.0, &clause_terms[i], -1.0)?))
    };
    let star = FuseRule::HalfTime;
    let g = ScheduleExpr::fuse(
        star,
        ScheduleExpr::fuse(star, complement(0, "C1")?, complement(1, "C2")?),
        ScheduleExpr::fuse(star, complement(2, "C3")?, complement(3, "C4")?),
    );

    let leaf_h0 = || ScheduleExpr::leaf("H0", h0.clone());
    let leaf_oracle = || ScheduleExpr::leaf("Horacle", oracle.clone());
    let leaf_h1 = || ScheduleExpr::leaf("H1", h1.clone());
    let f0 = FuseRule::Frame(0);
    let f1 = FuseRule::Frame(1);

    let deformed_a = |target: &dyn Fn() -> ScheduleExpr| {
        ScheduleExpr::fuse(f0, ScheduleExpr::fuse(f1, leaf_h0(), leaf_oracle()), target())
    };
    let deformed_b = |target: &dyn Fn() -> ScheduleExpr| {
        ScheduleExpr::fuse(
            f0,
            ScheduleExpr::fuse(f1, leaf_h0(), target()),
            ScheduleExpr::fuse(f1, leaf_oracle(), target()),
        )
    };
    let g_leaf = || g.clone();

    Ok(TwoSatProblem {
        standard: ScheduleExpr::fuse(f0, leaf_h0(), leaf_h1()),
        standard_g: ScheduleExpr::fuse(f0, leaf_h0(), g.clone()),
        o1: deformed_a(&leaf_h1),
        o1_prime: deformed_b(&leaf_h1),
        o1_g: deformed_a(&g_leaf),
        o1_prime_g: deformed_b(&g_leaf),
        h0,
        oracle,
        h1,
        clause_terms,
        g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aqc::operator::{basis_state, overlap, product_state};
    use crate::aqc::schedule::eval_schedule;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(
            entanglement_entropy(1.0 / 2f64.sqrt()).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert!(entanglement_entropy(1e-8).unwrap() < 1e-12);
        for l in [0.1f64, 0.3, 0.55, 0.9] {
            let mirror = (1.0 - l * l).sqrt();
            assert_abs_diff_eq!(
                entanglement_entropy(l).unwrap(),
                entanglement_entropy(mirror).unwrap(),
                epsilon = 1e-14
            );
        }
        assert!(entanglement_entropy(0.0).is_err());
        assert!(entanglement_entropy(1.0).is_err());
    }

    #[test]
    fn entanglement_endpoints() {
        let problem = build_entanglement_problem(0.95, 0.4).unwrap();
        let clock = problem.clock(0.5).unwrap();
        let h = eval_schedule(&problem.standard, 0.0, &clock).unwrap();
        let (vals, vecs) = h.eigenpairs();
        assert!(vals[1] - vals[0] > 1e-3);
        let s = 0.5f64.sqrt();
        let plus = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        let minus = [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
        assert_abs_diff_eq!(overlap(&vecs[0], &product_state(&[plus, minus])), 1.0, epsilon = 1e-12);

        for expr in [&problem.standard, &problem.o1, &problem.no_deformation] {
            let h = eval_schedule(expr, 1.0, &clock).unwrap();
            assert!(h.max_abs_diff(&problem.h1) < 1e-15);
            let (vals, vecs) = h.eigenpairs();
            assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(overlap(&vecs[0], &problem.target_state()), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn entanglement_parameter_checks() {
        assert!(build_entanglement_problem(1.0, 0.5).is_err());
        assert!(build_entanglement_problem(0.5, 0.0).is_err());
    }

    #[test]
    fn twosat_problem_hamiltonian_spectrum() {
        let problem = build_twosat_problem().unwrap();
        for idx in 0..16usize {
            let bits: Vec<u8> = (0..4).map(|k| ((idx >> (3 - k)) & 1) as u8).collect();
            let s = basis_state(&bits);
            let out = problem.h1.apply(&s);
            let expected = if TWOSAT_SOLUTIONS.iter().any(|sol| sol[..] == bits[..]) { 0.75 } else { 1.0 };
            for (o, v) in out.iter().zip(&s) {
                assert!((o - v * expected).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn twosat_oracle_and_initial_state() {
        let problem = build_twosat_problem().unwrap();
        let v = TwoSatProblem::oracle_state();
        assert!(problem.oracle.apply(&v).iter().all(|c| c.norm() <= 1e-12));
        let (vals, vecs) = problem.h0.eigenpairs();
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-12);
        assert!(vals[1] > 0.2);
        let s = 0.5f64.sqrt();
        let plus = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        assert_abs_diff_eq!(overlap(&vecs[0], &product_state(&[plus; 4])), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn g_converges_to_problem_hamiltonian() {
        let problem = build_twosat_problem().unwrap();
        let clock = TwoSatProblem::clock(0.5).unwrap();
        for t in [1.0, 1.0 - 1e-12] {
            let g = eval_schedule(&problem.g, t, &clock).unwrap();
            assert!(g.max_abs_diff(&problem.h1) <= 1e-10);
        }
        let early = eval_schedule(&problem.g, 0.2, &clock).unwrap();
        assert!(early.max_abs_diff(&problem.h1) > 1e-3);
    }

    #[test]
    fn lambda_grid() {
        let l = default_lambdas(25);
        assert_eq!(l.len(), 25);
        assert_abs_diff_eq!(l[0], 0.05);
        assert_abs_diff_eq!(l[24], 0.95, epsilon = 1e-15);
    }
}

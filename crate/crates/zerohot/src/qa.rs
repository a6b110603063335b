//! Exact transverse-field annealing on small encoded systems.
//!
//! The annealing Hamiltonian is the Ising energy on the diagonal plus a
//! uniform transverse field `-gamma sum_k sigma^x_k`, represented densely in
//! the basis of `sigma^z` product states. Basis order is lexicographic over
//! the model's spin order: spin 0 is the most significant bit, an up spin is
//! bit 0; basis index 0 is all-up, the anchored "keep the candidate" state.
//!
//! Ground levels that are exactly degenerate (notably at `gamma = 0`, where
//! the penalty term leaves a Q-fold degenerate manifold per variable) are
//! handled by averaging basis probabilities over an orthonormal basis of the
//! degenerate subspace, which is the basis-independent answer.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::encoding::{basis_spins, DecodeOutcome, IsingModel};
use crate::error::{input_err, size_err, Result};
use crate::exec;
use crate::potts::{CandidateSolution, IntegerAssignment, PottsInstance};

/// Largest spin count the dense representation accepts.
pub const MAX_DENSE_SPINS: usize = 14;

/// Matrices must be symmetric to this absolute tolerance.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Eigenvalues within `1e-10 * spectral range` of each other share a
/// degenerate cluster.
pub const DEGENERACY_SCALE: f64 = 1e-10;

/// Basis states below this probability are ignored when reading out an
/// annealed solution.
pub const READOUT_THRESHOLD: f64 = 1e-9;

/// Readout probabilities within this window count as tied; ties resolve to
/// the lowest basis index. Degenerate-subspace averaging leaves states equal
/// only up to numerical leakage, far below this window.
pub const READOUT_TIE_WINDOW: f64 = 1e-9;

/// Default final transverse field for [`adiabatic_solution`].
pub const DEFAULT_GAMMA_FINAL: f64 = 1e-6;

/// Real symmetric operator on the full spin Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_spins: usize,
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    /// Wraps a matrix, checking that it is square with power-of-two size and
    /// symmetric within [`SYMMETRY_TOLERANCE`].
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim == 0 || !dim.is_power_of_two() {
            return input_err("operator must be square with power-of-two dimension");
        }
        let n_spins = dim.trailing_zeros() as usize;
        if n_spins > MAX_DENSE_SPINS {
            return size_err(format!("{n_spins} spins exceed the dense bound {MAX_DENSE_SPINS}"));
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                if (matrix[(r, c)] - matrix[(c, r)]).abs() > SYMMETRY_TOLERANCE {
                    return input_err(format!("matrix is not symmetric at ({r}, {c})"));
                }
            }
        }
        Ok(Self { n_spins, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Lowest eigenpairs of a symmetric operator, ascending.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    values: Vec<f64>,
    vectors: Vec<DVector<f64>>,
    degeneracy_tolerance: f64,
    max_residual: f64,
    operator_norm: f64,
}

impl SpectrumResult {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn degeneracy_tolerance(&self) -> f64 {
        self.degeneracy_tolerance
    }

    /// Worst `|H v - lambda v|` over the returned pairs.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Spectral norm of the decomposed operator.
    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    /// Groups the returned eigenvalues into degenerate clusters: consecutive
    /// values closer than the degeneracy tolerance share a cluster.
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.values.len() {
            if k == self.values.len()
                || self.values[k] - self.values[k - 1] > self.degeneracy_tolerance
            {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    fn ground_cluster(&self) -> std::ops::Range<usize> {
        let mut end = 1;
        while end < self.values.len()
            && self.values[end] - self.values[end - 1] <= self.degeneracy_tolerance
        {
            end += 1;
        }
        0..end
    }

    /// Basis-state probabilities of the ground level, averaged over an
    /// orthonormal basis of the degenerate ground subspace.
    pub fn ground_probabilities(&self) -> Vec<f64> {
        let cluster = self.ground_cluster();
        let dim = self.vectors[0].len();
        let weight = 1.0 / cluster.len() as f64;
        let mut probs = vec![0.0; dim];
        for m in cluster {
            for (p, amp) in probs.iter_mut().zip(self.vectors[m].iter()) {
                *p += weight * amp * amp;
            }
        }
        probs
    }

    /// Energy gap from the ground level to the first level strictly above
    /// its degenerate cluster; zero when the whole returned spectrum is one
    /// cluster.
    pub fn gap_above_ground(&self) -> f64 {
        let cluster = self.ground_cluster();
        if cluster.end < self.values.len() {
            self.values[cluster.end] - self.values[0]
        } else {
            0.0
        }
    }
}

/// One row of a transverse-field sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub gamma: f64,
    /// Probability of reading out the anchored (all-up) state.
    pub p_zero_hot: f64,
    /// For the single-variable penalty sweep: probability of one specific
    /// single-indicator state (all Q-1 agree by symmetry). For model sweeps:
    /// total probability of feasible states other than the anchored one.
    pub p_one_hot: f64,
    pub p_infeasible: f64,
    pub gap: f64,
    pub ground_energy: f64,
}

/// Observables along a strictly monotone grid of transverse fields.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCurve {
    points: Vec<SweepPoint>,
}

impl SweepCurve {
    fn new(points: Vec<SweepPoint>) -> Result<Self> {
        check_grid_monotone(points.iter().map(|p| p.gamma))?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,p_zero_hot,p_one_hot,p_infeasible,gap,ground_energy\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.gamma, p.p_zero_hot, p.p_one_hot, p.p_infeasible, p.gap, p.ground_energy
            ));
        }
        out
    }
}

fn check_grid_monotone(grid: impl IntoIterator<Item = f64>) -> Result<()> {
    let grid: Vec<f64> = grid.into_iter().collect();
    if grid.is_empty() {
        return input_err("grid must not be empty");
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return input_err("grid values must be finite");
    }
    let ascending = grid.windows(2).all(|w| w[0] < w[1]);
    let descending = grid.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return input_err("grid must be strictly monotone");
    }
    Ok(())
}

/// Dense annealing Hamiltonian: Ising energies on the diagonal, `-|gamma|`
/// between basis states that differ by one spin flip. A negative `gamma` is
/// physically equivalent to its magnitude and is folded with a warning.
pub fn build_qa_hamiltonian(model: &IsingModel, gamma: f64) -> Result<DenseOperator> {
    let n = model.num_spins();
    if n > MAX_DENSE_SPINS {
        return size_err(format!("{n} spins exceed the dense bound {MAX_DENSE_SPINS}"));
    }
    if !gamma.is_finite() {
        return input_err("transverse field must be finite");
    }
    if gamma < 0.0 {
        log::warn!("negative transverse field {gamma}; using its magnitude");
    }
    let g = gamma.abs();
    let dim = 1usize << n;
    let diag = exec::map_indices(dim, |b| model.energy_unchecked(&basis_spins(b, n)));
    let mut matrix = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        matrix[(b, b)] = diag[b];
        if g != 0.0 {
            for k in 0..n {
                matrix[(b, b ^ (1 << (n - 1 - k)))] = -g;
            }
        }
    }
    Ok(DenseOperator { n_spins: n, matrix })
}

/// The `k` lowest eigenpairs of a symmetric operator.
pub fn eigensolve_lowest(op: &DenseOperator, k: usize) -> Result<SpectrumResult> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return input_err(format!("requested {k} eigenpairs of a {dim}-dimensional operator"));
    }
    let eig = op.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let full: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let spectral_range = full[dim - 1] - full[0];
    let operator_norm = full[0].abs().max(full[dim - 1].abs());
    let values: Vec<f64> = full[..k].to_vec();
    let vectors: Vec<DVector<f64>> = order[..k]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let max_residual = values
        .iter()
        .zip(&vectors)
        .map(|(&lam, v)| (&op.matrix * v - v * lam).norm())
        .fold(0.0, f64::max);
    Ok(SpectrumResult {
        values,
        vectors,
        degeneracy_tolerance: DEGENERACY_SCALE * spectral_range,
        max_residual,
        operator_norm,
    })
}

/// How a basis state reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StateClass {
    Anchor,
    Feasible,
    Infeasible,
}

fn classify_states(model: &IsingModel) -> Vec<StateClass> {
    let n = model.num_spins();
    (0..1usize << n)
        .map(|b| {
            match model
                .decode(&basis_spins(b, n))
                .expect("basis state is a valid configuration")
            {
                DecodeOutcome::Assignment(s) => {
                    if model.anchor() == Some(&s) {
                        StateClass::Anchor
                    } else {
                        StateClass::Feasible
                    }
                }
                DecodeOutcome::Infeasible(_) => StateClass::Infeasible,
            }
        })
        .collect()
}

/// Readout probabilities of the single-variable penalty model across a
/// transverse-field grid.
///
/// The model has one variable with `q` values, no rewards, and penalty
/// weight `lambda`; its spins are the `q - 1` non-candidate indicators.
/// Each row reports the probability of the anchored all-up state, of one
/// single-indicator state (the `q - 1` of them agree by symmetry, which is
/// asserted), and of the infeasible remainder.
pub fn penalty_probability_sweep(q: usize, lambda: f64, grid: &[f64]) -> Result<SweepCurve> {
    if q < 2 || q > MAX_DENSE_SPINS + 1 {
        return size_err(format!("value count {q} outside 2..={}", MAX_DENSE_SPINS + 1));
    }
    check_grid_monotone(grid.iter().copied())?;
    let inst = PottsInstance::new(1, q, Vec::new(), Vec::new())?;
    let candidate = CandidateSolution::from_assignment(vec![1], q)?;
    let model = crate::encoding::encode_zero_hot(&inst, &candidate, lambda)?;
    let n = model.num_spins();
    let singles: Vec<usize> = (0..n).map(|k| 1usize << (n - 1 - k)).collect();
    let points: Vec<Result<SweepPoint>> = exec::map_slice(grid, |&gamma| {
        let spectrum = eigensolve_lowest(&build_qa_hamiltonian(&model, gamma)?, 1 << n)?;
        let probs = spectrum.ground_probabilities();
        let one_hot: Vec<f64> = singles.iter().map(|&b| probs[b]).collect();
        let mean = one_hot.iter().sum::<f64>() / one_hot.len() as f64;
        let spread = one_hot
            .iter()
            .map(|p| (p - mean).abs())
            .fold(0.0, f64::max);
        assert!(
            spread <= 1e-10,
            "single-indicator probabilities split by {spread} at gamma={gamma}"
        );
        let p_zero_hot = probs[0];
        let feasible_mass = p_zero_hot + one_hot.iter().sum::<f64>();
        Ok(SweepPoint {
            gamma,
            p_zero_hot,
            p_one_hot: mean,
            p_infeasible: (1.0 - feasible_mass).max(0.0),
            gap: spectrum.gap_above_ground(),
            ground_energy: spectrum.values()[0],
        })
    });
    SweepCurve::new(points.into_iter().collect::<Result<_>>()?)
}

/// Gap and readout probabilities of an encoded model across a grid, plus the
/// location and value of the smallest gap.
///
/// Unlike the single-variable sweep, `p_one_hot` here aggregates all feasible
/// basis states other than the anchored one.
pub fn min_gap(model: &IsingModel, grid: &[f64]) -> Result<(f64, f64, SweepCurve)> {
    if model.num_spins() > MAX_DENSE_SPINS {
        return size_err(format!(
            "{} spins exceed the dense bound {MAX_DENSE_SPINS}",
            model.num_spins()
        ));
    }
    check_grid_monotone(grid.iter().copied())?;
    let classes = classify_states(model);
    let points: Vec<Result<SweepPoint>> = exec::map_slice(grid, |&gamma| {
        let spectrum =
            eigensolve_lowest(&build_qa_hamiltonian(model, gamma)?, 1 << model.num_spins())?;
        let probs = spectrum.ground_probabilities();
        let mass = |class: StateClass| -> f64 {
            probs
                .iter()
                .zip(&classes)
                .filter(|&(_, &c)| c == class)
                .map(|(p, _)| p)
                .sum()
        };
        Ok(SweepPoint {
            gamma,
            p_zero_hot: mass(StateClass::Anchor),
            p_one_hot: mass(StateClass::Feasible),
            p_infeasible: mass(StateClass::Infeasible),
            gap: spectrum.gap_above_ground(),
            ground_energy: spectrum.values()[0],
        })
    });
    let curve = SweepCurve::new(points.into_iter().collect::<Result<_>>()?)?;
    let best = curve
        .points()
        .iter()
        .min_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap())
        .expect("grid is non-empty");
    Ok((best.gamma, best.gap, curve))
}

/// Outcome of reading the annealed ground state back as an assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AnnealOutcome {
    Assignment {
        assignment: IntegerAssignment,
        probability: f64,
    },
    /// No basis state above the readout threshold decodes feasibly.
    Infeasible,
}

/// Ground state at a small final transverse field, read out as the most
/// probable feasible basis state. Probabilities within
/// [`READOUT_TIE_WINDOW`] of the maximum count as tied, and ties resolve to
/// the lowest basis index, so exactly degenerate optima read out
/// deterministically (favoring the anchored state when it is among them).
pub fn adiabatic_solution(model: &IsingModel, gamma_final: f64) -> Result<AnnealOutcome> {
    let n = model.num_spins();
    if n > MAX_DENSE_SPINS {
        return size_err(format!("{n} spins exceed the dense bound {MAX_DENSE_SPINS}"));
    }
    let spectrum = eigensolve_lowest(&build_qa_hamiltonian(model, gamma_final)?, 1 << n)?;
    let probs = spectrum.ground_probabilities();
    let classes = classify_states(model);
    let feasible = |b: usize| classes[b] != StateClass::Infeasible && probs[b] > READOUT_THRESHOLD;
    let best_prob = (0..probs.len())
        .filter(|&b| feasible(b))
        .map(|b| probs[b])
        .fold(f64::NEG_INFINITY, f64::max);
    let best = (0..probs.len())
        .find(|&b| feasible(b) && probs[b] >= best_prob - READOUT_TIE_WINDOW)
        .map(|b| (b, probs[b]));
    match best {
        None => Ok(AnnealOutcome::Infeasible),
        Some((b, probability)) => match model.decode(&basis_spins(b, n))? {
            DecodeOutcome::Assignment(assignment) => {
                Ok(AnnealOutcome::Assignment { assignment, probability })
            }
            DecodeOutcome::Infeasible(_) => unreachable!("infeasible states were filtered"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode_one_hot, encode_zero_hot, lambda_big};
    use approx::assert_abs_diff_eq;

    fn single_spin_model(g1: f64, g2: f64, lambda: f64) -> IsingModel {
        let inst = PottsInstance::new(1, 2, Vec::new(), vec![vec![g1, g2]]).unwrap();
        let cand = CandidateSolution::from_assignment(vec![1], 2).unwrap();
        encode_zero_hot(&inst, &cand, lambda).unwrap()
    }

    fn penalty_model(q: usize, lambda: f64) -> IsingModel {
        let inst = PottsInstance::new(1, q, Vec::new(), Vec::new()).unwrap();
        let cand = CandidateSolution::from_assignment(vec![1], q).unwrap();
        encode_zero_hot(&inst, &cand, lambda).unwrap()
    }

    #[test]
    fn single_transverse_spin_has_symmetric_levels() {
        let model = single_spin_model(0.0, 0.0, 0.0);
        let op = build_qa_hamiltonian(&model, 1.0).unwrap();
        let spec = eigensolve_lowest(&op, 2).unwrap();
        assert_abs_diff_eq!(spec.values()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.values()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_field_matches_its_magnitude() {
        let model = penalty_model(3, 1.0);
        let plus = build_qa_hamiltonian(&model, 0.7).unwrap();
        let minus = build_qa_hamiltonian(&model, -0.7).unwrap();
        assert_eq!(plus, minus);
    }

    #[test]
    fn penalty_diagonal_takes_three_levels() {
        let model = penalty_model(4, 1.0);
        let op = build_qa_hamiltonian(&model, 0.0).unwrap();
        let mut diag: Vec<f64> = (0..8).map(|b| op.matrix()[(b, b)]).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [0.5, 0.5, 0.5, 0.5, 4.5, 4.5, 4.5, 12.5];
        for (d, e) in diag.iter().zip(expect) {
            assert_abs_diff_eq!(*d, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_field_spectrum_is_the_energy_multiset() {
        let inst = PottsInstance::fully_connected_ferromagnet(3, 3, 1.0).unwrap();
        let cand = CandidateSolution::from_assignment(vec![1, 2, 1], 3).unwrap();
        let model = encode_zero_hot(&inst, &cand, 1.3).unwrap();
        let n = model.num_spins();
        let op = build_qa_hamiltonian(&model, 0.0).unwrap();
        let spec = eigensolve_lowest(&op, 1 << n).unwrap();
        let mut energies: Vec<f64> = (0..1usize << n)
            .map(|b| model.energy(&basis_spins(b, n)).unwrap())
            .collect();
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in spec.values().iter().zip(energies) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn eigenpairs_satisfy_the_residual_bound() {
        let model = penalty_model(5, 2.0);
        let op = build_qa_hamiltonian(&model, 0.8).unwrap();
        let spec = eigensolve_lowest(&op, op.dim()).unwrap();
        assert!(spec.max_residual() <= 1e-9 * spec.operator_norm().max(1.0));
    }

    #[test]
    fn diagonal_two_by_two_is_solved_exactly() {
        let op = DenseOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.0, 1.0,
        ])))
        .unwrap();
        let spec = eigensolve_lowest(&op, 1).unwrap();
        assert_eq!(spec.values()[0], 0.0);
        assert_abs_diff_eq!(spec.vectors()[0][0].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.vectors()[0][1].abs(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_matrices_are_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(DenseOperator::from_matrix(m).is_err());
        let m3 = DMatrix::<f64>::zeros(3, 3);
        assert!(DenseOperator::from_matrix(m3).is_err());
    }

    #[test]
    fn strong_field_ground_state_is_uniform() {
        let model = penalty_model(4, 1.0);
        let spec =
            eigensolve_lowest(&build_qa_hamiltonian(&model, 1e3).unwrap(), 8).unwrap();
        for p in spec.ground_probabilities() {
            assert_abs_diff_eq!(p, 0.125, epsilon = 2e-3);
        }
    }

    #[test]
    fn weak_field_readout_splits_half_to_the_anchor() {
        let curve = penalty_probability_sweep(4, 1.0, &[1e-3]).unwrap();
        let p = curve.points()[0];
        assert_abs_diff_eq!(p.p_zero_hot, 0.5, epsilon = 1e-2);
        assert_abs_diff_eq!(p.p_one_hot, 1.0 / 6.0, epsilon = 1e-2);
    }

    #[test]
    fn anchor_dominates_across_the_sweep() {
        for q in [3usize, 4, 5] {
            let grid: Vec<f64> = (0..30).map(|k| 1e-3 * 10f64.powf(k as f64 / 6.0)).collect();
            let curve = penalty_probability_sweep(q, 1.0, &grid).unwrap();
            for p in curve.points() {
                assert!(
                    p.p_zero_hot > p.p_one_hot,
                    "q={q} gamma={}: {} vs {}",
                    p.gamma,
                    p.p_zero_hot,
                    p.p_one_hot
                );
                let total = p.p_zero_hot + (q as f64 - 1.0) * p.p_one_hot + p.p_infeasible;
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn at_zero_field_the_ground_manifold_is_shared_evenly() {
        let curve = penalty_probability_sweep(4, 1.0, &[0.0]).unwrap();
        let p = curve.points()[0];
        assert_abs_diff_eq!(p.p_zero_hot, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.p_one_hot, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.p_infeasible, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_level_gap_follows_the_closed_form() {
        let model = single_spin_model(1.0, -1.0, 0.0);
        let grid: Vec<f64> = (1..=20).map(|k| 0.25 * k as f64).collect();
        let (gamma_at_min, gap, curve) = min_gap(&model, &grid).unwrap();
        for p in curve.points() {
            let expect = 2.0 * (1.0 + p.gamma * p.gamma).sqrt();
            assert_abs_diff_eq!(p.gap, expect, epsilon = 1e-9);
        }
        assert_eq!(gamma_at_min, 0.25);
        assert_abs_diff_eq!(gap, 2.0 * 1.0625f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn ferromagnet_gap_stays_open() {
        let inst = PottsInstance::fully_connected_ferromagnet(3, 3, 1.0).unwrap();
        let cand = CandidateSolution::from_assignment(vec![1, 1, 1], 3).unwrap();
        let model = encode_zero_hot(&inst, &cand, 1.0).unwrap();
        let grid: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).collect();
        let (_, gap, curve) = min_gap(&model, &grid).unwrap();
        assert!(gap > 1e-6, "gap collapsed to {gap}");
        for p in curve.points() {
            assert!(p.gap > 1e-6);
        }
    }

    #[test]
    fn annealing_keeps_an_anchored_ground_state() {
        let inst = PottsInstance::fully_connected_ferromagnet(3, 3, 1.0).unwrap();
        let cand = CandidateSolution::from_assignment(vec![1, 1, 1], 3).unwrap();
        let model = encode_zero_hot(&inst, &cand, lambda_big(&inst)).unwrap();
        match adiabatic_solution(&model, DEFAULT_GAMMA_FINAL).unwrap() {
            AnnealOutcome::Assignment { assignment, probability } => {
                assert_eq!(assignment, vec![1, 1, 1]);
                // The three uniform assignments are exactly degenerate, so
                // the averaged readout gives each a third; the anchored one
                // wins the tie as the lowest basis index.
                assert_abs_diff_eq!(probability, 1.0 / 3.0, epsilon = 1e-6);
            }
            AnnealOutcome::Infeasible => panic!("annealing lost feasibility"),
        }
    }

    #[test]
    fn annealing_a_reward_free_model_returns_the_candidate() {
        let inst = PottsInstance::new(2, 4, Vec::new(), Vec::new()).unwrap();
        let cand = CandidateSolution::from_assignment(vec![3, 2], 4).unwrap();
        let model = encode_zero_hot(&inst, &cand, 1.0).unwrap();
        match adiabatic_solution(&model, DEFAULT_GAMMA_FINAL).unwrap() {
            AnnealOutcome::Assignment { assignment, .. } => assert_eq!(assignment, vec![3, 2]),
            AnnealOutcome::Infeasible => panic!("annealing lost feasibility"),
        }
    }

    #[test]
    fn annealing_a_one_hot_ferromagnet_finds_a_uniform_assignment() {
        let inst = PottsInstance::fully_connected_ferromagnet(2, 2, 1.0).unwrap();
        let model = encode_one_hot(&inst, lambda_big(&inst)).unwrap();
        match adiabatic_solution(&model, DEFAULT_GAMMA_FINAL).unwrap() {
            AnnealOutcome::Assignment { assignment, .. } => {
                assert!(assignment == vec![1, 1] || assignment == vec![2, 2]);
            }
            AnnealOutcome::Infeasible => panic!("annealing lost feasibility"),
        }
    }

    #[test]
    fn invalid_requests_are_rejected() {
        use crate::error::Error;
        let inst = PottsInstance::new(15, 2, Vec::new(), Vec::new()).unwrap();
        let cand = CandidateSolution::from_assignment(vec![1; 15], 2).unwrap();
        let wide = encode_zero_hot(&inst, &cand, 1.0).unwrap();
        assert!(matches!(build_qa_hamiltonian(&wide, 1.0), Err(Error::Size(_))));
        assert!(matches!(min_gap(&wide, &[1.0]), Err(Error::Size(_))));
        assert!(matches!(
            adiabatic_solution(&wide, 1e-6),
            Err(Error::Size(_))
        ));
        let model = penalty_model(3, 1.0);
        assert!(matches!(
            penalty_probability_sweep(3, 1.0, &[]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            penalty_probability_sweep(3, 1.0, &[0.1, 0.1]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            min_gap(&model, &[1.0, 0.5, 2.0]),
            Err(Error::Input(_))
        ));
        let op = build_qa_hamiltonian(&model, 1.0).unwrap();
        assert!(matches!(eigensolve_lowest(&op, 0), Err(Error::Input(_))));
        assert!(matches!(eigensolve_lowest(&op, 5), Err(Error::Input(_))));
    }

    #[test]
    fn csv_rows_follow_the_grid() {
        let curve = penalty_probability_sweep(3, 1.0, &[0.5, 1.0, 1.5]).unwrap();
        let csv = curve.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "gamma,p_zero_hot,p_one_hot,p_infeasible,gap,ground_energy");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.5,"));
    }
}

//! Mean-field analysis of the anchored encoding on the fully connected
//! ferromagnet in the thermodynamic limit.
//!
//! Variables are grouped by their candidate value; group `xi` carries the
//! population fraction `rho_xi`. Each group sees a single-site effective
//! Hamiltonian over its `Q - 1` indicator spins,
//!
//! ```text
//!     H_xi = (lambda/2) (sum_q sigma^z_q)^2
//!            - sum_q h_xi(q) sigma^z_q - Gamma sum_q sigma^x_q,
//!     h_xi(q) = m_tilde_{q,xi} + (Q - 2) (rho_q - rho_xi + lambda),
//! ```
//!
//! in units of the ferromagnetic coupling (J = 1). The order parameters
//! `m_{q,xi} = <sigma^z_q>` and their conjugates are indexed by pairs
//! `(q, xi)` with `rho_xi > 0` and `q != xi`; the free energy per variable is
//!
//! ```text
//!     f = -(1/2) sum_{xi,eta} rho_xi rho_eta sum_{q,q'} Jt m m
//!         + sum_xi rho_xi sum_q m_tilde m
//!         + sum_xi rho_xi phi_xi,
//! ```
//!
//! with `Jt_{xi,eta}(q,q') = d(q,q') - d(q,eta) - d(xi,q') + d(xi,eta)` and
//! `phi_xi` the ground energy of `H_xi` at `T = 0` or `-T log Tr e^{-H/T}`
//! at `T > 0`. Zero temperature is evaluated exactly through
//! degeneracy-averaged ground-state expectations, not a small-T stand-in.

mod solver;
mod sweep;
mod transition;

pub use solver::{iterate_saddle, InitFamily, SaddleSolution, SolverOptions};
pub use sweep::{
    branches_to_csv, classify_symmetry, sweep_control, Branch, ControlParameter, Direction,
    SymmetryClasses,
};
pub use transition::{
    detect_first_order, gamma_t_boundary, gamma_t_boundary_with_grid, rho1_threshold,
    rho1_threshold_with_options, BoundaryRow, PhaseBoundary, TransitionOptions, TransitionReport,
};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{input_err, size_err, Result};
use crate::qa::{eigensolve_lowest, DenseOperator, DEGENERACY_SCALE};

/// Largest value count the dense effective Hamiltonians accept.
pub const MAX_VALUES: usize = 15;

/// Grid used by the transition scans when none is supplied: 301 transverse
/// field values on [0, 3].
pub fn default_gamma_grid() -> Vec<f64> {
    (0..301).map(|k| 0.01 * k as f64).collect()
}

/// Default temperature grid: 201 values on (0, 2].
pub fn default_temperature_grid() -> Vec<f64> {
    (1..=201).map(|k| 2.0 * k as f64 / 201.0).collect()
}

/// Model parameters in units of the ferromagnetic coupling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MFParams {
    q: usize,
    lambda: f64,
    gamma: f64,
    temperature: f64,
    rho: Vec<f64>,
}

impl MFParams {
    pub fn new(
        q: usize,
        lambda: f64,
        gamma: f64,
        temperature: f64,
        rho: Vec<f64>,
    ) -> Result<Self> {
        if q < 2 || q > MAX_VALUES {
            return size_err(format!("value count {q} outside 2..={MAX_VALUES}"));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return input_err("penalty weight must be finite and nonnegative");
        }
        if !gamma.is_finite() {
            return input_err("transverse field must be finite");
        }
        if gamma < 0.0 {
            log::warn!("negative transverse field {gamma}; using its magnitude");
        }
        if !temperature.is_finite() || temperature < 0.0 {
            return input_err("temperature must be finite and nonnegative");
        }
        if rho.len() != q {
            return input_err(format!("expected {q} group fractions, got {}", rho.len()));
        }
        if rho.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return input_err("group fractions must lie in [0, 1]");
        }
        let total: f64 = rho.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return input_err(format!("group fractions sum to {total}, expected 1"));
        }
        if rho[1..].iter().any(|&r| r > rho[0] + 1e-12) {
            return input_err("the candidate-correct group must be the largest");
        }
        Ok(Self { q, lambda, gamma: gamma.abs(), temperature, rho })
    }

    /// Parameters with the non-candidate groups sharing `1 - rho1` evenly.
    pub fn symmetric(
        q: usize,
        lambda: f64,
        gamma: f64,
        temperature: f64,
        rho1: f64,
    ) -> Result<Self> {
        if q < 2 {
            return size_err(format!("value count {q} outside 2..={MAX_VALUES}"));
        }
        if !(0.0..=1.0).contains(&rho1) {
            return input_err("rho1 must lie in [0, 1]");
        }
        let rest = (1.0 - rho1) / (q as f64 - 1.0);
        let mut rho = vec![rest; q];
        rho[0] = rho1;
        Self::new(q, lambda, gamma, temperature, rho)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Fraction of group `xi` (1-based).
    pub fn rho_of(&self, xi: usize) -> f64 {
        self.rho[xi - 1]
    }

    /// 1-based labels of the populated groups, ascending.
    pub fn groups(&self) -> Vec<usize> {
        (1..=self.q).filter(|&xi| self.rho[xi - 1] > 0.0).collect()
    }

    /// True when the non-candidate groups share the remaining weight evenly.
    pub fn is_symmetric(&self) -> bool {
        let rest = &self.rho[1..];
        rest.iter().all(|&r| (r - rest[0]).abs() <= 1e-12)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.q, self.lambda, gamma, self.temperature, self.rho.clone())
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.q, self.lambda, self.gamma, temperature, self.rho.clone())
    }
}

/// Order parameters (or their conjugates), indexed by `(q, xi)` with
/// `rho_xi > 0` and `q != xi`. Blocks are group-major; within a group the
/// values `q != xi` appear ascending, matching the spin order of
/// [`build_effective_hamiltonian`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderParams {
    q: usize,
    groups: Vec<usize>,
    values: Vec<f64>,
}

impl OrderParams {
    pub fn constant(p: &MFParams, value: f64) -> Self {
        let groups = p.groups();
        let values = vec![value; groups.len() * (p.q() - 1)];
        Self { q: p.q(), groups, values }
    }

    pub fn zero(p: &MFParams) -> Self {
        Self::constant(p, 0.0)
    }

    /// Builds entries from a function of `(q, xi)`.
    pub fn from_fn(p: &MFParams, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zero(p);
        let groups = out.groups.clone();
        for xi in groups {
            for qv in (1..=out.q).filter(|&qv| qv != xi) {
                let k = out.index(qv, xi).unwrap();
                out.values[k] = f(qv, xi);
            }
        }
        out
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    fn index(&self, qv: usize, xi: usize) -> Option<usize> {
        if qv == xi || qv < 1 || qv > self.q {
            return None;
        }
        let g = self.groups.iter().position(|&x| x == xi)?;
        Some(g * (self.q - 1) + (qv - 1) - usize::from(qv > xi))
    }

    /// Entry at `(q, xi)`; None when the pair is outside the index set.
    pub fn get(&self, qv: usize, xi: usize) -> Option<f64> {
        self.index(qv, xi).map(|k| self.values[k])
    }

    /// Entries of group `xi` in spin order (values `q != xi` ascending).
    pub fn block(&self, xi: usize) -> &[f64] {
        let g = self
            .groups
            .iter()
            .position(|&x| x == xi)
            .expect("group is populated");
        &self.values[g * (self.q - 1)..(g + 1) * (self.q - 1)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(q, xi, value)` over the index set.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.groups.iter().flat_map(move |&xi| {
            (1..=self.q)
                .filter(move |&qv| qv != xi)
                .map(move |qv| (qv, xi, self.values[self.index(qv, xi).unwrap()]))
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Group-to-group coupling between indicator pairs.
fn pair_coupling(xi: usize, eta: usize, qv: usize, qp: usize) -> f64 {
    delta(qv, qp) - delta(qv, eta) - delta(xi, qp) + delta(xi, eta)
}

/// Conjugate order parameters
/// `m_tilde_{q,xi} = sum_eta rho_eta sum_{q'!=eta} Jt_{xi,eta}(q,q') m_{q',eta}`.
/// Groups with zero weight contribute nothing.
pub fn conjugate_params(m: &OrderParams, p: &MFParams) -> OrderParams {
    OrderParams::from_fn(p, |qv, xi| {
        let mut acc = 0.0;
        for &eta in m.groups() {
            let weight = p.rho_of(eta);
            for qp in (1..=p.q()).filter(|&qp| qp != eta) {
                acc += weight * pair_coupling(xi, eta, qv, qp) * m.get(qp, eta).unwrap();
            }
        }
        acc
    })
}

/// Effective field on indicator `q` of group `xi`.
fn effective_field(qv: usize, xi: usize, m_tilde: &OrderParams, p: &MFParams) -> f64 {
    m_tilde.get(qv, xi).expect("pair is in the index set")
        + (p.q() as f64 - 2.0) * (p.rho_of(qv) - p.rho_of(xi) + p.lambda())
}

/// Single-group effective Hamiltonian over the `Q - 1` indicator spins of
/// group `xi` (which must be populated). Spin order is `q != xi` ascending.
pub fn build_effective_hamiltonian(
    xi: usize,
    m_tilde: &OrderParams,
    p: &MFParams,
) -> DenseOperator {
    let fields: Vec<f64> = (1..=p.q())
        .filter(|&qv| qv != xi)
        .map(|qv| effective_field(qv, xi, m_tilde, p))
        .collect();
    build_single_site(&fields, p.lambda(), p.gamma())
}

/// Dense `(lambda/2)(sum sigma^z)^2 - sum h sigma^z - gamma sum sigma^x`
/// over the given per-spin fields.
fn build_single_site(fields: &[f64], lambda: f64, gamma: f64) -> DenseOperator {
    let n = fields.len();
    let dim = 1usize << n;
    let mut matrix = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let mut total = 0i32;
        let mut field_term = 0.0;
        for (k, h) in fields.iter().enumerate() {
            let s = spin_sign(b, k, n);
            total += s as i32;
            field_term += h * f64::from(s);
        }
        matrix[(b, b)] = 0.5 * lambda * f64::from(total) * f64::from(total) - field_term;
        if gamma != 0.0 {
            for k in 0..n {
                matrix[(b, b ^ (1 << (n - 1 - k)))] = -gamma;
            }
        }
    }
    DenseOperator::from_matrix(matrix).expect("constructed symmetric with power-of-two size")
}

/// Sign of spin `k` in basis state `b` (most significant bit first, bit 0
/// means up), matching the annealing module's convention.
fn spin_sign(b: usize, k: usize, n: usize) -> i8 {
    if b >> (n - 1 - k) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// The diagonal when the operator has no off-diagonal entries.
fn diagonal_of(h: &DenseOperator) -> Option<Vec<f64>> {
    let dim = h.dim();
    let m = h.matrix();
    for r in 0..dim {
        for c in (r + 1)..dim {
            if m[(r, c)] != 0.0 || m[(c, r)] != 0.0 {
                return None;
            }
        }
    }
    Some((0..dim).map(|b| m[(b, b)]).collect())
}

fn boltzmann_probabilities(energies: &[f64], t: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|&e| (-(e - e0) / t).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

fn ground_cluster_probabilities(energies: &[f64], scale_tol: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let e1 = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = scale_tol * (e1 - e0);
    let members: Vec<usize> = (0..energies.len())
        .filter(|&b| energies[b] - e0 <= tol)
        .collect();
    let share = 1.0 / members.len() as f64;
    let mut probs = vec![0.0; energies.len()];
    for b in members {
        probs[b] = share;
    }
    probs
}

/// Per-spin `<sigma^z>` of the thermal (or, at `t <= 0`, the
/// degeneracy-averaged ground) state of a single-group Hamiltonian.
pub fn local_expectations(h: &DenseOperator, t: f64) -> Vec<f64> {
    let n = h.n_spins();
    let probs = match diagonal_of(h) {
        Some(diag) if t <= 0.0 => ground_cluster_probabilities(&diag, DEGENERACY_SCALE),
        Some(diag) => boltzmann_probabilities(&diag, t),
        None => {
            let spectrum = eigensolve_lowest(h, h.dim()).expect("effective operator is symmetric");
            if t <= 0.0 {
                spectrum.ground_probabilities()
            } else {
                let weights = boltzmann_probabilities(spectrum.values(), t);
                let mut probs = vec![0.0; h.dim()];
                for (w, v) in weights.iter().zip(spectrum.vectors()) {
                    for (p, amp) in probs.iter_mut().zip(v.iter()) {
                        *p += w * amp * amp;
                    }
                }
                probs
            }
        }
    };
    (0..n)
        .map(|k| {
            probs
                .iter()
                .enumerate()
                .map(|(b, p)| p * f64::from(spin_sign(b, k, n)))
                .sum()
        })
        .collect()
}

/// Local free energy `-T log Tr e^{-H/T}` (ground energy at `t <= 0`),
/// evaluated stably by factoring out the lowest level.
fn local_phi(h: &DenseOperator, t: f64) -> f64 {
    let energies = match diagonal_of(h) {
        Some(diag) => diag,
        None => eigensolve_lowest(h, h.dim())
            .expect("effective operator is symmetric")
            .values()
            .to_vec(),
    };
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    if t <= 0.0 {
        e0
    } else {
        let z: f64 = energies.iter().map(|&e| (-(e - e0) / t).exp()).sum();
        e0 - t * z.ln()
    }
}

/// Free energy per variable at the given order parameters and conjugates.
pub fn free_energy(m: &OrderParams, m_tilde: &OrderParams, p: &MFParams) -> f64 {
    let mut quad = 0.0;
    for (qv, xi, mv) in m.entries() {
        for (qp, eta, mw) in m.entries() {
            quad += p.rho_of(xi) * p.rho_of(eta) * pair_coupling(xi, eta, qv, qp) * mv * mw;
        }
    }
    let mut cross = 0.0;
    for (qv, xi, mv) in m.entries() {
        cross += p.rho_of(xi) * m_tilde.get(qv, xi).unwrap() * mv;
    }
    let mut local = 0.0;
    for &xi in m.groups() {
        let h = build_effective_hamiltonian(xi, m_tilde, p);
        local += p.rho_of(xi) * local_phi(&h, p.temperature());
    }
    -0.5 * quad + cross + local
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn anchored_params(gamma: f64, temperature: f64) -> MFParams {
        MFParams::symmetric(4, 1.5, gamma, temperature, 1.0).unwrap()
    }

    #[test]
    fn parameter_validation_rejects_bad_shapes() {
        use crate::error::Error;
        assert!(matches!(
            MFParams::new(1, 1.0, 0.0, 0.0, vec![1.0]),
            Err(Error::Size(_))
        ));
        assert!(MFParams::new(3, -0.5, 0.0, 0.0, vec![1.0, 0.0, 0.0]).is_err());
        assert!(MFParams::new(3, 1.0, 0.0, -0.1, vec![1.0, 0.0, 0.0]).is_err());
        assert!(MFParams::new(3, 1.0, 0.0, 0.0, vec![0.5, 0.4, 0.4]).is_err());
        assert!(MFParams::new(3, 1.0, 0.0, 0.0, vec![0.2, 0.5, 0.3]).is_err());
        let p = MFParams::new(3, 1.0, -0.4, 0.0, vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(p.gamma(), 0.4);
    }

    #[test]
    fn populated_groups_define_the_index_set() {
        let p = anchored_params(0.0, 0.0);
        assert_eq!(p.groups(), vec![1]);
        let m = OrderParams::constant(&p, 0.5);
        assert_eq!(m.values().len(), 3);
        assert_eq!(m.get(2, 1), Some(0.5));
        assert_eq!(m.get(1, 1), None);
        assert_eq!(m.get(2, 2), None);
        let p2 = MFParams::symmetric(4, 1.5, 0.0, 0.0, 0.4).unwrap();
        assert_eq!(p2.groups(), vec![1, 2, 3, 4]);
        assert_eq!(OrderParams::zero(&p2).values().len(), 12);
    }

    #[test]
    fn conjugates_of_the_single_group_sum_with_a_self_term() {
        let p = anchored_params(0.0, 0.0);
        let m = OrderParams::constant(&p, 0.5);
        let mt = conjugate_params(&m, &p);
        for qv in 2..=4 {
            assert_abs_diff_eq!(mt.get(qv, 1).unwrap(), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn conjugates_vanish_at_zero_and_match_a_literal_loop() {
        let p = MFParams::new(4, 1.5, 0.3, 0.2, vec![0.4, 0.3, 0.3, 0.0]).unwrap();
        assert!(conjugate_params(&OrderParams::zero(&p), &p).max_abs() == 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = OrderParams::from_fn(&p, |_, _| rng.gen_range(-1.0..1.0));
        let mt = conjugate_params(&m, &p);
        // Literal oracle with the deltas expanded term by term instead of
        // through the shared coupling helper.
        for (qv, xi, _) in m.entries() {
            let mut acc = 0.0;
            for eta in 1..=4usize {
                for qp in (1..=4).filter(|&qp| qp != eta) {
                    let Some(mv) = m.get(qp, eta) else { continue };
                    let mut jt = 0.0;
                    if qv == qp {
                        jt += 1.0;
                    }
                    if qv == eta {
                        jt -= 1.0;
                    }
                    if xi == qp {
                        jt -= 1.0;
                    }
                    if xi == eta {
                        jt += 1.0;
                    }
                    acc += p.rho_of(eta) * jt * mv;
                }
            }
            assert_abs_diff_eq!(mt.get(qv, xi).unwrap(), acc, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_fields_combine_conjugates_and_imbalance() {
        let p = anchored_params(0.0, 0.0);
        let m = OrderParams::constant(&p, 0.5);
        let mt = conjugate_params(&m, &p);
        for qv in 2..=4 {
            assert_abs_diff_eq!(effective_field(qv, 1, &mt, &p), 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_transverse_field_gives_a_diagonal_operator() {
        let p = anchored_params(0.0, 0.0);
        let h = build_effective_hamiltonian(1, &OrderParams::zero(&p), &p);
        assert!(diagonal_of(&h).is_some());
        let hq = build_effective_hamiltonian(1, &OrderParams::zero(&p), &anchored_params(0.7, 0.0));
        assert!(diagonal_of(&hq).is_none());
    }

    #[test]
    fn strong_fields_polarize_and_strong_transverse_depolarizes() {
        let p = anchored_params(0.0, 0.0);
        let m = OrderParams::constant(&p, 1.0);
        let mt = conjugate_params(&m, &p);
        let h = build_effective_hamiltonian(1, &mt, &p);
        for v in local_expectations(&h, 0.0) {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        let strong = anchored_params(5e6, 0.0);
        let ht = build_effective_hamiltonian(1, &mt, &strong);
        for v in local_expectations(&ht, 0.0) {
            assert!(v.abs() <= 1e-6, "residual polarization {v}");
        }
        for v in local_expectations(&h, 1e7) {
            assert!(v.abs() <= 1e-6, "thermal residual {v}");
        }
    }

    #[test]
    fn expectations_stay_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = MFParams::symmetric(
                4,
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.25..1.0),
            )
            .unwrap();
            let m = OrderParams::from_fn(&p, |_, _| rng.gen_range(-1.0..1.0));
            let mt = conjugate_params(&m, &p);
            for &xi in p.groups().iter() {
                let h = build_effective_hamiltonian(xi, &mt, &p);
                for v in local_expectations(&h, p.temperature()) {
                    assert!(v.abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn free_energy_of_the_unmagnetized_anchor_state() {
        let p = anchored_params(0.0, 0.0);
        let zero = OrderParams::zero(&p);
        assert_abs_diff_eq!(free_energy(&zero, &zero, &p), -0.25, epsilon = 1e-12);
    }

    #[test]
    fn free_energy_of_the_fully_anchored_fixed_point() {
        let p = anchored_params(0.0, 0.0);
        let m = OrderParams::constant(&p, 1.0);
        let mt = conjugate_params(&m, &p);
        for qv in 2..=4 {
            assert_abs_diff_eq!(mt.get(qv, 1).unwrap(), 4.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(free_energy(&m, &mt, &p), -2.25, epsilon = 1e-12);
    }

    #[test]
    fn cooling_raises_the_local_term_toward_the_ground_energy() {
        let p = anchored_params(0.4, 0.0);
        let m = OrderParams::constant(&p, 0.3);
        let mt = conjugate_params(&m, &p);
        let h = build_effective_hamiltonian(1, &mt, &p);
        let e0 = local_phi(&h, 0.0);
        let mut last = f64::NEG_INFINITY;
        for t in [2.0, 1.0, 0.5, 0.25, 0.125] {
            let phi = local_phi(&h, t);
            assert!(phi <= e0 + 1e-12);
            assert!(phi >= last, "phi not monotone while cooling");
            last = phi;
        }
        assert!((local_phi(&h, 1e-4) - e0).abs() <= 1e-3);
    }
}

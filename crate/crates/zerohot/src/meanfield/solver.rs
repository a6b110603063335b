//! Damped fixed-point iteration of the saddle-point equations.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    build_effective_hamiltonian, conjugate_params, free_energy, local_expectations, MFParams,
    OrderParams,
};
use crate::error::{input_err, Result};

/// Iteration controls. Defaults: damping 0.5, tolerance 1e-10 on the
/// post-damping max-norm step, at most 100000 iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { damping: 0.5, tol: 1e-10, max_iter: 100_000 }
    }
}

/// A fixed point (or the state where iteration gave up).
#[derive(Debug, Clone, Serialize)]
pub struct SaddleSolution {
    pub params: MFParams,
    pub m: OrderParams,
    pub m_tilde: OrderParams,
    pub free_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm change of `m` in the final iteration.
    pub residual: f64,
}

/// Starting points used to discover distinct solution branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitFamily {
    /// Everything at +0.95: biased toward keeping every candidate value.
    Aligned,
    /// The candidate value's indicator at -0.95 in the relabeled groups,
    /// +0.95 elsewhere: biased toward the corrected assignment.
    Anti,
    Zero,
    /// Uniform in (-0.95, 0.95) from the given seed.
    Random(u64),
}

impl InitFamily {
    pub fn label(&self) -> &'static str {
        match self {
            InitFamily::Aligned => "aligned",
            InitFamily::Anti => "anti",
            InitFamily::Zero => "zero",
            InitFamily::Random(_) => "random",
        }
    }

    pub fn build(&self, p: &MFParams) -> OrderParams {
        match self {
            InitFamily::Aligned => OrderParams::constant(p, 0.95),
            InitFamily::Anti => OrderParams::from_fn(p, |qv, xi| {
                if qv == 1 && xi >= 2 {
                    -0.95
                } else {
                    0.95
                }
            }),
            InitFamily::Zero => OrderParams::zero(p),
            InitFamily::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                OrderParams::from_fn(p, |_, _| rng.gen_range(-0.95..0.95))
            }
        }
    }

    /// The four families used by the transition scans.
    pub fn default_families() -> Vec<InitFamily> {
        vec![
            InitFamily::Aligned,
            InitFamily::Anti,
            InitFamily::Zero,
            InitFamily::Random(20240817),
        ]
    }
}

/// Repeats `m_tilde <- conjugate(m)`, `m <- (1-a) m + a <sigma^z>` until the
/// post-damping step drops below `tol` or `max_iter` is hit. Non-convergence
/// is reported through the flag, not an error. Groups whose effective fields
/// coincide share one diagonalization per iteration.
pub fn iterate_saddle(
    p: &MFParams,
    m_init: &OrderParams,
    opts: &SolverOptions,
) -> Result<SaddleSolution> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return input_err("damping must lie in (0, 1]");
    }
    if !(opts.tol > 0.0) {
        return input_err("tolerance must be positive");
    }
    if opts.max_iter == 0 {
        return input_err("need at least one iteration");
    }
    if m_init.groups() != p.groups() || m_init.q() != p.q() {
        return input_err("initial order parameters do not match the parameter set");
    }
    let groups = p.groups();
    let mut m = m_init.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < opts.max_iter {
        let m_tilde = conjugate_params(&m, p);
        // Symmetric groups produce identical effective Hamiltonians; key the
        // solve on the exact field block to do each distinct one once.
        let mut cache: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
        let expectations: Vec<Vec<f64>> = groups
            .iter()
            .map(|&xi| {
                let h = build_effective_hamiltonian(xi, &m_tilde, p);
                let key: Vec<u64> = (0..h.dim()).map(|b| h.matrix()[(b, b)].to_bits()).collect();
                cache
                    .entry(key)
                    .or_insert_with(|| local_expectations(&h, p.temperature()))
                    .clone()
            })
            .collect();
        let target = OrderParams::from_fn(p, |qv, xi| {
            let g = groups.iter().position(|&x| x == xi).unwrap();
            let slot = (1..=p.q()).filter(|&v| v != xi).position(|v| v == qv).unwrap();
            expectations[g][slot]
        });
        let next = OrderParams::from_fn(p, |qv, xi| {
            let old = m.get(qv, xi).unwrap();
            (1.0 - opts.damping) * old + opts.damping * target.get(qv, xi).unwrap()
        });
        residual = next.max_abs_diff(&m);
        m = next;
        iterations += 1;
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }
    let m_tilde = conjugate_params(&m, p);
    let f = free_energy(&m, &m_tilde, p);
    Ok(SaddleSolution {
        params: p.clone(),
        m,
        m_tilde,
        free_energy: f,
        iterations,
        converged,
        residual,
    })
}

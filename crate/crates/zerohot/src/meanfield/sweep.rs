//! Warm-started continuation along a control-parameter grid, and the
//! symmetry classes of order parameters under relabeling of the
//! non-candidate values.

use serde::Serialize;

use super::solver::{iterate_saddle, InitFamily, SaddleSolution, SolverOptions};
use super::{MFParams, OrderParams};
use crate::error::{input_err, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ControlParameter {
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "temperature")]
    Temperature,
}

impl ControlParameter {
    pub fn label(&self) -> &'static str {
        match self {
            ControlParameter::Gamma => "gamma",
            ControlParameter::Temperature => "temperature",
        }
    }

    fn apply(&self, p: &MFParams, value: f64) -> Result<MFParams> {
        match self {
            ControlParameter::Gamma => p.with_gamma(value),
            ControlParameter::Temperature => p.with_temperature(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "down")]
    Down,
    #[serde(rename = "up")]
    Up,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::Down => "down",
            Direction::Up => "up",
        }
    }
}

/// One continuation run: solutions aligned with the ascending grid, however
/// the warm start traversed it.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub control: ControlParameter,
    pub direction: Direction,
    pub init: &'static str,
    pub grid: Vec<f64>,
    pub solutions: Vec<SaddleSolution>,
}

impl Branch {
    pub fn id(&self) -> String {
        format!("{}-{}", self.direction.label(), self.init)
    }
}

/// Sweeps the control parameter across `grid` once per initialization
/// family, warm-starting each point from the previous solution in the given
/// direction. Branches keep whatever they converge to, so metastable
/// solutions survive for the transition analysis. Branches run in parallel;
/// the points within one branch are sequential by construction.
pub fn sweep_control(
    p_base: &MFParams,
    control: ControlParameter,
    grid: &[f64],
    direction: Direction,
    inits: &[InitFamily],
    opts: &SolverOptions,
) -> Result<Vec<Branch>> {
    if grid.is_empty() {
        return input_err("grid must not be empty");
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return input_err("grid must be strictly increasing");
    }
    if inits.is_empty() {
        return input_err("need at least one initialization family");
    }
    for &value in grid {
        control.apply(p_base, value)?;
    }
    let branches: Vec<Result<Branch>> = exec::map_slice(inits, |&family| {
        let order: Vec<usize> = match direction {
            Direction::Up => (0..grid.len()).collect(),
            Direction::Down => (0..grid.len()).rev().collect(),
        };
        let mut solutions: Vec<Option<SaddleSolution>> = vec![None; grid.len()];
        let mut warm: Option<OrderParams> = None;
        for idx in order {
            let p = control.apply(p_base, grid[idx])?;
            let init = warm.take().unwrap_or_else(|| family.build(&p));
            let sol = iterate_saddle(&p, &init, opts)?;
            warm = Some(sol.m.clone());
            solutions[idx] = Some(sol);
        }
        Ok(Branch {
            control,
            direction,
            init: family.label(),
            grid: grid.to_vec(),
            solutions: solutions.into_iter().map(|s| s.unwrap()).collect(),
        })
    });
    branches.into_iter().collect()
}

/// Class means of the order parameters under the residual permutation
/// symmetry of the non-candidate values, plus the worst in-class spread.
///
/// The classes: `m0` collects the candidate group's parameters `(q, 1)`;
/// `m_minus` the corrected-value parameters `(1, xi >= 2)`; `m_plus` the
/// rest. Classes without members (everything except `m0` at `rho1 = 1`)
/// come back as None.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryClasses {
    pub m0: Option<f64>,
    pub m_minus: Option<f64>,
    pub m_plus: Option<f64>,
    pub max_spread: f64,
}

pub fn classify_symmetry(m: &OrderParams, p: &MFParams) -> Result<SymmetryClasses> {
    if !p.is_symmetric() {
        return input_err("symmetry classes need evenly weighted non-candidate groups");
    }
    if m.groups() != p.groups() || m.q() != p.q() {
        return input_err("order parameters do not match the parameter set");
    }
    let mut class_values: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (qv, xi, value) in m.entries() {
        let class = if xi == 1 {
            0
        } else if qv == 1 {
            1
        } else {
            2
        };
        class_values[class].push(value);
    }
    let mut max_spread = 0.0f64;
    let mut means = [None; 3];
    for (slot, values) in means.iter_mut().zip(&class_values) {
        if values.is_empty() {
            continue;
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max_spread = max_spread.max(hi - lo);
        *slot = Some(values.iter().sum::<f64>() / values.len() as f64);
    }
    Ok(SymmetryClasses {
        m0: means[0],
        m_minus: means[1],
        m_plus: means[2],
        max_spread,
    })
}

/// CSV rows for a set of branches over the same grid.
pub fn branches_to_csv(branches: &[Branch]) -> Result<String> {
    let mut out =
        String::from("control_value,branch_id,m0,m_minus,m_plus,free_energy,converged,residual,iterations\n");
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for branch in branches {
        let id = branch.id();
        for (value, sol) in branch.grid.iter().zip(&branch.solutions) {
            let classes = classify_symmetry(&sol.m, &sol.params)?;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                value,
                id,
                fmt(classes.m0),
                fmt(classes.m_minus),
                fmt(classes.m_plus),
                sol.free_energy,
                sol.converged,
                sol.residual,
                sol.iterations
            ));
        }
    }
    Ok(out)
}

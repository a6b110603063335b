//! First-order transition detection, the population threshold that removes
//! it, and the extent of first-order behavior in the field-temperature
//! plane.

use serde::Serialize;

use super::solver::{InitFamily, SolverOptions};
use super::sweep::{classify_symmetry, sweep_control, Branch, ControlParameter, Direction};
use super::{default_gamma_grid, MFParams};
use crate::error::{input_err, Error, Result};
use crate::exec;

/// Detection knobs. `jump_tol` separates a genuine discontinuity of the
/// free-energy-minimizing order parameter from a steep crossover, and doubles
/// as the distinctness threshold for coexisting branches;
/// `min_hysteresis_spacings` is the least number of grid spacings a
/// coexistence window must span to count.
///
/// `jump_tol` works against per-step differences, so it is tied to the grid
/// resolution: the default suits spacings of about 0.01, where continuous
/// curves move well under 0.05 per step. Coarser grids inflate continuous
/// steps and need a proportionally larger `jump_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionOptions {
    pub jump_tol: f64,
    pub min_hysteresis_spacings: usize,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self { jump_tol: 0.05, min_hysteresis_spacings: 2 }
    }
}

/// Free-energy resolution for branch comparisons. All uniform orderings of
/// the ferromagnet tie exactly at the classical endpoint (any common value
/// gives the same energy), so equalities below this width are treated as
/// degeneracies to resolve, not as level crossings.
const F_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionReport {
    pub first_order: bool,
    /// Largest step of the free-energy-minimizing `m0` between neighboring
    /// grid points.
    pub jump_size: f64,
    /// Control-parameter window where distinct converged branches coexist
    /// (None when too short or absent).
    pub hysteresis_interval: Option<(f64, f64)>,
    /// Control value where the coexisting branches' free energies cross,
    /// linearly interpolated.
    pub crossing_point: Option<f64>,
    /// Midpoint of the grid step carrying the largest `m0` jump.
    pub jump_location: Option<f64>,
}

/// Per-point view assembled across branches: converged `(m0, f)` pairs.
struct PointView {
    m0: Vec<f64>,
    f: Vec<f64>,
}

impl PointView {
    fn spread(&self) -> f64 {
        let lo = self.m0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.m0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.m0.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    /// `min f` over the high-`m0` cluster minus `min f` over the low one,
    /// split at the midpoint of the coexisting values.
    fn free_energy_split(&self) -> f64 {
        let lo = self.m0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.m0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (lo + hi);
        let mut f_high = f64::INFINITY;
        let mut f_low = f64::INFINITY;
        for (&m0, &f) in self.m0.iter().zip(&self.f) {
            if m0 >= mid {
                f_high = f_high.min(f);
            } else {
                f_low = f_low.min(f);
            }
        }
        f_high - f_low
    }

    /// `m0` of the lowest-free-energy solution. Exact ties (the uniform
    /// orderings at the classical endpoint) resolve toward the largest `m0`:
    /// the branch the population bias selects at any nonzero control value.
    fn argmin_m0(&self) -> Option<f64> {
        let f_min = self.f.iter().copied().fold(f64::INFINITY, f64::min);
        self.f
            .iter()
            .zip(&self.m0)
            .filter(|(&f, _)| f <= f_min + F_TIE_TOLERANCE)
            .map(|(_, &m0)| m0)
            .fold(None, |acc: Option<f64>, m0| Some(acc.map_or(m0, |a| a.max(m0))))
    }
}

/// Decides whether the swept control parameter drives a first-order
/// transition. Fires on (a) a jump of the free-energy-minimizing `m0` curve
/// larger than `jump_tol`, or (b) a sufficiently wide window of coexisting
/// distinct converged branches whose free-energy ordering strictly reverses
/// inside the grid.
///
/// Exact free-energy ties are transparent to both routes: the classical
/// endpoint degenerates all uniform orderings (every common value has the
/// same energy, at any population split), and that symmetry artifact must
/// not read as a transition.
pub fn detect_first_order(
    branches: &[Branch],
    opts: &TransitionOptions,
) -> Result<TransitionReport> {
    let Some(first) = branches.first() else {
        return input_err("need at least one branch");
    };
    let grid = &first.grid;
    if branches.iter().any(|b| b.grid != *grid) {
        return input_err("branches disagree on the grid");
    }
    let views: Vec<PointView> = (0..grid.len())
        .map(|idx| {
            let mut m0 = Vec::new();
            let mut f = Vec::new();
            for branch in branches {
                let sol = &branch.solutions[idx];
                if !sol.converged {
                    continue;
                }
                let classes = classify_symmetry(&sol.m, &sol.params)?;
                let Some(v) = classes.m0 else {
                    return Err(Error::Analysis(
                        "branches carry no candidate-group order parameter".into(),
                    ));
                };
                m0.push(v);
                f.push(sol.free_energy);
            }
            Ok(PointView { m0, f })
        })
        .collect::<Result<_>>()?;
    if views.iter().all(|v| v.m0.is_empty()) {
        return Err(Error::Analysis("no solver run converged anywhere on the grid".into()));
    }

    // Route (a): jump of the free-energy argmin curve.
    let mut jump_size = 0.0f64;
    let mut jump_location = None;
    for idx in 0..grid.len() - 1 {
        let (Some(a), Some(b)) = (views[idx].argmin_m0(), views[idx + 1].argmin_m0()) else {
            continue;
        };
        let step = (b - a).abs();
        if step > jump_size {
            jump_size = step;
            jump_location = Some(0.5 * (grid[idx] + grid[idx + 1]));
        }
    }
    let route_jump = jump_size > opts.jump_tol;

    // Route (b): a wide-enough coexistence window with a free-energy
    // crossing inside it.
    let coexists: Vec<bool> = views.iter().map(|v| v.spread() > opts.jump_tol).collect();
    let mut hysteresis_interval = None;
    let mut crossing_point = None;
    let mut route_coexist = false;
    let mut run_start = None;
    for idx in 0..=grid.len() {
        let inside = idx < grid.len() && coexists[idx];
        match (run_start, inside) {
            (None, true) => run_start = Some(idx),
            (Some(start), false) => {
                let end = idx - 1;
                if end - start >= opts.min_hysteresis_spacings {
                    if hysteresis_interval.is_none() {
                        hysteresis_interval = Some((grid[start], grid[end]));
                    }
                    // Look for a strict sign reversal of the branch
                    // free-energy split inside this window. Samples within
                    // the tie tolerance carry no sign: a split that touches
                    // zero at an exact degeneracy and returns is not a
                    // crossing.
                    let mut prev: Option<(f64, f64)> = None;
                    for k in start..=end {
                        let split = views[k].free_energy_split();
                        if !split.is_finite() || split.abs() <= F_TIE_TOLERANCE {
                            continue;
                        }
                        if let Some((pv, pg)) = prev {
                            if pv.signum() != split.signum() {
                                route_coexist = true;
                                let t = pv / (pv - split);
                                crossing_point.get_or_insert(pg + t * (grid[k] - pg));
                            }
                        }
                        prev = Some((split, grid[k]));
                    }
                }
                run_start = None;
            }
            _ => {}
        }
    }

    Ok(TransitionReport {
        first_order: route_jump || route_coexist,
        jump_size,
        hysteresis_interval,
        crossing_point,
        jump_location,
    })
}

/// Runs the standard branch set for one parameter point: both sweep
/// directions over all default initialization families.
fn standard_branches(
    p: &MFParams,
    control: ControlParameter,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Branch>> {
    let inits = InitFamily::default_families();
    let mut branches = sweep_control(p, control, grid, Direction::Down, &inits, opts)?;
    branches.extend(sweep_control(p, control, grid, Direction::Up, &inits, opts)?);
    Ok(branches)
}

/// Smallest population fraction of the candidate-correct group for which the
/// zero-temperature transverse-field sweep stops being first order, located
/// by bisection over `[1/Q, 1]`.
pub fn rho1_threshold(q: usize, lambda: f64, tol: f64) -> Result<f64> {
    rho1_threshold_with_options(
        q,
        lambda,
        tol,
        &default_gamma_grid(),
        &SolverOptions::default(),
        &TransitionOptions::default(),
    )
}

pub fn rho1_threshold_with_options(
    q: usize,
    lambda: f64,
    tol: f64,
    gamma_grid: &[f64],
    solver: &SolverOptions,
    transition: &TransitionOptions,
) -> Result<f64> {
    if !(tol >= 1e-4) {
        return input_err("threshold tolerance must be at least 1e-4");
    }
    let predicate = |rho1: f64| -> Result<bool> {
        let p = MFParams::symmetric(q, lambda, 0.0, 0.0, rho1)?;
        let branches = standard_branches(&p, ControlParameter::Gamma, gamma_grid, solver)?;
        Ok(detect_first_order(&branches, transition)?.first_order)
    };
    let mut lo = 1.0 / q as f64;
    let mut hi = 1.0;
    let at_lo = predicate(lo)?;
    let at_hi = predicate(hi)?;
    if at_lo == at_hi {
        return Err(Error::Bracket(format!(
            "first-order predicate is {at_lo} at both rho1={lo} and rho1={hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if predicate(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The transverse-field extent of first-order behavior at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub temperature: f64,
    /// None when the sweep shows no first-order transition at this
    /// temperature, or when the solver could not resolve it.
    pub extent: Option<(f64, f64)>,
    /// False when every run failed to converge, leaving a gap in the curve.
    pub solved: bool,
}

/// First-order region boundary on the field-temperature plane.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseBoundary {
    pub rows: Vec<BoundaryRow>,
}

impl PhaseBoundary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,gamma_low,gamma_high\n");
        for row in &self.rows {
            match row.extent {
                Some((lo, hi)) => out.push_str(&format!("{},{},{}\n", row.temperature, lo, hi)),
                None => out.push_str(&format!("{},,\n", row.temperature)),
            }
        }
        out
    }
}

/// For each temperature, the transverse-field window where the sweep is
/// first order (coexistence extent when present, otherwise the jump
/// location). Temperatures where no run converges become unsolved gaps.
pub fn gamma_t_boundary(
    q: usize,
    lambda: f64,
    rho1: f64,
    t_grid: &[f64],
) -> Result<PhaseBoundary> {
    gamma_t_boundary_with_grid(
        q,
        lambda,
        rho1,
        t_grid,
        &default_gamma_grid(),
        &SolverOptions::default(),
        &TransitionOptions::default(),
    )
}

pub fn gamma_t_boundary_with_grid(
    q: usize,
    lambda: f64,
    rho1: f64,
    t_grid: &[f64],
    gamma_grid: &[f64],
    solver: &SolverOptions,
    transition: &TransitionOptions,
) -> Result<PhaseBoundary> {
    if t_grid.is_empty() {
        return input_err("temperature grid must not be empty");
    }
    if !t_grid.windows(2).all(|w| w[0] < w[1]) {
        return input_err("temperature grid must be strictly increasing");
    }
    let rows: Vec<Result<BoundaryRow>> = exec::map_slice(t_grid, |&t| {
        let p = MFParams::symmetric(q, lambda, 0.0, t, rho1)?;
        let branches = standard_branches(&p, ControlParameter::Gamma, gamma_grid, solver)?;
        match detect_first_order(&branches, transition) {
            Ok(report) => {
                let extent = if report.first_order {
                    report
                        .hysteresis_interval
                        .or(report.jump_location.map(|g| (g, g)))
                } else {
                    None
                };
                Ok(BoundaryRow { temperature: t, extent, solved: true })
            }
            Err(Error::Analysis(_)) => {
                Ok(BoundaryRow { temperature: t, extent: None, solved: false })
            }
            Err(e) => Err(e),
        }
    });
    Ok(PhaseBoundary { rows: rows.into_iter().collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::solver::SaddleSolution;
    use crate::meanfield::OrderParams;

    fn fake_branch(grid: Vec<f64>, m0s: Vec<f64>, fs: Vec<f64>, converged: bool) -> Branch {
        let p = MFParams::symmetric(4, 1.5, 0.0, 0.0, 1.0).unwrap();
        let solutions = m0s
            .iter()
            .zip(&fs)
            .map(|(&m0, &f)| SaddleSolution {
                params: p.clone(),
                m: OrderParams::constant(&p, m0),
                m_tilde: OrderParams::zero(&p),
                free_energy: f,
                iterations: 1,
                converged,
                residual: 0.0,
            })
            .collect();
        Branch {
            control: ControlParameter::Gamma,
            direction: Direction::Up,
            init: "aligned",
            grid,
            solutions,
        }
    }

    #[test]
    fn a_single_smooth_branch_is_continuous() {
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let m0s: Vec<f64> = grid.iter().map(|g| 1.0 - 0.3 * g).collect();
        let fs: Vec<f64> = grid.iter().map(|g| -2.0 + g).collect();
        let branch = fake_branch(grid, m0s, fs, true);
        let report = detect_first_order(&[branch], &TransitionOptions::default()).unwrap();
        assert!(!report.first_order);
        assert!(report.jump_size < 0.05);
        assert!(report.hysteresis_interval.is_none());
    }

    #[test]
    fn crossing_branches_are_first_order() {
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let high = fake_branch(
            grid.clone(),
            vec![0.9; 10],
            grid.iter().map(|g| -1.0 + g).collect(),
            true,
        );
        let low = fake_branch(
            grid.clone(),
            vec![0.2; 10],
            grid.iter().map(|g| -0.5 - 0.2 * (g - 0.0)).collect(),
            true,
        );
        let report =
            detect_first_order(&[high, low], &TransitionOptions::default()).unwrap();
        assert!(report.first_order);
        // f_high - f_low = -0.5 + 1.2 g crosses zero at g = 5/12.
        let crossing = report.crossing_point.unwrap();
        assert!((crossing - 5.0 / 12.0).abs() < 1e-9, "crossing at {crossing}");
        assert_eq!(report.hysteresis_interval, Some((0.0, 0.9)));
        // The argmin selection also jumps between the branches.
        assert!(report.jump_size > 0.6);
    }

    #[test]
    fn parallel_branches_without_crossing_are_not_first_order() {
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let high = fake_branch(grid.clone(), vec![0.9; 10], vec![-2.0; 10], true);
        let low = fake_branch(grid.clone(), vec![0.3; 10], vec![-1.0; 10], true);
        let report =
            detect_first_order(&[high, low], &TransitionOptions::default()).unwrap();
        assert!(!report.first_order);
        assert!(report.hysteresis_interval.is_some());
        assert!(report.crossing_point.is_none());
    }

    #[test]
    fn short_coexistence_windows_are_ignored() {
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        // Distinct only at two adjacent points: below the two-spacing bar.
        let mut low_m0 = vec![0.9; 10];
        low_m0[4] = 0.2;
        low_m0[5] = 0.2;
        let mut low_f = vec![-2.0; 10];
        low_f[4] = -3.0;
        low_f[5] = -1.0;
        let high = fake_branch(grid.clone(), vec![0.9; 10], vec![-2.0; 10], true);
        let low = fake_branch(grid.clone(), low_m0, low_f, true);
        let report =
            detect_first_order(&[high, low], &TransitionOptions::default()).unwrap();
        assert!(report.hysteresis_interval.is_none());
        // The argmin curve still jumps at the isolated deep point.
        assert!(report.first_order);
        assert!(report.jump_size > 0.05);
    }

    #[test]
    fn endpoint_degeneracy_is_not_a_transition() {
        // A wrong-value uniform branch ties the correct ordering exactly at
        // the first grid point and stays strictly above it afterwards. The
        // tie must neither count as a free-energy crossing nor yank the
        // argmin curve.
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let correct = fake_branch(grid.clone(), vec![1.0; 10], vec![-2.0; 10], true);
        let mut wrong_f = vec![-1.9; 10];
        wrong_f[0] = -2.0;
        let wrong = fake_branch(grid.clone(), vec![1.0 / 3.0; 10], wrong_f, true);
        let report =
            detect_first_order(&[correct, wrong], &TransitionOptions::default()).unwrap();
        assert!(!report.first_order);
        assert!(report.crossing_point.is_none());
        assert!(report.jump_size < 1e-12, "argmin jumped: {}", report.jump_size);
        // The coexistence window itself is still reported as metadata.
        assert_eq!(report.hysteresis_interval, Some((0.0, 0.9)));
    }

    #[test]
    fn unconverged_runs_are_excluded_and_all_unconverged_errors() {
        let grid: Vec<f64> = (0..5).map(|k| k as f64 * 0.1).collect();
        let dead = fake_branch(grid.clone(), vec![0.5; 5], vec![-1.0; 5], false);
        assert!(matches!(
            detect_first_order(&[dead], &TransitionOptions::default()),
            Err(Error::Analysis(_))
        ));
    }

    #[test]
    fn threshold_tolerance_is_validated() {
        assert!(matches!(
            rho1_threshold(4, 1.5, 1e-5),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn threshold_bisection_brackets_the_known_window() {
        // Keep the default resolution (jump detection is tied to it) but
        // stop the sweep at a field strength safely above the transition
        // region, and loosen the bisection tolerance. The tight value is
        // pinned by the acceptance suite.
        let grid: Vec<f64> = (0..=200).map(|k| 0.01 * k as f64).collect();
        let t = rho1_threshold_with_options(
            4,
            1.5,
            0.04,
            &grid,
            &SolverOptions::default(),
            &TransitionOptions::default(),
        )
        .unwrap();
        assert!((0.40..0.55).contains(&t), "threshold {t}");
    }

    #[test]
    fn anchored_boundary_has_a_thermal_first_order_window() {
        // At full anchoring the transverse sweep is continuous at T=0 but
        // crosses a classical first-order window at moderate temperature,
        // which shows up as a field extent reaching down to zero.
        let gamma_grid: Vec<f64> = (0..=150).map(|k| 0.02 * k as f64).collect();
        let boundary = gamma_t_boundary_with_grid(
            4,
            1.5,
            1.0,
            &[0.5, 2.0],
            &gamma_grid,
            &SolverOptions::default(),
            &TransitionOptions::default(),
        )
        .unwrap();
        let cold = &boundary.rows[0];
        assert!(cold.solved);
        let (lo, hi) = cold.extent.expect("first-order window at T=0.5");
        assert_eq!(lo, 0.0);
        assert!(hi > 0.1);
        let warm = &boundary.rows[1];
        assert!(warm.solved);
        assert!(warm.extent.is_none(), "unexpected window {:?}", warm.extent);
        let csv = boundary.to_csv();
        assert!(csv.starts_with("T,gamma_low,gamma_high\n0.5,0,"));
        assert!(csv.trim_end().ends_with("2,,"));
    }
}

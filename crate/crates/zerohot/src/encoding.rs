//! Ising encodings of integer instances.
//!
//! Two binary maps are provided. The familiar one-hot map spends one
//! indicator per (value, variable) pair and adds a penalty that forces
//! exactly one indicator per variable. The anchored (zero-hot) map removes
//! the indicator of the candidate value `r_i` by substituting
//! `x_{r_i,i} = 1 - sum_{q != r_i} x_{q,i}`, so each variable needs one fewer
//! spin and the all-up block means "keep the candidate value". Either zero or
//! one of the remaining indicators may be set, which the penalty
//! `(lambda/2) (sum_q sigma^z_{q,i} - (Q-2))^2` enforces.
//!
//! Indicators map to spins through `x = (1 - sigma)/2`, so `sigma = -1` means
//! the indicator is set. Constants discarded along the way are accumulated in
//! `energy_offset`, chosen so that for every feasible configuration
//!
//! ```text
//!     instance.energy(s) == model.energy(spins(s)) + model.energy_offset()
//! ```
//!
//! holds exactly; in particular energy differences between feasible
//! configurations survive the encoding unchanged.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, size_err, Error, Result};
use crate::exec;
use crate::potts::{CandidateSolution, IntegerAssignment, PottsInstance};

/// Energy differences between feasible configurations must survive encoding
/// to at least this accuracy.
pub const GAP_TOLERANCE: f64 = 1e-10;

/// Spin identifier: value index `q` at variable `i`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinId {
    pub q: usize,
    pub i: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingKind {
    #[serde(rename = "one-hot")]
    OneHot,
    #[serde(rename = "zero-hot")]
    ZeroHot,
}

/// Result of reading a spin configuration back as an integer assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Assignment(IntegerAssignment),
    /// 1-based indices of the variables whose blocks violate the constraint.
    Infeasible(Vec<usize>),
}

/// Ising model over spins indexed by (value, variable).
///
/// Couplings hold one entry per unordered spin pair; fields one entry per
/// spin. The constraint penalty is kept in closed form (weight `lambda`)
/// rather than expanded, so `energy` evaluates the displayed Hamiltonian
/// exactly:
///
/// ```text
///     E(sigma) = - sum J_ab sigma_a sigma_b - sum h_a sigma_a
///                + (lambda/2) sum_i (sum_{q} sigma_{q,i} - (Q-2))^2
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    kind: EncodingKind,
    n: usize,
    q: usize,
    lambda: f64,
    anchor: Option<IntegerAssignment>,
    spins: Vec<SpinId>,
    /// Sorted by index pair; each `(a, b, j)` has `a < b`.
    couplings: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
    energy_offset: f64,
}

impl IsingModel {
    fn from_parts(
        kind: EncodingKind,
        n: usize,
        q: usize,
        lambda: f64,
        anchor: Option<IntegerAssignment>,
        couplings: Vec<(usize, usize, f64)>,
        fields: Vec<f64>,
        energy_offset: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return input_err("penalty weight must be finite and nonnegative");
        }
        if kind == EncodingKind::ZeroHot && anchor.is_none() {
            return input_err("anchored model needs a candidate assignment");
        }
        let mut spins = Vec::with_capacity(n * q);
        for i in 1..=n {
            for v in 1..=q {
                if let Some(r) = &anchor {
                    if r[i - 1] == v {
                        continue;
                    }
                }
                spins.push(SpinId { q: v, i });
            }
        }
        if fields.len() != spins.len() {
            return input_err(format!(
                "expected {} fields, got {}",
                spins.len(),
                fields.len()
            ));
        }
        let mut last = None;
        for &(a, b, _) in &couplings {
            if a >= b || b >= spins.len() {
                return input_err(format!("coupling ({a}, {b}) out of range"));
            }
            if last == Some((a, b)) {
                return input_err(format!("duplicate coupling ({a}, {b})"));
            }
            if last.map_or(false, |p| p > (a, b)) {
                return input_err("couplings must be sorted by index pair");
            }
            last = Some((a, b));
        }
        Ok(Self { kind, n, q, lambda, anchor, spins, couplings, fields, energy_offset })
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn anchor(&self) -> Option<&IntegerAssignment> {
        self.anchor.as_ref()
    }

    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn num_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn spin_ids(&self) -> &[SpinId] {
        &self.spins
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Spins per variable.
    fn width(&self) -> usize {
        match self.kind {
            EncodingKind::OneHot => self.q,
            EncodingKind::ZeroHot => self.q - 1,
        }
    }

    /// Index range of variable `i`'s spin block (spins are variable-major).
    pub fn site_block(&self, i: usize) -> std::ops::Range<usize> {
        let w = self.width();
        (i - 1) * w..i * w
    }

    /// Flat index of spin `(q, i)`; None if that indicator does not exist.
    pub fn spin_index(&self, q: usize, i: usize) -> Option<usize> {
        if i < 1 || i > self.n || q < 1 || q > self.q {
            return None;
        }
        let rank = match &self.anchor {
            None => q - 1,
            Some(r) => {
                let ri = r[i - 1];
                if q == ri {
                    return None;
                }
                q - 1 - usize::from(q > ri)
            }
        };
        Some((i - 1) * self.width() + rank)
    }

    /// Coupling between two spins (zero when absent).
    pub fn coupling(&self, a: SpinId, b: SpinId) -> f64 {
        let (Some(ia), Some(ib)) = (self.spin_index(a.q, a.i), self.spin_index(b.q, b.i)) else {
            return 0.0;
        };
        let key = (ia.min(ib), ia.max(ib));
        match self.couplings.binary_search_by(|&(x, y, _)| (x, y).cmp(&key)) {
            Ok(pos) => self.couplings[pos].2,
            Err(_) => 0.0,
        }
    }

    /// Field on a spin.
    pub fn field(&self, s: SpinId) -> f64 {
        self.spin_index(s.q, s.i).map_or(0.0, |k| self.fields[k])
    }

    fn check_spins(&self, spins: &[i8]) -> Result<()> {
        if spins.len() != self.spins.len() {
            return input_err(format!(
                "configuration has {} spins, expected {}",
                spins.len(),
                self.spins.len()
            ));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return input_err("spin values must be +1 or -1");
        }
        Ok(())
    }

    /// Ising energy including the closed-form constraint penalty.
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        self.check_spins(spins)?;
        Ok(self.energy_unchecked(spins))
    }

    pub(crate) fn energy_unchecked(&self, spins: &[i8]) -> f64 {
        let mut e = 0.0;
        for &(a, b, j) in &self.couplings {
            e -= j * f64::from(spins[a] * spins[b]);
        }
        for (h, &s) in self.fields.iter().zip(spins) {
            e -= h * f64::from(s);
        }
        let target = self.q as f64 - 2.0;
        for i in 1..=self.n {
            let m: i32 = spins[self.site_block(i)].iter().map(|&s| i32::from(s)).sum();
            let d = f64::from(m) - target;
            e += 0.5 * self.lambda * d * d;
        }
        e
    }

    /// Spin configuration representing an integer assignment.
    pub fn spin_representation(&self, s: &[usize]) -> Result<Vec<i8>> {
        if s.len() != self.n {
            return input_err(format!("assignment has {} entries, expected {}", s.len(), self.n));
        }
        if let Some(v) = s.iter().find(|&&v| v < 1 || v > self.q) {
            return input_err(format!("assignment value {v} outside 1..={}", self.q));
        }
        let mut spins = vec![1i8; self.spins.len()];
        for (pos, id) in self.spins.iter().enumerate() {
            if s[id.i - 1] == id.q {
                spins[pos] = -1;
            }
        }
        Ok(spins)
    }

    /// Reads a spin configuration back as an integer assignment.
    ///
    /// One-hot blocks must have exactly one set indicator. Anchored blocks
    /// with no set indicator mean "keep the candidate value"; exactly one set
    /// indicator selects that value; anything else is infeasible.
    pub fn decode(&self, spins: &[i8]) -> Result<DecodeOutcome> {
        self.check_spins(spins)?;
        let mut assignment = Vec::with_capacity(self.n);
        let mut bad_sites = Vec::new();
        for i in 1..=self.n {
            let block = self.site_block(i);
            let down: Vec<usize> = block.clone().filter(|&k| spins[k] == -1).collect();
            let value = match (self.kind, down.len()) {
                (EncodingKind::OneHot, 1) => Some(self.spins[down[0]].q),
                (EncodingKind::ZeroHot, 0) => Some(self.anchor.as_ref().unwrap()[i - 1]),
                (EncodingKind::ZeroHot, 1) => Some(self.spins[down[0]].q),
                _ => None,
            };
            match value {
                Some(v) => assignment.push(v),
                None => bad_sites.push(i),
            }
        }
        if bad_sites.is_empty() {
            Ok(DecodeOutcome::Assignment(assignment))
        } else {
            Ok(DecodeOutcome::Infeasible(bad_sites))
        }
    }

    /// Serializes the model for downstream consumers.
    pub fn to_json(&self) -> String {
        let raw = ModelJson {
            kind: self.kind,
            n: self.n,
            q: self.q,
            lambda: self.lambda,
            energy_offset: self.energy_offset,
            anchor: self.anchor.clone(),
            spins: self.spins.clone(),
            couplings: self.couplings.clone(),
            fields: self.fields.iter().copied().enumerate().collect(),
        };
        serde_json::to_string_pretty(&raw).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModelJson =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("model JSON: {e}")))?;
        let mut fields = vec![0.0; raw.spins.len()];
        let mut seen = std::collections::HashSet::new();
        for (k, h) in raw.fields {
            if k >= fields.len() || !seen.insert(k) {
                return input_err(format!("bad field index {k}"));
            }
            fields[k] = h;
        }
        let model = Self::from_parts(
            raw.kind,
            raw.n,
            raw.q,
            raw.lambda,
            raw.anchor,
            raw.couplings,
            fields,
            raw.energy_offset,
        )?;
        if model.spins != raw.spins {
            return input_err("spin list does not match the declared shape");
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    kind: EncodingKind,
    n: usize,
    q: usize,
    lambda: f64,
    energy_offset: f64,
    anchor: Option<IntegerAssignment>,
    spins: Vec<SpinId>,
    couplings: Vec<(usize, usize, f64)>,
    fields: Vec<(usize, f64)>,
}

/// One indicator spin per (value, variable) pair.
pub fn encode_one_hot(inst: &PottsInstance, lambda: f64) -> Result<IsingModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return input_err("penalty weight must be finite and nonnegative");
    }
    let (n, q) = (inst.n(), inst.q());
    let idx = |i: usize, v: usize| (i - 1) * q + (v - 1);
    let mut couplings = BTreeMap::new();
    let mut fields = vec![0.0; n * q];
    let mut offset = 0.0;
    for e in inst.edges() {
        for a in 1..=q {
            for b in 1..=q {
                let v = e.f[a - 1][b - 1];
                offset -= 0.25 * v;
                if v != 0.0 {
                    couplings.insert((idx(e.i, a), idx(e.j, b)), 0.25 * v);
                }
                fields[idx(e.i, a)] -= 0.25 * v;
                fields[idx(e.j, b)] -= 0.25 * v;
            }
        }
    }
    for i in 1..=n {
        for a in 1..=q {
            let gv = inst.g(i, a);
            fields[idx(i, a)] -= 0.5 * gv;
            offset -= 0.5 * gv;
        }
    }
    // The penalty vanishes on every feasible configuration, so the offset is
    // just the constant dropped by the indicator-to-spin substitution.
    IsingModel::from_parts(
        EncodingKind::OneHot,
        n,
        q,
        lambda,
        None,
        couplings.into_iter().map(|((a, b), j)| (a, b, j)).collect(),
        fields,
        offset,
    )
}

/// Anchored encoding: the candidate value's indicator is eliminated per
/// variable, leaving `q - 1` spins whose all-up state means "keep `r_i`".
pub fn encode_zero_hot(
    inst: &PottsInstance,
    candidate: &CandidateSolution,
    lambda: f64,
) -> Result<IsingModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return input_err("penalty weight must be finite and nonnegative");
    }
    if candidate.n() != inst.n() || candidate.q() != inst.q() {
        return input_err("candidate shape does not match the instance");
    }
    let (n, q) = (inst.n(), inst.q());
    let r = candidate.assignment();
    // Flat index of indicator (value a, variable i); the candidate value is
    // skipped, which shifts ranks above it down by one.
    let idx = |i: usize, a: usize| (i - 1) * (q - 1) + (a - 1) - usize::from(a > r[i - 1]);
    let mut couplings = BTreeMap::new();
    let mut fields = vec![0.0; n * (q - 1)];
    let mut linear = vec![0.0; n * (q - 1)]; // coefficient of each indicator
    let mut offset = 0.0;
    for e in inst.edges() {
        let (ri, rj) = (r[e.i - 1], r[e.j - 1]);
        let base = e.f[ri - 1][rj - 1];
        for a in (1..=q).filter(|&a| a != ri) {
            for b in (1..=q).filter(|&b| b != rj) {
                // Pair coefficient after eliminating both anchored indicators.
                let qv = e.f[a - 1][b - 1] - e.f[a - 1][rj - 1] - e.f[ri - 1][b - 1] + base;
                offset -= 0.25 * qv;
                if qv != 0.0 {
                    couplings.insert((idx(e.i, a), idx(e.j, b)), 0.25 * qv);
                }
                fields[idx(e.i, a)] -= 0.25 * qv;
                fields[idx(e.j, b)] -= 0.25 * qv;
            }
        }
        for a in (1..=q).filter(|&a| a != ri) {
            linear[idx(e.i, a)] += e.f[a - 1][rj - 1] - base;
        }
        for b in (1..=q).filter(|&b| b != rj) {
            linear[idx(e.j, b)] += e.f[ri - 1][b - 1] - base;
        }
    }
    for i in 1..=n {
        let ri = r[i - 1];
        for a in (1..=q).filter(|&a| a != ri) {
            linear[idx(i, a)] += inst.g(i, a) - inst.g(i, ri);
        }
    }
    for (field, &lv) in fields.iter_mut().zip(&linear) {
        *field -= 0.5 * lv;
        offset -= 0.5 * lv;
    }
    // Every feasible block contributes lambda/2 to the penalty, and the
    // substitution measures energies relative to the candidate assignment.
    offset += inst.energy(r)? - 0.5 * lambda * n as f64;
    IsingModel::from_parts(
        EncodingKind::ZeroHot,
        n,
        q,
        lambda,
        Some(r.clone()),
        couplings.into_iter().map(|((a, b), j)| (a, b, j)).collect(),
        fields,
        offset,
    )
}

/// Penalty weight that safely dominates any reward the instance can offer.
pub fn lambda_big(inst: &PottsInstance) -> f64 {
    2.0 * inst.q() as f64 * inst.max_abs_f() + 2.0 * inst.max_abs_g() + 1.0
}

/// Spin configuration of basis state `index` over `n` spins. Basis states are
/// ordered lexicographically: spin 0 is the most significant bit, and bit 0
/// means up (+1).
pub fn basis_spins(index: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|k| if index >> (n - 1 - k) & 1 == 0 { 1 } else { -1 })
        .collect()
}

/// Inverse of [`basis_spins`].
pub fn basis_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .fold(0usize, |acc, &s| (acc << 1) | usize::from(s == -1))
}

/// Exhaustive minimum of the Ising energy over all spin configurations.
/// Ties resolve to the lowest basis index. Refuses models above 2^24 states.
pub fn exhaustive_argmin(model: &IsingModel) -> Result<(f64, Vec<i8>)> {
    let n = model.num_spins();
    if n > 24 {
        return size_err(format!("spin space 2^{n} exceeds 2^24 states"));
    }
    let top = n.min(8);
    let chunk_bits = n - top;
    let per_chunk = |c: usize| {
        let mut best = f64::INFINITY;
        let mut best_index = 0usize;
        let base = c << chunk_bits;
        for low in 0..(1usize << chunk_bits) {
            let index = base | low;
            let spins = basis_spins(index, n);
            let e = model.energy_unchecked(&spins);
            if e < best {
                best = e;
                best_index = index;
            }
        }
        (best, best_index)
    };
    let chunks = exec::map_indices(1 << top, per_chunk);
    let (best, best_index) = chunks
        .into_iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .expect("at least one chunk");
    Ok((best, basis_spins(best_index, n)))
}

/// Report from [`verify_energy_consistency`].
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub trials: usize,
    /// Worst |Potts energy difference - Ising energy difference| over
    /// sampled pairs of feasible assignments.
    pub max_gap_deviation: f64,
    /// Worst |Potts energy - (Ising energy + offset)| over sampled
    /// assignments.
    pub max_offset_deviation: f64,
    pub pass: bool,
}

/// Samples random pairs of feasible assignments and checks that the encoding
/// preserves their energy difference (and absolute energy up to the recorded
/// offset).
pub fn verify_energy_consistency(
    inst: &PottsInstance,
    model: &IsingModel,
    trials: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    if trials == 0 {
        return input_err("need at least one trial");
    }
    if model.n() != inst.n() || model.q() != inst.q() {
        return input_err("model shape does not match the instance");
    }
    let assignments: Vec<(IntegerAssignment, IntegerAssignment)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> IntegerAssignment {
            (0..inst.n()).map(|_| rng.gen_range(1..=inst.q())).collect()
        };
        (0..trials).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
    };
    let deviations = exec::map_slice(&assignments, |(s, t)| {
        let ep_s = inst.energy(s).expect("sampled assignment is valid");
        let ep_t = inst.energy(t).expect("sampled assignment is valid");
        let ei_s = model
            .energy(&model.spin_representation(s).expect("assignment maps to spins"))
            .expect("representation is valid");
        let ei_t = model
            .energy(&model.spin_representation(t).expect("assignment maps to spins"))
            .expect("representation is valid");
        let gap_dev = ((ep_s - ep_t) - (ei_s - ei_t)).abs();
        let off_dev = (ep_s - (ei_s + model.energy_offset()))
            .abs()
            .max((ep_t - (ei_t + model.energy_offset())).abs());
        (gap_dev, off_dev)
    });
    let max_gap_deviation = deviations.iter().map(|d| d.0).fold(0.0, f64::max);
    let max_offset_deviation = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(ConsistencyReport {
        trials,
        max_gap_deviation,
        max_offset_deviation,
        pass: max_gap_deviation <= GAP_TOLERANCE,
    })
}

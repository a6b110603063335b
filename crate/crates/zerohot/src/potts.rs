//! Potts-style integer optimization instances.
//!
//! An instance holds `n` variables, each taking a value in `1..=q`, pairwise
//! reward tables `f` on edges and per-variable reward tables `g`. The cost of
//! an assignment `s` is
//!
//! ```text
//!     E(s) = - sum_{(i,j) in edges} f_ij(s_i, s_j) - sum_i g_i(s_i)
//! ```
//!
//! so larger rewards mean lower energy. All variable indices and values are
//! 1-based in the public interface; the JSON schema below follows the same
//! convention.

use serde::{Deserialize, Serialize};

use crate::error::{input_err, size_err, Error, Result};
use crate::exec;

/// Length-`n` vector of values in `1..=q`.
pub type IntegerAssignment = Vec<usize>;

/// Undirected edge `(i, j)` with `i < j` and a `q x q` reward table.
///
/// `f[a][b]` is the reward when variable `i` takes value `a+1` and variable
/// `j` takes value `b+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub f: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PottsInstance {
    n: usize,
    q: usize,
    edges: Vec<Edge>,
    g: Vec<Vec<f64>>,
    /// Set when the instance was built as a fully connected ferromagnet.
    fc_coupling: Option<f64>,
}

impl PottsInstance {
    /// Builds an instance from explicit tables. `g` may be empty, meaning all
    /// per-variable rewards are zero.
    pub fn new(n: usize, q: usize, edges: Vec<Edge>, g: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return input_err("instance needs at least one variable");
        }
        if q < 2 {
            return input_err("value range must have at least two values");
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.i < 1 || e.j > n || e.i >= e.j {
                return input_err(format!("edge ({}, {}) must satisfy 1 <= i < j <= n", e.i, e.j));
            }
            if !seen.insert((e.i, e.j)) {
                return input_err(format!("duplicate edge ({}, {})", e.i, e.j));
            }
            if e.f.len() != q || e.f.iter().any(|row| row.len() != q) {
                return input_err(format!("edge ({}, {}) table must be {q} x {q}", e.i, e.j));
            }
        }
        let g = if g.is_empty() { vec![vec![0.0; q]; n] } else { g };
        if g.len() != n || g.iter().any(|row| row.len() != q) {
            return input_err(format!("per-variable table must be {n} x {q}"));
        }
        Ok(Self { n, q, edges, g, fc_coupling: None })
    }

    /// Fully connected ferromagnet: every pair rewarded `4J/n` for agreeing.
    pub fn fully_connected_ferromagnet(n: usize, q: usize, j: f64) -> Result<Self> {
        if n < 2 {
            return input_err("ferromagnet needs at least two variables");
        }
        if !(j > 0.0) {
            return input_err("ferromagnetic coupling must be positive");
        }
        let mut table = vec![vec![0.0; q]; q];
        for a in 0..q {
            table[a][a] = 4.0 * j / n as f64;
        }
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for i in 1..=n {
            for jj in (i + 1)..=n {
                edges.push(Edge { i, j: jj, f: table.clone() });
            }
        }
        let mut inst = Self::new(n, q, edges, Vec::new())?;
        inst.fc_coupling = Some(j);
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Per-variable reward `g_i(v)`, 1-based arguments.
    pub fn g(&self, i: usize, v: usize) -> f64 {
        self.g[i - 1][v - 1]
    }

    pub fn fc_coupling(&self) -> Option<f64> {
        self.fc_coupling
    }

    /// Largest absolute entry over all pair tables.
    pub fn max_abs_f(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| e.f.iter().flatten())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute entry over all per-variable tables.
    pub fn max_abs_g(&self) -> f64 {
        self.g.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    fn check_assignment(&self, s: &[usize]) -> Result<()> {
        if s.len() != self.n {
            return input_err(format!("assignment has {} entries, expected {}", s.len(), self.n));
        }
        if let Some(v) = s.iter().find(|&&v| v < 1 || v > self.q) {
            return input_err(format!("assignment value {v} outside 1..={}", self.q));
        }
        Ok(())
    }

    /// Cost of an assignment: minus all collected rewards.
    pub fn energy(&self, s: &[usize]) -> Result<f64> {
        self.check_assignment(s)?;
        let mut total = 0.0;
        for e in &self.edges {
            total -= e.f[s[e.i - 1] - 1][s[e.j - 1] - 1];
        }
        for (row, &v) in self.g.iter().zip(s) {
            total -= row[v - 1];
        }
        Ok(total)
    }

    /// Exhaustive minimization. Returns the minimal energy and every optimal
    /// assignment in lexicographic order. Refuses spaces above 10^7 states.
    pub fn brute_force_optima(&self) -> Result<(f64, Vec<IntegerAssignment>)> {
        let states = (self.q as f64).powi(self.n as i32);
        if states > 1e7 {
            return size_err(format!(
                "assignment space {}^{} exceeds 10^7 states",
                self.q, self.n
            ));
        }
        // One chunk per value of the first variable; each chunk enumerates the
        // remaining digits lexicographically, so concatenation stays sorted.
        let chunks = exec::map_indices(self.q, |first| {
            let mut best = f64::INFINITY;
            let mut arg: Vec<IntegerAssignment> = Vec::new();
            let mut s = vec![1usize; self.n];
            s[0] = first + 1;
            loop {
                let e = self.energy(&s).expect("enumerated assignment is valid");
                if e < best {
                    best = e;
                    arg.clear();
                    arg.push(s.clone());
                } else if e == best {
                    arg.push(s.clone());
                }
                // Advance digits s[1..] as a base-q odometer, most significant
                // digit first so output order is lexicographic.
                let mut pos = self.n;
                loop {
                    if pos == 1 {
                        return (best, arg);
                    }
                    pos -= 1;
                    if s[pos] < self.q {
                        s[pos] += 1;
                        break;
                    }
                    s[pos] = 1;
                }
            }
        });
        let min = chunks.iter().map(|(b, _)| *b).fold(f64::INFINITY, f64::min);
        let mut optima = Vec::new();
        for (b, arg) in chunks {
            if b == min {
                optima.extend(arg);
            }
        }
        Ok((min, optima))
    }
}

/// A reference assignment `r` together with its group structure: `V_v` is the
/// set of variables currently assigned value `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution {
    r: IntegerAssignment,
    q: usize,
    group_sizes: Vec<usize>,
}

impl CandidateSolution {
    pub fn from_assignment(r: IntegerAssignment, q: usize) -> Result<Self> {
        if r.is_empty() {
            return input_err("candidate assignment is empty");
        }
        if let Some(v) = r.iter().find(|&&v| v < 1 || v > q) {
            return input_err(format!("candidate value {v} outside 1..={q}"));
        }
        let mut group_sizes = vec![0usize; q];
        for &v in &r {
            group_sizes[v - 1] += 1;
        }
        Ok(Self { r, q, group_sizes })
    }

    /// Builds a candidate with group sizes as close to `n * fractions` as
    /// integer counts allow (largest-remainder rounding, ties toward smaller
    /// values). Variables are assigned group by group: the first `n_1` get
    /// value 1, the next `n_2` value 2, and so on.
    pub fn partitioned(n: usize, q: usize, fractions: &[f64]) -> Result<Self> {
        if fractions.len() != q {
            return input_err(format!("expected {q} fractions, got {}", fractions.len()));
        }
        if fractions.iter().any(|&p| p < 0.0) {
            return input_err("fractions must be nonnegative");
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return input_err(format!("fractions sum to {total}, expected 1"));
        }
        let mut sizes: Vec<usize> = Vec::with_capacity(q);
        let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(q);
        let mut assigned = 0usize;
        for (v, &p) in fractions.iter().enumerate() {
            let target = p * n as f64;
            let base = target.floor() as usize;
            sizes.push(base);
            assigned += base;
            remainders.push((v, target - base as f64));
        }
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for k in 0..(n - assigned) {
            sizes[remainders[k % q].0] += 1;
        }
        let mut r = Vec::with_capacity(n);
        for (v, &count) in sizes.iter().enumerate() {
            r.extend(std::iter::repeat(v + 1).take(count));
        }
        Self::from_assignment(r, q)
    }

    pub fn assignment(&self) -> &IntegerAssignment {
        &self.r
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    /// Value of variable `i` (1-based).
    pub fn value(&self, i: usize) -> usize {
        self.r[i - 1]
    }

    /// Number of variables currently assigned value `v`.
    pub fn group_size(&self, v: usize) -> usize {
        self.group_sizes[v - 1]
    }

    /// Fraction of variables currently assigned value `v`.
    pub fn fraction(&self, v: usize) -> f64 {
        self.group_sizes[v - 1] as f64 / self.r.len() as f64
    }

    /// Fraction of positions where `s` agrees with the candidate.
    pub fn overlap(&self, s: &[usize]) -> Result<f64> {
        if s.len() != self.r.len() {
            return input_err(format!(
                "assignment has {} entries, expected {}",
                s.len(),
                self.r.len()
            ));
        }
        let same = self.r.iter().zip(s).filter(|(a, b)| a == b).count();
        Ok(same as f64 / self.r.len() as f64)
    }
}

/// On-disk instance description.
///
/// ```json
/// {
///   "n": 4, "q": 3,
///   "J": 1.0,                      // fully connected ferromagnet, or
///   "edges": [{"i":1,"j":2,"f":[[..],..]}],  // explicit tables
///   "g": [[..], ..],               // optional per-variable rewards
///   "candidate": [1,1,2,3]         // optional reference assignment
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    q: usize,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<Edge>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidate: Option<IntegerAssignment>,
}

/// A parsed instance file: the instance plus the optional candidate carried
/// alongside it.
#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub instance: PottsInstance,
    pub candidate: Option<CandidateSolution>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("instance JSON: {e}")))?;
        let instance = match (raw.coupling, raw.edges) {
            (Some(_), Some(_)) => {
                return input_err("give either \"J\" (ferromagnet) or \"edges\", not both")
            }
            (Some(j), None) => {
                let mut inst = PottsInstance::fully_connected_ferromagnet(raw.n, raw.q, j)?;
                if let Some(g) = raw.g {
                    inst = PottsInstance::new(raw.n, raw.q, inst.edges.clone(), g)?;
                    inst.fc_coupling = Some(j);
                }
                inst
            }
            (None, edges) => {
                PottsInstance::new(raw.n, raw.q, edges.unwrap_or_default(), raw.g.unwrap_or_default())?
            }
        };
        let candidate = match raw.candidate {
            Some(r) => {
                if r.len() != instance.n {
                    return input_err(format!(
                        "candidate has {} entries, expected {}",
                        r.len(),
                        instance.n
                    ));
                }
                Some(CandidateSolution::from_assignment(r, instance.q)?)
            }
            None => None,
        };
        Ok(Self { instance, candidate })
    }

    pub fn to_json(&self) -> String {
        let raw = InstanceJson {
            n: self.instance.n,
            q: self.instance.q,
            coupling: self.instance.fc_coupling,
            edges: if self.instance.fc_coupling.is_some() {
                None
            } else {
                Some(self.instance.edges.clone())
            },
            g: Some(self.instance.g.clone()),
            candidate: self.candidate.as_ref().map(|c| c.r.clone()),
        };
        serde_json::to_string_pretty(&raw).expect("instance serializes")
    }
}

//! Resistor-network renormalization.
//!
//! Boundary reduction is the Schur complement of the weighted Laplacian onto
//! the boundary block, computed by sparse elimination (each eliminated
//! vertex is one star-mesh move). Effective resistance is solved separately
//! with the dense Bareiss solver so the two routes check each other.

use std::collections::{BTreeMap, VecDeque};

use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{Budget, LevelGraph};
use crate::ifs::IfsSpec;
use crate::linalg::{bareiss_solve, Scalar, SparseSymmetric};
use crate::rational::{LogRatio, Rational};

/// Default convergence tolerance of the float renormalization iteration.
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Symmetric nonnegative conductances with a designated boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct ConductanceNetwork<S = Rational> {
    vertex_count: usize,
    /// Keys are `(i, j)` with `i < j`; zero conductances are never stored.
    conductances: BTreeMap<(usize, usize), S>,
    boundary: Vec<usize>,
}

impl<S: Scalar> ConductanceNetwork<S> {
    pub fn new(vertex_count: usize, boundary: Vec<usize>) -> Result<Self> {
        if let Some(&b) = boundary.iter().find(|&&b| b >= vertex_count) {
            return Err(Error::InvalidArgument(format!("boundary vertex {b} out of range")));
        }
        Ok(ConductanceNetwork {
            vertex_count,
            conductances: BTreeMap::new(),
            boundary,
        })
    }

    /// Adds `c` in parallel to the edge `{i, j}`.
    pub fn add_conductance(&mut self, i: usize, j: usize, c: S) -> Result<()> {
        if i == j || i >= self.vertex_count || j >= self.vertex_count {
            return Err(Error::InvalidArgument(format!("bad edge ({i}, {j})")));
        }
        if c.to_f64() < 0.0 {
            return Err(Error::InvalidArgument(format!("negative conductance on ({i}, {j})")));
        }
        if c.is_zero() {
            return Ok(());
        }
        let key = (i.min(j), i.max(j));
        let entry = self.conductances.entry(key).or_insert_with(S::zero);
        *entry = entry.add(&c);
        Ok(())
    }

    /// Complete graph on `k` boundary vertices with conductance `c` everywhere.
    pub fn uniform(k: usize, c: S) -> Self {
        let mut net = ConductanceNetwork::new(k, (0..k).collect()).expect("in range");
        for i in 0..k {
            for j in i + 1..k {
                net.add_conductance(i, j, c.clone()).expect("valid edge");
            }
        }
        net
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn conductance(&self, i: usize, j: usize) -> S {
        self.conductances
            .get(&(i.min(j), i.max(j)))
            .cloned()
            .unwrap_or_else(S::zero)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &S)> {
        self.conductances.iter().map(|(&(i, j), c)| (i, j, c))
    }

    pub fn edge_count(&self) -> usize {
        self.conductances.len()
    }

    pub fn laplacian(&self) -> SparseSymmetric<S> {
        SparseSymmetric::laplacian(self.vertex_count, self.edges())
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.vertex_count];
        for (i, j, _) in self.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.vertex_count];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.vertex_count
    }

    /// Electrically equivalent network on the boundary vertices only; vertex
    /// `i` of the result is `self.boundary()[i]`.
    pub fn reduce_boundary(&self) -> Result<ConductanceNetwork<S>> {
        let k = self.boundary.len();
        if k == self.vertex_count {
            return Ok(self.clone());
        }
        if !self.is_connected() {
            return Err(Error::Disconnected("network has more than one component".into()));
        }
        let mut keep = vec![false; self.vertex_count];
        for &b in &self.boundary {
            keep[b] = true;
        }
        let elim = self
            .laplacian()
            .eliminate(&keep, vec![S::zero(); self.vertex_count])
            .map_err(|e| Error::Disconnected(format!("interior elimination failed: {e}")))?;
        // `kept()` is ascending; map back to boundary order.
        let schur = elim.schur_dense();
        let pos: BTreeMap<usize, usize> = elim.kept().iter().enumerate().map(|(p, &v)| (v, p)).collect();
        let mut out = ConductanceNetwork::new(k, (0..k).collect())?;
        for a in 0..k {
            for b in a + 1..k {
                let entry = &schur[pos[&self.boundary[a]]][pos[&self.boundary[b]]];
                let c = S::zero().sub(entry);
                out.add_conductance(a, b, c)?;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: &S) -> ConductanceNetwork<S> {
        let mut out = self.clone();
        for c in out.conductances.values_mut() {
            *c = c.mul(factor);
        }
        out
    }

    pub fn total_conductance(&self) -> S {
        self.conductances.values().fold(S::zero(), |acc, c| acc.add(c))
    }

    pub fn to_f64(&self) -> ConductanceNetwork<f64> {
        ConductanceNetwork {
            vertex_count: self.vertex_count,
            conductances: self.conductances.iter().map(|(&k, c)| (k, c.to_f64())).collect(),
            boundary: self.boundary.clone(),
        }
    }
}

impl ConductanceNetwork<Rational> {
    /// Exact effective resistance between `a` and `b`: ground `b`, inject a
    /// unit current at `a` and read the potential at `a`.
    pub fn effective_resistance(&self, a: usize, b: usize) -> Result<Rational> {
        if a == b || a >= self.vertex_count || b >= self.vertex_count {
            return Err(Error::InvalidArgument(format!("bad vertex pair ({a}, {b})")));
        }
        if !self.is_connected() {
            return Err(Error::Disconnected(format!(
                "vertices {a} and {b} may be in different components"
            )));
        }
        let lap = self.laplacian().to_dense();
        let idx: Vec<usize> = (0..self.vertex_count).filter(|&v| v != b).collect();
        let reduced: Vec<Vec<Rational>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| lap[i][j].clone()).collect())
            .collect();
        let rhs: Vec<Vec<Rational>> = idx
            .iter()
            .map(|&i| vec![if i == a { Rational::one() } else { Rational::zero() }])
            .collect();
        let x = bareiss_solve(&reduced, &rhs)?;
        let pos = idx.iter().position(|&i| i == a).expect("a != b");
        Ok(x[pos][0].clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self.edges().map(|(i, j, c)| json!([i, j, c.to_string()])).collect();
        json!({
            "vertex_count": self.vertex_count,
            "boundary": self.boundary,
            "edges": edges,
        })
    }
}

impl ConductanceNetwork<f64> {
    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self.edges().map(|(i, j, c)| json!([i, j, c])).collect();
        json!({
            "vertex_count": self.vertex_count,
            "boundary": self.boundary,
            "edges": edges,
        })
    }
}

/// Glues one copy of `cell_net` (a network on `V0`) into every level-1
/// cell; conductances of identified parallel edges add.
pub fn replicate<S: Scalar>(ifs: &IfsSpec, cell_net: &ConductanceNetwork<S>) -> Result<ConductanceNetwork<S>> {
    let k = ifs.boundary_len();
    if cell_net.vertex_count() != k {
        return Err(Error::InvalidArgument(format!(
            "cell network has {} vertices, boundary has {k}",
            cell_net.vertex_count()
        )));
    }
    let g = LevelGraph::build(ifs, 1, &Budget::default())?;
    let mut net = ConductanceNetwork::new(g.vertex_count(), g.boundary.clone())?;
    for cell in &g.cells {
        for (a, b, c) in cell_net.edges() {
            net.add_conductance(cell[a], cell[b], c.clone())?;
        }
    }
    Ok(net)
}

/// Energy multiplier per refinement level.
#[derive(Clone, Debug, PartialEq)]
pub enum EnergyScale {
    Exact(Rational),
    Approximate(f64),
}

impl EnergyScale {
    pub fn value(&self) -> f64 {
        match self {
            EnergyScale::Exact(r) => r.to_f64(),
            EnergyScale::Approximate(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            EnergyScale::Exact(r) => Some(r),
            EnergyScale::Approximate(_) => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            EnergyScale::Exact(r) => json!(r.to_string()),
            EnergyScale::Approximate(v) => json!(v),
        }
    }
}

/// Fixed point of `c -> reduce(replicate(c))` up to the factor `1/λ`.
#[derive(Clone, Debug)]
pub struct Renormalization {
    pub energy_scale: EnergyScale,
    /// Exact fixed network (exact mode only).
    pub fixed_network: Option<ConductanceNetwork<Rational>>,
    /// Fixed network normalized to total conductance one.
    pub fixed_network_f64: ConductanceNetwork<f64>,
    pub exact: bool,
    pub iterations: usize,
    pub last_change: f64,
}

/// Finds `λ` and `c*` with `reduce(replicate(c*)) = c*/λ`.
///
/// The uniform network on `V0` is tried first in exact arithmetic; if it is
/// not a fixed direction, a float power iteration runs until successive
/// normalized networks differ by less than `tol`.
pub fn renorm_factor(ifs: &IfsSpec, max_iter: usize, tol: f64) -> Result<Renormalization> {
    ifs.ensure_valid()?;
    let k = ifs.boundary_len();
    let uniform = ConductanceNetwork::uniform(k, Rational::one());
    let image = replicate(ifs, &uniform)?.reduce_boundary()?;

    let first = image.conductance(0, 1);
    let is_uniform = !first.is_zero() && (0..k).all(|i| (i + 1..k).all(|j| image.conductance(i, j) == first));
    if is_uniform {
        let lambda = first.recip()?;
        let normalized = uniform.to_f64().scaled(&(1.0 / uniform.edge_count() as f64));
        return Ok(Renormalization {
            energy_scale: EnergyScale::Exact(lambda),
            fixed_network: Some(uniform),
            fixed_network_f64: normalized,
            exact: true,
            iterations: 1,
            last_change: 0.0,
        });
    }

    let normalize = |net: &ConductanceNetwork<f64>| net.scaled(&(1.0 / net.total_conductance()));
    let mut current = normalize(&uniform.to_f64());
    let mut last_change = f64::INFINITY;
    for iter in 1..=max_iter {
        let next_raw = replicate(ifs, &current)?.reduce_boundary()?;
        let lambda = current.total_conductance() / next_raw.total_conductance();
        let next = normalize(&next_raw);
        last_change = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| (next.conductance(i, j) - current.conductance(i, j)).abs())
            .fold(0.0, f64::max);
        current = next;
        if last_change < tol {
            return Ok(Renormalization {
                energy_scale: EnergyScale::Approximate(lambda),
                fixed_network: None,
                fixed_network_f64: current,
                exact: false,
                iterations: iter,
                last_change,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_change,
    })
}

/// α, γ and β of a gasket, exact when the energy scale is.
#[derive(Clone, Debug)]
pub struct DimensionReport {
    pub alpha: LogRatio,
    pub energy_scale: EnergyScale,
    pub gamma: Option<LogRatio>,
    pub beta: Option<LogRatio>,
    pub alpha_f64: f64,
    pub gamma_f64: f64,
    pub beta_f64: f64,
}

impl DimensionReport {
    /// From declared constants: `N` maps of ratio `ρ` and energy scale `λ`.
    pub fn from_constants(n: usize, ratio: &Rational, scale: EnergyScale) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("need N >= 2".into()));
        }
        if !(ratio.is_positive() && *ratio < Rational::one()) {
            return Err(Error::InvalidArgument(format!("ratio {ratio} not in (0,1)")));
        }
        let inv = ratio.recip()?;
        let n_q = Rational::from(n as i64);
        let alpha = LogRatio::new(n_q.clone(), inv.clone())?;
        let log_base = inv.ln();
        let (gamma, beta, gamma_f64, beta_f64) = match &scale {
            EnergyScale::Exact(lambda) => {
                if *lambda <= Rational::one() {
                    return Err(Error::InvalidArgument(format!("energy scale {lambda} must exceed 1")));
                }
                let gamma = LogRatio::new(lambda.clone(), inv.clone())?;
                let beta = LogRatio::new(&n_q * lambda, inv.clone())?;
                let (g, b) = (gamma.value(), beta.value());
                (Some(gamma), Some(beta), g, b)
            }
            EnergyScale::Approximate(lambda) => {
                if !(*lambda > 1.0) {
                    return Err(Error::InvalidArgument(format!("energy scale {lambda} must exceed 1")));
                }
                let g = lambda.ln() / log_base;
                (None, None, g, alpha.value() + g)
            }
        };
        Ok(DimensionReport {
            alpha_f64: alpha.value(),
            alpha,
            energy_scale: scale,
            gamma,
            beta,
            gamma_f64,
            beta_f64,
        })
    }

    pub fn exact(&self) -> bool {
        self.beta.is_some()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lr = |x: &Option<LogRatio>| match x {
            Some(l) => json!({ "expr": l.to_string(), "argument": l.argument().to_string(),
                               "base": l.base().to_string(), "value": l.value(),
                               "rational": l.as_rational().map(|r| r.to_string()) }),
            None => serde_json::Value::Null,
        };
        json!({
            "alpha": lr(&Some(self.alpha.clone())),
            "energy_scale": self.energy_scale.to_json(),
            "exact": self.exact(),
            "gamma": lr(&self.gamma),
            "beta": lr(&self.beta),
            "floats": { "alpha": self.alpha_f64, "energy_scale": self.energy_scale.value(),
                        "gamma": self.gamma_f64, "beta": self.beta_f64 },
        })
    }
}

/// `α = log N/log(1/ρ)`, `γ = log λ/log(1/ρ)`, `β = log(Nλ)/log(1/ρ)`.
pub fn walk_dimension(ifs: &IfsSpec, max_iter: usize, tol: f64) -> Result<DimensionReport> {
    let renorm = renorm_factor(ifs, max_iter, tol)?;
    DimensionReport::from_constants(ifs.len(), ifs.ratio(), renorm.energy_scale)
}

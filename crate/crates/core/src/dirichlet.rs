//! Discrete Dirichlet forms on level graphs: harmonic extension, scaled
//! energies, exact exit times, lazy-walk return probabilities and the
//! heat-kernel decay integral.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LinearFit};
use crate::graph::{Budget, LevelGraph};
use crate::ifs::IfsSpec;
use crate::linalg::{Scalar, SparseSymmetric};
use crate::rational::Rational;

/// One value per vertex of a level-`level` graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction<S = Rational> {
    pub level: usize,
    pub values: Vec<S>,
}

impl<S: Scalar> GraphFunction<S> {
    pub fn to_f64(&self) -> GraphFunction<f64> {
        GraphFunction {
            level: self.level,
            values: self.values.iter().map(Scalar::to_f64).collect(),
        }
    }
}

fn unit_laplacian<S: Scalar>(g: &LevelGraph) -> SparseSymmetric<S> {
    let one = S::one();
    SparseSymmetric::laplacian(g.vertex_count(), g.edges.iter().map(|&(a, b)| (a, b, &one)))
}

/// Solves the interior Dirichlet problem for unit conductances.
fn harmonic_solve<S: Scalar>(g: &LevelGraph, boundary_values: &[S]) -> Result<Vec<S>> {
    let n = g.vertex_count();
    let mut values: Vec<Option<S>> = vec![None; n];
    for (&b, v) in g.boundary.iter().zip(boundary_values) {
        values[b] = Some(v.clone());
    }
    let interior: Vec<usize> = (0..n).filter(|&v| values[v].is_none()).collect();
    if interior.is_empty() {
        return Ok(values.into_iter().map(Option::unwrap).collect());
    }
    let lap = unit_laplacian::<S>(g);
    let mut rhs = vec![S::zero(); interior.len()];
    for (k, &i) in interior.iter().enumerate() {
        for (j, a) in lap.row(i) {
            if let Some(v) = &values[j] {
                rhs[k] = rhs[k].sub(&a.mul(v));
            }
        }
    }
    let x = lap.submatrix(&interior).solve(rhs)?;
    for (&i, v) in interior.iter().zip(x) {
        values[i] = Some(v);
    }
    Ok(values.into_iter().map(Option::unwrap).collect())
}

/// The energy minimizer on `V_m` with prescribed values on `V0`, solved
/// exactly in rationals.
pub fn harmonic_extension(
    ifs: &IfsSpec,
    m: usize,
    boundary_values: &[Rational],
    budget: &Budget,
) -> Result<(LevelGraph, GraphFunction<Rational>)> {
    if boundary_values.len() != ifs.boundary_len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} boundary values, got {}",
            ifs.boundary_len(),
            boundary_values.len()
        )));
    }
    let g = LevelGraph::build(ifs, m, budget)?;
    if g.vertex_count() > budget.exact_vertices {
        return Err(Error::BudgetExceeded {
            what: "vertices for an exact solve",
            needed: g.vertex_count() as u128,
            budget: budget.exact_vertices as u128,
        });
    }
    let values = harmonic_solve(&g, boundary_values)?;
    Ok((g, GraphFunction { level: m, values }))
}

/// Float variant of [`harmonic_extension`] for graphs past the exact budget.
pub fn harmonic_extension_f64(
    ifs: &IfsSpec,
    m: usize,
    boundary_values: &[f64],
    budget: &Budget,
) -> Result<(LevelGraph, GraphFunction<f64>)> {
    if boundary_values.len() != ifs.boundary_len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} boundary values, got {}",
            ifs.boundary_len(),
            boundary_values.len()
        )));
    }
    let g = LevelGraph::build(ifs, m, budget)?;
    let values = harmonic_solve(&g, boundary_values)?;
    Ok((g, GraphFunction { level: m, values }))
}

/// `Σ_{x~y} (u(x) - u(y))^2` over the graph edges.
pub fn raw_energy<S: Scalar>(g: &LevelGraph, u: &GraphFunction<S>) -> Result<S> {
    if u.level != g.level {
        return Err(Error::LevelMismatch {
            expected: g.level,
            found: u.level,
        });
    }
    Ok(g.edges.iter().fold(S::zero(), |acc, &(a, b)| {
        let d = u.values[a].sub(&u.values[b]);
        acc.add(&d.mul(&d))
    }))
}

/// `energy_scale^m · Σ_{x~_m y} (u(x) - u(y))^2`, exact.
pub fn graph_energy(g: &LevelGraph, u: &GraphFunction<Rational>, energy_scale: &Rational) -> Result<Rational> {
    let raw = raw_energy(g, u)?;
    Ok(energy_scale.pow(g.level as u32) * raw)
}

/// Expected hitting time value in exact or float arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub enum ExitTime {
    Exact(Rational),
    Approximate(f64),
}

impl ExitTime {
    pub fn value(&self) -> f64 {
        match self {
            ExitTime::Exact(r) => r.to_f64(),
            ExitTime::Approximate(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            ExitTime::Exact(r) => Some(r),
            ExitTime::Approximate(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExitTimeEntry {
    pub level: usize,
    pub expected_steps: ExitTime,
    /// `E_m / E_{m-1}`, absent at the first level.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExitTimeProfile {
    pub entries: Vec<ExitTimeEntry>,
    /// Ratio at the deepest level, the time-scaling estimate.
    pub time_scale: Option<f64>,
    /// `log(time_scale) / log(1/ρ)`.
    pub beta_hat: Option<f64>,
}

/// Residual bound for float exit-time solves.
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-10;

fn exit_time_at<S: Scalar>(g: &LevelGraph, start: usize) -> Result<(S, f64)> {
    let n = g.vertex_count();
    let start_vertex = g.boundary[start];
    let mut absorbing = vec![false; n];
    for &b in &g.boundary {
        absorbing[b] = b != start_vertex;
    }
    let free: Vec<usize> = (0..n).filter(|&v| !absorbing[v]).collect();
    // deg(x) T(x) - Σ_{y~x, y free} T(y) = deg(x)
    let lap = unit_laplacian::<S>(g);
    let system = lap.submatrix(&free);
    let rhs: Vec<S> = free.iter().map(|&v| lap.get(v, v)).collect();
    let t = system.clone().solve(rhs.clone())?;
    let residual = system
        .mul_vec(&t)
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a.sub(b)).to_f64().abs())
        .fold(0.0, f64::max);
    let scale = rhs.iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max).max(1.0);
    let pos = free.binary_search(&start_vertex).expect("start is free");
    Ok((t[pos].clone(), residual / scale))
}

/// Expected steps for the simple random walk on the level-m graph from
/// boundary vertex `start` to hit the rest of `V0`, for `m = 0..=m_max`.
pub fn exit_time_profile(ifs: &IfsSpec, m_max: usize, start: usize, budget: &Budget) -> Result<ExitTimeProfile> {
    ifs.ensure_valid()?;
    if start >= ifs.boundary_len() {
        return Err(Error::InvalidArgument(format!("start {start} is not a boundary index")));
    }
    let mut entries: Vec<ExitTimeEntry> = Vec::new();
    for m in 0..=m_max {
        let g = LevelGraph::build(ifs, m, budget)?;
        let expected_steps = if g.vertex_count() <= budget.exact_vertices {
            let (t, _) = exit_time_at::<Rational>(&g, start)?;
            ExitTime::Exact(t)
        } else {
            let (t, residual) = exit_time_at::<f64>(&g, start)?;
            if residual > FLOAT_RESIDUAL_TOL {
                return Err(Error::Singular(format!(
                    "float exit-time solve at level {m} has residual {residual:e}"
                )));
            }
            ExitTime::Approximate(t)
        };
        let ratio = entries
            .last()
            .map(|prev| expected_steps.value() / prev.expected_steps.value());
        entries.push(ExitTimeEntry {
            level: m,
            expected_steps,
            ratio,
        });
    }
    let time_scale = entries.last().and_then(|e| e.ratio);
    let log_base = ifs.ratio().recip()?.ln();
    Ok(ExitTimeProfile {
        entries,
        time_scale,
        beta_hat: time_scale.map(|s| s.ln() / log_base),
    })
}

/// Default lazy-walk holding probability.
pub const DEFAULT_LAZINESS: f64 = 0.5;
/// Earliest time admitted to the heat-kernel fit.
pub const HEAT_FIT_MIN_TIME: usize = 10;
/// Times whose normalized return probability is within this factor of the
/// plateau are treated as mixed and excluded.
pub const HEAT_PLATEAU_MARGIN: f64 = 1.1;

#[derive(Clone, Debug, Serialize)]
pub struct HeatProfile {
    pub times: Vec<usize>,
    /// `P^t(x, x) / w(x)` at each grid time.
    pub diag_values: Vec<f64>,
    /// The same quantity at every `t = 0..=max(times)`.
    pub series: Vec<f64>,
    pub laziness: f64,
    pub base_vertex: usize,
    /// Stationary limit `π(x) / w(x)`.
    pub plateau: f64,
    /// Grid times used by the fit.
    pub window: Vec<usize>,
    pub fit: LinearFit,
}

impl HeatProfile {
    pub fn fitted_exponent(&self) -> f64 {
        self.fit.slope
    }
}

/// About `count` distinct integers, geometrically spaced over `[lo, hi]`.
pub fn log_time_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (lo_f, hi_f) = ((lo.max(1)) as f64, hi.max(lo).max(1) as f64);
    let steps = count.max(2) - 1;
    let mut grid: Vec<usize> = (0..=steps)
        .map(|i| (lo_f * (hi_f / lo_f).powf(i as f64 / steps as f64)).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Vertex farthest (in graph distance) from `V0`; ties go to the smallest index.
pub fn deep_interior_vertex(g: &LevelGraph) -> usize {
    let d = g.boundary_distances();
    let best = d.iter().copied().max().unwrap_or(0);
    d.iter().position(|&x| x == best).unwrap_or(0)
}

/// Measure-normalized return probabilities of the lazy walk at the deep
/// interior vertex, with a log-log fit over the pre-mixing window.
pub fn heat_kernel_diag(
    ifs: &IfsSpec,
    m: usize,
    laziness: f64,
    t_grid: &[usize],
    budget: &Budget,
) -> Result<HeatProfile> {
    if !(laziness > 0.0 && laziness < 1.0) {
        return Err(Error::InvalidArgument(format!("laziness {laziness} not in (0,1)")));
    }
    let g = LevelGraph::build(ifs, m, budget)?;
    if g.vertex_count() > budget.pair_points {
        return Err(Error::BudgetExceeded {
            what: "vertices for a heat-kernel run",
            needed: g.vertex_count() as u128,
            budget: budget.pair_points as u128,
        });
    }
    let adj = g.adjacency();
    let weights = g.vertex_measure_weights_f64();
    let base = deep_interior_vertex(&g);
    let t_max = t_grid.iter().copied().max().unwrap_or(0);

    let degree: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let total_degree: f64 = degree.iter().sum();
    let plateau = degree[base] / total_degree / weights[base];

    let mut dist = vec![0.0; g.vertex_count()];
    dist[base] = 1.0;
    let mut next = vec![0.0; g.vertex_count()];
    let mut series = Vec::with_capacity(t_max + 1);
    series.push(dist[base] / weights[base]);
    for _ in 0..t_max {
        for (y, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = adj[y].iter().map(|&z| dist[z] / degree[z]).sum();
            *slot = laziness * dist[y] + (1.0 - laziness) * inflow;
        }
        std::mem::swap(&mut dist, &mut next);
        series.push(dist[base] / weights[base]);
    }

    let times: Vec<usize> = t_grid.to_vec();
    let diag_values: Vec<f64> = times.iter().map(|&t| series[t]).collect();
    let window: Vec<usize> = times
        .iter()
        .copied()
        .filter(|&t| t >= HEAT_FIT_MIN_TIME && series[t] > HEAT_PLATEAU_MARGIN * plateau)
        .collect();
    if window.len() < 3 {
        return Err(Error::Fit(format!(
            "heat-kernel fit window has {} usable times (need 3)",
            window.len()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|&t| t as f64).collect();
    let ys: Vec<f64> = window.iter().map(|&t| series[t]).collect();
    let fit = log_log_fit(&xs, &ys)?;
    Ok(HeatProfile {
        times,
        diag_values,
        series,
        laziness,
        base_vertex: base,
        plateau,
        window,
        fit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayCheck {
    pub finite: bool,
    /// Quadrature of the integral over `[0, cutoff]`.
    pub value: f64,
    /// Rigorous upper bound on the integral over `[cutoff, ∞)`.
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// `∫_0^∞ s^{α+β+ε-1} Φ(s) ds` for `Φ(s) = exp(-c s^{β/(β-1)})`.
pub fn decay_condition_check(alpha: f64, beta: f64, epsilon: f64, c: f64) -> Result<DecayCheck> {
    if !(beta > 1.0) || !(epsilon > 0.0) || !(c > 0.0) || !(alpha > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "decay check needs α > 0, β > 1, ε > 0, c > 0 (got α={alpha}, β={beta}, ε={epsilon}, c={c})"
        )));
    }
    let a = alpha + beta + epsilon;
    let q = beta / (beta - 1.0);
    let shape = a / q;
    // Substituting x = c s^q turns the tail into an upper incomplete gamma
    // Γ(shape, x0)/(q c^shape); choose x0 far past the mode.
    let x0 = (shape + 60.0).max(2.0 * shape);
    let cutoff = (x0 / c).powf(1.0 / q);
    let f = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            s.powf(a - 1.0) * (-c * s.powf(q)).exp()
        }
    };
    let value = adaptive_simpson(&f, 0.0, cutoff, 1e-13);
    // Γ(k, x) <= x^{k-1} e^{-x} / (1 - (k-1)/x) for x > k - 1.
    let gamma_tail = if shape <= 1.0 {
        x0.powf(shape - 1.0) * (-x0).exp()
    } else {
        x0.powf(shape - 1.0) * (-x0).exp() / (1.0 - (shape - 1.0) / x0)
    };
    let tail_bound = gamma_tail / (q * c.powf(shape));
    Ok(DecayCheck {
        finite: value.is_finite() && tail_bound.is_finite(),
        value,
        tail_bound,
        cutoff,
    })
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    // Split into panels first so narrow peaks are not skipped.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            recurse(
                f,
                x0,
                x1,
                f0,
                fm,
                f1,
                simpson(f0, fm, f1, x0, x1),
                tol / panels as f64,
                40,
            )
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets::{segment, sierpinski};
    use crate::linalg::bareiss_solve;
    use crate::resistance::{renorm_factor, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn ones() -> Vec<Rational> {
        vec![Rational::one(), Rational::zero(), Rational::zero()]
    }

    #[test]
    fn one_fifth_two_fifths_rule() {
        let sg = sierpinski();
        let (g, u) = harmonic_extension(&sg, 1, &ones(), &Budget::default()).unwrap();
        // Boundary order (0,0), (1,0), (0,1); value 1 at the origin.
        let at = |x: (i64, i64), y: (i64, i64)| {
            u.values[g.index_of(&crate::geometry::Point::ratio(x.0, x.1, y.0, y.1)).unwrap()].clone()
        };
        assert_eq!(at((1, 2), (0, 1)), q("2/5"));
        assert_eq!(at((0, 1), (1, 2)), q("2/5"));
        assert_eq!(at((1, 2), (1, 2)), q("1/5"));
        assert_eq!(at((0, 1), (0, 1)), q("1"));
    }

    #[test]
    fn constants_extend_to_constants() {
        let c = vec![q("3/7"); 3];
        let (_, u) = harmonic_extension(&sierpinski(), 3, &c, &Budget::default()).unwrap();
        assert!(u.values.iter().all(|v| *v == q("3/7")));
    }

    #[test]
    fn level_zero_extension_is_identity() {
        let (g, u) = harmonic_extension(&sierpinski(), 0, &ones(), &Budget::default()).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(u.values, ones());
    }

    #[test]
    fn wrong_boundary_length() {
        assert!(harmonic_extension(&sierpinski(), 1, &ones()[..2], &Budget::default()).is_err());
    }

    #[test]
    fn energy_is_level_invariant_at_five_thirds() {
        let sg = sierpinski();
        let scale = q("5/3");
        for m in 0..=4 {
            let (g, u) = harmonic_extension(&sg, m, &ones(), &Budget::default()).unwrap();
            assert_eq!(graph_energy(&g, &u, &scale).unwrap(), q("2"), "level {m}");
        }
    }

    #[test]
    fn wrong_scale_breaks_invariance() {
        let sg = sierpinski();
        let (g0, u0) = harmonic_extension(&sg, 0, &ones(), &Budget::default()).unwrap();
        let (g1, u1) = harmonic_extension(&sg, 1, &ones(), &Budget::default()).unwrap();
        let e0 = graph_energy(&g0, &u0, &q("2")).unwrap();
        let e1 = graph_energy(&g1, &u1, &q("2")).unwrap();
        assert_ne!(e0, e1);
        assert_eq!(&e1 / &e0, q("6/5"));
    }

    #[test]
    fn level_mismatch_detected() {
        let sg = sierpinski();
        let (g1, _) = harmonic_extension(&sg, 1, &ones(), &Budget::default()).unwrap();
        let (_, u2) = harmonic_extension(&sg, 2, &ones(), &Budget::default()).unwrap();
        assert!(matches!(
            graph_energy(&g1, &u2, &q("5/3")),
            Err(Error::LevelMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn raw_energy_decays_by_lambda() {
        let sg = sierpinski();
        let lambda = renorm_factor(&sg, DEFAULT_MAX_ITER, DEFAULT_TOL)
            .unwrap()
            .energy_scale
            .exact()
            .unwrap()
            .clone();
        let bv = vec![q("2"), q("-1/3"), q("5/4")];
        let mut prev: Option<Rational> = None;
        for m in 0..=4 {
            let (g, u) = harmonic_extension(&sg, m, &bv, &Budget::default()).unwrap();
            let e = raw_energy(&g, &u).unwrap();
            if let Some(p) = prev {
                assert_eq!(&e * &lambda, p);
            }
            prev = Some(e);
        }
    }

    /// First-step analysis `T(x) = 1 + mean_{y~x} T(y)` solved densely.
    fn exit_time_oracle(g: &LevelGraph, start: usize) -> Rational {
        let adj = g.adjacency();
        let s = g.boundary[start];
        let absorbing: Vec<bool> = (0..g.vertex_count())
            .map(|v| g.boundary.contains(&v) && v != s)
            .collect();
        let free: Vec<usize> = (0..g.vertex_count()).filter(|&v| !absorbing[v]).collect();
        let a: Vec<Vec<Rational>> = free
            .iter()
            .map(|&x| {
                let deg = adj[x].len() as i64;
                free.iter()
                    .map(|&y| {
                        let hits = adj[x].iter().filter(|&&z| z == y).count() as i64;
                        let id = if x == y { Rational::one() } else { Rational::zero() };
                        id - Rational::ratio(hits, deg)
                    })
                    .collect()
            })
            .collect();
        let b = vec![vec![Rational::one()]; free.len()];
        let t = bareiss_solve(&a, &b).unwrap();
        t[free.iter().position(|&v| v == s).unwrap()][0].clone()
    }

    #[test]
    fn sg_exit_times() {
        let sg = sierpinski();
        let p = exit_time_profile(&sg, 4, 0, &Budget::default()).unwrap();
        assert_eq!(p.entries[0].expected_steps, ExitTime::Exact(q("1")));
        assert_eq!(p.entries[1].expected_steps, ExitTime::Exact(q("5")));
        for m in 0..=3 {
            let g = LevelGraph::build(&sg, m, &Budget::default()).unwrap();
            assert_eq!(p.entries[m].expected_steps.exact().unwrap(), &exit_time_oracle(&g, 0));
        }
        for e in &p.entries[2..] {
            assert!((e.ratio.unwrap() - 5.0).abs() < 0.05, "{e:?}");
        }
        assert!((p.beta_hat.unwrap() - 5f64.ln() / 2f64.ln()).abs() < 0.02 * 2.3219);
        let ratios: Vec<f64> = p.entries.iter().filter_map(|e| e.ratio).collect();
        assert!(ratios.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert_eq!(ratios[0], 5.0);
    }

    #[test]
    fn segment_exit_times_are_squares() {
        let p = exit_time_profile(&segment(), 5, 0, &Budget::default()).unwrap();
        for e in &p.entries {
            assert_eq!(
                e.expected_steps,
                ExitTime::Exact(Rational::from(4i64.pow(e.level as u32)))
            );
        }
        assert_eq!(p.beta_hat, Some(2.0));
    }

    #[test]
    fn float_exit_times_match_exact() {
        let sg = sierpinski();
        let tight = Budget {
            exact_vertices: 10,
            ..Budget::default()
        };
        let exact = exit_time_profile(&sg, 3, 1, &Budget::default()).unwrap();
        let float = exit_time_profile(&sg, 3, 1, &tight).unwrap();
        assert!(matches!(float.entries[3].expected_steps, ExitTime::Approximate(_)));
        for (a, b) in exact.entries.iter().zip(&float.entries) {
            let (x, y) = (a.expected_steps.value(), b.expected_steps.value());
            assert!((x - y).abs() < 1e-9 * x);
        }
    }

    #[test]
    fn time_grid_is_geometric() {
        let g = log_time_grid(10, 1000, 5);
        assert_eq!(g, vec![10, 32, 100, 316, 1000]);
    }

    #[test]
    fn segment_heat_slope_is_minus_half() {
        let grid = log_time_grid(10, 1000, 25);
        let h = heat_kernel_diag(&segment(), 8, DEFAULT_LAZINESS, &grid, &Budget::default()).unwrap();
        assert!((h.fitted_exponent() + 0.5).abs() < 0.05, "{:?}", h.fit);
    }

    #[test]
    fn sg_heat_slope_matches_spectral_ratio() {
        let grid = log_time_grid(10, 1000, 25);
        let h = heat_kernel_diag(&sierpinski(), 6, DEFAULT_LAZINESS, &grid, &Budget::default()).unwrap();
        let expected = -(3f64.ln() / 5f64.ln());
        assert!(
            (h.fitted_exponent() - expected).abs() < 0.05,
            "{:?} window {:?}",
            h.fit,
            h.window
        );
    }

    #[test]
    fn heat_series_reaches_plateau_and_is_log_convex() {
        let grid = log_time_grid(10, 1000, 25);
        let h = heat_kernel_diag(&sierpinski(), 3, DEFAULT_LAZINESS, &grid, &Budget::default()).unwrap_or_else(|e| {
            panic!("{e}");
        });
        let last = *h.series.last().unwrap();
        assert!((last - h.plateau).abs() < 1e-6 * h.plateau);
        // Long times are excluded from the window.
        assert!(h.window.iter().all(|&t| h.series[t] > 1.1 * h.plateau));
        for w in h.series.windows(3) {
            assert!(w[0] * w[2] >= w[1] * w[1] * (1.0 - 1e-9));
        }
        assert!(h.series.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn heat_rejects_bad_laziness_and_empty_window() {
        let grid = log_time_grid(10, 1000, 10);
        assert!(heat_kernel_diag(&sierpinski(), 3, 1.0, &grid, &Budget::default()).is_err());
        // Level 0 mixes immediately: nothing left to fit.
        assert!(matches!(
            heat_kernel_diag(&sierpinski(), 0, 0.5, &grid, &Budget::default()),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn decay_integral_matches_gamma_closed_form() {
        let alpha = 3f64.ln() / 2f64.ln();
        let beta = 5f64.ln() / 2f64.ln();
        let (eps, c) = (0.1, 1.0);
        let d = decay_condition_check(alpha, beta, eps, c).unwrap();
        assert!(d.finite);
        assert!(d.value > 0.0);
        let a = alpha + beta + eps;
        let qq = beta / (beta - 1.0);
        let exact = libm::tgamma(a / qq) / (qq * c.powf(a / qq));
        assert!((d.value - exact).abs() < 1e-9 * exact, "{} vs {exact}", d.value);
        assert!(d.tail_bound < 1e-15 * exact);
    }

    #[test]
    fn decay_rejects_no_decay_and_bad_ranges() {
        assert!(decay_condition_check(1.58, 2.32, 0.1, 0.0).is_err());
        assert!(decay_condition_check(1.58, 1.0, 0.1, 1.0).is_err());
        assert!(decay_condition_check(1.58, 2.32, 0.0, 1.0).is_err());
    }

    #[test]
    fn decay_integral_decreases_in_c() {
        let mut prev = f64::INFINITY;
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let v = decay_condition_check(1.58, 2.32, 0.1, c).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn maximum_principle(a in -20i64..20, b in -20i64..20, c in -20i64..20, m in 1usize..=5) {
            let bv = vec![Rational::ratio(a, 3), Rational::ratio(b, 5), Rational::ratio(c, 7)];
            let (_, u) = harmonic_extension(&sierpinski(), m, &bv, &Budget::default()).unwrap();
            let lo = bv.iter().min().unwrap();
            let hi = bv.iter().max().unwrap();
            prop_assert!(u.values.iter().all(|v| v >= lo && v <= hi));
        }
    }
}

//! Discretized Besov functionals, Alfors-regularity diagnostics, the
//! critical-exponent slope estimator and bi-Lipschitz pushforward checks.
//!
//! Point sets keep exact coordinates as integers over a common denominator
//! so ball membership `d(x, y) < r` is decided exactly for rational radii.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::dirichlet::harmonic_extension_f64;
use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LinearFit};
use crate::geometry::Point;
use crate::graph::{Budget, LevelGraph};
use crate::ifs::{IfsSpec, MeasureSample};
use crate::rational::Rational;

/// Coordinate numerators are capped so squared distances fit in `i128`.
const MAX_NUMERATOR_BITS: u64 = 60;

/// Weighted finite point set standing in for `(F, d, μ)`.
#[derive(Clone, Debug)]
pub struct PointSet {
    numerators: Vec<[i64; 2]>,
    denom: BigInt,
    pub weights: Vec<f64>,
    /// Mesh size of the discretization; radii at or below it are unresolved.
    pub resolution: f64,
    /// Diameter of the underlying set; radii from half of it on are saturated.
    pub diameter: f64,
}

impl PointSet {
    pub fn from_points(points: &[Point], weights: Vec<f64>, resolution: f64, diameter: f64) -> Result<PointSet> {
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument("points and weights differ in length".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty point set".into()));
        }
        let denom = points
            .iter()
            .flat_map(|p| [p.x.denom(), p.y.denom()])
            .fold(BigInt::one(), |acc, d| acc.lcm(d));
        let to_num = |q: &Rational| -> Result<i64> {
            let n = q.numer() * (&denom / q.denom());
            if n.bits() > MAX_NUMERATOR_BITS {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {q} needs more than {MAX_NUMERATOR_BITS} bits over the common denominator"
                )));
            }
            Ok(n.to_i64().expect("bounded by bit check"))
        };
        let numerators = points
            .iter()
            .map(|p| Ok([to_num(&p.x)?, to_num(&p.y)?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointSet {
            numerators,
            denom,
            weights,
            resolution,
            diameter,
        })
    }

    /// Level-m vertices with their cell-count weights.
    pub fn from_graph(g: &LevelGraph, ifs: &IfsSpec) -> Result<PointSet> {
        let diameter = ifs.boundary_diameter();
        let resolution = ifs.ratio().to_f64().powi(g.level as i32) * diameter;
        PointSet::from_points(&g.vertices, g.vertex_measure_weights_f64(), resolution, diameter)
    }

    /// Uniformly weighted measure sample.
    pub fn from_sample(sample: &MeasureSample, ifs: &IfsSpec) -> Result<PointSet> {
        let diameter = ifs.boundary_diameter();
        let resolution = ifs.ratio().to_f64().powi(sample.depth as i32) * diameter;
        PointSet::from_points(
            &sample.points,
            vec![sample.weight(); sample.points.len()],
            resolution,
            diameter,
        )
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn point(&self, i: usize) -> Point {
        let d = Rational::from_integer(self.denom.clone());
        let [x, y] = self.numerators[i];
        Point::new(Rational::from(x) / d.clone(), Rational::from(y) / d)
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Coordinate function `x` (axis 0) or `y` (axis 1).
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        let d = Rational::from_integer(self.denom.clone()).to_f64();
        self.numerators.iter().map(|c| c[axis] as f64 / d).collect()
    }

    /// Image under `t`; weights are multiplied by `weight_factor`.
    pub fn map(&self, t: &LipschitzMap, weight_factor: f64) -> Result<PointSet> {
        let points: Vec<Point> = self.points().iter().map(|p| t.apply(p)).collect();
        let weights = self.weights.iter().map(|w| w * weight_factor).collect();
        let s = t.scale.to_f64();
        PointSet::from_points(&points, weights, self.resolution * s, self.diameter * s)
    }

    /// Largest integer `T` with `d2 < T ⟺ d(x, y) < r` for squared
    /// numerator distances `d2`.
    fn threshold(&self, r: &Rational) -> i128 {
        let num = r.numer() * r.numer() * &self.denom * &self.denom;
        let den = r.denom() * r.denom();
        let (q, rem) = num.div_rem(&den);
        let t = if rem.is_positive() { q + 1 } else { q };
        t.to_i128().unwrap_or(i128::MAX)
    }

    fn dist2(&self, i: usize, j: usize) -> i128 {
        let [ax, ay] = self.numerators[i];
        let [bx, by] = self.numerators[j];
        let dx = (ax - bx) as i128;
        let dy = (ay - by) as i128;
        dx * dx + dy * dy
    }

    /// For every point, the indices inside its open `r`-ball in increasing
    /// order (the point itself included).
    fn balls(&self, r: &Rational) -> Vec<Vec<usize>> {
        let threshold = self.threshold(r);
        let scaled = r * &Rational::from_integer(self.denom.clone());
        let width = scaled
            .numer()
            .div_ceil(scaled.denom())
            .to_i64()
            .unwrap_or(i64::MAX)
            .max(1);
        let key = |c: &[i64; 2]| (c[0].div_euclid(width), c[1].div_euclid(width));
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, c) in self.numerators.iter().enumerate() {
            buckets.entry(key(c)).or_default().push(i);
        }
        (0..self.len())
            .map(|i| {
                let (kx, ky) = key(&self.numerators[i]);
                let mut ball = Vec::new();
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        let cell = (kx.saturating_add(dx), ky.saturating_add(dy));
                        if let Some(members) = buckets.get(&cell) {
                            ball.extend(members.iter().copied().filter(|&j| self.dist2(i, j) < threshold));
                        }
                    }
                }
                ball.sort_unstable();
                ball
            })
            .collect()
    }
}

/// Dyadic radii `r_max, r_max/2, …` down to `r_min`, decreasing.
pub fn dyadic_grid(r_min: &Rational, r_max: &Rational) -> Result<Vec<Rational>> {
    if !r_min.is_positive() || r_min > r_max {
        return Err(Error::InvalidArgument(format!("bad radius window [{r_min}, {r_max}]")));
    }
    let half = Rational::ratio(1, 2);
    let mut grid = Vec::new();
    let mut r = r_max.clone();
    while &r >= r_min {
        grid.push(r.clone());
        r = &r * &half;
    }
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BesovOptions {
    /// Exponent used for volume ratios `V̂/r^α` and the analytic volume.
    pub alpha: f64,
    /// Replace `V̂(x, r)` by `r^α` (variance reduction).
    pub analytic_volume: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusValue {
    pub r: Rational,
    pub r_f64: f64,
    /// `Σ_x w_x (1/V(x,r)) Σ_{y∈B(x,r)} w_y (u(x)-u(y))²`.
    pub e_tilde: f64,
    /// The same sum without the `1/V` normalization.
    pub pair_energy: f64,
    /// `r^{-2σ} · Ẽ(r)`.
    pub scaled: f64,
    pub v_min_ratio: f64,
    pub v_max_ratio: f64,
    /// Above the mesh size.
    pub resolved: bool,
    /// At least half the diameter: balls cover most of the set.
    pub saturated: bool,
}

impl RadiusValue {
    pub fn usable(&self) -> bool {
        self.resolved && !self.saturated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovScan {
    pub sigma: f64,
    pub values: Vec<RadiusValue>,
    /// Supremum of `scaled` over usable radii.
    pub sup: f64,
    /// `‖u‖_2`, for the norm `‖u‖_2 + W_σ(u)^{1/2}`.
    pub l2_norm: f64,
}

impl BesovScan {
    pub fn norm(&self) -> f64 {
        self.l2_norm + self.sup.sqrt()
    }

    pub fn r_grid(&self) -> Vec<Rational> {
        self.values.iter().map(|v| v.r.clone()).collect()
    }
}

fn check_function(points: &PointSet, u: &[f64]) -> Result<()> {
    if u.len() != points.len() {
        return Err(Error::InvalidArgument(format!(
            "function has {} values for {} points",
            u.len(),
            points.len()
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("function has non-finite values".into()));
    }
    Ok(())
}

fn check_budget(points: &PointSet, budget: &Budget) -> Result<()> {
    if points.len() > budget.pair_points {
        return Err(Error::BudgetExceeded {
            what: "points in a pair scan",
            needed: points.len() as u128,
            budget: budget.pair_points as u128,
        });
    }
    Ok(())
}

/// Discretized `r^{-2σ} ∫ [1/V(x,r) ∫_{B(x,r)} |u(x)-u(y)|² dμ(y)] dμ(x)`
/// on each radius of `r_grid`.
pub fn besov_functional(
    points: &PointSet,
    u: &[f64],
    sigma: f64,
    r_grid: &[Rational],
    options: &BesovOptions,
    budget: &Budget,
) -> Result<BesovScan> {
    check_function(points, u)?;
    check_budget(points, budget)?;
    let mut values = Vec::with_capacity(r_grid.len());
    for r in r_grid {
        if !r.is_positive() {
            return Err(Error::InvalidArgument(format!("radius {r} is not positive")));
        }
        let r_f64 = r.to_f64();
        let r_alpha = r_f64.powf(options.alpha);
        let balls = points.balls(r);
        let (mut e_tilde, mut pair_energy) = (0.0, 0.0);
        let (mut v_min, mut v_max) = (f64::INFINITY, 0.0f64);
        for (x, ball) in balls.iter().enumerate() {
            let mut inner = 0.0;
            let mut volume = 0.0;
            for &y in ball {
                let d = u[x] - u[y];
                inner += points.weights[y] * d * d;
                volume += points.weights[y];
            }
            v_min = v_min.min(volume / r_alpha);
            v_max = v_max.max(volume / r_alpha);
            let v = if options.analytic_volume { r_alpha } else { volume };
            e_tilde += points.weights[x] * inner / v;
            pair_energy += points.weights[x] * inner;
        }
        values.push(RadiusValue {
            r: r.clone(),
            r_f64,
            e_tilde,
            pair_energy,
            scaled: r_f64.powf(-2.0 * sigma) * e_tilde,
            v_min_ratio: v_min,
            v_max_ratio: v_max,
            resolved: r_f64 > points.resolution,
            saturated: r_f64 >= 0.5 * points.diameter,
        });
    }
    let sup = values
        .iter()
        .filter(|v| v.usable())
        .map(|v| v.scaled)
        .fold(0.0, f64::max);
    let l2_norm = points.weights.iter().zip(u).map(|(w, v)| w * v * v).sum::<f64>().sqrt();
    Ok(BesovScan {
        sigma,
        values,
        sup,
        l2_norm,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalExponentEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub beta_star_estimate: f64,
    pub fit: LinearFit,
    pub scan: BesovScan,
}

/// Minimum number of usable radii for a slope fit.
pub const MIN_FIT_RADII: usize = 4;

/// Log-log slope of `Ẽ(r)` over the dyadic radii in `[r_min, r_max]`.
pub fn critical_exponent_fit(
    points: &PointSet,
    u: &[f64],
    r_min: &Rational,
    r_max: &Rational,
    options: &BesovOptions,
    budget: &Budget,
) -> Result<CriticalExponentEstimate> {
    if r_max >= &Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "window must lie in (0,1), got r_max = {r_max}"
        )));
    }
    let grid = dyadic_grid(r_min, r_max)?;
    let scan = besov_functional(points, u, 0.0, &grid, options, budget)?;
    let used: Vec<&RadiusValue> = scan.values.iter().filter(|v| v.usable() && v.e_tilde > 0.0).collect();
    if used.len() < MIN_FIT_RADII {
        return Err(Error::Fit(format!(
            "{} usable radii in [{r_min}, {r_max}] (need {MIN_FIT_RADII})",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|v| v.r_f64).collect();
    let ys: Vec<f64> = used.iter().map(|v| v.e_tilde).collect();
    let fit = log_log_fit(&xs, &ys)?;
    let window = (used.last().unwrap().r_f64, used[0].r_f64);
    Ok(CriticalExponentEstimate {
        slope: fit.slope,
        stderr: fit.slope_stderr,
        window,
        beta_star_estimate: fit.slope,
        fit,
        scan,
    })
}

/// Level-m harmonic extension of `boundary_values` as a point set and
/// function, ready for a scan.
pub fn harmonic_point_function(
    ifs: &IfsSpec,
    m: usize,
    boundary_values: &[f64],
    budget: &Budget,
) -> Result<(PointSet, Vec<f64>)> {
    let (g, u) = harmonic_extension_f64(ifs, m, boundary_values, budget)?;
    Ok((PointSet::from_graph(&g, ifs)?, u.values))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlforsRadius {
    pub r: Rational,
    pub r_f64: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlforsReport {
    pub alpha: f64,
    pub radii: Vec<AlforsRadius>,
    /// `max(max ratio, 1/min ratio)` over all centers and radii.
    pub constant: f64,
    /// Largest over smallest per-radius median ratio.
    pub drift: f64,
    pub centers: usize,
    pub points: usize,
}

/// Empirical `V̂(x, r) / r^α` at up to `centers` evenly strided points.
pub fn alfors_check(points: &PointSet, alpha: f64, r_grid: &[Rational], centers: usize) -> Result<AlforsReport> {
    if r_grid.is_empty() || centers == 0 {
        return Err(Error::InvalidArgument("alfors check needs radii and centers".into()));
    }
    let mut order: Vec<usize> = (0..r_grid.len()).collect();
    order.sort_by(|&a, &b| r_grid[b].cmp(&r_grid[a]));
    let thresholds: Vec<i128> = order.iter().map(|&k| points.threshold(&r_grid[k])).collect();

    let n = points.len();
    let centers = centers.min(n);
    let mut ratios = vec![Vec::with_capacity(centers); r_grid.len()];
    for c in 0..centers {
        let x = c * n / centers;
        let mut volume = vec![0.0; r_grid.len()];
        for y in 0..n {
            let d2 = points.dist2(x, y);
            for (slot, &t) in thresholds.iter().enumerate() {
                if d2 >= t {
                    break;
                }
                volume[slot] += points.weights[y];
            }
        }
        for (slot, &k) in order.iter().enumerate() {
            ratios[k].push(volume[slot] / r_grid[k].to_f64().powf(alpha));
        }
    }

    let radii: Vec<AlforsRadius> = r_grid
        .iter()
        .zip(ratios.iter_mut())
        .map(|(r, rs)| {
            rs.sort_by(f64::total_cmp);
            AlforsRadius {
                r: r.clone(),
                r_f64: r.to_f64(),
                min_ratio: rs[0],
                max_ratio: rs[rs.len() - 1],
                median_ratio: rs[rs.len() / 2],
            }
        })
        .collect();
    let max_ratio = radii.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let min_ratio = radii.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    let medians = radii.iter().map(|r| r.median_ratio);
    let drift = medians.clone().fold(0.0, f64::max) / medians.fold(f64::INFINITY, f64::min);
    Ok(AlforsReport {
        alpha,
        constant: max_ratio.max(1.0 / min_ratio),
        drift,
        radii,
        centers,
        points: n,
    })
}

/// Rotation-free affine map `x ↦ s·x + t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzMap {
    pub scale: Rational,
    pub translation: Point,
}

impl LipschitzMap {
    pub fn new(scale: Rational, translation: Point) -> Result<LipschitzMap> {
        if !scale.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "scale {scale} is not invertible as a similarity"
            )));
        }
        Ok(LipschitzMap { scale, translation })
    }

    pub fn identity() -> LipschitzMap {
        LipschitzMap {
            scale: Rational::one(),
            translation: Point::origin(),
        }
    }

    pub fn scaling(scale: Rational) -> Result<LipschitzMap> {
        LipschitzMap::new(scale, Point::origin())
    }

    pub fn translation(t: Point) -> LipschitzMap {
        LipschitzMap {
            scale: Rational::one(),
            translation: t,
        }
    }

    /// `C = max(s, 1/s)`.
    pub fn bilipschitz_constant(&self) -> Rational {
        let inv = self.scale.recip().expect("scale is positive");
        if inv > self.scale {
            inv
        } else {
            self.scale.clone()
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        p.scale(&self.scale).add(&self.translation)
    }

    pub fn inverse(&self) -> LipschitzMap {
        let inv = self.scale.recip().expect("scale is positive");
        let t = self.translation.scale(&inv);
        LipschitzMap {
            translation: Point::origin().sub(&t),
            scale: inv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpRatio {
    pub p: u32,
    /// `‖u∘T⁻¹‖_p / ‖u‖_p`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PushforwardRadius {
    pub r: Rational,
    /// Pair energy of `u∘T⁻¹` on `T(F)` at radius `r`.
    pub lhs: f64,
    /// `C′ ·` pair energy of `u` on `F` at radius `C·r`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PushforwardReport {
    pub map: LipschitzMap,
    pub lp_ratios: Vec<LpRatio>,
    pub lambda_1: f64,
    pub lambda_2: f64,
    /// Radius inflation `C` used on the right-hand side.
    pub inflation: Rational,
    /// `C′ = λ_1 · λ_2²`.
    pub c_prime: f64,
    pub radii: Vec<PushforwardRadius>,
    pub inequality_holds: bool,
    pub source: CriticalExponentEstimate,
    pub image: CriticalExponentEstimate,
    /// `|β*_F - β*_T(F)| ≤ 2·sqrt(se_F² + se_T(F)²)`.
    pub estimates_agree: bool,
    /// Per-radius functionals of source and image coincide bit for bit.
    pub functionals_identical: bool,
}

/// Relative slack allowed in the inequality for float summation order.
pub const PUSHFORWARD_SLACK: f64 = 1e-12;

fn lp_norm(weights: &[f64], u: &[f64], p: u32) -> f64 {
    let s: f64 = weights.iter().zip(u).map(|(w, v)| w * v.abs().powi(p as i32)).sum();
    s.powf(1.0 / p as f64)
}

/// Evaluates both sides of the pushforward Besov inequality for `T` and
/// compares critical-exponent estimates on `F` and `T(F)`. The image carries
/// the Hausdorff measure `s^α μ`.
pub fn pushforward_check(
    t: &LipschitzMap,
    points: &PointSet,
    u: &[f64],
    r_min: &Rational,
    r_max: &Rational,
    options: &BesovOptions,
    budget: &Budget,
) -> Result<PushforwardReport> {
    check_function(points, u)?;
    let weight_factor = t.scale.to_f64().powf(options.alpha);
    let image = points.map(t, weight_factor)?;

    let ones = vec![1.0; u.len()];
    let mut lp_ratios = Vec::new();
    let mut lambda = [0.0f64; 2];
    for p in [1u32, 2] {
        let mut best = 0.0f64;
        for f in [u, &ones[..]] {
            let base = lp_norm(&points.weights, f, p);
            if base > 0.0 {
                let ratio = lp_norm(&image.weights, f, p) / base;
                if std::ptr::eq(f, u) {
                    lp_ratios.push(LpRatio { p, ratio });
                }
                best = best.max(ratio);
            }
        }
        lambda[p as usize - 1] = best;
    }
    let c_prime = lambda[0] * lambda[1] * lambda[1];
    let inflation = t.bilipschitz_constant();

    let grid = dyadic_grid(r_min, r_max)?;
    let inflated: Vec<Rational> = grid.iter().map(|r| r * &inflation).collect();
    let lhs = besov_functional(&image, u, 0.0, &grid, options, budget)?;
    let rhs = besov_functional(points, u, 0.0, &inflated, options, budget)?;
    let radii: Vec<PushforwardRadius> = grid
        .iter()
        .zip(lhs.values.iter().zip(&rhs.values))
        .map(|(r, (l, rv))| {
            let rhs = c_prime * rv.pair_energy;
            PushforwardRadius {
                r: r.clone(),
                lhs: l.pair_energy,
                rhs,
                holds: l.pair_energy <= rhs * (1.0 + PUSHFORWARD_SLACK),
            }
        })
        .collect();

    let source = critical_exponent_fit(points, u, r_min, r_max, options, budget)?;
    let image_fit = critical_exponent_fit(&image, u, r_min, r_max, options, budget)?;
    let combined = (source.stderr.powi(2) + image_fit.stderr.powi(2)).sqrt();
    let estimates_agree = (source.slope - image_fit.slope).abs() <= 2.0 * combined;
    let functionals_identical = source.scan == image_fit.scan;
    Ok(PushforwardReport {
        map: t.clone(),
        lp_ratios,
        lambda_1: lambda[0],
        lambda_2: lambda[1],
        inflation,
        c_prime,
        inequality_holds: radii.iter().all(|r| r.holds),
        radii,
        source,
        image: image_fit,
        estimates_agree,
        functionals_identical,
    })
}

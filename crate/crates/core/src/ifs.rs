//! Rotation-free similitude IFSs with a declared boundary set.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, convex_intersection, Point};
use crate::rational::{LogRatio, Rational};

/// `x -> ratio * x + translation`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Similitude {
    pub ratio: Rational,
    #[serde(rename = "translate")]
    pub translation: Point,
}

impl Similitude {
    pub fn new(ratio: Rational, translation: Point) -> Self {
        Similitude { ratio, translation }
    }

    pub fn apply(&self, p: &Point) -> Point {
        p.scale(&self.ratio).add(&self.translation)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Similitude) -> Similitude {
        Similitude {
            ratio: &self.ratio * &inner.ratio,
            translation: self.apply(&inner.translation),
        }
    }

    pub fn identity() -> Similitude {
        Similitude::new(Rational::one(), Point::origin())
    }

    /// `x -> (x - translation) / ratio`; `None` for a zero ratio.
    pub fn inverse(&self) -> Option<Similitude> {
        let inv = self.ratio.recip().ok()?;
        let t = self.translation.scale(&inv);
        Some(Similitude::new(inv, Point::new(-&t.x, -&t.y)))
    }

    /// `translation / (1 - ratio)`; `None` for the identity ratio.
    pub fn fixed_point(&self) -> Option<Point> {
        let denom = Rational::one() - &self.ratio;
        if denom.is_zero() {
            return None;
        }
        let inv = denom.recip().ok()?;
        Some(self.translation.scale(&inv))
    }
}

/// A gasket-type IFS: equal-ratio similitudes plus a boundary set `V0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpec {
    pub name: String,
    pub maps: Vec<Similitude>,
    pub boundary: Vec<Point>,
}

/// One structural check from [`IfsSpec::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Offending map indices (or boundary vertex indices, per check).
    pub offending: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_MAP_COUNT: &str = "map_count";
pub const CHECK_EQUAL_RATIO: &str = "equal_ratio";
pub const CHECK_BOUNDARY: &str = "boundary_points";
pub const CHECK_FINITE_RAMIFICATION: &str = "finite_ramification";
pub const CHECK_CONNECTED: &str = "level1_connected";

impl IfsSpec {
    pub fn new(name: impl Into<String>, maps: Vec<Similitude>, boundary: Vec<Point>) -> Self {
        IfsSpec {
            name: name.into(),
            maps,
            boundary,
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Common contraction ratio (the first map's ratio).
    pub fn ratio(&self) -> &Rational {
        &self.maps[0].ratio
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let n = self.maps.len();
        checks.push(Check {
            name: CHECK_MAP_COUNT,
            passed: n >= 2,
            detail: format!("N = {n} (need N >= 2)"),
            offending: Vec::new(),
        });

        let (zero, one) = (Rational::zero(), Rational::one());
        let bad_ratio: Vec<usize> = match self.maps.first() {
            None => Vec::new(),
            Some(first) => self
                .maps
                .iter()
                .enumerate()
                .filter(|(_, m)| m.ratio != first.ratio || m.ratio <= zero || m.ratio >= one)
                .map(|(i, _)| i)
                .collect(),
        };
        checks.push(Check {
            name: CHECK_EQUAL_RATIO,
            passed: bad_ratio.is_empty() && n > 0,
            detail: if bad_ratio.is_empty() {
                "all maps share one ratio in (0,1)".into()
            } else {
                "maps with a ratio outside (0,1) or differing from map 0".into()
            },
            offending: bad_ratio.clone(),
        });

        checks.push(self.check_boundary());

        // The geometric checks need a sane map list.
        if n == 0 || !bad_ratio.is_empty() || self.boundary.len() < 2 {
            for name in [CHECK_FINITE_RAMIFICATION, CHECK_CONNECTED] {
                checks.push(Check {
                    name,
                    passed: false,
                    detail: "skipped: ratio or boundary checks failed".into(),
                    offending: Vec::new(),
                });
            }
            return ValidationReport { checks };
        }

        let images: Vec<Vec<Point>> = self
            .maps
            .iter()
            .map(|m| self.boundary.iter().map(|p| m.apply(p)).collect())
            .collect();
        checks.push(self.check_finite_ramification(&images));
        checks.push(check_connected(&images));
        ValidationReport { checks }
    }

    fn check_boundary(&self) -> Check {
        let k = self.boundary.len();
        let distinct: BTreeSet<&Point> = self.boundary.iter().collect();
        if k < 2 || distinct.len() != k {
            return Check {
                name: CHECK_BOUNDARY,
                passed: false,
                detail: format!(
                    "need at least 2 distinct boundary points, got {k} ({} distinct)",
                    distinct.len()
                ),
                offending: Vec::new(),
            };
        }
        // Certified attractor points: fixed points and their images under
        // words of length <= 2. Search backwards from each boundary point.
        let fixed: BTreeSet<Point> = self.maps.iter().filter_map(Similitude::fixed_point).collect();
        let inverses: Vec<Similitude> = self.maps.iter().filter_map(Similitude::inverse).collect();
        let certified = |p: &Point| -> bool {
            let mut frontier = vec![p.clone()];
            for _ in 0..=2 {
                if frontier.iter().any(|x| fixed.contains(x)) {
                    return true;
                }
                frontier = frontier
                    .iter()
                    .flat_map(|x| inverses.iter().map(move |inv| inv.apply(x)))
                    .collect();
            }
            false
        };
        let offending: Vec<usize> = self
            .boundary
            .iter()
            .enumerate()
            .filter(|(_, p)| !certified(p))
            .map(|(i, _)| i)
            .collect();
        Check {
            name: CHECK_BOUNDARY,
            passed: offending.is_empty(),
            detail: if offending.is_empty() {
                "every boundary point is a fixed point or a short-word image of one".into()
            } else {
                "boundary points not certified to lie on the attractor".into()
            },
            offending,
        }
    }

    fn check_finite_ramification(&self, images: &[Vec<Point>]) -> Check {
        let hulls: Vec<Vec<Point>> = images.iter().map(|im| convex_hull(im)).collect();
        let mut offending = BTreeSet::new();
        let mut detail = String::from("level-1 cells meet only at boundary images");
        for i in 0..hulls.len() {
            for j in i + 1..hulls.len() {
                let meet = convex_intersection(&hulls[i], &hulls[j]);
                let ok = match meet.len() {
                    0 => true,
                    1 => images[i].contains(&meet[0]) && images[j].contains(&meet[0]),
                    _ => false,
                };
                if !ok {
                    if offending.is_empty() {
                        detail = format!("cells {i} and {j} overlap in {meet:?}");
                    }
                    offending.insert(i);
                    offending.insert(j);
                }
            }
        }
        Check {
            name: CHECK_FINITE_RAMIFICATION,
            passed: offending.is_empty(),
            detail,
            offending: offending.into_iter().collect(),
        }
    }

    /// Errors with the failing check names unless every check passes.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.passed() {
            Ok(())
        } else {
            let names: Vec<String> = report
                .failures()
                .map(|c| format!("{} ({})", c.name, c.detail))
                .collect();
            Err(Error::InvalidIfs(format!("{}: {}", self.name, names.join("; "))))
        }
    }

    /// `log N / log(1/ρ)`.
    pub fn hausdorff_dim(&self) -> Result<LogRatio> {
        self.ensure_valid()?;
        LogRatio::new(Rational::from(self.maps.len() as i64), self.ratio().recip()?)
    }

    /// All compositions `outer_i ∘ inner_j`, `i` major.
    pub fn compose(outer: &IfsSpec, inner: &IfsSpec) -> Result<IfsSpec> {
        outer.ensure_valid()?;
        inner.ensure_valid()?;
        if outer.boundary != inner.boundary {
            return Err(Error::BoundaryMismatch(format!(
                "{} and {} declare different boundary sets",
                outer.name, inner.name
            )));
        }
        let maps = outer
            .maps
            .iter()
            .flat_map(|o| inner.maps.iter().map(move |i| o.compose(i)))
            .collect();
        Ok(IfsSpec {
            name: format!("{}∘{}", outer.name, inner.name),
            maps,
            boundary: outer.boundary.clone(),
        })
    }

    /// Composite similitude for every word of length `m`, in lexicographic
    /// word order (first letter most significant).
    pub fn word_maps(&self, m: usize) -> Vec<Similitude> {
        let mut words = vec![Similitude::identity()];
        for _ in 0..m {
            words = words
                .iter()
                .flat_map(|w| self.maps.iter().map(move |f| w.compose(f)))
                .collect();
        }
        words
    }

    /// Euclidean diameter of the boundary hull (equals the attractor's).
    pub fn boundary_diameter(&self) -> f64 {
        let mut best = Rational::zero();
        for a in &self.boundary {
            for b in &self.boundary {
                let d = a.dist2(b);
                if d > best {
                    best = d;
                }
            }
        }
        best.to_f64().sqrt()
    }

    /// Depth `ceil(log ε / log ρ)` reaching resolution `ε`.
    pub fn depth_for_resolution(&self, epsilon: f64) -> usize {
        let rho = self.ratio().to_f64();
        ((epsilon.ln() / rho.ln()) - 1e-12).ceil().max(1.0) as usize
    }

    pub fn sample_measure(&self, depth: usize, count: usize, seed: u64) -> Result<MeasureSample> {
        self.ensure_valid()?;
        if depth == 0 || count == 0 {
            return Err(Error::InvalidArgument(
                "sample_measure needs depth >= 1 and count >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.maps.len();
        let start = &self.boundary[0];
        let mut digits = vec![0usize; depth];
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            for d in digits.iter_mut() {
                *d = rng.gen_range(0..n);
            }
            // F_{w1} ∘ ... ∘ F_{wd}(x0): innermost map first.
            let mut x = start.clone();
            for &d in digits.iter().rev() {
                x = self.maps[d].apply(&x);
            }
            points.push(x);
        }
        Ok(MeasureSample { points, depth, seed })
    }
}

/// Default target resolution for measure sampling.
pub const DEFAULT_SAMPLING_RESOLUTION: f64 = 1.0 / 1024.0;

fn check_connected(images: &[Vec<Point>]) -> Check {
    let n = images.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && images[i].iter().any(|p| images[j].contains(p)) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    let offending: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
    Check {
        name: CHECK_CONNECTED,
        passed: offending.is_empty(),
        detail: if offending.is_empty() {
            "level-1 cell graph is connected".into()
        } else {
            "cells unreachable from cell 0".into()
        },
        offending,
    }
}

/// Equal-weight samples of the self-similar measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureSample {
    pub points: Vec<Point>,
    pub depth: usize,
    pub seed: u64,
}

impl MeasureSample {
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    pub fn float_points(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(Point::to_f64).collect()
    }
}

/// Built-in configurations.
pub mod presets {
    use super::*;

    fn sim(rn: i64, rd: i64, tx: (i64, i64), ty: (i64, i64)) -> Similitude {
        Similitude::new(Rational::ratio(rn, rd), Point::ratio(tx.0, tx.1, ty.0, ty.1))
    }

    /// Right-angle Sierpiński gasket on (0,0), (1,0), (0,1).
    pub fn sierpinski() -> IfsSpec {
        IfsSpec::new(
            "sg",
            vec![
                sim(1, 2, (0, 1), (0, 1)),
                sim(1, 2, (1, 2), (0, 1)),
                sim(1, 2, (0, 1), (1, 2)),
            ],
            vec![
                Point::ratio(0, 1, 0, 1),
                Point::ratio(1, 1, 0, 1),
                Point::ratio(0, 1, 1, 1),
            ],
        )
    }

    /// Level-3 Sierpiński gasket: the six upright third-size triangles of
    /// the right-angle triangle.
    pub fn sierpinski3() -> IfsSpec {
        let sg = sierpinski();
        let maps = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)]
            .iter()
            .map(|&(i, j)| sim(1, 3, (i, 3), (j, 3)))
            .collect();
        IfsSpec::new("sg3", maps, sg.boundary)
    }

    /// Unit interval [0,1] x {0} as two half-size copies.
    pub fn segment() -> IfsSpec {
        IfsSpec::new(
            "segment",
            vec![sim(1, 2, (0, 1), (0, 1)), sim(1, 2, (1, 2), (0, 1))],
            vec![Point::ratio(0, 1, 0, 1), Point::ratio(1, 1, 0, 1)],
        )
    }

    pub fn by_name(name: &str) -> Option<IfsSpec> {
        match name {
            "sg" => Some(sierpinski()),
            "sg3" => Some(sierpinski3()),
            "segment" => Some(segment()),
            _ => None,
        }
    }

    pub const NAMES: &[&str] = &["sg", "sg3", "segment"];
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn sierpinski_passes_all_checks() {
        let report = sierpinski().validate();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn single_map_fails_count() {
        let mut ifs = sierpinski();
        ifs.maps.truncate(1);
        let report = ifs.validate();
        assert!(!report.check(CHECK_MAP_COUNT).unwrap().passed);
        assert!(ifs.ensure_valid().is_err());
    }

    #[test]
    fn diagonal_segment_passes() {
        let ifs = IfsSpec::new(
            "diag",
            vec![
                Similitude::new(q("1/2"), Point::ratio(0, 1, 0, 1)),
                Similitude::new(q("1/2"), Point::ratio(1, 2, 1, 2)),
            ],
            vec![Point::ratio(0, 1, 0, 1), Point::ratio(1, 1, 1, 1)],
        );
        assert!(ifs.validate().passed(), "{:?}", ifs.validate());
    }

    #[test]
    fn unequal_ratio_rejected() {
        let mut ifs = sierpinski();
        ifs.maps[2].ratio = q("1/3");
        let check = ifs.validate().check(CHECK_EQUAL_RATIO).unwrap().clone();
        assert!(!check.passed);
        assert_eq!(check.offending, vec![2]);
    }

    #[test]
    fn overlapping_cells_rejected() {
        let mut ifs = sierpinski();
        ifs.maps[1].translation = Point::ratio(1, 4, 0, 1);
        let check = ifs.validate().check(CHECK_FINITE_RAMIFICATION).unwrap().clone();
        assert!(!check.passed);
        // Cell 1 now overlaps cell 0 and touches cell 2 at a non-vertex point.
        assert_eq!(check.offending, vec![0, 1, 2]);
    }

    #[test]
    fn disconnected_cells_rejected() {
        // Cantor-like: two thirds-size copies that never touch.
        let ifs = IfsSpec::new(
            "cantor",
            vec![
                Similitude::new(q("1/3"), Point::ratio(0, 1, 0, 1)),
                Similitude::new(q("1/3"), Point::ratio(2, 3, 0, 1)),
            ],
            vec![Point::ratio(0, 1, 0, 1), Point::ratio(1, 1, 0, 1)],
        );
        let report = ifs.validate();
        assert!(!report.check(CHECK_CONNECTED).unwrap().passed);
        assert_eq!(report.check(CHECK_CONNECTED).unwrap().offending, vec![1]);
    }

    #[test]
    fn boundary_off_attractor_rejected() {
        let mut ifs = sierpinski();
        ifs.boundary[2] = Point::ratio(1, 3, 1, 3);
        let check = ifs.validate().check(CHECK_BOUNDARY).unwrap().clone();
        assert!(!check.passed);
        assert_eq!(check.offending, vec![2]);
    }

    #[test]
    fn hausdorff_dimensions() {
        let sg = sierpinski();
        let alpha = sg.hausdorff_dim().unwrap();
        assert!((alpha.value() - 1.584_963).abs() < 1e-6);
        assert_eq!(segment().hausdorff_dim().unwrap().value(), 1.0);
        let sg2 = IfsSpec::compose(&sg, &sg).unwrap();
        let alpha2 = sg2.hausdorff_dim().unwrap();
        assert_eq!(alpha2.argument(), &q("9"));
        assert_eq!(alpha2.base(), &q("4"));
        assert_eq!(alpha2.exactly_equals(&alpha), Some(true));
    }

    #[test]
    fn compose_structure() {
        let sg = sierpinski();
        let sg2 = IfsSpec::compose(&sg, &sg).unwrap();
        assert_eq!(sg2.len(), 9);
        assert_eq!(sg2.ratio(), &q("1/4"));
        assert_eq!(sg2.boundary, sg.boundary);
        assert!(sg2.validate().passed());
        assert!(matches!(
            IfsSpec::compose(&sg, &segment()),
            Err(Error::BoundaryMismatch(_))
        ));
    }

    #[test]
    fn compose_order_matters_for_maps_not_counts() {
        let (sg, sg3) = (sierpinski(), sierpinski3());
        assert!(sg3.validate().passed(), "{:?}", sg3.validate());
        let ab = IfsSpec::compose(&sg, &sg3).unwrap();
        let ba = IfsSpec::compose(&sg3, &sg).unwrap();
        assert_eq!(ab.len(), 18);
        assert_eq!(ab.len(), ba.len());
        assert_eq!(ab.ratio(), ba.ratio());
        assert_ne!(ab.maps, ba.maps);
        let set = |ifs: &IfsSpec| -> BTreeSet<Point> { ifs.maps.iter().map(|m| m.translation.clone()).collect() };
        assert_ne!(set(&ab), set(&ba));
        assert!(ab.validate().passed());
        assert!(ba.validate().passed());
    }

    #[test]
    fn composition_is_associative() {
        let sg = sierpinski();
        let sg2 = IfsSpec::compose(&sg, &sg).unwrap();
        let left = IfsSpec::compose(&sg, &sg2).unwrap();
        let right = IfsSpec::compose(&sg2, &sg).unwrap();
        assert_eq!(left.maps, right.maps);
    }

    #[test]
    fn depth_for_default_resolution() {
        assert_eq!(sierpinski().depth_for_resolution(DEFAULT_SAMPLING_RESOLUTION), 10);
        let sg2 = IfsSpec::compose(&sierpinski(), &sierpinski()).unwrap();
        assert_eq!(sg2.depth_for_resolution(DEFAULT_SAMPLING_RESOLUTION), 5);
    }

    #[test]
    fn depth_one_samples_lie_in_level_one_cells() {
        let sg = sierpinski();
        let s = sg.sample_measure(1, 3, 7).unwrap();
        for p in &s.points {
            // Each cell is a half-size triangle at one of the three corners.
            let in_cell = sg.maps.iter().any(|m| {
                let local = p.sub(&m.translation).scale(&q("2"));
                local.x >= Rational::zero() && local.y >= Rational::zero() && &local.x + &local.y <= Rational::one()
            });
            assert!(in_cell, "{p:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let sg = sierpinski();
        let a = sg.sample_measure(6, 50, 42).unwrap();
        let b = sg.sample_measure(6, 50, 42).unwrap();
        assert_eq!(a, b);
        let c = sg.sample_measure(6, 50, 43).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn sampling_mean_matches_barycenter() {
        // Mean m solves m = ρ m + mean(t), i.e. m = mean(t)/(1-ρ) = (1/3, 1/3).
        let sg = sierpinski();
        let s = sg.sample_measure(10, 100_000, 42).unwrap();
        let mean_x: f64 = s.float_points().iter().map(|p| p[0]).sum::<f64>() / 1e5;
        assert!((mean_x - 1.0 / 3.0).abs() < 0.01 / 3.0, "{mean_x}");
    }

    #[test]
    fn invalid_sampling_arguments() {
        assert!(sierpinski().sample_measure(0, 5, 1).is_err());
        assert!(sierpinski().sample_measure(3, 0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn composed_dimension_matches_log_sum(a in 0usize..2, b in 0usize..2) {
            let pick = |i: usize| if i == 0 { sierpinski() } else {
                IfsSpec::compose(&sierpinski(), &sierpinski()).unwrap()
            };
            let (x, y) = (pick(a), pick(b));
            let xy = IfsSpec::compose(&x, &y).unwrap();
            let expected = ((x.len() as f64).ln() + (y.len() as f64).ln())
                / ((1.0 / x.ratio().to_f64()).ln() + (1.0 / y.ratio().to_f64()).ln());
            prop_assert!((xy.hausdorff_dim().unwrap().value() - expected).abs() < 1e-12);
        }

        #[test]
        fn samples_stay_near_attractor(depth in 1usize..4, seed in 0u64..1000) {
            let sg = sierpinski();
            let s = sg.sample_measure(depth, 20, seed).unwrap();
            // Level-depth cell corners are attractor points.
            let corners: Vec<Point> = sg.word_maps(depth).iter()
                .flat_map(|w| sg.boundary.iter().map(move |p| w.apply(p)))
                .collect();
            let bound = sg.ratio().to_f64().powi(depth as i32) * sg.boundary_diameter();
            for p in &s.points {
                let best = corners.iter().map(|c| c.dist2(p).to_f64().sqrt()).fold(f64::INFINITY, f64::min);
                prop_assert!(best <= bound + 1e-12);
            }
        }
    }
}

//! Orbit traces, dynamical balls and the discrete-time expansivity index.
//!
//! The index at delta is the largest cardinality of a set of net points
//! whose iterates all stay within diameter delta. Such sets are cliques of
//! the pairwise companion graph. For a homeomorphism the covering orbit
//! segments of the flow definition degenerate to single points, so the
//! index counts distinct representatives; the companion-set report still
//! groups members into observed orbit segments for inspection.

use crate::cliques::{best_clique, Adjacency};
use crate::error::{Error, Result};
use crate::systems::{BaseMetric, BaseSystem, Point};

/// A finite truncation of an orbit: samples of `phi^n` for |n| <= horizon.
#[derive(Clone, Debug)]
pub struct OrbitTrace {
    pub anchor: Point,
    pub samples: Vec<(i64, Point)>,
    pub horizon: i64,
}

/// Samples `phi^n(x)` for n = -h..h. Needs window for h iterates.
pub fn map_orbit_trace(sys: &BaseSystem, x: &Point, horizon: i64) -> Result<OrbitTrace> {
    if horizon < 0 {
        return Err(Error::InvalidParameter("horizon must be >= 0".into()));
    }
    check_horizon(sys, horizon)?;
    let mut samples = Vec::with_capacity(2 * horizon as usize + 1);
    for n in -horizon..=horizon {
        samples.push((n, sys.iterate(x, n)?));
    }
    Ok(OrbitTrace {
        anchor: x.clone(),
        samples,
        horizon,
    })
}

fn check_horizon(sys: &BaseSystem, horizon: i64) -> Result<()> {
    if sys.is_symbolic() && horizon as usize > sys.resolution() {
        return Err(Error::ResolutionExhausted(format!(
            "horizon {horizon} exceeds window radius {}",
            sys.resolution()
        )));
    }
    Ok(())
}

/// max over |n| <= horizon of the metric between n-th iterates.
pub fn dynamical_dist(
    sys: &BaseSystem,
    metric: BaseMetric,
    a: &Point,
    b: &Point,
    horizon: i64,
) -> Result<f64> {
    let mut worst = metric.eval(sys, a, b)?;
    let mut fa = a.clone();
    let mut fb = b.clone();
    for _ in 0..horizon {
        fa = sys.forward(&fa)?;
        fb = sys.forward(&fb)?;
        worst = worst.max(metric.eval(sys, &fa, &fb)?);
    }
    let mut ba = a.clone();
    let mut bb = b.clone();
    for _ in 0..horizon {
        ba = sys.backward(&ba)?;
        bb = sys.backward(&bb)?;
        worst = worst.max(metric.eval(sys, &ba, &bb)?);
    }
    Ok(worst)
}

/// A dynamical delta-ball around a center, with its members grouped into
/// observed orbit segments.
#[derive(Clone, Debug)]
pub struct CompanionSet {
    pub center: Point,
    pub delta: f64,
    pub horizon: i64,
    pub members: Vec<Point>,
    /// Partition of `members` (by index) into observed orbit segments.
    pub orbit_classes: Vec<Vec<usize>>,
}

impl CompanionSet {
    pub fn class_count(&self) -> usize {
        self.orbit_classes.len()
    }
}

/// True when the observable evidence shows `b = phi^j(a)` for some
/// 0 < |j| <= reach, or the windows agree outright. Truncated windows are
/// compared on their common radius; the comparison keeps at least one
/// symbol of context beyond the center so that radius-0 coincidences never
/// merge points.
pub(crate) fn observed_same_segment(sys: &BaseSystem, a: &Point, b: &Point, reach: i64) -> bool {
    if sys.same_within_resolution(a, b) {
        return true;
    }
    for dir in [1i64, -1] {
        let mut img = a.clone();
        for _ in 0..reach {
            if sys.is_symbolic() && sys.iterate_budget(&img) < 2 {
                break;
            }
            img = match if dir > 0 {
                sys.forward(&img)
            } else {
                sys.backward(&img)
            } {
                Ok(p) => p,
                Err(_) => break,
            };
            if sys.same_within_resolution(&img, b) {
                return true;
            }
        }
    }
    false
}

/// Greedy anchored cover of `members` by orbit segments of iterate radius
/// `reach`: repeatedly pick the member covering the most uncovered points.
fn segment_cover(sys: &BaseSystem, members: &[Point], reach: i64) -> Vec<Vec<usize>> {
    let n = members.len();
    let mut covered = vec![false; n];
    let mut classes = Vec::new();
    while covered.iter().any(|c| !c) {
        let mut best_anchor = usize::MAX;
        let mut best_gain: Vec<usize> = Vec::new();
        for anchor in 0..n {
            let gain: Vec<usize> = (0..n)
                .filter(|&i| {
                    !covered[i] && observed_same_segment(sys, &members[anchor], &members[i], reach)
                })
                .collect();
            if gain.len() > best_gain.len() {
                best_anchor = anchor;
                best_gain = gain;
            }
        }
        debug_assert!(best_anchor != usize::MAX);
        for &i in &best_gain {
            covered[i] = true;
        }
        classes.push(best_gain);
    }
    classes.sort();
    classes
}

/// All net points whose iterates stay within `delta` of the center's orbit
/// for every |n| <= horizon (closed threshold).
pub fn map_companion_set(
    sys: &BaseSystem,
    center: &Point,
    delta: f64,
    horizon: i64,
) -> Result<CompanionSet> {
    map_companion_set_with(sys, BaseMetric::Standard, center, delta, horizon)
}

pub fn map_companion_set_with(
    sys: &BaseSystem,
    metric: BaseMetric,
    center: &Point,
    delta: f64,
    horizon: i64,
) -> Result<CompanionSet> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    check_horizon(sys, horizon)?;
    let mut members = Vec::new();
    for y in sys.net() {
        if dynamical_dist(sys, metric, center, &y, horizon)? <= delta {
            members.push(y);
        }
    }
    if !members.iter().any(|m| sys.same_within_resolution(m, center)) {
        members.push(center.clone());
        members.sort();
    }
    let orbit_classes = segment_cover(sys, &members, 2 * horizon);
    Ok(CompanionSet {
        center: center.clone(),
        delta,
        horizon,
        members,
        orbit_classes,
    })
}

/// One row of an index curve, with the witness set realizing the count.
#[derive(Clone, Debug)]
pub struct MapIndexEntry {
    pub delta: f64,
    pub index: usize,
    pub witness_center: String,
    pub witness_orbits: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct MapIndexCurve {
    pub system: String,
    pub resolution: usize,
    pub horizon: i64,
    pub entries: Vec<MapIndexEntry>,
}

/// Default geometric delta grid 2^-j / 2 for j = 1..k+2, ascending.
pub fn default_delta_grid(k: usize) -> Vec<f64> {
    (1..=(k + 2) as i32)
        .rev()
        .map(|j| 0.5 * 0.5f64.powi(j))
        .collect()
}

/// The expansivity index curve: for each delta, the largest orbit-segment
/// count over all sets of net points whose dynamical diameter is <= delta.
pub fn map_index_curve(
    sys: &BaseSystem,
    delta_grid: &[f64],
    horizon: i64,
) -> Result<MapIndexCurve> {
    map_index_curve_with(sys, BaseMetric::Standard, delta_grid, horizon)
}

pub fn map_index_curve_with(
    sys: &BaseSystem,
    metric: BaseMetric,
    delta_grid: &[f64],
    horizon: i64,
) -> Result<MapIndexCurve> {
    validate_grid(delta_grid)?;
    check_horizon(sys, horizon)?;
    let net = sys.net();
    let n = net.len();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dynamical_dist(sys, metric, &net[i], &net[j], horizon)?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut entries = Vec::new();
    for &delta in delta_grid {
        let mut adj = Adjacency::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if dist[i * n + j] <= delta {
                    adj.connect(i, j);
                }
            }
        }
        let (witness, index) = best_clique(&adj, |clique| clique.len());
        let witness_orbits: Vec<String> = witness.iter().map(|&i| sys.label(&net[i])).collect();
        let witness_center = witness_orbits.first().cloned().unwrap_or_default();
        entries.push(MapIndexEntry {
            delta,
            index,
            witness_center,
            witness_orbits,
        });
    }
    Ok(MapIndexCurve {
        system: sys.name().to_string(),
        resolution: sys.resolution(),
        horizon,
        entries,
    })
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("delta grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "delta grid must be strictly increasing".into(),
        ));
    }
    if grid[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "delta grid values must be positive".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FixedPointInfo {
    pub label: String,
    pub nearest_other: Option<f64>,
    pub nearest_fixed: Option<f64>,
    pub isolated: bool,
}

#[derive(Clone, Debug)]
pub struct IsolationReport {
    pub system: String,
    pub threshold: f64,
    pub fixed_points: Vec<FixedPointInfo>,
    pub violations: usize,
}

/// Lists fixed points of the net with their isolation distances, flagging
/// any whose nearest other fixed point sits within the threshold. A point
/// counts as fixed only when forward and backward images both agree with
/// it on the common window, which rules out windows that merely slide
/// into themselves from one side.
pub fn fixed_point_isolation_check(sys: &BaseSystem, threshold: f64) -> Result<IsolationReport> {
    if threshold <= 0.0 {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    let net = sys.net();
    let mut fixed_idx = Vec::new();
    for (i, p) in net.iter().enumerate() {
        let fwd_fixed = match sys.forward(p) {
            Ok(f) => sys.same_within_resolution(&f, p),
            Err(_) => false,
        };
        let bwd_fixed = match sys.backward(p) {
            Ok(b) => sys.same_within_resolution(&b, p),
            Err(_) => false,
        };
        if fwd_fixed && bwd_fixed {
            fixed_idx.push(i);
        }
    }
    let mut fixed_points = Vec::new();
    let mut violations = 0;
    for &i in &fixed_idx {
        let nearest_other = net
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| sys.dist(&net[i], q))
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
        let nearest_fixed = fixed_idx
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| sys.dist(&net[i], &net[j]))
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
        let isolated = nearest_fixed.map_or(true, |d| d > threshold);
        if !isolated {
            violations += 1;
        }
        fixed_points.push(FixedPointInfo {
            label: sys.label(&net[i]),
            nearest_other,
            nearest_fixed,
            isolated,
        });
    }
    Ok(IsolationReport {
        system: sys.name().to_string(),
        threshold,
        fixed_points,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{convergent_fixed_points, full_shift, odometer, Point};

    fn pt(s: &str) -> Point {
        Point::from_symbols(s.bytes().map(|b| (b - b'0') as u16).collect())
    }

    #[test]
    fn orbit_trace_basics() {
        let sys = full_shift(2, 3).unwrap();
        let x = pt("0001000");
        let t = map_orbit_trace(&sys, &x, 0).unwrap();
        assert_eq!(t.samples.len(), 1);
        assert_eq!(t.samples[0], (0, x.clone()));
        let t = map_orbit_trace(&sys, &x, 1).unwrap();
        // forward moves the 1 to index -1, backward to index +1
        assert_eq!(t.samples[2].1, pt("01000"));
        assert_eq!(t.samples[0].1, pt("00010"));
        assert!(map_orbit_trace(&sys, &x, 4).is_err());

        let id = convergent_fixed_points(3).unwrap();
        let p = id.net()[1].clone();
        let t = map_orbit_trace(&id, &p, 5).unwrap();
        assert!(t.samples.iter().all(|(_, q)| *q == p));
    }

    #[test]
    fn companion_sets_on_convergent_fixed_points() {
        let sys = convergent_fixed_points(5).unwrap();
        let zero = sys.net()[0].clone();
        let c = map_companion_set(&sys, &zero, 0.3, 2).unwrap();
        let labels: Vec<String> = c.members.iter().map(|m| sys.label(m)).collect();
        assert_eq!(labels, vec!["0", "1/32", "1/16", "1/8", "1/4"]);
        assert_eq!(c.class_count(), 5);
        let c = map_companion_set(&sys, &zero, 0.04, 2).unwrap();
        let labels: Vec<String> = c.members.iter().map(|m| sys.label(m)).collect();
        assert_eq!(labels, vec!["0", "1/32"]);
        assert_eq!(c.class_count(), 2);
    }

    #[test]
    fn companion_singleton_below_separation() {
        let sys = full_shift(2, 3).unwrap();
        let x = pt("0101010");
        let c = map_companion_set(&sys, &x, 0.001, 3).unwrap();
        assert_eq!(c.members.len(), 1);
        assert_eq!(c.class_count(), 1);
    }

    #[test]
    fn companion_monotonicity() {
        let sys = convergent_fixed_points(5).unwrap();
        let center = sys.net()[2].clone();
        let small = map_companion_set(&sys, &center, 0.04, 2).unwrap();
        let large = map_companion_set(&sys, &center, 0.3, 2).unwrap();
        for m in &small.members {
            assert!(large.members.contains(m));
        }
        let sys = full_shift(2, 3).unwrap();
        let center = pt("0000000");
        let h1 = map_companion_set(&sys, &center, 0.1, 1).unwrap();
        let h3 = map_companion_set(&sys, &center, 0.1, 3).unwrap();
        for m in &h3.members {
            assert!(h1.members.contains(m));
        }
    }

    #[test]
    fn index_curve_full_shift_separates() {
        let sys = full_shift(2, 3).unwrap();
        let curve = map_index_curve(&sys, &[0.2], 3).unwrap();
        assert_eq!(curve.entries[0].index, 1);
    }

    #[test]
    fn index_curve_convergent_fixed_points() {
        let sys = convergent_fixed_points(5).unwrap();
        let curve = map_index_curve(&sys, &[0.04, 0.3], 2).unwrap();
        assert_eq!(curve.entries[0].index, 2);
        assert_eq!(curve.entries[1].index, 5);
    }

    #[test]
    fn index_at_huge_delta_counts_all_orbit_classes() {
        let sys = full_shift(2, 2).unwrap();
        let curve = map_index_curve(&sys, &[0.9], 0).unwrap();
        // horizon 0: no segment evidence, every net point its own class
        assert_eq!(curve.entries[0].index, 32);
    }

    #[test]
    fn index_monotone_in_delta_and_horizon() {
        let sys = odometer(4).unwrap();
        let grid = default_delta_grid(4);
        let c2 = map_index_curve(&sys, &grid, 2).unwrap();
        let c3 = map_index_curve(&sys, &grid, 3).unwrap();
        for w in c2.entries.windows(2) {
            assert!(w[0].index <= w[1].index);
        }
        for (a, b) in c2.entries.iter().zip(&c3.entries) {
            assert!(b.index <= a.index);
        }
    }

    #[test]
    fn odometer_index_grows_with_resolution() {
        // Equicontinuous system: at fixed delta the index grows with K.
        let delta = [0.125];
        let i3 = map_index_curve(&odometer(3).unwrap(), &delta, 3)
            .unwrap()
            .entries[0]
            .index;
        let i4 = map_index_curve(&odometer(4).unwrap(), &delta, 3)
            .unwrap()
            .entries[0]
            .index;
        assert!(i4 > i3, "expected growth, got {i3} then {i4}");
    }

    #[test]
    fn fixed_points_full_shift() {
        let sys = full_shift(2, 3).unwrap();
        let report = fixed_point_isolation_check(&sys, 0.1).unwrap();
        let labels: Vec<&str> = report
            .fixed_points
            .iter()
            .map(|f| f.label.as_str())
            .collect();
        assert_eq!(labels, vec!["0000000", "1111111"]);
        let info = &report.fixed_points[0];
        assert_eq!(info.nearest_other, Some(0.5 * 0.125));
        assert_eq!(info.nearest_fixed, Some(0.5));
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn fixed_points_convergent_flagged() {
        let sys = convergent_fixed_points(5).unwrap();
        let report = fixed_point_isolation_check(&sys, 0.1).unwrap();
        assert_eq!(report.fixed_points.len(), 6);
        assert!(report.violations > 0);
    }

    #[test]
    fn fixed_points_odometer_none() {
        let sys = odometer(4).unwrap();
        let report = fixed_point_isolation_check(&sys, 0.1).unwrap();
        assert!(report.fixed_points.is_empty());
    }

    #[test]
    fn pullback_curve_needs_headroom() {
        let sys = full_shift(2, 3).unwrap();
        // The inner forward application runs out of window at horizon K.
        assert!(map_index_curve_with(&sys, BaseMetric::Pullback, &[0.1], 3).is_err());
        // pullback distances never exceed the standard ones, so the index
        // curve under the pullback metric dominates pointwise
        let std = map_index_curve(&sys, &[0.1, 0.2], 2).unwrap();
        let pb = map_index_curve_with(&sys, BaseMetric::Pullback, &[0.1, 0.2], 2).unwrap();
        for (s, p) in std.entries.iter().zip(&pb.entries) {
            assert!(p.index >= s.index);
        }
        // identity map: the pullback metric coincides with the metric
        let id = convergent_fixed_points(5).unwrap();
        let std = map_index_curve(&id, &[0.04, 0.3], 2).unwrap();
        let pb = map_index_curve_with(&id, BaseMetric::Pullback, &[0.04, 0.3], 2).unwrap();
        for (s, p) in std.entries.iter().zip(&pb.entries) {
            assert_eq!(p.index, s.index);
        }
    }
}

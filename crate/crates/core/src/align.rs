//! Reparametrized closeness of flow orbits.
//!
//! Two orbit traces are close when some monotone time correspondence
//! fixing the origin keeps the paired samples close. On a uniform grid the
//! admissible correspondences are monotone staircases anchored at (0,0)
//! covering both index ranges, so the optimal value is an anchored
//! discrete-Frechet distance: forward and backward halves decouple (the
//! reparametrization fixes 0 and is monotone) and are combined by max.

use crate::error::{Error, Result};
use crate::suspension::{SuspensionFlow, SuspensionPoint};

/// Samples of a flow orbit on the uniform grid kh for |k| <= T/h.
/// Index 0 of both halves is the anchor.
#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub anchor: SuspensionPoint,
    pub step: f64,
    pub horizon: f64,
    pub forward: Vec<SuspensionPoint>,
    pub backward: Vec<SuspensionPoint>,
}

impl FlowTrace {
    pub fn grid_matches(&self, other: &FlowTrace) -> bool {
        self.step == other.step && self.forward.len() == other.forward.len()
    }
}

/// Samples X^{kh}(p) for k = -T/h .. T/h.
pub fn flow_trace(flow: &SuspensionFlow, p: &SuspensionPoint, horizon: f64, step: f64) -> Result<FlowTrace> {
    if step <= 0.0 || horizon < 0.0 {
        return Err(Error::InvalidParameter(
            "trace needs step > 0 and horizon >= 0".into(),
        ));
    }
    let ratio = horizon / step;
    if ratio.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} is not a multiple of step {step}"
        )));
    }
    let n = ratio as usize;
    let mut forward = Vec::with_capacity(n + 1);
    let mut backward = Vec::with_capacity(n + 1);
    for k in 0..=n {
        forward.push(flow.flow_at(p, k as f64 * step)?);
        backward.push(flow.flow_at(p, -(k as f64) * step)?);
    }
    Ok(FlowTrace {
        anchor: p.clone(),
        step,
        horizon,
        forward,
        backward,
    })
}

/// Resamples the trace at step h/factor. Factor 1 returns the same
/// sampling.
pub fn refine_grid(flow: &SuspensionFlow, trace: &FlowTrace, factor: u32) -> Result<FlowTrace> {
    if factor < 1 {
        return Err(Error::InvalidParameter("factor must be >= 1".into()));
    }
    flow_trace(flow, &trace.anchor, trace.horizon, trace.step / factor as f64)
}

/// min over anchored monotone staircases of the max sample distance, for
/// one half of the traces. Standard discrete-Frechet recursion.
fn frechet_half<M: Fn(&SuspensionPoint, &SuspensionPoint) -> f64>(
    xs: &[SuspensionPoint],
    ys: &[SuspensionPoint],
    metric: &M,
) -> Vec<Vec<f64>> {
    let n = xs.len();
    let m = ys.len();
    let mut dp = vec![vec![f64::INFINITY; m]; n];
    for i in 0..n {
        for j in 0..m {
            let d = metric(&xs[i], &ys[j]);
            let reach = match (i, j) {
                (0, 0) => d,
                (0, _) => dp[0][j - 1].max(d),
                (_, 0) => dp[i - 1][0].max(d),
                _ => dp[i - 1][j]
                    .min(dp[i][j - 1])
                    .min(dp[i - 1][j - 1])
                    .max(d),
            };
            dp[i][j] = reach;
        }
    }
    dp
}

fn staircase_of(dp: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut i = dp.len() - 1;
    let mut j = dp[0].len() - 1;
    let mut path = vec![(i, j)];
    while i > 0 || j > 0 {
        let mut best = f64::INFINITY;
        let mut next = (i, j);
        // prefer the diagonal on ties so the path is canonical
        if i > 0 && j > 0 && dp[i - 1][j - 1] <= best {
            best = dp[i - 1][j - 1];
            next = (i - 1, j - 1);
        }
        if i > 0 && dp[i - 1][j] < best {
            best = dp[i - 1][j];
            next = (i - 1, j);
        }
        if j > 0 && dp[i][j - 1] < best {
            next = (i, j - 1);
        }
        path.push(next);
        (i, j) = next;
    }
    path.reverse();
    path
}

/// The anchored alignment value between two traces on matching grids.
pub fn aligned_distance<M: Fn(&SuspensionPoint, &SuspensionPoint) -> f64>(
    a: &FlowTrace,
    b: &FlowTrace,
    metric: M,
) -> Result<f64> {
    if !a.grid_matches(b) {
        return Err(Error::InvalidPair(
            "aligned_distance needs traces on the same grid".into(),
        ));
    }
    let fwd = frechet_half(&a.forward, &b.forward, &metric);
    let bwd = frechet_half(&a.backward, &b.backward, &metric);
    Ok(fwd[a.forward.len() - 1][b.forward.len() - 1]
        .max(bwd[a.backward.len() - 1][b.backward.len() - 1]))
}

/// Full DP tables and optimal staircases, for inspection.
#[derive(Clone, Debug)]
pub struct AlignmentDetail {
    pub value: f64,
    pub forward_table: Vec<Vec<f64>>,
    pub backward_table: Vec<Vec<f64>>,
    pub forward_path: Vec<(usize, usize)>,
    pub backward_path: Vec<(usize, usize)>,
}

pub fn aligned_distance_detail<M: Fn(&SuspensionPoint, &SuspensionPoint) -> f64>(
    a: &FlowTrace,
    b: &FlowTrace,
    metric: M,
) -> Result<AlignmentDetail> {
    if !a.grid_matches(b) {
        return Err(Error::InvalidPair(
            "aligned_distance needs traces on the same grid".into(),
        ));
    }
    let fwd = frechet_half(&a.forward, &b.forward, &metric);
    let bwd = frechet_half(&a.backward, &b.backward, &metric);
    let value = fwd[a.forward.len() - 1][b.forward.len() - 1]
        .max(bwd[a.backward.len() - 1][b.backward.len() - 1]);
    let forward_path = staircase_of(&fwd);
    let backward_path = staircase_of(&bwd);
    Ok(AlignmentDetail {
        value,
        forward_table: fwd,
        backward_table: bwd,
        forward_path,
        backward_path,
    })
}

/// Are p and q companions at threshold delta? True when some anchored
/// reparametrization keeps the orbits within delta over [-T, T].
pub fn companion_pair_test(
    flow: &SuspensionFlow,
    p: &SuspensionPoint,
    q: &SuspensionPoint,
    delta: f64,
    horizon: f64,
    step: f64,
) -> Result<bool> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let ta = flow_trace(flow, p, horizon, step)?;
    let tb = flow_trace(flow, q, horizon, step)?;
    let d = aligned_distance(&ta, &tb, |x, y| flow.point_distance(x, y))?;
    Ok(d <= delta)
}

/// Set-level companion decision through the anchor: every member must
/// align to the anchor within delta/2, which forces the whole set's
/// diameter under reparametrization below delta by the triangle estimate
/// through the anchor's clock.
#[derive(Clone, Debug)]
pub struct SetTest {
    pub pass: bool,
    pub member_distances: Vec<f64>,
}

pub fn companion_set_test(
    flow: &SuspensionFlow,
    anchor: &SuspensionPoint,
    members: &[SuspensionPoint],
    delta: f64,
    horizon: f64,
    step: f64,
) -> Result<SetTest> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if !members.iter().any(|m| m == anchor) {
        return Err(Error::InvalidParameter(
            "anchor must belong to the member set".into(),
        ));
    }
    let ta = flow_trace(flow, anchor, horizon, step)?;
    let mut member_distances = Vec::with_capacity(members.len());
    let mut pass = true;
    for m in members {
        let tm = flow_trace(flow, m, horizon, step)?;
        let d = aligned_distance(&ta, &tm, |x, y| flow.point_distance(x, y))?;
        if d > delta / 2.0 {
            pass = false;
        }
        member_distances.push(d);
    }
    Ok(SetTest {
        pass,
        member_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::suspend;
    use crate::systems::{convergent_fixed_points, full_shift, Point};

    fn pt(s: &str) -> Point {
        Point::from_symbols(s.bytes().map(|b| (b - b'0') as u16).collect())
    }

    #[test]
    fn trace_shapes_and_consistency() {
        let flow = suspend(full_shift(2, 3).unwrap(), 1.0).unwrap();
        let p = flow.point(pt("0001000"), 0.0).unwrap();
        let t0 = flow_trace(&flow, &p, 0.0, 0.5).unwrap();
        assert_eq!(t0.forward.len(), 1);
        assert_eq!(t0.forward[0], p);
        let t = flow_trace(&flow, &p, 1.0, 0.5).unwrap();
        // samples at 0, 0.5, 1 are (y,0), (y,0.5), (phi y, 0)
        assert_eq!(t.forward[1].fiber, 0.5);
        assert_eq!(t.forward[2].base, pt("01000"));
        // grid consistency: X^h carries each sample to the next
        for k in 0..t.forward.len() - 1 {
            let moved = flow.flow_at(&t.forward[k], 0.5).unwrap();
            assert_eq!(moved, t.forward[k + 1]);
        }
        assert!(flow_trace(&flow, &p, 1.0, 0.3).is_err());
        // four wraps exceed the window budget
        assert!(flow_trace(&flow, &p, 4.0, 0.5).is_err());
    }

    #[test]
    fn refine_preserves_anchor() {
        let flow = suspend(convergent_fixed_points(3).unwrap(), 1.0).unwrap();
        let p = flow.point(flow.base.net()[1].clone(), 0.25).unwrap();
        let t = flow_trace(&flow, &p, 1.0, 0.25).unwrap();
        let same = refine_grid(&flow, &t, 1).unwrap();
        assert_eq!(same.forward.len(), t.forward.len());
        assert_eq!(same.anchor, p);
        let fine = refine_grid(&flow, &t, 2).unwrap();
        assert_eq!(fine.anchor, p);
        assert_eq!(fine.forward.len(), 2 * (t.forward.len() - 1) + 1);
        assert_eq!(fine.forward[0], p);
    }

    #[test]
    fn identical_traces_align_at_zero() {
        let flow = suspend(full_shift(2, 3).unwrap(), 1.0).unwrap();
        let p = flow.point(pt("0110110"), 0.25).unwrap();
        let t = flow_trace(&flow, &p, 2.0, 0.25).unwrap();
        let d = aligned_distance(&t, &t, |x, y| flow.point_distance(x, y)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn constant_distance_traces_align_at_that_distance() {
        // two fixed points suspend to parallel circles
        let flow = suspend(convergent_fixed_points(5).unwrap(), 1.0).unwrap();
        let net = flow.base.net();
        let p = flow.point(net[0].clone(), 0.0).unwrap();
        let q = flow.point(net[4].clone(), 0.0).unwrap(); // 1/4
        let tp = flow_trace(&flow, &p, 2.0, 0.25).unwrap();
        let tq = flow_trace(&flow, &q, 2.0, 0.25).unwrap();
        let d = aligned_distance(&tp, &tq, |x, y| flow.point_distance(x, y)).unwrap();
        assert_eq!(d, 0.25);
    }

    #[test]
    fn dp_matches_tiny_enumeration() {
        // exhaustive staircases on a 3x3 half with a synthetic metric
        let flow = suspend(convergent_fixed_points(3).unwrap(), 1.0).unwrap();
        let net = flow.base.net();
        let a = flow.point(net[0].clone(), 0.0).unwrap();
        let b = flow.point(net[2].clone(), 0.0).unwrap();
        let ta = flow_trace(&flow, &a, 0.5, 0.25).unwrap();
        let tb = flow_trace(&flow, &b, 0.5, 0.25).unwrap();
        let metric = |x: &SuspensionPoint, y: &SuspensionPoint| flow.point_distance(x, y);
        let dp_value = aligned_distance(&ta, &tb, metric).unwrap();

        fn enumerate(
            i: usize,
            j: usize,
            n: usize,
            cur: f64,
            grid: &dyn Fn(usize, usize) -> f64,
            best: &mut f64,
        ) {
            let cur = cur.max(grid(i, j));
            if i == n && j == n {
                *best = best.min(cur);
                return;
            }
            if i < n {
                enumerate(i + 1, j, n, cur, grid, best);
            }
            if j < n {
                enumerate(i, j + 1, n, cur, grid, best);
            }
            if i < n && j < n {
                enumerate(i + 1, j + 1, n, cur, grid, best);
            }
        }
        let n = ta.forward.len() - 1;
        let fwd_grid = |i: usize, j: usize| metric(&ta.forward[i], &tb.forward[j]);
        let bwd_grid = |i: usize, j: usize| metric(&ta.backward[i], &tb.backward[j]);
        let mut best_f = f64::INFINITY;
        enumerate(0, 0, n, 0.0, &fwd_grid, &mut best_f);
        let mut best_b = f64::INFINITY;
        enumerate(0, 0, n, 0.0, &bwd_grid, &mut best_b);
        assert_eq!(dp_value, best_f.max(best_b));
    }

    #[test]
    fn identity_alignment_bounds_from_above() {
        let flow = suspend(full_shift(2, 3).unwrap(), 1.0).unwrap();
        let pairs = [
            ("0001000", "0011000"),
            ("0101010", "0101011"),
            ("1110000", "0000111"),
        ];
        for (a, b) in pairs {
            let p = flow.point(pt(a), 0.25).unwrap();
            let q = flow.point(pt(b), 0.25).unwrap();
            let tp = flow_trace(&flow, &p, 2.0, 0.25).unwrap();
            let tq = flow_trace(&flow, &q, 2.0, 0.25).unwrap();
            let aligned = aligned_distance(&tp, &tq, |x, y| flow.point_distance(x, y)).unwrap();
            let diag = tp
                .forward
                .iter()
                .zip(&tq.forward)
                .chain(tp.backward.iter().zip(&tq.backward))
                .map(|(x, y)| flow.point_distance(x, y))
                .fold(0.0, f64::max);
            assert!(aligned <= diag + 1e-12);
        }
    }

    #[test]
    fn truncation_monotonicity() {
        let flow = suspend(full_shift(2, 3).unwrap(), 1.0).unwrap();
        let p = flow.point(pt("0010100"), 0.0).unwrap();
        let q = flow.point(pt("0010110"), 0.0).unwrap();
        let metric = |x: &SuspensionPoint, y: &SuspensionPoint| flow.point_distance(x, y);
        let mut prev = 0.0;
        for t in [0.0, 1.0, 2.0, 3.0] {
            let ta = flow_trace(&flow, &p, t, 0.25).unwrap();
            let tb = flow_trace(&flow, &q, t, 0.25).unwrap();
            let d = aligned_distance(&ta, &tb, metric).unwrap();
            assert!(d >= prev - 1e-12, "shrunk from {prev} to {d} at T={t}");
            prev = d;
        }
    }

    #[test]
    fn companion_pair_examples() {
        let flow = suspend(full_shift(2, 3).unwrap(), 1.0).unwrap();
        let p = flow.point(pt("0101100"), 0.25).unwrap();
        assert!(companion_pair_test(&flow, &p, &p, 0.01, 3.0, 0.25).unwrap());
        // distinct windows separate under base expansivity
        let a = flow.point(pt("0000000"), 0.0).unwrap();
        let b = flow.point(pt("0001000"), 0.0).unwrap();
        assert!(!companion_pair_test(&flow, &a, &b, 0.1, 3.0, 0.25).unwrap());
        // a threshold above the space diameter accepts everything
        assert!(companion_pair_test(&flow, &a, &b, 2.0, 3.0, 0.25).unwrap());
    }

    #[test]
    fn companion_set_threshold_arithmetic() {
        let flow = suspend(convergent_fixed_points(5).unwrap(), 1.0).unwrap();
        let net = flow.base.net();
        let anchor = flow.point(net[0].clone(), 0.0).unwrap();
        let quarter = flow.point(net[4].clone(), 0.0).unwrap();
        let singleton = companion_set_test(&flow, &anchor, &[anchor.clone()], 0.1, 1.0, 0.25).unwrap();
        assert!(singleton.pass);
        // member at aligned distance 0.25: fails delta 0.4, passes delta 0.5
        let set = vec![anchor.clone(), quarter.clone()];
        let fail = companion_set_test(&flow, &anchor, &set, 0.4, 1.0, 0.25).unwrap();
        assert!(!fail.pass);
        assert_eq!(fail.member_distances[1], 0.25);
        let pass = companion_set_test(&flow, &anchor, &set, 0.5, 1.0, 0.25).unwrap();
        assert!(pass.pass);
        // soundness: acceptance implies pairwise closeness within delta
        let ta = flow_trace(&flow, &set[0], 1.0, 0.25).unwrap();
        let tb = flow_trace(&flow, &set[1], 1.0, 0.25).unwrap();
        let pairwise = aligned_distance(&ta, &tb, |x, y| flow.point_distance(x, y)).unwrap();
        assert!(pairwise <= 0.5);
        assert!(companion_set_test(&flow, &quarter, &set, 0.4, 1.0, 0.25).is_err() == false);
        // anchor must belong to the set
        assert!(companion_set_test(&flow, &anchor, &[quarter], 0.4, 1.0, 0.25).is_err());
    }

    #[test]
    fn refinement_respects_flow_modulus() {
        let flow = suspend(full_shift(2, 3).unwrap(), 1.0).unwrap();
        let metric = |x: &SuspensionPoint, y: &SuspensionPoint| flow.point_distance(x, y);
        // empirical modulus of continuity over one coarse step
        let mut modulus: f64 = 0.0;
        for y in flow.base.net() {
            for l in 0..4 {
                let v = flow.point(y.clone(), l as f64 * 0.25).unwrap();
                if let Ok(moved) = flow.flow_at(&v, 0.25) {
                    modulus = modulus.max(flow.point_distance(&v, &moved));
                }
            }
        }
        let pairs = [("0000000", "0010000"), ("0110011", "0110010")];
        for (a, b) in pairs {
            let p = flow.point(pt(a), 0.0).unwrap();
            let q = flow.point(pt(b), 0.0).unwrap();
            let ca = flow_trace(&flow, &p, 2.0, 0.25).unwrap();
            let cb = flow_trace(&flow, &q, 2.0, 0.25).unwrap();
            let coarse = aligned_distance(&ca, &cb, metric).unwrap();
            let fa = refine_grid(&flow, &ca, 2).unwrap();
            let fb = refine_grid(&flow, &cb, 2).unwrap();
            let fine = aligned_distance(&fa, &fb, metric).unwrap();
            assert!((coarse - fine).abs() <= modulus + 1e-12);
        }
    }
}

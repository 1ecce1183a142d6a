//! Flow-level expansivity: companion enumeration under reparametrization,
//! index curves, and the harnesses checking suspension equivalence and
//! conjugacy invariance of the index.
//!
//! A set of flow points is delta-thin when every pair aligns within delta,
//! so thin sets are cliques of the aligned-distance graph over the
//! net-times-fiber-grid universe. The index of a thin set is the number of
//! orbit segments of radius epsilon_seg needed to cover it: the size of a
//! largest subset whose members are pairwise not reachable from one
//! another within epsilon_seg of flow time.

use rayon::prelude::*;

use crate::align::{aligned_distance, companion_pair_test, flow_trace, FlowTrace};
use crate::cliques::{best_clique, max_independent_set, Adjacency};
use crate::error::{Error, Result};
use crate::orbits::{map_index_curve, validate_grid};
use crate::suspension::{fiber_levels, SuspensionFlow, SuspensionPoint};
use crate::systems::{block_recoding, BaseSystem, BlockCode};

/// Trace and grid parameters for flow-level analysis.
#[derive(Clone, Copy, Debug)]
pub struct FlowParams {
    /// Trace horizon T (flow time).
    pub horizon: f64,
    /// Trace step h; must divide T and the fiber grid.
    pub step: f64,
    /// Fiber grid: levels at multiples of 1/grid.
    pub grid: u32,
    /// Orbit-segment radius in flow time. The default is 2h, the smallest
    /// radius distinguishable on the time grid.
    pub epsilon_seg: f64,
}

impl FlowParams {
    pub fn new(horizon: f64, step: f64, grid: u32) -> Self {
        FlowParams {
            horizon,
            step,
            grid,
            epsilon_seg: 2.0 * step,
        }
    }
}

/// The flow universe: every net point at every fiber level, with its
/// trace, plus the matrix of pairwise aligned distances.
pub struct FlowAnalysis<'a> {
    pub flow: &'a SuspensionFlow,
    pub params: FlowParams,
    pub points: Vec<SuspensionPoint>,
    traces: Vec<FlowTrace>,
    aligned: Vec<f64>,
}

impl<'a> FlowAnalysis<'a> {
    /// Builds traces for the whole universe and fills the aligned-distance
    /// matrix. Pairs whose anchor distance already exceeds `cutoff` are
    /// stored as infinity: the anchor pair sits on every staircase, so
    /// they cannot be companions at any threshold below the cutoff.
    pub fn new(flow: &'a SuspensionFlow, params: FlowParams, cutoff: f64) -> Result<Self> {
        let levels = fiber_levels(flow.roof, params.grid)?;
        if (params.epsilon_seg / params.step).fract() != 0.0 {
            return Err(Error::InvalidParameter(
                "epsilon_seg must be a multiple of the trace step".into(),
            ));
        }
        let step = 1.0 / params.grid as f64;
        let mut points = Vec::new();
        for y in flow.base.net() {
            for l in 0..levels {
                points.push(SuspensionPoint::new(y.clone(), l as f64 * step));
            }
        }
        let traces: Result<Vec<FlowTrace>> = points
            .iter()
            .map(|p| flow_trace(flow, p, params.horizon, params.step))
            .collect();
        let traces = traces?;
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0f64; n];
                for j in 0..n {
                    if j <= i {
                        continue;
                    }
                    let anchor = flow.point_distance(&points[i], &points[j]);
                    row[j] = if anchor > cutoff {
                        f64::INFINITY
                    } else {
                        aligned_distance(&traces[i], &traces[j], |x, y| {
                            flow.point_distance(x, y)
                        })
                        .expect("universe traces share one grid")
                    };
                }
                row
            })
            .collect();
        let mut aligned = vec![0.0f64; n * n];
        for (i, row) in rows.iter().enumerate() {
            for j in (i + 1)..n {
                aligned[i * n + j] = row[j];
                aligned[j * n + i] = row[j];
            }
        }
        Ok(FlowAnalysis {
            flow,
            params,
            points,
            traces,
            aligned,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn aligned_at(&self, i: usize, j: usize) -> f64 {
        self.aligned[i * self.len() + j]
    }

    pub fn trace(&self, i: usize) -> &FlowTrace {
        &self.traces[i]
    }

    pub fn label(&self, i: usize) -> String {
        let p = &self.points[i];
        format!("{}@{}", self.flow.base.label(&p.base), p.fiber)
    }

    pub fn position_of(&self, p: &SuspensionPoint) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    /// Are universe members i and j on one orbit segment of time radius
    /// epsilon_seg, as far as the window shows?
    pub fn same_segment(&self, i: usize, j: usize) -> bool {
        let steps = (self.params.epsilon_seg * self.params.grid as f64) as i64;
        let fine = 1.0 / self.params.grid as f64;
        let (a, b) = (&self.points[i], &self.points[j]);
        for k in -steps..=steps {
            if let Ok(moved) = self.flow.flow_at(a, k as f64 * fine) {
                if moved.fiber == b.fiber
                    && self.flow.base.same_within_resolution(&moved.base, &b.base)
                {
                    return true;
                }
            }
        }
        false
    }

    /// Orbit-segment count of a vertex set: one representative per
    /// segment, pairwise segment-free.
    pub fn segment_count(&self, members: &[usize]) -> usize {
        max_independent_set(members.len(), |a, b| self.same_segment(members[a], members[b])).len()
    }

    /// Index at a threshold: the largest segment count over all cliques of
    /// the aligned graph, optionally restricted to a vertex subset.
    pub fn index_at(&self, delta: f64, keep: Option<&[bool]>) -> (usize, Vec<usize>) {
        let n = self.len();
        let ids: Vec<usize> = (0..n)
            .filter(|&i| keep.map_or(true, |k| k[i]))
            .collect();
        let mut adj = Adjacency::new(ids.len());
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate().skip(a + 1) {
                if self.aligned_at(i, j) <= delta {
                    adj.connect(a, b);
                }
            }
        }
        let (clique, count) = best_clique(&adj, |c| {
            let members: Vec<usize> = c.iter().map(|&v| ids[v]).collect();
            self.segment_count(&members)
        });
        let members: Vec<usize> = clique.iter().map(|&v| ids[v]).collect();
        let spread = max_independent_set(members.len(), |a, b| {
            self.same_segment(members[a], members[b])
        });
        let witness: Vec<usize> = spread.iter().map(|&k| members[k]).collect();
        (count, witness)
    }
}

/// A flow companion set: the aligned delta-ball around a center, with the
/// orbit-segment partition of its members.
#[derive(Clone, Debug)]
pub struct FlowCompanionSet {
    pub center: SuspensionPoint,
    pub delta: f64,
    pub members: Vec<SuspensionPoint>,
    pub classes: Vec<Vec<usize>>,
}

impl FlowCompanionSet {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// All universe points aligning to the center within delta, grouped into
/// orbit segments greedily.
pub fn flow_companion_set(
    analysis: &FlowAnalysis,
    center: &SuspensionPoint,
    delta: f64,
) -> Result<FlowCompanionSet> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let ci = analysis
        .position_of(center)
        .ok_or_else(|| Error::DomainError("center not on the universe grid".into()))?;
    let member_ids: Vec<usize> = (0..analysis.len())
        .filter(|&j| j == ci || analysis.aligned_at(ci, j) <= delta)
        .collect();
    // Greedy anchored cover by orbit segments.
    let mut covered = vec![false; member_ids.len()];
    let mut classes = Vec::new();
    while covered.iter().any(|c| !c) {
        let mut best: Vec<usize> = Vec::new();
        for anchor in 0..member_ids.len() {
            let gain: Vec<usize> = (0..member_ids.len())
                .filter(|&k| {
                    !covered[k] && analysis.same_segment(member_ids[anchor], member_ids[k])
                })
                .collect();
            if gain.len() > best.len() {
                best = gain;
            }
        }
        for &k in &best {
            covered[k] = true;
        }
        classes.push(best);
    }
    classes.sort();
    Ok(FlowCompanionSet {
        center: center.clone(),
        delta,
        members: member_ids
            .iter()
            .map(|&i| analysis.points[i].clone())
            .collect(),
        classes,
    })
}

#[derive(Clone, Debug)]
pub struct FlowIndexEntry {
    pub delta: f64,
    pub index: usize,
    pub witness: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct FlowIndexCurve {
    pub flow: String,
    pub resolution: usize,
    pub horizon: f64,
    pub step: f64,
    pub grid: u32,
    pub entries: Vec<FlowIndexEntry>,
}

/// The flow expansivity index curve over a delta grid.
pub fn flow_index_curve(
    flow: &SuspensionFlow,
    delta_grid: &[f64],
    params: FlowParams,
) -> Result<FlowIndexCurve> {
    validate_grid(delta_grid)?;
    let cutoff = delta_grid.last().copied().unwrap();
    let analysis = FlowAnalysis::new(flow, params, cutoff)?;
    Ok(flow_index_curve_from(&analysis, delta_grid))
}

pub fn flow_index_curve_from(analysis: &FlowAnalysis, delta_grid: &[f64]) -> FlowIndexCurve {
    let entries = delta_grid
        .iter()
        .map(|&delta| {
            let (index, witness) = analysis.index_at(delta, None);
            FlowIndexEntry {
                delta,
                index,
                witness: witness.iter().map(|&i| analysis.label(i)).collect(),
            }
        })
        .collect();
    FlowIndexCurve {
        flow: analysis.flow.name(),
        resolution: analysis.flow.base.resolution(),
        horizon: analysis.params.horizon,
        step: analysis.params.step,
        grid: analysis.params.grid,
        entries,
    }
}

#[derive(Clone, Debug)]
pub struct SuspendCheckRow {
    pub delta: f64,
    pub delta_prime: f64,
    pub base_index: usize,
    pub flow_fiber0_index: usize,
    pub flow_index_at_prime: usize,
}

#[derive(Clone, Debug)]
pub struct SuspendReport {
    pub system: String,
    pub roof: f64,
    pub rows: Vec<SuspendCheckRow>,
    pub violations: Vec<String>,
}

/// Checks both directions of the suspension equivalence at matched
/// constants over a delta grid:
///
/// 1. restricted to fiber-0 centers, the flow index never exceeds the base
///    index at the same delta;
/// 2. the flow index at delta' = min(2 delta, epsilon, 1/4) dominates the
///    base index at delta (base witnesses lift to the fiber-0 copy).
pub fn suspension_theorem_check(
    sys: &BaseSystem,
    delta_grid: &[f64],
    roof: f64,
    params: FlowParams,
    epsilon: f64,
) -> Result<SuspendReport> {
    validate_grid(delta_grid)?;
    let horizon_ratio = params.horizon / roof;
    if horizon_ratio.fract() != 0.0 {
        return Err(Error::InvalidParameter(
            "trace horizon must be a whole number of returns".into(),
        ));
    }
    let map_horizon = horizon_ratio as i64;
    let base_curve = map_index_curve(sys, delta_grid, map_horizon)?;
    let flow = crate::suspension::suspend(sys.clone(), roof)?;
    let mut cutoff: f64 = delta_grid.last().copied().unwrap();
    for &d in delta_grid {
        cutoff = cutoff.max((2.0 * d).min(epsilon).min(0.25));
    }
    let analysis = FlowAnalysis::new(&flow, params, cutoff)?;
    let fiber0: Vec<bool> = analysis.points.iter().map(|p| p.fiber == 0.0).collect();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (i, &delta) in delta_grid.iter().enumerate() {
        let delta_prime = (2.0 * delta).min(epsilon).min(0.25);
        let base_index = base_curve.entries[i].index;
        let (flow_fiber0_index, w0) = analysis.index_at(delta, Some(&fiber0));
        let (flow_index_at_prime, _) = analysis.index_at(delta_prime, None);
        if flow_fiber0_index > base_index {
            violations.push(format!(
                "delta={delta}: fiber-0 flow index {flow_fiber0_index} exceeds base index {base_index} (witness {:?})",
                w0.iter().map(|&i| analysis.label(i)).collect::<Vec<_>>()
            ));
        }
        if flow_index_at_prime < base_index {
            violations.push(format!(
                "delta={delta}: flow index {flow_index_at_prime} at delta'={delta_prime} below base index {base_index}"
            ));
        }
        rows.push(SuspendCheckRow {
            delta,
            delta_prime,
            base_index,
            flow_fiber0_index,
            flow_index_at_prime,
        });
    }
    Ok(SuspendReport {
        system: sys.name().to_string(),
        roof,
        rows,
        violations,
    })
}

/// The shipped conjugacies between suspension flows.
#[derive(Clone, Debug)]
pub enum ConjugacyKind {
    /// The identity on one flow.
    Identity,
    /// (y, s) -> (y, s/factor), conjugating a roof-`factor` suspension to
    /// the roof-1 suspension of the same base.
    RoofScale { factor: f64 },
    /// (y, s) -> (code(y), s), the sliding block recoding lifted to
    /// suspensions with equal roofs.
    Recode { code: BlockCode },
}

impl ConjugacyKind {
    pub fn apply(&self, p: &SuspensionPoint) -> Result<SuspensionPoint> {
        match self {
            ConjugacyKind::Identity => Ok(p.clone()),
            ConjugacyKind::RoofScale { factor } => {
                Ok(SuspensionPoint::new(p.base.clone(), p.fiber / factor))
            }
            ConjugacyKind::Recode { code } => {
                Ok(SuspensionPoint::new(code.encode(&p.base)?, p.fiber))
            }
        }
    }

    pub fn unapply(&self, p: &SuspensionPoint) -> Result<SuspensionPoint> {
        match self {
            ConjugacyKind::Identity => Ok(p.clone()),
            ConjugacyKind::RoofScale { factor } => {
                Ok(SuspensionPoint::new(p.base.clone(), p.fiber * factor))
            }
            ConjugacyKind::Recode { code } => {
                Ok(SuspensionPoint::new(code.decode(&p.base), p.fiber))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ConjugacyKind::Identity => "identity".into(),
            ConjugacyKind::RoofScale { factor } => format!("roof_scale_{factor}"),
            ConjugacyKind::Recode { code } => format!("block_recode_{}", code.block),
        }
    }
}

/// A conjugacy with empirically certified moduli of continuity: for each
/// input threshold, the largest image distance observed over all universe
/// pairs within that threshold.
pub struct ConjugacyWitness {
    pub kind: ConjugacyKind,
    pub modulus: Vec<(f64, f64)>,
    pub modulus_inv: Vec<(f64, f64)>,
}

impl ConjugacyWitness {
    pub fn modulus_out(&self, delta: f64) -> Result<f64> {
        lookup_modulus(&self.modulus, delta)
    }

    pub fn modulus_inv_out(&self, delta: f64) -> Result<f64> {
        lookup_modulus(&self.modulus_inv, delta)
    }
}

fn lookup_modulus(table: &[(f64, f64)], delta: f64) -> Result<f64> {
    table
        .iter()
        .find(|(d_in, _)| *d_in == delta)
        .map(|(_, d_out)| *d_out)
        .ok_or_else(|| {
            Error::CoverageError(format!("modulus table does not cover delta={delta}"))
        })
}

/// Certifies the moduli on the universes of both flows: delta_out(delta)
/// is the max image distance over all universe pairs within delta, and
/// conversely for the inverse map.
pub fn certify_witness(
    kind: ConjugacyKind,
    x: &FlowAnalysis,
    y: &FlowAnalysis,
    delta_grid_x: &[f64],
    delta_grid_y: &[f64],
) -> Result<ConjugacyWitness> {
    let fwd = certify_direction(&kind, false, x, y, delta_grid_x)?;
    let inv = certify_direction(&kind, true, y, x, delta_grid_y)?;
    Ok(ConjugacyWitness {
        kind,
        modulus: fwd,
        modulus_inv: inv,
    })
}

fn certify_direction(
    kind: &ConjugacyKind,
    inverse: bool,
    src: &FlowAnalysis,
    dst: &FlowAnalysis,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let map = |p: &SuspensionPoint| -> Result<SuspensionPoint> {
        if inverse {
            kind.unapply(p)
        } else {
            kind.apply(p)
        }
    };
    let n = src.len();
    let images: Result<Vec<SuspensionPoint>> = src.points.iter().map(&map).collect();
    let images = images?;
    let mut table: Vec<(f64, f64)> = grid.iter().map(|&d| (d, 0.0)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let d_in = src.flow.point_distance(&src.points[i], &src.points[j]);
            let d_out = dst.flow.point_distance(&images[i], &images[j]);
            for (threshold, out) in table.iter_mut() {
                if d_in <= *threshold && d_out > *out {
                    *out = d_out;
                }
            }
        }
    }
    // monotone by construction of the thresholds, but make it explicit
    for k in 1..table.len() {
        if table[k].1 < table[k - 1].1 {
            table[k].1 = table[k - 1].1;
        }
    }
    Ok(table)
}

#[derive(Clone, Debug)]
pub struct ConjugacyRow {
    pub delta: f64,
    pub index_x: usize,
    pub delta_out: f64,
    pub index_y_at_out: usize,
    pub index_y: usize,
    pub delta_out_inv: f64,
    pub index_x_at_out: usize,
}

#[derive(Clone, Debug)]
pub struct ConjugacyReport {
    pub witness: String,
    pub flow_x: String,
    pub flow_y: String,
    pub rows: Vec<ConjugacyRow>,
    pub violations: Vec<String>,
}

/// Checks the index-curve sandwich under a certified conjugacy: a thin set
/// of one flow maps to a set thin at the certified output threshold with
/// the same orbit-segment count, so for every grid delta
/// N_X(delta) <= N_Y(modulus(delta)) and N_Y(delta) <= N_X(modulus_inv(delta)).
pub fn conjugacy_transport_check(
    x: &FlowAnalysis,
    y: &FlowAnalysis,
    witness: &ConjugacyWitness,
    delta_grid_x: &[f64],
    delta_grid_y: &[f64],
) -> Result<ConjugacyReport> {
    validate_grid(delta_grid_x)?;
    validate_grid(delta_grid_y)?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (&dx, &dy) in delta_grid_x.iter().zip(delta_grid_y) {
        let (index_x, _) = x.index_at(dx, None);
        let (index_y, _) = y.index_at(dy, None);
        let delta_out = witness.modulus_out(dx)?;
        let (index_y_at_out, _) = y.index_at(delta_out, None);
        let delta_out_inv = witness.modulus_inv_out(dy)?;
        let (index_x_at_out, _) = x.index_at(delta_out_inv, None);
        if index_x > index_y_at_out {
            violations.push(format!(
                "delta={dx}: N_X={index_x} exceeds N_Y={index_y_at_out} at transported delta={delta_out}"
            ));
        }
        if index_y > index_x_at_out {
            violations.push(format!(
                "delta={dy}: N_Y={index_y} exceeds N_X={index_x_at_out} at transported delta={delta_out_inv}"
            ));
        }
        rows.push(ConjugacyRow {
            delta: dx,
            index_x,
            delta_out,
            index_y_at_out,
            index_y,
            delta_out_inv,
            index_x_at_out,
        });
    }
    Ok(ConjugacyReport {
        witness: witness.kind.name(),
        flow_x: x.flow.name(),
        flow_y: y.flow.name(),
        rows,
        violations,
    })
}

/// Builds the two shipped conjugate pairs for a symbolic base system:
/// the roof-c suspension against the roof-1 suspension, and the b-block
/// recoding lifted to suspensions.
pub fn recoded_flow(sys: &BaseSystem, block: usize, roof: f64) -> Result<(SuspensionFlow, BlockCode)> {
    let (image, code) = block_recoding(sys, block)?;
    Ok((crate::suspension::suspend(image, roof)?, code))
}

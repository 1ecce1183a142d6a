//! Compact metric spaces with a homeomorphism, presented at finite resolution.
//!
//! Three presentations are supported:
//!
//! * two-sided symbol windows under the shift (full shifts and subshifts of
//!   finite type),
//! * one-sided windows under the binary adding machine (odometer),
//! * explicit finite point lists with a distance table and a permutation.
//!
//! A symbolic point stands for its cylinder: two points with equal windows
//! are identified and have distance zero. Shift maps shrink the usable
//! window by one symbol per application; operations that would need symbols
//! outside the window fail with a resolution error instead of fabricating
//! them. All shipped metrics are bounded by 1/2, so every space has
//! diameter strictly below 1.

use crate::error::{Error, Result};

pub type Symbol = u16;

/// A point of a finite-resolution space. The payload is interpreted by the
/// owning system: a centered window of length 2K+1 for shifts, a prefix
/// window of length K for the odometer, a single index for explicit spaces.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Point(pub(crate) Vec<Symbol>);

impl Point {
    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn from_symbols(syms: Vec<Symbol>) -> Self {
        Point(syms)
    }

    /// Radius of a centered window (length 2r+1).
    pub(crate) fn window_radius(&self) -> usize {
        debug_assert!(self.0.len() % 2 == 1);
        (self.0.len() - 1) / 2
    }
}

#[derive(Clone, Debug)]
pub struct ShiftSystem {
    pub name: String,
    pub alphabet: Symbol,
    pub radius: usize,
    /// `allowed[a][b]` = transition a -> b permitted. `None` means full shift.
    pub allowed: Option<Vec<Vec<bool>>>,
    /// For recoded systems: symbol labels showing the underlying tuples.
    pub symbol_labels: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct OdometerSystem {
    pub name: String,
    pub window: usize,
}

#[derive(Clone, Debug)]
pub struct ExplicitSystem {
    pub name: String,
    pub labels: Vec<String>,
    pub dist: Vec<Vec<f64>>,
    pub fwd: Vec<usize>,
    pub bwd: Vec<usize>,
}

/// A homeomorphism of a compact metric space at finite resolution.
#[derive(Clone, Debug)]
pub enum BaseSystem {
    Shift(ShiftSystem),
    Odometer(OdometerSystem),
    Explicit(ExplicitSystem),
}

/// Left shift on `m` symbols with the dyadic cylinder metric
/// d(x,y) = 1/2 * 2^(-min{|i| : x_i != y_i}).
pub fn full_shift(m: Symbol, k: usize) -> Result<BaseSystem> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "full_shift alphabet must be >= 2, got {m}"
        )));
    }
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "full_shift resolution must be >= 1, got {k}"
        )));
    }
    Ok(BaseSystem::Shift(ShiftSystem {
        name: format!("full_shift_{m}_K{k}"),
        alphabet: m,
        radius: k,
        allowed: None,
        symbol_labels: None,
    }))
}

/// Shift on binary windows with no adjacent 1s.
pub fn golden_mean_sft(k: usize) -> Result<BaseSystem> {
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "golden_mean_sft resolution must be >= 1, got {k}"
        )));
    }
    let allowed = vec![vec![true, true], vec![true, false]];
    Ok(BaseSystem::Shift(ShiftSystem {
        name: format!("golden_mean_K{k}"),
        alphabet: 2,
        radius: k,
        allowed: Some(allowed),
        symbol_labels: None,
    }))
}

/// Binary adding machine with carry on one-sided windows of length `k`.
/// Forward adds one, backward subtracts one; neither loses resolution.
pub fn odometer(k: usize) -> Result<BaseSystem> {
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "odometer resolution must be >= 1, got {k}"
        )));
    }
    Ok(BaseSystem::Odometer(OdometerSystem {
        name: format!("odometer_K{k}"),
        window: k,
    }))
}

/// Identity map on {0} U {2^-k : 1 <= k <= l} with the real-line metric.
/// Every point is fixed and the fixed points accumulate at 0.
pub fn convergent_fixed_points(l: usize) -> Result<BaseSystem> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!(
            "convergent_fixed_points needs l >= 2, got {l}"
        )));
    }
    // Points sorted ascending: 0, 2^-l, ..., 2^-1.
    let mut values = vec![0.0f64];
    for k in (1..=l).rev() {
        values.push(0.5f64.powi(k as i32));
    }
    let labels: Vec<String> = values.iter().map(|v| format_dyadic(*v)).collect();
    let n = values.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = (values[i] - values[j]).abs();
        }
    }
    let fwd: Vec<usize> = (0..n).collect();
    Ok(BaseSystem::Explicit(ExplicitSystem {
        name: format!("convergent_fixed_points_{l}"),
        labels,
        dist,
        fwd: fwd.clone(),
        bwd: fwd,
    }))
}

/// Cyclic rotation on `n` points with the circle metric scaled to diameter
/// 1/2. Handy as a small base whose suspension has genuinely periodic
/// orbits.
pub fn explicit_cycle(n: usize) -> Result<BaseSystem> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "explicit_cycle needs n >= 2, got {n}"
        )));
    }
    let half = (n / 2) as f64;
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d = (i as i64 - j as i64).unsigned_abs() as f64;
            let circ = d.min(n as f64 - d);
            dist[i][j] = 0.5 * circ / half;
        }
    }
    let fwd: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let bwd: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    Ok(BaseSystem::Explicit(ExplicitSystem {
        name: format!("cycle_{n}"),
        labels: (0..n).map(|i| format!("p{i}")).collect(),
        dist,
        fwd,
        bwd,
    }))
}

fn format_dyadic(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let denom = (1.0 / v).round() as u64;
    format!("1/{denom}")
}

impl BaseSystem {
    pub fn name(&self) -> &str {
        match self {
            BaseSystem::Shift(s) => &s.name,
            BaseSystem::Odometer(s) => &s.name,
            BaseSystem::Explicit(s) => &s.name,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, BaseSystem::Shift(_))
    }

    /// Construction resolution: window radius for shifts, window length for
    /// the odometer, irrelevant (usize::MAX) for explicit systems.
    pub fn resolution(&self) -> usize {
        match self {
            BaseSystem::Shift(s) => s.radius,
            BaseSystem::Odometer(s) => s.window,
            BaseSystem::Explicit(_) => usize::MAX,
        }
    }

    /// How many more applications of the map (in either direction) the
    /// point supports before its window is exhausted.
    pub fn iterate_budget(&self, p: &Point) -> usize {
        match self {
            BaseSystem::Shift(_) => p.window_radius(),
            _ => usize::MAX,
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match self {
            BaseSystem::Shift(s) => {
                if p.0.len() % 2 == 0 || p.0.is_empty() {
                    return Err(Error::ConstraintViolation(format!(
                        "shift window must have odd length, got {}",
                        p.0.len()
                    )));
                }
                if p.0.iter().any(|&a| a >= s.alphabet) {
                    return Err(Error::ConstraintViolation(
                        "symbol outside alphabet".to_string(),
                    ));
                }
                if let Some(allowed) = &s.allowed {
                    for w in p.0.windows(2) {
                        if !allowed[w[0] as usize][w[1] as usize] {
                            return Err(Error::ConstraintViolation(format!(
                                "forbidden transition {} -> {}",
                                w[0], w[1]
                            )));
                        }
                    }
                }
                Ok(())
            }
            BaseSystem::Odometer(s) => {
                if p.0.len() != s.window {
                    return Err(Error::ConstraintViolation(format!(
                        "odometer window must have length {}, got {}",
                        s.window,
                        p.0.len()
                    )));
                }
                if p.0.iter().any(|&a| a > 1) {
                    return Err(Error::ConstraintViolation(
                        "odometer symbols must be binary".to_string(),
                    ));
                }
                Ok(())
            }
            BaseSystem::Explicit(s) => {
                if p.0.len() != 1 || p.0[0] as usize >= s.labels.len() {
                    return Err(Error::ConstraintViolation(
                        "explicit point must be a single valid index".to_string(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// All resolution-K representatives, in canonical (lexicographic) order.
    pub fn net(&self) -> Vec<Point> {
        match self {
            BaseSystem::Shift(s) => {
                let len = 2 * s.radius + 1;
                let mut out = Vec::new();
                let mut word = vec![0 as Symbol; len];
                enumerate_words(s, &mut word, 0, len, &mut out);
                out
            }
            BaseSystem::Odometer(s) => {
                let mut out = Vec::new();
                for v in 0..(1u64 << s.window) {
                    let syms: Vec<Symbol> =
                        (0..s.window).map(|i| ((v >> i) & 1) as Symbol).collect();
                    out.push(Point(syms));
                }
                out.sort();
                out
            }
            BaseSystem::Explicit(s) => (0..s.labels.len())
                .map(|i| Point(vec![i as Symbol]))
                .collect(),
        }
    }

    /// One application of the homeomorphism. Shift windows shrink by one
    /// symbol; the odometer and explicit maps keep full resolution.
    pub fn forward(&self, p: &Point) -> Result<Point> {
        match self {
            BaseSystem::Shift(_) => {
                if p.0.len() < 3 {
                    return Err(Error::ResolutionExhausted(
                        "cannot shift a radius-0 window".to_string(),
                    ));
                }
                Ok(Point(p.0[2..].to_vec()))
            }
            BaseSystem::Odometer(_) => {
                let mut syms = p.0.clone();
                for s in syms.iter_mut() {
                    if *s == 0 {
                        *s = 1;
                        return Ok(Point(syms));
                    }
                    *s = 0;
                }
                Ok(Point(syms)) // full carry wraps to all zeros
            }
            BaseSystem::Explicit(s) => Ok(Point(vec![s.fwd[p.0[0] as usize] as Symbol])),
        }
    }

    pub fn backward(&self, p: &Point) -> Result<Point> {
        match self {
            BaseSystem::Shift(_) => {
                if p.0.len() < 3 {
                    return Err(Error::ResolutionExhausted(
                        "cannot shift a radius-0 window".to_string(),
                    ));
                }
                Ok(Point(p.0[..p.0.len() - 2].to_vec()))
            }
            BaseSystem::Odometer(_) => {
                let mut syms = p.0.clone();
                for s in syms.iter_mut() {
                    if *s == 1 {
                        *s = 0;
                        return Ok(Point(syms));
                    }
                    *s = 1;
                }
                Ok(Point(syms)) // full borrow wraps to all ones
            }
            BaseSystem::Explicit(s) => Ok(Point(vec![s.bwd[p.0[0] as usize] as Symbol])),
        }
    }

    /// `phi^n`, n of either sign.
    pub fn iterate(&self, p: &Point, n: i64) -> Result<Point> {
        let mut q = p.clone();
        for _ in 0..n.unsigned_abs() {
            q = if n > 0 {
                self.forward(&q)?
            } else {
                self.backward(&q)?
            };
        }
        Ok(q)
    }

    /// Metric between representatives. Windows of different radii are
    /// compared on their common window; equality there means distance 0
    /// (cylinder identification).
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match self {
            BaseSystem::Shift(_) => {
                let ra = a.window_radius();
                let rb = b.window_radius();
                let r = ra.min(rb);
                let mut first = usize::MAX;
                for i in 0..=r {
                    if a.0[ra + i] != b.0[rb + i] || a.0[ra - i] != b.0[rb - i] {
                        first = i;
                        break;
                    }
                }
                if first == usize::MAX {
                    0.0
                } else {
                    0.5 * 0.5f64.powi(first as i32)
                }
            }
            BaseSystem::Odometer(_) => {
                let n = a.0.len().min(b.0.len());
                for i in 0..n {
                    if a.0[i] != b.0[i] {
                        return 0.5 * 0.5f64.powi(i as i32);
                    }
                }
                0.0
            }
            BaseSystem::Explicit(s) => s.dist[a.0[0] as usize][b.0[0] as usize],
        }
    }

    /// Upper bound on pairwise distances.
    pub fn diameter_bound(&self) -> f64 {
        match self {
            BaseSystem::Explicit(s) => s
                .dist
                .iter()
                .flatten()
                .cloned()
                .fold(0.0, f64::max),
            _ => 0.5,
        }
    }

    /// True when the representatives agree on their common window.
    pub fn same_within_resolution(&self, a: &Point, b: &Point) -> bool {
        self.dist(a, b) == 0.0
    }

    pub fn label(&self, p: &Point) -> String {
        match self {
            BaseSystem::Shift(s) => {
                if let Some(labels) = &s.symbol_labels {
                    p.0.iter()
                        .map(|&a| labels[a as usize].clone())
                        .collect::<Vec<_>>()
                        .join(".")
                } else {
                    p.0.iter().map(|&a| a.to_string()).collect::<String>()
                }
            }
            BaseSystem::Odometer(_) => p.0.iter().map(|&a| a.to_string()).collect::<String>(),
            BaseSystem::Explicit(s) => s.labels[p.0[0] as usize].clone(),
        }
    }
}

fn enumerate_words(s: &ShiftSystem, word: &mut Vec<Symbol>, pos: usize, len: usize, out: &mut Vec<Point>) {
    if pos == len {
        out.push(Point(word.clone()));
        return;
    }
    for a in 0..s.alphabet {
        if pos > 0 {
            if let Some(allowed) = &s.allowed {
                if !allowed[word[pos - 1] as usize][a as usize] {
                    continue;
                }
            }
        }
        word[pos] = a;
        enumerate_words(s, word, pos + 1, len, out);
    }
}

/// The pulled-back metric rho'(x,y) = min{rho(x,y), rho(phi x, phi y)}.
/// Needs one application of the map, so it costs one window symbol.
pub fn pullback_dist(sys: &BaseSystem, a: &Point, b: &Point) -> Result<f64> {
    let fa = sys.forward(a)?;
    let fb = sys.forward(b)?;
    Ok(sys.dist(a, b).min(sys.dist(&fa, &fb)))
}

/// Which metric a base-level computation runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseMetric {
    Standard,
    /// min of the metric and its image under one forward application.
    Pullback,
}

impl BaseMetric {
    pub fn eval(&self, sys: &BaseSystem, a: &Point, b: &Point) -> Result<f64> {
        match self {
            BaseMetric::Standard => Ok(sys.dist(a, b)),
            BaseMetric::Pullback => pullback_dist(sys, a, b),
        }
    }
}

/// The sliding b-block recoding and its inverse.
#[derive(Clone, Debug)]
pub struct BlockCode {
    pub block: usize,
    pub src_alphabet: Symbol,
}

impl BlockCode {
    /// Tuple symbols are encoded in base `src_alphabet`, most significant
    /// coordinate first.
    fn encode_tuple(&self, word: &[Symbol]) -> Symbol {
        word.iter()
            .fold(0u16, |acc, &a| acc * self.src_alphabet + a)
    }

    fn tuple_first(&self, sym: Symbol) -> Symbol {
        let width = (self.src_alphabet as u32).pow(self.block as u32 - 1) as Symbol;
        sym / width
    }

    fn tuple_label(&self, sym: Symbol) -> String {
        let mut digits = Vec::with_capacity(self.block);
        let mut v = sym;
        for _ in 0..self.block {
            digits.push(v % self.src_alphabet);
            v /= self.src_alphabet;
        }
        digits.reverse();
        format!(
            "({})",
            digits
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("")
        )
    }

    /// Image of a window under the sliding recoding; the window loses b-1
    /// symbols of radius.
    pub fn encode(&self, p: &Point) -> Result<Point> {
        let r = p.window_radius();
        let drop = self.block - 1;
        if r < drop {
            return Err(Error::ResolutionExhausted(format!(
                "window radius {r} too small for {}-block recoding",
                self.block
            )));
        }
        let out_r = r - drop;
        let len = 2 * r + 1;
        // Tuple at position i reads x_i..x_{i+b-1}; keeping positions
        // -out_r..out_r centres the image window.
        let mut syms = Vec::with_capacity(2 * out_r + 1);
        for i in drop..(len - drop) {
            syms.push(self.encode_tuple(&p.0[i..i + self.block]));
        }
        Ok(Point(syms))
    }

    /// Inverse: drop each tuple to its first coordinate.
    pub fn decode(&self, p: &Point) -> Point {
        Point(p.0.iter().map(|&s| self.tuple_first(s)).collect())
    }
}

/// The b-block sliding recoding of a symbolic system. Returns the image
/// system (an SFT on tuple symbols, radius reduced by b-1) together with
/// the code.
pub fn block_recoding(sys: &BaseSystem, b: usize) -> Result<(BaseSystem, BlockCode)> {
    let s = match sys {
        BaseSystem::Shift(s) => s,
        _ => {
            return Err(Error::UnsupportedSystem(
                "block recoding needs a symbolic system".to_string(),
            ))
        }
    };
    if b < 2 {
        return Err(Error::InvalidParameter(format!(
            "block length must be >= 2, got {b}"
        )));
    }
    if s.radius < b {
        return Err(Error::ResolutionExhausted(format!(
            "resolution {} too small for {b}-block recoding",
            s.radius
        )));
    }
    let m = s.alphabet;
    let code = BlockCode {
        block: b,
        src_alphabet: m,
    };
    let tuple_count = (m as usize).pow(b as u32);
    // Valid tuples: words of length b allowed by the source SFT.
    let mut valid = vec![false; tuple_count];
    let mut tuples: Vec<Vec<Symbol>> = Vec::with_capacity(tuple_count);
    for t in 0..tuple_count {
        let mut digits = Vec::with_capacity(b);
        let mut v = t;
        for _ in 0..b {
            digits.push((v % m as usize) as Symbol);
            v /= m as usize;
        }
        digits.reverse();
        let ok = match &s.allowed {
            None => true,
            Some(allowed) => digits
                .windows(2)
                .all(|w| allowed[w[0] as usize][w[1] as usize]),
        };
        valid[t] = ok;
        tuples.push(digits);
    }
    // Transition (a_1..a_b) -> (c_1..c_b) permitted iff the windows overlap
    // (c_i = a_{i+1}) and the new symbol extends an allowed word.
    let mut allowed = vec![vec![false; tuple_count]; tuple_count];
    for (t, from) in tuples.iter().enumerate() {
        if !valid[t] {
            continue;
        }
        for (u, to) in tuples.iter().enumerate() {
            if !valid[u] {
                continue;
            }
            let overlap = from[1..] == to[..b - 1];
            let step_ok = match &s.allowed {
                None => true,
                Some(a) => a[from[b - 1] as usize][to[b - 1] as usize],
            };
            allowed[t][u] = overlap && step_ok;
        }
    }
    let labels: Vec<String> = (0..tuple_count)
        .map(|t| code.tuple_label(t as Symbol))
        .collect();
    let image = BaseSystem::Shift(ShiftSystem {
        name: format!("{}_recoded_b{b}", s.name),
        alphabet: tuple_count as Symbol,
        radius: s.radius - (b - 1),
        allowed: Some(allowed),
        symbol_labels: Some(labels),
    });
    Ok((image, code))
}

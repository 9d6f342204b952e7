//! Analog signal chain feeding the gate: broken-line (clamp circuit) look-up
//! tables for `arctan κ` and `√(1 + κ²)`, gain/offset/latency stages, and
//! the optical-versus-electronic delay budget.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Functions realized by the nonlinear circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Arctan,
    Sqrt1px2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Odd,
    Even,
}

impl Target {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Target::Arctan => x.atan(),
            Target::Sqrt1px2 => x.hypot(1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Arctan => "arctan",
            Target::Sqrt1px2 => "sqrt1px2",
        }
    }

    fn parity(self) -> Parity {
        match self {
            Target::Arctan => Parity::Odd,
            Target::Sqrt1px2 => Parity::Even,
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arctan" | "atan" => Ok(Target::Arctan),
            "sqrt1px2" => Ok(Target::Sqrt1px2),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }
}

/// Continuous broken-line function, held constant beyond its first and last
/// breakpoints the way a clamp circuit saturates.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinearFunction {
    pub fn new(breakpoints: &[(f64, f64)]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidSegments);
        }
        for (i, &(x, y)) in breakpoints.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Breakpoints(i));
            }
            if i > 0 && x <= breakpoints[i - 1].0 {
                return Err(Error::Breakpoints(i));
            }
        }
        Ok(PiecewiseLinearFunction {
            xs: breakpoints.iter().map(|b| b.0).collect(),
            ys: breakpoints.iter().map(|b| b.1).collect(),
        })
    }

    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        self.xs.iter().copied().zip(self.ys.iter().copied()).collect()
    }

    pub fn n_segments(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn clamp_below(&self) -> f64 {
        self.ys[0]
    }

    pub fn clamp_above(&self) -> f64 {
        self.ys[self.ys.len() - 1]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.clamp_below();
        }
        if x >= self.xs[n - 1] {
            return self.clamp_above();
        }
        let j = self.xs.partition_point(|&b| b <= x) - 1;
        let (x0, x1) = (self.xs[j], self.xs[j + 1]);
        let (y0, y1) = (self.ys[j], self.ys[j + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Two-column `x y` text, one breakpoint per line, ascending x.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    /// Parse [`PiecewiseLinearFunction::to_table`] output. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Table {
                    line: i + 1,
                    reason: format!("expected 2 columns, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Table {
                    line: i + 1,
                    reason: e.to_string(),
                })
            };
            points.push((parse(fields[0])?, parse(fields[1])?));
        }
        Self::new(&points).map_err(|e| match e {
            Error::Breakpoints(k) => Error::Table {
                line: k + 1,
                reason: "x values must be finite and strictly increasing".into(),
            },
            other => other,
        })
    }
}

/// Largest `|f(x) - target(x)|` over `grid_points` uniform samples of `range`.
pub fn max_error(
    f: &PiecewiseLinearFunction,
    target: impl Fn(f64) -> f64,
    range: (f64, f64),
    grid_points: usize,
) -> Result<f64> {
    check_range(range)?;
    if grid_points < 1000 {
        return Err(Error::GridTooCoarse(grid_points));
    }
    Ok(uniform_grid(range, grid_points)
        .map(|x| (f.eval(x) - target(x)).abs())
        .fold(0.0, f64::max))
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    Ok(())
}

fn uniform_grid((lo, hi): (f64, f64), n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |k| if k + 1 == n { hi } else { lo + step * k as f64 })
}

/// Broken line through `target` at `n_segments + 1` equally spaced points.
pub fn uniform_pwl(
    target: Target,
    n_segments: usize,
    range: (f64, f64),
) -> Result<PiecewiseLinearFunction> {
    check_range(range)?;
    if n_segments == 0 {
        return Err(Error::InvalidSegments);
    }
    let xs: Vec<f64> = uniform_grid(range, n_segments + 1).collect();
    let mut xs = xs;
    if is_symmetric(range) {
        symmetrize_nodes(&mut xs);
    }
    let points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, target.eval(x))).collect();
    PiecewiseLinearFunction::new(&points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwlFit {
    pub target: Target,
    pub range: (f64, f64),
    pub function: PiecewiseLinearFunction,
    /// Max error of `function` on the fitting grid.
    pub max_error: f64,
    /// Max error of the uniform interpolating baseline on the same grid.
    pub uniform_max_error: f64,
}

const FIT_GRID_POINTS: usize = 8001;
const BISECTION_STEPS: usize = 80;

/// How the first piece of a half-range layout is anchored.
#[derive(Debug, Clone, Copy, PartialEq)]
enum FirstPiece {
    /// Ordinary chord from the start node.
    Chord,
    /// Line pinned at the origin (odd targets).
    OriginLine,
    /// Right half of a flat segment centred on zero (even targets).
    EvenCentre,
}

/// Near-minimax broken-line fit of `target` on `range`.
///
/// Breakpoints are placed so every segment carries the same chord deviation
/// `E`, with `E` found by bisection so that exactly `n_segments` cover the
/// range. Where the target has one curvature sign the whole table is then
/// offset by `E/2` toward the curve, so the error equioscillates at `±E/2`.
/// On a range symmetric about zero the table is exactly odd (arctan) or
/// even (sqrt1px2). The uniform interpolating table is returned instead if
/// it happens to be better on the dense grid.
pub fn fit_pwl(target: Target, n_segments: usize, range: (f64, f64)) -> Result<PwlFit> {
    check_range(range)?;
    if n_segments == 0 {
        return Err(Error::InvalidSegments);
    }
    let grid: Vec<f64> = uniform_grid(range, FIT_GRID_POINTS).collect();
    let fvals: Vec<f64> = grid.iter().map(|&x| target.eval(x)).collect();

    let baseline = uniform_pwl(target, n_segments, range)?;
    let uniform_max_error = grid_error(&baseline, &grid, &fvals);

    let fitted = PiecewiseLinearFunction::new(&equal_error_breakpoints(target, n_segments, range))?;
    let fitted_error = grid_error(&fitted, &grid, &fvals);
    let (function, max_error) = if fitted_error <= uniform_max_error {
        (fitted, fitted_error)
    } else {
        (baseline, uniform_max_error)
    };
    Ok(PwlFit {
        target,
        range,
        function,
        max_error,
        uniform_max_error,
    })
}

fn equal_error_breakpoints(target: Target, n: usize, range: (f64, f64)) -> Vec<(f64, f64)> {
    let (lo, hi) = range;
    if is_symmetric(range) {
        let odd_count = n % 2 == 1;
        let pieces = n.div_ceil(2);
        let (first, curvature) = match (target.parity(), odd_count) {
            (Parity::Odd, _) => (FirstPiece::OriginLine, target.curvature(0.0, hi)),
            (Parity::Even, true) => (FirstPiece::EvenCentre, target.curvature(0.0, hi)),
            (Parity::Even, false) => (FirstPiece::Chord, target.curvature(0.0, hi)),
        };
        let curvature = curvature.expect("targets have one curvature sign on each half");
        let (err, right) = cover(target, 0.0, hi, pieces, first, curvature);
        let value = |x: f64| target.eval(x) - curvature * 0.5 * err;
        let mut right: Vec<(f64, f64)> = right.into_iter().map(|x| (x, value(x))).collect();
        let centre = match (first, target.parity()) {
            (FirstPiece::Chord, _) => Some((0.0, value(0.0))),
            (FirstPiece::OriginLine, _) if !odd_count => Some((0.0, 0.0)),
            _ => None,
        };
        let mirror = |&(x, y): &(f64, f64)| match target.parity() {
            Parity::Odd => (-x, -y),
            Parity::Even => (-x, y),
        };
        let mut points: Vec<(f64, f64)> = right.iter().rev().map(mirror).collect();
        points.extend(centre);
        points.append(&mut right);
        points
    } else {
        let curvature = target.curvature(lo, hi);
        let (err, nodes) = cover(target, lo, hi, n, FirstPiece::Chord, curvature.unwrap_or(0.0));
        let shift = curvature.map_or(0.0, |c| c * 0.5 * err);
        std::iter::once(lo)
            .chain(nodes)
            .map(|x| (x, target.eval(x) - shift))
            .collect()
    }
}

/// Smallest deviation level at which `pieces` equal-deviation pieces reach
/// `end`, and the node positions after `start` at that level.
fn cover(
    target: Target,
    start: f64,
    end: f64,
    pieces: usize,
    first: FirstPiece,
    curvature: f64,
) -> (f64, Vec<f64>) {
    // a pinned line's deviation depends on the level itself, so grow the
    // upper bound until a single piece spans the whole interval
    let mut hi_err = (target.eval(end) - target.eval(start)).abs().max(1e-12);
    while piece_error(target, first, start, end, curvature, hi_err) > hi_err {
        hi_err *= 2.0;
    }
    let mut lo_err = 0.0;
    let mut best = lay_out(target, start, end, pieces, first, curvature, hi_err);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo_err + hi_err);
        let nodes = lay_out(target, start, end, pieces, first, curvature, mid);
        if nodes.last().is_some_and(|&x| x >= end) {
            hi_err = mid;
            best = nodes;
        } else {
            lo_err = mid;
        }
    }
    if let Some(last) = best.last_mut() {
        *last = end;
    }
    (hi_err, best)
}

fn lay_out(
    target: Target,
    start: f64,
    end: f64,
    pieces: usize,
    first: FirstPiece,
    curvature: f64,
    level: f64,
) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(pieces);
    let mut a = start;
    for k in 0..pieces {
        let kind = if k == 0 { first } else { FirstPiece::Chord };
        let b = longest_piece(target, kind, a, end, curvature, level);
        nodes.push(b);
        a = b;
        if a >= end {
            break;
        }
    }
    nodes
}

fn longest_piece(
    target: Target,
    kind: FirstPiece,
    a: f64,
    end: f64,
    curvature: f64,
    level: f64,
) -> f64 {
    if piece_error(target, kind, a, end, curvature, level) <= level {
        return end;
    }
    let (mut lo, mut hi) = (a, end);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if piece_error(target, kind, a, mid, curvature, level) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Deviation measure of one piece, comparable against the level `E`.
fn piece_error(target: Target, kind: FirstPiece, a: f64, b: f64, curvature: f64, level: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    match kind {
        FirstPiece::Chord => target.chord_deviation(a, b),
        FirstPiece::EvenCentre => (target.eval(b) - target.eval(0.0)).abs(),
        FirstPiece::OriginLine => {
            // line from the origin to the offset end value; its interior
            // deviation must stay within E/2, so report twice that
            let end_value = target.eval(b) - curvature * 0.5 * level;
            let slope = end_value / b;
            let interior = match target.tangent_point(slope, 0.0, b) {
                Some(x) => (target.eval(x) - slope * x).abs(),
                None => 0.0,
            };
            2.0 * interior
        }
    }
}

impl Target {
    /// +1 convex, -1 concave, `None` if the sign of f'' changes inside `[a, b]`.
    fn curvature(self, a: f64, b: f64) -> Option<f64> {
        match self {
            Target::Sqrt1px2 => Some(1.0),
            Target::Arctan if a >= 0.0 => Some(-1.0),
            Target::Arctan if b <= 0.0 => Some(1.0),
            Target::Arctan => None,
        }
    }

    /// Point of `[a, b]` where the derivative equals `slope`, for a
    /// single-curvature interval.
    fn tangent_point(self, slope: f64, a: f64, b: f64) -> Option<f64> {
        let x = match self {
            Target::Arctan => {
                if slope <= 0.0 || slope > 1.0 {
                    return None;
                }
                let r = (1.0 / slope - 1.0).sqrt();
                if a >= 0.0 { r } else { -r }
            }
            Target::Sqrt1px2 => {
                if slope.abs() >= 1.0 {
                    return None;
                }
                slope / (1.0 - slope * slope).sqrt()
            }
        };
        (a..=b).contains(&x).then_some(x)
    }

    /// Max |f - chord| over `[a, b]`.
    fn chord_deviation(self, a: f64, b: f64) -> f64 {
        let (fa, fb) = (self.eval(a), self.eval(b));
        let slope = (fb - fa) / (b - a);
        let dev = |x: f64| (self.eval(x) - (fa + slope * (x - a))).abs();
        match self.curvature(a, b) {
            Some(_) => self.tangent_point(slope, a, b).map_or(0.0, dev),
            None => {
                // mixed curvature: the extremes sit where f' = slope, one per side of zero
                let mut worst = 0.0f64;
                for (lo, hi) in [(a, 0.0), (0.0, b)] {
                    if let Some(x) = self.tangent_point(slope, lo, hi) {
                        worst = worst.max(dev(x));
                    }
                }
                worst
            }
        }
    }
}

fn is_symmetric((lo, hi): (f64, f64)) -> bool {
    (lo + hi).abs() <= 1e-12 * hi.abs().max(1.0)
}

fn symmetrize_nodes(xs: &mut [f64]) {
    let n = xs.len();
    for i in 0..n / 2 {
        let half = 0.5 * (xs[n - 1 - i] - xs[i]);
        xs[i] = -half;
        xs[n - 1 - i] = half;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
}

fn grid_error(f: &PiecewiseLinearFunction, grid: &[f64], fvals: &[f64]) -> f64 {
    grid.iter()
        .zip(fvals)
        .map(|(&x, &fx)| (f.eval(x) - fx).abs())
        .fold(0.0, f64::max)
}

/// Where θ and the feed-forward gain come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlLaw {
    Exact,
    Pwl {
        arctan: PiecewiseLinearFunction,
        gain: PiecewiseLinearFunction,
    },
}

impl ControlLaw {
    pub fn fitted(arctan_segments: usize, gain_segments: usize, range: f64) -> Result<Self> {
        Ok(ControlLaw::Pwl {
            arctan: fit_pwl(Target::Arctan, arctan_segments, (-range, range))?.function,
            gain: fit_pwl(Target::Sqrt1px2, gain_segments, (-range, range))?.function,
        })
    }

    pub fn lo_phase(&self, kappa: f64) -> f64 {
        match self {
            ControlLaw::Exact => kappa.atan(),
            ControlLaw::Pwl { arctan, .. } => arctan.eval(kappa),
        }
    }

    pub fn gain(&self, kappa: f64) -> f64 {
        match self {
            ControlLaw::Exact => kappa.hypot(1.0),
            ControlLaw::Pwl { gain, .. } => gain.eval(kappa),
        }
    }
}

/// Gain, offset and latency of one analog stage: `y(t) = gain · x(t - latency) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalChainStage {
    pub gain: f64,
    pub offset: f64,
    pub latency_ns: f64,
}

impl SignalChainStage {
    pub fn new(gain: f64, offset: f64, latency_ns: f64) -> Result<Self> {
        if !gain.is_finite() || !offset.is_finite() {
            return Err(Error::NonFinite("stage gain/offset"));
        }
        if !latency_ns.is_finite() || latency_ns < 0.0 {
            return Err(Error::config("latency_ns", "must be finite and non-negative"));
        }
        Ok(SignalChainStage {
            gain,
            offset,
            latency_ns,
        })
    }

    /// Unity-gain inverting amplifier.
    pub fn inverting() -> Self {
        SignalChainStage {
            gain: -1.0,
            offset: 0.0,
            latency_ns: 0.0,
        }
    }

    /// Zero-latency stage undoing this one's gain and offset.
    pub fn compensation(&self) -> Result<Self> {
        if self.gain == 0.0 {
            return Err(Error::config("gain", "a zero-gain stage cannot be inverted"));
        }
        Ok(SignalChainStage {
            gain: 1.0 / self.gain,
            offset: -self.offset / self.gain,
            latency_ns: 0.0,
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.gain * x + self.offset
    }
}

/// Run a uniformly sampled signal through `stages`. The summed latency is
/// applied as a fractional-sample delay by linear interpolation; samples
/// before the start hold the first value.
pub fn apply_chain(
    signal: &[f64],
    stages: &[SignalChainStage],
    sample_period_ns: f64,
) -> Result<Vec<f64>> {
    if !(sample_period_ns.is_finite() && sample_period_ns > 0.0) {
        return Err(Error::SamplePeriod(sample_period_ns));
    }
    let shaped: Vec<f64> = signal
        .iter()
        .map(|&x| stages.iter().fold(x, |acc, s| s.apply(acc)))
        .collect();
    let latency: f64 = stages.iter().map(|s| s.latency_ns).sum();
    if latency == 0.0 || shaped.is_empty() {
        return Ok(shaped);
    }
    let delay = latency / sample_period_ns;
    let n = shaped.len();
    Ok((0..n)
        .map(|i| {
            let src = i as f64 - delay;
            if src <= 0.0 {
                return shaped[0];
            }
            let j = src.floor() as usize;
            if j + 1 >= n {
                return shaped[n - 1];
            }
            let t = src - j as f64;
            shaped[j] * (1.0 - t) + shaped[j + 1] * t
        })
        .collect())
}

/// Delay of `delayed` relative to `reference`: the lag maximizing their
/// normalized cross-correlation over a fixed window, refined by a parabola
/// through the three top lags. Insensitive to gain and offset.
pub fn estimate_delay_ns(
    reference: &[f64],
    delayed: &[f64],
    sample_period_ns: f64,
    max_lag_samples: usize,
) -> Result<f64> {
    if !(sample_period_ns.is_finite() && sample_period_ns > 0.0) {
        return Err(Error::SamplePeriod(sample_period_ns));
    }
    let n = reference.len().min(delayed.len());
    if n <= 2 * max_lag_samples + 2 {
        return Err(Error::config("signal", "too short for the requested lag window"));
    }
    // skip the held edge at the start of the delayed trace; same length for every lag
    let window = max_lag_samples..n - max_lag_samples;
    let a = &reference[window.clone()];
    let pearson = |lag: usize| -> f64 {
        let b = &delayed[window.start + lag..window.end + lag];
        let m = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / m, b.iter().sum::<f64>() / m);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            let (dx, dy) = (x - ma, y - mb);
            sab += dx * dy;
            saa += dx * dx;
            sbb += dy * dy;
        }
        if saa == 0.0 || sbb == 0.0 {
            0.0
        } else {
            sab / (saa * sbb).sqrt()
        }
    };
    let c: Vec<f64> = (0..=max_lag_samples).map(pearson).collect();
    let peak = c
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let refine = if peak > 0 && peak < max_lag_samples {
        let (l, m, r) = (c[peak - 1], c[peak], c[peak + 1]);
        let denom = l - 2.0 * m + r;
        if denom.abs() > 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok((peak as f64 + refine) * sample_period_ns)
}

/// Phase lag in degrees of a sinusoid of `frequency_mhz` delayed by `delay_ns`.
pub fn phase_lag_degrees(delay_ns: f64, frequency_mhz: f64) -> f64 {
    360.0 * delay_ns * frequency_mhz * 1e-3
}

/// Speed of light in metres per nanosecond.
const LIGHT_M_PER_NS: f64 = 0.299_792_458;

/// Optical delay line versus feed-forward electronics latency.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayModel {
    pub optical_delay_ns: f64,
    pub electronics_latency_ns: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            optical_delay_ns: 43.4,
            electronics_latency_ns: 10.0,
        }
    }
}

impl DelayModel {
    pub fn from_path_length(path_m: f64, electronics_latency_ns: f64) -> Result<Self> {
        let model = DelayModel {
            optical_delay_ns: path_m / LIGHT_M_PER_NS,
            electronics_latency_ns,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("optical_delay_ns", self.optical_delay_ns),
            ("electronics_latency_ns", self.electronics_latency_ns),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(name, "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Optical delay minus electronic latency; the slack left for detection
    /// and modulator drive.
    pub fn mismatch_ns(&self) -> f64 {
        self.optical_delay_ns - self.electronics_latency_ns
    }
}

//! Shortest broken lines through prescribed scatterer sequences.
//!
//! The vertex on disk `i` is `c_i + r(cos θ_i, sin θ_i)` and the objective is
//! the total length `L(θ)`. `L` couples only neighboring angles, so its Hessian
//! is tridiagonal (cyclic in periodic mode) and damped Newton steps cost O(N).

use serde::{Deserialize, Serialize};

use crate::admissibility::{
    check_triple, disks_near_segment, realize_word_with, AdmissibleSequence, PairCache,
    RealizeOptions,
};
use crate::error::{Error, Result};
use crate::flow::{wall_crossings_param, Crossing, PhasePoint};
use crate::geometry::{point_segment_distance, BilliardTable, LiftedDisk, PlanarPoint, UnitVector};
use crate::rotation::RotationVector;
use crate::symbolic::{reduce, Letter, LetterKind, ReducedWord};

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
const POLISH_STEPS: usize = 3;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_EXTENSION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Both ends free; at a minimum the end segments hit their disks perpendicularly.
    Free,
    /// Closed up by a lattice translation: the vertex after the last one is the
    /// first vertex shifted by `(a, b)`.
    Periodic { a: i64, b: i64 },
    /// End angles held at the given values.
    Pinned { start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenPath {
    pub disks: Vec<LiftedDisk>,
    pub mode: PathMode,
    pub radius: f64,
    pub angles: Vec<f64>,
    pub vertices: Vec<PlanarPoint>,
    pub length: f64,
    /// Angle of incidence minus angle of reflection at each interior vertex
    /// (every vertex in periodic mode; the end vertices carry their deviation
    /// from perpendicularity in free mode).
    pub residuals: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    centers: Vec<PlanarPoint>,
    r: f64,
    mode: PathMode,
    table: &'a BilliardTable,
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    i: usize,
    j: usize,
    shift: PlanarPoint,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.centers.len()
    }

    fn shift(&self) -> PlanarPoint {
        match self.mode {
            PathMode::Periodic { a, b } => PlanarPoint::new(a as f64, b as f64),
            _ => PlanarPoint::new(0.0, 0.0),
        }
    }

    fn segments(&self) -> Vec<Seg> {
        let n = self.n();
        let zero = PlanarPoint::new(0.0, 0.0);
        let mut segs: Vec<Seg> = (0..n - 1)
            .map(|i| Seg {
                i,
                j: i + 1,
                shift: zero,
            })
            .collect();
        if matches!(self.mode, PathMode::Periodic { .. }) {
            segs.push(Seg {
                i: n - 1,
                j: 0,
                shift: self.shift(),
            });
        }
        segs
    }

    /// Indices of the optimized angles (contiguous).
    fn free_range(&self) -> std::ops::Range<usize> {
        match self.mode {
            PathMode::Pinned { .. } => 1..self.n().saturating_sub(1).max(1),
            _ => 0..self.n(),
        }
    }

    fn vertex(&self, i: usize, theta: f64) -> PlanarPoint {
        self.centers[i] + PlanarPoint::new(theta.cos(), theta.sin()) * self.r
    }

    fn length(&self, theta: &[f64]) -> f64 {
        self.segments()
            .iter()
            .map(|s| {
                (self.vertex(s.j, theta[s.j]) + s.shift).distance(self.vertex(s.i, theta[s.i]))
            })
            .sum()
    }

    /// Length, gradient and tridiagonal Hessian `(diag, upper, corner)` where
    /// `upper[i]` couples `i, i+1` and `corner` couples `N−1, 0`.
    fn derivatives(&self, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let n = self.n();
        let r = self.r;
        let mut g = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n.saturating_sub(1)];
        let mut corner = 0.0;
        let mut total = 0.0;
        let normal = |t: f64| PlanarPoint::new(t.cos(), t.sin());
        for s in self.segments() {
            let (ni, nj) = (normal(theta[s.i]), normal(theta[s.j]));
            let (ti, tj) = (ni.perp() * r, nj.perp() * r);
            let d = (self.centers[s.j] + nj * r + s.shift) - (self.centers[s.i] + ni * r);
            let len = d.norm();
            total += len;
            let u = d * (1.0 / len);
            g[s.i] -= u.dot(ti);
            g[s.j] += u.dot(tj);
            // tᵀ(I − uuᵀ)t' / ℓ
            let proj = |a: PlanarPoint, b: PlanarPoint| (a.dot(b) - a.dot(u) * b.dot(u)) / len;
            diag[s.i] += proj(ti, ti) + r * u.dot(ni);
            diag[s.j] += proj(tj, tj) - r * u.dot(nj);
            let off = -proj(ti, tj);
            if s.j == s.i + 1 {
                upper[s.i] += off;
            } else if s.i == s.j + 1 {
                upper[s.j] += off;
            } else {
                corner += off;
            }
        }
        (total, g, diag, upper, corner)
    }

    fn initial_angles(&self, pinned: Option<(f64, f64)>) -> Vec<f64> {
        let n = self.n();
        let shift = self.shift();
        let periodic = matches!(self.mode, PathMode::Periodic { .. });
        (0..n)
            .map(|i| {
                let c = self.centers[i];
                let prev = if i > 0 {
                    Some(self.centers[i - 1])
                } else if periodic {
                    Some(self.centers[n - 1] - shift)
                } else {
                    None
                };
                let next = if i + 1 < n {
                    Some(self.centers[i + 1])
                } else if periodic {
                    Some(self.centers[0] + shift)
                } else {
                    None
                };
                let target = match (prev, next) {
                    (Some(p), Some(q)) => (p + q) * 0.5,
                    (Some(p), None) => p,
                    (None, Some(q)) => q,
                    (None, None) => c + PlanarPoint::new(1.0, 0.0),
                };
                let d = target - c;
                let angle = if d.norm() < 1e-12 {
                    // Neighbors symmetric about c: point away from them.
                    let away = c - prev.unwrap_or(c);
                    away.y.atan2(away.x)
                } else {
                    d.y.atan2(d.x)
                };
                match pinned {
                    Some((a, _)) if i == 0 => a,
                    Some((_, b)) if i == n - 1 => b,
                    _ => angle,
                }
            })
            .collect()
    }
}

/// Solves the symmetric tridiagonal system `(diag, upper)` with an optional
/// corner coupling between the last and first unknowns. `None` on a zero pivot.
fn solve_tridiagonal(diag: &[f64], upper: &[f64], corner: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    if corner == 0.0 || n < 3 {
        return thomas(diag, upper, rhs);
    }
    // Sherman–Morrison with A = T' + u vᵀ, u = (γ, 0, …, corner), v = (1, 0, …, corner/γ).
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= corner * corner / gamma;
    let y = thomas(&d, upper, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner;
    let z = thomas(&d, upper, &u)?;
    let vy = y[0] + corner / gamma * y[n - 1];
    let vz = z[0] + corner / gamma * z[n - 1];
    let denom = 1.0 + vz;
    if denom.abs() < 1e-300 {
        return None;
    }
    let f = vy / denom;
    Some(y.iter().zip(&z).map(|(a, b)| a - f * b).collect())
}

fn thomas(diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < 1e-300 {
        return None;
    }
    c[0] = if n > 1 { upper[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - upper[i - 1] * c[i - 1];
        if pivot.abs() < 1e-300 {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - upper[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn angle_between(n: PlanarPoint, v: PlanarPoint) -> f64 {
    n.cross(v).atan2(n.dot(v))
}

/// Finds the shortest broken line through `seq` in the given mode.
pub fn minimize_path(
    table: &BilliardTable,
    seq: &AdmissibleSequence,
    mode: PathMode,
) -> Result<BrokenPath> {
    minimize_disks(table, &seq.disks, mode, DEFAULT_MAX_ITERATIONS)
}

/// Length of the broken line with vertex `i` at angle `angles[i]` on disk `i`,
/// and its gradient with respect to all angles.
pub fn length_gradient(
    table: &BilliardTable,
    disks: &[LiftedDisk],
    mode: PathMode,
    angles: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if disks.len() < 2 || angles.len() != disks.len() {
        return Err(Error::InvalidArgument(format!(
            "need matching disks and angles (at least two), got {} and {}",
            disks.len(),
            angles.len()
        )));
    }
    for d in disks {
        table.lifted_center(*d)?;
    }
    let problem = Problem {
        centers: disks.iter().map(|&d| table.center(d)).collect(),
        r: table.r(),
        mode,
        table,
    };
    let (len, g, ..) = problem.derivatives(angles);
    Ok((len, g))
}

pub fn minimize_disks(
    table: &BilliardTable,
    disks: &[LiftedDisk],
    mode: PathMode,
    max_iterations: usize,
) -> Result<BrokenPath> {
    let n = disks.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two disks, got {n} (a single disk closed by a translation is degenerate)"
        )));
    }
    for d in disks {
        table.lifted_center(*d)?;
    }
    let problem = Problem {
        centers: disks.iter().map(|&d| table.center(d)).collect(),
        r: table.r(),
        mode,
        table,
    };
    let pinned = match mode {
        PathMode::Pinned { start, end } => Some((start, end)),
        _ => None,
    };
    let mut theta = problem.initial_angles(pinned);
    let range = problem.free_range();
    let cyclic = matches!(mode, PathMode::Periodic { .. });

    let mut mu = 0.0;
    let mut iterations = 0;
    let mut polish = 0;
    let mut grad_norm;
    loop {
        let (len, g, diag, upper, corner) = problem.derivatives(&theta);
        let gr = &g[range.clone()];
        grad_norm = gr.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Past the tolerance a few more Newton steps tighten the reflection
        // residuals, which amplify the gradient at grazing bounces.
        let converged = grad_norm < GRADIENT_TOLERANCE;
        if range.is_empty() || (converged && (polish == POLISH_STEPS || grad_norm == 0.0)) {
            break;
        }
        if converged {
            polish += 1;
        }
        if iterations >= max_iterations {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: grad_norm,
            });
        }
        iterations += 1;
        let dr = &diag[range.clone()];
        let ur = &upper[range.start..range.end.saturating_sub(1)];
        let scale = dr.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
        let neg: Vec<f64> = gr.iter().map(|x| -x).collect();
        let mut accepted = false;
        for _ in 0..60 {
            let shifted: Vec<f64> = dr.iter().map(|x| x + mu).collect();
            let corner_r = if cyclic { corner } else { 0.0 };
            let step = solve_tridiagonal(&shifted, ur, corner_r, &neg);
            let Some(step) = step.filter(|s| {
                let slope: f64 = s.iter().zip(gr).map(|(a, b)| a * b).sum();
                let snorm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
                slope < -1e-3 * snorm * grad_norm && s.iter().all(|x| x.is_finite())
            }) else {
                mu = (mu * 4.0).max(1e-6 * scale);
                continue;
            };
            let slope: f64 = step.iter().zip(gr).map(|(a, b)| a * b).sum();
            let mut alpha = 1.0;
            let mut trial = theta.clone();
            for _ in 0..30 {
                for (k, s) in range.clone().zip(&step) {
                    trial[k] = theta[k] + alpha * s;
                }
                let new_len = problem.length(&trial);
                let armijo = new_len <= len + 1e-4 * alpha * slope;
                // Near the optimum the decrease drops below rounding of L;
                // accept a full step that shrinks the gradient instead.
                let near = alpha == 1.0 && grad_norm < 1e-6 && {
                    let (_, g2, ..) = problem.derivatives(&trial);
                    g2[range.clone()].iter().map(|x| x * x).sum::<f64>().sqrt() < grad_norm
                };
                if armijo || near {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                theta = trial;
                mu *= 0.25;
                if mu < 1e-14 * scale {
                    mu = 0.0;
                }
                break;
            }
            mu = (mu * 4.0).max(1e-6 * scale);
        }
        if !accepted && converged {
            break;
        }
        if !accepted {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: grad_norm,
            });
        }
    }

    let path = finish(&problem, disks, theta, grad_norm, iterations);
    verify(&problem, &path)?;
    Ok(path)
}

fn finish(
    problem: &Problem,
    disks: &[LiftedDisk],
    theta: Vec<f64>,
    gradient_norm: f64,
    iterations: usize,
) -> BrokenPath {
    let n = problem.n();
    let vertices: Vec<PlanarPoint> = (0..n).map(|i| problem.vertex(i, theta[i])).collect();
    let shift = problem.shift();
    let periodic = matches!(problem.mode, PathMode::Periodic { .. });
    let normal = |i: usize| PlanarPoint::new(theta[i].cos(), theta[i].sin());
    let unit = |v: PlanarPoint| v * (1.0 / v.norm());
    let residuals = (0..n)
        .map(|i| {
            let prev = if i > 0 {
                Some(vertices[i - 1])
            } else if periodic {
                Some(vertices[n - 1] - shift)
            } else {
                None
            };
            let next = if i + 1 < n {
                Some(vertices[i + 1])
            } else if periodic {
                Some(vertices[0] + shift)
            } else {
                None
            };
            let nrm = normal(i);
            match (prev, next) {
                (Some(p), Some(q)) => {
                    let back = unit(p - vertices[i]);
                    let out = unit(q - vertices[i]);
                    angle_between(nrm, back) + angle_between(nrm, out)
                }
                (Some(p), None) => angle_between(nrm, unit(p - vertices[i])),
                (None, Some(q)) => angle_between(nrm, unit(q - vertices[i])),
                (None, None) => 0.0,
            }
        })
        .collect();
    BrokenPath {
        disks: disks.to_vec(),
        mode: problem.mode,
        radius: problem.r,
        length: problem.length(&theta),
        angles: theta,
        vertices,
        residuals,
        gradient_norm,
        iterations,
    }
}

/// Post-hoc checks that the minimizer is a genuine billiard orbit.
fn verify(problem: &Problem, path: &BrokenPath) -> Result<()> {
    let table = problem.table;
    let r = problem.r;
    let n = path.disks.len();
    for s in problem.segments() {
        let a = path.vertices[s.i];
        let b = path.vertices[s.j] + s.shift;
        let (da, db) = (
            path.disks[s.i],
            path.disks[s.j].translated(s.shift.x as i64, s.shift.y as i64),
        );
        let u = b - a;
        if u.norm() < 1e-12 {
            return Err(Error::LeftAdmissibleClass(format!(
                "zero-length chord at vertex {}",
                s.i
            )));
        }
        if u.dot(path.vertices[s.i] - problem.centers[s.i]) <= 0.0
            || (-u).dot(path.vertices[s.j] - problem.centers[s.j]) <= 0.0
        {
            return Err(Error::LeftAdmissibleClass(format!(
                "chord {} -> {} enters its own scatterer",
                s.i, s.j
            )));
        }
        for d in disks_near_segment(table, a, b, r) {
            if d == da || d == db {
                continue;
            }
            if point_segment_distance(table.center(d), a, b) < r - 1e-9 {
                return Err(Error::LeftAdmissibleClass(format!(
                    "chord {} -> {} crosses scatterer {:?}",
                    s.i, s.j, d
                )));
            }
        }
    }
    let check_res = |i: usize| path.residuals[i].abs() < RESIDUAL_TOLERANCE;
    let ends_checked = matches!(problem.mode, PathMode::Free);
    for i in 0..n {
        let interior = matches!(problem.mode, PathMode::Periodic { .. }) || (i > 0 && i + 1 < n);
        if (interior || ends_checked) && !check_res(i) {
            return Err(Error::NotConverged {
                iterations: path.iterations,
                gradient_norm: path.gradient_norm,
            });
        }
    }
    Ok(())
}

impl BrokenPath {
    fn closing_shift(&self) -> Option<PlanarPoint> {
        match self.mode {
            PathMode::Periodic { a, b } => Some(PlanarPoint::new(a as f64, b as f64)),
            _ => None,
        }
    }

    /// Polyline vertices, closed up by the translated first vertex in periodic mode.
    pub fn polyline(&self) -> Vec<PlanarPoint> {
        let mut pts = self.vertices.clone();
        if let Some(s) = self.closing_shift() {
            pts.push(self.vertices[0] + s);
        }
        pts
    }

    /// Wall crossings along the path, timed by arc length from the first vertex.
    pub fn crossings(&self, table: &BilliardTable) -> Result<Vec<Crossing>> {
        let pts = self.polyline();
        let mut out = Vec::new();
        let mut t0 = 0.0;
        for w in pts.windows(2) {
            let len = w[0].distance(w[1]);
            for (s, letter) in wall_crossings_param(table, w[0], w[1])? {
                out.push(Crossing {
                    time: t0 + s * len,
                    letter,
                });
            }
            t0 += len;
        }
        Ok(out)
    }

    pub fn word(&self, table: &BilliardTable) -> Result<ReducedWord> {
        Ok(reduce(self.crossings(table)?.into_iter().map(|c| c.letter)))
    }

    /// Phase point leaving the first vertex along the first chord.
    pub fn initial_phase_point(&self) -> PhasePoint {
        let d = self.vertices[1] - self.vertices[0];
        PhasePoint::new(
            self.vertices[0],
            UnitVector::new(d).expect("chords have positive length"),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serialization cannot fail")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// The path is retraced backwards after its perpendicular end.
    Doubling,
    Translation {
        a: i64,
        b: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub path: BrokenPath,
    pub closure: Closure,
    pub period: f64,
    /// Reduced crossing word of one period.
    pub word: ReducedWord,
    pub rotation: RotationVector,
}

impl PeriodicOrbit {
    /// Closes a free-mode path by reflecting it back along itself.
    pub fn from_doubling(table: &BilliardTable, path: BrokenPath, depth: usize) -> Result<Self> {
        if path.mode != PathMode::Free {
            return Err(Error::InvalidArgument(
                "doubling needs a free-mode path".into(),
            ));
        }
        let half = path.word(table)?;
        let word = half.concat_reduce(&half.inverse());
        let period = 2.0 * path.length;
        Ok(Self {
            rotation: RotationVector::periodic(&word, period, depth),
            closure: Closure::Doubling,
            period,
            word,
            path,
        })
    }

    pub fn from_translation(table: &BilliardTable, path: BrokenPath, depth: usize) -> Result<Self> {
        let PathMode::Periodic { a, b } = path.mode else {
            return Err(Error::InvalidArgument(
                "translation closure needs a periodic path".into(),
            ));
        };
        let word = path.word(table)?;
        let period = path.length;
        Ok(Self {
            rotation: RotationVector::periodic(&word, period, depth),
            closure: Closure::Translation { a, b },
            period,
            word,
            path,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("orbit serialization cannot fail")
    }
}

/// A word realized as a genuine orbit segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedWord {
    pub sequence: AdmissibleSequence,
    pub path: BrokenPath,
    pub crossings: Vec<Crossing>,
    pub word: ReducedWord,
    /// Search retries with tightened margins before the path matched.
    pub retries: usize,
}

impl RealizedWord {
    /// Times between consecutive wall crossings.
    pub fn passage_times(&self) -> Vec<f64> {
        self.crossings
            .windows(2)
            .map(|w| w[1].time - w[0].time)
            .collect()
    }
}

const REALIZE_ATTEMPTS: usize = 4;

/// Constructs an admissible sequence for `w`, minimizes it, and checks that
/// the resulting orbit segment crosses exactly the walls of `w`.
pub fn realize_orbit(table: &BilliardTable, w: &ReducedWord) -> Result<RealizedWord> {
    realize_orbit_with(
        table,
        w,
        RealizeOptions::default(),
        &mut PairCache::default(),
    )
}

pub fn realize_orbit_with(
    table: &BilliardTable,
    w: &ReducedWord,
    mut opts: RealizeOptions,
    pairs: &mut PairCache,
) -> Result<RealizedWord> {
    let mut last_err = None;
    for retries in 0..REALIZE_ATTEMPTS {
        let attempt = realize_word_with(table, w, opts, pairs).and_then(|sequence| {
            let path = minimize_path(table, &sequence, PathMode::Free)?;
            let crossings = path.crossings(table)?;
            let raw: Vec<Letter> = crossings.iter().map(|c| c.letter).collect();
            if raw != w.letters() {
                return Err(Error::Unrealizable {
                    len: w.len(),
                    reason: format!("minimized path crosses {} instead", reduce(raw)),
                });
            }
            Ok(RealizedWord {
                sequence,
                path,
                crossings,
                word: w.clone(),
                retries,
            })
        });
        match attempt {
            Ok(r) => return Ok(r),
            Err(e) => last_err = Some(e),
        }
        opts = opts.tightened();
    }
    Err(last_err.expect("at least one attempt ran"))
}

/// The four passage types, by their worst-case letter pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassageCase {
    /// `a` then `b_n`.
    HorizontalVertical,
    /// `b_1` then `b_n⁻¹`.
    VerticalReversal,
    /// `a` then `a`.
    HorizontalRun,
    /// `b_1` then `b_n`.
    VerticalRun,
}

impl PassageCase {
    pub const ALL: [PassageCase; 4] = [
        PassageCase::HorizontalVertical,
        PassageCase::VerticalReversal,
        PassageCase::HorizontalRun,
        PassageCase::VerticalRun,
    ];

    pub fn number(self) -> u8 {
        match self {
            PassageCase::HorizontalVertical => 1,
            PassageCase::VerticalReversal => 2,
            PassageCase::HorizontalRun => 3,
            PassageCase::VerticalRun => 4,
        }
    }

    pub fn letters(self, n: u32) -> (Letter, Letter) {
        match self {
            PassageCase::HorizontalVertical => (Letter::a(), Letter::b(n)),
            PassageCase::VerticalReversal => (Letter::b(1), Letter::b_inv(n)),
            PassageCase::HorizontalRun => (Letter::a(), Letter::a()),
            PassageCase::VerticalRun => (Letter::b(1), Letter::b(n)),
        }
    }

    /// Classifies the passage between two consecutive letters of a reduced
    /// word, up to the symmetries of the table and time reversal.
    pub fn classify(x: Letter, y: Letter) -> PassageCase {
        match (x.kind(), y.kind()) {
            (LetterKind::A, LetterKind::A) => PassageCase::HorizontalRun,
            (LetterKind::A, LetterKind::B) | (LetterKind::B, LetterKind::A) => {
                PassageCase::HorizontalVertical
            }
            (LetterKind::B, LetterKind::B) if x.sign() == y.sign() => PassageCase::VerticalRun,
            _ => PassageCase::VerticalReversal,
        }
    }

    /// The stated bound's leading constant.
    pub fn leading_bound(self) -> f64 {
        match self {
            PassageCase::HorizontalVertical | PassageCase::VerticalReversal => 5f64.sqrt(),
            PassageCase::HorizontalRun | PassageCase::VerticalRun => 2f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageMeasurement {
    pub case: PassageCase,
    pub n: u32,
    pub instances: usize,
    pub max_time: f64,
    pub mean_time: f64,
    /// Context word of the slowest instance.
    pub worst_word: ReducedWord,
}

/// Realizes the worst-case letter pair of every case inside a family of
/// one-letter contexts and reports the realized passage durations.
pub fn passage_time_table(table: &BilliardTable) -> Result<Vec<PassageMeasurement>> {
    let n = table.n();
    if n < 2 {
        return Err(Error::InvalidArgument("passage table needs n >= 2".into()));
    }
    let mut contexts = vec![Letter::a(), Letter::a_inv()];
    for i in [1, n / 2, n] {
        contexts.push(Letter::b(i));
        contexts.push(Letter::b_inv(i));
    }
    contexts.dedup();
    let mut pairs = PairCache::default();
    let mut out = Vec::new();
    for case in PassageCase::ALL {
        let (x, y) = case.letters(n);
        let mut times = Vec::new();
        let mut worst = (f64::NEG_INFINITY, ReducedWord::empty());
        for &before in &contexts {
            for &after in &contexts {
                if before.cancels(x) || y.cancels(after) {
                    continue;
                }
                let w = reduce([before, x, y, after]);
                let realized =
                    realize_orbit_with(table, &w, RealizeOptions::default(), &mut pairs)?;
                let t = realized.passage_times()[1];
                if t > worst.0 {
                    worst = (t, w);
                }
                times.push(t);
            }
        }
        out.push(PassageMeasurement {
            case,
            n,
            instances: times.len(),
            max_time: worst.0,
            mean_time: times.iter().sum::<f64>() / times.len() as f64,
            worst_word: worst.1,
        });
    }
    Ok(out)
}

/// A translation-periodic orbit obtained by closing up a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureResult {
    pub orbit: PeriodicOrbit,
    /// Disks appended after the input, ending with the shifted first disk;
    /// empty when the input closed up directly.
    pub extension: Vec<LiftedDisk>,
}

/// Lifts within `radius` of `d`'s center.
fn nearby(table: &BilliardTable, d: LiftedDisk, radius: f64) -> Vec<LiftedDisk> {
    let c = table.center(d);
    let n = f64::from(table.n());
    let mut out = Vec::new();
    for q in (c.y - radius).ceil() as i64..=(c.y + radius).floor() as i64 {
        for k in ((c.x - radius) * n).ceil() as i64..=((c.x + radius) * n).floor() as i64 {
            let e = table.disk_at_column(k, q);
            let dist = table.center(e).distance(c);
            if e != d && dist <= radius {
                out.push(e);
            }
        }
    }
    out.sort_by(|a, b| {
        table
            .center(*a)
            .distance(c)
            .total_cmp(&table.center(*b).distance(c))
            .then(a.cmp(b))
    });
    out
}

const CLOSURE_RADIUS: f64 = 1.5;
const CLOSURE_NODE_BUDGET: usize = 2_000_000;

struct ClosureSearch<'a> {
    table: &'a BilliardTable,
    first: LiftedDisk,
    second: LiftedDisk,
    nodes: usize,
    pairs: PairCache,
}

impl ClosureSearch<'_> {
    /// Whether `cur → first + shift` closes admissibly after `prev`.
    fn closes(&mut self, prev: LiftedDisk, cur: LiftedDisk, shift: (i64, i64)) -> bool {
        let end = self.first.translated(shift.0, shift.1);
        let after = self.second.translated(shift.0, shift.1);
        end != cur
            && self.pairs.check(self.table, cur, end)
            && check_triple(self.table, prev, cur, end)
            && check_triple(self.table, cur, end, after)
    }

    fn dfs(&mut self, path: &mut Vec<LiftedDisk>, remaining: usize) -> Option<(i64, i64)> {
        self.nodes += 1;
        if self.nodes > CLOSURE_NODE_BUDGET {
            return None;
        }
        let cur = path[path.len() - 1];
        let prev = path[path.len() - 2];
        let near = nearby(self.table, cur, CLOSURE_RADIUS);
        if remaining == 1 {
            for &e in &near {
                if e.disk_id == self.first.disk_id {
                    let shift = (e.cell.0 - self.first.cell.0, e.cell.1 - self.first.cell.1);
                    if self.closes(prev, cur, shift) {
                        return Some(shift);
                    }
                }
            }
            return None;
        }
        for &e in &near {
            if e == prev
                || !check_triple(self.table, prev, cur, e)
                || !self.pairs.check(self.table, cur, e)
            {
                continue;
            }
            path.push(e);
            if let Some(s) = self.dfs(path, remaining - 1) {
                return Some(s);
            }
            path.pop();
        }
        None
    }
}

/// Appends at most `max_extension` disks so that the sequence ends on a
/// lattice translate of its first disk with an admissible seam, then
/// minimizes the translation-periodic orbit.
pub fn periodic_closure(
    table: &BilliardTable,
    seq: &AdmissibleSequence,
    max_extension: usize,
    depth: usize,
) -> Result<ClosureResult> {
    if !seq.is_admissible() {
        return Err(Error::InvalidArgument(
            "closure needs an admissible sequence".into(),
        ));
    }
    let disks = &seq.disks;
    let m = disks.len();
    let mut search = ClosureSearch {
        table,
        first: disks[0],
        second: disks[1],
        nodes: 0,
        pairs: PairCache::default(),
    };
    let last = disks[m - 1];
    let mut found = None;
    if m >= 3 && last.disk_id == disks[0].disk_id {
        let shift = (last.cell.0 - disks[0].cell.0, last.cell.1 - disks[0].cell.1);
        let after = disks[1].translated(shift.0, shift.1);
        if shift != (0, 0) && check_triple(table, disks[m - 2], last, after) {
            found = Some((None, shift));
        }
    }
    for level in 1..=max_extension {
        if found.is_some() {
            break;
        }
        let mut path = vec![disks[m - 2], last];
        if let Some(shift) = search.dfs(&mut path, level) {
            found = Some((Some(path[2..].to_vec()), shift));
        }
    }
    let Some((inserted, shift)) = found else {
        return Err(Error::NoExtension { max_extension });
    };
    let mut cycle: Vec<LiftedDisk> = disks.clone();
    let extension = match inserted {
        // The input already ends on the shifted first disk.
        None => {
            cycle.pop();
            Vec::new()
        }
        Some(mut middle) => {
            cycle.extend(middle.iter().copied());
            middle.push(disks[0].translated(shift.0, shift.1));
            middle
        }
    };
    let path = minimize_disks(
        table,
        &cycle,
        PathMode::Periodic {
            a: shift.0,
            b: shift.1,
        },
        DEFAULT_MAX_ITERATIONS,
    )?;
    let orbit = PeriodicOrbit::from_translation(table, path, depth)?;
    Ok(ClosureResult { orbit, extension })
}

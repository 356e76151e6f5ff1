//! Position partition of the phase space, itineraries, and entropy estimates.
//!
//! The partition has thin strips just right (`S+`) and left (`S-`) of every
//! vertical wall line, thin strips just above (`D+k`) and below (`D-k`) the
//! horizontal wall line between scatterers `k` and `k+1`, and the bulk. A
//! trajectory crosses a wall exactly when it moves between the two strips on
//! either side of it, so the itinerary determines the crossing word.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{lyapunov_accumulate, simulate, FrontState, PhasePoint, Stop, TrajectorySegment};
use crate::geometry::{BilliardTable, PlanarPoint};
use crate::sampling::{liouville_point, parallel_samples};
use crate::symbolic::{reduce, Letter, ReducedWord};

pub use crate::symbolic::{word_count, word_count_exact};

/// Boundary distance below which a point counts as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Minimum aggregate collisions for an entropy estimate.
pub const MIN_COLLISIONS: u64 = 10_000;

pub fn default_epsilon(table: &BilliardTable) -> f64 {
    table.r() / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionCell {
    DPlus(u32),
    DMinus(u32),
    SPlus,
    SMinus,
    Bulk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellLookup {
    pub cell: PartitionCell,
    /// The point lies within [`TIE_TOLERANCE`] of a defining boundary.
    pub tie: bool,
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Cell of a position. `S±` win over `D±k` where they overlap.
pub fn partition_cell(table: &BilliardTable, epsilon: f64, q: PlanarPoint) -> CellLookup {
    let n = table.n();
    let (f1, f2) = (frac(q.x), frac(q.y));
    let near = |a: f64, b: f64| (a - b).abs() < TIE_TOLERANCE;
    let mut tie = near(f1, epsilon) || near(f1, 1.0 - epsilon) || near(f1, 0.0) || near(f1, 1.0);
    let cell = if f1 < epsilon {
        PartitionCell::SPlus
    } else if f1 > 1.0 - epsilon {
        PartitionCell::SMinus
    } else {
        tie |= near(f2, epsilon) || near(f2, 1.0 - epsilon);
        let scaled = f1 * f64::from(n);
        let k = (scaled.floor() as u32).min(n - 1);
        let strictly_inside = scaled > f64::from(k) && scaled < f64::from(k + 1);
        if f2 < epsilon || f2 > 1.0 - epsilon {
            tie |= near(scaled, scaled.round());
        }
        if f2 < epsilon && strictly_inside {
            PartitionCell::DPlus(k)
        } else if f2 > 1.0 - epsilon && strictly_inside {
            PartitionCell::DMinus(k)
        } else {
            PartitionCell::Bulk
        }
    };
    CellLookup { cell, tie }
}

/// Letter for a move between two cells, if that move crosses a wall.
pub fn transition_letter(from: PartitionCell, to: PartitionCell) -> Option<Letter> {
    use PartitionCell::*;
    match (from, to) {
        (SMinus, SPlus) => Some(Letter::a()),
        (SPlus, SMinus) => Some(Letter::a_inv()),
        (DMinus(i), DPlus(j)) if i == j => Some(Letter::b(i + 1)),
        (DPlus(i), DMinus(j)) if i == j => Some(Letter::b_inv(i + 1)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Itinerary {
    pub cells: Vec<PartitionCell>,
    /// Reduced crossing word of the originating segment.
    pub word: ReducedWord,
    /// Some boundary was met within tolerance, so the cell order may be
    /// ambiguous.
    pub tie: bool,
}

impl Itinerary {
    /// Word read off the cell transitions alone.
    pub fn induced_word(&self) -> ReducedWord {
        reduce(
            self.cells
                .windows(2)
                .filter_map(|w| transition_letter(w[0], w[1])),
        )
    }

    fn fingerprint(&self) -> u128 {
        let half = |salt: u8| {
            let mut h = DefaultHasher::new();
            salt.hash(&mut h);
            self.cells.hash(&mut h);
            h.finish()
        };
        (u128::from(half(0)) << 64) | u128::from(half(1))
    }
}

/// Parameters in (0, 1) where `a + t (b - a)` meets a cell boundary line.
fn boundary_params(
    table: &BilliardTable,
    epsilon: f64,
    a: PlanarPoint,
    b: PlanarPoint,
    out: &mut Vec<f64>,
) {
    let n = f64::from(table.n());
    let mut lines = |u: f64, v: f64, offsets: &[f64]| {
        let d = v - u;
        if d == 0.0 {
            return;
        }
        for m in (u.min(v).floor() as i64)..=(u.max(v).floor() as i64) {
            for &o in offsets {
                let t = (m as f64 + o - u) / d;
                if t > 0.0 && t < 1.0 {
                    out.push(t);
                }
            }
        }
    };
    let mut x_offsets = vec![0.0, epsilon, 1.0 - epsilon];
    x_offsets.extend((1..table.n()).map(|k| f64::from(k) / n));
    lines(a.x, b.x, &x_offsets);
    lines(a.y, b.y, &[0.0, epsilon, 1.0 - epsilon]);
}

/// Cells visited along the flights of a segment, consecutive repeats merged.
pub fn itinerary_of(table: &BilliardTable, epsilon: f64, seg: &TrajectorySegment) -> Itinerary {
    let pts = seg.polyline();
    let mut cells: Vec<PartitionCell> = Vec::new();
    let mut tie = false;
    let mut params = Vec::new();
    let push = |q: PlanarPoint, cells: &mut Vec<PartitionCell>, tie: &mut bool| {
        let look = partition_cell(table, epsilon, q);
        *tie |= look.tie;
        if cells.last() != Some(&look.cell) {
            cells.push(look.cell);
        }
    };
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(b);
        if len == 0.0 {
            continue;
        }
        params.clear();
        params.push(0.0);
        boundary_params(table, epsilon, a, b, &mut params);
        params.push(1.0);
        params.sort_by(f64::total_cmp);
        for p in params.windows(2) {
            if (p[1] - p[0]) * len < TIE_TOLERANCE {
                tie |= p[0] > 0.0 && p[1] < 1.0;
                continue;
            }
            push(a + (b - a) * (0.5 * (p[0] + p[1])), &mut cells, &mut tie);
        }
    }
    Itinerary {
        cells,
        word: seg.word(),
        tie,
    }
}

/// Cells of the collision points, in order.
pub fn map_itinerary_of(table: &BilliardTable, epsilon: f64, seg: &TrajectorySegment) -> Itinerary {
    let mut tie = false;
    let cells = seg
        .events
        .iter()
        .map(|e| {
            let look = partition_cell(table, epsilon, e.point);
            tie |= look.tie;
            look.cell
        })
        .collect();
    Itinerary {
        cells,
        word: seg.word(),
        tie,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItineraryCount {
    pub samples: u64,
    pub distinct: u64,
    /// `log(distinct) / T`, a lower estimate of the topological entropy.
    pub estimate: f64,
    pub resampled: u64,
}

fn simulate_sample(
    table: &BilliardTable,
    rng: &mut rand_chacha::ChaCha8Rng,
    stop: Stop,
) -> Option<TrajectorySegment> {
    let (position, dir) = liouville_point(table, rng);
    simulate(table, PhasePoint::new(position, dir), stop).ok()
}

/// Distinct flow itineraries among `samples` segments of duration `time`.
/// Segments with boundary ties are redrawn.
pub fn count_itineraries(
    table: &BilliardTable,
    epsilon: f64,
    samples: u64,
    time: f64,
    seed: u64,
) -> ItineraryCount {
    let drawn = parallel_samples(seed, samples, |rng| {
        let seg = simulate_sample(table, rng, Stop::Time(time))?;
        let it = itinerary_of(table, epsilon, &seg);
        (!it.tie).then(|| it.fingerprint())
    });
    let resampled = drawn.iter().map(|s| s.rejected as u64).sum();
    let set: HashSet<u128> = drawn.into_iter().filter_map(|s| s.value).collect();
    let distinct = set.len() as u64;
    ItineraryCount {
        samples,
        distinct,
        estimate: if distinct > 0 {
            (distinct as f64).ln() / time
        } else {
            0.0
        },
        resampled,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtopBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Entropy band `((1/√5 − c/n) log(2n+1), 2√2 log(2n+1))`.
pub fn htop_bounds(n: u32, c: f64) -> Result<HtopBounds> {
    if n < 2 {
        return Err(Error::InvalidArgument("entropy bounds need n >= 2".into()));
    }
    let n = f64::from(n);
    let log = (2.0 * n + 1.0).ln();
    Ok(HtopBounds {
        lower: (1.0 / 5f64.sqrt() - c / n) * log,
        upper: 2.0 * 2f64.sqrt() * log,
    })
}

/// The constant `c` in the lower bound implied by a worst passage time:
/// one letter per `max_passage` gives speed `1/√5 − c/n`. Clamped at 0.
pub fn lower_constant(n: u32, max_passage: f64) -> f64 {
    (f64::from(n) * (1.0 / 5f64.sqrt() - 1.0 / max_passage)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Positive Lyapunov exponent of the flow (per unit time).
    pub lambda_flow: f64,
    pub lambda_std_err: f64,
    pub mean_free_time: f64,
    /// Exponent per collision, `lambda_flow × mean_free_time`.
    pub h_map: f64,
    pub collisions: u64,
    pub samples: u64,
    pub resampled: u64,
}

fn estimate(
    table: &BilliardTable,
    samples: u64,
    seed: u64,
    stop: Stop,
    min_collisions: u64,
) -> Result<EntropyEstimate> {
    let drawn = parallel_samples(seed, samples, |rng| {
        let seg = simulate_sample(table, rng, stop)?;
        if seg.events.is_empty() {
            return None;
        }
        let est = lyapunov_accumulate(table, FrontState::default(), &seg).ok()?;
        Some((est.front.log_expansion, est.time, est.collisions as u64))
    });
    let resampled = drawn.iter().map(|s| s.rejected as u64).sum();
    let values: Vec<(f64, f64, u64)> = drawn.into_iter().filter_map(|s| s.value).collect();
    let collisions: u64 = values.iter().map(|v| v.2).sum();
    if collisions < min_collisions {
        return Err(Error::InsufficientCollisions {
            got: collisions,
            required: min_collisions,
        });
    }
    let k = values.len() as f64;
    let lambdas: Vec<f64> = values.iter().map(|v| v.0 / v.1).collect();
    let mean = lambdas.iter().sum::<f64>() / k;
    let var = lambdas.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let time: f64 = values.iter().map(|v| v.1).sum();
    let mean_free_time = time / collisions as f64;
    Ok(EntropyEstimate {
        lambda_flow: mean,
        lambda_std_err: (var / k).sqrt(),
        mean_free_time,
        h_map: mean * mean_free_time,
        collisions,
        samples: values.len() as u64,
        resampled,
    })
}

/// Metric entropy of the flow from segments of duration `time`, identified
/// with the positive Lyapunov exponent.
pub fn metric_entropy_flow(
    table: &BilliardTable,
    time: f64,
    samples: u64,
    seed: u64,
) -> Result<EntropyEstimate> {
    estimate(table, samples, seed, Stop::Time(time), MIN_COLLISIONS)
}

/// Metric entropy per collision from segments of `collisions` bounces.
pub fn metric_entropy_map(
    table: &BilliardTable,
    collisions: usize,
    samples: u64,
    seed: u64,
) -> Result<EntropyEstimate> {
    estimate(
        table,
        samples,
        seed,
        Stop::Collisions(collisions),
        MIN_COLLISIONS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector;
    use crate::symbolic::Letter;

    fn table(n: u32) -> BilliardTable {
        BilliardTable::quarter_spacing(n).unwrap()
    }

    #[test]
    fn cell_examples() {
        let t = table(2);
        let e = 0.01;
        let cell = |x, y| partition_cell(&t, e, PlanarPoint::new(x, y)).cell;
        assert_eq!(cell(0.5, 0.5), PartitionCell::Bulk);
        assert_eq!(cell(0.3, e / 2.0), PartitionCell::DPlus(0));
        assert_eq!(cell(0.8, 1.0 - e / 2.0), PartitionCell::DMinus(1));
        assert_eq!(cell(e / 2.0, 0.5), PartitionCell::SPlus);
        assert_eq!(cell(1.0 - e / 2.0, 0.5), PartitionCell::SMinus);
        assert_eq!(cell(e / 2.0 + 3.0, 0.5 - 7.0), PartitionCell::SPlus);
        assert!(partition_cell(&t, e, PlanarPoint::new(e, 0.5)).tie);
    }

    #[test]
    fn corridor_itinerary_reads_as() {
        let t = table(4);
        let p0 = PhasePoint::new(PlanarPoint::new(0.5, 0.5), UnitVector::from_angle(0.0));
        let seg = simulate(&t, p0, Stop::Time(3.0)).unwrap();
        let it = itinerary_of(&t, default_epsilon(&t), &seg);
        assert!(it.cells.iter().all(|c| matches!(
            c,
            PartitionCell::Bulk | PartitionCell::SPlus | PartitionCell::SMinus
        )));
        assert_eq!(it.word, reduce([Letter::a(); 3]));
        assert_eq!(it.induced_word(), it.word);
    }

    #[test]
    fn reversal_reverses_itinerary() {
        let t = table(3);
        let p0 = PhasePoint::new(PlanarPoint::new(0.41, 0.37), UnitVector::from_angle(1.1));
        let seg = simulate(&t, p0, Stop::Time(12.0)).unwrap();
        let back = simulate(&t, seg.final_state.reversed(), Stop::Time(12.0)).unwrap();
        let e = default_epsilon(&t);
        let mut fwd = itinerary_of(&t, e, &seg).cells;
        fwd.reverse();
        assert_eq!(itinerary_of(&t, e, &back).cells, fwd);
    }

    #[test]
    fn itineraries_determine_words() {
        let t = table(4);
        let e = default_epsilon(&t);
        let segs = parallel_samples(3, 300, |rng| simulate_sample(&t, rng, Stop::Time(20.0)));
        for s in segs.iter().filter_map(|s| s.value.as_ref()) {
            let it = itinerary_of(&t, e, s);
            assert_eq!(it.induced_word(), it.word);
        }
    }

    #[test]
    fn counting_basics() {
        let t = table(5);
        let e = default_epsilon(&t);
        let one = count_itineraries(&t, e, 1, 10.0, 1);
        assert_eq!(one.distinct, 1);
        assert_eq!(one.estimate, 0.0);
        let mut last = 0;
        for n in [10, 40, 160] {
            let c = count_itineraries(&t, e, n, 10.0, 1);
            assert!(c.distinct >= last);
            last = c.distinct;
        }
    }

    #[test]
    fn word_count_matches_enumeration() {
        assert_eq!(word_count(1, 2), 12.0);
        assert_eq!(word_count(2, 3), 150.0);
        for len in 2..8 {
            assert_eq!(word_count(3, len), 7.0 * word_count(3, len - 1));
        }
    }

    #[test]
    fn bounds_are_ordered() {
        for n in 2..100 {
            let b = htop_bounds(n, 0.0).unwrap();
            assert!(b.lower < b.upper);
        }
        let n = 1_000_000u32;
        let b = htop_bounds(n, 0.0).unwrap();
        let expected = 2.0 * 2f64.sqrt() * (2e6 + 1f64).ln() / 1e6f64.ln();
        assert!((b.upper / f64::from(n).ln() - expected).abs() < 0.01 * expected);
        assert!(htop_bounds(1, 0.0).is_err());
    }

    #[test]
    fn lyapunov_needs_collisions() {
        let t = table(5);
        let err = metric_entropy_flow(&t, 5.0, 10, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientCollisions { .. }));
    }

    #[test]
    fn lyapunov_is_seed_stable() {
        let t = table(5);
        let a = metric_entropy_flow(&t, 200.0, 200, 1).unwrap();
        let b = metric_entropy_flow(&t, 200.0, 200, 2).unwrap();
        let se = (a.lambda_std_err.powi(2) + b.lambda_std_err.powi(2)).sqrt();
        assert!(
            (a.lambda_flow - b.lambda_flow).abs() < 3.0 * se,
            "{a:?} {b:?}"
        );
        let m = metric_entropy_map(&t, 500, 40, 1).unwrap();
        assert!((m.h_map - m.lambda_flow * m.mean_free_time).abs() < 1e-12);
    }
}

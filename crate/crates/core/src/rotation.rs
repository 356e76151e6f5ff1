//! Rotation vectors on the cone over the ends of the free group.

use serde::{Deserialize, Serialize};

use crate::admissibility::{check_pair, check_sequence, check_triple};
use crate::error::{Error, Result};
use crate::flow::{simulate, PhasePoint, Stop, TrajectorySegment};
use crate::geometry::{BilliardTable, LiftedDisk};
use crate::sampling::{liouville_point, parallel_samples};
use crate::symbolic::{block_decomposition, Letter, ReducedWord};
use crate::variational::{
    minimize_disks, periodic_closure, realize_orbit, BrokenPath, PathMode, PeriodicOrbit,
    RealizedWord, DEFAULT_MAX_EXTENSION, DEFAULT_MAX_ITERATIONS,
};

/// Default number of letters kept for a direction.
pub const DEFAULT_DEPTH: usize = 8;

/// Escape speed in the Cayley graph and the escape direction, stored as a
/// reduced-word prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationVector {
    pub speed: f64,
    pub direction: ReducedWord,
}

impl RotationVector {
    /// The cone vertex.
    pub fn zero() -> Self {
        Self {
            speed: 0.0,
            direction: ReducedWord::empty(),
        }
    }

    /// Average speed of a segment with reduced word `w` over `time`.
    pub fn from_word(w: &ReducedWord, time: f64, depth: usize) -> Self {
        if w.is_empty() || time <= 0.0 {
            return Self::zero();
        }
        Self {
            speed: w.len() as f64 / time,
            direction: w.prefix(depth),
        }
    }

    /// Asymptotic rotation vector of an orbit whose word over one period is `w`.
    ///
    /// Powers of `u c u⁻¹` grow by the cyclic core `c`, so the speed is
    /// `|c| / period` and the direction is read off a high power.
    pub fn periodic(w: &ReducedWord, period: f64, depth: usize) -> Self {
        let core = w.cyclic_core();
        if core.is_empty() || period <= 0.0 {
            return Self::zero();
        }
        let k = depth / core.len() + 2;
        Self {
            speed: core.len() as f64 / period,
            direction: w.pow(k).prefix(depth),
        }
    }

    /// Speed gap and the number of leading direction letters in common.
    pub fn distance(&self, other: &RotationVector) -> (f64, usize) {
        (
            (self.speed - other.speed).abs(),
            self.direction.common_prefix_len(&other.direction),
        )
    }
}

/// Rotation vector of a simulated segment: reduced crossing word over its
/// duration.
pub fn rotation_of_segment(seg: &TrajectorySegment, depth: usize) -> RotationVector {
    RotationVector::from_word(&seg.word(), seg.duration, depth)
}

/// One Liouville sample of the rotation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSample {
    pub index: u64,
    pub collisions: usize,
    pub word_len: usize,
    pub truncated_letters: usize,
    /// Degenerate draws discarded before this one.
    pub resampled: usize,
    pub rotation: RotationVector,
}

/// Rotation vectors of `samples` independent segments of duration `time`.
///
/// Draws that hit a degenerate configuration (grazing collision, endpoint on
/// a wall) are redrawn; slots that exhaust the resampling budget are dropped.
pub fn sample_rotation_set(
    table: &BilliardTable,
    samples: u64,
    time: f64,
    seed: u64,
    depth: usize,
) -> Vec<RotationSample> {
    parallel_samples(seed, samples, |rng| {
        let (position, dir) = liouville_point(table, rng);
        simulate(table, PhasePoint::new(position, dir), Stop::Time(time)).ok()
    })
    .into_iter()
    .filter_map(|s| {
        let seg = s.value?;
        let word = seg.word();
        Some(RotationSample {
            index: s.index,
            collisions: seg.events.len(),
            word_len: word.len(),
            truncated_letters: block_decomposition(&word).truncated_letters(),
            resampled: s.rejected,
            rotation: RotationVector::from_word(&word, seg.duration, depth),
        })
    })
    .collect()
}

/// Largest target speed accepted by [`admissible_vector`].
pub fn admissible_speed_bound(n: u32) -> f64 {
    1.0 / 5f64.sqrt() - 0.5 / f64::from(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleOptions {
    pub depth: usize,
    pub max_extension: usize,
    /// Relative speed error at which the idle-run count is accepted.
    pub speed_tolerance: f64,
}

impl Default for AdmissibleOptions {
    fn default() -> Self {
        Self {
            depth: DEFAULT_DEPTH,
            max_extension: DEFAULT_MAX_EXTENSION,
            speed_tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleVector {
    pub orbit: PeriodicOrbit,
    pub rotation: RotationVector,
    /// Back-and-forth bounce pairs inserted to slow the orbit down.
    pub idle_pairs: usize,
    /// Letters of the realized target prefix.
    pub letters: usize,
}

const IDLE_ADJUSTMENTS: usize = 6;
const IDLE_REPAIRS: usize = 12;

/// Builds a periodic orbit escaping along `target` truncated to `m` letters,
/// slowed down to `speed` by idle runs.
///
/// An idle pair bounces from a scatterer to the one directly above or below
/// it in the same column and back, so its crossings cancel.
pub fn admissible_vector(
    table: &BilliardTable,
    target: &ReducedWord,
    speed: f64,
    m: usize,
    opts: AdmissibleOptions,
) -> Result<AdmissibleVector> {
    let n = table.n();
    let bound = admissible_speed_bound(n);
    if !(speed >= 0.0) || speed > bound {
        return Err(Error::SpeedAboveBound {
            target: speed,
            bound,
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("idle runs need n >= 2".into()));
    }
    if speed == 0.0 || m == 0 || target.is_empty() {
        return idle_orbit(table, opts.depth);
    }
    let word = target.prefix(m);
    let realized = realize_orbit(table, &word)?;
    let mut idle = IdleRuns::new(table, &realized);

    let base = idle.close(0, opts)?;
    let base_period = base.orbit.period;
    let core = base.rotation.speed * base_period;
    if base.rotation.speed < speed {
        return Err(Error::Unrealizable {
            len: word.len(),
            reason: format!(
                "orbit without idle runs already moves at {:.4} < target {speed:.4}",
                base.rotation.speed
            ),
        });
    }
    let pair_time = 2.0 * (1.0 - 2.0 * table.r());
    let mut pairs = ((core / speed - base_period) / pair_time).round().max(0.0) as usize;
    let mut best = base;
    for _ in 0..IDLE_ADJUSTMENTS {
        let close = idle.close(pairs, opts)?;
        let err = (close.rotation.speed - speed).abs() / speed;
        let better = err < (best.rotation.speed - speed).abs() / speed;
        let done = err <= opts.speed_tolerance;
        let per_pair = if pairs > 0 {
            (close.orbit.period - base_period) / pairs as f64
        } else {
            pair_time
        };
        let period = close.orbit.period;
        let core = close.rotation.speed * period;
        if better {
            best = close;
        }
        if done {
            break;
        }
        let next = ((core / speed - base_period) / per_pair).round().max(0.0) as usize;
        if next == pairs {
            break;
        }
        pairs = next;
    }
    Ok(best)
}

/// Period-2 orbit between two scatterers stacked in one column; its word is
/// empty.
fn idle_orbit(table: &BilliardTable, depth: usize) -> Result<AdmissibleVector> {
    let h = table.n() / 2;
    let disks = [LiftedDisk::new(h, 0, 0), LiftedDisk::new(h, 0, 1)];
    let path = minimize_disks(table, &disks, PathMode::Free, DEFAULT_MAX_ITERATIONS)?;
    let orbit = PeriodicOrbit::from_doubling(table, path, depth)?;
    Ok(AdmissibleVector {
        rotation: orbit.rotation.clone(),
        orbit,
        idle_pairs: 0,
        letters: 0,
    })
}

struct IdleRuns<'a> {
    table: &'a BilliardTable,
    realized: &'a RealizedWord,
    /// Sequence positions where a pair may be inserted, with the partner disk.
    slots: Vec<(usize, LiftedDisk)>,
}

impl<'a> IdleRuns<'a> {
    fn new(table: &'a BilliardTable, realized: &'a RealizedWord) -> Self {
        let disks = &realized.sequence.disks;
        let slots = (1..disks.len().saturating_sub(1))
            .filter_map(|k| {
                let d = disks[k];
                if d.disk_id == 0 {
                    return None;
                }
                let up = realized.path.vertices[k].y > table.center(d).y;
                let partner = d.translated(0, if up { 1 } else { -1 });
                (check_pair(table, d, partner)
                    && check_triple(table, disks[k - 1], d, partner)
                    && check_triple(table, partner, d, disks[k + 1]))
                .then_some((k, partner))
            })
            .collect();
        Self {
            table,
            realized,
            slots,
        }
    }

    /// Sequence with `pairs` idle pairs spread evenly over the usable slots,
    /// and the original position of every disk that is not an insertion.
    fn sequence(&self, pairs: usize) -> (Vec<LiftedDisk>, Vec<Option<usize>>) {
        let disks = &self.realized.sequence.disks;
        let mut count = vec![0usize; disks.len()];
        let mut partner = vec![None; disks.len()];
        if !self.slots.is_empty() {
            for j in 0..pairs {
                let (k, p) = self.slots[j * self.slots.len() / pairs % self.slots.len()];
                count[k] += 1;
                partner[k] = Some(p);
            }
        }
        let mut out = Vec::with_capacity(disks.len() + 2 * pairs);
        let mut origin = Vec::with_capacity(out.capacity());
        for (k, &d) in disks.iter().enumerate() {
            out.push(d);
            origin.push(Some(k));
            if let Some(p) = partner[k] {
                for _ in 0..count[k] {
                    out.extend([p, d]);
                    origin.extend([None, None]);
                }
            }
        }
        (out, origin)
    }

    /// Inserts the pairs, checks the slowed segment still crosses exactly the
    /// target walls (dropping slots that disturb it), and closes it up.
    fn close(&mut self, pairs: usize, opts: AdmissibleOptions) -> Result<AdmissibleVector> {
        let table = self.table;
        let target = self.realized.word.letters();
        for _ in 0..IDLE_REPAIRS {
            let (disks, origin) = self.sequence(pairs);
            let path = minimize_disks(table, &disks, PathMode::Free, DEFAULT_MAX_ITERATIONS)?;
            let crossings = path.crossings(table)?;
            let raw: Vec<Letter> = crossings.iter().map(|c| c.letter).collect();
            if raw == target {
                let seq = check_sequence(table, &disks);
                let closure = periodic_closure(table, &seq, opts.max_extension, opts.depth)?;
                return Ok(AdmissibleVector {
                    rotation: closure.orbit.rotation.clone(),
                    orbit: closure.orbit,
                    idle_pairs: pairs,
                    letters: target.len(),
                });
            }
            if pairs == 0 || self.slots.is_empty() {
                break;
            }
            // Drop the slot closest in time to the first disagreeing crossing.
            let bad = raw.iter().zip(target).take_while(|(a, b)| a == b).count();
            let at = crossings.get(bad).map_or(path.length, |c| c.time);
            let mut time = 0.0;
            let mut nearest = (f64::INFINITY, 0);
            for (k, o) in origin.iter().enumerate() {
                if k > 0 {
                    time += path.vertices[k - 1].distance(path.vertices[k]);
                }
                if let Some(i) = o.and_then(|o| self.slots.iter().position(|s| s.0 == o)) {
                    if (time - at).abs() < nearest.0 {
                        nearest = ((time - at).abs(), i);
                    }
                }
            }
            self.slots.remove(nearest.1);
        }
        Err(Error::Unrealizable {
            len: target.len(),
            reason: "idle runs disturb the crossing word".into(),
        })
    }
}

/// Rotation vector of a segment against that of the periodic orbit obtained
/// by closing it up.
#[derive(Debug, Clone, Serialize)]
pub struct DensityCheck {
    pub segment: RotationVector,
    pub periodic: RotationVector,
    pub speed_gap: f64,
    /// Leading letters shared by the two directions.
    pub prefix_depth: usize,
    /// Disks appended to close the segment up.
    pub extension: usize,
    pub duration: f64,
}

/// Closes the scatterer sequence of a simulated segment (including the disk
/// it starts on, if any) and compares rotation vectors.
pub fn density_check(
    table: &BilliardTable,
    seg: &TrajectorySegment,
    max_extension: usize,
    depth: usize,
) -> Result<DensityCheck> {
    let mut disks = Vec::with_capacity(seg.events.len() + 1);
    let (start, dist) = table.nearest_disk(seg.initial.position);
    if (dist - table.r()).abs() < 1e-9 {
        disks.push(start);
    }
    disks.extend(seg.disks());
    compare_closure(
        table,
        &disks,
        &seg.word(),
        seg.duration,
        max_extension,
        depth,
    )
}

/// [`density_check`] for a free-mode broken path.
pub fn density_check_path(
    table: &BilliardTable,
    path: &BrokenPath,
    max_extension: usize,
    depth: usize,
) -> Result<DensityCheck> {
    compare_closure(
        table,
        &path.disks,
        &path.word(table)?,
        path.length,
        max_extension,
        depth,
    )
}

fn compare_closure(
    table: &BilliardTable,
    disks: &[LiftedDisk],
    word: &ReducedWord,
    duration: f64,
    max_extension: usize,
    depth: usize,
) -> Result<DensityCheck> {
    let seq = check_sequence(table, disks);
    if disks.len() < 2 || !seq.is_admissible() {
        return Err(Error::InvalidArgument(
            "segment's scatterer sequence is not admissible".into(),
        ));
    }
    let closure = periodic_closure(table, &seq, max_extension, depth)?;
    let segment = RotationVector::from_word(word, duration, depth);
    let periodic = closure.orbit.rotation;
    let (speed_gap, prefix_depth) = segment.distance(&periodic);
    Ok(DensityCheck {
        segment,
        periodic,
        speed_gap,
        prefix_depth,
        extension: closure.extension.len(),
        duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlanarPoint, UnitVector};
    use crate::symbolic::random_reduced_word;
    use crate::variational::realize_orbit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn short_segment_sits_at_cone_vertex() {
        let t = BilliardTable::new(5, 0.04).unwrap();
        let p0 = PhasePoint::new(PlanarPoint::new(0.5, 0.5), UnitVector::from_angle(0.3));
        let seg = simulate(&t, p0, Stop::Time(0.1)).unwrap();
        assert_eq!(
            rotation_of_segment(&seg, DEFAULT_DEPTH),
            RotationVector::zero()
        );
    }

    #[test]
    fn vertical_bounce_cancels() {
        let t = BilliardTable::new(2, 0.1).unwrap();
        let p0 = PhasePoint::new(
            PlanarPoint::new(0.5, 0.1),
            UnitVector::from_angle(std::f64::consts::FRAC_PI_2),
        );
        let seg = simulate(&t, p0, Stop::Time(1.6)).unwrap();
        assert_eq!(seg.events.len(), 2);
        assert_eq!(rotation_of_segment(&seg, DEFAULT_DEPTH).speed, 0.0);
    }

    #[test]
    fn sampled_speeds_respect_bound() {
        let t = BilliardTable::new(5, 0.04).unwrap();
        let set = sample_rotation_set(&t, 40, 500.0, 9, DEFAULT_DEPTH);
        assert_eq!(set.len(), 40);
        for s in &set {
            assert!(
                s.rotation.speed <= 2.0 * 2f64.sqrt() + 0.05,
                "{}",
                s.rotation.speed
            );
        }
        assert!(sample_rotation_set(&t, 0, 500.0, 9, DEFAULT_DEPTH).is_empty());
        let again = sample_rotation_set(&t, 40, 500.0, 9, DEFAULT_DEPTH);
        let bits = |v: &[RotationSample]| {
            v.iter()
                .map(|s| s.rotation.speed.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&set), bits(&again));
    }

    #[test]
    fn refuses_fast_targets() {
        let t = BilliardTable::quarter_spacing(10).unwrap();
        let w: ReducedWord = "a b3 a".parse().unwrap();
        let err = admissible_vector(&t, &w, 0.41, 3, AdmissibleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SpeedAboveBound { .. }));
    }

    #[test]
    fn zero_target_is_idle() {
        let t = BilliardTable::quarter_spacing(10).unwrap();
        let w: ReducedWord = "a b3 a".parse().unwrap();
        let v = admissible_vector(&t, &w, 0.0, 3, AdmissibleOptions::default()).unwrap();
        assert_eq!(v.rotation, RotationVector::zero());
    }

    #[test]
    fn idle_runs_slow_down_without_turning() {
        let t = BilliardTable::quarter_spacing(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_reduced_word(10, 40, &mut rng);
        let target = 0.3;
        let v = admissible_vector(&t, &w, target, 40, AdmissibleOptions::default()).unwrap();
        assert!(
            (v.rotation.speed - target).abs() <= 0.05 * target,
            "{}",
            v.rotation.speed
        );
        assert_eq!(v.rotation.direction, w.prefix(DEFAULT_DEPTH));
        let s = v.rotation.speed;
        let mut periods = vec![];
        for frac in [0.25, 0.5, 0.75] {
            let slow =
                admissible_vector(&t, &w, frac * s, 40, AdmissibleOptions::default()).unwrap();
            assert!(
                (slow.rotation.speed - frac * s).abs() <= 0.05 * frac * s,
                "{frac}: {}",
                slow.rotation.speed
            );
            assert_eq!(slow.rotation.direction, v.rotation.direction);
            periods.push(slow.orbit.period);
        }
        let ratio = periods[0] / periods[1];
        assert!((ratio - 2.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn periodic_segment_matches_its_closure() {
        let t = BilliardTable::quarter_spacing(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // A segment over one period has the orbit's speed when the period
        // word is cyclically reduced.
        let closed = loop {
            let w = random_reduced_word(5, 12, &mut rng);
            let real = realize_orbit(&t, &w).unwrap();
            let orbit = periodic_closure(&t, &real.sequence, DEFAULT_MAX_EXTENSION, DEFAULT_DEPTH)
                .unwrap()
                .orbit;
            if orbit.word.cyclic_core() == orbit.word {
                break orbit;
            }
        };
        let mut disks = closed.path.disks.clone();
        let PathMode::Periodic { a, b } = closed.path.mode else {
            unreachable!()
        };
        disks.push(disks[0].translated(a, b));
        let path = minimize_disks(
            &t,
            &disks,
            PathMode::Pinned {
                start: closed.path.angles[0],
                end: closed.path.angles[0],
            },
            DEFAULT_MAX_ITERATIONS,
        )
        .unwrap();
        let check = density_check_path(&t, &path, DEFAULT_MAX_EXTENSION, DEFAULT_DEPTH).unwrap();
        assert_eq!(check.extension, 0);
        assert!(check.speed_gap < 1e-9, "{}", check.speed_gap);
        assert_eq!(
            check.prefix_depth,
            check
                .segment
                .direction
                .len()
                .min(check.periodic.direction.len())
        );
    }

    #[test]
    fn closures_approach_longer_segments() {
        let t = BilliardTable::quarter_spacing(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut gaps = vec![];
        for len in [15, 45, 135] {
            let mut total = 0.0;
            for _ in 0..8 {
                let w = random_reduced_word(5, len, &mut rng);
                let real = realize_orbit(&t, &w).unwrap();
                total += density_check_path(&t, &real.path, DEFAULT_MAX_EXTENSION, 1000)
                    .unwrap()
                    .speed_gap;
            }
            gaps.push(total / 8.0);
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    #[test]
    fn near_maximal_speed_on_long_word() {
        let n = 10;
        let t = BilliardTable::quarter_spacing(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = random_reduced_word(n, 200, &mut rng);
        let target = admissible_speed_bound(n);
        let v = admissible_vector(&t, &w, target, 200, AdmissibleOptions::default()).unwrap();
        let c = (1.0 / 5f64.sqrt() - v.rotation.speed) * f64::from(n);
        assert!((v.rotation.speed - target).abs() <= 0.05 * target);
        assert!(c.is_finite() && c < 1.0);
        assert_eq!(v.rotation.direction, w.prefix(DEFAULT_DEPTH));
    }

    #[test]
    fn halving_speed_doubles_period() {
        let n = 10;
        let t = BilliardTable::quarter_spacing(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_reduced_word(n, 60, &mut rng);
        let fast = admissible_vector(&t, &w, 0.3, 60, AdmissibleOptions::default()).unwrap();
        let slow = admissible_vector(&t, &w, 0.15, 60, AdmissibleOptions::default()).unwrap();
        let ratio = slow.orbit.period / fast.orbit.period;
        assert!((ratio - 2.0).abs() < 0.15, "{ratio}");
        assert_eq!(slow.rotation.direction, fast.rotation.direction);
    }
}

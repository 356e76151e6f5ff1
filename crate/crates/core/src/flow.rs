//! Event-driven billiard flow on the lifted table.
//!
//! Free flights are straight lines in the cover plane. The next collision is
//! found by walking the ray in unit-length chunks and testing only the disks
//! of the rows `y = q` the chunk passes within `r` of.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ray_disk_first_hit, reflect, BilliardTable, LiftedDisk, PlanarPoint, UnitVector,
};
use crate::symbolic::{reduce, Letter, ReducedWord};

/// Default free-flight search horizon.
pub const DEFAULT_HORIZON: f64 = 1e3;

/// Chord endpoints closer than this to the interior of a wall are ambiguous.
pub const WALL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub position: PlanarPoint,
    pub velocity: UnitVector,
    pub time: f64,
}

impl PhasePoint {
    pub fn new(position: PlanarPoint, velocity: UnitVector) -> Self {
        Self {
            position,
            velocity,
            time: 0.0,
        }
    }

    /// Same position, velocity flipped, clock reset.
    pub fn reversed(&self) -> Self {
        Self::new(self.position, self.velocity.reversed())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub disk: LiftedDisk,
    pub point: PlanarPoint,
    /// Cosine of the angle between the outgoing velocity and the outward normal.
    pub cos_phi: f64,
    /// Velocity after reflection.
    pub outgoing: UnitVector,
}

/// A free-flight hit before reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Flight time from the ray origin.
    pub tau: f64,
    pub disk: LiftedDisk,
    pub point: PlanarPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub letter: Letter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Time(f64),
    Collisions(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySegment {
    pub initial: PhasePoint,
    pub events: Vec<CollisionEvent>,
    pub crossings: Vec<Crossing>,
    pub final_state: PhasePoint,
    /// Total flow time.
    pub duration: f64,
    /// Σ |Δx₁| over flights.
    pub abs_dx: f64,
    /// Σ |Δx₂| over flights.
    pub abs_dy: f64,
    /// A flight of at least [`DEFAULT_HORIZON`] met no scatterer.
    pub corridor_trapped: bool,
}

impl TrajectorySegment {
    pub fn raw_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.crossings.iter().map(|c| c.letter)
    }

    pub fn word(&self) -> ReducedWord {
        reduce(self.raw_letters())
    }

    /// Vertices of the broken line: start, collision points, end.
    pub fn polyline(&self) -> Vec<PlanarPoint> {
        let mut pts = Vec::with_capacity(self.events.len() + 2);
        pts.push(self.initial.position);
        pts.extend(self.events.iter().map(|e| e.point));
        pts.push(self.final_state.position);
        pts
    }

    pub fn disks(&self) -> Vec<LiftedDisk> {
        self.events.iter().map(|e| e.disk).collect()
    }
}

/// Earliest disk hit along the ray from `origin` within `horizon`, skipping
/// `skip` (the disk just left).
pub fn first_hit(
    table: &BilliardTable,
    origin: PlanarPoint,
    dir: UnitVector,
    horizon: f64,
    skip: Option<LiftedDisk>,
) -> Result<Option<Hit>> {
    let r = table.r();
    let n = f64::from(table.n());
    let (vx, vy) = (dir.x(), dir.y());
    let mut best: Option<Hit> = None;
    let mut t0 = 0.0;
    while t0 < horizon {
        let t1 = (t0 + 1.0).min(horizon);
        let ya = origin.y + vy * t0;
        let yb = origin.y + vy * t1;
        let (ylo, yhi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
        let q_lo = (ylo - r).ceil() as i64;
        let q_hi = (yhi + r).floor() as i64;
        for q in q_lo..=q_hi {
            // Flight times in [t0, t1] with |y(t) - q| <= r.
            let (sa, sb) = if vy.abs() > 1e-15 {
                let u = (q as f64 - r - origin.y) / vy;
                let w = (q as f64 + r - origin.y) / vy;
                (u.min(w).max(t0), u.max(w).min(t1))
            } else {
                (t0, t1)
            };
            if sa > sb {
                continue;
            }
            let xa = origin.x + vx * sa;
            let xb = origin.x + vx * sb;
            let (xlo, xhi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
            let k_lo = ((xlo - r) * n).ceil() as i64;
            let k_hi = ((xhi + r) * n).floor() as i64;
            for k in k_lo..=k_hi {
                let disk = table.disk_at_column(k, q);
                if Some(disk) == skip {
                    continue;
                }
                let center = table.center(disk);
                if let Some(tau) = ray_disk_first_hit(origin, dir, center, r)? {
                    if best.is_none_or(|b| tau < b.tau) {
                        best = Some(Hit {
                            tau,
                            disk,
                            point: origin + dir.as_point() * tau,
                        });
                    }
                }
            }
        }
        if let Some(b) = best {
            if b.tau <= t1 {
                return Ok(Some(b));
            }
        }
        t0 = t1;
    }
    Ok(best.filter(|b| b.tau <= horizon))
}

/// The collision reached from `p` (with reflection applied), or `None` when
/// no scatterer lies within `horizon`.
pub fn next_collision(
    table: &BilliardTable,
    p: &PhasePoint,
    horizon: f64,
    skip: Option<LiftedDisk>,
) -> Result<Option<CollisionEvent>> {
    let Some(hit) = first_hit(table, p.position, p.velocity, horizon, skip)? else {
        return Ok(None);
    };
    let center = table.center(hit.disk);
    let normal = UnitVector::new(hit.point - center).expect("hit point off center");
    let outgoing = reflect(p.velocity, normal)?;
    Ok(Some(CollisionEvent {
        time: p.time + hit.tau,
        disk: hit.disk,
        point: hit.point,
        cos_phi: outgoing.dot(normal),
        outgoing,
    }))
}

fn gap_interior(frac: f64, lo: f64, hi: f64) -> bool {
    frac > lo + WALL_TOLERANCE && frac < hi - WALL_TOLERANCE
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// True when `p` lies on a wall line strictly inside one of its wall segments.
pub fn on_wall(table: &BilliardTable, p: PlanarPoint) -> bool {
    let r = table.r();
    let n = f64::from(table.n());
    if (p.x - p.x.round()).abs() <= WALL_TOLERANCE && gap_interior(frac(p.y), r, 1.0 - r) {
        return true;
    }
    if (p.y - p.y.round()).abs() <= WALL_TOLERANCE {
        let fx = frac(p.x) * n;
        let within = fx - fx.floor();
        return gap_interior(within / n, r, 1.0 / n - r);
    }
    false
}

/// Signed wall crossings of the chord `a → b`, ordered along the chord, as
/// (chord parameter in [0, 1], letter) pairs.
///
/// Integer line `c` counts as crossed when it lies in the half-open range
/// `(min, max]` of the coordinate, which keeps concatenation and reversal
/// consistent when a vertex sits exactly on a line.
pub fn wall_crossings_param(
    table: &BilliardTable,
    a: PlanarPoint,
    b: PlanarPoint,
) -> Result<Vec<(f64, Letter)>> {
    let mut out = Vec::new();
    wall_crossings_into(table, a, b, &mut out)?;
    Ok(out)
}

/// [`wall_crossings_param`] writing into a caller-owned buffer, which is
/// cleared first.
pub fn wall_crossings_into(
    table: &BilliardTable,
    a: PlanarPoint,
    b: PlanarPoint,
    out: &mut Vec<(f64, Letter)>,
) -> Result<()> {
    out.clear();
    if on_wall(table, a) || on_wall(table, b) {
        return Err(Error::EndpointOnWall);
    }
    let n = table.n();
    let dx = b.x - a.x;
    if dx != 0.0 {
        let lo = a.x.min(b.x);
        let hi = a.x.max(b.x);
        let mut c = lo.floor() + 1.0;
        while c <= hi {
            let s = (c - a.x) / dx;
            out.push((
                s,
                if dx > 0.0 {
                    Letter::a()
                } else {
                    Letter::a_inv()
                },
            ));
            c += 1.0;
        }
    }
    let dy = b.y - a.y;
    if dy != 0.0 {
        let lo = a.y.min(b.y);
        let hi = a.y.max(b.y);
        let mut c = lo.floor() + 1.0;
        while c <= hi {
            let s = (c - a.y) / dy;
            let x = a.x + dx * s;
            let i = ((frac(x) * f64::from(n)).floor() as u32).min(n - 1) + 1;
            out.push((
                s,
                if dy > 0.0 {
                    Letter::b(i)
                } else {
                    Letter::b_inv(i)
                },
            ));
            c += 1.0;
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(())
}

/// Ordered letters for the wall crossings of the chord `a → b`.
pub fn wall_crossings(
    table: &BilliardTable,
    a: PlanarPoint,
    b: PlanarPoint,
) -> Result<Vec<Letter>> {
    Ok(wall_crossings_param(table, a, b)?
        .into_iter()
        .map(|(_, l)| l)
        .collect())
}

struct Recorder<'a> {
    table: &'a BilliardTable,
    crossings: Vec<Crossing>,
    abs_dx: f64,
    abs_dy: f64,
}

impl Recorder<'_> {
    fn flight(&mut self, from: PlanarPoint, to: PlanarPoint, t_from: f64, t_to: f64) -> Result<()> {
        for (s, letter) in wall_crossings_param(self.table, from, to)? {
            self.crossings.push(Crossing {
                time: t_from + s * (t_to - t_from),
                letter,
            });
        }
        self.abs_dx += (to.x - from.x).abs();
        self.abs_dy += (to.y - from.y).abs();
        Ok(())
    }
}

/// Integrates the flow from `p0` until `stop`.
///
/// `skip` names a disk the start point sits on (so it is not hit at τ = 0).
pub fn simulate_from(
    table: &BilliardTable,
    p0: PhasePoint,
    stop: Stop,
    skip: Option<LiftedDisk>,
) -> Result<TrajectorySegment> {
    let mut rec = Recorder {
        table,
        crossings: Vec::new(),
        abs_dx: 0.0,
        abs_dy: 0.0,
    };
    let mut events = Vec::new();
    let mut state = p0;
    let mut last_disk = skip;
    let mut corridor_trapped = false;
    loop {
        let horizon = match stop {
            Stop::Time(t) => {
                let remaining = t - state.time;
                if remaining <= 0.0 {
                    break;
                }
                remaining
            }
            Stop::Collisions(count) => {
                if events.len() >= count {
                    break;
                }
                DEFAULT_HORIZON
            }
        };
        match next_collision(table, &state, horizon, last_disk)? {
            Some(ev) => {
                rec.flight(state.position, ev.point, state.time, ev.time)?;
                state = PhasePoint {
                    position: ev.point,
                    velocity: ev.outgoing,
                    time: ev.time,
                };
                last_disk = Some(ev.disk);
                events.push(ev);
            }
            None => {
                let end = state.position + state.velocity.as_point() * horizon;
                rec.flight(state.position, end, state.time, state.time + horizon)?;
                if horizon >= DEFAULT_HORIZON {
                    corridor_trapped = true;
                }
                let time = match stop {
                    Stop::Time(t) => t,
                    Stop::Collisions(_) => state.time + horizon,
                };
                state = PhasePoint {
                    position: end,
                    velocity: state.velocity,
                    time,
                };
                if matches!(stop, Stop::Collisions(_)) {
                    break;
                }
            }
        }
    }
    Ok(TrajectorySegment {
        initial: p0,
        duration: state.time - p0.time,
        events,
        crossings: rec.crossings,
        final_state: state,
        abs_dx: rec.abs_dx,
        abs_dy: rec.abs_dy,
        corridor_trapped,
    })
}

pub fn simulate(table: &BilliardTable, p0: PhasePoint, stop: Stop) -> Result<TrajectorySegment> {
    let skip = table_disk_under(table, p0.position);
    simulate_from(table, p0, stop, skip)
}

/// The disk whose boundary `p` lies on, if any (within 1e-9).
fn table_disk_under(table: &BilliardTable, p: PlanarPoint) -> Option<LiftedDisk> {
    let (d, dist) = table.nearest_disk(p);
    ((dist - table.r()).abs() < 1e-9).then_some(d)
}

/// A point of the collision space: disk lift, boundary angle and the
/// outgoing direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub disk: LiftedDisk,
    pub psi: f64,
    pub direction: UnitVector,
}

impl BoundaryPoint {
    pub fn position(&self, table: &BilliardTable) -> PlanarPoint {
        table.center(self.disk) + UnitVector::from_angle(self.psi).as_point() * table.r()
    }

    pub fn normal(&self) -> UnitVector {
        UnitVector::from_angle(self.psi)
    }

    /// Time reversal in collision space: `(ψ, v_out) ↦ (ψ, −v_in)`.
    pub fn time_reversed(&self) -> Result<BoundaryPoint> {
        let incoming = reflect(self.direction, self.normal())?;
        Ok(BoundaryPoint {
            direction: incoming.reversed(),
            ..*self
        })
    }
}

/// Result of one step of the collision map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapStep {
    pub next: BoundaryPoint,
    pub flight_time: f64,
    pub cos_phi: f64,
}

/// Free flight to the next scatterer followed by reflection.
pub fn collision_map(table: &BilliardTable, x: &BoundaryPoint, horizon: f64) -> Result<MapStep> {
    if x.direction.dot(x.normal()) <= 0.0 {
        return Err(Error::InvalidArgument(
            "outgoing direction must point out of the disk".into(),
        ));
    }
    let start = PhasePoint::new(x.position(table), x.direction);
    let ev = next_collision(table, &start, horizon, Some(x.disk))?
        .ok_or(Error::NoCollisionWithinHorizon { horizon })?;
    let rel = ev.point - table.center(ev.disk);
    Ok(MapStep {
        next: BoundaryPoint {
            disk: ev.disk,
            psi: rel.y.atan2(rel.x),
            direction: ev.outgoing,
        },
        flight_time: ev.time,
        cos_phi: ev.cos_phi,
    })
}

/// Curvature and accumulated log-dilation of an expanding orthogonal front.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrontState {
    pub kappa: f64,
    pub log_expansion: f64,
}

impl FrontState {
    /// Free flight of duration `tau`.
    pub fn fly(&mut self, tau: f64) {
        let growth = 1.0 + tau * self.kappa;
        self.log_expansion += growth.ln();
        self.kappa /= growth;
    }

    /// Reflection off a disk of radius `r` at incidence `cos_phi`.
    pub fn collide(&mut self, r: f64, cos_phi: f64) {
        self.kappa += 2.0 / (r * cos_phi);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub front: FrontState,
    pub collisions: usize,
    pub time: f64,
}

/// Positive Lyapunov exponent along a simulated segment via the curvature
/// cocycle of the unstable front.
pub fn lyapunov_accumulate(
    table: &BilliardTable,
    initial: FrontState,
    seg: &TrajectorySegment,
) -> Result<LyapunovEstimate> {
    if initial.kappa < 0.0 {
        return Err(Error::InvalidArgument(
            "initial curvature must be >= 0".into(),
        ));
    }
    let mut front = initial;
    let mut t = seg.initial.time;
    for ev in &seg.events {
        if ev.cos_phi < crate::geometry::GRAZING_TOLERANCE {
            return Err(Error::Grazing {
                cos_phi: ev.cos_phi,
            });
        }
        front.fly(ev.time - t);
        front.collide(table.r(), ev.cos_phi);
        t = ev.time;
    }
    front.fly(seg.final_state.time - t);
    let time = seg.duration;
    Ok(LyapunovEstimate {
        lambda: if time > 0.0 {
            front.log_expansion / time
        } else {
            0.0
        },
        front,
        collisions: seg.events.len(),
        time,
    })
}

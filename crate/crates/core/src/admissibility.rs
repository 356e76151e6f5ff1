//! Admissible scatterer sequences and the construction of sequences that
//! realize a prescribed reduced word.

use std::cell::RefCell;
use std::collections::HashMap;

use rustc_hash::FxHashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flow::wall_crossings_into;
use crate::geometry::{disk_meets_stadium, BilliardTable, LiftedDisk, PlanarPoint};
use crate::symbolic::{Letter, LetterKind, ReducedWord};

/// Lifted disks whose centers come within `margin` (in each coordinate
/// separately, row by row) of the segment `[a, b]`.
pub fn disks_near_segment(
    table: &BilliardTable,
    a: PlanarPoint,
    b: PlanarPoint,
    margin: f64,
) -> Vec<LiftedDisk> {
    let n = f64::from(table.n());
    let mut out = Vec::new();
    let q_lo = (a.y.min(b.y) - margin).ceil() as i64;
    let q_hi = (a.y.max(b.y) + margin).floor() as i64;
    let dy = b.y - a.y;
    for q in q_lo..=q_hi {
        let qf = q as f64;
        let (s0, s1) = if dy.abs() < 1e-300 {
            (0.0, 1.0)
        } else {
            let u = (qf - margin - a.y) / dy;
            let v = (qf + margin - a.y) / dy;
            (u.min(v).max(0.0), u.max(v).min(1.0))
        };
        if s0 > s1 {
            continue;
        }
        let x0 = a.x + (b.x - a.x) * s0;
        let x1 = a.x + (b.x - a.x) * s1;
        let k_lo = ((x0.min(x1) - margin) * n).ceil() as i64;
        let k_hi = ((x0.max(x1) + margin) * n).floor() as i64;
        for k in k_lo..=k_hi {
            out.push(table.disk_at_column(k, q));
        }
    }
    out
}

/// Condition (i): the hull of the two disks meets no other scatterer.
pub fn check_pair(table: &BilliardTable, d1: LiftedDisk, d2: LiftedDisk) -> bool {
    if d1 == d2 {
        return false;
    }
    let r = table.r();
    let c1 = table.center(d1);
    let c2 = table.center(d2);
    disks_near_segment(table, c1, c2, 2.0 * r)
        .into_iter()
        .filter(|&d| d != d1 && d != d2)
        .all(|d| !disk_meets_stadium(table.center(d), c1, c2, r))
}

/// Condition (ii): the middle disk stays off the hull of its neighbors.
pub fn check_triple(
    table: &BilliardTable,
    prev: LiftedDisk,
    mid: LiftedDisk,
    next: LiftedDisk,
) -> bool {
    !disk_meets_stadium(
        table.center(mid),
        table.center(prev),
        table.center(next),
        table.r(),
    )
}

/// Per-index outcome of the pair and triple conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// `pairs[k]` covers `(σ_k, σ_{k+1})`.
    pub pairs: Vec<bool>,
    /// `triples[k]` covers `(σ_k, σ_{k+1}, σ_{k+2})`.
    pub triples: Vec<bool>,
}

impl Certificate {
    pub fn all_pass(&self) -> bool {
        self.pairs.iter().chain(&self.triples).all(|&ok| ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSequence {
    pub disks: Vec<LiftedDisk>,
    pub certificate: Certificate,
}

impl AdmissibleSequence {
    pub fn is_admissible(&self) -> bool {
        self.disks.len() >= 2 && self.certificate.all_pass()
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sequence serialization cannot fail")
    }
}

/// Serialized as a list of `[disk_id, p, q]` triples; the certificate is
/// recomputed on load by the caller via [`check_sequence`].
impl Serialize for AdmissibleSequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let triples: Vec<(u32, i64, i64)> = self
            .disks
            .iter()
            .map(|d| (d.disk_id, d.cell.0, d.cell.1))
            .collect();
        triples.serialize(s)
    }
}

/// Bare disk list as read from JSON.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiskList(pub Vec<LiftedDisk>);

impl<'de> Deserialize<'de> for DiskList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<(u32, i64, i64)>::deserialize(d)?;
        Ok(DiskList(
            triples
                .into_iter()
                .map(|(id, p, q)| LiftedDisk::new(id, p, q))
                .collect(),
        ))
    }
}

pub fn check_sequence(table: &BilliardTable, seq: &[LiftedDisk]) -> AdmissibleSequence {
    let pairs = seq
        .windows(2)
        .map(|w| check_pair(table, w[0], w[1]))
        .collect();
    let triples = seq
        .windows(3)
        .map(|w| check_triple(table, w[0], w[1], w[2]))
        .collect();
    AdmissibleSequence {
        disks: seq.to_vec(),
        certificate: Certificate { pairs, triples },
    }
}

/// Memoized pair checks keyed by the relative lattice offset, which is all
/// that condition (i) depends on. Short offsets use a dense table.
#[derive(Debug, Default)]
pub struct PairCache {
    n: u32,
    dense: Vec<u8>,
    far: HashMap<(u32, u32, i64, i64), bool>,
}

const DENSE_REACH: i64 = 4;
const DENSE_SIDE: i64 = 2 * DENSE_REACH + 1;

impl PairCache {
    pub fn check(&mut self, table: &BilliardTable, d1: LiftedDisk, d2: LiftedDisk) -> bool {
        let (dp, dq) = (d2.cell.0 - d1.cell.0, d2.cell.1 - d1.cell.1);
        if dp.abs() > DENSE_REACH || dq.abs() > DENSE_REACH {
            return *self
                .far
                .entry((d1.disk_id, d2.disk_id, dp, dq))
                .or_insert_with(|| check_pair(table, d1, d2));
        }
        if self.n != table.n() {
            let n = table.n() as usize;
            self.n = table.n();
            self.dense = vec![0; n * n * (DENSE_SIDE * DENSE_SIDE) as usize];
            self.far.clear();
        }
        let n = table.n() as usize;
        let idx = ((d1.disk_id as usize * n + d2.disk_id as usize) * DENSE_SIDE as usize
            + (dp + DENSE_REACH) as usize)
            * DENSE_SIDE as usize
            + (dq + DENSE_REACH) as usize;
        match self.dense[idx] {
            1 => false,
            2 => true,
            _ => {
                let ok = check_pair(table, d1, d2);
                self.dense[idx] = 1 + u8::from(ok);
                ok
            }
        }
    }
}

/// Tuning of the word-realization search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizeOptions {
    /// Required clearance of estimated bounce points from cell walls, in units of r.
    pub vertex_margin: f64,
    /// Required clearance of estimated wall crossings from gap ends, in units of r.
    pub crossing_margin: f64,
    /// States kept per word position and current disk.
    pub beam: usize,
    /// Consider every disk bounding a cell rather than a sparse selection.
    pub all_disks: bool,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            vertex_margin: 0.01,
            crossing_margin: 0.25,
            beam: 64,
            all_disks: false,
        }
    }
}

impl RealizeOptions {
    /// A stricter variant used when a realization fails verification.
    pub fn tightened(self) -> Self {
        Self {
            vertex_margin: self.vertex_margin * 1.8,
            crossing_margin: (self.crossing_margin * 1.6).min(0.9),
            beam: self.beam * 2,
            all_disks: true,
        }
    }
}

fn letter_step(l: Letter) -> (i64, i64) {
    let s = i64::from(l.sign());
    match l.kind() {
        LetterKind::A => (s, 0),
        LetterKind::B => (0, s),
    }
}

/// The lattice cells visited by a word read from `(0, 0)`.
pub fn cell_path(w: &ReducedWord) -> Vec<(i64, i64)> {
    let mut cells = Vec::with_capacity(w.len() + 1);
    let mut c = (0i64, 0i64);
    cells.push(c);
    for &l in w.letters() {
        let (dp, dq) = letter_step(l);
        c = (c.0 + dp, c.1 + dq);
        cells.push(c);
    }
    cells
}

/// Disks on the boundary of cell `cells[i]`. Unless `full`, only the corner
/// and middle disks plus those flanking the gaps of nearby letters are used.
fn cell_candidates(
    table: &BilliardTable,
    cells: &[(i64, i64)],
    letters: &[Letter],
    i: usize,
    full: bool,
) -> Vec<LiftedDisk> {
    let n = i64::from(table.n());
    let h = n / 2;
    let mut offsets: Vec<i64> = if full {
        (0..=n).collect()
    } else {
        let mut o = vec![0, 1, 2, h - 1, h, h + 1, n - 2, n - 1, n];
        for l in &letters[i.saturating_sub(2)..(i + 2).min(letters.len())] {
            if !l.is_a() {
                let j = i64::from(l.index());
                o.extend([j - 2, j - 1, j, j + 1]);
            }
        }
        o
    };
    offsets.retain(|&o| (0..=n).contains(&o));
    offsets.sort_unstable();
    offsets.dedup();
    let (p, q) = cells[i];
    let mut out = Vec::with_capacity(2 * offsets.len());
    for row in [q, q + 1] {
        for &o in &offsets {
            out.push(table.disk_at_column(p * n + o, row));
        }
    }
    out
}

fn unit(v: PlanarPoint) -> Option<PlanarPoint> {
    let len = v.norm();
    (len > 1e-14).then(|| v * (1.0 / len))
}

struct Geometry<'a> {
    table: &'a BilliardTable,
    cells: Vec<(i64, i64)>,
    letters: Vec<Letter>,
    vertex_margin: f64,
    crossing_margin: f64,
    buffer: RefCell<Vec<(f64, Letter)>>,
}

impl Geometry<'_> {
    fn inside_cell(&self, v: PlanarPoint, i: usize) -> bool {
        let (p, q) = self.cells[i];
        let m = self.vertex_margin;
        v.x > p as f64 + m
            && v.x < (p + 1) as f64 - m
            && v.y > q as f64 + m
            && v.y < (q + 1) as f64 - m
    }

    /// Estimated bounce point on `disk` between neighbors `prev` and `next`.
    fn vertex(
        &self,
        disk: LiftedDisk,
        prev: Option<PlanarPoint>,
        next: PlanarPoint,
    ) -> Option<PlanarPoint> {
        let c = self.table.center(disk);
        let dir = match prev {
            Some(pc) => unit(unit(pc - c)? + unit(next - c)?)?,
            None => unit(next - c)?,
        };
        Some(c + dir * self.table.r())
    }

    /// Whether the chord `a → b` between bounces on `ends` crosses exactly
    /// `letters[from..to]`, each crossing clear of the other gap-bounding disks.
    fn chord_matches(
        &self,
        (a, b): (PlanarPoint, PlanarPoint),
        ends: (LiftedDisk, LiftedDisk),
        from: usize,
        to: usize,
    ) -> bool {
        let want = &self.letters[from..to];
        let lines = |u: f64, v: f64| (u.max(v).floor() - u.min(v).floor()) as usize;
        let vertical = lines(a.x, b.x);
        if vertical + lines(a.y, b.y) != want.len()
            || vertical != want.iter().filter(|l| l.is_a()).count()
        {
            return false;
        }
        let mut crossings = self.buffer.borrow_mut();
        if wall_crossings_into(self.table, a, b, &mut crossings).is_err() {
            return false;
        }
        let clearance = self.table.r() * (1.0 + self.crossing_margin);
        crossings.iter().zip(want).all(|(&(s, l), &want)| {
            if l != want {
                return false;
            }
            let (near, dist) = self.table.nearest_disk(a + (b - a) * s);
            near == ends.0 || near == ends.1 || dist > clearance
        })
    }
}

impl Geometry<'_> {
    /// Penalized cost of a chord that already passed `chord_matches`, and the
    /// length left over after its last crossing.
    fn chord_cost(&self, len: f64, since: Option<f64>, from: usize) -> (f64, Option<f64>) {
        let crossings = self.buffer.borrow();
        let n = self.table.n();
        let mut cost = len;
        let mut last = since.map(|t| (t, 0.0));
        for (k, &(s, _)) in crossings.iter().enumerate() {
            if let Some((t, s0)) = last {
                let at = from + k;
                if at > 0 {
                    let tau = t + (s - s0) * len;
                    let excess = tau - passage_target(self.letters[at - 1], self.letters[at], n);
                    if excess > 0.0 {
                        cost += PASSAGE_PENALTY * excess;
                    }
                }
            }
            last = Some((0.0, s));
        }
        let rest = last.map(|(t, s0)| t + (1.0 - s0) * len);
        (cost, rest)
    }
}

/// Extra bounces allowed inside one cell before its exit crossing.
const MAX_EXTRA_BOUNCES: usize = 3;
const SLOTS: usize = MAX_EXTRA_BOUNCES + 1;

/// (previous disk and the word position of its cell, current disk)
type StateKey = (Option<(LiftedDisk, usize)>, LiftedDisk);

#[derive(Debug, Clone, Copy)]
struct Node {
    cost: f64,
    back: Option<(usize, StateKey)>,
    prev_vertex: Option<PlanarPoint>,
    /// Path length since the last wall crossing, once one has happened.
    since: Option<f64>,
}

/// Weight of passage time above the per-case target, relative to length.
const PASSAGE_PENALTY: f64 = 200.0;

/// Target duration of the passage between two consecutive letters.
fn passage_target(x: Letter, y: Letter, n: u32) -> f64 {
    let h = 1.0 / n as f64;
    match (x.is_a(), y.is_a()) {
        (true, true) => 2f64.sqrt() - 0.02,
        (false, false) if x.sign() == y.sign() => 2f64.sqrt() + 2.0 * h,
        (false, false) => 5f64.sqrt() + h,
        _ => 5f64.sqrt(),
    }
}

/// Builds an admissible sequence whose bounce points are expected to realize
/// `w`, with the default search options.
pub fn realize_word(table: &BilliardTable, w: &ReducedWord) -> Result<AdmissibleSequence> {
    realize_word_with(
        table,
        w,
        RealizeOptions::default(),
        &mut PairCache::default(),
    )
}

/// Shortest-path search over the scatterers bounding each visited cell.
///
/// Each step either advances one or two letters (a chord may cut a cell
/// corner) or adds a helper bounce inside the current cell. Bounce points are
/// estimated on the angle bisector towards the neighboring centers and must sit
/// inside the cell of their word position, with every chord crossing exactly
/// the expected walls, in order and clear of the gap ends.
pub fn realize_word_with(
    table: &BilliardTable,
    w: &ReducedWord,
    opts: RealizeOptions,
    pairs: &mut PairCache,
) -> Result<AdmissibleSequence> {
    let len = w.len();
    if len == 0 {
        return Err(Error::InvalidArgument(
            "cannot realize the empty word".into(),
        ));
    }
    let geo = Geometry {
        table,
        cells: cell_path(w),
        letters: w.letters().to_vec(),
        vertex_margin: opts.vertex_margin * table.r(),
        crossing_margin: opts.crossing_margin,
        buffer: RefCell::new(Vec::with_capacity(8)),
    };
    let candidates: Vec<Vec<LiftedDisk>> = (0..=len)
        .map(|i| cell_candidates(table, &geo.cells, &geo.letters, i, opts.all_disks))
        .collect();

    // Slot `i * SLOTS + e`: current disk bounds cell `i`, after `e` helper bounces there.
    let mut layers: Vec<FxHashMap<StateKey, Node>> = vec![FxHashMap::default(); (len + 1) * SLOTS];
    for &d in &candidates[0] {
        layers[0].insert(
            (None, d),
            Node {
                cost: 0.0,
                back: None,
                prev_vertex: None,
                since: None,
            },
        );
    }

    for slot in 0..len * SLOTS {
        let (i, extra) = (slot / SLOTS, slot % SLOTS);
        let mut states: Vec<(StateKey, Node)> = layers[slot].drain().collect();
        states.sort_by(|a, b| {
            (a.0 .1)
                .cmp(&b.0 .1)
                .then(a.1.cost.total_cmp(&b.1.cost))
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut kept = 0;
        states.retain({
            let mut last = None;
            move |(key, _)| {
                if last != Some(key.1) {
                    last = Some(key.1);
                    kept = 0;
                }
                kept += 1;
                kept <= opts.beam
            }
        });
        for (key, node) in &states {
            layers[slot].insert(*key, *node);
        }
        let mut valid_next: FxHashMap<LiftedDisk, [Vec<LiftedDisk>; 3]> = FxHashMap::default();
        for (key, node) in states {
            let (prev, cur) = key;
            let nexts = valid_next.entry(cur).or_insert_with(|| {
                std::array::from_fn(|step| {
                    let j = i + step;
                    if j > len || (step == 0 && extra == MAX_EXTRA_BOUNCES) {
                        return Vec::new();
                    }
                    candidates[j]
                        .iter()
                        .copied()
                        .filter(|&next| next != cur && pairs.check(table, cur, next))
                        .collect()
                })
            });
            let prev_center = prev.map(|(d, _)| table.center(d));
            for (step, list) in nexts.iter().enumerate() {
                let target = if step == 0 {
                    slot + 1
                } else {
                    (i + step) * SLOTS
                };
                for &next in list {
                    if prev.is_some_and(|(d, _)| d == next) {
                        continue;
                    }
                    if let Some((pd, _)) = prev {
                        if !check_triple(table, pd, cur, next) {
                            continue;
                        }
                    }
                    let Some(v) = geo.vertex(cur, prev_center, table.center(next)) else {
                        continue;
                    };
                    if !geo.inside_cell(v, i) {
                        continue;
                    }
                    let mut cost = node.cost;
                    let mut since = node.since;
                    if let (Some((pd, pi)), Some(pv)) = (prev, node.prev_vertex) {
                        if !geo.chord_matches((pv, v), (pd, cur), pi, i) {
                            continue;
                        }
                        let (c, rest) = geo.chord_cost(pv.distance(v), node.since, pi);
                        cost += c;
                        since = rest;
                    }
                    let entry = layers[target]
                        .entry((Some((cur, i)), next))
                        .or_insert(Node {
                            cost: f64::INFINITY,
                            back: None,
                            prev_vertex: None,
                            since: None,
                        });
                    if cost < entry.cost {
                        *entry = Node {
                            cost,
                            back: Some((slot, key)),
                            prev_vertex: Some(v),
                            since,
                        };
                    }
                }
            }
        }
    }

    let r = table.r();
    let mut best: Option<(f64, usize, StateKey)> = None;
    for slot in len * SLOTS..(len + 1) * SLOTS {
        for (&key, node) in &layers[slot] {
            let (Some((pd, pi)), Some(pv)) = (key.0, node.prev_vertex) else {
                continue;
            };
            let c = table.center(key.1);
            let Some(dir) = unit(pv - c) else { continue };
            let v = c + dir * r;
            if !geo.inside_cell(v, len) || !geo.chord_matches((pv, v), (pd, key.1), pi, len) {
                continue;
            }
            let cost = node.cost + geo.chord_cost(pv.distance(v), node.since, pi).0;
            if best.is_none_or(|(b, _, k)| cost < b || (cost == b && key < k)) {
                best = Some((cost, slot, key));
            }
        }
    }
    let Some((_, mut slot, mut key)) = best else {
        return Err(Error::Unrealizable {
            len,
            reason: "search exhausted all bounce candidates".into(),
        });
    };

    let mut disks = vec![key.1];
    while let Some((back_slot, back_key)) = layers[slot][&key].back {
        disks.push(back_key.1);
        slot = back_slot;
        key = back_key;
    }
    disks.reverse();
    let seq = check_sequence(table, &disks);
    debug_assert!(seq.is_admissible());
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_pair(table: &BilliardTable, d1: LiftedDisk, d2: LiftedDisk) -> bool {
        if d1 == d2 {
            return false;
        }
        let r = table.r();
        let (c1, c2) = (table.center(d1), table.center(d2));
        let n = i64::from(table.n());
        let pad = 3.0 * r;
        let (x0, x1) = (c1.x.min(c2.x) - pad, c1.x.max(c2.x) + pad);
        let (y0, y1) = (c1.y.min(c2.y) - pad, c1.y.max(c2.y) + pad);
        for q in (y0.floor() as i64)..=(y1.ceil() as i64) {
            for k in ((x0 * n as f64).floor() as i64)..=((x1 * n as f64).ceil() as i64) {
                let d = table.disk_at_column(k, q);
                if d == d1 || d == d2 {
                    continue;
                }
                let c = table.center(d);
                if c.x < x0 || c.x > x1 || c.y < y0 || c.y > y1 {
                    continue;
                }
                if disk_meets_stadium(c, c1, c2, r) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn pair_examples() {
        let t = BilliardTable::new(2, 0.1).unwrap();
        assert!(!check_pair(
            &t,
            LiftedDisk::new(0, 0, 0),
            LiftedDisk::new(0, 1, 0)
        ));
        assert!(check_pair(
            &t,
            LiftedDisk::new(0, 0, 0),
            LiftedDisk::new(1, 0, 0)
        ));
        assert!(!check_pair(
            &t,
            LiftedDisk::new(1, 0, 0),
            LiftedDisk::new(1, 0, 0)
        ));
    }

    #[test]
    fn pair_matches_brute_force() {
        let t = BilliardTable::new(6, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut blocked = 0;
        for _ in 0..1000 {
            let d1 = LiftedDisk::new(rng.gen_range(0..6), 0, 0);
            let d2 = LiftedDisk::new(
                rng.gen_range(0..6),
                rng.gen_range(-2..=2),
                rng.gen_range(-2..=2),
            );
            let fast = check_pair(&t, d1, d2);
            assert_eq!(fast, brute_pair(&t, d1, d2), "{d1:?} {d2:?}");
            blocked += usize::from(!fast);
        }
        assert!(blocked > 100 && blocked < 900);
    }

    #[test]
    fn triple_examples() {
        let t = BilliardTable::new(4, 0.05).unwrap();
        let row = [
            LiftedDisk::new(0, 0, 0),
            LiftedDisk::new(0, 1, 0),
            LiftedDisk::new(0, 2, 0),
        ];
        assert!(!check_triple(&t, row[0], row[1], row[2]));
        let mid = LiftedDisk::new(2, 0, 0);
        let prev = LiftedDisk::new(0, 0, 0);
        let next = LiftedDisk::new(0, 0, 1);
        let dist =
            crate::geometry::point_segment_distance(t.center(mid), t.center(prev), t.center(next));
        assert!(dist > 0.1);
        assert!(check_triple(&t, prev, mid, next));
        assert!(check_triple(&t, prev, mid, prev));
    }

    #[test]
    fn sequence_certificate_and_invariances() {
        let t = BilliardTable::new(4, 0.05).unwrap();
        let seq = [
            LiftedDisk::new(0, 0, 0),
            LiftedDisk::new(2, 0, 1),
            LiftedDisk::new(0, 1, 0),
            LiftedDisk::new(0, 1, 0),
            LiftedDisk::new(3, 1, 1),
        ];
        let cert = check_sequence(&t, &seq);
        assert!(!cert.is_admissible());
        assert!(!cert.certificate.pairs[2]);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let len = rng.gen_range(2..8);
            let mut s = vec![LiftedDisk::new(rng.gen_range(0..4), 0, 0)];
            for _ in 1..len {
                let last = *s.last().unwrap();
                s.push(LiftedDisk::new(
                    rng.gen_range(0..4),
                    last.cell.0 + rng.gen_range(-1..=1),
                    last.cell.1 + rng.gen_range(-1..=1),
                ));
            }
            let fwd = check_sequence(&t, &s);
            let mut rev = s.clone();
            rev.reverse();
            let bwd = check_sequence(&t, &rev);
            assert_eq!(fwd.is_admissible(), bwd.is_admissible());
            let mut pairs = bwd.certificate.pairs.clone();
            pairs.reverse();
            assert_eq!(fwd.certificate.pairs, pairs);

            let (dp, dq) = (rng.gen_range(-50..50), rng.gen_range(-50..50));
            let moved: Vec<_> = s.iter().map(|d| d.translated(dp, dq)).collect();
            assert_eq!(check_sequence(&t, &moved).certificate, fwd.certificate);
        }
    }

    #[test]
    fn json_is_triples() {
        let t = BilliardTable::new(2, 0.1).unwrap();
        let seq = check_sequence(&t, &[LiftedDisk::new(0, 0, 0), LiftedDisk::new(1, -1, 2)]);
        assert_eq!(seq.to_json(), "[[0,0,0],[1,-1,2]]");
        let back: DiskList = serde_json::from_str(&seq.to_json()).unwrap();
        assert_eq!(back.0, seq.disks);
    }

    #[test]
    fn single_letter_realization() {
        let t = BilliardTable::new(2, 0.1).unwrap();
        let w: ReducedWord = "a".parse().unwrap();
        let seq = realize_word(&t, &w).unwrap();
        assert!(seq.is_admissible());
        assert_eq!(seq.len(), 2);
    }

    #[test]
    fn ceiling_bounce_realization() {
        let t = BilliardTable::new(10, 0.025).unwrap();
        let w: ReducedWord = "b1 B10".parse().unwrap();
        let seq = realize_word(&t, &w).unwrap();
        assert!(seq.is_admissible());
        assert!(seq.disks.iter().any(|d| d.cell.1 == 2), "{:?}", seq.disks);
    }
}

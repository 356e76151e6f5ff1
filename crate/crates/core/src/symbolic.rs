//! Words in the free group `F_{n+1} = π₁(Q_n)` on generators `a, b_1, …, b_n`.
//!
//! Text form: letters separated by spaces, lowercase for a generator and
//! uppercase for its inverse, with the `b` index appended (`"a A b1 B3"`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One generator or inverse generator. `index` 0 is `a`, `index` i ≥ 1 is `b_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    index: u32,
    inverse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LetterKind {
    A,
    B,
}

impl Letter {
    pub const fn a() -> Self {
        Self {
            index: 0,
            inverse: false,
        }
    }

    pub const fn a_inv() -> Self {
        Self {
            index: 0,
            inverse: true,
        }
    }

    /// `b_i`, for `i ≥ 1`.
    pub fn b(i: u32) -> Self {
        assert!(i >= 1, "b-letters are indexed from 1");
        Self {
            index: i,
            inverse: false,
        }
    }

    pub fn b_inv(i: u32) -> Self {
        Self::b(i).inv()
    }

    /// Letter from a generator index (0 for `a`) and a sign.
    pub fn from_parts(index: u32, inverse: bool) -> Self {
        Self { index, inverse }
    }

    pub fn index(self) -> u32 {
        self.index
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    /// +1 for a generator, −1 for an inverse.
    pub fn sign(self) -> i32 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn kind(self) -> LetterKind {
        if self.index == 0 {
            LetterKind::A
        } else {
            LetterKind::B
        }
    }

    pub fn is_a(self) -> bool {
        self.index == 0
    }

    pub fn inv(self) -> Self {
        Self {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    pub fn cancels(self, other: Self) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }

    /// All `2n + 2` letters of `F_{n+1}`.
    pub fn alphabet(n: u32) -> Vec<Letter> {
        (0..=n)
            .flat_map(|i| [Letter::from_parts(i, false), Letter::from_parts(i, true)])
            .collect()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.index, self.inverse) {
            (0, false) => write!(f, "a"),
            (0, true) => write!(f, "A"),
            (i, false) => write!(f, "b{i}"),
            (i, true) => write!(f, "B{i}"),
        }
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidArgument(format!("bad letter {s:?}"));
        match s {
            "a" => Ok(Letter::a()),
            "A" => Ok(Letter::a_inv()),
            _ => {
                let (head, tail) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
                let i: u32 = tail.parse().map_err(|_| bad())?;
                if i == 0 {
                    return Err(bad());
                }
                match head {
                    "b" => Ok(Letter::b(i)),
                    "B" => Ok(Letter::b_inv(i)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl Serialize for Letter {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A freely reduced word: no letter is adjacent to its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

/// Free reduction with a stack; confluent, so the order of cancellation is
/// irrelevant.
pub fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> ReducedWord {
    let mut stack: Vec<Letter> = Vec::new();
    for l in letters {
        if stack.last().is_some_and(|top| top.cancels(l)) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    ReducedWord { letters: stack }
}

impl ReducedWord {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Wraps letters that are already known to be reduced.
    pub fn from_reduced(letters: Vec<Letter>) -> Option<Self> {
        letters
            .windows(2)
            .all(|w| !w[0].cancels(w[1]))
            .then_some(Self { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    pub fn concat_reduce(&self, other: &ReducedWord) -> ReducedWord {
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            if letters.last().is_some_and(|top| top.cancels(l)) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        ReducedWord { letters }
    }

    pub fn push_reduce(&mut self, l: Letter) {
        if self.letters.last().is_some_and(|top| top.cancels(l)) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn pow(&self, k: usize) -> ReducedWord {
        (0..k).fold(ReducedWord::empty(), |acc, _| acc.concat_reduce(self))
    }

    pub fn prefix(&self, depth: usize) -> ReducedWord {
        ReducedWord {
            letters: self.letters[..depth.min(self.len())].to_vec(),
        }
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(x, y)| x == y)
            .count()
    }

    /// Strips the longest `u … u⁻¹` wrapper; the result is cyclically reduced
    /// and has the same growth rate under powers.
    pub fn cyclic_core(&self) -> ReducedWord {
        let l = &self.letters;
        let mut lo = 0;
        let mut hi = l.len();
        while hi - lo >= 2 && l[lo].cancels(l[hi - 1]) {
            lo += 1;
            hi -= 1;
        }
        ReducedWord {
            letters: l[lo..hi].to_vec(),
        }
    }

    /// Largest generator index used (0 when only `a` occurs or empty).
    pub fn max_index(&self) -> u32 {
        self.letters.iter().map(|l| l.index).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<ReducedWord, Error> {
        text.parse()
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for ReducedWord {
    type Err = Error;

    /// Parses the text form and reduces it.
    fn from_str(s: &str) -> Result<Self, Error> {
        let letters = s
            .split_whitespace()
            .map(Letter::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(reduce(letters))
    }
}

impl Serialize for ReducedWord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for ReducedWord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockType {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockType,
    pub len: usize,
}

/// Maximal a-runs and b-runs of a reduced word, truncated to the form
/// `B₁ᵃ B₁ᵇ … B_sᵃ B_sᵇ` (leading b-block and trailing a-block dropped).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    /// Blocks of the truncated word.
    pub blocks: Vec<Block>,
    /// Number of a-letters in the truncated word.
    pub k: usize,
    /// Number of b-letters in the truncated word.
    pub m: usize,
    /// Number of a-blocks in the truncated word.
    pub s: usize,
    /// Letters in the dropped leading b-block (0 if none).
    pub dropped_leading: usize,
    /// Letters in the dropped trailing a-block (0 if none).
    pub dropped_trailing: usize,
}

impl BlockDecomposition {
    pub fn truncated_letters(&self) -> usize {
        self.dropped_leading + self.dropped_trailing
    }
}

pub fn block_decomposition(w: &ReducedWord) -> BlockDecomposition {
    let mut blocks: Vec<Block> = Vec::new();
    for l in w.letters() {
        let kind = if l.is_a() { BlockType::A } else { BlockType::B };
        match blocks.last_mut() {
            Some(b) if b.kind == kind => b.len += 1,
            _ => blocks.push(Block { kind, len: 1 }),
        }
    }
    let mut dropped_leading = 0;
    let mut dropped_trailing = 0;
    if blocks.first().is_some_and(|b| b.kind == BlockType::B) {
        dropped_leading = blocks.remove(0).len;
    }
    if blocks.last().is_some_and(|b| b.kind == BlockType::A) {
        dropped_trailing = blocks.pop().map_or(0, |b| b.len);
    }
    let count =
        |t: BlockType| -> usize { blocks.iter().filter(|b| b.kind == t).map(|b| b.len).sum() };
    BlockDecomposition {
        k: count(BlockType::A),
        m: count(BlockType::B),
        s: blocks.iter().filter(|b| b.kind == BlockType::A).count(),
        blocks,
        dropped_leading,
        dropped_trailing,
    }
}

/// Number of reduced words of length `len` over `F_{n+1}`, as a float
/// (exact while below 2⁵³).
pub fn word_count(n: u32, len: u32) -> f64 {
    if len == 0 {
        return 1.0;
    }
    let base = f64::from(2 * n + 1);
    f64::from(2 * n + 2) * base.powi(len as i32 - 1)
}

/// Exact count as an integer, `None` on overflow.
pub fn word_count_exact(n: u32, len: u32) -> Option<u128> {
    if len == 0 {
        return Some(1);
    }
    let base = u128::from(2 * n + 1);
    let mut acc = u128::from(2 * n + 2);
    for _ in 1..len {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Uniformly random reduced word of the given length.
pub fn random_reduced_word<R: rand::Rng + ?Sized>(n: u32, len: usize, rng: &mut R) -> ReducedWord {
    let alphabet = Letter::alphabet(n);
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = alphabet[rng.gen_range(0..alphabet.len())];
        if letters.last().is_some_and(|p| p.cancels(l)) {
            continue;
        }
        letters.push(l);
    }
    ReducedWord { letters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    /// Repeated left-to-right scans deleting the first cancelling pair until
    /// nothing changes.
    fn reduce_by_scanning(mut letters: Vec<Letter>) -> Vec<Letter> {
        loop {
            let hit = letters.windows(2).position(|p| p[0].cancels(p[1]));
            match hit {
                Some(i) => {
                    letters.drain(i..i + 2);
                }
                None => return letters,
            }
        }
    }

    fn random_letters(n: u32, len: usize, rng: &mut ChaCha8Rng) -> Vec<Letter> {
        let alphabet = Letter::alphabet(n);
        (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect()
    }

    #[test]
    fn reduce_examples() {
        assert!(reduce([Letter::a(), Letter::a_inv()]).is_empty());
        let r = reduce([Letter::a(), Letter::b(1), Letter::b_inv(1), Letter::b(2)]);
        assert_eq!(r.to_text(), "a b2");
    }

    #[test]
    fn stack_reduction_matches_scanning() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            // A small alphabet makes cancellations frequent.
            let letters = random_letters(1, 200, &mut rng);
            assert_eq!(
                reduce(letters.clone()).letters(),
                reduce_by_scanning(letters).as_slice()
            );
        }
    }

    #[test]
    fn text_roundtrip() {
        let word = w("a A b1 B3 b2");
        assert_eq!(word.to_text(), "b1 B3 b2");
        let word = w("a a b10 B3 A b2");
        assert_eq!(word.to_text().parse::<ReducedWord>().unwrap(), word);
        assert!("c1".parse::<ReducedWord>().is_err());
        assert!("b0".parse::<ReducedWord>().is_err());
        assert!("b".parse::<ReducedWord>().is_err());
    }

    #[test]
    fn group_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = random_reduced_word(3, rng.gen_range(0..30), &mut rng);
            assert!(x.concat_reduce(&x.inverse()).is_empty());
            assert_eq!(x.inverse().inverse(), x);
        }
    }

    #[test]
    fn concat_length_matches_cancellation_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x = random_reduced_word(1, rng.gen_range(0..12), &mut rng);
            let y = random_reduced_word(1, rng.gen_range(0..12), &mut rng);
            let cancel = x
                .letters()
                .iter()
                .rev()
                .zip(y.letters())
                .take_while(|(p, q)| p.cancels(**q))
                .count();
            let joined = x.concat_reduce(&y);
            assert_eq!(joined.len(), x.len() + y.len() - 2 * cancel);
            let oracle = reduce(x.letters().iter().chain(y.letters()).copied());
            assert_eq!(joined, oracle);
            assert!(joined.len() >= x.len().abs_diff(y.len()));
        }
    }

    #[test]
    fn block_examples() {
        let d = block_decomposition(&w("a a b1 B3 A b2"));
        let lens: Vec<_> = d.blocks.iter().map(|b| (b.kind, b.len)).collect();
        assert_eq!(
            lens,
            vec![
                (BlockType::A, 2),
                (BlockType::B, 2),
                (BlockType::A, 1),
                (BlockType::B, 1)
            ]
        );
        assert_eq!((d.k, d.m, d.s), (3, 3, 2));
        assert_eq!(d.truncated_letters(), 0);

        let d = block_decomposition(&w("b1 a b2 a"));
        assert_eq!(d.blocks.len(), 2);
        assert_eq!((d.k, d.m, d.s), (1, 1, 1));
        assert_eq!((d.dropped_leading, d.dropped_trailing), (1, 1));

        let d = block_decomposition(&ReducedWord::empty());
        assert!(d.blocks.is_empty());
        assert_eq!((d.k, d.m, d.s), (0, 0, 0));
    }

    #[test]
    fn cyclic_core_strips_conjugation() {
        assert_eq!(w("b1 a b2 B1").cyclic_core().to_text(), "a b2");
        assert_eq!(w("a b1").cyclic_core().to_text(), "a b1");
        let g = w("b1 a b2 B1");
        // |g^k| grows by |core| per power.
        assert_eq!(g.pow(5).len() - g.pow(4).len(), 2);
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count(3, 0), 1.0);
        assert_eq!(word_count(1, 2), 12.0);
        assert_eq!(word_count_exact(2, 3), Some(150));
    }

    fn enumerate_reduced(n: u32, len: usize) -> usize {
        let alphabet = Letter::alphabet(n);
        let mut count = 0;
        let mut stack: Vec<Vec<Letter>> = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == len {
                count += 1;
                continue;
            }
            for &l in &alphabet {
                if prefix.last().is_some_and(|p| p.cancels(l)) {
                    continue;
                }
                let mut next = prefix.clone();
                next.push(l);
                stack.push(next);
            }
        }
        count
    }

    #[test]
    fn word_count_matches_enumeration() {
        for n in 1..=3 {
            for len in 0..=4 {
                assert_eq!(
                    enumerate_reduced(n, len) as u128,
                    word_count_exact(n, len as u32).unwrap()
                );
            }
        }
        for len in 2..8 {
            assert_eq!(word_count(4, len), 9.0 * word_count(4, len - 1));
        }
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(raw in proptest::collection::vec((0u32..3, any::<bool>()), 0..80)) {
            let letters: Vec<Letter> = raw.into_iter().map(|(i, s)| Letter::from_parts(i, s)).collect();
            let once = reduce(letters);
            let twice = reduce(once.letters().to_vec());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn text_form_roundtrips(raw in proptest::collection::vec((0u32..12, any::<bool>()), 0..40)) {
            let word = reduce(raw.into_iter().map(|(i, s)| Letter::from_parts(i, s)));
            let back: ReducedWord = word.to_text().parse().unwrap();
            prop_assert_eq!(back, word);
        }
    }
}

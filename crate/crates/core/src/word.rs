//! Letters, reduced words and infinite reduced words of the free group `F_k`.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the `2k` symbols. Generator `i` is `2i`, its inverse is `2i + 1`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter(pub u8);

impl Letter {
    #[inline]
    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_inverse_letter(self) -> bool {
        self.0 & 1 == 1
    }
}

/// The symmetric generating set of `F_k`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    rank: usize,
}

impl Alphabet {
    pub fn new(rank: usize) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(Error::Input(format!("rank must be in 1..=26, got {rank}")));
        }
        Ok(Alphabet { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of letters, `2k`.
    pub fn size(&self) -> usize {
        2 * self.rank
    }

    /// Number of legal successors of a letter in a reduced word, `2k - 1`.
    pub fn branching(&self) -> usize {
        2 * self.rank - 1
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.size() as u8).map(Letter)
    }

    /// Letters that may follow `prev` in a reduced word.
    pub fn successors(&self, prev: Option<Letter>) -> impl Iterator<Item = Letter> + Clone {
        let forbidden = prev.map(|p| p.inverse());
        self.letters().filter(move |&l| Some(l) != forbidden)
    }

    pub fn check(&self, l: Letter) -> Result<Letter> {
        if l.index() < self.size() {
            Ok(l)
        } else {
            Err(Error::LetterOutOfRange { letter: l.0, rank: self.rank })
        }
    }

    /// Number of reduced words of length `n`.
    pub fn count_words(&self, n: usize) -> usize {
        if n == 0 {
            1
        } else {
            self.size() * self.branching().pow(n as u32 - 1)
        }
    }

    pub fn symbol(&self, l: Letter) -> String {
        let base = (b'a' + (l.0 / 2)) as char;
        if l.is_inverse_letter() {
            format!("{base}'")
        } else {
            base.to_string()
        }
    }

    /// Parses `a`, `a'`, `a⁻¹` or `A` (upper case marks the inverse).
    pub fn parse_letter(&self, token: &str) -> Result<Letter> {
        let unknown = || Error::UnknownSymbol(token.to_string());
        let mut chars = token.chars();
        let head = chars.next().ok_or_else(unknown)?;
        let rest: String = chars.collect();
        let (gen, inv) = if head.is_ascii_lowercase() {
            let inv = match rest.as_str() {
                "" => false,
                "'" | "⁻¹" | "^-1" => true,
                _ => return Err(unknown()),
            };
            (head as u8 - b'a', inv)
        } else if head.is_ascii_uppercase() && rest.is_empty() {
            (head as u8 - b'A', true)
        } else {
            return Err(unknown());
        };
        if gen as usize >= self.rank {
            return Err(unknown());
        }
        Ok(Letter(2 * gen + inv as u8))
    }

    /// Whitespace separated tokens, e.g. `"a b' a"`.
    pub fn parse_letters(&self, text: &str) -> Result<Vec<Letter>> {
        text.split_whitespace().map(|t| self.parse_letter(t)).collect()
    }

    pub fn parse_word(&self, text: &str) -> Result<ReducedWord> {
        reduce_word(self, &self.parse_letters(text)?)
    }

    pub fn format(&self, letters: &[Letter]) -> String {
        letters.iter().map(|&l| self.symbol(l)).collect::<Vec<_>>().join(" ")
    }
}

/// Free reduction of an arbitrary letter sequence.
pub fn reduce_word(alphabet: &Alphabet, letters: &[Letter]) -> Result<ReducedWord> {
    let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        alphabet.check(l)?;
        push_reduced(&mut stack, l);
    }
    Ok(ReducedWord(stack))
}

#[inline]
fn push_reduced(stack: &mut Vec<Letter>, l: Letter) {
    if stack.last() == Some(&l.inverse()) {
        stack.pop();
    } else {
        stack.push(l);
    }
}

/// A vertex of the Cayley tree, i.e. an element of `F_k`. The empty word is
/// the base point.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReducedWord(Vec<Letter>);

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord(Vec::new())
    }

    /// Wraps letters that are already known to be reduced.
    pub fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[1] != w[0].inverse()));
        ReducedWord(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Group product `self * other`.
    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        let mut stack = self.0.clone();
        for &l in &other.0 {
            push_reduced(&mut stack, l);
        }
        ReducedWord(stack)
    }

    pub fn push(&self, l: Letter) -> ReducedWord {
        let mut stack = self.0.clone();
        push_reduced(&mut stack, l);
        ReducedWord(stack)
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        common_prefix(&self.0, &other.0)
    }

    /// Word metric, equal to the tree distance with unit edges.
    pub fn distance(&self, other: &ReducedWord) -> usize {
        self.len() + other.len() - 2 * self.common_prefix_len(other)
    }

    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.0.is_empty() {
            "e".to_string()
        } else {
            alphabet.format(&self.0)
        }
    }
}

pub(crate) fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Rule generating the letters after the explicit head of a boundary word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    /// Repeat one letter forever.
    Repeat(Letter),
    /// Cycle through a cyclically reduced block.
    Periodic(Vec<Letter>),
    /// Uniformly random legal letters from a ChaCha stream; `after` is the
    /// letter preceding the stream in the original word.
    Seeded { seed: u64, after: Option<Letter> },
}

/// An infinite reduced word: `head` followed by the tail stream from position
/// `skip` onwards.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryWord {
    rank: usize,
    head: Vec<Letter>,
    tail: Tail,
    skip: usize,
}

impl BoundaryWord {
    /// Extends a finite word by repeating its last letter (`a a a ...` for
    /// the empty word).
    pub fn extend(alphabet: &Alphabet, word: &ReducedWord) -> BoundaryWord {
        let last = word.last().unwrap_or(Letter(0));
        BoundaryWord { rank: alphabet.rank(), head: word.letters().to_vec(), tail: Tail::Repeat(last), skip: 0 }
    }

    /// Eventually periodic word `prefix cycle cycle ...`.
    pub fn periodic(alphabet: &Alphabet, prefix: &ReducedWord, cycle: &[Letter]) -> Result<BoundaryWord> {
        if cycle.is_empty() {
            return Err(Error::Input("empty period".into()));
        }
        for &l in cycle {
            alphabet.check(l)?;
        }
        let cyclic_ok = (0..cycle.len()).all(|i| cycle[(i + 1) % cycle.len()] != cycle[i].inverse());
        let joins = prefix.last().is_none_or(|l| cycle[0] != l.inverse());
        if !cyclic_ok || !joins {
            return Err(Error::Input("period is not cyclically reduced against its prefix".into()));
        }
        Ok(BoundaryWord { rank: alphabet.rank(), head: prefix.letters().to_vec(), tail: Tail::Periodic(cycle.to_vec()), skip: 0 })
    }

    /// Random word distributed uniformly on cylinders below `prefix`.
    pub fn seeded(alphabet: &Alphabet, prefix: &ReducedWord, seed: u64) -> BoundaryWord {
        BoundaryWord {
            rank: alphabet.rank(),
            head: prefix.letters().to_vec(),
            tail: Tail::Seeded { seed, after: prefix.last() },
            skip: 0,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet { rank: self.rank }
    }

    fn tail_letters(&self, start: usize, n: usize) -> Vec<Letter> {
        match &self.tail {
            Tail::Repeat(l) => vec![*l; n],
            Tail::Periodic(cycle) => (start..start + n).map(|i| cycle[i % cycle.len()]).collect(),
            Tail::Seeded { seed, after } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let size = 2 * self.rank as u8;
                let mut prev = *after;
                let mut out = Vec::with_capacity(n);
                for i in 0..start + n {
                    let mut l = Letter(rng.gen_range(0..size - 1));
                    if let Some(p) = prev {
                        // skip the forbidden letter
                        if l.0 >= p.inverse().0 {
                            l = Letter(l.0 + 1);
                        }
                    } else if rng.gen_bool(1.0 / size as f64) {
                        l = Letter(size - 1);
                    }
                    prev = Some(l);
                    if i >= start {
                        out.push(l);
                    }
                }
                out
            }
        }
    }

    /// The first `n` letters.
    pub fn letters(&self, n: usize) -> Vec<Letter> {
        let mut out: Vec<Letter> = self.head.iter().take(n).copied().collect();
        if out.len() < n {
            out.extend(self.tail_letters(self.skip, n - out.len()));
        }
        out
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord(self.letters(n))
    }

    /// Image under left multiplication by `g`.
    pub fn translate(&self, g: &ReducedWord) -> BoundaryWord {
        let mut stack = g.letters().to_vec();
        for &l in &self.head {
            push_reduced(&mut stack, l);
        }
        let mut skip = self.skip;
        let mut probe = self.tail_letters(skip, g.len() + 1);
        let mut i = 0;
        while let Some(&top) = stack.last() {
            if i == probe.len() {
                probe = self.tail_letters(skip, 2 * probe.len() + 1);
                i = 0;
            }
            if probe[i] == top.inverse() {
                stack.pop();
                skip += 1;
                i += 1;
            } else {
                break;
            }
        }
        BoundaryWord { rank: self.rank, head: stack, tail: self.tail.clone(), skip }
    }

    /// Length of the longest common prefix, or `None` if the words agree on
    /// the first `cap` letters.
    pub fn confluence(&self, other: &BoundaryWord, cap: usize) -> Option<usize> {
        let a = self.letters(cap);
        let b = other.letters(cap);
        let c = common_prefix(&a, &b);
        (c < cap).then_some(c)
    }

    pub fn display(&self, n: usize) -> String {
        format!("{} …", self.alphabet().format(&self.letters(n)))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let alphabet = Alphabet { rank: 26 };
        write!(f, "{}", alphabet.format(&self.0))
    }
}

/// Depth-first enumeration of all reduced words of length `n`, in the same
/// lexicographic order used by [`crate::tree::CylinderIndexer`].
pub fn words_of_length(alphabet: &Alphabet, n: usize) -> Vec<ReducedWord> {
    let mut out = Vec::with_capacity(alphabet.count_words(n));
    let mut buf = Vec::with_capacity(n);
    fn rec(alphabet: &Alphabet, n: usize, buf: &mut Vec<Letter>, out: &mut Vec<ReducedWord>) {
        if buf.len() == n {
            out.push(ReducedWord(buf.clone()));
            return;
        }
        for l in alphabet.successors(buf.last().copied()) {
            buf.push(l);
            rec(alphabet, n, buf, out);
            buf.pop();
        }
    }
    rec(alphabet, n, &mut buf, &mut out);
    out
}

/// All reduced words of length `<= n`, shortest first.
pub fn ball(alphabet: &Alphabet, n: usize) -> Vec<ReducedWord> {
    (0..=n).flat_map(|k| words_of_length(alphabet, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn reduce_examples() {
        let a = f2();
        let w = a.parse_word("a b b' a").unwrap();
        assert_eq!(a.format(w.letters()), "a a");
        assert!(a.parse_word("").unwrap().is_empty());
        assert!(a.parse_word("a a⁻¹").unwrap().is_empty());
        assert_eq!(a.parse_word("A a b").unwrap(), a.parse_word("b").unwrap());
    }

    #[test]
    fn unknown_symbols_rejected() {
        let a = f2();
        assert!(matches!(a.parse_letters("a c"), Err(Error::UnknownSymbol(_))));
        assert!(matches!(a.parse_letters("a*"), Err(Error::UnknownSymbol(_))));
        assert!(reduce_word(&a, &[Letter(7)]).is_err());
    }

    #[test]
    fn inverse_pairing_is_involutive() {
        for l in f2().letters() {
            assert_eq!(l.inverse().inverse(), l);
            assert_ne!(l.inverse(), l);
        }
    }

    #[test]
    fn word_counts() {
        let a = f2();
        for n in 0..6 {
            assert_eq!(words_of_length(&a, n).len(), a.count_words(n));
        }
    }

    #[test]
    fn translate_cancels_into_tail() {
        let a = f2();
        let xi = BoundaryWord::extend(&a, &a.parse_word("a").unwrap()); // a a a ...
        let g = a.parse_word("b a' a'").unwrap();
        let t = xi.translate(&g);
        // b a' a' a a a ... = b a a a ...
        assert_eq!(a.format(&t.letters(4)), "b a a a");
    }

    #[test]
    fn seeded_words_are_reduced_and_deterministic() {
        let a = f2();
        let xi = BoundaryWord::seeded(&a, &a.parse_word("a b").unwrap(), 17);
        let l = xi.letters(200);
        assert!(l.windows(2).all(|w| w[1] != w[0].inverse()));
        assert_eq!(l, xi.letters(200));
        assert_eq!(&l[..2], a.parse_word("a b").unwrap().letters());
    }
}

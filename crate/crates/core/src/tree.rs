//! Metric primitives of the Cayley tree and its boundary: Gromov products,
//! Busemann functions, cylinders, shadows and the visual quasimetric.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{common_prefix, Alphabet, BoundaryWord, Letter, ReducedWord};

/// How many letters are compared before two boundary words are declared equal.
pub const BOUNDARY_CAP: usize = 4096;

/// A point of `H ∪ ∂H`.
#[derive(Clone, Debug, PartialEq)]
pub enum TreePoint {
    Vertex(ReducedWord),
    End(BoundaryWord),
}

impl TreePoint {
    fn translate(&self, g: &ReducedWord) -> TreePoint {
        match self {
            TreePoint::Vertex(w) => TreePoint::Vertex(g.mul(w)),
            TreePoint::End(xi) => TreePoint::End(xi.translate(g)),
        }
    }
}

impl From<ReducedWord> for TreePoint {
    fn from(w: ReducedWord) -> Self {
        TreePoint::Vertex(w)
    }
}

impl From<BoundaryWord> for TreePoint {
    fn from(xi: BoundaryWord) -> Self {
        TreePoint::End(xi)
    }
}

/// `(x·y)_p`: the length of the common part of the geodesics from `p` to `x`
/// and to `y`.
pub fn gromov_product(x: &TreePoint, y: &TreePoint, p: &ReducedWord) -> Result<usize> {
    let pinv = p.inverse();
    let (x, y) = (x.translate(&pinv), y.translate(&pinv));
    Ok(match (&x, &y) {
        (TreePoint::Vertex(a), TreePoint::Vertex(b)) => a.common_prefix_len(b),
        (TreePoint::Vertex(a), TreePoint::End(xi)) | (TreePoint::End(xi), TreePoint::Vertex(a)) => {
            common_prefix(a.letters(), &xi.letters(a.len()))
        }
        (TreePoint::End(a), TreePoint::End(b)) => a.confluence(b, BOUNDARY_CAP).ok_or(Error::InfiniteProduct)?,
    })
}

/// `ρ_ξ(p, q) = lim_{z→ξ} d(q, z) − d(p, z)`.
pub fn busemann(xi: &BoundaryWord, p: &ReducedWord, q: &ReducedWord) -> i64 {
    let z = xi.prefix(p.len() + q.len() + 1);
    q.distance(&z) as i64 - p.distance(&z) as i64
}

/// `π_p(ζ, ν) = e^{−(ζ·ν)_p}`; zero when the words agree up to [`BOUNDARY_CAP`].
pub fn quasimetric_pi(zeta: &BoundaryWord, nu: &BoundaryWord, p: &ReducedWord) -> f64 {
    let pinv = p.inverse();
    match zeta.translate(&pinv).confluence(&nu.translate(&pinv), BOUNDARY_CAP) {
        Some(c) => (-(c as f64)).exp(),
        None => 0.0,
    }
}

/// The set of ends whose infinite reduced word starts with `stem`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cylinder {
    stem: ReducedWord,
}

impl Cylinder {
    pub fn new(stem: ReducedWord) -> Result<Self> {
        if stem.is_empty() {
            return Err(Error::Input("cylinder stem must be nonempty".into()));
        }
        Ok(Cylinder { stem })
    }

    pub fn stem(&self) -> &ReducedWord {
        &self.stem
    }

    pub fn depth(&self) -> usize {
        self.stem.len()
    }

    pub fn contains(&self, xi: &BoundaryWord) -> bool {
        xi.letters(self.depth()) == self.stem.letters()
    }

    pub fn contains_prefix(&self, letters: &[Letter]) -> bool {
        letters.len() >= self.depth() && &letters[..self.depth()] == self.stem.letters()
    }

    pub fn children(&self, alphabet: &Alphabet) -> Vec<Cylinder> {
        alphabet
            .successors(self.stem.last())
            .map(|l| Cylinder { stem: self.stem.push(l) })
            .collect()
    }

    pub fn contains_cylinder(&self, other: &Cylinder) -> bool {
        self.contains_prefix(other.stem.letters())
    }

    pub fn is_disjoint(&self, other: &Cylinder) -> bool {
        !self.contains_cylinder(other) && !other.contains_cylinder(self)
    }
}

/// A finite disjoint union of cylinders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shadow {
    pub cylinders: Vec<Cylinder>,
}

impl Shadow {
    pub fn contains(&self, xi: &BoundaryWord) -> bool {
        self.cylinders.iter().any(|c| c.contains(xi))
    }

    pub fn contains_prefix(&self, letters: &[Letter]) -> bool {
        self.cylinders.iter().any(|c| c.contains_prefix(letters))
    }
}

/// Shadow seen from `p` of the open ball `B(q, r)`, `0 < r ≤ 1`, in
/// coordinates based at the identity.
pub fn shadow(alphabet: &Alphabet, p: &ReducedWord, q: &ReducedWord, r: f64) -> Result<Shadow> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Input(format!("shadow radius must lie in (0,1], got {r}")));
    }
    if p == q {
        return Err(Error::DegenerateShadow);
    }
    let j = p.common_prefix_len(q);
    if j < q.len() {
        return Ok(Shadow { cylinders: vec![Cylinder { stem: q.clone() }] });
    }
    // q lies on the segment from e to p: everything not continuing towards p
    let pl = p.letters();
    let mut cylinders = Vec::new();
    for i in 0..=j {
        let head = &pl[..i];
        for t in alphabet.successors(head.last().copied()) {
            if t != pl[i] {
                let mut stem = head.to_vec();
                stem.push(t);
                cylinders.push(Cylinder { stem: ReducedWord::from_reduced(stem) });
            }
        }
    }
    Ok(Shadow { cylinders })
}

/// Mixed-radix numbering of the depth-`N` cylinders in lexicographic letter
/// order. Every cylinder of depth `≤ N` is a contiguous block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CylinderIndexer {
    alphabet: Alphabet,
    depth: usize,
}

impl CylinderIndexer {
    pub fn new(alphabet: Alphabet, depth: usize) -> Self {
        assert!(depth >= 1, "indexer depth must be positive");
        CylinderIndexer { alphabet, depth }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.alphabet.count_words(self.depth)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    fn choice(prev: Option<Letter>, t: Letter) -> usize {
        match prev {
            None => t.index(),
            Some(p) if t.0 < p.inverse().0 => t.index(),
            Some(_) => t.index() - 1,
        }
    }

    #[inline]
    fn letter(prev: Option<Letter>, c: usize) -> Letter {
        match prev {
            None => Letter(c as u8),
            Some(p) if (c as u8) < p.inverse().0 => Letter(c as u8),
            Some(_) => Letter(c as u8 + 1),
        }
    }

    /// Index of the cylinder containing a word with these leading letters
    /// (at least `depth` of them).
    pub fn index(&self, letters: &[Letter]) -> usize {
        rank_of(&letters[..self.depth], self.alphabet.branching())
    }

    pub fn word(&self, index: usize) -> Vec<Letter> {
        let b = self.alphabet.branching();
        let mut digits = vec![0usize; self.depth];
        let mut rest = index;
        for d in digits.iter_mut().skip(1).rev() {
            *d = rest % b;
            rest /= b;
        }
        digits[0] = rest;
        let mut out = Vec::with_capacity(self.depth);
        let mut prev = None;
        for c in digits {
            let l = Self::letter(prev, c);
            out.push(l);
            prev = Some(l);
        }
        out
    }

    /// Index block of the cylinder with this stem, `1 ≤ |stem| ≤ depth`.
    pub fn block(&self, stem: &[Letter]) -> Range<usize> {
        assert!(!stem.is_empty() && stem.len() <= self.depth);
        let b = self.alphabet.branching();
        let width = b.pow((self.depth - stem.len()) as u32);
        let start = rank_of(stem, b) * width;
        start..start + width
    }
}

pub(crate) fn rank_of(letters: &[Letter], b: usize) -> usize {
    let mut idx = 0usize;
    let mut prev = None;
    for (i, &l) in letters.iter().enumerate() {
        let c = CylinderIndexer::choice(prev, l);
        idx = if i == 0 { c } else { idx * b + c };
        prev = Some(l);
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::words_of_length;

    fn f2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn end(a: &Alphabet, s: &str) -> BoundaryWord {
        BoundaryWord::extend(a, &a.parse_word(s).unwrap())
    }

    #[test]
    fn gromov_examples() {
        let a = f2();
        let e = ReducedWord::identity();
        let x = TreePoint::End(end(&a, "a b"));
        let y = TreePoint::End(end(&a, "a b'"));
        assert_eq!(gromov_product(&x, &y, &e).unwrap(), 1);
        let x = TreePoint::Vertex(a.parse_word("a b").unwrap());
        let y = TreePoint::Vertex(a.parse_word("a b'").unwrap());
        assert_eq!(gromov_product(&x, &y, &e).unwrap(), 1);
        let same = TreePoint::End(end(&a, "a"));
        assert!(matches!(gromov_product(&same, &same, &e), Err(Error::InfiniteProduct)));
    }

    #[test]
    fn busemann_examples() {
        let a = f2();
        let xi = end(&a, "a");
        let e = ReducedWord::identity();
        assert_eq!(busemann(&xi, &e, &a.parse_word("a").unwrap()), -1);
        assert_eq!(busemann(&xi, &e, &a.parse_word("b").unwrap()), 1);
        assert_eq!(busemann(&xi, &e, &a.parse_word("a b").unwrap()), 0);
    }

    #[test]
    fn quasimetric_examples() {
        let a = f2();
        let e = ReducedWord::identity();
        let v = quasimetric_pi(&end(&a, "a b"), &end(&a, "a b'"), &e);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(quasimetric_pi(&end(&a, "a"), &end(&a, "b"), &e), 1.0);
        assert_eq!(quasimetric_pi(&end(&a, "a"), &end(&a, "a"), &e), 0.0);
    }

    #[test]
    fn shadow_examples() {
        let a = f2();
        let e = ReducedWord::identity();
        let ab = a.parse_word("a b").unwrap();
        assert_eq!(shadow(&a, &e, &ab, 0.5).unwrap().cylinders, vec![Cylinder::new(ab).unwrap()]);
        let sa = a.parse_word("a").unwrap();
        let s = shadow(&a, &sa, &e, 0.5).unwrap();
        let stems: Vec<String> = s.cylinders.iter().map(|c| c.stem().display(&a)).collect();
        assert_eq!(stems, vec!["a'", "b", "b'"]);
        assert!(matches!(shadow(&a, &sa, &sa, 0.5), Err(Error::DegenerateShadow)));
    }

    #[test]
    fn shadow_matches_ray_oracle() {
        // an end lies in the shadow iff the ray from p to it passes through q
        let a = f2();
        for p in crate::word::ball(&a, 3) {
            for q in crate::word::ball(&a, 3) {
                if p == q {
                    continue;
                }
                let s = shadow(&a, &p, &q, 0.5).unwrap();
                for w in words_of_length(&a, 5) {
                    let xi = BoundaryWord::extend(&a, &w);
                    let u = p.inverse().mul(&q);
                    let through = p.inverse().mul(&xi.prefix(12)).letters().starts_with(u.letters());
                    assert_eq!(s.contains(&xi), through, "p={p} q={q} w={w}");
                }
            }
        }
    }

    #[test]
    fn indexer_roundtrip_and_blocks() {
        let a = f2();
        let ix = CylinderIndexer::new(a, 4);
        let words = words_of_length(&a, 4);
        assert_eq!(words.len(), ix.len());
        for (i, w) in words.iter().enumerate() {
            assert_eq!(ix.index(w.letters()), i);
            assert_eq!(ix.word(i), w.letters());
        }
        for stem in words_of_length(&a, 2) {
            let block = ix.block(stem.letters());
            for i in block.clone() {
                assert!(ix.word(i).starts_with(stem.letters()));
            }
            assert_eq!(block.len(), 9);
        }
    }

    #[test]
    fn cylinders_nested_or_disjoint() {
        let a = f2();
        let cyls: Vec<Cylinder> =
            crate::word::ball(&a, 3).into_iter().filter(|w| !w.is_empty()).map(|w| Cylinder::new(w).unwrap()).collect();
        for c in &cyls {
            for d in &cyls {
                let nested = c.contains_cylinder(d) || d.contains_cylinder(c);
                assert!(nested ^ c.is_disjoint(d));
            }
        }
    }
}

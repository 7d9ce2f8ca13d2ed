//! Proof shapes: sequences of slowdown (`D`) and speedup (`S`) applications.
//!
//! The block-count trace `m` starts at 0 after the anchoring `D`. `S` maps
//! `0 → 2` and `m → m+1` otherwise; a later `D` needs `m ≥ 1` and maps
//! `m → m−1`. A shape is closable when it ends in `D` with `m ∈ {0, 1}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    D,
    S,
}

impl Tag {
    pub fn as_char(self) -> char {
        match self {
            Tag::D => 'D',
            Tag::S => 'S',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("annotation is empty")]
    Empty,
    #[error("unexpected character {ch:?} at position {position}")]
    BadCharacter { position: usize, ch: char },
    #[error("annotation must start with D (the anchoring slowdown)")]
    StartsWithS,
    #[error("slowdown at position {0} applied to a line with no quantifiers")]
    SlowdownOnEmptyPrefix(usize),
    #[error("annotation ends with a speedup")]
    EndsWithSpeedup,
    #[error("annotation ends with {0} quantifier blocks; at most 1 can be closed")]
    UnclosableEnd(usize),
}

/// A validated proof shape.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Annotation {
    tags: Vec<Tag>,
}

impl Annotation {
    pub fn new(tags: Vec<Tag>) -> Result<Self, AnnotationError> {
        check(&tags)?;
        Ok(Annotation { tags })
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn speedups(&self) -> usize {
        self.tags.iter().filter(|&&t| t == Tag::S).count()
    }

    /// Block count after each tag.
    pub fn block_trace(&self) -> Vec<usize> {
        let mut m = 0usize;
        self.tags
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                m = match (i, t) {
                    (0, _) => 0,
                    (_, Tag::S) => step_speedup(m),
                    (_, Tag::D) => m - 1,
                };
                m
            })
            .collect()
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.tags
            .iter()
            .try_for_each(|t| write!(f, "{}", t.as_char()))
    }
}

impl FromStr for Annotation {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        validate(s)
    }
}

fn step_speedup(m: usize) -> usize {
    if m == 0 {
        2
    } else {
        m + 1
    }
}

fn check(tags: &[Tag]) -> Result<(), AnnotationError> {
    match tags.first() {
        None => return Err(AnnotationError::Empty),
        Some(Tag::S) => return Err(AnnotationError::StartsWithS),
        Some(Tag::D) => {}
    }
    let mut m = 0usize;
    for (i, &t) in tags.iter().enumerate().skip(1) {
        m = match t {
            Tag::S => step_speedup(m),
            Tag::D if m == 0 => return Err(AnnotationError::SlowdownOnEmptyPrefix(i)),
            Tag::D => m - 1,
        };
    }
    if m > 1 {
        return Err(AnnotationError::UnclosableEnd(m));
    }
    if tags.last() == Some(&Tag::S) {
        return Err(AnnotationError::EndsWithSpeedup);
    }
    Ok(())
}

pub fn parse_tags(text: &str) -> Result<Vec<Tag>, AnnotationError> {
    text.trim()
        .chars()
        .enumerate()
        .map(|(position, ch)| match ch {
            'D' | 'd' => Ok(Tag::D),
            'S' | 's' => Ok(Tag::S),
            ch => Err(AnnotationError::BadCharacter { position, ch }),
        })
        .collect()
}

pub fn validate(text: &str) -> Result<Annotation, AnnotationError> {
    Annotation::new(parse_tags(text)?)
}

/// Every valid annotation of exactly `length` tags, in lexicographic order
/// with `D < S`.
pub fn enumerate(length: usize) -> Vec<Annotation> {
    let mut out = Vec::new();
    if length == 0 {
        return out;
    }
    let mut prefix = vec![Tag::D];
    extend(&mut prefix, 0, length, &mut out);
    out
}

fn extend(prefix: &mut Vec<Tag>, m: usize, length: usize, out: &mut Vec<Annotation>) {
    let remaining = length - prefix.len();
    if remaining == 0 {
        if m <= 1 && prefix.last() == Some(&Tag::D) {
            out.push(Annotation {
                tags: prefix.clone(),
            });
        }
        return;
    }
    // Each remaining D lowers m by at most one; the last tag must be D.
    if m > remaining + 1 {
        return;
    }
    if m >= 1 {
        prefix.push(Tag::D);
        extend(prefix, m - 1, length, out);
        prefix.pop();
    }
    if remaining >= 2 {
        prefix.push(Tag::S);
        extend(prefix, step_speedup(m), length, out);
        prefix.pop();
    }
}

/// Valid annotations one insertion or one deletion of an `S…D` pair away.
/// Insertion places `S` before original index `p` and `D` before original
/// index `q ≥ p` (so the `S` precedes the `D`); deletion removes an `S` and a
/// later `D`. Output is deduplicated and sorted lexicographically.
pub fn neighbors(a: &Annotation) -> Vec<Annotation> {
    let tags = a.tags();
    let n = tags.len();
    let mut found = BTreeSet::new();
    for p in 0..=n {
        for q in p..=n {
            let mut cand = Vec::with_capacity(n + 2);
            cand.extend_from_slice(&tags[..p]);
            cand.push(Tag::S);
            cand.extend_from_slice(&tags[p..q]);
            cand.push(Tag::D);
            cand.extend_from_slice(&tags[q..]);
            if check(&cand).is_ok() {
                found.insert(cand);
            }
        }
    }
    for i in 0..n {
        if tags[i] != Tag::S {
            continue;
        }
        for j in i + 1..n {
            if tags[j] != Tag::D {
                continue;
            }
            let cand: Vec<Tag> = tags
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i && k != j)
                .map(|(_, &t)| t)
                .collect();
            if check(&cand).is_ok() {
                found.insert(cand);
            }
        }
    }
    found.into_iter().map(|tags| Annotation { tags }).collect()
}

//! Finite group presentations with a point action.
//!
//! A presentation names its generators, lists relation words (in generators
//! and inverses), and gives each generator a permutation of the n quiver
//! points. Words apply left to right: in "s t", s acts first.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("generator {0:?}: point action is not a permutation of 1..{1}")]
    NotAPermutation(String, usize),
    #[error("relation {0:?} does not act as the identity permutation")]
    RelationNotIdentity(String),
}

/// One letter of a word: a generator index and whether it is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Letter {
    pub gen: usize,
    pub inverse: bool,
}

/// A word in the generators, e.g. parsed from ["s", "t^-1"].
pub type Word = Vec<Letter>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPresentation {
    pub n_points: usize,
    pub generators: Vec<String>,
    pub relations: Vec<Word>,
    /// point_action[g][i] = image of point i under generator g (0-based)
    pub point_action: Vec<Vec<usize>>,
}

impl GroupPresentation {
    /// The trivial group acting on n points.
    pub fn trivial(n_points: usize) -> Self {
        GroupPresentation {
            n_points,
            generators: vec![],
            relations: vec![],
            point_action: vec![],
        }
    }

    pub fn new(
        n_points: usize,
        generators: Vec<String>,
        relations: Vec<Word>,
        point_action: Vec<Vec<usize>>,
    ) -> Result<Self, GroupError> {
        assert_eq!(generators.len(), point_action.len());
        for (g, perm) in generators.iter().zip(&point_action) {
            if !is_permutation(perm, n_points) {
                return Err(GroupError::NotAPermutation(g.clone(), n_points));
            }
        }
        let p = GroupPresentation {
            n_points,
            generators,
            relations,
            point_action,
        };
        for rel in &p.relations {
            let perm = p.word_permutation(rel);
            if perm.iter().enumerate().any(|(i, &x)| i != x) {
                return Err(GroupError::RelationNotIdentity(p.word_to_string(rel)));
            }
        }
        Ok(p)
    }

    pub fn gen_index(&self, name: &str) -> Result<usize, GroupError> {
        self.generators
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| GroupError::UnknownGenerator(name.to_string()))
    }

    /// Parses ["s", "t^-1"] into a word.
    pub fn parse_word(&self, letters: &[String]) -> Result<Word, GroupError> {
        letters
            .iter()
            .map(|l| {
                let (name, inverse) = match l.strip_suffix("^-1") {
                    Some(base) => (base, true),
                    None => (l.as_str(), false),
                };
                Ok(Letter {
                    gen: self.gen_index(name)?,
                    inverse,
                })
            })
            .collect()
    }

    pub fn word_to_string(&self, word: &Word) -> String {
        word.iter()
            .map(|l| {
                let mut s = self.generators[l.gen].clone();
                if l.inverse {
                    s.push_str("^-1");
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn generator_perm(&self, gen: usize, inverse: bool) -> Vec<usize> {
        let perm = &self.point_action[gen];
        if !inverse {
            perm.clone()
        } else {
            invert_permutation(perm)
        }
    }

    /// Image of each point under the word (letters applied left to right).
    pub fn word_permutation(&self, word: &Word) -> Vec<usize> {
        let mut current: Vec<usize> = (0..self.n_points).collect();
        for letter in word {
            let step = self.generator_perm(letter.gen, letter.inverse);
            current = current.into_iter().map(|p| step[p]).collect();
        }
        current
    }
}

pub fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

// JSON: {"n_points": 2, "generators": ["t"], "relations": [["t","t"]],
//        "perm": {"t": {"1": 2, "2": 1}}}  (points 1-based)
#[derive(Serialize, Deserialize)]
struct RawPresentation {
    n_points: usize,
    generators: Vec<String>,
    #[serde(default)]
    relations: Vec<Vec<String>>,
    #[serde(default)]
    perm: BTreeMap<String, BTreeMap<String, usize>>,
}

impl Serialize for GroupPresentation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut perm = BTreeMap::new();
        for (g, action) in self.generators.iter().zip(&self.point_action) {
            let map: BTreeMap<String, usize> = action
                .iter()
                .enumerate()
                .filter(|&(i, &img)| i != img)
                .map(|(i, &img)| ((i + 1).to_string(), img + 1))
                .collect();
            perm.insert(g.clone(), map);
        }
        RawPresentation {
            n_points: self.n_points,
            generators: self.generators.clone(),
            relations: self
                .relations
                .iter()
                .map(|w| {
                    w.iter()
                        .map(|l| {
                            let mut s = self.generators[l.gen].clone();
                            if l.inverse {
                                s.push_str("^-1");
                            }
                            s
                        })
                        .collect()
                })
                .collect(),
            perm,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupPresentation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawPresentation::deserialize(deserializer)?;
        let mut point_action = Vec::with_capacity(raw.generators.len());
        for g in &raw.generators {
            let mut perm: Vec<usize> = (0..raw.n_points).collect();
            if let Some(map) = raw.perm.get(g) {
                for (from, to) in map {
                    let from: usize = from.parse().map_err(D::Error::custom)?;
                    if from == 0 || from > raw.n_points || *to == 0 || *to > raw.n_points {
                        return Err(D::Error::custom(format!(
                            "perm entry {from}->{to} out of range for {g:?}"
                        )));
                    }
                    perm[from - 1] = to - 1;
                }
            }
            point_action.push(perm);
        }
        let mut p = GroupPresentation {
            n_points: raw.n_points,
            generators: raw.generators,
            relations: vec![],
            point_action,
        };
        let relations = raw
            .relations
            .iter()
            .map(|w| p.parse_word(w))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        p.relations = relations;
        GroupPresentation::new(p.n_points, p.generators, p.relations, p.point_action)
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2_swap() -> GroupPresentation {
        GroupPresentation::new(
            2,
            vec!["t".into()],
            vec![vec![
                Letter {
                    gen: 0,
                    inverse: false,
                },
                Letter {
                    gen: 0,
                    inverse: false,
                },
            ]],
            vec![vec![1, 0]],
        )
        .unwrap()
    }

    #[test]
    fn relation_permutation_checked() {
        // t with t^2 = e but a 3-cycle action: rejected
        let bad = GroupPresentation::new(
            3,
            vec!["t".into()],
            vec![vec![
                Letter {
                    gen: 0,
                    inverse: false,
                },
                Letter {
                    gen: 0,
                    inverse: false,
                },
            ]],
            vec![vec![1, 2, 0]],
        );
        assert!(matches!(bad, Err(GroupError::RelationNotIdentity(_))));
        assert!(GroupPresentation::new(3, vec![], vec![], vec![]).is_ok());
    }

    #[test]
    fn word_permutation_composes_left_to_right() {
        let p = GroupPresentation::new(
            3,
            vec!["a".into(), "b".into()],
            vec![],
            vec![vec![1, 0, 2], vec![0, 2, 1]],
        )
        .unwrap();
        let w = p.parse_word(&["a".into(), "b".into()]).unwrap();
        // point 0: a sends to 1, b sends 1 to 2
        assert_eq!(p.word_permutation(&w), vec![2, 0, 1]);
        let winv = p.parse_word(&["b^-1".into(), "a^-1".into()]).unwrap();
        let mut comp = p.word_permutation(&w);
        let inv = p.word_permutation(&winv);
        comp = comp.into_iter().map(|x| inv[x]).collect();
        assert_eq!(comp, vec![0, 1, 2]);
    }

    #[test]
    fn json_roundtrip() {
        let p = z2_swap();
        let text = serde_json::to_string(&p).unwrap();
        let back: GroupPresentation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}

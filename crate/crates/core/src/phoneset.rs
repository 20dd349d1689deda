//! Phone inventories and the TIMIT 61→39 folding.
//!
//! An inventory is an ordered list of distinct phone names; a folding map is a
//! total function from a source inventory onto a (smaller) target inventory,
//! with at most one source phone mapped to a discard marker.
//!
//! Folding tables are plain text, one line per group:
//!
//! ```text
//! # full-line comments start with '#'
//! target: source1 source2 ...
//! -: discarded_phone
//! ```
//!
//! Comments must occupy the whole line; a `#` inside a token is part of the
//! token (TIMIT's `h#` is a phone name).

use std::collections::HashMap;
use thiserror::Error;

use crate::labelling::Labelling;

/// Errors from inventory construction, folding-table parsing, and lookups.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PhoneSetError {
    #[error("phone name must be non-empty, lowercase ASCII: {0:?}")]
    InvalidPhoneName(String),
    #[error("duplicate phone name {0:?}")]
    DuplicatePhone(String),
    #[error("unknown label {symbol:?} at position {position}")]
    UnknownLabel { symbol: String, position: usize },
    #[error("label index {label} out of range (inventory size {size}) at position {position}")]
    LabelOutOfRange {
        label: usize,
        size: usize,
        position: usize,
    },
    #[error("folding table line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Ordered set of distinct phone names.
///
/// Indices are assigned in construction order and are stable for the
/// inventory's lifetime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhoneInventory {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl PhoneInventory {
    /// Builds an inventory from a list of names.
    ///
    /// Names are trimmed and lowercased before insertion; empty or non-ASCII
    /// names and duplicates are rejected.
    pub fn new<I, S>(names: I) -> Result<Self, PhoneSetError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut inv = PhoneInventory {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            inv.insert(name.as_ref())?;
        }
        Ok(inv)
    }

    fn insert(&mut self, raw: &str) -> Result<usize, PhoneSetError> {
        let name = normalize_phone(raw)?;
        if self.index.contains_key(&name) {
            return Err(PhoneSetError::DuplicatePhone(name));
        }
        let idx = self.names.len();
        self.index.insert(name.clone(), idx);
        self.names.push(name);
        Ok(idx)
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

/// Normalizes a phone token: trim surrounding whitespace, lowercase.
///
/// Corpus files are plain ASCII with inconsistent surrounding whitespace, so
/// comparison is exact byte equality after this normalization.
fn normalize_phone(raw: &str) -> Result<String, PhoneSetError> {
    let name = raw.trim().to_ascii_lowercase();
    if name.is_empty() || !name.is_ascii() || name.chars().any(|c| c.is_whitespace()) {
        return Err(PhoneSetError::InvalidPhoneName(raw.to_string()));
    }
    Ok(name)
}

/// Total map from a source inventory onto target categories (or discard).
#[derive(Clone, Debug)]
pub struct FoldingMap {
    source: PhoneInventory,
    target: PhoneInventory,
    /// `mapping[source_index]` is the target index, or `None` for discard.
    mapping: Vec<Option<usize>>,
}

impl FoldingMap {
    /// Parses a folding table (see module docs for the format).
    ///
    /// The source inventory is the union of all right-hand phones in first
    /// appearance order; the target inventory is the left-hand categories in
    /// first appearance order. `-` as the target discards its sources.
    pub fn parse(text: &str) -> Result<Self, PhoneSetError> {
        let mut source = PhoneInventory {
            names: Vec::new(),
            index: HashMap::new(),
        };
        let mut target = PhoneInventory {
            names: Vec::new(),
            index: HashMap::new(),
        };
        let mut mapping: Vec<Option<usize>> = Vec::new();

        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line.split_once(':').ok_or(PhoneSetError::Parse {
                line: lineno + 1,
                message: "expected `target: source1 source2 ...`".to_string(),
            })?;
            let lhs = lhs.trim();
            let sources: Vec<&str> = rhs.split_whitespace().collect();
            if sources.is_empty() {
                return Err(PhoneSetError::Parse {
                    line: lineno + 1,
                    message: format!("group {lhs:?} lists no source phones"),
                });
            }

            let target_idx = if lhs == "-" {
                None
            } else {
                let name = normalize_phone(lhs).map_err(|e| PhoneSetError::Parse {
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
                Some(match target.index_of(&name) {
                    Some(idx) => idx,
                    None => target.insert(&name).expect("normalized name"),
                })
            };

            for src in sources {
                let idx = source.insert(src).map_err(|e| PhoneSetError::Parse {
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
                debug_assert_eq!(idx, mapping.len());
                mapping.push(target_idx);
            }
        }

        if source.size() == 0 {
            return Err(PhoneSetError::Parse {
                line: 0,
                message: "folding table defines no phones".to_string(),
            });
        }
        Ok(FoldingMap {
            source,
            target,
            mapping,
        })
    }

    pub fn source(&self) -> &PhoneInventory {
        &self.source
    }

    pub fn target(&self) -> &PhoneInventory {
        &self.target
    }

    /// Target index for a source index, or `None` when the phone is discarded.
    pub fn lookup(&self, source_index: usize) -> Option<usize> {
        self.mapping[source_index]
    }

    /// Target name for a source name, or `Ok(None)` when the phone is discarded.
    pub fn lookup_name(&self, name: &str) -> Result<Option<&str>, PhoneSetError> {
        let idx = self
            .source
            .index_of(name)
            .ok_or_else(|| PhoneSetError::UnknownLabel {
                symbol: name.to_string(),
                position: 0,
            })?;
        Ok(self.mapping[idx].map(|t| self.target.name(t)))
    }

    /// Number of source phones mapped to discard.
    pub fn discard_count(&self) -> usize {
        self.mapping.iter().filter(|m| m.is_none()).count()
    }
}

/// Replaces each label by its folded target, dropping discarded labels.
///
/// Order is preserved; the output length is the input length minus the number
/// of discarded labels. Labels outside the source inventory are an error.
pub fn fold_labelling(map: &FoldingMap, seq: &Labelling) -> Result<Labelling, PhoneSetError> {
    let size = map.source().size();
    let mut out = Vec::with_capacity(seq.len());
    for (position, &label) in seq.iter().enumerate() {
        if label >= size {
            return Err(PhoneSetError::LabelOutOfRange {
                label,
                size,
                position,
            });
        }
        if let Some(target) = map.lookup(label) {
            out.push(target);
        }
    }
    Ok(Labelling::new(out))
}

/// Translates phone names to indices in `inv`, positionally.
pub fn labels_to_indices<S: AsRef<str>>(
    inv: &PhoneInventory,
    names: &[S],
) -> Result<Labelling, PhoneSetError> {
    let mut out = Vec::with_capacity(names.len());
    for (position, name) in names.iter().enumerate() {
        let name = name.as_ref();
        match inv.index_of(name) {
            Some(idx) => out.push(idx),
            None => {
                return Err(PhoneSetError::UnknownLabel {
                    symbol: name.to_string(),
                    position,
                })
            }
        }
    }
    Ok(Labelling::new(out))
}

/// Translates indices back to phone names.
pub fn indices_to_labels(inv: &PhoneInventory, seq: &Labelling) -> Result<Vec<String>, PhoneSetError> {
    seq.iter()
        .enumerate()
        .map(|(position, &label)| {
            if label >= inv.size() {
                Err(PhoneSetError::LabelOutOfRange {
                    label,
                    size: inv.size(),
                    position,
                })
            } else {
                Ok(inv.name(label).to_string())
            }
        })
        .collect()
}

/// The TIMIT folding of 61 transcription phones onto 39 scoring categories.
///
/// Twelve categories absorb 33 phones, the glottal stop `q` is discarded, and
/// the remaining 27 phones map to themselves.
pub const TIMIT_FOLDING_TABLE: &str = "\
# TIMIT 61-phone transcription inventory folded onto 39 scoring categories.
# Grouped categories first, then the discarded glottal stop, then the phones
# that are kept intact.
aa: aa ao
ah: ah ax ax-h
er: er axr
hh: hh hv
ih: ih ix
l: l el
m: m em
n: n en nx
ng: ng eng
sh: sh zh
sil: pcl tcl kcl bcl dcl gcl h# pau epi
uw: uw ux
-: q
ae: ae
aw: aw
ay: ay
b: b
ch: ch
d: d
dh: dh
dx: dx
eh: eh
ey: ey
f: f
g: g
iy: iy
jh: jh
k: k
ow: ow
oy: oy
p: p
r: r
s: s
t: t
th: th
uh: uh
v: v
w: w
y: y
z: z
";

/// Builds the standard TIMIT 61→39 folding map.
pub fn build_timit_folding() -> FoldingMap {
    let map = FoldingMap::parse(TIMIT_FOLDING_TABLE).expect("embedded TIMIT table is well-formed");
    debug_assert_eq!(map.source().size(), 61);
    debug_assert_eq!(map.target().size(), 39);
    debug_assert_eq!(map.discard_count(), 1);
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn timit_folding_counts() {
        let map = build_timit_folding();
        assert_eq!(map.source().size(), 61);
        assert_eq!(map.target().size(), 39);
        assert_eq!(map.discard_count(), 1);
        assert_eq!(map.lookup_name("q").unwrap(), None);

        // 33 phones fold onto one of the 12 grouped categories under a
        // different name, 27 map to themselves, 1 is discarded.
        let mut renamed = 0;
        let mut identity = 0;
        for idx in 0..map.source().size() {
            let name = map.source().name(idx);
            match map.lookup(idx) {
                None => assert_eq!(name, "q"),
                Some(t) => {
                    if map.target().name(t) == name {
                        identity += 1;
                    } else {
                        renamed += 1;
                    }
                }
            }
        }
        // The 12 grouped categories keep their lead phone's name, so those
        // lead phones count as identity mappings here (11 of the 12 category
        // names are themselves TIMIT phones; `sil` is not).
        assert_eq!(renamed + identity + 1, 61);
        assert_eq!(renamed, 33 - 11);
        assert_eq!(identity, 27 + 11);
    }

    #[test]
    fn timit_every_target_is_hit() {
        let map = build_timit_folding();
        let mut hit = vec![false; map.target().size()];
        for idx in 0..map.source().size() {
            if let Some(t) = map.lookup(idx) {
                hit[t] = true;
            }
        }
        assert!(hit.iter().all(|&h| h), "every target category has a source");
    }

    #[test]
    fn timit_lookup_examples() {
        let map = build_timit_folding();
        assert_eq!(map.lookup_name("ux").unwrap(), Some("uw"));
        assert_eq!(map.lookup_name("q").unwrap(), None);
        assert_eq!(map.lookup_name("iy").unwrap(), Some("iy"));
        assert_eq!(map.lookup_name("pcl").unwrap(), Some("sil"));
        assert_eq!(map.lookup_name("ax-h").unwrap(), Some("ah"));
    }

    #[test]
    fn fold_labelling_example() {
        let map = build_timit_folding();
        let seq = labels_to_indices(map.source(), &["pcl", "ax", "q", "ux"]).unwrap();
        let folded = fold_labelling(&map, &seq).unwrap();
        let names = indices_to_labels(map.target(), &folded).unwrap();
        assert_eq!(names, vec!["sil", "ah", "uw"]);
    }

    #[test]
    fn fold_labelling_empty_and_all_discarded() {
        let map = build_timit_folding();
        assert_eq!(
            fold_labelling(&map, &Labelling::empty()).unwrap(),
            Labelling::empty()
        );
        let q = map.source().index_of("q").unwrap();
        let folded = fold_labelling(&map, &Labelling::new(vec![q, q])).unwrap();
        assert!(folded.is_empty());
    }

    #[test]
    fn fold_labelling_out_of_range() {
        let map = build_timit_folding();
        let err = fold_labelling(&map, &Labelling::new(vec![0, 61])).unwrap_err();
        assert_eq!(
            err,
            PhoneSetError::LabelOutOfRange {
                label: 61,
                size: 61,
                position: 1
            }
        );
    }

    #[test]
    fn labels_to_indices_basic() {
        let inv = PhoneInventory::new(["a", "b", "c"]).unwrap();
        let seq = labels_to_indices(&inv, &["c", "a"]).unwrap();
        assert_eq!(seq.labels(), &[2, 0]);
        assert_eq!(
            labels_to_indices(&inv, &[] as &[&str]).unwrap(),
            Labelling::empty()
        );
    }

    #[test]
    fn labels_to_indices_unknown_symbol() {
        let inv = PhoneInventory::new(["a", "b"]).unwrap();
        let err = labels_to_indices(&inv, &["a", "x"]).unwrap_err();
        assert_eq!(
            err,
            PhoneSetError::UnknownLabel {
                symbol: "x".to_string(),
                position: 1
            }
        );
    }

    #[test]
    fn inventory_rejects_duplicates_and_empties() {
        assert!(matches!(
            PhoneInventory::new(["a", "a"]).unwrap_err(),
            PhoneSetError::DuplicatePhone(_)
        ));
        assert!(matches!(
            PhoneInventory::new([""]).unwrap_err(),
            PhoneSetError::InvalidPhoneName(_)
        ));
    }

    #[test]
    fn inventory_normalizes_case_and_whitespace() {
        let inv = PhoneInventory::new(["  IY ", "ih"]).unwrap();
        assert_eq!(inv.index_of("iy"), Some(0));
        assert_eq!(inv.name(0), "iy");
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        let err = FoldingMap::parse("aa aa ao\n").unwrap_err();
        assert!(matches!(err, PhoneSetError::Parse { line: 1, .. }));
        let err = FoldingMap::parse("aa:\n").unwrap_err();
        assert!(matches!(err, PhoneSetError::Parse { line: 1, .. }));
    }

    #[test]
    fn parse_keeps_hash_inside_tokens() {
        let map = FoldingMap::parse("# comment\nsil: h# pau\n").unwrap();
        assert_eq!(map.source().size(), 2);
        assert_eq!(map.lookup_name("h#").unwrap(), Some("sil"));
    }

    #[test]
    fn identity_map_is_idempotent() {
        // source == target: folding is the identity and folding twice equals
        // folding once.
        let table = "a: a\nb: b\nc: c\n";
        let map = FoldingMap::parse(table).unwrap();
        let seq = Labelling::new(vec![2, 0, 1, 1]);
        let once = fold_labelling(&map, &seq).unwrap();
        assert_eq!(once, seq);
        let twice = fold_labelling(&map, &once).unwrap();
        assert_eq!(twice, once);
    }

    proptest! {
        // Surviving labels keep their relative order: the folded sequence is
        // the positional image of the non-discarded subsequence.
        #[test]
        fn fold_preserves_order(seq in prop::collection::vec(0usize..61, 0..64)) {
            let map = build_timit_folding();
            let folded = fold_labelling(&map, &Labelling::new(seq.clone())).unwrap();
            let expected: Vec<usize> =
                seq.iter().filter_map(|&s| map.lookup(s)).collect();
            prop_assert_eq!(folded.labels(), &expected[..]);
        }
    }
}

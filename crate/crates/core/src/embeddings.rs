//! Word vectors, cosine similarity, and the semantic node-equality operator.
//!
//! The table is loaded from the plain textual format (optional `count dim`
//! header, then one `word v1 .. vdim` line per entry); a gzip-compressed
//! variant is detected by magic bytes. Lookups are case-insensitive on
//! lowercased lemmas. The table is immutable after load and all operations
//! here are pure, so unrestricted concurrent reads are safe.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DepTree, Token};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty embedding file")]
    Empty,
    #[error("line {line}: expected {expected} vector components, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unparseable vector component {value:?}")]
    BadComponent { line: usize, value: String },
    #[error("line {line}: non-finite vector component")]
    NonFinite { line: usize },
}

/// Dense word-vector table keyed by lowercased lemma.
#[derive(Debug, Clone)]
pub struct Table<F> {
    dim: usize,
    entries: HashMap<String, Vec<F>>,
}

impl<F: Real> Table<F> {
    /// Build a table from in-memory entries (fixtures, tests).
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (String, Vec<F>)>) -> Self {
        let mut map = HashMap::new();
        for (word, vec) in entries {
            assert_eq!(vec.len(), dim, "vector length must equal dim");
            map.entry(word.to_lowercase()).or_insert(vec);
        }
        Table { dim, entries: map }
    }

    /// Empty table; with the exact-lemma fallback this reduces the semantic
    /// operator to plain lemma equality.
    pub fn empty() -> Self {
        Table {
            dim: 0,
            entries: HashMap::new(),
        }
    }

    /// Load from a reader, transparently inflating gzip input.
    pub fn load<R: Read>(reader: R) -> Result<Self, EmbeddingError> {
        let mut buffered = BufReader::new(reader);
        let head = buffered.fill_buf()?;
        if head.starts_with(&[0x1f, 0x8b]) {
            Self::parse_text(BufReader::new(GzDecoder::new(buffered)))
        } else {
            Self::parse_text(buffered)
        }
    }

    pub fn load_path(path: &std::path::Path) -> Result<Self, EmbeddingError> {
        Self::load(std::fs::File::open(path)?)
    }

    fn parse_text<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut dim: Option<usize> = None;
        let mut entries: HashMap<String, Vec<F>> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line has a first field");
            let rest: Vec<&str> = fields.collect();
            if line_no == 1 && rest.len() == 1 {
                // "count dim" header.
                if let (Ok(_), Ok(d)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                    dim = Some(d);
                    continue;
                }
            }
            let expected = *dim.get_or_insert(rest.len());
            if rest.len() != expected {
                return Err(EmbeddingError::DimMismatch {
                    line: line_no,
                    expected,
                    found: rest.len(),
                });
            }
            let mut vec = Vec::with_capacity(expected);
            for raw in rest {
                let v: f64 = raw.parse().map_err(|_| EmbeddingError::BadComponent {
                    line: line_no,
                    value: raw.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(EmbeddingError::NonFinite { line: line_no });
                }
                vec.push(F::from_f64c(v));
            }
            entries.entry(word.to_lowercase()).or_insert(vec);
        }
        if entries.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(Table {
            dim: dim.unwrap_or(0),
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, lemma: &str) -> Option<&[F]> {
        if let Some(v) = self.entries.get(lemma) {
            return Some(v.as_slice());
        }
        let lower = lemma.to_lowercase();
        self.entries.get(&lower).map(|v| v.as_slice())
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.get(lemma).is_some()
    }

    /// Scale every vector by a constant (used to test scale invariance).
    pub fn scaled(&self, factor: F) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(w, v)| (w.clone(), v.iter().map(|&x| x * factor).collect()))
            .collect();
        Table {
            dim: self.dim,
            entries,
        }
    }
}

/// Behavior of the semantic operator when a lemma has no vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemEqFallback {
    /// Out-of-vocabulary lemmas still match on exact string equality.
    ExactLemma,
    /// Out-of-vocabulary pairs never match.
    Reject,
}

/// Configuration of the semantic node-equality operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemEqConfig<F> {
    /// Cosine threshold at or above which two lemmas count as equal.
    pub threshold: F,
    pub fallback: SemEqFallback,
}

impl<F: Real> Default for SemEqConfig<F> {
    fn default() -> Self {
        SemEqConfig {
            threshold: F::from_f64c(0.75),
            fallback: SemEqFallback::ExactLemma,
        }
    }
}

impl<F: Real> SemEqConfig<F> {
    /// Plain lemma equality, ignoring embeddings entirely.
    pub fn exact() -> Self {
        SemEqConfig {
            threshold: F::one(),
            fallback: SemEqFallback::ExactLemma,
        }
    }
}

/// Cosine similarity; `None` when either vector has zero norm (callers treat
/// the pair as not comparable).
pub fn cosine<F: Real>(a: &[F], b: &[F]) -> Option<F> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let mut dot = F::zero();
    let mut na = F::zero();
    let mut nb = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == F::zero() || nb == F::zero() {
        return None;
    }
    Some(dot / (na * nb).sqrt())
}

/// Semantic equality of two lemmas: embedding cosine at or above the
/// threshold, with an optional exact-string fallback. Symmetric.
pub fn sem_eq_lemmas<F: Real>(
    u: &str,
    v: &str,
    cfg: &SemEqConfig<F>,
    table: &Table<F>,
) -> bool {
    if cfg.fallback == SemEqFallback::ExactLemma && u == v {
        return true;
    }
    match (table.get(u), table.get(v)) {
        (Some(a), Some(b)) => match cosine(a, b) {
            Some(sim) => sim >= cfg.threshold,
            None => false,
        },
        _ => false,
    }
}

/// Semantic equality of two tree nodes (compares lemmas only).
pub fn sem_eq<F: Real>(u: &Token, v: &Token, cfg: &SemEqConfig<F>, table: &Table<F>) -> bool {
    sem_eq_lemmas(&u.lemma, &v.lemma, cfg, table)
}

/// Componentwise sum of the lemma vectors over all nodes of a query tree.
/// Out-of-vocabulary lemmas contribute nothing; `None` when every lemma is
/// out of vocabulary (callers exclude such queries from cosine comparisons).
pub fn query_vector<F: Real>(q: &DepTree, table: &Table<F>) -> Option<Vec<F>> {
    let mut acc: Option<Vec<F>> = None;
    for tok in q.nodes() {
        if let Some(v) = table.get(&tok.lemma) {
            match &mut acc {
                None => acc = Some(v.to_vec()),
                Some(sum) => {
                    for (s, &x) in sum.iter_mut().zip(v) {
                        *s = *s + x;
                    }
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DepTree, TokenKind};
    use approx::assert_relative_eq;
    use std::io::Cursor;

    fn tok(index: usize, lemma: &str, head: usize) -> Token {
        Token {
            index,
            surface: lemma.to_string(),
            lemma: lemma.to_string(),
            upos: "X".into(),
            head,
            deprel: "dep".into(),
            kind: TokenKind::Word,
        }
    }

    fn small_table() -> Table<f64> {
        Table::from_entries(
            2,
            [
                ("hack".to_string(), vec![1.0, 0.0]),
                ("breach".to_string(), vec![0.82, (1.0f64 - 0.82 * 0.82).sqrt()]),
                ("zero".to_string(), vec![0.0, 0.0]),
            ],
        )
    }

    #[test]
    fn load_with_header() {
        let table: Table<f64> = Table::load(Cursor::new("2 3\na 1 0 0\nb 0 1 0\n")).unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.len(), 2);
        assert_eq!(table.get("a"), Some(&[1.0, 0.0, 0.0][..]));
    }

    #[test]
    fn load_without_header_infers_dim() {
        let table: Table<f64> = Table::load(Cursor::new("a 1 0\nb 0 1\n")).unwrap();
        assert_eq!(table.dim(), 2);
    }

    #[test]
    fn dim_mismatch_reports_line() {
        let err = Table::<f64>::load(Cursor::new("3 3\na 1 0 0\nb 1 0\n")).unwrap_err();
        match err {
            EmbeddingError::DimMismatch { line, expected, found } => {
                assert_eq!((line, expected, found), (3, 3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(
            Table::<f64>::load(Cursor::new("")),
            Err(EmbeddingError::Empty)
        ));
    }

    #[test]
    fn gzip_is_detected() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"a 1 0\nb 0 1\n").unwrap();
        let bytes = enc.finish().unwrap();
        let table: Table<f64> = Table::load(Cursor::new(bytes)).unwrap();
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn duplicates_keep_first() {
        let table: Table<f64> = Table::load(Cursor::new("a 1 0\na 0 1\n")).unwrap();
        assert_eq!(table.get("a"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let table: Table<f64> = Table::load(Cursor::new("Word 1 0\n")).unwrap();
        assert!(table.contains("word"));
        assert!(table.contains("WORD"));
    }

    #[test]
    fn cosine_examples() {
        let v = vec![0.3, -0.7, 2.0];
        assert_relative_eq!(cosine(&v, &v).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_relative_eq!(
            cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            0.7071067811865475,
            epsilon = 1e-6
        );
        assert_eq!(cosine::<f64>(&[0.0, 0.0], &[1.0, 0.0]), None);
    }

    #[test]
    fn cosine_generic_over_f32() {
        let c: f32 = cosine(&[1.0f32, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 0.707_106_78).abs() < 1e-6);
    }

    #[test]
    fn sem_eq_reflexive_and_threshold() {
        let table = small_table();
        let cfg = SemEqConfig::default();
        let hack = tok(1, "hack", 0);
        let breach = tok(1, "breach", 0);
        assert!(sem_eq(&hack, &hack, &cfg, &table));
        // cosine(hack, breach) = 0.82 >= 0.75
        assert!(sem_eq(&hack, &breach, &cfg, &table));
        assert!(sem_eq(&breach, &hack, &cfg, &table));
        let strict = SemEqConfig {
            threshold: 0.9,
            ..cfg
        };
        assert!(!sem_eq(&hack, &breach, &strict, &table));
    }

    #[test]
    fn sem_eq_oov_fallback() {
        let table = small_table();
        let cfg = SemEqConfig::default();
        let a = tok(1, "riseup", 0);
        let b = tok(1, "server", 0);
        assert!(!sem_eq(&a, &b, &cfg, &table));
        assert!(sem_eq(&a, &a, &cfg, &table));
        let reject = SemEqConfig {
            fallback: SemEqFallback::Reject,
            ..cfg
        };
        assert!(!sem_eq_lemmas("riseup", "riseup", &reject, &table));
    }

    #[test]
    fn sem_eq_zero_vector_not_comparable() {
        let table = small_table();
        let cfg: SemEqConfig<f64> = SemEqConfig {
            threshold: -1.0,
            fallback: SemEqFallback::Reject,
        };
        assert!(!sem_eq_lemmas("zero", "hack", &cfg, &table));
    }

    #[test]
    fn query_vector_sums_and_flags_oov() {
        let table = small_table();
        let single = DepTree::new(vec![tok(1, "hack", 0)]).unwrap();
        assert_eq!(query_vector(&single, &table).unwrap(), vec![1.0, 0.0]);

        let pair = DepTree::new(vec![tok(1, "hack", 2), tok(2, "breach", 0)]).unwrap();
        let v = query_vector(&pair, &table).unwrap();
        assert_relative_eq!(v[0], 1.82);

        let with_oov = DepTree::new(vec![
            tok(1, "hack", 2),
            tok(2, "breach", 0),
            tok(3, "riseup", 2),
        ])
        .unwrap();
        assert_eq!(query_vector(&with_oov, &table).unwrap(), v);

        let all_oov = DepTree::new(vec![tok(1, "riseup", 0)]).unwrap();
        assert_eq!(query_vector(&all_oov, &table), None);
    }

    #[test]
    fn large_fixture_counts() {
        let mut text = String::from("1000 200\n");
        for i in 0..1000 {
            text.push_str(&format!("word{i:04}"));
            for j in 0..200 {
                text.push_str(if j == i % 200 { " 1" } else { " 0" });
            }
            text.push('\n');
        }
        let table: Table<f64> = Table::load(Cursor::new(text)).unwrap();
        assert_eq!(table.dim(), 200);
        assert_eq!(table.len(), 1000);
    }

    #[test]
    fn cosine_stays_in_bounds() {
        let mut rng = crate::testkit::SplitMix64::new(31);
        for _ in 0..500 {
            let a: Vec<f64> = (0..6).map(|_| rng.unit() * 4.0 - 2.0).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.unit() * 4.0 - 2.0).collect();
            if let Some(c) = cosine(&a, &b) {
                assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&c), "cosine {c}");
                assert_eq!(cosine(&b, &a), Some(c));
            }
        }
    }

    #[test]
    fn query_vector_permutation_invariant() {
        let table = small_table();
        let a = DepTree::new(vec![tok(1, "hack", 2), tok(2, "breach", 0)]).unwrap();
        let b = DepTree::new(vec![tok(1, "breach", 0), tok(2, "hack", 1)]).unwrap();
        assert_eq!(query_vector(&a, &table), query_vector(&b, &table));
    }
}

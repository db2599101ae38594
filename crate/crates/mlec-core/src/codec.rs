//! Alphabets, one-hot word vectors, and transformation matrices.
//!
//! A symbol of an ordered alphabet of size `N` is represented as a length-`N`
//! one-hot vector. A word of `nu` symbols is the concatenation of its symbol
//! vectors, one block per degree of freedom. A [`TransformMatrix`] maps each
//! input symbol to such a word: column `j` is the word vector encoding input
//! symbol `j`, so encoding is matrix multiplication by a one-hot input.
//!
//! Decoding runs either exactly (unique column lookup) or as a linear
//! program over the probability simplex `{x >= 0, sum x = 1, T x = q}`,
//! solved by exact rational basic-feasible-solution enumeration. Ranks are
//! computed over the integers with fraction-free elimination, never in
//! floating point.

mod lp;

use serde::Serialize;
use thiserror::Error;

/// Errors from alphabet and codebook operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("duplicate symbol label `{0}`")]
    DuplicateSymbol(String),
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("word has {got} symbols, expected {expected}")]
    WordLengthMismatch { expected: usize, got: usize },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("word vector matches no codebook column")]
    NoOneHotSolution,
    #[error("codebook is not uniquely decodable: symbols {first} and {second} share a word")]
    AmbiguousCode { first: usize, second: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed word vector: {0}")]
    MalformedWord(String),
    #[error("non-finite value in decode input or objective")]
    NonFiniteValue,
    #[error("word vector lies outside the feasibility polytope")]
    Infeasible,
}

impl CodecError {
    /// Stable machine-readable code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::DuplicateSymbol(_) => "DuplicateSymbol",
            CodecError::EmptyAlphabet => "EmptyAlphabet",
            CodecError::WordLengthMismatch { .. } => "WordLengthMismatch",
            CodecError::UnknownSymbol(_) => "UnknownSymbol",
            CodecError::IndexOutOfRange { .. } => "IndexOutOfRange",
            CodecError::NoOneHotSolution => "NoOneHotSolution",
            CodecError::AmbiguousCode { .. } => "AmbiguousCode",
            CodecError::ShapeMismatch(_) => "ShapeMismatch",
            CodecError::MalformedWord(_) => "MalformedWord",
            CodecError::NonFiniteValue => "NonFiniteValue",
            CodecError::Infeasible => "Infeasible",
        }
    }
}

/// An ordered set of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Result<Self, CodecError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(CodecError::EmptyAlphabet);
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(CodecError::DuplicateSymbol(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Alphabet with generated labels `s0..s{n-1}`.
    pub fn indexed(size: usize) -> Result<Self, CodecError> {
        Self::new((0..size).map(|i| format!("s{i}")))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// One-hot vector for symbol `index`: a single 1 at that position.
    pub fn one_hot(&self, index: usize) -> Result<Vec<u8>, CodecError> {
        if index >= self.size() {
            return Err(CodecError::IndexOutOfRange {
                index,
                size: self.size(),
            });
        }
        let mut v = vec![0u8; self.size()];
        v[index] = 1;
        Ok(v)
    }

    /// Resolve a word of labels into symbol indices.
    pub fn word_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>, CodecError> {
        labels
            .iter()
            .map(|l| {
                self.index_of(l.as_ref())
                    .ok_or_else(|| CodecError::UnknownSymbol(l.as_ref().to_string()))
            })
            .collect()
    }
}

/// Concatenated one-hot blocks: one block of length `block_size` per degree
/// of freedom, each summing to exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordVector {
    entries: Vec<u8>,
    block_size: usize,
}

impl WordVector {
    /// Build from raw 0/1 entries, checking the block-sum invariant.
    pub fn from_entries(entries: Vec<u8>, block_size: usize) -> Result<Self, CodecError> {
        if block_size == 0 || entries.is_empty() || !entries.len().is_multiple_of(block_size) {
            return Err(CodecError::MalformedWord(format!(
                "length {} is not a positive multiple of block size {}",
                entries.len(),
                block_size
            )));
        }
        for block in entries.chunks(block_size) {
            if block.iter().any(|&e| e > 1) {
                return Err(CodecError::MalformedWord(
                    "entries must be 0 or 1".to_string(),
                ));
            }
            if block.iter().map(|&e| e as usize).sum::<usize>() != 1 {
                return Err(CodecError::MalformedWord(
                    "each block must sum to exactly 1".to_string(),
                ));
            }
        }
        Ok(Self {
            entries,
            block_size,
        })
    }

    /// Build from per-block symbol indices.
    pub fn from_symbols(symbols: &[usize], alphabet_size: usize) -> Result<Self, CodecError> {
        if symbols.is_empty() {
            return Err(CodecError::MalformedWord("empty word".to_string()));
        }
        let mut entries = vec![0u8; symbols.len() * alphabet_size];
        for (block, &s) in symbols.iter().enumerate() {
            if s >= alphabet_size {
                return Err(CodecError::IndexOutOfRange {
                    index: s,
                    size: alphabet_size,
                });
            }
            entries[block * alphabet_size + s] = 1;
        }
        Ok(Self {
            entries,
            block_size: alphabet_size,
        })
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks(&self) -> usize {
        self.entries.len() / self.block_size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Recover the per-block symbol indices.
    pub fn symbol_indices(&self) -> Vec<usize> {
        self.entries
            .chunks(self.block_size)
            .map(|block| block.iter().position(|&e| e == 1).expect("block sums to 1"))
            .collect()
    }
}

/// Minimisation objective for LP decoding: a finite cost per output row,
/// scored as `c . (T x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeObjective {
    pub costs: Vec<f64>,
}

impl DecodeObjective {
    pub fn new(costs: Vec<f64>) -> Self {
        Self { costs }
    }

    /// All-zero objective: pure feasibility.
    pub fn zero(rows: usize) -> Self {
        Self {
            costs: vec![0.0; rows],
        }
    }
}

/// Column-per-input-symbol encoding map between two alphabets.
///
/// Column `j` is the concatenated one-hot vector of the `degrees`-symbol
/// output word assigned to input symbol `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransformMatrix {
    in_alphabet: Alphabet,
    out_alphabet: Alphabet,
    degrees: usize,
    words: Vec<Vec<usize>>,
}

impl TransformMatrix {
    /// Build a transform from one output word per input symbol.
    ///
    /// `mapping[j]` lists the output-symbol indices of input symbol `j`'s
    /// word and must have exactly `degrees` entries.
    pub fn new(
        in_alphabet: Alphabet,
        out_alphabet: Alphabet,
        degrees: usize,
        mapping: Vec<Vec<usize>>,
    ) -> Result<Self, CodecError> {
        if degrees == 0 {
            return Err(CodecError::ShapeMismatch(
                "degrees of freedom must be positive".to_string(),
            ));
        }
        if mapping.len() != in_alphabet.size() {
            return Err(CodecError::ShapeMismatch(format!(
                "mapping has {} words for {} input symbols",
                mapping.len(),
                in_alphabet.size()
            )));
        }
        for word in &mapping {
            if word.len() != degrees {
                return Err(CodecError::WordLengthMismatch {
                    expected: degrees,
                    got: word.len(),
                });
            }
            for &s in word {
                if s >= out_alphabet.size() {
                    return Err(CodecError::IndexOutOfRange {
                        index: s,
                        size: out_alphabet.size(),
                    });
                }
            }
        }
        Ok(Self {
            in_alphabet,
            out_alphabet,
            degrees,
            words: mapping,
        })
    }

    /// Build a transform from words written as label sequences.
    pub fn from_labels<S: AsRef<str>>(
        in_alphabet: Alphabet,
        out_alphabet: Alphabet,
        degrees: usize,
        mapping: &[Vec<S>],
    ) -> Result<Self, CodecError> {
        let words = mapping
            .iter()
            .map(|w| out_alphabet.word_from_labels(w))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(in_alphabet, out_alphabet, degrees, words)
    }

    /// Identity map on an alphabet: every symbol encodes to itself.
    pub fn identity(alphabet: Alphabet) -> Self {
        let words = (0..alphabet.size()).map(|i| vec![i]).collect();
        Self::new(alphabet.clone(), alphabet, 1, words).expect("identity is always valid")
    }

    pub fn in_alphabet(&self) -> &Alphabet {
        &self.in_alphabet
    }

    pub fn out_alphabet(&self) -> &Alphabet {
        &self.out_alphabet
    }

    /// Output degrees of freedom (symbols per word).
    pub fn degrees(&self) -> usize {
        self.degrees
    }

    pub fn rows(&self) -> usize {
        self.degrees * self.out_alphabet.size()
    }

    pub fn cols(&self) -> usize {
        self.in_alphabet.size()
    }

    /// Output word (symbol indices) for input symbol `index`.
    pub fn word(&self, index: usize) -> Result<&[usize], CodecError> {
        self.words
            .get(index)
            .map(Vec::as_slice)
            .ok_or(CodecError::IndexOutOfRange {
                index,
                size: self.cols(),
            })
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    /// Dense 0/1 matrix, row major.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.cols()]; self.rows()];
        for (j, word) in self.words.iter().enumerate() {
            for (block, &s) in word.iter().enumerate() {
                m[block * self.out_alphabet.size() + s][j] = 1;
            }
        }
        m
    }

    /// Encode input symbol `index` as its word vector (column `index`).
    pub fn encode(&self, index: usize) -> Result<WordVector, CodecError> {
        let word = self.word(index)?;
        WordVector::from_symbols(word, self.out_alphabet.size())
    }

    /// Decode a word vector to the unique input symbol whose column matches.
    ///
    /// Fails with [`CodecError::NoOneHotSolution`] when no column matches and
    /// [`CodecError::AmbiguousCode`] when two input symbols share the word.
    pub fn decode_exact(&self, q: &WordVector) -> Result<usize, CodecError> {
        if q.block_size() != self.out_alphabet.size() || q.blocks() != self.degrees {
            return Err(CodecError::ShapeMismatch(format!(
                "word vector is {}x{} blocks, codebook expects {}x{}",
                q.blocks(),
                q.block_size(),
                self.degrees,
                self.out_alphabet.size()
            )));
        }
        let symbols = q.symbol_indices();
        let mut found = None;
        for (j, word) in self.words.iter().enumerate() {
            if word == &symbols {
                match found {
                    None => found = Some(j),
                    Some(first) => {
                        return Err(CodecError::AmbiguousCode { first, second: j });
                    }
                }
            }
        }
        found.ok_or(CodecError::NoOneHotSolution)
    }

    /// Decode by linear programming over the probability simplex.
    ///
    /// Returns a weight vector `x` over input symbols with `x >= 0`,
    /// `sum x = 1`, and `T x = q`, minimising `obj.costs . (T x)`. The
    /// polytope is searched by exact rational basic-feasible-solution
    /// enumeration, so a column input returns its exact unit vector. `q` may
    /// hold fractional entries (a relaxed word); an infeasible `q` signals a
    /// corrupted or foreign word.
    pub fn decode_lp(&self, q: &[f64], obj: &DecodeObjective) -> Result<Vec<f64>, CodecError> {
        if q.len() != self.rows() {
            return Err(CodecError::ShapeMismatch(format!(
                "word vector has {} entries, codebook expects {}",
                q.len(),
                self.rows()
            )));
        }
        if obj.costs.len() != self.rows() {
            return Err(CodecError::ShapeMismatch(format!(
                "objective has {} entries, codebook expects {}",
                obj.costs.len(),
                self.rows()
            )));
        }
        if q.iter().chain(obj.costs.iter()).any(|v| !v.is_finite()) {
            return Err(CodecError::NonFiniteValue);
        }
        // Reduce c . (T x) to a per-symbol cost vector c' = T^t c.
        let mut symbol_costs = vec![0.0f64; self.cols()];
        for (j, word) in self.words.iter().enumerate() {
            for (block, &s) in word.iter().enumerate() {
                symbol_costs[j] += obj.costs[block * self.out_alphabet.size() + s];
            }
        }
        lp::decode_on_simplex(&self.dense(), q, &symbol_costs)
    }

    /// Exact rank of the 0/1 matrix, computed over the integers with
    /// fraction-free (Bareiss) elimination.
    pub fn rank(&self) -> usize {
        let dense = self.dense();
        let mut m: Vec<Vec<i128>> = dense
            .iter()
            .map(|row| row.iter().map(|&e| e as i128).collect())
            .collect();
        bareiss_rank(&mut m)
    }

    /// True iff all columns are distinct, i.e. exact decoding never ties.
    pub fn is_uniquely_decodable(&self) -> bool {
        for (i, w) in self.words.iter().enumerate() {
            if self.words[..i].contains(w) {
                return false;
            }
        }
        true
    }

    /// Chain this transform with `next`, encoding every symbol of each output
    /// word through `next` and concatenating the results.
    pub fn compose(&self, next: &TransformMatrix) -> Result<TransformMatrix, CodecError> {
        if self.out_alphabet != next.in_alphabet {
            return Err(CodecError::ShapeMismatch(format!(
                "output alphabet ({} symbols) does not feed the next input alphabet ({} symbols)",
                self.out_alphabet.size(),
                next.in_alphabet.size()
            )));
        }
        let words = self
            .words
            .iter()
            .map(|word| {
                let mut composed = Vec::with_capacity(self.degrees * next.degrees);
                for &s in word {
                    composed.extend_from_slice(next.word(s)?);
                }
                Ok(composed)
            })
            .collect::<Result<Vec<_>, CodecError>>()?;
        TransformMatrix::new(
            self.in_alphabet.clone(),
            next.out_alphabet.clone(),
            self.degrees * next.degrees,
            words,
        )
    }
}

/// Rank by fraction-free Gaussian elimination on integer entries.
fn bareiss_rank(m: &mut [Vec<i128>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev_pivot: i128 = 1;
    let mut row = 0;
    for col in 0..cols {
        let Some(pivot_row) = (row..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(row, pivot_row);
        let pivot = m[row][col];
        for r in row + 1..rows {
            for c in col + 1..cols {
                m[r][c] = (pivot * m[r][c] - m[r][col] * m[row][c]) / prev_pivot;
            }
            m[r][col] = 0;
        }
        prev_pivot = pivot;
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

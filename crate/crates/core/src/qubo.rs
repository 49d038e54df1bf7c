//! Fixed-point binary expansion of the boxed system and its QUBO / Ising forms.
//!
//! Each box coordinate `x_i ∈ [0, 2)` is written with `R` bits as
//! `x_i = Σ_r q_{i,r} 2^{−r}`, most significant bit first. The least squares
//! objective `‖A q − b‖²` then becomes `qᵀ Q q + C` with `Q` upper triangular.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary assignment, one `0`/`1` byte per bit.
pub type Assignment = Vec<u8>;

/// Maps `(variable, bit)` pairs onto flat bit indices, `flat(i, r) = i·R + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitLayout {
    num_vars: usize,
    bits_per_var: usize,
}

impl BitLayout {
    pub fn new(num_vars: usize, bits_per_var: usize) -> Result<Self> {
        if bits_per_var == 0 {
            return Err(Error::OutOfRange("need at least one bit per variable".into()));
        }
        if num_vars == 0 {
            return Err(Error::OutOfRange("need at least one variable".into()));
        }
        Ok(Self {
            num_vars,
            bits_per_var,
        })
    }

    /// One bit per variable; used for problems that do not come from a linear system.
    pub fn flat(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn bits_per_var(&self) -> usize {
        self.bits_per_var
    }

    pub fn total_bits(&self) -> usize {
        self.num_vars * self.bits_per_var
    }

    pub fn index(&self, var: usize, bit: usize) -> usize {
        debug_assert!(var < self.num_vars && bit < self.bits_per_var);
        var * self.bits_per_var + bit
    }

    pub fn weight(bit: usize) -> f64 {
        2f64.powi(-(bit as i32))
    }

    /// Largest representable coordinate, `2 − 2^{1−R}`.
    pub fn max_value(&self) -> f64 {
        2.0 - 2f64.powi(1 - self.bits_per_var as i32)
    }

    pub fn decode(&self, q: &[u8]) -> Result<Vec<f64>> {
        if q.len() != self.total_bits() {
            return Err(Error::DimensionMismatch {
                what: "bit vector length",
                expected: self.total_bits(),
                actual: q.len(),
            });
        }
        Ok(q.chunks(self.bits_per_var)
            .map(|bits| {
                bits.iter()
                    .enumerate()
                    .filter(|(_, b)| **b != 0)
                    .map(|(r, _)| Self::weight(r))
                    .sum()
            })
            .collect())
    }

    /// Inverse of [`decode`](Self::decode) for values exactly on the bit grid.
    pub fn encode(&self, x: &[f64]) -> Option<Assignment> {
        if x.len() != self.num_vars {
            return None;
        }
        let scale = 2f64.powi(self.bits_per_var as i32 - 1);
        let mut out = Vec::with_capacity(self.total_bits());
        for &v in x {
            let k = v * scale;
            if !(k >= 0.0 && k.fract() == 0.0 && k < 2.0 * scale) {
                return None;
            }
            let k = k as u64;
            for r in 0..self.bits_per_var {
                out.push(((k >> (self.bits_per_var - 1 - r)) & 1) as u8);
            }
        }
        Some(out)
    }
}

/// `A[k, flat(i, r)] = M[k, i] · 2^{−r}`, so that `A q = M x`.
pub fn expand_matrix(matrix: &DMatrix<f64>, layout: &BitLayout) -> Result<DMatrix<f64>> {
    if matrix.ncols() != layout.num_vars {
        return Err(Error::DimensionMismatch {
            what: "matrix columns vs layout variables",
            expected: layout.num_vars,
            actual: matrix.ncols(),
        });
    }
    let r = layout.bits_per_var;
    Ok(DMatrix::from_fn(matrix.nrows(), layout.total_bits(), |k, col| {
        matrix[(k, col / r)] * BitLayout::weight(col % r)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    q: DMatrix<f64>,
    offset: f64,
    layout: BitLayout,
}

impl QuboProblem {
    /// `q` must be square and upper triangular (diagonal included).
    pub fn new(q: DMatrix<f64>, offset: f64, layout: BitLayout) -> Result<Self> {
        let n = layout.total_bits();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "QUBO matrix size",
                expected: n,
                actual: if q.nrows() != n { q.nrows() } else { q.ncols() },
            });
        }
        for i in 0..n {
            for j in 0..i {
                if q[(i, j)] != 0.0 {
                    return Err(Error::OutOfRange(format!(
                        "QUBO matrix must be upper triangular, found entry at ({i}, {j})"
                    )));
                }
            }
        }
        if q.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::OutOfRange("QUBO has non-finite coefficients".into()));
        }
        Ok(Self { q, offset, layout })
    }

    pub fn num_bits(&self) -> usize {
        self.layout.total_bits()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn layout(&self) -> &BitLayout {
        &self.layout
    }

    /// `qᵀ Q q + C`.
    pub fn energy(&self, q: &[u8]) -> f64 {
        let n = self.num_bits();
        debug_assert_eq!(q.len(), n);
        let mut e = self.offset;
        for i in (0..n).filter(|&i| q[i] != 0) {
            e += self.q[(i, i)];
            for j in (i + 1..n).filter(|&j| q[j] != 0) {
                e += self.q[(i, j)];
            }
        }
        e
    }

    /// Mean absolute value over the nonzero coefficients of `Q`, or 1 when all vanish.
    pub fn mean_abs_coefficient(&self) -> f64 {
        let (sum, count) = self
            .q
            .iter()
            .filter(|v| **v != 0.0)
            .fold((0.0, 0usize), |(s, c), v| (s + v.abs(), c + 1));
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }

    /// Dense symmetric coupling matrix (zero diagonal) plus the linear terms,
    /// the shape local-field samplers work with.
    pub fn split_symmetric(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_bits();
        let linear = (0..n).map(|i| self.q[(i, i)]).collect();
        let mut sym = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.q[(i, j)];
                sym[i * n + j] = v;
                sym[j * n + i] = v;
            }
        }
        (linear, sym)
    }

    pub fn to_document(&self) -> QuboDocument {
        let n = self.num_bits();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = self.q[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        QuboDocument {
            n,
            entries,
            offset: self.offset,
        }
    }

    /// Imported problems carry a one-bit-per-variable layout.
    pub fn from_document(doc: &QuboDocument) -> Result<Self> {
        let mut q = DMatrix::zeros(doc.n, doc.n);
        for &(i, j, v) in &doc.entries {
            if i > j || j >= doc.n {
                return Err(Error::OutOfRange(format!(
                    "QUBO entry ({i}, {j}) must satisfy i ≤ j < {}",
                    doc.n
                )));
            }
            q[(i, j)] += v;
        }
        Self::new(q, doc.offset, BitLayout::flat(doc.n)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// Interchange form: zero-based `[i, j, value]` triples with `i ≤ j`.
/// Exact zeros are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboDocument {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

/// `Q_ii = Σ_k A_ki² − 2 A_ki b_k`, `Q_ij = 2 Σ_k A_ki A_kj` for `i < j`,
/// `C = Σ_k b_k²`.
pub fn build_qubo(a: &DMatrix<f64>, b: &DVector<f64>, layout: &BitLayout) -> Result<QuboProblem> {
    let n = layout.total_bits();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "expanded matrix columns vs layout bits",
            expected: n,
            actual: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    let gram = a.transpose() * a;
    let atb = a.transpose() * b;
    let q = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => gram[(i, i)] - 2.0 * atb[i],
        std::cmp::Ordering::Less => 2.0 * gram[(i, j)],
        std::cmp::Ordering::Greater => 0.0,
    });
    QuboProblem::new(q, b.norm_squared(), *layout)
}

/// Spin glass `E(s) = Σ H_i s_i + Σ_{i<j} J_ij s_i s_j + offset`, `s_i ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    fields: Vec<f64>,
    couplings: DMatrix<f64>,
    offset: f64,
}

impl IsingProblem {
    pub fn new(fields: Vec<f64>, couplings: DMatrix<f64>, offset: f64) -> Result<Self> {
        let n = fields.len();
        if couplings.nrows() != n || couplings.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "coupling matrix size",
                expected: n,
                actual: couplings.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..=i {
                if couplings[(i, j)] != 0.0 {
                    return Err(Error::OutOfRange(format!(
                        "couplings must be strictly upper triangular, found ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            fields,
            couplings,
            offset,
        })
    }

    pub fn num_spins(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let n = self.num_spins();
        debug_assert_eq!(spins.len(), n);
        let mut e = self.offset;
        for i in 0..n {
            let si = f64::from(spins[i]);
            e += self.fields[i] * si;
            for (j, &sj) in spins.iter().enumerate().skip(i + 1) {
                e += self.couplings[(i, j)] * si * f64::from(sj);
            }
        }
        e
    }
}

/// Substitutes `q = (s + 1)/2`; the offset absorbs `C` and all constant terms.
pub fn qubo_to_ising(p: &QuboProblem) -> IsingProblem {
    let n = p.num_bits();
    let mut fields = vec![0.0; n];
    let mut couplings = DMatrix::zeros(n, n);
    let mut offset = p.offset;
    for i in 0..n {
        let d = p.q[(i, i)];
        fields[i] += 0.5 * d;
        offset += 0.5 * d;
        for j in i + 1..n {
            let v = p.q[(i, j)];
            if v != 0.0 {
                couplings[(i, j)] = 0.25 * v;
                fields[i] += 0.25 * v;
                fields[j] += 0.25 * v;
                offset += 0.25 * v;
            }
        }
    }
    IsingProblem {
        fields,
        couplings,
        offset,
    }
}

/// Substitutes `s = 2q − 1`, the inverse of [`qubo_to_ising`].
pub fn ising_to_qubo(p: &IsingProblem, layout: BitLayout) -> Result<QuboProblem> {
    let n = p.num_spins();
    let mut q = DMatrix::zeros(n, n);
    let mut offset = p.offset;
    for i in 0..n {
        q[(i, i)] += 2.0 * p.fields[i];
        offset -= p.fields[i];
        for j in i + 1..n {
            let v = p.couplings[(i, j)];
            if v != 0.0 {
                q[(i, j)] = 4.0 * v;
                q[(i, i)] -= 2.0 * v;
                q[(j, j)] -= 2.0 * v;
                offset += v;
            }
        }
    }
    QuboProblem::new(q, offset, layout)
}

pub fn bits_to_spins(q: &[u8]) -> Vec<i8> {
    q.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect()
}

pub fn spins_to_bits(s: &[i8]) -> Assignment {
    s.iter().map(|&v| u8::from(v > 0)).collect()
}

/// Spin-reversal transform, one sign per spin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GaugeVector(Vec<i8>);

impl GaugeVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(v) = signs.iter().find(|v| **v != 1 && **v != -1) {
            return Err(Error::InvalidGauge(format!("entry {v} is not ±1")));
        }
        Ok(Self(signs))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|g| *g == 1)
    }

    /// `g ⊙ s`.
    pub fn apply_to_spins(&self, spins: &[i8]) -> Vec<i8> {
        spins.iter().zip(&self.0).map(|(s, g)| s * g).collect()
    }

    /// Bit form of `g ⊙ s`: bits under a `−1` sign are flipped.
    pub fn apply_to_bits(&self, q: &[u8]) -> Assignment {
        q.iter()
            .zip(&self.0)
            .map(|(&b, &g)| if g < 0 { 1 - b } else { b })
            .collect()
    }
}

/// `H_i → g_i H_i`, `J_ij → g_i g_j J_ij`. The transformed problem satisfies
/// `E'(g ⊙ s) = E(s)`.
pub fn apply_gauge(p: &IsingProblem, g: &GaugeVector) -> Result<IsingProblem> {
    let n = p.num_spins();
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            what: "gauge length",
            expected: n,
            actual: g.len(),
        });
    }
    let signs: Vec<f64> = g.0.iter().map(|&v| f64::from(v)).collect();
    let fields = p.fields.iter().zip(&signs).map(|(h, g)| g * h).collect();
    let couplings = DMatrix::from_fn(n, n, |i, j| {
        let v = p.couplings[(i, j)];
        if signs[i] * signs[j] < 0.0 {
            -v
        } else {
            v
        }
    });
    Ok(IsingProblem {
        fields,
        couplings,
        offset: p.offset,
    })
}

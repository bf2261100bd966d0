//! Exact arithmetic over a prime field `F_q` and the linear algebra the
//! retrieval scheme is built on: rank, inversion, linear solving and uniform
//! sampling of full-rank matrices.
//!
//! Everything here is integer-exact; no floating point is used anywhere on
//! the protocol path. Field elements are canonical representatives in
//! `[0, q)` stored as `u64`, with all intermediates kept in 128 bits.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A field element in canonical form, i.e. reduced into `[0, q)`.
///
/// Elements do not carry their field; [`PrimeField`] and [`FieldMatrix`]
/// enforce the `value < q` invariant at every construction site.
pub type FieldElement = u64;

/// Errors from field construction and linear algebra.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too small; need a prime > 2")]
    ModulusTooSmall(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix is singular (rank-deficient); expected an invertible matrix")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("element {0} is not reduced modulo {1}")]
    UnreducedElement(u64, u64),
    #[error("full-rank rejection sampling did not terminate within {0} draws")]
    SamplingFailed(u32),
}

/// Deterministic Miller–Rabin, exact for all 64-bit integers with this base set.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| -> u64 { ((a as u128 * b as u128) % n as u128) as u64 };
    let pow = |mut base: u64, mut exp: u64| -> u64 {
        let mut acc = 1u64;
        base %= n;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            exp >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A prime field `F_q`, q > 2, verified prime at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    /// Constructs `F_q` after a deterministic primality check.
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if modulus <= 2 {
            return Err(FieldError::ModulusTooSmall(modulus));
        }
        if !is_prime_u64(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(PrimeField { modulus })
    }

    #[inline]
    pub fn modulus(self) -> u64 {
        self.modulus
    }

    /// Reduces an arbitrary integer into canonical form.
    #[inline]
    pub fn reduce(self, x: u64) -> FieldElement {
        x % self.modulus
    }

    #[inline]
    pub fn add(self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a >= b {
            a - b
        } else {
            self.modulus - (b - a)
        }
    }

    #[inline]
    pub fn neg(self, a: FieldElement) -> FieldElement {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(self, a: FieldElement, b: FieldElement) -> FieldElement {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub fn pow(self, mut base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = 1u64;
        base %= self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element (Fermat exponentiation).
    pub fn inverse(self, x: FieldElement) -> Result<FieldElement, FieldError> {
        if x % self.modulus == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow(x, self.modulus - 2))
    }

    /// Inner product of two equal-length canonical vectors.
    pub fn dot(self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        debug_assert_eq!(a.len(), b.len());
        let q = self.modulus as u128;
        let mut acc: u128 = 0;
        for (&x, &y) in a.iter().zip(b.iter()) {
            acc += (x as u128 * y as u128) % q;
            if acc >= (1u128 << 126) {
                acc %= q;
            }
        }
        (acc % q) as u64
    }
}

/// The deterministic generator every seeded operation in the crate uses.
///
/// The stream is ChaCha8 keyed by the 64-bit seed; identical seeds produce
/// identical streams on every platform. Uniform draws use rejection so the
/// distribution is exact, not merely close.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    seed: u64,
}

/// Identifier of the generator algorithm, recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// Independent child stream; used to give trials and threads their own
    /// generators derived from one master seed.
    pub fn derived(seed: u64, stream: u64) -> Self {
        SeededRng::new(splitmix64(seed ^ splitmix64(stream.wrapping_add(1))))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, bound)` by rejection sampling.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let rem = ((u64::MAX % bound) + 1) % bound; // 2^64 mod bound
        if rem == 0 {
            return self.next_u64() % bound;
        }
        let limit = u64::MAX - rem + 1;
        loop {
            let v = self.next_u64();
            if v < limit {
                return v % bound;
            }
        }
    }

    /// Uniform field element.
    #[inline]
    pub fn element(&mut self, field: PrimeField) -> FieldElement {
        self.below(field.modulus())
    }

    /// Uniform vector of field elements.
    pub fn vector(&mut self, field: PrimeField, len: usize) -> Vec<FieldElement> {
        (0..len).map(|_| self.element(field)).collect()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }

    /// `k` distinct indices sampled uniformly from `[0, n)`, ascending.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        self.shuffle(&mut pool);
        let mut chosen: Vec<usize> = pool.into_iter().take(k).collect();
        chosen.sort_unstable();
        chosen
    }
}

/// A dense row-major matrix over one prime field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
    field: PrimeField,
}

impl FieldMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        data: Vec<FieldElement>,
        field: PrimeField,
    ) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&v| v >= field.modulus()) {
            return Err(FieldError::UnreducedElement(bad, field.modulus()));
        }
        Ok(FieldMatrix {
            rows,
            cols,
            data,
            field,
        })
    }

    pub fn zeros(rows: usize, cols: usize, field: PrimeField) -> Self {
        FieldMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
            field,
        }
    }

    pub fn identity(dim: usize, field: PrimeField) -> Self {
        let mut m = FieldMatrix::zeros(dim, dim, field);
        for i in 0..dim {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<FieldElement>], field: PrimeField) -> Result<Self, FieldError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(FieldError::DimensionMismatch(
                "rows of unequal length".into(),
            ));
        }
        FieldMatrix::new(r, c, rows.concat(), field)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        debug_assert!(v < self.field.modulus());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// New matrix made of the selected rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FieldMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &r in indices {
            data.extend_from_slice(self.row(r));
        }
        FieldMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
            field: self.field,
        }
    }

    pub fn matmul(&self, other: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
        if self.cols != other.rows {
            return Err(FieldError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = FieldMatrix::zeros(self.rows, other.cols, f);
        let q = f.modulus() as u128;
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: u128 = 0;
                for k in 0..self.cols {
                    acc += (self.get(i, k) as u128 * other.get(k, j) as u128) % q;
                    if acc >= (1u128 << 126) {
                        acc %= q;
                    }
                }
                out.set(i, j, (acc % q) as u64);
            }
        }
        Ok(out)
    }

    /// Matrix–vector product `A x`.
    pub fn mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
        if x.len() != self.cols {
            return Err(FieldError::DimensionMismatch(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| self.field.dot(self.row(i), x)).collect())
    }

    /// Row-vector–matrix product `x^T A`.
    pub fn left_mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
        if x.len() != self.rows {
            return Err(FieldError::DimensionMismatch(format!(
                "length-{} vector times {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        let f = self.field;
        let q = f.modulus() as u128;
        let mut out = vec![0u128; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let row = self.row(i);
            for (o, &a) in out.iter_mut().zip(row.iter()) {
                *o += (xi as u128 * a as u128) % q;
                if *o >= (1u128 << 126) {
                    *o %= q;
                }
            }
        }
        Ok(out.into_iter().map(|v| (v % q) as u64).collect())
    }

    /// Rank over the field, by exact Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let f = m.field;
        let mut rank = 0usize;
        let mut pivot_col = 0usize;
        while rank < m.rows && pivot_col < m.cols {
            let pivot = (rank..m.rows).find(|&r| m.get(r, pivot_col) != 0);
            let Some(pr) = pivot else {
                pivot_col += 1;
                continue;
            };
            m.swap_rows(rank, pr);
            let inv = f.inverse(m.get(rank, pivot_col)).expect("nonzero pivot");
            m.scale_row(rank, inv);
            for r in rank + 1..m.rows {
                let factor = m.get(r, pivot_col);
                if factor != 0 {
                    m.row_sub_scaled(r, rank, factor);
                }
            }
            rank += 1;
            pivot_col += 1;
        }
        rank
    }

    /// Inverse of a square matrix, or `SingularMatrix`.
    pub fn inverse(&self) -> Result<FieldMatrix, FieldError> {
        if self.rows != self.cols {
            return Err(FieldError::DimensionMismatch(format!(
                "cannot invert {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let f = self.field;
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = FieldMatrix::identity(n, f);
        for col in 0..n {
            let pivot = (col..n).find(|&r| m.get(r, col) != 0);
            let Some(pr) = pivot else {
                return Err(FieldError::SingularMatrix);
            };
            m.swap_rows(col, pr);
            inv.swap_rows(col, pr);
            let piv_inv = f.inverse(m.get(col, col)).expect("nonzero pivot");
            m.scale_row(col, piv_inv);
            inv.scale_row(col, piv_inv);
            for r in 0..n {
                if r != col {
                    let factor = m.get(r, col);
                    if factor != 0 {
                        m.row_sub_scaled(r, col, factor);
                        inv.row_sub_scaled(r, col, factor);
                    }
                }
            }
        }
        Ok(inv)
    }

    /// One solution of `A x = b` if the system is consistent.
    ///
    /// The system may be under- or over-determined; free variables are set
    /// to zero, so the result is deterministic.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Option<Vec<FieldElement>>, FieldError> {
        if b.len() != self.rows {
            return Err(FieldError::DimensionMismatch(format!(
                "{} equations but rhs of length {}",
                self.rows,
                b.len()
            )));
        }
        let f = self.field;
        let mut m = self.clone();
        let mut rhs = b.to_vec();
        let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
        let mut row = 0usize;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let pivot = (row..m.rows).find(|&r| m.get(r, col) != 0);
            let Some(pr) = pivot else { continue };
            m.swap_rows(row, pr);
            rhs.swap(row, pr);
            let inv = f.inverse(m.get(row, col)).expect("nonzero pivot");
            m.scale_row(row, inv);
            rhs[row] = f.mul(rhs[row], inv);
            for r in 0..m.rows {
                if r != row {
                    let factor = m.get(r, col);
                    if factor != 0 {
                        m.row_sub_scaled(r, row, factor);
                        rhs[r] = f.sub(rhs[r], f.mul(factor, rhs[row]));
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
        }
        // Any leftover nonzero rhs in a zero row means the system is inconsistent.
        for r in row..m.rows {
            if rhs[r] != 0 {
                return Ok(None);
            }
        }
        let mut x = vec![0u64; m.cols];
        for &(r, c) in &pivots {
            x[c] = rhs[r];
        }
        Ok(Some(x))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, factor: FieldElement) {
        let f = self.field;
        for c in 0..self.cols {
            let v = self.get(r, c);
            self.set(r, c, f.mul(v, factor));
        }
    }

    /// `row[dst] -= factor * row[src]`.
    fn row_sub_scaled(&mut self, dst: usize, src: usize, factor: FieldElement) {
        let f = self.field;
        for c in 0..self.cols {
            let v = f.sub(self.get(dst, c), f.mul(factor, self.get(src, c)));
            self.set(dst, c, v);
        }
    }
}

/// Cap on full-rank rejection draws; uniform matrices over any usable field
/// are overwhelmingly likely to be invertible, so hitting the cap indicates
/// a broken RNG.
const FULL_RANK_DRAW_CAP: u32 = 1000;

/// A `dim x dim` matrix drawn uniformly from the full-rank matrices over the
/// field, by rejection over uniform matrices.
pub fn sample_full_rank(
    dim: usize,
    field: PrimeField,
    rng: &mut SeededRng,
) -> Result<FieldMatrix, FieldError> {
    assert!(dim >= 1);
    for _ in 0..FULL_RANK_DRAW_CAP {
        let data = rng.vector(field, dim * dim);
        let m = FieldMatrix {
            rows: dim,
            cols: dim,
            data,
            field,
        };
        if m.rank() == dim {
            return Ok(m);
        }
    }
    Err(FieldError::SamplingFailed(FULL_RANK_DRAW_CAP))
}

//! MDS codes for the retrieval scheme: Vandermonde generator construction,
//! puncturing, encoding, and nearest-codeword decoding of errors and
//! erasures, plus a brute-force oracle decoder used by the test suites.
//!
//! Generators are non-systematic Vandermonde matrices on distinct evaluation
//! points `1..=n`: row `i` is `(1, x_i, x_i^2, ..., x_i^{k-1})`, so every
//! `k x k` row-submatrix is invertible and the minimum distance is exactly
//! `n - k + 1`. A codeword is the evaluation of the degree-`< k` message
//! polynomial at the points, which is what the rational-interpolation
//! decoder relies on.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldMatrix, PrimeField};

/// Errors from code construction and decoding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid code parameters: {0}")]
    Parameter(String),
    #[error("puncture of {z} positions is too deep for an ({n},{k}) code; need z < n - k = {max}")]
    PunctureTooDeep { z: usize, n: usize, k: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no codeword within the decoding radius: {0}")]
    DecodeFailure(String),
    #[error("nearest codeword is ambiguous at distance {distance}")]
    AmbiguousDecode { distance: usize },
    #[error("instance too large for the oracle decoder: {0}")]
    InstanceTooLarge(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Generator of an `(n, k)` MDS code over a prime field, with its evaluation
/// points. Puncturing removes points, so a punctured generator remembers
/// which coordinates of the parent code survive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdsGenerator {
    n: usize,
    k: usize,
    eval_points: Vec<FieldElement>,
    field: PrimeField,
}

/// Positions deleted from a codeword, for puncturing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    deleted: BTreeSet<usize>,
}

impl PuncturePattern {
    pub fn new<I: IntoIterator<Item = usize>>(positions: I) -> Self {
        PuncturePattern {
            deleted: positions.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.deleted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deleted.is_empty()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.deleted.contains(&pos)
    }
}

/// A length-`n` word with some positions marked as erased. Erased positions
/// carry no information; their `symbols` entries are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedWord {
    pub symbols: Vec<FieldElement>,
    pub erasures: BTreeSet<usize>,
}

impl ReceivedWord {
    pub fn clean(symbols: Vec<FieldElement>) -> Self {
        ReceivedWord {
            symbols,
            erasures: BTreeSet::new(),
        }
    }

    pub fn with_erasures<I: IntoIterator<Item = usize>>(
        symbols: Vec<FieldElement>,
        erasures: I,
    ) -> Self {
        ReceivedWord {
            symbols,
            erasures: erasures.into_iter().collect(),
        }
    }
}

/// Result of a successful decode: the message, the re-encoded codeword, and
/// the non-erased positions where the received word was corrected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub message: Vec<FieldElement>,
    pub corrected_codeword: Vec<FieldElement>,
    pub error_positions: BTreeSet<usize>,
}

/// Builds the `(n, k)` Vandermonde generator on evaluation points `1..=n`.
pub fn make_generator(n: usize, k: usize, field: PrimeField) -> Result<MdsGenerator, CodecError> {
    if k == 0 || k > n {
        return Err(CodecError::Parameter(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    if n as u64 > field.modulus() {
        return Err(CodecError::Parameter(format!(
            "codeword length {n} exceeds field size q={}; evaluation points would repeat",
            field.modulus()
        )));
    }
    Ok(MdsGenerator {
        n,
        k,
        eval_points: (1..=n as u64).collect(),
        field,
    })
}

impl MdsGenerator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Minimum distance `n - k + 1` (Singleton bound with equality).
    pub fn min_distance(&self) -> usize {
        self.n - self.k + 1
    }

    pub fn eval_points(&self) -> &[FieldElement] {
        &self.eval_points
    }

    /// Generator row `i`: powers of the `i`th evaluation point.
    pub fn row(&self, i: usize) -> Vec<FieldElement> {
        let x = self.eval_points[i];
        let mut row = Vec::with_capacity(self.k);
        let mut p = 1u64;
        for _ in 0..self.k {
            row.push(p);
            p = self.field.mul(p, x);
        }
        row
    }

    /// The full `n x k` generator matrix.
    pub fn matrix(&self) -> FieldMatrix {
        let rows: Vec<Vec<u64>> = (0..self.n).map(|i| self.row(i)).collect();
        FieldMatrix::from_rows(&rows, self.field).expect("rows are uniform length")
    }

    /// The `k x k` submatrix on the selected rows.
    pub fn row_submatrix(&self, rows: &[usize]) -> FieldMatrix {
        let sel: Vec<Vec<u64>> = rows.iter().map(|&i| self.row(i)).collect();
        FieldMatrix::from_rows(&sel, self.field).expect("rows are uniform length")
    }

    /// Encodes a length-`k` message into a length-`n` codeword by evaluating
    /// the message polynomial at every point (Horner form).
    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, CodecError> {
        if message.len() != self.k {
            return Err(CodecError::Dimension(format!(
                "message length {} but code dimension {}",
                message.len(),
                self.k
            )));
        }
        Ok(self
            .eval_points
            .iter()
            .map(|&x| eval_poly(message, x, self.field))
            .collect())
    }

    /// The `(n - z, k)` generator left after deleting the pattern's
    /// positions. Requires `z < n - k`, which keeps the punctured code MDS
    /// with distance `(n - z) - k + 1`.
    pub fn puncture(&self, pattern: &PuncturePattern) -> Result<MdsGenerator, CodecError> {
        let z = pattern.len();
        if z >= self.n - self.k {
            return Err(CodecError::PunctureTooDeep {
                z,
                n: self.n,
                k: self.k,
                max: self.n - self.k,
            });
        }
        if let Some(&bad) = pattern.deleted.iter().find(|&&p| p >= self.n) {
            return Err(CodecError::Parameter(format!(
                "puncture position {bad} out of range for length {}",
                self.n
            )));
        }
        let eval_points: Vec<u64> = (0..self.n)
            .filter(|p| !pattern.contains(*p))
            .map(|p| self.eval_points[p])
            .collect();
        Ok(MdsGenerator {
            n: self.n - z,
            k: self.k,
            eval_points,
            field: self.field,
        })
    }

    /// Nearest-codeword decoding of errors and erasures.
    ///
    /// With `rho` erasures the decoder attempts the maximal error radius
    /// `tau = floor((d - 1 - rho) / 2)` via rational interpolation
    /// (error-locator times received equals a polynomial), falling back to
    /// smaller radii if the linear system degenerates. If no codeword lies
    /// within the radius the decode fails, which on the protocol path means
    /// the adversary exceeded its budget.
    pub fn decode(&self, rec: &ReceivedWord) -> Result<DecodeOutcome, CodecError> {
        self.check_received(rec)?;
        let survivors: Vec<usize> = (0..self.n).filter(|p| !rec.erasures.contains(p)).collect();
        if survivors.len() < self.k {
            return Err(CodecError::DecodeFailure(format!(
                "only {} unerased symbols but dimension {}",
                survivors.len(),
                self.k
            )));
        }
        let tau_max = (survivors.len() - self.k) / 2;
        for tau in (0..=tau_max).rev() {
            let Some(message) = self.try_radius(rec, &survivors, tau)? else {
                continue;
            };
            let corrected = self.encode(&message)?;
            let error_positions: BTreeSet<usize> = survivors
                .iter()
                .copied()
                .filter(|&p| corrected[p] != rec.symbols[p])
                .collect();
            if error_positions.len() > tau_max {
                continue;
            }
            return Ok(DecodeOutcome {
                message,
                corrected_codeword: corrected,
                error_positions,
            });
        }
        Err(CodecError::DecodeFailure(format!(
            "no codeword within radius {tau_max} of the received word"
        )))
    }

    /// One interpolation attempt at a fixed error radius. Finds monic `E` of
    /// degree `tau` and `Q` of degree `< tau + k` with
    /// `E(x_i) y_i = Q(x_i)` on all unerased points, then returns `Q / E`
    /// when the division is exact.
    fn try_radius(
        &self,
        rec: &ReceivedWord,
        survivors: &[usize],
        tau: usize,
    ) -> Result<Option<Vec<FieldElement>>, CodecError> {
        let f = self.field;
        let unknowns = tau + (tau + self.k);
        let mut rows = Vec::with_capacity(survivors.len());
        let mut rhs = Vec::with_capacity(survivors.len());
        for &p in survivors {
            let x = self.eval_points[p];
            let y = rec.symbols[p];
            let mut row = Vec::with_capacity(unknowns);
            // e_0 .. e_{tau-1} columns: x^j * y
            let mut xp = 1u64;
            for _ in 0..tau {
                row.push(f.mul(xp, y));
                xp = f.mul(xp, x);
            }
            // xp is now x^tau; the monic leading term moves to the rhs.
            rhs.push(f.neg(f.mul(xp, y)));
            // q_0 .. q_{tau+k-1} columns: -x^t
            let mut xq = 1u64;
            for _ in 0..tau + self.k {
                row.push(f.neg(xq));
                xq = f.mul(xq, x);
            }
            rows.push(row);
        }
        let system = FieldMatrix::from_rows(&rows, f)?;
        let Some(sol) = system.solve(&rhs)? else {
            return Ok(None);
        };
        let mut locator = sol[..tau].to_vec();
        locator.push(1); // monic x^tau term
        let numerator = sol[tau..].to_vec();
        let (quotient, remainder) = poly_divmod(&numerator, &locator, f);
        if remainder.iter().any(|&c| c != 0) {
            return Ok(None);
        }
        let mut message = quotient;
        message.resize(self.k, 0);
        Ok(Some(message))
    }

    /// Exhaustive nearest-codeword search, independent of the interpolation
    /// decoder. Small fields are searched message-by-message; larger fields
    /// enumerate error-position subsets and interpolate. Ties at the minimal
    /// distance are reported as ambiguous.
    pub fn oracle_decode(&self, rec: &ReceivedWord) -> Result<DecodeOutcome, CodecError> {
        self.check_received(rec)?;
        let survivors: Vec<usize> = (0..self.n).filter(|p| !rec.erasures.contains(p)).collect();
        if survivors.len() < self.k {
            return Err(CodecError::DecodeFailure(format!(
                "only {} unerased symbols but dimension {}",
                survivors.len(),
                self.k
            )));
        }
        let tau_max = (survivors.len() - self.k) / 2;
        const GUARD: u128 = 10_000_000;
        let q = self.field.modulus() as u128;
        let message_space = q.checked_pow(self.k as u32);
        if message_space.is_some_and(|s| s <= GUARD) {
            return self.oracle_by_messages(rec, &survivors, tau_max);
        }
        let patterns: u128 = (0..=tau_max).map(|e| binomial(survivors.len(), e)).sum();
        if self.n <= 20 && patterns <= GUARD {
            return self.oracle_by_subsets(rec, &survivors, tau_max);
        }
        Err(CodecError::InstanceTooLarge(format!(
            "q^k = {:?} messages and {} error patterns both exceed the 10^7 guard",
            message_space, patterns
        )))
    }

    fn oracle_by_messages(
        &self,
        rec: &ReceivedWord,
        survivors: &[usize],
        tau_max: usize,
    ) -> Result<DecodeOutcome, CodecError> {
        let q = self.field.modulus();
        let mut message = vec![0u64; self.k];
        let mut best: Option<(usize, Vec<u64>)> = None;
        let mut tie = false;
        loop {
            let codeword = self.encode(&message)?;
            let dist = survivors
                .iter()
                .filter(|&&p| codeword[p] != rec.symbols[p])
                .count();
            match &best {
                Some((d, _)) if dist < *d => {
                    best = Some((dist, message.clone()));
                    tie = false;
                }
                Some((d, _)) if dist == *d => tie = true,
                None => {
                    best = Some((dist, message.clone()));
                }
                _ => {}
            }
            // Odometer increment on the last coordinate keeps the
            // enumeration in lexicographic message order.
            let mut pos = self.k;
            loop {
                if pos == 0 {
                    let (dist, msg) = best.expect("at least one message enumerated");
                    if dist > tau_max {
                        return if tie {
                            Err(CodecError::AmbiguousDecode { distance: dist })
                        } else {
                            Err(CodecError::DecodeFailure(format!(
                                "nearest codeword at distance {dist} > radius {tau_max}"
                            )))
                        };
                    }
                    let corrected = self.encode(&msg)?;
                    let error_positions: BTreeSet<usize> = survivors
                        .iter()
                        .copied()
                        .filter(|&p| corrected[p] != rec.symbols[p])
                        .collect();
                    return Ok(DecodeOutcome {
                        message: msg,
                        corrected_codeword: corrected,
                        error_positions,
                    });
                }
                pos -= 1;
                message[pos] += 1;
                if message[pos] < q {
                    break;
                }
                message[pos] = 0;
            }
        }
    }

    fn oracle_by_subsets(
        &self,
        rec: &ReceivedWord,
        survivors: &[usize],
        tau_max: usize,
    ) -> Result<DecodeOutcome, CodecError> {
        for radius in 0..=tau_max {
            let mut found: Vec<Vec<u64>> = Vec::new();
            for subset in Combinations::new(survivors.len(), radius) {
                let hidden: BTreeSet<usize> = subset.iter().map(|&i| survivors[i]).collect();
                let kept: Vec<usize> = survivors
                    .iter()
                    .copied()
                    .filter(|p| !hidden.contains(p))
                    .collect();
                if kept.len() < self.k {
                    continue;
                }
                let anchor = &kept[..self.k];
                let sys = self.row_submatrix(anchor);
                let values: Vec<u64> = anchor.iter().map(|&p| rec.symbols[p]).collect();
                let Some(message) = sys.solve(&values)? else {
                    continue;
                };
                let codeword = self.encode(&message)?;
                if kept.iter().all(|&p| codeword[p] == rec.symbols[p])
                    && !found.contains(&message)
                {
                    found.push(message);
                }
            }
            if !found.is_empty() {
                found.sort();
                if found.len() > 1 {
                    return Err(CodecError::AmbiguousDecode { distance: radius });
                }
                let message = found.into_iter().next().unwrap();
                let corrected = self.encode(&message)?;
                let error_positions: BTreeSet<usize> = survivors
                    .iter()
                    .copied()
                    .filter(|&p| corrected[p] != rec.symbols[p])
                    .collect();
                return Ok(DecodeOutcome {
                    message,
                    corrected_codeword: corrected,
                    error_positions,
                });
            }
        }
        Err(CodecError::DecodeFailure(format!(
            "no codeword within radius {tau_max} of the received word"
        )))
    }

    fn check_received(&self, rec: &ReceivedWord) -> Result<(), CodecError> {
        if rec.symbols.len() != self.n {
            return Err(CodecError::Dimension(format!(
                "received word length {} but code length {}",
                rec.symbols.len(),
                self.n
            )));
        }
        if let Some(&bad) = rec.erasures.iter().find(|&&p| p >= self.n) {
            return Err(CodecError::Parameter(format!(
                "erasure position {bad} out of range for length {}",
                self.n
            )));
        }
        Ok(())
    }
}

fn eval_poly(coeffs: &[FieldElement], x: FieldElement, f: PrimeField) -> FieldElement {
    let mut acc = 0u64;
    for &c in coeffs.iter().rev() {
        acc = f.add(f.mul(acc, x), c);
    }
    acc
}

/// Polynomial long division `num / den` with coefficients lowest-first;
/// `den` must be monic as used here.
fn poly_divmod(
    num: &[FieldElement],
    den: &[FieldElement],
    f: PrimeField,
) -> (Vec<FieldElement>, Vec<FieldElement>) {
    let den_deg = den.len() - 1;
    debug_assert_eq!(den[den_deg], 1, "divisor must be monic");
    let mut rem = num.to_vec();
    if rem.len() < den.len() {
        return (vec![0], rem);
    }
    let mut quot = vec![0u64; rem.len() - den_deg];
    for d in (den_deg..rem.len()).rev() {
        let coeff = rem[d];
        if coeff == 0 {
            continue;
        }
        quot[d - den_deg] = coeff;
        for (i, &dc) in den.iter().enumerate() {
            let idx = d - den_deg + i;
            rem[idx] = f.sub(rem[idx], f.mul(coeff, dc));
        }
    }
    rem.truncate(den_deg.max(1));
    (quot, rem)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Iterator over all k-subsets of `0..n` in lexicographic order.
pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let state = if k <= n {
            Some((0..k).collect())
        } else {
            None
        };
        Combinations { n, k, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        // Advance: find the rightmost index that can still move up.
        let mut next = current.clone();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if next[i] + 1 <= self.n - (self.k - i) {
                next[i] += 1;
                for j in i + 1..self.k {
                    next[j] = next[j - 1] + 1;
                }
                self.state = Some(next);
                break;
            }
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SeededRng;

    fn field() -> PrimeField {
        PrimeField::new(65537).unwrap()
    }

    #[test]
    fn generator_random_submatrices_invertible() {
        let gen = make_generator(15, 9, field()).unwrap();
        assert_eq!(gen.min_distance(), 7);
        let mut rng = SeededRng::new(5);
        for _ in 0..20 {
            let rows = rng.sample_distinct(15, 9);
            assert!(gen.row_submatrix(&rows).inverse().is_ok());
        }
    }

    #[test]
    fn square_generator_is_invertible() {
        let gen = make_generator(7, 7, field()).unwrap();
        assert!(gen.matrix().inverse().is_ok());
    }

    #[test]
    fn all_two_by_two_minors_invertible() {
        let gen = make_generator(12, 2, field()).unwrap();
        let mut count = 0;
        for pair in Combinations::new(12, 2) {
            assert!(gen.row_submatrix(&pair).inverse().is_ok());
            count += 1;
        }
        assert_eq!(count, 66);
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        assert!(make_generator(10, 11, field()).is_err());
        let tiny = PrimeField::new(11).unwrap();
        assert!(make_generator(12, 3, tiny).is_err());
        assert!(make_generator(11, 3, tiny).is_ok());
    }

    #[test]
    fn encode_zero_and_constant() {
        let gen = make_generator(10, 6, field()).unwrap();
        assert_eq!(gen.encode(&[0; 6]).unwrap(), vec![0; 10]);
        let ones = make_generator(5, 1, field()).unwrap();
        assert_eq!(ones.encode(&[42]).unwrap(), vec![42; 5]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let gen = make_generator(10, 6, field()).unwrap();
        let mut rng = SeededRng::new(9);
        let msg = rng.vector(field(), 6);
        let cw = gen.encode(&msg).unwrap();
        let out = gen.decode(&ReceivedWord::clean(cw)).unwrap();
        assert_eq!(out.message, msg);
        assert!(out.error_positions.is_empty());
    }

    #[test]
    fn puncture_keeps_mds_and_enforces_depth() {
        let gen = make_generator(15, 6, field()).unwrap();
        let p = gen
            .puncture(&PuncturePattern::new(10..15))
            .unwrap();
        assert_eq!((p.n(), p.k()), (10, 6));
        assert_eq!(p.min_distance(), 5);
        let unchanged = gen.puncture(&PuncturePattern::new(std::iter::empty())).unwrap();
        assert_eq!(unchanged, gen);
        let too_deep = gen.puncture(&PuncturePattern::new(0..9));
        assert!(matches!(too_deep, Err(CodecError::PunctureTooDeep { z: 9, .. })));
    }

    #[test]
    fn decode_corrects_two_errors_and_flags_positions() {
        let gen = make_generator(15, 6, field()).unwrap();
        let p = gen.puncture(&PuncturePattern::new(10..15)).unwrap();
        let mut rng = SeededRng::new(2);
        let msg = rng.vector(field(), 6);
        let mut word = p.encode(&msg).unwrap();
        word[1] = field().add(word[1], 5);
        word[7] = field().add(word[7], 9);
        let out = p.decode(&ReceivedWord::clean(word)).unwrap();
        assert_eq!(out.message, msg);
        assert_eq!(out.error_positions, BTreeSet::from([1, 7]));
    }

    #[test]
    fn three_errors_exceed_radius_and_oracle_agrees() {
        let p = make_generator(10, 6, field()).unwrap();
        let mut rng = SeededRng::new(33);
        let msg = rng.vector(field(), 6);
        let mut word = p.encode(&msg).unwrap();
        for pos in [0usize, 4, 8] {
            word[pos] = field().add(word[pos], 1 + rng.below(100));
        }
        let rec = ReceivedWord::clean(word);
        let decoded = p.decode(&rec);
        let oracle = p.oracle_decode(&rec);
        match (decoded, oracle) {
            (Err(_), Err(_)) => {}
            (Ok(d), Ok(o)) => {
                // Both land on the same wrong codeword, at distance >= 3 from
                // the true one.
                assert_eq!(d.message, o.message);
                assert_ne!(d.message, msg);
            }
            (d, o) => panic!("decoder and oracle disagree: {d:?} vs {o:?}"),
        }
    }

    #[test]
    fn oracle_matches_decoder_on_random_trials() {
        let p = make_generator(10, 6, field()).unwrap();
        let mut rng = SeededRng::new(4);
        for trial in 0..200 {
            let msg = rng.vector(field(), 6);
            let mut word = p.encode(&msg).unwrap();
            let nerr = (trial % 3) as usize;
            let spots = rng.sample_distinct(10, nerr);
            for &pos in &spots {
                word[pos] = field().add(word[pos], 1 + rng.below(65536));
            }
            let rec = ReceivedWord::clean(word);
            let a = p.decode(&rec).unwrap();
            let b = p.oracle_decode(&rec).unwrap();
            assert_eq!(a.message, b.message);
            assert_eq!(a.message, msg);
            assert_eq!(a.error_positions, b.error_positions);
        }
    }

    #[test]
    fn oracle_zero_word_and_small_field() {
        let tiny = PrimeField::new(11).unwrap();
        let gen = make_generator(6, 2, tiny).unwrap();
        let zero = gen.oracle_decode(&ReceivedWord::clean(vec![0; 6])).unwrap();
        assert_eq!(zero.message, vec![0, 0]);

        // Two errors on a (6,2) code (distance 5) still decode uniquely.
        let mut rng = SeededRng::new(8);
        for _ in 0..50 {
            let msg = rng.vector(tiny, 2);
            let mut word = gen.encode(&msg).unwrap();
            for &pos in rng.sample_distinct(6, 2).iter() {
                word[pos] = tiny.add(word[pos], 1 + rng.below(10));
            }
            let rec = ReceivedWord::clean(word);
            assert_eq!(gen.oracle_decode(&rec).unwrap().message, msg);
            assert_eq!(gen.decode(&rec).unwrap().message, msg);
        }
    }

    #[test]
    fn erasures_and_errors_within_budget_decode() {
        let gen = make_generator(10, 6, field()).unwrap();
        let mut rng = SeededRng::new(21);
        // 2*tau + rho <= d - 1 = 4
        for (tau, rho) in [(0, 0), (0, 4), (1, 2), (2, 0), (1, 1)] {
            for _ in 0..20 {
                let msg = rng.vector(field(), 6);
                let mut word = gen.encode(&msg).unwrap();
                let positions = rng.sample_distinct(10, tau + rho);
                let (err_pos, erase_pos) = positions.split_at(tau);
                for &pos in err_pos {
                    word[pos] = field().add(word[pos], 1 + rng.below(65536));
                }
                let rec = ReceivedWord::with_erasures(word, erase_pos.iter().copied());
                let out = gen.decode(&rec).unwrap();
                assert_eq!(out.message, msg, "tau={tau} rho={rho}");
                assert_eq!(out.corrected_codeword, gen.encode(&msg).unwrap());
                assert!(out.error_positions.iter().all(|p| !rec.erasures.contains(p)));
            }
        }
    }

    #[test]
    fn decode_linear_in_aligned_sums() {
        // Joint error correction rests on the sum of codewords from the same
        // generator being a codeword of the sum message.
        let gen = make_generator(12, 5, field()).unwrap();
        let f = field();
        let mut rng = SeededRng::new(6);
        let m1 = rng.vector(f, 5);
        let m2 = rng.vector(f, 5);
        let c1 = gen.encode(&m1).unwrap();
        let c2 = gen.encode(&m2).unwrap();
        let sum: Vec<u64> = c1.iter().zip(&c2).map(|(&a, &b)| f.add(a, b)).collect();
        let out = gen.decode(&ReceivedWord::clean(sum)).unwrap();
        let expected: Vec<u64> = m1.iter().zip(&m2).map(|(&a, &b)| f.add(a, b)).collect();
        assert_eq!(out.message, expected);
    }

    #[test]
    fn oracle_guard_rejects_oversized_instances() {
        // 65537^5 messages and n = 25 > 20 rule out both oracle modes.
        let gen = make_generator(25, 5, field()).unwrap();
        let rec = ReceivedWord::clean(vec![0; 25]);
        assert!(matches!(
            gen.oracle_decode(&rec),
            Err(CodecError::InstanceTooLarge(_))
        ));
        // n = 20 with a bounded pattern count is allowed.
        let gen = make_generator(20, 16, field()).unwrap();
        let out = gen.oracle_decode(&ReceivedWord::clean(vec![0; 20])).unwrap();
        assert_eq!(out.message, vec![0; 16]);
    }

    #[test]
    fn decoder_oracle_equivalence_on_a_wider_code() {
        // (14, 5): radius 4; exercise every error weight through the radius
        // and one beyond it.
        let gen = make_generator(14, 5, field()).unwrap();
        let f = field();
        let mut rng = SeededRng::new(141);
        for trial in 0..120 {
            let msg = rng.vector(f, 5);
            let mut word = gen.encode(&msg).unwrap();
            let nerr = (trial % 6) as usize; // 0..=5, radius is 4
            for &pos in rng.sample_distinct(14, nerr).iter() {
                word[pos] = f.add(word[pos], 1 + rng.below(65536));
            }
            let rec = ReceivedWord::clean(word);
            match (gen.decode(&rec), gen.oracle_decode(&rec)) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.message, b.message);
                    assert_eq!(a.error_positions, b.error_positions);
                    if nerr <= 4 {
                        assert_eq!(a.message, msg);
                    }
                }
                (Err(_), Err(_)) => assert_eq!(nerr, 5),
                (a, b) => panic!("disagreement at weight {nerr}: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn combinations_enumerate_all() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(4, 0).count(), 1);
        assert_eq!(Combinations::new(3, 3).count(), 1);
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all.last().unwrap(), &vec![2, 3]);
    }
}

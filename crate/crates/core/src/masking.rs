//! Input masks built from maximal-length LFSR sequences.
//!
//! A mask column is an m-sequence with one extra zero inserted into its
//! longest zero run and the first `m - 1` seed bits appended, so that every
//! one of the `2^m` binary m-tuples appears exactly once as a window. The
//! column length is therefore `2^m + m - 1`, which is also the number of
//! virtual nodes. Further columns, one per input variable, are rotations of
//! the first one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DEGREE: usize = 3;
pub const MAX_DEGREE: usize = 16;

/// Feedback polynomial `x^m + sum_{t in taps} x^t` over GF(2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitivePolynomial {
    degree: usize,
    taps: Vec<usize>,
}

impl PrimitivePolynomial {
    /// Validates the degree, the tap set and primitivity (the LFSR must have
    /// period `2^m - 1`).
    pub fn new(degree: usize, taps: &[usize]) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree {degree} outside {MIN_DEGREE}..={MAX_DEGREE}"
            )));
        }
        let mut taps = taps.to_vec();
        taps.sort_unstable_by(|a, b| b.cmp(a));
        taps.dedup();
        if let Some(&t) = taps.iter().find(|&&t| t >= degree) {
            return Err(Error::InvalidArgument(format!(
                "tap x^{t} is not below the degree {degree}"
            )));
        }
        if taps.last() != Some(&0) {
            return Err(Error::InvalidArgument(
                "constant term must be present in a primitive polynomial".into(),
            ));
        }
        let poly = Self { degree, taps };
        let period = poly.period();
        if period != (1 << degree) - 1 {
            return Err(Error::NotPrimitive {
                degree,
                taps: poly.taps,
                period,
            });
        }
        Ok(poly)
    }

    /// Built-in primitive trinomial for each supported degree.
    pub fn default_for(degree: usize) -> Result<Self> {
        let taps: &[usize] = match degree {
            3 => &[1, 0],
            4 => &[1, 0],
            5 => &[2, 0],
            6 => &[1, 0],
            7 => &[1, 0],
            8 => &[4, 3, 2, 0],
            9 => &[4, 0],
            10 => &[3, 0],
            11 => &[2, 0],
            12 => &[6, 4, 1, 0],
            13 => &[4, 3, 1, 0],
            14 => &[5, 3, 1, 0],
            15 => &[1, 0],
            16 => &[5, 3, 2, 0],
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "polynomial degree {degree} outside {MIN_DEGREE}..={MAX_DEGREE}"
                )))
            }
        };
        Self::new(degree, taps)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Exponents with a nonzero coefficient, excluding the leading term, in
    /// decreasing order.
    pub fn taps(&self) -> &[usize] {
        &self.taps
    }

    /// Column length `2^m + m - 1`.
    pub fn mask_len(&self) -> usize {
        (1 << self.degree) + self.degree - 1
    }

    fn period(&self) -> usize {
        let m = self.degree;
        let start: Vec<u8> = (0..m).map(|i| u8::from(i == m - 1)).collect();
        let mut window = start.clone();
        for n in 1..=(1usize << m) {
            let next = self.feedback(&window);
            window.rotate_left(1);
            window[m - 1] = next;
            if window == start {
                return n;
            }
        }
        0
    }

    /// `a_n` from the previous `m` bits `a_{n-m} .. a_{n-1}`.
    fn feedback(&self, window: &[u8]) -> u8 {
        self.taps.iter().fold(0, |acc, &t| acc ^ window[t])
    }
}

fn check_init(poly: &PrimitivePolynomial, init: &[u8]) -> Result<()> {
    if init.len() != poly.degree {
        return Err(Error::InvalidArgument(format!(
            "initial value has {} bits, polynomial degree is {}",
            init.len(),
            poly.degree
        )));
    }
    if init.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArgument("initial value bits must be 0 or 1".into()));
    }
    if init.iter().all(|&b| b == 0) {
        return Err(Error::DegenerateLfsr);
    }
    Ok(())
}

/// Default seed `0, ..., 0, 1`.
pub fn default_init(degree: usize) -> Vec<u8> {
    (0..degree).map(|i| u8::from(i + 1 == degree)).collect()
}

/// Parses a bit string such as `"001"`.
pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidArgument(format!("invalid bit {c:?} in {s:?}"))),
        })
        .collect()
}

/// Maximal-length sequence from the recurrence
/// `a_n = xor over taps t of a_{n - m + t}`, starting with `init`.
pub fn msequence(poly: &PrimitivePolynomial, init: &[u8], length: usize) -> Result<Vec<u8>> {
    check_init(poly, init)?;
    if length == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
    }
    let m = poly.degree;
    let mut seq = init.to_vec();
    while seq.len() < length {
        let n = seq.len();
        seq.push(poly.feedback(&seq[n - m..]));
    }
    seq.truncate(length);
    Ok(seq)
}

/// Binary mask column before the 0 -> -1 substitution: one period of the
/// m-sequence, a zero inserted after the first run of `m - 1` zeros (or at the
/// front if there is none), then `init[..m-1]` appended.
pub fn mask_bits(poly: &PrimitivePolynomial, init: &[u8]) -> Result<Vec<u8>> {
    let m = poly.degree;
    let mut bits = msequence(poly, init, (1 << m) - 1)?;

    let run = m - 1;
    let insert_at = bits
        .windows(run)
        .position(|w| w.iter().all(|&b| b == 0))
        .map_or(0, |start| start + run);
    bits.insert(insert_at, 0);
    bits.extend_from_slice(&init[..m - 1]);
    debug_assert_eq!(bits.len(), poly.mask_len());
    Ok(bits)
}

/// One mask column with entries in {-1, +1}.
pub fn mask_column(poly: &PrimitivePolynomial, init: &[u8]) -> Result<Vec<f64>> {
    Ok(mask_bits(poly, init)?
        .into_iter()
        .map(|b| if b == 0 { -1.0 } else { 1.0 })
        .collect())
}

/// The `N_x x N_u` input mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MaskRepr", into = "MaskRepr")]
pub struct MaskMatrix {
    poly: PrimitivePolynomial,
    init: Vec<u8>,
    n_nodes: usize,
    n_vars: usize,
    /// Row-major, `n_nodes x n_vars`.
    entries: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct MaskRepr {
    m: usize,
    taps: Vec<usize>,
    init: Vec<u8>,
    n_nodes: usize,
    n_vars: usize,
    rows: Vec<Vec<i8>>,
}

impl From<MaskMatrix> for MaskRepr {
    fn from(mask: MaskMatrix) -> Self {
        MaskRepr {
            m: mask.poly.degree,
            taps: mask.poly.taps.clone(),
            init: mask.init.clone(),
            n_nodes: mask.n_nodes,
            n_vars: mask.n_vars,
            rows: mask
                .entries
                .chunks(mask.n_vars)
                .map(<[i8]>::to_vec)
                .collect(),
        }
    }
}

impl TryFrom<MaskRepr> for MaskMatrix {
    type Error = Error;

    fn try_from(r: MaskRepr) -> Result<Self> {
        let poly = PrimitivePolynomial::new(r.m, &r.taps)?;
        let rebuilt = MaskMatrix::new(&poly, &r.init, r.n_vars)?;
        let rows_match = r.rows.len() == rebuilt.n_nodes
            && r
                .rows
                .iter()
                .zip(rebuilt.entries.chunks(rebuilt.n_vars))
                .all(|(a, b)| a.as_slice() == b);
        if r.n_nodes != rebuilt.n_nodes || !rows_match {
            return Err(Error::InvalidArgument(
                "stored mask rows do not match the mask generated from its polynomial and seed"
                    .into(),
            ));
        }
        Ok(rebuilt)
    }
}

impl MaskMatrix {
    /// Column `a` is column 0 rotated downward by `a * floor(N_x / n_vars)`.
    pub fn new(poly: &PrimitivePolynomial, init: &[u8], n_vars: usize) -> Result<Self> {
        let column = mask_bits(poly, init)?;
        let n_nodes = column.len();
        if n_vars == 0 {
            return Err(Error::InvalidArgument("mask needs at least one variable".into()));
        }
        if n_vars > n_nodes {
            return Err(Error::TooManyVariables { n_vars, n_nodes });
        }
        let stride = n_nodes / n_vars;
        let mut entries = vec![0i8; n_nodes * n_vars];
        for a in 0..n_vars {
            let shift = a * stride;
            for i in 0..n_nodes {
                let src = (i + n_nodes - shift) % n_nodes;
                entries[i * n_vars + a] = if column[src] == 0 { -1 } else { 1 };
            }
        }
        Ok(Self {
            poly: poly.clone(),
            init: init.to_vec(),
            n_nodes,
            n_vars,
            entries,
        })
    }

    /// Mask from the built-in polynomial and default seed for degree `m`.
    pub fn with_defaults(m: usize, n_vars: usize) -> Result<Self> {
        Self::new(&PrimitivePolynomial::default_for(m)?, &default_init(m), n_vars)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn polynomial(&self) -> &PrimitivePolynomial {
        &self.poly
    }

    pub fn init(&self) -> &[u8] {
        &self.init
    }

    pub fn get(&self, node: usize, var: usize) -> i8 {
        self.entries[node * self.n_vars + var]
    }

    pub fn column(&self, var: usize) -> Vec<i8> {
        (0..self.n_nodes).map(|i| self.get(i, var)).collect()
    }

    /// `j = M u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut j = vec![0.0; self.n_nodes];
        self.apply_into(u, &mut j)?;
        Ok(j)
    }

    pub(crate) fn apply_into(&self, u: &[f64], j: &mut [f64]) -> Result<()> {
        if u.len() != self.n_vars {
            return Err(Error::shape(
                "apply_mask",
                format!("mask {}x{}", self.n_nodes, self.n_vars),
                format!("input of {}", u.len()),
            ));
        }
        for (i, row) in self.entries.chunks(self.n_vars).enumerate() {
            j[i] = row
                .iter()
                .zip(u)
                .fold(0.0, |acc, (&m, &x)| acc + f64::from(m) * x);
        }
        Ok(())
    }
}

/// Free-function form of [`MaskMatrix::apply`].
pub fn apply_mask(mask: &MaskMatrix, u: &[f64]) -> Result<Vec<f64>> {
    mask.apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn cubic() -> PrimitivePolynomial {
        PrimitivePolynomial::new(3, &[1, 0]).unwrap()
    }

    #[test]
    fn cubic_msequence() {
        assert_eq!(msequence(&cubic(), &[0, 0, 1], 7).unwrap(), vec![0, 0, 1, 0, 1, 1, 1]);
    }

    #[test]
    fn msequence_repeats_with_full_period() {
        assert_eq!(
            msequence(&cubic(), &[0, 0, 1], 14).unwrap(),
            vec![0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 1, 1, 1]
        );
    }

    #[test]
    fn zero_seed_rejected() {
        assert!(matches!(msequence(&cubic(), &[0, 0, 0], 7), Err(Error::DegenerateLfsr)));
        assert!(matches!(MaskMatrix::new(&cubic(), &[0, 0, 0], 1), Err(Error::DegenerateLfsr)));
    }

    #[test]
    fn non_primitive_rejected() {
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2
        assert!(matches!(
            PrimitivePolynomial::new(4, &[2, 0]),
            Err(Error::NotPrimitive { .. })
        ));
        assert!(PrimitivePolynomial::new(3, &[1]).is_err());
        assert!(PrimitivePolynomial::new(2, &[1, 0]).is_err());
    }

    #[test]
    fn cubic_bits_after_insertion() {
        assert_eq!(
            mask_bits(&cubic(), &[0, 0, 1]).unwrap(),
            vec![0, 0, 0, 1, 0, 1, 1, 1, 0, 0]
        );
        assert_eq!(
            mask_column(&cubic(), &[0, 0, 1]).unwrap(),
            vec![-1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0]
        );
    }

    #[test]
    fn insertion_at_front_when_no_run() {
        // Seed 010 gives 0,1,0,1,1,1,0: the zero pair wraps around, so no
        // window matches and the extra zero goes first.
        let bits = mask_bits(&cubic(), &[0, 1, 0]).unwrap();
        assert_eq!(bits, vec![0, 0, 1, 0, 1, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn lengths_match_node_formula() {
        for (m, n) in [(3, 10), (4, 19), (5, 36), (6, 69)] {
            let mask = MaskMatrix::with_defaults(m, 1).unwrap();
            assert_eq!(mask.n_nodes(), n);
        }
    }

    #[test]
    fn default_polynomials_are_primitive() {
        for m in MIN_DEGREE..=MAX_DEGREE {
            PrimitivePolynomial::default_for(m).unwrap();
        }
    }

    fn windows_cover_all_tuples(bits: &[u8], m: usize) -> bool {
        let seen: HashSet<&[u8]> = bits.windows(m).collect();
        seen.len() == 1 << m
    }

    #[test]
    fn default_columns_cover_every_tuple() {
        for m in 3..=8 {
            let poly = PrimitivePolynomial::default_for(m).unwrap();
            let bits = mask_bits(&poly, &default_init(m)).unwrap();
            assert!(windows_cover_all_tuples(&bits, m), "m = {m}");
        }
    }

    #[test]
    fn single_run_of_m_negatives() {
        for m in 3..=6 {
            let poly = PrimitivePolynomial::default_for(m).unwrap();
            let col = mask_column(&poly, &default_init(m)).unwrap();
            let runs: Vec<usize> = col
                .split(|&v| v > 0.0)
                .map(<[f64]>::len)
                .filter(|&l| l >= m)
                .collect();
            assert_eq!(runs, vec![m], "m = {m}");
        }
    }

    #[test]
    fn single_variable_is_the_column() {
        let mask = MaskMatrix::new(&cubic(), &[0, 0, 1], 1).unwrap();
        assert_eq!(mask.column(0), vec![-1, -1, -1, 1, -1, 1, 1, 1, -1, -1]);
    }

    #[test]
    fn second_column_rotated_by_half() {
        let mask = MaskMatrix::new(&cubic(), &[0, 0, 1], 2).unwrap();
        let c0 = mask.column(0);
        let mut rotated = c0.clone();
        rotated.rotate_right(5);
        assert_eq!(mask.column(1), rotated);
    }

    #[test]
    fn columns_are_rotations() {
        let mask = MaskMatrix::with_defaults(5, 13).unwrap();
        let c0 = mask.column(0);
        for a in 0..13 {
            let col = mask.column(a);
            assert!(col.iter().all(|&v| v == 1 || v == -1));
            assert!((0..36).any(|s| {
                let mut r = c0.clone();
                r.rotate_right(s);
                r == col
            }));
        }
        assert_eq!(mask, MaskMatrix::with_defaults(5, 13).unwrap());
    }

    #[test]
    fn too_many_variables() {
        assert!(matches!(
            MaskMatrix::with_defaults(3, 11),
            Err(Error::TooManyVariables { n_vars: 11, n_nodes: 10 })
        ));
    }

    #[test]
    fn apply_cases() {
        let mask = MaskMatrix::with_defaults(3, 2).unwrap();
        assert_eq!(mask.apply(&[0.0, 0.0]).unwrap(), vec![0.0; 10]);
        let j = mask.apply(&[2.0, -1.0]).unwrap();
        for i in 0..10 {
            let want = 2.0 * f64::from(mask.get(i, 0)) - f64::from(mask.get(i, 1));
            assert_eq!(j[i], want);
        }
        assert!(mask.apply(&[1.0]).is_err());

        let single = MaskMatrix::with_defaults(3, 1).unwrap();
        let col: Vec<f64> = single.column(0).into_iter().map(f64::from).collect();
        assert_eq!(single.apply(&[1.0]).unwrap(), col);
    }

    #[test]
    fn apply_is_linear() {
        let mask = MaskMatrix::with_defaults(4, 3).unwrap();
        let u = [0.3, -1.2, 2.5];
        let v = [1.1, 0.4, -0.7];
        let (a, b) = (1.7, -0.45);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = mask.apply(&mix).unwrap();
        let ju = mask.apply(&u).unwrap();
        let jv = mask.apply(&v).unwrap();
        for i in 0..lhs.len() {
            assert!((lhs[i] - (a * ju[i] + b * jv[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn serde_round_trip_and_tamper_check() {
        let mask = MaskMatrix::with_defaults(4, 3).unwrap();
        let json = serde_json::to_string(&mask).unwrap();
        let back: MaskMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mask);
        let tampered = json.replacen("[-1,", "[1,", 1);
        assert!(serde_json::from_str::<MaskMatrix>(&tampered).is_err());
    }
}

//! Brute-force reference implementations used to cross-check the `dfr` crate.
//!
//! Nothing here is shared with the production code paths: every routine works
//! on plain nested `Vec`s and is written as the most literal loop that computes
//! the quantity. They are slow on purpose and guarded to small sizes.

/// Largest node count the oracles accept.
pub const MAX_NODES: usize = 12;
/// Longest trajectory the oracles accept.
pub const MAX_STEPS: usize = 50;
/// Largest square system the explicit inverse accepts.
pub const MAX_SYSTEM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub description: &'static str,
}

impl<T> OracleResult<T> {
    fn new(value: T, description: &'static str) -> Self {
        Self { value, description }
    }
}

/// Shifted dot-product features by a literal loop over (i, j, k).
///
/// `states` holds x(0), x(1), ..., x(T). The result is laid out row-major as an
/// N_x x (N_x + 1) matrix whose last column is the plain state sum.
pub fn oracle_dprr(states: &[Vec<f64>]) -> OracleResult<Vec<f64>> {
    assert!(states.len() >= 2, "need at least x(0) and x(1)");
    let n = states[0].len();
    let t = states.len() - 1;
    assert!(n <= MAX_NODES && t <= MAX_STEPS, "oracle size guard");

    let mut out = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for j in 0..=n {
            let mut acc = 0.0;
            for k in 1..=t {
                let shifted = if j == n { 1.0 } else { states[k - 1][j] };
                acc += states[k][i] * shifted;
            }
            out[i * (n + 1) + j] = acc;
        }
    }
    OracleResult::new(out, "triple loop over node pairs and time with a one-step shift")
}

/// Unshifted node-pair dot products, sum over k of x(k)_i x(k)_j.
pub fn oracle_gram(states: &[Vec<f64>]) -> OracleResult<Vec<Vec<f64>>> {
    let n = states[0].len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            for s in &states[1..] {
                g[i][j] += s[i] * s[j];
            }
        }
    }
    OracleResult::new(g, "unshifted state dot products")
}

/// One reservoir update, transcribed line by line from the cascade pseudo code
/// with the quadratic Mackey-Glass nonlinearity.
pub fn oracle_step(
    prev: &[f64],
    j: &[f64],
    gamma: f64,
    eta: f64,
    theta: f64,
) -> OracleResult<Vec<f64>> {
    let n = prev.len();
    assert_eq!(n, j.len());
    assert!(n <= MAX_NODES * 8, "oracle size guard");

    let f = |x: f64, jj: f64| -> f64 {
        let t = x + gamma * jj;
        eta * t / (1.0 + t * t)
    };
    let e = (-theta).exp();

    let mut x = vec![0.0; n];
    x[0] = prev[n - 1] * e + (1.0 - e) * f(prev[0], j[0]);
    for k in 1..n {
        x[k] = x[k - 1] * e + (1.0 - e) * f(prev[k], j[k]);
    }
    OracleResult::new(x, "literal cascade transcription")
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn oracle_inverse(m: &[Vec<f64>]) -> OracleResult<Vec<Vec<f64>>> {
    let n = m.len();
    assert!(n <= MAX_SYSTEM, "oracle size guard");
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.extend((0..n).map(|c| if c == i { 1.0 } else { 0.0 }));
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        assert!(aug[pivot][col].abs() > 1e-300, "oracle: singular matrix");
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = aug[r][col];
                if factor != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= factor * aug[col][c];
                    }
                }
            }
        }
    }
    let inv = aug.into_iter().map(|r| r[n..].to_vec()).collect();
    OracleResult::new(inv, "Gauss-Jordan inverse")
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner);
            (0..cols)
                .map(|c| (0..inner).map(|k| row[k] * b[k][c]).sum())
                .collect()
        })
        .collect()
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len())
        .map(|c| a.iter().map(|r| r[c]).collect())
        .collect()
}

/// A B^T (B B^T + reg I)^-1 through an explicit inverse.
pub fn oracle_ridge(a: &[Vec<f64>], b: &[Vec<f64>], reg: f64) -> OracleResult<Vec<Vec<f64>>> {
    let bt = transpose(b);
    let mut gram = mat_mul(b, &bt);
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += reg;
    }
    let inv = oracle_inverse(&gram).value;
    let abt = mat_mul(a, &bt);
    OracleResult::new(mat_mul(&abt, &inv), "explicit inverse of the regularized Gram matrix")
}

fn augmented_previous(states: &[Vec<f64>]) -> Vec<Vec<f64>> {
    // rows: nodes then the constant row; columns: x'(0) .. x'(T-1)
    let n = states[0].len();
    let t = states.len() - 1;
    let mut m = vec![vec![0.0; t]; n + 1];
    for k in 0..t {
        for i in 0..n {
            m[i][k] = states[k][i];
        }
        m[n][k] = 1.0;
    }
    m
}

fn row_major(m: Vec<Vec<f64>>) -> Vec<f64> {
    m.into_iter().flatten().collect()
}

/// Output model space features from the explicit pseudoinverse formula.
///
/// `inputs` holds u(1) .. u(T); `states` holds x(0) .. x(T).
pub fn oracle_oms(inputs: &[Vec<f64>], states: &[Vec<f64>], lambda: f64) -> OracleResult<Vec<f64>> {
    assert_eq!(inputs.len() + 1, states.len());
    assert!(states[0].len() <= MAX_NODES && inputs.len() <= MAX_STEPS);
    let target = transpose(inputs);
    let design = augmented_previous(states);
    let r = oracle_ridge(&target, &design, lambda).value;
    OracleResult::new(row_major(r), "explicit pseudoinverse one-step input predictor")
}

/// Reservoir model space features from the explicit pseudoinverse formula.
pub fn oracle_rms(states: &[Vec<f64>], lambda: f64) -> OracleResult<Vec<f64>> {
    assert!(states[0].len() <= MAX_NODES && states.len() <= MAX_STEPS + 1);
    let target = transpose(&states[1..]);
    let design = augmented_previous(states);
    let r = oracle_ridge(&target, &design, lambda).value;
    OracleResult::new(row_major(r), "explicit pseudoinverse one-step state predictor")
}

/// Small xorshift generator for fixtures. Independent of any generator in `dfr`.
#[derive(Debug, Clone)]
pub struct FixtureRng(u64);

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| self.uniform(-1.0, 1.0)).collect())
            .collect()
    }

    /// Random trajectory x(0)=0, x(1..T) uniform in [-1, 1).
    pub fn trajectory(&mut self, nodes: usize, steps: usize) -> Vec<Vec<f64>> {
        let mut states = vec![vec![0.0; nodes]];
        states.extend(self.matrix(steps, nodes));
        states
    }
}

//! Linear readout trained by ridge regression on one-hot targets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ridge_solve_gram, Matrix};
use crate::representation::{Representation, RepresentationKind};

/// Samples folded into the Gram matrix per block.
const BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// `N_y x (N_r + 1)`; the last column multiplies the constant term.
    pub w_out: Matrix,
    pub classes: Vec<String>,
    pub rep_kind: RepresentationKind,
    pub beta: f64,
}

/// Normal-equation terms `sum r' r'^T` and `sum y r'^T` over augmented
/// samples `r' = [r, 1]`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    dim: usize,
    n_classes: usize,
    gram: Vec<f64>,
    cross: Vec<f64>,
    samples: usize,
}

impl NormalEquations {
    pub fn new(n_features: usize, n_classes: usize) -> Self {
        let dim = n_features + 1;
        Self {
            dim,
            n_classes,
            gram: vec![0.0; dim * dim],
            cross: vec![0.0; n_classes * dim],
            samples: 0,
        }
    }

    /// Adds samples in order. Each Gram row is updated by one task, and within
    /// a row samples are summed in input order, so the result does not depend
    /// on the number of threads.
    pub fn add<'a>(&mut self, samples: impl IntoIterator<Item = (&'a [f64], usize)>) -> Result<()> {
        let d = self.dim;
        let mut block: Vec<f64> = Vec::with_capacity(BLOCK * d);
        let mut labels: Vec<usize> = Vec::with_capacity(BLOCK);
        for (row, label) in samples {
            if row.len() + 1 != d {
                return Err(Error::shape("readout train", d - 1, row.len()));
            }
            if label >= self.n_classes {
                return Err(Error::InvalidArgument(format!(
                    "label index {label} out of range for {} classes",
                    self.n_classes
                )));
            }
            block.extend_from_slice(row);
            block.push(1.0);
            labels.push(label);
            if labels.len() == BLOCK {
                self.fold_block(&block, &labels);
                block.clear();
                labels.clear();
            }
        }
        if !labels.is_empty() {
            self.fold_block(&block, &labels);
        }
        Ok(())
    }

    fn fold_block(&mut self, block: &[f64], labels: &[usize]) {
        let d = self.dim;
        self.gram
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(i, grow)| {
                for r in block.chunks(d) {
                    let ri = r[i];
                    if ri == 0.0 {
                        continue;
                    }
                    for (g, &rj) in grow[i..].iter_mut().zip(&r[i..]) {
                        *g += ri * rj;
                    }
                }
            });
        for (r, &c) in block.chunks(d).zip(labels) {
            for (a, &v) in self.cross[c * d..(c + 1) * d].iter_mut().zip(r) {
                *a += v;
            }
        }
        self.samples += labels.len();
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `(Y R'^T, R' R'^T)` as matrices.
    pub fn matrices(&self) -> Result<(Matrix, Matrix)> {
        let d = self.dim;
        let mut g = self.gram.clone();
        for i in 0..d {
            for j in 0..i {
                g[i * d + j] = g[j * d + i];
            }
        }
        Ok((
            Matrix::new(self.n_classes, d, self.cross.clone())?,
            Matrix::new(d, d, g)?,
        ))
    }

    pub fn solve(&self, beta: f64) -> Result<Matrix> {
        let (cross, gram) = self.matrices()?;
        ridge_solve_gram(&cross, &gram, beta)
    }
}

/// Trains `W_out = Y R'^T (R' R'^T + beta I)^-1`.
///
/// `labels[i]` is the class index of `reps[i]`. Per-step representations
/// contribute one sample per row, all carrying the instance label.
pub fn train(reps: &[Representation], labels: &[usize], classes: &[String], beta: f64) -> Result<ReadoutModel> {
    if reps.len() != labels.len() {
        return Err(Error::shape("train", format!("{} representations", reps.len()), format!("{} labels", labels.len())));
    }
    let first = reps.first().ok_or(Error::EmptySplit("train"))?;
    let kind = *first.kind();
    let width = first.len();
    if let Some(bad) = reps.iter().find(|r| *r.kind() != kind || r.len() != width) {
        return Err(Error::KindMismatch {
            expected: format!("{kind} of length {width}"),
            found: format!("{} of length {}", bad.kind(), bad.len()),
        });
    }
    let mut seen = vec![false; classes.len()];
    for &l in labels {
        *seen.get_mut(l).ok_or_else(|| {
            Error::InvalidArgument(format!("label index {l} out of range for {} classes", classes.len()))
        })? = true;
    }
    let distinct = seen.iter().filter(|&&s| s).count();
    if distinct < 2 {
        return Err(Error::TooFewClasses(distinct));
    }

    let mut ne = NormalEquations::new(width, classes.len());
    ne.add(
        reps.iter()
            .zip(labels)
            .flat_map(|(r, &l)| r.rows().map(move |row| (row, l))),
    )?;
    Ok(ReadoutModel {
        w_out: ne.solve(beta)?,
        classes: classes.to_vec(),
        rep_kind: kind,
        beta,
    })
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate().skip(1) {
        if v > y[best] {
            best = i;
        }
    }
    best
}

/// Most frequent index; ties go to the lowest index.
pub fn mode(indices: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &i in indices {
        counts[i] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl ReadoutModel {
    pub fn n_features(&self) -> usize {
        self.w_out.cols() - 1
    }

    /// `y = W_out [r, 1]` for one feature row.
    pub fn scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::shape("predict", self.n_features(), row.len()));
        }
        let w = self.w_out.cols();
        Ok((0..self.w_out.rows())
            .map(|c| {
                let wr = self.w_out.row(c);
                wr[..w - 1]
                    .iter()
                    .zip(row)
                    .fold(0.0, |acc, (a, b)| acc + a * b)
                    + wr[w - 1]
            })
            .collect())
    }

    fn check_kind(&self, rep: &Representation) -> Result<()> {
        if *rep.kind() != self.rep_kind {
            return Err(Error::KindMismatch {
                expected: self.rep_kind.to_string(),
                found: rep.kind().to_string(),
            });
        }
        Ok(())
    }

    /// Class index for a single-row representation.
    pub fn predict_index(&self, rep: &Representation) -> Result<usize> {
        self.check_kind(rep)?;
        if rep.kind().is_per_step() {
            return self.predict_drs_index(rep);
        }
        Ok(argmax(&self.scores(rep.features())?))
    }

    /// Per-step argmax followed by the mode over steps.
    pub fn predict_drs_index(&self, rep: &Representation) -> Result<usize> {
        self.check_kind(rep)?;
        if rep.n_rows() == 0 {
            return Err(Error::EmptyTrajectory);
        }
        let votes = rep
            .rows()
            .map(|row| self.scores(row).map(|y| argmax(&y)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mode(&votes, self.classes.len()))
    }

    pub fn predict(&self, rep: &Representation) -> Result<&str> {
        Ok(&self.classes[self.predict_index(rep)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::Trajectory;
    use crate::representation::{drs, lrs};
    use dfr_testkit::FixtureRng;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("k{i}")).collect()
    }

    fn lrs_rep(v: &[f64]) -> Representation {
        let t = Trajectory::from_states(&[vec![0.0; v.len()], v.to_vec()]).unwrap();
        lrs(&t).unwrap()
    }

    fn clusters(rng: &mut FixtureRng, n: usize) -> (Vec<Representation>, Vec<usize>) {
        let mut reps = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let center = if c == 0 { (-2.0, 1.0) } else { (2.0, -1.0) };
            reps.push(lrs_rep(&[center.0 + rng.uniform(-0.5, 0.5), center.1 + rng.uniform(-0.5, 0.5)]));
            labels.push(c);
        }
        (reps, labels)
    }

    #[test]
    fn separable_clusters_fit_perfectly() {
        let mut rng = FixtureRng::new(1);
        let (reps, labels) = clusters(&mut rng, 40);
        let model = train(&reps, &labels, &classes(2), 1e-6).unwrap();
        assert_eq!(model.w_out.shape(), (2, 3));
        for (r, &l) in reps.iter().zip(&labels) {
            assert_eq!(model.predict_index(r).unwrap(), l);
        }
        assert_eq!(model.predict(&reps[1]).unwrap(), "k1");
    }

    #[test]
    fn single_class_rejected() {
        let reps = vec![lrs_rep(&[1.0]), lrs_rep(&[2.0])];
        assert!(matches!(train(&reps, &[0, 0], &classes(2), 0.1), Err(Error::TooFewClasses(1))));
        assert!(train(&reps, &[0], &classes(2), 0.1).is_err());
        assert!(train(&reps, &[0, 5], &classes(2), 0.1).is_err());
    }

    #[test]
    fn normal_equation_holds() {
        let mut rng = FixtureRng::new(9);
        let reps: Vec<_> = (0..30).map(|_| lrs_rep(&[rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])).collect();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let beta = 0.01;
        let model = train(&reps, &labels, &classes(3), beta).unwrap();

        // Y and R' built explicitly, independent of the blocked accumulation
        let rprime = Matrix::from_columns(
            &reps.iter().map(|r| {
                let mut v = r.features().to_vec();
                v.push(1.0);
                v
            }).collect::<Vec<_>>(),
        ).unwrap();
        let y = Matrix::from_columns(
            &labels.iter().map(|&l| (0..3).map(|c| if c == l { 1.0 } else { 0.0 }).collect()).collect::<Vec<_>>(),
        ).unwrap();
        let mut g = crate::linalg::matmul_transposed(&rprime, &rprime).unwrap();
        for i in 0..4 {
            g.set(i, i, g.get(i, i) + beta);
        }
        let lhs = crate::linalg::matmul(&model.w_out, &g).unwrap();
        let rhs = crate::linalg::matmul_transposed(&y, &rprime).unwrap();
        let scale = rhs.max_abs();
        for (a, b) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn norm_shrinks_with_beta() {
        let mut rng = FixtureRng::new(5);
        for _ in 0..10 {
            let (reps, labels) = clusters(&mut rng, 20);
            let mut last = f64::INFINITY;
            for beta in [1e-4, 1e-2, 1.0, 100.0] {
                let n = train(&reps, &labels, &classes(2), beta).unwrap().w_out.frobenius_norm();
                assert!(n <= last + 1e-12);
                last = n;
            }
        }
    }

    #[test]
    fn blocked_accumulation_spans_blocks() {
        let mut rng = FixtureRng::new(6);
        let (reps, labels) = clusters(&mut rng, 3 * BLOCK + 17);
        let mut ne = NormalEquations::new(2, 2);
        ne.add(reps.iter().zip(&labels).map(|(r, &l)| (r.features(), l))).unwrap();
        assert_eq!(ne.samples(), 3 * BLOCK + 17);
        let (_, g) = ne.matrices().unwrap();
        assert_eq!(g.get(2, 2), (3 * BLOCK + 17) as f64);
        assert_eq!(g.get(0, 1), g.get(1, 0));
    }

    #[test]
    fn argmax_and_mode_ties() {
        assert_eq!(argmax(&[0.9, 0.1]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
        assert_eq!(mode(&[2, 2, 2], 3), 2);
        assert_eq!(mode(&[0, 0, 1], 2), 0);
        assert_eq!(mode(&[0, 1, 0, 1], 2), 0);
        assert_eq!(mode(&[1, 0, 1, 0], 2), 0);
    }

    fn fixed_model(w: Vec<f64>, n_classes: usize, kind: RepresentationKind) -> ReadoutModel {
        let cols = w.len() / n_classes;
        ReadoutModel {
            w_out: Matrix::new(n_classes, cols, w).unwrap(),
            classes: classes(n_classes),
            rep_kind: kind,
            beta: 0.0,
        }
    }

    #[test]
    fn argmax_invariant_under_positive_scaling() {
        let mut rng = FixtureRng::new(8);
        let (reps, labels) = clusters(&mut rng, 30);
        let model = train(&reps, &labels, &classes(2), 0.1).unwrap();
        let scaled = ReadoutModel { w_out: model.w_out.scaled(2.0), ..model.clone() };
        for r in &reps {
            assert_eq!(model.predict_index(r).unwrap(), scaled.predict_index(r).unwrap());
        }
    }

    #[test]
    fn drs_voting() {
        // Scores: class 0 gets x, class 1 gets 0.5, class 2 gets -x.
        let model = fixed_model(vec![1.0, 0.0, 0.0, 0.5, -1.0, 0.0], 3, RepresentationKind::Drs);
        let t = |xs: &[f64]| {
            let mut states = vec![vec![0.0]];
            states.extend(xs.iter().map(|&x| vec![x]));
            drs(&Trajectory::from_states(&states).unwrap()).unwrap()
        };
        assert_eq!(model.predict_drs_index(&t(&[-2.0, -3.0, -1.0])).unwrap(), 2);
        assert_eq!(model.predict_drs_index(&t(&[1.0, 2.0, 0.0])).unwrap(), 0);
        assert_eq!(model.predict_drs_index(&t(&[1.0, 0.0, 1.0, 0.0])).unwrap(), 0);
        assert_eq!(model.predict_drs_index(&t(&[0.2, -2.0, 0.1, -3.0])).unwrap(), 1);

        // one step: same as predicting that single state
        let single = t(&[0.3]);
        assert_eq!(
            model.predict_drs_index(&single).unwrap(),
            argmax(&model.scores(single.features()).unwrap())
        );
    }

    #[test]
    fn predict_errors() {
        let model = fixed_model(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0], 2, RepresentationKind::Lrs);
        assert!(model.predict_index(&lrs_rep(&[1.0, 2.0, 3.0])).is_err());
        let d = drs(&Trajectory::from_states(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap()).unwrap();
        assert!(matches!(model.predict_index(&d), Err(Error::KindMismatch { .. })));
    }
}

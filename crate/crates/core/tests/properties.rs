use proptest::prelude::*;

use dfr::dataset::{self, synth, SynthSpec, TimeSeriesInstance};
use dfr::masking::MaskMatrix;
use dfr::pipeline::{evaluate, fit_dataset, ExperimentConfig};
use dfr::readout::{argmax, mode};
use dfr::representation::{compute, RepresentationKind, RepresentationTag};
use dfr::reservoir::{run, DfrParams};

fn series(values: &[f64], n_vars: usize) -> TimeSeriesInstance {
    let t = values.len() / n_vars;
    let channels = (0..n_vars).map(|v| values[v * t..(v + 1) * t].to_vec()).collect();
    TimeSeriesInstance::new("p", "a", channels).unwrap()
}

proptest! {
    #[test]
    fn mask_columns_are_rotations(m in 3usize..=6, vars_frac in 0.0f64..1.0) {
        let n = (1 << m) + m - 1;
        let n_vars = 1 + (vars_frac * (n - 1) as f64) as usize;
        let mask = MaskMatrix::with_defaults(m, n_vars).unwrap();
        let base = mask.column(0);
        let stride = n / n_vars;
        prop_assert!(base.iter().all(|&v| v == 1 || v == -1));
        for a in 0..n_vars {
            let col = mask.column(a);
            for i in 0..n {
                prop_assert_eq!(col[(i + a * stride) % n], base[i]);
            }
        }
    }

    #[test]
    fn states_stay_within_half_eta(
        values in prop::collection::vec(-50.0f64..50.0, 2..80),
        gamma in 0.0f64..5.0,
        eta in 0.01f64..5.0,
        theta in 0.01f64..2.0,
    ) {
        let n_vars = 2;
        let values = &values[..values.len() / n_vars * n_vars];
        let mask = MaskMatrix::with_defaults(3, n_vars).unwrap();
        let params = DfrParams::new(gamma, eta, theta, 2, mask.n_nodes()).unwrap();
        let traj = run(&series(values, n_vars), &mask, &params).unwrap();
        for x in traj.states() {
            prop_assert!(x.iter().all(|v| v.abs() <= eta / 2.0 + 1e-12));
        }
    }

    #[test]
    fn truncated_input_gives_prefix(values in prop::collection::vec(-2.0f64..2.0, 2..60), cut in 0.0f64..1.0) {
        let s = series(&values, 1);
        let k = 1 + (cut * (s.len() - 1) as f64) as usize;
        let mask = MaskMatrix::with_defaults(4, 1).unwrap();
        let params = DfrParams::new(0.3, 1.0, 0.25, 2, mask.n_nodes()).unwrap();
        let full = run(&s, &mask, &params).unwrap();
        let part = run(&s.truncated(k).unwrap(), &mask, &params).unwrap();
        for i in 0..=k {
            prop_assert_eq!(full.state(i), part.state(i));
        }
    }

    #[test]
    fn representation_lengths(t in 1usize..30, n_vars in 1usize..4, seed in any::<u64>()) {
        let values: Vec<f64> = (0..t * n_vars).map(|i| ((i as u64 ^ seed) % 97) as f64 / 48.0 - 1.0).collect();
        let s = series(&values, n_vars);
        let mask = MaskMatrix::with_defaults(3, n_vars).unwrap();
        let params = DfrParams::new(0.5, 1.0, 0.25, 2, mask.n_nodes()).unwrap();
        let kinds = [
            RepresentationKind::Lrs,
            RepresentationKind::Drs,
            RepresentationKind::MrsUpad { t_max: t + 3 },
            RepresentationKind::MrsXpad { t_max: t + 3 },
            RepresentationKind::Oms { lambda: 1.0 },
            RepresentationKind::Rms { lambda: 1.0 },
            RepresentationKind::Dprr,
        ];
        for kind in kinds {
            let r = compute(&kind, &s, &mask, &params).unwrap();
            prop_assert_eq!(r.len(), kind.feature_len(10, n_vars));
            prop_assert_eq!(r.n_rows(), if kind.is_per_step() { t } else { 1 });
            prop_assert!(r.features().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn dprr_constant_column_is_state_sum(values in prop::collection::vec(-3.0f64..3.0, 1..40)) {
        let s = series(&values, 1);
        let mask = MaskMatrix::with_defaults(3, 1).unwrap();
        let params = DfrParams::new(0.4, 1.0, 0.3, 2, 10).unwrap();
        let traj = run(&s, &mask, &params).unwrap();
        let r = compute(&RepresentationKind::Dprr, &s, &mask, &params).unwrap();
        for i in 0..10 {
            let sum: f64 = (1..=traj.len()).map(|k| traj.state(k)[i]).sum();
            prop_assert!((r.features()[i * 11 + 10] - sum).abs() <= 1e-12 * (1.0 + sum.abs()));
        }
    }

    #[test]
    fn argmax_and_mode_prefer_lowest_index(y in prop::collection::vec(-3i32..3, 1..12)) {
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let i = argmax(&yf);
        let max = y.iter().copied().max().unwrap();
        prop_assert_eq!(y[i], max);
        prop_assert_eq!(i, y.iter().position(|&v| v == max).unwrap());

        let idx: Vec<usize> = y.iter().map(|&v| (v + 3) as usize).collect();
        let m = mode(&idx, 6);
        let count = |c: usize| idx.iter().filter(|&&v| v == c).count();
        prop_assert!((0..6).all(|c| count(c) < count(m) || (count(c) == count(m) && c >= m)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rcts_round_trip_is_exact(classes in 1usize..4, n_vars in 1usize..4, seed in any::<u64>()) {
        let ds = synth(&SynthSpec { n_classes: classes, n_vars, n_train: 6, n_test: 3, t_min: 1, t_max: 9, seed, noise: 0.7 }).unwrap();
        let mut buf = Vec::new();
        dataset::write(&ds, &mut buf).unwrap();
        let back = dataset::parse(buf.as_slice(), "mem").unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn report_counts_are_consistent(seed in any::<u64>(), tag_idx in 0usize..7) {
        let ds = synth(&SynthSpec { n_classes: 3, n_vars: 2, n_train: 30, n_test: 21, t_min: 5, t_max: 15, seed, noise: 0.5 }).unwrap();
        let cfg = ExperimentConfig { m: 3, ..ExperimentConfig::new(RepresentationTag::ALL[tag_idx], 0.3, 1.0, 0.25) };
        let model = fit_dataset(&ds, &cfg).unwrap();
        let r = evaluate(&model, &ds.test, false).unwrap();
        let trace: usize = (0..3).map(|i| r.confusion[i][i]).sum();
        prop_assert_eq!(trace, r.correct);
        prop_assert_eq!(r.accuracy, trace as f64 / 21.0);
        for (c, row) in r.confusion.iter().enumerate() {
            prop_assert_eq!(row.iter().sum::<usize>(), 7, "class {}", c);
        }
    }
}

use proptest::prelude::*;

use rpmixer::cli::ExperimentConfig;
use rpmixer::data::{chronological_split, make_windows, window_count, RawSeries};
use rpmixer::eval::metrics;
use rpmixer::tensor::{irfft, rfft};
use rpmixer::Tensor;

fn series(nodes: usize, steps: usize, values: &[f32]) -> RawSeries {
    let data = (0..nodes * steps).map(|i| values[i % values.len()]).collect();
    RawSeries::new(Tensor::new(vec![nodes, 1, steps], data).unwrap(), 5, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_roundtrip_any_length(values in prop::collection::vec(-100.0f64..100.0, 1..200)) {
        let t = values.len();
        let x = Tensor::new(vec![1, t], values).unwrap();
        let back = irfft(&rfft(&x), t).unwrap();
        let scale = x.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn split_is_ordered_and_complete(steps in 10usize..500, a in 1u32..10, b in 1u32..5, c in 1u32..5) {
        let raw = series(2, steps, &[1.0, 2.0, 3.0]);
        if let Ok((train, val, test)) = chronological_split(&raw, [a, b, c]) {
            prop_assert_eq!(train.steps() + val.steps() + test.steps(), steps);
            prop_assert_eq!(RawSeries::concat(&[&train, &val, &test]).unwrap(), raw);
        }
    }

    #[test]
    fn window_count_matches_dataset(steps in 2usize..200, tp in 1usize..20, tf in 1usize..20, stride in 1usize..5) {
        let raw = series(3, steps, &[0.5, -1.0, 2.0, 4.0]);
        let expected = window_count(steps, tp, tf, stride);
        match make_windows(&raw, tp, tf, stride) {
            Ok(w) => {
                prop_assert_eq!(w.len(), expected);
                let last = w.offset(w.len() - 1);
                prop_assert!(last + tp + tf <= steps);
            }
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }

    #[test]
    fn mae_never_exceeds_rmse(pairs in prop::collection::vec((-50.0f64..50.0, 0.5f64..50.0), 1..64)) {
        let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = p.len();
        let m = metrics(
            &Tensor::new(vec![n, 1], p).unwrap(),
            &Tensor::new(vec![n, 1], y).unwrap(),
            true,
        )
        .unwrap()
        .average();
        prop_assert!(m.mae <= m.rmse + 1e-12);
        prop_assert!(m.mape >= 0.0);
    }

    #[test]
    fn config_text_roundtrips(
        seed in any::<u64>(),
        n_block in 1usize..16,
        m_neuron in 0.1f64..4.0,
        lr in 1e-5f64..1e-1,
        pre in any::<bool>(),
        rp in any::<bool>(),
        fd in any::<bool>(),
    ) {
        let mut c = ExperimentConfig::default();
        c.seed = seed;
        c.n_block = n_block;
        c.m_neuron = m_neuron;
        c.lr = lr;
        c.flags.pre_activation = pre;
        c.flags.random_projection = rp;
        c.flags.frequency_domain = fd;
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}

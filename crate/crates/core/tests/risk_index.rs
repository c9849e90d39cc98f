use msgwas::genetics::Outcome;
use msgwas::reseq::{example_risk_panel, risk_index_yields, BinSpec, BinYield};
use msgwas::MarkerCausalModel;

fn p(b: &BinYield) -> (f64, f64) {
    (b.carrier_probability.unwrap(), b.standard_error.unwrap())
}

#[test]
fn example_curves_have_the_expected_shape() {
    let (models, coef) = example_risk_panel();
    let r = risk_index_yields(&models, &coef, &BinSpec::default(), 400_000, 21).unwrap();
    assert!(r.n_bins() >= 3, "{:?}", r.edges);
    assert!(r.empty_bins().is_empty());
    let controls = r.curve(Outcome::Control);
    let cases = r.curve(Outcome::Case);
    for (c, k) in controls.iter().zip(&cases) {
        let ((pc, sc), (pk, sk)) = (p(c), p(k));
        assert!(pk >= pc - 3.0 * (sc * sc + sk * sk).sqrt(), "bin {}: case {pk} control {pc}", c.bin);
    }
    for curve in [&controls, &cases] {
        for w in curve.windows(2) {
            let ((a, sa), (b, sb)) = (p(w[0]), p(w[1]));
            assert!(b >= a - 3.0 * (sa * sa + sb * sb).sqrt(), "bins {} -> {}: {a} {b}", w[0].bin, w[1].bin);
        }
    }
}

#[test]
fn uninformative_markers_give_flat_yield() {
    let models: Vec<MarkerCausalModel> = (0..4)
        .map(|j| MarkerCausalModel::new(0.2 + 0.05 * j as f64, 0.05, 0.0, 2.0).unwrap())
        .collect();
    let r = risk_index_yields(&models, &[0.5, 0.3, 0.8, 0.2], &BinSpec::Quantiles(4), 200_000, 5).unwrap();
    for outcome in Outcome::ALL {
        let curve = r.curve(outcome);
        let total_u: u64 = curve.iter().map(|b| b.units).sum();
        let total_c: u64 = curve.iter().map(|b| b.carriers).sum();
        let overall = total_c as f64 / total_u as f64;
        for b in curve {
            let (v, se) = p(b);
            assert!((v - overall).abs() < 3.5 * se, "{outcome:?} bin {}: {v} vs {overall}", b.bin);
        }
    }
}

#[test]
fn explicit_edges_and_empty_bins_are_reported() {
    let (models, coef) = example_risk_panel();
    let r = risk_index_yields(&models, &coef, &BinSpec::Edges(vec![0.1, 50.0, 60.0]), 20_000, 2).unwrap();
    assert_eq!(r.n_bins(), 4);
    assert!(r.empty_bins().contains(&(Outcome::Control, 2)));
    let empty = r.bins.iter().find(|b| b.units == 0).unwrap();
    assert!(empty.carrier_probability.is_none());
    assert!(risk_index_yields(&models, &coef, &BinSpec::Edges(vec![1.0, 0.5]), 100, 2).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (models, coef) = example_risk_panel();
    let run = |t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| risk_index_yields(&models, &coef, &BinSpec::default(), 50_000, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
}

use ddreg_core::rng::stream_rng;
use ddreg_core::synth::{
    gen_covariates, jump_prevalence, sample_response, sample_response_counted, AlphaSetting,
    GenDesign, KernelKind, Scenario, ALPHA_EASY, ALPHA_HARD,
};
use ddreg_testkit::generator::GeneratorOracle;
use ddreg_testkit::ks;
use rand::Rng;

const ROWS: [[f64; 6]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 0.5, -0.3, 0.8, 0.2, -1.0],
    [1.0, -1.2, 0.7, 0.1, -0.4, 0.9],
    [1.0, 1.5, 1.0, -0.5, 1.1, 0.3],
    [1.0, -0.6, -1.4, -1.0, 0.5, -0.2],
];

fn oracle_for(design: &GenDesign, x: &[f64]) -> GeneratorOracle {
    let (a, b, j) = design.row_parameters(x);
    let c = design.contaminant_shapes;
    GeneratorOracle {
        a,
        b,
        j,
        t: design.t,
        mixture: match design.base_kind {
            ddreg_core::synth::BaseKind::MatchingBeta => None,
            ddreg_core::synth::BaseKind::MixtureBeta => Some((design.mixture_weight, c.a, c.b)),
        },
        decay_rate: match design.kernel_kind {
            KernelKind::Indicator => None,
            KernelKind::DecayingGaussian => Some(design.decay_rate),
        },
    }
}

#[test]
fn rejection_sampler_matches_inverse_cdf_draws() {
    let n = 100_000;
    for (s, scenario) in [Scenario::Matching, Scenario::Mixture, Scenario::Decay]
        .into_iter()
        .enumerate()
    {
        let design = GenDesign::named(scenario, AlphaSetting::Easy, 1, 0);
        for (k, x) in ROWS.iter().enumerate() {
            let oracle = oracle_for(&design, x).tabulate(2000);
            let stream = (s * 10 + k) as u64;
            let mut rng = stream_rng(31, stream);
            let sampled: Vec<f64> = (0..n)
                .map(|_| sample_response(x, &design, &mut rng).unwrap())
                .collect();
            let mut urng = stream_rng(32, stream);
            let reference: Vec<f64> = (0..n).map(|_| oracle.quantile(urng.random())).collect();
            let d = ks::two_sample(&sampled, &reference);
            assert!(d < 0.01, "{scenario:?} row {k}: KS {d}");
        }
    }
}

#[test]
fn jump_prevalence_matches_design() {
    let x = gen_covariates(100_000, 6, &mut stream_rng(5, 0));
    let (easy, _) = jump_prevalence(&ALPHA_EASY, &x);
    let (hard, hard_median) = jump_prevalence(&ALPHA_HARD, &x);
    assert!((easy - 0.99).abs() <= 0.01, "easy prevalence {easy}");
    assert!((hard - 0.96).abs() <= 0.01, "hard prevalence {hard}");
    assert!(
        (hard_median - 0.5).abs() < 0.01,
        "hard median jump {hard_median}"
    );
}

#[test]
fn acceptance_rate_is_bounded_below() {
    for alpha in [AlphaSetting::Easy, AlphaSetting::Hard] {
        let design = GenDesign::named(Scenario::Mixture, alpha, 1, 0);
        let mut rng = stream_rng(6, 0);
        let x = gen_covariates(5000, 6, &mut rng);
        let mut proposals = 0usize;
        let mut max_j = 0.0f64;
        for row in x.row_iter() {
            let row: Vec<f64> = row.iter().copied().collect();
            max_j = max_j.max(design.row_parameters(&row).2);
            proposals += sample_response_counted(&row, &design, &mut rng).unwrap().1;
        }
        let rate = x.nrows() as f64 / proposals as f64;
        assert!(
            rate > (-max_j).exp(),
            "rate {rate} vs bound {}",
            (-max_j).exp()
        );
    }
}

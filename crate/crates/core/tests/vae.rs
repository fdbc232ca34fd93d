// the oracles below are deliberately plain index loops
#![allow(clippy::needless_range_loop)]

use lattice_vae::data::{synth_dataset, Dataset, Split};
use lattice_vae::lattice::LatticeKind;
use lattice_vae::priors::{gaussian_kl_sample, GaussianProxyParams, LaplaceZModel};
use lattice_vae::rng::{seeded, stream};
use lattice_vae::vae::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn direct_model(d: usize, t: usize, seed: u64) -> ModelParams {
    ModelParams::init(&ModelSpec::direct(d, t), &mut seeded(seed)).unwrap()
}

fn proxy_model(d: usize, t: usize, kind: LatticeKind, seed: u64) -> ModelParams {
    ModelParams::init(&ModelSpec::proxy(d, t, kind), &mut seeded(seed)).unwrap()
}

fn binary(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..d)
        .map(|_| (rng.random::<f64>() < 0.4) as u8 as f64)
        .collect()
}

#[test]
fn encode_examples() {
    let mut p = direct_model(3, 3, 1);
    p.enc_a = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    p.enc_b = vec![0.0; 3];
    assert_eq!(encode(&p, &[0.5, -1.0, 2.0]).unwrap(), vec![0.5, -1.0, 2.0]);
    p.enc_a = vec![0.0; 9];
    p.enc_b = vec![1.0, 2.0, 3.0];
    assert_eq!(encode(&p, &[7.0, 8.0, 9.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    assert!(encode(&p, &[1.0]).is_err());
}

#[test]
fn encode_matches_triple_loop() {
    let p = direct_model(10, 4, 2);
    let mut rng = seeded(3);
    let x: Vec<f64> = (0..10).map(|_| rng.random::<f64>() - 0.5).collect();
    let e = encode(&p, &x).unwrap();
    for j in 0..4 {
        let mut want = p.enc_b[j];
        for i in 0..10 {
            want += x[i] * p.enc_a[i * 4 + j];
        }
        assert!((e[j] - want).abs() < 1e-12);
    }
}

#[test]
fn decode_nll_examples() {
    let mut p = direct_model(6, 2, 4);
    p.dec_w = vec![0.0; 12];
    p.dec_c = vec![0.0; 6];
    let x = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    assert!((decode_nll(&p, &[0.3, -2.0], &x).unwrap() - 6.0 * 2f64.ln()).abs() < 1e-12);
    p.dec_c = x
        .iter()
        .map(|&v| if v == 1.0 { 800.0 } else { -800.0 })
        .collect();
    assert_eq!(decode_nll(&p, &[0.0, 0.0], &x).unwrap(), 0.0);
    assert!(decode_nll(&p, &[0.0, 0.0], &[0.5; 6]).is_err());
}

#[test]
fn decode_nll_matches_naive_oracle() {
    let p = direct_model(12, 4, 5);
    let x = binary(12, 6);
    let z = [0.4, -1.1, 0.7, 2.0];
    let mut want = 0.0;
    for k in 0..12 {
        let mut l = p.dec_c[k];
        for j in 0..4 {
            l += z[j] * p.dec_w[j * 12 + k];
        }
        let prob = 1.0 / (1.0 + (-l).exp());
        want -= x[k] * prob.ln() + (1.0 - x[k]) * (1.0 - prob).ln();
    }
    assert!((decode_nll(&p, &z, &x).unwrap() - want).abs() < 1e-10);
}

#[test]
fn large_alpha_rep_cost_is_monotone_in_distance() {
    let m = LaplaceZModel::new(60.0, 1.0).unwrap();
    let mut last = f64::NEG_INFINITY;
    for k in 0..200 {
        let eta = k as f64 * 0.01;
        let c = m.rep_cost(eta);
        assert!(c >= last - 1e-12, "{eta}");
        last = c;
    }
}

#[test]
fn zero_model_loss_decomposes() {
    let mut p = direct_model(16, 4, 7);
    p.enc_a.iter_mut().for_each(|v| *v = 0.0);
    p.dec_w.iter_mut().for_each(|v| *v = 0.0);
    let x = vec![0.0; 16];
    let noise = Noise::draw(&p, &mut seeded(8));
    let parts = forward_direct(&p, &x, &noise, None).unwrap();
    let model = LaplaceZModel::new(1.0, 1.0).unwrap();
    let rep: f64 = noise.unit_dither.iter().map(|v| model.rep_cost(-v)).sum();
    assert!((parts.rec - 16.0 * 2f64.ln()).abs() < 1e-12);
    assert!((parts.rep - rep).abs() < 1e-12);
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..3 {
        let x = binary(20, 100 + seed);
        let models = [
            direct_model(20, 4, seed),
            proxy_model(20, 4, LatticeKind::Z2, seed),
            proxy_model(20, 4, LatticeKind::A2, seed),
            proxy_model(20, 8, LatticeKind::E8, seed),
        ];
        for p in &models {
            let g = finite_diff_check(p, &x, 1e-5, seed).unwrap();
            assert!(g.max_rel_error <= 1e-4, "{:?} {:?}", p.mode, g);
            let bad = finite_diff_check_corrupted(p, &x, 1e-5, seed, true).unwrap();
            assert!(bad.max_rel_error >= 0.5);
        }
    }
}

#[test]
fn shared_laplace_gradients() {
    let mut spec = ModelSpec::direct(10, 3);
    spec.shared_laplace = true;
    let p = ModelParams::init(&spec, &mut seeded(2)).unwrap();
    let g = finite_diff_check(&p, &binary(10, 3), 1e-5, 4).unwrap();
    assert!(g.max_rel_error <= 1e-4, "{g:?}");
}

#[test]
fn finite_diff_rejects_bad_eps() {
    let p = direct_model(4, 2, 1);
    assert!(finite_diff_check(&p, &[0.0; 4], 1e-2, 0).is_err());
}

#[test]
fn code_length_never_reaches_the_encoder() {
    let p = proxy_model(20, 4, LatticeKind::A2, 11);
    let x = binary(20, 12);
    let noise = Noise::draw(&p, &mut seeded(13));
    let mut shifted = p.clone();
    let prior = shifted.prior.as_mut().unwrap();
    prior
        .psi
        .iter_mut()
        .enumerate()
        .for_each(|(i, v)| *v += 0.1 * (i % 3) as f64);
    prior.flag_logit += 1.0;
    let mut a = p.zero_grads();
    let mut b = p.zero_grads();
    let pa = forward_proxy(&p, &x, &noise, None, Some(&mut a)).unwrap();
    let pb = forward_proxy(&shifted, &x, &noise, None, Some(&mut b)).unwrap();
    assert_ne!(pa.code_len, pb.code_len);
    assert_eq!(a.enc_a, b.enc_a);
    assert_eq!(a.enc_b, b.enc_b);
    assert_eq!(a.dec_w, b.dec_w);
    assert_eq!(a.log_sigma_ug_sq, b.log_sigma_ug_sq);
}

#[test]
fn kl_vanishes_without_prior_spread() {
    let p = GaussianProxyParams::new(0.3, 0.0, 2).unwrap();
    let mut rng = seeded(14);
    let mut total = 0.0;
    for _ in 0..10_000 {
        let u: Vec<f64> = (0..2)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                0.3f64.sqrt() * g
            })
            .collect();
        total += gaussian_kl_sample(&[0.0, 0.0], &u, &p).unwrap();
    }
    assert!((total / 10_000.0).abs() < 1e-12);
}

fn dataset() -> Dataset {
    synth_dataset(256, 16, 4, 21).unwrap()
}

fn quick_config(spec: ModelSpec) -> TrainConfig {
    let mut c = TrainConfig::new(spec);
    c.max_epochs = 30;
    c.seed = 5;
    c
}

#[test]
fn training_lowers_the_loss_and_is_deterministic() {
    let data = dataset();
    let spec = ModelSpec::proxy(16, 4, LatticeKind::A2);
    let p = ModelParams::init(&spec, &mut seeded(1)).unwrap();
    let a = train(p.clone(), &quick_config(spec.clone()), &data).unwrap();
    let b = train(p, &quick_config(spec), &data).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.params, b.params);
    assert!(a.history.last().unwrap().train_loss < a.history[0].train_loss);
}

#[test]
fn learning_rate_halves_on_plateau() {
    let data = dataset();
    let spec = ModelSpec::direct(16, 2);
    let p = ModelParams::init(&spec, &mut seeded(1)).unwrap();
    let mut c = quick_config(spec);
    // updates this small leave every parameter unchanged
    c.learning_rate = 1e-300;
    c.patience = 3;
    c.max_anneals = 2;
    let out = train(p, &c, &data).unwrap();
    let lrs: Vec<f64> = out.history.iter().map(|r| r.lr).collect();
    let l = 1e-300;
    assert_eq!(
        lrs,
        vec![
            l,
            l,
            l,
            l / 2.0,
            l / 2.0,
            l / 2.0,
            l / 4.0,
            l / 4.0,
            l / 4.0
        ]
    );
    assert!(out.stopped_early);
}

#[test]
fn single_sample_estimate_is_the_sum_of_costs() {
    let p = proxy_model(16, 4, LatticeKind::Z2, 3);
    let x = binary(16, 4);
    let r = infer_nll(&p, &x, 1, &mut seeded(5), DitherMode::Uniform).unwrap();
    assert_eq!(r.nll, r.rep_cost + r.rec_cost);
}

#[test]
fn zero_dither_gains_nothing_from_more_samples() {
    for p in [
        direct_model(16, 4, 6),
        proxy_model(16, 8, LatticeKind::E8, 6),
    ] {
        let x = binary(16, 7);
        let one = infer_nll(&p, &x, 1, &mut seeded(8), DitherMode::Zero).unwrap();
        let many = infer_nll(&p, &x, 50, &mut seeded(8), DitherMode::Zero).unwrap();
        assert!((one.nll - many.nll).abs() < 1e-12);
    }
}

#[test]
fn codes_shift_with_lattice_points() {
    let p = proxy_model(16, 4, LatticeKind::A2, 9);
    let lattice = code_lattice(&p).unwrap();
    let x = binary(16, 10);
    let e = encode(&p, &x).unwrap();
    let mut rng = seeded(11);
    for _ in 0..100 {
        let u = lattice.sample_dither(&mut rng);
        let shift: Vec<i64> = (0..4).map(|_| rng.random_range(-5..=5)).collect();
        let mut offset = vec![0.0; 4];
        lattice.embed_into(&shift, &mut offset);
        let v: Vec<f64> = e.iter().zip(&u).map(|(a, b)| a + b).collect();
        let w: Vec<f64> = v.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let a = lattice.nearest_point(&v).unwrap().coeffs;
        let b = lattice.nearest_point(&w).unwrap().coeffs;
        let diff: Vec<i64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        assert_eq!(diff, shift);
    }
}

#[test]
fn codes_decode_to_the_dithered_latent() {
    let p = direct_model(16, 4, 12);
    let x = binary(16, 13);
    let unit = draw_unit_dither(&p, &mut seeded(14), DitherMode::Uniform);
    let q = quantize_example(&p, &x, &unit).unwrap();
    let y = decoder_input(&p, &q.coeffs, &q.unit_dither).unwrap();
    let again = decoder_input(&p, &q.coeffs, &unit).unwrap();
    assert_eq!(y, again);
    // z − U stays within one cell of the encoding
    let e = encode(&p, &x).unwrap();
    let lattice = code_lattice(&p).unwrap();
    for j in 0..4 {
        assert!((y[j] - e[j]).abs() <= lattice.deltas()[j] / 2.0 + 1e-12);
    }
}

#[test]
fn trained_direct_model_quantized_cost_matches_continuous_cost() {
    let data = dataset();
    let spec = ModelSpec::direct(16, 4);
    let p = ModelParams::init(&spec, &mut seeded(1)).unwrap();
    let model = train(p, &quick_config(spec), &data).unwrap().params;
    let lattice = code_lattice(&model).unwrap();
    let laplace = model.laplace.as_ref().unwrap();
    for &i in data.indices(Split::Test).iter().take(5) {
        let x = data.example_f64(i);
        let e = encode(&model, &x).unwrap();
        let mut rng = stream(99, i as u64);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let n = 100_000;
        for _ in 0..n {
            let unit = draw_unit_dither(&model, &mut rng, DitherMode::Uniform);
            let q = quantize_example(&model, &x, &unit).unwrap();
            let continuous: f64 = (0..4)
                .map(|j| {
                    let m = laplace.model(j);
                    m.rep_cost(e[j] - lattice.deltas()[j] * unit[j])
                })
                .sum();
            let d = q.code_len - continuous;
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / (n as f64 - 1.0)).sqrt();
        assert!(mean.abs() <= 3.0 * se, "example {i}: {mean} ± {se}");
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(ModelParams::init(&ModelSpec::proxy(16, 3, LatticeKind::A2), &mut seeded(1)).is_err());
    assert!(ModelParams::init(&ModelSpec::direct(0, 3), &mut seeded(1)).is_err());
    let mut c = TrainConfig::new(ModelSpec::direct(4, 2));
    c.anneal_factor = 1.0;
    assert!(c.validate().is_err());
}

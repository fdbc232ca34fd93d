use lattice_vae::lattice::{LatticeBasis, LatticeKind, ScaledProductLattice};
use lattice_vae::priors::{
    estimate_f_s_minus_u, estimate_f_s_minus_u_with_stderr, gaussian_kl_analytic,
    gaussian_kl_sample, GaussianProxyParams, LaplaceZModel, ThetaPrior,
};
use lattice_vae::rng::seeded;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

fn std_normal_density(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt())
        .product()
}

#[test]
fn f_s_minus_u_gaussian_on_z() {
    let z = ScaledProductLattice::unit(LatticeKind::Z);
    let mut rng = seeded(11);
    let est = estimate_f_s_minus_u_with_stderr(std_normal_density, &z, &[0.0], 100_000, &mut rng)
        .unwrap();
    let phi = StdNormal::new(0.0, 1.0).unwrap();
    let exact = phi.cdf(0.5) - phi.cdf(-0.5);
    assert!((exact - 0.3829).abs() < 1e-4);
    assert!(
        (est.mean - exact).abs() < 3.0 * est.stderr,
        "{est:?} vs {exact}"
    );
}

#[test]
fn f_s_minus_u_laplace_on_z() {
    let z = ScaledProductLattice::unit(LatticeKind::Z);
    let model = LaplaceZModel::new(1.0, 1.0).unwrap();
    let mut rng = seeded(12);
    let est =
        estimate_f_s_minus_u_with_stderr(|x| model.density_s(x[0]), &z, &[0.0], 100_000, &mut rng)
            .unwrap();
    let exact = (-model.rep_cost(0.0)).exp();
    assert!((exact - 0.3935).abs() < 1e-4);
    assert!(
        (est.mean - exact).abs() < 3.0 * est.stderr,
        "{est:?} vs {exact}"
    );
}

#[test]
fn f_s_minus_u_single_sample_is_one_evaluation() {
    let a2 = ScaledProductLattice::uniform(LatticeBasis::new(LatticeKind::A2), 1, 0.7).unwrap();
    let eta = [0.2, -0.4];
    let est = estimate_f_s_minus_u(std_normal_density, &a2, &eta, 1, &mut seeded(5)).unwrap();
    let v = a2.sample_dither(&mut seeded(5));
    assert_eq!(est, std_normal_density(&[eta[0] - v[0], eta[1] - v[1]]));
    assert!(estimate_f_s_minus_u(std_normal_density, &a2, &eta, 0, &mut seeded(5)).is_err());
}

#[test]
fn branch_continuity_sweep() {
    for alpha in [0.25, 1.0, 4.0] {
        for delta in [0.5, 1.0, 2.0] {
            let m = LaplaceZModel::new(alpha, delta).unwrap();
            let h = delta / 2.0;
            let inner = -(1.0 - (-alpha * h).exp() * (alpha * h).cosh()).ln();
            let outer = alpha * h - (alpha * h).sinh().ln();
            assert!((inner - outer).abs() < 1e-10, "{alpha} {delta}");
            let below = m.rep_cost(h * (1.0 - 1e-13));
            assert!((below - m.rep_cost(h)).abs() < 1e-10);
        }
    }
}

#[test]
fn conditional_pmf_normalizes_over_cell() {
    for alpha in [0.25, 1.0, 4.0] {
        for delta in [0.5, 1.0, 2.0] {
            let m = LaplaceZModel::new(alpha, delta).unwrap();
            // tail beyond |z| > n is bounded by a geometric series of ratio e^{−αΔ}
            let r = (-alpha * delta).exp();
            let mut n = 1i64;
            while 2.0 * r.powi(n as i32) / (1.0 - r) >= 1e-12 {
                n += 1;
            }
            for k in 0..=20 {
                let u = -delta / 2.0 + delta * (k as f64 + 0.5) / 21.0;
                let total: f64 = (-n..=n).map(|z| m.pmf_log(z, u).unwrap().exp()).sum();
                assert!((total - 1.0).abs() < 1e-8, "{alpha} {delta} {u}: {total}");
            }
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn closed_form_density_integrates_to_one() {
    for (alpha, delta) in [(1.0, 1.0), (0.5, 2.0), (4.0, 0.5)] {
        let m = LaplaceZModel::new(alpha, delta).unwrap();
        let h = delta / 2.0;
        let far = h + 40.0 / alpha;
        let f = |x: f64| m.density_s_minus_u(x);
        let total = simpson(f, -h, h, 2000) + 2.0 * simpson(f, h, far, 20_000);
        assert!((total - 1.0).abs() < 1e-8, "{alpha} {delta}: {total}");
    }
}

#[test]
fn gaussian_kl_sample_is_unbiased() {
    for (e, ug, us) in [(vec![1.0], 1.0, 1.0), (vec![0.3, -0.8, 2.0], 0.4, 1.7)] {
        let p = GaussianProxyParams::new(ug, us, e.len()).unwrap();
        let normal = Normal::new(0.0, ug.sqrt()).unwrap();
        let mut rng = seeded(21);
        let n = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let mut u = vec![0.0; e.len()];
        for _ in 0..n {
            u.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
            let k = gaussian_kl_sample(&e, &u, &p).unwrap();
            sum += k;
            sum_sq += k * k;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / (n as f64 - 1.0)).sqrt();
        let exact = gaussian_kl_analytic(&e, &p).unwrap();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} ± {se} vs {exact}");
    }
}

#[test]
fn theta_prior_mass_over_modeled_support() {
    let cases = [
        (LatticeKind::Z, 30, 2),
        (LatticeKind::Z2, 25, 3),
        (LatticeKind::A2, 25, 4),
        (LatticeKind::E8, 4, 3),
    ];
    let mut rng = seeded(31);
    for (kind, max, t) in cases {
        let basis = LatticeBasis::new(kind);
        let mut prior = ThetaPrior::new(kind, max, t).unwrap();
        prior.init_gaussian(1.3);
        for (i, w) in prior.small_w.iter_mut().enumerate() {
            *w = 0.05 * ((i % 7) as f64 - 3.0);
        }
        prior.psi[max as usize / 2] += 0.4;
        let unit = ScaledProductLattice::unit(kind);
        let u = unit.sample_dither(&mut rng);
        let points = enumerate_to(&basis, max);
        let total: f64 = points
            .iter()
            .map(|c| prior.log_pmf(c, &u).unwrap().exp())
            .sum();
        assert!(total <= 1.0 + 1e-8, "{kind}: {total}");
        assert!((total - 1.0).abs() < 1e-9, "{kind}: {total}");
        // dropping the outermost shell can only lose mass
        let top = prior.shells().last().unwrap();
        let partial: f64 = points
            .iter()
            .filter(|c| basis.norm_sq_int(c) < top)
            .map(|c| prior.log_pmf(c, &u).unwrap().exp())
            .sum();
        assert!(partial < total);
    }
}

#[test]
fn theta_prior_shell_invariance_under_symmetries() {
    let basis = LatticeBasis::new(LatticeKind::Z2);
    let mut prior = ThetaPrior::new(LatticeKind::Z2, 40, 3).unwrap();
    prior.init_gaussian(4.0);
    let mut rng = seeded(41);
    for _ in 0..200 {
        let a = [rng.random_range(-6i64..=6), rng.random_range(-6i64..=6)];
        if basis.norm_sq_int(&a) < 3 || basis.norm_sq_int(&a) > 40 {
            continue;
        }
        let u = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
        let base = prior.log_pmf(&a, &u).unwrap();
        for b in [[a[1], a[0]], [-a[0], a[1]], [a[0], -a[1]], [-a[1], -a[0]]] {
            assert_eq!(prior.log_pmf(&b, &u).unwrap(), base);
        }
    }
}

fn enumerate_to(basis: &LatticeBasis, max: u64) -> Vec<Vec<i64>> {
    let points = if basis.kind() == LatticeKind::E8 {
        e8_by_coordinates(basis, max)
    } else {
        let m = basis.dim();
        let r = 2 * ((max as f64).sqrt().ceil() as i64 + 1);
        let mut out = Vec::new();
        for_each_in_box(m, r, |c| {
            if basis.norm_sq_int(c) <= max {
                out.push(c.to_vec());
            }
        });
        out
    };
    let expected: u64 = lattice_vae::lattice::theta_closed_form(basis.kind(), max)
        .iter()
        .sum();
    assert_eq!(points.len() as u64, expected, "{}", basis.kind());
    points
}

fn for_each_in_box(m: usize, r: i64, mut visit: impl FnMut(&[i64])) {
    let mut c = vec![-r; m];
    loop {
        visit(&c);
        let mut k = 0;
        loop {
            if k == m {
                return;
            }
            c[k] += 1;
            if c[k] <= r {
                break;
            }
            c[k] = -r;
            k += 1;
        }
    }
}

// E8 as the even-sum integer vectors together with their shift by ½·1
fn e8_by_coordinates(basis: &LatticeBasis, max: u64) -> Vec<Vec<i64>> {
    let r = 2 * (max as f64).sqrt().floor() as i64;
    let mut out = Vec::new();
    for_each_in_box(8, r, |doubled| {
        let parity = doubled[0].rem_euclid(2);
        if doubled.iter().any(|d| d.rem_euclid(2) != parity) {
            return;
        }
        let norm4: i64 = doubled.iter().map(|d| d * d).sum();
        let sum2: i64 = doubled.iter().sum();
        if norm4 > 4 * max as i64 || sum2.rem_euclid(4) != 0 {
            return;
        }
        let x: Vec<f64> = doubled.iter().map(|&d| d as f64 / 2.0).collect();
        out.push(basis.coeffs_of(&x));
    });
    out
}

use heisenspec::levi::LeviForm;
use heisenspec::mehler::{heat_integrand, heat_kernel_fs, mehler_g, CovectorPoint, HeatQuery};
use heisenspec::plancherel::{heat_value_at_origin, rockland_scan, ModelOperatorSpec, RocklandOptions};
use heisenspec::quad::{gl20, integrate, QuadOptions};
use heisenspec::special::gamma;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn query(n: usize, mu: f64, x0: f64, r: f64, t: f64) -> HeatQuery {
    let mut xp = vec![0.0; 2 * n];
    xp[0] = r;
    HeatQuery::with_real_mu(n, mu, x0, xp, t).unwrap()
}

#[test]
fn mehler_factor_is_the_horizontal_integral_of_the_kernel_integrand() {
    // ∫_{ℝ^{2n}} f(|x'|) dx' = 2π^n/Γ(n) ∫ r^{2n−1} f(r) dr
    for n in 1..=3 {
        for &(xi0, t, mu) in &[(0.7, 1.0, 0.0), (-2.0, 0.5, 0.3), (3.0, 1.3, -0.5)] {
            let surface = 2.0 * std::f64::consts::PI.powi(n as i32) / gamma(n as f64);
            let radial = integrate(
                |r: f64| heat_integrand(&query(n, mu, 0.0, r, t), xi0) * r.powi(2 * n as i32 - 1),
                0.0,
                30.0,
                QuadOptions::default(),
            );
            let lhs = radial.value * surface * std::f64::consts::TAU;
            let g = mehler_g(&vec![1.0; n], 2 * n, &CovectorPoint::new(xi0, vec![0.0; 2 * n]).unwrap(), t).unwrap();
            let rhs = Complex64::new(-mu * t * xi0, 0.0).exp() * g;
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm(), "n={n} xi0={xi0}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn origin_value_scales_parabolically() {
    for n in 1..=3 {
        let base = heat_kernel_fs(&query(n, 0.0, 0.0, 0.0, 1.0)).unwrap().value.re;
        for t in [0.1, 0.01] {
            let v = heat_kernel_fs(&query(n, 0.0, 0.0, 0.0, t)).unwrap().value.re * t.powi(n as i32 + 1);
            assert!((v / base - 1.0).abs() < 1e-8);
        }
    }
}

/// `∫ k_0(x, t) dx` over `ℝ³` for `n = 1` on a fixed Gauss-Legendre tensor
/// grid in `(x_0, |x'|)`.
fn total_mass(t: f64) -> f64 {
    let rule = gl20();
    let panels = |a: f64, b: f64, m: usize| -> Vec<(f64, f64)> {
        let h = (b - a) / m as f64;
        (0..m)
            .flat_map(|i| {
                let lo = a + i as f64 * h;
                rule.nodes.iter().zip(&rule.weights).map(move |(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w))
            })
            .collect()
    };
    let x0_nodes = panels(0.0, 16.0 * t, 4);
    let r_nodes = panels(0.0, 8.0 * t.sqrt(), 3);
    let mut total = 0.0;
    for &(r, wr) in &r_nodes {
        let slice: f64 = x0_nodes
            .iter()
            .map(|&(x0, w)| w * heat_kernel_fs(&query(1, 0.0, x0, r, t)).unwrap().value.re)
            .sum();
        total += wr * 2.0 * std::f64::consts::PI * r * 2.0 * slice;
    }
    total
}

#[test]
fn heat_kernel_mass_is_time_independent() {
    let masses: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&t| total_mass(t)).collect();
    for m in &masses {
        assert!((m / masses[1] - 1.0).abs() < 1e-3, "{masses:?}");
    }
    // the semigroup preserves constants, so the common value is 1
    assert!((masses[1] - 1.0).abs() < 1e-3, "{masses:?}");
}

#[test]
fn product_heat_value_scales_with_order() {
    let spec = ModelOperatorSpec::real(2, &[1.0, -1.0]).unwrap();
    let base = heat_value_at_origin(&spec, 1.0).unwrap().value;
    for s in [0.3, 2.5] {
        let v = heat_value_at_origin(&spec, s).unwrap().value;
        let want = base * s.powf(-3.0 / 2.0);
        assert!((v - want).norm() <= 1e-9 * want.norm());
    }
}

#[test]
fn rockland_failure_is_monotone_on_half_lines() {
    // degenerate Levi form: one symplectic block plus an abelian direction
    let l = LeviForm::normal_form(&[1.5], 3).unwrap();
    let mut failed = false;
    for i in 0..60 {
        let mu = 0.05 * i as f64;
        let m = DMatrix::from_element(1, 1, Complex64::new(mu, 0.0));
        let holds = rockland_scan(&l, &m, RocklandOptions::default()).unwrap().holds;
        if failed {
            assert!(!holds, "condition recovered at mu = {mu}");
        }
        failed |= !holds;
    }
    assert!(failed);
}

#[test]
fn kernel_is_positive_and_decays_for_real_arguments() {
    let near = heat_kernel_fs(&query(2, 0.0, 0.5, 0.5, 1.0)).unwrap().value.re;
    let far = heat_kernel_fs(&query(2, 0.0, 4.0, 3.0, 1.0)).unwrap().value.re;
    assert!(near > far && far > 0.0);
}

use std::collections::BTreeMap;

use bcjacobi::discrete_wave::{response_vector, response_vector_dd, solve_finite_dirichlet, Boundary, Control};
use bcjacobi::graph_wave::{simulate, GraphSpec};
use bcjacobi::heat::heat_response;
use bcjacobi::inverse_bc::invert_factorization_dd;
use bcjacobi::moments::{response_to_moments, truncated_moment_naive_dd};
use bcjacobi::random::random_real_spec;
use bcjacobi::spectral::moments_of_measure_dd;
use bcjacobi::toda::toda_solve;
use bcjacobi::weyl_debranges::{debranges_kernel, ConnectingMatrix};
use bcjacobi::{moments_of_measure, spectral_measure, Complex64, JacobiSpec};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn wave_heat_and_spectral_moments_agree() {
    for seed in 0..10 {
        let n = 2 + seed as usize % 6;
        let spec = random_real_spec(n, seed);
        let r = response_vector(&spec, 2 * n, Boundary::Dirichlet).unwrap();
        let from_wave = response_to_moments(&r);
        let from_heat = heat_response(&spec, 2 * n, Boundary::Dirichlet).unwrap();
        let from_measure = moments_of_measure(&spectral_measure(&spec).unwrap(), 2 * n - 1);
        for k in 0..2 * n {
            let s = from_measure.as_slice()[k];
            assert!(close(from_wave.as_slice()[k], s, 1e-9), "seed {seed} k {k}");
            assert!(close(from_heat[k], s, 1e-9), "seed {seed} k {k}");
        }
    }
}

#[test]
fn boundary_data_to_measure_and_back() {
    for seed in 20..30 {
        let n = 3 + seed as usize % 8;
        let spec = random_real_spec(n, seed);
        let r = response_vector_dd(&spec, 2 * n, Boundary::SemiInfinite).unwrap();
        let inv = invert_factorization_dd(&r, n).unwrap();
        let mu = spectral_measure(&spec).unwrap();
        let s = moments_of_measure_dd(&mu, 2 * n - 1);
        let (from_moments, nu) = truncated_moment_naive_dd(&s, n).unwrap();
        for k in 1..n {
            assert!(close(inv.recovered.a_at(k), spec.a_at(k), 1e-10));
            assert!(close(from_moments.a_at(k), spec.a_at(k), 1e-10));
        }
        for (x, y) in nu.atoms().iter().zip(mu.atoms()) {
            assert!(close(x.0, y.0, 1e-10) && close(x.1, y.1, 1e-10));
        }
    }
}

#[test]
fn toda_state_is_recovered_from_its_response() {
    let spec = random_real_spec(5, 3);
    for &t in &[-0.7, 0.4, 1.1] {
        let st = toda_solve(&spec, t).unwrap();
        let r = response_vector_dd(&st.spec, 10, Boundary::SemiInfinite).unwrap();
        let back = invert_factorization_dd(&r, 5).unwrap().recovered;
        for k in 1..5 {
            assert!(close(back.a_at(k), st.spec.a_at(k), 1e-10));
        }
        for k in 1..=5 {
            assert!(close(back.b_at(k), st.spec.b_at(k), 1e-10));
        }
        let tr0: f64 = spec.b().iter().sum();
        let tr: f64 = st.spec.b().iter().sum();
        assert!(close(tr, tr0, 1e-10));
    }
}

#[test]
fn debranges_kernel_from_data_matches_kernel_from_spec() {
    let spec = random_real_spec(6, 9);
    let r = response_vector(&spec, 12, Boundary::SemiInfinite).unwrap();
    let from_data = ConnectingMatrix::from_response(&r, 6).unwrap();
    let from_spec = ConnectingMatrix::from_spec(&spec, 6).unwrap();
    let z = Complex64::new(0.3, -0.8);
    let a = debranges_kernel(&from_data, z).unwrap().coeffs();
    let b = debranges_kernel(&from_spec, z).unwrap().coeffs();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() <= 1e-8 * y.norm().max(1.0));
    }
}

#[test]
fn two_leaf_star_is_a_path() {
    let n = 5;
    let star = GraphSpec::star(2, n);
    let horizon = 24;
    let f: Vec<f64> = (0..horizon).map(|t| ((t * 7 % 5) as f64 - 2.0) / 3.0).collect();
    let field = simulate(&star, BTreeMap::from([("0".to_string(), f.clone())]), horizon).unwrap();
    let line = solve_finite_dirichlet(&JacobiSpec::free(2 * n - 1), &Control::new(f).unwrap(), horizon).unwrap();
    for t in 0..horizon {
        let into = field.edge_samples(&star, 0, t as i64 + 1).unwrap();
        let out = field.edge_samples(&star, 1, t as i64 + 1).unwrap();
        for j in 0..=n {
            assert_eq!(into[j], line.get(j, t));
        }
        for j in 0..n {
            assert_eq!(out[n - j], line.get(n + j, t));
        }
    }
}

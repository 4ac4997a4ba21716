use proptest::prelude::*;
use vfp_core::model::{convolve_interaction, ConfiningPotential, InteractionPotential};

/// Confining polynomial: even degree 2..=8 with a positive leading term.
fn confining() -> impl Strategy<Value = ConfiningPotential> {
    (1usize..=4)
        .prop_flat_map(|half| (prop::collection::vec(-2.0..2.0f64, 2 * half), 0.05..2.0f64))
        .prop_map(|(mut c, lead)| {
            c.push(lead);
            ConfiningPotential::new(c).unwrap()
        })
}

/// Even `G` of degree `2..=8`.
fn interaction() -> impl Strategy<Value = InteractionPotential> {
    prop::collection::vec(-1.0..1.0f64, 1..=4).prop_map(|even| {
        let mut g = vec![0.0; 2 * even.len() + 1];
        for (k, c) in even.iter().enumerate() {
            g[2 * k + 2] = *c;
        }
        g[0] = 0.25;
        InteractionPotential::new(g).unwrap()
    })
}

fn moments(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, len - 1).prop_map(|mut m| {
        m.insert(0, 1.0);
        m
    })
}

proptest! {
    #[test]
    fn gradient_matches_central_differences(v in confining()) {
        let h = 1e-6;
        for k in 0..100 {
            let q = -5.0 + 10.0 * k as f64 / 99.0;
            let g = v.grad(q);
            let fd = (v.eval(q + h) - v.eval(q - h)) / (2.0 * h);
            prop_assert!((g - fd).abs() <= 1e-6 * (1.0 + g.abs()), "q = {q}: {g} vs {fd}");
        }
    }

    #[test]
    fn point_mass_moments_reproduce_g(f in interaction()) {
        let mut m = vec![0.0; f.degree() + 1];
        m[0] = 1.0;
        let c = convolve_interaction(&f, &m).unwrap();
        prop_assert_eq!(c.coeffs(), f.coeffs());
    }

    #[test]
    fn convolution_is_affine_in_the_moments(
        f in interaction(),
        (a, b) in moments(9).prop_flat_map(|a| (Just(a), moments(9))),
        t in 0.0..1.0f64,
    ) {
        let mixed: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - t) * x + t * y).collect();
        let ca = convolve_interaction(&f, &a).unwrap();
        let cb = convolve_interaction(&f, &b).unwrap();
        let cm = convolve_interaction(&f, &mixed).unwrap();
        for q in [-2.0, -0.3, 0.0, 0.7, 1.9] {
            let lhs = cm.eval(q);
            let rhs = (1.0 - t) * ca.eval(q) + t * cb.eval(q);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn convolution_matches_the_pairwise_energy(f in interaction(), q in prop::collection::vec(-2.0..2.0f64, 1..12), x in -2.0..2.0f64) {
        let n = q.len() as f64;
        let m: Vec<f64> = (0..=f.degree()).map(|k| q.iter().map(|y| y.powi(k as i32)).sum::<f64>() / n).collect();
        let direct = q.iter().map(|y| f.eval(x - y)).sum::<f64>() / n;
        let expanded = convolve_interaction(&f, &m).unwrap().eval(x);
        prop_assert!((direct - expanded).abs() <= 1e-9 * (1.0 + direct.abs()), "{direct} vs {expanded}");
    }
}

#[test]
fn quartic_against_standard_gaussian_moments() {
    let f = InteractionPotential::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    let c = convolve_interaction(&f, &[1.0, 0.0, 1.0, 0.0, 3.0]).unwrap();
    assert_eq!(c.coeffs(), &[3.0, 0.0, 6.0, 0.0, 1.0]);
}

use proptest::prelude::*;

use gradmode::oracles::{hermite_function, oscillator_wavefunction, OscillatorOracle};
use gradmode::reduction::{
    effective_potential, field_from_wavefunction, mode_equation_residual, schrodinger_residual,
};
use gradmode::spectral::{compute_spectrum, SolveOptions};
use gradmode::susy::{
    apply_ladder, partner_potentials, superpotential, susy_energy, verify_susy, zero_modes, Ladder,
};
use gradmode::{
    profiles::sample_on_grid, Grid, MaterialProfile, Polarization, PotentialForm, TabulatedProfile,
};

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_pair_has_constant_index(n0 in 0.2f64..4.0, alpha in -2.0f64..2.0, x in -4.0f64..4.0) {
        let p = MaterialProfile::gaussian_susy_pair(n0, alpha).unwrap();
        let s = p.evaluate(x).unwrap();
        prop_assert!((s.eps * s.mu - n0 * n0).abs() <= 4.0 * f64::EPSILON * n0 * n0);
        let again = p.evaluate(x).unwrap();
        prop_assert_eq!(s.eps.to_bits(), again.eps.to_bits());
        prop_assert_eq!(s.d2mu.to_bits(), again.d2mu.to_bits());
    }

    #[test]
    fn duality_for_analytic_profiles(
        eps_b in 1.0f64..3.0, delta in -0.5f64..3.0, width in 0.3f64..3.0,
        n0 in 0.5f64..2.0, alpha in -1.0f64..1.0, k0 in 0.3f64..5.0,
    ) {
        let g = Grid::new(-5.0, 5.0, 101).unwrap();
        for p in [
            MaterialProfile::sech_squared_eps(eps_b, delta, width).unwrap(),
            MaterialProfile::gaussian_susy_pair(n0, alpha).unwrap(),
        ] {
            let q = p.exchange_materials();
            let te = effective_potential(&q, &g, k0, Polarization::TE, PotentialForm::Full).unwrap();
            let tm = effective_potential(&p, &g, k0, Polarization::TM, PotentialForm::Full).unwrap();
            for (a, b) in te.v.iter().zip(&tm.v) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn wavefunctions_are_normalized_with_positive_peak(alpha in 0.3f64..2.0, k0 in 1.0f64..4.0) {
        let p = MaterialProfile::gaussian_susy_pair(1.0, alpha).unwrap();
        let half = 9.0 / alpha.sqrt();
        let g = Grid::new(-half, half, 401).unwrap();
        let h = g.spacing();
        for pol in Polarization::BOTH {
            let s = compute_spectrum(&p, &g, k0, pol, 3).unwrap();
            for w in s.modes.windows(2) {
                prop_assert!(w[0].e_schr < w[1].e_schr);
            }
            for m in &s.modes {
                let norm: f64 = m.psi.iter().map(|x| x * x).sum::<f64>() * h;
                prop_assert!((norm - 1.0).abs() < 1e-12);
                let peak = m.psi.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
                prop_assert!(peak > 0.0);
            }
        }
    }
}

#[test]
fn tabulated_copy_matches_analytic_profile() {
    let analytic = MaterialProfile::gaussian_susy_pair(1.0, 1.0).unwrap();
    let table = TabulatedProfile::tabulate(&analytic, -2.0, 2.0, 401).unwrap();
    let tabulated = MaterialProfile::tabulated(table);

    let knots = Grid::new(-2.0, 2.0, 401).unwrap();
    let a = sample_on_grid(&analytic, &knots).unwrap();
    let t = sample_on_grid(&tabulated, &knots).unwrap();
    assert!(max_abs(a.iter().zip(&t).map(|(a, t)| a.eps - t.eps)) < 1e-6);

    // between knots the natural end condition dominates near the edges
    let off = Grid::new(-2.0, 2.0, 301).unwrap();
    let a = sample_on_grid(&analytic, &off).unwrap();
    let t = sample_on_grid(&tabulated, &off).unwrap();
    assert!(max_abs(a.iter().zip(&t).map(|(a, t)| (a.eps - t.eps) / a.eps)) < 5e-5);
}

#[test]
fn spline_derivatives_converge_at_least_second_order() {
    let cases = [
        (
            MaterialProfile::gaussian_susy_pair(1.0, 1.0).unwrap(),
            2.0,
            1.5,
        ),
        (
            MaterialProfile::sech_squared_eps(1.0, 2.0, 1.0).unwrap(),
            8.0,
            8.0,
        ),
    ];
    for (profile, half, probe) in cases {
        let probe_grid = Grid::new(-probe, probe, 777).unwrap();
        let exact = sample_on_grid(&profile, &probe_grid).unwrap();
        let errors: Vec<f64> = [101, 201, 401, 801]
            .iter()
            .map(|&n| {
                let t = MaterialProfile::tabulated(
                    TabulatedProfile::tabulate(&profile, -half, half, n).unwrap(),
                );
                let s = sample_on_grid(&t, &probe_grid).unwrap();
                max_abs(s.iter().zip(&exact).map(|(s, e)| s.deps - e.deps))
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[0] / w[1] > 3.5, "{errors:?}");
        }
    }
}

#[test]
fn weak_gradient_gap_shrinks_and_square_term_decays_faster() {
    // α → α/s² on a fixed domain: (f′/2f)² = α²x²/s⁴ and (f′/2f)′ = −α/s²
    let g = Grid::new(-8.0, 8.0, 801).unwrap();
    let terms: Vec<(f64, f64, f64)> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&s: &f64| {
            let p = MaterialProfile::gaussian_susy_pair(1.0, 1.0 / (s * s)).unwrap();
            let samples = sample_on_grid(&p, &g).unwrap();
            let square = max_abs(samples.iter().map(|x| (x.dmu / (2.0 * x.mu)).powi(2)));
            let slope = max_abs(
                samples
                    .iter()
                    .map(|x| x.d2mu / (2.0 * x.mu) - x.dmu * x.dmu / (2.0 * x.mu * x.mu)),
            );
            let full =
                effective_potential(&p, &g, 1.0, Polarization::TE, PotentialForm::Full).unwrap();
            let weak =
                effective_potential(&p, &g, 1.0, Polarization::TE, PotentialForm::WeakGradient)
                    .unwrap();
            let gap = max_abs(full.v.iter().zip(&weak.v).map(|(a, b)| a - b));
            (square, slope, gap)
        })
        .collect();
    for w in terms.windows(2) {
        let (sq0, sl0, gap0) = w[0];
        let (sq1, sl1, gap1) = w[1];
        assert!(gap1 < gap0);
        assert!((sq0 / sq1 - 16.0).abs() < 1e-6);
        assert!((sl0 / sl1 - 4.0).abs() < 1e-6);
    }
}

#[test]
fn unit_permeability_full_equals_weak_for_tabulated_data() {
    let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
    let eps: Vec<f64> = xs.iter().map(|x| 2.0 + (x * 0.7).sin()).collect();
    let p = MaterialProfile::tabulated(TabulatedProfile::new(xs, eps, vec![1.0; 50]).unwrap());
    let g = Grid::new(0.0, 9.8, 300).unwrap();
    let full = effective_potential(&p, &g, 2.0, Polarization::TE, PotentialForm::Full).unwrap();
    let weak =
        effective_potential(&p, &g, 2.0, Polarization::TE, PotentialForm::WeakGradient).unwrap();
    assert_eq!(full.v, weak.v);
}

#[test]
fn mode_equation_and_schrodinger_residuals_agree() {
    // exact TM ground state: ψ = Gaussian, H_y = √ε ψ
    let (alpha, k0) = (1.0, 2.0);
    let o = OscillatorOracle::new(alpha, 1.0, k0).unwrap();
    let p = o.profile();
    let mut previous = None;
    for n in [201, 401, 801] {
        let g = Grid::new(-6.0, 6.0, n).unwrap();
        let psi: Vec<f64> = g
            .points()
            .map(|x| oscillator_wavefunction(&o, 0, x))
            .collect();
        let beta_sq = k0 * k0;
        let field = field_from_wavefunction(&psi, &p, &g, Polarization::TM).unwrap();
        let wave = mode_equation_residual(&field, &p, &g, k0, beta_sq, Polarization::TM).unwrap();
        let pot = effective_potential(&p, &g, k0, Polarization::TM, PotentialForm::Full).unwrap();
        let schr = schrodinger_residual(&psi, &pot, -beta_sq).unwrap();
        let samples = sample_on_grid(&p, &g).unwrap();
        // −f(u′/f)′ with u = √f ψ equals √f(−ψ″ + (V + εμk0²)ψ)
        let gap = max_abs(
            wave.iter()
                .zip(&schr)
                .zip(&samples[1..])
                .map(|((w, s), smp)| w / smp.eps.sqrt() - s),
        );
        if let Some(prev) = previous {
            let ratio: f64 = prev / gap;
            assert!(ratio > 3.5 && ratio < 4.5, "{prev} {gap}");
        }
        previous = Some(gap);
    }
}

#[test]
fn oracle_wavefunctions_solve_the_partner_equations() {
    let o = OscillatorOracle::new(0.8, 1.3, 2.0).unwrap();
    let p = o.profile();
    let mut errs = Vec::new();
    for n in [401, 801] {
        let g = Grid::new(-8.0, 8.0, n).unwrap();
        let mut worst: f64 = 0.0;
        for pol in Polarization::BOTH {
            let pot = effective_potential(&p, &g, 2.0, pol, PotentialForm::Full).unwrap();
            for level in 0..4 {
                let psi: Vec<f64> = g
                    .points()
                    .map(|x| oscillator_wavefunction(&o, level, x))
                    .collect();
                let e_schr = -o.level(pol, level).beta_sq;
                worst = worst.max(max_abs(schrodinger_residual(&psi, &pot, e_schr).unwrap()));
            }
        }
        errs.push(worst);
    }
    assert!(errs[0] < 1e-2, "{errs:?}");
    assert!((errs[0] / errs[1] - 4.0).abs() < 0.2, "{errs:?}");
}

#[test]
fn ladder_composition_reproduces_partner_hamiltonian() {
    let p = MaterialProfile::gaussian_susy_pair(1.0, 0.6).unwrap();
    let mut errs = Vec::new();
    for n in [401, 801] {
        let g = Grid::new(-6.0, 6.0, n).unwrap();
        let w = superpotential(&p, &g, 1e-9).unwrap();
        // smooth test function
        let f: Vec<f64> = g
            .points()
            .map(|x| (1.0 + x).cos() * (-0.3 * x * x).exp())
            .collect();
        let composed = apply_ladder(
            Ladder::BMinus,
            &apply_ladder(Ladder::BPlus, &f, &w).unwrap(),
            &w,
        )
        .unwrap();
        let exact = |x: f64| {
            // −f″ + (w² + w′) f with w = αx, computed symbolically
            let a = 0.6;
            let e = (-0.3 * x * x).exp();
            let c = (1.0 + x).cos();
            let s = (1.0 + x).sin();
            let fpp = e * (-c + 1.2 * x * s + (-0.6 + 0.36 * x * x) * c);
            -fpp + (a * a * x * x + a) * c * e
        };
        // −B⁻B⁺ = −d² + w² + w′
        let worst = max_abs((2..n - 2).map(|i| -composed[i] - exact(g.x(i))));
        errs.push(worst);
    }
    assert!(errs[0] < 1e-2);
    assert!((errs[0] / errs[1] - 4.0).abs() < 0.3, "{errs:?}");
}

#[test]
fn isospectrality_and_zero_mode_orthogonality() {
    let (n0, alpha, k0) = (1.4, 0.7, 3.0);
    let p = MaterialProfile::gaussian_susy_pair(n0, alpha).unwrap();
    let g = Grid::new(-10.0, 10.0, 2001).unwrap();
    let w = superpotential(&p, &g, 1e-9).unwrap();
    let zero = zero_modes(&w, &p, &g).unwrap();
    let te = compute_spectrum(&p, &g, k0, Polarization::TE, 5).unwrap();
    let tm = compute_spectrum(&p, &g, k0, Polarization::TM, 6).unwrap();
    let report = verify_susy(&te, &tm, &w, &zero, 1e-6).unwrap();
    assert_eq!(report.pairing.len(), 5);
    assert!(report.unpaired.is_empty());
    assert_eq!(report.zero_energy_states.len(), 1);

    let h = g.spacing();
    let z = zero.zero_mode.as_ref().unwrap();
    // the analytic zero mode is orthogonal to the discrete modes up to the O(h²) truncation
    for m in &tm.modes[1..] {
        let ip: f64 = z.iter().zip(&m.psi).map(|(a, b)| a * b).sum::<f64>() * h;
        assert!(ip.abs() < h * h, "{ip}");
    }
    let e0 = susy_energy(tm.modes[0].beta_sq, n0, k0);
    assert!(e0.abs() < 1e-6 * alpha);

    // partner potentials built from W equal the reduction potentials
    let (vte, vtm) = partner_potentials(&w, k0);
    for (a, b) in vte
        .v
        .iter()
        .zip(&te.potential.v)
        .chain(vtm.v.iter().zip(&tm.potential.v))
    {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }
}

#[test]
fn refinement_can_be_disabled() {
    let p = MaterialProfile::gaussian_susy_pair(1.0, 1.0).unwrap();
    let g = Grid::new(-8.0, 8.0, 401).unwrap();
    let raw = gradmode::spectral::compute_spectrum_with(
        &p,
        &g,
        1.0,
        Polarization::TM,
        1,
        &SolveOptions {
            refine_eigenvalues: false,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    let refined = compute_spectrum(&p, &g, 1.0, Polarization::TM, 1).unwrap();
    let exact = -1.0;
    assert!((refined.modes[0].e_schr - exact).abs() < 1e-7);
    assert!((raw.modes[0].e_schr - exact).abs() > 1e-5);
}

#[test]
fn hermite_function_matches_direct_formula() {
    // H_2(ξ) = 4ξ² − 2, normalization (α/π)^{1/4} / √(2² 2!)
    let alpha: f64 = 1.7;
    for x in [-1.3, 0.0, 0.4, 2.2] {
        let xi = alpha.sqrt() * x;
        let direct = (alpha / std::f64::consts::PI).powf(0.25) / 8f64.sqrt()
            * (4.0 * xi * xi - 2.0)
            * (-xi * xi / 2.0).exp();
        assert!((hermite_function(alpha, 2, x) - direct).abs() < 1e-14);
    }
}

use std::f64::consts::PI;

use proptest::prelude::*;

use brw_core::material::Afromowitz;
use brw_core::solver::{
    effective_index_2d, find_guided_modes, find_mode, layer_matrices, mode_condition, ModeSearch,
    ModeTarget, Polarization, SlabProfile,
};
use brw_core::stack::{LayerRole, LayerStack};

/// Guided TE indices of a symmetric slab from u·tan u = w and −u·cot u = w.
fn symmetric_te(n1: f64, n2: f64, d: f64, lam: f64) -> Vec<f64> {
    let k0 = 2.0 * PI / lam;
    let v = 0.5 * k0 * d * (n1 * n1 - n2 * n2).sqrt();
    let mut out = Vec::new();
    let mut m = 0usize;
    while m as f64 * PI / 2.0 < v {
        let f = |u: f64| {
            let w = (v * v - u * u).max(0.0).sqrt();
            if m % 2 == 0 {
                u * u.sin() - w * u.cos()
            } else {
                -u * u.cos() - w * u.sin()
            }
        };
        let (mut a, mut b) = (m as f64 * PI / 2.0 + 1e-14, ((m + 1) as f64 * PI / 2.0).min(v) - 1e-14);
        if f(a).signum() != f(b).signum() {
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if f(c).signum() == f(a).signum() {
                    a = c;
                } else {
                    b = c;
                }
            }
            let kx = (a + b) / d;
            out.push((n1 * n1 - (kx / k0).powi(2)).sqrt());
        }
        m += 1;
    }
    out
}

fn single_layer(n1: f64, n2: f64, d: f64) -> SlabProfile {
    SlabProfile::new(1550.0, &[(d, n1, LayerRole::Core)], n2, n2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_slab_matches_closed_form(
        n1 in 3.2f64..3.6,
        contrast in 0.02f64..0.4,
        d in 300.0f64..3000.0,
    ) {
        let n2 = n1 - contrast;
        let oracle = symmetric_te(n1, n2, d, 1550.0);
        let found = find_guided_modes(&single_layer(n1, n2, d), Polarization::TE, &ModeSearch::default()).unwrap();
        // modes hugging the cladding line are below the scan resolution
        let clear: Vec<f64> = oracle.into_iter().filter(|n| *n > n2 + 2e-4).collect();
        prop_assert!(found.len() >= clear.len());
        for (m, o) in found.iter().zip(&clear) {
            prop_assert!((m.n_eff - o).abs() < 1e-6, "{} vs {}", m.n_eff, o);
        }
    }

    #[test]
    fn transfer_matrices_are_unimodular(
        n_trial in 1.2f64..3.6,
        scale in 0.8f64..1.2,
        lam in prop::sample::select(vec![760.0, 790.0, 1300.0, 1550.0, 1700.0]),
        tm in any::<bool>(),
    ) {
        let stack = LayerStack::graded().with_scaled_thickness(LayerRole::Core, scale);
        let p = SlabProfile::from_stack(&stack, &Afromowitz::default(), lam).unwrap();
        let pol = if tm { Polarization::TM } else { Polarization::TE };
        for m in layer_matrices(&p, n_trial, pol) {
            let (ad, bc) = (m[0][0] * m[1][1], m[0][1] * m[1][0]);
            // evanescent layers give large entries; cancellation error scales with them
            let tol = 1e-13 * ad.abs().max(bc.abs()).max(1.0);
            prop_assert!((ad - bc - 1.0).abs() < tol, "det {} (tol {tol})", ad - bc);
        }
    }

    #[test]
    fn root_is_a_zero_and_independent_of_scan_step(
        core_scale in 0.9f64..1.1,
        lam in 1450.0f64..1650.0,
        tm in any::<bool>(),
    ) {
        let stack = LayerStack::graded().with_scaled_thickness(LayerRole::Core, core_scale);
        let p = SlabProfile::from_stack(&stack, &Afromowitz::default(), lam).unwrap();
        let pol = if tm { Polarization::TM } else { Polarization::TE };
        let coarse = ModeSearch::default();
        let fine = ModeSearch { scan_step: coarse.scan_step / 2.0, ..coarse };
        let a = find_mode(&p, pol, ModeTarget::TirFundamental, &coarse).unwrap();
        let b = find_mode(&p, pol, ModeTarget::TirFundamental, &fine).unwrap();
        prop_assert!((a.n_eff - b.n_eff).abs() < 1e-8);
        let above = mode_condition(&p, a.n_eff + 1e-6, pol).unwrap();
        let below = mode_condition(&p, a.n_eff - 1e-6, pol).unwrap();
        prop_assert!(above.signum() != below.signum(), "no sign change around {}", a.n_eff);
        prop_assert!(mode_condition(&p, a.n_eff, pol).unwrap().abs() <= above.abs().max(below.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ridge_index_bounded_by_slab_and_rises_with_width(
        w in 2.0f64..8.0,
        etch in 1.0f64..2.2,
        tm in any::<bool>(),
    ) {
        let model = Afromowitz::default();
        let search = ModeSearch::default();
        let pol = if tm { Polarization::TM } else { Polarization::TE };
        let mut s = LayerStack::graded();
        s.etch_depth_um = etch;
        s.ridge_width_um = w;
        let narrow = effective_index_2d(&s, &model, 1550.0, pol, ModeTarget::TirFundamental, &search).unwrap();
        s.ridge_width_um = w * 1.5;
        let wide = effective_index_2d(&s, &model, 1550.0, pol, ModeTarget::TirFundamental, &search).unwrap();
        prop_assert!(narrow.n_eff <= narrow.n_ridge_slab);
        prop_assert!(narrow.n_eff >= narrow.n_etched_slab);
        prop_assert!(wide.n_eff >= narrow.n_eff);
    }
}

#[test]
fn wide_ridge_approaches_the_slab() {
    let model = Afromowitz::default();
    let mut s = LayerStack::graded();
    s.ridge_width_um = 50.0;
    for pol in [Polarization::TE, Polarization::TM] {
        let r = effective_index_2d(&s, &model, 1550.0, pol, ModeTarget::TirFundamental, &ModeSearch::default())
            .unwrap();
        assert!((r.n_ridge_slab - r.n_eff).abs() < 1e-4, "{pol:?}: {} vs {}", r.n_eff, r.n_ridge_slab);
    }
}

#[test]
fn deeper_etch_pulls_the_ridge_index_further_from_the_slab() {
    // more lateral contrast means a larger effective-index correction
    let model = Afromowitz::default();
    let mut last = 0.0;
    for etch in [1.5, 1.8, 2.2, 3.0] {
        let mut s = LayerStack::graded();
        s.etch_depth_um = etch;
        let r = effective_index_2d(&s, &model, 1550.0, Polarization::TE, ModeTarget::TirFundamental, &ModeSearch::default())
            .unwrap();
        let gap = r.n_ridge_slab - r.n_eff;
        assert!(gap > last, "etch {etch}: {gap} after {last}");
        last = gap;
    }
}

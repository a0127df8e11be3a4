//! Monte Carlo checks against closed-form Gaussian moments. All use fixed
//! seeds, so they are deterministic; tolerances are a few standard errors.

use wiener_chaos::decoupling::{CaseTag, DecouplingInstance};
use wiener_chaos::gaussian::{wiener, RngSpec, SampleLayout};
use wiener_chaos::mc::{estimate_means, McConfig};
use wiener_chaos::random::instance_stream;
use wiener_chaos::space::BanachSpace;

const K: f64 = 5.0;

#[test]
fn isonormal_moments_and_independent_copies() {
    let h = [0.6, -0.8, 0.0];
    let k = [0.5, 0.5, 1.0];
    let hk: f64 = h.iter().zip(&k).map(|(a, b)| a * b).sum();
    let mc = McConfig::new(200_000, 5);
    let layout = SampleLayout::new(3, 1, 0);
    let stats = estimate_means(layout, mc.rng(0), &mc, 5, || (), |_, s, out| {
        let wh = wiener(&h, s, 0).unwrap();
        let wk = wiener(&k, s, 0).unwrap();
        let wh1 = wiener(&h, s, 1).unwrap();
        out[0] = wh;
        out[1] = wh * wh;
        out[2] = wh * wk;
        out[3] = wh.powi(4);
        out[4] = wh * wh1;
    })
    .unwrap();
    let expected = [0.0, 1.0, hk, 3.0, 0.0];
    for (w, e) in stats.iter().zip(expected) {
        assert!((w.mean - e).abs() <= K * w.stderr(), "{} vs {e} (se {})", w.mean, w.stderr());
    }
}

#[test]
fn coupled_l2_moment_matches_exact_norm() {
    let space = BanachSpace::l2(2);
    for (s, case) in [(1, CaseTag::Symmetric), (2, CaseTag::Tetrahedral)] {
        let inst = DecouplingInstance::random(case, 2, 4, &space, RngSpec::new(s, instance_stream(0))).unwrap();
        let (coupled, decoupled) = inst.exact_second_moments();
        let mc = McConfig::new(100_000, 9);
        let c = inst.coupled_lp(2.0, &mc).unwrap();
        let d = inst.decoupled_lp(2.0, &mc).unwrap();
        assert!(c.agrees_with_value(coupled.sqrt(), K), "{case}: {c:?} vs {}", coupled.sqrt());
        assert!(d.agrees_with_value(decoupled.sqrt(), K), "{case}: {d:?} vs {}", decoupled.sqrt());
    }
}

#[test]
fn doubling_samples_keeps_ratio_stable() {
    let space = BanachSpace::linf(3);
    let inst = DecouplingInstance::random(CaseTag::Symmetric, 3, 4, &space, RngSpec::new(4, instance_stream(0))).unwrap();
    let a = inst.coupled_lp(4.0, &McConfig::new(50_000, 1)).unwrap();
    let b = inst.coupled_lp(4.0, &McConfig::new(100_000, 2)).unwrap();
    assert!(a.agrees_with(&b, K), "{a:?} vs {b:?}");
    assert!(b.stderr < a.stderr);
}

#[test]
fn survival_curves_are_monotone_probabilities() {
    let space = BanachSpace::l1(2);
    let inst = DecouplingInstance::random(CaseTag::Tetrahedral, 2, 5, &space, RngSpec::new(6, instance_stream(0))).unwrap();
    let thresholds = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let rows = inst.survival(&thresholds, &McConfig::new(20_000, 3)).unwrap();
    assert_eq!(rows.len(), thresholds.len());
    for w in rows.windows(2) {
        assert!(w[1].1 <= w[0].1 && w[1].2 <= w[0].2);
    }
    for &(_, c, d) in &rows {
        assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&d));
    }
}

use proptest::prelude::*;

use mcf_obstacle::candidates::{Candidate, Context, Family, KinkDescriptor, Mode};
use mcf_obstacle::catalog::catalog;
use mcf_obstacle::checker::residual_smooth;
use mcf_obstacle::config::ScenarioConfig;
use mcf_obstacle::diagnostics::sup_distance;
use mcf_obstacle::field::{clamp_to_obstacles, Field};
use mcf_obstacle::grid::RadialGrid;
use mcf_obstacle::obstacle::{FlowParams, ObstacleSpec};
use mcf_obstacle::radial::evolve_radial;
use mcf_obstacle::scheme::SchemeParams;

const CELLS: usize = 60;

fn grid() -> RadialGrid {
    RadialGrid::new(2.5, CELLS).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, CELLS + 1)
}

fn band(obs: &ObstacleSpec) -> (Field<RadialGrid>, Field<RadialGrid>) {
    obs.sample_radial(&grid()).unwrap()
}

proptest! {
    #[test]
    fn clamp_is_idempotent_and_lands_in_band(v in values(), lambda in 0.2..3.0f64) {
        let obs = ObstacleSpec::new(2.0, lambda).unwrap();
        let (lo, hi) = band(&obs);
        let u = Field::new(grid(), v).unwrap();
        let once = clamp_to_obstacles(&u, &lo, &hi).unwrap();
        let twice = clamp_to_obstacles(&once, &lo, &hi).unwrap();
        prop_assert_eq!(once.values(), twice.values());
        for ((x, l), h) in once.values().iter().zip(lo.values()).zip(hi.values()) {
            prop_assert!(l <= x && x <= h);
        }
    }

    #[test]
    fn clamp_preserves_order(v in values(), bump in prop::collection::vec(0.0..1.0f64, CELLS + 1)) {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let (lo, hi) = band(&obs);
        let w: Vec<f64> = v.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let cu = clamp_to_obstacles(&Field::new(grid(), v).unwrap(), &lo, &hi).unwrap();
        let cw = clamp_to_obstacles(&Field::new(grid(), w).unwrap(), &lo, &hi).unwrap();
        for (a, b) in cu.values().iter().zip(cw.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn sup_distance_is_a_metric(a in values(), b in values(), c in values()) {
        let (u, v, w) = (
            Field::new(grid(), a).unwrap(),
            Field::new(grid(), b).unwrap(),
            Field::new(grid(), c).unwrap(),
        );
        let d = |x: &Field<RadialGrid>, y: &Field<RadialGrid>| sup_distance(x, y).unwrap();
        prop_assert_eq!(d(&u, &u), 0.0);
        prop_assert_eq!(d(&u, &v), d(&v, &u));
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-12);
        prop_assert!(d(&u, &v) >= 0.0);
    }

    #[test]
    fn radial_flow_preserves_order(
        v in prop::collection::vec(0.0..1.0f64, CELLS + 1),
        bump in prop::collection::vec(0.0..1.0f64, CELLS + 1),
        a in 0.2..3.0f64,
    ) {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let flow = FlowParams::new(a, 2).unwrap();
        let (lo, hi) = band(&obs);
        let lower: Vec<f64> = lo.values().iter().zip(hi.values()).zip(&v).map(|((l, h), s)| l + s * (h - l)).collect();
        let upper: Vec<f64> = lower.iter().zip(hi.values()).zip(&bump).map(|((x, h), s)| x + s * (h - x)).collect();
        let scheme = SchemeParams { horizon: 1.0, snapshot_interval: 0.25, ..Default::default() }.without_steady_stop();
        let tl = evolve_radial(&Field::new(grid(), lower).unwrap(), &obs, &flow, &scheme, None).unwrap();
        let th = evolve_radial(&Field::new(grid(), upper).unwrap(), &obs, &flow, &scheme, None).unwrap();
        prop_assert_eq!(tl.snapshots.len(), th.snapshots.len());
        for ((_, u), (_, w)) in tl.snapshots.iter().zip(&th.snapshots) {
            for (x, y) in u.values().iter().zip(w.values()) {
                prop_assert!(x <= &(y + 1e-12));
            }
        }
    }

    #[test]
    fn swapping_kink_slopes_flips_the_test_mode(a in -5.0..5.0f64, b in -5.0..5.0f64) {
        prop_assume!(a != b);
        let k = KinkDescriptor { radius: 1.0, a, b, velocity: 0.0, value_rate: 0.0 };
        let flipped = KinkDescriptor { a: b, b: a, ..k };
        prop_assert_ne!(k.test_mode(), flipped.test_mode());
        prop_assert_eq!(k.test_mode() == Mode::Sub, a > b);
    }

    #[test]
    fn catalog_configs_survive_render_and_parse(
        idx in 0usize..64,
        name in "[a-z][a-z0-9-]{0,12}",
        horizon in 0.5..50.0f64,
        cfl in 0.1..1.0f64,
    ) {
        let all = catalog().unwrap();
        let mut cfg = all[idx % all.len()].config.clone();
        cfg.name = name;
        cfg.scheme.horizon = horizon;
        cfg.scheme.cfl = cfl;
        let back: ScenarioConfig = cfg.to_string().parse().unwrap();
        prop_assert_eq!(back, cfg);
    }

    /// Smooth residual of the decaying lower cone against its closed form
    /// `L e^{-g t} (g (R - r) - (N-1)/r - A)`.
    #[test]
    fn lower_cone_residual_matches_closed_form(
        gamma in 0.05..2.0f64,
        a in 0.2..3.0f64,
        r in 0.05..1.95f64,
        t in 0.01..10.0f64,
    ) {
        let ctx = Context::cone(1.0, 2.0, a, 2).unwrap();
        let c = Candidate::new(Family::LowerBarrierUstar { l: 0.5, gamma }, ctx);
        let e = 0.5 * (-gamma * t).exp();
        let want = e * (gamma * (2.0 - r) - 1.0 / r - a);
        let got = residual_smooth(&c, r, t, Mode::Sub).unwrap().unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{got} vs {want}");
    }
}

/// Ten percent over the rate bound the lower cone stays a strict subsolution
/// (closed-form maximum `g R - 2 sqrt(g (N-1)) - A < 0`), so only the bound check can flag it.
#[test]
fn lower_cone_over_bound_still_has_negative_residual() {
    let ctx = Context::cone(1.0, 2.0, 1.0, 2).unwrap();
    let bound = Candidate::new(Family::LowerBarrierUstar { l: 1.0, gamma: 0.5 }, ctx).rate_bounds()[0].upper;
    assert!((bound - 0.75).abs() < 1e-15);
    let gamma = 1.1 * bound;
    let closed_max = gamma * 2.0 - 2.0 * gamma.sqrt() - 1.0;
    assert!(closed_max < -1.0);
    let c = Candidate::new(Family::LowerBarrierUstar { l: 0.5, gamma }, ctx);
    for i in 1..400 {
        let r = i as f64 * 2.0 / 400.0;
        for t in [0.01, 0.5, 3.0] {
            if let Some(res) = residual_smooth(&c, r, t, Mode::Sub).unwrap() {
                assert!(res < 0.0, "r={r} t={t} residual {res}");
            }
        }
    }
}

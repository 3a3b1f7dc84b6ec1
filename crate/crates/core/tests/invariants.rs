use approx::assert_relative_eq;
use nel_core::energy::potential::sum_over;
use nel_core::shapes::{shape_zoo, Family, ScanSetup};
use nel_core::symmetrization::{is_steiner_symmetric, steiner_symmetrize, Direction};
use nel_core::transport::{optimal_matching, pushforward_identity_check, PointCloud};
use nel_core::{
    deficit, make_ball, perimeter_grid, BallSpec, GridSet, GridSpec, KernelParams, Potential,
};
use proptest::prelude::*;

fn k() -> KernelParams {
    KernelParams::new(2, 0.5).unwrap()
}

fn random_set(cells: usize) -> impl Strategy<Value = GridSet> {
    prop::collection::vec(any::<bool>(), cells * cells)
        .prop_map(move |mask| GridSet::new(GridSpec::new(2, cells, 1.0).unwrap(), mask).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steiner_keeps_volume_and_is_idempotent(set in random_set(12), axis in 0usize..2) {
        let once = steiner_symmetrize(&set, Direction::Axis(axis)).unwrap().set;
        prop_assert_eq!(once.count(), set.count());
        prop_assert!(is_steiner_symmetric(&once, axis));
        let twice = steiner_symmetrize(&once, Direction::Axis(axis)).unwrap().set;
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn steiner_does_not_raise_perimeter(set in random_set(10), axis in 0usize..2) {
        prop_assume!(!set.is_empty());
        let p = perimeter_grid(&set, k()).unwrap();
        let q = perimeter_grid(&steiner_symmetrize(&set, Direction::Axis(axis)).unwrap().set, k()).unwrap();
        prop_assert!(q.value <= p.value + p.error + q.error);
    }

    #[test]
    fn perimeter_ignores_whole_cell_shifts(sx in -6isize..=6, sy in -6isize..=6) {
        let grid = GridSpec::new(2, 48, 2.0).unwrap();
        let set = make_ball(&grid, &BallSpec::new(vec![0.1, -0.2], 0.9).unwrap()).unwrap();
        let moved = set.shift_cells([sx, sy]).unwrap();
        prop_assert_eq!(perimeter_grid(&moved, k()).unwrap().value, perimeter_grid(&set, k()).unwrap().value);
    }

    #[test]
    fn matching_reorders_targets_exactly(n in 1usize..40, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut cloud = || PointCloud::new((0..n).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect()).unwrap();
        let (src, dst) = (cloud(), cloud());
        let m = optimal_matching(&src, &dst).unwrap();
        let mut seen = m.assignment.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert!(m.duality_gap.abs() <= 1e-9 * m.cost.max(1.0));
        let r = pushforward_identity_check(&m, &dst, &Potential::quadratic()).unwrap();
        prop_assert!(r.residual <= 1e-12);
    }
}

#[test]
fn perimeter_follows_the_scaling_law() {
    let grid = GridSpec::new(2, 128, 2.5).unwrap();
    let small = make_ball(&grid, &BallSpec::centered(2, 1.0).unwrap()).unwrap();
    let large = make_ball(&grid, &BallSpec::centered(2, 2.0).unwrap()).unwrap();
    for alpha in [0.3, 0.5, 0.7] {
        let k = KernelParams::new(2, alpha).unwrap();
        let ratio =
            perimeter_grid(&large, k).unwrap().value / perimeter_grid(&small, k).unwrap().value;
        assert_relative_eq!(ratio, 2f64.powf(2.0 - alpha), max_relative = 0.03);
    }
}

#[test]
fn zoo_shapes_share_the_ball_volume() {
    let setup = ScanSetup::new(GridSpec::new(2, 64, 2.5).unwrap(), 1.0).unwrap();
    let zoo = shape_zoo(&setup, 15, 4).unwrap();
    assert_eq!(zoo.len(), 15);
    let n = setup.grid.cells_per_side() - 1;
    for s in &zoo {
        assert_eq!(s.set.count(), setup.count(), "{}", s.label);
        let (lo, hi) = s.set.bounding_box().unwrap();
        assert!(
            lo.iter().all(|&c| c > 0) && hi.iter().all(|&c| c < n),
            "{} touches the edge",
            s.label
        );
    }
}

#[test]
fn elongated_shapes_have_positive_deficit() {
    let setup = ScanSetup::new(GridSpec::new(2, 96, 2.5).unwrap(), 1.0).unwrap();
    let mut last = 0.0;
    for p in [0.2, 0.4, 0.8] {
        let d = deficit(&Family::Ellipse.member(&setup, p).unwrap(), k()).unwrap();
        assert!(d.value > last, "deficit {} at p = {p}", d.value);
        last = d.value;
    }
}

#[test]
fn translated_ball_pays_exactly_the_second_moment_shift() {
    // h = 0.025, so 0.1 is four whole cells
    let grid = GridSpec::new(2, 128, 1.6).unwrap();
    let setup = ScanSetup::new(grid, 1.0).unwrap();
    let cells = Potential::quadratic().cell_integrals(&grid).unwrap();
    let moved = setup.ball.shift_cells([4, 0]).unwrap();
    assert_eq!(
        perimeter_grid(&moved, k()).unwrap().value,
        perimeter_grid(&setup.ball, k()).unwrap().value
    );
    let gap = sum_over(&moved, &cells) - sum_over(&setup.ball, &cells);
    assert_relative_eq!(gap, 0.01 * setup.mass(), max_relative = 1e-9);
}

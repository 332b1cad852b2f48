use proptest::prelude::*;

use gatelab::bipartite::{partial_transpose, reshuffle, swap_operator, BipartiteOperator, Dims};
use gatelab::gates::{self, parse_gate_spec, CartanCoords, GateSpec};
use gatelab::measures::{self, GateMeasures};
use gatelab::random::{haar_unitary, rng_from};
use gatelab::thermal::{self, EvolutionConfig, EvolutionMode};
use gatelab::Exec;

fn dims_strategy() -> impl Strategy<Value = Dims> {
    (2usize..=4, 2usize..=4).prop_map(|(n, m)| Dims::new(n, m).unwrap())
}

fn spec_strategy() -> impl Strategy<Value = GateSpec> {
    let seed = proptest::option::of(any::<u64>());
    let small = proptest::option::of(2usize..=6);
    prop_oneof![
        Just(GateSpec::Cnot),
        Just(GateSpec::Dcnot),
        Just(GateSpec::SqrtSwap),
        Just(GateSpec::P9),
        small.clone().prop_map(|n| GateSpec::Swap { n }),
        (-10.0f64..10.0, small.clone()).prop_map(|(t, n)| GateSpec::FractionalSwap { t, n }),
        (0.0f64..=1.0).prop_map(|alpha| GateSpec::CsAlpha { alpha }),
        small.clone().prop_map(|n| GateSpec::Fourier { n }),
        (0.0f64..=1.0, proptest::option::of(dims_strategy()), seed.clone())
            .prop_map(|(eps, dims, seed)| GateSpec::Diagonal { eps, dims, seed }),
        (proptest::option::of(dims_strategy()), seed).prop_map(|(dims, seed)| GateSpec::Haar { dims, seed }),
        (-4.0f64..4.0, -4.0f64..4.0, -4.0f64..4.0).prop_map(|(a, b, c)| GateSpec::Cartan(CartanCoords::new(a, b, c))),
    ]
}

fn haar(dims: Dims, seed: u64) -> BipartiteOperator {
    BipartiteOperator::new(dims, haar_unitary(dims.total(), &mut rng_from(seed, &[]))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_then_parse_is_identity(spec in spec_strategy()) {
        let text = spec.render();
        prop_assert_eq!(parse_gate_spec(&text).unwrap(), spec);
    }

    #[test]
    fn dims_text_round_trip(dims in dims_strategy()) {
        prop_assert_eq!(dims.to_string().parse::<Dims>().unwrap(), dims);
    }

    #[test]
    fn rearrangements_are_involutions(dims in dims_strategy(), seed in any::<u64>()) {
        let u = haar(dims, seed);
        prop_assert_eq!(partial_transpose(&partial_transpose(&u)), u.clone());
        if dims.is_square() {
            let r = BipartiteOperator::new(dims, reshuffle(&u)).unwrap();
            prop_assert_eq!(&reshuffle(&r), u.matrix());
        }
    }

    #[test]
    fn measures_lie_in_unit_interval(dims in dims_strategy(), seed in any::<u64>()) {
        let g = GateMeasures::of(&haar(dims, seed)).unwrap();
        for x in [g.e, g.e_swapped, g.ep, g.gt] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&x), "{g:?}");
        }
    }

    #[test]
    fn local_unitaries_do_not_change_invariants(dims in dims_strategy(), seed in any::<u64>()) {
        let u = haar(dims, seed);
        let mut rng = rng_from(seed, &[1]);
        let mut local = || BipartiteOperator::local(&haar_unitary(dims.n(), &mut rng), &haar_unitary(dims.m(), &mut rng)).unwrap();
        let v = local().compose(&u).unwrap().compose(&local()).unwrap();
        let (a, b) = (GateMeasures::of(&u).unwrap(), GateMeasures::of(&v).unwrap());
        prop_assert!((a.ep - b.ep).abs() < 1e-10);
        prop_assert!((a.gt - b.gt).abs() < 1e-10);
        prop_assert!((a.e - b.e).abs() < 1e-10);
    }

    #[test]
    fn swap_complements_typicality(n in 2usize..=4, seed in any::<u64>()) {
        let u = haar(Dims::square(n).unwrap(), seed);
        let us = u.compose(&swap_operator(n).unwrap()).unwrap();
        let sum = measures::gate_typicality(&u).unwrap() + measures::gate_typicality(&us).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fractional_swaps_sit_on_the_parabola(t in -7.0f64..7.0, n in 2usize..=5) {
        let gap = measures::parabola_gap(&gates::fractional_swap(t, n).unwrap()).unwrap();
        prop_assert!(gap.abs() < 1e-10);
    }
}

#[test]
fn trajectories_do_not_depend_on_the_scheduler() {
    let cfg = EvolutionConfig {
        gate: parse_gate_spec("diag:eps=0.3,seed=9").unwrap(),
        dims: Dims::new(2, 3).unwrap(),
        steps: 12,
        trials: 300,
        seed: 99,
        mode: EvolutionMode::FreshLocals,
    };
    let seq = thermal::evolve_trajectory(&cfg, Exec::Sequential).unwrap();
    let par = thermal::evolve_trajectory(&cfg, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn single_step_is_the_gate_itself() {
    let cfg = EvolutionConfig {
        gate: GateSpec::Cnot,
        dims: Dims::square(2).unwrap(),
        steps: 1,
        trials: 10,
        seed: 1,
        mode: EvolutionMode::FreshLocals,
    };
    let traj = thermal::evolve_trajectory(&cfg, Exec::default()).unwrap();
    assert_eq!(traj.rows[0].mean_ep, traj.gate_ep);
    assert!((traj.rows[0].mean_ep - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn reduced_saturation_preset_tracks_theory() {
    let cfg = EvolutionConfig {
        gate: parse_gate_spec("diag:eps=0.05,seed=3").unwrap(),
        dims: Dims::new(2, 3).unwrap(),
        steps: 500,
        trials: 1000,
        seed: 3,
        mode: EvolutionMode::FreshLocals,
    };
    let start = std::time::Instant::now();
    let traj = thermal::evolve_trajectory(&cfg, Exec::default()).unwrap();
    assert!(traj.max_theory_deviation() <= 0.05);
    assert!(start.elapsed().as_secs() < 120);
}

mod common;

use aivip::{
    dag_to_mag, equivalence_class, inducing_path_exists, inducing_path_exists_bruteforce, is_visible,
    markov_equivalent, pag_oracle, GraphKind, Mark,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_preserves_independence_model(seed in any::<u64>(), n_lat in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_obs = rng.random_range(2..=7 - n_lat);
        let spec = common::random_latent_dag(&mut rng, n_obs, n_lat, 0.45);
        let mag = dag_to_mag(&spec);
        prop_assert!(mag.check_kind(GraphKind::Mag).is_ok());
        let obs = &spec.observed;
        for a in 0..obs.len() {
            for b in (a + 1)..obs.len() {
                let rest: Vec<usize> = (0..obs.len()).filter(|&k| k != a && k != b).collect();
                for z in common::subsets(&rest) {
                    let z_dag: Vec<usize> = z.iter().map(|&k| obs[k]).collect();
                    prop_assert_eq!(
                        common::sep(&mag, a, b, &z),
                        common::sep(&spec.dag, obs[a], obs[b], &z_dag)
                    );
                }
            }
        }
    }

    #[test]
    fn projection_preserves_ancestry(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = common::random_latent_dag(&mut rng, 5, 2, 0.45);
        let mag = dag_to_mag(&spec);
        for (a, &da) in spec.observed.iter().enumerate() {
            let an = spec.dag.ancestor_mask(&[da]);
            let an_mag = mag.ancestor_mask(&[a]);
            for (b, &db) in spec.observed.iter().enumerate() {
                prop_assert_eq!(an[db], an_mag[b]);
            }
        }
    }

    #[test]
    fn inducing_path_routes_agree(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_ancestral_graph(&mut rng, n, 0.4);
        let u: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        for x in 0..n {
            for y in (x + 1)..n {
                if u.contains(&x) || u.contains(&y) {
                    continue;
                }
                prop_assert_eq!(
                    inducing_path_exists(&g, x, y, &u).unwrap(),
                    inducing_path_exists_bruteforce(&g, x, y, &u).unwrap()
                );
            }
        }
    }

    #[test]
    fn confounded_treatment_edge_is_invisible(seed in any::<u64>(), n_x in 0usize..4, n_lat in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_iv_instance(&mut rng, n_x, n_lat, 0.4, false);
        prop_assume!(common::ancestral_iv_set(&inst).is_some());
        let mag = dag_to_mag(&inst.spec);
        let (w, y, s) = (mag.require("W").unwrap(), mag.require("Y").unwrap(), mag.require("S").unwrap());
        prop_assert!(mag.is_directed(w, y));
        prop_assert!(!is_visible(&mag, w, y).unwrap());
        prop_assert!(mag.is_adjacent(s, y));
        prop_assert_eq!(mag.mark_at(s, y), Some(Mark::Arrow));
    }

    #[test]
    fn pag_circles_mark_disagreement(seed in any::<u64>(), n_obs in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mag = common::random_mag(&mut rng, n_obs, 1, 0.5);
        let class = equivalence_class(&mag).unwrap();
        prop_assert!(class.contains(&mag));
        for m in &class {
            prop_assert!(markov_equivalent(m, &mag).unwrap());
        }
        let pag = pag_oracle(&mag).unwrap();
        for (i, _, _, j) in mag.edges() {
            for (a, b) in [(i, j), (j, i)] {
                let marks: Vec<Option<Mark>> = class.iter().map(|m| m.mark_at(a, b)).collect();
                let agree = marks.iter().all(|&k| k == marks[0]);
                let want = if agree { marks[0] } else { Some(Mark::Circle) };
                prop_assert_eq!(pag.mark_at(a, b), want);
            }
        }
        prop_assert_eq!(pag.edge_count(), mag.edge_count());
    }
}

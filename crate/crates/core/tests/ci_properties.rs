mod common;

use aivip::{generate, true_dag, CiTest, FisherZ, Group, OracleTest, SimSpec, Variant};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fisher_z_is_symmetric(seed in any::<u64>(), i in 0usize..6, j in 0usize..6, k in 0usize..6) {
        prop_assume!(i != j && k != i && k != j);
        let data = generate(&SimSpec { noise_covariates: 2, ..SimSpec::new(Group::I, 300, seed) }).unwrap();
        let t = FisherZ::new(&data, 0.05).unwrap();
        let a = t.test(i, j, &[k]).unwrap();
        let b = t.test(j, i, &[k]).unwrap();
        prop_assert_eq!(a.independent, b.independent);
        prop_assert!((a.p_value.unwrap() - b.p_value.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn oracle_agrees_with_separation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = common::random_latent_dag(&mut rng, 5, 2, 0.4);
        let t = OracleTest::new(&spec);
        let obs = &spec.observed;
        for a in 0..obs.len() {
            for b in 0..obs.len() {
                if a == b {
                    continue;
                }
                let rest: Vec<usize> = (0..obs.len()).filter(|&k| k != a && k != b).collect();
                for z in common::subsets(&rest) {
                    let z_dag: Vec<usize> = z.iter().map(|&k| obs[k]).collect();
                    let d = t.test(a, b, &z).unwrap();
                    prop_assert_eq!(d.independent, common::sep(&spec.dag, obs[a], obs[b], &z_dag));
                    prop_assert_eq!(d, t.test(a, b, &z).unwrap());
                }
            }
        }
    }
}

#[test]
fn fisher_z_converges_to_oracle() {
    let noise = 2;
    let oracle = OracleTest::new(&true_dag(Group::I, Variant::Consistent, noise));
    let p = oracle.variables().len();
    let mut queries = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            queries.push((a, b, vec![]));
            for k in 0..p {
                if k != a && k != b {
                    queries.push((a, b, vec![k]));
                }
            }
        }
    }
    let mut rates = Vec::new();
    for n in [1000, 10_000, 100_000] {
        let data = generate(&SimSpec { noise_covariates: noise, ..SimSpec::new(Group::I, n, 3) }).unwrap();
        assert_eq!(data.names(), oracle.variables());
        let t = FisherZ::new(&data, 0.05).unwrap();
        let wrong = queries
            .iter()
            .filter(|(a, b, z)| t.test(*a, *b, z).unwrap().independent != oracle.test(*a, *b, z).unwrap().independent)
            .count();
        rates.push(wrong as f64 / queries.len() as f64);
    }
    assert!(rates[2] < rates[0], "{rates:?}");
    assert!(rates[2] <= rates[1] + 0.02, "{rates:?}");
}

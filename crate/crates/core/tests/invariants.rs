use kinlab::exec::{mc_mean, task_tag, Execution};
use kinlab::geometry::{ConvexDomain, DomainSpec, Vec3};
use kinlab::kernel::CollisionModel;
use kinlab::suite::RunConfig;
use proptest::prelude::*;
use rand::Rng;

fn ellipsoid() -> ConvexDomain {
    ConvexDomain::from_spec(&DomainSpec::ellipsoid(2.0, 1.0, 0.7)).unwrap()
}

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exit_points_lie_on_the_surface_and_on_the_ray(x in vec3(0.6), v in vec3(3.0)) {
        prop_assume!(v.norm() > 1e-3);
        let d = ellipsoid();
        let Ok(r) = d.exit_record(&x, &v) else { return Ok(()) };
        let (qm, qp) = (Vec3::from(r.q_minus), Vec3::from(r.q_plus));
        prop_assert!(d.level_distance(&qm) < 1e-9);
        prop_assert!(d.level_distance(&qp) < 1e-9);
        prop_assert!((x - v * r.tau_minus - qm).norm() < 1e-9);
        prop_assert!((x + v * r.tau_plus - qp).norm() < 1e-9);
        prop_assert!(r.n_minus > 0.0 && r.n_minus <= 1.0 + 1e-12);
    }

    #[test]
    fn exit_times_scale_inversely_with_speed(x in vec3(0.6), v in vec3(2.0), k in 0.1f64..10.0) {
        prop_assume!(v.norm() > 1e-2);
        let d = ellipsoid();
        let (Ok(a), Ok(b)) = (d.exit_record(&x, &v), d.exit_record(&x, &(v * k))) else { return Ok(()) };
        prop_assert!((a.tau_minus - k * b.tau_minus).abs() < 1e-9 * a.tau_minus.max(1.0));
        prop_assert!((a.n_minus - b.n_minus).abs() < 1e-9);
    }

    #[test]
    fn distance_is_below_every_exit_length(x in vec3(0.6), v in vec3(1.0)) {
        prop_assume!(v.norm() > 1e-2);
        let d = ellipsoid();
        let Ok(r) = d.exit_record(&x, &v) else { return Ok(()) };
        let dist = d.distance_to_boundary(&x).unwrap().value;
        let len = (x - Vec3::from(r.q_minus)).norm();
        prop_assert!(dist <= len + 1e-9);
    }

    #[test]
    fn kernel_is_symmetric(v in vec3(4.0), w in vec3(4.0)) {
        prop_assume!((v - w).norm() > 1e-3);
        let m = CollisionModel::new(1.0, 1.0, 1.0).unwrap();
        let a = m.kernel(&v, &w).unwrap();
        let b = m.kernel(&w, &v).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn mc_mean_ignores_execution_mode(seed in any::<u64>(), n in 1usize..5000) {
        let f = |rng: &mut rand_chacha::ChaCha8Rng| -> kinlab::Result<f64> { Ok(rng.random::<f64>().powi(2)) };
        let tag = task_tag("invariant");
        let a = mc_mean(Execution::Sequential, n, seed, tag, f).unwrap();
        let b = mc_mean(Execution::Parallel, n, seed, tag, f).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn config_hash_survives_serialization(seed in any::<u64>(), scale in 0.01f64..10.0, a in 0.5f64..3.0) {
        let mut c = RunConfig::default();
        c.seed = seed;
        c.budget_scale = scale;
        c.domain = DomainSpec::ellipsoid(a, 1.0, 1.0);
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back.config_hash(), c.config_hash());
        prop_assert_eq!(back, c);
    }
}

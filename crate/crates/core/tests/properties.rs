use flatgen_core::flat::FlatTrajectory;
use flatgen_core::se3::*;
use flatgen_core::vehicle::{svd_reframe, Propeller, TiltTricopter, Vehicle};
use nalgebra::{Matrix3, Vector3, Vector4};
use proptest::prelude::*;

fn angles() -> impl Strategy<Value = EulerAngles<f64>> {
    (-3.1..3.1f64, -1.5..1.5f64, -3.1..3.1f64).prop_map(|(r, p, y)| EulerAngles::new(r, p, y))
}

fn vec3(scale: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn rotation_is_orthonormal_with_unit_determinant(a in angles()) {
        let r = euler_to_rotation(a);
        prop_assert!(r.orthonormality_error() < 1e-12);
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_norms_and_cross_products(a in angles(), x in vec3(5.0), y in vec3(5.0)) {
        let r = euler_to_rotation(a);
        prop_assert!(((r * x).norm() - x.norm()).abs() < 1e-12);
        let lhs = (r * x).cross(&(r * y));
        prop_assert!((lhs - r * x.cross(&y)).amax() < 1e-11);
    }

    #[test]
    fn euler_angles_round_trip(a in angles()) {
        let back = euler_to_rotation(a).to_euler();
        prop_assert!((back.to_vector() - a.to_vector()).amax() < 1e-9);
    }

    #[test]
    fn hat_vee_round_trip(v in vec3(100.0), w in vec3(100.0)) {
        let h = hat(&v);
        prop_assert!((h + h.transpose()).amax() == 0.0);
        prop_assert_eq!(vee(&h).unwrap(), v);
        prop_assert!((h * w - v.cross(&w)).amax() < 1e-10);
    }

    #[test]
    fn rate_matrix_inverse(a in angles()) {
        let e = euler_rate_matrix(a).unwrap();
        let ei = euler_rate_matrix_inverse(a).unwrap();
        prop_assert!((e * ei - Matrix3::identity()).amax() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rest_to_rest_boundary_conditions(
        start in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64, -3.0..3.0f64),
        end in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64, -3.0..3.0f64),
        tf in 0.5..20.0f64,
    ) {
        let s = Vector4::new(start.0, start.1, start.2, start.3);
        let e = Vector4::new(end.0, end.1, end.2, end.3);
        let traj = FlatTrajectory::rest_to_rest(s, e, tf).unwrap();
        let a = traj.sample(0.0).unwrap();
        let b = traj.sample(tf).unwrap();
        prop_assert!((a.d[0] - s).amax() < 1e-9);
        prop_assert!((b.d[0] - e).amax() < 1e-9);
        for k in 1..5 {
            let scale = tf.powi(-(k as i32)) * (e - s).amax().max(1.0);
            prop_assert!(a.d[k].amax() < 1e-9 * scale, "start derivative {}", k);
            prop_assert!(b.d[k].amax() < 1e-9 * scale, "end derivative {}", k);
        }
    }

    #[test]
    fn reframing_reconstructs_rank_two_allocation(
        tilt in -0.6..0.6f64,
        arms in prop::array::uniform3((-0.3..0.3f64, -0.3..0.3f64)),
        c in 0.0..0.03f64,
    ) {
        let mut tri = TiltTricopter::<f64>::preset();
        for (arm, (x, y)) in tri.arms.iter_mut().zip(arms) {
            *arm = Vector3::new(x, y, 0.0);
        }
        tri.drag = [-c, c, c];
        let Ok(quad) = tri.to_quad() else { return Ok(()) };
        // tilt the whole airframe so the thrust plane is not a body plane
        let r = euler_to_rotation(EulerAngles::new(tilt, 0.5 * tilt, 0.0));
        let props = quad
            .propellers()
            .iter()
            .map(|p| Propeller::new(r * p.r, r * p.v, p.c).unwrap())
            .collect();
        let veh = Vehicle::new(quad.mass(), *quad.inertia(), props, quad.gravity()).unwrap();
        prop_assume!(veh.rank_a() == 2);
        let rf = svd_reframe(&veh).unwrap();
        prop_assert!(rf.reconstruction_error() < 1e-10);
        prop_assert!((rf.q.transpose() * rf.q - Matrix3::identity()).amax() < 1e-10);
    }
}

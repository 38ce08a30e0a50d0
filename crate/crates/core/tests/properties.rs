use proptest::prelude::*;

use hinf_core::approx::{GainNet, LinearNoiseNet, NoiseNet, QuadraticValueNet, ValueNet};
use hinf_core::checkpoint;
use hinf_core::game::{self, GameWeights};
use hinf_core::linalg::{gare_residual, gare_solve, Mat};
use hinf_core::plant::NoiseBounds;
use hinf_core::tpi::{relative_errors, TpiNets};

fn mat(n: usize, range: f64) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-range..range, n * n).prop_map(move |v| Mat::new(n, n, v).unwrap())
}

fn bounded_weights(wb: [f64; 2], vb: [f64; 2], q: [f64; 2], r: [f64; 2]) -> GameWeights {
    GameWeights::new(
        Mat::from_diag(&q),
        Mat::from_diag(&r),
        Mat::identity(2),
        1.0,
        NoiseBounds::new(wb.to_vec(), vb.to_vec()).unwrap(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn bounded_noise_is_interior(
        g in prop::array::uniform2(-1e8f64..1e8),
        k in mat(2, 1e4),
        wb in prop::array::uniform2(1e-4f64..10.0),
        vb in prop::array::uniform2(1e-4f64..10.0),
        q in prop::array::uniform2(1e-3f64..10.0),
    ) {
        let weights = bounded_weights(wb, vb, q, q);
        let (w, v) = game::worst_noise_bounded(&g, &k, &weights);
        for i in 0..2 {
            prop_assert!(w[i].abs() < wb[i]);
            prop_assert!(v[i].abs() < vb[i]);
        }
        // The penalty is finite wherever the worst-case noise lands.
        prop_assert!(game::nq_penalty(&w, &wb, &q).unwrap().is_finite());
    }

    #[test]
    fn penalty_is_nonnegative_and_even(
        frac in prop::array::uniform2(-0.999f64..0.999),
        wb in prop::array::uniform2(1e-3f64..5.0),
        q in prop::array::uniform2(1e-3f64..5.0),
    ) {
        let w = [frac[0] * wb[0], frac[1] * wb[1]];
        let neg = [-w[0], -w[1]];
        let f = game::nq_penalty(&w, &wb, &q).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert_eq!(f, game::nq_penalty(&neg, &wb, &q).unwrap());
    }

    #[test]
    fn gare_stabilizing_for_psd_m(a in mat(3, 2.0), b in mat(3, 1.0), g in mat(3, 1.0)) {
        let m = &(&b * &b.transpose()) + &Mat::identity(3).scale(0.1);
        let q = &(&g * &g.transpose()) + &Mat::identity(3);
        let p = gare_solve(&a, &m, &q).unwrap();
        let res = gare_residual(&a, &m, &q, &p).frobenius();
        let scale = 1.0 + q.frobenius() + p.frobenius() * (a.frobenius() + p.frobenius() * m.frobenius());
        prop_assert!(res <= 1e-10 * scale, "residual {res}");
        prop_assert!((&a - &(&p * &m)).is_hurwitz());
        prop_assert!(p.is_positive_definite());
    }

    #[test]
    fn checkpoint_round_trip(
        omega in prop::collection::vec(-1e6f64..1e6, 3),
        theta in mat(2, 1e3),
        eta in mat(2, 1e3),
    ) {
        let nets = TpiNets {
            value: ValueNet::Quadratic(QuadraticValueNet::from_weights(2, omega).unwrap()),
            gain: GainNet::new(theta).unwrap(),
            noise: NoiseNet::Linear(LinearNoiseNet::from_matrix(eta).unwrap()),
        };
        prop_assert_eq!(checkpoint::from_str(&checkpoint::to_string(&nets)).unwrap(), nets);
    }

    #[test]
    fn relative_errors_vanish_on_reference(omega in prop::collection::vec(0.1f64..10.0, 3), theta in mat(2, 5.0)) {
        prop_assume!(theta.frobenius() > 0.0);
        let (eo, et) = relative_errors(&omega, &theta, &omega, &theta).unwrap();
        prop_assert_eq!((eo, et), (0.0, 0.0));
        let scaled: Vec<f64> = omega.iter().map(|w| 2.0 * w).collect();
        let (eo, et) = relative_errors(&scaled, &theta.scale(0.5), &omega, &theta).unwrap();
        prop_assert!((eo - 1.0).abs() < 1e-12 && (et - 0.5).abs() < 1e-12);
    }
}

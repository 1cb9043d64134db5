use proptest::prelude::*;

use tracelab::matrix::{random_pd, random_unitary};
use tracelab::trace_fn::psi;
use tracelab::{ComplexMatrix, PsiParams, Rng};

const PARAMS: [(f64, f64, f64); 4] =
    [(0.5, 0.5, 1.0), (2.0, -1.0, 1.0), (1.3, -0.4, 2.5), (0.7, 0.1, 0.9)];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Scaling the first argument scales the value by `c^{p s}`.
    #[test]
    fn psi_is_homogeneous_in_a(seed in 0u64..10_000, c in 0.2f64..5.0, idx in 0usize..4) {
        let (p, q, s) = PARAMS[idx];
        let params = PsiParams::new(p, q, s);
        let mut rng = Rng::with_stream(seed, 0);
        let a = random_pd(3, &mut rng);
        let b = random_pd(3, &mut rng);
        let k = ComplexMatrix::identity(3);
        let base = psi(&a, &b, &k, params).unwrap();
        let scaled = psi(&a.scale_re(c), &b, &k, params).unwrap();
        let expect = c.powf(p * s) * base;
        prop_assert!((scaled - expect).abs() <= 1e-10 * expect.abs().max(1.0));
    }

    /// Simultaneous unitary conjugation of all three inputs is invisible.
    #[test]
    fn psi_is_unitarily_invariant(seed in 0u64..10_000, idx in 0usize..4) {
        let (p, q, s) = PARAMS[idx];
        let params = PsiParams::new(p, q, s);
        let mut rng = Rng::with_stream(seed, 1);
        let a = random_pd(3, &mut rng);
        let b = random_pd(3, &mut rng);
        let k = ComplexMatrix::identity(3);
        let u = random_unitary(3, &mut rng);
        let conj = |m: &ComplexMatrix| u.matmul(m).matmul(&u.adjoint());
        let base = psi(&a, &b, &k, params).unwrap();
        let moved = psi(&conj(&a), &conj(&b), &conj(&k), params).unwrap();
        prop_assert!((moved - base).abs() <= 1e-10 * base.abs().max(1.0));
    }

    /// Matrices survive a JSON round trip bit-exactly.
    #[test]
    fn matrix_json_round_trip(seed in 0u64..10_000, dim in 1usize..5) {
        let mut rng = Rng::with_stream(seed, 2);
        let m = random_pd(dim, &mut rng);
        let text = serde_json::to_string(&m).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(m.dist(&back), 0.0);
    }
}

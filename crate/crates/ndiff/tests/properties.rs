use ndiff::{grad_check, Tape, Tensor, Var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..5usize, 1..4)
}

fn tensor(shape: &[usize], seed: u64) -> Tensor {
    Tensor::uniform(shape, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #[test]
    fn data_length_must_match_shape(shape in shape(), extra in 1..4usize) {
        let n: usize = shape.iter().product();
        prop_assert!(Tensor::new(&shape, vec![0.0; n]).is_ok());
        prop_assert!(Tensor::new(&shape, vec![0.0; n + extra]).is_err());
        if n > extra {
            prop_assert!(Tensor::new(&shape, vec![0.0; n - extra]).is_err());
        }
    }

    #[test]
    fn matmul_matches_naive_loops(m in 1..9usize, k in 1..9usize, n in 1..9usize, seed in any::<u64>()) {
        let a = tensor(&[m, k], seed);
        let b = tensor(&[k, n], seed ^ 1);
        let tape = Tape::new();
        let c = tape.constant(a.clone()).matmul(tape.constant(b.clone())).unwrap().value();
        prop_assert_eq!(c.shape(), &[m, n]);
        for i in 0..m {
            for j in 0..n {
                let dot: f64 = (0..k).map(|p| a.data()[i * k + p] * b.data()[p * n + j]).sum();
                prop_assert!((c.data()[i * n + j] - dot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_leaf_shapes(shape in shape(), seed in any::<u64>()) {
        let tape = Tape::new();
        let x = tape.param(&tensor(&shape, seed));
        let y = tape.param(&tensor(&shape, seed ^ 2));
        let loss = x.mul(y).unwrap().tanh().add(x.sigmoid()).unwrap().mean().unwrap();
        let grads = tape.backward(loss).unwrap();
        prop_assert_eq!(grads.get(x).unwrap().shape(), shape.as_slice());
        prop_assert_eq!(grads.get(y).unwrap().shape(), shape.as_slice());
        prop_assert!(tape.is_empty());
    }

    #[test]
    fn fan_out_sums_every_use(values in prop::collection::vec(-3.0..3.0f64, 1..12)) {
        // d/dx sum(x*x + x + 2x) = 2x + 3
        let tape = Tape::new();
        let x = tape.param(&Tensor::vector(values.clone()));
        let loss = x.mul(x).unwrap().add(x).unwrap().add(x.scale(2.0)).unwrap().sum();
        let grads = tape.backward(loss).unwrap();
        for (g, v) in grads.get(x).unwrap().data().iter().zip(&values) {
            prop_assert!((g - (2.0 * v + 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn concat_then_slice_is_identity(rows in 1..5usize, a in 1..5usize, b in 1..5usize, seed in any::<u64>()) {
        let left = tensor(&[rows, a], seed);
        let right = tensor(&[rows, b], seed ^ 3);
        let tape = Tape::new();
        let joined = Var::concat(&[tape.constant(left.clone()), tape.constant(right.clone())], 1).unwrap();
        prop_assert_eq!(joined.shape(), vec![rows, a + b]);
        prop_assert_eq!(joined.slice(1, 0, a).unwrap().value(), left);
        prop_assert_eq!(joined.slice(1, a, b).unwrap().value(), right);
    }

    #[test]
    fn smooth_compositions_pass_grad_check(rows in 1..5usize, cols in 1..5usize, seed in any::<u64>()) {
        let w = tensor(&[cols, 3], seed);
        let b = tensor(&[3], seed ^ 4);
        let x = tensor(&[rows, cols], seed ^ 5);
        let err = grad_check(
            |t, x| x.affine(t.constant(w.clone()), t.constant(b.clone()))?.gelu().tanh().mean(),
            &x,
            1e-5,
        )
        .unwrap();
        prop_assert!(err < 1e-4, "{}", err);
    }

    #[test]
    fn grad_check_is_exact_on_linear_maps(shape in shape(), c in -5.0..5.0f64, seed in any::<u64>()) {
        let x = tensor(&shape, seed);
        let err = grad_check(|_, x| Ok(x.scale(c).sum()), &x, 1e-5).unwrap();
        prop_assert!(err < 1e-9, "{}", err);
    }
}

//! Central finite-difference checks of every differentiable operation at f64.

use ssdgan_core::rng::{SeededRng, Stream};
use ssdgan_core::tensor_nn::gradcheck::{check_gradients, random_tensor};
use ssdgan_core::tensor_nn::ops::power_iteration;
use ssdgan_core::tensor_nn::{Graph, Tensor, Var};
use ssdgan_core::Result;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn tensors(shapes: &[Vec<usize>], seed: u64) -> Vec<Tensor<f64>> {
    let mut rng = SeededRng::new(seed, Stream::Data);
    shapes.iter().map(|s| random_tensor(s, &mut rng)).collect()
}

/// Runs the check once per case. `build` gets the unperturbed inputs so it
/// can derive constants from them; those must not depend on the leaves.
fn assert_close_with<F, B>(name: &str, cases: &[Vec<Vec<usize>>], make: F)
where
    F: Fn(&[Tensor<f64>]) -> B,
    B: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    assert!(cases.len() >= 5, "{name}: too few shapes");
    for (i, shapes) in cases.iter().enumerate() {
        let inputs = tensors(shapes, 100 + i as u64);
        let build = make(&inputs);
        let report = check_gradients(&inputs, STEP, i as u64, build).unwrap();
        assert!(report.checked > 0);
        assert!(
            report.max_rel_error < TOLERANCE,
            "{name} {shapes:?}: relative error {:e}",
            report.max_rel_error
        );
    }
}

fn assert_close<F>(name: &str, cases: &[Vec<Vec<usize>>], build: F)
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    assert_close_with(name, cases, |_| &build);
}

/// Fixed `u`, `v` for a weight: a few power-iteration steps from `e_0`.
fn singular_vectors(w: &Tensor<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; w.shape()[0]];
    u[0] = 1.0;
    let v = power_iteration(w, &mut u, 3);
    (u, v)
}

fn same(shapes: &[&[usize]]) -> Vec<Vec<Vec<usize>>> {
    shapes.iter().map(|s| vec![s.to_vec()]).collect()
}

const IMAGES: [&[usize]; 5] = [
    &[1, 1, 4, 4],
    &[2, 1, 4, 6],
    &[1, 3, 2, 2],
    &[3, 2, 6, 4],
    &[2, 2, 8, 8],
];

#[test]
fn conv2d_with_bias() {
    let cases: Vec<Vec<Vec<usize>>> = [
        (1, 1, 1, 4, 4, 3),
        (2, 2, 3, 5, 5, 3),
        (1, 3, 2, 6, 4, 1),
        (2, 1, 2, 4, 6, 3),
        (1, 2, 4, 3, 3, 3),
    ]
    .iter()
    .map(|&(b, cin, cout, h, w, k)| vec![vec![b, cin, h, w], vec![cout, cin, k, k], vec![cout]])
    .collect();
    assert_close("conv pad 1", &cases, |g, v| {
        g.conv2d(v[0], v[1], Some(v[2]), 1, 1)
    });
    assert_close("conv pad 0", &cases, |g, v| {
        g.conv2d(v[0], v[1], Some(v[2]), 1, 0)
    });
    assert_close("conv stride 2", &cases, |g, v| {
        g.conv2d(v[0], v[1], Some(v[2]), 2, 1)
    });
    assert_close("conv no bias", &cases, |g, v| {
        g.conv2d(v[0], v[1], None, 1, 1)
    });
}

#[test]
fn linear_with_bias() {
    let cases: Vec<Vec<Vec<usize>>> = [(1, 1, 1), (2, 3, 4), (4, 5, 1), (3, 7, 2), (1, 16, 8)]
        .iter()
        .map(|&(b, i, o)| vec![vec![b, i], vec![o, i], vec![o]])
        .collect();
    assert_close("linear", &cases, |g, v| g.linear(v[0], v[1], Some(v[2])));
    assert_close("linear no bias", &cases, |g, v| g.linear(v[0], v[1], None));
}

#[test]
fn batchnorm_training_and_eval() {
    let cases: Vec<Vec<Vec<usize>>> = [
        (2, 1, 2, 2),
        (3, 2, 2, 2),
        (2, 3, 4, 4),
        (4, 1, 1, 1),
        (2, 2, 3, 5),
    ]
    .iter()
    .map(|&(b, c, h, w)| vec![vec![b, c, h, w], vec![c], vec![c]])
    .collect();
    for training in [true, false] {
        assert_close("batchnorm", &cases, move |g, v| {
            let c = g.value(v[1]).len();
            let (mut mean, mut var) = (vec![0.1; c], vec![1.5; c]);
            g.batchnorm(v[0], v[1], v[2], &mut mean, &mut var, training)
        });
    }
}

#[test]
fn pointwise_activations() {
    let cases = same(&[&[1], &[3, 2], &[2, 3, 4], &[1, 1, 5, 5], &[7]]);
    assert_close("relu", &cases, |g, v| Ok(g.relu(v[0])));
    assert_close("tanh", &cases, |g, v| Ok(g.tanh(v[0])));
    assert_close("sigmoid", &cases, |g, v| Ok(g.sigmoid(v[0])));
    assert_close("affine", &cases, |g, v| Ok(g.affine(v[0], -1.7, 0.3)));
    assert_close("log", &cases, |g, v| {
        let s = g.sigmoid(v[0]);
        Ok(g.log(s))
    });
}

#[test]
fn reductions_and_reshapes() {
    let cases = same(&[&[2, 3], &[1, 4], &[4, 1], &[3, 5], &[6, 2]]);
    assert_close("mean", &cases, |g, v| Ok(g.mean(v[0])));
    assert_close("sum", &cases, |g, v| Ok(g.sum(v[0])));
    assert_close("mean_rows", &cases, |g, v| g.mean_rows(v[0]));
    assert_close("reshape", &cases, |g, v| {
        let n = g.value(v[0]).len();
        g.reshape(v[0], &[n])
    });
    assert_close("slice0", &cases, |g, v| {
        let rows = g.value(v[0]).shape()[0];
        g.slice0(v[0], rows / 2, rows - rows / 2)
    });
    assert_close("concat0", &cases, |g, v| {
        let t = g.tanh(v[0]);
        g.concat0(v[0], t)
    });
    assert_close("sum_pool", &same(&IMAGES), |g, v| g.sum_pool(v[0]));
}

#[test]
fn binary_operations() {
    let cases: Vec<Vec<Vec<usize>>> = [&[1usize][..], &[3], &[2, 2], &[4, 1], &[2, 3, 2]]
        .iter()
        .map(|s| vec![s.to_vec(), s.to_vec()])
        .collect();
    assert_close("add", &cases, |g, v| g.add(v[0], v[1]));
    assert_close("mix", &cases, |g, v| g.mix(v[0], v[1], 0.3));
    let single: Vec<Vec<Vec<usize>>> = cases.iter().map(|c| vec![c[0].clone()]).collect();
    assert_close_with("mul_const", &single, |inputs| {
        let factor = inputs[0].map(|x| 2.0 * x - 0.5);
        move |g: &mut Graph<f64>, v: &[Var]| {
            let x = g.tanh(v[0]);
            g.mul_const(x, &factor)
        }
    });
}

#[test]
fn resampling_and_wavelets() {
    let cases = same(&IMAGES);
    assert_close("avgpool2", &cases, |g, v| g.avgpool2(v[0]));
    assert_close("upsample2", &cases, |g, v| g.upsample2(v[0]));
    assert_close("haar_dwt", &cases, |g, v| g.haar_dwt(v[0]));
}

#[test]
fn spectral_normalization_with_fixed_vectors() {
    let cases = same(&[&[1, 3], &[3, 1], &[2, 2], &[4, 6], &[2, 3, 2, 2]]);
    assert_close_with("spectral_norm", &cases, |inputs| {
        let (u, vv) = singular_vectors(&inputs[0]);
        move |g: &mut Graph<f64>, v: &[Var]| g.spectral_norm(v[0], u.clone(), vv.clone())
    });
}

#[test]
fn reduced_spectrum() {
    let cases = same(&[
        &[1, 1, 4, 4],
        &[2, 1, 4, 4],
        &[1, 1, 6, 4],
        &[1, 1, 5, 5],
        &[3, 1, 8, 8],
    ]);
    // Shift away from zero so the DC term sets the normalization.
    assert_close("phi", &cases, |g, v| {
        let x = g.affine(v[0], 0.4, 0.6);
        g.phi(x)
    });
}

#[test]
fn blended_log_probability() {
    let cases = same(&[&[1, 1], &[4, 1], &[3, 2], &[8, 1], &[2, 5]]);
    let range = (1e-7f64.ln(), (-1e-7f64).ln_1p());
    for lambda in [0.0, 0.3, 0.5, 1.0] {
        for complement in [false, true] {
            assert_close_with("log_blend", &cases, |inputs| {
                let c = inputs[0].map(|x| 0.5 + 0.4 * (3.0 * x + 1.0).sin());
                move |g: &mut Graph<f64>, v: &[Var]| {
                    let c = g.input(c.clone());
                    let logits = g.affine(v[0], 3.0, 0.0);
                    g.log_blend(logits, Some(c), lambda, complement, range)
                }
            });
        }
    }
    assert_close("log_blend without c", &cases, move |g, v| {
        let logits = g.affine(v[0], 3.0, 0.0);
        g.log_blend(logits, None, 1.0, true, range)
    });
}

#[test]
fn composed_layers() {
    let cases: Vec<Vec<Vec<usize>>> = [(1, 1, 2), (2, 2, 3), (2, 1, 1), (3, 2, 2), (1, 3, 4)]
        .iter()
        .map(|&(b, c, f)| vec![vec![b, c, 4, 4], vec![f, c, 3, 3], vec![f], vec![1, f * 4]])
        .collect();
    assert_close_with("conv-relu-pool-sn-linear", &cases, |inputs| {
        let (u, vv) = singular_vectors(&inputs[3]);
        move |g: &mut Graph<f64>, v: &[Var]| {
            let x = g.conv2d(v[0], v[1], Some(v[2]), 1, 1)?;
            let x = g.relu(x);
            let x = g.avgpool2(x)?;
            let b = g.value(x).shape()[0];
            let n = g.value(x).len() / b;
            let x = g.reshape(x, &[b, n])?;
            let w = g.spectral_norm(v[3], u.clone(), vv.clone())?;
            let logits = g.linear(x, w, None)?;
            g.log_blend(logits, None, 1.0, false, (-16.0, -1e-7))
        }
    });
}

//! Central finite-difference gradient checking at `f64`.

use crate::error::Result;
use crate::rng::{SeededRng, Stream};

use super::graph::{Graph, Var};
use super::tensor::Tensor;

/// Outcome of [`check_gradients`].
#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Denominator floor for near-zero gradient entries.
pub const REL_FLOOR: f64 = 1e-6;

/// Compares reverse-mode gradients of `build` against central differences
/// with step `h`, for every element of every input.
///
/// `build` receives the graph and one trainable leaf per input and must
/// return any-shaped output; it is reduced to a scalar through a fixed random
/// projection so every output element contributes.
pub fn check_gradients<F>(inputs: &[Tensor<f64>], h: f64, seed: u64, build: F) -> Result<GradCheck>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut rng = SeededRng::new(seed, Stream::Data);
    let mut projection: Option<Tensor<f64>> = None;
    let mut eval = |vals: &[Tensor<f64>], want_grads: bool| -> Result<(f64, Vec<Tensor<f64>>)> {
        let mut g = Graph::new();
        let leaves: Vec<Var> = vals.iter().map(|t| g.param(t.clone())).collect();
        let out = build(&mut g, &leaves)?;
        let proj = projection
            .get_or_insert_with(|| {
                let shape = g.value(out).shape().to_vec();
                let n: usize = shape.iter().product();
                let data: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
                Tensor::new(&shape, data).unwrap()
            })
            .clone();
        let weighted = g.mul_const(out, &proj)?;
        let loss = g.sum(weighted);
        let value = g.value(loss).data()[0];
        if !want_grads {
            return Ok((value, Vec::new()));
        }
        let grads = g.backward(loss)?;
        let gs = leaves
            .iter()
            .zip(vals)
            .map(|(&v, t)| {
                grads
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(t.shape()))
            })
            .collect();
        Ok((value, gs))
    };
    let (_, analytic) = eval(inputs, true)?;
    let mut max_rel: f64 = 0.0;
    let mut checked = 0;
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (ti, a) in analytic.iter().enumerate() {
        for i in 0..work[ti].len() {
            let orig = work[ti].data()[i];
            work[ti].data_mut()[i] = orig + h;
            let (fp, _) = eval(&work, false)?;
            work[ti].data_mut()[i] = orig - h;
            let (fm, _) = eval(&work, false)?;
            work[ti].data_mut()[i] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let an = a.data()[i];
            let rel = (an - numeric).abs() / an.abs().max(numeric.abs()).max(REL_FLOOR);
            max_rel = max_rel.max(rel);
            checked += 1;
        }
    }
    Ok(GradCheck {
        max_rel_error: max_rel,
        checked,
    })
}

/// Random tensor with entries uniform in `[-1, 1)`.
pub fn random_tensor(shape: &[usize], rng: &mut SeededRng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
}

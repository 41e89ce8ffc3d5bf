//! Central finite-difference check of tape gradients.

use rand::seq::index::sample;
use rand::Rng;

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;

/// Builds a scalar-valued graph from parameter leaves.
pub trait GraphBuilder {
    fn build(&self, g: &mut Graph, params: &[Var]) -> Result<Var>;
}

impl<F> GraphBuilder for F
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    fn build(&self, g: &mut Graph, params: &[Var]) -> Result<Var> {
        self(g, params)
    }
}

fn evaluate(f: &dyn GraphBuilder, params: &[Tensor]) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let out = f.build(&mut g, &vars)?;
    Ok(g.value(out).item())
}

/// Analytic gradients of `f` with respect to every parameter, plus the value.
pub fn analytic_gradients(f: &dyn GraphBuilder, params: &[Tensor]) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let out = f.build(&mut g, &vars)?;
    g.backward(out)?;
    let grads = vars
        .iter()
        .zip(params)
        .map(|(v, p)| g.grad(*v).map_or_else(|| vec![0.0; p.len()], <[f64]>::to_vec))
        .collect();
    Ok((g.value(out).item(), grads))
}

/// Maximum of `|analytic - numeric| / max(1, |numeric|)` over checked coordinates.
///
/// With `max_coords = Some(n)` at most `n` coordinates per parameter are
/// sampled using `rng`; otherwise every coordinate is checked.
pub fn grad_check<R: Rng>(
    f: &dyn GraphBuilder,
    params: &[Tensor],
    eps: f64,
    max_coords: Option<usize>,
    rng: &mut R,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let (_, analytic) = analytic_gradients(f, params)?;
    let mut worst: f64 = 0.0;
    let mut work = params.to_vec();
    for (pi, p) in params.iter().enumerate() {
        let coords: Vec<usize> = match max_coords {
            Some(n) if n < p.len() => sample(rng, p.len(), n).into_vec(),
            _ => (0..p.len()).collect(),
        };
        for c in coords {
            let orig = p.data()[c];
            work[pi].data_mut()[c] = orig + eps;
            let plus = evaluate(f, &work)?;
            work[pi].data_mut()[c] = orig - eps;
            let minus = evaluate(f, &work)?;
            work[pi].data_mut()[c] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = (analytic[pi][c] - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// `sum(v * r)` for a fixed random `r`; turns any node into a scalar probe
/// whose gradient exercises every output entry.
pub fn random_projection<R: Rng>(g: &mut Graph, v: Var, rng: &mut R) -> Result<Var> {
    let shape = g.shape(v).to_vec();
    let n = g.value(v).len();
    let r = Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let rv = g.constant(r);
    let prod = g.mul(v, rv)?;
    Ok(g.sum(prod))
}

//! Builds a small expression on the tape, backpropagates, and compares the
//! result with central finite differences. Then runs the full op suite.

use deinterleave::autograd::{grad_check, Graph, Tensor, DEFAULT_EPS};
use deinterleave::harness::gradcheck_suite;
use deinterleave::simulator::rng_from_seed;

fn main() -> deinterleave::Result<()> {
    let w = Tensor::matrix(2, 3, vec![0.3, -0.2, 0.5, 0.1, 0.4, -0.6])?;
    let x = Tensor::matrix(4, 2, vec![1.0, 0.5, -0.3, 0.8, 0.2, -1.0, 0.7, 0.1])?;
    let targets = [0usize, 2, 1, 2];
    let loss = move |g: &mut Graph, p: &[deinterleave::autograd::Var]| {
        let h = g.matmul(p[1], p[0])?;
        let h = g.tanh(h);
        let probs = g.softmax(h, 1)?;
        let ce = g.cross_entropy(probs, &targets)?;
        g.mean(ce)
    };

    let mut g = Graph::new();
    let (wv, xv) = (g.param(w.clone()), g.param(x.clone()));
    let l = loss(&mut g, &[wv, xv])?;
    g.backward(l)?;
    println!("loss {:.6}", g.value(l).item());
    println!("dL/dW {:?}", g.grad(wv).unwrap());

    let err = grad_check(&loss, &[w, x], DEFAULT_EPS, None, &mut rng_from_seed(1))?;
    println!("max relative error vs finite differences: {err:.2e}\n");

    for entry in gradcheck_suite(7, 5)? {
        println!("{:<24} {:.2e}", entry.name, entry.max_rel_error);
    }
    Ok(())
}

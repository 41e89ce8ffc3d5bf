//! Recurrent layers assembled step by step from elementary tape ops.
//!
//! These compute the same functions as [`Graph::lstm_sequence`] and
//! [`Graph::gru_sequence`] but record every gate as its own node, so they are
//! slow. Tests use them as an independent reference for the fused kernels.

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

fn dims(g: &Graph, input: Var, weight: Var, gates: usize) -> Result<(usize, usize, usize)> {
    let (len, n_in) = match g.shape(input) {
        [l, i] => (*l, *i),
        s => return Err(Error::invalid(format!("recurrent input must be [L, in], got {s:?}"))),
    };
    match g.shape(weight) {
        [r, c] if c % gates == 0 && *r == n_in + c / gates => Ok((len, n_in, c / gates)),
        s => Err(Error::invalid(format!("recurrent weight has shape {s:?}"))),
    }
}

fn order(len: usize, reverse: bool) -> Vec<usize> {
    if reverse {
        (0..len).rev().collect()
    } else {
        (0..len).collect()
    }
}

/// One LSTM step: returns `(h, c)` for row input `x` (`[1, in]`).
pub fn lstm_cell(g: &mut Graph, x: Var, h: Var, c: Var, weight: Var, bias: Var) -> Result<(Var, Var)> {
    let hid = g.shape(h)[1];
    let xh = g.concat(&[x, h], 1)?;
    let z = g.matmul(xh, weight)?;
    let z = g.add(z, bias)?;
    let zi = g.slice(z, 1, 0, hid)?;
    let zf = g.slice(z, 1, hid, hid)?;
    let zg = g.slice(z, 1, 2 * hid, hid)?;
    let zo = g.slice(z, 1, 3 * hid, hid)?;
    let (i, f, cand, o) = (g.sigmoid(zi), g.sigmoid(zf), g.tanh(zg), g.sigmoid(zo));
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_new = g.add(keep, write)?;
    let tc = g.tanh(c_new);
    let h_new = g.mul(o, tc)?;
    Ok((h_new, c_new))
}

/// One GRU step: `h' = h + z * (n - h)`, with the reset gate applied to `h`
/// before the recurrent candidate projection.
pub fn gru_cell(g: &mut Graph, x: Var, h: Var, weight: Var, bias: Var) -> Result<Var> {
    let n_in = g.shape(x)[1];
    let hid = g.shape(h)[1];
    let w_x = g.slice(weight, 0, 0, n_in)?;
    let w_h = g.slice(weight, 0, n_in, hid)?;
    let w_hzr = g.slice(w_h, 1, 0, 2 * hid)?;
    let w_hn = g.slice(w_h, 1, 2 * hid, hid)?;
    let ax = g.matmul(x, w_x)?;
    let ax = g.add(ax, bias)?;
    let ah = g.matmul(h, w_hzr)?;
    let ax_zr = g.slice(ax, 1, 0, 2 * hid)?;
    let zr = g.add(ax_zr, ah)?;
    let zr = g.sigmoid(zr);
    let z = g.slice(zr, 1, 0, hid)?;
    let r = g.slice(zr, 1, hid, hid)?;
    let rh = g.mul(r, h)?;
    let an = g.matmul(rh, w_hn)?;
    let ax_n = g.slice(ax, 1, 2 * hid, hid)?;
    let an = g.add(ax_n, an)?;
    let n = g.tanh(an);
    let diff = g.sub(n, h)?;
    let step = g.mul(z, diff)?;
    g.add(h, step)
}

/// Composed counterpart of [`Graph::lstm_sequence`].
pub fn lstm_composed(g: &mut Graph, input: Var, weight: Var, bias: Var, reverse: bool) -> Result<Var> {
    let (len, _, hid) = dims(g, input, weight, 4)?;
    let mut h = g.constant(Tensor::zeros(&[1, hid]));
    let mut c = g.constant(Tensor::zeros(&[1, hid]));
    let mut rows = vec![None; len];
    for t in order(len, reverse) {
        let x = g.slice(input, 0, t, 1)?;
        (h, c) = lstm_cell(g, x, h, c, weight, bias)?;
        rows[t] = Some(h);
    }
    let rows: Vec<Var> = rows.into_iter().flatten().collect();
    g.concat(&rows, 0)
}

/// Composed counterpart of [`Graph::gru_sequence`].
pub fn gru_composed(g: &mut Graph, input: Var, weight: Var, bias: Var, reverse: bool) -> Result<Var> {
    let (len, _, hid) = dims(g, input, weight, 3)?;
    let mut h = g.constant(Tensor::zeros(&[1, hid]));
    let mut rows = vec![None; len];
    for t in order(len, reverse) {
        let x = g.slice(input, 0, t, 1)?;
        h = gru_cell(g, x, h, weight, bias)?;
        rows[t] = Some(h);
    }
    let rows: Vec<Var> = rows.into_iter().flatten().collect();
    g.concat(&rows, 0)
}

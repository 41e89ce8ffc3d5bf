//! Dense numeric kernels behind the tape ops. All buffers are row-major.

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `out[m,n] = a[m,k] * b[k,n]`.
pub fn matmul(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av != 0.0 {
                axpy(av, &b[p * n..(p + 1) * n], row);
            }
        }
    }
}

/// `da += g * b^T`.
pub fn matmul_grad_lhs(g: &[f64], b: &[f64], da: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let gi = &g[i * n..(i + 1) * n];
        for p in 0..k {
            da[i * k + p] += dot(gi, &b[p * n..(p + 1) * n]);
        }
    }
}

/// `db += a^T * g`.
pub fn matmul_grad_rhs(a: &[f64], g: &[f64], db: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let gi = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av != 0.0 {
                axpy(av, gi, &mut db[p * n..(p + 1) * n]);
            }
        }
    }
}

/// Valid output range `[lo, hi)` for a tap at signed offset `shift`.
#[inline]
fn tap_range(shift: isize, len: usize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (len as isize - shift.max(0)).max(0) as usize;
    (lo.min(len), hi.max(lo.min(len)))
}

#[allow(clippy::too_many_arguments)]
pub fn conv1d_forward(
    x: &[f64],
    w: &[f64],
    bias: Option<&[f64]>,
    out: &mut [f64],
    cin: usize,
    cout: usize,
    len: usize,
    k: usize,
    dilation: usize,
) {
    let half = (k / 2) as isize;
    for o in 0..cout {
        let row = &mut out[o * len..(o + 1) * len];
        if let Some(b) = bias {
            row.iter_mut().for_each(|v| *v = b[o]);
        }
        for i in 0..cin {
            let xi = &x[i * len..(i + 1) * len];
            for t in 0..k {
                let wv = w[(o * cin + i) * k + t];
                if wv == 0.0 {
                    continue;
                }
                let shift = (t as isize - half) * dilation as isize;
                let (lo, hi) = tap_range(shift, len);
                if lo >= hi {
                    continue;
                }
                let src = (lo as isize + shift) as usize;
                axpy(wv, &xi[src..src + (hi - lo)], &mut row[lo..hi]);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn conv1d_backward(
    g: &[f64],
    x: &[f64],
    w: &[f64],
    mut dx: Option<&mut [f64]>,
    dw: &mut [f64],
    cin: usize,
    cout: usize,
    len: usize,
    k: usize,
    dilation: usize,
) {
    let half = (k / 2) as isize;
    for o in 0..cout {
        let go = &g[o * len..(o + 1) * len];
        for i in 0..cin {
            let xi = &x[i * len..(i + 1) * len];
            for t in 0..k {
                let shift = (t as isize - half) * dilation as isize;
                let (lo, hi) = tap_range(shift, len);
                if lo >= hi {
                    continue;
                }
                let src = (lo as isize + shift) as usize;
                let widx = (o * cin + i) * k + t;
                dw[widx] += dot(&go[lo..hi], &xi[src..src + (hi - lo)]);
                if let Some(dx) = dx.as_deref_mut() {
                    let wv = w[widx];
                    if wv != 0.0 {
                        axpy(wv, &go[lo..hi], &mut dx[i * len + src..i * len + src + (hi - lo)]);
                    }
                }
            }
        }
    }
}

/// Post-activation gates and cell states saved by the LSTM forward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// `[L, 4h]`: input, forget, candidate, output gates.
    gates: Vec<f64>,
    /// `[L, h]` cell state.
    cells: Vec<f64>,
    /// `[L, h]` tanh of the cell state.
    cells_tanh: Vec<f64>,
}

#[inline]
fn step_order(len: usize, reverse: bool) -> impl Iterator<Item = usize> {
    (0..len).map(move |s| if reverse { len - 1 - s } else { s })
}

/// Row processed just before `t`, if any.
#[inline]
fn previous_step(t: usize, len: usize, reverse: bool) -> Option<usize> {
    if reverse {
        (t + 1 < len).then_some(t + 1)
    } else {
        t.checked_sub(1)
    }
}

pub fn lstm_forward(
    x: &[f64],
    w: &[f64],
    b: &[f64],
    len: usize,
    n_in: usize,
    h: usize,
    reverse: bool,
) -> (Vec<f64>, LstmCache) {
    let g4 = 4 * h;
    let mut out = vec![0.0; len * h];
    let mut cache = LstmCache {
        gates: vec![0.0; len * g4],
        cells: vec![0.0; len * h],
        cells_tanh: vec![0.0; len * h],
    };
    let zeros = vec![0.0; h];
    let mut z = vec![0.0; g4];
    for t in step_order(len, reverse) {
        let prev = previous_step(t, len, reverse);
        z.copy_from_slice(b);
        for p in 0..n_in {
            let xv = x[t * n_in + p];
            if xv != 0.0 {
                axpy(xv, &w[p * g4..(p + 1) * g4], &mut z);
            }
        }
        let h_prev = prev.map_or(&zeros[..], |q| &out[q * h..(q + 1) * h]);
        for p in 0..h {
            let hv = h_prev[p];
            if hv != 0.0 {
                axpy(hv, &w[(n_in + p) * g4..(n_in + p + 1) * g4], &mut z);
            }
        }
        let gates = &mut cache.gates[t * g4..(t + 1) * g4];
        for j in 0..h {
            gates[j] = sigmoid(z[j]);
            gates[h + j] = sigmoid(z[h + j]);
            gates[2 * h + j] = z[2 * h + j].tanh();
            gates[3 * h + j] = sigmoid(z[3 * h + j]);
        }
        for j in 0..h {
            let c_prev = prev.map_or(0.0, |q| cache.cells[q * h + j]);
            let c = gates[h + j] * c_prev + gates[j] * gates[2 * h + j];
            let tc = c.tanh();
            cache.cells[t * h + j] = c;
            cache.cells_tanh[t * h + j] = tc;
            out[t * h + j] = gates[3 * h + j] * tc;
        }
    }
    (out, cache)
}

#[allow(clippy::too_many_arguments)]
pub fn lstm_backward(
    g_out: &[f64],
    x: &[f64],
    w: &[f64],
    out: &[f64],
    cache: &LstmCache,
    mut dx: Option<&mut [f64]>,
    dw: &mut [f64],
    db: &mut [f64],
    len: usize,
    n_in: usize,
    h: usize,
    reverse: bool,
) {
    let g4 = 4 * h;
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; g4];
    let order: Vec<usize> = step_order(len, reverse).collect();
    for &t in order.iter().rev() {
        let prev = previous_step(t, len, reverse);
        let gates = &cache.gates[t * g4..(t + 1) * g4];
        for j in 0..h {
            let (ig, fg, cg, og) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = cache.cells_tanh[t * h + j];
            let c_prev = prev.map_or(0.0, |q| cache.cells[q * h + j]);
            let dh = g_out[t * h + j] + dh_next[j];
            let d_o = dh * tc;
            let dc = dh * og * (1.0 - tc * tc) + dc_next[j];
            dz[j] = dc * cg * ig * (1.0 - ig);
            dz[h + j] = dc * c_prev * fg * (1.0 - fg);
            dz[2 * h + j] = dc * ig * (1.0 - cg * cg);
            dz[3 * h + j] = d_o * og * (1.0 - og);
            dc_next[j] = dc * fg;
        }
        axpy(1.0, &dz, db);
        for p in 0..n_in {
            let row = &w[p * g4..(p + 1) * g4];
            if let Some(dx) = dx.as_deref_mut() {
                dx[t * n_in + p] += dot(row, &dz);
            }
            let xv = x[t * n_in + p];
            if xv != 0.0 {
                axpy(xv, &dz, &mut dw[p * g4..(p + 1) * g4]);
            }
        }
        for p in 0..h {
            let r = (n_in + p) * g4;
            dh_next[p] = dot(&w[r..r + g4], &dz);
            if let Some(q) = prev {
                let hv = out[q * h + p];
                if hv != 0.0 {
                    axpy(hv, &dz, &mut dw[r..r + g4]);
                }
            }
        }
    }
}

/// Gates saved by the GRU forward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    /// `[L, 3h]`: update, reset, candidate.
    gates: Vec<f64>,
}

pub fn gru_forward(
    x: &[f64],
    w: &[f64],
    b: &[f64],
    len: usize,
    n_in: usize,
    h: usize,
    reverse: bool,
) -> (Vec<f64>, GruCache) {
    let g3 = 3 * h;
    let mut out = vec![0.0; len * h];
    let mut cache = GruCache {
        gates: vec![0.0; len * g3],
    };
    let zeros = vec![0.0; h];
    let mut a = vec![0.0; g3];
    let mut rh = vec![0.0; h];
    for t in step_order(len, reverse) {
        let prev = previous_step(t, len, reverse);
        a.copy_from_slice(b);
        for p in 0..n_in {
            let xv = x[t * n_in + p];
            if xv != 0.0 {
                axpy(xv, &w[p * g3..(p + 1) * g3], &mut a);
            }
        }
        let h_prev: Vec<f64> = prev.map_or(zeros.clone(), |q| out[q * h..(q + 1) * h].to_vec());
        for p in 0..h {
            let hv = h_prev[p];
            if hv != 0.0 {
                let r = (n_in + p) * g3;
                axpy(hv, &w[r..r + 2 * h], &mut a[..2 * h]);
            }
        }
        let gates = &mut cache.gates[t * g3..(t + 1) * g3];
        for j in 0..2 * h {
            gates[j] = sigmoid(a[j]);
        }
        for p in 0..h {
            rh[p] = gates[h + p] * h_prev[p];
        }
        for p in 0..h {
            if rh[p] != 0.0 {
                let r = (n_in + p) * g3 + 2 * h;
                axpy(rh[p], &w[r..r + h], &mut a[2 * h..]);
            }
        }
        for j in 0..h {
            let n = a[2 * h + j].tanh();
            gates[2 * h + j] = n;
            let z = gates[j];
            out[t * h + j] = (1.0 - z) * h_prev[j] + z * n;
        }
    }
    (out, cache)
}

#[allow(clippy::too_many_arguments)]
pub fn gru_backward(
    g_out: &[f64],
    x: &[f64],
    w: &[f64],
    out: &[f64],
    cache: &GruCache,
    mut dx: Option<&mut [f64]>,
    dw: &mut [f64],
    db: &mut [f64],
    len: usize,
    n_in: usize,
    h: usize,
    reverse: bool,
) {
    let g3 = 3 * h;
    let mut dh_next = vec![0.0; h];
    let mut da = vec![0.0; g3];
    let mut d_rh = vec![0.0; h];
    let mut h_prev = vec![0.0; h];
    let order: Vec<usize> = step_order(len, reverse).collect();
    for &t in order.iter().rev() {
        let prev = previous_step(t, len, reverse);
        match prev {
            Some(q) => h_prev.copy_from_slice(&out[q * h..(q + 1) * h]),
            None => h_prev.iter_mut().for_each(|v| *v = 0.0),
        }
        let gates = &cache.gates[t * g3..(t + 1) * g3];
        let mut dh_prev = vec![0.0; h];
        for j in 0..h {
            let (z, n) = (gates[j], gates[2 * h + j]);
            let dh = g_out[t * h + j] + dh_next[j];
            let dz = dh * (n - h_prev[j]);
            let dn = dh * z;
            dh_prev[j] = dh * (1.0 - z);
            da[j] = dz * z * (1.0 - z);
            da[2 * h + j] = dn * (1.0 - n * n);
        }
        // candidate path through the reset-gated state
        for p in 0..h {
            let r = (n_in + p) * g3 + 2 * h;
            d_rh[p] = dot(&w[r..r + h], &da[2 * h..]);
        }
        for p in 0..h {
            let rg = gates[h + p];
            let dr = d_rh[p] * h_prev[p];
            da[h + p] = dr * rg * (1.0 - rg);
            dh_prev[p] += d_rh[p] * rg;
        }
        axpy(1.0, &da, db);
        for p in 0..n_in {
            let row = &w[p * g3..(p + 1) * g3];
            if let Some(dx) = dx.as_deref_mut() {
                dx[t * n_in + p] += dot(row, &da);
            }
            let xv = x[t * n_in + p];
            if xv != 0.0 {
                axpy(xv, &da, &mut dw[p * g3..(p + 1) * g3]);
            }
        }
        for p in 0..h {
            let r = (n_in + p) * g3;
            dh_prev[p] += dot(&w[r..r + 2 * h], &da[..2 * h]);
            let hv = h_prev[p];
            if hv != 0.0 {
                axpy(hv, &da[..2 * h], &mut dw[r..r + 2 * h]);
                let rh = gates[h + p] * hv;
                axpy(rh, &da[2 * h..], &mut dw[r + 2 * h..r + g3]);
            }
        }
        dh_next = dh_prev;
    }
}

//! Forward, backward and sampling internals.
//!
//! Sequences are stacked into `(batch * seq, dim)` matrices so the
//! position-wise work (projections, feed-forward, normalization, output
//! head) runs as a few large matrix products; only the attention mixing
//! loops over examples and heads. The backward pass mirrors the forward
//! pass over cached intermediates and produces exact derivatives.

use super::{draw_symbol, Gradients, Parameters, TransformerModel, N_SYMBOLS, START_TOKEN};
use crate::rng::stream_rng;
use ndarray::{Array1, Array2, Axis};

const LN_EPS: f64 = 1e-5;

/// Row-wise layer-norm cache: normalized rows and reciprocal std devs.
struct LnCache {
    xhat: Array2<f64>,
    rstd: Vec<f64>,
}

fn ln_forward(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> (Array2<f64>, LnCache) {
    let (rows, d) = x.dim();
    let mut out = Array2::zeros((rows, d));
    let mut xhat = Array2::zeros((rows, d));
    let mut rstd = Vec::with_capacity(rows);
    let xs = x.as_slice().unwrap();
    let os = out.as_slice_mut().unwrap();
    let hs = xhat.as_slice_mut().unwrap();
    let g = gain.as_slice().unwrap();
    let b = bias.as_slice().unwrap();
    for r in 0..rows {
        let row = &xs[r * d..(r + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd.push(rs);
        for i in 0..d {
            let h = (row[i] - mean) * rs;
            hs[r * d + i] = h;
            os[r * d + i] = h * g[i] + b[i];
        }
    }
    (out, LnCache { xhat, rstd })
}

/// Backward through layer norm; accumulates gain/bias grads and returns dx.
fn ln_backward(
    d_out: &Array2<f64>,
    cache: &LnCache,
    gain: &Array1<f64>,
    d_gain: &mut Array1<f64>,
    d_bias: &mut Array1<f64>,
) -> Array2<f64> {
    let (rows, d) = d_out.dim();
    let mut dx = Array2::zeros((rows, d));
    let dos = d_out.as_slice().unwrap();
    let hs = cache.xhat.as_slice().unwrap();
    let g = gain.as_slice().unwrap();
    let dg = d_gain.as_slice_mut().unwrap();
    let db = d_bias.as_slice_mut().unwrap();
    let dxs = dx.as_slice_mut().unwrap();
    for r in 0..rows {
        let dor = &dos[r * d..(r + 1) * d];
        let hr = &hs[r * d..(r + 1) * d];
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 0..d {
            dg[i] += dor[i] * hr[i];
            db[i] += dor[i];
            let dh = dor[i] * g[i];
            m1 += dh;
            m2 += dh * hr[i];
        }
        m1 /= d as f64;
        m2 /= d as f64;
        let rs = cache.rstd[r];
        for i in 0..d {
            let dh = dor[i] * g[i];
            dxs[r * d + i] = rs * (dh - m1 - hr[i] * m2);
        }
    }
    dx
}

fn linear(x: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = x.dot(w);
    out += b;
    out
}

/// Causal multi-head attention over stacked rows.
/// Returns the mixed context and the attention weights per `(example, head)`.
fn attention_forward(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    batch: usize,
    seq: usize,
    n_heads: usize,
) -> (Array2<f64>, Vec<Array2<f64>>) {
    let d = q.ncols();
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let qs = q.as_slice().unwrap();
    let ks = k.as_slice().unwrap();
    let vs = v.as_slice().unwrap();
    let mut ctx = Array2::zeros((batch * seq, d));
    let cs = ctx.as_slice_mut().unwrap();
    let mut weights = Vec::with_capacity(batch * n_heads);
    let mut scores = vec![0.0f64; seq];
    for b in 0..batch {
        let base = b * seq;
        for h in 0..n_heads {
            let c0 = h * dh;
            let mut w_mat = Array2::zeros((seq, seq));
            let wm = w_mat.as_slice_mut().unwrap();
            for i in 0..seq {
                let qi = &qs[(base + i) * d + c0..(base + i) * d + c0 + dh];
                let mut max = f64::NEG_INFINITY;
                for (j, slot) in scores.iter_mut().enumerate().take(i + 1) {
                    let kj = &ks[(base + j) * d + c0..(base + j) * d + c0 + dh];
                    let s: f64 = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                    *slot = s;
                    if s > max {
                        max = s;
                    }
                }
                let mut total = 0.0;
                for s in scores.iter_mut().take(i + 1) {
                    *s = (*s - max).exp();
                    total += *s;
                }
                let ci = i * seq;
                for (j, s) in scores.iter().enumerate().take(i + 1) {
                    wm[ci + j] = s / total;
                }
                let out = &mut cs[(base + i) * d + c0..(base + i) * d + c0 + dh];
                for j in 0..=i {
                    let w = wm[ci + j];
                    let vj = &vs[(base + j) * d + c0..(base + j) * d + c0 + dh];
                    for (o, vv) in out.iter_mut().zip(vj) {
                        *o += w * vv;
                    }
                }
            }
            weights.push(w_mat);
        }
    }
    (ctx, weights)
}

/// Backward through causal attention. Returns `(dq, dk, dv)`.
fn attention_backward(
    d_ctx: &Array2<f64>,
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    weights: &[Array2<f64>],
    batch: usize,
    seq: usize,
    n_heads: usize,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let d = q.ncols();
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let qs = q.as_slice().unwrap();
    let ks = k.as_slice().unwrap();
    let vs = v.as_slice().unwrap();
    let dcs = d_ctx.as_slice().unwrap();
    let mut dq = Array2::zeros((batch * seq, d));
    let mut dk = Array2::zeros((batch * seq, d));
    let mut dv = Array2::zeros((batch * seq, d));
    let dqs = dq.as_slice_mut().unwrap();
    let dks = dk.as_slice_mut().unwrap();
    let dvs = dv.as_slice_mut().unwrap();
    let mut da = vec![0.0f64; seq];
    for b in 0..batch {
        let base = b * seq;
        for h in 0..n_heads {
            let c0 = h * dh;
            let wm = weights[b * n_heads + h].as_slice().unwrap();
            for i in 0..seq {
                let dci = &dcs[(base + i) * d + c0..(base + i) * d + c0 + dh];
                let ci = i * seq;
                // dA_ij = <d_ctx_i, v_j>; dv_j += w_ij d_ctx_i
                for (j, slot) in da.iter_mut().enumerate().take(i + 1) {
                    let vj = &vs[(base + j) * d + c0..(base + j) * d + c0 + dh];
                    *slot = dci.iter().zip(vj).map(|(a, b)| a * b).sum::<f64>();
                    let w = wm[ci + j];
                    let dvj = &mut dvs[(base + j) * d + c0..(base + j) * d + c0 + dh];
                    for (o, g) in dvj.iter_mut().zip(dci) {
                        *o += w * g;
                    }
                }
                // softmax backward on row i
                let s_dot: f64 = (0..=i).map(|j| da[j] * wm[ci + j]).sum();
                for j in 0..=i {
                    let ds = wm[ci + j] * (da[j] - s_dot) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    let kj = &ks[(base + j) * d + c0..(base + j) * d + c0 + dh];
                    let qi = &qs[(base + i) * d + c0..(base + i) * d + c0 + dh];
                    let dqi = &mut dqs[(base + i) * d + c0..(base + i) * d + c0 + dh];
                    for (o, kv) in dqi.iter_mut().zip(kj) {
                        *o += ds * kv;
                    }
                    let dkj = &mut dks[(base + j) * d + c0..(base + j) * d + c0 + dh];
                    for (o, qv) in dkj.iter_mut().zip(qi) {
                        *o += ds * qv;
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}

/// Input token ids and prediction targets for a batch of outcome strings.
fn tokens_and_targets(batch: &[Vec<u8>], seq: usize) -> (Vec<usize>, Vec<usize>) {
    let mut tokens = Vec::with_capacity(batch.len() * seq);
    let mut targets = Vec::with_capacity(batch.len() * seq);
    for a in batch {
        tokens.push(START_TOKEN);
        for &s in &a[..seq - 1] {
            tokens.push(s as usize);
        }
        for &s in a {
            targets.push(s as usize);
        }
    }
    (tokens, targets)
}

fn embed(model: &TransformerModel, tokens: &[usize], seq: usize) -> Array2<f64> {
    let d = model.config.embed_dim;
    let mut x = Array2::zeros((tokens.len(), d));
    let emb = model.params.tok_embed.as_slice().unwrap();
    let pos = model.pos_enc.as_slice().unwrap();
    let xs = x.as_slice_mut().unwrap();
    for (r, &tok) in tokens.iter().enumerate() {
        let t = r % seq;
        let row = &mut xs[r * d..(r + 1) * d];
        let er = &emb[tok * d..(tok + 1) * d];
        let pr = &pos[t * d..(t + 1) * d];
        for i in 0..d {
            row[i] = er[i] + pr[i];
        }
    }
    x
}

struct LayerCache {
    ln1: LnCache,
    ln1_out: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    ln2: LnCache,
    ln2_out: Array2<f64>,
    h_pre: Array2<f64>,
    h_act: Array2<f64>,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    final_ln: LnCache,
    final_out: Array2<f64>,
    log_probs: Array2<f64>,
}

/// Row-wise log-softmax over the 4 output logits.
fn log_softmax_rows(logits: &mut Array2<f64>) {
    let rows = logits.nrows();
    let ls = logits.as_slice_mut().unwrap();
    for r in 0..rows {
        let row = &mut ls[r * N_SYMBOLS..(r + 1) * N_SYMBOLS];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        for z in row.iter_mut() {
            *z -= lse;
        }
    }
}

/// Sums per-example values in a canonical order so the result cannot depend
/// on how the batch was arranged.
fn canonical_mean(mut per_example: Vec<f64>) -> f64 {
    let n = per_example.len();
    per_example.sort_by(f64::total_cmp);
    per_example.iter().sum::<f64>() / n as f64
}

/// Full forward pass keeping every intermediate needed by the backward pass.
fn forward_cached(model: &TransformerModel, tokens: &[usize], batch: usize) -> ForwardCache {
    let cfg = &model.config;
    let seq = cfg.max_len;
    let mut x = embed(model, tokens, seq);
    let mut layers = Vec::with_capacity(cfg.n_layers);
    for l in &model.params.layers {
        let (ln1_out, ln1) = ln_forward(&x, &l.attn_norm.gain, &l.attn_norm.bias);
        let q = linear(&ln1_out, &l.wq, &l.bq);
        let k = linear(&ln1_out, &l.wk, &l.bk);
        let v = linear(&ln1_out, &l.wv, &l.bv);
        let (ctx, attn) = attention_forward(&q, &k, &v, batch, seq, cfg.n_heads);
        let attn_out = linear(&ctx, &l.wo, &l.bo);
        x += &attn_out;
        let (ln2_out, ln2) = ln_forward(&x, &l.ff_norm.gain, &l.ff_norm.bias);
        let h_pre = linear(&ln2_out, &l.w1, &l.b1);
        let h_act = h_pre.mapv(|z| z.max(0.0));
        let f = linear(&h_act, &l.w2, &l.b2);
        x += &f;
        layers.push(LayerCache {
            ln1,
            ln1_out,
            q,
            k,
            v,
            attn,
            ctx,
            ln2,
            ln2_out,
            h_pre,
            h_act,
        });
    }
    let (final_out, final_ln) = ln_forward(&x, &model.params.final_norm.gain, &model.params.final_norm.bias);
    let mut log_probs = linear(&final_out, &model.params.out_weight, &model.params.out_bias);
    log_softmax_rows(&mut log_probs);
    ForwardCache {
        layers,
        final_ln,
        final_out,
        log_probs,
    }
}

/// Forward pass that keeps nothing; for likelihood evaluation.
fn forward_eval(model: &TransformerModel, tokens: &[usize], batch: usize) -> Array2<f64> {
    let cfg = &model.config;
    let seq = cfg.max_len;
    let mut x = embed(model, tokens, seq);
    for l in &model.params.layers {
        let (ln1_out, _) = ln_forward(&x, &l.attn_norm.gain, &l.attn_norm.bias);
        let q = linear(&ln1_out, &l.wq, &l.bq);
        let k = linear(&ln1_out, &l.wk, &l.bk);
        let v = linear(&ln1_out, &l.wv, &l.bv);
        let (ctx, _) = attention_forward(&q, &k, &v, batch, seq, cfg.n_heads);
        x += &linear(&ctx, &l.wo, &l.bo);
        let (ln2_out, _) = ln_forward(&x, &l.ff_norm.gain, &l.ff_norm.bias);
        let h_act = linear(&ln2_out, &l.w1, &l.b1).mapv(|z| z.max(0.0));
        x += &linear(&h_act, &l.w2, &l.b2);
    }
    let (final_out, _) = ln_forward(&x, &model.params.final_norm.gain, &model.params.final_norm.bias);
    let mut log_probs = linear(&final_out, &model.params.out_weight, &model.params.out_bias);
    log_softmax_rows(&mut log_probs);
    log_probs
}

pub(super) fn batch_log_probs(model: &TransformerModel, batch: &[Vec<u8>]) -> Vec<f64> {
    let seq = model.config.max_len;
    let mut out = Vec::with_capacity(batch.len());
    // bounded working set for large batches
    for chunk in batch.chunks(2048) {
        let (tokens, targets) = tokens_and_targets(chunk, seq);
        let log_probs = forward_eval(model, &tokens, chunk.len());
        let lp = log_probs.as_slice().unwrap();
        for b in 0..chunk.len() {
            let mut total = 0.0;
            for t in 0..seq {
                let r = b * seq + t;
                total += lp[r * N_SYMBOLS + targets[r]];
            }
            out.push(total);
        }
    }
    out
}

/// Mean negative log-likelihood with canonical summation order.
pub(super) fn mean_nll(log_probs: Vec<f64>) -> f64 {
    canonical_mean(log_probs.into_iter().map(|l| -l).collect())
}

pub(super) fn conditional_rows(model: &TransformerModel, a: &[u8]) -> Array2<f64> {
    let seq = model.config.max_len;
    let (tokens, _) = tokens_and_targets(std::slice::from_ref(&a.to_vec()), seq);
    let log_probs = forward_eval(model, &tokens, 1);
    log_probs.mapv(f64::exp)
}

pub(super) fn loss_and_gradients(model: &TransformerModel, batch: &[Vec<u8>]) -> (f64, Gradients) {
    let cfg = &model.config;
    let seq = cfg.max_len;
    let b = batch.len();
    let (tokens, targets) = tokens_and_targets(batch, seq);
    let cache = forward_cached(model, &tokens, b);

    let lp = cache.log_probs.as_slice().unwrap();
    let per_example: Vec<f64> = (0..b)
        .map(|e| {
            -(0..seq)
                .map(|t| lp[(e * seq + t) * N_SYMBOLS + targets[e * seq + t]])
                .sum::<f64>()
        })
        .collect();
    let loss = canonical_mean(per_example);

    let mut grads = Parameters::zeros(cfg);
    let inv_b = 1.0 / b as f64;

    // d loss / d logits = (softmax - onehot) / batch
    let rows = b * seq;
    let mut d_logits = Array2::zeros((rows, N_SYMBOLS));
    {
        let dl = d_logits.as_slice_mut().unwrap();
        for r in 0..rows {
            for s in 0..N_SYMBOLS {
                let p = lp[r * N_SYMBOLS + s].exp();
                let onehot = if s == targets[r] { 1.0 } else { 0.0 };
                dl[r * N_SYMBOLS + s] = (p - onehot) * inv_b;
            }
        }
    }

    grads.out_weight = cache.final_out.t().dot(&d_logits);
    grads.out_bias = d_logits.sum_axis(Axis(0));
    let dy = d_logits.dot(&model.params.out_weight.t());
    let mut dx = ln_backward(
        &dy,
        &cache.final_ln,
        &model.params.final_norm.gain,
        &mut grads.final_norm.gain,
        &mut grads.final_norm.bias,
    );

    for (li, l) in model.params.layers.iter().enumerate().rev() {
        let lc = &cache.layers[li];
        let lg = &mut grads.layers[li];

        // feed-forward block: x_out = x_mid + relu(ln2(x_mid) w1 + b1) w2 + b2
        lg.w2 = lc.h_act.t().dot(&dx);
        lg.b2 = dx.sum_axis(Axis(0));
        let dh_act = dx.dot(&l.w2.t());
        let mut dh_pre = dh_act;
        {
            let mask = lc.h_pre.as_slice().unwrap();
            let dh = dh_pre.as_slice_mut().unwrap();
            for (g, &m) in dh.iter_mut().zip(mask) {
                if m <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        lg.w1 = lc.ln2_out.t().dot(&dh_pre);
        lg.b1 = dh_pre.sum_axis(Axis(0));
        let dy2 = dh_pre.dot(&l.w1.t());
        let dx2 = ln_backward(&dy2, &lc.ln2, &l.ff_norm.gain, &mut lg.ff_norm.gain, &mut lg.ff_norm.bias);
        dx += &dx2;

        // attention block: x_mid = x_in + attn(ln1(x_in)) wo + bo
        lg.wo = lc.ctx.t().dot(&dx);
        lg.bo = dx.sum_axis(Axis(0));
        let d_ctx = dx.dot(&l.wo.t());
        let (dq, dk, dv) =
            attention_backward(&d_ctx, &lc.q, &lc.k, &lc.v, &lc.attn, b, seq, cfg.n_heads);
        lg.wq = lc.ln1_out.t().dot(&dq);
        lg.bq = dq.sum_axis(Axis(0));
        lg.wk = lc.ln1_out.t().dot(&dk);
        lg.bk = dk.sum_axis(Axis(0));
        lg.wv = lc.ln1_out.t().dot(&dv);
        lg.bv = dv.sum_axis(Axis(0));
        let mut dy1 = dq.dot(&l.wq.t());
        dy1 += &dk.dot(&l.wk.t());
        dy1 += &dv.dot(&l.wv.t());
        let dx1 = ln_backward(&dy1, &lc.ln1, &l.attn_norm.gain, &mut lg.attn_norm.gain, &mut lg.attn_norm.bias);
        dx += &dx1;
    }

    // embedding rows; positional encodings are fixed
    {
        let d = cfg.embed_dim;
        let dxs = dx.as_slice().unwrap();
        let ge = grads.tok_embed.as_slice_mut().unwrap();
        for (r, &tok) in tokens.iter().enumerate() {
            let src = &dxs[r * d..(r + 1) * d];
            let dst = &mut ge[tok * d..(tok + 1) * d];
            for (o, g) in dst.iter_mut().zip(src) {
                *o += g;
            }
        }
    }

    (loss, grads)
}

/// Batched ancestral sampling with per-layer key/value caches.
pub(super) fn ancestral_sample(model: &TransformerModel, n: usize, seed: u64) -> Vec<Vec<u8>> {
    let cfg = &model.config;
    let seq = cfg.max_len;
    let d = cfg.embed_dim;
    let n_heads = cfg.n_heads;
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut outcomes: Vec<Vec<u8>> = Vec::with_capacity(n);
    const CHUNK: usize = 1024;

    let mut start = 0usize;
    while start < n {
        let c = CHUNK.min(n - start);
        let mut rngs: Vec<_> = (0..c)
            .map(|i| stream_rng(seed, (start + i) as u64))
            .collect();
        let mut drawn: Vec<Vec<u8>> = vec![Vec::with_capacity(seq); c];
        let mut current: Vec<usize> = vec![START_TOKEN; c];
        // per layer: cached K and V rows, row index = example * seq + position
        let mut k_cache: Vec<Array2<f64>> = (0..cfg.n_layers)
            .map(|_| Array2::zeros((c * seq, d)))
            .collect();
        let mut v_cache: Vec<Array2<f64>> = (0..cfg.n_layers)
            .map(|_| Array2::zeros((c * seq, d)))
            .collect();

        for t in 0..seq {
            // embed the current token at position t
            let mut x = Array2::zeros((c, d));
            {
                let emb = model.params.tok_embed.as_slice().unwrap();
                let pos = model.pos_enc.as_slice().unwrap();
                let xs = x.as_slice_mut().unwrap();
                for (e, &tok) in current.iter().enumerate() {
                    let row = &mut xs[e * d..(e + 1) * d];
                    let er = &emb[tok * d..(tok + 1) * d];
                    let pr = &pos[t * d..(t + 1) * d];
                    for i in 0..d {
                        row[i] = er[i] + pr[i];
                    }
                }
            }
            for (li, l) in model.params.layers.iter().enumerate() {
                let (y, _) = ln_forward(&x, &l.attn_norm.gain, &l.attn_norm.bias);
                let q_t = linear(&y, &l.wq, &l.bq);
                let k_t = linear(&y, &l.wk, &l.bk);
                let v_t = linear(&y, &l.wv, &l.bv);
                {
                    let kc = k_cache[li].as_slice_mut().unwrap();
                    let vc = v_cache[li].as_slice_mut().unwrap();
                    let kt = k_t.as_slice().unwrap();
                    let vt = v_t.as_slice().unwrap();
                    for e in 0..c {
                        let dst = (e * seq + t) * d;
                        kc[dst..dst + d].copy_from_slice(&kt[e * d..(e + 1) * d]);
                        vc[dst..dst + d].copy_from_slice(&vt[e * d..(e + 1) * d]);
                    }
                }
                let mut ctx = Array2::zeros((c, d));
                {
                    let qs = q_t.as_slice().unwrap();
                    let kc = k_cache[li].as_slice().unwrap();
                    let vc = v_cache[li].as_slice().unwrap();
                    let cs = ctx.as_slice_mut().unwrap();
                    let mut w = vec![0.0f64; t + 1];
                    for e in 0..c {
                        for h in 0..n_heads {
                            let c0 = h * dh;
                            let qi = &qs[e * d + c0..e * d + c0 + dh];
                            let mut max = f64::NEG_INFINITY;
                            for (j, slot) in w.iter_mut().enumerate() {
                                let kj = &kc[(e * seq + j) * d + c0..(e * seq + j) * d + c0 + dh];
                                let s: f64 =
                                    qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                                *slot = s;
                                if s > max {
                                    max = s;
                                }
                            }
                            let mut total = 0.0;
                            for s in w.iter_mut() {
                                *s = (*s - max).exp();
                                total += *s;
                            }
                            let out = &mut cs[e * d + c0..e * d + c0 + dh];
                            for (j, s) in w.iter().enumerate() {
                                let wj = s / total;
                                let vj = &vc[(e * seq + j) * d + c0..(e * seq + j) * d + c0 + dh];
                                for (o, vv) in out.iter_mut().zip(vj) {
                                    *o += wj * vv;
                                }
                            }
                        }
                    }
                }
                x += &linear(&ctx, &l.wo, &l.bo);
                let (y2, _) = ln_forward(&x, &l.ff_norm.gain, &l.ff_norm.bias);
                let h_act = linear(&y2, &l.w1, &l.b1).mapv(|z| z.max(0.0));
                x += &linear(&h_act, &l.w2, &l.b2);
            }
            let (yf, _) = ln_forward(&x, &model.params.final_norm.gain, &model.params.final_norm.bias);
            let logits = linear(&yf, &model.params.out_weight, &model.params.out_bias);
            let ls = logits.as_slice().unwrap();
            for e in 0..c {
                let row = &ls[e * N_SYMBOLS..(e + 1) * N_SYMBOLS];
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut probs = [0.0f64; N_SYMBOLS];
                let mut total = 0.0;
                for (s, p) in probs.iter_mut().enumerate() {
                    *p = (row[s] - max).exp();
                    total += *p;
                }
                for p in probs.iter_mut() {
                    *p /= total;
                }
                let sym = draw_symbol(&probs, &mut rngs[e]);
                drawn[e].push(sym);
                current[e] = sym as usize;
            }
        }
        outcomes.append(&mut drawn);
        start += c;
    }
    outcomes
}

//! The attention token-mixer network and its binary parameter format.
//!
//! Architecture, per invocation: the model token is projected to a query; each
//! platform token (plus a learned per-slot embedding that restores platform
//! identity lost to per-slot normalization) is projected to a key and value.
//! One softmax attention step mixes the values, a two-layer trunk combines
//! query and context, and two heads read a per-platform representation:
//! latency through softplus (strictly positive, scaled to milliseconds) and a
//! platform logit.
//!
//! Parameters live in one flat `f64` vector addressed by [`Layout`]; on disk
//! they are little-endian `f32`, and in-memory values are quantized to `f32`
//! precision at construction so save/load round trips are bit-exact.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use super::features::{FeatureVector, Normalizer, TOKEN_DIM};
use super::{Prediction, PredictorError, TrainedPredictor};
use crate::platform::{PlatformDescriptor, PlatformKind};

/// Serialized size ceiling for a trained predictor file.
pub const PARAM_BUDGET_BYTES: usize = 12 * 1024;

const MAGIC: &[u8; 4] = b"NFPM";
const FORMAT_VERSION: u32 = 1;
/// Format flag: 0 = little-endian f32 weights.
const FORMAT_F32_LE: u8 = 0;

/// Offsets of each parameter block inside the flat vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub h: usize,
    pub d: usize,
    pub p: usize,
    pub wq: Range<usize>,
    pub bq: Range<usize>,
    pub wk: Range<usize>,
    pub bk: Range<usize>,
    pub wv: Range<usize>,
    pub bv: Range<usize>,
    pub epos: Range<usize>,
    pub wm: Range<usize>,
    pub bm: Range<usize>,
    pub wp: Range<usize>,
    pub bp: Range<usize>,
    pub wr: Range<usize>,
    pub br: Range<usize>,
    pub wc: Range<usize>,
    pub bc: Range<usize>,
    pub len: usize,
}

impl Layout {
    pub fn new(h: usize, d: usize, p: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let wq = take(h * d);
        let bq = take(h);
        let wk = take(h * d);
        let bk = take(h);
        let wv = take(h * d);
        let bv = take(h);
        let epos = take(p * d);
        let wm = take(h * 2 * h);
        let bm = take(h);
        let wp = take(h * 2 * h);
        let bp = take(h);
        let wr = take(h);
        let br = take(1);
        let wc = take(h);
        let bc = take(1);
        Layout {
            h,
            d,
            p,
            wq,
            bq,
            wk,
            bk,
            wv,
            bv,
            epos,
            wm,
            bm,
            wp,
            bp,
            wr,
            br,
            wc,
            bc,
            len: at,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorParams {
    hidden: usize,
    platform_ids: Vec<String>,
    out_scale: f64,
    theta: Vec<f64>,
}

impl PredictorParams {
    pub fn new(
        hidden: usize,
        platform_ids: Vec<String>,
        out_scale: f64,
        mut theta: Vec<f64>,
    ) -> Result<Self, PredictorError> {
        let layout = Layout::new(hidden, TOKEN_DIM, platform_ids.len());
        if theta.len() != layout.len {
            return Err(PredictorError::DimensionMismatch {
                expected: format!("{} parameters", layout.len),
                got: format!("{}", theta.len()),
            });
        }
        quantize(&mut theta);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(PredictorError::NonFinite {
                what: "parameter".into(),
            });
        }
        Ok(Self {
            hidden,
            platform_ids,
            out_scale,
            theta,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn platform_ids(&self) -> &[String] {
        &self.platform_ids
    }

    pub fn out_scale(&self) -> f64 {
        self.out_scale
    }

    pub fn parameter_count(&self) -> usize {
        self.theta.len()
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(self.hidden, TOKEN_DIM, self.platform_ids.len())
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Replace the parameter vector (training updates); values are quantized
    /// to f32 precision to keep memory and disk behavior identical.
    pub fn set_theta(&mut self, mut theta: Vec<f64>) -> Result<(), PredictorError> {
        if theta.len() != self.theta.len() {
            return Err(PredictorError::DimensionMismatch {
                expected: format!("{} parameters", self.theta.len()),
                got: format!("{}", theta.len()),
            });
        }
        quantize(&mut theta);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(PredictorError::NonFinite {
                what: "parameter".into(),
            });
        }
        self.theta = theta;
        Ok(())
    }
}

pub(crate) fn quantize(theta: &mut [f64]) {
    for v in theta.iter_mut() {
        *v = f64::from(*v as f32);
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], b: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for c in 0..cols {
            acc += row[c] * x[c];
        }
        out[r] = acc;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// grad[w] += dy xᵀ and grad[b] += dy; the two ranges must be adjacent.
fn outer_into(
    grad: &mut [f64],
    w: &Range<usize>,
    b: &Range<usize>,
    rows: usize,
    cols: usize,
    dy: &[f64],
    x: &[f64],
) {
    debug_assert_eq!(w.end, b.start);
    let (gw, gb) = grad[w.start..b.end].split_at_mut(w.end - w.start);
    for r in 0..rows {
        gb[r] += dy[r];
        let row = &mut gw[r * cols..(r + 1) * cols];
        for c in 0..cols {
            row[c] += dy[r] * x[c];
        }
    }
}

/// dx += wᵀ dy
fn matvec_t_acc(w: &[f64], rows: usize, cols: usize, dy: &[f64], dx: &mut [f64]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        for c in 0..cols {
            dx[c] += row[c] * dy[r];
        }
    }
}

/// Everything the backward pass needs from one forward evaluation.
pub(crate) struct ForwardCache {
    pub tokens: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub k: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub attn: Vec<f64>,
    pub mix_in: Vec<f64>,
    pub m1: Vec<f64>,
    pub pin: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub latency: Vec<f64>,
    pub logits: Vec<f64>,
}

pub(crate) fn forward_cached(
    params: &PredictorParams,
    fv: &FeatureVector,
) -> Result<ForwardCache, PredictorError> {
    let l = params.layout();
    if fv.platform_tokens.len() != l.p {
        return Err(PredictorError::DimensionMismatch {
            expected: format!("{} platform tokens", l.p),
            got: format!("{}", fv.platform_tokens.len()),
        });
    }
    let th = &params.theta;
    let (h, d, p) = (l.h, l.d, l.p);
    let scale = 1.0 / (h as f64).sqrt();

    let tokens: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let e = &th[l.epos.clone()][i * d..(i + 1) * d];
            fv.platform_tokens[i]
                .iter()
                .zip(e)
                .map(|(x, ep)| x + ep)
                .collect()
        })
        .collect();

    let mut q = vec![0.0; h];
    matvec(&th[l.wq.clone()], h, d, &fv.model_token, &th[l.bq.clone()], &mut q);
    let mut k = vec![vec![0.0; h]; p];
    let mut v = vec![vec![0.0; h]; p];
    for i in 0..p {
        matvec(&th[l.wk.clone()], h, d, &tokens[i], &th[l.bk.clone()], &mut k[i]);
        matvec(&th[l.wv.clone()], h, d, &tokens[i], &th[l.bv.clone()], &mut v[i]);
    }

    let scores: Vec<f64> = (0..p).map(|i| dot(&q, &k[i]) * scale).collect();
    let smax = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - smax).exp()).collect();
    let esum: f64 = exps.iter().sum();
    let attn: Vec<f64> = exps.iter().map(|e| e / esum).collect();

    let mut ctx = vec![0.0; h];
    for i in 0..p {
        for j in 0..h {
            ctx[j] += attn[i] * v[i][j];
        }
    }

    let mut mix_in = Vec::with_capacity(2 * h);
    mix_in.extend_from_slice(&q);
    mix_in.extend_from_slice(&ctx);
    let mut m1 = vec![0.0; h];
    matvec(&th[l.wm.clone()], h, 2 * h, &mix_in, &th[l.bm.clone()], &mut m1);
    let z: Vec<f64> = m1.iter().map(|x| x.max(0.0)).collect();

    let mut pin = Vec::with_capacity(p);
    let mut u = vec![vec![0.0; h]; p];
    let mut g = Vec::with_capacity(p);
    let mut r = vec![0.0; p];
    let mut latency = vec![0.0; p];
    let mut logits = vec![0.0; p];
    let wr = &th[l.wr.clone()];
    let br = th[l.br.clone()][0];
    let wc = &th[l.wc.clone()];
    let bc = th[l.bc.clone()][0];
    for i in 0..p {
        let mut pi = Vec::with_capacity(2 * h);
        pi.extend_from_slice(&z);
        pi.extend_from_slice(&v[i]);
        matvec(&th[l.wp.clone()], h, 2 * h, &pi, &th[l.bp.clone()], &mut u[i]);
        let gi: Vec<f64> = u[i].iter().map(|x| x.max(0.0)).collect();
        r[i] = dot(wr, &gi) + br;
        latency[i] = softplus(r[i]) * params.out_scale;
        logits[i] = dot(wc, &gi) + bc;
        pin.push(pi);
        g.push(gi);
    }

    Ok(ForwardCache {
        tokens,
        q,
        k,
        v,
        attn,
        mix_in,
        m1,
        pin,
        u,
        g,
        r,
        latency,
        logits,
    })
}

/// Pure inference: per-platform latency estimates and platform logits.
pub fn forward(params: &PredictorParams, fv: &FeatureVector) -> Result<Prediction, PredictorError> {
    let cache = forward_cached(params, fv)?;
    let mut latency_ms = BTreeMap::new();
    let mut platform_logits = BTreeMap::new();
    for (i, id) in params.platform_ids.iter().enumerate() {
        latency_ms.insert(id.clone(), cache.latency[i]);
        platform_logits.insert(id.clone(), cache.logits[i]);
    }
    Ok(Prediction {
        latency_ms,
        platform_logits,
    })
}

/// One training example: a featurized invocation, the platform it ran on, the
/// measured latency, and the fastest-feasible-platform class label.
#[derive(Debug, Clone)]
pub struct Sample {
    pub fv: FeatureVector,
    pub executed: usize,
    pub target_ms: f64,
    pub best: usize,
}

/// Mean loss over `samples[idx]`: squared latency error on the executed
/// platform plus `lambda` times cross-entropy against the best platform.
pub fn loss_only(
    params: &PredictorParams,
    samples: &[Sample],
    idx: &[usize],
    lambda: f64,
) -> Result<f64, PredictorError> {
    let inv_n = 1.0 / idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let s = &samples[i];
        let cache = forward_cached(params, &s.fv)?;
        let diff = cache.latency[s.executed] - s.target_ms;
        let lmax = cache.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = lmax
            + cache
                .logits
                .iter()
                .map(|x| (x - lmax).exp())
                .sum::<f64>()
                .ln();
        loss += inv_n * (diff * diff + lambda * (lse - cache.logits[s.best]));
    }
    if !loss.is_finite() {
        return Err(PredictorError::NonFinite { what: "loss".into() });
    }
    Ok(loss)
}

/// [`loss_only`] plus its gradient. Accumulation is single-threaded in
/// `idx` order.
pub fn loss_and_grad(
    params: &PredictorParams,
    samples: &[Sample],
    idx: &[usize],
    lambda: f64,
) -> Result<(f64, Vec<f64>), PredictorError> {
    let l = params.layout();
    let th = &params.theta;
    let (h, d, p) = (l.h, l.d, l.p);
    let scale = 1.0 / (h as f64).sqrt();
    let inv_n = 1.0 / idx.len() as f64;
    let mut grad = vec![0.0; l.len];
    let mut loss = 0.0;

    for &si in idx {
        let s = &samples[si];
        let cache = forward_cached(params, &s.fv)?;

        // Loss pieces. Cross-entropy via log-sum-exp for stability.
        let diff = cache.latency[s.executed] - s.target_ms;
        let lmax = cache.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = lmax
            + cache
                .logits
                .iter()
                .map(|x| (x - lmax).exp())
                .sum::<f64>()
                .ln();
        loss += inv_n * (diff * diff + lambda * (lse - cache.logits[s.best]));

        // Head gradients.
        let mut dlat = vec![0.0; p];
        dlat[s.executed] = 2.0 * diff * inv_n;
        let mut dlogit: Vec<f64> = cache
            .logits
            .iter()
            .map(|x| lambda * inv_n * (x - lse).exp())
            .collect();
        dlogit[s.best] -= lambda * inv_n;

        let wr = &th[l.wr.clone()];
        let wc = &th[l.wc.clone()];
        let mut dz = vec![0.0; h];
        let mut dv = vec![vec![0.0; h]; p];
        for i in 0..p {
            let dr = dlat[i] * sigmoid(cache.r[i]) * params.out_scale;
            let dc = dlogit[i];
            // dg through both heads.
            let mut du = vec![0.0; h];
            for j in 0..h {
                let dg = dr * wr[j] + dc * wc[j];
                du[j] = if cache.u[i][j] > 0.0 { dg } else { 0.0 };
                grad[l.wr.clone()][j] += dr * cache.g[i][j];
                grad[l.wc.clone()][j] += dc * cache.g[i][j];
            }
            grad[l.br.clone()][0] += dr;
            grad[l.bc.clone()][0] += dc;
            outer_into(&mut grad, &l.wp, &l.bp, h, 2 * h, &du, &cache.pin[i]);
            let mut dpin = vec![0.0; 2 * h];
            matvec_t_acc(&th[l.wp.clone()], h, 2 * h, &du, &mut dpin);
            for j in 0..h {
                dz[j] += dpin[j];
                dv[i][j] += dpin[h + j];
            }
        }

        // Trunk.
        let dm1: Vec<f64> = (0..h)
            .map(|j| if cache.m1[j] > 0.0 { dz[j] } else { 0.0 })
            .collect();
        outer_into(&mut grad, &l.wm, &l.bm, h, 2 * h, &dm1, &cache.mix_in);
        let mut dmix = vec![0.0; 2 * h];
        matvec_t_acc(&th[l.wm.clone()], h, 2 * h, &dm1, &mut dmix);
        let mut dq = dmix[..h].to_vec();
        let dctx = &dmix[h..];

        // Attention.
        let mut da = vec![0.0; p];
        for i in 0..p {
            da[i] = dot(dctx, &cache.v[i]);
            for j in 0..h {
                dv[i][j] += cache.attn[i] * dctx[j];
            }
        }
        let a_dot: f64 = (0..p).map(|i| cache.attn[i] * da[i]).sum();
        let ds: Vec<f64> = (0..p).map(|i| cache.attn[i] * (da[i] - a_dot)).collect();
        let mut dk = vec![vec![0.0; h]; p];
        for i in 0..p {
            for j in 0..h {
                dq[j] += ds[i] * cache.k[i][j] * scale;
                dk[i][j] = ds[i] * cache.q[j] * scale;
            }
        }

        // Projections and positional embeddings.
        outer_into(&mut grad, &l.wq, &l.bq, h, d, &dq, &s.fv.model_token);
        for i in 0..p {
            outer_into(&mut grad, &l.wk, &l.bk, h, d, &dk[i], &cache.tokens[i]);
            outer_into(&mut grad, &l.wv, &l.bv, h, d, &dv[i], &cache.tokens[i]);
            let mut dtok = vec![0.0; d];
            matvec_t_acc(&th[l.wk.clone()], h, d, &dk[i], &mut dtok);
            matvec_t_acc(&th[l.wv.clone()], h, d, &dv[i], &mut dtok);
            let de = &mut grad[l.epos.clone()][i * d..(i + 1) * d];
            for c in 0..d {
                de[c] += dtok[c];
            }
        }
    }

    if !loss.is_finite() {
        return Err(PredictorError::NonFinite { what: "loss".into() });
    }
    Ok((loss, grad))
}

fn kind_tag(kind: PlatformKind) -> u8 {
    match kind {
        PlatformKind::Cpu => 0,
        PlatformKind::Gpu => 1,
        PlatformKind::Dla => 2,
    }
}

fn kind_from_tag(tag: u8) -> Result<PlatformKind, PredictorError> {
    match tag {
        0 => Ok(PlatformKind::Cpu),
        1 => Ok(PlatformKind::Gpu),
        2 => Ok(PlatformKind::Dla),
        other => Err(PredictorError::Parse(format!("unknown platform kind tag {other}"))),
    }
}

fn push_str(buf: &mut Vec<u8>, s: &str) {
    let bytes = s.as_bytes();
    buf.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
    buf.extend_from_slice(bytes);
}

pub(crate) fn encode_trained(tp: &TrainedPredictor) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(FORMAT_F32_LE);
    buf.extend_from_slice(&(tp.params.hidden as u16).to_le_bytes());
    buf.push(TOKEN_DIM as u8);
    let platforms = tp.norm.platforms();
    buf.extend_from_slice(&(platforms.len() as u16).to_le_bytes());
    buf.extend_from_slice(&(tp.params.out_scale as f32).to_le_bytes());
    for pd in platforms {
        push_str(&mut buf, &pd.id);
        buf.push(kind_tag(pd.kind));
        buf.extend_from_slice(&(pd.fp32_tflops as f32).to_le_bytes());
        buf.extend_from_slice(&(pd.memory_mb as f32).to_le_bytes());
        push_str(&mut buf, &pd.host);
    }
    for (lo, hi) in tp.norm.model_bounds {
        buf.extend_from_slice(&lo.to_le_bytes());
        buf.extend_from_slice(&hi.to_le_bytes());
    }
    for row in &tp.norm.platform_bounds {
        for (lo, hi) in row {
            buf.extend_from_slice(&lo.to_le_bytes());
            buf.extend_from_slice(&hi.to_le_bytes());
        }
    }
    buf.extend_from_slice(&(tp.params.theta.len() as u32).to_le_bytes());
    for v in &tp.params.theta {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PredictorError> {
        if self.at + n > self.buf.len() {
            return Err(PredictorError::Parse("truncated parameter file".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PredictorError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PredictorError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PredictorError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, PredictorError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, PredictorError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| PredictorError::Parse("invalid utf-8 in parameter file".into()))
    }
}

pub(crate) fn decode_trained(buf: &[u8]) -> Result<TrainedPredictor, PredictorError> {
    let mut r = Reader { buf, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(PredictorError::Parse("bad magic, not a parameter file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(PredictorError::Parse(format!(
            "unsupported parameter format version {version}"
        )));
    }
    let format = r.u8()?;
    if format != FORMAT_F32_LE {
        return Err(PredictorError::Parse(format!("unsupported weight format {format}")));
    }
    let hidden = r.u16()? as usize;
    let token_dim = r.u8()? as usize;
    if token_dim != TOKEN_DIM {
        return Err(PredictorError::Parse(format!(
            "unsupported token dimension {token_dim}, expected {TOKEN_DIM}"
        )));
    }
    let p = r.u16()? as usize;
    let out_scale = f64::from(r.f32()?);
    let mut platforms = Vec::with_capacity(p);
    for _ in 0..p {
        let id = r.string()?;
        let kind = kind_from_tag(r.u8()?)?;
        let fp32_tflops = f64::from(r.f32()?);
        let memory_mb = f64::from(r.f32()?);
        let host = r.string()?;
        platforms.push(PlatformDescriptor {
            id,
            kind,
            fp32_tflops,
            memory_mb,
            host,
        });
    }
    let mut bounds = |_: usize| -> Result<[(f32, f32); TOKEN_DIM], PredictorError> {
        let mut row = [(0.0f32, 0.0f32); TOKEN_DIM];
        for slot in row.iter_mut() {
            *slot = (r.f32()?, r.f32()?);
        }
        Ok(row)
    };
    let model_bounds = bounds(0)?;
    let mut platform_bounds = Vec::with_capacity(p);
    for i in 0..p {
        platform_bounds.push(bounds(i)?);
    }
    let norm = Normalizer::from_parts(platforms, model_bounds, platform_bounds);
    let theta_len = r.u32()? as usize;
    let expected = Layout::new(hidden, TOKEN_DIM, p).len;
    if theta_len != expected {
        return Err(PredictorError::Parse(format!(
            "parameter count {theta_len} does not match layout ({expected})"
        )));
    }
    let mut theta = Vec::with_capacity(theta_len);
    for _ in 0..theta_len {
        theta.push(f64::from(r.f32()?));
    }
    if r.at != buf.len() {
        return Err(PredictorError::Parse("trailing bytes in parameter file".into()));
    }
    let params = PredictorParams::new(
        hidden,
        norm.platform_ids().to_vec(),
        out_scale,
        theta,
    )?;
    Ok(TrainedPredictor { norm, params })
}

pub(crate) fn save_trained(tp: &TrainedPredictor, path: &Path) -> Result<(), PredictorError> {
    let buf = encode_trained(tp);
    if buf.len() > PARAM_BUDGET_BYTES {
        return Err(PredictorError::BudgetExceeded {
            bytes: buf.len(),
            budget: PARAM_BUDGET_BYTES,
        });
    }
    std::fs::write(path, buf).map_err(|e| PredictorError::io(path, e))
}

pub(crate) fn load_trained(path: &Path) -> Result<TrainedPredictor, PredictorError> {
    let buf = std::fs::read(path).map_err(|e| PredictorError::io(path, e))?;
    decode_trained(&buf)
}

/// Xavier-uniform projection blocks, zero biases, small uniform positional
/// embeddings. `br_init` presets the latency head bias so initial outputs sit
/// near the target scale.
pub(crate) fn init_params(
    hidden: usize,
    platform_ids: Vec<String>,
    out_scale: f64,
    br_init: f64,
    rng: &mut impl rand::Rng,
) -> Result<PredictorParams, PredictorError> {
    let l = Layout::new(hidden, TOKEN_DIM, platform_ids.len());
    let mut theta = vec![0.0; l.len];
    let mut fill = |range: Range<usize>, fan_in: usize, fan_out: usize, theta: &mut Vec<f64>| {
        let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for i in range {
            theta[i] = rng.random_range(-r..r);
        }
    };
    fill(l.wq.clone(), l.d, hidden, &mut theta);
    fill(l.wk.clone(), l.d, hidden, &mut theta);
    fill(l.wv.clone(), l.d, hidden, &mut theta);
    fill(l.wm.clone(), 2 * hidden, hidden, &mut theta);
    fill(l.wp.clone(), 2 * hidden, hidden, &mut theta);
    fill(l.wr.clone(), hidden, 1, &mut theta);
    fill(l.wc.clone(), hidden, 1, &mut theta);
    for i in l.epos.clone() {
        theta[i] = rng.random_range(-0.5..0.5);
    }
    theta[l.br.clone()][0] = br_init;
    PredictorParams::new(hidden, platform_ids, out_scale, theta)
}

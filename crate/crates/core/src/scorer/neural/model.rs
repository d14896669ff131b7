//! Hashed-embedding cross-encoder with an optional bottleneck adapter and a
//! single-logit classification head.
//!
//! Every token `t` of the joint sequence gets `e = seg[s] + mean(emb[f])` over
//! its feature buckets. With an adapter, `h = e + up * relu(down * e + bd) + bu`,
//! otherwise `h = e`. The example and gloss states are mean-pooled into `u`
//! and `v`, and the head reads `[u*v, |u-v|, u, v]`.

use std::ops::Range;

use half::f16;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::tokenize::{fnv1a, Token, EXAMPLE_SEGMENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Architecture {
    pub dim: usize,
    pub buckets: usize,
    /// Adapter width; `None` means no adapter (full fine-tuning).
    pub bottleneck: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub emb: Range<usize>,
    pub seg: Range<usize>,
    pub down: Range<usize>,
    pub down_b: Range<usize>,
    pub up: Range<usize>,
    pub up_b: Range<usize>,
    pub head_w: Range<usize>,
    pub head_b: Range<usize>,
}

impl Layout {
    fn new(arch: &Architecture) -> Self {
        let d = arch.dim;
        let r = arch.bottleneck.unwrap_or(0);
        let mut at = 0;
        let mut take = |n: usize| {
            let range = at..at + n;
            at += n;
            range
        };
        Layout {
            emb: take(arch.buckets * d),
            seg: take(2 * d),
            down: take(r * d),
            down_b: take(r),
            up: take(d * r),
            up_b: take(d),
            head_w: take(4 * d),
            head_b: take(1),
        }
    }

    pub fn total(&self) -> usize {
        self.head_b.end
    }

    /// Parameter ranges updated during training.
    pub fn trainable(&self, arch: &Architecture) -> Vec<Range<usize>> {
        if arch.bottleneck.is_some() {
            vec![
                self.down.clone(),
                self.down_b.clone(),
                self.up.clone(),
                self.up_b.clone(),
                self.head_w.clone(),
                self.head_b.clone(),
            ]
        } else {
            vec![
                self.emb.clone(),
                self.seg.clone(),
                self.head_w.clone(),
                self.head_b.clone(),
            ]
        }
    }
}

fn round_half(x: f32) -> f32 {
    f16::from_f32(x).to_f32()
}

#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub arch: Architecture,
    pub layout: Layout,
    /// Master weights.
    pub params: Vec<f32>,
    /// Half-precision view used by the forward pass, when enabled.
    rounded: Option<Vec<f32>>,
}

struct TokenCache {
    segment: usize,
    e: Vec<f32>,
    z: Vec<f32>,
    a: Vec<f32>,
}

pub(crate) struct ForwardPass {
    tokens: Vec<TokenCache>,
    counts: [usize; 2],
    u: Vec<f32>,
    v: Vec<f32>,
    features: Vec<f32>,
    pub logit: f32,
}

pub(crate) fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target.
pub(crate) fn bce_with_logit(logit: f32, target: f32) -> f32 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

impl Model {
    /// Encoder weights (embeddings and segment vectors) are derived from
    /// `encoder_name` alone, so every model built on the same encoder shares
    /// them. Adapter and head weights are drawn from `seed`.
    pub fn init(arch: Architecture, encoder_name: &str, seed: u64, half: bool) -> Self {
        let layout = Layout::new(&arch);
        let mut params = vec![0.0f32; layout.total()];

        let mut enc_rng = ChaCha8Rng::seed_from_u64(fnv1a(encoder_name.as_bytes()));
        let unit = Normal::new(0.0f32, 1.0).expect("valid normal");
        for p in &mut params[layout.emb.clone()] {
            *p = unit.sample(&mut enc_rng);
        }
        for p in &mut params[layout.seg.clone()] {
            *p = 0.1 * unit.sample(&mut enc_rng);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let down_scale = 1.0 / (arch.dim as f32).sqrt();
        for p in &mut params[layout.down.clone()] {
            *p = down_scale * unit.sample(&mut rng);
        }
        for p in &mut params[layout.up.clone()] {
            *p = 0.01 * unit.sample(&mut rng);
        }
        for p in &mut params[layout.head_w.clone()] {
            *p = 0.01 * unit.sample(&mut rng);
        }
        Model::from_params(arch, params, half).expect("layout sized params")
    }

    pub fn from_params(arch: Architecture, params: Vec<f32>, half: bool) -> Option<Self> {
        let layout = Layout::new(&arch);
        if params.len() != layout.total() {
            return None;
        }
        let mut model = Model {
            arch,
            layout,
            params,
            rounded: None,
        };
        if half {
            model.rounded = Some(Vec::new());
            model.refresh();
        }
        Some(model)
    }

    pub fn half(&self) -> bool {
        self.rounded.is_some()
    }

    /// Re-derive the half-precision view after the master weights changed.
    pub fn refresh(&mut self) {
        if let Some(r) = &mut self.rounded {
            r.clear();
            r.extend(self.params.iter().map(|&x| round_half(x)));
        }
    }

    fn weights(&self) -> &[f32] {
        self.rounded.as_deref().unwrap_or(&self.params)
    }

    fn act(&self, x: f32) -> f32 {
        if self.half() {
            round_half(x)
        } else {
            x
        }
    }

    fn token_state(&self, tok: &Token) -> TokenCache {
        let w = self.weights();
        let l = &self.layout;
        let d = self.arch.dim;
        let mut e = w[l.seg.start + tok.segment * d..l.seg.start + (tok.segment + 1) * d].to_vec();
        let inv = 1.0 / tok.features.len().max(1) as f32;
        for &f in &tok.features {
            let row = &w[l.emb.start + f as usize * d..l.emb.start + (f as usize + 1) * d];
            for (x, r) in e.iter_mut().zip(row) {
                *x += inv * r;
            }
        }
        for x in &mut e {
            *x = self.act(*x);
        }
        let (mut z, mut a) = (Vec::new(), Vec::new());
        if let Some(r) = self.arch.bottleneck {
            z = (0..r)
                .map(|j| {
                    let row = &w[l.down.start + j * d..l.down.start + (j + 1) * d];
                    self.act(w[l.down_b.start + j] + dot(row, &e))
                })
                .collect();
            a = z.iter().map(|&x| x.max(0.0)).collect();
        }
        TokenCache {
            segment: tok.segment,
            e,
            z,
            a,
        }
    }

    fn hidden(&self, cache: &TokenCache) -> Vec<f32> {
        let Some(r) = self.arch.bottleneck else {
            return cache.e.clone();
        };
        let w = self.weights();
        let l = &self.layout;
        (0..self.arch.dim)
            .map(|i| {
                let row = &w[l.up.start + i * r..l.up.start + (i + 1) * r];
                self.act(cache.e[i] + w[l.up_b.start + i] + dot(row, &cache.a))
            })
            .collect()
    }

    pub fn forward(&self, tokens: &[Token]) -> ForwardPass {
        let d = self.arch.dim;
        let mut sums = [vec![0.0f32; d], vec![0.0f32; d]];
        let mut counts = [0usize; 2];
        let caches: Vec<TokenCache> = tokens.iter().map(|t| self.token_state(t)).collect();
        for c in &caches {
            let h = self.hidden(c);
            for (s, x) in sums[c.segment].iter_mut().zip(&h) {
                *s += x;
            }
            counts[c.segment] += 1;
        }
        let [su, sv] = sums;
        let mean = |s: Vec<f32>, n: usize| -> Vec<f32> {
            if n == 0 {
                s
            } else {
                s.into_iter().map(|x| x / n as f32).collect()
            }
        };
        let u = mean(su, counts[0]);
        let v = mean(sv, counts[1]);
        let mut features = Vec::with_capacity(4 * d);
        features.extend(u.iter().zip(&v).map(|(a, b)| a * b));
        features.extend(u.iter().zip(&v).map(|(a, b)| (a - b).abs()));
        features.extend_from_slice(&u);
        features.extend_from_slice(&v);
        let w = self.weights();
        let logit = w[self.layout.head_b.start] + dot(&w[self.layout.head_w.clone()], &features);
        ForwardPass {
            tokens: caches,
            counts,
            u,
            v,
            features,
            logit,
        }
    }

    pub fn probability(&self, tokens: &[Token]) -> f32 {
        sigmoid(self.forward(tokens).logit)
    }

    /// Per-token hidden states of a single-segment sequence.
    pub fn token_states(&self, tokens: &[Token]) -> Vec<Vec<f32>> {
        tokens
            .iter()
            .map(|t| self.hidden(&self.token_state(t)))
            .collect()
    }

    /// Accumulate `dlogit * d(logit)/d(params)` into `grad`.
    pub fn backward(&self, pass: &ForwardPass, dlogit: f32, features: &[Token], grad: &mut [f32]) {
        let w = self.weights();
        let l = &self.layout;
        let d = self.arch.dim;

        for (g, f) in grad[l.head_w.clone()].iter_mut().zip(&pass.features) {
            *g += dlogit * f;
        }
        grad[l.head_b.start] += dlogit;

        let hw = &w[l.head_w.clone()];
        let (wa, rest) = hw.split_at(d);
        let (wc, rest) = rest.split_at(d);
        let (wu, wv) = rest.split_at(d);
        let mut du = vec![0.0f32; d];
        let mut dv = vec![0.0f32; d];
        for i in 0..d {
            let (u, v) = (pass.u[i], pass.v[i]);
            let sign = if u > v {
                1.0
            } else if u < v {
                -1.0
            } else {
                0.0
            };
            du[i] = dlogit * (wa[i] * v + wc[i] * sign + wu[i]);
            dv[i] = dlogit * (wa[i] * u - wc[i] * sign + wv[i]);
        }
        for (i, c) in pass.counts.iter().enumerate() {
            let target = if i == EXAMPLE_SEGMENT {
                &mut du
            } else {
                &mut dv
            };
            if *c > 0 {
                for x in target.iter_mut() {
                    *x /= *c as f32;
                }
            }
        }

        for (cache, tok) in pass.tokens.iter().zip(features) {
            let dh = if cache.segment == EXAMPLE_SEGMENT {
                &du
            } else {
                &dv
            };
            match self.arch.bottleneck {
                Some(r) => {
                    // Encoder weights are frozen under an adapter.
                    for i in 0..d {
                        grad[l.up_b.start + i] += dh[i];
                        let row = l.up.start + i * r;
                        for j in 0..r {
                            grad[row + j] += dh[i] * cache.a[j];
                        }
                    }
                    for j in 0..r {
                        if cache.z[j] <= 0.0 {
                            continue;
                        }
                        let da: f32 = (0..d).map(|i| w[l.up.start + i * r + j] * dh[i]).sum();
                        grad[l.down_b.start + j] += da;
                        let row = l.down.start + j * d;
                        for i in 0..d {
                            grad[row + i] += da * cache.e[i];
                        }
                    }
                }
                None => {
                    let seg = l.seg.start + cache.segment * d;
                    for i in 0..d {
                        grad[seg + i] += dh[i];
                    }
                    let inv = 1.0 / tok.features.len().max(1) as f32;
                    for &f in &tok.features {
                        let row = l.emb.start + f as usize * d;
                        for i in 0..d {
                            grad[row + i] += inv * dh[i];
                        }
                    }
                }
            }
        }
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::encode_pair;
    use crate::scorer::neural::tokenize::encode;

    fn tiny(bottleneck: Option<usize>) -> Model {
        Model::init(
            Architecture {
                dim: 6,
                buckets: 64,
                bottleneck,
            },
            "test-encoder",
            3,
            false,
        )
    }

    /// Central finite differences against the analytic gradient.
    fn check_gradient(model: &mut Model) {
        let toks = encode(&encode_pair("red fox runs", "a small fox").unwrap(), 64, 32);
        let target = 1.0;
        let loss = |m: &Model| bce_with_logit(m.forward(&toks).logit, target);
        let pass = model.forward(&toks);
        let mut grad = vec![0.0f32; model.layout.total()];
        model.backward(&pass, sigmoid(pass.logit) - target, &toks, &mut grad);
        let ranges = model.layout.trainable(&model.arch);
        let mut checked = 0;
        for range in ranges {
            for idx in range.step_by(3) {
                let orig = model.params[idx];
                let h = 1e-2;
                model.params[idx] = orig + h;
                let lp = loss(model);
                model.params[idx] = orig - h;
                let lm = loss(model);
                model.params[idx] = orig;
                let numeric = (lp - lm) / (2.0 * h);
                if numeric.abs() < 1e-6 && grad[idx].abs() < 1e-6 {
                    continue;
                }
                let tol = 2e-3 + 2e-2 * numeric.abs();
                assert!(
                    (numeric - grad[idx]).abs() < tol,
                    "param {idx}: numeric {numeric} analytic {}",
                    grad[idx]
                );
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn adapter_gradient_matches_finite_differences() {
        let mut m = tiny(Some(3));
        // Make the adapter path non-trivial.
        let up = m.layout.up.clone();
        for p in &mut m.params[up] {
            *p *= 30.0;
        }
        check_gradient(&mut m);
    }

    #[test]
    fn full_finetune_gradient_matches_finite_differences() {
        check_gradient(&mut tiny(None));
    }

    #[test]
    fn encoder_weights_depend_only_on_encoder_name() {
        let arch = Architecture {
            dim: 4,
            buckets: 16,
            bottleneck: Some(2),
        };
        let a = Model::init(arch, "enc", 1, false);
        let b = Model::init(arch, "enc", 2, false);
        assert_eq!(
            a.params[a.layout.emb.clone()],
            b.params[b.layout.emb.clone()]
        );
        assert_ne!(
            a.params[a.layout.head_w.clone()],
            b.params[b.layout.head_w.clone()]
        );
    }

    #[test]
    fn stable_loss() {
        assert!(bce_with_logit(100.0, 1.0) < 1e-6);
        assert!((bce_with_logit(-100.0, 1.0) - 100.0).abs() < 1e-3);
        assert!((bce_with_logit(0.0, 0.0) - std::f32::consts::LN_2).abs() < 1e-6);
    }
}

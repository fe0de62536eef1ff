//! Encoder + head assembly, masked-autoencoder pre-training, transfer,
//! downstream training and inference.
//!
//! The encoder projects each 40-value feature token to `d_model`, runs
//! `n_blocks` pre-norm transformer blocks over the 3-token sequence, and
//! flattens to `3 * d_model`. The pre-training head regresses the masked
//! token's 40 features under L1 loss; the downstream head emits three
//! sigmoid outputs trained with BCE, one per segment of the sequence.
//!
//! Parameter names are stable (`enc.*`, `head.*`): transfer copies the
//! `enc.*` tensors into a fresh model and optionally marks them frozen.
//! A frozen encoder runs in eval mode during downstream training, so its
//! per-sequence activations are computed once and cached.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::seeding;
use crate::tensor_nn::{
    add, adam_step, bce_loss, dropout, l1_loss, linear, relu, reshape, sigmoid, step_lr,
    substitute_rows, transformer_block, AdamState, AttentionParams, BlockParams, BoundParams,
    ParamEntry, ParamGroup, Scalar, Tensor,
};
use crate::tokenizer::{mask_sequence, TokenSequence, SEQ_LEN};

/// How a masked token is presented to the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    /// Replace the masked token with zeros (default).
    #[default]
    Zeros,
    /// Replace it with a trainable embedding vector.
    Learnable,
}

/// Encoder hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub n_blocks: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub dropout_p: f64,
    /// Additive sinusoidal position encoding; off by default.
    pub positional_encoding: bool,
    /// FFN width multiplier (hidden = ffn_mult * d_model).
    pub ffn_mult: usize,
    pub mask_mode: MaskMode,
    /// Flat token dimension (2 features x bands x channels).
    pub token_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            n_blocks: 4,
            d_model: 64,
            n_heads: 4,
            dropout_p: 0.1,
            positional_encoding: false,
            ffn_mult: 4,
            mask_mode: MaskMode::Zeros,
            token_dim: 40,
        }
    }
}

impl EncoderConfig {
    fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 || self.d_model == 0 || self.token_dim == 0 || self.ffn_mult == 0 {
            return Err(CoreError::Config(String::from("encoder dimensions must be positive")));
        }
        if self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(CoreError::Config(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }
}

/// Prediction-head layout: FC sizes, output width, optional sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadConfig {
    pub fc_sizes: Vec<usize>,
    pub out_dim: usize,
    pub final_sigmoid: bool,
}

impl HeadConfig {
    /// Pre-training head: 256 -> 128 -> token_dim, no sigmoid.
    pub fn pretrain(token_dim: usize) -> Self {
        Self { fc_sizes: vec![256, 128], out_dim: token_dim, final_sigmoid: false }
    }

    /// Downstream classification head: 32 -> 16 -> 3 with sigmoid.
    pub fn downstream() -> Self {
        Self { fc_sizes: vec![32, 16], out_dim: SEQ_LEN, final_sigmoid: true }
    }

    /// Named ablation presets for the downstream head.
    pub fn downstream_preset(name: &str) -> Option<Self> {
        let fc_sizes = match name {
            "A1" => vec![32, 13, 8],
            "A2" => vec![32, 13],
            "A3" => vec![32],
            _ => return None,
        };
        Some(Self { fc_sizes, out_dim: SEQ_LEN, final_sigmoid: true })
    }
}

/// Training-run hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRunConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Stepwise decay as (step_size, gamma); None keeps lr constant.
    pub scheduler: Option<(usize, f64)>,
    pub seed: u64,
    pub freeze_encoder: bool,
    /// Redraw pre-training masks every epoch (default) or fix them once.
    pub redraw_masks: bool,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 1000,
            lr: 1e-4,
            scheduler: None,
            seed: 0,
            freeze_encoder: false,
            redraw_masks: true,
        }
    }
}

fn kaiming_uniform<T: Scalar, R: Rng + ?Sized>(fan_in: usize, len: usize, rng: &mut R) -> Vec<T> {
    let bound = (1.0 / fan_in as f64).sqrt();
    (0..len).map(|_| T::c(rng.gen_range(-bound..=bound))).collect()
}

fn push_linear<T: Scalar, R: Rng + ?Sized>(
    group: &mut ParamGroup<T>,
    name: &str,
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Result<()> {
    group.push(ParamEntry {
        name: format!("{name}.w"),
        shape: vec![fan_in, fan_out],
        data: kaiming_uniform(fan_in, fan_in * fan_out, rng),
        trainable: true,
    })?;
    group.push(ParamEntry {
        name: format!("{name}.b"),
        shape: vec![fan_out],
        data: vec![T::zero(); fan_out],
        trainable: true,
    })
}

fn push_norm<T: Scalar>(group: &mut ParamGroup<T>, name: &str, dim: usize) -> Result<()> {
    group.push(ParamEntry {
        name: format!("{name}.gamma"),
        shape: vec![dim],
        data: vec![T::one(); dim],
        trainable: true,
    })?;
    group.push(ParamEntry {
        name: format!("{name}.beta"),
        shape: vec![dim],
        data: vec![T::zero(); dim],
        trainable: true,
    })
}

/// Initialize all encoder and head parameters.
pub fn build_model<T: Scalar, R: Rng + ?Sized>(
    enc: &EncoderConfig,
    head: &HeadConfig,
    rng: &mut R,
) -> Result<ParamGroup<T>> {
    enc.validate()?;
    if head.out_dim == 0 {
        return Err(CoreError::Config(String::from("head out_dim must be positive")));
    }
    let mut group = ParamGroup::new();
    push_linear(&mut group, "enc.in_proj", enc.token_dim, enc.d_model, rng)?;
    if enc.mask_mode == MaskMode::Learnable {
        group.push(ParamEntry {
            name: String::from("enc.mask_token"),
            shape: vec![enc.token_dim],
            data: vec![T::zero(); enc.token_dim],
            trainable: true,
        })?;
    }
    let d_ff = enc.ffn_mult * enc.d_model;
    for i in 0..enc.n_blocks {
        let p = format!("enc.block{i}");
        push_norm(&mut group, &format!("{p}.ln1"), enc.d_model)?;
        for proj in ["wq", "wk", "wv", "wo"] {
            push_linear(&mut group, &format!("{p}.attn.{proj}"), enc.d_model, enc.d_model, rng)?;
        }
        push_norm(&mut group, &format!("{p}.ln2"), enc.d_model)?;
        push_linear(&mut group, &format!("{p}.ffn.l1"), enc.d_model, d_ff, rng)?;
        push_linear(&mut group, &format!("{p}.ffn.l2"), d_ff, enc.d_model, rng)?;
    }
    let mut in_dim = SEQ_LEN * enc.d_model;
    for (i, &width) in head.fc_sizes.iter().enumerate() {
        push_linear(&mut group, &format!("head.fc{i}"), in_dim, width, rng)?;
        in_dim = width;
    }
    push_linear(&mut group, "head.out", in_dim, head.out_dim, rng)?;
    Ok(group)
}

fn attention_params<T: Scalar>(
    bound: &BoundParams<T>,
    prefix: &str,
) -> Result<AttentionParams<T>> {
    let g = |suffix: &str| -> Result<Tensor<T>> {
        Ok(bound.get(&format!("{prefix}.attn.{suffix}"))?.clone())
    };
    Ok(AttentionParams {
        wq: g("wq.w")?,
        bq: g("wq.b")?,
        wk: g("wk.w")?,
        bk: g("wk.b")?,
        wv: g("wv.w")?,
        bv: g("wv.b")?,
        wo: g("wo.w")?,
        bo: g("wo.b")?,
    })
}

fn block_params<T: Scalar>(bound: &BoundParams<T>, index: usize) -> Result<BlockParams<T>> {
    let p = format!("enc.block{index}");
    Ok(BlockParams {
        ln1_gamma: bound.get(&format!("{p}.ln1.gamma"))?.clone(),
        ln1_beta: bound.get(&format!("{p}.ln1.beta"))?.clone(),
        attn: attention_params(bound, &p)?,
        ln2_gamma: bound.get(&format!("{p}.ln2.gamma"))?.clone(),
        ln2_beta: bound.get(&format!("{p}.ln2.beta"))?.clone(),
        ffn_w1: bound.get(&format!("{p}.ffn.l1.w"))?.clone(),
        ffn_b1: bound.get(&format!("{p}.ffn.l1.b"))?.clone(),
        ffn_w2: bound.get(&format!("{p}.ffn.l2.w"))?.clone(),
        ffn_b2: bound.get(&format!("{p}.ffn.l2.b"))?.clone(),
    })
}

fn positional_encoding<T: Scalar>(batch: usize, d_model: usize) -> Tensor<T> {
    let mut data = vec![T::zero(); batch * SEQ_LEN * d_model];
    for l in 0..SEQ_LEN {
        for k in 0..d_model {
            let angle =
                l as f64 / Float::powf(10000.0f64, 2.0 * (k / 2) as f64 / d_model as f64);
            let v = if k % 2 == 0 { angle.sin() } else { angle.cos() };
            for b in 0..batch {
                data[(b * SEQ_LEN + l) * d_model + k] = T::c(v);
            }
        }
    }
    Tensor::constant(vec![batch * SEQ_LEN, d_model], data).expect("pe shape")
}

/// Batch input assembled from sequences: `[B*3, token_dim]` with masked
/// rows zeroed, plus the masked row indices.
fn assemble_input<T: Scalar>(
    seqs: &[&TokenSequence],
    token_dim: usize,
) -> Result<(Tensor<T>, Vec<usize>)> {
    let batch = seqs.len();
    let mut data = vec![T::zero(); batch * SEQ_LEN * token_dim];
    let mut masked_rows = Vec::new();
    for (b, seq) in seqs.iter().enumerate() {
        for (l, token) in seq.tokens.iter().enumerate() {
            if token.dim() != token_dim {
                return Err(CoreError::ShapeMismatch(format!(
                    "token dim {} vs model token_dim {token_dim}",
                    token.dim()
                )));
            }
            let row = b * SEQ_LEN + l;
            if seq.mask_index == Some(l) {
                masked_rows.push(row);
                continue; // input path sees zeros here
            }
            for (j, &v) in token.values().iter().enumerate() {
                data[row * token_dim + j] = T::c(v);
            }
        }
    }
    Ok((Tensor::constant(vec![batch * SEQ_LEN, token_dim], data)?, masked_rows))
}

/// Encoder forward: `[B*3, token_dim]` input to `[B, 3*d_model]` features.
fn forward_encoder<T: Scalar, R: Rng + ?Sized>(
    bound: &BoundParams<T>,
    enc: &EncoderConfig,
    input: &Tensor<T>,
    batch: usize,
    masked_rows: &[usize],
    train: bool,
    rng: &mut R,
) -> Result<Tensor<T>> {
    let mut x = input.clone();
    if enc.mask_mode == MaskMode::Learnable && !masked_rows.is_empty() {
        x = substitute_rows(&x, masked_rows, bound.get("enc.mask_token")?)?;
    }
    let mut h = linear(&x, bound.get("enc.in_proj.w")?, bound.get("enc.in_proj.b")?)?;
    if enc.positional_encoding {
        h = add(&h, &positional_encoding(batch, enc.d_model))?;
    }
    for i in 0..enc.n_blocks {
        let params = block_params(bound, i)?;
        h = transformer_block(&h, &params, batch, SEQ_LEN, enc.n_heads, enc.dropout_p, train, rng)?;
    }
    reshape(&h, vec![batch, SEQ_LEN * enc.d_model])
}

/// Head forward: flattened features to predictions.
fn forward_head<T: Scalar, R: Rng + ?Sized>(
    bound: &BoundParams<T>,
    head: &HeadConfig,
    dropout_p: f64,
    features: &Tensor<T>,
    train: bool,
    rng: &mut R,
) -> Result<Tensor<T>> {
    let mut h = features.clone();
    for i in 0..head.fc_sizes.len() {
        let w = bound.get(&format!("head.fc{i}.w"))?;
        let b = bound.get(&format!("head.fc{i}.b"))?;
        h = dropout(&relu(&linear(&h, w, b)?), dropout_p, train, rng);
    }
    let out = linear(&h, bound.get("head.out.w")?, bound.get("head.out.b")?)?;
    Ok(if head.final_sigmoid { sigmoid(&out) } else { out })
}

/// Full forward pass over a slice of sequences.
fn forward<T: Scalar, R: Rng + ?Sized>(
    bound: &BoundParams<T>,
    enc: &EncoderConfig,
    head: &HeadConfig,
    seqs: &[&TokenSequence],
    train: bool,
    rng: &mut R,
) -> Result<Tensor<T>> {
    let (input, masked_rows) = assemble_input(seqs, enc.token_dim)?;
    let features = forward_encoder(bound, enc, &input, seqs.len(), &masked_rows, train, rng)?;
    forward_head(bound, head, enc.dropout_p, &features, train, rng)
}

fn ground_truth_tensor<T: Scalar>(
    seqs: &[&TokenSequence],
    token_dim: usize,
) -> Result<Tensor<T>> {
    let mut data = vec![T::zero(); seqs.len() * token_dim];
    for (b, seq) in seqs.iter().enumerate() {
        let g = seq
            .ground_truth()
            .ok_or_else(|| CoreError::Config(String::from("sequence lost its mask")))?;
        for (j, &v) in g.values().iter().enumerate() {
            data[b * token_dim + j] = T::c(v);
        }
    }
    Tensor::constant(vec![seqs.len(), token_dim], data)
}

/// Masked-autoencoding pre-training.
///
/// Per epoch: shuffle, batch, draw one mask per sequence (redrawn every
/// epoch unless configured otherwise), reconstruct the masked token under
/// L1 loss, Adam update. Returns final parameters and the per-epoch mean
/// loss curve.
pub fn pretrain<T: Scalar>(
    corpus: &[TokenSequence],
    cfg: &TrainRunConfig,
    enc: &EncoderConfig,
    head: &HeadConfig,
) -> Result<(ParamGroup<T>, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    if corpus.iter().any(|s| s.mask_index.is_some()) {
        return Err(CoreError::AlreadyMasked);
    }
    if head.out_dim != enc.token_dim {
        return Err(CoreError::Config(format!(
            "pretrain head out_dim {} must equal token_dim {}",
            head.out_dim, enc.token_dim
        )));
    }
    let mut init_rng = seeding::stream_rng(cfg.seed, 0);
    let group = build_model::<T, _>(enc, head, &mut init_rng)?;
    let bound = group.bind();
    let mut state = AdamState::new(T::c(cfg.lr));
    let mut train_rng = seeding::stream_rng(cfg.seed, 1);

    let fixed_masks: Option<Vec<TokenSequence>> = if cfg.redraw_masks {
        None
    } else {
        let mut mask_rng = seeding::stream_rng(cfg.seed, 2);
        Some(
            corpus
                .iter()
                .map(|s| mask_sequence(s, &mut mask_rng))
                .collect::<Result<Vec<_>>>()?,
        )
    };

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    for epoch in 0..cfg.epochs {
        if let Some((step_size, gamma)) = cfg.scheduler {
            step_lr(&mut state, epoch, step_size, T::c(gamma));
        }
        order.shuffle(&mut train_rng);
        let masked: Vec<TokenSequence> = match &fixed_masks {
            Some(m) => order.iter().map(|&i| m[i].clone()).collect(),
            None => order
                .iter()
                .map(|&i| mask_sequence(&corpus[i], &mut train_rng))
                .collect::<Result<Vec<_>>>()?,
        };
        let mut epoch_loss = 0.0f64;
        for chunk in masked.chunks(cfg.batch_size.max(1)) {
            let refs: Vec<&TokenSequence> = chunk.iter().collect();
            let pred = forward(&bound, enc, head, &refs, true, &mut train_rng)?;
            let target = ground_truth_tensor(&refs, enc.token_dim)?;
            let loss = l1_loss(&pred, &target)?;
            loss.backward();
            adam_step(&bound, &mut state)?;
            epoch_loss += loss.item().to_f64().unwrap_or(f64::NAN) * chunk.len() as f64;
        }
        curve.push(epoch_loss / corpus.len() as f64);
    }
    Ok((bound.export(), curve))
}

/// Copy encoder tensors into a fresh model with a new head.
///
/// Head tensors are never transferred; with `freeze` the copied encoder
/// tensors are marked non-trainable.
pub fn transfer<T: Scalar>(
    pretrained: &ParamGroup<T>,
    head: &HeadConfig,
    freeze: bool,
    seed: u64,
) -> Result<ParamGroup<T>> {
    let enc_entries: Vec<&ParamEntry<T>> = pretrained
        .entries()
        .iter()
        .filter(|e| e.name.starts_with("enc."))
        .collect();
    if enc_entries.is_empty() {
        return Err(CoreError::MissingEncoder);
    }
    let in_proj = pretrained.get("enc.in_proj.w").ok_or(CoreError::MissingEncoder)?;
    let d_model = *in_proj.shape.last().ok_or(CoreError::MissingEncoder)?;

    let mut group = ParamGroup::new();
    for e in enc_entries {
        group.push(ParamEntry {
            name: e.name.clone(),
            shape: e.shape.clone(),
            data: e.data.clone(),
            trainable: !freeze,
        })?;
    }
    let mut rng = seeding::stream_rng(seed, 3);
    let mut in_dim = SEQ_LEN * d_model;
    for (i, &width) in head.fc_sizes.iter().enumerate() {
        push_linear(&mut group, &format!("head.fc{i}"), in_dim, width, &mut rng)?;
        in_dim = width;
    }
    push_linear(&mut group, "head.out", in_dim, head.out_dim, &mut rng)?;
    Ok(group)
}

fn validate_labels(labels: &[[u8; SEQ_LEN]]) -> Result<()> {
    for row in labels {
        if let Some(&bad) = row.iter().find(|&&v| v > 1) {
            return Err(CoreError::LabelOutOfRange { value: bad as i64 });
        }
    }
    Ok(())
}

/// Downstream training with BCE over the three per-segment outputs.
///
/// With `freeze_encoder` the encoder runs once in eval mode and its
/// flattened activations are cached; only head parameters update.
pub fn train_downstream<T: Scalar>(
    train_data: &[(TokenSequence, [u8; SEQ_LEN])],
    cfg: &TrainRunConfig,
    enc: &EncoderConfig,
    head: &HeadConfig,
    mut params: ParamGroup<T>,
) -> Result<(ParamGroup<T>, Vec<f64>)> {
    if train_data.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let labels: Vec<[u8; SEQ_LEN]> = train_data.iter().map(|(_, l)| *l).collect();
    validate_labels(&labels)?;
    if cfg.freeze_encoder {
        params.set_trainable(|n| n.starts_with("enc."), false);
    }
    let bound = params.bind();
    let mut state = AdamState::new(T::c(cfg.lr));
    let mut train_rng = seeding::stream_rng(cfg.seed, 4);

    let label_tensor = |idx: &[usize]| -> Result<Tensor<T>> {
        let mut data = vec![T::zero(); idx.len() * SEQ_LEN];
        for (b, &i) in idx.iter().enumerate() {
            for (l, &v) in labels[i].iter().enumerate() {
                data[b * SEQ_LEN + l] = T::c(v as f64);
            }
        }
        Tensor::constant(vec![idx.len(), SEQ_LEN], data)
    };

    // Frozen path: cache encoder activations (eval mode, deterministic).
    let cached: Option<Vec<Vec<T>>> = if cfg.freeze_encoder {
        let mut feats = Vec::with_capacity(train_data.len());
        for chunk in train_data.chunks(cfg.batch_size.max(1)) {
            let refs: Vec<&TokenSequence> = chunk.iter().map(|(s, _)| s).collect();
            let (input, masked_rows) = assemble_input(&refs, enc.token_dim)?;
            let out = forward_encoder(
                &bound,
                enc,
                &input,
                refs.len(),
                &masked_rows,
                false,
                &mut train_rng,
            )?;
            let data = out.to_vec();
            let width = SEQ_LEN * enc.d_model;
            for b in 0..refs.len() {
                feats.push(data[b * width..(b + 1) * width].to_vec());
            }
        }
        Some(feats)
    } else {
        None
    };

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    for epoch in 0..cfg.epochs {
        if let Some((step_size, gamma)) = cfg.scheduler {
            step_lr(&mut state, epoch, step_size, T::c(gamma));
        }
        order.shuffle(&mut train_rng);
        let mut epoch_loss = 0.0f64;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let pred = match &cached {
                Some(feats) => {
                    let width = SEQ_LEN * enc.d_model;
                    let mut data = Vec::with_capacity(chunk.len() * width);
                    for &i in chunk {
                        data.extend_from_slice(&feats[i]);
                    }
                    let features = Tensor::constant(vec![chunk.len(), width], data)?;
                    forward_head(&bound, head, enc.dropout_p, &features, true, &mut train_rng)?
                }
                None => {
                    let refs: Vec<&TokenSequence> =
                        chunk.iter().map(|&i| &train_data[i].0).collect();
                    forward(&bound, enc, head, &refs, true, &mut train_rng)?
                }
            };
            let target = label_tensor(chunk)?;
            let loss = bce_loss(&pred, &target)?;
            loss.backward();
            adam_step(&bound, &mut state)?;
            epoch_loss += loss.item().to_f64().unwrap_or(f64::NAN) * chunk.len() as f64;
        }
        curve.push(epoch_loss / train_data.len() as f64);
    }
    Ok((bound.export(), curve))
}

/// Sigmoid outputs thresholded at 0.5 (>= 0.5 maps to 1) for each of the
/// three segments of one sequence.
pub fn predict_sequence<T: Scalar>(
    params: &ParamGroup<T>,
    enc: &EncoderConfig,
    head: &HeadConfig,
    seq: &TokenSequence,
) -> Result<[u8; SEQ_LEN]> {
    let batch = predict_batch(params, enc, head, core::slice::from_ref(seq))?;
    Ok(batch[0])
}

/// Batched eval-mode forward returning the raw head outputs (sigmoid
/// probabilities for downstream heads), one row per sequence.
pub fn forward_eval<T: Scalar>(
    params: &ParamGroup<T>,
    enc: &EncoderConfig,
    head: &HeadConfig,
    seqs: &[TokenSequence],
) -> Result<Vec<Vec<T>>> {
    let bound = params.bind();
    // Eval-mode forward consumes no randomness; the seed is irrelevant.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(seqs.len());
    for chunk in seqs.chunks(64) {
        let refs: Vec<&TokenSequence> = chunk.iter().collect();
        let pred = forward(&bound, enc, head, &refs, false, &mut rng)?;
        let data = pred.to_vec();
        for b in 0..refs.len() {
            out.push(data[b * head.out_dim..(b + 1) * head.out_dim].to_vec());
        }
    }
    Ok(out)
}

/// Batched eval-mode inference.
pub fn predict_batch<T: Scalar>(
    params: &ParamGroup<T>,
    enc: &EncoderConfig,
    head: &HeadConfig,
    seqs: &[TokenSequence],
) -> Result<Vec<[u8; SEQ_LEN]>> {
    if head.out_dim != SEQ_LEN {
        return Err(CoreError::Config(format!(
            "classification head out_dim {} != {SEQ_LEN}",
            head.out_dim
        )));
    }
    let raw = forward_eval(params, enc, head, seqs)?;
    let half = T::c(0.5);
    Ok(raw
        .iter()
        .map(|row| {
            let mut labels = [0u8; SEQ_LEN];
            for (l, r) in labels.iter_mut().enumerate() {
                *r = if row[l] >= half { 1 } else { 0 };
            }
            labels
        })
        .collect())
}

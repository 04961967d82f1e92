//! Network assembly on top of the tape: fusion blocks, filter branch,
//! residual branch and the deconvolution ablation upsampler.

use lf_autodiff::{kaiming_init, Binding, FanMode, ParamStore, Scalar, Tape, Tensor, Var};
use lf_core::PlaneKind;

use crate::config::{MdfnConfig, Upsampler};
use crate::dynamic::apply_dynamic_filters;
use crate::error::Result;

pub const PRELU_INIT: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Kaiming(FanMode),
    Zeros,
    Const(f64),
}

/// Name, shape and initializer of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    fn new(name: String, shape: Vec<usize>, init: Init) -> Self {
        ParamSpec { name, shape, init }
    }

    pub fn count(&self) -> usize {
        self.shape.iter().product()
    }
}

pub fn branch_tag(kind: PlaneKind) -> &'static str {
    match kind {
        PlaneKind::Sai => "sai",
        PlaneKind::MicroLens => "mla",
        PlaneKind::EpiHorizontal => "epih",
        PlaneKind::EpiVertical => "epiv",
    }
}

fn conv(out: &mut Vec<ParamSpec>, prefix: &str, cout: usize, cin: usize, k: usize, mode: FanMode) {
    out.push(ParamSpec::new(format!("{prefix}.weight"), vec![cout, cin, k, k], Init::Kaiming(mode)));
    out.push(ParamSpec::new(format!("{prefix}.bias"), vec![cout], Init::Zeros));
}

/// Every parameter of the configured network, in binding order.
pub fn param_specs(cfg: &MdfnConfig) -> Vec<ParamSpec> {
    let mut s = Vec::new();
    let cb = cfg.branch_channels();
    for i in 0..cfg.n {
        let cin = if i == 0 { 1 } else { cfg.c };
        for &kind in cfg.variant.branches() {
            let prefix = format!("mdfb.{i}.{}", branch_tag(kind));
            conv(&mut s, &prefix, cb, cin, cfg.branch_kernel, FanMode::FanIn);
            s.push(ParamSpec::new(format!("{prefix}.prelu"), vec![cb], Init::Const(PRELU_INIT)));
        }
    }
    match cfg.upsampler {
        Upsampler::DynamicFilter => {
            conv(&mut s, "dfb.conv1", cfg.r * cfg.r * cfg.dfb_mid_channels, cfg.c, 1, FanMode::FanIn);
            conv(&mut s, "dfb.conv2", cfg.d * cfg.d, cfg.dfb_mid_channels, 1, FanMode::FanIn);
        }
        Upsampler::Deconvolution => {
            s.push(ParamSpec::new("up.deconv.weight".into(), vec![cfg.c, 1, 2 * cfg.r, 2 * cfg.r], Init::Kaiming(FanMode::FanOut)));
            s.push(ParamSpec::new("up.deconv.bias".into(), vec![1], Init::Zeros));
        }
    }
    conv(&mut s, "rb.conv1", cfg.rb_mid_channels, cfg.c, 1, FanMode::FanIn);
    s.push(ParamSpec::new("rb.prelu".into(), vec![cfg.rb_mid_channels], Init::Const(PRELU_INIT)));
    conv(&mut s, "rb.conv2", cfg.r * cfg.r, cfg.rb_mid_channels, 1, FanMode::FanIn);
    s
}

/// Freshly initialized parameters; tensor `k` of the spec list draws from
/// seed `cfg.seed` mixed with `k`.
pub fn init_params<T: Scalar>(cfg: &MdfnConfig) -> Result<ParamStore<T>> {
    cfg.validate()?;
    let mut store = ParamStore::new();
    for (k, spec) in param_specs(cfg).into_iter().enumerate() {
        let n = spec.count();
        let t = match spec.init {
            Init::Kaiming(mode) => {
                let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
                kaiming_init(&spec.shape, mode, seed)?
            }
            Init::Zeros => Tensor::zeros(spec.shape.clone()),
            Init::Const(v) => Tensor::new(spec.shape.clone(), vec![T::from_f64_lossy(v); n])?,
        };
        store.insert(spec.name, t)?;
    }
    Ok(store)
}

/// Drops `v` when running without gradient recording.
fn release<T: Scalar>(tape: &mut Tape<T>, v: Var) {
    if !tape.is_recording() {
        tape.free(v);
    }
}

/// Axis order that brings a `(U, V, C, X, Y)` field into `kind`'s
/// `(batch_major, batch_minor, C, row, col)` arrangement.
pub fn fold_permutation(kind: PlaneKind) -> [usize; 5] {
    const AXIS: [usize; 4] = [0, 1, 3, 4];
    let (b, i) = kind.axes();
    [AXIS[b[0]], AXIS[b[1]], 2, AXIS[i[0]], AXIS[i[1]]]
}

fn invert(perm: [usize; 5]) -> [usize; 5] {
    let mut inv = [0; 5];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// One branch: fold, `k x k` convolution with PReLU, unfold.
fn branch<T: Scalar>(tape: &mut Tape<T>, f: Var, p: &Binding, prefix: &str, kind: PlaneKind, k: usize) -> Result<Var> {
    let perm = fold_permutation(kind);
    let folded = if perm == [0, 1, 2, 3, 4] { f } else { tape.permute(f, &perm)? };
    let s = tape.shape(folded).to_vec();
    let flat = tape.reshape(folded, vec![s[0] * s[1], s[2], s[3], s[4]])?;
    if folded != f {
        release(tape, folded);
    }
    let y = tape.conv2d(flat, p.get(&format!("{prefix}.weight"))?, p.get(&format!("{prefix}.bias"))?, (k / 2, k / 2))?;
    release(tape, flat);
    let a = tape.prelu(y, p.get(&format!("{prefix}.prelu"))?)?;
    release(tape, y);
    let cb = tape.shape(a)[1];
    let planes = tape.reshape(a, vec![s[0], s[1], cb, s[3], s[4]])?;
    release(tape, a);
    let inv = invert(perm);
    if inv == [0, 1, 2, 3, 4] {
        return Ok(planes);
    }
    let out = tape.permute(planes, &inv)?;
    release(tape, planes);
    Ok(out)
}

/// Fusion block `block` on a `(U, V, C, X, Y)` feature field.
pub fn mdfb_forward<T: Scalar>(tape: &mut Tape<T>, f: Var, p: &Binding, cfg: &MdfnConfig, block: usize) -> Result<Var> {
    let mut outs = Vec::with_capacity(4);
    for &kind in cfg.variant.branches() {
        let prefix = format!("mdfb.{block}.{}", branch_tag(kind));
        outs.push(branch(tape, f, p, &prefix, kind, cfg.branch_kernel)?);
    }
    let out = tape.concat(&outs, 2)?;
    for v in outs {
        release(tape, v);
    }
    Ok(out)
}

/// Stacked fusion blocks on a `(U, V, X, Y)` luma field; returns `(U, V, c, X, Y)`.
pub fn mdfn_features<T: Scalar>(tape: &mut Tape<T>, lr: Var, p: &Binding, cfg: &MdfnConfig) -> Result<Var> {
    let s = tape.shape(lr).to_vec();
    let mut f = tape.reshape(lr, vec![s[0], s[1], 1, s[2], s[3]])?;
    for block in 0..cfg.n {
        let next = mdfb_forward(tape, f, p, cfg, block)?;
        release(tape, f);
        f = next;
    }
    Ok(f)
}

/// Views as a batch: `(U, V, c, X, Y)` -> `(U*V, c, X, Y)`.
fn per_view<T: Scalar>(tape: &mut Tape<T>, f: Var) -> Result<(Var, [usize; 5])> {
    let s = tape.shape(f).to_vec();
    let dims = [s[0], s[1], s[2], s[3], s[4]];
    Ok((tape.reshape(f, vec![s[0] * s[1], s[2], s[3], s[4]])?, dims))
}

fn pointwise<T: Scalar>(tape: &mut Tape<T>, x: Var, p: &Binding, prefix: &str) -> Result<Var> {
    Ok(tape.conv2d(x, p.get(&format!("{prefix}.weight"))?, p.get(&format!("{prefix}.bias"))?, (0, 0))?)
}

/// Filter field `(U, V, rX, rY, d, d)`, softmax-normalized over the taps.
pub fn dfb_forward<T: Scalar>(tape: &mut Tape<T>, f: Var, p: &Binding, cfg: &MdfnConfig) -> Result<Var> {
    let (x, [u, v, _, xs, ys]) = per_view(tape, f)?;
    let h = pointwise(tape, x, p, "dfb.conv1")?;
    let up = tape.pixel_shuffle(h, cfg.r)?;
    release(tape, h);
    let logits = pointwise(tape, up, p, "dfb.conv2")?;
    release(tape, up);
    let w = tape.softmax(logits, 1)?;
    release(tape, logits);
    let taps_last = tape.permute(w, &[0, 2, 3, 1])?;
    release(tape, w);
    let (rx, ry) = (cfg.r * xs, cfg.r * ys);
    Ok(tape.reshape(taps_last, vec![u, v, rx, ry, cfg.d, cfg.d])?)
}

/// High-frequency residual `(U, V, rX, rY)`.
pub fn rb_forward<T: Scalar>(tape: &mut Tape<T>, f: Var, p: &Binding, cfg: &MdfnConfig) -> Result<Var> {
    let (x, [u, v, _, xs, ys]) = per_view(tape, f)?;
    let h = pointwise(tape, x, p, "rb.conv1")?;
    let a = tape.prelu(h, p.get("rb.prelu")?)?;
    release(tape, h);
    let o = pointwise(tape, a, p, "rb.conv2")?;
    release(tape, a);
    let up = tape.pixel_shuffle(o, cfg.r)?;
    release(tape, o);
    Ok(tape.reshape(up, vec![u, v, cfg.r * xs, cfg.r * ys])?)
}

/// Ablation upsampler: per-view transposed convolution `c -> 1`, kernel
/// `2r`, stride `r`, padding `r/2`.
pub fn deconv_forward<T: Scalar>(tape: &mut Tape<T>, f: Var, p: &Binding, cfg: &MdfnConfig) -> Result<Var> {
    let (x, [u, v, _, xs, ys]) = per_view(tape, f)?;
    let y = tape.conv_transpose2d(x, p.get("up.deconv.weight")?, p.get("up.deconv.bias")?, cfg.r, cfg.r / 2)?;
    Ok(tape.reshape(y, vec![u, v, cfg.r * xs, cfg.r * ys])?)
}

/// Upsampled base image from the features and the LR input.
pub fn upsample_forward<T: Scalar>(tape: &mut Tape<T>, features: Var, lr: Var, p: &Binding, cfg: &MdfnConfig) -> Result<Var> {
    match cfg.upsampler {
        Upsampler::DynamicFilter => {
            let filters = dfb_forward(tape, features, p, cfg)?;
            let out = apply_dynamic_filters(tape, filters, lr)?;
            release(tape, filters);
            Ok(out)
        }
        Upsampler::Deconvolution => deconv_forward(tape, features, p, cfg),
    }
}

/// Full network: `(U, V, X, Y)` luma -> `(U, V, rX, rY)`.
pub fn forward<T: Scalar>(tape: &mut Tape<T>, lr: Var, p: &Binding, cfg: &MdfnConfig) -> Result<Var> {
    let features = mdfn_features(tape, lr, p, cfg)?;
    let base = upsample_forward(tape, features, lr, p, cfg)?;
    let residual = rb_forward(tape, features, p, cfg)?;
    release(tape, features);
    let out = tape.add(base, residual)?;
    release(tape, base);
    release(tape, residual);
    Ok(out)
}

/// Convenience wrapper pushing a `ParamStore` and running [`forward`].
pub fn forward_with<T: Scalar>(tape: &mut Tape<T>, lr: Var, params: &ParamStore<T>, cfg: &MdfnConfig) -> Result<(Var, Binding)> {
    let binding = params.bind(tape);
    let out = forward(tape, lr, &binding, cfg)?;
    Ok((out, binding))
}

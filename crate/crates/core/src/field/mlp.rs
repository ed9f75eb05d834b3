//! Fully connected networks for the position and direction functions.
//!
//! Coefficients are `f32`. Single-point evaluation runs a column-major
//! accumulate loop; batches go through `sgemm`.

use std::path::Path;

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoding::{encode_into, encoded_len, EncodingConfig};
use crate::container::{self, Payload};
use crate::error::{Error, Result};
use crate::geometry::Aabb;

const WEIGHTS_MAGIC: &[u8; 8] = b"RCWGHTS\0";
/// Batches up to this size skip the packed matrix product.
const SMALL_BATCH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

/// `y = act(W x + b)` with `W` stored row-major as `[outputs][inputs]`.
#[derive(Clone, Debug)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
    // [inputs][outputs] copy for the single-point accumulate loop.
    columns: Vec<f32>,
    abs_weights: Vec<f32>,
}

impl PartialEq for DenseLayer {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.activation == other.activation
            && self.weights == other.weights
            && self.bias == other.bias
    }
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::dims(inputs * outputs, weights.len()));
        }
        if bias.len() != outputs {
            return Err(Error::dims(outputs, bias.len()));
        }
        let mut columns = vec![0.0; weights.len()];
        for o in 0..outputs {
            for i in 0..inputs {
                columns[i * outputs + o] = weights[o * inputs + i];
            }
        }
        let abs_weights = weights.iter().map(|w| w.abs()).collect();
        Ok(DenseLayer {
            inputs,
            outputs,
            weights,
            bias,
            activation,
            columns,
            abs_weights,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    fn forward(&self, x: &[f32]) -> Vec<f32> {
        let mut y = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let col = &self.columns[i * self.outputs..(i + 1) * self.outputs];
            for (yo, w) in y.iter_mut().zip(col) {
                *yo += xi * w;
            }
        }
        if self.activation == Activation::Relu {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        y
    }

    /// Column-at-a-time accumulation; each weight column is read once per
    /// batch.
    fn axpy_batch(&self, x: &[f32], n: usize) -> Vec<f32> {
        let mut y = Vec::with_capacity(n * self.outputs);
        for _ in 0..n {
            y.extend_from_slice(&self.bias);
        }
        for (i, col) in self.columns.chunks_exact(self.outputs).enumerate() {
            for (row, yr) in y.chunks_exact_mut(self.outputs).enumerate() {
                let xi = x[row * self.inputs + i];
                if xi != 0.0 {
                    for (yo, w) in yr.iter_mut().zip(col) {
                        *yo += xi * w;
                    }
                }
            }
        }
        y
    }

    /// `out = x W^T (+ bias)` for `n` row-major input rows.
    fn gemm(&self, x: &[f32], n: usize, weights: &[f32], bias: Option<&[f32]>) -> Vec<f32> {
        let mut out = vec![0.0f32; n * self.outputs];
        if let Some(b) = bias {
            for row in out.chunks_exact_mut(self.outputs) {
                row.copy_from_slice(b);
            }
        }
        if n == 0 {
            return out;
        }
        // SAFETY: the slices hold n*inputs, outputs*inputs and n*outputs
        // elements, matching the dimensions and strides passed.
        unsafe {
            matrixmultiply::sgemm(
                n,
                self.inputs,
                self.outputs,
                1.0,
                x.as_ptr(),
                self.inputs as isize,
                1,
                weights.as_ptr(),
                1,
                self.inputs as isize,
                1.0,
                out.as_mut_ptr(),
                self.outputs as isize,
                1,
            );
        }
        out
    }

    fn forward_batch(&self, x: &[f32], n: usize) -> Vec<f32> {
        let mut y = if n <= SMALL_BATCH {
            self.axpy_batch(x, n)
        } else {
            self.gemm(x, n, &self.weights, Some(&self.bias))
        };
        if self.activation == Activation::Relu {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        y
    }

    /// Interval propagation in center/radius form. The radius is inflated by
    /// a rounding allowance proportional to the magnitude of the summed terms
    /// so the bound also covers `f32` evaluation error.
    fn bound_batch(&self, center: &[f32], radius: &[f32], n: usize) -> (Vec<f32>, Vec<f32>) {
        let c = self.gemm(center, n, &self.weights, Some(&self.bias));
        let mut r = self.gemm(radius, n, &self.abs_weights, None);
        let magnitude: Vec<f32> = center.iter().zip(radius).map(|(c, r)| c.abs() + r).collect();
        let abs_bias: Vec<f32> = self.bias.iter().map(|b| b.abs()).collect();
        let m = self.gemm(&magnitude, n, &self.abs_weights, Some(&abs_bias));
        let gamma = 2.0 * (self.inputs as f32 + 2.0) * f32::EPSILON;
        for (ri, mi) in r.iter_mut().zip(&m) {
            *ri += gamma * mi;
        }
        let (mut c, mut r) = (c, r);
        if self.activation == Activation::Relu {
            for (ci, ri) in c.iter_mut().zip(r.iter_mut()) {
                let lo = (*ci - *ri).max(0.0);
                let hi = (*ci + *ri).max(0.0);
                *ci = 0.5 * (lo + hi);
                *ri = 0.5 * (hi - lo);
            }
        }
        (c, r)
    }
}

/// A chain of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::parse("network has no layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::parse(format!(
                    "layer chain broken: {} outputs feed {} inputs",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn forward(&self, input: &[f32]) -> Vec<f32> {
        let mut x = self.layers[0].forward(input);
        for layer in &self.layers[1..] {
            x = layer.forward(&x);
        }
        x
    }

    pub fn forward_batch(&self, input: &[f32], n: usize) -> Vec<f32> {
        let mut x = self.layers[0].forward_batch(input, n);
        for layer in &self.layers[1..] {
            x = layer.forward_batch(&x, n);
        }
        x
    }

    fn bound_batch(&self, center: &[f32], radius: &[f32], n: usize) -> (Vec<f32>, Vec<f32>) {
        let (mut c, mut r) = self.layers[0].bound_batch(center, radius, n);
        for layer in &self.layers[1..] {
            (c, r) = layer.bound_batch(&c, &r, n);
        }
        (c, r)
    }
}

/// Shape of a position/direction network pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub components: usize,
    pub position_layers: usize,
    pub position_width: usize,
    pub direction_layers: usize,
    pub direction_width: usize,
    pub encoding: EncodingConfig,
}

impl Default for MlpArchitecture {
    /// Eight 384-wide position layers, four 128-wide direction layers,
    /// eight components.
    fn default() -> Self {
        MlpArchitecture {
            components: 8,
            position_layers: 8,
            position_width: 384,
            direction_layers: 4,
            direction_width: 128,
            encoding: EncodingConfig::default(),
        }
    }
}

/// Density structure for [`MlpWeights::synthetic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportShape {
    /// Density comes out of the same random trunk as everything else.
    Unbounded,
    /// `σ = s · max(0, ρ − Σᵢ |sin pᵢ|)`, carried by six dedicated hidden
    /// units per layer that no random unit feeds into. The remaining units
    /// are random and drive the radiance components.
    Octahedron { radius: f64, density_scale: f64 },
}

/// Weights for both networks plus the metadata needed to evaluate them.
///
/// The position network maps the encoded position to
/// `[σ, u₁, v₁, w₁, …, u_D, v_D, w_D]`; σ goes through `max(0, ·)` at
/// evaluation. The direction network maps the encoded unit vector to `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpWeights {
    components: usize,
    encoding: EncodingConfig,
    position: Mlp,
    direction: Mlp,
}

#[derive(Serialize, Deserialize)]
struct LayerHeader {
    inputs: usize,
    outputs: usize,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct WeightsHeader {
    components: usize,
    encoding: EncodingConfig,
    position: Vec<LayerHeader>,
    direction: Vec<LayerHeader>,
}

impl MlpWeights {
    pub fn new(components: usize, encoding: EncodingConfig, position: Mlp, direction: Mlp) -> Result<Self> {
        if components == 0 {
            return Err(Error::parse("component count must be at least 1"));
        }
        let checks = [
            ("position input", encoded_len(3, encoding.l_pos), position.inputs()),
            ("position output", 1 + 3 * components, position.outputs()),
            ("direction input", encoded_len(3, encoding.l_dir), direction.inputs()),
            ("direction output", components, direction.outputs()),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(Error::parse(format!(
                    "{what} width {found} does not match declared D={components} / encoding (expected {expected})"
                )));
            }
        }
        Ok(MlpWeights {
            components,
            encoding,
            position,
            direction,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn encoding(&self) -> EncodingConfig {
        self.encoding
    }

    pub fn position(&self) -> &Mlp {
        &self.position
    }

    pub fn direction(&self) -> &Mlp {
        &self.direction
    }

    fn encode_f32(v: DVec3, bands: u32, out: &mut [f32]) {
        let mut tmp = vec![0.0f64; out.len()];
        encode_into(&v.to_array(), bands, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o = *t as f32;
        }
    }

    fn position_row(out: &[f32], row: &mut [f64]) {
        row[0] = out[0].max(0.0) as f64;
        for (r, o) in row[1..].iter_mut().zip(&out[1..]) {
            *r = *o as f64;
        }
    }

    pub(crate) fn eval_pos_into(&self, p: DVec3, row: &mut [f64]) {
        let mut input = vec![0.0f32; self.position.inputs()];
        Self::encode_f32(p, self.encoding.l_pos, &mut input);
        let out = self.position.forward(&input);
        Self::position_row(&out, row);
    }

    pub(crate) fn eval_pos_batch(&self, points: &[DVec3], out: &mut Vec<f64>) {
        let width_in = self.position.inputs();
        let width_out = self.position.outputs();
        let mut input = vec![0.0f32; points.len() * width_in];
        for (p, row) in points.iter().zip(input.chunks_exact_mut(width_in)) {
            Self::encode_f32(*p, self.encoding.l_pos, row);
        }
        let raw = self.position.forward_batch(&input, points.len());
        out.resize(points.len() * width_out, 0.0);
        for (src, dst) in raw.chunks_exact(width_out).zip(out.chunks_exact_mut(width_out)) {
            Self::position_row(src, dst);
        }
    }

    pub(crate) fn eval_dir(&self, d: DVec3) -> Vec<f64> {
        let mut input = vec![0.0f32; self.direction.inputs()];
        Self::encode_f32(d, self.encoding.l_dir, &mut input);
        self.direction.forward(&input).into_iter().map(f64::from).collect()
    }

    pub(crate) fn eval_dir_batch(&self, dirs: &[DVec3], out: &mut Vec<f64>) {
        let width_in = self.direction.inputs();
        let mut input = vec![0.0f32; dirs.len() * width_in];
        for (d, row) in dirs.iter().zip(input.chunks_exact_mut(width_in)) {
            Self::encode_f32(*d, self.encoding.l_dir, row);
        }
        out.extend(
            self.direction
                .forward_batch(&input, dirs.len())
                .into_iter()
                .map(f64::from),
        );
    }

    /// Sound upper bounds on σ over each region by interval propagation.
    pub(crate) fn density_upper_bounds(&self, regions: &[Aabb]) -> Vec<Option<f64>> {
        let width_in = self.position.inputs();
        let n = regions.len();
        let mut center = vec![0.0f32; n * width_in];
        let mut radius = vec![0.0f32; n * width_in];
        for (k, region) in regions.iter().enumerate() {
            let c = &mut center[k * width_in..(k + 1) * width_in];
            let r = &mut radius[k * width_in..(k + 1) * width_in];
            encode_interval(region, self.encoding.l_pos, c, r);
        }
        let (c, r) = self.position.bound_batch(&center, &radius, n);
        let w = self.position.outputs();
        (0..n)
            .map(|k| {
                let hi = c[k * w] as f64 + r[k * w] as f64;
                Some(hi.max(0.0))
            })
            .collect()
    }

    /// Deterministic synthetic weights for a given architecture. Hidden
    /// layers use He-uniform initialization.
    pub fn synthetic(arch: &MlpArchitecture, support: SupportShape, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = arch.components;
        let pos_in = encoded_len(3, arch.encoding.l_pos);
        let dir_in = encoded_len(3, arch.encoding.l_dir);
        if arch.position_layers == 0 || arch.direction_layers == 0 {
            return Err(Error::InvalidArgument("networks need at least one hidden layer".into()));
        }
        let geometry = matches!(support, SupportShape::Octahedron { .. });
        if geometry && arch.position_width < 7 {
            return Err(Error::InvalidArgument("octahedron support needs width >= 7".into()));
        }
        const GEO: usize = 6;

        let mut pos_layers = Vec::new();
        let mut fan_in = pos_in;
        for layer in 0..arch.position_layers {
            let out = arch.position_width;
            let (mut w, b) = random_layer(&mut rng, fan_in, out, (6.0 / fan_in as f64).sqrt(), 0.05);
            if geometry {
                for g in 0..GEO {
                    w[g * fan_in..(g + 1) * fan_in].fill(0.0);
                    if layer == 0 {
                        // ±sin(p_axis): band-0 sines (or raw inputs) sit at 0..3.
                        let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
                        w[g * fan_in + g / 2] = sign;
                    } else {
                        w[g * fan_in + g] = 1.0;
                    }
                }
            }
            let mut b = b;
            if geometry {
                b[..GEO].fill(0.0);
            }
            pos_layers.push(DenseLayer::new(fan_in, out, w, b, Activation::Relu)?);
            fan_in = out;
        }
        let out_width = 1 + 3 * d;
        let (mut w, mut b) = random_layer(&mut rng, fan_in, out_width, (3.0 / fan_in as f64).sqrt() * 0.5, 0.0);
        for v in b[1..].iter_mut() {
            *v = 0.5 / d as f32;
        }
        match support {
            SupportShape::Unbounded => b[0] = 1.0,
            SupportShape::Octahedron { radius, density_scale } => {
                w[..fan_in].fill(0.0);
                w[..GEO].fill(-density_scale as f32);
                b[0] = (density_scale * radius) as f32;
            }
        }
        pos_layers.push(DenseLayer::new(fan_in, out_width, w, b, Activation::Identity)?);

        let mut dir_layers = Vec::new();
        let mut fan_in = dir_in;
        for _ in 0..arch.direction_layers {
            let (w, b) = random_layer(
                &mut rng,
                fan_in,
                arch.direction_width,
                (6.0 / fan_in as f64).sqrt(),
                0.05,
            );
            dir_layers.push(DenseLayer::new(fan_in, arch.direction_width, w, b, Activation::Relu)?);
            fan_in = arch.direction_width;
        }
        let (w, mut b) = random_layer(&mut rng, fan_in, d, (3.0 / fan_in as f64).sqrt() * 0.5, 0.0);
        b.fill(1.0);
        dir_layers.push(DenseLayer::new(fan_in, d, w, b, Activation::Identity)?);

        MlpWeights::new(d, arch.encoding, Mlp::new(pos_layers)?, Mlp::new(dir_layers)?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let describe = |m: &Mlp| {
            m.layers
                .iter()
                .map(|l| LayerHeader {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    activation: l.activation,
                })
                .collect()
        };
        let header = WeightsHeader {
            components: self.components,
            encoding: self.encoding,
            position: describe(&self.position),
            direction: describe(&self.direction),
        };
        let mut payload = Vec::new();
        for layer in self.position.layers.iter().chain(&self.direction.layers) {
            payload.extend_from_slice(&layer.weights);
            payload.extend_from_slice(&layer.bias);
        }
        container::encode(WEIGHTS_MAGIC, &header, &Payload::F32(payload))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, payload): (WeightsHeader, _) = container::decode(bytes, WEIGHTS_MAGIC)?;
        let Payload::F32(payload) = payload else {
            return Err(Error::parse("weights payload must be f32"));
        };
        let mut cursor = 0usize;
        let mut take_net = |layers: &[LayerHeader]| -> Result<Mlp> {
            let mut out = Vec::with_capacity(layers.len());
            for l in layers {
                let nw = l
                    .inputs
                    .checked_mul(l.outputs)
                    .ok_or_else(|| Error::parse("layer too large"))?;
                let end = cursor + nw + l.outputs;
                if end > payload.len() {
                    return Err(Error::parse("payload shorter than declared layers"));
                }
                let w = payload[cursor..cursor + nw].to_vec();
                let b = payload[cursor + nw..end].to_vec();
                cursor = end;
                out.push(DenseLayer::new(l.inputs, l.outputs, w, b, l.activation)?);
            }
            Mlp::new(out)
        };
        let position = take_net(&header.position)?;
        let direction = take_net(&header.direction)?;
        if cursor != payload.len() {
            return Err(Error::parse("payload longer than declared layers"));
        }
        MlpWeights::new(header.components, header.encoding, position, direction)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn random_layer(
    rng: &mut ChaCha8Rng,
    fan_in: usize,
    fan_out: usize,
    w_scale: f64,
    b_scale: f64,
) -> (Vec<f32>, Vec<f32>) {
    let w = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-w_scale..=w_scale) as f32)
        .collect();
    let b = (0..fan_out)
        .map(|_| {
            if b_scale > 0.0 {
                rng.random_range(-b_scale..=b_scale) as f32
            } else {
                0.0
            }
        })
        .collect();
    (w, b)
}

/// Center/radius of the encoding of every point in `region`.
fn encode_interval(region: &Aabb, bands: u32, center: &mut [f32], radius: &mut [f32]) {
    let set = |center: &mut [f32], radius: &mut [f32], i: usize, lo: f64, hi: f64| {
        center[i] = (0.5 * (lo + hi)) as f32;
        // Covers the f64 -> f32 rounding of both the center and the encoded value.
        radius[i] = (0.5 * (hi - lo) + 1e-6 * (1.0 + lo.abs().max(hi.abs()))) as f32;
    };
    if bands == 0 {
        for a in 0..3 {
            set(center, radius, a, region.min[a], region.max[a]);
        }
        return;
    }
    for j in 0..bands {
        let scale = (1u64 << j) as f64;
        let base = 6 * j as usize;
        for a in 0..3 {
            let (lo, hi) = (scale * region.min[a], scale * region.max[a]);
            let (smin, smax) = sin_range(lo, hi);
            set(center, radius, base + a, smin, smax);
            let (cmin, cmax) = sin_range(lo + std::f64::consts::FRAC_PI_2, hi + std::f64::consts::FRAC_PI_2);
            set(center, radius, base + 3 + a, cmin, cmax);
        }
    }
}

/// Range of `sin` over `[lo, hi]`.
fn sin_range(lo: f64, hi: f64) -> (f64, f64) {
    use std::f64::consts::{FRAC_PI_2, TAU};
    if hi - lo >= TAU {
        return (-1.0, 1.0);
    }
    let (a, b) = (lo.sin(), hi.sin());
    let mut min = a.min(b);
    let mut max = a.max(b);
    // First crest / trough at or after lo.
    let crest = FRAC_PI_2 + TAU * ((lo - FRAC_PI_2) / TAU).ceil();
    if crest <= hi {
        max = 1.0;
    }
    let trough = -FRAC_PI_2 + TAU * ((lo + FRAC_PI_2) / TAU).ceil();
    if trough <= hi {
        min = -1.0;
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_packed_products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (k, m) = (37, 21);
        let w: Vec<f32> = (0..k * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f32> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let layer = DenseLayer::new(k, m, w.clone(), b.clone(), Activation::Identity).unwrap();
        for n in [1, 3, SMALL_BATCH] {
            let x: Vec<f32> = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let small = layer.axpy_batch(&x, n);
            let packed = layer.gemm(&x, n, &w, Some(&b));
            for (a, p) in small.iter().zip(&packed) {
                assert!((a - p).abs() <= 1e-5, "{n}: {a} vs {p}");
            }
        }
    }

    fn tiny_arch() -> MlpArchitecture {
        MlpArchitecture {
            components: 3,
            position_layers: 3,
            position_width: 16,
            direction_layers: 2,
            direction_width: 8,
            encoding: EncodingConfig { l_pos: 4, l_dir: 2 },
        }
    }

    /// Straight-line f64 re-derivation from the stored row-major weights.
    fn dense_oracle(mlp: &Mlp, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for l in mlp.layers() {
            let mut y = vec![0.0f64; l.outputs()];
            for o in 0..l.outputs() {
                let mut acc = l.bias()[o] as f64;
                for i in 0..l.inputs() {
                    acc += l.weights()[o * l.inputs() + i] as f64 * x[i];
                }
                y[o] = match l.activation() {
                    Activation::Relu => acc.max(0.0),
                    Activation::Identity => acc,
                };
            }
            x = y;
        }
        x
    }

    #[test]
    fn position_matches_matmul_oracle() {
        let w = MlpWeights::synthetic(&tiny_arch(), SupportShape::Unbounded, 9).unwrap();
        let p = DVec3::new(0.1, 0.2, 0.3);
        let mut row = vec![0.0; 1 + 3 * 3];
        w.eval_pos_into(p, &mut row);
        let enc: Vec<f64> = crate::field::encode(&[0.1, 0.2, 0.3], 4)
            .into_iter()
            .map(|v| v as f32 as f64)
            .collect();
        let expected = dense_oracle(w.position(), &enc);
        assert!((row[0] - expected[0].max(0.0)).abs() < 1e-5);
        for i in 1..row.len() {
            assert!(
                (row[i] - expected[i]).abs() < 1e-5,
                "{i}: {} vs {}",
                row[i],
                expected[i]
            );
        }
    }

    #[test]
    fn direction_matches_matmul_oracle() {
        let w = MlpWeights::synthetic(&tiny_arch(), SupportShape::Unbounded, 9).unwrap();
        let d = DVec3::new(0.0, 0.6, 0.8);
        let beta = w.eval_dir(d);
        let enc: Vec<f64> = crate::field::encode(&d.to_array(), 2)
            .into_iter()
            .map(|v| v as f32 as f64)
            .collect();
        let expected = dense_oracle(w.direction(), &enc);
        for (a, b) in beta.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn batch_agrees_with_single() {
        let w = MlpWeights::synthetic(&tiny_arch(), SupportShape::Unbounded, 2).unwrap();
        let pts: Vec<DVec3> = (0..37).map(|i| DVec3::new(i as f64 * 0.05 - 1.0, 0.3, -0.2)).collect();
        let mut batch = Vec::new();
        w.eval_pos_batch(&pts, &mut batch);
        let mut row = vec![0.0; 10];
        for (p, b) in pts.iter().zip(batch.chunks_exact(10)) {
            w.eval_pos_into(*p, &mut row);
            for (x, y) in row.iter().zip(b) {
                assert!((x - y).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn interval_bound_is_sound() {
        let arch = tiny_arch();
        for support in [
            SupportShape::Unbounded,
            SupportShape::Octahedron {
                radius: 0.4,
                density_scale: 50.0,
            },
        ] {
            let w = MlpWeights::synthetic(&arch, support, 4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let regions: Vec<Aabb> = (0..50)
                .map(|_| {
                    let c = DVec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    Aabb::new(c, c + DVec3::splat(0.08)).unwrap()
                })
                .collect();
            let bounds = w.density_upper_bounds(&regions);
            let mut row = vec![0.0; 10];
            for (region, bound) in regions.iter().zip(bounds) {
                let bound = bound.unwrap();
                for _ in 0..40 {
                    let t = DVec3::new(rng.random(), rng.random(), rng.random());
                    let p = region.min + t * region.extent();
                    w.eval_pos_into(p, &mut row);
                    assert!(row[0] <= bound + 1e-9, "{} > {}", row[0], bound);
                }
            }
        }
    }

    #[test]
    fn octahedron_bound_culls_far_regions() {
        let w = MlpWeights::synthetic(
            &tiny_arch(),
            SupportShape::Octahedron {
                radius: 0.3,
                density_scale: 100.0,
            },
            4,
        )
        .unwrap();
        let far = Aabb::new(DVec3::splat(0.6), DVec3::splat(0.7)).unwrap();
        let near = Aabb::new(DVec3::splat(-0.05), DVec3::splat(0.05)).unwrap();
        assert_eq!(w.density_upper_bounds(&[far])[0], Some(0.0));
        assert!(w.density_upper_bounds(&[near])[0].unwrap() > 0.0);
        let mut row = vec![0.0; 10];
        w.eval_pos_into(DVec3::ZERO, &mut row);
        assert!((row[0] - 30.0).abs() < 1e-3);
    }

    #[test]
    fn sin_range_cases() {
        assert_eq!(sin_range(0.0, 7.0), (-1.0, 1.0));
        let (lo, hi) = sin_range(0.0, 2.0);
        assert_eq!((lo, hi), (0.0, 1.0));
        let (lo, hi) = sin_range(-0.5, 0.5);
        assert!((lo + 0.5f64.sin()).abs() < 1e-15 && (hi - 0.5f64.sin()).abs() < 1e-15);
        let (lo, _) = sin_range(4.0, 5.0);
        assert_eq!(lo, -1.0);
    }

    #[test]
    fn save_load_round_trip_is_bit_identical() {
        let w = MlpWeights::synthetic(&tiny_arch(), SupportShape::Unbounded, 1).unwrap();
        let bytes = w.to_bytes().unwrap();
        let back = MlpWeights::from_bytes(&bytes).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let w = MlpWeights::synthetic(&tiny_arch(), SupportShape::Unbounded, 1).unwrap();
        let bytes = w.to_bytes().unwrap();
        for cut in [3, 20, bytes.len() - 1] {
            assert!(matches!(MlpWeights::from_bytes(&bytes[..cut]), Err(Error::Parse(_))));
        }
    }

    #[test]
    fn mismatched_final_width_is_parse_error() {
        let w = MlpWeights::synthetic(&tiny_arch(), SupportShape::Unbounded, 1).unwrap();
        let bytes = w.to_bytes().unwrap();
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[16..16 + header_len]).unwrap();
        let edited = header.replacen("\"components\":3", "\"components\":4", 1);
        assert_eq!(edited.len(), header.len());
        let mut bad = bytes.clone();
        bad[16..16 + header_len].copy_from_slice(edited.as_bytes());
        assert!(matches!(MlpWeights::from_bytes(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn broken_chain_rejected() {
        let a = DenseLayer::new(2, 3, vec![0.0; 6], vec![0.0; 3], Activation::Relu).unwrap();
        let b = DenseLayer::new(4, 1, vec![0.0; 4], vec![0.0; 1], Activation::Identity).unwrap();
        assert!(matches!(Mlp::new(vec![a, b]), Err(Error::Parse(_))));
    }
}

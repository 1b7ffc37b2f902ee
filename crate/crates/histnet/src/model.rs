//! The residual U-Net: parameter layout, initialization and the forward
//! graph.

use spadsr_core::{DepthMap, FeatureSet, SplitMix64};

use crate::error::{NetError, Result};
use crate::tape::Tape;
use crate::tensor4::Tensor4;

/// Filter counts of the five encoder stages at full width.
pub const CANONICAL_WIDTHS: [usize; 5] = [64, 128, 256, 512, 1024];

/// One stored parameter tensor (f32, promoted to f64 during passes).
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// All trainable parameters, in a fixed construction order.
#[derive(Debug, Clone)]
pub struct Params {
    pub tensors: Vec<ParamTensor>,
}

impl Params {
    pub fn promote(&self) -> Vec<Vec<f64>> {
        self.tensors
            .iter()
            .map(|t| t.data.iter().map(|&v| v as f64).collect())
            .collect()
    }

    pub fn total_len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvRef {
    w: usize,
    b: usize,
    co: usize,
    k: usize,
}

#[derive(Debug, Clone, Copy)]
struct ConvTRef {
    w: usize,
    b: usize,
    co: usize,
}

/// Parameter indices of every layer; reconstructed deterministically from
/// the widths.
#[derive(Debug, Clone)]
struct Layout {
    enc: [(ConvRef, ConvRef); 5],
    guide: [ConvRef; 4],
    inten: [ConvRef; 4],
    dec_up: [ConvTRef; 4],
    dec: [(ConvRef, ConvRef); 4],
    out: ConvRef,
}

struct Builder {
    tensors: Vec<ParamTensor>,
}

impl Builder {
    fn conv(&mut self, name: &str, co: usize, ci: usize, k: usize) -> ConvRef {
        let w = self.push(format!("{name}_w"), vec![co, ci, k, k]);
        let b = self.push(format!("{name}_b"), vec![co]);
        ConvRef { w, b, co, k }
    }

    fn convt(&mut self, name: &str, ci: usize, co: usize) -> ConvTRef {
        let w = self.push(format!("{name}_w"), vec![ci, co, 3, 3]);
        let b = self.push(format!("{name}_b"), vec![co]);
        ConvTRef { w, b, co }
    }

    fn push(&mut self, name: String, shape: Vec<usize>) -> usize {
        let len = shape.iter().product();
        self.tensors.push(ParamTensor {
            name,
            shape,
            data: vec![0.0; len],
        });
        self.tensors.len() - 1
    }
}

/// Network inputs for a batch: the 2-channel main input (first and second
/// depth), the four single-channel multi-scale depth features, and the
/// single-channel intensity.
#[derive(Debug, Clone)]
pub struct NetInput {
    pub main: Tensor4,
    pub d: [Tensor4; 4],
    pub intensity: Tensor4,
}

impl NetInput {
    pub fn validate(&self) -> Result<()> {
        let (n, c, h, w) = self.main.shape();
        if c != 2 {
            return Err(shape("main input", format!("expected 2 channels, got {c}")));
        }
        if h % 16 != 0 || w % 16 != 0 {
            return Err(shape("main input", format!("dims {h}x{w} must divide by 16")));
        }
        if self.intensity.shape() != (n, 1, h, w) {
            return Err(shape(
                "intensity",
                format!("expected ({n},1,{h},{w}), got {:?}", self.intensity.shape()),
            ));
        }
        for (idx, d) in self.d.iter().enumerate() {
            let f = 2usize.pow(idx as u32 + 1);
            if d.shape() != (n, 1, h / f, w / f) {
                return Err(shape(
                    "depth feature",
                    format!(
                        "d{} expected ({n},1,{},{}), got {:?}",
                        idx + 1,
                        h / f,
                        w / f,
                        d.shape()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Assemble a single-item batch from a feature set.
    pub fn from_features(features: &FeatureSet) -> Result<Self> {
        features.validate()?;
        let (h, w) = features.target_dims();
        let mut main = Tensor4::zeros(1, 2, h, w);
        fill_plane(main.plane_mut(0, 0), features.first_depth.values());
        fill_plane(main.plane_mut(0, 1), features.second_depth.values());
        let d = [
            map_tensor(&features.d1),
            map_tensor(&features.d2),
            map_tensor(&features.d3),
            map_tensor(&features.d4),
        ];
        let (ih, iw) = features.intensity.dims();
        let mut intensity = Tensor4::zeros(1, 1, ih, iw);
        fill_plane(intensity.plane_mut(0, 0), features.intensity.values());
        let input = Self { main, d, intensity };
        input.validate()?;
        Ok(input)
    }

    /// The first-depth channel as its own `[N, 1, H, W]` tensor.
    pub fn first_depth_tensor(&self) -> Tensor4 {
        let (n, _, h, w) = self.main.shape();
        let mut out = Tensor4::zeros(n, 1, h, w);
        for nn in 0..n {
            out.plane_mut(nn, 0).copy_from_slice(self.main.plane(nn, 0));
        }
        out
    }

    /// Stack single-item inputs into one batch.
    pub fn stack(items: &[&NetInput]) -> Result<Self> {
        let first = items.first().ok_or(NetError::EmptyDataset)?;
        let total_n: usize = items.iter().map(|i| i.main.n).sum();
        let mut main = Tensor4::zeros(total_n, first.main.c, first.main.h, first.main.w);
        let mut intensity = Tensor4::zeros(
            total_n,
            1,
            first.intensity.h,
            first.intensity.w,
        );
        let mut d: Vec<Tensor4> = first
            .d
            .iter()
            .map(|t| Tensor4::zeros(total_n, 1, t.h, t.w))
            .collect();
        let mut at = 0;
        for item in items {
            if item.main.shape().1 != first.main.shape().1
                || (item.main.h, item.main.w) != (first.main.h, first.main.w)
            {
                return Err(shape("stack", "mixed item dims in one batch".into()));
            }
            for nn in 0..item.main.n {
                for cc in 0..item.main.c {
                    main.plane_mut(at + nn, cc).copy_from_slice(item.main.plane(nn, cc));
                }
                intensity
                    .plane_mut(at + nn, 0)
                    .copy_from_slice(item.intensity.plane(nn, 0));
                for k in 0..4 {
                    d[k].plane_mut(at + nn, 0).copy_from_slice(item.d[k].plane(nn, 0));
                }
            }
            at += item.main.n;
        }
        let d: [Tensor4; 4] = match d.try_into() {
            Ok(arr) => arr,
            Err(_) => unreachable!("built with 4 entries"),
        };
        Ok(Self { main, d, intensity })
    }
}

fn fill_plane(dst: &mut [f64], src: ndarray::ArrayView2<'_, f32>) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d = *s as f64;
    }
}

fn map_tensor(map: &DepthMap) -> Tensor4 {
    let (h, w) = map.dims();
    let mut t = Tensor4::zeros(1, 1, h, w);
    fill_plane(t.plane_mut(0, 0), map.values());
    t
}

fn shape(site: &'static str, detail: String) -> NetError {
    NetError::Shape { site, detail }
}

/// A training sample: network input plus ground truth at target resolution.
#[derive(Debug, Clone)]
pub struct Sample {
    pub input: NetInput,
    pub gt: Tensor4,
}

impl Sample {
    pub fn new(features: &FeatureSet, gt: &DepthMap) -> Result<Self> {
        let input = NetInput::from_features(features)?;
        if gt.dims() != features.target_dims() {
            return Err(shape(
                "sample",
                format!(
                    "ground truth {:?} vs target {:?}",
                    gt.dims(),
                    features.target_dims()
                ),
            ));
        }
        Ok(Self {
            input,
            gt: map_tensor(gt),
        })
    }
}

/// The network: width configuration plus parameters.
#[derive(Debug, Clone)]
pub struct HistNet {
    pub width_scale: f64,
    pub widths: [usize; 5],
    pub params: Params,
    layout: Layout,
}

impl HistNet {
    /// Scaled filter counts: `max(1, round(scale * canonical))`.
    pub fn scaled_widths(width_scale: f64) -> [usize; 5] {
        let mut widths = [0usize; 5];
        for (w, &c) in widths.iter_mut().zip(CANONICAL_WIDTHS.iter()) {
            *w = ((c as f64 * width_scale).round() as usize).max(1);
        }
        widths
    }

    /// Build a network with fan-in-scaled uniform weights and zero biases.
    pub fn new(width_scale: f64, seed: u64) -> Self {
        let widths = Self::scaled_widths(width_scale);
        let (params, layout) = Self::build(widths);
        let mut net = Self {
            width_scale,
            widths,
            params,
            layout,
        };
        net.init_weights(seed);
        net
    }

    fn build(w: [usize; 5]) -> (Params, Layout) {
        let mut b = Builder { tensors: Vec::new() };
        let enc = [
            (b.conv("enc0_conv1", w[0], 2, 3), b.conv("enc0_conv2", w[0], w[0], 3)),
            (
                b.conv("enc1_conv1", w[1], 2 * w[0], 3),
                b.conv("enc1_conv2", w[1], w[1], 3),
            ),
            (
                b.conv("enc2_conv1", w[2], 2 * w[1], 3),
                b.conv("enc2_conv2", w[2], w[2], 3),
            ),
            (
                b.conv("enc3_conv1", w[3], 2 * w[2], 3),
                b.conv("enc3_conv2", w[3], w[3], 3),
            ),
            (
                b.conv("enc4_conv1", w[4], 2 * w[3], 3),
                b.conv("enc4_conv2", w[4], w[4], 3),
            ),
        ];
        let guide = [
            b.conv("guide_d1", w[0], 1, 3),
            b.conv("guide_d2", w[1], 1, 3),
            b.conv("guide_d3", w[2], 1, 3),
            b.conv("guide_d4", w[3], 1, 3),
        ];
        let inten = [
            b.conv("inten1", w[0], 1, 3),
            b.conv("inten2", w[1], w[0], 3),
            b.conv("inten3", w[2], w[1], 3),
            b.conv("inten4", w[3], w[2], 3),
        ];
        let dec_up = [
            b.convt("dec5_up", w[4], w[3]),
            b.convt("dec6_up", w[3], w[2]),
            b.convt("dec7_up", w[2], w[1]),
            b.convt("dec8_up", w[1], w[0]),
        ];
        let dec = [
            (
                b.conv("dec5_conv1", w[3], 3 * w[3], 3),
                b.conv("dec5_conv2", w[3], w[3], 3),
            ),
            (
                b.conv("dec6_conv1", w[2], 3 * w[2], 3),
                b.conv("dec6_conv2", w[2], w[2], 3),
            ),
            (
                b.conv("dec7_conv1", w[1], 3 * w[1], 3),
                b.conv("dec7_conv2", w[1], w[1], 3),
            ),
            (
                b.conv("dec8_conv1", w[0], 3 * w[0], 3),
                b.conv("dec8_conv2", w[0], w[0], 3),
            ),
        ];
        let out = b.conv("out", 1, w[0], 1);
        (
            Params { tensors: b.tensors },
            Layout {
                enc,
                guide,
                inten,
                dec_up,
                dec,
                out,
            },
        )
    }

    fn init_weights(&mut self, seed: u64) {
        for (idx, t) in self.params.tensors.iter_mut().enumerate() {
            if t.shape.len() < 2 {
                continue; // biases stay zero
            }
            // The output convolution starts at zero so the untrained
            // network is exactly the identity around the first depth;
            // training then refines instead of first unlearning noise.
            if t.name == "out_w" {
                continue;
            }
            let fan_in: usize = if t.shape.len() == 4 {
                // Conv weights [co, ci, k, k]; transposed weights
                // [ci, co, k, k] use their own input channel count.
                if t.name.ends_with("up_w") {
                    t.shape[0] * t.shape[2] * t.shape[3]
                } else {
                    t.shape[1] * t.shape[2] * t.shape[3]
                }
            } else {
                t.shape[1]
            };
            // He-uniform gain: variance 2 / fan_in keeps activation and
            // gradient norms roughly constant through ReLU conv stacks.
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut rng = SplitMix64::derive(seed, &[0x1217, idx as u64]);
            for v in &mut t.data {
                *v = rng.uniform(-bound, bound) as f32;
            }
        }
    }

    /// Forward pass; returns the tape and the residual node id.
    pub fn forward(&self, input: &NetInput) -> Result<(Tape, usize)> {
        input.validate()?;
        let l = &self.layout;
        let mut tape = Tape::new(self.params.promote());

        let conv = |tape: &mut Tape, x: usize, r: &ConvRef| tape.conv(x, r.w, r.b, r.co, r.k);
        let convt = |tape: &mut Tape, x: usize, r: &ConvTRef| tape.convt(x, r.w, r.b, r.co);

        let main = tape.input(input.main.clone());
        let d_nodes: Vec<usize> = input.d.iter().map(|d| tape.input(d.clone())).collect();
        let intensity = tape.input(input.intensity.clone());

        // Encoder with multi-scale depth guidance.
        let mut skips = Vec::with_capacity(4);
        let mut x = main;
        for level in 0..5 {
            if level > 0 {
                let pooled = tape.pool(x);
                let g = conv(&mut tape, d_nodes[level - 1], &l.guide[level - 1]);
                let g = tape.relu(g);
                x = tape.concat(&[pooled, g]);
            }
            let (c1, c2) = (&l.enc[level].0, &l.enc[level].1);
            let a = conv(&mut tape, x, c1);
            let a = tape.relu(a);
            let b = conv(&mut tape, a, c2);
            x = tape.relu(b);
            if level < 4 {
                skips.push(x);
            }
        }

        // Intensity pyramid: conv at each scale, pooled between scales.
        let mut int_nodes = Vec::with_capacity(4);
        let mut y = intensity;
        for level in 0..4 {
            if level > 0 {
                y = tape.pool(y);
            }
            let c = conv(&mut tape, y, &l.inten[level]);
            y = tape.relu(c);
            int_nodes.push(y);
        }

        // Decoder: up-sample, skip, intensity guidance, two convs.
        for level in 0..4 {
            let up = convt(&mut tape, x, &l.dec_up[level]);
            let up = tape.relu(up);
            let skip = skips[3 - level];
            let guide = int_nodes[3 - level];
            let c = tape.concat(&[up, skip, guide]);
            let a = conv(&mut tape, c, &l.dec[level].0);
            let a = tape.relu(a);
            let b = conv(&mut tape, a, &l.dec[level].1);
            x = tape.relu(b);
        }

        let residual = conv(&mut tape, x, &l.out);
        Ok((tape, residual))
    }

    /// Forward plus the residual-add the network is trained around:
    /// `clamp(first_depth + residual, 0, 1)`.
    pub fn infer(&self, features: &FeatureSet) -> Result<DepthMap> {
        let input = NetInput::from_features(features)?;
        let (tape, out) = self.forward(&input)?;
        let residual = tape.value(out);
        let (h, w) = features.target_dims();
        let mut values = ndarray::Array2::<f32>::zeros((h, w));
        let first = features.first_depth.values();
        let plane = residual.plane(0, 0);
        for (idx, v) in values.iter_mut().enumerate() {
            let r = plane[idx] + first[[idx / w, idx % w]] as f64;
            *v = r.clamp(0.0, 1.0) as f32;
        }
        DepthMap::from_values(values).map_err(NetError::Core)
    }
}

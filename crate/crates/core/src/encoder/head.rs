//! Response heads mapping a feature vector to voxel responses.
//!
//! The convolutional head follows a coarse-to-fine layout: an affine map to
//! a small multi-channel 3-D grid, then repeated stages of ×2 trilinear
//! upsampling and 3×3×3 convolution (ReLU on every stage but the last),
//! cropped to the output volume and gathered at the masked voxels.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::linear_taps;
use crate::rng::StreamRng;

/// Dense affine layer, weights stored `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weight: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        (0..self.outputs)
            .map(|o| {
                let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    fn backward(&self, x: &[f64], grad_out: &[f64], grad_w: &mut [f64], grad_b: &mut [f64]) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.inputs];
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad_b[o] += g;
            let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad_w[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                grow[i] += g * x[i];
                grad_in[i] += g * row[i];
            }
        }
        grad_in
    }
}

/// One upsample + 3×3×3 convolution stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStage {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `out × in × 27`, kernel offsets in (z, y, x) row-major order.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Shape of the convolutional head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvHeadShape {
    pub coarse: [usize; 3],
    /// Output channels of each stage; the last must be 1.
    pub stage_channels: Vec<usize>,
}

impl Default for ConvHeadShape {
    fn default() -> Self {
        Self { coarse: [4, 4, 4], stage_channels: vec![8, 1] }
    }
}

impl ConvHeadShape {
    pub fn final_dims(&self) -> [usize; 3] {
        let f = 1usize << self.stage_channels.len();
        [self.coarse[0] * f, self.coarse[1] * f, self.coarse[2] * f]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvHead {
    pub fc: LinearHead,
    pub coarse: [usize; 3],
    pub coarse_channels: usize,
    pub stages: Vec<ConvStage>,
    pub output_dims: [usize; 3],
    /// Flat row-major indices into `output_dims` of the predicted voxels.
    pub voxel_index: Vec<usize>,
}

impl ConvHead {
    pub fn new(
        inputs: usize,
        hidden_units: usize,
        shape: &ConvHeadShape,
        output_dims: [usize; 3],
        voxel_index: Vec<usize>,
    ) -> Result<Self> {
        let cells: usize = shape.coarse.iter().product();
        if cells == 0 || hidden_units == 0 || hidden_units % cells != 0 {
            return Err(Error::invalid(format!(
                "hidden units {hidden_units} must be a positive multiple of the coarse grid size {cells}"
            )));
        }
        if shape.stage_channels.is_empty() || *shape.stage_channels.last().unwrap() != 1 {
            return Err(Error::invalid("conv head stages must end with a single channel"));
        }
        if shape.stage_channels.contains(&0) {
            return Err(Error::invalid("conv head stage channels must be positive"));
        }
        let fin = shape.final_dims();
        if (0..3).any(|a| output_dims[a] == 0 || output_dims[a] > fin[a]) {
            return Err(Error::Shape(format!(
                "output dims {output_dims:?} exceed the head's final grid {fin:?}"
            )));
        }
        let total: usize = output_dims.iter().product();
        if let Some(&bad) = voxel_index.iter().find(|&&i| i >= total) {
            return Err(Error::Shape(format!("voxel index {bad} outside output grid of {total}")));
        }
        let coarse_channels = hidden_units / cells;
        let mut stages = Vec::new();
        let mut cin = coarse_channels;
        for &cout in &shape.stage_channels {
            stages.push(ConvStage {
                in_channels: cin,
                out_channels: cout,
                weight: vec![0.0; cout * cin * 27],
                bias: vec![0.0; cout],
            });
            cin = cout;
        }
        Ok(Self {
            fc: LinearHead::zeros(inputs, hidden_units),
            coarse: shape.coarse,
            coarse_channels,
            stages,
            output_dims,
            voxel_index,
        })
    }

    fn final_dims(&self) -> [usize; 3] {
        let f = 1usize << self.stages.len();
        [self.coarse[0] * f, self.coarse[1] * f, self.coarse[2] * f]
    }

    fn gather_offsets(&self) -> Vec<usize> {
        let fin = self.final_dims();
        let [_, o1, o2] = self.output_dims;
        self.voxel_index
            .iter()
            .map(|&i| {
                let (z, rem) = (i / (o1 * o2), i % (o1 * o2));
                let (y, x) = (rem / o2, rem % o2);
                (z * fin[1] + y) * fin[2] + x
            })
            .collect()
    }
}

/// Intermediates of one head evaluation.
#[derive(Debug, Clone)]
pub enum HeadTrace {
    Linear,
    Conv {
        hidden: Vec<f64>,
        /// Per stage: the upsampled input and the convolution output.
        stages: Vec<(Vec<f64>, Vec<f64>)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Linear(LinearHead),
    Conv(ConvHead),
}

impl Head {
    pub fn inputs(&self) -> usize {
        match self {
            Head::Linear(h) => h.inputs,
            Head::Conv(h) => h.fc.inputs,
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            Head::Linear(h) => h.outputs,
            Head::Conv(h) => h.voxel_index.len(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            Head::Linear(_) => vec!["head.weight".into(), "head.bias".into()],
            Head::Conv(h) => {
                let mut names = vec!["head.fc.weight".to_string(), "head.fc.bias".to_string()];
                for i in 0..h.stages.len() {
                    names.push(format!("head.stage{i}.weight"));
                    names.push(format!("head.stage{i}.bias"));
                }
                names
            }
        }
    }

    /// Parameter shapes in the same order as [`Head::param_names`].
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match self {
            Head::Linear(h) => vec![vec![h.outputs, h.inputs], vec![h.outputs]],
            Head::Conv(h) => {
                let mut s = vec![vec![h.fc.outputs, h.fc.inputs], vec![h.fc.outputs]];
                for st in &h.stages {
                    s.push(vec![st.out_channels, st.in_channels, 3, 3, 3]);
                    s.push(vec![st.out_channels]);
                }
                s
            }
        }
    }

    /// Fan-in of each parameter tensor, used for initialization.
    fn fan_ins(&self) -> Vec<usize> {
        match self {
            Head::Linear(h) => vec![h.inputs, h.inputs],
            Head::Conv(h) => {
                let mut f = vec![h.fc.inputs, h.fc.inputs];
                for st in &h.stages {
                    f.push(st.in_channels * 27);
                    f.push(st.in_channels * 27);
                }
                f
            }
        }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Head::Linear(h) => vec![&h.weight, &h.bias],
            Head::Conv(h) => {
                let mut p: Vec<&[f64]> = vec![&h.fc.weight, &h.fc.bias];
                for st in &h.stages {
                    p.push(&st.weight);
                    p.push(&st.bias);
                }
                p
            }
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Head::Linear(h) => vec![&mut h.weight, &mut h.bias],
            Head::Conv(h) => {
                let mut p: Vec<&mut [f64]> = vec![&mut h.fc.weight, &mut h.fc.bias];
                for st in &mut h.stages {
                    p.push(&mut st.weight);
                    p.push(&mut st.bias);
                }
                p
            }
        }
    }

    /// Uniform(−1/√fan_in, 1/√fan_in) initialization, one draw stream per tensor.
    pub fn init_uniform(&mut self, mut rng_for: impl FnMut(&str) -> StreamRng) {
        let names = self.param_names();
        let fans = self.fan_ins();
        for ((p, name), fan) in self.params_mut().into_iter().zip(&names).zip(fans) {
            let bound = 1.0 / (fan as f64).sqrt();
            let mut rng = rng_for(name);
            for v in p.iter_mut() {
                *v = rng.random_range(-bound..=bound);
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, HeadTrace) {
        match self {
            Head::Linear(h) => (h.forward(x), HeadTrace::Linear),
            Head::Conv(h) => {
                let hidden = h.fc.forward(x);
                let mut dims = h.coarse;
                let mut cur = hidden.clone();
                let mut ch = h.coarse_channels;
                let mut stages = Vec::with_capacity(h.stages.len());
                for (s, st) in h.stages.iter().enumerate() {
                    let (up, up_dims) = upsample2(&cur, ch, dims);
                    let mut out = conv3d_same(&up, st, up_dims);
                    let pre = out.clone();
                    if s + 1 < h.stages.len() {
                        out.iter_mut().for_each(|v| *v = v.max(0.0));
                    }
                    stages.push((up, pre));
                    cur = out;
                    dims = up_dims;
                    ch = st.out_channels;
                }
                let y = h.gather_offsets().iter().map(|&i| cur[i]).collect();
                (y, HeadTrace::Conv { hidden, stages })
            }
        }
    }

    /// Accumulates parameter gradients (aligned with [`Head::params`]) and
    /// returns the gradient with respect to the head input.
    pub fn backward(&self, x: &[f64], trace: &HeadTrace, grad_out: &[f64], grads: &mut [Vec<f64>]) -> Vec<f64> {
        match (self, trace) {
            (Head::Linear(h), HeadTrace::Linear) => {
                let (gw, rest) = grads.split_at_mut(1);
                h.backward(x, grad_out, &mut gw[0], &mut rest[0])
            }
            (Head::Conv(h), HeadTrace::Conv { hidden, stages }) => {
                let fin = h.final_dims();
                let mut grad = vec![0.0; fin.iter().product()];
                for (&off, &g) in h.gather_offsets().iter().zip(grad_out) {
                    grad[off] += g;
                }
                let mut dims = fin;
                for s in (0..h.stages.len()).rev() {
                    let st = &h.stages[s];
                    let (up, pre) = &stages[s];
                    if s + 1 < h.stages.len() {
                        for (g, &p) in grad.iter_mut().zip(pre) {
                            if p <= 0.0 {
                                *g = 0.0;
                            }
                        }
                    }
                    let (gw, gb) = {
                        let (a, b) = grads.split_at_mut(3 + 2 * s);
                        (&mut a[2 + 2 * s], &mut b[0])
                    };
                    let grad_up = conv3d_backward(up, st, dims, &grad, gw, gb);
                    let coarse_dims = [dims[0] / 2, dims[1] / 2, dims[2] / 2];
                    grad = upsample2_adjoint(&grad_up, st.in_channels, coarse_dims);
                    dims = coarse_dims;
                }
                debug_assert_eq!(hidden.len(), grad.len());
                let (gw, rest) = grads.split_at_mut(1);
                h.fc.backward(x, &grad, &mut gw[0], &mut rest[0])
            }
            _ => unreachable!("trace produced by a different head"),
        }
    }
}

fn resample_axis(data: &[f64], ch: usize, dims: [usize; 3], axis: usize, n_out: usize) -> (Vec<f64>, [usize; 3]) {
    let taps = linear_taps(dims[axis], n_out);
    let mut od = dims;
    od[axis] = n_out;
    let mut out = vec![0.0; ch * od.iter().product::<usize>()];
    for c in 0..ch {
        for z in 0..od[0] {
            for y in 0..od[1] {
                for x in 0..od[2] {
                    let mut p = [z, y, x];
                    let t = taps[p[axis]];
                    p[axis] = t.i0;
                    let a = data[vol_index(c, p, dims)];
                    p[axis] = t.i1;
                    let b = data[vol_index(c, p, dims)];
                    out[vol_index(c, [z, y, x], od)] = (1.0 - t.t) * a + t.t * b;
                }
            }
        }
    }
    (out, od)
}

fn resample_axis_adjoint(grad: &[f64], ch: usize, in_dims: [usize; 3], axis: usize, n_out: usize) -> Vec<f64> {
    let taps = linear_taps(in_dims[axis], n_out);
    let mut od = in_dims;
    od[axis] = n_out;
    let mut out = vec![0.0; ch * in_dims.iter().product::<usize>()];
    for c in 0..ch {
        for z in 0..od[0] {
            for y in 0..od[1] {
                for x in 0..od[2] {
                    let g = grad[vol_index(c, [z, y, x], od)];
                    let mut p = [z, y, x];
                    let t = taps[p[axis]];
                    p[axis] = t.i0;
                    out[vol_index(c, p, in_dims)] += (1.0 - t.t) * g;
                    p[axis] = t.i1;
                    out[vol_index(c, p, in_dims)] += t.t * g;
                }
            }
        }
    }
    out
}

#[inline]
fn vol_index(c: usize, p: [usize; 3], dims: [usize; 3]) -> usize {
    ((c * dims[0] + p[0]) * dims[1] + p[1]) * dims[2] + p[2]
}

/// ×2 trilinear upsampling with pixel-center alignment, applied separably.
pub(crate) fn upsample2(data: &[f64], ch: usize, dims: [usize; 3]) -> (Vec<f64>, [usize; 3]) {
    let mut cur = data.to_vec();
    let mut d = dims;
    for axis in 0..3 {
        let (next, nd) = resample_axis(&cur, ch, d, axis, d[axis] * 2);
        cur = next;
        d = nd;
    }
    (cur, d)
}

pub(crate) fn upsample2_adjoint(grad: &[f64], ch: usize, coarse: [usize; 3]) -> Vec<f64> {
    // forward applied axes 0, 1, 2 in turn; undo in reverse
    let mut dims_after = [coarse[0] * 2, coarse[1] * 2, coarse[2] * 2];
    let mut cur = grad.to_vec();
    for axis in (0..3).rev() {
        let mut in_dims = dims_after;
        in_dims[axis] = coarse[axis];
        cur = resample_axis_adjoint(&cur, ch, in_dims, axis, dims_after[axis]);
        dims_after = in_dims;
    }
    cur
}

fn conv3d_same(input: &[f64], st: &ConvStage, dims: [usize; 3]) -> Vec<f64> {
    let vox = dims.iter().product::<usize>();
    let mut out = vec![0.0; st.out_channels * vox];
    for o in 0..st.out_channels {
        let plane = &mut out[o * vox..(o + 1) * vox];
        plane.fill(st.bias[o]);
        for i in 0..st.in_channels {
            let w = &st.weight[(o * st.in_channels + i) * 27..(o * st.in_channels + i + 1) * 27];
            let src = &input[i * vox..(i + 1) * vox];
            for_each_tap(dims, |dst, srci, k| plane[dst] += w[k] * src[srci]);
        }
    }
    out
}

fn conv3d_backward(
    input: &[f64],
    st: &ConvStage,
    dims: [usize; 3],
    grad_out: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) -> Vec<f64> {
    let vox = dims.iter().product::<usize>();
    let mut grad_in = vec![0.0; st.in_channels * vox];
    for o in 0..st.out_channels {
        let g = &grad_out[o * vox..(o + 1) * vox];
        grad_b[o] += g.iter().sum::<f64>();
        for i in 0..st.in_channels {
            let base = (o * st.in_channels + i) * 27;
            let w = &st.weight[base..base + 27];
            let gw = &mut grad_w[base..base + 27];
            let src = &input[i * vox..(i + 1) * vox];
            let gi = &mut grad_in[i * vox..(i + 1) * vox];
            for_each_tap(dims, |dst, srci, k| {
                gw[k] += g[dst] * src[srci];
                gi[srci] += g[dst] * w[k];
            });
        }
    }
    grad_in
}

/// Visits every (output voxel, in-bounds source voxel, tap index) triple of a
/// 3×3×3 "same" cross-correlation.
#[inline]
fn for_each_tap(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize)) {
    let [d0, d1, d2] = dims.map(|d| d as isize);
    for z in 0..d0 {
        for y in 0..d1 {
            for x in 0..d2 {
                let dst = ((z * d1 + y) * d2 + x) as usize;
                for kz in 0..3isize {
                    let zz = z + kz - 1;
                    if zz < 0 || zz >= d0 {
                        continue;
                    }
                    for ky in 0..3isize {
                        let yy = y + ky - 1;
                        if yy < 0 || yy >= d1 {
                            continue;
                        }
                        for kx in 0..3isize {
                            let xx = x + kx - 1;
                            if xx < 0 || xx >= d2 {
                                continue;
                            }
                            let src = ((zz * d1 + yy) * d2 + xx) as usize;
                            f(dst, src, (kz * 9 + ky * 3 + kx) as usize);
                        }
                    }
                }
            }
        }
    }
}

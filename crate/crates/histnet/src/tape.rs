//! A minimal compute tape: forward ops append nodes, backward walks them
//! in reverse and accumulates parameter gradients.

use crate::ops;
use crate::tensor4::Tensor4;

#[derive(Debug, Clone)]
pub enum Op {
    Input,
    Conv {
        input: usize,
        weight: usize,
        bias: usize,
        co: usize,
        k: usize,
    },
    ConvT {
        input: usize,
        weight: usize,
        bias: usize,
        co: usize,
    },
    Pool {
        input: usize,
    },
    Relu {
        input: usize,
    },
    Concat {
        inputs: Vec<usize>,
    },
}

pub struct Node {
    pub op: Op,
    pub value: Tensor4,
    /// Pooling argmax marks.
    aux: Option<Vec<u8>>,
}

/// Forward tape holding the promoted f64 parameters and all intermediate
/// activations.
pub struct Tape {
    pub params: Vec<Vec<f64>>,
    pub nodes: Vec<Node>,
}

impl Tape {
    pub fn new(params: Vec<Vec<f64>>) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn value(&self, id: usize) -> &Tensor4 {
        &self.nodes[id].value
    }

    fn push(&mut self, op: Op, value: Tensor4, aux: Option<Vec<u8>>) -> usize {
        self.nodes.push(Node { op, value, aux });
        self.nodes.len() - 1
    }

    pub fn input(&mut self, value: Tensor4) -> usize {
        self.push(Op::Input, value, None)
    }

    pub fn conv(&mut self, input: usize, weight: usize, bias: usize, co: usize, k: usize) -> usize {
        let value = ops::conv2d_forward(
            &self.nodes[input].value,
            &self.params[weight],
            &self.params[bias],
            co,
            k,
        );
        self.push(
            Op::Conv {
                input,
                weight,
                bias,
                co,
                k,
            },
            value,
            None,
        )
    }

    pub fn convt(&mut self, input: usize, weight: usize, bias: usize, co: usize) -> usize {
        let value = ops::convt2d_forward(
            &self.nodes[input].value,
            &self.params[weight],
            &self.params[bias],
            co,
        );
        self.push(
            Op::ConvT {
                input,
                weight,
                bias,
                co,
            },
            value,
            None,
        )
    }

    pub fn pool(&mut self, input: usize) -> usize {
        let (value, aux) = ops::maxpool_forward(&self.nodes[input].value);
        self.push(Op::Pool { input }, value, Some(aux))
    }

    pub fn relu(&mut self, input: usize) -> usize {
        let value = ops::relu_forward(&self.nodes[input].value);
        self.push(Op::Relu { input }, value, None)
    }

    pub fn concat(&mut self, inputs: &[usize]) -> usize {
        let parts: Vec<&Tensor4> = inputs.iter().map(|&i| &self.nodes[i].value).collect();
        let value = ops::concat_forward(&parts);
        self.push(
            Op::Concat {
                inputs: inputs.to_vec(),
            },
            value,
            None,
        )
    }

    /// Reverse-mode sweep from `output` seeded with `seed`; returns one
    /// gradient buffer per parameter, in parameter order.
    pub fn backward(&self, output: usize, seed: Tensor4) -> Vec<Vec<f64>> {
        let mut grads: Vec<Option<Tensor4>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut pgrads: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        grads[output] = Some(seed);

        for id in (0..=output).rev() {
            let Some(g) = grads[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Input => {}
                Op::Conv {
                    input,
                    weight,
                    bias,
                    co,
                    k,
                } => {
                    let (din, dw, db) = ops::conv2d_backward(
                        &self.nodes[*input].value,
                        &self.params[*weight],
                        &g,
                        *co,
                        *k,
                    );
                    accumulate(&mut grads[*input], din);
                    add_assign(&mut pgrads[*weight], &dw);
                    add_assign(&mut pgrads[*bias], &db);
                }
                Op::ConvT {
                    input,
                    weight,
                    bias,
                    co,
                } => {
                    let (din, dw, db) = ops::convt2d_backward(
                        &self.nodes[*input].value,
                        &self.params[*weight],
                        &g,
                        *co,
                    );
                    accumulate(&mut grads[*input], din);
                    add_assign(&mut pgrads[*weight], &dw);
                    add_assign(&mut pgrads[*bias], &db);
                }
                Op::Pool { input } => {
                    let src = &self.nodes[*input].value;
                    let din = ops::maxpool_backward(
                        &g,
                        self.nodes[id].aux.as_ref().expect("pool aux"),
                        src.h,
                        src.w,
                    );
                    accumulate(&mut grads[*input], din);
                }
                Op::Relu { input } => {
                    let din = ops::relu_backward(&self.nodes[*input].value, &g);
                    accumulate(&mut grads[*input], din);
                }
                Op::Concat { inputs } => {
                    let channels: Vec<usize> =
                        inputs.iter().map(|&i| self.nodes[i].value.c).collect();
                    let parts = ops::concat_backward(&g, &channels);
                    for (&i, part) in inputs.iter().zip(parts) {
                        accumulate(&mut grads[i], part);
                    }
                }
            }
        }
        pgrads
    }
}

fn accumulate(slot: &mut Option<Tensor4>, delta: Tensor4) {
    match slot {
        None => *slot = Some(delta),
        Some(existing) => {
            debug_assert!(existing.same_shape(&delta));
            for (a, b) in existing.data.iter_mut().zip(delta.data.iter()) {
                *a += b;
            }
        }
    }
}

fn add_assign(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

use alloc::vec;
use alloc::vec::Vec;

use super::params::{GradBuffer, ParamId, ParameterStore, Params};
use super::NnError;
use crate::real::Real;

/// Elementwise nonlinearity applied after the affine map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    /// `ln(1 + e^{βx}) / β`, linear above `βx > 20`.
    Softplus { beta: f64 },
    Relu,
    Sigmoid,
    Identity,
}

#[inline(always)]
pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

#[inline(always)]
pub(crate) fn softplus<F: Real>(x: F, beta: F) -> F {
    let bx = beta * x;
    if bx > F::of(20.0) {
        x
    } else {
        bx.exp().ln_1p() / beta
    }
}

/// Applies `act` to a single pre-activation.
#[inline(always)]
pub fn activate<F: Real>(act: Activation, x: F) -> F {
    match act {
        Activation::Softplus { beta } => softplus(x, F::of(beta)),
        Activation::Relu => x.max(F::zero()),
        Activation::Sigmoid => sigmoid(x),
        Activation::Identity => x,
    }
}

/// Writes `act(pre)` into `out` and its derivative into `slope`.
#[inline(always)]
fn activate_with_slope<F: Real>(act: Activation, pre: &[F], out: &mut [F], slope: &mut [F]) {
    let it = pre.iter().zip(out.iter_mut()).zip(slope.iter_mut());
    match act {
        Activation::Softplus { beta } => {
            let beta = F::of(beta);
            let limit = F::of(20.0);
            for ((&z, y), d) in it {
                let bz = beta * z;
                if bz > limit {
                    *y = z;
                    *d = sigmoid(bz);
                } else {
                    let e = bz.exp();
                    *y = e.ln_1p() / beta;
                    *d = e / (F::one() + e);
                }
            }
        }
        Activation::Relu => {
            for ((&z, y), d) in it {
                let on = z > F::zero();
                *y = if on { z } else { F::zero() };
                *d = if on { F::one() } else { F::zero() };
            }
        }
        Activation::Sigmoid => {
            for ((&z, y), d) in it {
                let v = sigmoid(z);
                *y = v;
                *d = v * (F::one() - v);
            }
        }
        Activation::Identity => {
            out.copy_from_slice(pre);
            slope.fill(F::one());
        }
    }
}

/// Dot product with eight independent partial sums (fixed order).
#[inline(always)]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        let x: &[F; 8] = x.try_into().unwrap();
        let y: &[F; 8] = y.try_into().unwrap();
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = F::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[inline(always)]
pub(crate) fn axpy<F: Real>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Fully connected layer `y = act(Wx + b)`, weights row-major `out × in`.
#[derive(Clone, Debug)]
pub struct DenseLayer {
    weight: ParamId,
    bias: ParamId,
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
}

/// Per-call intermediate values kept for the backward pass.
#[derive(Clone, Debug)]
pub struct DenseCache<F> {
    input: Vec<F>,
    pre: Vec<F>,
    out: Vec<F>,
    slope: Vec<F>,
    delta: Vec<F>,
    filled: bool,
}

impl<F: Real> DenseCache<F> {
    pub fn new(layer: &DenseLayer) -> Self {
        Self {
            input: vec![F::zero(); layer.in_dim],
            pre: vec![F::zero(); layer.out_dim],
            out: vec![F::zero(); layer.out_dim],
            slope: vec![F::zero(); layer.out_dim],
            delta: vec![F::zero(); layer.out_dim],
            filled: false,
        }
    }

    #[inline(always)]
    pub fn output(&self) -> &[F] {
        &self.out
    }

    pub fn pre_activation(&self) -> &[F] {
        &self.pre
    }

    pub fn is_filled(&self) -> bool {
        self.filled
    }

    pub fn invalidate(&mut self) {
        self.filled = false;
    }
}

impl DenseLayer {
    /// Registers `<name>.weight` and `<name>.bias`, zero-initialized.
    pub fn new<F: Real>(
        store: &mut ParameterStore<F>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
    ) -> Self {
        let weight = store.register(
            &alloc::format!("{name}.weight"),
            vec![F::zero(); in_dim * out_dim],
        );
        let bias = store.register(&alloc::format!("{name}.bias"), vec![F::zero(); out_dim]);
        Self {
            weight,
            bias,
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    pub fn forward<F: Real>(
        &self,
        params: &Params<F>,
        x: &[F],
        cache: &mut DenseCache<F>,
    ) -> Result<(), NnError> {
        if x.len() != self.in_dim {
            return Err(NnError::DimensionMismatch {
                what: "dense input",
                expected: self.in_dim,
                got: x.len(),
            });
        }
        cache.input.copy_from_slice(x);
        let w = params.get(self.weight);
        let b = params.get(self.bias);
        for ((z, row), bo) in cache.pre.iter_mut().zip(w.chunks_exact(self.in_dim)).zip(b) {
            *z = *bo + dot(row, x);
        }
        activate_with_slope(self.activation, &cache.pre, &mut cache.out, &mut cache.slope);
        cache.filled = true;
        Ok(())
    }

    /// Accumulates `∂L/∂W`, `∂L/∂b` into `grads` and, if requested, writes
    /// `∂L/∂x` into `dx`.
    pub fn backward<F: Real>(
        &self,
        params: &Params<F>,
        cache: &mut DenseCache<F>,
        upstream: &[F],
        grads: &mut GradBuffer<F>,
        dx: Option<&mut [F]>,
    ) -> Result<(), NnError> {
        if !cache.filled {
            return Err(NnError::MissingForwardCache("dense layer"));
        }
        if upstream.len() != self.out_dim {
            return Err(NnError::DimensionMismatch {
                what: "dense upstream",
                expected: self.out_dim,
                got: upstream.len(),
            });
        }
        for ((d, u), s) in cache.delta.iter_mut().zip(upstream).zip(&cache.slope) {
            *d = *u * *s;
        }
        let gw = grads.get_mut(self.weight);
        for (row, &d) in gw.chunks_exact_mut(self.in_dim).zip(&cache.delta) {
            if d != F::zero() {
                axpy(d, &cache.input, row);
            }
        }
        for (g, d) in grads.get_mut(self.bias).iter_mut().zip(&cache.delta) {
            *g += *d;
        }
        if let Some(dx) = dx {
            if dx.len() != self.in_dim {
                return Err(NnError::DimensionMismatch {
                    what: "dense input gradient",
                    expected: self.in_dim,
                    got: dx.len(),
                });
            }
            dx.fill(F::zero());
            let w = params.get(self.weight);
            for (row, &d) in w.chunks_exact(self.in_dim).zip(&cache.delta) {
                if d != F::zero() {
                    axpy(d, row, dx);
                }
            }
        }
        Ok(())
    }
}

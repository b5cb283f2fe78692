use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::real::Real;

/// Handle to one named parameter array inside a [`ParameterStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Flat parameter arrays, indexed by [`ParamId`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params<F> {
    pub(super) arrays: Vec<Vec<F>>,
}

impl<F: Real> Params<F> {
    #[inline(always)]
    pub fn get(&self, id: ParamId) -> &[F] {
        &self.arrays[id.0]
    }

    #[inline(always)]
    pub fn get_mut(&mut self, id: ParamId) -> &mut [F] {
        &mut self.arrays[id.0]
    }

    pub fn arrays(&self) -> &[Vec<F>] {
        &self.arrays
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }
}

/// Gradient accumulators with the same shape as a [`Params`].
///
/// Workers each own one buffer; buffers are merged in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradBuffer<F> {
    pub(super) arrays: Vec<Vec<F>>,
}

impl<F: Real> GradBuffer<F> {
    pub fn zeros_like(params: &Params<F>) -> Self {
        Self {
            arrays: params
                .arrays
                .iter()
                .map(|a| vec![F::zero(); a.len()])
                .collect(),
        }
    }

    #[inline(always)]
    pub fn get(&self, id: ParamId) -> &[F] {
        &self.arrays[id.0]
    }

    #[inline(always)]
    pub fn get_mut(&mut self, id: ParamId) -> &mut [F] {
        &mut self.arrays[id.0]
    }

    pub fn arrays(&self) -> &[Vec<F>] {
        &self.arrays
    }

    pub fn zero(&mut self) {
        for a in &mut self.arrays {
            a.fill(F::zero());
        }
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &GradBuffer<F>) {
        assert_eq!(self.arrays.len(), other.arrays.len());
        for (dst, src) in self.arrays.iter_mut().zip(&other.arrays) {
            assert_eq!(dst.len(), src.len());
            for (d, s) in dst.iter_mut().zip(src) {
                *d += *s;
            }
        }
    }

    pub fn scale(&mut self, factor: F) {
        for a in &mut self.arrays {
            for g in a.iter_mut() {
                *g *= factor;
            }
        }
    }

    pub fn max_abs(&self, id: ParamId) -> F {
        self.arrays[id.0]
            .iter()
            .fold(F::zero(), |m, g| m.max(g.abs()))
    }
}

/// Named trainable arrays plus their gradients and Adam moments.
#[derive(Clone, Debug)]
pub struct ParameterStore<F> {
    pub(super) names: Vec<String>,
    pub(super) values: Params<F>,
    pub(super) grads: GradBuffer<F>,
    pub(super) frozen: Vec<bool>,
    pub(crate) moment1: GradBuffer<F>,
    pub(crate) moment2: GradBuffer<F>,
    pub(crate) step: u64,
    pub(crate) nonfinite_skips: u64,
}

impl<F: Real> Default for ParameterStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> ParameterStore<F> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Params { arrays: Vec::new() },
            grads: GradBuffer { arrays: Vec::new() },
            frozen: Vec::new(),
            moment1: GradBuffer { arrays: Vec::new() },
            moment2: GradBuffer { arrays: Vec::new() },
            step: 0,
            nonfinite_skips: 0,
        }
    }

    /// Registers a new array. Names must be unique.
    pub fn register(&mut self, name: &str, values: Vec<F>) -> ParamId {
        assert!(
            self.id_of(name).is_none(),
            "duplicate parameter name {name}"
        );
        let n = values.len();
        self.names.push(String::from(name));
        self.values.arrays.push(values);
        self.grads.arrays.push(vec![F::zero(); n]);
        self.moment1.arrays.push(vec![F::zero(); n]);
        self.moment2.arrays.push(vec![F::zero(); n]);
        self.frozen.push(false);
        ParamId(self.names.len() - 1)
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.names.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.values.arrays.iter().map(Vec::len).sum()
    }

    pub fn values(&self) -> &Params<F> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Params<F> {
        &mut self.values
    }

    pub fn grads(&self) -> &GradBuffer<F> {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut GradBuffer<F> {
        &mut self.grads
    }

    /// Read-only parameters together with the mutable gradient accumulators.
    pub fn split(&mut self) -> (&Params<F>, &mut GradBuffer<F>) {
        (&self.values, &mut self.grads)
    }

    pub fn new_grad_buffer(&self) -> GradBuffer<F> {
        GradBuffer::zeros_like(&self.values)
    }

    pub fn zero_grad(&mut self) {
        self.grads.zero();
    }

    /// Frozen arrays are skipped by the optimizer.
    pub fn set_frozen(&mut self, id: ParamId, frozen: bool) {
        self.frozen[id.0] = frozen;
    }

    pub fn is_frozen(&self, id: ParamId) -> bool {
        self.frozen[id.0]
    }

    /// Number of optimizer steps taken.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Arrays skipped by the optimizer because of non-finite gradients.
    pub fn nonfinite_skips(&self) -> u64 {
        self.nonfinite_skips
    }

    pub fn moments(&self, id: ParamId) -> (&[F], &[F]) {
        (self.moment1.get(id), self.moment2.get(id))
    }

    /// Restores optimizer state (used when loading checkpoints).
    pub fn restore_optimizer(
        &mut self,
        id: ParamId,
        moment1: &[F],
        moment2: &[F],
    ) {
        self.moment1.get_mut(id).copy_from_slice(moment1);
        self.moment2.get_mut(id).copy_from_slice(moment2);
    }

    pub fn set_step(&mut self, step: u64, nonfinite_skips: u64) {
        self.step = step;
        self.nonfinite_skips = nonfinite_skips;
    }
}

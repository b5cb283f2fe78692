//! Central finite-difference verification of backpropagated gradients.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{GradBuffer, ParamId, ParameterStore, Params};
use crate::real::Real;

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `(f(p + h) − f(p − h)) / 2h` for one scalar entry; the entry is restored.
pub fn central_difference<F: Real>(
    params: &mut Params<F>,
    id: ParamId,
    index: usize,
    step: f64,
    mut f: impl FnMut(&Params<F>) -> f64,
) -> f64 {
    let orig = params.get(id)[index];
    params.get_mut(id)[index] = F::of(orig.as_f64() + step);
    let plus = f(params);
    params.get_mut(id)[index] = F::of(orig.as_f64() - step);
    let minus = f(params);
    params.get_mut(id)[index] = orig;
    (plus - minus) / (2.0 * step)
}

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Finite-difference step.
    pub step: f64,
    /// Maximum tolerated relative error.
    pub tol: f64,
    /// Denominator floor of the relative error.
    pub abs_floor: f64,
    /// When set, each array checks its largest-gradient entries plus the same
    /// number of random entries instead of every entry.
    pub max_entries_per_array: Option<usize>,
    pub seed: u64,
    /// Entries failing at `step` are retried this many times with the step
    /// divided by 100 each time, so that an activation kink inside
    /// `[p − h, p + h]` does not masquerade as a wrong gradient.
    pub refinements: usize,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tol: 1e-4,
            abs_floor: 1e-6,
            max_entries_per_array: None,
            seed: 0,
            refinements: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckEntry {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub worst: Option<GradCheckEntry>,
    /// Entries whose relative error exceeded the tolerance.
    pub failures: Vec<GradCheckEntry>,
    /// Number of retries with a reduced step.
    pub refined: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Names of the arrays holding at least one failing entry.
    pub fn failing_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.failures.iter().map(|f| f.name.clone()).collect();
        names.sort();
        names.dedup();
        names
    }
}

fn select_entries(grad: &[f64], limit: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = grad.len();
    let Some(k) = limit else {
        return (0..n).collect();
    };
    if n <= 2 * k {
        return (0..n).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| grad[b].abs().total_cmp(&grad[a].abs()).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order[..k].to_vec();
    while picked.len() < 2 * k {
        let i = rng.random_range(0..n);
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked
}

/// Compares `analytic` against central differences of `loss` for every
/// selected entry of every non-frozen array in `store`.
pub fn grad_check(
    store: &mut ParameterStore<f64>,
    analytic: &GradBuffer<f64>,
    opts: &GradCheckOptions,
    mut loss: impl FnMut(&Params<f64>) -> f64,
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport::default();
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        if store.is_frozen(id) {
            continue;
        }
        let entries = select_entries(analytic.get(id), opts.max_entries_per_array, &mut rng);
        for index in entries {
            let ana = analytic.get(id)[index];
            let mut h = opts.step;
            let mut numeric = central_difference(store.values_mut(), id, index, h, &mut loss);
            let mut rel = relative_error(ana, numeric, opts.abs_floor);
            for _ in 0..opts.refinements {
                if rel <= opts.tol {
                    break;
                }
                h *= 1e-2;
                numeric = central_difference(store.values_mut(), id, index, h, &mut loss);
                rel = relative_error(ana, numeric, opts.abs_floor);
                report.refined += 1;
            }
            report.checked += 1;
            let entry = GradCheckEntry {
                name: String::from(store.name(id)),
                index,
                analytic: ana,
                numeric,
                rel_error: rel,
            };
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some(entry.clone());
            }
            if rel > opts.tol {
                report.failures.push(entry);
            }
        }
    }
    report
}

//! Central finite-difference comparison for gradients.
//!
//! This module is the independent oracle used by this crate's own test
//! suites; it never touches [`crate::autodiff::Graph::backward`], only the
//! forward evaluation the caller supplies.

use crate::autodiff::{ParamId, ParamStore};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub entries_checked: usize,
}

/// Perturb every entry of every listed parameter by `+-h`, evaluate the
/// supplied pure forward function, and compare the central difference to the
/// matching entry of `expected`.
///
/// The relative error denominator is floored at 1e-4 so that near-zero
/// gradients are judged on an absolute scale instead of amplified noise.
pub fn compare_to_finite_differences(
    store: &mut ParamStore,
    params: &[ParamId],
    expected: &[Matrix],
    h: f64,
    f: &mut dyn FnMut(&ParamStore) -> f64,
) -> FdReport {
    assert_eq!(params.len(), expected.len());
    let mut report = FdReport::default();
    for (&pid, exp) in params.iter().zip(expected) {
        let n = store.value(pid).numel();
        assert_eq!(exp.numel(), n, "expected gradient shape mismatch");
        for i in 0..n {
            let orig = store.value(pid).data()[i];
            store.value_mut(pid).data_mut()[i] = orig + h;
            let fp = f(store);
            store.value_mut(pid).data_mut()[i] = orig - h;
            let fm = f(store);
            store.value_mut(pid).data_mut()[i] = orig;
            let fd = (fp - fm) / (2.0 * h);
            let ad = exp.data()[i];
            let abs = (ad - fd).abs();
            let rel = abs / ad.abs().max(fd.abs()).max(1e-4);
            report.max_abs_err = report.max_abs_err.max(abs);
            report.max_rel_err = report.max_rel_err.max(rel);
            report.entries_checked += 1;
        }
    }
    report
}

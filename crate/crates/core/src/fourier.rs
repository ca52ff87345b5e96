//! Unitary DFT helpers on row-major buffers.
//!
//! Both directions carry a `1/sqrt(n)` factor, so the transform preserves
//! Euclidean norms and an i.i.d. Gaussian field stays i.i.d. per frequency.
//! Plans are cached per length in a thread-local planner.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((len, forward))
            .or_insert_with(|| {
                let dir = if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

fn transform_2d(buf: &mut [Complex64], h: usize, w: usize, forward: bool) {
    assert_eq!(buf.len(), h * w);
    let row_fft = plan(w, forward);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = plan(h, forward);
    let mut col = vec![Complex64::default(); h];
    for j in 0..w {
        for i in 0..h {
            col[i] = buf[i * w + j];
        }
        col_fft.process(&mut col);
        for i in 0..h {
            buf[i * w + j] = col[i];
        }
    }
    let scale = 1.0 / ((h * w) as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// In-place unitary forward DFT of a 2-d buffer.
pub fn fft2_unitary(buf: &mut [Complex64], h: usize, w: usize) {
    transform_2d(buf, h, w, true);
}

/// In-place unitary inverse DFT of a 2-d buffer.
pub fn ifft2_unitary(buf: &mut [Complex64], h: usize, w: usize) {
    transform_2d(buf, h, w, false);
}

/// Lift a real buffer into complex storage.
pub fn to_complex(data: &[f64]) -> Vec<Complex64> {
    data.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Drop imaginary parts, reporting the largest residue seen.
pub fn to_real_with_residue(buf: &[Complex64]) -> (Vec<f64>, f64) {
    let mut residue = 0.0f64;
    let data = buf
        .iter()
        .map(|c| {
            residue = residue.max(c.im.abs());
            c.re
        })
        .collect();
    (data, residue)
}

//! Linear measurement operators and blur kernels.
//!
//! Three operator kinds are provided, all diagonal under the unitary DFT:
//!
//! * `Identity`: denoising, `A x = x`;
//! * `Circulant`: periodic convolution with a blur kernel, `A = F* D F`
//!   where `D` holds the kernel's frequency gains;
//! * `MaskedFourier`: frequency subsampling, `A = F* M F` with a
//!   Hermitian-symmetric 0/1 mask `M`. Keeping the mask symmetric under
//!   frequency negation makes `A` a real orthogonal projection, so
//!   measurements stay real-valued tensors and `Aᵀ A` is idempotent.
//!
//! A `ValidMask` carries the border width excluded from metric computations
//! to avoid the bias of periodic padding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{fft2_unitary, ifft2_unitary, to_complex, to_real_with_residue};
use crate::rng::SeedSpec;
use crate::tensor::Tensor;

/// Parametric blur-kernel families evaluated on an integer grid.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `exp(-(x^2 + y^2) / (2 sigma^2))`
    Gaussian { sigma: f64 },
    /// `(sigma^2 (x^2 + y^2) / mu + 1)^(-(mu/2 + 1))`
    Moffat { sigma: f64, mu: f64 },
    /// `exp(-sigma (|x| + |y|))`, decaying along both axes.
    Laplace { sigma: f64 },
    /// `exp(sigma (-|x| + |y|))`: decays in `|x|` but grows in `|y|`.
    /// Selectable alongside `Laplace` for side-by-side comparison.
    LaplaceXY { sigma: f64 },
    /// Indicator `1{|x| <= s, |y| <= s}`.
    Uniform { s: f64 },
}

impl KernelFamily {
    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        match *self {
            KernelFamily::Gaussian { sigma }
            | KernelFamily::Laplace { sigma }
            | KernelFamily::LaplaceXY { sigma } => positive("sigma", sigma),
            KernelFamily::Moffat { sigma, mu } => {
                positive("sigma", sigma)?;
                positive("mu", mu)
            }
            KernelFamily::Uniform { s } => {
                if s >= 1.0 && s.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "s",
                        format!("must be finite and >= 1, got {s}"),
                    ))
                }
            }
        }
    }

    /// Unnormalized kernel value at integer offset `(x, y)` from the center.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            KernelFamily::Gaussian { sigma } => (-(x * x + y * y) / (2.0 * sigma * sigma)).exp(),
            KernelFamily::Moffat { sigma, mu } => {
                (sigma * sigma * (x * x + y * y) / mu + 1.0).powf(-(mu / 2.0 + 1.0))
            }
            KernelFamily::Laplace { sigma } => (-sigma * (x.abs() + y.abs())).exp(),
            KernelFamily::LaplaceXY { sigma } => (sigma * (-x.abs() + y.abs())).exp(),
            KernelFamily::Uniform { s } => {
                if x.abs() <= s && y.abs() <= s {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Short label used in rankings and CSV output, e.g. `gaussian(2)`.
    pub fn label(&self) -> String {
        match *self {
            KernelFamily::Gaussian { sigma } => format!("gaussian({sigma})"),
            KernelFamily::Moffat { sigma, mu } => format!("moffat({sigma},{mu})"),
            KernelFamily::Laplace { sigma } => format!("laplace({sigma})"),
            KernelFamily::LaplaceXY { sigma } => format!("laplace_xy({sigma})"),
            KernelFamily::Uniform { s } => format!("uniform({s})"),
        }
    }
}

/// A unit-sum blur kernel on an odd `support x support` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    pub family: KernelFamily,
    pub support: usize,
    values: Tensor,
}

/// Default kernel support; wide enough that truncation error stays below the
/// normalization tolerance for every family tested here.
pub const DEFAULT_KERNEL_SUPPORT: usize = 25;

/// Evaluate a kernel family on the centered integer grid and normalize it to
/// unit sum.
pub fn make_kernel(family: KernelFamily, support: usize) -> Result<BlurKernel> {
    family.validate()?;
    if support % 2 == 0 || support == 0 {
        return Err(Error::invalid(
            "support",
            format!("must be odd and positive, got {support}"),
        ));
    }
    let r = (support / 2) as isize;
    let mut values = Vec::with_capacity(support * support);
    let mut total = 0.0;
    for y in -r..=r {
        for x in -r..=r {
            let v = family.eval(x as f64, y as f64);
            total += v;
            values.push(v);
        }
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical(format!(
            "kernel {} sums to {total} before normalization",
            family.label()
        )));
    }
    for v in &mut values {
        *v /= total;
    }
    let values = Tensor::from_vec(vec![support, support], values)?;
    Ok(BlurKernel {
        family,
        support,
        values,
    })
}

impl BlurKernel {
    /// A unit impulse; convolving with it is the identity.
    pub fn delta(support: usize) -> Result<Self> {
        if support % 2 == 0 || support == 0 {
            return Err(Error::invalid(
                "support",
                format!("must be odd, got {support}"),
            ));
        }
        let mut data = vec![0.0; support * support];
        data[(support / 2) * support + support / 2] = 1.0;
        Ok(BlurKernel {
            family: KernelFamily::Uniform { s: 1.0 },
            support,
            values: Tensor::from_vec(vec![support, support], data)?,
        })
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn half_support(&self) -> usize {
        self.support / 2
    }
}

/// Border crop excluded from metric computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidMask {
    pub border: usize,
}

impl ValidMask {
    pub fn new(border: usize) -> Self {
        ValidMask { border }
    }
}

/// Interior of `x` with `border` pixels removed per side of each spatial dim.
pub fn valid_crop(x: &Tensor, mask: ValidMask) -> Result<Tensor> {
    let b = mask.border;
    if b == 0 {
        return Ok(x.clone());
    }
    match *x.shape() {
        [n] => {
            if 2 * b >= n {
                return Err(Error::DimensionMismatch(format!(
                    "border {b} too large for length {n}"
                )));
            }
            Tensor::from_vec(vec![n - 2 * b], x.data()[b..n - b].to_vec())
        }
        [h, w] => {
            if 2 * b >= h || 2 * b >= w {
                return Err(Error::DimensionMismatch(format!(
                    "border {b} too large for shape {h}x{w}"
                )));
            }
            let mut out = Vec::with_capacity((h - 2 * b) * (w - 2 * b));
            for i in b..h - b {
                out.extend_from_slice(&x.data()[i * w + b..i * w + w - b]);
            }
            Tensor::from_vec(vec![h - 2 * b, w - 2 * b], out)
        }
        _ => Err(Error::DimensionMismatch(format!(
            "valid_crop supports 1-d and 2-d tensors, got {:?}",
            x.shape()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    Circulant { kernel: BlurKernel },
    MaskedFourier { mask: Vec<bool> },
}

/// A forward measurement map together with its frequency-domain gains.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    shape: Vec<usize>,
    kind: OperatorKind,
    spectrum: Option<Vec<Complex64>>,
}

impl LinearOperator {
    pub fn identity(shape: Vec<usize>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::invalid(
                "shape",
                format!("dims must be positive, got {shape:?}"),
            ));
        }
        Ok(LinearOperator {
            shape,
            kind: OperatorKind::Identity,
            spectrum: None,
        })
    }

    /// Periodic convolution with `kernel` on an `h x w` grid.
    pub fn circulant(shape: Vec<usize>, kernel: BlurKernel) -> Result<Self> {
        let [h, w] = *shape.as_slice() else {
            return Err(Error::DimensionMismatch(format!(
                "circulant operators require a 2-d shape, got {shape:?}"
            )));
        };
        if kernel.support > h || kernel.support > w {
            return Err(Error::DimensionMismatch(format!(
                "kernel support {} exceeds image dims {h}x{w}",
                kernel.support
            )));
        }
        // Embed the kernel centered at the origin with periodic wrap, then
        // take its (unnormalized) DFT as the diagonal gain.
        let mut embedded = vec![Complex64::default(); h * w];
        let r = kernel.half_support() as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                let v = kernel.values().data()
                    [((dy + r) as usize) * kernel.support + (dx + r) as usize];
                let iy = dy.rem_euclid(h as isize) as usize;
                let ix = dx.rem_euclid(w as isize) as usize;
                embedded[iy * w + ix] += Complex64::new(v, 0.0);
            }
        }
        fft2_unitary(&mut embedded, h, w);
        let scale = ((h * w) as f64).sqrt();
        let spectrum: Vec<Complex64> = embedded.into_iter().map(|c| c * scale).collect();
        Ok(LinearOperator {
            shape,
            kind: OperatorKind::Circulant { kernel },
            spectrum: Some(spectrum),
        })
    }

    /// Frequency subsampling with a boolean per-coefficient mask; the mask
    /// must be symmetric under frequency negation so the operator maps real
    /// images to real tensors.
    pub fn masked_fourier(shape: Vec<usize>, mask: Vec<bool>) -> Result<Self> {
        let [h, w] = *shape.as_slice() else {
            return Err(Error::DimensionMismatch(format!(
                "masked Fourier operators require a 2-d shape, got {shape:?}"
            )));
        };
        if mask.len() != h * w {
            return Err(Error::DimensionMismatch(format!(
                "mask holds {} entries, expected {}",
                mask.len(),
                h * w
            )));
        }
        for i in 0..h {
            for j in 0..w {
                let ni = (h - i) % h;
                let nj = (w - j) % w;
                if mask[i * w + j] != mask[ni * w + nj] {
                    return Err(Error::invalid(
                        "mask",
                        format!("not symmetric under frequency negation at ({i},{j})"),
                    ));
                }
            }
        }
        let spectrum = mask
            .iter()
            .map(|&m| Complex64::new(if m { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Ok(LinearOperator {
            shape,
            kind: OperatorKind::MaskedFourier { mask },
            spectrum: Some(spectrum),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, OperatorKind::Identity)
    }

    /// Per-frequency complex gains; `None` for the identity (gain 1
    /// everywhere).
    pub fn spectrum(&self) -> Option<&[Complex64]> {
        self.spectrum.as_deref()
    }

    /// For circulant kinds, the kernel defining the convolution.
    pub fn kernel(&self) -> Option<&BlurKernel> {
        match &self.kind {
            OperatorKind::Circulant { kernel } => Some(kernel),
            _ => None,
        }
    }

    /// The 0/1 mask as a tensor, exportable as FT64.
    pub fn mask_tensor(&self) -> Option<Tensor> {
        match &self.kind {
            OperatorKind::MaskedFourier { mask } => Some(
                Tensor::from_vec(
                    self.shape.clone(),
                    mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
                )
                .expect("mask length was validated at construction"),
            ),
            _ => None,
        }
    }

    fn check_shape(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.shape.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "operator on {:?} applied to tensor of shape {:?}",
                self.shape,
                x.shape()
            )));
        }
        Ok(())
    }

    fn apply_spectrum(&self, x: &Tensor, conjugate: bool) -> Result<Tensor> {
        self.check_shape(x)?;
        let spectrum = match &self.spectrum {
            None => return Ok(x.clone()),
            Some(s) => s,
        };
        let [h, w] = *self.shape.as_slice() else {
            unreachable!("spectrum implies 2-d shape")
        };
        let mut buf = to_complex(x.data());
        fft2_unitary(&mut buf, h, w);
        for (v, d) in buf.iter_mut().zip(spectrum) {
            *v *= if conjugate { d.conj() } else { *d };
        }
        ifft2_unitary(&mut buf, h, w);
        let (data, residue) = to_real_with_residue(&buf);
        if residue > 1e-9 {
            return Err(Error::Numerical(format!(
                "operator output has imaginary residue {residue:.3e}"
            )));
        }
        Tensor::from_vec(self.shape.clone(), data)
    }

    /// Forward map `A x`.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        self.apply_spectrum(x, false)
    }

    /// Adjoint map `Aᵀ y`.
    pub fn apply_adjoint(&self, y: &Tensor) -> Result<Tensor> {
        self.apply_spectrum(y, true)
    }

    /// `max_i |d_i|^2` over the frequency gains.
    pub fn spectral_norm_sq(&self) -> Result<f64> {
        match &self.spectrum {
            None => Ok(1.0),
            Some(s) => Ok(s.iter().map(|d| d.norm_sqr()).fold(0.0, f64::max)),
        }
    }
}

/// Variable-density frequency-row mask for accelerated MRI-style sampling.
///
/// Keeps every row inside the central `center_fraction` band, then draws
/// further rows (in `±k` pairs, preserving Hermitian symmetry) with
/// Gaussian-decaying weights until roughly `h / acceleration` rows are kept.
pub fn make_mri_mask(
    shape: Vec<usize>,
    acceleration: f64,
    center_fraction: f64,
    seed: &SeedSpec,
) -> Result<LinearOperator> {
    let [h, w] = *shape.as_slice() else {
        return Err(Error::DimensionMismatch(format!(
            "MRI masks require a 2-d shape, got {shape:?}"
        )));
    };
    if !(acceleration >= 1.0) || !acceleration.is_finite() {
        return Err(Error::invalid(
            "acceleration",
            format!("must be >= 1, got {acceleration}"),
        ));
    }
    if !(center_fraction > 0.0 && center_fraction <= 1.0) {
        return Err(Error::invalid(
            "center_fraction",
            format!("must lie in (0, 1], got {center_fraction}"),
        ));
    }
    // Signed frequency index of row k.
    let freq = |k: usize| -> f64 {
        if k <= h / 2 {
            k as f64
        } else {
            k as f64 - h as f64
        }
    };
    let half_band = h as f64 * center_fraction / 2.0;
    let mut keep_row = vec![false; h];
    for k in 0..h {
        if freq(k).abs() <= half_band {
            keep_row[k] = true;
        }
    }
    let center_rows = keep_row.iter().filter(|&&m| m).count();
    let target_rows = (h as f64 / acceleration).round() as usize;
    if center_rows > target_rows {
        return Err(Error::invalid(
            "center_fraction",
            format!(
                "center band keeps {center_rows} rows, above the acceleration budget of {target_rows}"
            ),
        ));
    }

    // Candidate row pairs (k, h-k); k == h-k for DC and Nyquist.
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..=h / 2 {
        let mirror = (h - k) % h;
        if keep_row[k] || keep_row[mirror] {
            continue;
        }
        let f = freq(k);
        let bandwidth = h as f64 / 4.0;
        let weight = (-f * f / (2.0 * bandwidth * bandwidth)).exp();
        pairs.push((k, mirror, weight));
    }

    // Gaussian-weighted sampling without replacement until the budget is met.
    let mut rng = seed.rng();
    let mut kept = center_rows;
    while kept < target_rows && !pairs.is_empty() {
        let total: f64 = pairs.iter().map(|p| p.2).sum();
        let mut u = rand::Rng::random::<f64>(&mut rng) * total;
        let mut chosen = pairs.len() - 1;
        for (i, p) in pairs.iter().enumerate() {
            u -= p.2;
            if u <= 0.0 {
                chosen = i;
                break;
            }
        }
        let (k, mirror, _) = pairs.remove(chosen);
        keep_row[k] = true;
        keep_row[mirror] = true;
        kept += if k == mirror { 1 } else { 2 };
    }

    let mut mask = vec![false; h * w];
    for k in 0..h {
        if keep_row[k] {
            mask[k * w..(k + 1) * w].fill(true);
        }
    }
    LinearOperator::masked_fourier(shape, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_noise;

    fn random_image(h: usize, w: usize, seed: u64) -> Tensor {
        gaussian_noise(&[h, w], 1.0, &SeedSpec::new(seed)).unwrap()
    }

    #[test]
    fn gaussian_kernel_matches_formula() {
        let fam = KernelFamily::Gaussian { sigma: 2.0 };
        assert_eq!(fam.eval(0.0, 0.0), 1.0);
        assert!((fam.eval(2.0, 0.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn uniform_kernel_is_flat() {
        let k = make_kernel(KernelFamily::Uniform { s: 3.0 }, 7).unwrap();
        for &v in k.values().data() {
            assert!((v - 1.0 / 49.0).abs() < 1e-15);
        }
    }

    #[test]
    fn moffat_at_origin() {
        let fam = KernelFamily::Moffat {
            sigma: 0.5,
            mu: 1.0,
        };
        assert_eq!(fam.eval(0.0, 0.0), 1.0);
    }

    #[test]
    fn kernels_normalized_and_symmetric() {
        for fam in [
            KernelFamily::Gaussian { sigma: 2.0 },
            KernelFamily::Moffat {
                sigma: 0.5,
                mu: 1.0,
            },
            KernelFamily::Laplace { sigma: 0.4 },
            KernelFamily::LaplaceXY { sigma: 0.4 },
            KernelFamily::Uniform { s: 3.0 },
        ] {
            let k = make_kernel(fam, 25).unwrap();
            assert!((k.values().sum() - 1.0).abs() < 1e-12);
            let s = k.support;
            let d = k.values().data();
            for i in 0..s * s {
                let (y, x) = (i / s, i % s);
                let j = (s - 1 - y) * s + (s - 1 - x);
                assert_eq!(d[i], d[j], "central symmetry violated for {:?}", k.family);
            }
        }
    }

    #[test]
    fn invalid_kernel_params_rejected() {
        assert!(make_kernel(KernelFamily::Gaussian { sigma: 0.0 }, 25).is_err());
        assert!(make_kernel(KernelFamily::Gaussian { sigma: 2.0 }, 24).is_err());
        assert!(make_kernel(
            KernelFamily::Moffat {
                sigma: 0.5,
                mu: -1.0
            },
            25
        )
        .is_err());
        assert!(make_kernel(KernelFamily::Uniform { s: 0.5 }, 25).is_err());
    }

    #[test]
    fn identity_apply_is_exact() {
        let x = random_image(8, 8, 1);
        let op = LinearOperator::identity(vec![8, 8]).unwrap();
        assert_eq!(op.apply(&x).unwrap(), x);
        assert_eq!(op.spectral_norm_sq().unwrap(), 1.0);
    }

    #[test]
    fn delta_kernel_acts_as_identity() {
        let x = random_image(16, 16, 2);
        let op = LinearOperator::circulant(vec![16, 16], BlurKernel::delta(5).unwrap()).unwrap();
        let y = op.apply(&x).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn circulant_matches_direct_periodic_convolution() {
        // Independent O(n^2) oracle for the whole FFT path: embed, shift,
        // transform, multiply, invert.
        let (h, w) = (10, 12);
        let kernel = make_kernel(
            KernelFamily::Moffat {
                sigma: 0.6,
                mu: 1.2,
            },
            5,
        )
        .unwrap();
        let op = LinearOperator::circulant(vec![h, w], kernel.clone()).unwrap();
        let x = random_image(h, w, 21);
        let got = op.apply(&x).unwrap();

        let r = kernel.half_support() as isize;
        let kd = kernel.values().data();
        let mut direct = vec![0.0; h * w];
        for i in 0..h as isize {
            for j in 0..w as isize {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let kv = kd[((dy + r) as usize) * kernel.support + (dx + r) as usize];
                        let si = (i - dy).rem_euclid(h as isize) as usize;
                        let sj = (j - dx).rem_euclid(w as isize) as usize;
                        acc += kv * x.data()[si * w + sj];
                    }
                }
                direct[(i as usize) * w + j as usize] = acc;
            }
        }
        for (a, b) in got.data().iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "convolution mismatch: {a} vs {b}");
        }
    }

    #[test]
    fn operator_output_imaginary_residue_is_negligible() {
        use crate::fourier::{fft2_unitary, ifft2_unitary, to_complex};
        let (h, w) = (16, 16);
        let kernel = make_kernel(KernelFamily::Gaussian { sigma: 2.0 }, 9).unwrap();
        let op = LinearOperator::circulant(vec![h, w], kernel).unwrap();
        let x = random_image(h, w, 22);
        let mut buf = to_complex(x.data());
        fft2_unitary(&mut buf, h, w);
        for (v, d) in buf.iter_mut().zip(op.spectrum().unwrap()) {
            *v *= *d;
        }
        ifft2_unitary(&mut buf, h, w);
        let residue = buf.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
        assert!(residue <= 1e-10, "imaginary residue {residue:.3e}");
    }

    #[test]
    fn adjoint_inner_products_agree() {
        let kernel = make_kernel(KernelFamily::Gaussian { sigma: 2.0 }, 9).unwrap();
        let op = LinearOperator::circulant(vec![16, 16], kernel).unwrap();
        let u = random_image(16, 16, 3);
        let v = random_image(16, 16, 4);
        let lhs = op.apply(&u).unwrap().dot(&v).unwrap();
        let rhs = u.dot(&op.apply_adjoint(&v).unwrap()).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-10 * u.norm() * v.norm(),
            "adjoint mismatch: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn unit_sum_kernel_has_unit_spectral_norm() {
        let kernel = make_kernel(KernelFamily::Gaussian { sigma: 2.0 }, 9).unwrap();
        let op = LinearOperator::circulant(vec![32, 32], kernel).unwrap();
        assert!((op.spectral_norm_sq().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn valid_crop_dims_and_content() {
        let x = Tensor::from_vec(vec![10, 10], (0..100).map(|i| i as f64).collect()).unwrap();
        let crop = valid_crop(&x, ValidMask::new(2)).unwrap();
        assert_eq!(crop.shape(), &[6, 6]);
        assert_eq!(crop.data()[0], 22.0);
        assert_eq!(valid_crop(&x, ValidMask::new(0)).unwrap(), x);
        assert!(valid_crop(&x, ValidMask::new(5)).is_err());
    }

    #[test]
    fn crop_changes_norm_when_border_nonzero() {
        let mut data = vec![0.0; 64];
        for i in 0..8 {
            data[i] = 1.0; // nonzero top border row
        }
        let x = Tensor::from_vec(vec![8, 8], data).unwrap();
        let crop = valid_crop(&x, ValidMask::new(1)).unwrap();
        assert!(crop.norm_sq() < x.norm_sq());
        assert_eq!(crop.norm_sq(), 0.0);
    }

    #[test]
    fn mri_mask_full_when_unaccelerated() {
        let op = make_mri_mask(vec![8, 8], 1.0, 1.0, &SeedSpec::new(5)).unwrap();
        let mask = op.mask_tensor().unwrap();
        assert!(mask.data().iter().all(|&v| v == 1.0));
        let x = random_image(8, 8, 6);
        let y = op.apply(&x).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mri_mask_hits_acceleration_budget() {
        let op = make_mri_mask(vec![64, 64], 4.0, 0.08, &SeedSpec::new(7)).unwrap();
        let kept = op.mask_tensor().unwrap().sum();
        let target = 64.0 * 64.0 / 4.0;
        assert!(
            (kept - target).abs() <= 0.1 * target,
            "kept {kept} coefficients, target {target}"
        );
        // 0/1 gains: unit spectral norm.
        assert_eq!(op.spectral_norm_sq().unwrap(), 1.0);
    }

    #[test]
    fn mri_mask_deterministic_and_projection() {
        let a = make_mri_mask(vec![32, 32], 4.0, 0.1, &SeedSpec::new(11)).unwrap();
        let b = make_mri_mask(vec![32, 32], 4.0, 0.1, &SeedSpec::new(11)).unwrap();
        assert_eq!(a.mask_tensor().unwrap(), b.mask_tensor().unwrap());

        // Aᵀ A idempotent to high accuracy.
        let x = random_image(32, 32, 12);
        let ata = |t: &Tensor| a.apply_adjoint(&a.apply(t).unwrap()).unwrap();
        let once = ata(&x);
        let twice = ata(&once);
        let diff = twice.sub(&once).unwrap().norm();
        assert!(
            diff <= 1e-10 * once.norm().max(1.0),
            "projection defect {diff}"
        );
    }

    #[test]
    fn mri_mask_infeasible_center_rejected() {
        assert!(make_mri_mask(vec![64, 64], 8.0, 0.5, &SeedSpec::new(1)).is_err());
    }

    #[test]
    fn asymmetric_fourier_mask_rejected() {
        let mut mask = vec![false; 16];
        mask[1] = true; // frequency (0,1) without its mirror (0,3)
        assert!(LinearOperator::masked_fourier(vec![4, 4], mask).is_err());
    }
}

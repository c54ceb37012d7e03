use rustfft::num_complex::Complex64;

use super::stft::ComplexSpectrogram;
use crate::error::{Error, Result};

/// One complex mask per channel, each shaped like the spectrogram it scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMaskSet {
    masks: Vec<ComplexSpectrogram>,
}

impl ComplexMaskSet {
    pub fn new(masks: Vec<ComplexSpectrogram>) -> Result<Self> {
        let Some(first) = masks.first() else {
            return Err(Error::invalid("mask set needs at least one channel"));
        };
        if masks.iter().any(|m| !m.same_shape(first)) {
            return Err(Error::invalid("masks in a set must share their shape"));
        }
        Ok(Self { masks })
    }

    pub fn zeros(channels: usize, freq_bins: usize, frames: usize) -> Self {
        Self { masks: vec![ComplexSpectrogram::zeros(freq_bins, frames); channels.max(1)] }
    }

    /// `channels` copies of a constant mask value.
    pub fn constant(channels: usize, freq_bins: usize, frames: usize, value: Complex64) -> Self {
        let mut set = Self::zeros(channels, freq_bins, frames);
        for m in &mut set.masks {
            m.values_mut().fill(value);
        }
        set
    }

    pub fn channels(&self) -> usize {
        self.masks.len()
    }

    pub fn freq_bins(&self) -> usize {
        self.masks[0].freq_bins()
    }

    pub fn frames(&self) -> usize {
        self.masks[0].frames()
    }

    pub fn mask(&self, channel: usize) -> &ComplexSpectrogram {
        &self.masks[channel]
    }

    pub fn mask_mut(&mut self, channel: usize) -> &mut ComplexSpectrogram {
        &mut self.masks[channel]
    }

    pub fn masks(&self) -> &[ComplexSpectrogram] {
        &self.masks
    }
}

/// Real network input of shape `frames × freq_bins × 2C`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub frames: usize,
    pub freq_bins: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(frames: usize, freq_bins: usize, width: usize) -> Self {
        Self { frames, freq_bins, width, data: vec![0.0; frames * freq_bins * width] }
    }

    pub fn at(&self, frame: usize, bin: usize) -> &[f64] {
        let start = (frame * self.freq_bins + bin) * self.width;
        &self.data[start..start + self.width]
    }

    /// All bins of one frame, contiguous.
    pub fn frame(&self, frame: usize) -> &[f64] {
        let len = self.freq_bins * self.width;
        &self.data[frame * len..(frame + 1) * len]
    }
}

fn check_shapes(specs: &[ComplexSpectrogram]) -> Result<()> {
    let Some(first) = specs.first() else {
        return Err(Error::invalid("no spectrograms given"));
    };
    if let Some(c) = specs.iter().position(|s| !s.same_shape(first)) {
        return Err(Error::invalid(format!(
            "spectrogram {c} is {}x{}, spectrogram 0 is {}x{}",
            specs[c].freq_bins(),
            specs[c].frames(),
            first.freq_bins(),
            first.frames()
        )));
    }
    Ok(())
}

/// Stacks `(Re Y_1, Im Y_1, …, Re Y_C, Im Y_C)` per time-frequency bin.
pub fn stack_features(specs: &[ComplexSpectrogram]) -> Result<FeatureTensor> {
    check_shapes(specs)?;
    let (bins, frames) = (specs[0].freq_bins(), specs[0].frames());
    let width = 2 * specs.len();
    let mut data = Vec::with_capacity(frames * bins * width);
    for i in 0..frames {
        for f in 0..bins {
            for s in specs {
                let v = s.get(f, i);
                data.push(v.re);
                data.push(v.im);
            }
        }
    }
    Ok(FeatureTensor { frames, freq_bins: bins, width, data })
}

/// Filter-and-sum in the mask domain: `Σ_c M_c(f, i) · Y_c(f, i)`.
pub fn apply_masks(specs: &[ComplexSpectrogram], masks: &ComplexMaskSet) -> Result<ComplexSpectrogram> {
    check_shapes(specs)?;
    if masks.channels() != specs.len() {
        return Err(Error::invalid(format!(
            "{} masks for {} channels",
            masks.channels(),
            specs.len()
        )));
    }
    if !masks.mask(0).same_shape(&specs[0]) {
        return Err(Error::invalid("mask and spectrogram shapes differ"));
    }
    let mut out = ComplexSpectrogram::zeros(specs[0].freq_bins(), specs[0].frames());
    for (spec, mask) in specs.iter().zip(masks.masks()) {
        for ((o, y), m) in out.values_mut().iter_mut().zip(spec.values()).zip(mask.values()) {
            *o += m * y;
        }
    }
    Ok(out)
}

/// Gradient of a real loss w.r.t. each mask given the gradient w.r.t. the
/// combined spectrogram: `∂L/∂M_c = G ⊙ conj(Y_c)` in the `∂Re + j∂Im` convention.
pub fn apply_masks_adjoint(specs: &[ComplexSpectrogram], grad: &ComplexSpectrogram) -> Result<ComplexMaskSet> {
    check_shapes(specs)?;
    if !grad.same_shape(&specs[0]) {
        return Err(Error::invalid("gradient and spectrogram shapes differ"));
    }
    let masks = specs
        .iter()
        .map(|spec| {
            let values = grad.values().iter().zip(spec.values()).map(|(g, y)| g * y.conj()).collect();
            ComplexSpectrogram::from_values(spec.freq_bins(), spec.frames(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexMaskSet::new(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(v: Complex64) -> ComplexSpectrogram {
        ComplexSpectrogram::from_values(1, 1, vec![v]).unwrap()
    }

    fn random_spec(bins: usize, frames: usize, seed: u64) -> ComplexSpectrogram {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..bins * frames).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
        ComplexSpectrogram::from_values(bins, frames, vals).unwrap()
    }

    #[test]
    fn stacking_layout() {
        let ones = ComplexSpectrogram::from_values(3, 2, vec![c(1.0, 0.0); 6]).unwrap();
        let feats = stack_features(&[ones.clone(), ones.clone()]).unwrap();
        assert_eq!(feats.width, 4);
        assert!(feats.data.chunks(4).all(|v| v == [1.0, 0.0, 1.0, 0.0]));
        assert_eq!(stack_features(&[ones]).unwrap().width, 2);

        let feats = stack_features(&[single(c(3.0, 4.0)), single(c(-1.0, 2.0))]).unwrap();
        assert_eq!(feats.data, vec![3.0, 4.0, -1.0, 2.0]);
    }

    #[test]
    fn stacking_rejects_mismatch() {
        let a = ComplexSpectrogram::zeros(3, 2);
        let b = ComplexSpectrogram::zeros(3, 3);
        assert!(stack_features(&[a, b]).is_err());
    }

    #[test]
    fn hand_computed_combination() {
        let specs = [single(c(1.0, 1.0)), single(c(2.0, 0.0))];
        let masks = ComplexMaskSet::new(vec![single(c(0.5, 0.0)), single(c(0.0, 0.5))]).unwrap();
        assert_eq!(apply_masks(&specs, &masks).unwrap().get(0, 0), c(0.5, 1.5));
    }

    #[test]
    fn selection_mask_copies_channel() {
        let specs = [random_spec(5, 4, 1), random_spec(5, 4, 2)];
        let mut masks = ComplexMaskSet::zeros(2, 5, 4);
        masks.mask_mut(1).values_mut().fill(c(1.0, 0.0));
        assert_eq!(apply_masks(&specs, &masks).unwrap(), specs[1]);
        let zero = apply_masks(&specs, &ComplexMaskSet::zeros(2, 5, 4)).unwrap();
        assert!(zero.values().iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn shape_errors() {
        let specs = [random_spec(5, 4, 1), random_spec(5, 4, 2)];
        assert!(apply_masks(&specs, &ComplexMaskSet::zeros(1, 5, 4)).is_err());
        assert!(apply_masks(&specs, &ComplexMaskSet::zeros(2, 5, 3)).is_err());
    }

    #[test]
    fn adjoint_matches_inner_product() {
        let specs = [random_spec(4, 3, 7), random_spec(4, 3, 8)];
        let masks = ComplexMaskSet::new(vec![random_spec(4, 3, 9), random_spec(4, 3, 10)]).unwrap();
        let g = random_spec(4, 3, 11);
        let out = apply_masks(&specs, &masks).unwrap();
        let lhs: f64 = out.values().iter().zip(g.values()).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        let adj = apply_masks_adjoint(&specs, &g).unwrap();
        let rhs: f64 = masks
            .masks()
            .iter()
            .zip(adj.masks())
            .flat_map(|(m, d)| m.values().iter().zip(d.values()).map(|(a, b)| a.re * b.re + a.im * b.im))
            .sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn linear_in_masks(seed in any::<u64>()) {
            let specs = [random_spec(6, 5, seed), random_spec(6, 5, seed ^ 1)];
            let u = ComplexMaskSet::new(vec![random_spec(6, 5, seed ^ 2), random_spec(6, 5, seed ^ 3)]).unwrap();
            let v = ComplexMaskSet::new(vec![random_spec(6, 5, seed ^ 4), random_spec(6, 5, seed ^ 5)]).unwrap();
            let sum = ComplexMaskSet::new(
                u.masks().iter().zip(v.masks()).map(|(a, b)| {
                    let vals = a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect();
                    ComplexSpectrogram::from_values(6, 5, vals).unwrap()
                }).collect()
            ).unwrap();
            let lhs = apply_masks(&specs, &sum).unwrap();
            let (au, av) = (apply_masks(&specs, &u).unwrap(), apply_masks(&specs, &v).unwrap());
            for ((l, a), b) in lhs.values().iter().zip(au.values()).zip(av.values()) {
                let r = a + b;
                prop_assert!((l - r).norm() <= 1e-12 * r.norm().max(1.0));
            }
        }

        #[test]
        fn degenerates_to_single_channel(seed in any::<u64>(), keep in 0usize..3) {
            let specs = [random_spec(6, 5, seed), random_spec(6, 5, seed ^ 1), random_spec(6, 5, seed ^ 2)];
            let m = random_spec(6, 5, seed ^ 3);
            let mut multi = ComplexMaskSet::zeros(3, 6, 5);
            *multi.mask_mut(keep) = m.clone();
            let single_mask = ComplexMaskSet::new(vec![m]).unwrap();
            let lhs = apply_masks(&specs, &multi).unwrap();
            let rhs = apply_masks(std::slice::from_ref(&specs[keep]), &single_mask).unwrap();
            for (l, r) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((l - r).norm() <= 1e-15 * r.norm());
            }
        }
    }
}

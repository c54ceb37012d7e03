use serde::{Deserialize, Serialize};

use super::policy::{MethodPolicy, ReferencePolicy};
use crate::error::{Error, Result};
use crate::metrics::{si_sdr, si_sdr_with_grad};
use crate::scene::TrainingClip;
use crate::signal::MultiChannelWaveform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub channel: usize,
    pub si_sdr_per_channel: Vec<f64>,
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Scores `estimate` against every clean channel and picks the best,
/// lowest index on ties.
pub fn select_reference(estimate: &[f64], refs: &MultiChannelWaveform) -> Result<SelectionResult> {
    if refs.num_channels() == 0 {
        return Err(Error::invalid("no reference channels"));
    }
    let scores = refs.channels().iter().map(|r| si_sdr(estimate, r)).collect::<Result<Vec<_>>>()?;
    Ok(SelectionResult { channel: argmax(&scores), si_sdr_per_channel: scores })
}

/// Channel whose unprocessed mixture already has the highest SI-SDR against
/// its own clean signal.
pub fn input_reference(clip: &TrainingClip) -> Result<SelectionResult> {
    let scores = clip
        .mixture
        .channels()
        .iter()
        .zip(clip.refs.channels())
        .map(|(y, x)| si_sdr(y, x))
        .collect::<Result<Vec<_>>>()?;
    if scores.is_empty() {
        return Err(Error::invalid("clip has no channels"));
    }
    Ok(SelectionResult { channel: argmax(&scores), si_sdr_per_channel: scores })
}

/// Reference channel the policy scores `estimate` against.
pub fn target_channel(estimate: &[f64], clip: &TrainingClip, policy: MethodPolicy) -> Result<usize> {
    policy.validate(clip.channels())?;
    Ok(match policy.reference {
        ReferencePolicy::Fixed(c) => c,
        ReferencePolicy::AutoOut => select_reference(estimate, &clip.refs)?.channel,
        ReferencePolicy::AutoIn | ReferencePolicy::OracleInputFixed => input_reference(clip)?.channel,
    })
}

/// Negative SI-SDR against the policy's target, with the chosen channel.
pub fn loss(estimate: &[f64], clip: &TrainingClip, policy: MethodPolicy) -> Result<(f64, usize)> {
    let c = target_channel(estimate, clip, policy)?;
    Ok((-si_sdr(estimate, clip.refs.channel(c))?, c))
}

/// As [`loss`], plus the gradient with respect to `estimate`. The
/// references are constants.
pub fn loss_with_grad(estimate: &[f64], clip: &TrainingClip, policy: MethodPolicy) -> Result<(f64, usize, Vec<f64>)> {
    let c = target_channel(estimate, clip, policy)?;
    let (value, mut grad) = si_sdr_with_grad(estimate, clip.refs.channel(c))?;
    grad.iter_mut().for_each(|g| *g = -*g);
    Ok((-value, c, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::DoaTrajectory;

    fn clip(mixture: Vec<Vec<f64>>, refs: Vec<Vec<f64>>) -> TrainingClip {
        let doa = DoaTrajectory::from_angles(vec![0.0], &[(0.0, 0.0)]).unwrap();
        TrainingClip::from_parts(
            "t",
            MultiChannelWaveform::new(mixture, 16000).unwrap(),
            MultiChannelWaveform::new(refs, 16000).unwrap(),
            doa,
        )
        .unwrap()
    }

    #[test]
    fn ties_pick_lowest_index() {
        let r = vec![1.0, -2.0, 0.5, 3.0];
        let refs = MultiChannelWaveform::new(vec![r.clone(), r.clone(), r], 16000).unwrap();
        assert_eq!(select_reference(&[0.3, 0.1, -0.2, 1.0], &refs).unwrap().channel, 0);
    }

    #[test]
    fn exact_match_wins() {
        let refs = MultiChannelWaveform::new(vec![vec![1.0, 0.0, 1.0, 0.5], vec![0.2, 1.0, -1.0, 0.0]], 16000).unwrap();
        let sel = select_reference(refs.channel(1), &refs).unwrap();
        assert_eq!(sel.channel, 1);
        assert_eq!(sel.si_sdr_per_channel[1], 120.0);
    }

    #[test]
    fn single_channel_policies_coincide() {
        let c = clip(vec![vec![1.0, 0.2, -0.4, 0.3]], vec![vec![0.9, 0.0, -0.5, 0.3]]);
        let est = [0.5, 0.1, -0.1, 0.2];
        let fixed = loss(&est, &c, MethodPolicy::MM_LEFT).unwrap();
        assert_eq!(loss(&est, &c, MethodPolicy::MM_AUTO_OUT).unwrap(), fixed);
        assert_eq!(loss(&est, &c, MethodPolicy::MM_AUTO_IN).unwrap(), fixed);
        assert_eq!(loss(&est, &c, MethodPolicy::SM_FIXED_ORACLE).unwrap(), fixed);
    }

    #[test]
    fn auto_in_ignores_estimate() {
        // Channel 1 mixture is much closer to its clean signal.
        let c = clip(
            vec![vec![1.0, 1.0, -1.0, 0.0], vec![0.5, 0.01, 0.3, -0.2]],
            vec![vec![0.0, 1.0, 0.0, 1.0], vec![0.5, 0.0, 0.3, -0.2]],
        );
        let a = loss(&[1.0, 2.0, 3.0, 4.0], &c, MethodPolicy::MM_AUTO_IN).unwrap().1;
        let b = loss(c.refs.channel(0), &c, MethodPolicy::MM_AUTO_IN).unwrap().1;
        assert_eq!((a, b), (1, 1));
    }

    #[test]
    fn gradient_is_fixed_channel_gradient() {
        let c = clip(
            vec![vec![1.0, 0.3, -0.2, 0.1], vec![0.1, 0.4, 0.2, -0.3]],
            vec![vec![0.8, 0.2, -0.1, 0.0], vec![0.0, 0.5, 0.2, -0.2]],
        );
        let est = [0.05, 0.45, 0.15, -0.25];
        let (l, ch, g) = loss_with_grad(&est, &c, MethodPolicy::MM_AUTO_OUT).unwrap();
        let fixed = MethodPolicy::new(crate::train::Masking::Mm, ReferencePolicy::Fixed(ch));
        let (lf, _, gf) = loss_with_grad(&est, &c, fixed).unwrap();
        assert_eq!((l, &g), (lf, &gf));
        assert_eq!(ch, 1);
    }
}

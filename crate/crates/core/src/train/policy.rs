use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Masking {
    /// One mask, applied to the designated reference channel.
    Sm,
    /// One mask per channel, masked spectra summed.
    Mm,
}

/// How the channel whose clean signal is the target gets chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReferencePolicy {
    Fixed(usize),
    /// Per visit, the channel whose reference scores the output highest.
    AutoOut,
    /// The channel whose unprocessed mixture has the highest SI-SDR.
    AutoIn,
    /// As `AutoIn`, and that channel is also moved to the front of the
    /// network input.
    OracleInputFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodPolicy {
    pub masking: Masking,
    pub reference: ReferencePolicy,
}

impl MethodPolicy {
    pub const SM_LEFT: Self = Self::new(Masking::Sm, ReferencePolicy::Fixed(0));
    pub const SM_RIGHT: Self = Self::new(Masking::Sm, ReferencePolicy::Fixed(1));
    pub const MM_LEFT: Self = Self::new(Masking::Mm, ReferencePolicy::Fixed(0));
    pub const MM_RIGHT: Self = Self::new(Masking::Mm, ReferencePolicy::Fixed(1));
    pub const SM_FIXED_ORACLE: Self = Self::new(Masking::Sm, ReferencePolicy::OracleInputFixed);
    pub const MM_AUTO_IN: Self = Self::new(Masking::Mm, ReferencePolicy::AutoIn);
    pub const MM_AUTO_OUT: Self = Self::new(Masking::Mm, ReferencePolicy::AutoOut);

    /// The seven named methods, in CLI order.
    pub const NAMED: [(&'static str, MethodPolicy); 7] = [
        ("sm-left", Self::SM_LEFT),
        ("sm-right", Self::SM_RIGHT),
        ("mm-left", Self::MM_LEFT),
        ("mm-right", Self::MM_RIGHT),
        ("sm-fixed-oracle", Self::SM_FIXED_ORACLE),
        ("mm-auto-in", Self::MM_AUTO_IN),
        ("mm-auto-out", Self::MM_AUTO_OUT),
    ];

    pub const fn new(masking: Masking, reference: ReferencePolicy) -> Self {
        Self { masking, reference }
    }

    /// Number of masks the network must emit for `channels` inputs.
    pub fn output_channels(&self, channels: usize) -> usize {
        match self.masking {
            Masking::Sm => 1,
            Masking::Mm => channels,
        }
    }

    /// Rejects combinations that have no single designated channel to mask
    /// and fixed channels that do not exist.
    pub fn validate(&self, channels: usize) -> Result<()> {
        if channels == 0 {
            return Err(Error::config("policy needs at least one channel"));
        }
        match (self.masking, self.reference) {
            (_, ReferencePolicy::Fixed(c)) if c >= channels => {
                Err(Error::config(format!("fixed reference channel {c} but only {channels} channels")))
            }
            (Masking::Sm, ReferencePolicy::AutoOut | ReferencePolicy::AutoIn) => {
                Err(Error::config("single-channel masking needs a fixed or oracle-input reference"))
            }
            _ => Ok(()),
        }
    }

    /// True when the scoring reference depends on the clean signals.
    pub fn uses_oracle_reference(&self) -> bool {
        !matches!(self.reference, ReferencePolicy::Fixed(_))
    }

    pub fn name(&self) -> String {
        Self::NAMED
            .iter()
            .find(|(_, p)| p == self)
            .map(|(n, _)| n.to_string())
            .unwrap_or_else(|| {
                let m = match self.masking {
                    Masking::Sm => "sm",
                    Masking::Mm => "mm",
                };
                match self.reference {
                    ReferencePolicy::Fixed(c) => format!("{m}-fixed-{c}"),
                    ReferencePolicy::AutoOut => format!("{m}-auto-out"),
                    ReferencePolicy::AutoIn => format!("{m}-auto-in"),
                    ReferencePolicy::OracleInputFixed => format!("{m}-fixed-oracle"),
                }
            })
    }
}

impl fmt::Display for MethodPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MethodPolicy {
    type Err = Error;

    /// Accepts the seven named methods plus `sm-fixed-<c>` / `mm-fixed-<c>`
    /// and `mm-fixed-oracle`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((_, p)) = Self::NAMED.iter().find(|(n, _)| *n == s) {
            return Ok(*p);
        }
        let (masking, rest) = match s.split_once('-') {
            Some(("sm", r)) => (Masking::Sm, r),
            Some(("mm", r)) => (Masking::Mm, r),
            _ => return Err(Error::config(format!("unknown method '{s}'"))),
        };
        let reference = match rest {
            "fixed-oracle" => ReferencePolicy::OracleInputFixed,
            "auto-in" => ReferencePolicy::AutoIn,
            "auto-out" => ReferencePolicy::AutoOut,
            r => match r.strip_prefix("fixed-").and_then(|c| c.parse().ok()) {
                Some(c) => ReferencePolicy::Fixed(c),
                None => return Err(Error::config(format!("unknown method '{s}'"))),
            },
        };
        Ok(Self::new(masking, reference))
    }
}

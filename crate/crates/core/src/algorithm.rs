use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;

/// The learning algorithms the workbench knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Conventional linear TD(0), no importance sampling.
    OnPolicyTd0,
    /// TD(0) with every update scaled by the importance ratio.
    OffPolicyTd0,
    /// Emphatic TD(0): followon trace with unit interest, no bootstrapping trace.
    EmphaticTd0,
    /// Emphatic TD(λ) with state-dependent γ, λ and interest.
    Emphatic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::OnPolicyTd0,
        Algorithm::OffPolicyTd0,
        Algorithm::EmphaticTd0,
        Algorithm::Emphatic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OnPolicyTd0 => "on-policy-td0",
            Algorithm::OffPolicyTd0 => "off-policy-td0",
            Algorithm::EmphaticTd0 => "emphatic-td0",
            Algorithm::Emphatic => "emphatic",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on-policy-td0" | "td0" => Ok(Algorithm::OnPolicyTd0),
            "off-policy-td0" => Ok(Algorithm::OffPolicyTd0),
            "emphatic-td0" => Ok(Algorithm::EmphaticTd0),
            "emphatic" | "emphatic-td-lambda" => Ok(Algorithm::Emphatic),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.name().parse::<Algorithm>().unwrap(), alg);
        }
        assert!("gtd2".parse::<Algorithm>().is_err());
    }
}

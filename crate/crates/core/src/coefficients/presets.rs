use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{strat_to_ito, CoefficientSet, Nonlocal, Nu, Phi, Reaction, Sigma};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Heat,
    SineGordon,
    DeanKawasaki,
}

impl PresetName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Heat => "heat",
            PresetName::SineGordon => "sine_gordon",
            PresetName::DeanKawasaki => "dean_kawasaki",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(PresetName::Heat),
            "sine_gordon" => Ok(PresetName::SineGordon),
            "dean_kawasaki" => Ok(PresetName::DeanKawasaki),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

fn default_delta_reg() -> f64 {
    0.2
}

fn default_kappa() -> f64 {
    1.0
}

/// Parameters shared by the presets. Fields a preset does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    #[serde(default)]
    pub epsilon: f64,
    /// Noise constant `F₁` used by the Stratonovich-to-Itô correction.
    #[serde(default)]
    pub f1: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_delta_reg")]
    pub delta_reg: f64,
    /// Overrides the preset's noise coefficient.
    #[serde(default)]
    pub sigma: Option<Sigma>,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            f1: 0.0,
            kappa: default_kappa(),
            delta_reg: default_delta_reg(),
            sigma: None,
        }
    }
}

/// Builds a named coefficient set.
///
/// * `heat`: `Φ = id`, `σ = 0`, `ν = B = f = 0`. Passes every sampled check
///   on any range.
/// * `sine_gordon`: `Φ = id`, `f = κ sin`, `σ` from `params.sigma` (default
///   `ξ/(1+ξ)`). Passes on `[1e-4, 1e3]` for `κ ≥ 0`.
/// * `dean_kawasaki`: `σ(ξ) = √(ξ+δ²) − δ` with `δ = delta_reg`, `Φ` the Itô
///   form `ρ + (εF₁/2) g(ρ)`. Passes on `[1e-4, 10]` for `δ ∈ [0.05, 1]`,
///   `εF₁ ≤ 1`. Smaller floors keep every bound finite but push the
///   second-derivative constant (`~δ⁻³`) beyond what the sampled test accepts.
pub fn preset(name: PresetName, params: &PresetParams) -> Result<CoefficientSet> {
    let base = CoefficientSet {
        name: name.as_str().to_string(),
        phi: Phi::identity(),
        sigma: Sigma::Zero,
        nu: Nu::Zero,
        reaction: Reaction::Zero,
        nonlocal: Nonlocal::Zero,
        epsilon: params.epsilon,
        growth_exponent: 1.0,
    };
    let cs = match name {
        PresetName::Heat => CoefficientSet {
            sigma: params.sigma.unwrap_or(Sigma::Zero),
            ..base
        },
        PresetName::SineGordon => CoefficientSet {
            sigma: params.sigma.unwrap_or(Sigma::Saturating { a: 1.0 }),
            reaction: Reaction::Sine { kappa: params.kappa },
            ..base
        },
        PresetName::DeanKawasaki => {
            let sigma = params.sigma.unwrap_or(Sigma::RegularizedSqrt {
                delta: params.delta_reg,
            });
            let corr = strat_to_ito(sigma, params.epsilon, params.f1)?;
            CoefficientSet {
                phi: corr.phi(),
                sigma,
                ..base
            }
        }
    };
    cs.validate()?;
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::verify_assumptions;

    #[test]
    fn names_round_trip() {
        for n in [PresetName::Heat, PresetName::SineGordon, PresetName::DeanKawasaki] {
            assert_eq!(n.as_str().parse::<PresetName>().unwrap(), n);
        }
        assert!(matches!("burgers".parse::<PresetName>(), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn sine_gordon_lipschitz_constant() {
        let cs = preset(PresetName::SineGordon, &PresetParams::default()).unwrap();
        assert_eq!(cs.f_lip(), 1.0);
    }

    #[test]
    fn presets_pass_their_documented_ranges() {
        let sg = preset(
            PresetName::SineGordon,
            &PresetParams {
                epsilon: 0.1,
                f1: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let r = verify_assumptions(&sg, 1.0, [1e-4, 1e3], 200).unwrap();
        assert!(
            r.all_satisfied(),
            "{:#?}",
            r.entries.iter().filter(|e| !e.satisfied).collect::<Vec<_>>()
        );
        for delta_reg in [0.05, 0.2, 1.0] {
            let p = PresetParams {
                epsilon: 0.5,
                f1: 2.0,
                delta_reg,
                ..Default::default()
            };
            let dk = preset(PresetName::DeanKawasaki, &p).unwrap();
            let r = verify_assumptions(&dk, 2.0, [1e-4, 10.0], 200).unwrap();
            assert!(
                r.all_satisfied(),
                "delta {delta_reg}: {:#?}",
                r.entries.iter().filter(|e| !e.satisfied).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn dean_kawasaki_coercivity_is_at_least_one() {
        let p = PresetParams {
            epsilon: 0.01,
            f1: 1.08,
            delta_reg: 0.2,
            ..Default::default()
        };
        let dk = preset(PresetName::DeanKawasaki, &p).unwrap();
        let r = verify_assumptions(&dk, p.f1, [1e-4, 10.0], 400).unwrap();
        // grid-minimisation oracle: Φ' − (εF₁/2)(σ')² = 1 identically
        let xs = super::super::assumptions::log_grid(1e-4, 10.0, 400);
        let oracle = xs
            .iter()
            .map(|&x| dk.phi.deriv(x) - 0.5 * p.epsilon * p.f1 * dk.sigma.deriv(x).powi(2))
            .fold(f64::INFINITY, f64::min);
        assert!((r.coercivity_constant - oracle).abs() < 1e-15);
        assert!(r.coercivity_constant >= 1.0 - 1e-12);
        assert!(r.entry("coercivity").unwrap().satisfied);
    }

    #[test]
    fn dean_kawasaki_small_floor_keeps_origin_bound() {
        let p = PresetParams {
            epsilon: 0.01,
            f1: 1.0,
            delta_reg: 1e-3,
            ..Default::default()
        };
        let dk = preset(PresetName::DeanKawasaki, &p).unwrap();
        let r = verify_assumptions(&dk, 1.0, [1e-6, 10.0], 300).unwrap();
        let e = r.entry("sigma_origin").unwrap();
        assert!(e.satisfied, "{e:?}");
        // σ²/ξ ≤ 1 for the regularised square root
        assert!(e.constant.unwrap() <= 1.0);
        assert!(!r.entry("second_derivative_decay").unwrap().satisfied);
    }
}

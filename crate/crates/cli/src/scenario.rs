//! Scenario resolution: named circuit variants plus preparation angles.

use std::str::FromStr;

use thermoleak_core::detector::ReadoutNoiseProfile;
use thermoleak_core::qcore::{
    fig2b, fig2b_no_leak, scaleup_circuit, swap_variant, Circuit, QubitOrdering, ScaleVariant,
};
use thermoleak_core::thermal::{DiagonalEnsemble, QubitSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Fig2b,
    Fig2bNoLeak,
    Swap,
    Scaleup { n: usize, variant: ScaleVariant },
}

impl Variant {
    pub fn name(&self) -> String {
        match self {
            Variant::Fig2b => "fig2b".into(),
            Variant::Fig2bNoLeak => "fig2b-no-leak".into(),
            Variant::Swap => "swap".into(),
            Variant::Scaleup { n, variant: ScaleVariant::Chain } => format!("scaleup{{{n},chain}}"),
            Variant::Scaleup { n, variant: ScaleVariant::Swap } => format!("scaleup{{{n},swap}}"),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "fig2b" => return Ok(Variant::Fig2b),
            "fig2b-no-leak" => return Ok(Variant::Fig2bNoLeak),
            "swap" => return Ok(Variant::Swap),
            _ => {}
        }
        if let Some(body) = s.strip_prefix("scaleup{").and_then(|r| r.strip_suffix('}')) {
            let (n_str, v_str) = body
                .split_once(',')
                .ok_or_else(|| format!("expected scaleup{{n,variant}}, got `{s}`"))?;
            let n: usize =
                n_str.trim().parse().map_err(|_| format!("bad scaleup size `{n_str}`"))?;
            let variant = match v_str.trim() {
                "chain" => ScaleVariant::Chain,
                "swap" => ScaleVariant::Swap,
                other => return Err(format!("unknown scaleup variant `{other}`")),
            };
            return Ok(Variant::Scaleup { n, variant });
        }
        Err(format!("unknown scenario `{s}` (fig2b | fig2b-no-leak | swap | scaleup{{n,chain|swap}})"))
    }
}

/// Angles accept plain radians or multiples of pi ("0.25pi"), so the
/// reference values stay exact.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Some(prefix) = t.strip_suffix("pi") {
        let factor = if prefix.trim().is_empty() {
            1.0
        } else {
            prefix.trim().parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?
        };
        return Ok(factor * std::f64::consts::PI);
    }
    t.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))
}

/// "tenerife" | "yorktown" | "noiseless" | comma-separated symmetric rates.
pub fn parse_noise_profile(s: &str, qubit_count: usize) -> Result<ReadoutNoiseProfile, String> {
    let t = s.trim().to_ascii_lowercase();
    let base = match t.as_str() {
        "tenerife" => ReadoutNoiseProfile::tenerife_like(),
        "yorktown" => ReadoutNoiseProfile::yorktown_like(),
        "noiseless" => return Ok(ReadoutNoiseProfile::noiseless(qubit_count)),
        _ => {
            let rates: Result<Vec<f64>, _> = t.split(',').map(|r| r.trim().parse::<f64>()).collect();
            let rates = rates.map_err(|_| format!("bad noise profile `{s}`"))?;
            ReadoutNoiseProfile::symmetric(&rates).map_err(|e| e.to_string())?
        }
    };
    Ok(base.extended_to(qubit_count))
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub variant: Variant,
    pub theta_c: f64,
    pub theta_h: f64,
    pub theta_e: f64,
}

impl Scenario {
    pub fn ordering(&self) -> QubitOrdering {
        match self.variant {
            Variant::Scaleup { n, .. } => {
                QubitOrdering::scaleup(n).expect("size validated at parse time")
            }
            _ => QubitOrdering::che(),
        }
    }

    pub fn circuit(&self) -> Circuit {
        match self.variant {
            Variant::Fig2b => fig2b(),
            Variant::Fig2bNoLeak => fig2b_no_leak(),
            Variant::Swap => swap_variant(),
            Variant::Scaleup { n, variant } => {
                scaleup_circuit(n, variant).expect("size validated at parse time")
            }
        }
    }

    /// One spec per register qubit: c-labels cold, h-labels hot, e leaky.
    pub fn specs(&self) -> Vec<QubitSpec> {
        self.ordering()
            .labels()
            .iter()
            .map(|label| match label.as_bytes()[0] {
                b'c' => QubitSpec::with_unit_gap(self.theta_c),
                b'h' => QubitSpec::with_unit_gap(self.theta_h),
                _ => QubitSpec::with_unit_gap(self.theta_e),
            })
            .collect()
    }

    pub fn ensemble(&self) -> DiagonalEnsemble {
        DiagonalEnsemble::new(self.specs())
    }

    pub fn qubit_count(&self) -> usize {
        self.ordering().len()
    }
}

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! classes {
    ($(#[$m:meta])* $name:ident { $($var:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($var),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$var => $s),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($s => Some($name::$var),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

classes!(
    /// a1: behavior along the time axis.
    Temporal { Continuous => "continuous", Pulsed => "pulsed", Burst => "burst" }
);
classes!(
    /// a2: occupied bandwidth class.
    Occupancy { Narrow => "narrow", Medium => "medium", Wide => "wide" }
);
classes!(
    /// a3: contrast against the noise floor.
    Snr { Low => "low", Medium => "medium", High => "high" }
);
classes!(
    /// a4: single emitter or co-channel overlap.
    Isolation { Isolated => "isolated", Overlapping => "overlapping" }
);
classes!(
    /// a5: technology family.
    TechFamily { Cellular => "cellular", Ism => "ism", Broadcast => "broadcast", Radar => "radar" }
);

/// Every class name of the five attributes.
pub fn class_vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&'static str> = Vec::new();
    v.extend(Temporal::ALL.iter().map(|c| c.name()));
    v.extend(Occupancy::ALL.iter().map(|c| c.name()));
    v.extend(Snr::ALL.iter().map(|c| c.name()));
    v.extend(Isolation::ALL.iter().map(|c| c.name()));
    v.extend(TechFamily::ALL.iter().map(|c| c.name()));
    v.sort_unstable();
    v.dedup();
    v
}

/// Reference labels for one scenario. Sets let a straddling label such as
/// "narrow-to-medium" accept either class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub temporal: BTreeSet<Temporal>,
    pub occupancy: BTreeSet<Occupancy>,
    pub snr: BTreeSet<Snr>,
    pub isolation: BTreeSet<Isolation>,
    pub tech_family: BTreeSet<TechFamily>,
    #[serde(default)]
    pub full_span_occupied: bool,
    #[serde(default = "yes")]
    pub signal_present: bool,
    /// Entries chosen by the implementer rather than read from the source
    /// description, e.g. `["snr:high"]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assigned: Vec<String>,
}

fn yes() -> bool {
    true
}

impl GroundTruth {
    pub fn validate(&self) -> Result<(), crate::ConfigError> {
        let empty = [
            ("temporal", self.temporal.is_empty()),
            ("occupancy", self.occupancy.is_empty()),
            ("snr", self.snr.is_empty()),
            ("isolation", self.isolation.is_empty()),
            ("tech_family", self.tech_family.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((n, _)) => Err(crate::ConfigError::new(format!("ground truth set {n} is empty"))),
            None => Ok(()),
        }
    }
}

/// What one response asserts. `None` means the attribute is unstated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeExtraction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<Temporal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<Occupancy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<Snr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolation: Option<Isolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tech_family: Option<TechFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_mhz: Option<f64>,
    #[serde(default)]
    pub references_settings: bool,
    #[serde(default)]
    pub image_grounded_evidence: bool,
    #[serde(default)]
    pub claims_no_signal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_tech_label: Option<String>,
}

impl AttributeExtraction {
    /// The five scored attributes plus the no-signal flag, the part an
    /// adjudication and the extractor are compared on.
    pub fn classes(&self) -> (Option<Temporal>, Option<Occupancy>, Option<Snr>, Option<Isolation>, Option<TechFamily>, bool) {
        (self.temporal, self.occupancy, self.snr, self.isolation, self.tech_family, self.claims_no_signal)
    }

    pub fn clear_attributes(&mut self) {
        self.temporal = None;
        self.occupancy = None;
        self.snr = None;
        self.isolation = None;
        self.tech_family = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leakage {
    Leaked,
    Grounded,
    NoBandwidthEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HallucinationKind {
    FalseNegative,
    TechLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hallucination {
    pub kind: HallucinationKind,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    /// a1..a5 in attribute order.
    pub bits: [u8; 5],
    pub paes: u8,
    pub leakage: Leakage,
    pub hallucinations: Vec<Hallucination>,
}

impl TrialScore {
    pub fn count(&self, kind: HallucinationKind) -> usize {
        self.hallucinations.iter().filter(|h| h.kind == kind).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_round_trip() {
        for t in Temporal::ALL {
            assert_eq!(Temporal::parse(t.name()), Some(*t));
        }
        assert_eq!(TechFamily::parse("ISM"), Some(TechFamily::Ism));
        assert_eq!(Snr::parse("loud"), None);
        assert_eq!(class_vocabulary().len(), 14);
    }

    #[test]
    fn ground_truth_sets_must_be_non_empty() {
        let gt: GroundTruth = toml::from_str(
            r#"
            temporal = ["continuous"]
            occupancy = []
            snr = ["low"]
            isolation = ["isolated"]
            tech_family = ["ism"]
            "#,
        )
        .unwrap();
        assert!(gt.signal_present);
        assert!(gt.validate().is_err());
    }
}

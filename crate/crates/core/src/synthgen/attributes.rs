use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ArmrestStyle, ChairSpec, LegStyle, PartId};

/// Thresholds turning continuous parameters into named attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeRules {
    /// Backrests reclined strictly beyond this angle are `backrest/reclined`.
    pub recline_deg: f64,
    /// Curvature strictly above this is `backrest/curved`.
    pub curvature: f64,
    /// Tercile boundaries of the seat width range.
    pub seat_width_terciles: (f64, f64),
}

impl Default for AttributeRules {
    fn default() -> Self {
        let (lo, hi) = super::SpecRanges::default().seat_width;
        let step = (hi - lo) / 3.0;
        Self { recline_deg: 20.0, curvature: 0.5, seat_width_terciles: (lo + step, lo + 2.0 * step) }
    }
}

/// Every attribute name the rules can produce.
pub const ATTRIBUTE_NAMES: [&str; 13] = [
    "backrest/reclined",
    "backrest/upright",
    "backrest/curved",
    "backrest/flat",
    "seat/narrow",
    "seat/medium",
    "seat/wide",
    "legs/straight",
    "legs/swivel",
    "legs/cantilever",
    "armrest/none",
    "armrest/connected",
    "armrest/disconnected",
];

/// The part an attribute name belongs to (its prefix before `/`).
pub fn attribute_part(name: &str) -> Option<PartId> {
    PartId::parse(name.split('/').next()?)
}

pub fn true_attributes(spec: &ChairSpec, rules: &AttributeRules) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut put = |s: &str| {
        out.insert(s.to_string());
    };
    put(match spec.leg_style {
        LegStyle::Straight4 => "legs/straight",
        LegStyle::Swivel5 => "legs/swivel",
        LegStyle::Cantilever => "legs/cantilever",
    });
    put(match spec.armrest_style {
        ArmrestStyle::None => "armrest/none",
        ArmrestStyle::Connected => "armrest/connected",
        ArmrestStyle::Disconnected => "armrest/disconnected",
    });
    put(if spec.back_recline_deg > rules.recline_deg { "backrest/reclined" } else { "backrest/upright" });
    put(if spec.back_curvature > rules.curvature { "backrest/curved" } else { "backrest/flat" });
    let (t1, t2) = rules.seat_width_terciles;
    put(if spec.seat_width < t1 {
        "seat/narrow"
    } else if spec.seat_width < t2 {
        "seat/medium"
    } else {
        "seat/wide"
    });
    out
}

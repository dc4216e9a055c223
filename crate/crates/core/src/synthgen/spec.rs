use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LegStyle {
    Straight4,
    Swivel5,
    Cantilever,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmrestStyle {
    None,
    Connected,
    Disconnected,
}

impl LegStyle {
    pub const ALL: [LegStyle; 3] = [LegStyle::Straight4, LegStyle::Swivel5, LegStyle::Cantilever];
}

impl ArmrestStyle {
    pub const ALL: [ArmrestStyle; 3] = [ArmrestStyle::None, ArmrestStyle::Connected, ArmrestStyle::Disconnected];
}

/// Generating parameters of one chair, in pre-normalisation units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChairSpec {
    pub seat_width: f64,
    pub seat_depth: f64,
    pub seat_thickness: f64,
    pub back_height: f64,
    pub back_recline_deg: f64,
    pub back_curvature: f64,
    pub leg_style: LegStyle,
    pub leg_height: f64,
    pub armrest_style: ArmrestStyle,
    pub seed: u64,
}

/// Inclusive ranges for the continuous parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecRanges {
    pub seat_width: (f64, f64),
    pub seat_depth: (f64, f64),
    pub seat_thickness: (f64, f64),
    pub back_height: (f64, f64),
    pub back_recline_deg: (f64, f64),
    pub back_curvature: (f64, f64),
    pub leg_height: (f64, f64),
}

impl Default for SpecRanges {
    fn default() -> Self {
        Self {
            seat_width: (0.8, 1.2),
            seat_depth: (0.75, 1.05),
            seat_thickness: (0.05, 0.14),
            back_height: (0.6, 1.1),
            back_recline_deg: (0.0, 40.0),
            back_curvature: (0.0, 1.0),
            leg_height: (0.55, 0.95),
        }
    }
}

impl ChairSpec {
    pub fn validate(&self) -> Result<()> {
        let r = SpecRanges::default();
        let checks = [
            ("seat_width", self.seat_width, r.seat_width),
            ("seat_depth", self.seat_depth, r.seat_depth),
            ("seat_thickness", self.seat_thickness, r.seat_thickness),
            ("back_height", self.back_height, r.back_height),
            ("back_recline_deg", self.back_recline_deg, r.back_recline_deg),
            ("back_curvature", self.back_curvature, r.back_curvature),
            ("leg_height", self.leg_height, r.leg_height),
        ];
        for (name, v, (lo, hi)) in checks {
            if !(v >= lo && v <= hi) {
                return Err(Error::InvalidInput(format!("{name} = {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Probability tables for the discrete styles, in the order of `LegStyle::ALL` / `ArmrestStyle::ALL`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StyleWeights {
    pub legs: [f64; 3],
    pub armrest: [f64; 3],
}

impl Default for StyleWeights {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        Self { legs: [third; 3], armrest: [third; 3] }
    }
}

impl StyleWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("legs", &self.legs), ("armrest", &self.armrest)] {
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} weights must be finite and nonnegative")));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("{name} weights sum to {s}, expected 1")));
            }
        }
        Ok(())
    }
}

fn pick(w: &[f64; 3], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &x) in w.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` past the last cumulative weight: take the last positive entry.
    w.iter().rposition(|&x| x > 0.0).unwrap_or(2)
}

/// Draws a chair specification; continuous parameters are uniform in their ranges.
pub fn sample_spec(seed: u64, weights: &StyleWeights) -> Result<ChairSpec> {
    weights.validate()?;
    let r = SpecRanges::default();
    let mut g = rng::derived(seed, "chair-spec", 0);
    let mut u = |(lo, hi): (f64, f64)| lo + (hi - lo) * g.random::<f64>();
    let seat_width = u(r.seat_width);
    let seat_depth = u(r.seat_depth);
    let seat_thickness = u(r.seat_thickness);
    let back_height = u(r.back_height);
    let back_recline_deg = u(r.back_recline_deg);
    let back_curvature = u(r.back_curvature);
    let leg_height = u(r.leg_height);
    let leg_style = LegStyle::ALL[pick(&weights.legs, u((0.0, 1.0)))];
    let armrest_style = ArmrestStyle::ALL[pick(&weights.armrest, u((0.0, 1.0)))];
    Ok(ChairSpec {
        seat_width,
        seat_depth,
        seat_thickness,
        back_height,
        back_recline_deg,
        back_curvature,
        leg_style,
        leg_height,
        armrest_style,
        seed,
    })
}

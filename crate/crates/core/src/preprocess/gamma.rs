use serde::{Deserialize, Serialize};

use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaParams {
    pub gamma: f64,
    #[serde(default = "default_max")]
    pub max_intensity: f64,
}

fn default_max() -> f64 {
    255.0
}

impl GammaParams {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            max_intensity: 255.0,
        }
    }
}

/// `I_t = I_m (I_i / I_m)^γ`, with `I_i` clamped into `[0, I_m]`.
#[inline]
pub fn gamma_value(input: f64, gamma: f64, max_intensity: f64) -> f64 {
    let x = input.clamp(0.0, max_intensity);
    max_intensity * (x / max_intensity).powf(gamma)
}

pub fn gamma_correct(img: &Raster, p: &GammaParams) -> Raster {
    img.map(|v| gamma_value(v, p.gamma, p.max_intensity))
}

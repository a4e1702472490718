//! Per-frame enhancement operators.
//!
//! Each operator is a pure function `&Raster -> Raster` over 8-bit-valued
//! input. Kernels return unrounded values; [`Operator::apply`] re-quantizes
//! to 8-bit at operator exit so chains compose on a stable representation.

mod clahe;
mod filters;
mod gamma;

pub use clahe::{clahe, clahe_with, clipped_histogram, ClaheParams};
pub use filters::{bilateral, bilateral_with, median_blur, median_blur_with, nl_means, nl_means_with};
pub use gamma::{gamma_correct, gamma_value, GammaParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::raster::{Raster, Raster8};

/// Parameters of one noise filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterParams {
    Median {
        size: usize,
    },
    Bilateral {
        diameter: usize,
        sigma_color: f64,
        sigma_space: f64,
    },
    NlMeans {
        h: f64,
        template_window: usize,
        search_window: usize,
    },
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FilterParams::Median { size } => {
                if size == 0 || size % 2 == 0 {
                    return Err(Error::BadKernel(size));
                }
            }
            FilterParams::Bilateral {
                diameter,
                sigma_color,
                sigma_space,
            } => {
                if diameter == 0 || !(sigma_color > 0.0) || !(sigma_space > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "bilateral needs d >= 1 and positive sigmas, got d={diameter}, σc={sigma_color}, σs={sigma_space}"
                    )));
                }
            }
            FilterParams::NlMeans {
                h,
                template_window,
                search_window,
            } => {
                filters::check_windows(template_window, search_window)?;
                if !(h > 0.0) {
                    return Err(Error::InvalidParams(format!("NL-means h must be positive, got {h}")));
                }
            }
        }
        Ok(())
    }
}

/// Operator family. A preprocessing sequence uses at most one of each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Equalisation,
    Remapping,
    Filtering,
}

/// A configured operator.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    Clahe(ClaheParams),
    Gamma(GammaParams),
    Filter(FilterParams),
}

impl OperatorKind {
    pub fn family(&self) -> Family {
        match self {
            OperatorKind::Clahe(_) => Family::Equalisation,
            OperatorKind::Gamma(_) => Family::Remapping,
            OperatorKind::Filter(_) => Family::Filtering,
        }
    }
}

/// A named operator such as `CL` or `NF`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub acronym: String,
    pub kind: OperatorKind,
}

impl Operator {
    pub fn new(acronym: impl Into<String>, kind: OperatorKind) -> Self {
        Self {
            acronym: acronym.into(),
            kind,
        }
    }

    /// Runs the kernel without re-quantizing.
    pub fn apply_raw(&self, img: &Raster, exec: Execution) -> Result<Raster> {
        match &self.kind {
            OperatorKind::Clahe(p) => clahe_with(img, p, exec),
            OperatorKind::Gamma(p) => Ok(gamma_correct(img, p)),
            OperatorKind::Filter(FilterParams::Median { size }) => median_blur_with(img, *size, exec),
            OperatorKind::Filter(FilterParams::Bilateral {
                diameter,
                sigma_color,
                sigma_space,
            }) => bilateral_with(img, *diameter, *sigma_color, *sigma_space, exec),
            OperatorKind::Filter(FilterParams::NlMeans {
                h,
                template_window,
                search_window,
            }) => nl_means_with(img, *h, *template_window, *search_window, exec),
        }
    }

    /// Runs the kernel and rounds half-up to 8-bit.
    pub fn apply(&self, img: &Raster8, exec: Execution) -> Result<Raster8> {
        Ok(self.apply_raw(&img.to_raster(), exec)?.quantize())
    }
}

/// The operator set used when no configuration overrides it.
pub fn default_operators() -> Vec<Operator> {
    use OperatorKind::*;
    vec![
        Operator::new("CL", Clahe(ClaheParams::new(1.0, (16, 16)))),
        Operator::new("CH", Clahe(ClaheParams::new(4.0, (4, 4)))),
        Operator::new("GL", Gamma(GammaParams::new(0.75))),
        Operator::new("GH", Gamma(GammaParams::new(1.25))),
        Operator::new("MB", Filter(FilterParams::Median { size: 5 })),
        Operator::new(
            "BF",
            Filter(FilterParams::Bilateral {
                diameter: 3,
                sigma_color: 25.0,
                sigma_space: 50.0,
            }),
        ),
        Operator::new(
            "NF",
            Filter(FilterParams::NlMeans {
                h: 10.0,
                template_window: 3,
                search_window: 7,
            }),
        ),
    ]
}

/// Applies `ops` in order, quantizing after each step.
pub fn apply_chain(img: &Raster8, ops: &[&Operator], exec: Execution) -> Result<Raster8> {
    let mut cur = img.clone();
    for op in ops {
        cur = op.apply(&cur, exec)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let ops = default_operators();
        let names: Vec<&str> = ops.iter().map(|o| o.acronym.as_str()).collect();
        assert_eq!(names, ["CL", "CH", "GL", "GH", "MB", "BF", "NF"]);
        assert_eq!(ops[0].kind, OperatorKind::Clahe(ClaheParams::new(1.0, (16, 16))));
        assert_eq!(ops[1].kind, OperatorKind::Clahe(ClaheParams::new(4.0, (4, 4))));
        assert_eq!(ops[3].kind, OperatorKind::Gamma(GammaParams::new(1.25)));
        assert_eq!(ops[6].kind.family(), Family::Filtering);
    }

    #[test]
    fn filter_validation() {
        assert!(FilterParams::Median { size: 4 }.validate().is_err());
        assert!(FilterParams::NlMeans {
            h: 10.0,
            template_window: 7,
            search_window: 3
        }
        .validate()
        .is_err());
        assert!(FilterParams::Bilateral {
            diameter: 3,
            sigma_color: 0.0,
            sigma_space: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn chain_quantizes_between_steps() {
        let img = Raster8::from_fn(20, 20, |r, c| ((r * 13 + c * 7) % 256) as u8);
        let ops = default_operators();
        let gl = &ops[2];
        let mb = &ops[4];
        let chained = apply_chain(&img, &[gl, mb], Execution::Sequential).unwrap();
        let manual = mb
            .apply(&gl.apply(&img, Execution::Sequential).unwrap(), Execution::Sequential)
            .unwrap();
        assert_eq!(chained, manual);
    }
}

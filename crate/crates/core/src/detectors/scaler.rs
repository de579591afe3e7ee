//! Min-max scaling of novelty scores fitted on a reference run.

use crate::persist::ModelDoc;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmScaler {
    pub min: f64,
    pub max: f64,
}

impl NmScaler {
    pub fn fit(scores: &[f64]) -> Result<Self> {
        let (min, max) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(*s), hi.max(*s))
            });
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::invalid("novelty scores must be finite and nonempty"));
        }
        if max <= min {
            return Err(Error::Degenerate(format!(
                "every novelty score equals {min}; cannot scale"
            )));
        }
        Ok(Self { min, max })
    }

    /// Linear map with the fitted range onto [0, 1]; values outside extrapolate.
    pub fn scale(&self, nm: f64) -> f64 {
        (nm - self.min) / (self.max - self.min)
    }

    pub fn is_extrapolated(&self, nm: f64) -> bool {
        nm < self.min || nm > self.max
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("nm_scaler");
        doc.scalar("min", self.min).scalar("max", self.max);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("nm_scaler")?;
        let s = Self {
            min: doc.get_scalar("min")?,
            max: doc.get_scalar("max")?,
        };
        if !(s.max > s.min) {
            return Err(Error::parse(0, "nm_scaler: max must exceed min"));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = NmScaler::fit(&[3.0, -1.0, 1.0]).unwrap();
        assert_eq!(s.scale(-1.0), 0.0);
        assert_eq!(s.scale(3.0), 1.0);
        assert_eq!(s.scale(1.0), 0.5);
        assert_eq!(s.scale(7.0), 2.0);
        assert!(s.is_extrapolated(7.0) && !s.is_extrapolated(3.0));
    }

    #[test]
    fn constant_scores_rejected() {
        assert!(NmScaler::fit(&[1.0, 1.0]).is_err());
        assert!(NmScaler::fit(&[]).is_err());
    }
}

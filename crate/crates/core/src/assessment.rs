//! Pixelwise agreement between a predicted burn map and a reference mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Executor, Grid};
use crate::severity::{pixel_hectares, SeverityClass};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(mut self, other: ConfusionMatrix) -> ConfusionMatrix {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self
    }
}

/// How a predicted sample turns into burned / not burned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionRule {
    /// Severity rank at least this class.
    MinClass(SeverityClass),
    /// Binary mask; burned iff the value is 1.
    Mask,
    /// Continuous dNBR at or above a cut point.
    DnbrAtLeast(f64),
}

impl PredictionRule {
    pub fn is_burned(&self, v: f32) -> bool {
        match *self {
            PredictionRule::MinClass(c) => v >= c.rank() as f32,
            PredictionRule::Mask => v == 1.0,
            PredictionRule::DnbrAtLeast(t) => v >= t as f32,
        }
    }
}

/// Confusion matrix of a classified severity grid against a 0/1 reference,
/// counting only pixels valid in both.
pub fn confusion(
    predicted: &Grid,
    min_class: SeverityClass,
    reference: &Grid,
    exec: &Executor,
) -> Result<ConfusionMatrix> {
    confusion_by(
        predicted,
        PredictionRule::MinClass(min_class),
        reference,
        exec,
    )
}

/// Confusion matrix with an explicit prediction rule. The reference is
/// positive iff its value is 1.
pub fn confusion_by(
    predicted: &Grid,
    rule: PredictionRule,
    reference: &Grid,
    exec: &Executor,
) -> Result<ConfusionMatrix> {
    exec.fold_tiled(
        &[predicted, reference],
        ConfusionMatrix::default,
        |m, s| {
            if predicted.is_nodata(s[0]) || reference.is_nodata(s[1]) || s[0].is_nan() {
                return;
            }
            match (rule.is_burned(s[0]), s[1] == 1.0) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        },
        ConfusionMatrix::add,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub oa: f64,
    pub dice: f64,
    pub kappa: f64,
    /// `fn / (tp + fn)`; absent when the reference has no positives.
    pub omission: Option<f64>,
    /// `fp / (tp + fp)`; absent when nothing was predicted burned.
    pub commission: Option<f64>,
}

/// Overall accuracy, Dice, Cohen's kappa, omission and commission error.
///
/// Dice is 1 when neither side has any positive pixel (perfect agreement on
/// an all-negative scene); kappa is 1 when chance agreement is 1.
pub fn metrics(m: &ConfusionMatrix) -> Result<Metrics> {
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let (tp, fp, fn_, tn) = (m.tp as f64, m.fp as f64, m.fn_ as f64, m.tn as f64);
    let n = total as f64;
    let oa = (tp + tn) / n;
    let dice_den = 2.0 * tp + fp + fn_;
    let dice = if dice_den == 0.0 {
        1.0
    } else {
        2.0 * tp / dice_den
    };
    let pe = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
    let kappa = if pe >= 1.0 {
        1.0
    } else {
        (oa - pe) / (1.0 - pe)
    };
    let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
    Ok(Metrics {
        oa,
        dice,
        kappa,
        omission: ratio(fn_, tp + fn_),
        commission: ratio(fp, tp + fp),
    })
}

/// Matrix, metrics and burned areas of one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub matrix: ConfusionMatrix,
    pub metrics: Metrics,
    /// Predicted burned area over co-valid pixels, hectares.
    pub predicted_ha: f64,
    /// Reference burned area over co-valid pixels, hectares.
    pub reference_ha: f64,
}

impl AgreementReport {
    /// `|predicted - reference| / reference`; absent for an empty reference.
    pub fn relative_area_difference(&self) -> Option<f64> {
        (self.reference_ha > 0.0)
            .then(|| (self.predicted_ha - self.reference_ha).abs() / self.reference_ha)
    }
}

/// Compares `predicted` with `reference` on their shared lattice.
pub fn assess(
    predicted: &Grid,
    rule: PredictionRule,
    reference: &Grid,
    exec: &Executor,
) -> Result<AgreementReport> {
    let matrix = confusion_by(predicted, rule, reference, exec)?;
    let metrics = metrics(&matrix)?;
    let ha = pixel_hectares(predicted)?;
    Ok(AgreementReport {
        matrix,
        metrics,
        predicted_ha: (matrix.tp + matrix.fp) as f64 * ha,
        reference_ha: (matrix.tp + matrix.fn_) as f64 * ha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GeoTransform, GridKind, INT_NODATA};

    fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    #[test]
    fn worked_example() {
        let m = metrics(&cm(40, 5, 5, 50)).unwrap();
        assert!((m.oa - 0.9).abs() < 1e-12);
        assert!((m.dice - 80.0 / 90.0).abs() < 1e-12);
        // pe = (45*45 + 55*55) / 100^2 = 0.505
        assert!((m.kappa - 0.395 / 0.495).abs() < 1e-12);
        assert!((m.omission.unwrap() - 5.0 / 45.0).abs() < 1e-12);
        assert!((m.commission.unwrap() - 5.0 / 45.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_matrices() {
        assert!(matches!(metrics(&cm(0, 0, 0, 0)), Err(Error::EmptyMatrix)));
        let m = metrics(&cm(0, 0, 0, 10)).unwrap();
        assert_eq!((m.oa, m.dice, m.kappa), (1.0, 1.0, 1.0));
        assert_eq!((m.omission, m.commission), (None, None));
        let m = metrics(&cm(0, 3, 0, 7)).unwrap();
        assert_eq!(m.dice, 0.0);
        assert_eq!(m.commission, Some(1.0));
        assert_eq!(m.omission, None);
    }

    #[test]
    fn matrix_serializes_with_fn_key() {
        let v = serde_json::to_value(cm(1, 2, 3, 4)).unwrap();
        assert_eq!(v["fn"], 3);
    }

    #[test]
    fn confusion_skips_nodata() {
        let t = GeoTransform::new(0.0, 0.0, 10.0, 10.0, "EPSG:32648").unwrap();
        let pred = Grid::new(
            5,
            1,
            t.clone(),
            INT_NODATA,
            vec![6.0, 2.0, 4.0, INT_NODATA, 1.0],
            GridKind::Categorical,
        )
        .unwrap();
        let refm = Grid::new(
            5,
            1,
            t,
            INT_NODATA,
            vec![1.0, 1.0, 0.0, 1.0, INT_NODATA],
            GridKind::Mask,
        )
        .unwrap();
        let m = confusion(
            &pred,
            SeverityClass::ModerateLowSeverity,
            &refm,
            &Executor::sequential(),
        )
        .unwrap();
        assert_eq!(m, cm(1, 1, 1, 0));
    }
}

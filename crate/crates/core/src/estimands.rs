//! Point estimands computed in closed form from a cell table: split-sample
//! Wald ratios, first-stage and reduced-form contrasts of the saturated
//! regression, the saturated IV coefficients, and a robust sandwich
//! covariance from unit records.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::data::{Assignment, CellTable, Dataset};
use crate::{Error, Result, FIRST_STAGE_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    /// Instrument cell with this side's own instrument at `own` and the partner's at `partner`.
    pub fn cell(self, own: u8, partner: u8) -> Assignment {
        match self {
            Side::A => Assignment::new(own, partner),
            Side::B => Assignment::new(partner, own),
        }
    }

    fn own_takeup(self, table: &CellTable, z: Assignment) -> Result<f64> {
        match self {
            Side::A => table.dbar_a(z),
            Side::B => table.dbar_b(z),
        }
    }
}

/// Ratio of the outcome contrast to the own-takeup contrast when the side's
/// own instrument switches on, holding the partner instrument at `partner_z`.
pub fn wald(table: &CellTable, side: Side, partner_z: u8) -> Result<f64> {
    let on = side.cell(1, partner_z);
    let off = side.cell(0, partner_z);
    let numerator = table.ybar(on)? - table.ybar(off)?;
    let denominator = side.own_takeup(table, on)? - side.own_takeup(table, off)?;
    if denominator.abs() < FIRST_STAGE_TOL {
        return Err(Error::WeakFirstStage {
            what: format!("takeup contrast of {side:?} with partner instrument {partner_z}"),
            value: denominator,
        });
    }
    Ok(numerator / denominator)
}

/// Coefficients of a saturated regression on `(1, Z_A, Z_B, Z_A·Z_B)`.
fn saturated_contrasts(values: [f64; 4]) -> (f64, [f64; 3]) {
    let [v00, v01, v10, v11] = values;
    (v00, [v10 - v00, v01 - v00, (v11 - v01) - (v10 - v00)])
}

fn per_cell(f: impl Fn(Assignment) -> Result<f64>) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for z in Assignment::ALL {
        out[z.index()] = f(z)?;
    }
    Ok(out)
}

/// First stage of the saturated model.
///
/// Row `r` of `gamma` holds the slopes of regressor `r` (D_A, D_B, D_A·D_B)
/// on the instruments (Z_A, Z_B, Z_A·Z_B); `intercepts[r]` is its mean in
/// the (0,0) cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub intercepts: [f64; 3],
    pub gamma: [[f64; 3]; 3],
}

pub fn first_stage(table: &CellTable) -> Result<FirstStage> {
    let rows = [
        per_cell(|z| table.dbar_a(z))?,
        per_cell(|z| table.dbar_b(z))?,
        per_cell(|z| table.dbar_ab(z))?,
    ];
    let mut intercepts = [0.0; 3];
    let mut gamma = [[0.0; 3]; 3];
    for (r, values) in rows.into_iter().enumerate() {
        (intercepts[r], gamma[r]) = saturated_contrasts(values);
    }
    Ok(FirstStage { intercepts, gamma })
}

/// Reduced form: the saturated regression of Y on the instruments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedForm {
    pub intercept: f64,
    /// Slopes on Z_A, Z_B and Z_A·Z_B.
    pub pi: [f64; 3],
}

pub fn reduced_form(table: &CellTable) -> Result<ReducedForm> {
    let (intercept, pi) = saturated_contrasts(per_cell(|z| table.ybar(z))?);
    Ok(ReducedForm { intercept, pi })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvEstimates {
    /// Wald ratios; `None` when the corresponding takeup contrast is zero.
    pub delta_a0: Option<f64>,
    pub delta_a1: Option<f64>,
    pub delta_b0: Option<f64>,
    pub delta_b1: Option<f64>,
    /// Intercept, D_A, D_B, D_A·D_B.
    pub beta: [f64; 4],
    pub first_stage: FirstStage,
    pub reduced_form: ReducedForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust_cov: Option<[[f64; 4]; 4]>,
}

const REGRESSOR_NAMES: [&str; 3] = ["D_A", "D_B", "D_A*D_B"];
const INSTRUMENT_NAMES: [&str; 3] = ["Z_A", "Z_B", "Z_A*Z_B"];

/// Solves `π = Γ'ᵀ β` for the slopes of the saturated just-identified system
/// and recovers the intercept from the (0,0) cell.
pub fn saturated_iv(table: &CellTable) -> Result<IvEstimates> {
    let fs = first_stage(table)?;
    let rf = reduced_form(table)?;
    for i in 0..3 {
        if fs.gamma[i][i].abs() < FIRST_STAGE_TOL {
            return Err(Error::Identification(format!(
                "first-stage coefficient of {} on {} is {:e}; the saturated system is singular",
                REGRESSOR_NAMES[i], INSTRUMENT_NAMES[i], fs.gamma[i][i]
            )));
        }
    }
    let gamma_t = Matrix3::from_fn(|k, r| fs.gamma[r][k]);
    let slopes = gamma_t
        .lu()
        .solve(&Vector3::from(rf.pi))
        .ok_or_else(|| Error::Singular("first-stage matrix".into()))?;
    if slopes.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular("first-stage matrix".into()));
    }
    let beta0 = rf.intercept - (0..3).map(|r| slopes[r] * fs.intercepts[r]).sum::<f64>();
    Ok(IvEstimates {
        delta_a0: wald(table, Side::A, 0).ok(),
        delta_a1: wald(table, Side::A, 1).ok(),
        delta_b0: wald(table, Side::B, 0).ok(),
        delta_b1: wald(table, Side::B, 1).ok(),
        beta: [beta0, slopes[0], slopes[1], slopes[2]],
        first_stage: fs,
        reduced_form: rf,
        robust_cov: None,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HcVariant {
    Hc0,
    /// Scales HC0 by `n / (n - 4)`.
    #[default]
    Hc1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustCovariance {
    pub cov: [[f64; 4]; 4],
    pub se: [f64; 4],
    pub variant: HcVariant,
}

/// Heteroscedasticity-robust covariance of the just-identified IV estimator
/// with regressors `(1, D_A, D_B, D_A·D_B)` and instruments
/// `(1, Z_A, Z_B, Z_A·Z_B)`. Weights act as frequency weights.
pub fn robust_se(
    dataset: &Dataset,
    beta: &[f64; 4],
    variant: HcVariant,
) -> Result<RobustCovariance> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let b = Vector4::from(*beta);
    let mut zx = Matrix4::<f64>::zeros();
    let mut meat = Matrix4::<f64>::zeros();
    let mut n = 0.0;
    for o in &dataset.observations {
        if o.weight == 0.0 {
            continue;
        }
        let (da, db, za, zb) = (
            o.d_a as u8 as f64,
            o.d_b as u8 as f64,
            o.z_a as u8 as f64,
            o.z_b as u8 as f64,
        );
        let x = Vector4::new(1.0, da, db, da * db);
        let z = Vector4::new(1.0, za, zb, za * zb);
        let e = o.y - x.dot(&b);
        zx += o.weight * z * x.transpose();
        meat += (o.weight * e * e) * z * z.transpose();
        n += o.weight;
    }
    let bread = zx
        .try_inverse()
        .ok_or_else(|| Error::Singular("instrument-regressor moment matrix".into()))?;
    let mut cov = bread * meat * bread.transpose();
    if variant == HcVariant::Hc1 {
        if n <= 4.0 {
            return Err(Error::InvalidArgument(format!(
                "HC1 needs more than 4 units of weight, found {n}"
            )));
        }
        cov *= n / (n - 4.0);
    }
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }
    let se = std::array::from_fn(|i| out[i][i].max(0.0).sqrt());
    Ok(RobustCovariance {
        cov: out,
        se,
        variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;

    fn full_compliance() -> CellTable {
        let mut rows = Vec::new();
        for z in Assignment::ALL {
            for y in [1.0, 2.0, 4.0] {
                let (a, b) = (z.z_a == 1, z.z_b == 1);
                rows.push(Observation::new(y + 3.0 * z.z_a as f64, a, b, a, b));
            }
        }
        CellTable::from_observations(&rows).unwrap()
    }

    #[test]
    fn full_compliance_gives_identity_first_stage() {
        let fs = first_stage(&full_compliance()).unwrap();
        assert_eq!(
            fs.gamma,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        );
        assert_eq!(fs.intercepts, [0.0; 3]);
    }

    #[test]
    fn constant_outcome_gives_zero_reduced_form() {
        let mut rows = Vec::new();
        for z in Assignment::ALL {
            rows.push(Observation::new(
                7.0,
                z.z_a == 1,
                false,
                z.z_a == 1,
                z.z_b == 1,
            ));
        }
        let rf = reduced_form(&CellTable::from_observations(&rows).unwrap()).unwrap();
        assert_eq!(rf.pi, [0.0; 3]);
        assert_eq!(rf.intercept, 7.0);
    }

    #[test]
    fn weak_first_stage_is_typed() {
        let mut rows = Vec::new();
        for z in Assignment::ALL {
            rows.push(Observation::new(
                1.0 + z.z_a as f64,
                false,
                false,
                z.z_a == 1,
                z.z_b == 1,
            ));
        }
        let t = CellTable::from_observations(&rows).unwrap();
        assert!(matches!(
            wald(&t, Side::A, 0),
            Err(Error::WeakFirstStage { .. })
        ));
        assert!(matches!(saturated_iv(&t), Err(Error::Identification(_))));
    }

    #[test]
    fn missing_cell_is_reported() {
        let rows = [Observation::new(1.0, false, false, false, false)];
        let t = CellTable::from_observations(&rows).unwrap();
        assert!(matches!(
            wald(&t, Side::A, 0),
            Err(Error::MissingCell { z_a: 1, z_b: 0 })
        ));
    }

    #[test]
    fn zero_residuals_give_zero_covariance() {
        let mut rows = Vec::new();
        for z in Assignment::ALL {
            let (a, b) = (z.z_a == 1, z.z_b == 1);
            let y = 10.0 + 2.0 * z.z_a as f64 - 1.0 * z.z_b as f64 + 0.5 * (z.z_a * z.z_b) as f64;
            rows.push(Observation::new(y, a, b, a, b));
            rows.push(Observation::new(y, a, b, a, b));
        }
        let ds = Dataset::new(rows);
        let beta = saturated_iv(&crate::data::build_cell_table(&ds).unwrap())
            .unwrap()
            .beta;
        assert!((beta[3] - 0.5).abs() < 1e-12);
        let rc = robust_se(&ds, &beta, HcVariant::Hc1).unwrap();
        assert!(rc.cov.iter().flatten().all(|v| v.abs() < 1e-20));
    }
}

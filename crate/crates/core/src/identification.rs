//! Compliance-type shares and point-identified potential-outcome means.
//!
//! Under one-sided noncompliance each member is a self-complier (`s`), joint
//! complier (`j`), never-taker (`n`) or cross-defier (`d`); `c = s ∪ j` are
//! the members treated when both instruments are on. Pair shares are written
//! `P(type_a, type_b)`, with `·` for "any type".

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{check_one_sided, Assignment, CellTable, Takeup};
use crate::{Error, Result, SHARE_CLAMP_TOL};

const Z00: Assignment = Assignment::new(0, 0);
const Z01: Assignment = Assignment::new(0, 1);
const Z10: Assignment = Assignment::new(1, 0);
const Z11: Assignment = Assignment::new(1, 1);

/// Auxiliary restrictions on which compliance types exist.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restrictions {
    /// No pair has a cross-defier as member A.
    pub no_cross_defiers_a: bool,
    /// No pair has a joint complier as member A.
    pub no_joint_compliers_a: bool,
    /// No pair has a cross-defier as member B.
    pub no_cross_defiers_b: bool,
    /// No pair has a joint complier as member B.
    pub no_joint_compliers_b: bool,
    /// No pair combines a never-taker with a joint complier, in either order.
    pub no_nj_pairs: bool,
}

/// Shares of the four basic types for one member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalShares {
    pub s: f64,
    pub j: f64,
    pub n: f64,
    pub d: f64,
}

impl MarginalShares {
    pub fn total(&self) -> f64 {
        self.s + self.j + self.n + self.d
    }
}

/// Identified aggregate shares, plus resolved marginals where the active
/// restrictions pin them down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeShares {
    /// `P(s∪d, ·)`
    pub p_sd_a: f64,
    /// `P(·, s∪d)`
    pub p_sd_b: f64,
    /// `P(c, c)`
    pub p_cc: f64,
    /// `P(c, n∪d)`
    pub p_c_nd: f64,
    /// `P(n∪d, c)`
    pub p_nd_c: f64,
    /// `P(n∪d, n∪d)`
    pub p_nd_nd: f64,
    /// `P(c, ·)`
    pub p_c_a: f64,
    /// `P(n∪d, ·)`
    pub p_nd_a: f64,
    /// `P(n∪j, ·)`
    pub p_nj_a: f64,
    /// `P(·, c)`
    pub p_c_b: f64,
    /// `P(·, n∪d)`
    pub p_nd_b: f64,
    /// `P(·, n∪j)`
    pub p_nj_b: f64,
    /// `P(j,·) − P(d,·)`, the takeup contrast of A when B's instrument switches on.
    pub contrast_a: f64,
    /// `P(·,j) − P(·,d)`, the mirrored contrast for B.
    pub contrast_b: f64,
    pub marginals_a: Option<MarginalShares>,
    pub marginals_b: Option<MarginalShares>,
    pub restrictions: Restrictions,
}

fn clamp_share(value: f64, restriction: &str, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -SHARE_CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::Inconsistent {
            restriction: restriction.to_owned(),
            detail: format!("{what} = {value:.6} < 0"),
        })
    }
}

/// Resolves one member's marginals. `alone` is the takeup rate with only the
/// own instrument on, `both` with both instruments on.
fn resolve_side(
    alone: f64,
    both: f64,
    no_cross_defiers: bool,
    no_joint_compliers: bool,
    side: char,
) -> Result<Option<MarginalShares>> {
    let lower = side.to_ascii_lowercase();
    match (no_cross_defiers, no_joint_compliers) {
        (false, false) => Ok(None),
        (true, false) => {
            let name = format!("no_cross_defiers_{lower}");
            let j = clamp_share(
                both - alone,
                &name,
                &format!("P(j) = takeup({side}|both on) − takeup({side}|own only)"),
            )?;
            Ok(Some(MarginalShares {
                s: alone,
                j,
                n: 1.0 - both,
                d: 0.0,
            }))
        }
        (false, true) => {
            let name = format!("no_joint_compliers_{lower}");
            let d = clamp_share(
                alone - both,
                &name,
                &format!("P(d) = takeup({side}|own only) − takeup({side}|both on)"),
            )?;
            Ok(Some(MarginalShares {
                s: both,
                j: 0.0,
                n: 1.0 - alone,
                d,
            }))
        }
        (true, true) => {
            let gap = both - alone;
            if gap.abs() > SHARE_CLAMP_TOL {
                return Err(Error::Inconsistent {
                    restriction: format!("no_cross_defiers_{lower} + no_joint_compliers_{lower}"),
                    detail: format!(
                        "takeup of {side} responds to the partner instrument by {gap:.6}"
                    ),
                });
            }
            Ok(Some(MarginalShares {
                s: alone,
                j: 0.0,
                n: 1.0 - alone,
                d: 0.0,
            }))
        }
    }
}

fn require_one_sided(table: &CellTable) -> Result<()> {
    let report = check_one_sided(table);
    if report.pass {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "one-sided noncompliance is violated (treated mass without own instrument: A {}, B {})",
            report.violation_mass_a, report.violation_mass_b
        )))
    }
}

pub fn type_shares(table: &CellTable, restrictions: &Restrictions) -> Result<TypeShares> {
    require_one_sided(table)?;
    let a_alone = table.dbar_a(Z10)?;
    let a_both = table.dbar_a(Z11)?;
    let b_alone = table.dbar_b(Z01)?;
    let b_both = table.dbar_b(Z11)?;
    let p = |t: Takeup| table.prob(Z11, t);
    let marginals_a = resolve_side(
        a_alone,
        a_both,
        restrictions.no_cross_defiers_a,
        restrictions.no_joint_compliers_a,
        'A',
    )?;
    let marginals_b = resolve_side(
        b_alone,
        b_both,
        restrictions.no_cross_defiers_b,
        restrictions.no_joint_compliers_b,
        'B',
    )?;
    Ok(TypeShares {
        p_sd_a: a_alone,
        p_sd_b: b_alone,
        p_cc: p(Takeup::new(1, 1))?,
        p_c_nd: p(Takeup::new(1, 0))?,
        p_nd_c: p(Takeup::new(0, 1))?,
        p_nd_nd: p(Takeup::new(0, 0))?,
        p_c_a: a_both,
        p_nd_a: 1.0 - a_both,
        p_nj_a: 1.0 - a_alone,
        p_c_b: b_both,
        p_nd_b: 1.0 - b_both,
        p_nj_b: 1.0 - b_alone,
        contrast_a: a_both - a_alone,
        contrast_b: b_both - b_alone,
        marginals_a,
        marginals_b,
        restrictions: *restrictions,
    })
}

impl TypeShares {
    /// Admissible values of `P(·,j)` given the data and the active restrictions on B.
    pub fn joint_share_b_range(&self) -> (f64, f64) {
        if self.restrictions.no_joint_compliers_b {
            return (0.0, 0.0);
        }
        let lo = self.contrast_b.max(0.0);
        if self.restrictions.no_cross_defiers_b {
            return (lo, lo);
        }
        (lo, self.p_c_b.min(self.p_nj_b).max(lo))
    }

    /// B's marginals when the joint-complier share `P(·,j)` is supplied
    /// rather than identified.
    pub fn marginals_b_given_joint(&self, p_j_b: f64) -> Result<MarginalShares> {
        let name = "supplied P(·,j)";
        if !(0.0..=1.0).contains(&p_j_b) {
            return Err(Error::InvalidArgument(format!(
                "P(·,j) must lie in [0,1], found {p_j_b}"
            )));
        }
        if self.restrictions.no_joint_compliers_b && p_j_b > 0.0 {
            return Err(Error::Inconsistent {
                restriction: "no_joint_compliers_b".into(),
                detail: format!("supplied P(·,j) = {p_j_b} > 0"),
            });
        }
        let d = clamp_share(p_j_b - self.contrast_b, name, "P(·,d) = P(·,j) − contrast")?;
        let s = clamp_share(self.p_c_b - p_j_b, name, "P(·,s) = P(·,c) − P(·,j)")?;
        let n = clamp_share(self.p_nj_b - p_j_b, name, "P(·,n) = P(·,n∪j) − P(·,j)")?;
        if self.restrictions.no_cross_defiers_b && d > SHARE_CLAMP_TOL {
            return Err(Error::Inconsistent {
                restriction: "no_cross_defiers_b".into(),
                detail: format!("supplied P(·,j) = {p_j_b} implies P(·,d) = {d}"),
            });
        }
        Ok(MarginalShares { s, j: p_j_b, n, d })
    }

    /// `P(·,d) − P(·,j)`, identified without restrictions.
    pub fn net_cross_defier_share_b(&self) -> f64 {
        -self.contrast_b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeImplication {
    /// Positive contrast: joint compliers exist on this side.
    JointCompliersPresent,
    /// Negative contrast: cross-defiers exist on this side.
    CrossDefiersPresent,
    /// Zero contrast: consistent with takeup ignoring the partner's instrument.
    NoNetResponse,
}

impl fmt::Display for TypeImplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeImplication::JointCompliersPresent => "joint compliers present",
            TypeImplication::CrossDefiersPresent => "cross-defiers present",
            TypeImplication::NoNetResponse => "no net response to the partner instrument",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideDiagnostic {
    /// Own takeup with both instruments on minus own takeup with only the own instrument on.
    pub contrast: f64,
    pub implication: TypeImplication,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplianceDiagnostics {
    pub a: SideDiagnostic,
    pub b: SideDiagnostic,
}

fn diagnose(contrast: f64) -> SideDiagnostic {
    let implication = if contrast > SHARE_CLAMP_TOL {
        TypeImplication::JointCompliersPresent
    } else if contrast < -SHARE_CLAMP_TOL {
        TypeImplication::CrossDefiersPresent
    } else {
        TypeImplication::NoNetResponse
    };
    SideDiagnostic {
        contrast,
        implication,
    }
}

/// Signs of the partner-instrument takeup contrasts and what they imply.
pub fn compliance_diagnostics(table: &CellTable) -> Result<ComplianceDiagnostics> {
    Ok(ComplianceDiagnostics {
        a: diagnose(table.dbar_a(Z11)? - table.dbar_a(Z10)?),
        b: diagnose(table.dbar_b(Z11)? - table.dbar_b(Z01)?),
    })
}

/// The point-identified conditional means.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentId {
    /// `E[Y(00)]`
    Y00All,
    /// `E[Y(00) | (n∪j, ·)]`
    Y00NjA,
    /// `E[Y(00) | (·, n∪j)]`
    Y00NjB,
    /// `E[Y(00) | (n∪d, n∪d)]`
    Y00NdNd,
    /// `E[Y(10) | (s∪d, ·)]`
    Y10SdA,
    /// `E[Y(01) | (·, s∪d)]`
    Y01SdB,
    /// `E[Y(10) | (c, n∪d)]`
    Y10CNd,
    /// `E[Y(01) | (n∪d, c)]`
    Y01NdC,
    /// `E[Y(11) | (c, c)]`
    Y11Cc,
    /// `E[Y(00) | (s∪d, ·)]`, by iterated expectations.
    Y00SdA,
    /// `E[Y(00) | (·, s∪d)]`, by iterated expectations.
    Y00SdB,
}

impl MomentId {
    pub const ALL: [MomentId; 11] = [
        MomentId::Y00All,
        MomentId::Y00NjA,
        MomentId::Y00NjB,
        MomentId::Y00NdNd,
        MomentId::Y10SdA,
        MomentId::Y01SdB,
        MomentId::Y10CNd,
        MomentId::Y01NdC,
        MomentId::Y11Cc,
        MomentId::Y00SdA,
        MomentId::Y00SdB,
    ];

    /// The observed cell whose mean identifies this moment, if it is read off directly.
    pub fn cell(self) -> Option<(Assignment, Takeup)> {
        use MomentId::*;
        Some(match self {
            Y00All => (Z00, Takeup::new(0, 0)),
            Y00NjA => (Z10, Takeup::new(0, 0)),
            Y00NjB => (Z01, Takeup::new(0, 0)),
            Y00NdNd => (Z11, Takeup::new(0, 0)),
            Y10SdA => (Z10, Takeup::new(1, 0)),
            Y01SdB => (Z01, Takeup::new(0, 1)),
            Y10CNd => (Z11, Takeup::new(1, 0)),
            Y01NdC => (Z11, Takeup::new(0, 1)),
            Y11Cc => (Z11, Takeup::new(1, 1)),
            Y00SdA | Y00SdB => return None,
        })
    }

    pub fn label(self) -> &'static str {
        use MomentId::*;
        match self {
            Y00All => "E[Y(00)]",
            Y00NjA => "E[Y(00)|(n∪j,·)]",
            Y00NjB => "E[Y(00)|(·,n∪j)]",
            Y00NdNd => "E[Y(00)|(n∪d,n∪d)]",
            Y10SdA => "E[Y(10)|(s∪d,·)]",
            Y01SdB => "E[Y(01)|(·,s∪d)]",
            Y10CNd => "E[Y(10)|(c,n∪d)]",
            Y01NdC => "E[Y(01)|(n∪d,c)]",
            Y11Cc => "E[Y(11)|(c,c)]",
            Y00SdA => "E[Y(00)|(s∪d,·)]",
            Y00SdB => "E[Y(00)|(·,s∪d)]",
        }
    }
}

impl fmt::Display for MomentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Point-identified conditional means; `None` marks a moment on a zero-mass cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedMoments {
    pub m00_all: Option<f64>,
    pub m00_nj_a: Option<f64>,
    pub m00_nj_b: Option<f64>,
    pub m00_nd_nd: Option<f64>,
    pub m10_sd_a: Option<f64>,
    pub m01_sd_b: Option<f64>,
    pub m10_c_nd: Option<f64>,
    pub m01_nd_c: Option<f64>,
    pub m11_cc: Option<f64>,
    pub m00_sd_a: Option<f64>,
    pub m00_sd_b: Option<f64>,
    p_sd_a: f64,
    p_sd_b: f64,
}

/// `mean × weight`, with a zero weight contributing zero even when the mean is undefined.
pub(crate) fn weighted(mean: Option<f64>, weight: f64, id: MomentId) -> Result<f64> {
    if weight == 0.0 {
        return Ok(0.0);
    }
    mean.map(|m| m * weight)
        .ok_or_else(|| Error::UndefinedMoment(id.label().to_owned()))
}

pub fn identified_moments(table: &CellTable, shares: &TypeShares) -> Result<IdentifiedMoments> {
    require_one_sided(table)?;
    let read = |id: MomentId| {
        let (z, t) = id.cell().expect("observed moment");
        table.mean(z, t)
    };
    let m00_all = read(MomentId::Y00All);
    let m00_nj_a = read(MomentId::Y00NjA);
    let m00_nj_b = read(MomentId::Y00NjB);
    let derive = |nj: Option<f64>, p_nj: f64, p_sd: f64, nj_id: MomentId| -> Option<f64> {
        if p_sd <= 0.0 {
            return None;
        }
        let all = m00_all?;
        let rest = weighted(nj, p_nj, nj_id).ok()?;
        Some((all - rest) / p_sd)
    };
    Ok(IdentifiedMoments {
        m00_all,
        m00_nj_a,
        m00_nj_b,
        m00_nd_nd: read(MomentId::Y00NdNd),
        m10_sd_a: read(MomentId::Y10SdA),
        m01_sd_b: read(MomentId::Y01SdB),
        m10_c_nd: read(MomentId::Y10CNd),
        m01_nd_c: read(MomentId::Y01NdC),
        m11_cc: read(MomentId::Y11Cc),
        m00_sd_a: derive(m00_nj_a, shares.p_nj_a, shares.p_sd_a, MomentId::Y00NjA),
        m00_sd_b: derive(m00_nj_b, shares.p_nj_b, shares.p_sd_b, MomentId::Y00NjB),
        p_sd_a: shares.p_sd_a,
        p_sd_b: shares.p_sd_b,
    })
}

impl IdentifiedMoments {
    pub fn get(&self, id: MomentId) -> Option<f64> {
        use MomentId::*;
        match id {
            Y00All => self.m00_all,
            Y00NjA => self.m00_nj_a,
            Y00NjB => self.m00_nj_b,
            Y00NdNd => self.m00_nd_nd,
            Y10SdA => self.m10_sd_a,
            Y01SdB => self.m01_sd_b,
            Y10CNd => self.m10_c_nd,
            Y01NdC => self.m01_nd_c,
            Y11Cc => self.m11_cc,
            Y00SdA => self.m00_sd_a,
            Y00SdB => self.m00_sd_b,
        }
    }

    /// The moment's value, or an error explaining why it is unavailable.
    pub fn require(&self, id: MomentId) -> Result<f64> {
        if let Some(v) = self.get(id) {
            return Ok(v);
        }
        match id {
            MomentId::Y00SdA if self.p_sd_a <= 0.0 => Err(Error::Identification(format!(
                "{} needs P(s∪d,·) > 0",
                id.label()
            ))),
            MomentId::Y00SdB if self.p_sd_b <= 0.0 => Err(Error::Identification(format!(
                "{} needs P(·,s∪d) > 0",
                id.label()
            ))),
            _ => Err(Error::UndefinedMoment(id.label().to_owned())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;

    fn table(rows: &[(f64, u8, u8, u8, u8, f64)]) -> CellTable {
        let obs: Vec<Observation> = rows
            .iter()
            .map(|&(y, da, db, za, zb, w)| {
                Observation::new(y, da == 1, db == 1, za == 1, zb == 1).with_weight(w)
            })
            .collect();
        CellTable::from_observations(&obs).unwrap()
    }

    /// Takeup ignores the partner instrument on both sides.
    fn exclusion_table() -> CellTable {
        table(&[
            (1.0, 0, 0, 0, 0, 1.0),
            (2.0, 0, 1, 0, 1, 1.0),
            (3.0, 0, 0, 0, 1, 1.0),
            (4.0, 1, 0, 1, 0, 1.0),
            (5.0, 0, 0, 1, 0, 1.0),
            (6.0, 1, 1, 1, 1, 1.0),
            (7.0, 0, 0, 1, 1, 1.0),
            (8.0, 1, 0, 1, 1, 0.0),
            (9.0, 0, 1, 1, 1, 0.0),
        ])
    }

    #[test]
    fn exclusion_gives_zero_contrasts() {
        let d = compliance_diagnostics(&exclusion_table()).unwrap();
        assert_eq!(d.a.implication, TypeImplication::NoNetResponse);
        assert_eq!(d.b.implication, TypeImplication::NoNetResponse);
        assert_eq!((d.a.contrast, d.b.contrast), (0.0, 0.0));
    }

    #[test]
    fn contradicting_restriction_is_reported() {
        // A's takeup drops from 1 to 1/2 when B's instrument switches on.
        let t = table(&[
            (1.0, 0, 0, 0, 0, 1.0),
            (1.0, 0, 1, 0, 1, 1.0),
            (1.0, 1, 0, 1, 0, 1.0),
            (1.0, 1, 1, 1, 1, 1.0),
            (1.0, 0, 1, 1, 1, 1.0),
        ]);
        let r = Restrictions {
            no_cross_defiers_a: true,
            ..Default::default()
        };
        assert!(matches!(
            type_shares(&t, &r),
            Err(Error::Inconsistent { .. })
        ));
        let r = Restrictions {
            no_joint_compliers_a: true,
            ..Default::default()
        };
        let s = type_shares(&t, &r).unwrap().marginals_a.unwrap();
        assert_eq!((s.s, s.j, s.n, s.d), (0.5, 0.0, 0.0, 0.5));
    }

    #[test]
    fn two_sided_table_is_rejected() {
        let t = table(&[
            (1.0, 1, 0, 0, 0, 1.0),
            (1.0, 0, 1, 0, 1, 1.0),
            (1.0, 1, 0, 1, 0, 1.0),
            (1.0, 1, 1, 1, 1, 1.0),
        ]);
        assert!(matches!(
            type_shares(&t, &Restrictions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn undefined_moments_on_empty_cells() {
        let t = exclusion_table();
        let shares = type_shares(&t, &Restrictions::default()).unwrap();
        let m = identified_moments(&t, &shares).unwrap();
        assert_eq!(m.m10_c_nd, None);
        assert!(matches!(
            m.require(MomentId::Y10CNd),
            Err(Error::UndefinedMoment(_))
        ));
        assert_eq!(weighted(None, 0.0, MomentId::Y10CNd).unwrap(), 0.0);
        assert_eq!(m.m11_cc, Some(6.0));
    }

    #[test]
    fn derived_moment_needs_positive_share() {
        let t = table(&[
            (1.0, 0, 0, 0, 0, 1.0),
            (2.0, 0, 1, 0, 1, 1.0),
            (5.0, 0, 0, 1, 0, 1.0),
            (6.0, 0, 1, 1, 1, 1.0),
        ]);
        let shares = type_shares(&t, &Restrictions::default()).unwrap();
        assert_eq!(shares.p_sd_a, 0.0);
        let m = identified_moments(&t, &shares).unwrap();
        assert!(matches!(
            m.require(MomentId::Y00SdA),
            Err(Error::Identification(_))
        ));
    }

    #[test]
    fn supplied_joint_share_rebalances_marginals() {
        let t = exclusion_table();
        let shares = type_shares(&t, &Restrictions::default()).unwrap();
        let m = shares.marginals_b_given_joint(0.25).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-12);
        assert_eq!((m.j, m.d), (0.25, 0.25));
        assert!(shares.marginals_b_given_joint(0.9).is_err());
    }
}

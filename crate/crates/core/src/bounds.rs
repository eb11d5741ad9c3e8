//! Bounds on the joint effect and the local average interaction effect
//! (LAIE) of complier pairs `(c,c)`.
//!
//! All bounds assume potential outcomes in `[0, K]` and monotone response
//! (`Y(10) ≥ Y(00)`, `Y(01) ≥ Y(00)`). Direct bounds combine bounds on each
//! potential-outcome mean of `(c,c)` pairs; the indirect bound starts from
//! the decomposition of the interaction coefficient of the saturated IV
//! regression and bounds only its unidentified heterogeneity terms.

use serde::{Deserialize, Serialize};

use crate::identification::{weighted, IdentifiedMoments, MarginalShares, MomentId, TypeShares};
use crate::interval::{AssumedInterval, Assumption, Interval};
use crate::{Error, Result, FIRST_STAGE_TOL, SHARE_CLAMP_TOL};

/// Optional orderings of `Y(11)` that tighten the bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strengthenings {
    /// `Y(11) ≥ Y(00)` for every pair.
    pub y11_ge_y00: bool,
    /// `Y(11) ≥ max(Y(10), Y(01))` for every pair; implies `y11_ge_y00` under monotone response.
    pub y11_ge_max: bool,
}

impl Strengthenings {
    fn y11_above_y00(&self) -> bool {
        self.y11_ge_y00 || self.y11_ge_max
    }

    fn tags(&self) -> Vec<Assumption> {
        let mut tags = Vec::new();
        if self.y11_ge_y00 {
            tags.push(Assumption::Y11GeY00);
        }
        if self.y11_ge_max {
            tags.push(Assumption::Y11GeMax);
        }
        tags
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundInputs<'a> {
    pub shares: &'a TypeShares,
    pub moments: &'a IdentifiedMoments,
    /// Upper bound of the outcome range; the lower bound is 0.
    pub k: f64,
    pub strengthenings: Strengthenings,
    /// Intersect component moment intervals with `[0, K]` before combining them.
    pub clip_components: bool,
}

impl<'a> BoundInputs<'a> {
    /// Checks `k > 0` and that every observed moment lies in `[0, k]`.
    pub fn new(shares: &'a TypeShares, moments: &'a IdentifiedMoments, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "outcome bound K must be positive, found {k}"
            )));
        }
        for id in MomentId::ALL {
            if id.cell().is_none() {
                continue;
            }
            if let Some(v) = moments.get(id) {
                if v < 0.0 || v > k {
                    return Err(Error::InvalidArgument(format!(
                        "{} = {v} lies outside the outcome range [0, {k}]",
                        id.label()
                    )));
                }
            }
        }
        Ok(Self {
            shares,
            moments,
            k,
            strengthenings: Strengthenings::default(),
            clip_components: true,
        })
    }

    pub fn with_strengthenings(mut self, strengthenings: Strengthenings) -> Self {
        self.strengthenings = strengthenings;
        self
    }

    pub fn with_clipping(mut self, clip_components: bool) -> Self {
        self.clip_components = clip_components;
        self
    }

    fn m(&self, id: MomentId) -> Result<f64> {
        self.moments.require(id)
    }

    fn w(&self, id: MomentId, weight: f64) -> Result<f64> {
        weighted(self.moments.get(id), weight, id)
    }

    fn component(&self, lo: f64, hi: f64, tags: &[Assumption]) -> Result<AssumedInterval> {
        let iv = interval(lo, hi)?;
        let out = AssumedInterval::new(iv, tags.iter().copied());
        if self.clip_components {
            out.clip(self.k)
        } else {
            Ok(out)
        }
    }

    fn trivial(&self) -> Interval {
        Interval::new(0.0, self.k)
    }
}

fn interval(lo: f64, hi: f64) -> Result<Interval> {
    if lo > hi {
        return Err(Error::EmptyIdentifiedSet(format!(
            "lower bound {lo} exceeds upper bound {hi}"
        )));
    }
    Interval::try_new(lo, hi)
}

fn positive(value: f64, name: &str) -> Result<f64> {
    if value > FIRST_STAGE_TOL {
        Ok(value)
    } else {
        Err(Error::Identification(format!(
            "{name} = {value:e} must be positive"
        )))
    }
}

const BASE: [Assumption; 2] = [Assumption::BoundedOutcomes, Assumption::MonotoneResponse];

fn tags(extra: &[Assumption], strengthenings: &Strengthenings) -> Vec<Assumption> {
    BASE.iter()
        .chain(extra)
        .copied()
        .chain(strengthenings.tags())
        .collect()
}

/// Bounds on `E[Y(00) | (c,c)]`, reported without clipping to `[0, K]`.
pub fn bound_y00_cc(inp: &BoundInputs) -> Result<AssumedInterval> {
    let s = inp.shares;
    let p_cc = positive(s.p_cc, "P(c,c)")?;
    let upper = (inp.m(MomentId::Y00All)? - inp.w(MomentId::Y00NdNd, s.p_nd_nd)?) / p_cc;
    let lower =
        upper - (inp.w(MomentId::Y10CNd, s.p_c_nd)? + inp.w(MomentId::Y01NdC, s.p_nd_c)?) / p_cc;
    let upper = if inp.strengthenings.y11_above_y00() {
        upper.min(inp.m(MomentId::Y11Cc)?)
    } else {
        upper
    };
    Ok(AssumedInterval::new(
        interval(lower, upper)?,
        tags(&[], &inp.strengthenings),
    ))
}

/// Bounds on the joint effect `E[Y(11) − Y(00) | (c,c)]`.
pub fn bound_joint_cc(inp: &BoundInputs) -> Result<AssumedInterval> {
    let y00 = bound_y00_cc(inp)?;
    let m11 = inp.m(MomentId::Y11Cc)?;
    let mut lo = m11 - y00.hi;
    if inp.strengthenings.y11_above_y00() {
        lo = lo.max(0.0);
    }
    Ok(AssumedInterval::new(
        interval(lo, m11 - y00.lo)?,
        y00.assumptions,
    ))
}

/// Direct LAIE bound with its component intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectLaieBounds {
    /// `E[Y(00) | (c,c)]`
    pub y00: AssumedInterval,
    /// `E[Y(10) | (c,c)]`
    pub y10: AssumedInterval,
    /// `E[Y(01) | (c,c)]`
    pub y01: AssumedInterval,
    pub laie: AssumedInterval,
}

fn restricted_marginals(s: &TypeShares) -> Result<(MarginalShares, MarginalShares)> {
    let r = &s.restrictions;
    if !(r.no_cross_defiers_a && r.no_joint_compliers_b) {
        return Err(Error::Precondition(
            "needs the no-cross-defiers restriction on A and the no-joint-compliers restriction on B".into(),
        ));
    }
    match (s.marginals_a, s.marginals_b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Precondition(
            "marginal type shares are not resolved".into(),
        )),
    }
}

const DIRECT_RESTRICTIONS: [Assumption; 2] =
    [Assumption::NoCrossDefiersA, Assumption::NoJointCompliersB];

/// LAIE of `(c,c)` pairs, bounded through each of its four potential-outcome means.
pub fn bound_laie_direct(inp: &BoundInputs) -> Result<DirectLaieBounds> {
    let (ma, mb) = restricted_marginals(inp.shares)?;
    let s = inp.shares;
    let p_cc = positive(s.p_cc, "P(c,c)")?;
    let k = inp.k;
    let m11 = inp.m(MomentId::Y11Cc)?;
    let t = tags(&DIRECT_RESTRICTIONS, &inp.strengthenings);
    let cap = |u: f64| {
        if inp.strengthenings.y11_ge_max {
            u.min(m11)
        } else {
            u
        }
    };

    let l10 = (inp.w(MomentId::Y10SdA, ma.s)? - inp.w(MomentId::Y10CNd, s.p_c_nd)?) / p_cc;
    let u10 = cap(l10 + k * ma.j / p_cc);
    let u01_raw = (inp.w(MomentId::Y01SdB, s.p_sd_b)? - inp.w(MomentId::Y01NdC, s.p_nd_c)?) / p_cc;
    let l01 = u01_raw - k * mb.d / p_cc;
    let u01 = cap(u01_raw);

    let y00 = {
        let raw = bound_y00_cc(inp)?;
        let raw = AssumedInterval::new(raw.interval(), t.iter().copied());
        if inp.clip_components {
            raw.clip(k)?
        } else {
            raw
        }
    };
    let y10 = inp.component(l10, u10, &t)?;
    let y01 = inp.component(l01, u01, &t)?;
    let laie = Interval::new(
        m11 + y00.lo - y10.hi - y01.hi,
        m11 + y00.hi - y10.lo - y01.lo,
    );
    let laie = AssumedInterval {
        clipped: inp.clip_components,
        ..AssumedInterval::new(laie, t)
    };
    Ok(DirectLaieBounds {
        y00,
        y10,
        y01,
        laie,
    })
}

/// Bounds for pairs in which A is a joint complier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointComplierABounds {
    /// `E[Y(00) | (j,·)]`
    pub y00: AssumedInterval,
    /// `E[Y(10) | (j,·)]`
    pub y10: AssumedInterval,
    /// `E[Y(10) − Y(00) | (j,·)]`
    pub effect: AssumedInterval,
}

/// Bounds for pairs in which B is a cross-defier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossDefierBBounds {
    /// `E[Y(01) | (·,d)]`
    pub y01: AssumedInterval,
    /// `E[Y(00) | (·,d)]`
    pub y00: AssumedInterval,
    /// `E[Y(01) − Y(00) | (·,d)]`
    pub effect: AssumedInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxMomentBounds {
    pub joint_complier_a: JointComplierABounds,
    pub cross_defier_b: CrossDefierBBounds,
}

fn effect_interval(
    inp: &BoundInputs,
    treated: &AssumedInterval,
    base: &AssumedInterval,
) -> Result<AssumedInterval> {
    let raw = AssumedInterval::new(
        treated.interval() - base.interval(),
        treated.assumptions.iter().copied(),
    );
    if inp.clip_components {
        raw.clip(inp.k)
    } else {
        Ok(raw)
    }
}

fn joint_complier_a(
    inp: &BoundInputs,
    ma: &MarginalShares,
    t: &[Assumption],
) -> Result<JointComplierABounds> {
    let s = inp.shares;
    let p_j = positive(ma.j, "P(j,·)")?;
    let u00 = (inp.w(MomentId::Y00NjA, s.p_nj_a)? - inp.w(MomentId::Y00NdNd, s.p_nd_nd)?) / p_j;
    let l00 = u00 - inp.w(MomentId::Y01NdC, s.p_nd_c)? / p_j;
    let l10 = (inp.w(MomentId::Y10CNd, s.p_c_nd)? - inp.w(MomentId::Y10SdA, ma.s)?) / p_j;
    let u10 = l10 + inp.k * s.p_cc / p_j;
    let y00 = inp.component(l00, u00, t)?;
    let y10 = inp.component(l10, u10, t)?;
    let effect = effect_interval(inp, &y10, &y00)?;
    Ok(JointComplierABounds { y00, y10, effect })
}

fn cross_defier_b(
    inp: &BoundInputs,
    mb: &MarginalShares,
    t: &[Assumption],
) -> Result<CrossDefierBBounds> {
    let s = inp.shares;
    let p_d = positive(mb.d, "P(·,d)")?;
    let u01 = (inp.w(MomentId::Y01SdB, s.p_sd_b)? - inp.w(MomentId::Y01NdC, s.p_nd_c)?) / p_d;
    let l01 = u01 - inp.k * s.p_cc / p_d;
    let sd_mass = inp.m(MomentId::Y00All)? - inp.w(MomentId::Y00NjB, s.p_nj_b)?;
    let l00 = (sd_mass - inp.k * mb.s) / p_d;
    let u00 = (sd_mass / p_d)
        .min((inp.w(MomentId::Y00NdNd, s.p_nd_nd)? + inp.w(MomentId::Y10CNd, s.p_c_nd)?) / p_d);
    let y01 = inp.component(l01, u01, t)?;
    let y00 = inp.component(l00, u00, t)?;
    let effect = effect_interval(inp, &y01, &y00)?;
    Ok(CrossDefierBBounds { y01, y00, effect })
}

/// Bounds for joint-complier A members; needs `P(j,·) > 0`.
pub fn bound_aux_joint_complier_a(inp: &BoundInputs) -> Result<JointComplierABounds> {
    let (ma, _) = restricted_marginals(inp.shares)?;
    joint_complier_a(
        inp,
        &ma,
        &tags(&DIRECT_RESTRICTIONS, &Strengthenings::default()),
    )
}

/// Bounds for cross-defier B members; needs `P(·,d) > 0`.
pub fn bound_aux_cross_defier_b(inp: &BoundInputs) -> Result<CrossDefierBBounds> {
    let (_, mb) = restricted_marginals(inp.shares)?;
    cross_defier_b(
        inp,
        &mb,
        &tags(&DIRECT_RESTRICTIONS, &Strengthenings::default()),
    )
}

pub fn bound_aux_moments(inp: &BoundInputs) -> Result<AuxMomentBounds> {
    Ok(AuxMomentBounds {
        joint_complier_a: bound_aux_joint_complier_a(inp)?,
        cross_defier_b: bound_aux_cross_defier_b(inp)?,
    })
}

/// Reference IV slopes entering the indirect bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvReference {
    pub beta_a: f64,
    pub beta_b: f64,
    pub beta_ab: f64,
}

impl IvReference {
    /// Slopes of a coefficient vector ordered intercept, D_A, D_B, D_A·D_B.
    pub fn from_beta(beta: &[f64; 4]) -> Self {
        Self {
            beta_a: beta[1],
            beta_b: beta[2],
            beta_ab: beta[3],
        }
    }
}

/// A supplied value, or range of values, for the unidentified share `P(·,j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareValue {
    Fixed(f64),
    Range { lo: f64, hi: f64 },
}

/// Effect intervals used for the unidentified terms at one value of `P(·,j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndirectEffects {
    /// `ATE_{A|B̄}(j,·)`
    pub ate_a_joint: Interval,
    /// `ATE_{B|Ā}(·,d)`
    pub ate_b_cross_defier: Interval,
    /// `ATE_{B|Ā}(·,j)`
    pub ate_b_joint: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndirectEvaluation {
    pub p_j_b: f64,
    pub effects: IndirectEffects,
    pub laie: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndirectLaieBounds {
    /// `β_AB + (P(j,·)/P(c,c))·β_A − ((P(·,d) − P(·,j))/P(c,c))·β_B`; free of `P(·,j)`.
    pub identified_part: f64,
    /// Weight of `ATE_{A|B̄}(j,·)`.
    pub weight_a_joint: f64,
    pub evaluations: Vec<IndirectEvaluation>,
    pub laie: AssumedInterval,
}

/// Bound on the LAIE of `(c,c)` pairs from the interaction coefficient.
///
/// When `P(·,j) = 0` the joint-complier and cross-defier effects use the
/// auxiliary moment bounds; otherwise they use the trivial range `[0, K]`.
/// A range of shares is handled by evaluating at its endpoints (and just
/// above zero when the range starts at zero) and taking the hull, which is
/// exact because the bound endpoints are affine in the share on each side of
/// zero. A zero share whose auxiliary bounds are empty is refuted by the data
/// and dropped from the range.
pub fn bound_laie_indirect(
    inp: &BoundInputs,
    iv: &IvReference,
    p_j_b: ShareValue,
) -> Result<IndirectLaieBounds> {
    let s = inp.shares;
    if !s.restrictions.no_cross_defiers_a {
        return Err(Error::Precondition(
            "needs the no-cross-defiers restriction on A".into(),
        ));
    }
    let ma = s
        .marginals_a
        .ok_or_else(|| Error::Precondition("marginal type shares of A are not resolved".into()))?;
    let p_cc = positive(s.p_cc, "P(c,c)")?;
    let net = s.net_cross_defier_share_b();
    let identified_part = iv.beta_ab + ma.j / p_cc * iv.beta_a - net / p_cc * iv.beta_b;

    let (lo, hi) = match p_j_b {
        ShareValue::Fixed(p) => (p, p),
        ShareValue::Range { lo, hi } => (lo, hi),
    };
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "share range [{lo}, {hi}] is reversed"
        )));
    }
    let mut evaluations = Vec::new();
    let mut points = vec![(lo, lo == 0.0)];
    if lo == 0.0 && hi > 0.0 {
        points.push((0.0, false));
    }
    if hi > lo {
        points.push((hi, false));
    }
    let several = points.len() > 1;
    for (p, use_aux) in points {
        let mb = s.marginals_b_given_joint(p)?;
        let effects = if use_aux {
            match aux_effects(inp, &ma, &mb) {
                Ok(effects) => effects,
                // The data rule out this share; the rest of the range still stands.
                Err(Error::EmptyIdentifiedSet(_)) if several => continue,
                Err(e) => return Err(e),
            }
        } else {
            IndirectEffects {
                ate_a_joint: inp.trivial(),
                ate_b_cross_defier: inp.trivial(),
                ate_b_joint: inp.trivial(),
            }
        };
        let laie = Interval::point(identified_part)
            + (-ma.j / p_cc) * effects.ate_a_joint
            + (mb.d / p_cc) * effects.ate_b_cross_defier
            + (-p / p_cc) * effects.ate_b_joint;
        evaluations.push(IndirectEvaluation {
            p_j_b: p,
            effects,
            laie,
        });
    }
    let hull = evaluations
        .iter()
        .map(|e| e.laie)
        .reduce(|a, b| a.hull(&b))
        .expect("at least one evaluation");

    let mut t = tags(&[Assumption::NoCrossDefiersA], &Strengthenings::default());
    let (id_lo, id_hi) = s.joint_share_b_range();
    let covers_identified_range = lo <= id_lo + SHARE_CLAMP_TOL && hi >= id_hi - SHARE_CLAMP_TOL;
    if hi == 0.0 {
        t.push(Assumption::NoJointCompliersB);
    } else if !covers_identified_range {
        t.push(Assumption::AssumedJointComplierShareB);
    }
    let mut laie = AssumedInterval::new(hull, t);
    laie.clipped = inp.clip_components;
    Ok(IndirectLaieBounds {
        identified_part,
        weight_a_joint: ma.j / p_cc,
        evaluations,
        laie,
    })
}

fn aux_effects(
    inp: &BoundInputs,
    ma: &MarginalShares,
    mb: &MarginalShares,
) -> Result<IndirectEffects> {
    let t = tags(&DIRECT_RESTRICTIONS, &Strengthenings::default());
    let ate_a_joint = if ma.j > FIRST_STAGE_TOL {
        joint_complier_a(inp, ma, &t)?.effect.interval()
    } else {
        inp.trivial()
    };
    let ate_b_cross_defier = if mb.d > FIRST_STAGE_TOL {
        cross_defier_b(inp, mb, &t)?.effect.interval()
    } else {
        inp.trivial()
    };
    Ok(IndirectEffects {
        ate_a_joint,
        ate_b_cross_defier,
        ate_b_joint: inp.trivial(),
    })
}

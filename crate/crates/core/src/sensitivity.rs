//! λ-multiplier sensitivity analysis.
//!
//! Unidentified effects are written as multiples `λ` of identified reference
//! effects, which makes the LAIE of complier pairs affine in the multipliers.
//! In the direct model `λ_A`, `λ_B` scale the standalone effects of A and B
//! for `(c,c)` pairs relative to `β_A`, `β_B`. In the indirect model `λ1`
//! scales `ATE_{A|B̄}(j,·)` relative to `β_A`, and `λ2`, `λ3` scale
//! `ATE_{B|Ā}(·,d)` and `ATE_{B|Ā}(·,j)` relative to `β_B`. Slopes of the
//! indirect model are affine in the unidentified share `P(·,j)`.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::IvReference;
use crate::identification::TypeShares;
use crate::interval::{AssumedInterval, Assumption, Interval};
use crate::{Error, Result, FIRST_STAGE_TOL};

pub const DEFAULT_LAMBDA_BOX: Interval = Interval { lo: 0.0, hi: 3.0 };
pub const DEFAULT_GRID_RESOLUTION: usize = 101;

/// `constant + per_share · P(·,j)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: f64,
    pub per_share: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            per_share: 0.0,
        }
    }

    pub fn at(&self, share: f64) -> f64 {
        self.constant + self.per_share * share
    }

    pub fn is_constant(&self) -> bool {
        self.per_share == 0.0
    }
}

impl std::ops::Add for Affine {
    type Output = Affine;
    fn add(self, rhs: Affine) -> Affine {
        Affine {
            constant: self.constant + rhs.constant,
            per_share: self.per_share + rhs.per_share,
        }
    }
}

impl std::ops::Mul<Affine> for f64 {
    type Output = Affine;
    fn mul(self, rhs: Affine) -> Affine {
        Affine {
            constant: self * rhs.constant,
            per_share: self * rhs.per_share,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    Direct,
    Indirect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaTerm {
    pub name: String,
    pub slope: Affine,
    /// Range of the multiplier used by box bounds and default grids.
    pub range: Interval,
}

/// `intercept + Σ slope·λ`, with intercept and slopes affine in `P(·,j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaModel {
    pub mode: LambdaMode,
    pub intercept: Affine,
    pub terms: Vec<LambdaTerm>,
    /// Value of `P(·,j)`; `None` leaves it symbolic.
    pub share: Option<f64>,
    pub assumptions: Vec<Assumption>,
}

impl LambdaModel {
    pub fn names(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.name.as_str()).collect()
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.terms
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("model has no multiplier `{name}`")))
    }

    pub fn slope(&self, name: &str) -> Result<Affine> {
        Ok(self.terms[self.position(name)?].slope)
    }

    pub fn depends_on_share(&self) -> bool {
        !self.intercept.is_constant() || self.terms.iter().any(|t| !t.slope.is_constant())
    }

    pub fn with_share(mut self, share: f64) -> Self {
        self.share = Some(share);
        self
    }

    /// Sets the same multiplier range for every term.
    pub fn with_box(mut self, range: Interval) -> Result<Self> {
        if range.lo < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "multiplier ranges must be nonnegative, found {range}"
            )));
        }
        for t in &mut self.terms {
            t.range = range;
        }
        Ok(self)
    }

    pub fn with_term_range(mut self, name: &str, range: Interval) -> Result<Self> {
        if range.lo < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "multiplier ranges must be nonnegative, found {range}"
            )));
        }
        let i = self.position(name)?;
        self.terms[i].range = range;
        Ok(self)
    }

    fn resolved_share(&self) -> Result<f64> {
        match self.share {
            Some(p) => Ok(p),
            None if !self.depends_on_share() => Ok(0.0),
            None => Err(Error::InvalidArgument(
                "model depends on P(·,j); fix the share or use the affine box bound".into(),
            )),
        }
    }

    /// Numeric intercept and slopes at the resolved share.
    pub fn coefficients(&self) -> Result<(f64, Vec<f64>)> {
        let p = self.resolved_share()?;
        Ok((
            self.intercept.at(p),
            self.terms.iter().map(|t| t.slope.at(p)).collect(),
        ))
    }

    /// Model value at multipliers given in term order.
    pub fn value(&self, lambdas: &[f64]) -> Result<f64> {
        if lambdas.len() != self.terms.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} multipliers, found {}",
                self.terms.len(),
                lambdas.len()
            )));
        }
        let (c, slopes) = self.coefficients()?;
        Ok(c + slopes.iter().zip(lambdas).map(|(s, l)| s * l).sum::<f64>())
    }
}

/// Lower- and upper-bound models from a joint-effect interval.
pub fn direct_lambda_model(
    iv: &IvReference,
    joint: &AssumedInterval,
) -> (LambdaModel, LambdaModel) {
    let model = |c: f64| LambdaModel {
        mode: LambdaMode::Direct,
        intercept: Affine::constant(c),
        terms: vec![
            LambdaTerm {
                name: "lambda_a".into(),
                slope: Affine::constant(-iv.beta_a),
                range: DEFAULT_LAMBDA_BOX,
            },
            LambdaTerm {
                name: "lambda_b".into(),
                slope: Affine::constant(-iv.beta_b),
                range: DEFAULT_LAMBDA_BOX,
            },
        ],
        share: None,
        assumptions: joint.assumptions.iter().copied().collect(),
    };
    (model(joint.lo), model(joint.hi))
}

/// The indirect model; `p_j_b = None` leaves `P(·,j)` symbolic.
pub fn indirect_lambda_model(
    shares: &TypeShares,
    iv: &IvReference,
    p_j_b: Option<f64>,
) -> Result<LambdaModel> {
    if !shares.restrictions.no_cross_defiers_a {
        return Err(Error::Precondition(
            "needs the no-cross-defiers restriction on A".into(),
        ));
    }
    let ma = shares
        .marginals_a
        .ok_or_else(|| Error::Precondition("marginal type shares of A are not resolved".into()))?;
    if shares.p_cc <= FIRST_STAGE_TOL {
        return Err(Error::Identification(format!(
            "P(c,c) = {:e} must be positive",
            shares.p_cc
        )));
    }
    if let Some(p) = p_j_b {
        shares.marginals_b_given_joint(p)?;
    }
    let p_cc = shares.p_cc;
    let net = shares.net_cross_defier_share_b();
    let intercept = iv.beta_ab + ma.j / p_cc * iv.beta_a - net / p_cc * iv.beta_b;
    let b = iv.beta_b / p_cc;
    Ok(LambdaModel {
        mode: LambdaMode::Indirect,
        intercept: Affine::constant(intercept),
        terms: vec![
            LambdaTerm {
                name: "lambda_1".into(),
                slope: Affine::constant(-ma.j / p_cc * iv.beta_a),
                range: DEFAULT_LAMBDA_BOX,
            },
            LambdaTerm {
                name: "lambda_2".into(),
                slope: Affine {
                    constant: net * b,
                    per_share: b,
                },
                range: DEFAULT_LAMBDA_BOX,
            },
            LambdaTerm {
                name: "lambda_3".into(),
                slope: Affine {
                    constant: 0.0,
                    per_share: -b,
                },
                range: DEFAULT_LAMBDA_BOX,
            },
        ],
        share: p_j_b,
        assumptions: vec![
            Assumption::BoundedOutcomes,
            Assumption::MonotoneResponse,
            Assumption::NoCrossDefiersA,
        ],
    })
}

/// Exact minimum and maximum of the model over its multiplier box.
pub fn bound_over_box(model: &LambdaModel) -> Result<AssumedInterval> {
    let (c, slopes) = model.coefficients()?;
    let (mut lo, mut hi) = (c, c);
    for (s, t) in slopes.iter().zip(&model.terms) {
        let (a, b) = (s * t.range.lo, s * t.range.hi);
        lo += a.min(b);
        hi += a.max(b);
    }
    Ok(AssumedInterval::new(
        Interval::new(lo, hi),
        model.assumptions.iter().copied(),
    ))
}

/// Box bounds as affine functions of `P(·,j)` over a share range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineBoxBound {
    pub lower: Affine,
    pub upper: Affine,
    pub share_range: Interval,
}

/// Box bounds that stay affine in the share; every slope must keep its sign
/// over `share_range`.
pub fn bound_over_box_affine(model: &LambdaModel, share_range: Interval) -> Result<AffineBoxBound> {
    let mut lower = model.intercept;
    let mut upper = model.intercept;
    for t in &model.terms {
        let (s0, s1) = (t.slope.at(share_range.lo), t.slope.at(share_range.hi));
        let nonneg = s0 >= 0.0 && s1 >= 0.0;
        let nonpos = s0 <= 0.0 && s1 <= 0.0;
        let (for_lower, for_upper) = match (nonneg, nonpos) {
            (true, _) => (t.range.lo, t.range.hi),
            (_, true) => (t.range.hi, t.range.lo),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "slope of `{}` changes sign over the share range {share_range}",
                    t.name
                )))
            }
        };
        lower = lower + for_lower * t.slope;
        upper = upper + for_upper * t.slope;
    }
    Ok(AffineBoxBound {
        lower,
        upper,
        share_range,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: Interval,
    pub y_range: Interval,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(range: Interval, resolution: usize) -> Self {
        Self {
            x_range: range,
            y_range: range,
            nx: resolution,
            ny: resolution,
        }
    }
}

/// Model values on a lattice; `values[i][j]` is at `(xs[j], ys[i])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetGrid {
    pub mode: LambdaMode,
    pub x_name: String,
    pub y_name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub levels: Vec<f64>,
    /// Values held fixed for the remaining multipliers.
    pub fixed: Vec<(String, f64)>,
    pub share: Option<f64>,
}

fn linspace(range: Interval, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![range.lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    range.hi
                } else {
                    range.lo + range.width() * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// About ten round levels (steps of 1, 2 or 5 × 10^k) spanning `[min, max]`, always including 0.
pub fn contour_levels(min: f64, max: f64) -> Vec<f64> {
    let mut levels = vec![0.0];
    let span = max - min;
    if span > 0.0 && span.is_finite() {
        let raw = span / 10.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (min / step).ceil() as i64;
        let last = (max / step).floor() as i64;
        for k in first..=last {
            let v = k as f64 * step;
            if k != 0 {
                levels.push((v / step).round() * step);
            }
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    levels
}

struct Plane {
    constant: f64,
    ax: f64,
    ay: f64,
}

fn plane(
    model: &LambdaModel,
    var_x: &str,
    var_y: &str,
    fixed: &[(String, f64)],
) -> Result<(Plane, Vec<(String, f64)>)> {
    if var_x == var_y {
        return Err(Error::InvalidArgument(
            "grid axes must be different multipliers".into(),
        ));
    }
    let (c, slopes) = model.coefficients()?;
    let ix = model.position(var_x)?;
    let iy = model.position(var_y)?;
    let mut constant = c;
    let mut held = Vec::new();
    for (i, t) in model.terms.iter().enumerate() {
        if i == ix || i == iy {
            continue;
        }
        let v = fixed
            .iter()
            .find(|(n, _)| n == &t.name)
            .map_or(0.0, |(_, v)| *v);
        constant += slopes[i] * v;
        held.push((t.name.clone(), v));
    }
    for (n, _) in fixed {
        model.position(n)?;
    }
    Ok((
        Plane {
            constant,
            ax: slopes[ix],
            ay: slopes[iy],
        },
        held,
    ))
}

/// Evaluates the model over a lattice of two multipliers. Multipliers not on
/// an axis are taken from `fixed`, defaulting to 0.
pub fn level_set_grid(
    model: &LambdaModel,
    var_x: &str,
    var_y: &str,
    grid: &GridSpec,
    fixed: &[(String, f64)],
) -> Result<LevelSetGrid> {
    let (pl, held) = plane(model, var_x, var_y, fixed)?;
    let xs = linspace(grid.x_range, grid.nx);
    let ys = linspace(grid.y_range, grid.ny);
    let values: Vec<Vec<f64>> = ys
        .iter()
        .map(|y| {
            xs.iter()
                .map(|x| pl.constant + pl.ax * x + pl.ay * y)
                .collect()
        })
        .collect();
    let (min, max) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    Ok(LevelSetGrid {
        mode: model.mode,
        x_name: var_x.to_owned(),
        y_name: var_y.to_owned(),
        xs,
        ys,
        values,
        levels: contour_levels(min, max),
        fixed: held,
        share: model.share,
    })
}

/// Segment of the `level` contour inside the box, as its (at most two)
/// endpoints ordered by `x`. Empty when the contour misses the box or the
/// model is flat in both axes.
pub fn contour_segment(
    model: &LambdaModel,
    var_x: &str,
    var_y: &str,
    grid: &GridSpec,
    fixed: &[(String, f64)],
    level: f64,
) -> Result<Vec<(f64, f64)>> {
    let (pl, _) = plane(model, var_x, var_y, fixed)?;
    let (xr, yr) = (grid.x_range, grid.y_range);
    let mut points: Vec<(f64, f64)> = Vec::new();
    let scale = 1e-12 * (1.0 + xr.width().abs() + yr.width().abs());
    let mut push = |p: (f64, f64)| {
        if !points
            .iter()
            .any(|q| (q.0 - p.0).abs() <= scale && (q.1 - p.1).abs() <= scale)
        {
            points.push(p);
        }
    };
    if pl.ay != 0.0 {
        for x in [xr.lo, xr.hi] {
            let y = (level - pl.constant - pl.ax * x) / pl.ay;
            if yr.contains_within(y, scale) {
                push((x, y.clamp(yr.lo, yr.hi)));
            }
        }
    }
    if pl.ax != 0.0 {
        for y in [yr.lo, yr.hi] {
            let x = (level - pl.constant - pl.ay * y) / pl.ax;
            if xr.contains_within(x, scale) {
                push((x.clamp(xr.lo, xr.hi), y));
            }
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite contour points"));
    Ok(points)
}

fn metadata(grid: &LevelSetGrid) -> Vec<(String, String)> {
    let range = |v: &[f64]| {
        (
            v.first().copied().unwrap_or(0.0),
            v.last().copied().unwrap_or(0.0),
        )
    };
    let (x0, x1) = range(&grid.xs);
    let (y0, y1) = range(&grid.ys);
    let mut out = vec![
        ("mode".to_owned(), format!("{:?}", grid.mode).to_lowercase()),
        ("x".to_owned(), grid.x_name.clone()),
        ("x_min".to_owned(), x0.to_string()),
        ("x_max".to_owned(), x1.to_string()),
        ("nx".to_owned(), grid.xs.len().to_string()),
        ("y".to_owned(), grid.y_name.clone()),
        ("y_min".to_owned(), y0.to_string()),
        ("y_max".to_owned(), y1.to_string()),
        ("ny".to_owned(), grid.ys.len().to_string()),
    ];
    for (n, v) in &grid.fixed {
        out.push((n.clone(), v.to_string()));
    }
    if let Some(p) = grid.share {
        out.push(("p_j_b".to_owned(), p.to_string()));
    }
    let levels: Vec<String> = grid.levels.iter().map(|l| l.to_string()).collect();
    out.push(("levels".to_owned(), levels.join(" ")));
    out
}

/// One `key=value` header row, then one comma-separated row per `y` value.
pub fn write_grid_csv<W: Write>(grid: &LevelSetGrid, mut out: W) -> Result<()> {
    let header: Vec<String> = metadata(grid)
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for row in &grid.values {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Comment header, then gnuplot's nonuniform matrix layout: the first row is
/// `nx x_1 … x_nx`, each following row is `y_i v_i1 … v_inx`.
pub fn write_grid_gnuplot<W: Write>(grid: &LevelSetGrid, mut out: W) -> Result<()> {
    let mut head = String::new();
    for (k, v) in metadata(grid) {
        let _ = writeln!(head, "# {k} = {v}");
    }
    out.write_all(head.as_bytes())?;
    let xs: Vec<String> = grid.xs.iter().map(|v| v.to_string()).collect();
    writeln!(out, "{} {}", grid.xs.len(), xs.join(" "))?;
    for (y, row) in grid.ys.iter().zip(&grid.values) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{y} {}", cells.join(" "))?;
    }
    Ok(())
}

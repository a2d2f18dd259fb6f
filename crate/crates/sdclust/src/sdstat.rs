//! Empirical stochastic-dominance integrals and the studentized two-sample
//! test statistic evaluated on a grid.
//!
//! For a sample h_1..h_N the ascending integral of order j is
//!
//!   H_j(x) = 1/(N (j-1)!) * sum_i (x - h_i)_+^(j-1)
//!
//! with the order-one power read as the indicator 1{h_i <= x}, so j = 1 is the
//! empirical CDF. The descending family mirrors the positive part to
//! (h_i - x)_+ and the indicator to 1{h_i >= x}; ties count as dominated mass
//! on both sides. Order j = 1, 2, 3 corresponds to preference for more,
//! risk-averse, and increasingly prudent investors on the ascending side, and
//! to their risk-seeking mirrors on the descending side.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "asc")]
    Ascending,
    #[serde(rename = "desc")]
    Descending,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Ascending => "asc",
            Direction::Descending => "desc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asc" | "ascending" => Ok(Direction::Ascending),
            "desc" | "descending" => Ok(Direction::Descending),
            other => Err(SdError::Config(format!("unknown direction `{other}`"))),
        }
    }
}

/// Dominance order j. Only the first three orders are meaningful for the
/// investor preference classes this crate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
    #[serde(rename = "3")]
    Third,
}

impl Order {
    pub fn j(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
            Order::Third => 3,
        }
    }

    pub fn from_u8(j: u8) -> Result<Self> {
        match j {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            3 => Ok(Order::Third),
            other => Err(SdError::Config(format!("order must be 1, 2 or 3, got {other}"))),
        }
    }
}

/// A return series used as test input: at least two finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(SdError::BadSample);
        }
        Ok(Sample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(SdError::Config("grid must hold finite points".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SdError::Config("grid points must be strictly increasing".into()));
        }
        Ok(Grid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Equally spaced grid spanning the pooled range of two samples, endpoints
/// included. Errors when the pooled range is a single point.
pub fn make_grid(f: &Sample, g: &Sample, points: usize) -> Result<Grid> {
    if points < 2 {
        return Err(SdError::Config("grid needs at least two points".into()));
    }
    let lo = f.min().min(g.min());
    let hi = f.max().max(g.max());
    if lo >= hi {
        return Err(SdError::DegenerateRange);
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut pts = Vec::with_capacity(points);
    for i in 0..points {
        pts.push(lo + step * i as f64);
    }
    // Guard against accumulated rounding at the top end.
    pts[points - 1] = hi;
    Grid::new(pts)
}

fn count_le(values: &[f64], x: f64) -> usize {
    values.iter().filter(|&&v| v <= x).count()
}

fn count_ge(values: &[f64], x: f64) -> usize {
    values.iter().filter(|&&v| v >= x).count()
}

/// Signed distance entering the positive part for the given direction.
#[inline]
fn gap(dir: Direction, x: f64, h: f64) -> f64 {
    match dir {
        Direction::Ascending => x - h,
        Direction::Descending => h - x,
    }
}

/// Empirical dominance integral H_j(x).
pub fn sd_integral(s: &Sample, x: f64, order: Order, dir: Direction) -> f64 {
    let n = s.len() as f64;
    match order {
        Order::First => {
            let c = match dir {
                Direction::Ascending => count_le(s.values(), x),
                Direction::Descending => count_ge(s.values(), x),
            };
            c as f64 / n
        }
        Order::Second => {
            let sum: f64 = s.values().iter().map(|&h| gap(dir, x, h).max(0.0)).sum();
            sum / n
        }
        Order::Third => {
            let sum: f64 = s
                .values()
                .iter()
                .map(|&h| {
                    let d = gap(dir, x, h).max(0.0);
                    d * d
                })
                .sum();
            sum / (2.0 * n)
        }
    }
}

/// Variance estimate of H_j(x), clamped at zero.
pub fn sd_variance(s: &Sample, x: f64, order: Order, dir: Direction) -> f64 {
    let n = s.len() as f64;
    match order {
        // Integer-count route: keeps the estimate exact in the count, so the
        // ascending value at x and the descending value at the mirrored count
        // agree bit for bit whenever the counts are complementary.
        Order::First => {
            let c = match dir {
                Direction::Ascending => count_le(s.values(), x),
                Direction::Descending => count_ge(s.values(), x),
            } as f64;
            (c * (n - c)) / (n * n * n)
        }
        Order::Second => {
            let (mut s1, mut s2) = (0.0, 0.0);
            for &h in s.values() {
                let d = gap(dir, x, h).max(0.0);
                s1 += d;
                s2 += d * d;
            }
            let mean = s1 / n;
            ((s2 / n - mean * mean) / n).max(0.0)
        }
        Order::Third => {
            let (mut s2, mut s4) = (0.0, 0.0);
            for &h in s.values() {
                let d = gap(dir, x, h).max(0.0);
                let d2 = d * d;
                s2 += d2;
                s4 += d2 * d2;
            }
            let mean = s2 / (2.0 * n);
            ((s4 / (4.0 * n) - mean * mean) / n).max(0.0)
        }
    }
}

/// Studentized dominance statistic evaluated over a grid.
///
/// `t_values[i]` is `Some(T(x_i))` where the pooled variance exceeds
/// `var_floor` and `None` elsewhere; the extremes summarize defined points.
#[derive(Debug, Clone)]
pub struct StatProfile {
    pub order: Order,
    pub direction: Direction,
    pub t_values: Vec<Option<f64>>,
    pub max: f64,
    pub min: f64,
    pub max_abs: f64,
}

impl StatProfile {
    pub fn defined_count(&self) -> usize {
        self.t_values.iter().filter(|t| t.is_some()).count()
    }
}

/// T_j(x) = (F_j(x) - G_j(x)) / sqrt(V_Fj(x) + V_Gj(x)) over the grid.
///
/// Points whose pooled variance is at or below `var_floor` are undefined;
/// errors when that happens everywhere.
pub fn stat_profile(
    f: &Sample,
    g: &Sample,
    grid: &Grid,
    order: Order,
    dir: Direction,
    var_floor: f64,
) -> Result<StatProfile> {
    let (nf, ng) = (f.len(), g.len());
    let (nf_f, ng_f) = (nf as f64, ng as f64);
    let mut t_values = Vec::with_capacity(grid.len());
    let (mut max, mut min, mut max_abs) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut any = false;

    for &x in grid.points() {
        let (num, var) = match order {
            // Counts stay integral until the final division so the first-order
            // ascending and descending statistics negate exactly at points
            // that coincide with no sample value.
            Order::First => {
                let (cf, cg) = match dir {
                    Direction::Ascending => (count_le(f.values(), x), count_le(g.values(), x)),
                    Direction::Descending => (count_ge(f.values(), x), count_ge(g.values(), x)),
                };
                let k = cf as i64 * ng as i64 - cg as i64 * nf as i64;
                let num = k as f64 / (nf_f * ng_f);
                let vf = (cf as f64 * (nf_f - cf as f64)) / (nf_f * nf_f * nf_f);
                let vg = (cg as f64 * (ng_f - cg as f64)) / (ng_f * ng_f * ng_f);
                (num, vf + vg)
            }
            _ => {
                let fj = sd_integral(f, x, order, dir);
                let gj = sd_integral(g, x, order, dir);
                let v = sd_variance(f, x, order, dir) + sd_variance(g, x, order, dir);
                (fj - gj, v)
            }
        };

        if var > var_floor {
            let t = num / var.sqrt();
            any = true;
            max = max.max(t);
            min = min.min(t);
            max_abs = max_abs.max(t.abs());
            t_values.push(Some(t));
        } else {
            t_values.push(None);
        }
    }

    if !any {
        return Err(SdError::AllPointsUndefined);
    }
    Ok(StatProfile {
        order,
        direction: dir,
        t_values,
        max,
        min,
        max_abs,
    })
}

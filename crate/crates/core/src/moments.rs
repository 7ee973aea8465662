//! First- and second-moment machinery: the closed-form mean of `ξ_t`, the
//! moment matrix `Q` on a truncated box, its exponential action, and the
//! harmonic function `h = F_d + b_λ` that bounds `E ζ_t(0)²`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::walk::HittingTable;

/// `E ξ_t(x) = exp{t(λr - 1)}` on an `r`-regular graph from all ones.
pub fn mean_xi_closed_form(lambda: f64, degree: usize, t: f64) -> f64 {
    (t * (lambda * degree as f64 - 1.0)).exp()
}

/// Mixed-radix box `{|x|_∞ ≤ R}` in `Z^d`, first coordinate least significant.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub d: usize,
    pub radius: u32,
}

impl LatticeBox {
    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn origin(&self) -> usize {
        self.index(&vec![0; self.d]).unwrap()
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        let r = self.radius as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &c in x.iter().rev() {
            if c.abs() > r {
                return None;
            }
            idx = idx * side + (c + r) as usize;
        }
        Some(idx)
    }

    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let r = self.radius as i64;
        (0..self.d)
            .map(|_| {
                let c = (idx % side) as i64 - r;
                idx /= side;
                c
            })
            .collect()
    }

    /// `|x|_∞` of a box index.
    pub fn sup_norm(&self, idx: usize) -> u32 {
        self.coords(idx)
            .iter()
            .map(|c| c.unsigned_abs() as u32)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
struct Csr {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Csr {
            offsets,
            cols,
            vals,
        }
    }

    fn transpose(&self, n: usize) -> Csr {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for r in 0..self.offsets.len() - 1 {
            for k in self.offsets[r]..self.offsets[r + 1] {
                rows[self.cols[k] as usize].push((r as u32, self.vals[k]));
            }
        }
        Csr::from_rows(rows)
    }

    #[inline]
    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.offsets[r]..self.offsets[r + 1]).map(move |k| (self.cols[k] as usize, self.vals[k]))
    }

    /// `out = (A + shift·I) v`
    fn apply_shifted(&self, v: &[f64], shift: f64, out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = shift * v[r];
            for (c, a) in self.row(r) {
                s += a * v[c];
            }
            *o = s;
        }
    }
}

/// The moment matrix `Q` restricted to a box, with entries pointing outside
/// the box dropped (absorbing truncation).
#[derive(Clone, Debug)]
pub struct TruncatedQ {
    pub d: usize,
    pub lambda: f64,
    pub lattice: LatticeBox,
    q: Csr,
    qt: Csr,
}

/// Targets of row 0 at distance 2: `(offset, λ-multiple)`. `±2e_i` is
/// reached by one ordered neighbor pair, `±e_i ± e_j` by two.
fn origin_two_step_targets(d: usize) -> Vec<(Vec<i64>, f64)> {
    let mut out = Vec::new();
    for i in 0..d {
        for s in [-2, 2] {
            let mut x = vec![0; d];
            x[i] = s;
            out.push((x, 1.0));
        }
        for j in i + 1..d {
            for si in [-1, 1] {
                for sj in [-1, 1] {
                    let mut x = vec![0; d];
                    x[i] = si;
                    x[j] = sj;
                    out.push((x, 2.0));
                }
            }
        }
    }
    out
}

/// States allowed in a box before refusing to build.
pub const MAX_BOX_STATES: usize = 2_000_000;

/// Builds `Q` on `{|x|_∞ ≤ R}`.
pub fn build_q(d: usize, lambda: f64, radius: u32) -> Result<TruncatedQ> {
    if d == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "λ must be positive, got {lambda}"
        )));
    }
    if radius < 2 {
        return Err(Error::InvalidArgument(
            "radius must be ≥ 2 (row 0 reaches distance 2)".into(),
        ));
    }
    let lattice = LatticeBox { d, radius };
    let states = (2 * radius as u64 + 1)
        .checked_pow(d as u32)
        .unwrap_or(u64::MAX);
    if states > MAX_BOX_STATES as u64 {
        return Err(Error::ResourceLimit {
            what: "box states",
            value: states,
            limit: MAX_BOX_STATES as u64,
        });
    }
    let n = lattice.len();
    let origin = lattice.origin();
    let df = d as f64;
    let two_step = origin_two_step_targets(d);
    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .map(|idx| {
            let x = lattice.coords(idx);
            let mut row = Vec::with_capacity(2 * d + 1);
            let diag = if idx == origin {
                1.0 - 2.0 * lambda * df
            } else {
                -4.0 * lambda * df
            };
            row.push((idx as u32, diag));
            let mut y = x.clone();
            for i in 0..d {
                for s in [-1, 1] {
                    y[i] += s;
                    if let Some(j) = lattice.index(&y) {
                        row.push((j as u32, 2.0 * lambda));
                    }
                    y[i] -= s;
                }
            }
            if idx == origin {
                for (z, mult) in &two_step {
                    row.push((lattice.index(z).unwrap() as u32, mult * lambda));
                }
            }
            row
        })
        .collect();
    let q = Csr::from_rows(rows);
    let qt = q.transpose(n);
    Ok(TruncatedQ {
        d,
        lambda,
        lattice,
        q,
        qt,
    })
}

impl TruncatedQ {
    pub fn dim(&self) -> usize {
        self.lattice.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.q
            .row(row)
            .find(|&(c, _)| c == col)
            .map_or(0.0, |(_, v)| v)
    }

    pub fn entry_at(&self, x1: &[i64], x2: &[i64]) -> Option<f64> {
        Some(self.entry(self.lattice.index(x1)?, self.lattice.index(x2)?))
    }

    /// Nonzero entries of a row.
    pub fn row(&self, r: usize) -> Vec<(usize, f64)> {
        self.q.row(r).collect()
    }

    /// `4λd`, the shift making `Q + 4λd·I` entrywise nonnegative.
    pub fn shift(&self) -> f64 {
        4.0 * self.lambda * self.d as f64
    }

    /// `1 + 8λd + 4λd²`
    pub fn norm_bound(&self) -> f64 {
        let (l, d) = (self.lambda, self.d as f64);
        1.0 + 8.0 * l * d + 4.0 * l * d * d
    }

    /// Full-lattice row sum of row `x`: `1 + 4λd²` at the origin, else 0.
    pub fn full_row_sum(&self, idx: usize) -> f64 {
        if idx == self.lattice.origin() {
            1.0 + 4.0 * self.lambda * (self.d * self.d) as f64
        } else {
            0.0
        }
    }

    /// Box indices whose row is complete (no dropped targets): `|x|_∞ ≤ R-1`,
    /// plus the origin.
    pub fn is_interior_row(&self, idx: usize) -> bool {
        self.lattice.sup_norm(idx) < self.lattice.radius
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.q.apply_shifted(v, 0.0, &mut out);
        out
    }

    /// `‖B‖_∞` for `B = Q + 4λd·I`.
    fn shifted_norm(&self) -> f64 {
        let s = self.shift();
        (0..self.dim())
            .map(|r| {
                self.q
                    .row(r)
                    .map(|(c, v)| if c == r { (v + s).abs() } else { v.abs() })
                    .sum::<f64>()
            })
            .fold(s, f64::max)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn expm_apply_csr(a: &Csr, shift: f64, bnorm: f64, v: &[f64], t: f64) -> Vec<f64> {
    // exp(tQ) v = e^{-shift t} exp(tB) v with B = Q + shift·I ≥ 0 entrywise;
    // split t into steps with h‖B‖ ≤ 1/2 and sum each step's series until
    // terms fall below 1e-17 of the running sum
    let mut y = v.to_vec();
    if t == 0.0 || sup(v) == 0.0 {
        return y;
    }
    let steps = (2.0 * t * bnorm).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let damp = (-shift * h).exp();
    let n = v.len();
    let mut term = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..steps {
        term.copy_from_slice(&y);
        let mut acc = y.clone();
        for k in 1..200 {
            a.apply_shifted(&term, shift, &mut next);
            let f = h / k as f64;
            for (tn, nx) in term.iter_mut().zip(&next) {
                *tn = nx * f;
            }
            for (ac, tn) in acc.iter_mut().zip(&term) {
                *ac += tn;
            }
            if sup(&term) <= 1e-17 * sup(&acc) {
                break;
            }
        }
        for (yi, ai) in y.iter_mut().zip(&acc) {
            *yi = ai * damp;
        }
    }
    y
}

/// `exp(tQ) v`.
pub fn expm_apply(q: &TruncatedQ, v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_expm_args(q, v, t)?;
    Ok(expm_apply_csr(&q.q, q.shift(), q.shifted_norm(), v, t))
}

/// `exp(tQᵀ) v`.
pub fn expm_apply_transpose(q: &TruncatedQ, v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_expm_args(q, v, t)?;
    // row sums of Bᵀ are column sums of B; bound by the max of both
    let bnorm = q.shifted_norm().max(column_norm(q));
    Ok(expm_apply_csr(&q.qt, q.shift(), bnorm, v, t))
}

fn column_norm(q: &TruncatedQ) -> f64 {
    let s = q.shift();
    (0..q.dim())
        .map(|r| {
            q.qt.row(r)
                .map(|(c, v)| if c == r { (v + s).abs() } else { v.abs() })
                .sum::<f64>()
        })
        .fold(s, f64::max)
}

fn check_expm_args(q: &TruncatedQ, v: &[f64], t: f64) -> Result<()> {
    if v.len() != q.dim() {
        return Err(Error::InvalidArgument(format!(
            "vector has length {}, box has {} states",
            v.len(),
            q.dim()
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t must be finite and ≥ 0, got {t}"
        )));
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct SecondMomentPoint {
    pub t: f64,
    /// Truncated `G_t(0)`; a lower bound for the full-lattice value.
    pub g0: f64,
    /// Part of `G_t(0)` carried by the outer two shells of the box.
    pub leakage: f64,
}

/// `G_t(0)` on the truncated box from `G_0 ≡ 1`.
///
/// `G_t(0) = ⟨e_0, exp(tQ) 1⟩ = Σ_x u_t(x)` with `u_t = exp(tQᵀ) e_0`, so the
/// weight of `u_t` on the outer two shells measures how much of `G_t(0)`
/// depends on the region where truncation bites.
pub fn integrate_second_moment(
    d: usize,
    lambda: f64,
    radius: u32,
    times: &[f64],
) -> Result<Vec<SecondMomentPoint>> {
    let q = build_q(d, lambda, radius)?;
    second_moment_on(&q, times)
}

pub fn second_moment_on(q: &TruncatedQ, times: &[f64]) -> Result<Vec<SecondMomentPoint>> {
    if times.iter().any(|&t| !(t >= 0.0)) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "times must be sorted and ≥ 0".into(),
        ));
    }
    let lattice = q.lattice;
    let outer: Vec<bool> = (0..q.dim())
        .map(|i| lattice.sup_norm(i) + 2 > lattice.radius)
        .collect();
    let mut u = vec![0.0; q.dim()];
    u[lattice.origin()] = 1.0;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        u = expm_apply_transpose(q, &u, t - now)?;
        now = t;
        let g0: f64 = u.iter().sum();
        let leakage: f64 = u
            .iter()
            .zip(&outer)
            .filter(|(_, &o)| o)
            .map(|(x, _)| x)
            .sum();
        out.push(SecondMomentPoint { t, g0, leakage });
    }
    Ok(out)
}

/// `h = F_d + b_λ` on a box.
#[derive(Clone, Debug)]
pub struct HarmonicH {
    pub d: usize,
    pub lambda: f64,
    pub b_lambda: f64,
    /// `F_d(e_1)` used in `b_λ`.
    pub f_e1: f64,
    pub lattice: LatticeBox,
    pub values: Vec<f64>,
    /// Absolute accuracy of the hitting probabilities behind `values`.
    pub table_tolerance: f64,
}

/// `1 - (d+1) F_d(e_1)`; the hypothesis of the upper bound needs it positive.
pub fn hypothesis_margin(d: usize, f_e1: f64) -> f64 {
    1.0 - (d as f64 + 1.0) * f_e1
}

/// `1/(4d[1 - (d+1) F_d(e_1)])`, or the failing margin.
pub fn lambda_threshold(d: usize, f_e1: f64) -> Result<f64> {
    let margin = hypothesis_margin(d, f_e1);
    if margin <= 0.0 {
        return Err(Error::HypothesisFails { d, margin });
    }
    Ok(1.0 / (4.0 * d as f64 * margin))
}

/// `b_λ = (4dλ[1 - (d+1)F_d(e_1)] - 1)/(1 + 4d²λ)`.
pub fn b_lambda(d: usize, lambda: f64, f_e1: f64) -> f64 {
    let df = d as f64;
    (4.0 * df * lambda * hypothesis_margin(d, f_e1) - 1.0) / (1.0 + 4.0 * df * df * lambda)
}

/// Builds `h` on the box of radius `R` from a hitting table of radius ≥ R.
pub fn build_h(d: usize, lambda: f64, hitting: &HittingTable, radius: u32) -> Result<HarmonicH> {
    if hitting.d() != d {
        return Err(Error::InvalidArgument(format!(
            "table is for d = {}, need {d}",
            hitting.d()
        )));
    }
    if hitting.radius() < radius {
        return Err(Error::InvalidArgument(format!(
            "table radius {} is smaller than box radius {radius}",
            hitting.radius()
        )));
    }
    let mut e1 = vec![0; d];
    e1[0] = 1;
    let f_e1 = hitting.get(&e1)?;
    let threshold = lambda_threshold(d, f_e1)?;
    if lambda <= threshold {
        return Err(Error::BelowThreshold { lambda, threshold });
    }
    let b = b_lambda(d, lambda, f_e1);
    let lattice = LatticeBox { d, radius };
    let values = (0..lattice.len())
        .map(|i| hitting.get(&lattice.coords(i)).map(|f| f + b))
        .collect::<Result<Vec<f64>>>()?;
    Ok(HarmonicH {
        d,
        lambda,
        b_lambda: b,
        f_e1,
        lattice,
        values,
        table_tolerance: hitting.tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HarmonicReport {
    pub interior_radius: u32,
    pub max_residual: f64,
    /// Coordinates where the residual is largest.
    pub worst_point: Vec<i64>,
    pub origin_residual: f64,
    /// `(1 + 4λd²) b_λ + 1 - 4λd[1 - (d+1)F_d(e_1)]`, zero by construction.
    pub origin_identity: f64,
    /// `10 · table tolerance · (1 + 4λd²)`
    pub tolerance: f64,
}

/// `max |(Qh)(x)|` over `|x|_∞ ≤ interior_radius`.
pub fn check_harmonic(
    q: &TruncatedQ,
    h: &HarmonicH,
    interior_radius: u32,
) -> Result<HarmonicReport> {
    if q.lattice != h.lattice {
        return Err(Error::InvalidArgument(
            "Q and h live on different boxes".into(),
        ));
    }
    if interior_radius + 2 > q.lattice.radius {
        return Err(Error::InvalidArgument(format!(
            "interior radius {interior_radius} must be ≤ R - 2 = {}",
            q.lattice.radius as i64 - 2
        )));
    }
    let qh = q.apply(&h.values);
    let mut max_residual = 0.0;
    let mut worst = 0;
    for (i, r) in qh.iter().enumerate() {
        if q.lattice.sup_norm(i) <= interior_radius && r.abs() > max_residual {
            max_residual = r.abs();
            worst = i;
        }
    }
    let (l, d) = (h.lambda, h.d as f64);
    let slope = 1.0 + 4.0 * l * d * d;
    Ok(HarmonicReport {
        interior_radius,
        max_residual,
        worst_point: q.lattice.coords(worst),
        origin_residual: qh[q.lattice.origin()],
        origin_identity: slope * h.b_lambda + 1.0 - 4.0 * l * d * hypothesis_margin(h.d, h.f_e1),
        tolerance: 10.0 * h.table_tolerance * slope,
    })
}

/// `sup h / inf h = (1 + b_λ)/b_λ`.
pub fn second_moment_bound(h: &HarmonicH) -> f64 {
    (1.0 + h.b_lambda) / h.b_lambda
}

#[derive(Clone, Debug, Serialize)]
pub struct QCheck {
    pub d: usize,
    pub lambda: f64,
    pub radius: u32,
    /// Interior rows `x ≠ 0` sum to 0 and row 0 to `1 + 4λd²`.
    pub row_sums: bool,
    pub max_row_sum_error: f64,
    /// `‖Q^n 1‖_∞ ≤ (1 + 8λd + 4λd²)^n` for `n = 1..=5`.
    pub norm_growth: bool,
    /// `Q + 4λd·I` entrywise nonnegative.
    pub shifted_nonnegative: bool,
    /// Columns of `exp(tQ)` entrywise ≥ -1e-10 for `t ∈ {0.1, 0.5, 1}`.
    pub exp_positive: bool,
    pub min_exp_entry: f64,
}

impl QCheck {
    pub fn all_pass(&self) -> bool {
        self.row_sums && self.norm_growth && self.shifted_nonnegative && self.exp_positive
    }
}

/// Default state count above which `qcheck` skips the `exp(tQ)` scan.
pub const QCHECK_MAX_COLUMNS: usize = 1_000;

/// Runs the structural checks on `Q`. The positivity check applies
/// `exp(tQ)` to every basis vector, so it is skipped (reported as passing
/// with `min_exp_entry = NaN`) above `max_columns` states.
pub fn qcheck(q: &TruncatedQ, max_columns: usize) -> Result<QCheck> {
    let n = q.dim();
    let mut max_err = 0.0f64;
    for r in 0..n {
        if q.is_interior_row(r) {
            let s: f64 = q.row(r).iter().map(|e| e.1).sum();
            max_err = max_err.max((s - q.full_row_sum(r)).abs());
        }
    }
    let slope = q.full_row_sum(q.lattice.origin());
    let row_sums = max_err <= 1e-12 * slope.max(1.0);

    let bound = q.norm_bound();
    let mut v = vec![1.0; n];
    let mut norm_growth = true;
    for k in 1..=5 {
        v = q.apply(&v);
        if sup(&v) > bound.powi(k) {
            norm_growth = false;
        }
    }

    let s = q.shift();
    let shifted_nonnegative = (0..n).all(|r| {
        q.row(r)
            .iter()
            .all(|&(c, v)| if c == r { v + s >= 0.0 } else { v >= 0.0 })
    });

    let mut min_exp_entry = f64::NAN;
    let mut exp_positive = true;
    if n <= max_columns {
        min_exp_entry = f64::INFINITY;
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            // t = 0.1, 0.5, 1.0 by the semigroup property
            let mut col = e.clone();
            for dt in [0.1, 0.4, 0.5] {
                col = expm_apply(q, &col, dt)?;
                let m = col.iter().copied().fold(f64::INFINITY, f64::min);
                min_exp_entry = min_exp_entry.min(m);
            }
            e[c] = 0.0;
        }
        exp_positive = min_exp_entry >= -1e-10;
    }
    Ok(QCheck {
        d: q.d,
        lambda: q.lambda,
        radius: q.lattice.radius,
        row_sums,
        max_row_sum_error: max_err,
        norm_growth,
        shifted_nonnegative,
        exp_positive,
        min_exp_entry,
    })
}

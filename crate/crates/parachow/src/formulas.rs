//! The formula engine: every expression for the Chern character of a
//! parabolic bundle, cross-checkable against every other.
//!
//! All formulas are exact. The weighted-average form works directly on a
//! component table; the Gysin forms consume filtration data pushed to the
//! ambient ring; the integral form works on jump data for piecewise-constant
//! weight functions; the single-divisor closed form uses exact power-series
//! division. Newton identities extract Chern classes from a character.

use std::sync::Arc;

use num::traits::{One, Signed, Zero};

use crate::class::GradedClass;
use crate::error::{Error, Result};
use crate::parabolic::{mask_members, ComponentTable, FiltrationData, SubsetMask};
use crate::rational::{factorial, q_int, Q};
use crate::ring::RingPresentation;
use crate::window::{checked_cell_count, cube, BoxIter};

fn exp_of_divisor_multiple(
    ring: &Arc<RingPresentation>,
    i: usize,
    c: Q,
) -> Result<GradedClass> {
    GradedClass::divisor(ring, i)?.scale(&c).exp()
}

/// e^{-(a/n) D_i} for a in `[lo, hi)`.
fn axis_weights(
    ring: &Arc<RingPresentation>,
    n: i64,
    i: usize,
    lo: i64,
    hi: i64,
) -> Result<Vec<GradedClass>> {
    (lo..hi)
        .map(|a| exp_of_divisor_multiple(ring, i, Q::new((-a).into(), n.into())))
        .collect()
}

fn sum_classes(ring: &Arc<RingPresentation>, xs: &[GradedClass]) -> Result<GradedClass> {
    let mut acc = GradedClass::zero(ring);
    for x in xs {
        acc = acc.add(x)?;
    }
    Ok(acc)
}

/// The denominator sum_{a in [0,n)^m} e^{-sum (a_i/n) D_i}, computed as the
/// product of per-axis sums.
fn window_weight_denominator(
    ring: &Arc<RingPresentation>,
    n: i64,
) -> Result<GradedClass> {
    let mut den = GradedClass::one(ring);
    for i in 0..ring.divisor_count() {
        let ws = axis_weights(ring, n, i, 0, n)?;
        den = den.mul(&sum_classes(ring, &ws)?)?;
    }
    Ok(den)
}

/// The weighted average of the component Chern characters over `[0,n)^m`
/// with weights e^{-sum (a_i/n) D_i}. This is the main formula; everything
/// else in this module must agree with it.
pub fn weighted_average_ch(t: &ComponentTable) -> Result<GradedClass> {
    let ring = t.ring();
    let n = t.denominator();
    let m = t.divisor_count();
    let ws: Vec<Vec<GradedClass>> = (0..m)
        .map(|i| axis_weights(ring, n, i, 0, n))
        .collect::<Result<_>>()?;
    let mut num = GradedClass::zero(ring);
    for a in cube(n, m) {
        let mut w = GradedClass::one(ring);
        for (i, &ai) in a.iter().enumerate() {
            w = w.mul(&ws[i][ai as usize])?;
        }
        num = num.add(&w.mul(t.cell(&a))?)?;
    }
    let den = window_weight_denominator(ring, n)?;
    num.mul(&den.invert()?)
}

/// The same computation read in a presentation of rational Deligne
/// cohomology; exposed by name so scene files can declare the target ring's
/// meaning.
pub fn deligne_ch(t: &ComponentTable) -> Result<GradedClass> {
    weighted_average_ch(t)
}

/// The weighted average with the numerator window shifted to
/// `[b_i, b_i + n)`; equal to `weighted_average_ch` exactly, by periodicity
/// of the weighted cells.
pub fn shifted_window_ch(t: &ComponentTable, b: &[i64]) -> Result<GradedClass> {
    let ring = t.ring();
    let n = t.denominator();
    let m = t.divisor_count();
    if b.len() != m {
        return Err(Error::validation("shift vector length must match divisors"));
    }
    let ws: Vec<Vec<GradedClass>> = (0..m)
        .map(|i| axis_weights(ring, n, i, b[i], b[i] + n))
        .collect::<Result<_>>()?;
    let lo: Vec<i64> = b.to_vec();
    let hi: Vec<i64> = b.iter().map(|x| x + n).collect();
    let mut num = GradedClass::zero(ring);
    for a in BoxIter::new(lo, hi) {
        let mut w = GradedClass::one(ring);
        for (i, &ai) in a.iter().enumerate() {
            w = w.mul(&ws[i][(ai - b[i]) as usize])?;
        }
        num = num.add(&w.mul(&t.component_ch(&a)?)?)?;
    }
    let den = window_weight_denominator(ring, n)?;
    num.mul(&den.invert()?)
}

/// Reconstruct the component table from filtration data by the alternating
/// (Koszul) sum ch(F_[a]) = ch(E) + sum_k (-1)^k sum_{S, |S|=k} ch(Q^S_[a_S])
/// on the window `[-n,0]^m`, re-expressed canonically on `[0,n)^m`.
pub fn filtration_to_table(f: &FiltrationData) -> Result<ComponentTable> {
    let ring = f.ring();
    let n = f.denominator();
    let m = f.divisor_count();
    let count = checked_cell_count(n, m)?;
    let mut cells = Vec::with_capacity(count);
    for r in cube(n, m) {
        // Indices with r_i = 0 stay at level 0 (where the quotient vanishes);
        // the rest drop by n and get twisted back by exp(D_i).
        let a: Vec<i64> = r.iter().map(|&x| if x == 0 { 0 } else { x - n }).collect();
        let support: Vec<usize> = (0..m).filter(|&i| a[i] < 0).collect();
        let mut cell = f.ch_e().clone();
        for mask in 1..(1u32 << m) {
            let members = mask_members(mask, m);
            if !members.iter().all(|i| support.contains(i)) {
                continue;
            }
            let levels: Vec<i64> = members.iter().map(|&i| a[i]).collect();
            let q = f.quotient(mask, &levels);
            if members.len() % 2 == 1 {
                cell = cell.sub(q)?;
            } else {
                cell = cell.add(q)?;
            }
        }
        if !support.is_empty() {
            let coefs: Vec<Q> = (0..m)
                .map(|i| if a[i] < 0 { q_int(1) } else { Q::zero() })
                .collect();
            let twist = GradedClass::divisor_combination(ring, &coefs)?.exp()?;
            cell = cell.mul(&twist)?;
        }
        cells.push(cell);
    }
    ComponentTable::new(ring, n, cells)
}

/// Per-subset alternating numerator shared by the two Gysin forms. `inner`
/// supplies, for a subset mask, the weighted sum over that subset's levels.
fn gysin_numerator<F>(f: &FiltrationData, mut inner: F) -> Result<GradedClass>
where
    F: FnMut(SubsetMask, &[usize]) -> Result<GradedClass>,
{
    let ring = f.ring();
    let n = f.denominator();
    let m = f.divisor_count();
    // N_i = sum_{a=-n}^{-1} e^{-(a/n) D_i}, the full negative-window weight
    // sum along an axis not in the subset.
    let mut full: Vec<GradedClass> = Vec::with_capacity(m);
    for i in 0..m {
        let ws = axis_weights(ring, n, i, -n, 0)?;
        full.push(sum_classes(ring, &ws)?);
    }
    let mut num = GradedClass::zero(ring);
    for mask in 1..(1u32 << m) {
        let members = mask_members(mask, m);
        let mut term = inner(mask, &members)?;
        for i in 0..m {
            if mask & (1 << i) == 0 {
                term = term.mul(&full[i])?;
            }
        }
        if members.len() % 2 == 1 {
            num = num.sub(&term)?;
        } else {
            num = num.add(&term)?;
        }
    }
    Ok(num)
}

fn gysin_tail(f: &FiltrationData, num: GradedClass) -> Result<GradedClass> {
    let ring = f.ring();
    let n = f.denominator();
    let m = f.divisor_count();
    let mut d_total = GradedClass::zero(ring);
    for i in 0..m {
        d_total = d_total.add(&GradedClass::divisor(ring, i)?)?;
    }
    let lead = d_total.exp()?.mul(f.ch_e())?;
    let den = window_weight_denominator(ring, n)?;
    lead.add(&num.mul(&den.invert()?)?)
}

/// ch(F) from quotient data: e^D ch(E) plus the alternating quotient sums
/// over `[-n,-1]^m` weighted by e^{-(a/n)D}, divided by the `[0,n)^m`
/// weight sum.
pub fn gysin_ch(f: &FiltrationData) -> Result<GradedClass> {
    let ring = f.ring();
    let n = f.denominator();
    let num = gysin_numerator(f, |mask, members| {
        let mut acc = GradedClass::zero(ring);
        for levels in f.quotient_window(mask) {
            let q = f.quotient(mask, &levels);
            if q.is_zero() {
                continue;
            }
            let mut w = GradedClass::one(ring);
            for (j, &i) in members.iter().enumerate() {
                w = w.mul(&exp_of_divisor_multiple(
                    ring,
                    i,
                    Q::new((-levels[j]).into(), n.into()),
                )?)?;
            }
            acc = acc.add(&w.mul(q)?)?;
        }
        Ok(acc)
    })?;
    gysin_tail(f, num)
}

/// The graded variant: each quotient is replaced by the sum of the
/// multi-graded pieces strictly above its levels, ch(Q^S_[a]) ~
/// sum_{a < c <= 0} ch(Gr^S_[c]). Reorganized per graded piece, the weight
/// of Gr^S_[c] is the product of the prefix sums
/// U_i(c) = sum_{a=-n}^{c-1} e^{-(a/n)D_i}.
pub fn graded_gysin_ch(f: &FiltrationData) -> Result<GradedClass> {
    if !f.has_gradeds() {
        return Err(Error::precondition(
            "graded Gysin formula needs the graded payload",
        ));
    }
    let ring = f.ring();
    let n = f.denominator();
    // prefix[i][c - (1-n)] = U_i(c) for c in [1-n, 0].
    let mut prefix: Vec<Vec<GradedClass>> = Vec::new();
    for i in 0..f.divisor_count() {
        let ws = axis_weights(ring, n, i, -n, 0)?;
        let mut acc = GradedClass::zero(ring);
        let mut row = Vec::with_capacity(n as usize);
        for w in &ws {
            acc = acc.add(w)?;
            row.push(acc.clone());
        }
        prefix.push(row);
    }
    let num = gysin_numerator(f, |mask, members| {
        let mut acc = GradedClass::zero(ring);
        for levels in f.graded_window(mask) {
            let g = f.graded(mask, &levels)?;
            if g.is_zero() {
                continue;
            }
            let mut w = GradedClass::one(ring);
            for (j, &i) in members.iter().enumerate() {
                let c = levels[j];
                w = w.mul(&prefix[i][(c - (1 - n)) as usize])?;
            }
            acc = acc.add(&w.mul(g)?)?;
        }
        Ok(acc)
    })?;
    gysin_tail(f, num)
}

// ---------------------------------------------------------------------------
// Formal univariate series over Q.

/// Coefficients of e^{c t} up to index `len - 1`.
pub fn exp_series(c: &Q, len: usize) -> Vec<Q> {
    let mut out = Vec::with_capacity(len);
    let mut pw = Q::one();
    for k in 0..len {
        if k > 0 {
            pw = &pw * c / q_int(k as i64);
        }
        out.push(pw.clone());
    }
    out
}

/// Coefficients of 1 - e^{-t}.
pub fn one_minus_exp_neg_series(len: usize) -> Vec<Q> {
    let e = exp_series(&q_int(-1), len);
    let mut out = vec![Q::zero(); len];
    for (k, c) in e.into_iter().enumerate() {
        if k > 0 {
            out[k] = -c;
        }
    }
    out
}

/// Exact division of formal series: returns q_0..q_d with
/// num = den * q to order d plus the common vanishing order. The vanishing
/// order of `den` must not exceed that of `num`.
pub fn series_quotient(num: &[Q], den: &[Q], d: usize) -> Result<Vec<Q>> {
    let at = |s: &[Q], k: usize| -> Q { s.get(k).cloned().unwrap_or_else(Q::zero) };
    let v = match den.iter().position(|c| !c.is_zero()) {
        Some(v) => v,
        None => {
            return Err(Error::precondition(
                "series denominator vanishes identically",
            ))
        }
    };
    for k in 0..v {
        if !at(num, k).is_zero() {
            return Err(Error::precondition(
                "series division not exact at the leading order",
            ));
        }
    }
    let lead = at(den, v);
    let mut out = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let mut acc = at(num, v + k);
        for (j, qj) in out.iter().enumerate() {
            let c = at(den, v + k - j);
            if !c.is_zero() {
                acc -= qj * &c;
            }
        }
        out.push(acc / &lead);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Single-divisor closed form.

/// Pushed Chern characters of the graded pieces of a single-divisor
/// filtration, indexed by their weights in (-1, 0].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrPieceList {
    pieces: Vec<(Q, GradedClass)>,
}

impl GrPieceList {
    pub fn new(pieces: Vec<(Q, GradedClass)>) -> Result<Self> {
        for (a, _) in &pieces {
            if !(a > &q_int(-1) && a <= &Q::zero()) {
                return Err(Error::precondition(format!(
                    "graded weight {a} outside (-1, 0]"
                )));
            }
        }
        let mut seen: Vec<&Q> = pieces.iter().map(|(a, _)| a).collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::precondition("graded weights must be distinct"));
        }
        Ok(GrPieceList { pieces })
    }

    pub fn pieces(&self) -> &[(Q, GradedClass)] {
        &self.pieces
    }

    /// Collect the nonzero single-divisor gradeds of filtration data over a
    /// one-divisor ring, at weights c/n.
    pub fn from_filtration(f: &FiltrationData) -> Result<Self> {
        if f.divisor_count() != 1 {
            return Err(Error::precondition(
                "the closed form applies to a single divisor",
            ));
        }
        let n = f.denominator();
        let mut pieces = Vec::new();
        for c in f.graded_window(1) {
            let g = f.graded(1, &c)?;
            if !g.is_zero() {
                pieces.push((Q::new(c[0].into(), n.into()), g.clone()));
            }
        }
        GrPieceList::new(pieces)
    }
}

/// ch(F) = e^D ch(E) - sum_alpha [(e^D - e^{-alpha D})/(1 - e^{-D})] ch(Gr_alpha),
/// each bracket computed by exact series division in a formal variable and
/// then evaluated at the nilpotent class D.
pub fn single_divisor_closed_form(
    ch_e: &GradedClass,
    gr: &GrPieceList,
    d_class: &GradedClass,
) -> Result<GradedClass> {
    let ring = ch_e.ring();
    let dim = ring.dim();
    let len = dim + 2;
    let den = one_minus_exp_neg_series(len);
    let e_t = exp_series(&q_int(1), len);
    let mut acc = d_class.exp()?.mul(ch_e)?;
    for (alpha, ch_gr) in gr.pieces() {
        let e_neg_alpha = exp_series(&-alpha.clone(), len);
        let num: Vec<Q> = e_t
            .iter()
            .zip(&e_neg_alpha)
            .map(|(a, b)| a - b)
            .collect();
        let bracket = series_quotient(&num, &den, dim)?;
        let value = d_class.eval_series(&bracket)?;
        acc = acc.sub(&value.mul(ch_gr)?)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Jump data and the integral formula.

/// ch(F_alpha) as a piecewise-constant function of real weights on
/// `[0,1)^m`: per axis a strictly increasing breakpoint list starting at 0,
/// and one class per grid box (the box for index j spans
/// `[w_j, w_{j+1})`, the last closing at 1). Cells are stored row-major with
/// the first axis slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpData {
    ring: Arc<RingPresentation>,
    breakpoints: Vec<Vec<Q>>,
    cells: Vec<GradedClass>,
}

impl JumpData {
    pub fn new(
        ring: &Arc<RingPresentation>,
        breakpoints: Vec<Vec<Q>>,
        cells: Vec<GradedClass>,
    ) -> Result<Self> {
        let m = ring.divisor_count();
        if breakpoints.len() != m {
            return Err(Error::validation(format!(
                "need one breakpoint list per divisor ({m}), got {}",
                breakpoints.len()
            )));
        }
        let mut count: usize = 1;
        for bs in &breakpoints {
            if bs.first() != Some(&Q::zero()) {
                return Err(Error::validation("breakpoint lists must start at 0"));
            }
            for w in bs.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::validation("breakpoints must strictly increase"));
                }
            }
            if bs.last().unwrap() >= &Q::one() {
                return Err(Error::validation("breakpoints must stay below 1"));
            }
            count = count.checked_mul(bs.len()).ok_or_else(|| {
                Error::validation("jump grid too large")
            })?;
        }
        if cells.len() != count {
            return Err(Error::validation(format!(
                "jump data needs {count} cells, got {}",
                cells.len()
            )));
        }
        if let Some(first) = cells.first() {
            let r = first.rank();
            for c in &cells {
                if !crate::class::same_ring(c.ring(), ring) {
                    return Err(Error::validation("jump cells must share the ring"));
                }
                if c.rank() != r {
                    return Err(Error::validation(
                        "jump cells must share their degree-0 part",
                    ));
                }
            }
        }
        Ok(JumpData {
            ring: ring.clone(),
            breakpoints,
            cells,
        })
    }

    /// Grid jump data of a component table: breakpoints at k/n, cell values
    /// the table cells.
    pub fn from_table(t: &ComponentTable) -> Result<Self> {
        let n = t.denominator();
        let m = t.divisor_count();
        let breakpoints = vec![
            (0..n).map(|k| Q::new(k.into(), n.into())).collect::<Vec<_>>();
            m
        ];
        JumpData::new(t.ring(), breakpoints, t.cells().to_vec())
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn breakpoints(&self) -> &[Vec<Q>] {
        &self.breakpoints
    }

    fn sizes(&self) -> Vec<usize> {
        self.breakpoints.iter().map(|b| b.len()).collect()
    }

    fn cell_at(&self, idx: &[usize]) -> &GradedClass {
        let sizes = self.sizes();
        let mut acc = 0usize;
        for (j, &i) in idx.iter().enumerate() {
            acc = acc * sizes[j] + i;
        }
        &self.cells[acc]
    }

    /// Exact termwise integral int_u^v e^{-alpha D} d alpha =
    /// sum_k (-D)^k (v^{k+1} - u^{k+1}) / (k+1)!.
    fn box_weight(&self, i: usize, u: &Q, v: &Q) -> Result<GradedClass> {
        let d = GradedClass::divisor(&self.ring, i)?;
        box_integral(&d, u, v)
    }

    /// The integral form of the weighted average: both numerator and
    /// denominator are sums over grid boxes of products of per-axis box
    /// integrals, the numerator weighted by the cell values.
    pub fn integral_ch(&self) -> Result<GradedClass> {
        let ring = &self.ring;
        let m = ring.divisor_count();
        let sizes = self.sizes();
        // Per-axis interval weights.
        let mut axis: Vec<Vec<GradedClass>> = Vec::with_capacity(m);
        for i in 0..m {
            let bs = &self.breakpoints[i];
            let mut row = Vec::with_capacity(bs.len());
            for j in 0..bs.len() {
                let u = &bs[j];
                let one = Q::one();
                let v = bs.get(j + 1).unwrap_or(&one);
                row.push(self.box_weight(i, u, v)?);
            }
            axis.push(row);
        }
        let mut num = GradedClass::zero(ring);
        let lo = vec![0i64; m];
        let hi: Vec<i64> = sizes.iter().map(|&s| s as i64).collect();
        for idx in BoxIter::new(lo, hi) {
            let ui: Vec<usize> = idx.iter().map(|&x| x as usize).collect();
            let mut w = GradedClass::one(ring);
            for (i, &j) in ui.iter().enumerate() {
                w = w.mul(&axis[i][j])?;
            }
            num = num.add(&w.mul(self.cell_at(&ui))?)?;
        }
        let mut den = GradedClass::one(ring);
        for row in &axis {
            den = den.mul(&sum_classes(ring, row)?)?;
        }
        num.mul(&den.invert()?)
    }

    /// Snap every breakpoint up to the grid (1/n)Z and return the component
    /// table of the perturbed denominator-n bundle. Errors when the grid is
    /// too coarse: a snapped breakpoint may not reach the next original one
    /// (nor 1).
    pub fn perturb_to_grid(&self, n: i64) -> Result<ComponentTable> {
        let ring = &self.ring;
        let m = ring.divisor_count();
        let count = checked_cell_count(n, m)?;
        let mut snapped: Vec<Vec<i64>> = Vec::with_capacity(m);
        for bs in &self.breakpoints {
            let mut row = Vec::with_capacity(bs.len());
            for (j, w) in bs.iter().enumerate() {
                let s = (w * q_int(n)).ceil().to_integer();
                let s = crate::rational::big_to_i64(&s)?;
                let next = bs.get(j + 1).cloned().unwrap_or_else(Q::one);
                if Q::new(s.into(), n.into()) >= next {
                    return Err(Error::precondition(format!(
                        "grid 1/{n} too coarse: breakpoint {w} snaps to {s}/{n}, \
                         crossing {next}"
                    )));
                }
                row.push(s);
            }
            snapped.push(row);
        }
        let mut cells = Vec::with_capacity(count);
        for a in cube(n, m) {
            let idx: Vec<usize> = (0..m)
                .map(|i| {
                    snapped[i]
                        .iter()
                        .rposition(|&s| s <= a[i])
                        .expect("breakpoint 0 snaps to 0")
                })
                .collect();
            cells.push(self.cell_at(&idx).clone());
        }
        ComponentTable::new(ring, n, cells)
    }
}

/// sum_{k=0}^{dim} (-D)^k (v^{k+1} - u^{k+1}) / (k+1)!, the exact integral
/// of e^{-alpha D} over [u, v].
pub fn box_integral(d_class: &GradedClass, u: &Q, v: &Q) -> Result<GradedClass> {
    let ring = d_class.ring();
    let dim = ring.dim();
    let neg = d_class.neg();
    let mut acc = GradedClass::zero(ring);
    let mut pw = GradedClass::one(ring);
    let mut upow = u.clone();
    let mut vpow = v.clone();
    for k in 0..=dim {
        if k > 0 {
            pw = pw.mul(&neg)?;
            upow *= u;
            vpow *= v;
        }
        let c = (&vpow - &upow) / Q::from_integer(factorial(k + 1));
        acc = acc.add(&pw.scale(&c))?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Chern classes via Newton identities.

/// Chern classes c_1..c_dim from a Chern character with nonnegative integer
/// rank, via p_k = k! ch_k and the Newton recursion
/// p_k - c_1 p_{k-1} + ... + (-1)^{k-1} c_{k-1} p_1 + (-1)^k k c_k = 0.
pub fn chern_classes(ch: &GradedClass) -> Result<Vec<GradedClass>> {
    let r = ch.rank();
    if !r.is_integer() || r.is_negative() {
        return Err(Error::precondition(format!(
            "Chern classes need a nonnegative integer rank, got {r}"
        )));
    }
    let ring = ch.ring();
    let dim = ring.dim();
    let mut p = Vec::with_capacity(dim + 1);
    p.push(GradedClass::zero(ring)); // p_0 unused
    for k in 1..=dim {
        p.push(ch.degree_part(k).scale(&Q::from_integer(factorial(k))));
    }
    let mut c: Vec<GradedClass> = vec![GradedClass::one(ring)]; // c_0 = 1
    for k in 1..=dim {
        let mut acc = GradedClass::zero(ring);
        for j in 0..k {
            // (-1)^{k+1+j} c_j p_{k-j}
            let term = c[j].mul(&p[k - j])?;
            if (k + 1 + j) % 2 == 0 {
                acc = acc.add(&term)?;
            } else {
                acc = acc.sub(&term)?;
            }
        }
        c.push(acc.scale(&Q::new(1.into(), k.into())));
    }
    Ok(c.split_off(1))
}

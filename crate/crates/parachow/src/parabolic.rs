//! Parabolic bundles at the level of Chern data.
//!
//! A bundle with m parabolic divisors and denominator n is recorded by its
//! component table: the Chern character of each component on the window
//! `[0,n)^m`, extended to all integer multi-indices by the twist rule
//! `cell[a + n e_i] = cell[a] * exp(D_i)`. Split bundles (formal direct sums
//! of parabolic line pieces) serve as the universal brute-force oracle, and
//! `FiltrationData` carries the pushed-forward Chern data of the
//! multi-quotients that feed the Gysin-style formulas.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::traits::{Signed, Zero};

use crate::class::{same_ring, GradedClass};
use crate::error::{Error, Result};
use crate::rational::{big_to_i64, q_int, Q};
use crate::ring::RingPresentation;
use crate::window::{checked_cell_count, cube, linear_index, BoxIter};

/// A formal direct sum of parabolic line bundles O(sum_i twist_i * D_i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitBundle {
    pub pieces: Vec<SplitPiece>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPiece {
    pub rank: u32,
    pub twists: Vec<Q>,
}

impl SplitBundle {
    pub fn new(pieces: Vec<SplitPiece>) -> Result<Self> {
        for p in &pieces {
            if p.rank == 0 {
                return Err(Error::validation("split piece ranks must be positive"));
            }
        }
        Ok(SplitBundle { pieces })
    }

    pub fn line(twists: Vec<Q>) -> Self {
        SplitBundle {
            pieces: vec![SplitPiece { rank: 1, twists }],
        }
    }

    /// Direct sum of the exponentials: sum_k rank_k e^{sum_i twist_i D_i}.
    /// This is the closed-form Chern character every formula must reproduce.
    pub fn exponential_sum(&self, ring: &Arc<RingPresentation>) -> Result<GradedClass> {
        let mut acc = GradedClass::zero(ring);
        for p in &self.pieces {
            let d = GradedClass::divisor_combination(ring, &p.twists)?;
            acc = acc.add(&d.exp()?.scale(&q_int(p.rank as i64)))?;
        }
        Ok(acc)
    }

    /// Least common denominator of all twists.
    pub fn denominator(&self) -> Result<i64> {
        let mut n: i64 = 1;
        for p in &self.pieces {
            for t in &p.twists {
                let d = big_to_i64(t.denom())?;
                n = num::integer::lcm(n, d);
            }
        }
        Ok(n)
    }
}

/// The Chern characters ch(F_[a]) for a in `[0,n)^m`, stored densely in
/// row-major order (first divisor axis slowest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentTable {
    ring: Arc<RingPresentation>,
    n: i64,
    cells: Vec<GradedClass>,
}

impl ComponentTable {
    pub fn new(ring: &Arc<RingPresentation>, n: i64, cells: Vec<GradedClass>) -> Result<Self> {
        let m = ring.divisor_count();
        let count = checked_cell_count(n, m)?;
        if cells.len() != count {
            return Err(Error::validation(format!(
                "table needs {count} cells ({n}^{m}), got {}",
                cells.len()
            )));
        }
        for c in &cells {
            if !same_ring(c.ring(), ring) {
                return Err(Error::validation("table cells must share the table's ring"));
            }
        }
        // Components of a locally abelian bundle share their generic rank.
        if let Some(first) = cells.first() {
            let r = first.rank();
            for c in &cells {
                if c.rank() != r {
                    return Err(Error::validation(format!(
                        "cell rank {} differs from {}; all components share the generic rank",
                        c.rank(),
                        r
                    )));
                }
            }
        }
        Ok(ComponentTable {
            ring: ring.clone(),
            n,
            cells,
        })
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn denominator(&self) -> i64 {
        self.n
    }

    pub fn divisor_count(&self) -> usize {
        self.ring.divisor_count()
    }

    pub fn cells(&self) -> &[GradedClass] {
        &self.cells
    }

    pub fn cell(&self, idx: &[i64]) -> &GradedClass {
        &self.cells[linear_index(idx, 0, self.n)]
    }

    /// ch(F_[a]) for an arbitrary integer multi-index, by the twist rule:
    /// reduce a_i = q_i n + r_i with 0 <= r_i < n and multiply the stored
    /// cell by exp(sum q_i D_i).
    pub fn component_ch(&self, a: &[i64]) -> Result<GradedClass> {
        let m = self.divisor_count();
        if a.len() != m {
            return Err(Error::validation(format!(
                "multi-index length {} does not match {m} divisors",
                a.len()
            )));
        }
        let mut rem = Vec::with_capacity(m);
        let mut shift = vec![Q::zero(); m];
        let mut shifted = false;
        for (i, &ai) in a.iter().enumerate() {
            let r = ai.rem_euclid(self.n);
            rem.push(r);
            let quot = (ai - r) / self.n;
            if quot != 0 {
                shift[i] = q_int(quot);
                shifted = true;
            }
        }
        let cell = self.cell(&rem);
        if !shifted {
            return Ok(cell.clone());
        }
        let twist = GradedClass::divisor_combination(&self.ring, &shift)?.exp()?;
        cell.mul(&twist)
    }

    /// The table of F tensored with the parabolic line bundle
    /// O(sum_i (b_i/n) D_i): new cell[a] = component_ch(a + b).
    pub fn tensor_line(&self, b: &[i64]) -> Result<ComponentTable> {
        let m = self.divisor_count();
        if b.len() != m {
            return Err(Error::validation("twist vector length must match divisors"));
        }
        let mut cells = Vec::with_capacity(self.cells.len());
        for a in cube(self.n, m) {
            let idx: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            cells.push(self.component_ch(&idx)?);
        }
        ComponentTable::new(&self.ring, self.n, cells)
    }

    /// Cellwise sum.
    pub fn direct_sum(tables: &[ComponentTable]) -> Result<ComponentTable> {
        let first = tables
            .first()
            .ok_or_else(|| Error::validation("direct sum of no tables"))?;
        let mut cells = first.cells.clone();
        for t in &tables[1..] {
            if t.n != first.n || !same_ring(&t.ring, &first.ring) {
                return Err(Error::validation(
                    "direct sum requires matching ring and denominator",
                ));
            }
            for (c, d) in cells.iter_mut().zip(&t.cells) {
                *c = c.add(d)?;
            }
        }
        ComponentTable::new(&first.ring, first.n, cells)
    }

    pub fn scale(&self, c: &Q) -> Result<ComponentTable> {
        let cells = self.cells.iter().map(|x| x.scale(c)).collect();
        ComponentTable::new(&self.ring, self.n, cells)
    }

    /// The same bundle presented with denominator n*p: each cell is copied
    /// p^m times, cell[b] = old[floor(b/p)].
    pub fn refine_denominator(&self, p: i64) -> Result<ComponentTable> {
        if p < 1 {
            return Err(Error::validation("refinement factor must be positive"));
        }
        let m = self.divisor_count();
        let np = self
            .n
            .checked_mul(p)
            .ok_or_else(|| Error::validation("denominator overflow"))?;
        checked_cell_count(np, m)?;
        let mut cells = Vec::new();
        for b in cube(np, m) {
            let old: Vec<i64> = b.iter().map(|x| x / p).collect();
            cells.push(self.cell(&old).clone());
        }
        ComponentTable::new(&self.ring, np, cells)
    }
}

/// cell[a] = sum_k rank_k exp(sum_i floor((a_i + n twist_i)/n) D_i),
/// the component table of a split bundle.
pub fn split_to_table(
    b: &SplitBundle,
    ring: &Arc<RingPresentation>,
    n: i64,
) -> Result<ComponentTable> {
    let m = ring.divisor_count();
    let scaled = scaled_twists(b, m, n)?;
    let count = checked_cell_count(n, m)?;
    let mut cells = vec![GradedClass::zero(ring); count];
    for (piece, h) in b.pieces.iter().zip(&scaled) {
        for a in cube(n, m) {
            let coefs: Vec<Q> = a
                .iter()
                .zip(h)
                .map(|(ai, hi)| q_int((ai + hi).div_euclid(n)))
                .collect();
            let e = GradedClass::divisor_combination(ring, &coefs)?
                .exp()?
                .scale(&q_int(piece.rank as i64));
            let idx = linear_index(&a, 0, n);
            cells[idx] = cells[idx].add(&e)?;
        }
    }
    ComponentTable::new(ring, n, cells)
}

/// Twists as integers over denominator n; errors when some twist's
/// denominator does not divide n.
fn scaled_twists(b: &SplitBundle, m: usize, n: i64) -> Result<Vec<Vec<i64>>> {
    let mut out = Vec::with_capacity(b.pieces.len());
    for piece in &b.pieces {
        if piece.twists.len() != m {
            return Err(Error::validation(format!(
                "piece has {} twists but the ring designates {m} divisors",
                piece.twists.len()
            )));
        }
        let mut h = Vec::with_capacity(m);
        for t in &piece.twists {
            let scaled = t * q_int(n);
            if !scaled.is_integer() {
                return Err(Error::precondition(format!(
                    "twist {t} has a denominator not dividing n = {n}"
                )));
            }
            h.push(big_to_i64(&scaled.to_integer())?);
        }
        out.push(h);
    }
    Ok(out)
}

/// r * prod_{i in S} (1 - exp(-D_i)): the Chern character, pushed to the
/// ambient, of a sheaf of constant Chern character r supported on the
/// intersection of the divisors in S.
pub fn structure_sheaf_class(
    r: &Q,
    s: &[usize],
    ring: &Arc<RingPresentation>,
) -> Result<GradedClass> {
    if s.is_empty() {
        return Err(Error::precondition(
            "structure sheaf class needs a nonempty divisor subset",
        ));
    }
    let mut acc = GradedClass::scalar(ring, r.clone());
    for &i in s {
        let d = GradedClass::divisor(ring, i)?;
        let factor = GradedClass::one(ring).sub(&d.neg().exp()?)?;
        acc = acc.mul(&factor)?;
    }
    Ok(acc)
}

/// Bitmask over divisor indices; bit i set means divisor i is in the subset.
pub type SubsetMask = u32;

pub fn mask_members(mask: SubsetMask, m: usize) -> Vec<usize> {
    (0..m).filter(|i| mask & (1 << i) != 0).collect()
}

/// ch(E) plus the pushed Chern data of the multi-quotients (and optionally
/// the multi-gradeds) of a filtration-presented parabolic bundle.
///
/// For each nonempty subset S the quotient classes are indexed over the
/// window `[-n,-1]^S` and the graded classes over `[1-n,0]^S`, both in
/// row-major order over the members of S in increasing divisor order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationData {
    ring: Arc<RingPresentation>,
    n: i64,
    ch_e: GradedClass,
    quotients: BTreeMap<SubsetMask, Vec<GradedClass>>,
    gradeds: Option<BTreeMap<SubsetMask, Vec<GradedClass>>>,
}

impl FiltrationData {
    pub fn new(
        ring: &Arc<RingPresentation>,
        n: i64,
        ch_e: GradedClass,
        quotients: BTreeMap<SubsetMask, Vec<GradedClass>>,
        gradeds: Option<BTreeMap<SubsetMask, Vec<GradedClass>>>,
    ) -> Result<Self> {
        let m = ring.divisor_count();
        if m >= 31 {
            return Err(Error::validation("at most 30 divisors are supported"));
        }
        checked_cell_count(n, m)?;
        if !same_ring(ch_e.ring(), ring) {
            return Err(Error::validation("ch(E) must live in the designated ring"));
        }
        let check_payload = |payload: &BTreeMap<SubsetMask, Vec<GradedClass>>,
                             what: &str|
         -> Result<()> {
            for mask in 1..(1u32 << m) {
                let members = mask_members(mask, m);
                let size = members.len();
                let want = (n as u128).pow(size as u32) as usize;
                let entry = payload.get(&mask).ok_or_else(|| {
                    Error::validation(format!(
                        "{what} payload missing subset {{{}}}",
                        members.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
                    ))
                })?;
                if entry.len() != want {
                    return Err(Error::validation(format!(
                        "{what} payload for a {size}-fold intersection needs {want} classes, got {}",
                        entry.len()
                    )));
                }
                for c in entry {
                    if !same_ring(c.ring(), ring) {
                        return Err(Error::validation(format!(
                            "{what} classes must share the designated ring"
                        )));
                    }
                    // Pushed classes off a codimension-|S| locus start in
                    // degree |S|.
                    for k in 0..size.min(ring.dim() + 1) {
                        if !c.degree_part(k).is_zero() {
                            return Err(Error::validation(format!(
                                "{what} class on a {size}-fold intersection has a nonzero \
                                 degree-{k} part"
                            )));
                        }
                    }
                }
            }
            Ok(())
        };
        check_payload(&quotients, "quotient")?;
        if let Some(g) = &gradeds {
            check_payload(g, "graded")?;
            // Rank additivity along each single divisor: the gradeds of an
            // exhaustive filtration sum to the full restriction.
            for i in 0..m {
                let mask = 1u32 << i;
                let mut total = GradedClass::zero(ring);
                for c in &g[&mask] {
                    total = total.add(c)?;
                }
                let d = GradedClass::divisor(ring, i)?;
                let restriction = ch_e
                    .mul(&GradedClass::one(ring).sub(&d.neg().exp()?)?)?;
                if total != restriction {
                    return Err(Error::validation(format!(
                        "gradeds along divisor {} do not sum to ch(E)(1 - e^-D); \
                         the filtration is not exhaustive",
                        i + 1
                    )));
                }
            }
        }
        Ok(FiltrationData {
            ring: ring.clone(),
            n,
            ch_e,
            quotients,
            gradeds,
        })
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn denominator(&self) -> i64 {
        self.n
    }

    pub fn divisor_count(&self) -> usize {
        self.ring.divisor_count()
    }

    pub fn ch_e(&self) -> &GradedClass {
        &self.ch_e
    }

    pub fn has_gradeds(&self) -> bool {
        self.gradeds.is_some()
    }

    /// Pushed ch of the multi-quotient at the given levels (one level in
    /// `[-n,-1]` per member of the subset, in increasing divisor order).
    pub fn quotient(&self, mask: SubsetMask, levels: &[i64]) -> &GradedClass {
        &self.quotients[&mask][linear_index(levels, -self.n, self.n)]
    }

    /// Pushed ch of the multi-graded at the given levels in `[1-n, 0]`.
    pub fn graded(&self, mask: SubsetMask, levels: &[i64]) -> Result<&GradedClass> {
        let g = self
            .gradeds
            .as_ref()
            .ok_or_else(|| Error::precondition("no graded payload present"))?;
        Ok(&g[&mask][linear_index(levels, 1 - self.n, self.n)])
    }

    pub fn quotient_window(&self, mask: SubsetMask) -> BoxIter {
        let size = mask.count_ones() as usize;
        BoxIter::new(vec![-self.n; size], vec![0; size])
    }

    pub fn graded_window(&self, mask: SubsetMask) -> BoxIter {
        let size = mask.count_ones() as usize;
        BoxIter::new(vec![1 - self.n; size], vec![1; size])
    }
}

/// Filtration data of a split bundle. Each line piece is normalized to
/// integer part plus fractional twist in [0,1); along divisor i its single
/// filtration jump sits at level -n*frac_i, so the piece survives in the
/// quotient at level a_i exactly when a_i < -n*frac_i.
pub fn split_to_filtration(
    b: &SplitBundle,
    ring: &Arc<RingPresentation>,
    n: i64,
) -> Result<FiltrationData> {
    let m = ring.divisor_count();
    let scaled = scaled_twists(b, m, n)?;
    // Per piece: integer (floor) parts and jump thresholds t_i = -n*frac_i.
    let mut floors: Vec<Vec<i64>> = Vec::new();
    let mut thresholds: Vec<Vec<i64>> = Vec::new();
    for h in &scaled {
        let fl: Vec<i64> = h.iter().map(|x| x.div_euclid(n)).collect();
        let th: Vec<i64> = h.iter().map(|x| -(x.rem_euclid(n))).collect();
        floors.push(fl);
        thresholds.push(th);
    }
    let mut ch_e = GradedClass::zero(ring);
    let mut bases = Vec::new();
    for (k, piece) in b.pieces.iter().enumerate() {
        let coefs: Vec<Q> = floors[k].iter().map(|&x| q_int(x)).collect();
        let base = GradedClass::divisor_combination(ring, &coefs)?
            .exp()?
            .scale(&q_int(piece.rank as i64));
        ch_e = ch_e.add(&base)?;
        bases.push(base);
    }

    let mut quotients = BTreeMap::new();
    let mut gradeds = BTreeMap::new();
    for mask in 1..(1u32 << m) {
        let members = mask_members(mask, m);
        let size = members.len();
        let psi = structure_sheaf_class(&q_int(1), &members, ring)?;
        let count = (n as usize).pow(size as u32);
        let mut q_cells = vec![GradedClass::zero(ring); count];
        let mut g_cells = vec![GradedClass::zero(ring); count];
        for (k, base) in bases.iter().enumerate() {
            let pushed = base.mul(&psi)?;
            // Quotient support: all a_i < t_i.
            for a in BoxIter::new(vec![-n; size], vec![0; size]) {
                if a.iter().zip(&members).all(|(&ai, &i)| ai < thresholds[k][i]) {
                    let idx = linear_index(&a, -n, n);
                    q_cells[idx] = q_cells[idx].add(&pushed)?;
                }
            }
            // Graded support: the single cell c_i = t_i.
            let c: Vec<i64> = members.iter().map(|&i| thresholds[k][i]).collect();
            let idx = linear_index(&c, 1 - n, n);
            g_cells[idx] = g_cells[idx].add(&pushed)?;
        }
        quotients.insert(mask, q_cells);
        gradeds.insert(mask, g_cells);
    }
    FiltrationData::new(ring, n, ch_e, quotients, Some(gradeds))
}

/// Rejects classes whose degree-0 part is not a nonnegative integer; used
/// when a scene declares a class to be a bundle's Chern character.
pub fn require_bundle_rank(c: &GradedClass, what: &str) -> Result<()> {
    let r = c.rank();
    if r.is_integer() && !r.is_negative() {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{what} must have a nonnegative integer rank, got {r}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn p2_two_lines() -> Arc<RingPresentation> {
        RingPresentation::projective_space(2)
            .unwrap()
            .with_divisors(vec![vec![q_int(1)], vec![q_int(1)]])
            .unwrap()
    }

    fn p2_one_line() -> Arc<RingPresentation> {
        RingPresentation::projective_space(2).unwrap()
    }

    fn exp_divisors(ring: &Arc<RingPresentation>, coefs: &[Q]) -> GradedClass {
        GradedClass::divisor_combination(ring, coefs)
            .unwrap()
            .exp()
            .unwrap()
    }

    #[test]
    fn split_table_trivial() {
        let r = p2_one_line();
        let t = split_to_table(&SplitBundle::line(vec![q_int(0)]), &r, 2).unwrap();
        assert_eq!(t.cell(&[0]), &GradedClass::one(&r));
        assert_eq!(t.cell(&[1]), &GradedClass::one(&r));
    }

    #[test]
    fn split_table_half_twist() {
        let r = p2_one_line();
        let t = split_to_table(&SplitBundle::line(vec![q(1, 2)]), &r, 2).unwrap();
        assert_eq!(t.cell(&[0]), &GradedClass::one(&r));
        assert_eq!(t.cell(&[1]), &exp_divisors(&r, &[q_int(1)]));
    }

    #[test]
    fn split_table_two_divisors() {
        // O(D1/2 + D2/2) for n = 2: cells 1, e^{D2}, e^{D1}, e^{D1+D2}.
        let r = p2_two_lines();
        let t = split_to_table(&SplitBundle::line(vec![q(1, 2), q(1, 2)]), &r, 2).unwrap();
        assert_eq!(t.cell(&[0, 0]), &GradedClass::one(&r));
        assert_eq!(t.cell(&[0, 1]), &exp_divisors(&r, &[q_int(0), q_int(1)]));
        assert_eq!(t.cell(&[1, 0]), &exp_divisors(&r, &[q_int(1), q_int(0)]));
        assert_eq!(t.cell(&[1, 1]), &exp_divisors(&r, &[q_int(1), q_int(1)]));
    }

    #[test]
    fn split_table_denominator_mismatch() {
        let r = p2_one_line();
        let err = split_to_table(&SplitBundle::line(vec![q(1, 3)]), &r, 2).unwrap_err();
        assert!(err.to_string().contains("denominator"));
    }

    #[test]
    fn component_ch_periodicity() {
        let r = p2_one_line();
        let t = split_to_table(&SplitBundle::line(vec![q(1, 2)]), &r, 2).unwrap();
        // In-window indices return the stored cells.
        assert_eq!(&t.component_ch(&[1]).unwrap(), t.cell(&[1]));
        // a + n multiplies by exp(D).
        let shifted = t.component_ch(&[3]).unwrap();
        let expect = t.cell(&[1]).mul(&exp_divisors(&r, &[q_int(1)])).unwrap();
        assert_eq!(shifted, expect);
        // O(D/2) at a = -2 is exp(-D).
        assert_eq!(
            t.component_ch(&[-2]).unwrap(),
            exp_divisors(&r, &[q_int(-1)])
        );
    }

    #[test]
    fn tensor_line_matches_split() {
        let r = p2_two_lines();
        let n = 4;
        let gamma = vec![q(1, 4), q(3, 4)];
        let b = vec![3i64, -2];
        let t = split_to_table(&SplitBundle::line(gamma.clone()), &r, n).unwrap();
        let lhs = t.tensor_line(&b).unwrap();
        let shifted: Vec<Q> = gamma
            .iter()
            .zip(&b)
            .map(|(g, &bi)| g + q(bi, n))
            .collect();
        let rhs = split_to_table(&SplitBundle::line(shifted), &r, n).unwrap();
        assert_eq!(lhs, rhs);
        // b = 0 is the identity.
        assert_eq!(t.tensor_line(&[0, 0]).unwrap(), t);
        // b = (n, 0) multiplies every cell by exp(D1).
        let tw = t.tensor_line(&[n, 0]).unwrap();
        let e1 = exp_divisors(&r, &[q_int(1), q_int(0)]);
        for a in cube(n, 2) {
            assert_eq!(tw.cell(&a), &t.cell(&a).mul(&e1).unwrap());
        }
    }

    #[test]
    fn direct_sum_and_scale() {
        let r = p2_two_lines();
        let t1 = split_to_table(&SplitBundle::line(vec![q(1, 2), q_int(0)]), &r, 2).unwrap();
        let t2 = split_to_table(&SplitBundle::line(vec![q_int(0), q(1, 2)]), &r, 2).unwrap();
        let sum = ComponentTable::direct_sum(&[t1.clone(), t2.clone()]).unwrap();
        for a in cube(2, 2) {
            assert_eq!(sum.cell(&a).rank(), &q_int(2));
        }
        let zero = ComponentTable::direct_sum(&[sum.clone(), sum.scale(&q_int(-1)).unwrap()])
            .unwrap();
        for a in cube(2, 2) {
            assert!(zero.cell(&a).is_zero());
        }
    }

    #[test]
    fn refine_denominator_copies_cells() {
        let r = p2_one_line();
        let t = split_to_table(&SplitBundle::line(vec![q(1, 2)]), &r, 2).unwrap();
        assert_eq!(t.refine_denominator(1).unwrap(), t);
        let rt = t.refine_denominator(2).unwrap();
        assert_eq!(rt.denominator(), 4);
        let e = exp_divisors(&r, &[q_int(1)]);
        assert_eq!(rt.cell(&[0]), &GradedClass::one(&r));
        assert_eq!(rt.cell(&[1]), &GradedClass::one(&r));
        assert_eq!(rt.cell(&[2]), &e);
        assert_eq!(rt.cell(&[3]), &e);
    }

    #[test]
    fn structure_sheaf_values() {
        let r = p2_two_lines();
        // 1 - e^{-H} = H - H^2/2 on P^2.
        let c = structure_sheaf_class(&q_int(1), &[0], &r).unwrap();
        assert_eq!(c.coeff(1, 0), &q_int(1));
        assert_eq!(c.coeff(2, 0), &q(-1, 2));
        assert!(c.rank().is_zero());
        // (1 - e^{-H})^2 = H^2 after truncation at dimension 2.
        let c2 = structure_sheaf_class(&q_int(1), &[0, 1], &r).unwrap();
        assert!(c2.degree_part(1).is_zero());
        assert_eq!(c2.coeff(2, 0), &q_int(1));
        assert!(structure_sheaf_class(&q_int(0), &[0], &r).unwrap().is_zero());
        assert!(structure_sheaf_class(&q_int(1), &[], &r).is_err());
    }

    #[test]
    fn filtration_of_half_twist() {
        // O(D/2), n = 2: the jump sits at level -1, so only a = -2 survives.
        let r = p2_one_line();
        let f = split_to_filtration(&SplitBundle::line(vec![q(1, 2)]), &r, 2).unwrap();
        let psi = structure_sheaf_class(&q_int(1), &[0], &r).unwrap();
        assert_eq!(f.quotient(1, &[-2]), &psi);
        assert!(f.quotient(1, &[-1]).is_zero());
        assert_eq!(f.graded(1, &[-1]).unwrap(), &psi);
        assert!(f.graded(1, &[0]).unwrap().is_zero());
    }

    #[test]
    fn filtration_case_c_vs_case_d() {
        // The counterexample pair shares all single-divisor data but differs
        // on the double intersection.
        let r = p2_two_lines();
        let case_c = SplitBundle::new(vec![
            SplitPiece { rank: 1, twists: vec![q_int(0), q_int(0)] },
            SplitPiece { rank: 1, twists: vec![q(1, 2), q(1, 2)] },
        ])
        .unwrap();
        let case_d = SplitBundle::new(vec![
            SplitPiece { rank: 1, twists: vec![q(1, 2), q_int(0)] },
            SplitPiece { rank: 1, twists: vec![q_int(0), q(1, 2)] },
        ])
        .unwrap();
        let fc = split_to_filtration(&case_c, &r, 2).unwrap();
        let fd = split_to_filtration(&case_d, &r, 2).unwrap();
        assert_eq!(fc.ch_e(), fd.ch_e());
        for mask in [1u32, 2] {
            for a in fc.quotient_window(mask) {
                assert_eq!(fc.quotient(mask, &a), fd.quotient(mask, &a));
            }
        }
        let mut differ = false;
        for a in fc.quotient_window(3) {
            if fc.quotient(3, &a) != fd.quotient(3, &a) {
                differ = true;
            }
        }
        assert!(differ);
    }

    #[test]
    fn window_guard_applies() {
        let r = RingPresentation::truncated_polynomial(3, 2).unwrap();
        let err = split_to_table(
            &SplitBundle::line(vec![q_int(0), q_int(0), q_int(0)]),
            &r,
            101,
        )
        .unwrap_err();
        assert!(err.to_string().contains("PARACHOW_MAX_CELLS"));
    }

    #[test]
    fn rank_mismatch_rejected() {
        let r = p2_one_line();
        let cells = vec![GradedClass::one(&r), GradedClass::scalar(&r, q_int(2))];
        let err = ComponentTable::new(&r, 2, cells).unwrap_err();
        assert!(err.to_string().contains("rank"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn weighted_cells_are_periodic(
            h1 in 0i64..4, h2 in 0i64..4,
            a1 in -9i64..9, a2 in -9i64..9,
            axis in 0usize..2,
        ) {
            let n = 4;
            let r = p2_two_lines();
            let t = split_to_table(&SplitBundle::line(vec![q(h1, n), q(h2, n)]), &r, n).unwrap();
            let weight = |a: &[i64]| {
                let coefs: Vec<Q> = a.iter().map(|&x| q(-x, n)).collect();
                GradedClass::divisor_combination(&r, &coefs).unwrap().exp().unwrap()
            };
            let a = [a1, a2];
            let mut b = a;
            b[axis] += n;
            let lhs = weight(&a).mul(&t.component_ch(&a).unwrap()).unwrap();
            let rhs = weight(&b).mul(&t.component_ch(&b).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}

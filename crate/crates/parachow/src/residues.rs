//! Filtrations of a nilpotent residue operator: image, kernel, and the
//! monodromy weight filtration, plus the weight-one Gauss-Manin Chern
//! character computed along both of its routes.

use num::traits::Zero;

use crate::class::GradedClass;
use crate::error::{Error, Result};
use crate::formulas::{single_divisor_closed_form, GrPieceList};
use crate::linalg::{column_space, kernel, QMatrix, Subspace};
use crate::rational::{q_int, Q};

/// A nilpotent square matrix together with its nilpotency order: the least
/// k with matrix^k = 0 (so the paper-level index l is order - 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotentOperator {
    matrix: QMatrix,
    order: usize,
}

impl NilpotentOperator {
    pub fn new(matrix: QMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::validation("operator matrix must be square"));
        }
        let r = matrix.rows();
        if r == 0 {
            return Err(Error::validation("operator matrix must be nonempty"));
        }
        let mut pw = QMatrix::identity(r);
        for k in 1..=r {
            pw = pw.mul(&matrix);
            if pw.is_zero() {
                return Ok(NilpotentOperator { matrix, order: k });
            }
        }
        Err(Error::precondition(
            "operator is not nilpotent (nonzero at the size cap)",
        ))
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// Least k with eta^k = 0.
    pub fn order(&self) -> usize {
        self.order
    }

    /// The paper-level index l = order - 1.
    pub fn level(&self) -> usize {
        self.order - 1
    }

    pub fn matrix(&self) -> &QMatrix {
        &self.matrix
    }

    pub fn power(&self, k: usize) -> QMatrix {
        let mut pw = QMatrix::identity(self.size());
        for _ in 0..k {
            pw = pw.mul(&self.matrix);
        }
        pw
    }
}

/// A chain of subspaces with a direction flag; successive containment is
/// validated at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filtration {
    steps: Vec<Subspace>,
    increasing: bool,
}

impl Filtration {
    pub fn new(steps: Vec<Subspace>, increasing: bool) -> Result<Self> {
        for w in steps.windows(2) {
            let ok = if increasing {
                w[1].contains(&w[0])
            } else {
                w[0].contains(&w[1])
            };
            if !ok {
                return Err(Error::validation("filtration steps are not nested"));
            }
        }
        Ok(Filtration { steps, increasing })
    }

    pub fn steps(&self) -> &[Subspace] {
        &self.steps
    }

    pub fn increasing(&self) -> bool {
        self.increasing
    }

    pub fn dims(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.dim()).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "dims ({}): {}\n",
            if self.increasing { "increasing" } else { "decreasing" },
            self.dims()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
        for (k, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("step {k} (dim {}):\n", s.dim()));
            let b = s.basis();
            for i in 0..b.rows() {
                let row: Vec<String> = (0..b.cols()).map(|j| b.at(i, j).to_string()).collect();
                out.push_str("  ");
                out.push_str(&if row.is_empty() {
                    "-".to_string()
                } else {
                    row.join(" ")
                });
                out.push('\n');
            }
        }
        out
    }
}

/// Decreasing chain im eta^0 = Q^r >= im eta^1 >= ... >= im eta^order = 0.
pub fn image_filtration(eta: &NilpotentOperator) -> Filtration {
    let steps: Vec<Subspace> = (0..=eta.order())
        .map(|j| column_space(&eta.power(j)))
        .collect();
    Filtration::new(steps, false).expect("image chain is nested")
}

/// Increasing chain ker eta^0 = 0 <= ker eta^1 <= ... <= ker eta^order = Q^r.
/// The paper indexes the same chain decreasingly as F_j = ker eta^{l+1-j};
/// the direction flag records the stored orientation instead of silently
/// renumbering.
pub fn kernel_filtration(eta: &NilpotentOperator) -> Filtration {
    let steps: Vec<Subspace> = (0..=eta.order())
        .map(|j| kernel(&eta.power(j)))
        .collect();
    Filtration::new(steps, true).expect("kernel chain is nested")
}

/// The monodromy weight filtration 0 <= W_0 <= ... <= W_2l = Q^r, computed
/// by the inductive construction (W_0 = im eta^l, W_{2l-1} = ker eta^l, and
/// the graded pieces filled in by images/preimages of the powers), then
/// verified against both defining conditions: eta(W_k) <= W_{k-2} and
/// eta^j inducing isomorphisms Gr_{l+j} -> Gr_{l-j}.
pub fn monodromy_weight_filtration(eta: &NilpotentOperator) -> Result<Filtration> {
    let r = eta.size();
    let l = eta.level();
    let mut w: Vec<Option<Subspace>> = vec![None; 2 * l + 1];
    if l == 0 {
        w[0] = Some(Subspace::full(r));
    } else {
        w[0] = Some(column_space(&eta.power(l)));
        w[2 * l - 1] = Some(kernel(&eta.power(l)));
        w[2 * l] = Some(Subspace::full(r));
        for lp in 1..l {
            let upper = w[2 * l - lp].clone().expect("defined by induction");
            let lower = w[lp - 1].clone().expect("defined by induction");
            let pw = eta.power(l - lp);
            w[lp] = Some(upper.apply(&pw).sum(&lower));
            w[2 * l - lp - 1] = Some(Subspace::preimage(&pw, &lower).intersect(&upper));
        }
    }
    let steps: Vec<Subspace> = w.into_iter().map(|s| s.expect("all levels filled")).collect();
    let filt = Filtration::new(steps, true)
        .map_err(|_| Error::validation("weight filtration is not nested"))?;
    verify_weight_conditions(eta, &filt)?;
    Ok(filt)
}

fn verify_weight_conditions(eta: &NilpotentOperator, filt: &Filtration) -> Result<()> {
    let r = eta.size();
    let l = eta.level();
    let zero = Subspace::zero(r);
    let step = |k: i64| -> &Subspace {
        if k < 0 {
            &zero
        } else {
            &filt.steps()[k as usize]
        }
    };
    for k in 0..=(2 * l) as i64 {
        let img = step(k).apply(eta.matrix());
        if !step(k - 2).contains(&img) {
            return Err(Error::validation(format!(
                "weight filtration fails eta(W_{k}) <= W_{}",
                k - 2
            )));
        }
    }
    for j in 1..=l {
        let pw = eta.power(j);
        let hi = l + j;
        let lo = l - j;
        // Surjective on graded pieces: eta^j(W_{l+j}) + W_{l-j-1} = W_{l-j}.
        let image = step(hi as i64).apply(&pw).sum(step(lo as i64 - 1));
        if image != step(lo as i64).clone() {
            return Err(Error::validation(format!(
                "eta^{j} not surjective Gr_{hi} -> Gr_{lo}"
            )));
        }
        // Injective on graded pieces: the part of W_{l+j} mapping into
        // W_{l-j-1} is exactly W_{l+j-1}.
        let pre = Subspace::preimage(&pw, step(lo as i64 - 1)).intersect(step(hi as i64));
        if pre != step(hi as i64 - 1).clone() {
            return Err(Error::validation(format!(
                "eta^{j} not injective Gr_{hi} -> Gr_{lo}"
            )));
        }
    }
    Ok(())
}

/// Weight-one unipotent Gauss-Manin Chern character: with graded ranks
/// (g0, g1, g2), g0 = g2, and weights -1 < a0 < a1 < a2 <= 0 on a single
/// divisor class D, ch(F) = sum_i g_i e^{-a_i D}. Also computed along the
/// closed-form route (via ch(Gr_i) pushed as g_i (1 - e^{-D})) and checked
/// equal before returning.
pub fn weightone_ch(g: [u64; 3], alpha: [Q; 3], d_class: &GradedClass) -> Result<GradedClass> {
    if g[0] != g[2] {
        return Err(Error::precondition(format!(
            "weight-one graded ranks need g0 = g2, got {} and {}",
            g[0], g[2]
        )));
    }
    if !(alpha[0] < alpha[1] && alpha[1] < alpha[2]) {
        return Err(Error::precondition("weights must strictly increase"));
    }
    if !(alpha[0] > q_int(-1) && alpha[2] <= Q::zero()) {
        return Err(Error::precondition("weights must lie in (-1, 0]"));
    }
    let ring = d_class.ring();
    let mut direct = GradedClass::zero(ring);
    for (gi, ai) in g.iter().zip(&alpha) {
        let term = d_class.scale(&-ai.clone()).exp()?.scale(&q_int(*gi as i64));
        direct = direct.add(&term)?;
    }
    // The closed-form route of the same value.
    let total = q_int((g[0] + g[1] + g[2]) as i64);
    let ch_e = GradedClass::scalar(ring, total);
    let pushed_unit = GradedClass::one(ring).sub(&d_class.neg().exp()?)?;
    let pieces: Vec<(Q, GradedClass)> = g
        .iter()
        .zip(&alpha)
        .filter(|(gi, _)| **gi != 0)
        .map(|(gi, ai)| (ai.clone(), pushed_unit.scale(&q_int(*gi as i64))))
        .collect();
    let gr = GrPieceList::new(pieces)?;
    let via_closed_form = single_divisor_closed_form(&ch_e, &gr, d_class)?;
    if via_closed_form != direct {
        return Err(Error::validation(
            "internal cross-check failed: closed-form route disagrees with the direct sum",
        ));
    }
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::ring::RingPresentation;
    use std::sync::Arc;

    pub(crate) fn jordan_block(size: usize) -> QMatrix {
        let mut m = QMatrix::zero(size, size);
        for i in 0..size.saturating_sub(1) {
            *m.at_mut(i, i + 1) = q_int(1);
        }
        m
    }

    pub(crate) fn block_diag(blocks: &[usize]) -> QMatrix {
        let n: usize = blocks.iter().sum();
        let mut m = QMatrix::zero(n, n);
        let mut off = 0;
        for &s in blocks {
            for i in 0..s.saturating_sub(1) {
                *m.at_mut(off + i, off + i + 1) = q_int(1);
            }
            off += s;
        }
        m
    }

    #[test]
    fn orders() {
        assert_eq!(NilpotentOperator::new(QMatrix::zero(3, 3)).unwrap().order(), 1);
        assert_eq!(NilpotentOperator::new(jordan_block(2)).unwrap().order(), 2);
        assert_eq!(NilpotentOperator::new(jordan_block(4)).unwrap().order(), 4);
        assert!(NilpotentOperator::new(QMatrix::identity(2)).is_err());
        let nonsquare = QMatrix::zero(2, 3);
        assert!(NilpotentOperator::new(nonsquare).is_err());
    }

    #[test]
    fn image_filtration_dims() {
        let zero = NilpotentOperator::new(QMatrix::zero(3, 3)).unwrap();
        assert_eq!(image_filtration(&zero).dims(), vec![3, 0]);
        let j2 = NilpotentOperator::new(jordan_block(2)).unwrap();
        assert_eq!(image_filtration(&j2).dims(), vec![2, 1, 0]);
        let j3 = NilpotentOperator::new(jordan_block(3)).unwrap();
        assert_eq!(image_filtration(&j3).dims(), vec![3, 2, 1, 0]);
    }

    #[test]
    fn kernel_filtration_dims() {
        let zero = NilpotentOperator::new(QMatrix::zero(3, 3)).unwrap();
        assert_eq!(kernel_filtration(&zero).dims(), vec![0, 3]);
        let j2 = NilpotentOperator::new(jordan_block(2)).unwrap();
        assert_eq!(kernel_filtration(&j2).dims(), vec![0, 1, 2]);
        let mixed = NilpotentOperator::new(block_diag(&[2, 1])).unwrap();
        assert_eq!(kernel_filtration(&mixed).dims(), vec![0, 2, 3]);
    }

    #[test]
    fn filtrations_interleave() {
        // im eta^j <= ker eta^{l+1-j}.
        for blocks in [vec![3usize], vec![2, 2], vec![4, 2, 1]] {
            let eta = NilpotentOperator::new(block_diag(&blocks)).unwrap();
            let img = image_filtration(&eta);
            let ker = kernel_filtration(&eta);
            let order = eta.order();
            for j in 0..=order {
                assert!(ker.steps()[order - j].contains(&img.steps()[j]));
            }
        }
    }

    #[test]
    fn blockwise_filtration_dims_add() {
        let a = NilpotentOperator::new(jordan_block(3)).unwrap();
        let b = NilpotentOperator::new(jordan_block(2)).unwrap();
        let ab = NilpotentOperator::new(block_diag(&[3, 2])).unwrap();
        let da = image_filtration(&a).dims();
        let db = image_filtration(&b).dims();
        let dab = image_filtration(&ab).dims();
        // Shorter chains stabilize at their end value.
        let ext = |d: &Vec<usize>, j: usize| *d.get(j).unwrap_or(d.last().unwrap());
        for (j, &dj) in dab.iter().enumerate() {
            assert_eq!(dj, ext(&da, j) + ext(&db, j));
        }
    }

    #[test]
    fn weight_filtration_small_profiles() {
        let zero = NilpotentOperator::new(QMatrix::zero(4, 4)).unwrap();
        assert_eq!(monodromy_weight_filtration(&zero).unwrap().dims(), vec![4]);
        let j2 = NilpotentOperator::new(jordan_block(2)).unwrap();
        assert_eq!(
            monodromy_weight_filtration(&j2).unwrap().dims(),
            vec![1, 1, 2]
        );
        let j3 = NilpotentOperator::new(jordan_block(3)).unwrap();
        assert_eq!(
            monodromy_weight_filtration(&j3).unwrap().dims(),
            vec![1, 1, 2, 2, 3]
        );
        let j4 = NilpotentOperator::new(jordan_block(4)).unwrap();
        assert_eq!(
            monodromy_weight_filtration(&j4).unwrap().dims(),
            vec![1, 1, 2, 2, 3, 3, 4]
        );
    }

    #[test]
    fn weight_filtration_mixed_blocks() {
        // J2 + J1: center 1, so the J1 block contributes to Gr_1.
        let eta = NilpotentOperator::new(block_diag(&[2, 1])).unwrap();
        assert_eq!(
            monodromy_weight_filtration(&eta).unwrap().dims(),
            vec![1, 2, 3]
        );
        // J3 + J2 + J2: center 2.
        let eta = NilpotentOperator::new(block_diag(&[3, 2, 2])).unwrap();
        let w = monodromy_weight_filtration(&eta).unwrap();
        // Blockwise, center-aligned: J3 grades (1,0,1,0,1) at 0..4, each J2
        // grades (0,1,0,1,0).
        assert_eq!(w.dims(), vec![1, 3, 4, 6, 7]);
    }

    #[test]
    fn weight_filtration_endpoints() {
        for blocks in [vec![3usize, 1], vec![4, 2], vec![2, 2, 1]] {
            let eta = NilpotentOperator::new(block_diag(&blocks)).unwrap();
            let l = eta.level();
            let w = monodromy_weight_filtration(&eta).unwrap();
            assert_eq!(w.steps()[0], column_space(&eta.power(l)));
            assert_eq!(w.steps()[2 * l - 1], kernel(&eta.power(l)));
        }
    }

    #[test]
    fn weightone_values() {
        let ring: Arc<RingPresentation> =
            RingPresentation::surface(&[vec![q_int(1)]]).unwrap();
        let d = GradedClass::divisor(&ring, 0).unwrap();
        let got = weightone_ch([1, 2, 1], [q(-2, 3), q(-1, 3), Q::zero()], &d).unwrap();
        let expect = d
            .scale(&q(2, 3))
            .exp()
            .unwrap()
            .add(&d.scale(&q(1, 3)).exp().unwrap().scale(&q_int(2)))
            .unwrap()
            .add(&GradedClass::one(&ring))
            .unwrap();
        assert_eq!(got, expect);
        // Only the middle piece: g * e^{-a1 D}.
        let got = weightone_ch([0, 5, 0], [q(-1, 2), q(-1, 3), Q::zero()], &d).unwrap();
        assert_eq!(got, d.scale(&q(1, 3)).exp().unwrap().scale(&q_int(5)));
    }

    #[test]
    fn weightone_preconditions() {
        let ring = RingPresentation::surface(&[vec![q_int(1)]]).unwrap();
        let d = GradedClass::divisor(&ring, 0).unwrap();
        assert!(weightone_ch([1, 2, 2], [q(-2, 3), q(-1, 3), Q::zero()], &d).is_err());
        assert!(weightone_ch([1, 2, 1], [q(-1, 3), q(-2, 3), Q::zero()], &d).is_err());
        assert!(weightone_ch([1, 2, 1], [q(-4, 3), q(-1, 3), Q::zero()], &d).is_err());
        assert!(weightone_ch([1, 2, 1], [q(-2, 3), q(-1, 3), q(1, 3)], &d).is_err());
    }
}

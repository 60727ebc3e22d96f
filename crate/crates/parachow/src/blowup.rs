//! Blow-ups of a presented surface at crossing points: the derived
//! presentation upstairs, pullback/pushforward, and the Chern character of
//! exceptionally constant parabolic structures (evaluate the Gysin formula
//! upstairs, push the result down).

use std::sync::Arc;

use num::traits::Zero;

use crate::class::{same_ring, GradedClass};
use crate::error::{Error, Result};
use crate::formulas::gysin_ch;
use crate::parabolic::FiltrationData;
use crate::rational::{q_int, Q};
use crate::ring::RingPresentation;

/// A surface presentation blown up at r crossing points. Upstairs the
/// degree-1 basis extends the base one by the exceptional classes E_j with
/// E_j E_k = 0 (j != k), E_j^2 = -pt, E_j pulled-back-alpha = 0; the
/// designated divisors are the strict transforms D_i' = pull(D_i) - sum of
/// the E_j through D_i, followed by E_1..E_r.
#[derive(Debug, Clone)]
pub struct BlowupRing {
    base: Arc<RingPresentation>,
    upstairs: Arc<RingPresentation>,
    centers: Vec<Vec<usize>>,
    base_deg1: usize,
    /// base point class = point_scale * (single degree-2 basis element).
    point_scale: Q,
}

/// Blow up a surface presentation at one point per incidence set; the set
/// lists the (0-based) designated divisors through that point, at least two
/// of them (the centers are crossing points).
pub fn blowup_surface(
    base: &Arc<RingPresentation>,
    incidence: &[Vec<usize>],
) -> Result<BlowupRing> {
    if base.dim() != 2 {
        return Err(Error::validation("only surfaces (dimension 2) can be blown up"));
    }
    if base.basis_size(2) != 1 {
        return Err(Error::validation(
            "the base surface needs a one-dimensional degree-2 part",
        ));
    }
    let point = base
        .point_coeffs()
        .ok_or_else(|| Error::validation("the base surface needs a designated point class"))?;
    let point_scale = point[0].clone();
    if point_scale.is_zero() {
        return Err(Error::validation("the designated point class is zero"));
    }
    let m = base.divisor_count();
    for (j, set) in incidence.iter().enumerate() {
        let mut sorted = set.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() < 2 {
            return Err(Error::validation(format!(
                "center {} must lie on at least two distinct divisors (crossing point)",
                j + 1
            )));
        }
        if sorted.iter().any(|&i| i >= m) {
            return Err(Error::validation(format!(
                "center {} names a divisor out of range",
                j + 1
            )));
        }
    }
    let r = incidence.len();
    let base1 = base.bases()[1].clone();
    let nb = base1.len();
    let mut deg1 = base1;
    for j in 1..=r {
        let label = format!("E{j}");
        if deg1.contains(&label) {
            return Err(Error::validation(format!(
                "base degree-1 label `{label}` clashes with an exceptional class"
            )));
        }
        deg1.push(label);
    }
    if deg1.contains(&"pt".to_string()) {
        return Err(Error::validation(
            "base degree-1 label `pt` clashes with the upstairs point class",
        ));
    }
    let bases = vec![vec!["1".to_string()], deg1, vec!["pt".to_string()]];

    let mut products = Vec::new();
    // Pullbacks multiply as downstairs, re-expressed against pt = pull(point).
    for p in 0..nb {
        let ep: Vec<Q> = (0..nb).map(|t| if t == p { q_int(1) } else { Q::zero() }).collect();
        for s in p..nb {
            let es: Vec<Q> = (0..nb).map(|t| if t == s { q_int(1) } else { Q::zero() }).collect();
            let prod = base.mul_homogeneous(1, &ep, 1, &es);
            let c = &prod[0] / &point_scale;
            if !c.is_zero() {
                products.push(((1, p), (1, s), vec![c]));
            }
        }
    }
    // E_j^2 = -pt; mixed products with pullbacks and other E vanish.
    for j in 0..r {
        products.push(((1, nb + j), (1, nb + j), vec![q_int(-1)]));
    }

    let mut divisors: Vec<Vec<Q>> = Vec::with_capacity(m + r);
    for i in 0..m {
        let mut v = base.divisor_coeffs(i)?.clone();
        v.extend(vec![Q::zero(); r]);
        for (j, set) in incidence.iter().enumerate() {
            if set.contains(&i) {
                v[nb + j] = q_int(-1);
            }
        }
        divisors.push(v);
    }
    for j in 0..r {
        let mut v = vec![Q::zero(); nb + r];
        v[nb + j] = q_int(1);
        divisors.push(v);
    }

    let upstairs = RingPresentation::explicit(
        format!("{}_bl", base.name()),
        bases,
        products,
        divisors,
        Some(vec![q_int(1)]),
        true,
    )?;
    Ok(BlowupRing {
        base: base.clone(),
        upstairs,
        centers: incidence.to_vec(),
        base_deg1: nb,
        point_scale,
    })
}

impl BlowupRing {
    pub fn base(&self) -> &Arc<RingPresentation> {
        &self.base
    }

    pub fn upstairs(&self) -> &Arc<RingPresentation> {
        &self.upstairs
    }

    pub fn center_count(&self) -> usize {
        self.centers.len()
    }

    /// Ring homomorphism pull: identity on pulled-back classes.
    pub fn pullback(&self, x: &GradedClass) -> Result<GradedClass> {
        if !same_ring(x.ring(), &self.base) {
            return Err(Error::precondition("pullback input must live on the base"));
        }
        let mut coeffs = vec![
            vec![x.coeff(0, 0).clone()],
            vec![Q::zero(); self.base_deg1 + self.centers.len()],
            vec![Q::zero()],
        ];
        for i in 0..self.base_deg1 {
            coeffs[1][i] = x.coeff(1, i).clone();
        }
        coeffs[2][0] = x.coeff(2, 0) / &self.point_scale;
        GradedClass::from_coeffs(&self.upstairs, coeffs)
    }

    /// Linear pushforward: kills the exceptional classes in degree 1 and
    /// sends pt upstairs to the base point class.
    pub fn pushforward(&self, x: &GradedClass) -> Result<GradedClass> {
        if !same_ring(x.ring(), &self.upstairs) {
            return Err(Error::precondition(
                "pushforward input must live on the blow-up",
            ));
        }
        let mut coeffs = vec![
            vec![x.coeff(0, 0).clone()],
            vec![Q::zero(); self.base_deg1],
            vec![Q::zero()],
        ];
        for i in 0..self.base_deg1 {
            coeffs[1][i] = x.coeff(1, i).clone();
        }
        coeffs[2][0] = x.coeff(2, 0) * &self.point_scale;
        GradedClass::from_coeffs(&self.base, coeffs)
    }

    /// ch of an exceptionally constant parabolic structure: `ch_h` is the
    /// Chern character of the underlying bundle on the base, `f` the
    /// filtration payload over the blow-up's divisors (strict transforms
    /// then exceptional classes). Requires ch(E) upstairs = pull(ch_h);
    /// evaluates the Gysin formula upstairs and pushes down.
    pub fn exceptionally_constant_ch(
        &self,
        ch_h: &GradedClass,
        f: &FiltrationData,
    ) -> Result<GradedClass> {
        if !same_ring(f.ring(), &self.upstairs) {
            return Err(Error::precondition(
                "filtration payload must live on the blow-up ring",
            ));
        }
        let pulled = self.pullback(ch_h)?;
        if &pulled != f.ch_e() {
            return Err(Error::precondition(
                "ch(E) of the payload does not equal the pullback of ch(H)",
            ));
        }
        let upstairs_ch = gysin_ch(f)?;
        self.pushforward(&upstairs_ch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parabolic::{split_to_filtration, SplitBundle};
    use crate::rational::q;
    use proptest::prelude::*;

    /// P^2 with two lines through one blown-up point.
    fn p2_blowup() -> BlowupRing {
        let base = RingPresentation::projective_space(2)
            .unwrap()
            .with_divisors(vec![vec![q_int(1)], vec![q_int(1)]])
            .unwrap();
        blowup_surface(&base, &[vec![0, 1]]).unwrap()
    }

    #[test]
    fn presentation_relations() {
        let bl = p2_blowup();
        let up = bl.upstairs();
        // Divisors upstairs: D1' = H - E1, D2' = H - E1, E1.
        assert_eq!(up.divisor_count(), 3);
        let d1p = GradedClass::divisor(up, 0).unwrap();
        let d2p = GradedClass::divisor(up, 1).unwrap();
        let e1 = GradedClass::divisor(up, 2).unwrap();
        let pt = GradedClass::point(up).unwrap();
        // E1 * E1 = -pt, D1' * E1 = pt, D1' * D2' = 0.
        assert_eq!(e1.mul(&e1).unwrap(), pt.neg());
        assert_eq!(d1p.mul(&e1).unwrap(), pt);
        assert!(d1p.mul(&d2p).unwrap().is_zero());
        // D1' * D1' = pt - 2pt + ... = H^2 - 2 H E1 + E1^2 = pt - 0 - pt = 0.
        assert!(d1p.mul(&d1p).unwrap().is_zero());
    }

    #[test]
    fn separated_strict_transforms_on_a_general_surface() {
        // Two divisors meeting once, blown up at that crossing: the strict
        // transforms separate.
        let base = RingPresentation::surface(&[
            vec![q_int(0), q_int(1)],
            vec![q_int(1), q_int(0)],
        ])
        .unwrap();
        let bl = blowup_surface(&base, &[vec![0, 1]]).unwrap();
        let up = bl.upstairs();
        let d1p = GradedClass::divisor(up, 0).unwrap();
        let d2p = GradedClass::divisor(up, 1).unwrap();
        assert!(d1p.mul(&d2p).unwrap().is_zero());
    }

    #[test]
    fn incidence_validation() {
        let base = RingPresentation::projective_space(2)
            .unwrap()
            .with_divisors(vec![vec![q_int(1)], vec![q_int(1)]])
            .unwrap();
        assert!(blowup_surface(&base, &[vec![0]]).is_err());
        assert!(blowup_surface(&base, &[vec![]]).is_err());
        assert!(blowup_surface(&base, &[vec![0, 7]]).is_err());
        let p3 = RingPresentation::projective_space(3).unwrap();
        assert!(blowup_surface(&p3, &[vec![0, 1]]).is_err());
    }

    #[test]
    fn pull_push_identities() {
        let bl = p2_blowup();
        let base = bl.base();
        let h = GradedClass::divisor(base, 0).unwrap();
        let x = GradedClass::scalar(base, q(3, 2))
            .add(&h.scale(&q(-2, 5)))
            .unwrap()
            .add(&h.mul(&h).unwrap().scale(&q(7, 3)))
            .unwrap();
        assert_eq!(bl.pushforward(&bl.pullback(&x).unwrap()).unwrap(), x);
        let e1 = GradedClass::divisor(bl.upstairs(), 2).unwrap();
        assert!(bl.pushforward(&e1).unwrap().is_zero());
        // push(exp(E1/2)) = 1 - pt/8.
        let pushed = bl.pushforward(&e1.scale(&q(1, 2)).exp().unwrap()).unwrap();
        let pt_base = GradedClass::point(base).unwrap();
        let expect = GradedClass::one(base)
            .sub(&pt_base.scale(&q(1, 8)))
            .unwrap();
        assert_eq!(pushed, expect);
    }

    #[test]
    fn exceptionally_constant_trivial_is_one() {
        let bl = p2_blowup();
        let up = bl.upstairs();
        let f = split_to_filtration(
            &SplitBundle::line(vec![q_int(0), q_int(0), q_int(0)]),
            up,
            2,
        )
        .unwrap();
        let one_base = GradedClass::one(bl.base());
        assert_eq!(
            bl.exceptionally_constant_ch(&one_base, &f).unwrap(),
            one_base
        );
    }

    #[test]
    fn exceptionally_constant_exceptional_jump() {
        // Rank 1 with a single weight-1/2 jump along E1 only.
        let bl = p2_blowup();
        let up = bl.upstairs();
        let f = split_to_filtration(
            &SplitBundle::line(vec![q_int(0), q_int(0), q(1, 2)]),
            up,
            2,
        )
        .unwrap();
        let one_base = GradedClass::one(bl.base());
        let got = bl.exceptionally_constant_ch(&one_base, &f).unwrap();
        let pt = GradedClass::point(bl.base()).unwrap();
        assert_eq!(got, one_base.sub(&pt.scale(&q(1, 8))).unwrap());
    }

    #[test]
    fn exceptionally_constant_mixed_jumps() {
        // Weight-1/2 jumps on D1' and E1: D1' + E1 = pull(H), so the value
        // is push(exp(H/2 pulled)) = exp(H/2).
        let bl = p2_blowup();
        let up = bl.upstairs();
        let f = split_to_filtration(
            &SplitBundle::line(vec![q(1, 2), q_int(0), q(1, 2)]),
            up,
            2,
        )
        .unwrap();
        let one_base = GradedClass::one(bl.base());
        let got = bl.exceptionally_constant_ch(&one_base, &f).unwrap();
        let h = GradedClass::divisor(bl.base(), 0).unwrap();
        assert_eq!(got, h.scale(&q(1, 2)).exp().unwrap());
    }

    #[test]
    fn chh_mismatch_is_an_error() {
        let bl = p2_blowup();
        let up = bl.upstairs();
        let f = split_to_filtration(
            &SplitBundle::line(vec![q_int(0), q_int(0), q(1, 2)]),
            up,
            2,
        )
        .unwrap();
        let two = GradedClass::scalar(bl.base(), q_int(2));
        assert!(bl.exceptionally_constant_ch(&two, &f).is_err());
    }

    fn small_base_class(bl: &BlowupRing, a: Q, b: Q, c: Q) -> GradedClass {
        let base = bl.base();
        let h = GradedClass::divisor(base, 0).unwrap();
        GradedClass::scalar(base, a)
            .add(&h.scale(&b))
            .unwrap()
            .add(&h.mul(&h).unwrap().scale(&c))
            .unwrap()
    }

    fn upstairs_class(bl: &BlowupRing, a: Q, b: Q, c: Q, d: Q) -> GradedClass {
        let up = bl.upstairs();
        let h = GradedClass::divisor(up, 0).unwrap();
        let e = GradedClass::divisor(up, 2).unwrap();
        let pt = GradedClass::point(up).unwrap();
        GradedClass::scalar(up, a)
            .add(&h.scale(&b))
            .unwrap()
            .add(&e.scale(&c))
            .unwrap()
            .add(&pt.scale(&d))
            .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_formula(
            a in -4i64..=4, b in -4i64..=4, c in -4i64..=4,
            d in -4i64..=4, e in -4i64..=4, f in -4i64..=4, g in -4i64..=4,
        ) {
            let bl = p2_blowup();
            let x = small_base_class(&bl, q_int(a), q_int(b), q_int(c));
            let y = upstairs_class(&bl, q_int(d), q_int(e), q_int(f), q_int(g));
            let lhs = bl.pushforward(&bl.pullback(&x).unwrap().mul(&y).unwrap()).unwrap();
            let rhs = x.mul(&bl.pushforward(&y).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}

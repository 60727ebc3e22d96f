//! Elements of a presented ring, with the nilpotent calculus every formula
//! relies on: exponentials of positive-degree classes, inversion of classes
//! with a unit degree-0 part, and evaluation of formal series.

use std::fmt::Write as _;
use std::sync::Arc;

use num::traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{parse_rational, q_int, Q};
use crate::ring::RingPresentation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedClass {
    ring: Arc<RingPresentation>,
    /// Coefficient vector per degree 0..=dim, aligned with the ring's bases.
    coeffs: Vec<Vec<Q>>,
}

pub(crate) fn same_ring(a: &Arc<RingPresentation>, b: &Arc<RingPresentation>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl GradedClass {
    pub fn zero(ring: &Arc<RingPresentation>) -> Self {
        let coeffs = (0..=ring.dim())
            .map(|k| vec![Q::zero(); ring.basis_size(k)])
            .collect();
        GradedClass {
            ring: ring.clone(),
            coeffs,
        }
    }

    pub fn one(ring: &Arc<RingPresentation>) -> Self {
        Self::scalar(ring, q_int(1))
    }

    /// `c` times the unit.
    pub fn scalar(ring: &Arc<RingPresentation>, c: Q) -> Self {
        let mut z = Self::zero(ring);
        z.coeffs[0][0] = c;
        z
    }

    /// The i-th designated divisor class (0-based).
    pub fn divisor(ring: &Arc<RingPresentation>, i: usize) -> Result<Self> {
        let v = ring.divisor_coeffs(i)?.clone();
        let mut z = Self::zero(ring);
        z.coeffs[1] = v;
        Ok(z)
    }

    /// The designated point class, when the presentation has one.
    pub fn point(ring: &Arc<RingPresentation>) -> Result<Self> {
        let v = ring
            .point_coeffs()
            .ok_or_else(|| Error::validation("ring has no designated point class"))?
            .clone();
        let mut z = Self::zero(ring);
        let d = ring.dim();
        z.coeffs[d] = v;
        Ok(z)
    }

    pub fn from_coeffs(ring: &Arc<RingPresentation>, coeffs: Vec<Vec<Q>>) -> Result<Self> {
        if coeffs.len() != ring.dim() + 1 {
            return Err(Error::validation(format!(
                "class must list {} degrees, got {}",
                ring.dim() + 1,
                coeffs.len()
            )));
        }
        for (k, v) in coeffs.iter().enumerate() {
            if v.len() != ring.basis_size(k) {
                return Err(Error::validation(format!(
                    "degree {k} needs {} coefficients, got {}",
                    ring.basis_size(k),
                    v.len()
                )));
            }
        }
        Ok(GradedClass {
            ring: ring.clone(),
            coeffs,
        })
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn coeff(&self, degree: usize, index: usize) -> &Q {
        &self.coeffs[degree][index]
    }

    pub fn coeffs(&self) -> &[Vec<Q>] {
        &self.coeffs
    }

    /// Degree-0 coefficient (the rank, when this is a Chern character).
    pub fn rank(&self) -> &Q {
        &self.coeffs[0][0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| v.iter().all(|c| c.is_zero()))
    }

    /// The part of this class in a single degree.
    pub fn degree_part(&self, degree: usize) -> Self {
        let mut z = Self::zero(&self.ring);
        if degree < self.coeffs.len() {
            z.coeffs[degree] = self.coeffs[degree].clone();
        }
        z
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if same_ring(&self.ring, &other.ring) {
            Ok(())
        } else {
            Err(Error::precondition(format!(
                "classes live in different rings ({} vs {})",
                self.ring.name(),
                other.ring.name()
            )))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let mut out = self.clone();
        for (k, v) in out.coeffs.iter_mut().enumerate() {
            for (i, c) in v.iter_mut().enumerate() {
                *c += &other.coeffs[k][i];
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&q_int(-1))
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.iter_mut() {
            for x in v.iter_mut() {
                *x *= c;
            }
        }
        out
    }

    /// Bilinear extension of the ring's table; degrees above dim vanish.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        Ok(self.mul_raw(other))
    }

    fn mul_raw(&self, other: &Self) -> Self {
        let dim = self.ring.dim();
        let mut out = Self::zero(&self.ring);
        for dj in 0..=dim {
            if self.coeffs[dj].iter().all(|c| c.is_zero()) {
                continue;
            }
            for dk in 0..=(dim - dj) {
                if other.coeffs[dk].iter().all(|c| c.is_zero()) {
                    continue;
                }
                if dj == 0 {
                    let a = &self.coeffs[0][0];
                    for (i, b) in other.coeffs[dk].iter().enumerate() {
                        if !b.is_zero() {
                            out.coeffs[dk][i] += a * b;
                        }
                    }
                } else if dk == 0 {
                    let b = &other.coeffs[0][0];
                    for (i, a) in self.coeffs[dj].iter().enumerate() {
                        if !a.is_zero() {
                            out.coeffs[dj][i] += a * b;
                        }
                    }
                } else {
                    let prod =
                        self.ring
                            .mul_homogeneous(dj, &self.coeffs[dj], dk, &other.coeffs[dk]);
                    for (i, c) in prod.into_iter().enumerate() {
                        if !c.is_zero() {
                            out.coeffs[dj + dk][i] += c;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::one(&self.ring);
        for _ in 0..k {
            acc = acc.mul_raw(self);
        }
        acc
    }

    fn require_nilpotent(&self, what: &str) -> Result<()> {
        if self.coeffs[0][0].is_zero() {
            Ok(())
        } else {
            Err(Error::precondition(format!(
                "{what} requires a class with zero degree-0 part"
            )))
        }
    }

    /// exp(x) = sum_{k=0}^{dim} x^k / k! for nilpotent x; exact.
    pub fn exp(&self) -> Result<Self> {
        self.require_nilpotent("exp")?;
        let dim = self.ring.dim();
        let mut acc = Self::one(&self.ring);
        let mut term = Self::one(&self.ring);
        for k in 1..=dim {
            term = term.mul_raw(self).scale(&Q::new(1.into(), k.into()));
            acc = acc.add(&term).expect("same ring");
        }
        Ok(acc)
    }

    /// Multiplicative inverse via the geometric series on the nilpotent part.
    pub fn invert(&self) -> Result<Self> {
        let c = self.coeffs[0][0].clone();
        if c.is_zero() {
            return Err(Error::precondition(
                "invert requires a nonzero degree-0 part",
            ));
        }
        let cinv = Q::new(1.into(), 1.into()) / c;
        // self = c (1 + u) with u nilpotent.
        let mut u = self.scale(&cinv);
        u.coeffs[0][0] = Q::zero();
        let dim = self.ring.dim();
        let mut acc = Self::one(&self.ring);
        let mut term = Self::one(&self.ring);
        for _ in 1..=dim {
            term = term.mul_raw(&u).neg();
            acc = acc.add(&term).expect("same ring");
        }
        Ok(acc.scale(&cinv))
    }

    /// sum_k series[k] * x^k for nilpotent x, truncated at the ring dimension.
    pub fn eval_series(&self, series: &[Q]) -> Result<Self> {
        self.require_nilpotent("series evaluation")?;
        let dim = self.ring.dim();
        let mut acc = Self::scalar(
            &self.ring,
            series.first().cloned().unwrap_or_else(Q::zero),
        );
        let mut pw = Self::one(&self.ring);
        for c in series.iter().take(dim + 1).skip(1) {
            pw = pw.mul_raw(self);
            if !c.is_zero() {
                acc = acc.add(&pw.scale(c)).expect("same ring");
            }
        }
        Ok(acc)
    }

    /// The rational combination sum_i coefs[i] * D_i of designated divisors.
    pub fn divisor_combination(ring: &Arc<RingPresentation>, coefs: &[Q]) -> Result<Self> {
        if coefs.len() != ring.divisor_count() {
            return Err(Error::validation(format!(
                "expected {} divisor coefficients, got {}",
                ring.divisor_count(),
                coefs.len()
            )));
        }
        let mut acc = Self::zero(ring);
        for (i, c) in coefs.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&Self::divisor(ring, i)?.scale(c))?;
            }
        }
        Ok(acc)
    }

    /// Canonical text: `deg k: c*label + ...` joined by `; `, zero terms and
    /// all-zero degrees omitted, the unit label rendered as a bare
    /// coefficient. The zero class renders as `0`.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        for (k, v) in self.coeffs.iter().enumerate() {
            if v.iter().all(|c| c.is_zero()) {
                continue;
            }
            let mut s = format!("deg {k}: ");
            let mut first = true;
            for (i, c) in v.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    s.push_str(" + ");
                }
                first = false;
                let label = &self.ring.bases()[k][i];
                if label == "1" {
                    let _ = write!(s, "{c}");
                } else {
                    let _ = write!(s, "{c}*{label}");
                }
            }
            parts.push(s);
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("; ")
        }
    }

    /// Parse the canonical text format back into a class over `ring`.
    pub fn parse(ring: &Arc<RingPresentation>, text: &str) -> Result<Self> {
        let t = text.trim();
        let mut out = Self::zero(ring);
        if t == "0" {
            return Ok(out);
        }
        if t.is_empty() {
            return Err(Error::parse("empty class"));
        }
        for part in t.split(';') {
            let part = part.trim();
            let rest = part
                .strip_prefix("deg")
                .ok_or_else(|| Error::parse(format!("expected `deg k:` in `{part}`")))?;
            let (deg_s, terms) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(format!("expected `:` in `{part}`")))?;
            let degree: usize = deg_s
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("bad degree `{}`", deg_s.trim())))?;
            if degree > ring.dim() {
                return Err(Error::parse(format!(
                    "degree {degree} exceeds ring dimension {}",
                    ring.dim()
                )));
            }
            for term in terms.split('+') {
                let term = term.trim();
                if term.is_empty() {
                    return Err(Error::parse(format!("empty term in `{part}`")));
                }
                let (coeff, index) = match term.split_once('*') {
                    Some((c, label)) => {
                        let label = label.trim();
                        let (d, i) = ring
                            .find_label(label)
                            .ok_or_else(|| Error::parse(format!("unknown label `{label}`")))?;
                        if d != degree {
                            return Err(Error::parse(format!(
                                "label `{label}` has degree {d}, not {degree}"
                            )));
                        }
                        (parse_rational(c)?, i)
                    }
                    None => {
                        if degree != 0 {
                            return Err(Error::parse(format!(
                                "term `{term}` in degree {degree} needs a basis label"
                            )));
                        }
                        (parse_rational(term)?, 0)
                    }
                };
                out.coeffs[degree][index] += coeff;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn p2() -> Arc<RingPresentation> {
        RingPresentation::projective_space(2).unwrap()
    }

    fn h(ring: &Arc<RingPresentation>) -> GradedClass {
        GradedClass::divisor(ring, 0).unwrap()
    }

    #[test]
    fn unit_arithmetic() {
        let r = p2();
        let one = GradedClass::one(&r);
        let two = one.add(&one).unwrap();
        assert_eq!(two.rank(), &q(2, 1));
        assert!(two.sub(&two).unwrap().is_zero());
        let x = h(&r).scale(&q(3, 2));
        assert_eq!(x.coeff(1, 0), &q(3, 2));
    }

    #[test]
    fn ring_mismatch_is_an_error() {
        let a = GradedClass::one(&p2());
        let b = GradedClass::one(&RingPresentation::projective_space(3).unwrap());
        assert!(a.add(&b).is_err());
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn structurally_equal_rings_interoperate() {
        let a = GradedClass::one(&p2());
        let b = h(&p2());
        assert_eq!(a.add(&b).unwrap().coeff(1, 0), &q(1, 1));
    }

    #[test]
    fn products_on_p2() {
        let r = p2();
        let h1 = h(&r);
        let h2 = h1.mul(&h1).unwrap();
        assert_eq!(h2.coeff(2, 0), &q(1, 1));
        assert!(h2.mul(&h1).unwrap().is_zero());
        let one = GradedClass::one(&r);
        let lhs = one.add(&h1).unwrap().mul(&one.sub(&h1).unwrap()).unwrap();
        let expect = one.sub(&h2).unwrap();
        assert_eq!(lhs, expect);
    }

    #[test]
    fn exp_values() {
        let r = p2();
        let e = h(&r).exp().unwrap();
        assert_eq!(e.coeff(0, 0), &q(1, 1));
        assert_eq!(e.coeff(1, 0), &q(1, 1));
        assert_eq!(e.coeff(2, 0), &q(1, 2));
        assert_eq!(GradedClass::zero(&r).exp().unwrap(), GradedClass::one(&r));
        // exp(D1/2 + D2/2) with both divisors H equals exp(H).
        let rr = r.with_divisors(vec![vec![q(1, 1)], vec![q(1, 1)]]).unwrap();
        let x = GradedClass::divisor_combination(&rr, &[q(1, 2), q(1, 2)]).unwrap();
        let ex = x.exp().unwrap();
        assert_eq!(ex.coeff(1, 0), &q(1, 1));
        assert_eq!(ex.coeff(2, 0), &q(1, 2));
        assert!(GradedClass::one(&r).exp().is_err());
    }

    #[test]
    fn invert_values() {
        let r = p2();
        let two = GradedClass::scalar(&r, q(2, 1));
        assert_eq!(two.invert().unwrap().rank(), &q(1, 2));
        let one = GradedClass::one(&r);
        let x = one.sub(&h(&r)).unwrap();
        let inv = x.invert().unwrap();
        assert_eq!(inv.coeff(1, 0), &q(1, 1));
        assert_eq!(inv.coeff(2, 0), &q(1, 1));
        let e = h(&r).exp().unwrap();
        assert_eq!(e.invert().unwrap(), h(&r).neg().exp().unwrap());
        assert!(GradedClass::zero(&r).invert().is_err());
    }

    #[test]
    fn eval_series_exp() {
        let r = p2();
        let series = vec![q(1, 1), q(1, 1), q(1, 2)];
        let v = h(&r).eval_series(&series).unwrap();
        assert_eq!(v, h(&r).exp().unwrap());
        assert!(h(&r).eval_series(&[]).unwrap().is_zero());
    }

    #[test]
    fn render_and_parse_roundtrip() {
        let r = p2();
        let x = GradedClass::scalar(&r, q(2, 1))
            .add(&h(&r))
            .unwrap()
            .add(&h(&r).mul(&h(&r)).unwrap().scale(&q(1, 4)))
            .unwrap();
        assert_eq!(x.render(), "deg 0: 2; deg 1: 1*H; deg 2: 1/4*H^2");
        let back = GradedClass::parse(&r, &x.render()).unwrap();
        assert_eq!(back, x);
        assert_eq!(GradedClass::zero(&r).render(), "0");
        assert_eq!(GradedClass::parse(&r, "0").unwrap(), GradedClass::zero(&r));
        let neg = h(&r).scale(&q(-1, 2));
        assert_eq!(neg.render(), "deg 1: -1/2*H");
        assert_eq!(GradedClass::parse(&r, &neg.render()).unwrap(), neg);
    }

    #[test]
    fn parse_rejects_malformed() {
        let r = p2();
        assert!(GradedClass::parse(&r, "deg 9: 1*H").is_err());
        assert!(GradedClass::parse(&r, "deg 1: 1*X").is_err());
        assert!(GradedClass::parse(&r, "deg 1: 2").is_err());
        assert!(GradedClass::parse(&r, "1*H").is_err());
        assert!(GradedClass::parse(&r, "").is_err());
    }

    fn small_q() -> impl Strategy<Value = Q> {
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
    }

    fn nilpotent_class(ring: Arc<RingPresentation>) -> impl Strategy<Value = GradedClass> {
        (small_q(), small_q()).prop_map(move |(a, b)| {
            let h = GradedClass::divisor(&ring, 0).unwrap();
            let h2 = h.mul(&h).unwrap();
            h.scale(&a).add(&h2.scale(&b)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn exp_is_a_homomorphism(x in nilpotent_class(p2()), y in nilpotent_class(p2())) {
            let lhs = x.exp().unwrap().mul(&y.exp().unwrap()).unwrap();
            let rhs = x.add(&y).unwrap().exp().unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn invert_is_an_involution(u in nilpotent_class(p2()), c in 1i64..=5) {
            let x = GradedClass::scalar(&p2(), q(c, 1)).add(&u).unwrap();
            let back = x.invert().unwrap().invert().unwrap();
            prop_assert_eq!(back, x.clone());
            let prod = x.invert().unwrap().mul(&x).unwrap();
            prop_assert_eq!(prod, GradedClass::one(&p2()));
        }

        #[test]
        fn mul_commutes_and_distributes(
            x in nilpotent_class(p2()),
            y in nilpotent_class(p2()),
            z in nilpotent_class(p2()),
        ) {
            prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            let lhs = x.mul(&y.add(&z).unwrap()).unwrap();
            let rhs = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}

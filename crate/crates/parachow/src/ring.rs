//! Truncated graded commutative Q-algebras presented by bases and structure
//! constants.
//!
//! A presentation models the even intersection ring of a smooth projective
//! variety with rational coefficients: one basis per degree `0..=dim`, a
//! symmetric multiplication table on basis pairs, products of total degree
//! above `dim` identically zero, and a distinguished list of degree-1
//! "divisor" classes. Whether a presentation is realized by an actual
//! variety is not (and cannot be) checked here; the formulas are applied to
//! whatever ring the caller presents.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Q;

/// Location of a basis element: (degree, index within that degree's basis).
pub type BasisRef = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingPresentation {
    name: String,
    dim: usize,
    bases: Vec<Vec<String>>,
    /// Products of basis pairs with both degrees >= 1, stored for j <= k
    /// only; the symmetric mirror and all unit products are implied.
    table: BTreeMap<(usize, usize), Vec<Vec<Vec<Q>>>>,
    divisors: Vec<Vec<Q>>,
    point: Option<Vec<Q>>,
}

fn label_ok(label: &str) -> bool {
    !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '^' | '*' | '\''))
}

impl RingPresentation {
    /// Assemble a presentation from explicit products. `products` lists the
    /// nonzero products of basis pairs of degrees >= 1; pairs may be given in
    /// either order (or both, if they agree). Missing pairs multiply to zero.
    pub fn explicit(
        name: impl Into<String>,
        bases: Vec<Vec<String>>,
        products: Vec<(BasisRef, BasisRef, Vec<Q>)>,
        divisors: Vec<Vec<Q>>,
        point: Option<Vec<Q>>,
        validate: bool,
    ) -> Result<Arc<Self>> {
        let name = name.into();
        if bases.is_empty() {
            return Err(Error::validation("ring needs at least degree 0 and 1"));
        }
        let dim = bases.len() - 1;
        if dim < 1 {
            return Err(Error::validation("ring dimension must be at least 1"));
        }

        let mut table: BTreeMap<(usize, usize), Vec<Vec<Vec<Q>>>> = BTreeMap::new();
        for j in 1..=dim {
            for k in j..=dim {
                if j + k > dim {
                    continue;
                }
                let cell = vec![vec![vec![Q::zero(); bases[j + k].len()]; bases[k].len()]; bases[j].len()];
                table.insert((j, k), cell);
            }
        }

        let mut seen: BTreeMap<(BasisRef, BasisRef), Vec<Q>> = BTreeMap::new();
        for ((dj, p), (dk, q), value) in products {
            if dj == 0 || dk == 0 {
                return Err(Error::validation(
                    "products with the unit are implicit; give entries of degrees >= 1 only",
                ));
            }
            if dj > dim || dk > dim || p >= bases[dj].len() || q >= bases[dk].len() {
                return Err(Error::validation(format!(
                    "product entry ({dj},{p})x({dk},{q}) out of range"
                )));
            }
            if dj + dk > dim {
                return Err(Error::validation(format!(
                    "product entry ({dj},{p})x({dk},{q}) exceeds ring dimension {dim}"
                )));
            }
            if value.len() != bases[dj + dk].len() {
                return Err(Error::validation(format!(
                    "product entry ({dj},{p})x({dk},{q}) has wrong length {}",
                    value.len()
                )));
            }
            // Canonical unordered key; conflicting duplicates break symmetry.
            let key = if (dj, p) <= (dk, q) {
                ((dj, p), (dk, q))
            } else {
                ((dk, q), (dj, p))
            };
            if let Some(prev) = seen.get(&key) {
                if *prev != value {
                    return Err(Error::validation(format!(
                        "multiplication table not symmetric at ({dj},{p})x({dk},{q})"
                    )));
                }
            } else {
                seen.insert(key, value);
            }
        }
        for (((dj, p), (dk, q)), value) in seen {
            // Keys are canonicalized with dj <= dk; for equal degrees the
            // mirrored slot must be written too.
            if dj == dk && p != q {
                table.get_mut(&(dj, dk)).unwrap()[q][p] = value.clone();
            }
            table.get_mut(&(dj, dk)).unwrap()[p][q] = value;
        }

        let ring = RingPresentation {
            name,
            dim,
            bases,
            table,
            divisors,
            point,
        };
        ring.validate_shape()?;
        if validate {
            ring.validate_algebra()?;
        }
        Ok(Arc::new(ring))
    }

    /// The ring of projective d-space: basis 1, H, ..., H^d with
    /// H^j * H^k = H^{j+k} (zero above degree d). One divisor H by default.
    pub fn projective_space(d: usize) -> Result<Arc<Self>> {
        if d < 1 {
            return Err(Error::validation("projective space needs dimension >= 1"));
        }
        let mut bases = vec![vec!["1".to_string()]];
        for k in 1..=d {
            bases.push(vec![if k == 1 {
                "H".to_string()
            } else {
                format!("H^{k}")
            }]);
        }
        let mut products = Vec::new();
        for j in 1..=d {
            for k in j..=d {
                if j + k <= d {
                    products.push(((j, 0), (k, 0), vec![Q::from_integer(1.into())]));
                }
            }
        }
        let divisors = vec![vec![Q::from_integer(1.into())]];
        let point = Some(vec![Q::from_integer(1.into())]);
        Self::explicit(format!("P{d}"), bases, products, divisors, point, true)
    }

    /// A surface presentation with basis 1; D_1..D_m; pt and
    /// D_i * D_j = intersections[i][j] * pt.
    pub fn surface(intersections: &[Vec<Q>]) -> Result<Arc<Self>> {
        let m = intersections.len();
        for row in intersections {
            if row.len() != m {
                return Err(Error::validation("intersection matrix must be square"));
            }
        }
        for i in 0..m {
            for j in 0..m {
                if intersections[i][j] != intersections[j][i] {
                    return Err(Error::validation("intersection matrix must be symmetric"));
                }
            }
        }
        let mut bases = vec![vec!["1".to_string()]];
        bases.push((1..=m).map(|i| format!("D{i}")).collect());
        bases.push(vec!["pt".to_string()]);
        let mut products = Vec::new();
        for i in 0..m {
            for j in i..m {
                if !intersections[i][j].is_zero() {
                    products.push(((1, i), (1, j), vec![intersections[i][j].clone()]));
                }
            }
        }
        let divisors = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { Q::from_integer(1.into()) } else { Q::zero() })
                    .collect()
            })
            .collect();
        let point = Some(vec![Q::from_integer(1.into())]);
        Self::explicit(format!("S{m}"), bases, products, divisors, point, true)
    }

    /// Free truncated polynomial presentation on m degree-1 generators,
    /// truncated above degree d. Useful as a generic ambient ring with no
    /// accidental relations between the divisors.
    pub fn truncated_polynomial(m: usize, d: usize) -> Result<Arc<Self>> {
        if d < 1 {
            return Err(Error::validation("ring dimension must be at least 1"));
        }
        let mut monomials: Vec<Vec<Vec<usize>>> = Vec::with_capacity(d + 1);
        for k in 0..=d {
            monomials.push(exponent_vectors(m, k));
        }
        let label = |e: &[usize]| -> String {
            if e.iter().all(|&x| x == 0) {
                return "1".to_string();
            }
            e.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| {
                    if x == 1 {
                        format!("D{}", i + 1)
                    } else {
                        format!("D{}^{}", i + 1, x)
                    }
                })
                .collect::<Vec<_>>()
                .join("*")
        };
        let bases: Vec<Vec<String>> = monomials
            .iter()
            .map(|ms| ms.iter().map(|e| label(e)).collect())
            .collect();
        let index_of: Vec<BTreeMap<Vec<usize>, usize>> = monomials
            .iter()
            .map(|ms| ms.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect())
            .collect();
        let mut products = Vec::new();
        for j in 1..=d {
            for k in j..=d {
                if j + k > d {
                    continue;
                }
                for (p, ep) in monomials[j].iter().enumerate() {
                    for (q, eq) in monomials[k].iter().enumerate() {
                        let sum: Vec<usize> =
                            ep.iter().zip(eq.iter()).map(|(a, b)| a + b).collect();
                        let r = index_of[j + k][&sum];
                        let mut value = vec![Q::zero(); monomials[j + k].len()];
                        value[r] = Q::from_integer(1.into());
                        products.push(((j, p), (k, q), value));
                    }
                }
            }
        }
        let divisors = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { Q::from_integer(1.into()) } else { Q::zero() })
                    .collect()
            })
            .collect();
        Self::explicit(format!("F{m}d{d}"), bases, products, divisors, None, true)
    }

    /// Same presentation with a different designated divisor list (for
    /// example two divisors both rationally equivalent to H on P^2).
    pub fn with_divisors(self: &Arc<Self>, divisors: Vec<Vec<Q>>) -> Result<Arc<Self>> {
        let mut ring = (**self).clone();
        for v in &divisors {
            if v.len() != ring.bases[1].len() {
                return Err(Error::validation(
                    "divisor vector length must match the degree-1 basis",
                ));
            }
        }
        ring.divisors = divisors;
        Ok(Arc::new(ring))
    }

    pub fn with_name(self: &Arc<Self>, name: impl Into<String>) -> Arc<Self> {
        let mut ring = (**self).clone();
        ring.name = name.into();
        Arc::new(ring)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &[Vec<String>] {
        &self.bases
    }

    pub fn basis_size(&self, degree: usize) -> usize {
        if degree <= self.dim {
            self.bases[degree].len()
        } else {
            0
        }
    }

    pub fn divisor_count(&self) -> usize {
        self.divisors.len()
    }

    pub fn divisor_coeffs(&self, i: usize) -> Result<&Vec<Q>> {
        self.divisors
            .get(i)
            .ok_or_else(|| Error::not_found(format!("divisor index {i} out of range")))
    }

    pub fn point_coeffs(&self) -> Option<&Vec<Q>> {
        self.point.as_ref()
    }

    /// Structure constants for the product of basis elements
    /// `(dj,p) * (dk,q)` with both degrees >= 1 and `dj+dk <= dim`.
    pub(crate) fn basis_product(&self, dj: usize, p: usize, dk: usize, q: usize) -> &[Q] {
        if dj <= dk {
            &self.table[&(dj, dk)][p][q]
        } else {
            &self.table[&(dk, dj)][q][p]
        }
    }

    /// Homogeneous product of coefficient vectors in degrees `dj` and `dk`.
    pub(crate) fn mul_homogeneous(&self, dj: usize, a: &[Q], dk: usize, b: &[Q]) -> Vec<Q> {
        let dsum = dj + dk;
        let mut out = vec![Q::zero(); self.basis_size(dsum)];
        if dsum > self.dim {
            return out;
        }
        for (p, ca) in a.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (r, cb) in b.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let coeffs = self.basis_product(dj, p, dk, r);
                for (s, c) in coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        out[s] += ca * cb * c;
                    }
                }
            }
        }
        out
    }

    fn validate_shape(&self) -> Result<()> {
        if self.bases[0].len() != 1 {
            return Err(Error::validation(
                "degree 0 must have exactly one basis label (the unit)",
            ));
        }
        let mut all = Vec::new();
        for (k, labels) in self.bases.iter().enumerate() {
            for l in labels {
                if !label_ok(l) {
                    return Err(Error::validation(format!(
                        "bad basis label `{l}` in degree {k}"
                    )));
                }
                all.push(l.clone());
            }
        }
        all.sort();
        all.dedup();
        if all.len() != self.bases.iter().map(|b| b.len()).sum::<usize>() {
            return Err(Error::validation("basis labels must be globally unique"));
        }
        for (i, v) in self.divisors.iter().enumerate() {
            if v.len() != self.bases[1].len() {
                return Err(Error::validation(format!(
                    "divisor {} has wrong coefficient length",
                    i + 1
                )));
            }
        }
        if let Some(p) = &self.point {
            if p.len() != self.bases[self.dim].len() {
                return Err(Error::validation("point class has wrong coefficient length"));
            }
        }
        Ok(())
    }

    /// Associativity on all basis triples of total degree <= dim. Symmetry
    /// and unit neutrality hold by construction of the stored table.
    pub fn validate_algebra(&self) -> Result<()> {
        let unit_vec = |deg: usize, idx: usize| -> Vec<Q> {
            let mut v = vec![Q::zero(); self.bases[deg].len()];
            v[idx] = Q::from_integer(1.into());
            v
        };
        for d1 in 1..=self.dim {
            for d2 in 1..=self.dim {
                for d3 in 1..=self.dim {
                    if d1 + d2 + d3 > self.dim {
                        continue;
                    }
                    for p1 in 0..self.bases[d1].len() {
                        let e1 = unit_vec(d1, p1);
                        for p2 in 0..self.bases[d2].len() {
                            let e2 = unit_vec(d2, p2);
                            let e12 = self.mul_homogeneous(d1, &e1, d2, &e2);
                            for p3 in 0..self.bases[d3].len() {
                                let e3 = unit_vec(d3, p3);
                                let left = self.mul_homogeneous(d1 + d2, &e12, d3, &e3);
                                let e23 = self.mul_homogeneous(d2, &e2, d3, &e3);
                                let right = self.mul_homogeneous(d1, &e1, d2 + d3, &e23);
                                if left != right {
                                    return Err(Error::validation(format!(
                                        "multiplication not associative on ({},{},{})",
                                        self.bases[d1][p1], self.bases[d2][p2], self.bases[d3][p3]
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Find a basis label, returning its (degree, index).
    pub fn find_label(&self, label: &str) -> Option<BasisRef> {
        for (k, labels) in self.bases.iter().enumerate() {
            if let Some(i) = labels.iter().position(|l| l == label) {
                return Some((k, i));
            }
        }
        None
    }
}

/// All exponent vectors of length m with the given total, in lexicographic
/// order. `m = 0` gives a single empty vector for total 0 and none otherwise.
fn exponent_vectors(m: usize, total: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in exponent_vectors(m - 1, total - first) {
            let mut v = Vec::with_capacity(m);
            v.push(first);
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_int};

    #[test]
    fn projective_plane_products() {
        let p2 = RingPresentation::projective_space(2).unwrap();
        assert_eq!(p2.dim(), 2);
        assert_eq!(p2.basis_size(1), 1);
        let h_sq = p2.mul_homogeneous(1, &[q_int(1)], 1, &[q_int(1)]);
        assert_eq!(h_sq, vec![q_int(1)]);
    }

    #[test]
    fn projective_line_truncates() {
        let p1 = RingPresentation::projective_space(1).unwrap();
        let z = p1.mul_homogeneous(1, &[q_int(1)], 1, &[q_int(1)]);
        assert!(z.is_empty());
    }

    #[test]
    fn projective_3_space_top_degree() {
        let p3 = RingPresentation::projective_space(3).unwrap();
        // H * H^2 = H^3, H^2 * H^2 = 0
        assert_eq!(p3.mul_homogeneous(1, &[q_int(1)], 2, &[q_int(1)]), vec![q_int(1)]);
        assert!(p3.mul_homogeneous(2, &[q_int(1)], 2, &[q_int(1)]).is_empty());
    }

    #[test]
    fn surface_ring_normal_crossing() {
        let s = RingPresentation::surface(&[
            vec![q_int(0), q_int(1)],
            vec![q_int(1), q_int(0)],
        ])
        .unwrap();
        assert_eq!(s.divisor_count(), 2);
        let d1d2 = s.mul_homogeneous(1, &[q_int(1), q_int(0)], 1, &[q_int(0), q_int(1)]);
        assert_eq!(d1d2, vec![q_int(1)]);
        let d1d1 = s.mul_homogeneous(1, &[q_int(1), q_int(0)], 1, &[q_int(1), q_int(0)]);
        assert_eq!(d1d1, vec![q_int(0)]);
    }

    #[test]
    fn surface_rejects_asymmetric() {
        let err = RingPresentation::surface(&[
            vec![q_int(0), q_int(1)],
            vec![q_int(2), q_int(0)],
        ])
        .unwrap_err();
        assert!(err.to_string().contains("symmetric"));
    }

    #[test]
    fn surface_single_divisor_self_intersection() {
        let s = RingPresentation::surface(&[vec![q_int(1)]]).unwrap();
        assert_eq!(s.mul_homogeneous(1, &[q_int(1)], 1, &[q_int(1)]), vec![q_int(1)]);
    }

    #[test]
    fn truncated_polynomial_counts() {
        let f = RingPresentation::truncated_polynomial(3, 4).unwrap();
        assert_eq!(f.basis_size(0), 1);
        assert_eq!(f.basis_size(1), 3);
        assert_eq!(f.basis_size(2), 6);
        assert_eq!(f.basis_size(3), 10);
        assert_eq!(f.basis_size(4), 15);
        // D1 * D2 lands on the D1*D2 monomial with coefficient 1.
        let prod = f.mul_homogeneous(
            1,
            &[q_int(1), q_int(0), q_int(0)],
            1,
            &[q_int(0), q_int(1), q_int(0)],
        );
        let (deg, idx) = f.find_label("D1*D2").unwrap();
        assert_eq!(deg, 2);
        assert_eq!(prod[idx], q_int(1));
        assert_eq!(prod.iter().filter(|c| !c.is_zero()).count(), 1);
    }

    #[test]
    fn explicit_ring_symmetry_conflict() {
        let one = q_int(1);
        let err = RingPresentation::explicit(
            "bad",
            vec![vec!["1".into()], vec!["a".into(), "b".into()], vec!["z".into()]],
            vec![
                ((1, 0), (1, 1), vec![one.clone()]),
                ((1, 1), (1, 0), vec![q(2, 1)]),
            ],
            vec![],
            None,
            true,
        )
        .unwrap_err();
        assert!(err.to_string().contains("symmetric"));
    }

    #[test]
    fn explicit_ring_associativity_check() {
        // a*a = b, a*b = c, a*e = b, e*b = 0:
        // (a*a)*e = b*e = 0 but a*(a*e) = a*b = c.
        let one = q_int(1);
        let err = RingPresentation::explicit(
            "bad",
            vec![
                vec!["1".into()],
                vec!["a".into(), "e".into()],
                vec!["b".into()],
                vec!["c".into()],
            ],
            vec![
                ((1, 0), (1, 0), vec![one.clone()]),
                ((1, 0), (2, 0), vec![one.clone()]),
                ((1, 0), (1, 1), vec![one.clone()]),
            ],
            vec![],
            None,
            true,
        )
        .unwrap_err();
        assert!(err.to_string().contains("associative"));
    }

    #[test]
    fn skip_validation_flag() {
        // The same broken table loads when validation is skipped.
        let one = q_int(1);
        let r = RingPresentation::explicit(
            "unchecked",
            vec![
                vec!["1".into()],
                vec!["a".into(), "e".into()],
                vec!["b".into()],
                vec!["c".into()],
            ],
            vec![
                ((1, 0), (1, 0), vec![one.clone()]),
                ((1, 0), (2, 0), vec![one.clone()]),
                ((1, 0), (1, 1), vec![one]),
            ],
            vec![],
            None,
            false,
        );
        assert!(r.is_ok());
    }
}

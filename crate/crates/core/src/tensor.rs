//! Storage and contraction of real symmetric tensors.
//!
//! A symmetric tensor of order `m` and dimension `n` is determined by its
//! entries on sorted multi-indices, so only those are stored, together with
//! the number of distinct permutations of each index tuple. Contractions
//! iterate over the unique entries once and scatter each entry's contribution
//! with the appropriate combinatorial weight; they never enumerate
//! permutations.
//!
//! A second representation covers tensors whose entries are sums of a single
//! per-index profile, `a[i1..im] = g[i1] + ... + g[im]`. For those, all three
//! contractions have closed forms that cost `O(n)`, which is what makes very
//! high-dimensional instances tractable.

use nalgebra::{DMatrix, DVector};

use crate::dd::{two_prod, CompensatedSum, Dd};
use crate::error::{Error, Result};

/// One stored entry of a dense symmetric tensor: a sorted multi-index, its
/// value, the run-length encoding of the index and the number of distinct
/// permutations of the index tuple.
#[derive(Clone, Debug, PartialEq)]
struct Entry {
    /// Sorted multi-index, 0-based, length = order.
    index: Vec<u32>,
    /// Run-length encoding of `index`: (position, repeat count).
    distinct: Vec<(u32, u32)>,
    value: f64,
    /// Number of distinct permutations of `index` (a multinomial coefficient).
    mult: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Rep {
    Dense(Vec<Entry>),
    SumUnary(DVector<f64>),
}

/// A real symmetric tensor of order `m >= 2` and dimension `n >= 1`.
///
/// Multi-indices in the public API are 1-based, matching the usual subscript
/// notation and the on-disk entry format; they are converted to 0-based
/// indices internally.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    rep: Rep,
}

impl SymTensor {
    /// Builds a dense symmetric tensor from `(multi-index, value)` pairs.
    ///
    /// Multi-indices are 1-based with elements in `1..=dim` and need not be
    /// sorted; they are canonicalized. Two entries that canonicalize to the
    /// same sorted tuple are rejected as duplicates.
    pub fn dense_from_entries<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        check_shape(order, dim)?;
        let mut stored = Vec::new();
        for (raw, value) in entries {
            let index = canonical_index(order, dim, &raw)?;
            stored.push(Entry::new(order, index, value));
        }
        stored.sort_by(|a, b| a.index.cmp(&b.index));
        for pair in stored.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(Error::DuplicateEntry(to_one_based(&pair[0].index)));
            }
        }
        Ok(Self {
            order,
            dim,
            rep: Rep::Dense(stored),
        })
    }

    /// Builds the structured tensor with entries `a[i1..im] = g[i1] + ... + g[im]`.
    pub fn sum_unary(order: usize, g: DVector<f64>) -> Result<Self> {
        check_shape(order, g.len())?;
        Ok(Self {
            order,
            dim: g.len(),
            rep: Rep::SumUnary(g),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the tensor uses the `O(n)` structured representation.
    pub fn is_structured(&self) -> bool {
        matches!(self.rep, Rep::SumUnary(_))
    }

    /// Raw entry lookup by 1-based multi-index, in any permutation order.
    /// Unstored entries of a dense tensor are zero.
    pub fn entry(&self, index: &[usize]) -> Result<f64> {
        let canon = canonical_index(self.order, self.dim, index)?;
        match &self.rep {
            Rep::Dense(entries) => Ok(entries
                .binary_search_by(|e| e.index.as_slice().cmp(canon.as_slice()))
                .map(|pos| entries[pos].value)
                .unwrap_or(0.0)),
            Rep::SumUnary(g) => Ok(canon.iter().map(|&i| g[i as usize]).sum()),
        }
    }

    /// Returns the same tensor with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let rep = match &self.rep {
            Rep::Dense(entries) => Rep::Dense(
                entries
                    .iter()
                    .map(|e| Entry {
                        value: e.value * factor,
                        ..e.clone()
                    })
                    .collect(),
            ),
            // Entries are sums of profile values, so scaling the profile
            // scales the tensor.
            Rep::SumUnary(g) => Rep::SumUnary(g * factor),
        };
        Self { rep, ..self.clone() }
    }

    /// Iterates over the unique entries as `(sorted 1-based multi-index, value)`.
    /// Structured tensors are expanded on the fly.
    pub fn unique_entries(&self) -> Box<dyn Iterator<Item = (Vec<usize>, f64)> + '_> {
        match &self.rep {
            Rep::Dense(entries) => Box::new(
                entries
                    .iter()
                    .map(|e| (to_one_based(&e.index), e.value)),
            ),
            Rep::SumUnary(g) => Box::new(
                sorted_multi_indices(self.order, self.dim)
                    .map(move |idx| {
                        let v = idx.iter().map(|&i| g[i - 1]).sum();
                        (idx, v)
                    }),
            ),
        }
    }

    /// Full contraction `A x^m`, a scalar.
    ///
    /// Evaluated through error-free transformations (see [`crate::dd`]): the
    /// curve search compares objective values whose differences approach one
    /// ulp near convergence, and plain rounding there stalls the solver
    /// measurably above its tolerance.
    pub fn txm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.txm_dd(x)?.to_f64())
    }

    pub(crate) fn txm_dd(&self, x: &DVector<f64>) -> Result<Dd> {
        self.check_dim(x)?;
        match &self.rep {
            Rep::Dense(entries) => {
                let mut acc = CompensatedSum::default();
                for e in entries {
                    let mut term = two_prod(e.mult, e.value);
                    for &(i, c) in &e.distinct {
                        for _ in 0..c {
                            term = term.mul_f64(x[i as usize]);
                        }
                    }
                    acc.add_dd(term);
                }
                Ok(acc.total_dd())
            }
            Rep::SumUnary(g) => {
                let s = comp_sum_dd(x.iter().copied());
                let gx = comp_dot_dd(g, x);
                Ok(gx
                    .mul(s.powi(self.order - 1))
                    .mul_f64(self.order as f64))
            }
        }
    }

    /// Partial contraction `A x^{m-1}`, a vector.
    ///
    /// Satisfies `x . txm1(x) = txm(x)` and `txm1(c x) = c^{m-1} txm1(x)`.
    pub fn txm1(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let m = self.order as f64;
        match &self.rep {
            Rep::Dense(entries) => {
                let mut out = DVector::zeros(self.dim);
                for e in entries {
                    for &(u, cu) in &e.distinct {
                        // mult * cu / m permutations of the tuple start with u;
                        // the quotient is the permutation count of the residual
                        // multiset, an exact integer.
                        let weight = e.mult * cu as f64 / m;
                        let mut mono = 1.0;
                        for &(v, cv) in &e.distinct {
                            let p = if v == u { cv - 1 } else { cv };
                            mono *= x[v as usize].powi(p as i32);
                        }
                        out[u as usize] += weight * e.value * mono;
                    }
                }
                Ok(out)
            }
            Rep::SumUnary(g) => {
                let mi = self.order as i32;
                let s = comp_sum_dd(x.iter().copied()).to_f64();
                let gx = comp_dot_dd(g, x).to_f64();
                let shift = (m - 1.0) * gx * s.powi(mi - 2);
                Ok(g * s.powi(mi - 1) + DVector::from_element(self.dim, shift))
            }
        }
    }

    /// Partial contraction `A x^{m-2}`, a symmetric matrix.
    ///
    /// Satisfies `txm2(x) * x = txm1(x)`.
    pub fn txm2(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let m = self.order as f64;
        match &self.rep {
            Rep::Dense(entries) => {
                let mut out = DMatrix::zeros(self.dim, self.dim);
                for e in entries {
                    for_each_pair_weight(e, m, |u, v, w| {
                        let mono = monomial_excluding(e, x, u, v);
                        out[(u as usize, v as usize)] += w * e.value * mono;
                    });
                }
                Ok(out)
            }
            Rep::SumUnary(g) => {
                let mi = self.order as i32;
                let s = comp_sum_dd(x.iter().copied()).to_f64();
                let u = g * s.powi(mi - 2);
                let ones = DVector::from_element(self.dim, 1.0);
                let mut out = &u * ones.transpose() + ones * u.transpose();
                if self.order > 2 {
                    let shift = (m - 2.0) * comp_dot_dd(g, x).to_f64() * s.powi(mi - 3);
                    out.apply(|e| *e += shift);
                }
                Ok(out)
            }
        }
    }

    /// Quadratic form `d^T (A x^{m-2}) d` without materializing the matrix.
    pub fn txm2_quad(&self, x: &DVector<f64>, d: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(d)?;
        let m = self.order as f64;
        match &self.rep {
            Rep::Dense(entries) => {
                let mut acc = 0.0;
                for e in entries {
                    for_each_pair_weight(e, m, |u, v, w| {
                        let mono = monomial_excluding(e, x, u, v);
                        acc += w * e.value * mono * d[u as usize] * d[v as usize];
                    });
                }
                Ok(acc)
            }
            Rep::SumUnary(g) => {
                let mi = self.order as i32;
                let s = comp_sum_dd(x.iter().copied()).to_f64();
                let ds = comp_sum_dd(d.iter().copied()).to_f64();
                let mut acc = 2.0 * comp_dot_dd(g, d).to_f64() * ds * s.powi(mi - 2);
                if self.order > 2 {
                    acc += (m - 2.0) * comp_dot_dd(g, x).to_f64() * ds * ds * s.powi(mi - 3);
                }
                Ok(acc)
            }
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl Entry {
    fn new(order: usize, index: Vec<u32>, value: f64) -> Self {
        let mut distinct: Vec<(u32, u32)> = Vec::new();
        for &i in &index {
            match distinct.last_mut() {
                Some((v, c)) if *v == i => *c += 1,
                _ => distinct.push((i, 1)),
            }
        }
        let mult = multinomial(order, distinct.iter().map(|&(_, c)| c as usize));
        Self {
            index,
            distinct,
            value,
            mult,
        }
    }
}

/// Visits every ordered pair of distinct index positions `(u, v)` of an entry
/// together with the number of permutations of the tuple that start with
/// `u, v`, divided by `m (m-1)`.
fn for_each_pair_weight(e: &Entry, m: f64, mut visit: impl FnMut(u32, u32, f64)) {
    let denom = m * (m - 1.0);
    for &(u, cu) in &e.distinct {
        for &(v, cv) in &e.distinct {
            let w = if u == v {
                if cu < 2 {
                    continue;
                }
                e.mult * cu as f64 * (cu as f64 - 1.0) / denom
            } else {
                e.mult * cu as f64 * cv as f64 / denom
            };
            visit(u, v, w);
        }
    }
}

/// Product over the entry's indices of `x` powers, with one occurrence of `u`
/// and one of `v` removed.
fn monomial_excluding(e: &Entry, x: &DVector<f64>, u: u32, v: u32) -> f64 {
    let mut mono = 1.0;
    for &(t, ct) in &e.distinct {
        let mut p = ct;
        if t == u {
            p -= 1;
        }
        if t == v {
            p -= 1;
        }
        mono *= x[t as usize].powi(p as i32);
    }
    mono
}

/// Compensated sum of plain values, recovered as a double-double.
pub(crate) fn comp_sum_dd(values: impl Iterator<Item = f64>) -> Dd {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.total_dd()
}

/// Dot product with error-free element products and compensated summation.
pub(crate) fn comp_dot_dd(a: &DVector<f64>, b: &DVector<f64>) -> Dd {
    let mut acc = CompensatedSum::default();
    for (x, y) in a.iter().zip(b.iter()) {
        acc.add_dd(two_prod(*x, *y));
    }
    acc.total_dd()
}

fn check_shape(order: usize, dim: usize) -> Result<()> {
    if order < 2 {
        return Err(Error::InvalidSpec(format!(
            "tensor order must be at least 2, got {order}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidSpec("tensor dimension must be positive".into()));
    }
    Ok(())
}

/// Validates a 1-based multi-index against `(order, dim)` and returns it
/// sorted and 0-based.
fn canonical_index(order: usize, dim: usize, raw: &[usize]) -> Result<Vec<u32>> {
    if raw.len() != order {
        return Err(Error::OrderMismatch {
            order,
            got: raw.len(),
        });
    }
    let mut out = Vec::with_capacity(order);
    for &i in raw {
        if i == 0 || i > dim {
            return Err(Error::IndexOutOfRange {
                index: raw.to_vec(),
                dim,
            });
        }
        out.push((i - 1) as u32);
    }
    out.sort_unstable();
    Ok(out)
}

fn to_one_based(index: &[u32]) -> Vec<usize> {
    index.iter().map(|&i| i as usize + 1).collect()
}

/// `m! / (c1! c2! ...)` computed exactly in integer arithmetic.
fn multinomial(order: usize, counts: impl IntoIterator<Item = usize>) -> f64 {
    let mut remaining = order as u128;
    let mut total: u128 = 1;
    for c in counts {
        total *= binomial(remaining, c as u128);
        remaining -= c as u128;
    }
    total as f64
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of sorted multi-indices of the given order and dimension,
/// `C(dim + order - 1, order)`.
pub fn unique_entry_count(order: usize, dim: usize) -> u128 {
    binomial((dim + order - 1) as u128, order as u128)
}

/// Iterator over all sorted 1-based multi-indices of a given order and
/// dimension, in lexicographic order.
pub fn sorted_multi_indices(order: usize, dim: usize) -> SortedIndices {
    SortedIndices {
        next: if dim == 0 { None } else { Some(vec![1; order]) },
        dim,
    }
}

pub struct SortedIndices {
    next: Option<Vec<usize>>,
    dim: usize,
}

impl Iterator for SortedIndices {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.as_mut()?;
        let out = cur.clone();
        let len = cur.len();
        let mut i = len;
        loop {
            if i == 0 {
                self.next = None;
                break;
            }
            if cur[i - 1] < self.dim {
                let v = cur[i - 1] + 1;
                for slot in cur.iter_mut().take(len).skip(i - 1) {
                    *slot = v;
                }
                break;
            }
            i -= 1;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag3() -> SymTensor {
        // a[111] = 2, a[222] = 3
        SymTensor::dense_from_entries(3, 2, [(vec![1, 1, 1], 2.0), (vec![2, 2, 2], 3.0)]).unwrap()
    }

    #[test]
    fn entry_lookup_is_permutation_invariant() {
        let t = SymTensor::dense_from_entries(3, 2, [(vec![1, 1, 2], 3.0)]).unwrap();
        for idx in [[1, 1, 2], [1, 2, 1], [2, 1, 1]] {
            assert_eq!(t.entry(&idx).unwrap(), 3.0);
        }
        assert_eq!(t.entry(&[1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn identity_matrix_as_tensor() {
        let t =
            SymTensor::dense_from_entries(2, 2, [(vec![1, 1], 1.0), (vec![2, 2], 1.0)]).unwrap();
        let x = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(t.txm(&x).unwrap(), 25.0);
        assert_eq!(t.txm1(&x).unwrap(), x);
    }

    #[test]
    fn multiplicity_counts_distinct_permutations() {
        let t = SymTensor::dense_from_entries(3, 2, [(vec![1, 1, 2], 1.0)]).unwrap();
        match &t.rep {
            Rep::Dense(entries) => assert_eq!(entries[0].mult, 3.0),
            _ => unreachable!(),
        }
        // 3!/2! = 3 permutations each contributing x1^2 x2.
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(t.txm(&x).unwrap(), 3.0);
    }

    #[test]
    fn construction_errors() {
        let dup = SymTensor::dense_from_entries(3, 2, [(vec![1, 2, 1], 1.0), (vec![1, 1, 2], 2.0)]);
        assert_eq!(dup.unwrap_err(), Error::DuplicateEntry(vec![1, 1, 2]));

        let range = SymTensor::dense_from_entries(3, 2, [(vec![1, 3, 1], 1.0)]);
        assert!(matches!(range.unwrap_err(), Error::IndexOutOfRange { .. }));

        let order = SymTensor::dense_from_entries(3, 2, [(vec![1, 1], 1.0)]);
        assert!(matches!(order.unwrap_err(), Error::OrderMismatch { .. }));

        let x = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            diag3().txm(&x).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn txm_diag_example() {
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(diag3().txm(&x).unwrap(), 5.0);
    }

    #[test]
    fn txm1_diag_example() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let v = diag3().txm1(&x).unwrap();
        assert_eq!(v, DVector::from_vec(vec![2.0, 0.0]));
    }

    #[test]
    fn txm2_diag_example() {
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let m = diag3().txm2(&x).unwrap();
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(1, 1)], 3.0);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn sum_unary_small_example() {
        // g = (1, 0), m = 3: A x^3 = 3 (g.x) (sum x)^2.
        let t = SymTensor::sum_unary(3, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(t.txm(&x).unwrap(), 12.0);
    }

    #[test]
    fn sum_unary_matches_dense_expansion() {
        let g = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        let t = SymTensor::sum_unary(3, g.clone()).unwrap();
        let dense = SymTensor::dense_from_entries(
            3,
            3,
            sorted_multi_indices(3, 3).map(|idx| {
                let v = idx.iter().map(|&i| g[i - 1]).sum();
                (idx, v)
            }),
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.4, 1.1, -0.6]);
        assert_relative_eq!(t.txm(&x).unwrap(), dense.txm(&x).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(t.txm1(&x).unwrap(), dense.txm1(&x).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(t.txm2(&x).unwrap(), dense.txm2(&x).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn sum_unary_zero_sum_is_finite() {
        let t = SymTensor::sum_unary(3, DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let x = DVector::from_vec(vec![1.0, -1.0]); // sum x = 0
        assert_eq!(t.txm(&x).unwrap(), 0.0);
        assert!(t.txm1(&x).unwrap().iter().all(|v| v.is_finite()));
        assert!(t.txm2(&x).unwrap().iter().all(|v| v.is_finite()));
        // Order 2 exercises the zero coefficient on the s^{m-3} term.
        let t2 = SymTensor::sum_unary(2, DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert!(t2.txm2(&x).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn txm2_quad_matches_matrix_form() {
        let t = SymTensor::dense_from_entries(
            4,
            3,
            [
                (vec![1, 1, 2, 3], 0.7),
                (vec![1, 1, 1, 1], -0.2),
                (vec![2, 3, 3, 3], 1.4),
                (vec![1, 2, 2, 3], 0.1),
            ],
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.9, -0.4, 1.3]);
        let d = DVector::from_vec(vec![-0.2, 0.8, 0.5]);
        let direct = (d.transpose() * t.txm2(&x).unwrap() * &d)[(0, 0)];
        assert_relative_eq!(t.txm2_quad(&x, &d).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn sorted_indices_enumeration() {
        let all: Vec<_> = sorted_multi_indices(3, 2).collect();
        assert_eq!(
            all,
            vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 2], vec![2, 2, 2]]
        );
        assert_eq!(
            sorted_multi_indices(4, 20).count() as u128,
            unique_entry_count(4, 20)
        );
    }

    #[test]
    fn scaled_negates_both_representations() {
        let x = DVector::from_vec(vec![0.3, -0.8]);
        let d = diag3();
        assert_relative_eq!(d.scaled(-1.0).txm(&x).unwrap(), -d.txm(&x).unwrap());
        let s = SymTensor::sum_unary(4, DVector::from_vec(vec![1.0, -0.5])).unwrap();
        assert_relative_eq!(s.scaled(-1.0).txm(&x).unwrap(), -s.txm(&x).unwrap());
    }
}

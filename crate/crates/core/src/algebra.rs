//! Generalized Gell-Mann bases, structure constants and the Bloch maps.
//!
//! Elements are normalized to Tr(Λ_i Λ_j) = 2 δ_ij, so that
//! Λ_i Λ_j = (2/d) δ_ij 1 + Σ_k (g_ijk + i f_ijk) Λ_k holds exactly.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{c, ensure_hermitian, CMat, RVec, C64};

/// Default cap on the number of basis elements N − 1.
pub const DEFAULT_BASIS_CAP: usize = 255;

/// Tolerance below which computed structure constants are dropped.
const STRUCTURE_EPS: f64 = 1e-13;

/// Element ordering.
///
/// `Grouped` lists all symmetric pair elements, then all antisymmetric pair
/// elements (pairs in lexicographic (j, k) order), then the diagonal ladder.
/// `Standard` is the textbook interleaving: for each level k, the pairs (j, k)
/// with j < k as (symmetric, antisymmetric), then the k-th diagonal element.
/// At d = 3 `Standard` gives λ1..λ8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    #[default]
    Grouped,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Symmetric(usize, usize),
    Antisymmetric(usize, usize),
    Diagonal(usize),
}

/// Sparse rank-3 tensor stored on sorted index triples.
#[derive(Debug, Clone, Default)]
pub struct Tensor3 {
    antisymmetric: bool,
    sorted: BTreeMap<(usize, usize, usize), f64>,
    expanded: Vec<(usize, usize, usize, f64)>,
}

impl Tensor3 {
    fn new(antisymmetric: bool) -> Self {
        Tensor3 { antisymmetric, sorted: BTreeMap::new(), expanded: Vec::new() }
    }

    fn insert_sorted(&mut self, key: (usize, usize, usize), v: f64) {
        self.sorted.insert(key, v);
    }

    fn finalize(&mut self) {
        let mut out = Vec::new();
        for (&(a, b, cc), &v) in &self.sorted {
            let perms = [
                ((a, b, cc), 1.0),
                ((b, cc, a), 1.0),
                ((cc, a, b), 1.0),
                ((b, a, cc), -1.0),
                ((a, cc, b), -1.0),
                ((cc, b, a), -1.0),
            ];
            let mut seen: Vec<(usize, usize, usize)> = Vec::new();
            for (p, s) in perms {
                if seen.contains(&p) {
                    continue;
                }
                seen.push(p);
                let sign = if self.antisymmetric { s } else { 1.0 };
                out.push((p.0, p.1, p.2, sign * v));
            }
        }
        out.sort_by(|x, y| (x.0, x.1, x.2).cmp(&(y.0, y.1, y.2)));
        self.expanded = out;
    }

    /// Entry at (i, j, k), 0-based.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut idx = [i, j, k];
        let mut sign = 1.0;
        // three-element sort counting transpositions
        for (a, b) in [(0, 1), (1, 2), (0, 1)] {
            if idx[a] > idx[b] {
                idx.swap(a, b);
                sign = -sign;
            }
        }
        if self.antisymmetric && (idx[0] == idx[1] || idx[1] == idx[2]) {
            return 0.0;
        }
        let v = self.sorted.get(&(idx[0], idx[1], idx[2])).copied().unwrap_or(0.0);
        if self.antisymmetric {
            sign * v
        } else {
            v
        }
    }

    /// Nonzero entries over sorted triples.
    pub fn sorted_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.sorted.iter().map(|(k, v)| (*k, *v))
    }

    /// Every nonzero entry with all index permutations expanded.
    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.expanded
    }
}

/// The N − 1 generalized Gell-Mann matrices of dimension d plus structure constants.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub d: usize,
    pub ordering: Ordering,
    pub kinds: Vec<ElementKind>,
    pub elements: Vec<CMat>,
    sparse: Vec<Vec<(usize, usize, C64)>>,
    pub f: Tensor3,
    pub g: Tensor3,
}

/// Scalar part plus real coefficient vector of a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochState {
    pub scalar: f64,
    pub vec: RVec,
}

impl BlochState {
    pub fn new(scalar: f64, vec: RVec) -> Self {
        BlochState { scalar, vec }
    }

    pub fn from_slice(scalar: f64, v: &[f64]) -> Self {
        BlochState { scalar, vec: DVector::from_column_slice(v) }
    }

    /// Density-operator state with scalar part 1/d.
    pub fn density(d: usize, v: &[f64]) -> Self {
        Self::from_slice(1.0 / d as f64, v)
    }

    /// Tr ρ² = d s² + 2 |v|².
    pub fn purity(&self, d: usize) -> f64 {
        d as f64 * self.scalar * self.scalar + 2.0 * self.vec.norm_squared()
    }
}

fn element_kinds(d: usize, ordering: Ordering) -> Vec<ElementKind> {
    let mut pairs = Vec::new();
    for j in 0..d {
        for k in (j + 1)..d {
            pairs.push((j, k));
        }
    }
    match ordering {
        Ordering::Grouped => {
            let mut v: Vec<ElementKind> =
                pairs.iter().map(|&(j, k)| ElementKind::Symmetric(j, k)).collect();
            v.extend(pairs.iter().map(|&(j, k)| ElementKind::Antisymmetric(j, k)));
            v.extend((1..d).map(ElementKind::Diagonal));
            v
        }
        Ordering::Standard => {
            let mut v = Vec::new();
            for k in 1..d {
                for j in 0..k {
                    v.push(ElementKind::Symmetric(j, k));
                    v.push(ElementKind::Antisymmetric(j, k));
                }
                v.push(ElementKind::Diagonal(k));
            }
            v
        }
    }
}

fn sparse_element(kind: ElementKind) -> Vec<(usize, usize, C64)> {
    match kind {
        ElementKind::Symmetric(j, k) => vec![(j, k, c(1.0, 0.0)), (k, j, c(1.0, 0.0))],
        ElementKind::Antisymmetric(j, k) => vec![(j, k, c(0.0, -1.0)), (k, j, c(0.0, 1.0))],
        ElementKind::Diagonal(k) => {
            let norm = (2.0 / (k * (k + 1)) as f64).sqrt();
            let mut v: Vec<_> = (0..k).map(|j| (j, j, c(norm, 0.0))).collect();
            v.push((k, k, c(-(k as f64) * norm, 0.0)));
            v
        }
    }
}

/// Tr(A B C) for sparse A, B and sparse C.
fn sparse_trace3(
    a: &[(usize, usize, C64)],
    b: &[(usize, usize, C64)],
    cm: &[(usize, usize, C64)],
) -> C64 {
    let mut s = c(0.0, 0.0);
    for &(i, j, va) in a {
        for &(j2, k, vb) in b {
            if j != j2 {
                continue;
            }
            for &(k2, i2, vc) in cm {
                if k2 == k && i2 == i {
                    s += va * vb * vc;
                }
            }
        }
    }
    s
}

/// Builds the generalized Gell-Mann basis for dimension `d` in grouped order.
pub fn gen_gellmann_basis(d: usize) -> Result<BasisSet> {
    gen_gellmann_basis_with(d, Ordering::Grouped, DEFAULT_BASIS_CAP)
}

/// Builds the generalized Gell-Mann basis with an explicit ordering and cap on N − 1.
pub fn gen_gellmann_basis_with(d: usize, ordering: Ordering, cap: usize) -> Result<BasisSet> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension d = {d} must be at least 2")));
    }
    let n1 = d * d - 1;
    if n1 > cap {
        return Err(Error::CapExceeded { what: "N - 1", value: n1, cap });
    }
    let kinds = element_kinds(d, ordering);
    let sparse: Vec<_> = kinds.iter().map(|&k| sparse_element(k)).collect();
    let elements = sparse
        .iter()
        .map(|s| {
            let mut m = CMat::zeros(d, d);
            for &(r, cc, v) in s {
                m[(r, cc)] = v;
            }
            m
        })
        .collect();

    // f_ijk = Tr([Λi,Λj]Λk)/(4i), g_ijk = Tr({Λi,Λj}Λk)/4
    let mut f = Tensor3::new(true);
    let mut g = Tensor3::new(false);
    for i in 0..n1 {
        for j in i..n1 {
            for k in j..n1 {
                let ijk = sparse_trace3(&sparse[i], &sparse[j], &sparse[k]);
                let jik = sparse_trace3(&sparse[j], &sparse[i], &sparse[k]);
                if i < j && j < k {
                    let fv = ((ijk - jik) / c(0.0, 4.0)).re;
                    if fv.abs() > STRUCTURE_EPS {
                        f.insert_sorted((i, j, k), fv);
                    }
                }
                let gv = ((ijk + jik) / 4.0).re;
                if gv.abs() > STRUCTURE_EPS {
                    g.insert_sorted((i, j, k), gv);
                }
            }
        }
    }
    f.finalize();
    g.finalize();
    Ok(BasisSet { d, ordering, kinds, elements, sparse, f, g })
}

impl BasisSet {
    /// Number of basis elements, N − 1 = d² − 1.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of an element by kind.
    pub fn index_of(&self, kind: ElementKind) -> Option<usize> {
        self.kinds.iter().position(|&k| k == kind)
    }

    /// Nonzero entries (row, col, value) of Λ_k.
    pub fn sparse_element(&self, k: usize) -> &[(usize, usize, C64)] {
        &self.sparse[k]
    }

    /// Re Tr(A Λ_k) using the sparse form of Λ_k.
    pub fn trace_with(&self, a: &CMat, k: usize) -> C64 {
        self.sparse[k].iter().map(|&(r, cc, v)| a[(cc, r)] * v).sum()
    }

    /// Σ_k v_k Λ_k.
    pub fn combine(&self, v: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.d, self.d);
        for (k, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for &(r, cc, e) in &self.sparse[k] {
                m[(r, cc)] += e * x;
            }
        }
        m
    }

    /// JSON export: elements as nested [re, im] pairs, structure constants
    /// keyed by 1-based "i,j,k" on sorted triples.
    pub fn to_json(&self) -> Value {
        let elements: Vec<Value> = self
            .elements
            .iter()
            .map(|m| {
                Value::Array(
                    (0..self.d)
                        .map(|r| {
                            Value::Array(
                                (0..self.d).map(|cc| json!([m[(r, cc)].re, m[(r, cc)].im])).collect(),
                            )
                        })
                        .collect(),
                )
            })
            .collect();
        let tensor_json = |t: &Tensor3| {
            let mut map = Map::new();
            for ((i, j, k), v) in t.sorted_entries() {
                map.insert(format!("{},{},{}", i + 1, j + 1, k + 1), json!(v));
            }
            Value::Object(map)
        };
        json!({
            "d": self.d,
            "ordering": self.ordering,
            "count": self.len(),
            "elements": elements,
            "f": tensor_json(&self.f),
            "g": tensor_json(&self.g),
        })
    }
}

/// Scalar part Tr(op)/d and coefficients Tr(op Λ_k)/2.
pub fn bloch_decompose(op: &CMat, basis: &BasisSet) -> Result<BlochState> {
    if op.nrows() != basis.d || op.ncols() != basis.d {
        return Err(Error::Shape { expected: basis.d, got: op.nrows() });
    }
    ensure_hermitian(op, 1e-10)?;
    Ok(decompose_unchecked(op, basis))
}

/// Same as [`bloch_decompose`] without the Hermiticity check; imaginary parts are dropped.
pub fn decompose_unchecked(op: &CMat, basis: &BasisSet) -> BlochState {
    let scalar = crate::linalg::trace(op).re / basis.d as f64;
    let vec = DVector::from_iterator(basis.len(), (0..basis.len()).map(|k| basis.trace_with(op, k).re / 2.0));
    BlochState { scalar, vec }
}

/// scalar·1 + Σ_k vec_k Λ_k.
pub fn bloch_reconstruct(state: &BlochState, basis: &BasisSet) -> Result<CMat> {
    if state.vec.len() != basis.len() {
        return Err(Error::Shape { expected: basis.len(), got: state.vec.len() });
    }
    let mut m = basis.combine(state.vec.as_slice());
    for i in 0..basis.d {
        m[(i, i)] += c(state.scalar, 0.0);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{anticommutator, commutator, identity, max_abs, trace_prod};

    fn pauli() -> [CMat; 3] {
        [
            CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        ]
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = gen_gellmann_basis(2).unwrap();
        for (e, p) in b.elements.iter().zip(pauli().iter()) {
            assert!(max_abs(&(e - p)) < 1e-15);
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let eps = match (i, j, k) {
                        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                        (1, 0, 2) | (0, 2, 1) | (2, 1, 0) => -1.0,
                        _ => 0.0,
                    };
                    assert!((b.f.get(i, j, k) - eps).abs() < 1e-14);
                    assert_eq!(b.g.get(i, j, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn su3_constants_in_standard_labels() {
        let b = gen_gellmann_basis_with(3, Ordering::Standard, DEFAULT_BASIS_CAP).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!((b.f.get(0, 1, 2) - 1.0).abs() < 1e-14);
        assert!((b.f.get(3, 4, 7) - r3).abs() < 1e-14);
        assert!((b.f.get(5, 6, 7) - r3).abs() < 1e-14);
        assert!((b.f.get(0, 3, 6) - 0.5).abs() < 1e-14);
        assert!((b.g.get(0, 0, 7) - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grouped_and_standard_hold_the_same_elements() {
        let g = gen_gellmann_basis(4).unwrap();
        let s = gen_gellmann_basis_with(4, Ordering::Standard, DEFAULT_BASIS_CAP).unwrap();
        for (kind, e) in g.kinds.iter().zip(&g.elements) {
            let k = s.index_of(*kind).unwrap();
            assert!(max_abs(&(e - &s.elements[k])) == 0.0);
        }
    }

    #[test]
    fn relations_hold_for_small_d() {
        for d in 2..=5 {
            let b = gen_gellmann_basis(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            let n = b.len();
            for i in 0..n {
                assert!(crate::linalg::trace(&b.elements[i]).norm() < 1e-14);
                assert!(crate::linalg::hermitian_deviation(&b.elements[i]).0 == 0.0);
                for j in 0..n {
                    let t = trace_prod(&b.elements[i], &b.elements[j]);
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!((t - c(want, 0.0)).norm() < 1e-12);
                    let mut fc = vec![0.0; n];
                    let mut gc = vec![0.0; n];
                    for k in 0..n {
                        fc[k] = b.f.get(i, j, k);
                        gc[k] = b.g.get(i, j, k);
                    }
                    let comm = commutator(&b.elements[i], &b.elements[j]);
                    let want_c = b.combine(&fc) * c(0.0, 2.0);
                    assert!(max_abs(&(comm - want_c)) < 1e-10);
                    let anti = anticommutator(&b.elements[i], &b.elements[j]);
                    let mut want_a = b.combine(&gc) * c(2.0, 0.0);
                    if i == j {
                        want_a += identity(d) * c(4.0 / d as f64, 0.0);
                    }
                    assert!(max_abs(&(anti - want_a)) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(gen_gellmann_basis(1).is_err());
        assert!(matches!(gen_gellmann_basis(17), Err(Error::CapExceeded { .. })));
        assert!(gen_gellmann_basis_with(4, Ordering::Grouped, 10).is_err());
    }

    #[test]
    fn decompose_examples() {
        let b = gen_gellmann_basis(2).unwrap();
        let mut p0 = CMat::zeros(2, 2);
        p0[(0, 0)] = c(1.0, 0.0);
        let s = bloch_decompose(&p0, &b).unwrap();
        assert!((s.scalar - 0.5).abs() < 1e-15);
        assert!((s.vec[2] - 0.5).abs() < 1e-15 && s.vec[0] == 0.0 && s.vec[1] == 0.0);
        let back = bloch_reconstruct(&s, &b).unwrap();
        assert!(max_abs(&(back - p0)) < 1e-15);
        let s1 = bloch_decompose(&pauli()[0], &b).unwrap();
        assert_eq!(s1.scalar, 0.0);
        assert_eq!(s1.vec.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let b = gen_gellmann_basis(2).unwrap();
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = c(1.0, 0.0);
        match bloch_decompose(&a, &b) {
            Err(Error::NotHermitian { row, col, .. }) => assert!((row, col) == (0, 1) || (row, col) == (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reconstruct_checks_length() {
        let b = gen_gellmann_basis(3).unwrap();
        assert!(bloch_reconstruct(&BlochState::from_slice(0.0, &[1.0]), &b).is_err());
    }
}

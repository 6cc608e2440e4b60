//! Entropy, divergence and (conditional) mutual information on explicit
//! finite tables. All quantities are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of user-supplied pmfs.
pub const PMF_TOL: f64 = 1e-12;
/// Looser tolerance for tables assembled from products of many factors.
pub const TABLE_TOL: f64 = 1e-10;

/// Checks that `p` is a pmf: finite, nonnegative entries summing to one.
pub fn validate_pmf(p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidPmf("empty pmf".into()));
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidPmf(format!("entry {v} is negative or non-finite")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::InvalidPmf(format!("entries sum to {s}")));
    }
    Ok(())
}

fn xlog2(p: f64, ratio: f64) -> f64 {
    if p > 0.0 {
        p * ratio.log2()
    } else {
        0.0
    }
}

/// Shannon entropy `−Σ p log₂ p`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    validate_pmf(p, PMF_TOL)?;
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlog2(v, v)).sum::<f64>()
}

/// `D(p‖q)`; `f64::INFINITY` when `p` charges a point where `q` vanishes.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch(format!(
            "pmfs over {} and {} symbols",
            p.len(),
            q.len()
        )));
    }
    validate_pmf(p, PMF_TOL)?;
    validate_pmf(q, PMF_TOL)?;
    Ok(kl_unchecked(p, q))
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

/// Joint pmf of a pair `(X, Y)` over finite alphabets, stored row-major
/// as `p[x * ny + y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteJoint {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
}

impl FiniteJoint {
    pub fn new(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || probs.len() != nx * ny {
            return Err(Error::Shape(format!(
                "{} entries do not fill a {nx}x{ny} table",
                probs.len()
            )));
        }
        validate_pmf(&probs, PMF_TOL)?;
        Ok(Self { nx, ny, probs })
    }

    /// Build from nested rows `p[x][y]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::Shape("ragged joint table".into()));
        }
        Self::new(nx, ny, rows.concat())
    }

    /// Binary symmetric pair on `{−1, +1}²` (index 0 ↦ −1) with correlation ρ.
    pub fn binary_symmetric(rho: f64) -> Result<Self> {
        crate::model::check_rho(rho)?;
        let same = (1.0 + rho) / 4.0;
        let diff = (1.0 - rho) / 4.0;
        Self::new(2, 2, vec![same, diff, diff, same])
    }

    /// Independent coupling `p_X ⊗ p_Y`.
    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        validate_pmf(px, PMF_TOL)?;
        validate_pmf(py, PMF_TOL)?;
        let probs = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
        Self::new(px.len(), py.len(), probs)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.probs.chunks_exact(self.ny).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ny];
        for row in self.probs.chunks_exact(self.ny) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// `p_X ⊗ p_Y` with the same marginals.
    pub fn independent_part(&self) -> Self {
        let px = self.marginal_x();
        let py = self.marginal_y();
        Self {
            nx: self.nx,
            ny: self.ny,
            probs: px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect(),
        }
    }

    /// Tensor product of two pair sources: `X = (X₁, X₂)`, `Y = (Y₁, Y₂)`
    /// with index `x₁·|X₂| + x₂`.
    pub fn tensor(&self, other: &Self) -> Self {
        let nx = self.nx * other.nx;
        let ny = self.ny * other.ny;
        let mut probs = vec![0.0; nx * ny];
        for x1 in 0..self.nx {
            for y1 in 0..self.ny {
                let a = self.get(x1, y1);
                for x2 in 0..other.nx {
                    for y2 in 0..other.ny {
                        let x = x1 * other.nx + x2;
                        let y = y1 * other.ny + y2;
                        probs[x * ny + y] = a * other.get(x2, y2);
                    }
                }
            }
        }
        Self { nx, ny, probs }
    }

    pub fn to_table(&self) -> JointTable {
        JointTable {
            dims: vec![self.nx, self.ny],
            probs: self.probs.clone(),
        }
    }
}

/// `I(X;Y) = D(P_XY ‖ P_X × P_Y)`.
pub fn mutual_info(j: &FiniteJoint) -> f64 {
    kl_unchecked(&j.probs, &j.independent_part().probs)
}

/// `I(X;Y|Z)` for a three-axis table over `(X, Y, Z)`.
pub fn cond_mutual_info(j3: &JointTable) -> Result<f64> {
    if j3.rank() != 3 {
        return Err(Error::Shape(format!("expected 3 axes, got {}", j3.rank())));
    }
    Ok(j3.cond_mi(&[0], &[1], &[2]))
}

/// `D(P_{Y|X} ‖ q_Y | P_X) − I(X;Y)`, which is nonnegative and vanishes
/// exactly at `q_Y = P_Y`.
pub fn mi_radius_gap(j: &FiniteJoint, qy: &[f64]) -> Result<f64> {
    if qy.len() != j.ny {
        return Err(Error::AlphabetMismatch(format!(
            "qy has {} symbols, joint has {}",
            qy.len(),
            j.ny
        )));
    }
    validate_pmf(qy, PMF_TOL)?;
    let px = j.marginal_x();
    let mut cond = 0.0;
    for (x, &pxv) in px.iter().enumerate() {
        if pxv <= 0.0 {
            continue;
        }
        let row: Vec<f64> = (0..j.ny).map(|y| j.get(x, y) / pxv).collect();
        let d = kl_unchecked(&row, qy);
        if d.is_infinite() {
            return Ok(f64::INFINITY);
        }
        cond += pxv * d;
    }
    Ok(cond - mutual_info(j))
}

/// Joint pmf over any number of finite axes, row-major with the last axis
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

impl JointTable {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || size != probs.len() {
            return Err(Error::Shape(format!(
                "{} entries do not fill dims {dims:?}",
                probs.len()
            )));
        }
        validate_pmf(&probs, TABLE_TOL)?;
        Ok(Self { dims, probs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal over `axes`, kept in the order given.
    pub fn marginal(&self, axes: &[usize]) -> JointTable {
        let out_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let out_strides = strides(&out_dims);
        let mut map = vec![0usize; self.dims.len()];
        for (pos, &a) in axes.iter().enumerate() {
            map[a] += out_strides[pos];
        }
        let mut out = vec![0.0; out_dims.iter().product::<usize>().max(1)];
        self.for_each_projected(&map, |o, p| out[o] += p);
        JointTable {
            dims: out_dims,
            probs: out,
        }
    }

    /// Calls `f(projected_index, p)` for every cell, where the projected
    /// index is `Σ idx[axis] · weight[axis]`.
    fn for_each_projected<F: FnMut(usize, f64)>(&self, weight: &[usize], mut f: F) {
        let n = self.dims.len();
        let mut idx = vec![0usize; n];
        let mut proj = 0usize;
        for &p in &self.probs {
            f(proj, p);
            for ax in (0..n).rev() {
                idx[ax] += 1;
                proj += weight[ax];
                if idx[ax] < self.dims[ax] {
                    break;
                }
                proj -= weight[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
    }

    /// Entropy of the marginal on `axes`.
    pub fn entropy_of(&self, axes: &[usize]) -> f64 {
        entropy_unchecked(&self.marginal(axes).probs)
    }

    /// `I(A;B|C)` for disjoint axis sets, evaluated as the averaged
    /// divergence `Σ p(a,b,c) log[p(a,b,c)p(c) / (p(a,c)p(b,c))]` so that
    /// small values are not lost to cancellation. `I(A;B)` is the case of
    /// empty `c`.
    pub fn cond_mi(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        let t = self.marginal(&abc);
        let (na, nb, nc) = (a.len(), b.len(), c.len());
        let ac: Vec<usize> = (0..na).chain(na + nb..na + nb + nc).collect();
        let bc: Vec<usize> = (na..na + nb + nc).collect();
        let cc: Vec<usize> = (na + nb..na + nb + nc).collect();
        let p_ac = t.marginal(&ac);
        let p_bc = t.marginal(&bc);
        let p_c = t.marginal(&cc);
        let w_ac = t.projection_weights(&ac);
        let w_bc = t.projection_weights(&bc);
        let w_c = t.projection_weights(&cc);

        let rank = t.dims.len();
        let mut idx = vec![0usize; rank];
        let (mut i_ac, mut i_bc, mut i_c) = (0usize, 0usize, 0usize);
        let mut acc = 0.0;
        for &p in &t.probs {
            if p > 0.0 {
                acc += p * ((p * p_c.probs[i_c]) / (p_ac.probs[i_ac] * p_bc.probs[i_bc])).log2();
            }
            for ax in (0..rank).rev() {
                idx[ax] += 1;
                i_ac += w_ac[ax];
                i_bc += w_bc[ax];
                i_c += w_c[ax];
                if idx[ax] < t.dims[ax] {
                    break;
                }
                i_ac -= w_ac[ax] * idx[ax];
                i_bc -= w_bc[ax] * idx[ax];
                i_c -= w_c[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
        acc
    }

    /// `I(A;B)`.
    pub fn mi(&self, a: &[usize], b: &[usize]) -> f64 {
        self.cond_mi(a, b, &[])
    }

    /// `D(self ‖ other)` on identically shaped tables.
    pub fn kl_to(&self, other: &JointTable) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::AlphabetMismatch(format!(
                "tables with dims {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(kl_unchecked(&self.probs, &other.probs))
    }

    fn projection_weights(&self, axes: &[usize]) -> Vec<usize> {
        let out_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let s = strides(&out_dims);
        let mut w = vec![0usize; self.dims.len()];
        for (pos, &a) in axes.iter().enumerate() {
            w[a] += s[pos];
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binary_entropy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn normalize(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    fn pmf(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(normalize)
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&[0.25; 4]).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&[0.25, 0.75]).unwrap(), 0.811_278, epsilon = 1e-6);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(entropy(&[0.5, 0.6]), Err(Error::InvalidPmf(_))));
        assert!(entropy(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_abs_diff_eq!(kl(&[0.5, 0.5], &[0.25, 0.75]).unwrap(), 0.207_519, epsilon = 1e-6);
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
        assert!(matches!(kl(&[1.0], &[0.5, 0.5]), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn mi_examples() {
        let prod = FiniteJoint::product(&[0.2, 0.8], &[0.5, 0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(mutual_info(&prod), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mutual_info(&FiniteJoint::binary_symmetric(1.0).unwrap()), 1.0, epsilon = 1e-15);
        let j = FiniteJoint::binary_symmetric(0.5).unwrap();
        assert_abs_diff_eq!(mutual_info(&j), 1.0 - binary_entropy(0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(mutual_info(&j), 0.188_722, epsilon = 1e-6);
    }

    #[test]
    fn joint_rejects_bad_tables() {
        assert!(FiniteJoint::new(2, 2, vec![0.5, 0.5, 0.0]).is_err());
        assert!(FiniteJoint::new(2, 2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(FiniteJoint::from_rows(&[vec![0.5], vec![0.25, 0.25]]).is_err());
        assert!(JointTable::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn cmi_examples() {
        // Z independent of (X, Y).
        let xy = FiniteJoint::binary_symmetric(0.4).unwrap();
        let pz = [0.3, 0.7];
        let probs: Vec<f64> = xy.probs().iter().flat_map(|p| pz.iter().map(move |z| p * z)).collect();
        let t = JointTable::new(vec![2, 2, 2], probs).unwrap();
        assert_abs_diff_eq!(cond_mutual_info(&t).unwrap(), mutual_info(&xy), epsilon = 1e-14);

        // X = Y = Z.
        let mut probs = vec![0.0; 8];
        probs[0] = 0.5;
        probs[7] = 0.5;
        let t = JointTable::new(vec![2, 2, 2], probs).unwrap();
        assert_abs_diff_eq!(cond_mutual_info(&t).unwrap(), 0.0, epsilon = 1e-15);

        assert!(cond_mutual_info(&xy.to_table()).is_err());
    }

    #[test]
    fn marginal_reorders_axes() {
        let t = JointTable::new(vec![2, 3], vec![0.1, 0.2, 0.0, 0.3, 0.15, 0.25]).unwrap();
        let m = t.marginal(&[1, 0]);
        assert_eq!(m.dims(), &[3, 2]);
        let expect = [0.1, 0.3, 0.2, 0.15, 0.0, 0.25];
        for (a, b) in m.probs().iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(t.marginal(&[]).probs()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn radius_examples() {
        let j = FiniteJoint::binary_symmetric(0.5).unwrap();
        assert_abs_diff_eq!(mi_radius_gap(&j, &j.marginal_y()).unwrap(), 0.0, epsilon = 1e-14);
        let g = mi_radius_gap(&j, &[0.25, 0.75]).unwrap();
        assert!(g > 0.0);
        assert_abs_diff_eq!(g, kl(&[0.5, 0.5], &[0.25, 0.75]).unwrap(), epsilon = 1e-12);
        assert_eq!(mi_radius_gap(&j, &[1.0, 0.0]).unwrap(), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn kl_nonnegative(p in pmf(5), q in pmf(5)) {
            let d = kl(&p, &q).unwrap();
            prop_assert!(d >= -1e-12);
            prop_assert!(kl(&p, &p).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn mi_matches_entropy_identity(p in pmf(12)) {
            let j = FiniteJoint::new(3, 4, p).unwrap();
            let via_h = entropy_unchecked(&j.marginal_x()) + entropy_unchecked(&j.marginal_y())
                - entropy_unchecked(j.probs());
            prop_assert!((mutual_info(&j) - via_h).abs() < 1e-10);
        }

        #[test]
        fn cmi_chain_rule(p in pmf(8)) {
            let t = JointTable::new(vec![2, 2, 2], p).unwrap();
            let lhs = t.cond_mi(&[0], &[1], &[2]);
            let rhs = t.mi(&[0], &[1, 2]) - t.mi(&[0], &[2]);
            prop_assert!((lhs - rhs).abs() < 1e-10);
            prop_assert!(lhs >= -1e-12);
        }

        #[test]
        fn radius_gap_nonnegative(p in pmf(6), q in pmf(3)) {
            let j = FiniteJoint::new(2, 3, p).unwrap();
            prop_assert!(mi_radius_gap(&j, &q).unwrap() >= -1e-12);
        }
    }
}

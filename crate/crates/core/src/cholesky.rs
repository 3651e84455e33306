//! Cholesky parameterisation of the diffusion matrix.
//!
//! `A(x) = F(x) V F(x)` with `V_ii = c_i²`, `V_ij = ρ_ij c_i c_j` and
//! `V = C C'`. The sampler moves the entries of `C` directly: any lower
//! triangular matrix with positive diagonal gives a valid `V`. The map
//! between `(c, ρ)` and `C` is a bijection computed in closed form.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lower-triangular factor with strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    c: DMatrix<f64>,
}

impl CholeskyFactor {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if !c.is_square() || c.nrows() == 0 {
            return Err(Error::arg("Cholesky factor must be a non-empty square matrix"));
        }
        let d = c.nrows();
        for i in 0..d {
            for j in 0..d {
                let v = c[(i, j)];
                if j > i && v != 0.0 {
                    return Err(Error::arg(format!("entry ({i},{j}) above the diagonal is nonzero")));
                }
                if !v.is_finite() {
                    return Err(Error::arg(format!("entry ({i},{j}) is not finite")));
                }
            }
            if c[(i, i)] <= 0.0 {
                return Err(Error::arg(format!("diagonal entry ({i},{i}) is not positive")));
            }
        }
        Ok(CholeskyFactor { c })
    }

    /// Builds a factor from its lower triangle given row by row:
    /// `C11, C21, C22, C31, C32, C33, ...`.
    pub fn from_lower(d: usize, lower: &[f64]) -> Result<Self> {
        if lower.len() != d * (d + 1) / 2 {
            return Err(Error::arg(format!(
                "expected {} lower-triangular entries, got {}",
                d * (d + 1) / 2,
                lower.len()
            )));
        }
        let mut c = DMatrix::zeros(d, d);
        let mut it = lower.iter();
        for i in 0..d {
            for j in 0..=i {
                c[(i, j)] = *it.next().unwrap();
            }
        }
        Self::new(c)
    }

    pub fn identity(d: usize) -> Self {
        CholeskyFactor {
            c: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)]
    }

    /// Lower triangle row by row (inverse of [`CholeskyFactor::from_lower`]).
    pub fn lower(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in 0..=i {
                out.push(self.c[(i, j)]);
            }
        }
        out
    }

    /// `V = C C'`.
    pub fn product(&self) -> DMatrix<f64> {
        &self.c * self.c.transpose()
    }

    /// Inverse of the leading `k x k` block, by forward substitution.
    pub fn block_inverse(&self, k: usize) -> DMatrix<f64> {
        let mut inv = DMatrix::zeros(k, k);
        for col in 0..k {
            for i in col..k {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for j in col..i {
                    s -= self.c[(i, j)] * inv[(j, col)];
                }
                inv[(i, col)] = s / self.c[(i, i)];
            }
        }
        inv
    }

    /// `log det` of the leading `k x k` block.
    pub fn block_log_det(&self, k: usize) -> f64 {
        (0..k).map(|i| self.c[(i, i)].ln()).sum()
    }

    pub(crate) fn set_unchecked(&mut self, i: usize, j: usize, v: f64) {
        self.c[(i, j)] = v;
    }
}

/// Positive scales `c_i` and correlations `ρ_ij` (`i > j`).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrScaleSpec {
    scales: Vec<f64>,
    correlations: Vec<f64>,
}

/// Index of `(i, j)`, `i > j`, in a strictly-lower row-major vector.
#[inline]
pub fn strict_lower_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

impl CorrScaleSpec {
    /// `correlations` lists `ρ21, ρ31, ρ32, ρ41, ...`.
    pub fn new(scales: Vec<f64>, correlations: Vec<f64>) -> Result<Self> {
        let d = scales.len();
        if d == 0 {
            return Err(Error::arg("empty scale vector"));
        }
        if correlations.len() != d * (d - 1) / 2 {
            return Err(Error::arg(format!(
                "expected {} correlations for dimension {d}, got {}",
                d * (d - 1) / 2,
                correlations.len()
            )));
        }
        if let Some(i) = scales.iter().position(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::arg(format!("scale c{} must be positive", i + 1)));
        }
        if let Some(k) = correlations.iter().position(|r| !(r.abs() < 1.0)) {
            return Err(Error::arg(format!(
                "correlation #{} = {} is outside (-1, 1)",
                k + 1,
                correlations[k]
            )));
        }
        let spec = CorrScaleSpec {
            scales,
            correlations,
        };
        if let Err(Error::NotPositiveDefinite { pivot }) = raw_cholesky(&spec.correlation_matrix()) {
            return Err(Error::arg(format!(
                "correlation matrix is not positive definite (leading minor of order {})",
                pivot + 1
            )));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Strictly-lower correlations, row by row.
    pub fn correlations(&self) -> &[f64] {
        &self.correlations
    }

    /// `ρ_ij`, symmetric, with `ρ_ii = 1`.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => self.correlations[strict_lower_index(i, j)],
            std::cmp::Ordering::Less => self.correlations[strict_lower_index(j, i)],
        }
    }

    pub fn correlation_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.rho(i, j))
    }
}

/// Which correlations are pinned to zero, and which rows of `C` have a
/// redundant diagonal fixed by the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityMask {
    dim: usize,
    zero_corr: Vec<bool>,
    zero_entry: Vec<bool>,
    fixed_scale: Vec<bool>,
}

impl SparsityMask {
    /// No restrictions.
    pub fn full(dim: usize) -> Self {
        SparsityMask {
            dim,
            zero_corr: vec![false; dim * dim],
            zero_entry: vec![false; dim * dim],
            fixed_scale: vec![false; dim],
        }
    }

    /// Pins the listed correlations `(i, j)` (any order, zero based) to zero.
    ///
    /// Fails unless the zero pattern carries over to `C`: `C_ij` is
    /// structurally zero when `ρ_ij = 0` and, for every `k < j`, either `C_ik`
    /// or `C_jk` is structurally zero.
    pub fn with_zero_correlations(mut self, pairs: &[(usize, usize)]) -> Result<Self> {
        let d = self.dim;
        for &(a, b) in pairs {
            let (i, j) = if a > b { (a, b) } else { (b, a) };
            if i == j || i >= d {
                return Err(Error::arg(format!("invalid correlation index ({a},{b})")));
            }
            self.zero_corr[i * d + j] = true;
        }
        for i in 0..d {
            for j in 0..i {
                if !self.zero_corr[i * d + j] {
                    continue;
                }
                let structural =
                    (0..j).all(|k| self.zero_entry[i * d + k] || self.zero_entry[j * d + k]);
                if !structural {
                    return Err(Error::arg(format!(
                        "zero correlation ({},{}) does not translate into a zero Cholesky entry",
                        i + 1,
                        j + 1
                    )));
                }
                self.zero_entry[i * d + j] = true;
            }
        }
        Ok(self)
    }

    /// Marks rows whose diagonal entry is derived from a model-imposed row
    /// norm instead of being sampled.
    pub fn with_fixed_scale_rows(mut self, rows: &[usize]) -> Result<Self> {
        for &r in rows {
            if r >= self.dim {
                return Err(Error::arg(format!("row {r} out of range")));
            }
            self.fixed_scale[r] = true;
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero_correlation(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i > j { (i, j) } else { (j, i) };
        i != j && self.zero_corr[i * self.dim + j]
    }

    /// `C_ij` is structurally zero.
    pub fn is_zero_entry(&self, i: usize, j: usize) -> bool {
        j > i || self.zero_entry[i * self.dim + j]
    }

    pub fn is_fixed_scale(&self, row: usize) -> bool {
        self.fixed_scale[row]
    }

    /// Entries the sampler proposes: not structurally zero and not a
    /// redundant diagonal.
    pub fn is_free(&self, i: usize, j: usize) -> bool {
        j <= i && !self.is_zero_entry(i, j) && !(i == j && self.fixed_scale[i])
    }

    /// Free entries in row-major lower-triangle order.
    pub fn free_entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in 0..=i {
                if self.is_free(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Fails when `C` has a nonzero entry where the mask demands zero.
    pub fn check(&self, c: &CholeskyFactor) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..i {
                if self.is_zero_entry(i, j) && c.get(i, j) != 0.0 {
                    return Err(Error::arg(format!(
                        "C{}{} must be zero under the sparsity mask",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Recomputes redundant diagonals so that row `i` has norm `scale(i)`.
    /// Returns `None` when the off-diagonal part of a row already exceeds it.
    pub fn resolve_fixed_scales(
        &self,
        c: &CholeskyFactor,
        mut scale: impl FnMut(usize) -> Option<f64>,
    ) -> Option<CholeskyFactor> {
        let mut out = c.clone();
        for i in 0..self.dim {
            if !self.fixed_scale[i] {
                continue;
            }
            let s = scale(i)?;
            let off: f64 = (0..i).map(|j| c.get(i, j).powi(2)).sum();
            let rest = s * s - off;
            if !(rest > 0.0) {
                return None;
            }
            out.set_unchecked(i, i, rest.sqrt());
        }
        Some(out)
    }
}

/// `V_ii = c_i²`, `V_ij = ρ_ij c_i c_j`.
pub fn build_v(spec: &CorrScaleSpec) -> DMatrix<f64> {
    let d = spec.dim();
    let c = spec.scales();
    DMatrix::from_fn(d, d, |i, j| spec.rho(i, j) * (c[i.max(j)] * c[i.min(j)]))
}

fn raw_cholesky(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = v.nrows();
    let mut c = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut diag = v[(j, j)];
        for k in 0..j {
            diag -= c[(j, k)] * c[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let cjj = diag.sqrt();
        c[(j, j)] = cjj;
        for i in j + 1..d {
            let mut s = v[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)];
            }
            c[(i, j)] = s / cjj;
        }
    }
    Ok(c)
}

/// Cholesky decomposition `V = C C'` of a symmetric positive definite matrix.
pub fn chol_decompose(v: &DMatrix<f64>) -> Result<CholeskyFactor> {
    if !v.is_square() || v.nrows() == 0 {
        return Err(Error::arg("matrix must be square and non-empty"));
    }
    let d = v.nrows();
    for i in 0..d {
        for j in 0..i {
            let (a, b) = (v[(i, j)], v[(j, i)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::arg(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    raw_cholesky(v).map(|c| CholeskyFactor { c })
}

/// Closed-form inverse of [`corr_to_chol`]: `c_i` is the norm of row `i`
/// and `ρ_ij` the cosine between rows `i` and `j`.
pub fn chol_to_corr(c: &CholeskyFactor) -> CorrScaleSpec {
    let d = c.dim();
    let m = c.matrix();
    let scales: Vec<f64> = (0..d)
        .map(|i| (0..=i).map(|j| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut correlations = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in 0..i {
            let dot: f64 = (0..=j).map(|k| m[(i, k)] * m[(j, k)]).sum();
            correlations.push(dot / (scales[i] * scales[j]));
        }
    }
    CorrScaleSpec {
        scales,
        correlations,
    }
}

/// `C` such that `C C' = V(c, ρ)`.
pub fn corr_to_chol(spec: &CorrScaleSpec) -> Result<CholeskyFactor> {
    chol_decompose(&build_v(spec))
}

/// [`corr_to_chol`] under a sparsity mask: the pinned correlations must be
/// zero and the corresponding entries of `C` come out exactly zero.
pub fn corr_to_chol_masked(spec: &CorrScaleSpec, mask: &SparsityMask) -> Result<CholeskyFactor> {
    if mask.dim() != spec.dim() {
        return Err(Error::arg("mask dimension does not match"));
    }
    for i in 0..spec.dim() {
        for j in 0..i {
            if mask.is_zero_correlation(i, j) && spec.rho(i, j) != 0.0 {
                return Err(Error::arg(format!(
                    "rho{}{} is pinned to zero by the mask",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut c = corr_to_chol(spec)?;
    for i in 0..spec.dim() {
        for j in 0..i {
            if mask.is_zero_entry(i, j) {
                c.set_unchecked(i, j, 0.0);
            }
        }
    }
    Ok(c)
}

/// Replaces `C_ij`. Returns `Ok(None)` when a diagonal entry would become
/// nonpositive, which the sampler treats as an automatic rejection.
pub fn perturb_entry(
    c: &CholeskyFactor,
    mask: &SparsityMask,
    i: usize,
    j: usize,
    value: f64,
) -> Result<Option<CholeskyFactor>> {
    if j > i || i >= c.dim() {
        return Err(Error::arg(format!("({i},{j}) is not a lower-triangular index")));
    }
    if !mask.is_free(i, j) {
        return Err(Error::arg(format!(
            "C{}{} is fixed by the sparsity mask",
            i + 1,
            j + 1
        )));
    }
    if !value.is_finite() || (i == j && value <= 0.0) {
        return Ok(None);
    }
    let mut out = c.clone();
    out.set_unchecked(i, j, value);
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn assert_mat_eq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn v_of_unit_scales_is_identity() {
        let s = CorrScaleSpec::new(vec![1.0, 1.0], vec![0.0]).unwrap();
        assert_eq!(build_v(&s), DMatrix::identity(2, 2));
    }

    #[test]
    fn v_from_table_values() {
        let s = CorrScaleSpec::new(vec![0.45, 0.35], vec![0.45]).unwrap();
        let v = build_v(&s);
        let expected = DMatrix::from_row_slice(2, 2, &[0.2025, 0.070875, 0.070875, 0.1225]);
        assert_mat_eq(&v, &expected, 1e-15);
    }

    #[test]
    fn near_unit_correlation_is_still_pd() {
        let s = CorrScaleSpec::new(vec![2.0, 3.0], vec![0.999999]).unwrap();
        let eig = build_v(&s).symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn non_pd_correlations_name_the_minor() {
        // pairwise valid, jointly not PD
        let err = CorrScaleSpec::new(vec![1.0; 3], vec![0.9, 0.9, -0.9]).unwrap_err();
        assert!(err.to_string().contains("order 3"), "{err}");
    }

    #[test]
    fn decompose_identity_and_unit_correlation() {
        assert_eq!(
            chol_decompose(&DMatrix::identity(3, 3)).unwrap(),
            CholeskyFactor::identity(3)
        );
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let c = chol_decompose(&v).unwrap();
        assert_relative_eq!(c.get(1, 0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(c.get(1, 1), 0.75f64.sqrt(), epsilon = 1e-15);
        assert_mat_eq(&c.product(), &v, 1e-12);
    }

    #[test]
    fn decompose_table_three_by_three() {
        let s = CorrScaleSpec::new(vec![0.45, 0.35, 0.40], vec![0.45, 0.35, 0.55]).unwrap();
        let v = build_v(&s);
        let c = chol_decompose(&v).unwrap();
        assert_mat_eq(&c.product(), &v, 1e-12);
    }

    #[test]
    fn decompose_reports_pivot() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            chol_decompose(&v),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn chol_to_corr_examples() {
        let s = chol_to_corr(&CholeskyFactor::identity(3));
        assert_eq!(s.scales(), &[1.0, 1.0, 1.0]);
        assert_eq!(s.correlations(), &[0.0, 0.0, 0.0]);

        let c = CholeskyFactor::from_lower(2, &[1.0, 0.5, 0.75f64.sqrt()]).unwrap();
        let s = chol_to_corr(&c);
        assert_relative_eq!(s.scales()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.scales()[1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.rho(1, 0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn corr_to_chol_examples() {
        let s = CorrScaleSpec::new(vec![0.45, 0.35], vec![0.45]).unwrap();
        let c = corr_to_chol(&s).unwrap();
        assert_relative_eq!(c.get(0, 0), 0.45, epsilon = 1e-15);
        assert_relative_eq!(c.get(1, 0), 0.1575, epsilon = 1e-15);
        assert_relative_eq!(c.get(1, 1), 0.35 * (1.0f64 - 0.45 * 0.45).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(c.get(1, 1), 0.31256, epsilon = 1e-7);

        let diag = corr_to_chol(&CorrScaleSpec::new(vec![2.0, 3.0, 4.0], vec![0.0; 3]).unwrap())
            .unwrap();
        assert_eq!(diag.lower(), vec![2.0, 0.0, 3.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn masked_pattern_zeroes_entries() {
        let mask = SparsityMask::full(4)
            .with_zero_correlations(&[(2, 0), (2, 1), (3, 0), (3, 1)])
            .unwrap()
            .with_fixed_scale_rows(&[2, 3])
            .unwrap();
        let s = CorrScaleSpec::new(
            vec![0.3, 0.4, 0.07, 0.08],
            vec![0.55, 0.0, 0.0, 0.0, 0.0, 0.8],
        )
        .unwrap();
        let c = corr_to_chol_masked(&s, &mask).unwrap();
        for (i, j) in [(2, 0), (2, 1), (3, 0), (3, 1)] {
            assert_eq!(c.get(i, j), 0.0);
        }
        mask.check(&c).unwrap();
        assert_eq!(mask.free_entries(), vec![(0, 0), (1, 0), (1, 1), (3, 2)]);

        let bad = CorrScaleSpec::new(vec![1.0; 4], vec![0.5, 0.1, 0.0, 0.0, 0.0, 0.2]).unwrap();
        assert!(corr_to_chol_masked(&bad, &mask).is_err());
    }

    #[test]
    fn mask_rejects_non_structural_zero() {
        // ρ32 = 0 with ρ21, ρ31 free does not force C32 = 0
        assert!(SparsityMask::full(3).with_zero_correlations(&[(2, 1)]).is_err());
        assert!(SparsityMask::full(3).with_zero_correlations(&[(1, 0)]).is_ok());
    }

    #[test]
    fn resolve_fixed_scales_sets_row_norm() {
        let mask = SparsityMask::full(2).with_fixed_scale_rows(&[1]).unwrap();
        let c = CholeskyFactor::from_lower(2, &[1.0, 0.6, 1.0]).unwrap();
        let r = mask.resolve_fixed_scales(&c, |_| Some(1.0)).unwrap();
        assert_relative_eq!(r.get(1, 1), 0.8, epsilon = 1e-15);
        assert!(mask.resolve_fixed_scales(&c, |_| Some(0.5)).is_none());
    }

    #[test]
    fn perturb_entry_contract() {
        let mask = SparsityMask::full(2);
        let c = CholeskyFactor::identity(2);
        assert!(perturb_entry(&c, &mask, 1, 0, -123.0).unwrap().is_some());
        assert!(perturb_entry(&c, &mask, 0, 0, -0.1).unwrap().is_none());
        let tiny = perturb_entry(&c, &mask, 1, 1, 1e-8).unwrap().unwrap();
        assert!(tiny.product().symmetric_eigen().eigenvalues.min() > 0.0);
        assert!(perturb_entry(&c, &mask, 0, 1, 1.0).is_err());

        let masked = SparsityMask::full(2).with_zero_correlations(&[(1, 0)]).unwrap();
        assert!(perturb_entry(&c, &masked, 1, 0, 0.3).is_err());
    }

    #[test]
    fn block_inverse_matches_identity() {
        let c = CholeskyFactor::from_lower(3, &[0.45, 0.16, 0.31, 0.14, 0.2, 0.3]).unwrap();
        let inv = c.block_inverse(3);
        assert_mat_eq(&(c.matrix() * &inv), &DMatrix::identity(3, 3), 1e-12);
    }
}

//! Connection and curvature from raw metric components.
//!
//! Sign convention: the (3,1) tensor is `R_ab c = ∇_b∇_a c − ∇_a∇_b c − ∇_[b,a] c`
//! and `R_abcd = ⟨R_ab c, d⟩`. With this choice `K(a, b) = R_abab / |a∧b|²`
//! and the unit sphere has `R_abcd = g_ac g_bd − g_ad g_bc`, i.e. `K = +1`.
//! In coordinates this is the classical all-lower-index tensor
//!
//! ```text
//! R_iklm = ½(∂k∂l g_im + ∂i∂m g_kl − ∂k∂m g_il − ∂i∂l g_km)
//!          + g_np (Γⁿ_kl Γᵖ_im − Γⁿ_km Γᵖ_il)
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::engine::chart::{check_positive_definite, ChartMetric};
use crate::engine::jet::{metric_jet, MetricJet};
use crate::error::{Error, Result};

/// `Γ^k_ij` stored at `(k * n + i) * n + j`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Christoffel {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[(k * self.n + i) * self.n + j]
    }

    /// `Γ^k_ij a^i b^j`: the covariant derivative `∇_a b` of coordinate-constant fields.
    pub fn contract(&self, a: &[f64], b: &[f64]) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.get(k, i, j) * a[i] * b[j];
                }
            }
            s
        })
    }
}

/// Curvature tensor with four lowered indices, `R_abcd = ⟨R_ab c, d⟩`.
#[derive(Clone, Debug)]
pub struct CurvatureTensor4 {
    pub point: Vec<f64>,
    pub n: usize,
    pub values: Vec<f64>,
    /// Metric at `point`, kept for plane normalisation.
    pub metric: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryResiduals {
    pub antisymmetry: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.pair_symmetry).max(self.bianchi)
    }
}

impl CurvatureTensor4 {
    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.n;
        self.values[((a * n + b) * n + c) * n + d]
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `R(a, b, c, d)` for arbitrary vectors.
    pub fn eval(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                let ab = a[i] * b[j];
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        s += ab * c[k] * d[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }

    /// Sectional curvature of span(a, b), normalised by the Gram determinant.
    pub fn sectional(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let gram = gram_determinant(&self.metric, a, b);
        let scale = inner(&self.metric, a, a) * inner(&self.metric, b, b);
        if !(gram > 1e-14 * scale) || gram <= 0.0 {
            return Err(Error::DegeneratePlane { gram });
        }
        Ok(self.eval(a, b, a, b) / gram)
    }

    /// Residuals of the algebraic curvature identities, relative to the max-norm.
    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let n = self.n;
        let scale = self.max_norm().max(f64::MIN_POSITIVE);
        let mut anti = 0.0_f64;
        let mut pair = 0.0_f64;
        let mut bianchi = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        anti = anti
                            .max((r + self.get(b, a, c, d)).abs())
                            .max((r + self.get(a, b, d, c)).abs());
                        pair = pair.max((r - self.get(c, d, a, b)).abs());
                        let cyc = r + self.get(b, c, a, d) + self.get(c, a, b, d);
                        bianchi = bianchi.max(cyc.abs());
                    }
                }
            }
        }
        SymmetryResiduals {
            antisymmetry: anti / scale,
            pair_symmetry: pair / scale,
            bianchi: bianchi / scale,
        }
    }
}

pub fn inner(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * a[i] * b[j];
        }
    }
    s
}

/// `⟨a,a⟩⟨b,b⟩ − ⟨a,b⟩²`
pub fn gram_determinant(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let ab = inner(g, a, b);
    inner(g, a, a) * inner(g, b, b) - ab * ab
}

/// A 2-plane at a chart point, spanned by `a` and `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentPlane {
    pub point: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TangentPlane {
    pub fn new(point: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Self {
        TangentPlane { point, a, b }
    }
}

fn christoffel_from_jet(jet: &MetricJet, point: &[f64]) -> Result<(Christoffel, DMatrix<f64>)> {
    let n = jet.n;
    let g = DMatrix::from_row_slice(n, n, &jet.g);
    let chol = check_positive_definite(&g, point)?;
    let ginv = chol.inverse();
    // first kind: Γ_m,ij = ½(∂_i g_jm + ∂_j g_im − ∂_m g_ij)
    let mut first = vec![0.0; n * n * n];
    for m in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (jet.dg(i, j, m) + jet.dg(j, i, m) - jet.dg(m, i, j));
                first[(m * n + i) * n + j] = v;
                first[(m * n + j) * n + i] = v;
            }
        }
    }
    let mut values = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for m in 0..n {
                    s += ginv[(k, m)] * first[(m * n + i) * n + j];
                }
                values[(k * n + i) * n + j] = s;
                values[(k * n + j) * n + i] = s;
            }
        }
    }
    Ok((Christoffel { n, values }, g))
}

/// Christoffel symbols of the second kind at `point`.
pub fn christoffel_at(metric: &ChartMetric, point: &[f64]) -> Result<Christoffel> {
    let jet = metric_jet(metric, point, 1)?;
    christoffel_from_jet(&jet, point).map(|(c, _)| c)
}

/// Curvature tensor from a precomputed second-order jet.
pub fn riemann_from_jet(jet: &MetricJet, point: &[f64]) -> Result<CurvatureTensor4> {
    let n = jet.n;
    let (gamma, g) = christoffel_from_jet(jet, point)?;
    let mut values = vec![0.0; n * n * n * n];
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let second = 0.5
                        * (jet.ddg(k, l, i, m) + jet.ddg(i, m, k, l)
                            - jet.ddg(k, m, i, l)
                            - jet.ddg(i, l, k, m));
                    let mut quad = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            let gab = g[(a, b)];
                            if gab == 0.0 {
                                continue;
                            }
                            quad += gab
                                * (gamma.get(a, k, l) * gamma.get(b, i, m)
                                    - gamma.get(a, k, m) * gamma.get(b, i, l));
                        }
                    }
                    values[((i * n + k) * n + l) * n + m] = second + quad;
                }
            }
        }
    }
    Ok(CurvatureTensor4 {
        point: point.to_vec(),
        n,
        values,
        metric: g,
    })
}

pub fn riemann_at(metric: &ChartMetric, point: &[f64]) -> Result<CurvatureTensor4> {
    let jet = metric_jet(metric, point, 2)?;
    riemann_from_jet(&jet, point)
}

pub fn sectional_at(metric: &ChartMetric, plane: &TangentPlane) -> Result<f64> {
    let g = metric.eval(&plane.point);
    let gram = gram_determinant(&g, &plane.a, &plane.b);
    let scale = inner(&g, &plane.a, &plane.a) * inner(&g, &plane.b, &plane.b);
    if !(gram > 1e-14 * scale) {
        return Err(Error::DegeneratePlane { gram });
    }
    riemann_at(metric, &plane.point)?.sectional(&plane.a, &plane.b)
}

/// Index pairs `(i, j)`, `i < j`, in lexicographic order: the coordinate basis of Λ².
pub fn two_form_basis(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

/// The curvature operator on 2-forms at a point.
#[derive(Clone, Debug)]
pub struct CurvatureOperator {
    pub basis: Vec<(usize, usize)>,
    /// `B[(ij),(kl)] = R_ijkl`
    pub bilinear: DMatrix<f64>,
    /// Λ² Gram matrix `⟨e_i∧e_j, e_k∧e_l⟩ = g_ik g_jl − g_il g_jk`.
    pub gram: DMatrix<f64>,
    /// `L⁻¹ B L⁻ᵀ` with `gram = L Lᵀ`: symmetric, same spectrum as the operator.
    pub normalized: DMatrix<f64>,
    chol_l: DMatrix<f64>,
}

impl CurvatureOperator {
    /// Coordinates (in `basis`) of the 2-vector `a ∧ b`.
    pub fn wedge(&self, a: &[f64], b: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|&(i, j)| a[i] * b[j] - a[j] * b[i]),
        )
    }

    /// `ℛ(w)`, with `⟨ℛ(w), z⟩ = B(w, z)` for all `z`.
    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        let rhs = &self.bilinear * w;
        self.gram
            .clone()
            .cholesky()
            .expect("Λ² Gram matrix of a positive-definite metric")
            .solve(&rhs)
    }

    /// `⟨ℛ(w), w⟩ / ⟨w, w⟩`
    pub fn rayleigh(&self, w: &DVector<f64>) -> f64 {
        (w.transpose() * &self.bilinear * w)[(0, 0)] / (w.transpose() * &self.gram * w)[(0, 0)]
    }

    /// Eigenvalues (ascending) with eigenvectors in the coordinate 2-form basis.
    pub fn eigen(&self) -> Vec<(f64, DVector<f64>)> {
        let eig = SymmetricEigen::new(self.normalized.clone());
        let lt = self.chol_l.transpose();
        let mut pairs: Vec<(f64, DVector<f64>)> = (0..eig.eigenvalues.len())
            .map(|k| {
                let y = eig.eigenvectors.column(k).into_owned();
                let w = lt
                    .solve_upper_triangular(&y)
                    .expect("triangular factor is invertible");
                (eig.eigenvalues[k], w)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }

    /// Max `|Bᵀ − B|`; the operator is self-adjoint for the Λ² metric iff this vanishes.
    pub fn self_adjointness_residual(&self) -> f64 {
        (&self.bilinear - self.bilinear.transpose()).amax()
    }
}

pub fn curvature_operator_from_tensor(r: &CurvatureTensor4) -> Result<CurvatureOperator> {
    let basis = two_form_basis(r.n);
    let m = basis.len();
    let g = &r.metric;
    let bilinear = DMatrix::from_fn(m, m, |p, q| {
        let (i, j) = basis[p];
        let (k, l) = basis[q];
        r.get(i, j, k, l)
    });
    let gram = DMatrix::from_fn(m, m, |p, q| {
        let (i, j) = basis[p];
        let (k, l) = basis[q];
        g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]
    });
    let chol = check_positive_definite(&gram, &r.point)?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let mut normalized = &linv * &bilinear * linv.transpose();
    normalized = (&normalized + normalized.transpose()) * 0.5;
    Ok(CurvatureOperator {
        basis,
        bilinear,
        gram,
        normalized,
        chol_l: l,
    })
}

pub fn curvature_operator_at(metric: &ChartMetric, point: &[f64]) -> Result<CurvatureOperator> {
    curvature_operator_from_tensor(&riemann_at(metric, point)?)
}

/// Max over coordinate triples of
/// `|2⟨∂_c, ∇_b ∂_a⟩ − ∂_a g_bc − ∂_b g_ac + ∂_c g_ab|`.
pub fn koszul_residual(metric: &ChartMetric, point: &[f64]) -> Result<f64> {
    let jet = metric_jet(metric, point, 1)?;
    let (gamma, g) = christoffel_from_jet(&jet, point)?;
    let n = jet.n;
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut lhs = 0.0;
                for m in 0..n {
                    lhs += 2.0 * g[(c, m)] * gamma.get(m, b, a);
                }
                let rhs = jet.dg(a, b, c) + jet.dg(b, a, c) - jet.dg(c, a, b);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

//! Mode catalog and the similarity transform that isolates one mode.
//!
//! For an unrepeated eigenvalue `sigma` the transform `T = [v, Q]` takes `v` as
//! the unit right eigenvector and `Q` as an orthonormal basis of the orthogonal
//! complement of the left eigenvector `w`. That complement is the invariant
//! subspace carrying the rest of the spectrum, so
//!
//! ```text
//! T^-1 A T = [ sigma  0 ]
//!            [ 0      Ae ]
//! ```

use crate::error::{Error, Result};
use crate::linalg::{self, shifted, to_complex, CMatrix, CVector};
use crate::model::{StationPartition, SystemModel};
use nalgebra::Schur;
use num_complex::Complex64;
use serde::Serialize;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Index (into the catalog) of the conjugate mode, for non-real modes.
    pub conjugate_partner: Option<usize>,
}

impl Mode {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// Scale used for relative eigenvalue tolerances.
pub(crate) fn spectral_scale(model: &SystemModel) -> f64 {
    model.a().norm().max(f64::MIN_POSITIVE)
}

pub fn eigenvalues(model: &SystemModel) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(model.a().clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenSolver)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of `A` grouped into multiplicity clusters
/// (`|a - b| <= cluster_tol * ||A||_F`), sorted by real then imaginary part.
pub fn modes(model: &SystemModel, cluster_tol: f64) -> Result<Vec<Mode>> {
    let tol = cluster_tol * spectral_scale(model);
    let mut eigs = eigenvalues(model)?;
    for z in &mut eigs {
        if z.im.abs() <= tol {
            z.im = 0.0;
        }
    }
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in eigs {
        match clusters.iter_mut().find(|c| (c[0] - z).norm() <= tol) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut out: Vec<Mode> = clusters
        .into_iter()
        .map(|c| {
            let sum: Complex64 = c.iter().sum();
            Mode {
                value: sum / c.len() as f64,
                multiplicity: c.len(),
                conjugate_partner: None,
            }
        })
        .collect();
    for k in 0..out.len() {
        if out[k].value.im == 0.0 {
            continue;
        }
        let target = out[k].value.conj();
        out[k].conjugate_partner = out
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .min_by(|a, b| (a.1.value - target).norm().total_cmp(&(b.1.value - target).norm()))
            .filter(|(_, m)| (m.value - target).norm() <= tol.max(1e-12 * target.norm()))
            .map(|(j, _)| j);
    }
    Ok(out)
}

/// Catalog entry within `tol` (absolute) of `sigma`, nearest first.
pub fn find_mode(catalog: &[Mode], sigma: Complex64, tol: f64) -> Option<&Mode> {
    catalog
        .iter()
        .filter(|m| (m.value - sigma).norm() <= tol)
        .min_by(|a, b| (a.value - sigma).norm().total_cmp(&(b.value - sigma).norm()))
}

/// A model expressed in coordinates where `sigma` occupies state 1 and is
/// decoupled from the remaining `n - 1` states.
#[derive(Clone, Debug)]
pub struct CanonicalSystem {
    pub sigma: Complex64,
    /// `(n-1) x (n-1)` trailing block of `T^-1 A T`.
    pub a_tilde: CMatrix,
    pub b_tilde: CMatrix,
    pub c_tilde: CMatrix,
    pub d_tilde: CMatrix,
    pub transform: CMatrix,
    pub transform_inv: CMatrix,
    pub partition: StationPartition,
    pub model: SystemModel,
}

impl CanonicalSystem {
    pub fn states(&self) -> usize {
        self.transform.nrows()
    }

    pub fn station_count(&self) -> usize {
        self.partition.len()
    }

    /// First row of `B~` restricted to the columns of 1-based station `i`.
    pub fn b_first_row(&self, station: usize) -> Vec<Complex64> {
        let cols = &self.model.station_blocks()[station - 1].inputs;
        cols.clone().map(|c| self.b_tilde[(0, c)]).collect()
    }

    /// First column of `C~` restricted to the rows of 1-based station `i`.
    pub fn c_first_col(&self, station: usize) -> Vec<Complex64> {
        let rows = &self.model.station_blocks()[station - 1].outputs;
        rows.clone().map(|r| self.c_tilde[(r, 0)]).collect()
    }

    /// Rebuilds the canonical form for a model sharing this one's `A` (and
    /// hence `T`) but with different `B`, `C`, `D` or partition.
    pub fn with_model(&self, model: SystemModel) -> Self {
        debug_assert_eq!(model.a(), self.model.a());
        let b_tilde = &self.transform_inv * to_complex(model.b());
        let c_tilde = to_complex(model.c()) * &self.transform;
        Self {
            sigma: self.sigma,
            a_tilde: self.a_tilde.clone(),
            b_tilde,
            c_tilde,
            d_tilde: to_complex(model.d()),
            transform: self.transform.clone(),
            transform_inv: self.transform_inv.clone(),
            partition: model.partition().clone(),
            model,
        }
    }
}

/// Transforms `model` so the unrepeated mode `sigma` is decoupled in position
/// (1,1). `sigma` must match a catalog mode within `cluster_tol * ||A||_F`; the
/// catalog value is used from then on.
pub fn canonicalize(model: &SystemModel, sigma: Complex64, cluster_tol: f64) -> Result<CanonicalSystem> {
    let catalog = modes(model, cluster_tol)?;
    let tol = cluster_tol * spectral_scale(model);
    let mode = find_mode(&catalog, sigma, tol).ok_or(Error::NotAnEigenvalue(sigma))?;
    if mode.multiplicity > 1 {
        return Err(Error::RepeatedMode {
            sigma: mode.value,
            multiplicity: mode.multiplicity,
        });
    }
    let sigma = mode.value;
    let n = model.states();
    let a = to_complex(model.a());
    let shift = shifted(&a, sigma);
    let (v, _) = linalg::null_vector(&shift)?;
    let (w, _) = linalg::null_vector(&shift.adjoint())?;

    let mut transform = CMatrix::zeros(n, n);
    transform.set_column(0, &v);
    for (k, q) in complement_basis(&w).into_iter().enumerate() {
        transform.set_column(k + 1, &q);
    }
    let transform_inv = transform
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Internal(format!("similarity transform for {sigma} is singular")))?;

    let full = &transform_inv * &a * &transform;
    let coupling = full
        .row(0)
        .iter()
        .skip(1)
        .chain(full.column(0).iter().skip(1))
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let scale = spectral_scale(model);
    if coupling > 1e-8 * scale {
        return Err(Error::Internal(format!(
            "mode {sigma} did not decouple (residual {coupling:e})"
        )));
    }
    let a_tilde = full.view((1, 1), (n - 1, n - 1)).into_owned();

    Ok(CanonicalSystem {
        sigma,
        a_tilde,
        b_tilde: &transform_inv * to_complex(model.b()),
        c_tilde: to_complex(model.c()) * &transform,
        d_tilde: to_complex(model.d()),
        transform,
        transform_inv,
        partition: model.partition().clone(),
        model: model.clone(),
    })
}

/// Orthonormal basis of `w`-perp: project the unit vectors `e_k` (skipping the
/// one most aligned with `w`) and orthonormalize in index order.
fn complement_basis(w: &CVector) -> Vec<CVector> {
    let n = w.len();
    let wn = w.norm_squared();
    let skip = (0..n)
        .max_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm()))
        .unwrap_or(0);
    let mut basis: Vec<CVector> = Vec::with_capacity(n.saturating_sub(1));
    for k in (0..n).filter(|&k| k != skip) {
        // P e_k = e_k - w (w^H e_k) / (w^H w)
        let coef = w[k].conj() / wn;
        let mut q = -w * coef;
        q[k] += Complex64::new(1.0, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            let proj = w.dotc(&q) / wn;
            q -= w * proj;
            for b in &basis {
                let p = b.dotc(&q);
                q -= b * p;
            }
        }
        let norm = q.norm();
        basis.push(q / Complex64::new(norm, 0.0));
    }
    basis
}

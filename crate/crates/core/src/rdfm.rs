//! Resemblant decentralized fixed modes.
//!
//! When an approximate fixed mode has a bipartition whose certificate entries
//! are all small, zeroing them yields a nearby system on which the mode is an
//! exact decentralized fixed mode. The zeroing happens in canonical
//! coordinates and is mapped back through `T`.

use crate::error::{Error, Result};
use crate::fixedmode::{self, sort_by_cost, Bipartition, CertificateCosts, OracleConfig, OracleVerdict};
use crate::linalg::{self, CMatrix};
use crate::model::SystemModel;
use crate::overlap::InteractionPattern;
use crate::spectral::{self, CanonicalSystem, DEFAULT_CLUSTER_TOL};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeSet;

/// Bipartitions whose certificate cost is at most `epsilon`, cheapest first.
///
/// Stations whose `B~` first-row entries exceed `epsilon` are forced into
/// `gamma`, those whose `C~` first-column entries exceed it into `eta`; only
/// the remaining free stations are enumerated.
pub fn candidate_bipartitions(cs: &CanonicalSystem, epsilon: f64) -> Result<Vec<(Bipartition, f64)>> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let m = fixedmode::m_matrix(cs)?;
    let costs = CertificateCosts::new(cs, &m);
    let v = costs.stations();
    let mut forced_eta = Vec::new();
    let mut free = Vec::new();
    let mut feasible = true;
    for s in 1..=v {
        match (costs.b_row[s - 1] <= epsilon, costs.c_col[s - 1] <= epsilon) {
            (true, true) => free.push(s),
            (true, false) => forced_eta.push(s),
            (false, true) => {}
            (false, false) => feasible = false,
        }
    }
    let mut out = Vec::new();
    if feasible && free.len() < 63 {
        for mask in 0u64..(1u64 << free.len()) {
            let eta: Vec<usize> = forced_eta
                .iter()
                .copied()
                .chain(free.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &s)| s))
                .collect();
            if eta.is_empty() || eta.len() == v {
                continue;
            }
            let bip = Bipartition::new(eta, v)?;
            let cost = costs.cost(&bip);
            if cost <= epsilon {
                out.push((bip, cost));
            }
        }
    } else if feasible {
        return Err(Error::BudgetExceeded {
            stations: free.len(),
            cap: 62,
        });
    }
    if out.is_empty() {
        let minimal = costs.all()?.into_iter().map(|(_, c)| c).fold(f64::INFINITY, f64::min);
        return Err(Error::NoCandidate { epsilon, minimal });
    }
    sort_by_cost(&mut out);
    Ok(out)
}

/// Every bipartition with its certificate cost, cheapest first. The first
/// cost is the smallest `epsilon` that admits any candidate.
pub fn epsilon_scan(cs: &CanonicalSystem) -> Result<Vec<(Bipartition, f64)>> {
    let m = fixedmode::m_matrix(cs)?;
    let mut all = CertificateCosts::new(cs, &m).all()?;
    sort_by_cost(&mut all);
    Ok(all)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryChange {
    pub matrix: &'static str,
    pub row: usize,
    pub col: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationAdjustment {
    pub gamma_station: usize,
    pub eta_station: usize,
    /// Largest entry of `M[g, e]` absorbed into `D`.
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationRecord {
    pub epsilon: f64,
    pub bipartitions: Vec<Bipartition>,
    /// Largest zeroed `B~` first-row entry, per `eta` station.
    pub zeroed_b: Vec<(usize, f64)>,
    /// Largest zeroed `C~` first-column entry, per `gamma` station.
    pub zeroed_c: Vec<(usize, f64)>,
    pub d_adjustments: Vec<StationAdjustment>,
    pub delta_b_fro: f64,
    pub delta_c_fro: f64,
    pub delta_d_fro: f64,
    pub delta_total_fro: f64,
    /// Entries of the original `B`, `C`, `D` that moved, 0-based.
    pub changes: Vec<EntryChange>,
}

#[derive(Clone, Debug)]
pub struct PerturbedSystem {
    pub model: SystemModel,
    pub record: PerturbationRecord,
    pub target_sigma: Complex64,
    /// Cheapest certificate on the perturbed system.
    pub witness: Bipartition,
}

/// Perturbs the model so that every bipartition in `bips` certifies
/// `cs.sigma` exactly. Each must be admissible at `epsilon`.
pub fn make_rdfm(cs: &CanonicalSystem, bips: &[Bipartition], epsilon: f64) -> Result<PerturbedSystem> {
    if cs.sigma.im != 0.0 {
        return Err(Error::ComplexMode(cs.sigma));
    }
    if bips.is_empty() {
        return Err(Error::InvalidArgument("no bipartition to realize".into()));
    }
    let v = cs.station_count();
    let m = fixedmode::m_matrix(cs)?;
    let costs = CertificateCosts::new(cs, &m);
    for bip in bips {
        if bip.eta.len() + bip.gamma.len() != v || bip.eta.iter().chain(&bip.gamma).any(|&s| s == 0 || s > v) {
            return Err(Error::NotACandidate(format!("{bip} (system has {v} stations)")));
        }
        let cost = costs.cost(bip);
        if cost > epsilon {
            return Err(Error::NotACandidate(format!("{bip} (cost {cost:e} > epsilon {epsilon:e})")));
        }
    }

    let blocks = cs.model.station_blocks();
    let eta_all: BTreeSet<usize> = bips.iter().flat_map(|b| b.eta.iter().copied()).collect();
    let gamma_all: BTreeSet<usize> = bips.iter().flat_map(|b| b.gamma.iter().copied()).collect();
    let pairs: BTreeSet<(usize, usize)> = bips
        .iter()
        .flat_map(|b| b.gamma.iter().flat_map(move |&g| b.eta.iter().map(move |&e| (g, e))))
        .collect();

    let n = cs.states();
    let mut delta_bt = CMatrix::zeros(n, cs.b_tilde.ncols());
    for &e in &eta_all {
        for col in blocks[e - 1].inputs.clone() {
            delta_bt[(0, col)] = -cs.b_tilde[(0, col)];
        }
    }
    let mut delta_ct = CMatrix::zeros(cs.c_tilde.nrows(), n);
    for &g in &gamma_all {
        for row in blocks[g - 1].outputs.clone() {
            delta_ct[(row, 0)] = -cs.c_tilde[(row, 0)];
        }
    }
    let delta_b = (&cs.transform * &delta_bt).map(|z| z.re);
    let delta_c = (&delta_ct * &cs.transform_inv).map(|z| z.re);
    // M = C~ X B~ - D, so raising D[g, e] by M[g, e] zeroes that block
    let mut delta_d = DMatrix::<f64>::zeros(cs.model.d().nrows(), cs.model.d().ncols());
    for &(g, e) in &pairs {
        for row in blocks[g - 1].outputs.clone() {
            for col in blocks[e - 1].inputs.clone() {
                delta_d[(row, col)] = m.entries[(row, col)].re;
            }
        }
    }

    let original = &cs.model;
    let b_new = original.b() + &delta_b;
    let c_new = original.c() + &delta_c;
    let d_new = original.d() + &delta_d;
    let model = original
        .with_io(b_new, c_new, d_new)?
        .renamed(format!("{}-rdfm", original.name()));

    let record = PerturbationRecord {
        epsilon,
        bipartitions: bips.to_vec(),
        zeroed_b: eta_all.iter().map(|&e| (e, costs.b_row[e - 1])).collect(),
        zeroed_c: gamma_all.iter().map(|&g| (g, costs.c_col[g - 1])).collect(),
        d_adjustments: pairs
            .iter()
            .map(|&(g, e)| StationAdjustment {
                gamma_station: g,
                eta_station: e,
                magnitude: costs.m_block[g - 1][e - 1],
            })
            .collect(),
        delta_b_fro: delta_b.norm(),
        delta_c_fro: delta_c.norm(),
        delta_d_fro: delta_d.norm(),
        delta_total_fro: (delta_b.norm_squared() + delta_c.norm_squared() + delta_d.norm_squared()).sqrt(),
        changes: changed_entries("B", original.b(), model.b())
            .chain(changed_entries("C", original.c(), model.c()))
            .chain(changed_entries("D", original.d(), model.d()))
            .collect(),
    };

    let witness = verify_certificates(cs, &model, bips)?;
    Ok(PerturbedSystem {
        model,
        record,
        target_sigma: cs.sigma,
        witness,
    })
}

fn changed_entries<'a>(
    matrix: &'static str,
    before: &'a DMatrix<f64>,
    after: &'a DMatrix<f64>,
) -> impl Iterator<Item = EntryChange> + 'a {
    (0..before.nrows())
        .flat_map(move |r| (0..before.ncols()).map(move |c| (r, c)))
        .filter(move |&(r, c)| before[(r, c)] != after[(r, c)])
        .map(move |(row, col)| EntryChange {
            matrix,
            row,
            col,
            before: before[(row, col)],
            after: after[(row, col)],
        })
}

/// Zero tolerance for checking a certificate produced through `T`: the
/// default, widened in proportion to the data and the conditioning of `T`.
pub fn verification_tol(cs: &CanonicalSystem) -> f64 {
    let scale = 1.0
        + linalg::max_abs(&cs.b_tilde)
        + linalg::max_abs(&cs.c_tilde)
        + linalg::max_abs_real(cs.model.d())
        + linalg::max_abs(&cs.transform) * linalg::max_abs(&cs.transform_inv);
    fixedmode::DEFAULT_ZERO_TOL.max(1e-11 * scale)
}

/// Re-canonicalizes the perturbed model and checks each requested certificate.
fn verify_certificates(cs: &CanonicalSystem, model: &SystemModel, bips: &[Bipartition]) -> Result<Bipartition> {
    let fresh = spectral::canonicalize(model, cs.sigma, DEFAULT_CLUSTER_TOL)?;
    let tol = verification_tol(cs);
    let m = fixedmode::m_matrix(&fresh)?;
    let costs = CertificateCosts::new(&fresh, &m);
    for bip in bips {
        let residual = costs.cost(bip);
        if residual > tol {
            return Err(Error::Verification(format!(
                "{bip} leaves residual {residual:e} above {tol:e}"
            )));
        }
    }
    fixedmode::dfm_test(&fresh, tol)?
        .ok_or_else(|| Error::Verification("no certificate on the perturbed system".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaSummary {
    pub delta_b_fro: f64,
    pub delta_c_fro: f64,
    pub delta_d_fro: f64,
    pub delta_total_fro: f64,
    pub changed_entries: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RdfmVerification {
    pub sigma: Complex64,
    /// Certificate recomputed from scratch; `None` means the mode is not an
    /// exact fixed mode of the perturbed model.
    pub witness: Option<Bipartition>,
    pub oracle: OracleVerdict,
    pub delta_summary: DeltaSummary,
}

impl RdfmVerification {
    pub fn confirmed(&self) -> bool {
        self.witness.is_some() && self.oracle.fixed
    }
}

/// Independent confirmation: a fresh certificate search and the oracle under
/// decentralized feedback, with the perturbation magnitudes restated.
pub fn verify_rdfm(ps: &PerturbedSystem, cfg: &OracleConfig) -> Result<RdfmVerification> {
    let cs = spectral::canonicalize(&ps.model, ps.target_sigma, DEFAULT_CLUSTER_TOL)?;
    let witness = fixedmode::dfm_test(&cs, verification_tol(&cs))?;
    let pattern = InteractionPattern::decentralized(ps.model.station_count());
    let oracle = fixedmode::random_feedback_oracle(&ps.model, &pattern, ps.target_sigma, cfg)?;
    let r = &ps.record;
    Ok(RdfmVerification {
        sigma: ps.target_sigma,
        witness,
        oracle,
        delta_summary: DeltaSummary {
            delta_b_fro: r.delta_b_fro,
            delta_c_fro: r.delta_c_fro,
            delta_d_fro: r.delta_d_fro,
            delta_total_fro: r.delta_total_fro,
            changed_entries: r.changes.len(),
        },
    })
}

/// Perturbs for every bipartition admissible at `epsilon` at once.
pub fn make_rdfm_all(cs: &CanonicalSystem, epsilon: f64) -> Result<PerturbedSystem> {
    let bips: Vec<Bipartition> = candidate_bipartitions(cs, epsilon)?.into_iter().map(|(b, _)| b).collect();
    make_rdfm(cs, &bips, epsilon)
}

/// Perturbs for the cheapest bipartition admissible at `epsilon`.
pub fn make_rdfm_default(cs: &CanonicalSystem, epsilon: f64) -> Result<PerturbedSystem> {
    let (bip, _) = candidate_bipartitions(cs, epsilon)?.remove(0);
    make_rdfm(cs, &[bip], epsilon)
}

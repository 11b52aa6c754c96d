//! Exact and approximate decentralized fixed modes.
//!
//! Exact detection searches every station bipartition `(eta, gamma)` for the
//! certificate: the first row of `B~` is zero on the `eta` inputs, the first
//! column of `C~` is zero on the `gamma` outputs, and the block `M[gamma, eta]`
//! of
//!
//! ```text
//! M = C~ diag(0, (Ae - sigma I)^-1) B~ - D~
//! ```
//!
//! vanishes. The approximate measure is the smallest 2-norm condition number of
//! the bordered matrices `W_s(sigma)` over all nonempty station subsets `s`.
//! The randomized oracle closes the loop with sampled block-structured gains and
//! watches whether `sigma` moves; it can refute fixedness, never prove it.

use crate::error::{Error, Result};
use crate::linalg::{self, shifted, to_complex, CMatrix};
use crate::model::{BlockIndex, SystemModel};
use crate::overlap::InteractionPattern;
use crate::par;
use crate::spectral::{self, CanonicalSystem, Mode};
use itertools::Itertools;
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
pub const DEFAULT_RANK_TOL: f64 = 1e-12;
pub const DEFAULT_THRESHOLD: f64 = 1e3;
pub const DEFAULT_SUBSET_CAP: usize = 20;

/// Largest station count the bipartition search will enumerate.
const MAX_BIPARTITION_STATIONS: usize = 30;
const RESAMPLE_ATTEMPTS: usize = 16;

/// Split of the stations into an input side `eta` and an output side `gamma`.
/// Station numbers are 1-based and sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Bipartition {
    pub eta: Vec<usize>,
    pub gamma: Vec<usize>,
}

impl Bipartition {
    pub fn new(eta: impl IntoIterator<Item = usize>, stations: usize) -> Result<Self> {
        let eta: Vec<usize> = eta.into_iter().sorted().dedup().collect();
        if eta.is_empty() || eta.len() >= stations || eta.iter().any(|&s| s == 0 || s > stations) {
            return Err(Error::InvalidArgument(format!(
                "eta {eta:?} must be a nonempty proper subset of 1..={stations}"
            )));
        }
        let gamma = (1..=stations).filter(|s| !eta.contains(s)).collect();
        Ok(Self { eta, gamma })
    }

    fn from_mask(mask: u64, stations: usize) -> Self {
        let (eta, gamma) = (1..=stations).partition(|s| mask & (1 << (s - 1)) != 0);
        Self { eta, gamma }
    }

    pub fn w(&self) -> usize {
        self.eta.len()
    }

    /// Deterministic preference among equal-cost witnesses: smaller `eta`
    /// first, then lexicographic.
    pub(crate) fn tie_key(&self) -> (usize, &[usize]) {
        (self.eta.len(), &self.eta)
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eta={{{}}} gamma={{{}}}", self.eta.iter().join(","), self.gamma.iter().join(","))
    }
}

#[derive(Clone, Debug)]
pub struct MMatrix {
    pub entries: CMatrix,
    blocks: Vec<BlockIndex>,
}

impl MMatrix {
    /// `M[gamma, eta]`: rows of the `gamma` stations, columns of the `eta`
    /// stations, both concatenated in the given order.
    pub fn block(&self, gamma: &[usize], eta: &[usize]) -> CMatrix {
        let rows: Vec<usize> = gamma.iter().flat_map(|&g| self.blocks[g - 1].outputs.clone()).collect();
        let cols: Vec<usize> = eta.iter().flat_map(|&e| self.blocks[e - 1].inputs.clone()).collect();
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entries[(rows[i], cols[j])])
    }

    /// Single station-pair block `M[g, e]`.
    pub fn station_block(&self, g: usize, e: usize) -> CMatrix {
        self.block(&[g], &[e])
    }
}

pub fn m_matrix(cs: &CanonicalSystem) -> Result<MMatrix> {
    let n = cs.states();
    let blocks = cs.model.station_blocks().to_vec();
    if n == 1 {
        return Ok(MMatrix {
            entries: -cs.d_tilde.clone(),
            blocks,
        });
    }
    let shift = shifted(&cs.a_tilde, cs.sigma);
    let sv = linalg::singular_values(&shift)?;
    let sep = sv.last().copied().unwrap_or(0.0);
    if sep <= 1e-14 * sv[0].max(f64::MIN_POSITIVE) {
        return Err(Error::Internal(format!(
            "Ae - sigma I is singular at {}",
            crate::fmt_complex(cs.sigma)
        )));
    }
    let b_rest = cs.b_tilde.rows(1, n - 1).into_owned();
    let c_rest = cs.c_tilde.columns(1, n - 1).into_owned();
    let solved = shift
        .lu()
        .solve(&b_rest)
        .ok_or_else(|| Error::Internal("LU solve failed on Ae - sigma I".into()))?;
    Ok(MMatrix {
        entries: c_rest * solved - &cs.d_tilde,
        blocks,
    })
}

/// Per-station magnitudes entering the certificate, so the cost of any
/// bipartition is a max over precomputed numbers.
pub(crate) struct CertificateCosts {
    /// max |first-row entry of B~_i|
    pub b_row: Vec<f64>,
    /// max |first-column entry of C~_i|
    pub c_col: Vec<f64>,
    /// max |M[g, e]| entry, indexed `[g-1][e-1]`
    pub m_block: Vec<Vec<f64>>,
}

impl CertificateCosts {
    pub fn new(cs: &CanonicalSystem, m: &MMatrix) -> Self {
        let v = cs.station_count();
        let mag = |xs: Vec<Complex64>| xs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Self {
            b_row: (1..=v).map(|i| mag(cs.b_first_row(i))).collect(),
            c_col: (1..=v).map(|i| mag(cs.c_first_col(i))).collect(),
            m_block: (1..=v)
                .map(|g| (1..=v).map(|e| linalg::max_abs(&m.station_block(g, e))).collect())
                .collect(),
        }
    }

    pub fn stations(&self) -> usize {
        self.b_row.len()
    }

    /// Largest magnitude that must be zeroed for `bip` to certify a fixed mode.
    pub fn cost(&self, bip: &Bipartition) -> f64 {
        let b = bip.eta.iter().map(|&e| self.b_row[e - 1]);
        let c = bip.gamma.iter().map(|&g| self.c_col[g - 1]);
        let m = bip
            .gamma
            .iter()
            .flat_map(|&g| bip.eta.iter().map(move |&e| (g, e)))
            .map(|(g, e)| self.m_block[g - 1][e - 1]);
        b.chain(c).chain(m).fold(0.0, f64::max)
    }

    /// All `2^v - 2` bipartitions with their costs, in mask order.
    pub fn all(&self) -> Result<Vec<(Bipartition, f64)>> {
        let v = self.stations();
        if v > MAX_BIPARTITION_STATIONS {
            return Err(Error::BudgetExceeded {
                stations: v,
                cap: MAX_BIPARTITION_STATIONS,
            });
        }
        let count = (1usize << v) - 2;
        Ok(par::map_range(count, |k| {
            let bip = Bipartition::from_mask(k as u64 + 1, v);
            let cost = self.cost(&bip);
            (bip, cost)
        }))
    }
}

/// Sorts `(bipartition, cost)` pairs by cost, then `|eta|`, then `eta`.
pub(crate) fn sort_by_cost(list: &mut [(Bipartition, f64)]) {
    list.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.tie_key().cmp(&b.0.tie_key())));
}

/// Every bipartition certifying `cs.sigma` as a fixed mode at `zero_tol`,
/// cheapest first.
pub fn dfm_witnesses(cs: &CanonicalSystem, zero_tol: f64) -> Result<Vec<(Bipartition, f64)>> {
    let m = m_matrix(cs)?;
    let costs = CertificateCosts::new(cs, &m);
    let mut out: Vec<_> = costs.all()?.into_iter().filter(|(_, c)| *c <= zero_tol).collect();
    sort_by_cost(&mut out);
    Ok(out)
}

/// A certificate that `cs.sigma` is a decentralized fixed mode, if one exists.
pub fn dfm_test(cs: &CanonicalSystem, zero_tol: f64) -> Result<Option<Bipartition>> {
    Ok(dfm_witnesses(cs, zero_tol)?.into_iter().next().map(|(b, _)| b))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleConfig {
    pub trials: usize,
    pub gain_magnitude: f64,
    /// Defaults to `1e-8 * (1 + |sigma|)`.
    pub displacement_tol: Option<f64>,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            gain_magnitude: 1.0,
            displacement_tol: None,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn tolerance_for(&self, sigma: Complex64) -> f64 {
        self.displacement_tol.unwrap_or(1e-8 * (1.0 + sigma.norm()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleVerdict {
    pub fixed: bool,
    pub max_displacement: f64,
    pub trials: usize,
    pub gain_magnitude: f64,
    pub displacement_tol: f64,
}

/// Samples structured gains `K` (entries uniform in `[-g, g]` on the pattern's
/// blocks), closes `A + B K (I - D K)^-1 C` and records how far the closest
/// closed-loop eigenvalue sits from `sigma`. Trial `t` draws from ChaCha8
/// stream `t` of `seed`, so verdicts do not depend on scheduling.
pub fn random_feedback_oracle(
    model: &SystemModel,
    pattern: &InteractionPattern,
    sigma: Complex64,
    cfg: &OracleConfig,
) -> Result<OracleVerdict> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("oracle needs at least one trial".into()));
    }
    if pattern.stations() != model.station_count() {
        return Err(Error::Pattern(format!(
            "pattern is for {} stations, model has {}",
            pattern.stations(),
            model.station_count()
        )));
    }
    let displacements: Vec<f64> = par::map_range(cfg.trials, |t| oracle_trial(model, pattern, sigma, cfg, t))
        .into_iter()
        .collect::<Result<_>>()?;
    let max_displacement = displacements.into_iter().fold(0.0, f64::max);
    let tol = cfg.tolerance_for(sigma);
    Ok(OracleVerdict {
        fixed: max_displacement <= tol,
        max_displacement,
        trials: cfg.trials,
        gain_magnitude: cfg.gain_magnitude,
        displacement_tol: tol,
    })
}

fn oracle_trial(
    model: &SystemModel,
    pattern: &InteractionPattern,
    sigma: Complex64,
    cfg: &OracleConfig,
    trial: usize,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let blocks = model.station_blocks();
    let (m, r) = (model.b().ncols(), model.c().nrows());
    let g = cfg.gain_magnitude;
    for _ in 0..RESAMPLE_ATTEMPTS {
        let mut k = DMatrix::<f64>::zeros(m, r);
        for &(i, j) in pattern.links() {
            for row in blocks[i - 1].inputs.clone() {
                for col in blocks[j - 1].outputs.clone() {
                    k[(row, col)] = g * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
        }
        let loop_matrix = DMatrix::<f64>::identity(r, r) - model.d() * &k;
        let sv = loop_matrix.singular_values();
        let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
        if min <= 1e-10 * max {
            continue;
        }
        let Some(solved) = loop_matrix.lu().solve(model.c()) else {
            continue;
        };
        let closed = model.a() + model.b() * &k * solved;
        let schur = Schur::try_new(closed, f64::EPSILON, 10_000).ok_or(Error::EigenSolver)?;
        let displacement = schur
            .complex_eigenvalues()
            .iter()
            .map(|z| (z - sigma).norm())
            .fold(f64::INFINITY, f64::min);
        return Ok(displacement);
    }
    Err(Error::FeedbackSingular(RESAMPLE_ATTEMPTS))
}

/// Bordered matrix for a station subset (1-based, any order; used ascending):
///
/// ```text
/// [ A - sigma I   B_s1    B_s2    ... ]
/// [ C_s1          0       D_s1s2  ... ]
/// [ C_s2          D_s2s1  0       ... ]
/// ```
pub fn build_w(model: &SystemModel, subset: &[usize], sigma: Complex64) -> CMatrix {
    let subset: Vec<usize> = subset.iter().copied().sorted().dedup().collect();
    let n = model.states();
    let blocks = model.station_blocks();
    let widths: Vec<usize> = subset.iter().map(|&s| blocks[s - 1].inputs.len()).collect();
    let heights: Vec<usize> = subset.iter().map(|&s| blocks[s - 1].outputs.len()).collect();
    let rows = n + heights.iter().sum::<usize>();
    let cols = n + widths.iter().sum::<usize>();
    let mut w = CMatrix::zeros(rows, cols);
    w.view_mut((0, 0), (n, n)).copy_from(&shifted(&to_complex(model.a()), sigma));

    let col_offsets: Vec<usize> = widths.iter().scan(n, |acc, &x| {
        let start = *acc;
        *acc += x;
        Some(start)
    }).collect();
    let row_offsets: Vec<usize> = heights.iter().scan(n, |acc, &x| {
        let start = *acc;
        *acc += x;
        Some(start)
    }).collect();

    for (b, &s) in subset.iter().enumerate() {
        let bs = to_complex(&model.b_block(s));
        w.view_mut((0, col_offsets[b]), bs.shape()).copy_from(&bs);
        let cs = to_complex(&model.c_block(s));
        w.view_mut((row_offsets[b], 0), cs.shape()).copy_from(&cs);
    }
    for (a, &sa) in subset.iter().enumerate() {
        for (b, &sb) in subset.iter().enumerate() {
            if a == b {
                continue;
            }
            let d = to_complex(&model.d_block(sa, sb));
            w.view_mut((row_offsets[a], col_offsets[b]), d.shape()).copy_from(&d);
        }
    }
    w
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasureOptions {
    pub subset_cap: usize,
    pub rank_tol: f64,
    pub threshold: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            subset_cap: DEFAULT_SUBSET_CAP,
            rank_tol: DEFAULT_RANK_TOL,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetCondition {
    pub subset: Vec<usize>,
    #[serde(serialize_with = "crate::serde_ext::extended_real")]
    pub cond: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureResult {
    pub sigma: Complex64,
    #[serde(serialize_with = "crate::serde_ext::extended_real")]
    pub value: f64,
    pub argmin_subset: Vec<usize>,
    /// Every nonempty subset, ordered by size then lexicographically.
    pub table: Vec<SubsetCondition>,
    /// `value >= threshold`
    pub classified_adfm: bool,
    /// `value` is infinite: every `W_s(sigma)` is rank-deficient.
    pub exact_dfm: bool,
}

/// Nonempty station subsets (1-based) ordered by size then lexicographically.
pub fn station_subsets(stations: usize) -> Vec<Vec<usize>> {
    (1..=stations)
        .flat_map(|k| (1..=stations).combinations(k))
        .collect()
}

/// Condition-number measure: the minimum over all nonempty station subsets of
/// `cond(W_s(sigma))`.
pub fn adfm_measure(model: &SystemModel, sigma: Complex64, opts: &MeasureOptions) -> Result<MeasureResult> {
    let v = model.station_count();
    if v > opts.subset_cap {
        return Err(Error::BudgetExceeded {
            stations: v,
            cap: opts.subset_cap,
        });
    }
    let subsets = station_subsets(v);
    let table: Vec<SubsetCondition> = par::try_map(&subsets, |s| {
        let cond = linalg::condition_number(&build_w(model, s, sigma), opts.rank_tol)?;
        Ok::<_, Error>(SubsetCondition { subset: s.clone(), cond })
    })?;
    let best = table
        .iter()
        .reduce(|best, x| if x.cond < best.cond { x } else { best })
        .expect("at least one subset");
    let value = best.cond;
    Ok(MeasureResult {
        sigma,
        value,
        argmin_subset: best.subset.clone(),
        classified_adfm: value >= opts.threshold,
        exact_dfm: value.is_infinite(),
        table,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeMeasure {
    pub mode: Mode,
    pub measure: MeasureResult,
}

/// Measures every catalog mode. Conjugate pairs are evaluated once (at the
/// member with positive imaginary part) and mirrored.
pub fn classify_modes(model: &SystemModel, cluster_tol: f64, opts: &MeasureOptions) -> Result<Vec<ModeMeasure>> {
    let catalog = spectral::modes(model, cluster_tol)?;
    let primary: Vec<usize> = (0..catalog.len())
        .filter(|&k| catalog[k].value.im >= 0.0 || catalog[k].conjugate_partner.is_none())
        .collect();
    let measured: Vec<(usize, MeasureResult)> = primary
        .iter()
        .map(|&k| adfm_measure(model, catalog[k].value, opts).map(|m| (k, m)))
        .collect::<Result<_>>()?;
    let mut out: Vec<Option<MeasureResult>> = vec![None; catalog.len()];
    for (k, m) in measured {
        if let Some(partner) = catalog[k].conjugate_partner {
            if out[partner].is_none() && catalog[partner].value.im < 0.0 {
                let mut mirrored = m.clone();
                mirrored.sigma = m.sigma.conj();
                out[partner] = Some(mirrored);
            }
        }
        out[k] = Some(m);
    }
    Ok(catalog
        .into_iter()
        .zip(out)
        .map(|(mode, m)| ModeMeasure {
            mode,
            measure: m.expect("every mode measured or mirrored"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DEFAULT_CLUSTER_TOL;

    fn four_station() -> SystemModel {
        SystemModel::from_json_str(include_str!("../fixtures/four_station.json")).unwrap()
    }

    fn dfm2() -> SystemModel {
        SystemModel::from_json_str(include_str!("../fixtures/dfm2.json")).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn m11_by_hand() {
        // C_1 diag(0, 1, 1/2, 1/3) Bcol_1 - D_11 = (2*4 + 3*1/3) - (-5) = 14
        let cs = spectral::canonicalize(&four_station(), re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        let m = m_matrix(&cs).unwrap();
        assert!((m.entries[(0, 0)] - re(14.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_input_map_gives_minus_d() {
        let model = four_station();
        let zero_b = model.with_io(DMatrix::zeros(4, 4), model.c().clone(), model.d().clone()).unwrap();
        let cs = spectral::canonicalize(&zero_b, re(2.0), DEFAULT_CLUSTER_TOL).unwrap();
        let m = m_matrix(&cs).unwrap();
        assert_eq!(m.entries, -to_complex(model.d()));
    }

    #[test]
    fn block_extraction_reassembles() {
        let cs = spectral::canonicalize(&four_station(), re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        let m = m_matrix(&cs).unwrap();
        let bip = Bipartition::new([2, 4], 4).unwrap();
        let block = m.block(&bip.gamma, &bip.eta);
        assert_eq!(block.shape(), (2, 2));
        for (i, &g) in bip.gamma.iter().enumerate() {
            for (j, &e) in bip.eta.iter().enumerate() {
                assert_eq!(block[(i, j)], m.entries[(g - 1, e - 1)]);
            }
        }
    }

    #[test]
    fn four_station_sigma1_is_not_a_dfm() {
        let cs = spectral::canonicalize(&four_station(), re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(dfm_test(&cs, DEFAULT_ZERO_TOL).unwrap(), None);
    }

    #[test]
    fn constructed_dfm_has_witness() {
        let cs = spectral::canonicalize(&dfm2(), re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        let w = dfm_test(&cs, DEFAULT_ZERO_TOL).unwrap().unwrap();
        assert_eq!(w, Bipartition { eta: vec![1], gamma: vec![2] });
    }

    #[test]
    fn bipartition_validation() {
        assert!(Bipartition::new([1, 2], 2).is_err());
        assert!(Bipartition::new(Vec::<usize>::new(), 3).is_err());
        assert!(Bipartition::new([4], 3).is_err());
        assert_eq!(Bipartition::new([3, 1], 3).unwrap().gamma, vec![2]);
    }

    #[test]
    fn oracle_fixed_on_constructed_dfm() {
        let pattern = InteractionPattern::decentralized(2);
        let v = random_feedback_oracle(&dfm2(), &pattern, re(1.0), &OracleConfig::default()).unwrap();
        assert!(v.fixed);
        assert!(v.max_displacement <= 1e-9);
    }

    #[test]
    fn oracle_moves_free_mode() {
        let pattern = InteractionPattern::decentralized(4);
        let v = random_feedback_oracle(&four_station(), &pattern, re(2.0), &OracleConfig::default()).unwrap();
        assert!(!v.fixed);
        assert!(v.max_displacement > 1e-6);
    }

    #[test]
    fn oracle_with_zero_gain_sees_no_motion() {
        let pattern = InteractionPattern::decentralized(4);
        let cfg = OracleConfig {
            gain_magnitude: 0.0,
            trials: 5,
            ..OracleConfig::default()
        };
        let v = random_feedback_oracle(&four_station(), &pattern, re(2.0), &cfg).unwrap();
        assert_eq!(v.max_displacement, 0.0);
        assert!(v.fixed);
    }

    #[test]
    fn w_singleton_is_bordered() {
        let model = four_station();
        let w = build_w(&model, &[1], re(1.0));
        assert_eq!(w.shape(), (5, 5));
        assert_eq!(w[(4, 4)], re(0.0));
        assert_eq!(w[(0, 0)], re(0.0));
        assert_eq!(w[(1, 4)], re(4.0));
        assert_eq!(w[(4, 3)], re(3.0));
    }

    #[test]
    fn w_pair_has_cross_feedthrough() {
        let w = build_w(&four_station(), &[1, 2], re(1.0));
        assert_eq!(w.shape(), (6, 6));
        assert_eq!(w[(4, 4)], re(0.0));
        assert_eq!(w[(5, 5)], re(0.0));
        assert_eq!(w[(4, 5)], re(10.0));
        assert_eq!(w[(5, 4)], re(32.0));
    }

    #[test]
    fn two_station_table_has_three_entries() {
        let r = adfm_measure(&dfm2(), re(2.0), &MeasureOptions::default()).unwrap();
        let subsets: Vec<_> = r.table.iter().map(|e| e.subset.clone()).collect();
        assert_eq!(subsets, vec![vec![1], vec![2], vec![1, 2]]);
    }

    #[test]
    fn exact_dfm_measure_is_infinite() {
        let r = adfm_measure(&dfm2(), re(1.0), &MeasureOptions::default()).unwrap();
        assert!(r.value.is_infinite());
        assert!(r.exact_dfm && r.classified_adfm);
        assert!(r.table.iter().all(|e| e.cond.is_infinite()));
    }

    #[test]
    fn budget_is_enforced() {
        let opts = MeasureOptions {
            subset_cap: 3,
            ..MeasureOptions::default()
        };
        assert!(matches!(
            adfm_measure(&four_station(), re(1.0), &opts),
            Err(Error::BudgetExceeded { stations: 4, cap: 3 })
        ));
    }

    #[test]
    fn measure_is_min_of_its_table() {
        let r = adfm_measure(&four_station(), re(2.0), &MeasureOptions::default()).unwrap();
        let min = r.table.iter().map(|e| e.cond).fold(f64::INFINITY, f64::min);
        assert_eq!(r.value, min);
        let full = r.table.last().unwrap();
        assert_eq!(full.subset, vec![1, 2, 3, 4]);
        assert!(r.value <= full.cond);
    }

    #[test]
    fn classification_thresholds() {
        let model = four_station();
        let flagged = |t: f64| -> Vec<f64> {
            let opts = MeasureOptions {
                threshold: t,
                ..MeasureOptions::default()
            };
            classify_modes(&model, DEFAULT_CLUSTER_TOL, &opts)
                .unwrap()
                .into_iter()
                .filter(|m| m.measure.classified_adfm)
                .map(|m| m.mode.value.re)
                .collect()
        };
        assert_eq!(flagged(1e3), vec![1.0, 3.0]);
        assert!(flagged(1e6).is_empty());
    }

    #[test]
    fn constructed_dfm_flagged_regardless_of_threshold() {
        let opts = MeasureOptions {
            threshold: f64::MAX,
            ..MeasureOptions::default()
        };
        let classes = classify_modes(&dfm2(), DEFAULT_CLUSTER_TOL, &opts).unwrap();
        let one = classes.iter().find(|m| m.mode.value == re(1.0)).unwrap();
        assert!(one.measure.exact_dfm);
    }

    #[test]
    fn witness_survives_io_scaling() {
        let model = dfm2();
        // M scales by 3.5 * -0.25, so D follows
        let scaled = model
            .with_io(model.b() * 3.5, model.c() * -0.25, model.d() * -0.875)
            .unwrap();
        let cs = spectral::canonicalize(&scaled, re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        assert!(dfm_test(&cs, DEFAULT_ZERO_TOL).unwrap().is_some());
        let cs = spectral::canonicalize(&four_station(), re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        let scaled_ex = cs.model.with_io(cs.model.b() * 2.0, cs.model.c() * 3.0, cs.model.d() * 6.0).unwrap();
        let cs2 = spectral::canonicalize(&scaled_ex, re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
        assert!(dfm_test(&cs2, DEFAULT_ZERO_TOL).unwrap().is_none());
    }
}

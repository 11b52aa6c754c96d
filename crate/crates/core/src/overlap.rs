//! Overlapping interaction patterns.
//!
//! A pattern lists which output stations each input station may use. Expanding
//! a pattern duplicates input and output blocks so that every link `(i, j)`
//! becomes its own single-role station carrying `B_i` and `C_j`; the expanded
//! system is purely decentralized and the fixed-mode machinery applies to it
//! unchanged.

use crate::error::{Error, Result};
use crate::fixedmode::{self, adfm_measure, Bipartition, MeasureOptions, MeasureResult, OracleConfig, OracleVerdict};
use crate::model::{Station, StationPartition, SystemModel};
use crate::par;
use crate::spectral::{self, CanonicalSystem, DEFAULT_CLUSTER_TOL};
use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

/// Relative tolerance under which two measures rank as tied.
pub const RANK_TIE_TOL: f64 = 1e-9;

/// Set of links `(i, j)`: input station `i` uses output station `j`. The
/// diagonal links are always present.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InteractionPattern {
    stations: usize,
    links: BTreeSet<(usize, usize)>,
}

impl InteractionPattern {
    pub fn decentralized(stations: usize) -> Self {
        Self {
            stations,
            links: (1..=stations).map(|i| (i, i)).collect(),
        }
    }

    /// Decentralized pattern plus the given links.
    pub fn with_links(stations: usize, extra: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut p = Self::decentralized(stations);
        for (i, j) in extra {
            if i == 0 || j == 0 || i > stations || j > stations {
                return Err(Error::Pattern(format!(
                    "link K({i},{j}) is out of range for {stations} stations"
                )));
            }
            p.links.insert((i, j));
        }
        Ok(p)
    }

    /// Parses `K14,K41` (single-digit stations) or `K(12,3)`. An empty string
    /// or `-` is the decentralized pattern.
    pub fn parse(text: &str, stations: usize) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text == "-" {
            return Ok(Self::decentralized(stations));
        }
        let mut links = Vec::new();
        let mut rest = text;
        while !rest.is_empty() {
            rest = rest.trim_start_matches([',', ' ']);
            if rest.is_empty() {
                break;
            }
            let body = rest
                .strip_prefix(['K', 'k'])
                .ok_or_else(|| Error::Pattern(format!("expected 'K' at '{rest}'")))?;
            if let Some(inner) = body.strip_prefix('(') {
                let close = inner
                    .find(')')
                    .ok_or_else(|| Error::Pattern(format!("unclosed '(' in '{text}'")))?;
                let (i, j) = inner[..close]
                    .split_once(',')
                    .ok_or_else(|| Error::Pattern(format!("expected K(i,j) in '{text}'")))?;
                links.push((parse_station(i)?, parse_station(j)?));
                rest = &inner[close + 1..];
            } else {
                let digits: String = body.chars().take_while(char::is_ascii_digit).collect();
                if stations >= 10 {
                    return Err(Error::Pattern(format!(
                        "K{digits} is ambiguous with {stations} stations; write K(i,j)"
                    )));
                }
                if digits.len() != 2 {
                    return Err(Error::Pattern(format!("expected two station digits in 'K{digits}'")));
                }
                let b = digits.as_bytes();
                links.push(((b[0] - b'0') as usize, (b[1] - b'0') as usize));
                rest = &body[digits.len()..];
            }
        }
        Self::with_links(stations, links)
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    /// All links, diagonal included, in lexicographic order.
    pub fn links(&self) -> &BTreeSet<(usize, usize)> {
        &self.links
    }

    /// The overlapping links, lexicographic.
    pub fn off_diagonal(&self) -> Vec<(usize, usize)> {
        self.links.iter().copied().filter(|(i, j)| i != j).collect()
    }

    /// Number of overlapping links.
    pub fn alpha(&self) -> usize {
        self.links.iter().filter(|(i, j)| i != j).count()
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            stations: self.stations,
            links: self.links.union(&other.links).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.links.is_subset(&other.links)
    }

    /// Cardinality first, then lexicographic on the overlapping links.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.alpha()
            .cmp(&other.alpha())
            .then_with(|| self.off_diagonal().cmp(&other.off_diagonal()))
    }

    pub fn label(&self) -> String {
        let off = self.off_diagonal();
        if off.is_empty() {
            return "-".to_string();
        }
        off.iter().map(|&(i, j)| link_label(i, j, self.stations)).join(",")
    }
}

fn parse_station(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Pattern(format!("'{s}' is not a station number")))
}

pub fn link_label(i: usize, j: usize, stations: usize) -> String {
    if stations < 10 {
        format!("K{i}{j}")
    } else {
        format!("K({i},{j})")
    }
}

impl fmt::Display for InteractionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for InteractionPattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Clone, Debug)]
pub struct ExpandedSystem {
    pub model: SystemModel,
    /// Source link of each expanded station, lexicographic.
    pub station_map: Vec<(usize, usize)>,
    pub pattern: InteractionPattern,
}

/// Station `a = (i, j)` carries `B_i` and `C_j`; the feedthrough block between
/// expanded stations `a` and `b` is `D[j_a, i_b]`.
pub fn expand_structure(model: &SystemModel, pattern: &InteractionPattern) -> Result<ExpandedSystem> {
    let v = model.station_count();
    if pattern.stations() != v {
        return Err(Error::Pattern(format!(
            "pattern is for {} stations, model has {v}",
            pattern.stations()
        )));
    }
    let station_map: Vec<(usize, usize)> = pattern.links().iter().copied().collect();
    let stations = model.partition().stations();
    let partition = StationPartition::new(
        station_map
            .iter()
            .map(|&(i, j)| Station {
                inputs: stations[i - 1].inputs,
                outputs: stations[j - 1].outputs,
            })
            .collect(),
    )?;
    let b_blocks: Vec<DMatrix<f64>> = station_map.iter().map(|&(i, _)| model.b_block(i)).collect();
    let c_blocks: Vec<DMatrix<f64>> = station_map.iter().map(|&(_, j)| model.c_block(j)).collect();
    let b = DMatrix::from_columns(
        &b_blocks
            .iter()
            .flat_map(|blk| blk.column_iter().map(|c| c.into_owned()))
            .collect::<Vec<_>>(),
    );
    let c = DMatrix::from_rows(
        &c_blocks
            .iter()
            .flat_map(|blk| blk.row_iter().map(|r| r.into_owned()))
            .collect::<Vec<_>>(),
    );
    let blocks = partition.blocks();
    let mut d = DMatrix::zeros(partition.total_outputs(), partition.total_inputs());
    for (a, &(_, ja)) in station_map.iter().enumerate() {
        for (bi, &(ib, _)) in station_map.iter().enumerate() {
            let blk = model.d_block(ja, ib);
            d.view_mut((blocks[a].outputs.start, blocks[bi].inputs.start), blk.shape())
                .copy_from(&blk);
        }
    }
    let name = if pattern.alpha() == 0 {
        model.name().to_string()
    } else {
        format!("{}[{}]", model.name(), pattern.label())
    };
    let expanded = SystemModel::new(name, model.a().clone(), b, c, Some(d), partition)?;
    Ok(ExpandedSystem {
        model: expanded,
        station_map,
        pattern: pattern.clone(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FixedTestOptions {
    pub cluster_tol: f64,
    pub zero_tol: f64,
    /// Cross-check with the randomized oracle on the original model.
    pub oracle: Option<OracleConfig>,
}

impl Default for FixedTestOptions {
    fn default() -> Self {
        Self {
            cluster_tol: DEFAULT_CLUSTER_TOL,
            zero_tol: fixedmode::DEFAULT_ZERO_TOL,
            oracle: Some(OracleConfig::default()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructuredVerdict {
    pub pattern: InteractionPattern,
    /// Authoritative: a certificate exists on the expanded system.
    pub fixed: bool,
    /// Certificate in expanded-station numbering.
    pub witness: Option<Bipartition>,
    pub oracle: Option<OracleVerdict>,
}

impl StructuredVerdict {
    /// `false` when the oracle ran and reached the opposite verdict.
    pub fn agrees(&self) -> bool {
        self.oracle.as_ref().is_none_or(|o| o.fixed == self.fixed)
    }
}

/// Whether `sigma` stays fixed under feedback restricted to `pattern`.
pub fn structured_fixed_test(
    model: &SystemModel,
    pattern: &InteractionPattern,
    sigma: Complex64,
    opts: &FixedTestOptions,
) -> Result<StructuredVerdict> {
    let cs = spectral::canonicalize(model, sigma, opts.cluster_tol)?;
    structured_fixed_with(&cs, pattern, opts)
}

pub(crate) fn structured_fixed_with(
    cs: &CanonicalSystem,
    pattern: &InteractionPattern,
    opts: &FixedTestOptions,
) -> Result<StructuredVerdict> {
    let expanded = expand_structure(&cs.model, pattern)?;
    let ecs = cs.with_model(expanded.model);
    let witness = fixedmode::dfm_test(&ecs, opts.zero_tol)?;
    let oracle = opts
        .oracle
        .as_ref()
        .map(|cfg| fixedmode::random_feedback_oracle(&cs.model, pattern, cs.sigma, cfg))
        .transpose()?;
    Ok(StructuredVerdict {
        pattern: pattern.clone(),
        fixed: witness.is_some(),
        witness,
        oracle,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RemovalSets {
    pub sigma: Complex64,
    pub max_links: usize,
    /// Inclusion-minimal patterns that free `sigma`, by cardinality then
    /// lexicographic.
    pub sets: Vec<InteractionPattern>,
    pub advisory: Option<String>,
    /// Patterns where the oracle contradicted the certificate search.
    pub oracle_disagreements: Vec<InteractionPattern>,
}

/// Enumerates overlapping link sets of size `1..=max_links` and keeps those
/// that free `sigma` and contain no smaller kept set.
pub fn minimal_removal_sets(
    model: &SystemModel,
    sigma: Complex64,
    max_links: usize,
    opts: &FixedTestOptions,
) -> Result<RemovalSets> {
    if max_links == 0 {
        return Err(Error::InvalidArgument("max_links must be at least 1".into()));
    }
    let cs = spectral::canonicalize(model, sigma, opts.cluster_tol)?;
    let v = model.station_count();
    let mut out = RemovalSets {
        sigma: cs.sigma,
        max_links,
        sets: Vec::new(),
        advisory: None,
        oracle_disagreements: Vec::new(),
    };
    let base = structured_fixed_with(&cs, &InteractionPattern::decentralized(v), opts)?;
    if !base.agrees() {
        out.oracle_disagreements.push(base.pattern.clone());
    }
    if !base.fixed {
        out.advisory = Some(format!(
            "{} is not a decentralized fixed mode of '{}'; there is nothing to remove",
            crate::fmt_complex(cs.sigma),
            model.name()
        ));
        return Ok(out);
    }

    let off: Vec<(usize, usize)> = (1..=v)
        .cartesian_product(1..=v)
        .filter(|(i, j)| i != j)
        .collect();
    for k in 1..=max_links.min(off.len()) {
        let layer: Vec<InteractionPattern> = off
            .iter()
            .copied()
            .combinations(k)
            .map(|links| InteractionPattern::with_links(v, links))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| !out.sets.iter().any(|kept| kept.is_subset(p)))
            .collect();
        let verdicts = par::try_map(&layer, |p| structured_fixed_with(&cs, p, opts))?;
        for verdict in verdicts {
            if !verdict.agrees() {
                out.oracle_disagreements.push(verdict.pattern.clone());
            }
            if !verdict.fixed {
                out.sets.push(verdict.pattern);
            }
        }
    }
    if out.sets.is_empty() {
        out.advisory = Some(format!(
            "no link set of size <= {max_links} frees {}",
            crate::fmt_complex(cs.sigma)
        ));
    }
    Ok(out)
}

/// Cartesian product of per-mode choices, each candidate the union of its
/// parts; deduplicated, by cardinality then lexicographic.
pub fn combine_sets(per_mode: &[Vec<InteractionPattern>]) -> Result<Vec<InteractionPattern>> {
    if per_mode.is_empty() || per_mode.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("every mode needs at least one removal set".into()));
    }
    let v = per_mode[0][0].stations();
    if per_mode.iter().flatten().any(|p| p.stations() != v) {
        return Err(Error::Pattern("removal sets disagree on the station count".into()));
    }
    let mut out: Vec<InteractionPattern> = per_mode
        .iter()
        .map(|sets| sets.iter())
        .multi_cartesian_product()
        .map(|choice| {
            choice
                .into_iter()
                .fold(InteractionPattern::decentralized(v), |acc, p| acc.union(p))
        })
        .collect();
    out.sort_by(|a, b| a.canonical_cmp(b));
    out.dedup();
    Ok(out)
}

/// The measure of `sigma` when the controller may use `pattern`.
pub fn measure_under_pattern(
    model: &SystemModel,
    pattern: &InteractionPattern,
    sigma: Complex64,
    opts: &MeasureOptions,
) -> Result<MeasureResult> {
    let expanded = expand_structure(model, pattern)?;
    adfm_measure(&expanded.model, sigma, opts)
}

#[derive(Clone, Debug, Serialize)]
pub struct RankedCandidate {
    pub pattern: InteractionPattern,
    #[serde(serialize_with = "crate::serde_ext::extended_reals")]
    pub measures: Vec<f64>,
    #[serde(serialize_with = "crate::serde_ext::extended_real")]
    pub worst_case: f64,
    #[serde(serialize_with = "crate::serde_ext::extended_real")]
    pub sum: f64,
    pub cardinality: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankedSelection {
    pub target_modes: Vec<Complex64>,
    pub candidates: Vec<RankedCandidate>,
    pub ordering: &'static str,
    pub winner: InteractionPattern,
}

pub const ORDERING_RULE: &str =
    "worst_case asc, sum asc, cardinality asc, links lexicographic; measures within 1e-9 relative tie";

fn cmp_measure(a: f64, b: f64) -> Ordering {
    if a == b || (a - b).abs() <= RANK_TIE_TOL * a.abs().max(b.abs()) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Measures every candidate at every target mode and orders them.
pub fn rank_patterns(
    model: &SystemModel,
    candidates: &[InteractionPattern],
    target_modes: &[Complex64],
    opts: &MeasureOptions,
) -> Result<RankedSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate patterns to rank".into()));
    }
    if target_modes.is_empty() {
        return Err(Error::InvalidArgument("no target modes to rank against".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .cartesian_product(0..target_modes.len())
        .collect();
    let values = par::try_map(&jobs, |&(c, m)| {
        measure_under_pattern(model, &candidates[c], target_modes[m], opts).map(|r| r.value)
    })?;
    let mut ranked: Vec<RankedCandidate> = candidates
        .iter()
        .zip(values.chunks(target_modes.len()))
        .map(|(p, ms)| RankedCandidate {
            pattern: p.clone(),
            measures: ms.to_vec(),
            worst_case: ms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            sum: ms.iter().sum(),
            cardinality: p.alpha(),
        })
        .collect();
    ranked.sort_by(|a, b| {
        cmp_measure(a.worst_case, b.worst_case)
            .then_with(|| cmp_measure(a.sum, b.sum))
            .then_with(|| a.cardinality.cmp(&b.cardinality))
            .then_with(|| a.pattern.off_diagonal().cmp(&b.pattern.off_diagonal()))
    });
    Ok(RankedSelection {
        target_modes: target_modes.to_vec(),
        winner: ranked[0].pattern.clone(),
        candidates: ranked,
        ordering: ORDERING_RULE,
    })
}

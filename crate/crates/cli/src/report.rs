//! Report document shared by the JSON and text renderings.

use crate::args::{Format, GlobalArgs};
use adfm_core::fixedmode::MeasureResult;
use adfm_core::model::CentralReport;
use adfm_core::overlap::RemovalSets;
use adfm_core::rdfm::{PerturbationRecord, RdfmVerification};
use adfm_core::{Bipartition, Complex64, InteractionPattern, Mode, RankedSelection, SystemModel};
use serde::Serialize;
use std::fmt::Write;
use std::path::PathBuf;

#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub model: PathBuf,
    pub modes: Vec<String>,
    pub epsilon: Option<f64>,
    pub max_links: Option<u64>,
    pub all_candidates: bool,
    pub scan: bool,
    #[serde(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub states: usize,
    pub stations: usize,
    pub inputs: usize,
    pub outputs: usize,
}

impl ModelSummary {
    pub fn of(model: &SystemModel) -> Self {
        Self {
            name: model.name().to_string(),
            states: model.states(),
            stations: model.station_count(),
            inputs: model.b().ncols(),
            outputs: model.c().nrows(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MatrixEntry {
    pub sigma: Complex64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub witness: Option<Bipartition>,
}

#[derive(Debug, Serialize)]
pub struct BipartitionEntry {
    pub sigma: Complex64,
    pub eta: Vec<usize>,
    pub gamma: Vec<usize>,
    pub cost: f64,
    pub chosen: bool,
}

#[derive(Debug, Serialize)]
pub struct PerturbationEntry {
    pub sigma: Complex64,
    pub record: PerturbationRecord,
    pub verification: RdfmVerification,
    pub model_path: Option<PathBuf>,
    pub sidecar_path: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config: RunConfig,
    pub model: ModelSummary,
    pub modes: Option<Vec<Mode>>,
    pub measures: Option<Vec<MeasureResult>>,
    pub central: Option<CentralReport>,
    pub m_matrix: Option<MatrixEntry>,
    pub bipartitions: Option<Vec<BipartitionEntry>>,
    pub perturbation: Option<Vec<PerturbationEntry>>,
    pub removal_sets: Option<Vec<RemovalSets>>,
    pub candidates: Option<Vec<InteractionPattern>>,
    pub ranking: Option<RankedSelection>,
    pub advisories: Vec<String>,
}

impl Report {
    pub fn new(config: RunConfig, model: &SystemModel) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            config,
            model: ModelSummary::of(model),
            modes: None,
            measures: None,
            central: None,
            m_matrix: None,
            bipartitions: None,
            perturbation: None,
            removal_sets: None,
            candidates: None,
            ranking: None,
            advisories: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Text => render_text(self),
        }
    }
}

/// Six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

pub fn sig6_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        sig6(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", sig6(z.re), sig6(-z.im))
    } else {
        format!("{}+{}i", sig6(z.re), sig6(z.im))
    }
}

fn set(xs: &[usize]) -> String {
    format!("{{{}}}", xs.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let cols = header.len();
    let width: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let m = &r.model;
    let _ = writeln!(
        out,
        "model {}: {} states, {} stations, {} inputs, {} outputs",
        m.name, m.states, m.stations, m.inputs, m.outputs
    );

    if let (Some(modes), Some(measures)) = (&r.modes, &r.measures) {
        let _ = writeln!(out);
        let header = ["mode", "mult", "measure", "argmin", "class"].map(String::from);
        let rows: Vec<Vec<String>> = modes
            .iter()
            .zip(measures)
            .map(|(mode, ms)| {
                let class = if ms.exact_dfm {
                    "DFM"
                } else if ms.classified_adfm {
                    "ADFM"
                } else {
                    "-"
                };
                vec![
                    sig6_complex(mode.value),
                    mode.multiplicity.to_string(),
                    sig6(ms.value),
                    set(&ms.argmin_subset),
                    class.to_string(),
                ]
            })
            .collect();
        table(&mut out, &header, &rows);
    }

    if let Some(mm) = &r.m_matrix {
        let _ = writeln!(out, "\nM at sigma = {}", sig6_complex(mm.sigma));
        let rows: Vec<Vec<String>> = mm
            .re
            .iter()
            .zip(&mm.im)
            .map(|(re, im)| re.iter().zip(im).map(|(&a, &b)| sig6_complex(Complex64::new(a, b))).collect())
            .collect();
        if let Some(first) = rows.first() {
            let header: Vec<String> = (1..=first.len()).map(|j| format!("[{j}]")).collect();
            table(&mut out, &header, &rows);
        }
        match &mm.witness {
            Some(w) => {
                let _ = writeln!(out, "exact fixed mode, certificate {w}");
            }
            None => {
                let _ = writeln!(out, "no certificate: not an exact fixed mode");
            }
        }
    }

    if let Some(bips) = &r.bipartitions {
        let _ = writeln!(out, "\nbipartitions");
        let header = ["sigma", "eta", "gamma", "cost", ""].map(String::from);
        let rows: Vec<Vec<String>> = bips
            .iter()
            .map(|b| {
                vec![
                    sig6_complex(b.sigma),
                    set(&b.eta),
                    set(&b.gamma),
                    sig6(b.cost),
                    if b.chosen { "chosen".into() } else { String::new() },
                ]
            })
            .collect();
        table(&mut out, &header, &rows);
    }

    if let Some(list) = &r.perturbation {
        for p in list {
            let rec = &p.record;
            let _ = writeln!(
                out,
                "\nperturbation for sigma = {} at epsilon = {}",
                sig6_complex(p.sigma),
                sig6(rec.epsilon)
            );
            for c in &rec.changes {
                let _ = writeln!(
                    out,
                    "  {}[{},{}]: {} -> {}",
                    c.matrix,
                    c.row + 1,
                    c.col + 1,
                    sig6(c.before),
                    sig6(c.after)
                );
            }
            let _ = writeln!(
                out,
                "  |dB|_F = {}  |dC|_F = {}  |dD|_F = {}  total = {}",
                sig6(rec.delta_b_fro),
                sig6(rec.delta_c_fro),
                sig6(rec.delta_d_fro),
                sig6(rec.delta_total_fro)
            );
            let v = &p.verification;
            let _ = writeln!(
                out,
                "  certificate: {}; oracle: {} (max displacement {} over {} trials)",
                v.witness.as_ref().map(|w| w.to_string()).unwrap_or_else(|| "none".into()),
                if v.oracle.fixed { "fixed" } else { "moved" },
                sig6(v.oracle.max_displacement),
                v.oracle.trials
            );
            if let Some(path) = &p.model_path {
                let _ = writeln!(out, "  wrote {}", path.display());
            }
            if let Some(path) = &p.sidecar_path {
                let _ = writeln!(out, "  wrote {}", path.display());
            }
        }
    }

    if let Some(sets) = &r.removal_sets {
        for s in sets {
            let listed: Vec<String> = s.sets.iter().map(|p| format!("{{{p}}}")).collect();
            let _ = writeln!(
                out,
                "\nremoval sets for sigma = {} (max {} links): {}",
                sig6_complex(s.sigma),
                s.max_links,
                if listed.is_empty() { "none".into() } else { listed.join(" ") }
            );
            for p in &s.oracle_disagreements {
                let _ = writeln!(out, "  oracle disagrees on {{{p}}}");
            }
        }
    }

    if let Some(rank) = &r.ranking {
        let _ = writeln!(out, "\nranking ({})", rank.ordering);
        let mut header = vec!["pattern".to_string()];
        header.extend(rank.target_modes.iter().map(|z| format!("D({})", sig6_complex(*z))));
        header.extend(["worst", "sum", "links"].map(String::from));
        let rows: Vec<Vec<String>> = rank
            .candidates
            .iter()
            .map(|c| {
                let mut row = vec![format!("{{{}}}", c.pattern)];
                row.extend(c.measures.iter().map(|&x| sig6(x)));
                row.extend([sig6(c.worst_case), sig6(c.sum), c.cardinality.to_string()]);
                row
            })
            .collect();
        table(&mut out, &header, &rows);
        let _ = writeln!(out, "winner: {{{}}}", rank.winner);
    }

    if !r.advisories.is_empty() {
        let _ = writeln!(out);
        for a in &r.advisories {
            let _ = writeln!(out, "note: {a}");
        }
    }
    out
}

use crate::args::{Cli, Command};
use crate::error::CliError;
use crate::report::{BipartitionEntry, MatrixEntry, PerturbationEntry, Report, RunConfig};
use crate::select::match_mode;
use adfm_core::fixedmode::{dfm_test, DEFAULT_RANK_TOL, DEFAULT_ZERO_TOL};
use adfm_core::model::DEFAULT_PBH_TOL;
use adfm_core::overlap::FixedTestOptions;
use adfm_core::rdfm::{epsilon_scan, verify_rdfm, PerturbedSystem};
use adfm_core::spectral::DEFAULT_CLUSTER_TOL;
use adfm_core::{
    candidate_bipartitions, canonicalize, central_check, classify_modes, combine_sets, fmt_complex, m_matrix,
    make_rdfm, minimal_removal_sets, modes, rank_patterns, Bipartition, Complex64, MeasureOptions, OracleConfig,
    SystemModel,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// What `main` writes: the rendered report and where it goes.
pub struct Outcome {
    pub report: Report,
    /// Report destination; `None` is stdout.
    pub report_path: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let g = cli.global.clone();
    let (model_path, selectors, epsilon, max_links, all_candidates, scan) = match &cli.command {
        Command::Analyze { model } => (model, vec![], None, None, false, false),
        Command::Mmatrix { model, mode } => (model, vec![mode.clone()], None, None, false, false),
        Command::Rdfm {
            model,
            mode,
            epsilon,
            all_candidates,
            scan,
        } => (model, vec![mode.clone()], *epsilon, None, *all_candidates, *scan),
        Command::Select {
            model,
            modes,
            epsilon,
            max_links,
        } => (model, modes.clone(), Some(*epsilon), Some(*max_links), false, false),
    };
    if let Some(eps) = epsilon {
        if !eps.is_finite() || eps < 0.0 {
            return Err(CliError::Usage(format!("--epsilon must be a finite nonnegative number, got {eps}")));
        }
    }
    if g.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let config = RunConfig {
        command: cli.command.name(),
        model: model_path.clone(),
        modes: selectors.clone(),
        epsilon,
        max_links,
        all_candidates,
        scan,
        global: g.clone(),
    };
    let model = SystemModel::load(model_path)?;
    let mut report = Report::new(config, &model);
    let ctx = Context::new(&cli, &model);

    let mut report_path = g.output.clone();
    match &cli.command {
        Command::Analyze { .. } => analyze(&ctx, &mut report)?,
        Command::Mmatrix { mode, .. } => mmatrix(&ctx, mode, &mut report)?,
        Command::Rdfm { mode, .. } => {
            report_path = None;
            if scan {
                rdfm_scan(&ctx, mode, &mut report)?;
            } else {
                let eps = epsilon.ok_or_else(|| CliError::Usage("--epsilon is required".into()))?;
                rdfm(&ctx, mode, eps, all_candidates, g.output.as_deref(), &mut report)?;
            }
        }
        Command::Select {
            modes, epsilon, max_links, ..
        } => select(&ctx, modes, *epsilon, *max_links as usize, &mut report)?,
    }
    Ok(Outcome { report, report_path })
}

struct Context<'a> {
    model: &'a SystemModel,
    measure: MeasureOptions,
    oracle: OracleConfig,
    mode_tol: f64,
}

impl<'a> Context<'a> {
    fn new(cli: &Cli, model: &'a SystemModel) -> Self {
        let g = &cli.global;
        Self {
            model,
            measure: MeasureOptions {
                subset_cap: g.subset_cap,
                rank_tol: DEFAULT_RANK_TOL,
                threshold: g.threshold,
            },
            oracle: OracleConfig {
                trials: g.trials,
                seed: g.seed,
                ..OracleConfig::default()
            },
            mode_tol: g.mode_tol * model.a().norm().max(1.0),
        }
    }

    fn mode(&self, selector: &str) -> Result<Complex64, CliError> {
        let catalog = modes(self.model, DEFAULT_CLUSTER_TOL)?;
        Ok(match_mode(&catalog, selector, self.mode_tol)?.value)
    }
}

fn analyze(ctx: &Context, report: &mut Report) -> Result<(), CliError> {
    let classes = classify_modes(ctx.model, DEFAULT_CLUSTER_TOL, &ctx.measure)?;
    let central = central_check(ctx.model, DEFAULT_PBH_TOL)?;
    report.advisories.extend(central.warnings());
    let (modes, measures) = classes.into_iter().map(|c| (c.mode, c.measure)).unzip();
    report.modes = Some(modes);
    report.measures = Some(measures);
    report.central = Some(central);
    Ok(())
}

fn mmatrix(ctx: &Context, selector: &str, report: &mut Report) -> Result<(), CliError> {
    let sigma = ctx.mode(selector)?;
    let cs = canonicalize(ctx.model, sigma, DEFAULT_CLUSTER_TOL)?;
    let m = m_matrix(&cs)?;
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        m.entries
            .row_iter()
            .map(|r| r.iter().map(f).collect())
            .collect()
    };
    report.m_matrix = Some(MatrixEntry {
        sigma: cs.sigma,
        re: rows(|z| z.re),
        im: rows(|z| z.im),
        witness: dfm_test(&cs, DEFAULT_ZERO_TOL)?,
    });
    Ok(())
}

fn rdfm_scan(ctx: &Context, selector: &str, report: &mut Report) -> Result<(), CliError> {
    let sigma = ctx.mode(selector)?;
    let cs = canonicalize(ctx.model, sigma, DEFAULT_CLUSTER_TOL)?;
    let scan = epsilon_scan(&cs)?;
    if let Some((best, eps)) = scan.first() {
        report
            .advisories
            .push(format!("smallest admissible epsilon is {eps:e}, for {best}"));
    }
    report.bipartitions = Some(
        scan.into_iter()
            .map(|(b, cost)| BipartitionEntry {
                sigma: cs.sigma,
                eta: b.eta,
                gamma: b.gamma,
                cost,
                chosen: false,
            })
            .collect(),
    );
    Ok(())
}

/// Admissible bipartitions at `epsilon`, and the ones to perturb for.
fn choose(
    ctx: &Context,
    sigma: Complex64,
    epsilon: f64,
    all: bool,
) -> Result<(Vec<BipartitionEntry>, PerturbedSystem), CliError> {
    let cs = canonicalize(ctx.model, sigma, DEFAULT_CLUSTER_TOL)?;
    if cs.sigma.im != 0.0 {
        return Err(adfm_core::Error::ComplexMode(cs.sigma).into());
    }
    let cands = candidate_bipartitions(&cs, epsilon)?;
    let chosen: Vec<Bipartition> = if all {
        cands.iter().map(|(b, _)| b.clone()).collect()
    } else {
        vec![cands[0].0.clone()]
    };
    let ps = make_rdfm(&cs, &chosen, epsilon)?;
    let entries = cands
        .into_iter()
        .map(|(b, cost)| BipartitionEntry {
            sigma: cs.sigma,
            chosen: chosen.contains(&b),
            eta: b.eta,
            gamma: b.gamma,
            cost,
        })
        .collect();
    Ok((entries, ps))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    source_model: &'a Path,
    perturbed_model: &'a Path,
    entry: &'a PerturbationEntry,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.perturbation.json"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn rdfm(
    ctx: &Context,
    selector: &str,
    epsilon: f64,
    all: bool,
    output: Option<&Path>,
    report: &mut Report,
) -> Result<(), CliError> {
    let sigma = ctx.mode(selector)?;
    let (entries, ps) = choose(ctx, sigma, epsilon, all)?;
    let verification = verify_rdfm(&ps, &ctx.oracle)?;
    let confirmed = verification.confirmed();
    let mut entry = PerturbationEntry {
        sigma: ps.target_sigma,
        record: ps.record.clone(),
        verification,
        model_path: None,
        sidecar_path: None,
    };
    if let Some(path) = output {
        let side = sidecar_path(path);
        entry.model_path = Some(path.to_path_buf());
        entry.sidecar_path = Some(side.clone());
        write_file(path, &(ps.model.to_json_string() + "\n"))?;
        let sidecar = Sidecar {
            version: env!("CARGO_PKG_VERSION"),
            source_model: &report.config.model,
            perturbed_model: path,
            entry: &entry,
        };
        write_file(&side, &(serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n"))?;
    }
    report.bipartitions = Some(entries);
    report.perturbation = Some(vec![entry]);
    if !confirmed {
        return Err(CliError::Unconfirmed(format!(
            "{} is not confirmed as a fixed mode of the perturbed model",
            fmt_complex(ps.target_sigma)
        )));
    }
    Ok(())
}

fn select(
    ctx: &Context,
    selectors: &[String],
    epsilon: f64,
    max_links: usize,
    report: &mut Report,
) -> Result<(), CliError> {
    let mut targets: Vec<Complex64> = Vec::new();
    for s in selectors {
        let z = ctx.mode(s)?;
        if !targets.contains(&z) {
            targets.push(z);
        }
    }
    let opts = FixedTestOptions {
        oracle: Some(ctx.oracle),
        ..FixedTestOptions::default()
    };
    let mut bipartitions = Vec::new();
    let mut perturbations = Vec::new();
    let mut removal = Vec::new();
    for &sigma in &targets {
        let (entries, ps) = choose(ctx, sigma, epsilon, true)?;
        let verification = verify_rdfm(&ps, &ctx.oracle)?;
        let sets = minimal_removal_sets(&ps.model, ps.target_sigma, max_links, &opts)?;
        if !sets.oracle_disagreements.is_empty() {
            report.advisories.push(format!(
                "oracle disagrees with the certificate search at sigma = {} on {} pattern(s)",
                fmt_complex(sigma),
                sets.oracle_disagreements.len()
            ));
        }
        bipartitions.extend(entries);
        perturbations.push(PerturbationEntry {
            sigma: ps.target_sigma,
            record: ps.record,
            verification,
            model_path: None,
            sidecar_path: None,
        });
        removal.push(sets);
    }
    report.bipartitions = Some(bipartitions);
    report.perturbation = Some(perturbations);
    if let Some(empty) = removal.iter().find(|r| r.sets.is_empty()) {
        let why = empty.advisory.clone().unwrap_or_default();
        report.removal_sets = Some(removal);
        return Err(CliError::NoRemovalSet(why));
    }
    let per_mode: Vec<_> = removal.iter().map(|r| r.sets.clone()).collect();
    report.removal_sets = Some(removal);
    let candidates = combine_sets(&per_mode)?;
    let ranking = rank_patterns(ctx.model, &candidates, &targets, &ctx.measure)?;
    report.candidates = Some(candidates);
    report.ranking = Some(ranking);
    Ok(())
}

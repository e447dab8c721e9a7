//! The `density`, `phase-sweep`, `qgraph` and `scatter` commands.

use std::path::PathBuf;

use acstab_core::green::{free_fixed_point, SpectralPoint};
use acstab_core::qgraph::{band_edge_scan, measure_from_medians, qg_point_medians, regular_bands, MeasureRow};
use acstab_core::scattering::{equivalence_scan, EquivalenceReport};
use acstab_core::stats::stream_seed;
use serde::Serialize;

use crate::config::{ExperimentConfig, Model};
use crate::error::CliResult;
use crate::output::{self, num, CheckRecord, OutDir};
use crate::parallel::Workers;
use crate::sampling::{free_tree, root_values, tree_grid, GridValue};

/// Files written by a command and a short human summary.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// Verification records, for `verify`.
    pub records: Vec<CheckRecord>,
}

impl Outcome {
    /// `ChecksFailed` when any verification record failed.
    pub fn check_status(&self) -> CliResult<()> {
        let failed = self.records.iter().filter(|r| !r.pass).count();
        if failed > 0 {
            Err(crate::error::CliError::ChecksFailed {
                failed,
                total: self.records.len(),
            })
        } else {
            Ok(())
        }
    }
}

fn out_dir(cfg: &ExperimentConfig) -> CliResult<OutDir> {
    OutDir::new(&cfg.output.dir)
}

pub fn density(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Outcome> {
    cfg.require_model(Model::Tree, "density")?;
    let values = tree_grid(cfg, workers)?;
    let dir = out_dir(cfg)?;
    let stem = cfg.stem();
    let pi = std::f64::consts::PI;
    let rows: Vec<Vec<String>> = values
        .iter()
        .map(|v| {
            vec![
                num(v.energy),
                num(v.lambda),
                num(v.eta),
                num(v.mean_im / pi),
                num(v.stderr / pi),
            ]
        })
        .collect();
    let mut out = Outcome::default();
    out.files.push(dir.write(
        &format!("{stem}_density.csv"),
        &output::csv("density", cfg, &["E", "lambda", "eta", "density", "stderr"], &rows),
    )?);
    if cfg.output.svg {
        let series = per_lambda(cfg, &values, |v| v.mean_im / pi);
        let svg = output::line_plot(
            &format!("{}: root spectral density", cfg.experiment),
            "E",
            "Im Γ₀ / π",
            &series,
            cfg.output.width,
            cfg.output.height,
        );
        out.files.push(dir.write(&format!("{stem}_density.svg"), &svg)?);
    }
    out.summary.push(format!("{} grid points", values.len()));
    Ok(out)
}

fn per_lambda(cfg: &ExperimentConfig, values: &[GridValue], f: impl Fn(&GridValue) -> f64) -> Vec<(String, Vec<f64>, Vec<f64>)> {
    let n = cfg.grid.energies().len();
    cfg.grid
        .lambdas
        .iter()
        .enumerate()
        .map(|(li, l)| {
            let row = &values[li * n..(li + 1) * n];
            (format!("λ = {l}"), row.iter().map(|v| v.energy).collect(), row.iter().map(&f).collect())
        })
        .collect()
}

pub fn phase_sweep(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Outcome> {
    cfg.require_model(Model::Tree, "phase-sweep")?;
    let values = tree_grid(cfg, workers)?;
    let dir = out_dir(cfg)?;
    let stem = cfg.stem();
    let rows: Vec<Vec<String>> = values
        .iter()
        .map(|v| {
            vec![
                num(v.energy),
                num(v.lambda),
                num(v.eta),
                num(v.mean_im),
                num(v.stderr),
                num(v.median_im),
            ]
        })
        .collect();
    let mut out = Outcome::default();
    out.files.push(dir.write(
        &format!("{stem}_phase.csv"),
        &output::csv("phase-sweep", cfg, &["E", "lambda", "eta", "im_gamma", "stderr", "median_im_gamma"], &rows),
    )?);

    let k = cfg.tree.branching;
    let peak = free_fixed_point(k, SpectralPoint::new(0.0, 0.0)?)?.im();
    if cfg.output.svg {
        let n = cfg.grid.energies().len();
        let grid: Vec<Vec<f64>> = values.chunks(n).map(|row| row.iter().map(|v| v.median_im).collect()).collect();
        let (sk, k1) = (2.0 * (k as f64).sqrt(), (k + 1) as f64);
        let guides = vec![
            (-k1, format!("−{}", k + 1)),
            (-sk, format!("−2√{k}")),
            (sk, format!("2√{k}")),
            (k1, format!("{}", k + 1)),
        ];
        // Rows bottom-up in increasing λ.
        let mut order: Vec<usize> = (0..cfg.grid.lambdas.len()).collect();
        order.sort_by(|&a, &b| cfg.grid.lambdas[a].total_cmp(&cfg.grid.lambdas[b]));
        let lambdas: Vec<f64> = order.iter().map(|&i| cfg.grid.lambdas[i]).collect();
        let grid: Vec<Vec<f64>> = order.iter().map(|&i| grid[i].clone()).collect();
        let svg = output::heatmap(
            &format!("{}: median Im Γ₀", cfg.experiment),
            "E",
            "λ",
            &cfg.grid.energies(),
            &lambdas,
            &grid,
            peak,
            &guides,
            cfg.output.width,
            cfg.output.height,
        );
        out.files.push(dir.write(&format!("{stem}_phase.svg"), &svg)?);
    }
    out.summary.push(format!("{} grid points, color scale clipped at {peak}", values.len()));
    Ok(out)
}

pub fn qgraph(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Outcome> {
    cfg.require_model(Model::Qgraph, "qgraph")?;
    let q = &cfg.qgraph;
    let dir = out_dir(cfg)?;
    let stem = cfg.stem();
    let mut out = Outcome::default();

    let bands = regular_bands(q.branching, q.length, q.bands)?;
    let rows: Vec<Vec<String>> = bands
        .bands
        .iter()
        .map(|b| vec![b.n.to_string(), num(b.k_lo), num(b.k_hi), num(b.e_lo), num(b.e_hi)])
        .collect();
    out.files.push(dir.write(
        &format!("{stem}_bands.csv"),
        &output::csv("qgraph", cfg, &["n", "k_lo", "k_hi", "E_lo", "E_hi"], &rows),
    )?);

    // The scan runs from inside the first gap to the middle of the gap after the last band.
    let range = (1e-3 / q.length, q.bands as f64 * std::f64::consts::PI / q.length);
    let scanned = band_edge_scan(q.branching, q.length, range, q.scan_points, q.scan_eta, q.scan_threshold)?;
    let rows: Vec<Vec<String>> = bands
        .bands
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let (lo, hi) = scanned.get(i).copied().unwrap_or((f64::NAN, f64::NAN));
            let dev = (lo - b.k_lo).abs().max((hi - b.k_hi).abs());
            vec![b.n.to_string(), num(b.k_lo), num(b.k_hi), num(lo), num(hi), num(dev)]
        })
        .collect();
    out.files.push(dir.write(
        &format!("{stem}_edges.csv"),
        &output::csv("qgraph", cfg, &["n", "k_lo", "k_hi", "scan_k_lo", "scan_k_hi", "max_dev"], &rows),
    )?);
    out.summary.push(format!("{} bands, {} scanned", bands.bands.len(), scanned.len()));

    let measures = qg_measures(cfg, workers)?;
    let rows: Vec<Vec<String>> = measures
        .iter()
        .map(|m| vec![num(m.lambda), num(m.measure), num(m.stderr)])
        .collect();
    out.files.push(dir.write(
        &format!("{stem}_measures.csv"),
        &output::csv("qgraph", cfg, &["lambda", "measure", "stderr"], &rows),
    )?);
    if cfg.output.svg {
        let series = vec![(
            "ac measure".to_string(),
            measures.iter().map(|m| m.lambda).collect(),
            measures.iter().map(|m| m.measure).collect(),
        )];
        let svg = output::line_plot(
            &format!("{}: ac measure on [{}, {}]", cfg.experiment, cfg.grid.energy_min, cfg.grid.energy_max),
            "λ",
            "measure",
            &series,
            cfg.output.width,
            cfg.output.height,
        );
        out.files.push(dir.write(&format!("{stem}_measures.svg"), &svg)?);
    }
    for m in &measures {
        out.summary.push(format!("λ = {}: measure {} ± {}", m.lambda, m.measure, m.stderr));
    }
    Ok(out)
}

/// ac-measure ladder over `grid.lambdas`; streams match the sequential core routine.
pub fn qg_measures(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Vec<MeasureRow>> {
    let q = &cfg.qgraph;
    let eta = cfg.positive_eta()?;
    let energies = cfg.grid.energies();
    let lambdas = &cfg.grid.lambdas;
    let idx = crate::sampling::grid_indices(cfg);
    let medians = workers.map(&idx, |_, &(li, ei)| {
        let z = SpectralPoint::new(energies[ei], eta)?;
        let seed = stream_seed(cfg.seed, li as u64, ei as u64);
        Ok(qg_point_medians(q.branching, q.length, lambdas[li], q.family, q.alpha_root, z, q.pool, seed)?)
    })?;
    lambdas
        .iter()
        .zip(medians.chunks(energies.len()))
        .map(|(&lambda, m)| {
            let (measure, stderr) = measure_from_medians(&energies, m, q.threshold)?;
            Ok(MeasureRow { lambda, measure, stderr })
        })
        .collect()
}

#[derive(Serialize)]
struct ScatterSummary {
    lambda: f64,
    threshold: f64,
    disagreements: usize,
    max_abs_r: f64,
}

/// Equivalence scan for the λ at index `li`.
pub fn scatter_report(cfg: &ExperimentConfig, workers: Workers, li: usize) -> CliResult<EquivalenceReport> {
    let s = &cfg.scattering;
    let gammas = root_values(cfg, workers, li)?;
    let threshold = if free_tree(cfg, cfg.grid.lambdas[li]) { 0.0 } else { s.threshold };
    Ok(equivalence_scan(&cfg.grid.energies(), &gammas, s.k, s.t, threshold)?)
}

pub fn scatter(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Outcome> {
    cfg.require_model(Model::Scattering, "scatter")?;
    let dir = out_dir(cfg)?;
    let stem = cfg.stem();
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    for (li, &lambda) in cfg.grid.lambdas.iter().enumerate() {
        let rep = scatter_report(cfg, workers, li)?;
        for r in &rep.rows {
            rows.push(vec![
                num(r.energy),
                num(lambda),
                num(r.k),
                num(r.c),
                num(r.re_r),
                num(r.im_r),
                num(r.abs_r),
                num(r.im_gamma),
            ]);
        }
        series.push((
            format!("λ = {lambda}"),
            rep.rows.iter().map(|r| r.energy).collect(),
            rep.rows.iter().map(|r| r.abs_r).collect(),
        ));
        out.summary.push(format!(
            "λ = {lambda}: {} disagreements, max |r| = {}",
            rep.disagreements, rep.max_abs_r
        ));
        summary.push(ScatterSummary {
            lambda,
            threshold: rep.threshold,
            disagreements: rep.disagreements,
            max_abs_r: rep.max_abs_r,
        });
    }
    out.files.push(dir.write(
        &format!("{stem}_scatter.csv"),
        &output::csv(
            "scatter",
            cfg,
            &["E", "lambda", "k", "C", "re_r", "im_r", "abs_r", "im_gamma"],
            &rows,
        ),
    )?);
    out.files.push(dir.write(
        &format!("{stem}_scatter_summary.json"),
        &output::json_document("scatter", cfg, &summary),
    )?);
    if cfg.output.svg {
        let svg = output::line_plot(
            &format!("{}: reflection", cfg.experiment),
            "E",
            "|r|",
            &series,
            cfg.output.width,
            cfg.output.height,
        );
        out.files.push(dir.write(&format!("{stem}_scatter.svg"), &svg)?);
    }
    Ok(out)
}

pub fn verify(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Outcome> {
    let registry = crate::checks::CheckRegistry::standard();
    registry.resolve(&cfg.verify.checks)?;
    let ctx = crate::checks::CheckContext::new(cfg, workers);
    let records = registry.run(&ctx)?;
    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    out.files.push(dir.write(
        &format!("{}_verify.json", cfg.stem()),
        &output::json_document("verify", cfg, &records),
    )?);
    for r in &records {
        out.summary.push(format!(
            "{} {}: lhs={} rhs={} slack={} stderr={}",
            if r.pass { "pass" } else { "FAIL" },
            r.check,
            r.lhs,
            r.rhs,
            r.slack,
            r.stderr
        ));
    }
    out.records = records;
    Ok(out)
}

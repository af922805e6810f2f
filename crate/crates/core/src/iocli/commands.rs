use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::{CodebookSource, MapSource, RunConfig};
use super::grid::ingest_grid;
use super::heatmap::to_pgm;
use crate::align::{aggregate_csv, exhaustive_search, trials_csv, AggregateRow, Experiment};
use crate::arraygeom::{build_uniform_codebook, load_codebook, SteeringCodebook};
use crate::channelsynth::{
    channel_matrix, power_map, synth_cluster_channel, synth_power_map_direct, DirectMapParams,
    PowerMap,
};
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";

/// Stream used for map synthesis; trials draw from stream 0.
const MAP_STREAM: u64 = 1;

pub fn build_codebook(source: &CodebookSource) -> Result<SteeringCodebook> {
    match source {
        CodebookSource::Uniform {
            start_deg,
            stop_deg,
            step_deg,
            n_elems,
        } => build_uniform_codebook(*start_deg, *stop_deg, *step_deg, *n_elems),
        CodebookSource::File(path) => load_codebook(path),
    }
}

/// Ground-truth map for a config: synthesized or ingested.
pub fn build_map(cfg: &RunConfig) -> Result<PowerMap> {
    if let MapSource::Grid { path, db } = &cfg.map {
        return ingest_grid(path, *db);
    }
    let tx = build_codebook(&cfg.tx)?;
    let rx = build_codebook(&cfg.rx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(MAP_STREAM);
    match &cfg.map {
        MapSource::Direct(params) => {
            let params = DirectMapParams {
                p: tx.len(),
                q: rx.len(),
                ..params.clone()
            };
            synth_power_map_direct(&mut rng, &params)
        }
        MapSource::RaySum { n_paths } => {
            let front = |cb: &SteeringCodebook| {
                let a = cb.angles_deg();
                (a[0].max(-90.0), a[a.len() - 1].min(90.0))
            };
            let (aod, aoa) = (front(&tx), front(&rx));
            if aod.0 > aod.1 || aoa.0 > aoa.1 {
                return Err(Error::invalid(
                    "codebook spans do not reach the front half-plane",
                ));
            }
            let ch =
                synth_cluster_channel(&mut rng, tx.n_elems(), rx.n_elems(), *n_paths, aod, aoa)?;
            power_map(&channel_matrix(&ch), &tx, &rx)
        }
        MapSource::Grid { .. } => unreachable!("handled above"),
    }
}

struct OutputDir {
    root: PathBuf,
    written: Vec<(String, String)>,
}

impl OutputDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        let digest = hex::encode(Sha256::digest(contents.as_bytes()));
        self.written.push((name.to_string(), digest));
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
        let mut manifest = format!(
            "# cbalign {}\ncommand = {command}\n\n[config]\n{}\n[artifacts]\n",
            env!("CARGO_PKG_VERSION"),
            cfg.to_text()
        );
        for (name, digest) in &self.written {
            manifest.push_str(&format!("{digest}  {name}\n"));
        }
        let path = self.root.join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
        let mut paths: Vec<PathBuf> = self
            .written
            .drain(..)
            .map(|(n, _)| self.root.join(n))
            .collect();
        paths.push(path);
        Ok(paths)
    }
}

#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub map: PowerMap,
    pub files: Vec<PathBuf>,
}

/// Writes the ground-truth map (CSV and heatmap) plus the codebooks used.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary> {
    let map = build_map(cfg)?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write("phi_true.csv", &map.to_csv_string())?;
    out.write("phi_true.pgm", &to_pgm(&map, cfg.heatmap_range_db))?;
    if !matches!(cfg.map, MapSource::Grid { .. }) {
        out.write("tx_codebook.csv", &build_codebook(&cfg.tx)?.to_csv_string())?;
        out.write("rx_codebook.csv", &build_codebook(&cfg.rx)?.to_csv_string())?;
    }
    let files = out.finish("synth", cfg)?;
    Ok(SynthSummary { map, files })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<AggregateRow>,
    pub files: Vec<PathBuf>,
}

/// Full Monte Carlo sweep plus per-point artifacts from the first trial.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    let map = build_map(cfg)?;
    let pairs = cfg.measurement_pairs(map.p(), map.q())?;
    let experiment = Experiment::new(&map, cfg.noise_sigma, cfg.solver.clone())?;
    let result = experiment.monte_carlo(&pairs, cfg.trials, cfg.seed)?;

    let mut out = OutputDir::create(&cfg.out)?;
    out.write("phi_true.csv", &map.to_csv_string())?;
    out.write("phi_true.pgm", &to_pgm(&map, cfg.heatmap_range_db))?;
    out.write("aggregate.csv", &aggregate_csv(&result.rows))?;
    out.write("trials.csv", &trials_csv(&result.reports))?;
    for &(m1, m2) in &pairs {
        let first = experiment.run_trial(m1, m2, 0, cfg.seed)?;
        out.write(
            &format!("phi_hat_{m1}x{m2}.pgm"),
            &to_pgm(&first.phi_hat, cfg.heatmap_range_db),
        )?;
        out.write(
            &format!("measurements_{m1}x{m2}.csv"),
            &first.measurements.to_csv_string(),
        )?;
    }
    let files = out.finish("run", cfg)?;
    Ok(RunSummary {
        rows: result.rows,
        files,
    })
}

/// Validates a grid file and describes it.
pub fn cmd_ingest_check(path: &Path, db: bool) -> Result<String> {
    let map = ingest_grid(path, db)?;
    let best = exhaustive_search(&map);
    Ok(format!(
        "{}: {} rx x {} tx beams ({} pairs), peak {} at rx {} tx {}",
        path.display(),
        map.q(),
        map.p(),
        map.n(),
        best.value_linear,
        best.rx_idx,
        best.tx_idx
    ))
}

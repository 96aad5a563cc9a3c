//! Monte-Carlo sweeps over SNR, CSI error radius and antenna count.
//!
//! Every trial derives its seed from the base seed, the antenna count and
//! the trial index only, so all schemes, SNR points and error radii of one
//! trial see the same channel realization and the same normalized error
//! draws. Results are reproducible row by row from `(config, seed)`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_csi_error, effective_channels, sample_taps, ChannelConfig};
use crate::error::{Error, Result};
use crate::optimize::{random_beamformer, sca_solve, sdr_solve, ScaOptions, SdrOptions};
use crate::rates::{min_rate, Beamformer, ProblemParams};
use crate::robust::{check_sic_constraints, CheckMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sca,
    Sdr,
    Random,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Sca => "sca",
            Scheme::Sdr => "sdr",
            Scheme::Random => "random",
        }
    }

    fn stream(&self) -> u64 {
        match self {
            Scheme::Sca => 2,
            Scheme::Sdr => 3,
            Scheme::Random => 4,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sca" => Ok(Scheme::Sca),
            "sdr" => Ok(Scheme::Sdr),
            "random" => Ok(Scheme::Random),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rho_db: Vec<f64>,
    pub sigma: Vec<f64>,
    pub v: Vec<usize>,
    pub m: usize,
    pub n: usize,
    pub r0: f64,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub sca: ScaOptions,
    pub sdr: SdrOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rho_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            sigma: vec![0.0, 0.05, 0.1, 0.2],
            v: vec![4],
            m: 8,
            n: 8,
            r0: 0.5,
            schemes: vec![Scheme::Sca, Scheme::Random],
            trials: 100,
            seed: 0,
            threads: None,
            sca: ScaOptions::default(),
            sdr: SdrOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.rho_db.is_empty() || self.sigma.is_empty() || self.v.is_empty() || self.schemes.is_empty() {
            return bad("rho_db, sigma, v and schemes must be nonempty".into());
        }
        if self.rho_db.iter().any(|r| !r.is_finite()) {
            return bad("rho_db values must be finite".into());
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::NegativeSigma(*s));
        }
        if self.schemes.contains(&Scheme::Sdr) && self.sigma.iter().any(|&s| s != 0.0) {
            return bad("the sdr scheme only supports sigma = 0".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        for &v in &self.v {
            ProblemParams::new(self.n, self.m, v, 1.0, self.r0, 0.0)?;
        }
        Ok(())
    }

    fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &v in &self.v {
            for &sigma in &self.sigma {
                for &rho_db in &self.rho_db {
                    for &scheme in &self.schemes {
                        points.push(GridPoint { scheme, rho_db, sigma, v });
                    }
                }
            }
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridPoint {
    scheme: Scheme,
    rho_db: f64,
    sigma: f64,
    v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub rho_db: f64,
    pub sigma: f64,
    pub v: usize,
    pub trial: usize,
    pub seed: u64,
    pub r_min: f64,
    pub user_rates: Vec<f64>,
    pub designer_failed: bool,
    /// Worst-case SIC check on the estimates passed.
    pub robust_feasible: bool,
    /// SIC check on the true channels passed.
    pub true_feasible: bool,
    pub iterations: usize,
    pub wall_time_s: f64,
}

/// Seed of trial `trial` for antenna count `v`.
pub fn trial_seed(base: u64, v: usize, trial: usize) -> u64 {
    let mut x = base ^ (v as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one trial of one grid point. Designer failures are recorded in the
/// row with `r_min = 0`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    rho_db: f64,
    sigma: f64,
    v: usize,
    trial: usize,
) -> Result<ResultRow> {
    let started = Instant::now();
    let seed = trial_seed(cfg.seed, v, trial);
    let params = ProblemParams::from_db(cfg.n, cfg.m, v, rho_db, cfg.r0, sigma)?;
    let chan_cfg = ChannelConfig::two_path(cfg.n, cfg.m, v);
    let taps = sample_taps(&chan_cfg, &mut stream_rng(seed, 0))?;
    let ch = apply_csi_error(&effective_channels(&taps)?, sigma, &mut stream_rng(seed, 1))?;

    let mut rng = stream_rng(seed, scheme.stream());
    let designed: Result<(Beamformer, usize)> = match scheme {
        Scheme::Random => Ok((random_beamformer(v, &mut rng), 0)),
        Scheme::Sca => sca_solve(&ch, &params, &cfg.sca, &mut rng).map(|o| (o.beamformer, o.iterations)),
        Scheme::Sdr => sdr_solve(&ch, &params, &cfg.sdr, &mut rng).map(|o| (o.beamformer, 0)),
    };

    let mut row = ResultRow {
        scheme,
        rho_db,
        sigma,
        v,
        trial,
        seed,
        r_min: 0.0,
        user_rates: Vec::new(),
        designer_failed: false,
        robust_feasible: false,
        true_feasible: false,
        iterations: 0,
        wall_time_s: 0.0,
    };
    match designed {
        Ok((w, iterations)) => {
            row.iterations = iterations;
            row.robust_feasible = check_sic_constraints(&w, &ch, &params, CheckMode::WorstCase)?.feasible;
            let rates = min_rate(&w, &ch, &params)?;
            row.true_feasible = rates.sic_feasible;
            row.user_rates = rates.user_rates;
            if row.robust_feasible {
                row.r_min = rates.min_rate;
            }
        }
        Err(e) => {
            log::debug!("{scheme} trial {trial} at {rho_db} dB, sigma {sigma}: {e}");
            row.designer_failed = true;
        }
    }
    row.wall_time_s = started.elapsed().as_secs_f64();
    Ok(row)
}

/// Runs every grid point and trial. Rows are ordered by grid point
/// (antennas, error radius, SNR, scheme) and then trial index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let jobs: Vec<(GridPoint, usize)> = cfg
        .grid()
        .into_iter()
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|(p, t)| run_trial(cfg, p.scheme, p.rho_db, p.sigma, p.v, *t))
            .collect::<Result<Vec<_>>>()
    };
    match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub scheme: Scheme,
    pub v: usize,
    pub sigma: f64,
    pub rho_db: f64,
    pub trials: usize,
    pub mean_r_min: f64,
    pub std_err: f64,
    /// Fraction of trials with `R_min = 0`.
    pub zero_fraction: f64,
}

/// Mean `R_min` per (scheme, V, σ, ρ) in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<CurvePoint> {
    type Key = (Scheme, usize, u64, u64);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, Vec<f64>> = HashMap::new();
    for r in rows {
        let key = (r.scheme, r.v, r.sigma.to_bits(), r.rho_db.to_bits());
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.r_min);
    }
    order
        .into_iter()
        .map(|key| {
            let values = &groups[&key];
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std_err = if n > 1 {
                let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            CurvePoint {
                scheme: key.0,
                v: key.1,
                sigma: f64::from_bits(key.2),
                rho_db: f64::from_bits(key.3),
                trials: n,
                mean_r_min: mean,
                std_err,
                zero_fraction: values.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scheme: &'a str,
    rho_db: f64,
    sigma: f64,
    v: usize,
    trial: usize,
    seed: u64,
    r_min: f64,
    user_rates: String,
    designer_failed: bool,
    robust_feasible: bool,
    true_feasible: bool,
    iterations: usize,
}

/// CSV of the rows; wall times are excluded so that reruns are
/// byte-identical.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(CsvRow {
            scheme: r.scheme.name(),
            rho_db: r.rho_db,
            sigma: r.sigma,
            v: r.v,
            trial: r.trial,
            seed: r.seed,
            r_min: r.r_min,
            user_rates: r.user_rates.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
            designer_failed: r.designer_failed,
            robust_feasible: r.robust_feasible,
            true_feasible: r.true_feasible,
            iterations: r.iterations,
        })
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn timings_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("scheme,rho_db,sigma,v,trial,wall_time_s\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{},{}\n", r.scheme, r.rho_db, r.sigma, r.v, r.trial, r.wall_time_s));
    }
    out
}

/// Writes `results.csv`, `summary.json` and `timings.csv` into `dir`.
pub fn write_outputs(dir: &Path, rows: &[ResultRow]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let csv = rows_to_csv(rows).map_err(|e| std::io::Error::other(e.to_string()))?;
    fs::write(dir.join("results.csv"), csv)?;
    let summary = serde_json::to_string_pretty(&summarize(rows))?;
    fs::write(dir.join("summary.json"), summary)?;
    fs::write(dir.join("timings.csv"), timings_to_csv(rows))?;
    Ok(())
}

//! Comparative studies on synthetic data.
//!
//! * [`run_feature_vs_class`] trains two diffusion models that differ only in
//!   how the latent code is conditioned (overlapping features versus disjoint
//!   classes of the same points) and compares their out-of-support rates.
//! * [`run_ngmg_vs_bce`] trains the same small classifier with BCE and with
//!   the two-sided NGMG entropy over matched seeds and compares test MSE.
//!
//! Every random stream is derived from one master seed by fixed offsets, so
//! both studies are reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::diffusion::{
    self, assign_latents, build_schedule, Denoiser, DiffusionTrainConfig, LatentSpec, ScheduledDenoiser,
};
use crate::error::{Error, Result};
use crate::losses::LossName;
use crate::net::{self, Activation, Mlp, Sample, TrainConfig};

/// Offsets added to a trial seed to obtain independent substreams.
pub mod seed_offsets {
    pub const DATA: u64 = 0x1000;
    pub const INIT: u64 = 0x2000;
    pub const TRAIN: u64 = 0x3000;
    pub const LATENT: u64 = 0x4000;
    pub const SAMPLE: u64 = 0x5000;
    pub const REFERENCE: u64 = 0x6000;
}

pub fn derive_seed(base: u64, offset: u64) -> u64 {
    base.wrapping_add(offset)
}

/// Out-of-support statistics for a set of generated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub n_samples: usize,
    pub n_defects: usize,
    pub defect_rate: f64,
    pub tau: f64,
    pub per_condition: Vec<ConditionDefects>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDefects {
    pub condition: String,
    pub n_samples: usize,
    pub n_defects: usize,
}

fn nearest_sq_distance(p: &[f64; 2], reference: &[[f64; 2]]) -> f64 {
    reference
        .iter()
        .map(|r| {
            let dx = p[0] - r[0];
            let dy = p[1] - r[1];
            dx * dx + dy * dy
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance from each point to its nearest neighbour in `reference`.
pub fn nearest_distances(points: &[[f64; 2]], reference: &[[f64; 2]]) -> Vec<f64> {
    points
        .par_iter()
        .map(|p| nearest_sq_distance(p, reference).sqrt())
        .collect()
}

/// A point is a defect when its nearest reference point is further than `tau`.
pub fn defect_rate(generated: &[[f64; 2]], reference_support: &[[f64; 2]], tau: f64) -> Result<DefectReport> {
    defect_rate_by_condition(generated, None, reference_support, tau)
}

/// [`defect_rate`] with a condition label per generated point.
pub fn defect_rate_by_condition(
    generated: &[[f64; 2]],
    conditions: Option<&[String]>,
    reference_support: &[[f64; 2]],
    tau: f64,
) -> Result<DefectReport> {
    if generated.is_empty() || reference_support.is_empty() {
        return Err(Error::invalid("defect rate needs generated and reference points"));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be > 0, got {tau}")));
    }
    if let Some(c) = conditions {
        crate::error::check_len(generated.len(), c.len())?;
    }
    let defects: Vec<bool> = nearest_distances(generated, reference_support)
        .into_iter()
        .map(|d| d > tau)
        .collect();
    let n_defects = defects.iter().filter(|&&d| d).count();

    let mut per_condition: Vec<ConditionDefects> = Vec::new();
    if let Some(conds) = conditions {
        for (c, &d) in conds.iter().zip(&defects) {
            match per_condition.iter_mut().find(|e| &e.condition == c) {
                Some(e) => {
                    e.n_samples += 1;
                    e.n_defects += d as usize;
                }
                None => per_condition.push(ConditionDefects {
                    condition: c.clone(),
                    n_samples: 1,
                    n_defects: d as usize,
                }),
            }
        }
        per_condition.sort_by(|a, b| a.condition.cmp(&b.condition));
    }
    Ok(DefectReport {
        n_samples: generated.len(),
        n_defects,
        defect_rate: n_defects as f64 / generated.len() as f64,
        tau,
        per_condition,
    })
}

/// Linear-interpolated quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `trials` fair coin flips.
pub fn sign_test_p(wins: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    if wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, trials as u64).unwrap();
    1.0 - b.cdf(wins as u64 - 1)
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// ---------------------------------------------------------------------------
// Feature versus class conditioning

/// How each arm turns a point's features into latent attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    /// The four overlapping binary features.
    Features,
    /// One-hot over disjoint classes obtained by collapsing feature
    /// combinations.
    Classes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureVsClassConfig {
    pub master_seed: u64,
    pub n_seeds: usize,
    /// Training points per blob of the 4×4 grid.
    pub points_per_blob: usize,
    pub blob_scale: f64,
    pub grid_spacing: f64,
    pub code_len: usize,
    pub hidden: Vec<usize>,
    pub t_max: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub train: DiffusionTrainConfig,
    pub n_generated: usize,
    pub n_reference: usize,
    pub n_heldout: usize,
    /// Quantile of held-out nearest-neighbour distances used as `tau`.
    pub tau_quantile: f64,
    pub feature_arm: Labeling,
    pub class_arm: Labeling,
}

impl Default for FeatureVsClassConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            n_seeds: 5,
            points_per_blob: 64,
            blob_scale: 0.15,
            grid_spacing: 1.0,
            code_len: 8,
            hidden: vec![128, 128],
            t_max: diffusion::DEFAULT_STEPS,
            beta_start: diffusion::DEFAULT_BETA_START,
            beta_end: diffusion::DEFAULT_BETA_END,
            train: DiffusionTrainConfig {
                learning_rate: 0.05,
                batch_size: 64,
                iterations: 8000,
                lambda_cls: 0.0,
                ..DiffusionTrainConfig::default()
            },
            n_generated: 512,
            n_reference: 8000,
            n_heldout: 1000,
            tau_quantile: 0.95,
            feature_arm: Labeling::Features,
            class_arm: Labeling::Classes,
        }
    }
}

pub const N_FEATURES: usize = 4;

/// Feature bits of grid blob `(col, row)`: right half, top half, odd column,
/// odd row. Every blob has a unique combination.
pub fn blob_features(col: usize, row: usize) -> [u8; N_FEATURES] {
    [(col >= 2) as u8, (row >= 2) as u8, (col % 2) as u8, (row % 2) as u8]
}

/// Quadrant class of a feature vector, as a one-hot attribute vector.
pub fn collapse_to_class(features: &[u8; N_FEATURES]) -> [u8; N_FEATURES] {
    let mut out = [0u8; N_FEATURES];
    out[(2 * features[0] + features[1]) as usize] = 1;
    out
}

/// Points drawn from the 4×4 blob grid with their feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobData {
    pub points: Vec<[f64; 2]>,
    pub features: Vec<[u8; N_FEATURES]>,
}

impl BlobData {
    pub fn labels(&self, labeling: Labeling) -> Vec<Vec<u8>> {
        self.features
            .iter()
            .map(|f| match labeling {
                Labeling::Features => f.to_vec(),
                Labeling::Classes => collapse_to_class(f).to_vec(),
            })
            .collect()
    }
}

pub fn generate_blobs(points_per_blob: usize, spacing: f64, scale: f64, rng: &mut impl Rng) -> BlobData {
    let mut points = Vec::with_capacity(16 * points_per_blob);
    let mut features = Vec::with_capacity(16 * points_per_blob);
    for col in 0..4 {
        for row in 0..4 {
            let cx = (col as f64 - 1.5) * spacing;
            let cy = (row as f64 - 1.5) * spacing;
            for _ in 0..points_per_blob {
                let dx: f64 = StandardNormal.sample(rng);
                let dy: f64 = StandardNormal.sample(rng);
                points.push([cx + scale * dx, cy + scale * dy]);
                features.push(blob_features(col, row));
            }
        }
    }
    BlobData { points, features }
}

fn condition_name(attrs: &[u8]) -> String {
    attrs.iter().map(|a| if *a == 1 { '1' } else { '0' }).collect()
}

/// Result for one seed: both arms' reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDefects {
    pub seed: u64,
    pub feature: DefectReport,
    pub class: DefectReport,
    pub feature_final_loss: f64,
    pub class_final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVsClassSummary {
    pub trials: Vec<PairedDefects>,
    pub feature_mean: f64,
    pub feature_se: f64,
    pub class_mean: f64,
    pub class_se: f64,
    /// Seeds where the feature arm had strictly fewer defects.
    pub feature_wins: usize,
    pub ties: usize,
    pub sign_test_p: f64,
}

struct ArmResult {
    report: DefectReport,
    final_loss: f64,
}

fn run_arm(
    cfg: &FeatureVsClassConfig,
    trial_seed: u64,
    data: &BlobData,
    reference: &[[f64; 2]],
    tau: f64,
    labeling: Labeling,
) -> Result<ArmResult> {
    let spec = LatentSpec::new(N_FEATURES, cfg.code_len);
    let schedule = build_schedule(cfg.t_max, cfg.beta_start, cfg.beta_end)?;
    let labels = data.labels(labeling);
    let points: Vec<Vec<f64>> = data.points.iter().map(|p| p.to_vec()).collect();

    let mut latent_rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, seed_offsets::LATENT));
    let dataset = assign_latents(&spec, &points, &labels, &mut latent_rng)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, seed_offsets::INIT));
    let model = Denoiser::new(2, spec.latent_dim(), &cfg.hidden, &mut init_rng)?;
    let train_cfg = DiffusionTrainConfig {
        seed: derive_seed(trial_seed, seed_offsets::TRAIN),
        ..cfg.train.clone()
    };
    let trained = diffusion::train_denoiser(&model, &schedule, &dataset, Some(&spec), &train_cfg)?;
    let final_loss = tail_mean(&trained.loss_curve, 200);

    // Conditions are drawn from the training labels; the same indices are
    // used in both arms.
    let mut sample_rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, seed_offsets::SAMPLE));
    let predictor = ScheduledDenoiser {
        denoiser: &trained.model,
        t_max: schedule.t_max(),
    };
    let mut generated = Vec::with_capacity(cfg.n_generated);
    let mut conditions = Vec::with_capacity(cfg.n_generated);
    for _ in 0..cfg.n_generated {
        let idx = sample_rng.random_range(0..labels.len());
        let latent = diffusion::sample_latent(&spec, &labels[idx], &mut sample_rng)?;
        let x = diffusion::sample(&predictor, &schedule, 2, &latent.flatten(), &mut sample_rng)?;
        generated.push([x[0], x[1]]);
        conditions.push(condition_name(&labels[idx]));
    }
    let report = defect_rate_by_condition(&generated, Some(&conditions), reference, tau)?;
    Ok(ArmResult { report, final_loss })
}

fn tail_mean(curve: &[f64], n: usize) -> f64 {
    if curve.is_empty() {
        return f64::NAN;
    }
    let tail = &curve[curve.len().saturating_sub(n)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Reference support, held-out points and the resulting `tau` for a seed.
pub struct SupportModel {
    pub reference: Vec<[f64; 2]>,
    pub tau: f64,
}

pub fn support_model(cfg: &FeatureVsClassConfig, trial_seed: u64) -> SupportModel {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, seed_offsets::REFERENCE));
    let per_blob = cfg.n_reference.div_ceil(16);
    let reference = generate_blobs(per_blob, cfg.grid_spacing, cfg.blob_scale, &mut rng).points;
    let heldout = generate_blobs(cfg.n_heldout.div_ceil(16), cfg.grid_spacing, cfg.blob_scale, &mut rng).points;
    let tau = quantile(&nearest_distances(&heldout, &reference), cfg.tau_quantile);
    SupportModel { reference, tau }
}

fn run_feature_vs_class_seed(cfg: &FeatureVsClassConfig, seed_index: usize) -> Result<PairedDefects> {
    let trial_seed = cfg.master_seed.wrapping_add(seed_index as u64);
    let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, seed_offsets::DATA));
    let data = generate_blobs(cfg.points_per_blob, cfg.grid_spacing, cfg.blob_scale, &mut data_rng);
    let support = support_model(cfg, trial_seed);
    let (feature, class) = rayon::join(
        || run_arm(cfg, trial_seed, &data, &support.reference, support.tau, cfg.feature_arm),
        || run_arm(cfg, trial_seed, &data, &support.reference, support.tau, cfg.class_arm),
    );
    let (feature, class) = (feature?, class?);
    Ok(PairedDefects {
        seed: trial_seed,
        feature: feature.report,
        class: class.report,
        feature_final_loss: feature.final_loss,
        class_final_loss: class.final_loss,
    })
}

pub fn validate_feature_vs_class(cfg: &FeatureVsClassConfig) -> Result<()> {
    if cfg.n_seeds == 0 || cfg.points_per_blob == 0 || cfg.n_generated == 0 {
        return Err(Error::invalid("seeds, points per blob and generated count must be positive"));
    }
    if cfg.n_reference == 0 || cfg.n_heldout == 0 {
        return Err(Error::invalid("reference and held-out sets must be non-empty"));
    }
    if !(0.0..=1.0).contains(&cfg.tau_quantile) {
        return Err(Error::invalid("tau quantile must lie in [0, 1]"));
    }
    if cfg.hidden.is_empty() {
        return Err(Error::invalid("denoiser needs at least one hidden layer"));
    }
    LatentSpec::new(N_FEATURES, cfg.code_len).validate()
}

/// Trains both arms over `n_seeds` paired seeds.
pub fn run_feature_vs_class(cfg: &FeatureVsClassConfig) -> Result<FeatureVsClassSummary> {
    validate_feature_vs_class(cfg)?;
    let trials = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|i| run_feature_vs_class_seed(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let f: Vec<f64> = trials.iter().map(|t| t.feature.defect_rate).collect();
    let c: Vec<f64> = trials.iter().map(|t| t.class.defect_rate).collect();
    let (feature_mean, feature_se) = mean_se(&f);
    let (class_mean, class_se) = mean_se(&c);
    let feature_wins = f.iter().zip(&c).filter(|(a, b)| a < b).count();
    let ties = f.iter().zip(&c).filter(|(a, b)| a == b).count();
    Ok(FeatureVsClassSummary {
        feature_mean,
        feature_se,
        class_mean,
        class_se,
        feature_wins,
        ties,
        sign_test_p: sign_test_p(feature_wins, trials.len() - ties),
        trials,
    })
}

// ---------------------------------------------------------------------------
// NGMG entropy versus BCE

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgmgVsBceConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub n_attributes: usize,
    pub n_samples: usize,
    /// Fraction of samples held out for testing.
    pub test_fraction: f64,
    /// Half-width of each attribute's active interval on `[0, 1]`.
    pub interval_half_width: f64,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub train: TrainConfig,
    pub arms: Vec<LossName>,
}

impl Default for NgmgVsBceConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            trials: 20,
            n_attributes: 10,
            n_samples: 1000,
            test_fraction: 0.2,
            interval_half_width: 0.15,
            hidden: vec![64, 64],
            hidden_activation: Activation::Tanh,
            train: TrainConfig {
                learning_rate: 0.5,
                batch_size: 32,
                iterations: 1500,
                kernel_scale: 1.0,
                ..TrainConfig::default()
            },
            arms: vec![LossName::Bce, LossName::NgmgTwoSided],
        }
    }
}

/// Attribute `k` is active when `x` lies within `half_width` of the `k`-th
/// of `n` evenly spaced centres on `[0, 1]`; neighbouring attributes overlap.
pub fn threshold_attributes(x: f64, n: usize, half_width: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let centre = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
            ((x - centre).abs() <= half_width) as u8 as f64
        })
        .collect()
}

pub fn multilabel_dataset(cfg: &NgmgVsBceConfig, rng: &mut impl Rng) -> (Vec<Sample>, Vec<Sample>) {
    let samples: Vec<Sample> = (0..cfg.n_samples)
        .map(|_| {
            let x: f64 = rng.random();
            Sample {
                input: vec![x],
                target: threshold_attributes(x, cfg.n_attributes, cfg.interval_half_width),
            }
        })
        .collect();
    let n_test = ((cfg.n_samples as f64) * cfg.test_fraction).round() as usize;
    let n_train = cfg.n_samples - n_test;
    let test = samples[n_train..].to_vec();
    let mut train = samples;
    train.truncate(n_train);
    (train, test)
}

/// Mean over test samples of the mean squared error across attributes.
pub fn test_mse(model: &Mlp, test: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for s in test {
        let p = model.forward(&s.input)?;
        total += p.iter().zip(&s.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p.len() as f64;
    }
    Ok(total / test.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub loss_name: LossName,
    pub test_mse: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub loss_name: LossName,
    pub mean_mse: f64,
    pub se_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgmgVsBceSummary {
    pub trials: Vec<TrialSummary>,
    pub arms: Vec<ArmSummary>,
    /// Trials where the second arm had strictly lower test MSE than the first.
    pub second_arm_wins: usize,
    pub ties: usize,
    pub sign_test_p: f64,
}

impl NgmgVsBceSummary {
    pub fn per_arm(&self, name: LossName) -> Vec<&TrialSummary> {
        self.trials.iter().filter(|t| t.loss_name == name).collect()
    }
}

fn run_ngmg_vs_bce_trial(cfg: &NgmgVsBceConfig, trial: usize) -> Result<Vec<TrialSummary>> {
    let seed = cfg.master_seed.wrapping_add(trial as u64);
    let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, seed_offsets::DATA));
    let (train, test) = multilabel_dataset(cfg, &mut data_rng);
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, seed_offsets::INIT));
    let mut sizes = vec![1];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(cfg.n_attributes);
    let init = Mlp::new(&sizes, cfg.hidden_activation, Activation::Sigmoid, &mut init_rng)?;
    cfg.arms
        .iter()
        .map(|&loss_name| {
            let tc = TrainConfig {
                seed: derive_seed(seed, seed_offsets::TRAIN),
                loss_name,
                ..cfg.train.clone()
            };
            let (model, curve) = net::train(&init, &train, &tc)?;
            Ok(TrialSummary {
                trial,
                seed,
                loss_name,
                test_mse: test_mse(&model, &test)?,
                final_train_loss: curve.last().copied().unwrap_or(f64::NAN),
            })
        })
        .collect()
}

pub fn validate_ngmg_vs_bce(cfg: &NgmgVsBceConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if cfg.n_attributes < 2 {
        return Err(Error::invalid("need at least two attributes for the NGMG kernel"));
    }
    if cfg.arms.len() != 2 {
        return Err(Error::invalid("the comparison needs exactly two arms"));
    }
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(Error::invalid("test fraction must lie in (0, 1)"));
    }
    let n_test = ((cfg.n_samples as f64) * cfg.test_fraction).round() as usize;
    if n_test == 0 || n_test >= cfg.n_samples {
        return Err(Error::invalid("split leaves an empty train or test set"));
    }
    cfg.train.validate()
}

/// Runs every trial for both arms with matched data, init and batch order.
pub fn run_ngmg_vs_bce(cfg: &NgmgVsBceConfig) -> Result<NgmgVsBceSummary> {
    validate_ngmg_vs_bce(cfg)?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_ngmg_vs_bce_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let arms = cfg
        .arms
        .iter()
        .enumerate()
        .map(|(i, &loss_name)| {
            let v: Vec<f64> = per_trial.iter().map(|t| t[i].test_mse).collect();
            let (mean_mse, se_mse) = mean_se(&v);
            ArmSummary {
                loss_name,
                mean_mse,
                se_mse,
            }
        })
        .collect();
    let second_arm_wins = per_trial.iter().filter(|t| t[1].test_mse < t[0].test_mse).count();
    let ties = per_trial.iter().filter(|t| t[1].test_mse == t[0].test_mse).count();
    Ok(NgmgVsBceSummary {
        sign_test_p: sign_test_p(second_arm_wins, cfg.trials - ties),
        second_arm_wins,
        ties,
        arms,
        trials: per_trial.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_test_values() {
        // P(X >= 15 | n = 20) = 21700 / 2^20
        assert!((sign_test_p(15, 20) - 21700.0 / 1048576.0).abs() < 1e-12);
        assert!(sign_test_p(14, 20) > 0.05);
        assert_eq!(sign_test_p(0, 20), 1.0);
    }

    #[test]
    fn blob_features_are_unique() {
        let mut seen = std::collections::HashSet::new();
        for c in 0..4 {
            for r in 0..4 {
                assert!(seen.insert(blob_features(c, r)));
            }
        }
        let classes: std::collections::HashSet<_> = seen.iter().map(collapse_to_class).collect();
        assert_eq!(classes.len(), 4);
    }

    #[test]
    fn defect_rate_constructed_cases() {
        let reference: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 * 0.01, 0.0]).collect();
        let tau = 0.05;
        let r = defect_rate(&reference[..10], &reference, tau).unwrap();
        assert_eq!(r.defect_rate, 0.0);

        let far: Vec<[f64; 2]> = reference.iter().map(|p| [p[0], p[1] + 10.0 * tau]).collect();
        let r = defect_rate(&far, &reference, tau).unwrap();
        assert_eq!(r.defect_rate, 1.0);

        let mut half = reference[..10].to_vec();
        half.extend_from_slice(&far[..10]);
        let r = defect_rate(&half, &reference, tau).unwrap();
        assert_eq!(r.defect_rate, 0.5);
        assert_eq!(r.n_defects, 10);

        assert!(defect_rate(&[], &reference, tau).is_err());
        assert!(defect_rate(&half, &[], tau).is_err());
    }

    #[test]
    fn attribute_rules() {
        let a = threshold_attributes(0.0, 5, 0.15);
        assert_eq!(a, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let a = threshold_attributes(0.125, 5, 0.15);
        assert_eq!(a, vec![1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
    }
}

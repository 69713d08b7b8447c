//! The end-to-end augmentation pipeline: samples per-image policies,
//! applies them in stage order, composes per-stage confidences into a soft
//! label, and streams records.
//!
//! Each (sample, stage) pair draws from its own RNG stream derived from
//! `(global seed, sample index, stage index)`, so inserting a stage never
//! perturbs earlier stages' draws and any degree of parallelism produces
//! identical output. A stage's `soft` flag only selects whether its
//! realized magnitude is fed through the mapping profile: the image bytes
//! are the same either way.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::{compose_confidences, MappingProfile};
use crate::datasets::DatasetHandle;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::labels::{loss_weight, soft_target, SoftLabel};
use crate::rng::{stage_stream, RngStream};
use crate::transforms::{
    apply_ta_transform_with, gaussian_noise, horizontal_flip, patch_gaussian, random_crop,
    random_erase, TaRanges, TransformKind, TransformParams, TransformSpec, TA_LEVELS,
};

/// Draws one TrivialAugment policy: a kind uniform over the 14 transforms
/// and a magnitude bin uniform over the 31 levels, independently.
pub fn ta_sample(rng: &mut RngStream) -> (TransformKind, u8) {
    let kind = TransformKind::TA_KINDS[rng.random_range(0..TransformKind::TA_KINDS.len())];
    let level = rng.random_range(0..TA_LEVELS);
    (kind, level)
}

/// One stage of the augmentation policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "stage")]
pub enum StageKind {
    TrivialAugment {
        #[serde(default)]
        ranges: TaRanges,
    },
    RandomErase {
        prob: f64,
        area_range: (f64, f64),
        aspect_range: (f64, f64),
    },
    RandomCrop {
        padding: u32,
    },
    Gaussian {
        sigma: f64,
    },
    PatchGaussian {
        sigma: f64,
        /// Defaults per input size when absent: 25 px, or 50 px once the
        /// smaller image dimension reaches 64.
        patch_side: Option<u32>,
    },
    HorizontalFlip {
        prob: f64,
    },
}

impl StageKind {
    /// Transform kinds this stage can realize; used to validate profile
    /// coverage up front.
    pub fn producible_kinds(&self) -> Vec<TransformKind> {
        match self {
            StageKind::TrivialAugment { .. } => TransformKind::TA_KINDS.to_vec(),
            StageKind::RandomErase { .. } => vec![TransformKind::RandomErase],
            StageKind::RandomCrop { .. } => vec![TransformKind::RandomCrop],
            StageKind::Gaussian { .. } => vec![TransformKind::GaussianNoise],
            StageKind::PatchGaussian { .. } => vec![TransformKind::PatchGaussianNoise],
            StageKind::HorizontalFlip { .. } => vec![TransformKind::HorizontalFlip],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            StageKind::RandomErase {
                prob,
                area_range,
                aspect_range,
            } => {
                if !(0.0..=1.0).contains(prob) {
                    return Err(Error::config(format!(
                        "erase probability {prob} outside [0, 1]"
                    )));
                }
                if !(area_range.0 > 0.0 && area_range.0 <= area_range.1 && area_range.1 <= 1.0) {
                    return Err(Error::config(format!(
                        "erase area range {area_range:?} must satisfy 0 < lo <= hi <= 1"
                    )));
                }
                if !(aspect_range.0 > 0.0 && aspect_range.0 <= aspect_range.1) {
                    return Err(Error::config(format!(
                        "erase aspect range {aspect_range:?} must satisfy 0 < lo <= hi"
                    )));
                }
            }
            StageKind::Gaussian { sigma } | StageKind::PatchGaussian { sigma, .. } => {
                if !(*sigma > 0.0 && *sigma <= 1.0) {
                    return Err(Error::config(format!("noise sigma {sigma} outside (0, 1]")));
                }
            }
            StageKind::HorizontalFlip { prob } => {
                if !(0.0..=1.0).contains(prob) {
                    return Err(Error::config(format!(
                        "flip probability {prob} outside [0, 1]"
                    )));
                }
            }
            StageKind::TrivialAugment { .. } | StageKind::RandomCrop { .. } => {}
        }
        Ok(())
    }

    fn apply(&self, img: &Image, rng: &mut RngStream) -> Result<(Image, TransformSpec)> {
        match self {
            StageKind::TrivialAugment { ranges } => {
                let (kind, level) = ta_sample(rng);
                apply_ta_transform_with(img, kind, level, ranges, rng)
            }
            StageKind::RandomErase {
                prob,
                area_range,
                aspect_range,
            } => {
                if rng.random::<f64>() < *prob {
                    random_erase(img, rng, *area_range, *aspect_range)
                } else {
                    Ok((
                        img.clone(),
                        TransformSpec::new(
                            TransformKind::RandomErase,
                            0.0,
                            TransformParams::Erase {
                                x: 0,
                                y: 0,
                                width: 0,
                                height: 0,
                            },
                        ),
                    ))
                }
            }
            StageKind::RandomCrop { padding } => random_crop(img, rng, *padding),
            StageKind::Gaussian { sigma } => {
                let scale: f64 = rng.random();
                gaussian_noise(img, rng, *sigma, scale)
            }
            StageKind::PatchGaussian { sigma, patch_side } => {
                let scale: f64 = rng.random();
                let side = patch_side.unwrap_or_else(|| {
                    if img.width().min(img.height()) >= 64 {
                        50
                    } else {
                        25
                    }
                });
                patch_gaussian(img, rng, *sigma, scale, side)
            }
            StageKind::HorizontalFlip { prob } => horizontal_flip(img, rng, *prob),
        }
    }
}

/// A stage plus whether its magnitude contributes to label smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStage {
    #[serde(flatten)]
    pub kind: StageKind,
    pub soft: bool,
}

/// One output sample: the applied transforms, per-stage confidences, the
/// composed confidence, the soft label and the RNG provenance that
/// reproduces all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub sample_id: u64,
    pub applied: Vec<TransformSpec>,
    pub stage_confidences: Vec<f64>,
    pub composed_confidence: f64,
    pub soft_label: SoftLabel,
    pub loss_weight: f64,
    pub rng_seed: u64,
    pub rng_sample_index: u64,
}

/// A validated augmentation pipeline.
#[derive(Debug, Clone)]
pub struct Pipeline {
    stages: Vec<PolicyStage>,
    profile: MappingProfile,
    reweight: bool,
    class_count: usize,
}

impl Pipeline {
    /// Validates stage parameters and profile coverage before any image
    /// work: every kind a soft stage can realize must have a mapping.
    pub fn new(
        stages: Vec<PolicyStage>,
        profile: MappingProfile,
        class_count: usize,
        reweight: bool,
    ) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::config(format!(
                "class count {class_count} must be at least 2"
            )));
        }
        if profile.chance() != 1.0 / class_count as f64 {
            return Err(Error::config(format!(
                "profile chance {} does not match 1/{class_count}",
                profile.chance()
            )));
        }
        for stage in &stages {
            stage.kind.validate()?;
            if stage.soft {
                for kind in stage.kind.producible_kinds() {
                    if !profile.has(kind) {
                        return Err(Error::config(format!(
                            "mapping profile has no entry for kind `{kind}` required by a soft stage"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            stages,
            profile,
            reweight,
            class_count,
        })
    }

    pub fn stages(&self) -> &[PolicyStage] {
        &self.stages
    }

    /// Augments one sample. Fully reproducible from
    /// `(global_seed, sample_index)`.
    pub fn augment_sample(
        &self,
        img: &Image,
        true_class: usize,
        global_seed: u64,
        sample_index: u64,
    ) -> Result<(Image, AugmentationRecord)> {
        let mut current = img.clone();
        let mut applied = Vec::with_capacity(self.stages.len());
        let mut confidences = Vec::with_capacity(self.stages.len());

        for (stage_index, stage) in self.stages.iter().enumerate() {
            let mut rng = stage_stream(global_seed, sample_index, stage_index as u64);
            let (next, spec) = stage.kind.apply(&current, &mut rng)?;
            let confidence = if stage.soft {
                self.profile.confidence(spec.kind, spec.phi)?
            } else {
                1.0
            };
            current = next;
            applied.push(spec);
            confidences.push(confidence);
        }

        let composed = compose_confidences(&confidences);
        let weight = loss_weight(composed, self.reweight);
        let mut soft_label = soft_target(true_class, self.class_count, composed)?;
        soft_label.loss_weight = weight;

        let record = AugmentationRecord {
            sample_id: sample_index,
            applied,
            stage_confidences: confidences,
            composed_confidence: composed,
            soft_label,
            loss_weight: weight,
            rng_seed: global_seed,
            rng_sample_index: sample_index,
        };
        Ok((current, record))
    }

    /// Augments a whole dataset, in sample-index order.
    ///
    /// Samples are processed in parallel chunks on a dedicated thread pool
    /// of `workers` threads (0 uses the rayon default); because every
    /// sample derives its own RNG streams, the output is identical for any
    /// worker count. Per-sample failures surface as `Error::Sample` items;
    /// after more than `error_budget` failures the stream aborts.
    pub fn augment_dataset<'a>(
        &'a self,
        dataset: &'a DatasetHandle,
        global_seed: u64,
        workers: usize,
        error_budget: usize,
    ) -> Result<AugmentStream<'a>> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if workers > 0 {
            builder = builder.num_threads(workers);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
        Ok(AugmentStream {
            pipeline: self,
            dataset,
            global_seed,
            pool,
            error_budget,
            errors_seen: 0,
            next_index: 0,
            buffer: std::collections::VecDeque::new(),
            aborted: false,
        })
    }
}

const CHUNK: u64 = 256;

/// Ordered stream of augmented samples; see [`Pipeline::augment_dataset`].
pub struct AugmentStream<'a> {
    pipeline: &'a Pipeline,
    dataset: &'a DatasetHandle,
    global_seed: u64,
    pool: rayon::ThreadPool,
    error_budget: usize,
    errors_seen: usize,
    next_index: u64,
    buffer: std::collections::VecDeque<Result<(Image, AugmentationRecord)>>,
    aborted: bool,
}

impl Iterator for AugmentStream<'_> {
    type Item = Result<(Image, AugmentationRecord)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.aborted {
            if self.errors_seen > self.error_budget {
                // one final item naming the abort reason, then the end
                self.errors_seen = 0;
                return Some(Err(Error::ErrorBudget {
                    errors: self.error_budget + 1,
                }));
            }
            return None;
        }
        if self.buffer.is_empty() {
            let total = self.dataset.len();
            if self.next_index >= total {
                return None;
            }
            let end = (self.next_index + CHUNK).min(total);
            let indices: Vec<u64> = (self.next_index..end).collect();
            self.next_index = end;

            let pipeline = self.pipeline;
            let dataset = self.dataset;
            let seed = self.global_seed;
            let results: Vec<Result<(Image, AugmentationRecord)>> = self.pool.install(|| {
                indices
                    .par_iter()
                    .map(|&i| {
                        let (img, label) = dataset.get(i).map_err(|e| Error::Sample {
                            sample_id: i,
                            detail: e.to_string(),
                        })?;
                        pipeline
                            .augment_sample(&img, label, seed, i)
                            .map_err(|e| Error::Sample {
                                sample_id: i,
                                detail: e.to_string(),
                            })
                    })
                    .collect()
            });
            self.buffer.extend(results);
        }

        let item = self.buffer.pop_front()?;
        if item.is_err() {
            self.errors_seen += 1;
            if self.errors_seen > self.error_budget {
                // surface the per-sample error now; abort on the next pull
                self.aborted = true;
            }
        }
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::{ConfidenceMapping, InterpolatedTable, MappingPreset};
    use crate::rng::derived_stream;

    fn test_image() -> Image {
        let data: Vec<u8> = (0..32 * 32 * 3).map(|i| (i * 13 % 251) as u8).collect();
        Image::new(32, 32, 3, data).unwrap()
    }

    fn profile() -> MappingProfile {
        MappingProfile::preset(MappingPreset::Poly07, 10).unwrap()
    }

    #[test]
    fn ta_sample_is_deterministic_per_stream() {
        let draws = |seed| -> Vec<(TransformKind, u8)> {
            let mut rng = derived_stream(seed, 0);
            (0..50).map(|_| ta_sample(&mut rng)).collect()
        };
        assert_eq!(draws(5), draws(5));
        assert_ne!(draws(5), draws(6));
    }

    #[test]
    fn empty_pipeline_is_identity_with_one_hot_label() {
        let pipeline = Pipeline::new(vec![], profile(), 10, false).unwrap();
        let img = test_image();
        let (out, record) = pipeline.augment_sample(&img, 3, 1, 0).unwrap();
        assert_eq!(out, img);
        assert_eq!(record.composed_confidence, 1.0);
        assert_eq!(record.soft_label.dense()[3], 1.0);
        assert!(record.applied.is_empty());
    }

    #[test]
    fn identity_draw_keeps_full_confidence() {
        // under any profile, a drawn Identity transform maps to 1.0
        let pipeline = Pipeline::new(
            vec![PolicyStage {
                kind: StageKind::TrivialAugment {
                    ranges: TaRanges::default(),
                },
                soft: true,
            }],
            profile(),
            10,
            false,
        )
        .unwrap();
        let img = test_image();
        for sample in 0..200u64 {
            let (_, record) = pipeline.augment_sample(&img, 0, 99, sample).unwrap();
            if record.applied[0].kind == TransformKind::Identity {
                assert_eq!(record.stage_confidences[0], 1.0);
                return;
            }
        }
        panic!("no identity draw in 200 samples");
    }

    #[test]
    fn forced_phi_stages_compose_multiplicatively() {
        // RC mapped by a plateau table to 0.9 for any positive magnitude;
        // RE with a fixed 16x16 rectangle (phi = 0.25) mapped to 0.8.
        let mut profile = profile();
        profile
            .set(
                TransformKind::RandomCrop,
                ConfidenceMapping::InterpolatedTable {
                    table: InterpolatedTable::new(vec![(0.0, 1.0), (1e-9, 0.9), (1.0, 0.9)])
                        .unwrap(),
                },
            )
            .unwrap();
        profile
            .set(
                TransformKind::RandomErase,
                ConfidenceMapping::InterpolatedTable {
                    table: InterpolatedTable::new(vec![(0.0, 1.0), (0.25, 0.8), (1.0, 0.5)])
                        .unwrap(),
                },
            )
            .unwrap();
        let pipeline = Pipeline::new(
            vec![
                PolicyStage {
                    kind: StageKind::RandomCrop { padding: 4 },
                    soft: true,
                },
                PolicyStage {
                    kind: StageKind::RandomErase {
                        prob: 1.0,
                        area_range: (0.25, 0.25),
                        aspect_range: (1.0, 1.0),
                    },
                    soft: true,
                },
            ],
            profile,
            10,
            false,
        )
        .unwrap();
        let img = test_image();
        // seed chosen so the crop offset is not the centered no-op
        let (_, record) = pipeline.augment_sample(&img, 2, 11, 0).unwrap();
        assert!(record.applied[0].phi > 0.0, "crop drew the centered offset");
        assert_eq!(record.applied[1].phi, 0.25);
        assert_eq!(record.stage_confidences, vec![0.9, 0.8]);
        assert!((record.composed_confidence - 0.72).abs() < 1e-12);
    }

    #[test]
    fn hard_stages_keep_unit_confidence() {
        let pipeline = Pipeline::new(
            vec![
                PolicyStage {
                    kind: StageKind::TrivialAugment {
                        ranges: TaRanges::default(),
                    },
                    soft: false,
                },
                PolicyStage {
                    kind: StageKind::Gaussian { sigma: 0.1 },
                    soft: false,
                },
            ],
            profile(),
            10,
            false,
        )
        .unwrap();
        let img = test_image();
        for sample in 0..50u64 {
            let (_, record) = pipeline.augment_sample(&img, 1, 3, sample).unwrap();
            assert_eq!(record.composed_confidence, 1.0);
            assert_eq!(record.stage_confidences, vec![1.0, 1.0]);
            assert_eq!(record.soft_label.dense()[1], 1.0);
        }
    }

    #[test]
    fn soft_flag_does_not_change_image_bytes() {
        let stages = |soft| {
            vec![
                PolicyStage {
                    kind: StageKind::HorizontalFlip { prob: 0.5 },
                    soft,
                },
                PolicyStage {
                    kind: StageKind::TrivialAugment {
                        ranges: TaRanges::default(),
                    },
                    soft,
                },
                PolicyStage {
                    kind: StageKind::RandomErase {
                        prob: 0.5,
                        area_range: (0.02, 0.33),
                        aspect_range: (0.3, 3.3),
                    },
                    soft,
                },
            ]
        };
        let hard = Pipeline::new(stages(false), profile(), 10, false).unwrap();
        let soft = Pipeline::new(stages(true), profile(), 10, true).unwrap();
        let img = test_image();
        for sample in 0..20u64 {
            let (img_hard, rec_hard) = hard.augment_sample(&img, 0, 42, sample).unwrap();
            let (img_soft, rec_soft) = soft.augment_sample(&img, 0, 42, sample).unwrap();
            assert_eq!(img_hard, img_soft);
            assert_eq!(rec_hard.applied, rec_soft.applied);
        }
    }

    #[test]
    fn records_reproduce_from_provenance() {
        let pipeline = Pipeline::new(
            vec![PolicyStage {
                kind: StageKind::TrivialAugment {
                    ranges: TaRanges::default(),
                },
                soft: true,
            }],
            profile(),
            10,
            true,
        )
        .unwrap();
        let img = test_image();
        let (out_a, rec_a) = pipeline.augment_sample(&img, 5, 77, 13).unwrap();
        let (out_b, rec_b) = pipeline
            .augment_sample(&img, 5, rec_a.rng_seed, rec_a.rng_sample_index)
            .unwrap();
        assert_eq!(out_a, out_b);
        assert_eq!(rec_a, rec_b);
    }

    #[test]
    fn stage_insertion_does_not_perturb_earlier_stages() {
        let short = Pipeline::new(
            vec![PolicyStage {
                kind: StageKind::TrivialAugment {
                    ranges: TaRanges::default(),
                },
                soft: true,
            }],
            profile(),
            10,
            false,
        )
        .unwrap();
        let long = Pipeline::new(
            vec![
                PolicyStage {
                    kind: StageKind::TrivialAugment {
                        ranges: TaRanges::default(),
                    },
                    soft: true,
                },
                PolicyStage {
                    kind: StageKind::Gaussian { sigma: 0.1 },
                    soft: false,
                },
            ],
            profile(),
            10,
            false,
        )
        .unwrap();
        let img = test_image();
        let (_, rec_short) = short.augment_sample(&img, 0, 9, 4).unwrap();
        let (_, rec_long) = long.augment_sample(&img, 0, 9, 4).unwrap();
        assert_eq!(rec_short.applied[0], rec_long.applied[0]);
    }

    #[test]
    fn dataset_streams_differ_across_seeds_and_respect_budget() {
        let dir = tempfile::tempdir().unwrap();
        // image-folder dataset: one good image, one undecodable file
        let class = dir.path().join("things");
        std::fs::create_dir(&class).unwrap();
        crate::datasets::save_png(&test_image(), &class.join("a.png")).unwrap();
        std::fs::write(class.join("b.png"), b"not a png").unwrap();
        let other = dir.path().join("zother");
        std::fs::create_dir(&other).unwrap();
        crate::datasets::save_png(&test_image(), &other.join("c.png")).unwrap();
        let dataset = crate::datasets::load_image_folder(dir.path()).unwrap();
        assert_eq!(dataset.len(), 3);

        let pipeline = Pipeline::new(
            vec![PolicyStage {
                kind: StageKind::TrivialAugment {
                    ranges: TaRanges::default(),
                },
                soft: true,
            }],
            MappingProfile::preset(MappingPreset::Poly07, 2).unwrap(),
            2,
            false,
        )
        .unwrap();

        // budget 1 tolerates the single bad sample
        let items: Vec<_> = pipeline
            .augment_dataset(&dataset, 5, 2, 1)
            .unwrap()
            .collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(Error::Sample { sample_id: 1, .. })));
        assert!(items[2].is_ok());

        // budget 0 surfaces the failure with its sample id, then aborts
        let items: Vec<_> = pipeline
            .augment_dataset(&dataset, 5, 2, 0)
            .unwrap()
            .collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(Error::Sample { sample_id: 1, .. })));
        assert!(matches!(items[2], Err(Error::ErrorBudget { .. })));

        // different seeds give different records for the good samples
        let record_for = |seed: u64| {
            pipeline
                .augment_dataset(&dataset, seed, 1, 1)
                .unwrap()
                .next()
                .unwrap()
                .unwrap()
                .1
        };
        assert_ne!(record_for(5).applied, record_for(6).applied);
    }

    #[test]
    fn missing_profile_entry_fails_at_construction() {
        // a file profile with no entries only covers the pinned kinds
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("profile.txt");
        std::fs::write(&manifest, "# nothing assigned\n").unwrap();
        let sparse = MappingProfile::from_manifest_file(&manifest, 10).unwrap();
        let err = Pipeline::new(
            vec![PolicyStage {
                kind: StageKind::RandomErase {
                    prob: 1.0,
                    area_range: (0.1, 0.3),
                    aspect_range: (0.3, 3.3),
                },
                soft: true,
            }],
            sparse,
            10,
            false,
        );
        match err {
            Err(Error::Config(msg)) => assert!(msg.contains("random-erase"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{upsample_dataset, AugmentBounds};
use crate::ctr::{binary_label, compute_ctr, CtrCategory, Label};
use crate::error::{Error, Result};
use crate::eval::{evaluate as evaluate_pairs, scatter_export, write_scatter_csv, EvalPair};
use crate::fsutil::{write_atomic, write_atomic_str};
use crate::ingest::{
    load_image, load_sample, parse_via, read_manifest, resize, resize_mask, save_mask, save_rgb,
    split, write_manifest, write_sample, ManifestRecord, Provenance, SplitFractions, SplitName,
};
use crate::phantom::{generate_dataset_with, DatasetOptions};
use crate::postproc::{channel_to_box, extract_box, MorphConfig, StructureBoxes, StructuringElement};
use crate::segnet::{train_with, write_history_csv, Checkpoint, Dataset, NetConfig, TrainConfig};
use crate::types::{BoundingBox, GrayImage, MaskPair, Structure};

use super::config::RunConfig;
use super::overlay::render_overlay;
use super::{AugmentArgs, EvaluateArgs, GenerateArgs, InferArgs, MorphArgs, OverlayArgs, TrainArgs};

const MANIFEST: &str = "manifest.jsonl";

fn resolved(cfg: &RunConfig, command: &str) -> Result<()> {
    cfg.finish()?;
    log::info!("{command}: {}", cfg.summary());
    Ok(())
}

fn parse_fractions(s: &str) -> Result<SplitFractions> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidConfig(format!("split {s:?}: {e}")))?;
    match parts.as_slice() {
        [a, b, c] => SplitFractions::new(*a, *b, *c),
        _ => Err(Error::InvalidConfig(format!("split {s:?}: expected train,validation,test"))),
    }
}

fn parse_split_name(s: &str) -> Result<SplitName> {
    match s.to_ascii_lowercase().as_str() {
        "train" => Ok(SplitName::Train),
        "validation" | "val" => Ok(SplitName::Validation),
        "test" => Ok(SplitName::Test),
        _ => Err(Error::InvalidConfig(format!("unknown split {s:?}"))),
    }
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn require_masks(record: &ManifestRecord, masks: Option<MaskPair>) -> Result<MaskPair> {
    masks.ok_or_else(|| Error::MalformedDocument(format!("record {} has no masks", record.id)))
}

pub fn generate(cfg: &RunConfig, a: GenerateArgs) -> Result<String> {
    let n: usize = cfg.require("n", a.n)?;
    let size = cfg.get("size", a.size, 64)?;
    let ctr_min = cfg.get("ctr-min", a.ctr_min, 0.35)?;
    let ctr_max = cfg.get("ctr-max", a.ctr_max, 0.65)?;
    let noise = cfg.get("noise", a.noise, 0.03)?;
    let split_spec = cfg.get("split", a.split, "0.8,0.1,0.1".to_string())?;
    let out = PathBuf::from(cfg.require::<String>("out", a.out)?);
    let seed = cfg.get("seed", a.seed, 0)?;
    resolved(cfg, "generate")?;
    if n < 2 {
        return Err(Error::InvalidConfig(format!("--n must be at least 2, got {n}")));
    }
    let fractions = parse_fractions(&split_spec)?;

    let options = DatasetOptions {
        image_size: size,
        noise_sigma: noise,
        ..DatasetOptions::default()
    };
    let samples = generate_dataset_with(n, (ctr_min, ctr_max), seed, &options)?;
    let ids: Vec<String> = (0..n).map(|i| format!("phantom_{i:05}")).collect();
    let positive: Vec<bool> = samples.iter().map(|s| s.analytic_ctr > 0.5).collect();
    let parts = split(&ids, fractions, seed, Some(&positive))?;
    let mut split_of = HashMap::new();
    for (name, list) in [
        (SplitName::Train, &parts.train),
        (SplitName::Validation, &parts.validation),
        (SplitName::Test, &parts.test),
    ] {
        for id in list {
            split_of.insert(id.as_str(), name);
        }
    }

    let mut records = Vec::with_capacity(n);
    for (id, s) in ids.iter().zip(&samples) {
        let files = write_sample(&out, id, &s.image, &s.masks)?;
        let mut r = ManifestRecord::new(id.clone(), files.image);
        r.heart_mask = Some(files.heart_mask);
        r.thorax_mask = Some(files.thorax_mask);
        r.analytic_ctr = Some(s.analytic_ctr);
        r.label = Some(binary_label(s.analytic_ctr));
        r.split = split_of.get(id.as_str()).copied();
        records.push(r);
    }
    write_manifest(out.join(MANIFEST), &records)?;
    let pos = positive.iter().filter(|p| **p).count();
    Ok(format!(
        "generated {n} phantoms ({pos} positive, {} negative) at {size}x{size}; splits {}/{}/{}; manifest {}",
        n - pos,
        parts.train.len(),
        parts.validation.len(),
        parts.test.len(),
        out.join(MANIFEST).display()
    ))
}

pub fn augment(cfg: &RunConfig, a: AugmentArgs) -> Result<String> {
    let manifest = PathBuf::from(cfg.require::<String>("manifest", a.manifest)?);
    let fraction = cfg.get("fraction", a.fraction, 0.75)?;
    let out = PathBuf::from(cfg.require::<String>("out", a.out)?);
    let seed = cfg.get("seed", a.seed, 0)?;
    resolved(cfg, "augment")?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("--fraction {fraction} must lie in (0, 1]")));
    }

    let base = manifest_dir(&manifest);
    let records = read_manifest(&manifest)?;
    let any_split = records.iter().any(|r| r.split.is_some());
    let mut out_records = Vec::with_capacity(records.len());
    let mut sources = Vec::new();
    let mut source_ids = Vec::new();
    for r in &records {
        let (image, masks) = load_sample(&base, r)?;
        let mut copy = r.clone();
        match &masks {
            Some(m) => {
                let files = write_sample(&out, &r.id, &image, m)?;
                copy.image = files.image;
                copy.heart_mask = Some(files.heart_mask);
                copy.thorax_mask = Some(files.thorax_mask);
            }
            None => {
                copy.image = format!("images/{}.png", r.id);
                crate::ingest::save_image(&image, out.join(&copy.image))?;
            }
        }
        out_records.push(copy);
        if !any_split || r.split == Some(SplitName::Train) {
            sources.push((image, require_masks(r, masks)?));
            source_ids.push(r.id.clone());
        }
    }
    if sources.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let augmented = upsample_dataset(&sources, fraction, seed, &AugmentBounds::default())?;
    for (k, s) in augmented.iter().enumerate() {
        let id = format!("{}_aug{k:05}", source_ids[s.source]);
        let heart = extract_box(s.masks.heart(), Structure::Heart)?;
        let thorax = extract_box(s.masks.thorax(), Structure::Thorax)?;
        let ctr = compute_ctr(&heart, &thorax)?.ctr;
        let files = write_sample(&out, &id, &s.image, &s.masks)?;
        let mut r = ManifestRecord::new(id, files.image);
        r.heart_mask = Some(files.heart_mask);
        r.thorax_mask = Some(files.thorax_mask);
        r.annotated_ctr = Some(ctr);
        r.label = Some(binary_label(ctr));
        r.split = Some(SplitName::Train);
        r.provenance = Some(Provenance {
            source_id: source_ids[s.source].clone(),
            plan: s.plan.clone(),
        });
        out_records.push(r);
    }
    write_manifest(out.join(MANIFEST), &out_records)?;
    Ok(format!(
        "augmented {} source rows by {fraction}: {} new rows, {} total; manifest {}",
        sources.len(),
        augmented.len(),
        out_records.len(),
        out.join(MANIFEST).display()
    ))
}

/// Loads `(image, masks)` pairs at `size x size`, resizing where needed.
fn load_pairs(base: &Path, records: &[&ManifestRecord], size: usize) -> Result<Vec<(GrayImage, MaskPair)>> {
    records
        .iter()
        .map(|r| {
            let (image, masks) = load_sample(base, r)?;
            let masks = require_masks(r, masks)?;
            if image.height() == size && image.width() == size {
                return Ok((image, masks));
            }
            let (h, t) = masks.into_parts();
            Ok((resize(&image, size)?, MaskPair::new(resize_mask(&h, size)?, resize_mask(&t, size)?)?))
        })
        .collect()
}

pub fn train(cfg: &RunConfig, a: TrainArgs) -> Result<String> {
    let manifest = PathBuf::from(cfg.require::<String>("manifest", a.manifest)?);
    let out = PathBuf::from(cfg.require::<String>("out", a.out)?);
    let defaults = TrainConfig::default();
    let net_defaults = NetConfig::default();
    let mut tc = defaults;
    tc.epochs = cfg.get("epochs", a.epochs, defaults.epochs)?;
    tc.batch_size = cfg.get("batch-size", a.batch_size, defaults.batch_size)?;
    tc.learning_rate = cfg.get("lr", a.lr, defaults.learning_rate)?;
    tc.plateau.patience = cfg.get("patience", a.patience, defaults.plateau.patience)?;
    tc.plateau.factor = cfg.get("factor", a.factor, defaults.plateau.factor)?;
    tc.plateau.min_lr = cfg.get("min-lr", a.min_lr, defaults.plateau.min_lr)?;
    tc.seed = cfg.get("seed", a.seed, defaults.seed)?;
    let base_channels = cfg.get("base-channels", a.base_channels, net_defaults.base_channels)?;
    let depth = cfg.get("depth", a.depth, net_defaults.depth)?;
    let image_size = cfg.optional("image-size", a.image_size)?;
    let no_attention = cfg.switch("no-attention", a.no_attention)?;
    resolved(cfg, "train")?;
    tc.validate()?;

    let base = manifest_dir(&manifest);
    let records = read_manifest(&manifest)?;
    let pick = |s: SplitName| records.iter().filter(|r| r.split == Some(s)).collect::<Vec<_>>();
    let (train_rows, val_rows) = (pick(SplitName::Train), pick(SplitName::Validation));
    if train_rows.is_empty() || val_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let size = match image_size {
        Some(s) => s,
        None => load_image(base.join(&train_rows[0].image))?.width(),
    };
    let net_cfg = NetConfig {
        input_size: size,
        base_channels,
        depth,
        attention_gate: !no_attention,
    };
    net_cfg.validate()?;
    let train_set = Dataset::from_samples(&load_pairs(&base, &train_rows, size)?)?;
    let val_set = Dataset::from_samples(&load_pairs(&base, &val_rows, size)?)?;
    let outcome = train_with(&train_set, &val_set, net_cfg, &tc, |_| {})?;

    let ck_path = out.join("checkpoint.json");
    outcome.checkpoint.save(&ck_path)?;
    let mut csv = Vec::new();
    write_history_csv(&outcome.history, &mut csv)?;
    write_atomic(&out.join("history.csv"), &csv)?;
    Ok(format!(
        "trained {} epochs on {} / {} rows; best epoch {} val_loss {:.6}; checkpoint {}",
        outcome.history.len(),
        train_set.len(),
        val_set.len(),
        outcome.checkpoint.epoch,
        outcome.checkpoint.val_loss,
        ck_path.display()
    ))
}

/// One line of `infer` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heart_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thorax_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heart_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thorax_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<CtrCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_ctr: Option<f64>,
    /// Why no CTR could be measured (e.g. no heart detected).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

fn morph_config(cfg: &RunConfig, m: MorphArgs) -> Result<MorphConfig> {
    let d = MorphConfig::default();
    let element = match cfg.optional::<String>("element", m.element)? {
        Some(s) => s.parse::<StructuringElement>()?,
        None => d.element,
    };
    let c = MorphConfig {
        threshold: cfg.get("threshold", m.threshold, d.threshold)?,
        erosion_iters: cfg.get("erosion-iters", m.erosion_iters, d.erosion_iters)?,
        dilation_iters: cfg.get("dilation-iters", m.dilation_iters, d.dilation_iters)?,
        element,
    };
    c.validate()?;
    Ok(c)
}

/// Maps a box found on a `size x size` raster back onto `height x width`.
fn rescale_box(b: BoundingBox, size: usize, height: usize, width: usize) -> Result<BoundingBox> {
    if size == height && size == width {
        return Ok(b);
    }
    let lo = |v: usize, n: usize| v * n / size;
    let hi = |v: usize, n: usize| ((v + 1) * n).div_ceil(size).saturating_sub(1).min(n - 1);
    BoundingBox::new(lo(b.x_min, width), lo(b.y_min, height), hi(b.x_max, width), hi(b.y_max, height))
}

pub fn infer(cfg: &RunConfig, a: InferArgs) -> Result<String> {
    let manifest = PathBuf::from(cfg.require::<String>("manifest", a.manifest)?);
    let split_filter = cfg.optional::<String>("split", a.split)?;
    let checkpoint = cfg.optional::<String>("checkpoint", a.checkpoint)?;
    let gt = cfg.switch("gt-masks", a.gt_masks)?;
    let morph = morph_config(cfg, a.morph)?;
    let save = cfg.switch("save-masks", a.save_masks)?;
    let out = PathBuf::from(cfg.require::<String>("out", a.out)?);
    resolved(cfg, "infer")?;

    let base = manifest_dir(&manifest);
    let wanted = split_filter.as_deref().map(parse_split_name).transpose()?;
    let records: Vec<ManifestRecord> = read_manifest(&manifest)?
        .into_iter()
        .filter(|r| wanted.is_none() || r.split == wanted)
        .collect();
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // (record, original height/width, analysis size, heart and thorax probabilities)
    let mut inputs = Vec::with_capacity(records.len());
    if gt {
        for r in &records {
            let (image, masks) = load_sample(&base, r)?;
            let masks = require_masks(r, masks)?;
            let (h, w) = (image.height(), image.width());
            if h != w {
                return Err(Error::ShapeMismatch(format!("{}: image is not square", r.id)));
            }
            inputs.push((r, h, w, h, [masks.heart().to_probabilities(), masks.thorax().to_probabilities()]));
        }
    } else {
        let path = checkpoint
            .ok_or_else(|| Error::InvalidConfig("--checkpoint is required unless --gt-masks is set".into()))?;
        let net = Checkpoint::load(&path)?.to_net()?;
        let size = net.config().input_size;
        let mut images = Vec::with_capacity(records.len());
        let mut dims = Vec::with_capacity(records.len());
        for r in &records {
            let (image, _) = load_sample(&base, &ManifestRecord::new(r.id.clone(), r.image.clone()))?;
            dims.push((image.height(), image.width()));
            images.push(if image.height() == size && image.width() == size {
                image
            } else {
                resize(&image, size)?
            });
        }
        let probs = net.predict(&images, 8)?;
        for ((r, (h, w)), p) in records.iter().zip(dims).zip(probs) {
            inputs.push((r, h, w, size, p));
        }
    }

    let mut predictions = Vec::with_capacity(inputs.len());
    let mut failures = 0;
    for (r, h, w, size, [heart_p, thorax_p]) in inputs {
        let mut rec = PredictionRecord {
            id: r.id.clone(),
            image: r.image.clone(),
            heart_box: None,
            thorax_box: None,
            heart_width: None,
            thorax_width: None,
            ctr: None,
            category: None,
            label: None,
            reference_ctr: r.reference_ctr(),
            failure: None,
        };
        let heart = channel_to_box(&heart_p, size, size, Structure::Heart, &morph);
        let thorax = channel_to_box(&thorax_p, size, size, Structure::Thorax, &morph);
        match (heart, thorax) {
            (Ok((hm, hb)), Ok((tm, tb))) => {
                if save {
                    save_mask(&hm, out.join(format!("masks/{}_heart.png", r.id)))?;
                    save_mask(&tm, out.join(format!("masks/{}_thorax.png", r.id)))?;
                }
                let hb = rescale_box(hb, size, h, w)?;
                let tb = rescale_box(tb, size, h, w)?;
                let m = compute_ctr(&hb, &tb)?;
                rec.heart_box = Some(hb);
                rec.thorax_box = Some(tb);
                rec.heart_width = Some(m.heart_width);
                rec.thorax_width = Some(m.thorax_width);
                rec.ctr = Some(m.ctr);
                rec.category = Some(m.category);
                rec.label = Some(m.label());
            }
            (Err(e @ Error::EmptyMask(_)), _) | (_, Err(e @ Error::EmptyMask(_))) => {
                log::warn!("{}: {e}", r.id);
                rec.failure = Some(e.to_string());
                failures += 1;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
        predictions.push(rec);
    }

    let mut text = String::new();
    for p in &predictions {
        text.push_str(&serde_json::to_string(p).expect("records always serialize"));
        text.push('\n');
    }
    let path = out.join("predictions.jsonl");
    write_atomic_str(&path, &text)?;

    let errors: Vec<f64> = predictions
        .iter()
        .filter_map(|p| Some((p.ctr? - p.reference_ctr?).abs()))
        .collect();
    let mut summary = format!(
        "inferred {} images ({}): {} measured, {failures} detection failures",
        predictions.len(),
        if gt { "ground-truth masks" } else { "network" },
        predictions.len() - failures
    );
    if !errors.is_empty() {
        let mae = errors.iter().sum::<f64>() / errors.len() as f64;
        let max = errors.iter().cloned().fold(0.0, f64::max);
        summary.push_str(&format!("; mae vs reference {mae:.4}, max {max:.4}"));
    }
    summary.push_str(&format!("; predictions {}", path.display()));
    Ok(summary)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::MalformedDocument(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn file_name(p: &str) -> &str {
    Path::new(p).file_name().and_then(|s| s.to_str()).unwrap_or(p)
}

fn file_stem(p: &str) -> &str {
    Path::new(p).file_stem().and_then(|s| s.to_str()).unwrap_or(p)
}

/// Finds the prediction for an annotated image by id, file name or stem.
fn find_prediction<'a>(preds: &'a [PredictionRecord], key: &str) -> Option<&'a PredictionRecord> {
    preds.iter().find(|p| p.id == key || file_name(&p.image) == key)
        .or_else(|| preds.iter().find(|p| p.id == file_stem(key)))
}

pub fn evaluate(cfg: &RunConfig, a: EvaluateArgs) -> Result<String> {
    let pred_path = PathBuf::from(cfg.require::<String>("predictions", a.predictions)?);
    let via = cfg.optional::<String>("annotations", a.annotations)?;
    let manifest = cfg.optional::<String>("manifest", a.manifest)?;
    let out = PathBuf::from(cfg.require::<String>("out", a.out)?);
    resolved(cfg, "evaluate")?;

    let references: Vec<(String, f64)> = match (via, manifest) {
        (Some(v), None) => {
            let text = fs::read_to_string(&v).map_err(|e| Error::io(&v, e))?;
            parse_via(&text)?
                .into_iter()
                .map(|a| (a.image_id, a.annotated_ctr))
                .collect()
        }
        (None, Some(m)) => read_manifest(&m)?
            .into_iter()
            .filter_map(|r| Some((r.id.clone(), r.reference_ctr()?)))
            .collect(),
        _ => {
            return Err(Error::InvalidConfig(
                "give exactly one of --annotations or --manifest".into(),
            ))
        }
    };
    let preds = read_predictions(&pred_path)?;
    let mut pairs = Vec::with_capacity(references.len());
    let mut unmatched = 0;
    for (key, ctr) in references {
        match find_prediction(&preds, &key) {
            Some(p) => pairs.push(EvalPair::new(p.id.clone(), ctr, p.ctr)),
            None => unmatched += 1,
        }
    }
    if unmatched > 0 {
        log::warn!("{unmatched} annotated images have no prediction and are left out");
    }
    let report = evaluate_pairs(&pairs)?;
    let text = report.to_key_value();
    write_atomic_str(&out.join("report.txt"), &text)?;
    let mut csv = Vec::new();
    write_scatter_csv(&scatter_export(&pairs), &mut csv)?;
    write_atomic(&out.join("scatter.csv"), &csv)?;
    Ok(text.trim_end().to_string())
}

fn box_pair(cfg: &RunConfig, heart_key: &str, heart: Option<String>, thorax_key: &str, thorax: Option<String>) -> Result<Option<StructureBoxes>> {
    let heart = cfg.optional::<String>(heart_key, heart)?;
    let thorax = cfg.optional::<String>(thorax_key, thorax)?;
    match (heart, thorax) {
        (Some(h), Some(t)) => Ok(Some(StructureBoxes {
            heart: h.parse()?,
            thorax: t.parse()?,
        })),
        (None, None) => Ok(None),
        _ => Err(Error::InvalidConfig(format!(
            "--{heart_key} and --{thorax_key} must be given together"
        ))),
    }
}

pub fn overlay(cfg: &RunConfig, a: OverlayArgs) -> Result<String> {
    let image_path = cfg.require::<String>("image", a.image)?;
    let mut annotated = box_pair(cfg, "annotated-heart", a.annotated_heart, "annotated-thorax", a.annotated_thorax)?;
    let via = cfg.optional::<String>("annotations", a.annotations)?;
    let mut predicted = box_pair(cfg, "predicted-heart", a.predicted_heart, "predicted-thorax", a.predicted_thorax)?;
    let preds = cfg.optional::<String>("predictions", a.predictions)?;
    let out = PathBuf::from(cfg.require::<String>("out", a.out)?);
    resolved(cfg, "overlay")?;

    let image = load_image(&image_path)?;
    let name = file_name(&image_path).to_string();
    if let (None, Some(v)) = (&annotated, via) {
        let text = fs::read_to_string(&v).map_err(|e| Error::io(&v, e))?;
        let ann = parse_via(&text)?
            .into_iter()
            .find(|a| a.image_id == name)
            .ok_or_else(|| Error::MalformedDocument(format!("{v}: no annotation for {name}")))?;
        annotated = Some(StructureBoxes {
            heart: ann.heart,
            thorax: ann.thorax,
        });
    }
    if let (None, Some(p)) = (&predicted, preds) {
        let records = read_predictions(Path::new(&p))?;
        predicted = find_prediction(&records, &name).and_then(|r| {
            Some(StructureBoxes {
                heart: r.heart_box?,
                thorax: r.thorax_box?,
            })
        });
    }
    for b in annotated.iter().chain(predicted.iter()) {
        for bb in [b.heart, b.thorax] {
            if !bb.fits_in(image.height(), image.width()) {
                return Err(Error::InvalidBox(format!("{bb} lies outside the image")));
            }
        }
    }
    let rgb = render_overlay(&image, annotated.as_ref(), predicted.as_ref());
    save_rgb(&rgb, &out)?;
    Ok(format!(
        "overlay {} ({}x{}): annotated {}, predicted {}",
        out.display(),
        rgb.width(),
        rgb.height(),
        if annotated.is_some() { "drawn" } else { "none" },
        if predicted.is_some() { "drawn" } else { "none" }
    ))
}

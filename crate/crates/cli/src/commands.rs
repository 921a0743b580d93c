use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use iriskit_core::crypts;
use iriskit_core::embedding::normalize_embedding;
use iriskit_core::eval::{
    self, compute_metrics, metrics_table, protocol_discard, protocol_failure_as_nonmatch,
    protocol_intersection, RankInput, ScoreRecord, ScoreSet,
};
use iriskit_core::geometry::{self, quality_gate_with, rubber_sheet, CircleParams};
use iriskit_core::hdbif;
use iriskit_core::identify::{
    search_1n, timing_report, GalleryEntry, SearchConfig, TimedOperation, TimingBudgets, TimingEvent,
};
use iriskit_core::image::{BinaryMask, GrayImage};
use iriskit_core::io::{self, ManifestRow};
use iriskit_core::matcher::{Matcher, MatcherRegistry};
use iriskit_core::templates::{EyeLabel, FloatEmbeddingTemplate, Payload, Template, TemplateKind};
use serde_json::json;

use crate::config::{Protocol, RunConfig};
use crate::{
    CliError, CryptsMatchArgs, EncodeArgs, EnrollArgs, EvalArgs, FitCirclesArgs, NormalizeArgs,
    ParityArgs, SearchArgs, VerifyArgs,
};

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn processing(e: impl std::fmt::Display) -> CliError {
    CliError::Processing(e.to_string())
}

fn stem(path: &Path) -> Result<String, CliError> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| validation(format!("{}: cannot derive an id from the file name", path.display())))
}

/// Turns a list of per-item failures into one processing error.
fn finish(failures: Vec<String>, what: &str) -> Result<(), CliError> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        log::error!("{f}");
    }
    Err(processing(format!("{} {what} failed; first: {}", failures.len(), failures[0])))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(processing)?;
    text.push('\n');
    Ok(io::write_atomic(path, text.as_bytes())?)
}

fn find_image(dir: &Path, id: &str) -> Result<PathBuf, CliError> {
    ["pgm", "png"]
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| validation(format!("no {id}.pgm or {id}.png in {}", dir.display())))
}

pub fn fit_circles(_cfg: &RunConfig, args: &FitCirclesArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for path in &args.masks {
        let id = stem(path)?;
        let mask = io::read_mask(path)?;
        match geometry::fit_circles_hough(&mask) {
            Ok(fit) => {
                if fit.degenerate {
                    log::warn!("{id}: no pupil hole found, pupil radius set to 0.3 x iris radius");
                }
                rows.push((id, fit.circles));
            }
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    io::write_atomic(&args.out, &io::circles_csv(&rows))?;
    finish(failures, "circle fits")
}

/// Brings an occlusion mask into the preprocessed frame.
fn preprocess_mask(mask: &BinaryMask, cfg: &RunConfig) -> Result<BinaryMask, CliError> {
    let as_gray = GrayImage::from_fn(mask.width(), mask.height(), |x, y| f64::from(u8::from(mask.get(x, y))))
        .map_err(processing)?;
    let (scaled, _) =
        geometry::preprocess_image(&as_gray, cfg.target_width, cfg.target_height).map_err(processing)?;
    Ok(BinaryMask::from_fn(scaled.width(), scaled.height(), |x, y| scaled.get(x, y) > 0.5))
}

pub fn normalize(cfg: &RunConfig, args: &NormalizeArgs) -> Result<(), CliError> {
    let circles: BTreeMap<String, CircleParams> = io::read_circles_csv(&args.circles)?.into_iter().collect();
    let mut jobs = Vec::new();
    for path in &args.images {
        let id = stem(path)?;
        let c = *circles
            .get(&id)
            .ok_or_else(|| validation(format!("{id}: no row in {}", args.circles.display())))?;
        let mask = args.mask_dir.as_deref().map(|d| find_image(d, &id)).transpose()?;
        jobs.push((id, path, c, mask));
    }

    let mut rejected = Vec::new();
    let mut failures = Vec::new();
    for (id, path, c, mask_path) in jobs {
        let raw = io::read_gray_image(path)?;
        let mask = match mask_path {
            Some(p) => {
                let m = io::read_mask(&p)?;
                if m.width() != raw.width() || m.height() != raw.height() {
                    return Err(validation(format!("{}: mask size differs from its image", p.display())));
                }
                Some(preprocess_mask(&m, cfg)?)
            }
            None => None,
        };
        let (img, frame) = geometry::preprocess_image(&raw, cfg.target_width, cfg.target_height).map_err(processing)?;
        let c = frame.circles_to_target(&c);
        let verdict = quality_gate_with(&c, mask.as_ref(), &cfg.quality);
        if !verdict.accepted() {
            let codes: Vec<&str> = verdict.reasons.iter().map(|r| r.code()).collect();
            log::warn!("{id}: rejected ({})", codes.join(", "));
            rejected.push((id, codes.join(";")));
            continue;
        }
        match rubber_sheet(&img, &c, mask.as_ref(), cfg.radial_res, cfg.angular_res) {
            Ok(iris) => io::write_normalized(
                &args.out_dir.join(format!("{id}.polar.pgm")),
                &args.out_dir.join(format!("{id}.polarmask.pgm")),
                &iris,
            )?,
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    io::write_atomic(&args.out_dir.join("rejected.csv"), &io::rejections_csv(&rejected))?;
    finish(failures, "normalizations")
}

pub fn encode(cfg: &RunConfig, args: &EncodeArgs) -> Result<(), CliError> {
    let eyes: BTreeMap<String, EyeLabel> = match &args.eyes {
        Some(p) => io::read_eye_labels(p)?.into_iter().collect(),
        None => BTreeMap::new(),
    };
    let eye_of = |id: &str| eyes.get(id).copied().unwrap_or(cfg.eye);
    let mut out: Vec<(String, Template)> = Vec::new();
    let mut failures = Vec::new();

    if let Some(dir) = &args.polar_dir {
        let bank = cfg.filter_bank()?;
        let mut ids: Vec<String> = fs::read_dir(dir)
            .map_err(|e| validation(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok()?.file_name().to_str()?.strip_suffix(".polar.pgm").map(str::to_string))
            .collect();
        ids.sort();
        if ids.is_empty() {
            return Err(validation(format!("no *.polar.pgm files in {}", dir.display())));
        }
        for id in ids {
            let iris = io::read_normalized(
                &dir.join(format!("{id}.polar.pgm")),
                &dir.join(format!("{id}.polarmask.pgm")),
            )?;
            match hdbif::encode(&iris, &bank) {
                Ok(code) => out.push((id.clone(), Template::new(eye_of(&id), Payload::BinaryCode(code)))),
                Err(e) => failures.push(format!("{id}: {e}")),
            }
        }
    } else if let Some(path) = &args.embeddings {
        for row in io::read_embeddings_csv(path)? {
            let values = match cfg.metric {
                iriskit_core::templates::EmbeddingMetric::Angular => match normalize_embedding(&row.values) {
                    Ok(v) => v,
                    Err(e) => {
                        failures.push(format!("{}: {e}", row.image_id));
                        continue;
                    }
                },
                iriskit_core::templates::EmbeddingMetric::Euclidean => row.values,
            };
            let t = FloatEmbeddingTemplate::new(values, cfg.metric).map_err(|e| validation(format!("{}: {e}", row.image_id)))?;
            let eye = eyes.get(&row.image_id).copied().unwrap_or(row.eye);
            out.push((row.image_id, Template::new(eye, Payload::Embedding(t))));
        }
    } else if !args.crypt_masks.is_empty() {
        for path in &args.crypt_masks {
            let id = stem(path)?;
            let mask = io::read_mask(path)?;
            out.push((id.clone(), Template::new(eye_of(&id), Payload::CryptMask(mask))));
        }
    } else {
        return Err(validation("one of --polar-dir, --embeddings or --crypt-masks is required"));
    }

    for (id, t) in &out {
        io::write_template(&args.out_dir.join(format!("{id}.irxt")), t)?;
        if args.wire {
            io::write_wire_template(&args.out_dir.join(format!("{id}.irxw")), t)?;
        }
    }
    finish(failures, "encodings")
}

fn load_manifest_templates(rows: &[ManifestRow]) -> Result<Vec<Template>, CliError> {
    let mut out = Vec::with_capacity(rows.len());
    let mut kind: Option<TemplateKind> = None;
    for r in rows {
        let t = io::read_template(&r.template_path)?;
        if t.eye != r.eye {
            return Err(validation(format!(
                "{}: manifest says eye {} but the template holds {}",
                r.template_path.display(),
                r.eye.as_str(),
                t.eye.as_str()
            )));
        }
        match kind {
            Some(k) if k != t.kind() => {
                return Err(validation(format!(
                    "{}: {:?} template mixed with {:?} templates",
                    r.template_path.display(),
                    t.kind(),
                    k
                )))
            }
            _ => kind = Some(t.kind()),
        }
        out.push(t);
    }
    Ok(out)
}

pub fn enroll(_cfg: &RunConfig, args: &EnrollArgs) -> Result<(), CliError> {
    let rows = io::read_manifest(&args.manifest)?;
    if rows.is_empty() {
        return Err(validation(format!("{}: manifest is empty", args.manifest.display())));
    }
    let templates = load_manifest_templates(&rows)?;
    let tdir = args.gallery.join("templates");
    let mut out_rows = Vec::with_capacity(rows.len());
    for (i, (row, t)) in rows.iter().zip(&templates).enumerate() {
        let path = tdir.join(format!("t{i:06}.irxt"));
        io::write_template(&path, t)?;
        out_rows.push(ManifestRow {
            identity_id: row.identity_id.clone(),
            eye: row.eye,
            template_path: path,
        });
    }
    io::write_atomic(
        &args.gallery.join("manifest.csv"),
        &io::manifest_csv(&out_rows, &args.gallery),
    )?;
    log::info!("enrolled {} templates", out_rows.len());
    Ok(())
}

/// Groups manifest rows by their first column, in first-appearance order.
fn group(rows: Vec<ManifestRow>, templates: Vec<Template>) -> Vec<(String, Vec<Template>)> {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Vec<Template>> = BTreeMap::new();
    for (r, t) in rows.into_iter().zip(templates) {
        if !map.contains_key(&r.identity_id) {
            order.push(r.identity_id.clone());
        }
        map.entry(r.identity_id).or_default().push(t);
    }
    order
        .into_iter()
        .map(|id| {
            let ts = map.remove(&id).expect("grouped above");
            (id, ts)
        })
        .collect()
}

fn registry_matcher(cfg: &RunConfig) -> Result<std::sync::Arc<dyn Matcher>, CliError> {
    MatcherRegistry::builtin(&cfg.matcher_settings())
        .get(&cfg.matcher)
        .map_err(validation)
}

fn check_kinds(m: &dyn Matcher, ts: &[Template], what: &str) -> Result<(), CliError> {
    if let Some(t) = ts.iter().find(|t| t.kind() != m.kind()) {
        return Err(validation(format!(
            "matcher {} needs {:?} templates but {what} holds {:?}",
            m.name(),
            m.kind(),
            t.kind()
        )));
    }
    Ok(())
}

pub fn search(cfg: &mut RunConfig, args: &SearchArgs) -> Result<(), CliError> {
    if let Some(m) = &args.matcher {
        cfg.matcher = m.to_ascii_lowercase();
    }
    if let Some(n) = args.candidates {
        if n == 0 {
            return Err(validation("--candidates must be positive"));
        }
        cfg.candidate_list_length = n;
    }
    let matcher = registry_matcher(cfg)?;

    let grows = io::read_manifest(&args.gallery.join("manifest.csv"))?;
    let gtemplates = load_manifest_templates(&grows)?;
    check_kinds(matcher.as_ref(), &gtemplates, "the gallery")?;
    let gallery: Vec<GalleryEntry> = group(grows, gtemplates)
        .into_iter()
        .map(|(id, ts)| GalleryEntry::new(id, ts).map_err(validation))
        .collect::<Result<_, _>>()?;
    if gallery.is_empty() {
        return Err(validation("gallery is empty"));
    }

    let prows = io::read_manifest(&args.probes)?;
    let ptemplates = load_manifest_templates(&prows)?;
    check_kinds(matcher.as_ref(), &ptemplates, "the probe manifest")?;
    let probes = group(prows, ptemplates);

    let scfg = SearchConfig {
        candidate_list_length: cfg.candidate_list_length,
        failure_policy: cfg.failure_policy,
        parallel: cfg.parallel,
    };
    let mut rows = Vec::new();
    let mut events = Vec::new();
    for (probe_id, templates) in &probes {
        let start = Instant::now();
        let outcome = search_1n(templates, &gallery, matcher.as_ref(), &scfg).map_err(processing)?;
        events.push(TimingEvent::new(TimedOperation::Search, probe_id.clone(), start.elapsed()));
        for f in &outcome.failed {
            log::info!("{probe_id}: identity {} not scored: {}", f.identity_id, f.reason);
        }
        rows.extend(outcome.candidates.into_iter().map(|c| (probe_id.clone(), c)));
    }
    io::write_atomic(&args.out, &io::candidates_csv(&rows))?;

    let report = timing_report(&events, &TimingBudgets::default());
    if !report.all_pass() {
        log::warn!("some searches exceeded the time budget");
    }
    if let Some(p) = &args.timing {
        write_json(p, &serde_json::to_value(&report).map_err(processing)?)?;
    }
    Ok(())
}

pub fn verify(cfg: &mut RunConfig, args: &VerifyArgs) -> Result<(), CliError> {
    if let Some(m) = &args.matcher {
        cfg.matcher = m.to_ascii_lowercase();
    }
    let matcher = registry_matcher(cfg)?;
    let pairs = io::read_pairs(&args.pairs)?;
    let mut cache: BTreeMap<String, Template> = BTreeMap::new();
    for id in pairs.iter().flat_map(|p| [&p.probe_id, &p.gallery_id]) {
        if !cache.contains_key(id) {
            let t = io::read_template(&args.templates.join(format!("{id}.irxt")))?;
            check_kinds(matcher.as_ref(), std::slice::from_ref(&t), id)?;
            cache.insert(id.clone(), t);
        }
    }
    let records: Vec<ScoreRecord> = pairs
        .iter()
        .map(|p| {
            let score = match matcher.compare(&cache[&p.probe_id].payload, &cache[&p.gallery_id].payload) {
                Ok(s) => Some(s),
                Err(e) => {
                    log::info!("{} vs {}: {e}", p.probe_id, p.gallery_id);
                    None
                }
            };
            ScoreRecord {
                method_id: matcher.name().to_string(),
                probe_id: p.probe_id.clone(),
                gallery_id: p.gallery_id.clone(),
                genuine: p.genuine,
                score,
            }
        })
        .collect();
    Ok(io::write_atomic(&args.out, &io::scores_csv(&records))?)
}

pub fn crypts_match(cfg: &RunConfig, args: &CryptsMatchArgs) -> Result<(), CliError> {
    let pairs = io::read_pairs(&args.pairs)?;
    let mut cache: BTreeMap<String, BinaryMask> = BTreeMap::new();
    for id in pairs.iter().flat_map(|p| [&p.probe_id, &p.gallery_id]) {
        if !cache.contains_key(id) {
            cache.insert(id.clone(), io::read_mask(&find_image(&args.masks, id)?)?);
        }
    }
    let records: Vec<ScoreRecord> = pairs
        .iter()
        .map(|p| {
            let out = crypts::emd_2d_detailed(&cache[&p.probe_id], &cache[&p.gallery_id], &cfg.emd);
            if out.status != crypts::EmdStatus::Solved {
                log::info!("{} vs {}: {:?}", p.probe_id, p.gallery_id, out.status);
            }
            ScoreRecord {
                method_id: "crypts-emd".into(),
                probe_id: p.probe_id.clone(),
                gallery_id: p.gallery_id.clone(),
                genuine: p.genuine,
                score: Some(out.score),
            }
        })
        .collect();
    Ok(io::write_atomic(&args.out, &io::scores_csv(&records))?)
}

fn rank_input_from_candidates(path: &Path, set: &ScoreSet, records: &[ScoreRecord]) -> Result<RankInput, CliError> {
    let mut lists: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for (probe, c) in io::read_candidates_csv(path)? {
        lists.entry(probe).or_default().push(c);
    }
    let mut mates: BTreeMap<String, std::collections::BTreeSet<String>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.genuine && r.method_id == set.method_id) {
        mates.entry(r.probe_id.clone()).or_default().insert(r.gallery_id.clone());
    }
    Ok(RankInput { lists, mates })
}

pub fn eval(cfg: &mut RunConfig, args: &EvalArgs) -> Result<(), CliError> {
    if let Some(p) = &args.protocol {
        cfg.protocol = p.parse().map_err(validation)?;
    }
    let mut records = Vec::new();
    for p in &args.scores {
        records.extend(io::read_scores_csv(p)?);
    }
    if records.is_empty() {
        return Err(validation("score files hold no records"));
    }
    let (sets, excluded, protocol_name) = match cfg.protocol {
        Protocol::Discard => (protocol_discard(&records, &cfg.sentinels), Vec::new(), "discard"),
        Protocol::FailureAsNonmatch => (
            protocol_failure_as_nonmatch(&records, &cfg.sentinels).map_err(validation)?,
            Vec::new(),
            "failure-as-nonmatch",
        ),
        Protocol::Intersection => {
            let out = protocol_intersection(&records, &cfg.sentinels, cfg.fte_threshold);
            (out.sets, out.excluded, "intersection")
        }
    };
    let mut reports = Vec::new();
    for set in sets.values() {
        let ranks = match &args.candidates {
            Some(p) => rank_input_from_candidates(p, set, &records)?,
            None => RankInput::from_score_set(set),
        };
        let r = compute_metrics(set, &cfg.fmr_targets, &cfg.ranks, Some(&ranks))
            .map_err(|e| validation(format!("{}: {e}", set.method_id)))?;
        reports.push(r);
    }
    let excluded: Vec<_> = excluded
        .iter()
        .map(|(m, fte)| json!({ "method_id": m, "fte": fte }))
        .collect();
    write_json(
        &args.out,
        &json!({
            "protocol": protocol_name,
            "methods": reports,
            "excluded": excluded,
        }),
    )?;
    if let Some(t) = &args.table {
        io::write_atomic(t, metrics_table(&reports).as_bytes())?;
    }
    Ok(())
}

pub fn parity(cfg: &RunConfig, args: &ParityArgs) -> Result<(), CliError> {
    let a = io::read_scores_csv(&args.a)?;
    let b = io::read_scores_csv(&args.b)?;
    let report = eval::parity(&a, &b).map_err(validation)?;
    let hist = eval::emit_delta_histogram(&a, &b, cfg.bins).map_err(validation)?;
    write_json(&args.out, &json!({ "parity": report, "delta_histogram": hist }))?;
    if let Some(h) = &args.histogram {
        io::write_atomic(h, hist.to_csv().as_bytes())?;
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use invpat::bench::{run_bench, BenchConfig, ClassLayout};
use invpat::cmapss::{self, CmapssPaths};
use invpat::io::{
    load_pnm, save_model, save_pnm, write_class_histogram, write_param_histogram, ColumnSchema,
    ModelFile, Payload, FORMAT_VERSION,
};
use invpat::levels::{LevelInput, LevelModel};
use invpat::synth::{self, ShapeKind, REGION_COLORS, REGION_LABELS};
use invpat::vision::{
    segment_image, train_areas, Detector, DetectorConfig, MaskThreshold, RasterImage,
};
use invpat::{
    CategoricalModel, ClassHistogram, FeatureVector, LabelTable, Level, LevelStack, Model,
    ParamIndex,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::{
    input, BenchArgs, ClassifyArgs, CmapssArgs, Command, DataError, DetectArgs, Layout,
    PredictArgs, SegmentArgs, TrainArgs, TrainMode, UsageError,
};

const DEFAULT_RANGE: u32 = 256;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(&a),
        Command::Classify(a) => classify(&a),
        Command::Predict(a) => predict(&a),
        Command::Segment(a) => segment(&a),
        Command::Detect(a) => detect(&a),
        Command::Bench(a) => bench(&a),
        Command::Cmapss(a) => run_cmapss(&a),
    }
}

fn report(command: &str, config: &impl Serialize, seed: Option<u64>, body: Value) -> Result<Value> {
    let mut out = Map::new();
    out.insert("format_version".into(), json!(FORMAT_VERSION));
    out.insert("command".into(), json!(command));
    out.insert("config".into(), serde_json::to_value(config)?);
    if let Some(seed) = seed {
        out.insert("seed".into(), json!(seed));
    }
    if let Value::Object(fields) = body {
        out.extend(fields);
    }
    Ok(Value::Object(out))
}

fn emit(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn histogram_file(dir: &Path, n: usize) -> Result<fs::File> {
    let path = dir.join(format!("histogram_{n:05}.txt"));
    fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
}

/// Normalizes with the schema's bounds, fitting them first if the schema has none.
fn normalized(
    schema: &mut ColumnSchema,
    rows: &[Vec<f64>],
    range: u32,
    fit: bool,
) -> Result<Vec<FeatureVector>> {
    if fit && !schema.has_bounds() {
        schema.fit_bounds(rows)?;
    }
    Ok(schema.normalize(rows, range)?)
}

fn train(a: &TrainArgs) -> Result<()> {
    let started = Instant::now();
    let range = a.x.unwrap_or(DEFAULT_RANGE);
    let check_dims = |dims: usize| -> Result<()> {
        match a.k {
            Some(k) if k != dims => Err(invpat::Error::DimensionMismatch {
                expected: k,
                got: dims,
            }
            .into()),
            _ => Ok(()),
        }
    };

    let (file, body) = match a.mode {
        TrainMode::Numeric => {
            let radius = input::radius(&a.radius, range, 0)?;
            let rows = input::rows(&a.input)?;
            if rows.is_empty() {
                return Err(DataError(format!("{} holds no rows", a.input.display())).into());
            }
            let mut schema = input::schema(a.schema.as_deref())?;
            let (vectors, ids) = match schema.as_mut() {
                Some(s) => {
                    s.validate(false)?;
                    (normalized(s, &rows, range, true)?, s.ids(&rows)?)
                }
                None => (input::integer_vectors(&rows, &a.input)?, None),
            };
            let dims = vectors[0].len();
            check_dims(dims)?;
            let mut model = Model::new(dims, range, radius)?;
            let mut labels = LabelTable::new();
            let mut created = 0;
            for (i, v) in vectors.iter().enumerate() {
                let (id, new) = model.train_step(v)?;
                created += new as usize;
                if let Some(ids) = &ids {
                    labels.attach(id, ids[i].to_string());
                }
            }
            let body = json!({
                "rows": vectors.len(),
                "created": created,
                "classes": model.len(),
                "avg_height": model.avg_height()?.value(),
                "dims": dims,
                "range": range,
                "radius": radius,
            });
            let mut level = Level::numeric(model);
            if !labels.is_empty() {
                level = level.with_labels(labels);
            }
            let file = ModelFile::stack(LevelStack::new(level));
            (
                match schema {
                    Some(s) => file.with_schema(s),
                    None => file,
                },
                body,
            )
        }
        TrainMode::Categorical => {
            let patterns = input::patterns(&a.input)?;
            let seen = patterns
                .iter()
                .filter_map(|p| p.present().last().copied())
                .max()
                .unwrap_or(0);
            let categories = a.x.unwrap_or(0).max(seen);
            let mut model = CategoricalModel::new(categories, a.threshold)?;
            let mut created = 0;
            for p in &patterns {
                created += model.train(p)?.1 as usize;
            }
            let body = json!({
                "rows": patterns.len(),
                "created": created,
                "classes": model.len(),
                "categories": categories,
                "recognition_threshold": a.threshold,
            });
            (
                ModelFile::stack(LevelStack::new(Level::categorical(model))),
                body,
            )
        }
        TrainMode::Predict => {
            let mut schema = input::schema(a.schema.as_deref())?.ok_or_else(|| {
                UsageError("predict mode needs --schema with a parameter column".into())
            })?;
            schema.validate(true)?;
            let rows = input::rows(&a.input)?;
            let features = normalized(&mut schema, &rows, range, true)?;
            let targets = schema.parameters(&rows)?;
            check_dims(schema.feature_count())?;
            let index =
                ParamIndex::build(schema.feature_count(), range, features.iter().zip(targets))?;
            let body = json!({
                "rows": index.rows(),
                "dims": index.dims(),
                "range": range,
                "parameter_bounds": index.t_bounds(),
            });
            (ModelFile::params(index).with_schema(schema), body)
        }
    };
    save_model(&file, &a.model).with_context(|| format!("writing {}", a.model.display()))?;
    let mut value = report("train", a, None, body)?;
    value["wall_secs"] = json!(started.elapsed().as_secs_f64());
    emit(&value)
}

fn feature_inputs(file: &ModelFile, model: &Model, path: &Path) -> Result<Vec<FeatureVector>> {
    let rows = input::rows(path)?;
    match &file.schema {
        Some(s) => Ok(s.normalize(&rows, model.range())?),
        None => input::integer_vectors(&rows, path),
    }
}

fn class_entry(
    n: usize,
    h: &ClassHistogram,
    recognized: bool,
    labels: Option<&LabelTable>,
) -> Value {
    let class = h.argmax();
    json!({
        "input": n,
        "class": class,
        "votes": h.max_count(),
        "recognized": recognized,
        "label": labels.zip(class).map(|(t, c)| t.lookup(c).to_owned()),
    })
}

fn classify(a: &ClassifyArgs) -> Result<()> {
    let file = input::model_file(a.model.as_deref())?;
    let Payload::Stack(stack) = &file.payload else {
        return Err(
            UsageError("this model file holds a parameter index; use `predict`".into()).into(),
        );
    };
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let first = &stack.levels()[0];
    let mut results = Vec::new();
    let mut histograms = Vec::new();

    if stack.depth() > 1 {
        let inputs: Vec<LevelInput> = match &first.model {
            LevelModel::Numeric(m) => feature_inputs(&file, m, &a.input)?
                .into_iter()
                .map(Into::into)
                .collect(),
            LevelModel::Categorical(_) => input::patterns(&a.input)?
                .into_iter()
                .map(Into::into)
                .collect(),
        };
        let run = stack.classify(&inputs)?;
        let top = stack.levels().last().expect("non-empty stack");
        let recognized = match &top.model {
            LevelModel::Categorical(m) => m.is_recognized(run.output()),
            LevelModel::Numeric(m) => m.is_full_match(run.output()),
        };
        results.push(class_entry(
            1,
            run.output(),
            recognized,
            top.labels.as_ref(),
        ));
        histograms.push(run.output().clone());
    } else {
        match &first.model {
            LevelModel::Numeric(m) => {
                let radius = input::radius(&a.radius, m.range(), m.radius())?;
                for (i, v) in feature_inputs(&file, m, &a.input)?.iter().enumerate() {
                    let h = m.classify_with_radius(v, radius)?;
                    results.push(class_entry(
                        i + 1,
                        &h,
                        m.is_full_match(&h),
                        first.labels.as_ref(),
                    ));
                    histograms.push(h);
                }
            }
            LevelModel::Categorical(m) => {
                for (i, p) in input::patterns(&a.input)?.iter().enumerate() {
                    let h = m.classify(p)?;
                    results.push(class_entry(
                        i + 1,
                        &h,
                        m.is_recognized(&h),
                        first.labels.as_ref(),
                    ));
                    histograms.push(h);
                }
            }
        }
    }
    if let Some(dir) = &a.out {
        for (i, h) in histograms.iter().enumerate() {
            write_class_histogram(histogram_file(dir, i + 1)?, h)?;
        }
    }
    emit(&report("classify", a, None, json!({ "results": results }))?)
}

fn predict(a: &PredictArgs) -> Result<()> {
    let started = Instant::now();
    let file = input::model_file(a.model.as_deref())?;
    let Payload::Params(index) = &file.payload else {
        return Err(UsageError("this model file holds a classifier; use `classify`".into()).into());
    };
    let schema = file
        .schema
        .as_ref()
        .ok_or_else(|| DataError("parameter model file carries no schema".into()))?;
    let mut rows = input::rows(&a.input)?;
    // rows may leave out the parameter column
    if let Some(pc) = schema.parameter_column()? {
        for r in rows.iter_mut().filter(|r| r.len() + 1 == schema.width()) {
            r.insert(pc, 0.0);
        }
    }
    let queries = schema.normalize(&rows, index.range())?;
    let ids = schema.ids(&rows)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut results = Vec::new();
    for (i, q) in queries.iter().enumerate() {
        let h = index.predict_histogram(q)?;
        let spread = (!h.is_empty()).then(|| h.spread()).transpose()?;
        results.push(json!({
            "input": i + 1,
            "id": ids.as_ref().map(|v| v[i]),
            "prediction": h.argmax_t(),
            "mean": spread.map(|s| s.mean),
            "skew": spread.map(|s| s.skew as i8),
            "votes": h.total(),
        }));
        if let Some(dir) = &a.out {
            write_param_histogram(histogram_file(dir, i + 1)?, &h)?;
        }
    }
    let mut value = report("predict", a, None, json!({ "results": results }))?;
    value["wall_secs"] = json!(started.elapsed().as_secs_f64());
    emit(&value)
}

fn palette(legend: &[String]) -> BTreeMap<String, [u8; 3]> {
    const EXTRA: [[u8; 3]; 6] = [
        [230, 25, 75],
        [255, 225, 25],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
    ];
    let mut extra = EXTRA.iter().cycle();
    legend
        .iter()
        .map(|l| {
            let c = REGION_LABELS
                .iter()
                .position(|r| r == l)
                .map(|i| REGION_COLORS[i])
                .unwrap_or_else(|| *extra.next().expect("cycled"));
            (l.clone(), c)
        })
        .collect()
}

fn segment(a: &SegmentArgs) -> Result<()> {
    let started = Instant::now();
    let scene = match (&a.image, &a.areas) {
        (Some(_), _) => None,
        (None, Some(_)) if a.synthetic.is_none() => {
            return Err(UsageError("--areas needs --image".into()).into());
        }
        (None, _) => {
            let size = a.synthetic.unwrap_or(512);
            if size < 32 || a.area_size == 0 || a.area_size * 6 > size {
                return Err(UsageError(format!(
                    "synthetic scene of side {size} cannot hold teacher areas of side {}",
                    a.area_size
                ))
                .into());
            }
            if !(a.sigma.is_finite() && a.sigma >= 0.0) {
                return Err(UsageError("--sigma must be a non-negative number".into()).into());
            }
            Some(synth::three_region_scene(
                size,
                a.sigma,
                a.area_size,
                a.seed,
            ))
        }
    };
    let (image, areas) = match (&scene, &a.image, &a.areas) {
        (Some(s), _, _) => (s.image.clone(), s.areas.clone()),
        (None, Some(img), Some(areas)) => (load_pnm(img)?, input::areas(areas)?),
        _ => return Err(UsageError("--image needs --areas".into()).into()),
    };

    let radius = input::radius(
        &a.radius,
        DEFAULT_RANGE,
        invpat::radius_from_percent(10.0, DEFAULT_RANGE),
    )?;
    let mut model = Model::new(image.channels() as usize, DEFAULT_RANGE, radius)?;
    let mut table = LabelTable::new();
    let created = train_areas(&mut model, &mut table, &image, &areas)?;
    let map = segment_image(&model, &table, &image)?;

    let total = image.pixel_count() as f64;
    let mut body = json!({
        "width": image.width(),
        "height": image.height(),
        "radius": radius,
        "inner_classes": model.len(),
        "created": created,
        "labeled_fraction": map.labeled_count() as f64 / total,
        "counts": map.counts(),
    });
    if let Some(s) = &scene {
        let (mut correct, mut outside, mut outside_labeled) = (0usize, 0usize, 0usize);
        for y in 0..image.height() {
            for x in 0..image.width() {
                correct += (map.label_at(x, y) == s.truth_label(x, y)) as usize;
                if !s.in_training_area(x, y) {
                    outside += 1;
                    outside_labeled += map.is_labeled(x, y) as usize;
                }
            }
        }
        body["accuracy"] = json!(correct as f64 / total);
        body["outside_labeled_fraction"] = json!(outside_labeled as f64 / outside.max(1) as f64);
    }
    if let Some(out) = &a.out {
        save_pnm(&map.render(&palette(map.legend())), out)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    let mut value = report("segment", a, scene.as_ref().map(|_| a.seed), body)?;
    value["wall_secs"] = json!(started.elapsed().as_secs_f64());
    emit(&value)
}

/// Frame name, image, label.
type TrainingFrame = (String, RasterImage, String);

fn detect(a: &DetectArgs) -> Result<()> {
    let config = DetectorConfig {
        radius: input::radius(&a.radius, DEFAULT_RANGE, DetectorConfig::default().radius)?,
        window: a.window,
        diff_threshold: a.diff_threshold,
        mask_threshold: MaskThreshold::Count(a.freq_threshold),
        cluster_distance: a.cluster_dist,
        meta_threshold: a.meta_threshold,
        recognition_threshold: a.threshold,
    };
    if a.window == 0 {
        return Err(UsageError("--window must be at least 1".into()).into());
    }

    let (background, training, queries): (
        RasterImage,
        Vec<TrainingFrame>,
        Vec<(String, RasterImage)>,
    ) = if a.synthetic {
        let kind = ShapeKind::Cart;
        let bg = synth::textured_background(160, 120, a.seed);
        let mut frame = bg.clone();
        synth::paint_shape(&mut frame, kind, 40, 30, a.seed.wrapping_add(1));
        let mut moved = bg.clone();
        synth::paint_shape(&mut moved, kind, 100, 70, a.seed.wrapping_add(2));
        (
            bg.clone(),
            vec![("synthetic:object".into(), frame, kind.label().into())],
            vec![
                ("synthetic:background".into(), bg),
                ("synthetic:moved-object".into(), moved),
            ],
        )
    } else {
        let bg_path = a.background.as_ref().expect("clap requires --background");
        if a.train.is_empty() {
            return Err(UsageError("give at least one --train PATH=LABEL".into()).into());
        }
        let training = a
            .train
            .iter()
            .map(|t| {
                let (p, l) = input::labeled_path(t)?;
                Ok((p.display().to_string(), load_pnm(&p)?, l))
            })
            .collect::<Result<Vec<_>>>()?;
        let queries = a
            .query
            .iter()
            .map(|p: &PathBuf| Ok((p.display().to_string(), load_pnm(p)?)))
            .collect::<Result<Vec<_>>>()?;
        (load_pnm(bg_path)?, training, queries)
    };

    let started = Instant::now();
    let mut detector = Detector::new(config, background.channels() as usize)?;
    let mut trained = Vec::new();
    for (name, frame, label) in &training {
        let t = detector.train_object(&background, frame, label)?;
        trained.push(json!({
            "frame": name,
            "label": label,
            "changed_pixels": t.changed_pixels,
            "new_pixel_classes": t.new_pixel_classes,
            "masked_classes": t.masked_classes,
            "object_classes": t.object_classes,
        }));
    }
    let mut found = Vec::new();
    for (name, frame) in &queries {
        let r = detector.detect(frame)?;
        found.push(json!({
            "frame": name,
            "selected_pixels": r.selected_pixels,
            "clusters": r.clusters,
            "object": r.detection.is_some(),
            "class": r.detection.map(|d| d.class),
            "activity": r.detection.map(|d| d.activity),
            "label": r.label,
        }));
    }
    let mut value = report(
        "detect",
        a,
        a.synthetic.then_some(a.seed),
        json!({ "pixel_classes": detector.pixel_model().len(), "training": trained, "queries": found }),
    )?;
    value["wall_secs"] = json!(started.elapsed().as_secs_f64());
    emit(&value)
}

fn bench(a: &BenchArgs) -> Result<()> {
    let config = BenchConfig {
        sizes: a.sizes.clone(),
        dims: a.k,
        range: a.x,
        radius: input::radius(&a.radius, a.x, 0)?,
        queries: a.queries,
        repetitions: a.reps,
        seed: a.seed,
        layout: match a.layout {
            Layout::Uniform => ClassLayout::Uniform,
            Layout::Spread => ClassLayout::Spread,
        },
    };
    if config.dims == 0 || config.sizes.is_empty() || config.queries == 0 {
        return Err(UsageError("--k, --sizes and --queries must be non-empty".into()).into());
    }
    let result = run_bench(&config)?;
    eprint!("{}", result.table());
    let mut value = report("bench", a, Some(a.seed), serde_json::to_value(&result)?)?;
    // the bench report carries its own resolved config
    value["config"] = serde_json::to_value(&result.config)?;
    if let Some(out) = &a.out {
        fs::write(out, serde_json::to_string_pretty(&value)?)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    emit(&value)
}

fn run_cmapss(a: &CmapssArgs) -> Result<()> {
    let paths = match &a.data {
        Some(dir) => CmapssPaths::in_dir(dir, &a.subset),
        None => CmapssPaths::from_env(&a.subset),
    }
    .ok_or_else(|| {
        DataError(format!(
            "turbofan files for {} not found; pass --data DIR or set {}",
            a.subset,
            cmapss::DATA_DIR_ENV
        ))
    })?;
    let r = cmapss::run(&paths, a.x)?;
    let errors = r.errors();
    let n = errors.len().max(1) as f64;
    let engines: Vec<Value> = r
        .engines
        .iter()
        .map(|e| json!({ "unit": e.unit, "prul": e.prul, "rul": e.rul }))
        .collect();
    emit(&report(
        "cmapss",
        a,
        None,
        json!({
            "train_rows": r.train_rows,
            "test_rows": r.test_rows,
            "train_secs": r.train_secs,
            "predict_secs": r.predict_secs,
            "engines": engines,
            "undefined_predictions": r.engines.len() - errors.len(),
            "error_mean": errors.iter().sum::<i64>() as f64 / n,
            "error_mean_abs": errors.iter().map(|e| e.abs()).sum::<i64>() as f64 / n,
            "error_min": errors.iter().min(),
            "error_max": errors.iter().max(),
            "late_predictions": r.late_predictions(),
        }),
    )?)
}

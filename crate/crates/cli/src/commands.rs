use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use borelknn::ann::{
    audit_kann, build_ann_index, kann_query, thermometer_encode, AnnIndex, AnnParams, AuditReport,
    EncodingInfo, DEFAULT_CONST_C,
};
use borelknn::bench::{
    gaussian_points, run_consistency, run_cv, ConsistencyCurve, CvConfig, CvReport, Mm2Spec,
    RuleKind, Tabular, Variant, DEFAULT_TEST_SIZE,
};
use borelknn::borel::{
    borel_map, grouped_reduce, read_codes, write_codes, BorelCode, CodeFile, GroupedCode,
    ReductionConfig, DEFAULT_BITS,
};
use borelknn::data::{clamp_unit, load_csv, normalize_unit_cube, LabelColumn, UnitCubeParams};
use borelknn::instability::{
    instability_profile, leave_one_out_profile, RadiusGrid, DEFAULT_GRID_POINTS,
};
use borelknn::knn::{make_knn_rule, Carrier, Classifier, KSchedule, NeighborSource};
use borelknn::seed::stream;
use borelknn::{BitString, Label, Labeled, LabeledDataset, Point, Seed};

use crate::args::{
    AnnArgs, ClassifyArgs, ConsistencyArgs, CvArgs, Format, InstabilityArgs, KArg, NeighborsArg,
    ReduceArgs, RuleArg, VariantArg,
};
use crate::output::{Context, Summary};

const DEFAULT_LEVELS: u32 = 16;
const DEFAULT_ANN_K: usize = 10;
const DEFAULT_ANN_C: f64 = 0.5;
const DEFAULT_DELTA: f64 = 0.1;
const DEFAULT_ADVERSARY_C: f64 = 0.2;
const CODE_FILE_PREFIX: &str = "# borelknn reduce";

fn need<T>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| anyhow!("{flag} is required"))
}

fn label_column(label: &Option<String>) -> LabelColumn {
    match label {
        Some(s) => s.parse().unwrap_or(LabelColumn::Last),
        None => LabelColumn::Last,
    }
}

fn load(
    path: &Path,
    label: &Option<String>,
    classes: Option<&HashMap<String, u32>>,
) -> anyhow::Result<LabeledDataset> {
    load_csv(path, &label_column(label), classes)
        .with_context(|| format!("loading {}", path.display()))
}

fn class_map<T>(ds: &Labeled<T>) -> HashMap<String, u32> {
    ds.class_names()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i as u32))
        .collect()
}

fn check_group(dim: usize, group_size: Option<usize>) -> anyhow::Result<usize> {
    let g = group_size.unwrap_or(dim);
    if g == 0 || g > dim {
        bail!("--group-size must lie in 1..={dim}");
    }
    Ok(g)
}

#[derive(Serialize)]
struct ReducedRow {
    codes: Vec<String>,
    class: String,
}

#[derive(Serialize)]
struct Reduced {
    dim: usize,
    bits: u32,
    group_size: usize,
    rows: Vec<ReducedRow>,
}

impl Tabular for Reduced {
    fn columns(&self) -> Vec<&'static str> {
        vec!["codes", "class"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.codes.join(" "), r.class.clone()])
            .collect()
    }
}

pub fn reduce(ctx: &Context, a: ReduceArgs) -> anyhow::Result<()> {
    let input = need(a.input, "--input")?;
    let ds = load(&input, &a.label, None)?;
    let params = match &a.fit {
        Some(path) => UnitCubeParams::fit(&load(path, &a.label, None)?)?,
        None => UnitCubeParams::fit(&ds)?,
    };
    let unit = ds.try_map(|p| Ok(clamp_unit(&params.apply(p)?)))?;
    let dim = ds.dim();
    let config = ReductionConfig::new(
        a.bits.unwrap_or(DEFAULT_BITS),
        check_group(dim, a.group_size)?,
    )?;
    let data = unit.try_map(|p| grouped_reduce(p, &config))?;
    let file = CodeFile { dim, config, data };
    ctx.note(format_args!(
        "reduced {} rows of dimension {dim}",
        file.data.len()
    ));
    match ctx.format {
        Format::Csv => {
            let mut bytes = Vec::new();
            write_codes(&mut bytes, &file)?;
            ctx.write("reduce", a.output.as_deref(), &String::from_utf8(bytes)?)
        }
        Format::Json => {
            let rows = file
                .data
                .iter()
                .map(|(code, label)| ReducedRow {
                    codes: code.codes().iter().map(|c| c.value().to_string()).collect(),
                    class: file.data.class_name(label),
                })
                .collect();
            let out = Reduced {
                dim,
                bits: config.bits,
                group_size: config.group_size,
                rows,
            };
            let cfg = json!({"input": input, "fit": a.fit, "bits": config.bits, "group_size": config.group_size});
            ctx.emit("reduce", a.output.as_deref(), &out, &cfg)
        }
    }
}

#[derive(Serialize)]
struct Prediction {
    row: usize,
    predicted: String,
    truth: String,
}

#[derive(Serialize)]
struct Predictions {
    k: usize,
    n: usize,
    errors: usize,
    error_rate: f64,
    predictions: Vec<Prediction>,
}

impl Tabular for Predictions {
    fn columns(&self) -> Vec<&'static str> {
        vec!["row", "predicted", "truth"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.predictions
            .iter()
            .map(|p| vec![p.row.to_string(), p.predicted.clone(), p.truth.clone()])
            .collect()
    }
}

fn predict<T: Carrier>(
    source: NeighborSource,
    schedule: KSchedule,
    seed: Seed,
    train: &Labeled<T>,
    test: &Labeled<T>,
) -> anyhow::Result<(usize, Vec<Label>)> {
    let clf = make_knn_rule::<T>(source, schedule, seed)?.train_knn(train)?;
    Ok((clf.k(), clf.classify_all(test.points())?))
}

fn is_code_file(path: &Path) -> anyhow::Result<bool> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.starts_with(CODE_FILE_PREFIX))
}

/// Single-group codes become plain codes so the sorted index applies.
fn ungroup(ds: &Labeled<GroupedCode>) -> anyhow::Result<Labeled<BorelCode>> {
    Ok(ds.try_map(|g| Ok(g.codes()[0].clone()))?)
}

pub fn classify(ctx: &Context, a: ClassifyArgs) -> anyhow::Result<()> {
    let train_path = need(a.train.clone(), "--train")?;
    let test_path = need(a.test.clone(), "--test")?;
    let schedule = match a.k.unwrap_or(KArg::Sqrt) {
        KArg::Sqrt => KSchedule::SqrtCeil,
        KArg::Fixed(k) => KSchedule::Fixed(k),
    };
    let neighbors = a.neighbors;
    let c = a.c;
    let bias_of = |map: &HashMap<String, u32>| -> anyhow::Result<Label> {
        let name = need(a.bias.clone(), "--bias")?;
        map.get(&name)
            .map(|&i| Label(i))
            .ok_or_else(|| anyhow!("--bias {name:?} is not a class of the training file"))
    };
    let adversary = |map: &HashMap<String, u32>| -> anyhow::Result<NeighborSource> {
        Ok(NeighborSource::Adversarial {
            c: c.unwrap_or(DEFAULT_ADVERSARY_C),
            bias: bias_of(map)?,
        })
    };

    let (k, predicted, truth, names) = if is_code_file(&train_path)? {
        let train = read_codes(&train_path, None)?;
        let map = class_map(&train.data);
        let test = read_codes(&test_path, Some(&map))?;
        if (test.dim, test.config) != (train.dim, train.config) {
            bail!("training and test codes were reduced with different layouts");
        }
        let source = match neighbors {
            None | Some(NeighborsArg::Sorted) => NeighborSource::Sorted1d,
            Some(NeighborsArg::Brute) => NeighborSource::Brute,
            Some(NeighborsArg::Adversarial) => adversary(&map)?,
            Some(NeighborsArg::Kann) => bail!("k-ANN search needs raw CSV input"),
        };
        let single = train.config.group_size == train.dim;
        let (k, p) = match (single, source) {
            (true, s) => predict(
                s,
                schedule,
                ctx.seed,
                &ungroup(&train.data)?,
                &ungroup(&test.data)?,
            )?,
            (false, NeighborSource::Sorted1d) if neighbors.is_none() => predict(
                NeighborSource::Brute,
                schedule,
                ctx.seed,
                &train.data,
                &test.data,
            )?,
            (false, s) => predict(s, schedule, ctx.seed, &train.data, &test.data)?,
        };
        (
            k,
            p,
            test.data.labels().to_vec(),
            train.data.class_names().to_vec(),
        )
    } else {
        let train = load(&train_path, &a.label, None)?;
        let map = class_map(&train);
        let test = load(&test_path, &a.label, Some(&map))?;
        let params = UnitCubeParams::fit(&train)?;
        let norm = |p: &Point| Ok(clamp_unit(&params.apply(p)?));
        let (utrain, utest) = (train.try_map(norm)?, test.try_map(norm)?);
        let variant = a.variant.unwrap_or(VariantArg::Original);
        let (k, p) = match (variant, neighbors) {
            (VariantArg::Both, _) => bail!("--variant both is only available for cv"),
            (_, Some(NeighborsArg::Kann)) => {
                let levels = a.levels.unwrap_or(DEFAULT_LEVELS);
                let ann =
                    AnnParams::new(c.unwrap_or(DEFAULT_ANN_C), a.delta.unwrap_or(DEFAULT_DELTA))?;
                let enc = |p: &Point| thermometer_encode(p, levels);
                predict::<BitString>(
                    NeighborSource::Kann(ann),
                    schedule,
                    ctx.seed,
                    &utrain.try_map(enc)?,
                    &utest.try_map(enc)?,
                )?
            }
            (VariantArg::Original, None | Some(NeighborsArg::Brute)) => {
                predict(NeighborSource::Brute, schedule, ctx.seed, &utrain, &utest)?
            }
            (VariantArg::Original, Some(NeighborsArg::Adversarial)) => {
                predict(adversary(&map)?, schedule, ctx.seed, &utrain, &utest)?
            }
            (VariantArg::Original, Some(NeighborsArg::Sorted)) => {
                bail!("sorted search needs --variant reduced")
            }
            (VariantArg::Reduced, n) => {
                let dim = train.dim();
                let g = check_group(dim, a.group_size)?;
                let bits = a.bits.unwrap_or(DEFAULT_BITS);
                if g == dim {
                    let cfg = ReductionConfig::single(dim, bits)?;
                    let map_code = |p: &Point| borel_map(p, &cfg);
                    let source = match n {
                        None | Some(NeighborsArg::Sorted) => NeighborSource::Sorted1d,
                        Some(NeighborsArg::Adversarial) => adversary(&map)?,
                        _ => NeighborSource::Brute,
                    };
                    predict(
                        source,
                        schedule,
                        ctx.seed,
                        &utrain.try_map(map_code)?,
                        &utest.try_map(map_code)?,
                    )?
                } else {
                    let cfg = ReductionConfig::new(bits, g)?;
                    let map_code = |p: &Point| grouped_reduce(p, &cfg);
                    let source = match n {
                        Some(NeighborsArg::Adversarial) => adversary(&map)?,
                        Some(NeighborsArg::Sorted) => bail!("sorted search needs a single group"),
                        _ => NeighborSource::Brute,
                    };
                    predict(
                        source,
                        schedule,
                        ctx.seed,
                        &utrain.try_map(map_code)?,
                        &utest.try_map(map_code)?,
                    )?
                }
            }
        };
        (k, p, test.labels().to_vec(), train.class_names().to_vec())
    };

    let name = |l: Label| {
        names
            .get(l.index())
            .cloned()
            .unwrap_or_else(|| l.0.to_string())
    };
    let errors = predicted.iter().zip(&truth).filter(|(p, t)| p != t).count();
    let report = Predictions {
        k,
        n: truth.len(),
        errors,
        error_rate: errors as f64 / truth.len() as f64,
        predictions: predicted
            .iter()
            .zip(&truth)
            .enumerate()
            .map(|(row, (&p, &t))| Prediction {
                row,
                predicted: name(p),
                truth: name(t),
            })
            .collect(),
    };
    ctx.note(format_args!(
        "k = {k}, test error {}/{}",
        errors,
        truth.len()
    ));
    let cfg = json!({
        "train": train_path,
        "test": test_path,
        "k": k,
        "variant": a.variant.map(|v| format!("{v:?}").to_lowercase()),
        "neighbors": a.neighbors.map(|v| format!("{v:?}").to_lowercase()),
        "bits": a.bits,
        "group_size": a.group_size,
        "levels": a.levels,
        "c": a.c,
        "delta": a.delta,
        "bias": a.bias,
    });
    ctx.emit("classify", a.output.as_deref(), &report, &cfg)
}

#[derive(Serialize)]
struct Answer {
    query: usize,
    rank: usize,
    index: usize,
    distance: f64,
}

#[derive(Serialize)]
struct Answers(Vec<Answer>);

impl Tabular for Answers {
    fn columns(&self) -> Vec<&'static str> {
        vec!["query", "rank", "index", "distance"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|a| {
                vec![
                    a.query.to_string(),
                    a.rank.to_string(),
                    a.index.to_string(),
                    a.distance.to_string(),
                ]
            })
            .collect()
    }
}

#[derive(Serialize)]
struct Audit(AuditReport);

impl Tabular for Audit {
    fn columns(&self) -> Vec<&'static str> {
        vec![
            "queries",
            "k",
            "c",
            "satisfied",
            "rate",
            "worst_ratio",
            "mean_ratio",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let r = &self.0;
        vec![vec![
            r.queries.to_string(),
            r.k.to_string(),
            r.c.to_string(),
            r.satisfied.to_string(),
            r.rate.to_string(),
            r.worst_ratio.to_string(),
            r.mean_ratio.to_string(),
        ]]
    }
}

fn encode_rows(ds: &LabeledDataset, enc: &EncodingInfo) -> anyhow::Result<Vec<BitString>> {
    ds.points()
        .iter()
        .map(|p| {
            Ok(thermometer_encode(
                &clamp_unit(&enc.normalization.apply(p)?),
                enc.levels,
            )?)
        })
        .collect()
}

pub fn ann(ctx: &Context, a: AnnArgs) -> anyhow::Result<()> {
    let k = a.k.unwrap_or(DEFAULT_ANN_K);
    let index = if a.build {
        let input = need(a.input.clone(), "--input")?;
        let ds = load(&input, &a.label, None)?;
        let c = a.c.unwrap_or(DEFAULT_ANN_C);
        let mut params = AnnParams::new(c, a.delta.unwrap_or(DEFAULT_DELTA))?;
        params.epsilon = a.epsilon.unwrap_or(params.epsilon);
        params.const_c = a.const_c.unwrap_or(DEFAULT_CONST_C);
        params.repeats = a.repeats.unwrap_or(params.repeats);
        let params = params.validated()?;
        let enc = EncodingInfo {
            levels: a.bits.unwrap_or(DEFAULT_LEVELS),
            normalization: UnitCubeParams::fit(&ds)?,
        };
        let points = encode_rows(&ds, &enc)?;
        let start = std::time::Instant::now();
        let index = build_ann_index(&points, &params, k, ctx.seed.derive(stream::TRAIN))?
            .with_encoding(enc);
        ctx.note(format_args!(
            "built index in {:.2}s",
            start.elapsed().as_secs_f64()
        ));
        if let Some(out) = &a.index_out {
            index
                .save(out)
                .with_context(|| format!("saving index to {}", out.display()))?;
            ctx.note(format_args!("wrote {}", out.display()));
        }
        let summary = Summary(vec![
            ("points", json!(index.len())),
            ("dim", json!(index.dim())),
            ("k", json!(index.k())),
            ("k_prime", json!(index.k_prime())),
            ("c", json!(params.c)),
            ("epsilon", json!(params.epsilon)),
            ("delta", json!(params.delta)),
            ("repeats", json!(params.repeats)),
            ("const_c", json!(params.const_c)),
            ("levels", json!(index.encoding().map(|e| e.levels))),
            ("digest", json!(format!("{:016x}", index.digest()))),
        ]);
        ctx.emit(
            "ann-build",
            None,
            &summary,
            &json!({"input": input, "k": k}),
        )?;
        index
    } else {
        let path = need(a.index_in.clone(), "--index-in (or --build)")?;
        AnnIndex::load(&path).with_context(|| format!("loading index {}", path.display()))?
    };

    if a.query || a.audit {
        let path = need(a.queries.clone(), "--queries")?;
        let enc = index
            .encoding()
            .ok_or_else(|| anyhow!("the index does not record how to encode queries"))?;
        let queries = encode_rows(&load(&path, &a.label, None)?, enc)?;
        let cfg = json!({"queries": path, "k": k});
        if a.query {
            let answers: Vec<Vec<Answer>> = queries
                .par_iter()
                .enumerate()
                .map(|(i, q)| {
                    let s = ctx
                        .seed
                        .derive(stream::QUERY)
                        .derive(i as u64)
                        .derive(stream::NEIGHBOR_TIES);
                    let set = kann_query(&index, q, k, s)?;
                    Ok(set
                        .indices
                        .iter()
                        .zip(&set.distances)
                        .enumerate()
                        .map(|(rank, (&index, &distance))| Answer {
                            query: i,
                            rank: rank + 1,
                            index,
                            distance,
                        })
                        .collect())
                })
                .collect::<anyhow::Result<_>>()?;
            ctx.emit(
                "ann-query",
                None,
                &Answers(answers.into_iter().flatten().collect()),
                &cfg,
            )?;
        }
        if a.audit {
            let report = audit_kann(&index, &queries, k, ctx.seed)?;
            ctx.note(format_args!(
                "{}/{} queries within the contract",
                report.satisfied, report.queries
            ));
            ctx.emit("ann-audit", None, &Audit(report), &cfg)?;
        }
    }
    Ok(())
}

pub fn instability(ctx: &Context, a: InstabilityArgs) -> anyhow::Result<()> {
    let k = a.k.unwrap_or(20);
    let c = a.c.unwrap_or(0.5);
    let grid = RadiusGrid::Even(a.grid.unwrap_or(DEFAULT_GRID_POINTS));
    let (profile, cfg) = match (&a.input, a.gaussian) {
        (Some(input), _) => {
            let (unit, _) = normalize_unit_cube(&load(input, &a.label, None)?, None)?;
            let p = leave_one_out_profile(unit.points(), k, c, &grid)?;
            (p, json!({"input": input, "k": k, "c": c, "grid": a.grid}))
        }
        (None, Some(n)) => {
            let dim = need(a.dim, "--dim")?;
            let queries = a.queries.unwrap_or(200);
            let points = gaussian_points(n, dim, ctx.seed.derive(stream::TRAIN));
            let qs = gaussian_points(queries, dim, ctx.seed.derive(stream::QUERY));
            let p = instability_profile(&points, &qs, k, c, &grid)?;
            (
                p,
                json!({"gaussian": n, "dim": dim, "queries": queries, "k": k, "c": c, "grid": a.grid}),
            )
        }
        (None, None) => bail!("either --input or --gaussian is required"),
    };
    ctx.note(format_args!(
        "mean count {:.2}, unstable fraction {:.3}",
        profile.mean_count, profile.unstable_fraction
    ));
    ctx.emit("instability", a.output.as_deref(), &profile, &cfg)
}

#[derive(Serialize)]
struct CvBoth {
    original: CvReport,
    reduced: CvReport,
}

impl Tabular for CvBoth {
    fn columns(&self) -> Vec<&'static str> {
        vec!["k", "original_accuracy", "reduced_accuracy"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.original.k_max)
            .map(|i| {
                vec![
                    (i + 1).to_string(),
                    self.original.accuracy[i].to_string(),
                    self.reduced.accuracy[i].to_string(),
                ]
            })
            .collect()
    }
}

pub fn cv(ctx: &Context, a: CvArgs) -> anyhow::Result<()> {
    let input: PathBuf = need(a.input, "--input")?;
    let ds = load(&input, &a.label, None)?;
    let base = CvConfig::default();
    let cfg = CvConfig {
        folds: a.folds.unwrap_or(base.folds),
        k_max: a.kmax.unwrap_or(base.k_max),
        variant: Variant::Original,
        bits: a.bits.unwrap_or(base.bits),
        group_size: a.group_size,
        strict: a.strict,
        seed: ctx.seed,
    };
    let run = |variant| -> anyhow::Result<CvReport> {
        let r = run_cv(
            &ds,
            &CvConfig {
                variant,
                ..cfg.clone()
            },
        )?;
        ctx.note(format_args!(
            "{}: best k = {}, accuracy {:.2}%",
            variant.name(),
            r.best_k,
            100.0 * r.best_accuracy
        ));
        Ok(r)
    };
    let variant = a.variant.unwrap_or(VariantArg::Both);
    let mut shown_cv = serde_json::to_value(&cfg)?;
    if let Some(m) = shown_cv.as_object_mut() {
        m.remove("variant");
    }
    let shown =
        json!({"input": input, "variant": format!("{variant:?}").to_lowercase(), "cv": shown_cv});
    match variant {
        VariantArg::Original => {
            ctx.emit("cv", a.output.as_deref(), &run(Variant::Original)?, &shown)
        }
        VariantArg::Reduced => ctx.emit("cv", a.output.as_deref(), &run(Variant::Reduced)?, &shown),
        VariantArg::Both => {
            let both = CvBoth {
                original: run(Variant::Original)?,
                reduced: run(Variant::Reduced)?,
            };
            ctx.emit("cv", a.output.as_deref(), &both, &shown)
        }
    }
}

pub fn consistency(ctx: &Context, a: ConsistencyArgs) -> anyhow::Result<()> {
    let spec = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Mm2Spec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Mm2Spec::step(),
    };
    let rule = match a.rule.unwrap_or(RuleArg::Knn) {
        RuleArg::Knn => RuleKind::Knn,
        RuleArg::Reduced => RuleKind::Reduced {
            bits: a.bits.unwrap_or(DEFAULT_BITS),
        },
        RuleArg::Kann => RuleKind::Kann {
            levels: a.levels.unwrap_or(DEFAULT_LEVELS),
            c: a.c.unwrap_or(DEFAULT_ANN_C),
            delta: a.delta.unwrap_or(DEFAULT_DELTA),
        },
        RuleArg::Adversarial => RuleKind::Adversarial {
            c: a.c.unwrap_or(DEFAULT_ADVERSARY_C),
            bias: a.bias.unwrap_or(1),
        },
    };
    let n_grid = a.n_grid.unwrap_or_else(|| vec![100, 400, 1600, 6400]);
    let trials = a.trials.unwrap_or(5);
    let test_size = a.test_size.unwrap_or(DEFAULT_TEST_SIZE);
    let curve: ConsistencyCurve =
        run_consistency(&spec, &rule, &n_grid, trials, test_size, ctx.seed)?;
    ctx.note(format_args!("excess error by n: {:?}", curve.excess));
    let cfg = json!({"spec": spec, "rule": rule, "n_grid": n_grid, "trials": trials, "test_size": test_size});
    ctx.emit("consistency", a.output.as_deref(), &curve, &cfg)
}

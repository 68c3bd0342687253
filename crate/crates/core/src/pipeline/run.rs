use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::manifest::{long, sha256_file, sha256_hex, wide, wide_columns, ArtifactWriter, RunManifest, FAILED_MARKER, TIMINGS_FILE};
use crate::citation_regression::{citation_rows, fit_all_topics, regression_table, CitationModelOptions};
use crate::corpus::{
    build_matrix, load_records, preprocess, select_subset, write_archive, DocumentRecord, LoadOptions, ProcessedCorpus,
    StopwordConfig,
};
use crate::embeddings::{similarity_series, train_pvdbow, EmbeddingOptions};
use crate::error::{Error, Result};
use crate::multivar::{
    cointegration, diagnostics, fevd, fit_var, fit_vecm, granger_table, granger_wald, impulse_response, johansen,
    select_lag, stability, BootstrapSpec, CointegrationMethod, ModelRef, MultiSeries, VarModel,
};
use crate::table::{num, Table};
use crate::topic_model::{
    coherence_exclusivity, estimate_effect, fit, k_scan, label_topics, CovariateDesign, FitOptions, TopicModelFit,
    Uncertainty, WordMetric, DEFAULT_TOP_M,
};
use crate::trend_series::{
    battery_table, density_curves, ks_dominance, top_quantile_series, unit_root_battery, yearly_prevalence, CategoryMap,
    DensityKind, Grouping, PrevalenceSeries,
};

/// Units of work, in execution order. Each CLI subcommand maps to one step;
/// a step pulls in the steps it depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Ingest,
    SelectK,
    FitTopics,
    Trends,
    UnitRoot,
    Regress,
    Cointegration,
    Var,
    Vecm,
    Granger,
    Irf,
    Fevd,
    Embed,
}

impl Step {
    pub const ALL: [Step; 13] = [
        Step::Ingest,
        Step::SelectK,
        Step::FitTopics,
        Step::Trends,
        Step::UnitRoot,
        Step::Regress,
        Step::Cointegration,
        Step::Var,
        Step::Vecm,
        Step::Granger,
        Step::Irf,
        Step::Fevd,
        Step::Embed,
    ];

    /// Stage name used in the manifest and in failure messages.
    pub fn name(self) -> &'static str {
        match self {
            Step::Ingest => "corpus",
            Step::SelectK => "select_k",
            Step::FitTopics => "topics",
            Step::Trends => "trends",
            Step::UnitRoot => "unit_root",
            Step::Regress => "regressions",
            Step::Cointegration => "cointegration",
            Step::Var => "var",
            Step::Vecm => "vecm",
            Step::Granger => "granger",
            Step::Irf => "irf",
            Step::Fevd => "fevd",
            Step::Embed => "embeddings",
        }
    }

    fn prerequisite(self) -> Option<Step> {
        match self {
            Step::Ingest => None,
            Step::SelectK | Step::FitTopics | Step::Embed => Some(Step::Ingest),
            Step::Trends | Step::Regress => Some(Step::FitTopics),
            _ => Some(Step::Trends),
        }
    }

    fn configured(self, config: &PipelineConfig) -> bool {
        match self {
            Step::Ingest => true,
            Step::SelectK => config.topics.as_ref().is_some_and(|t| t.k_range.is_some()),
            Step::FitTopics => config.topics.is_some(),
            Step::Trends => config.trends.is_some(),
            Step::UnitRoot => config.trends.as_ref().is_some_and(|t| t.unit_root),
            Step::Regress => config.regressions.is_some(),
            Step::Cointegration => config.multivar.as_ref().is_some_and(|m| !m.cointegration.is_empty()),
            Step::Var | Step::Vecm | Step::Granger | Step::Irf | Step::Fevd => config.multivar.is_some(),
            Step::Embed => config.embeddings.is_some(),
        }
    }

    fn section(self) -> &'static str {
        match self {
            Step::Ingest => "corpus",
            Step::SelectK => "topics.k_range",
            Step::FitTopics => "topics",
            Step::Trends | Step::UnitRoot => "trends",
            Step::Regress => "regressions",
            Step::Embed => "embeddings",
            _ => "multivar",
        }
    }
}

/// Steps a configuration switches on.
pub fn enabled_steps(config: &PipelineConfig) -> Vec<Step> {
    Step::ALL.into_iter().filter(|s| s.configured(config)).collect()
}

/// Runs every configured stage.
pub fn run(config: &PipelineConfig) -> Result<RunManifest> {
    run_steps(config, &enabled_steps(config))
}

/// Runs the requested steps plus their prerequisites. Validation problems
/// return `Error::Config`; a failing stage returns `Error::Stage` after the
/// partial manifest and a `FAILED` marker have been written.
pub fn run_steps(config: &PipelineConfig, steps: &[Step]) -> Result<RunManifest> {
    config.validate()?;
    let mut todo = BTreeSet::new();
    for &step in steps {
        if !step.configured(config) {
            return Err(Error::Config(format!(
                "step `{}` needs the [{}] configuration",
                step.name(),
                step.section()
            )));
        }
        let mut s = Some(step);
        while let Some(cur) = s {
            todo.insert(cur);
            s = cur.prerequisite();
        }
    }
    let root = config.out.clone();
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let marker = root.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let mut w = ArtifactWriter::new(root.clone(), config.seed, config_fingerprint(config)?);
    let mut ctx = Context::default();
    let mut timings = BTreeMap::new();
    for step in todo {
        w.begin(step.name());
        let started = Instant::now();
        let outcome = execute(step, config, &mut ctx, &mut w);
        timings.insert(step.name(), started.elapsed().as_secs_f64());
        if let Err(source) = outcome {
            w.manifest.failed_stage = Some(step.name().to_string());
            w.finish()?;
            let text = format!("stage {}: {source}\n", step.name());
            fs::write(&marker, text).map_err(|e| Error::io(&marker, e))?;
            write_timings(&root, &timings)?;
            return Err(Error::Stage {
                stage: step.name().to_string(),
                source: Box::new(source),
            });
        }
    }
    w.finish()?;
    write_timings(&root, &timings)?;
    Ok(w.manifest)
}

fn write_timings(root: &Path, timings: &BTreeMap<&str, f64>) -> Result<()> {
    let path = root.join(TIMINGS_FILE);
    fs::write(&path, serde_json::to_string_pretty(timings)?).map_err(|e| Error::io(&path, e))
}

/// Hash of the configuration with the output directory blanked and every
/// input path replaced by the hash of its contents.
pub fn config_fingerprint(config: &PipelineConfig) -> Result<String> {
    let mut c = config.clone();
    c.out = Default::default();
    let by_content = |p: &mut std::path::PathBuf| -> Result<()> {
        *p = format!("sha256:{}", sha256_file(p)?).into();
        Ok(())
    };
    by_content(&mut c.corpus.input)?;
    if let Some(p) = c.corpus.base_stopwords.as_mut() {
        by_content(p)?;
    }
    if let Some(p) = c.corpus.custom_stopwords.as_mut() {
        by_content(p)?;
    }
    if let Some(p) = c.trends.as_mut().and_then(|t| t.category_map.as_mut()) {
        by_content(p)?;
    }
    // serde_json maps are ordered, so hash-map fields serialise stably.
    let value = serde_json::to_value(&c)?;
    Ok(sha256_hex(value.to_string().as_bytes()))
}

#[derive(Default)]
struct Context {
    records: Vec<DocumentRecord>,
    corpus: Option<ProcessedCorpus>,
    design: Option<CovariateDesign>,
    fit: Option<TopicModelFit>,
    prevalence: Option<PrevalenceSeries>,
    series: Option<MultiSeries>,
    var: Option<VarModel>,
}

impl Context {
    fn corpus(&self) -> &ProcessedCorpus {
        self.corpus.as_ref().expect("ingest ran first")
    }

    fn fit(&self) -> &TopicModelFit {
        self.fit.as_ref().expect("topics ran first")
    }

    fn prevalence(&self) -> &PrevalenceSeries {
        self.prevalence.as_ref().expect("trends ran first")
    }
}

fn execute(step: Step, config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    match step {
        Step::Ingest => ingest(config, ctx, w),
        Step::SelectK => select_k(config, ctx, w),
        Step::FitTopics => fit_topics(config, ctx, w),
        Step::Trends => trends(config, ctx, w),
        Step::UnitRoot => unit_roots(config, ctx, w),
        Step::Regress => regressions(config, ctx, w),
        Step::Cointegration => cointegration_step(config, ctx, w),
        Step::Var => var_step(config, ctx, w),
        Step::Vecm => vecm_step(config, ctx, w),
        Step::Granger => granger_step(config, ctx, w),
        Step::Irf => irf_step(config, ctx, w),
        Step::Fevd => fevd_step(config, ctx, w),
        Step::Embed => embed(config, ctx, w),
    }
}

fn ingest(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let c = &config.corpus;
    let stopwords = StopwordConfig::from_files(c.base_stopwords.as_deref(), c.custom_stopwords.as_deref())?;
    let options = LoadOptions {
        format: c.format,
        delimiter: c.delimiter,
        year_range: c.year_range,
        journal_types: c.journal_types.clone(),
    };
    let (records, summary) = load_records(&c.input, &c.schema, &options)?;
    for warning in summary.warnings() {
        w.warn(warning);
    }
    let selected = select_subset(&records, &c.operators)?;
    if selected.is_empty() {
        return Err(Error::InvalidInput("no record matches the operators".into()));
    }
    let docs: Vec<(String, Vec<String>)> = selected
        .par_iter()
        .map(|r| (r.id.clone(), preprocess(&r.r#abstract, &stopwords)))
        .collect();
    let corpus = build_matrix(&docs)?;
    if !corpus.dropped.is_empty() {
        w.warn(format!("dropped {} documents left empty by preprocessing", corpus.dropped.len()));
    }
    let by_id: HashMap<&str, &DocumentRecord> = selected.iter().map(|r| (r.id.as_str(), r)).collect();
    ctx.records = corpus.doc_ids.iter().map(|id| by_id[id.as_str()].clone()).collect();

    for path in write_archive(&corpus, &w.root.join("corpus"))? {
        let name = path.file_name().and_then(|n| n.to_str()).expect("archive file name");
        w.existing(&format!("corpus/{name}"))?;
    }
    let mut jsonl = String::new();
    for r in &ctx.records {
        jsonl.push_str(&serde_json::to_string(r)?);
        jsonl.push('\n');
    }
    w.bytes("corpus/records.jsonl", jsonl.as_bytes())?;
    let mut totals = Table::new(["quantity", "value"]);
    for (q, v) in [
        ("records_read", summary.rows_read),
        ("records_loaded", records.len()),
        ("records_selected", selected.len()),
        ("documents", corpus.num_docs()),
        ("terms", corpus.num_terms()),
        ("tokens", corpus.num_tokens() as usize),
        ("documents_dropped", corpus.dropped.len()),
    ] {
        totals.push([q.to_string(), v.to_string()]);
    }
    w.table("corpus_totals", "corpus/totals.csv", &totals, None)?;
    ctx.corpus = Some(corpus);
    Ok(())
}

fn topic_inputs(config: &PipelineConfig, ctx: &mut Context) -> Result<(CovariateDesign, FitOptions)> {
    let t = config.topics.as_ref().expect("validated");
    let design = match &ctx.design {
        Some(d) => d.clone(),
        None => {
            let year = t.covariates.iter().any(|c| c == "year");
            let journal = t.covariates.iter().any(|c| c == "journal_type");
            let d = CovariateDesign::from_records(&ctx.records, year, journal)?;
            ctx.design = Some(d.clone());
            d
        }
    };
    let opts = FitOptions {
        max_iterations: t.max_iterations,
        tolerance: t.tolerance,
        seed: config.seed,
        init: t.init,
        ..FitOptions::default()
    };
    Ok((design, opts))
}

fn select_k(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let range = config.topics.as_ref().and_then(|t| t.k_range).expect("configured");
    let (design, opts) = topic_inputs(config, ctx)?;
    let report = k_scan(ctx.corpus(), &design, range, &opts)?;
    if report.highlight.is_none() {
        w.warn("no K in the scan improves on its predecessor");
    }
    w.table("k_scan", "topics/k_scan.csv", &report.to_table(), wide_columns("K", &["SC", "EX", "SER", "wSER"]))
}

fn fit_topics(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let t = config.topics.as_ref().expect("validated");
    let (design, opts) = topic_inputs(config, ctx)?;
    let corpus = ctx.corpus();
    let model = fit(corpus, &design, t.k, &opts)?;
    if !model.converged {
        w.warn(format!("EM stopped after {} iterations without converging", model.iterations_used));
    }
    w.bytes("topics/fit.json", model.to_json()?.as_bytes())?;

    let n_words = t.top_words.min(corpus.num_terms());
    let frex = label_topics(&model, &corpus.vocabulary, n_words, WordMetric::Frex { weight: t.frex_weight })?;
    let prob = label_topics(&model, &corpus.vocabulary, n_words, WordMetric::HighestProb)?;
    let quality = coherence_exclusivity(&model, corpus, DEFAULT_TOP_M.min(corpus.num_terms()))?;
    let mut labels = Table::new(["topic", "frex", "highest_prob", "coherence", "exclusivity"]);
    for k in 0..t.k {
        labels.push([
            (k + 1).to_string(),
            frex[k].join(" "),
            prob[k].join(" "),
            num(quality.coherence[k]),
            num(quality.exclusivity[k]),
        ]);
    }
    w.table("topic_labels", "topics/labels.csv", &labels, None)?;

    let mut headers = vec!["id".to_string()];
    headers.extend((1..=t.k).map(|k| format!("topic_{k}")));
    let mut theta = Table::new(headers);
    for (d, id) in corpus.doc_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(model.theta.row(d).iter().map(|v| num(*v)));
        theta.push(row);
    }
    w.table("theta", "topics/theta.csv", &theta, None)?;

    let mut bound = Table::new(["iteration", "bound"]);
    for (i, b) in model.bound_trace.iter().enumerate() {
        bound.push([(i + 1).to_string(), num(*b)]);
    }
    w.table("em_bound", "topics/bound.csv", &bound, wide("iteration"))?;

    let mut effects = Table::new(["topic", "covariate", "estimate", "std_error", "ci_low", "ci_high"]);
    for name in &design.names {
        for e in estimate_effect(&model, &design, name, Uncertainty::Analytic)? {
            effects.push([
                (e.topic + 1).to_string(),
                e.covariate.clone(),
                num(e.estimate),
                num(e.std_error),
                num(e.ci.0),
                num(e.ci.1),
            ]);
        }
    }
    if !design.names.is_empty() {
        w.table(
            "topic_effects",
            "topics/effects.csv",
            &effects,
            long(&["covariate"], "topic", "estimate", Some(("ci_low", "ci_high"))),
        )?;
    }
    ctx.fit = Some(model);
    Ok(())
}

fn topic_label(map: Option<&CategoryMap>, topic: usize) -> String {
    match map {
        Some(m) => m.category_of(topic).to_string(),
        None => format!("topic_{}", topic + 1),
    }
}

fn trends(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let t = config.trends.as_ref().expect("validated");
    let map = t.category_map.as_deref().map(CategoryMap::from_file).transpose()?;
    let grouping = match &map {
        Some(m) => Grouping::Categories(m.clone()),
        None => Grouping::Topics,
    };
    let theta = &ctx.fit().theta;
    let prevalence = yearly_prevalence(theta, &ctx.records, &grouping)?;
    if !prevalence.missing_years.is_empty() {
        w.warn(format!("no documents in years {:?}", prevalence.missing_years));
    }
    w.table("prevalence", "trends/prevalence.csv", &prevalence.to_table(), wide("year"))?;

    let years: Vec<i32> = ctx.records.iter().map(|r| r.year).collect();
    let top = top_quantile_series(theta, &years, t.quantile_degree)?;
    let mut table = Table::new(["year", "mean_top_probability", "trend"]);
    for (i, y) in top.years.iter().enumerate() {
        table.push([y.to_string(), num(top.values[i]), num(top.trend.fitted[i])]);
    }
    w.table("top_quantile", "trends/top_quantile.csv", &table, wide("year"))?;

    if let Some(split) = t.split_year {
        let members: Vec<usize> = (0..theta.ncols())
            .filter(|&k| t.split_categories.contains(&topic_label(map.as_ref(), k)))
            .collect();
        if members.is_empty() {
            return Err(Error::InvalidInput(format!("no topic belongs to {:?}", t.split_categories)));
        }
        let (mut early, mut late) = (Vec::new(), Vec::new());
        for (d, r) in ctx.records.iter().enumerate() {
            let share: f64 = members.iter().map(|&k| theta[(d, k)]).sum();
            if r.year <= split {
                early.push(share.ln());
            } else {
                late.push(share.ln());
            }
        }
        let ks = ks_dominance(&early, &late)?;
        let mut table = Table::new(["first_sample", "second_sample", "m", "n", "d_plus", "p_value"]);
        table.push([
            format!("<= {split}"),
            format!("> {split}"),
            ks.m.to_string(),
            ks.n.to_string(),
            num(ks.d_plus),
            ks.p_value.to_string(),
        ]);
        w.table("dominance", "trends/dominance.csv", &table, None)?;
        let mut dens = Table::new(["sample", "kind", "x", "y"]);
        for (label, sample) in [(format!("<= {split}"), &early), (format!("> {split}"), &late)] {
            for (kind, name) in [(DensityKind::Pdf, "pdf"), (DensityKind::Cdf, "cdf")] {
                for (x, y) in density_curves(sample, kind)? {
                    dens.push([label.clone(), name.to_string(), num(x), num(y)]);
                }
            }
        }
        w.table("density", "trends/density.csv", &dens, long(&["sample", "kind"], "x", "y", None))?;
    }
    ctx.prevalence = Some(prevalence);
    Ok(())
}

fn unit_roots(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let t = config.trends.as_ref().expect("validated");
    let prevalence = ctx.prevalence();
    prevalence.require_gap_free()?;
    let values = if t.logs { prevalence.log_values()? } else { prevalence.values.clone() };
    let mut results = Vec::new();
    for (j, label) in prevalence.labels.iter().enumerate() {
        let series: Vec<f64> = values.column(j).iter().copied().collect();
        results.push((label.clone(), unit_root_battery(&series, t.lag)?));
    }
    w.table("unit_root", "trends/unit_root.csv", &battery_table(&results), None)
}

fn regressions(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let r = config.regressions.as_ref().expect("validated");
    let fit = ctx.fit();
    let rows = citation_rows(&ctx.records, &fit.theta)?;
    let opts = CitationModelOptions {
        transform: r.transforms[0],
        reference_year: r.reference_year,
        author_effects: r.author_effects,
    };
    let jobs: Vec<(usize, _)> = (0..fit.k).flat_map(|t| r.transforms.iter().map(move |m| (t, *m))).collect();
    let mut fits = Vec::new();
    for ((topic, transform), result) in jobs.into_iter().zip(fit_all_topics(&rows, fit.k, &r.transforms, &opts)) {
        match result {
            Ok(f) => fits.push(f),
            Err(e) => w.warn(format!("topic {} {}: {e}", topic + 1, transform.name())),
        }
    }
    if fits.is_empty() {
        return Err(Error::Degenerate("no citation regression could be estimated".into()));
    }
    w.table(
        "citations",
        "regressions/citations.csv",
        &regression_table(&fits),
        long(&["transform"], "topic", "coefficient", None),
    )
}

fn series(config: &PipelineConfig, ctx: &mut Context) -> Result<MultiSeries> {
    if let Some(s) = &ctx.series {
        return Ok(s.clone());
    }
    let m = config.multivar.as_ref().expect("validated");
    let prevalence = ctx.prevalence();
    let vars = if m.variables.is_empty() { prevalence.labels.clone() } else { m.variables.clone() };
    let s = MultiSeries::from_prevalence(prevalence, &vars, m.logs)?;
    ctx.series = Some(s.clone());
    Ok(s)
}

fn var_model(config: &PipelineConfig, ctx: &mut Context) -> Result<VarModel> {
    if let Some(v) = &ctx.var {
        return Ok(v.clone());
    }
    let data = series(config, ctx)?;
    let v = fit_var(&data, config.multivar.as_ref().expect("validated").lag)?;
    ctx.var = Some(v.clone());
    Ok(v)
}

fn bootstrap(config: &PipelineConfig) -> Option<BootstrapSpec> {
    let m = config.multivar.as_ref().expect("validated");
    (m.replications > 0).then_some(BootstrapSpec {
        replications: m.replications,
        level: m.level,
        seed: config.seed,
        interval: m.interval,
    })
}

fn cointegration_step(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let m = config.multivar.as_ref().expect("validated");
    let data = series(config, ctx)?;
    for method in &m.cointegration {
        let report = cointegration(&data, *method, m.lag, m.deterministic)?;
        let name = match method {
            CointegrationMethod::Johansen => "johansen",
            CointegrationMethod::EngleGranger => "engle_granger",
        };
        w.table(&format!("cointegration_{name}"), &format!("multivar/cointegration_{name}.csv"), &report.to_table(), None)?;
    }
    Ok(())
}

fn var_step(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let m = config.multivar.as_ref().expect("validated");
    let data = series(config, ctx)?;
    let selection = select_lag(&data, m.max_lag)?;
    w.table("lag_selection", "multivar/lag_selection.csv", &selection.to_table(), None)?;
    let var = var_model(config, ctx)?;
    let b = var.coefficient_matrix();
    let se = var.std_errors();
    let mut regressors = vec!["const".to_string()];
    for l in 1..=var.p {
        regressors.extend(var.names.iter().map(|n| format!("L{l}.{n}")));
    }
    let mut table = Table::new(["equation", "regressor", "coefficient", "std_error"]);
    for (j, eq) in var.names.iter().enumerate() {
        for (i, reg) in regressors.iter().enumerate() {
            table.push([eq.clone(), reg.clone(), num(b[(i, j)]), num(se[(i, j)])]);
        }
    }
    w.table("var_coefficients", "multivar/var_coefficients.csv", &table, None)?;
    let diag = diagnostics(ModelRef::Var(&var), m.lm_lags)?;
    if !diag.stable {
        w.warn("VAR has a companion eigenvalue on or outside the unit circle");
    }
    w.table("var_stability", "multivar/var_stability.csv", &diag.stability_table(), None)?;
    w.table("var_normality", "multivar/var_normality.csv", &diag.normality_table(), None)?;
    w.table("var_lm", "multivar/var_lm.csv", &diag.lm_table(), None)
}

fn vecm_step(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let m = config.multivar.as_ref().expect("validated");
    let data = series(config, ctx)?;
    let rank = match m.vecm_rank {
        Some(r) => r,
        None => johansen(&data, m.lag, m.deterministic)?.selected_rank,
    };
    if rank >= data.dim() {
        w.warn(format!("cointegration rank {rank} equals the number of variables; no error-correction model fitted"));
        return Ok(());
    }
    let vecm = fit_vecm(&data, m.lag, rank, m.deterministic)?;
    let mut table = Table::new(["matrix", "variable", "relation", "value"]);
    for (name, mat) in [("beta", &vecm.beta), ("alpha", &vecm.alpha)] {
        for (i, var) in vecm.names.iter().enumerate() {
            for r in 0..rank {
                table.push([name.to_string(), var.clone(), (r + 1).to_string(), num(mat[(i, r)])]);
            }
        }
    }
    w.table("vecm_coefficients", "multivar/vecm_coefficients.csv", &table, None)?;
    let (rows, stable) = stability(ModelRef::Vecm(&vecm));
    if !stable {
        w.warn("VECM has a free eigenvalue on or outside the unit circle");
    }
    let mut st = Table::new(["real", "imaginary", "modulus"]);
    for r in rows {
        st.push([num(r.re), num(r.im), num(r.modulus)]);
    }
    w.table("vecm_stability", "multivar/vecm_stability.csv", &st, None)?;
    let irf = impulse_response(ModelRef::Vecm(&vecm), m.horizon, true, bootstrap(config))?;
    if let Some(note) = &irf.bands_refused {
        w.warn(note.clone());
    }
    w.table(
        "vecm_irf",
        "multivar/vecm_irf.csv",
        &irf.to_table(),
        long(&["impulse", "response"], "step", "irf", Some(("lower", "upper"))),
    )
}

fn granger_step(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let m = config.multivar.as_ref().expect("validated");
    let data = series(config, ctx)?;
    let rows = granger_wald(&data, m.lag, m.d_max, m.granger_mode)?;
    w.table("granger", "multivar/granger.csv", &granger_table(&rows), None)
}

fn irf_step(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let m = config.multivar.as_ref().expect("validated");
    let var = var_model(config, ctx)?;
    let irf = impulse_response(ModelRef::Var(&var), m.horizon, true, bootstrap(config))?;
    w.table(
        "irf",
        "multivar/irf.csv",
        &irf.to_table(),
        long(&["impulse", "response"], "step", "irf", Some(("lower", "upper"))),
    )
}

fn fevd_step(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let m = config.multivar.as_ref().expect("validated");
    let var = var_model(config, ctx)?;
    let result = fevd(&var, m.horizon, bootstrap(config))?;
    w.table(
        "fevd",
        "multivar/fevd.csv",
        &result.to_table(),
        long(&["impulse", "response"], "step", "fevd", Some(("lower", "upper"))),
    )
}

fn embed(config: &PipelineConfig, ctx: &mut Context, w: &mut ArtifactWriter) -> Result<()> {
    let e = config.embeddings.as_ref().expect("validated");
    let opts = EmbeddingOptions {
        dim: e.dim,
        iterations: e.iterations,
        negative: e.negative,
        alpha_start: e.alpha_start,
        alpha_end: e.alpha_end,
        seed: config.seed,
    };
    let model = train_pvdbow(ctx.corpus(), &opts)?;
    w.bytes("embeddings/model.json", model.to_json()?.as_bytes())?;
    let mut loss = Table::new(["epoch", "loss"]);
    for (i, l) in model.epoch_loss.iter().enumerate() {
        loss.push([(i + 1).to_string(), num(*l)]);
    }
    w.table("embedding_loss", "embeddings/loss.csv", &loss, wide("epoch"))?;
    let series = similarity_series(&model, &ctx.records, e.raw_inner_product)?;
    if !series.omitted_years.is_empty() {
        w.warn(format!("years with fewer than two documents omitted: {:?}", series.omitted_years));
    }
    w.json(
        "embeddings/similarity_meta.json",
        &serde_json::json!({
            "similarity": if e.raw_inner_product { "raw inner product" } else { "cosine (unit-normalised inner product)" },
            "omitted_years": series.omitted_years,
        }),
    )?;
    w.table("similarity", "embeddings/similarity.csv", &series.to_table(), wide("year"))
}

//! One function per subcommand.

use std::path::Path;

use anyhow::anyhow;
use serde::Serialize;
use slurg_core::dataset::{self, make_split, Split};
use slurg_core::{select_gold, Corpus};
use slurg_review::{likert_means, ReviewConfig, ReviewStore};

use crate::args::{Cli, Command, GlobalOpts, PosArg, ReviewCommand};
use crate::error::{config, data, CliResult};
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::ops::{self, GenerationPlan, StatsOptions};
use crate::pipeline::{self, PipelineConfig};
use crate::report::PipelineReport;

fn emit<T: Serialize>(g: &GlobalOpts, value: &T, text: impl FnOnce() -> String) {
    if g.json {
        println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
    } else {
        print!("{}", text());
    }
}

fn seed(g: &GlobalOpts) -> u64 {
    g.seed.unwrap_or(0)
}

fn out_dir(g: &GlobalOpts) -> CliResult<&Path> {
    g.out_dir
        .as_deref()
        .ok_or_else(|| config(anyhow!("this command needs --out-dir")))
}

/// Writes a corpus file plus its manifest.
fn finish_corpus(mut m: ManifestBuilder, out: &Path, corpus: &Corpus) -> CliResult<()> {
    dataset::write_corpus(out, corpus).map_err(data)?;
    m.output(out);
    m.write(&manifest_path_for(out))?;
    Ok(())
}

#[derive(Serialize)]
struct Count<'a> {
    output: &'a Path,
    samples: usize,
    rejected: usize,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match cli.command {
        Command::Ingest { input, source, out } => {
            ops::guard_file(&out, g.force)?;
            let mut m = ManifestBuilder::new("ingest");
            m.input(&input);
            let ing = ops::ingest(&input, source.into())?;
            let rej = out.with_extension("rejects.jsonl");
            ops::write_rejects(&rej, &ing.rejects)?;
            m.output(&rej);
            finish_corpus(m, &out, &ing.corpus)?;
            let c = Count { output: &out, samples: ing.corpus.len(), rejected: ing.rejects.len() };
            emit(g, &c, || format!("{} samples, {} rejected -> {}\n", c.samples, c.rejected, out.display()));
        }
        Command::Filter { input, min_length, out } => {
            ops::guard_file(&out, g.force)?;
            let mut m = ManifestBuilder::new("filter");
            m.input(&input);
            let ing = ops::ingest(&input, slurg_core::Source::Reddit)?;
            let kept = dataset::filter_min_length(&ing.corpus, min_length);
            finish_corpus(m, &out, &kept)?;
            let c = Count { output: &out, samples: kept.len(), rejected: ing.corpus.len() - kept.len() };
            emit(g, &c, || format!("kept {} of {} -> {}\n", c.samples, ing.corpus.len(), out.display()));
        }
        Command::Sample { input, n, out } => {
            ops::guard_file(&out, g.force)?;
            let mut m = ManifestBuilder::new("sample");
            m.input(&input).seed("seed", seed(g));
            let ing = ops::ingest(&input, slurg_core::Source::Reddit)?;
            let batch = dataset::sample_annotation_batch(&ing.corpus, n, seed(g)).map_err(data)?;
            finish_corpus(m, &out, &batch)?;
            let c = Count { output: &out, samples: batch.len(), rejected: 0 };
            emit(g, &c, || format!("{} samples -> {}\n", c.samples, out.display()));
        }
        Command::Agree { input } => {
            let dir = out_dir(g)?;
            ops::guard_dir(dir, g.force)?;
            let mut m = ManifestBuilder::new("agree");
            input.iter().for_each(|p| {
                m.input(p);
            });
            let (grouped, _) = ops::read_annotations(&input)?;
            let report = ops::agreement(&grouped)?;
            for p in ops::write_agreement(dir, &report)? {
                m.output(p);
            }
            m.write(&dir.join("manifest.json"))?;
            emit(g, &report, || {
                let mut s = String::new();
                for p in &report.pair_scores {
                    s += &format!(
                        "{} {} shared {} iou {:.4}\n",
                        p.annotator_a, p.annotator_b, p.shared_samples, p.overall
                    );
                }
                s
            });
        }
        Command::Gold { input, threshold, out } => {
            ops::guard_file(&out, g.force)?;
            if !(0.0..=1.0).contains(&threshold) {
                return Err(config(anyhow!("--threshold must lie in [0, 1]")));
            }
            let mut m = ManifestBuilder::new("gold");
            input.iter().for_each(|p| {
                m.input(p);
            });
            m.seed("seed", seed(g));
            let (grouped, _) = ops::read_annotations(&input)?;
            let report = ops::agreement(&grouped)?;
            let gold = select_gold(&grouped, &report, threshold, seed(g));
            finish_corpus(m, &out, &gold)?;
            let c = Count { output: &out, samples: gold.len(), rejected: 0 };
            emit(g, &c, || format!("{} gold samples -> {}\n", c.samples, out.display()));
        }
        Command::Split { input, spec } => {
            let dir = out_dir(g)?;
            let specs = ops::parse_specs(&spec, seed(g))?;
            ops::guard_dir(dir, g.force)?;
            let mut m = ManifestBuilder::new("split");
            m.input(&input).seed("seed", seed(g));
            let ing = ops::ingest(&input, slurg_core::Source::Reddit)?;
            let mut metas = Vec::new();
            for spec in &specs {
                let split = make_split(&ing.corpus, spec);
                let sub = dir.join(spec.dir_name());
                split.write_to(&sub).map_err(data)?;
                for f in ["gold.jsonl", "fewshot.jsonl", "split.meta.json"] {
                    m.output(sub.join(f));
                }
                metas.push(split.meta());
            }
            m.write(&dir.join("manifest.json"))?;
            emit(g, &metas, || {
                metas
                    .iter()
                    .map(|x| format!("{}: {} gold, {} few-shot\n", x.spec.name, x.n_gold, x.n_fewshot))
                    .collect()
            });
        }
        Command::Annotate { split, out } => {
            ops::guard_file(&out, g.force)?;
            let cfg = ops::load_llm_config(g.config.as_deref())?;
            let s = Split::read_from(&split).map_err(data)?;
            let mut m = ManifestBuilder::new("annotate");
            m.input(&split);
            if let Some(c) = &g.config {
                m.config(c)?;
            }
            let transport = ops::make_transport(&cfg, Some(&s.gold))?;
            let audit = out.with_extension("audit.jsonl");
            let (_, summary) = ops::annotate(&s, &cfg, transport.as_ref(), &out, &audit)?;
            let eval = out.with_extension("eval.json");
            ops::write_json(&eval, &summary.eval)?;
            m.output(&out).output(&eval).volatile_output(&audit);
            m.write(&manifest_path_for(&out))?;
            emit(g, &summary, || {
                format!(
                    "{}: strict F1 {:.4}, relaxed F1 {:.4}, {} failed\n",
                    summary.split,
                    summary.eval.strict.f1,
                    summary.eval.relaxed.f1,
                    summary.failures.len()
                )
            });
            ops::check_failures(&summary.failures)?;
        }
        Command::Generate { split, num, batches, out } => {
            ops::guard_file(&out, g.force)?;
            let cfg = ops::load_llm_config(g.config.as_deref())?;
            let s = Split::read_from(&split).map_err(data)?;
            let seed = g.seed.or(cfg.seed).unwrap_or(0);
            let mut m = ManifestBuilder::new("generate");
            m.input(&split).seed("seed", seed);
            if let Some(c) = &g.config {
                m.config(c)?;
            }
            let transport = ops::make_transport(&cfg, None)?;
            let audit = out.with_extension("audit.jsonl");
            let plan = GenerationPlan { num_samples: num, batches };
            let (_, summary) = ops::generate(&s, &cfg, transport.as_ref(), &plan, seed, &out, &audit)?;
            m.output(&out).volatile_output(&audit);
            m.write(&manifest_path_for(&out))?;
            emit(g, &summary, || {
                format!(
                    "{} requests, {} samples, {} failed -> {}\n",
                    summary.requests,
                    summary.samples,
                    summary.failures.len(),
                    out.display()
                )
            });
            ops::check_failures(&summary.failures)?;
        }
        Command::Eval { gold, pred, out } => {
            if let Some(o) = &out {
                ops::guard_file(o, g.force)?;
            }
            let gold_c = ops::ingest(&gold, slurg_core::Source::Reddit)?.corpus;
            let pred_c = ops::ingest(&pred, slurg_core::Source::Reddit)?.corpus;
            let report = slurg_core::evaluate(&gold_c, &pred_c).map_err(data)?;
            if let Some(o) = &out {
                let mut m = ManifestBuilder::new("eval");
                m.input(&gold).input(&pred);
                ops::write_json(o, &report)?;
                m.output(o);
                m.write(&manifest_path_for(o))?;
            }
            emit(g, &report, || {
                format!(
                    "strict    P {:.4} R {:.4} F1 {:.4}\nrelaxed   P {:.4} R {:.4} F1 {:.4}\n",
                    report.strict.precision,
                    report.strict.recall,
                    report.strict.f1,
                    report.relaxed.precision,
                    report.relaxed.recall,
                    report.relaxed.f1
                )
            });
        }
        Command::Stats { input, top_k, all_tokens, pos, pos_sidecar } => {
            let dir = out_dir(g)?;
            ops::guard_dir(dir, g.force)?;
            let sidecar = match (pos, &pos_sidecar) {
                (PosArg::Naive, _) => None,
                (_, Some(p)) => Some(ops::load_sidecar(p)?),
                (_, None) => return Err(config(anyhow!("--pos {pos:?} needs --pos-sidecar"))),
            };
            let opts = StatsOptions {
                top_k,
                all_tokens,
                pos_sidecar: pos_sidecar.clone(),
                sidecar_fallback: pos == PosArg::SidecarOrNaive,
            };
            let mut m = ManifestBuilder::new("stats");
            m.input(&input);
            if let Some(p) = &pos_sidecar {
                m.input(p);
            }
            let corpus = ops::ingest(&input, slurg_core::Source::Reddit)?.corpus;
            let (report, files) = ops::stats(&corpus, &opts, sidecar.as_ref(), dir)?;
            for f in files {
                m.output(f);
            }
            m.write(&dir.join("manifest.json"))?;
            emit(g, &report, || {
                let mut s = format!(
                    "{} samples, {} tokens, vocab diversity {}, hapax mean {}\n",
                    report.n_samples,
                    report.n_tokens,
                    report.vocab_diversity.map_or("-".into(), |v| format!("{v:.4}")),
                    report.hapax.mean.map_or("-".into(), |v| format!("{v:.4}")),
                );
                for (t, n) in &report.top_k {
                    s += &format!("  {t} {n}\n");
                }
                s
            });
        }
        Command::Review { action } => review(g, action)?,
        Command::Pipeline => {
            let path = g
                .config
                .as_deref()
                .ok_or_else(|| config(anyhow!("pipeline needs --config")))?;
            let cfg = PipelineConfig::load(path)?;
            let dir = out_dir(g)?;
            ops::guard_dir(dir, g.force)?;
            let seed = g.seed.or(cfg.seed).or(cfg.llm.seed).unwrap_or(0);
            let out = pipeline::run(&cfg, Some(path), seed, dir)?;
            emit(g, &out.report, || out.report.render_text());
        }
        Command::Report { run } => {
            let path = run.join("report.json");
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| data(anyhow!("cannot read {}: {e}", path.display())))?;
            let report: PipelineReport =
                serde_json::from_str(&raw).map_err(|e| data(anyhow!("{}: {e}", path.display())))?;
            emit(g, &report, || report.render_text());
        }
    }
    Ok(())
}

fn open_store(dir: &Path, scale: u8) -> CliResult<ReviewStore> {
    if scale < 2 {
        return Err(config(anyhow!("a Likert scale needs at least 2 points")));
    }
    ReviewStore::open(dir, ReviewConfig { scale_points: scale }).map_err(data)
}

fn review(g: &GlobalOpts, action: ReviewCommand) -> CliResult<()> {
    match action {
        ReviewCommand::Serve { store, port, host, ui, scale } => {
            let store = open_store(&store, scale)?;
            let app = slurg_review::router(slurg_review::shared(store), ui.as_deref());
            let rt = ops::runtime()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .map_err(|e| config(anyhow!("cannot bind {host}:{port}: {e}")))?;
                eprintln!("review service on http://{}", listener.local_addr().map_err(data)?);
                slurg_review::serve(listener, app).await.map_err(data)
            })?;
        }
        ReviewCommand::Enqueue { store, input, kind, reviewers } => {
            let mut s = open_store(&store, ReviewConfig::default().scale_points)?;
            let corpus = ops::ingest(&input, slurg_core::Source::Reddit)?.corpus;
            let n = s.enqueue(&corpus, kind.into(), &reviewers).map_err(data)?;
            let p = s.progress();
            emit(g, &p, || format!("{n} tasks for this input; {} of {} done overall\n", p.done, p.total));
        }
        ReviewCommand::Export { store, kind, out } => {
            ops::guard_file(&out, g.force)?;
            let s = open_store(&store, ReviewConfig::default().scale_points)?;
            let mut m = ManifestBuilder::new("review export");
            m.input(&store);
            match kind {
                crate::args::KindArg::Spans => {
                    let samples = s.export_annotations();
                    dataset::write_jsonl(&out, &samples).map_err(data)?;
                    m.output(&out);
                    println!("{} annotations -> {}", samples.len(), out.display());
                }
                crate::args::KindArg::Likert => {
                    let rows = s.export_likert();
                    let mut buf = Vec::new();
                    slurg_review::store::write_likert_csv(&rows, &mut buf).map_err(data)?;
                    ops::write_text(&out, &String::from_utf8(buf).expect("csv is utf-8"))?;
                    let means = out.with_extension("means.csv");
                    let mut buf = Vec::new();
                    slurg_review::store::write_means_csv(&likert_means(&rows), &mut buf).map_err(data)?;
                    ops::write_text(&means, &String::from_utf8(buf).expect("csv is utf-8"))?;
                    m.output(&out).output(&means);
                    println!("{} scores -> {}", rows.len(), out.display());
                }
            }
            m.write(&manifest_path_for(&out))?;
        }
    }
    Ok(())
}

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use slurg_core::codec::render_tagged;
use slurg_core::dataset::{make_split, SplitSpec};
use slurg_core::eval::evaluate;
use slurg_core::label::taxonomy_definitions;
use slurg_core::{AnnotatedSample, Corpus, Source, Span, Tier1};
use slurg_llm::batch::{annotate_batch, generate_batch, plan_generation_requests, BatchOptions, FailureKind};
use slurg_llm::transport::{CannedTransport, ChatTransport, FnTransport, MockTransport, TransportError};
use slurg_llm::{AuditLog, GenerationRequest, PromptBundle, SamplingParams};

const C2_RESPONSE: &str = include_str!("../fixtures/generation_response.txt");

fn gold_corpus() -> Corpus {
    let texts = [
        ("g1", "Clowns are too afraid of getting nuked!", vec![Span::new(0, 38, Tier1::Emotional)]),
        ("g2", "Everyone knows Russia lost already.", vec![Span::new(0, 34, Tier1::Credibility)]),
        ("g3", "If we stop now, Poland is next, then Berlin.", vec![Span::new(0, 44, Tier1::Logical)]),
        ("g4", "Nothing to see here.", vec![]),
        ("g5", "Trolls like you ruin everything, you clown.", vec![
            Span::new(0, 43, Tier1::Emotional),
            Span::new(0, 15, Tier1::Credibility),
        ]),
    ];
    Corpus::new(
        "gold",
        texts
            .into_iter()
            .map(|(id, t, spans)| AnnotatedSample::new(id, "ann", Source::Reddit, t, spans))
            .collect(),
    )
    .unwrap()
}

fn echo_transport(corpus: &Corpus) -> MockTransport {
    let mut t = MockTransport::new(C2_RESPONSE);
    for s in corpus {
        t.answer(s.text.clone(), render_tagged(s).unwrap());
    }
    t
}

#[tokio::test]
async fn echo_gold_scores_perfectly() {
    let gold = gold_corpus();
    let split = make_split(&gold, &SplitSpec::parse("80/20", 3).unwrap());
    let audit = AuditLog::in_memory();
    let opts = BatchOptions {
        audit: Some(&audit),
        ..BatchOptions::new(SamplingParams::ANNOTATION)
    };
    let out = annotate_batch(&split, &echo_transport(&gold), "guidelines", &opts).await;
    assert!(out.failures.is_empty());
    assert_eq!(out.drift_count(), 0);
    let report = evaluate(&split.gold, &out.predictions).unwrap();
    assert_eq!(report.strict.f1, 1.0);
    assert_eq!(report.relaxed.f1, 1.0);
    let records = audit.records();
    assert_eq!(records.len(), split.gold.len());
    assert!(records[0].request_id.starts_with("annotate:80_20:"));
    assert!(records.iter().all(|r| r.raw_response.as_deref().unwrap().contains("<labeled_text>")));
}

#[tokio::test]
async fn missing_labeled_text_is_a_failure_scored_as_miss() {
    let gold = gold_corpus();
    let split = make_split(&gold, &SplitSpec::parse("100/0", 0).unwrap());
    let t = CannedTransport::new("I refuse.");
    let out = annotate_batch(&split, &t, "g", &BatchOptions::new(SamplingParams::ANNOTATION)).await;
    assert_eq!(out.failures.len(), 5);
    assert!(out.failures.iter().all(|f| f.kind == FailureKind::NoLabeledText));
    assert_eq!(out.predictions.len(), 5);
    let report = evaluate(&split.gold, &out.predictions).unwrap();
    assert_eq!(report.strict.recall, 0.0);
    assert_eq!(report.n_pred_spans, 0);
}

#[tokio::test]
async fn labeled_line_output_is_understood() {
    let gold = Corpus::new(
        "g",
        vec![AnnotatedSample::raw("c1", Source::Reddit, "Clowns are too afraid of getting nuked!")],
    )
    .unwrap();
    let split = make_split(&gold, &SplitSpec::parse("100/0", 0).unwrap());
    let t = CannedTransport::new(
        "Original Comment: Clowns are too afraid of getting nuked!\nLabeled Text: <emotional_fallacy>Clowns are too afraid of getting nuked</emotional_fallacy>!",
    );
    let out = annotate_batch(&split, &t, "g", &BatchOptions::new(SamplingParams::ANNOTATION)).await;
    assert!(out.failures.is_empty());
    let p = &out.predictions.samples()[0];
    assert_eq!(p.spans, vec![Span::new(0, 38, Tier1::Emotional)]);
    assert_eq!(p.meta["extraction"], "labeled_line");
}

#[tokio::test]
async fn drift_and_transport_errors_are_recorded() {
    let gold = gold_corpus();
    let split = make_split(&gold, &SplitSpec::parse("100/0", 0).unwrap());
    let t = FnTransport(|p: &PromptBundle| {
        if p.user.contains("Poland") {
            Err(TransportError::Network("reset".into()))
        } else {
            Ok("<labeled_text>\nsomething else entirely\n</labeled_text>".to_string())
        }
    });
    let out = annotate_batch(&split, &t, "g", &BatchOptions::new(SamplingParams::ANNOTATION)).await;
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].kind, FailureKind::Transport);
    assert_eq!(out.failures[0].sample_id.as_deref(), Some("g3"));
    assert_eq!(out.drift_count(), 4);
    let report = evaluate(&split.gold, &out.predictions).unwrap();
    assert_eq!(report.drift_count, 4);
}

/// Answers after a delay that varies per prompt, so completion order
/// differs from request order.
struct Jittery(MockTransport);

#[async_trait]
impl ChatTransport for Jittery {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, TransportError> {
        let delay = prompt.user.len() % 7;
        tokio::time::sleep(Duration::from_millis(delay as u64 * 3)).await;
        self.0.complete(prompt).await
    }
}

#[tokio::test]
async fn results_do_not_depend_on_parallelism() {
    let gold = gold_corpus();
    let split = make_split(&gold, &SplitSpec::parse("100/0", 0).unwrap());
    let t = Jittery(echo_transport(&gold));
    let serial = BatchOptions { parallelism: 1, ..BatchOptions::new(SamplingParams::ANNOTATION) };
    let wide = BatchOptions { parallelism: 8, ..BatchOptions::new(SamplingParams::ANNOTATION) };
    let a = annotate_batch(&split, &t, "g", &serial).await;
    let b = annotate_batch(&split, &t, "g", &wide).await;
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.predictions.ids().collect::<Vec<_>>(), split.gold.ids().collect::<Vec<_>>());
}

fn request(fewshot: Corpus, num: usize) -> GenerationRequest {
    GenerationRequest {
        fewshot: Arc::new(fewshot),
        num_samples: num,
        fallacies: vec![Tier1::Credibility, Tier1::Emotional],
        seed_tag: "synth-80_20".into(),
        split_name: "80/20".into(),
    }
}

#[tokio::test]
async fn canned_generation_yields_two_samples() {
    let t = CannedTransport::new(C2_RESPONSE);
    let defs = taxonomy_definitions();
    let out = generate_batch(&[request(Corpus::empty("f"), 2)], &t, &defs, &BatchOptions::new(SamplingParams::GENERATION)).await;
    assert!(out.failures.is_empty());
    assert_eq!(out.samples.len(), 2);
    for s in &out.samples {
        assert_eq!(s.source, Source::Synthetic);
        let labels: Vec<Tier1> = s.spans.iter().map(|sp| sp.tier1()).collect();
        assert_eq!(labels.iter().filter(|l| **l == Tier1::Credibility).count(), 1);
        assert_eq!(labels.iter().filter(|l| **l == Tier1::Emotional).count(), 1);
        assert_eq!(s.meta["requested_fallacies"], "[credibility_fallacy, emotional_fallacy]");
        assert_eq!(s.meta["compliant"], "true");
        assert_eq!(s.meta["shortfall"], "0");
        assert_eq!(s.meta["split_name"], "80/20");
    }
    assert_eq!(out.samples.ids().collect::<Vec<_>>(), ["synth-80_20-0000-00", "synth-80_20-0000-01"]);
    assert_eq!(out.compliance_rate(), Some(1.0));
    let first = &out.samples.samples()[0];
    assert_eq!(
        first.span_text(&first.spans[0]).unwrap(),
        "Fascist pig-fuckers like Lutsk"
    );
}

#[tokio::test]
async fn shortfall_and_duplicates_are_flagged() {
    let fewshot = Corpus::new(
        "f",
        vec![AnnotatedSample::raw("f1", Source::Reddit, "copied comment")],
    )
    .unwrap();
    let t = CannedTransport::new(
        "<generated_samples>\n<labeled_text>\ncopied comment\n</labeled_text>\n<labeled_text>\n<logical_fallacy>new one</logical_fallacy>\n</labeled_text>\n</generated_samples>",
    );
    let out = generate_batch(&[request(fewshot, 3)], &t, "d", &BatchOptions::new(SamplingParams::GENERATION)).await;
    assert_eq!(out.samples.len(), 2);
    let s = out.samples.samples();
    assert_eq!(s[0].meta["shortfall"], "1");
    assert_eq!(s[0].meta["duplicate_of_fewshot"], "true");
    assert_eq!(s[1].meta["duplicate_of_fewshot"], "false");
    assert_eq!(s[1].meta["compliant"], "false");
}

#[tokio::test]
async fn planned_requests_carry_their_fallacies_into_prompts() {
    let plan = plan_generation_requests(Arc::new(Corpus::empty("f")), "90/10", 1, 16, 42);
    let t = slurg_llm::transport::RecordingTransport::new(CannedTransport::new("no blocks"));
    let out = generate_batch(&plan, &t, "d", &BatchOptions::new(SamplingParams::GENERATION)).await;
    assert_eq!(out.failures.len(), 16);
    let prompts = t.prompts();
    assert_eq!(prompts.len(), 16);
    for (req, p) in plan.iter().zip(&prompts) {
        let listed = slurg_llm::prompt::fallacy_list(&req.fallacies);
        assert!(p.user.contains(&format!("The fallacies to include in the text are: {listed}")));
        assert_eq!(p.params, SamplingParams::GENERATION);
    }
}

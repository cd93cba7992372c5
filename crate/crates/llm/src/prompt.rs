//! Prompt templates and their assembly.
//!
//! The four templates are stored verbatim under `src/templates/` and only
//! ever filled in by slot substitution, so the instruction text reaching
//! the model is exactly the template text.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use slurg_core::codec::{render_tagged, RenderError, LABELED_TEXT_TAG};
use slurg_core::{AnnotatedSample, Corpus, Tier1};

pub const ANNOTATION_SYSTEM: &str = include_str!("templates/annotation_system.txt");
pub const ANNOTATION_USER: &str = include_str!("templates/annotation_user.txt");
pub const GENERATION_SYSTEM: &str = include_str!("templates/generation_system.txt");
pub const GENERATION_USER: &str = include_str!("templates/generation_user.txt");

/// Decoding parameters sent with every request of a task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_max_tokens() -> u32 {
    1024
}

impl SamplingParams {
    pub const ANNOTATION: SamplingParams = SamplingParams {
        temperature: 0.7,
        top_p: 0.9,
        max_tokens: 1024,
    };
    pub const GENERATION: SamplingParams = SamplingParams {
        temperature: 1.2,
        top_p: 0.9,
        max_tokens: 1024,
    };

    // written negated so NaN fails too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature > 0.0) {
            return Err(format!("temperature must be > 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
    pub params: SamplingParams,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("sample `{0}` has empty text")]
    EmptyText(String),
    #[error("cannot render few-shot example: {0}")]
    FewShot(#[from] RenderError),
    #[error("a generation request must ask for at least one sample")]
    ZeroSamples,
}

/// Replaces every `{{NAME}}` slot in one left-to-right pass. Substituted
/// values are not scanned again, so a comment that happens to contain
/// `{{TEXT}}` stays as written. Unknown slots are left alone.
pub fn fill_slots(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) => {
                let name = &after[..close];
                match slots.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push_str("{{");
                        out.push_str(name);
                        out.push_str("}}");
                    }
                }
                rest = &after[close + 2..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Slot names (`{{NAME}}`) still present in `text`.
pub fn unfilled_slots(text: &str) -> Vec<String> {
    let mut found = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        let Some(close) = after.find("}}") else { break };
        let name = &after[..close];
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
            found.push(name.to_string());
        }
        rest = &after[close + 2..];
    }
    found
}

fn labeled_block(tagged: &str) -> String {
    format!("<{LABELED_TEXT_TAG}>\n{tagged}\n</{LABELED_TEXT_TAG}>")
}

/// Few-shot block for the annotation prompt: each example's plain text
/// followed by its tagged form.
pub fn annotation_examples(fewshot: &Corpus) -> Result<String, PromptError> {
    let mut parts = Vec::with_capacity(fewshot.len());
    for s in fewshot {
        let tagged = render_tagged(s)?;
        parts.push(format!(
            "<example>\nOriginal Comment: {}\n{}\n</example>",
            s.text,
            labeled_block(&tagged)
        ));
    }
    Ok(parts.join("\n"))
}

/// Few-shot block for the generation prompt, in the output format the
/// model is asked to produce.
pub fn generation_examples(fewshot: &Corpus) -> Result<String, PromptError> {
    let mut parts = Vec::with_capacity(fewshot.len());
    for s in fewshot {
        parts.push(labeled_block(&render_tagged(s)?));
    }
    Ok(parts.join("\n"))
}

/// `[credibility_fallacy, emotional_fallacy]`; `[]` when empty.
pub fn fallacy_list(fallacies: &[Tier1]) -> String {
    let names: Vec<&str> = fallacies.iter().map(|f| f.tag_name()).collect();
    format!("[{}]", names.join(", "))
}

pub fn build_annotation_prompt(
    sample: &AnnotatedSample,
    guidelines: &str,
    fewshot: &Corpus,
    params: SamplingParams,
) -> Result<PromptBundle, PromptError> {
    if sample.text.is_empty() {
        return Err(PromptError::EmptyText(sample.sample_id.clone()));
    }
    let examples = annotation_examples(fewshot)?;
    let user = fill_slots(
        ANNOTATION_USER,
        &[
            ("GUIDELINES", guidelines),
            ("FEW_SHOT_EXAMPLES", &examples),
            ("TEXT", &sample.text),
        ],
    );
    Ok(PromptBundle {
        system: ANNOTATION_SYSTEM.to_string(),
        user,
        params,
    })
}

/// One generation call: how many comments to ask for and which tier-1
/// fallacies each must contain.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub fewshot: Arc<Corpus>,
    pub num_samples: usize,
    pub fallacies: Vec<Tier1>,
    /// Prefix for generated sample ids, e.g. `synth-80_20`.
    pub seed_tag: String,
    pub split_name: String,
}

pub fn build_generation_prompt(
    req: &GenerationRequest,
    definitions: &str,
    params: SamplingParams,
) -> Result<PromptBundle, PromptError> {
    if req.num_samples == 0 {
        return Err(PromptError::ZeroSamples);
    }
    let examples = generation_examples(&req.fewshot)?;
    let num = req.num_samples.to_string();
    let fallacies = fallacy_list(&req.fallacies);
    let user = fill_slots(
        GENERATION_USER,
        &[
            ("FALLACY_DEFINITIONS", definitions),
            ("FEW_SHOT_SAMPLES", &examples),
            ("NUM_SAMPLES", &num),
            ("FALLACIES", &fallacies),
        ],
    );
    Ok(PromptBundle {
        system: GENERATION_SYSTEM.to_string(),
        user,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use slurg_core::{Source, Span};

    fn fewshot() -> Corpus {
        Corpus::new(
            "f",
            vec![AnnotatedSample::new(
                "f1",
                "a",
                Source::Reddit,
                "Clowns are too afraid of getting nuked!",
                vec![Span::new(0, 38, Tier1::Emotional)],
            )],
        )
        .unwrap()
    }

    #[test]
    fn templates_have_expected_slots() {
        assert_eq!(unfilled_slots(ANNOTATION_USER), ["GUIDELINES", "FEW_SHOT_EXAMPLES", "TEXT"]);
        assert_eq!(
            unfilled_slots(GENERATION_USER),
            ["FALLACY_DEFINITIONS", "FEW_SHOT_SAMPLES", "NUM_SAMPLES", "FALLACIES"]
        );
        assert!(unfilled_slots(ANNOTATION_SYSTEM).is_empty());
        assert!(unfilled_slots(GENERATION_SYSTEM).is_empty());
    }

    #[test]
    fn fill_is_single_pass() {
        assert_eq!(fill_slots("a {{X}} b", &[("X", "{{X}}")]), "a {{X}} b");
        assert_eq!(fill_slots("{{Y}} {{X", &[("X", "1")]), "{{Y}} {{X");
    }

    #[test]
    fn zero_shot_annotation_prompt() {
        let s = AnnotatedSample::raw("t", Source::Reddit, "Some comment");
        let p = build_annotation_prompt(&s, "G", &Corpus::empty("e"), SamplingParams::ANNOTATION).unwrap();
        assert!(p.user.contains("<few_shot_examples>\n\n</few_shot_examples>"));
        assert!(p.user.contains("<text>\nSome comment\n</text>"));
        assert!(unfilled_slots(&p.user).is_empty());
        assert_eq!(p.system, ANNOTATION_SYSTEM);
    }

    #[test]
    fn one_shot_annotation_prompt() {
        let s = AnnotatedSample::raw("t", Source::Reddit, "Another one");
        let p = build_annotation_prompt(&s, "G", &fewshot(), SamplingParams::ANNOTATION).unwrap();
        let tagged = "<emotional_fallacy>Clowns are too afraid of getting nuked</emotional_fallacy>!";
        assert_eq!(p.user.matches(tagged).count(), 1);
        assert!(p.user.contains("Original Comment: Clowns are too afraid of getting nuked!\n<labeled_text>"));
        let empty = AnnotatedSample::raw("e", Source::Reddit, "");
        assert!(build_annotation_prompt(&empty, "G", &fewshot(), SamplingParams::ANNOTATION).is_err());
    }

    #[test]
    fn generation_prompt() {
        let req = GenerationRequest {
            fewshot: Arc::new(fewshot()),
            num_samples: 2,
            fallacies: vec![Tier1::Credibility, Tier1::Emotional],
            seed_tag: "t".into(),
            split_name: "80/20".into(),
        };
        let p = build_generation_prompt(&req, "D", SamplingParams::GENERATION).unwrap();
        assert!(p.user.contains("The fallacies to include in the text are: [credibility_fallacy, emotional_fallacy]"));
        assert!(p.user.contains("You are to generate 2 distinct sample(s)."));
        let none = GenerationRequest { fallacies: vec![], num_samples: 1, ..req.clone() };
        let p = build_generation_prompt(&none, "D", SamplingParams::GENERATION).unwrap();
        assert!(p.user.contains("are: []"));
        assert!(p.user.contains("generate 1 distinct sample(s)."));
        let zero = GenerationRequest { num_samples: 0, ..req };
        assert_eq!(build_generation_prompt(&zero, "D", SamplingParams::GENERATION), Err(PromptError::ZeroSamples));
    }

    #[test]
    fn params_validation() {
        assert!(SamplingParams::ANNOTATION.validate().is_ok());
        assert!(SamplingParams { temperature: 0.0, ..SamplingParams::ANNOTATION }.validate().is_err());
        assert!(SamplingParams { top_p: 1.5, ..SamplingParams::ANNOTATION }.validate().is_err());
    }
}

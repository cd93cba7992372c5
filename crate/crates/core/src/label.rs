//! Fallacy taxonomy: three top-level categories and their fine-grained members.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Top-level fallacy category. These are the only labels that appear in
/// inline markup and the only ones scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier1 {
    #[serde(rename = "credibility_fallacy")]
    Credibility,
    #[serde(rename = "logical_fallacy")]
    Logical,
    #[serde(rename = "emotional_fallacy")]
    Emotional,
}

impl Tier1 {
    pub const ALL: [Tier1; 3] = [Tier1::Credibility, Tier1::Logical, Tier1::Emotional];

    /// Tag name used on the wire and inside markup.
    pub fn tag_name(self) -> &'static str {
        match self {
            Tier1::Credibility => "credibility_fallacy",
            Tier1::Logical => "logical_fallacy",
            Tier1::Emotional => "emotional_fallacy",
        }
    }

    pub fn from_tag_name(name: &str) -> Option<Tier1> {
        match name {
            "credibility_fallacy" => Some(Tier1::Credibility),
            "logical_fallacy" => Some(Tier1::Logical),
            "emotional_fallacy" => Some(Tier1::Emotional),
            _ => None,
        }
    }

    /// Human-readable category name.
    pub fn display_name(self) -> &'static str {
        match self {
            Tier1::Credibility => "Fallacy of Credibility",
            Tier1::Logical => "Fallacy of Logic",
            Tier1::Emotional => "Appeal to Emotion",
        }
    }

    /// Rank used when several spans share the same extent: lower ranks are
    /// rendered as the outer tag.
    pub fn nesting_rank(self) -> u8 {
        match self {
            Tier1::Emotional => 0,
            Tier1::Logical => 1,
            Tier1::Credibility => 2,
        }
    }

    pub fn members(self) -> impl Iterator<Item = Tier2> {
        Tier2::ALL.into_iter().filter(move |t| t.group() == self)
    }
}

impl fmt::Display for Tier1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fallacy label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for Tier1 {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if let Some(t) = Tier1::from_tag_name(trimmed) {
            return Ok(t);
        }
        match trimmed.to_ascii_lowercase().as_str() {
            "credibility" => Ok(Tier1::Credibility),
            "logical" | "logic" => Ok(Tier1::Logical),
            "emotional" | "emotion" => Ok(Tier1::Emotional),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

/// Fine-grained fallacy, grouped under exactly one [`Tier1`] category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier2 {
    // credibility
    AdHominem,
    AdPopulum,
    AppealToAuthority,
    AppealToNature,
    AppealToTradition,
    TuQuoque,
    // logic
    CausalOversimplification,
    CircularReasoning,
    Equivocation,
    FalseAnalogy,
    FalseCausality,
    FalseDilemma,
    HastyGeneralization,
    SlipperySlope,
    StrawMan,
    FallacyOfDivision,
    // emotion
    AppealToPositiveEmotion,
    AppealToFear,
    AppealToPity,
    AppealToAnger,
    AppealToRidicule,
    AppealToWorseProblem,
}

impl Tier2 {
    pub const ALL: [Tier2; 22] = [
        Tier2::AdHominem,
        Tier2::AdPopulum,
        Tier2::AppealToAuthority,
        Tier2::AppealToNature,
        Tier2::AppealToTradition,
        Tier2::TuQuoque,
        Tier2::CausalOversimplification,
        Tier2::CircularReasoning,
        Tier2::Equivocation,
        Tier2::FalseAnalogy,
        Tier2::FalseCausality,
        Tier2::FalseDilemma,
        Tier2::HastyGeneralization,
        Tier2::SlipperySlope,
        Tier2::StrawMan,
        Tier2::FallacyOfDivision,
        Tier2::AppealToPositiveEmotion,
        Tier2::AppealToFear,
        Tier2::AppealToPity,
        Tier2::AppealToAnger,
        Tier2::AppealToRidicule,
        Tier2::AppealToWorseProblem,
    ];

    pub fn group(self) -> Tier1 {
        use Tier2::*;
        match self {
            AdHominem | AdPopulum | AppealToAuthority | AppealToNature | AppealToTradition
            | TuQuoque => Tier1::Credibility,
            CausalOversimplification | CircularReasoning | Equivocation | FalseAnalogy
            | FalseCausality | FalseDilemma | HastyGeneralization | SlipperySlope | StrawMan
            | FallacyOfDivision => Tier1::Logical,
            AppealToPositiveEmotion | AppealToFear | AppealToPity | AppealToAnger
            | AppealToRidicule | AppealToWorseProblem => Tier1::Emotional,
        }
    }

    pub fn name(self) -> &'static str {
        use Tier2::*;
        match self {
            AdHominem => "ad hominem",
            AdPopulum => "ad populum",
            AppealToAuthority => "appeal to authority",
            AppealToNature => "appeal to nature",
            AppealToTradition => "appeal to tradition",
            TuQuoque => "tu quoque",
            CausalOversimplification => "causal oversimplification",
            CircularReasoning => "circular reasoning",
            Equivocation => "equivocation",
            FalseAnalogy => "false analogy",
            FalseCausality => "false causality",
            FalseDilemma => "false dilemma",
            HastyGeneralization => "hasty generalization",
            SlipperySlope => "slippery slope",
            StrawMan => "straw man",
            FallacyOfDivision => "fallacy of division",
            AppealToPositiveEmotion => "appeal to positive emotion",
            AppealToFear => "appeal to fear",
            AppealToPity => "appeal to pity",
            AppealToAnger => "appeal to anger",
            AppealToRidicule => "appeal to ridicule",
            AppealToWorseProblem => "appeal to worse problem",
        }
    }

    /// Annotation-guideline definition of the fallacy.
    pub fn definition(self) -> &'static str {
        use Tier2::*;
        match self {
            AdHominem => "This fallacy involves attacking a person's character or motives instead of addressing the substance of their argument.",
            AdPopulum => "This fallacy involves claiming that an idea or action is valid because it is popular or widely accepted.",
            AppealToAuthority => "This fallacy occurs when an argument relies on the opinion or endorsement of an authority figure who may not have relevant expertise or whose expertise is questionable. When applicable, a scientific consensus is not an appeal to authority.",
            AppealToNature => "This fallacy occurs when something is assumed to be good or desirable simply because it is natural, while its unnatural counterpart is assumed to be bad or undesirable.",
            AppealToTradition => "This fallacy involves arguing that something should continue to be done a certain way because it has always been done that way, rather than evaluating its merits.",
            TuQuoque => "This fallacy occurs when someone's argument is dismissed because they are accused of acting inconsistently with their claim, rather than addressing the argument itself.",
            CausalOversimplification => "This fallacy occurs when a complex issue is reduced to a single cause and effect, oversimplifying the actual relationships between events or factors.",
            CircularReasoning => "This fallacy occurs when an argument assumes the very thing it is trying to prove, resulting in a circular and logically invalid argument.",
            Equivocation => "This fallacy involves using ambiguous language or changing the meaning of a term within an argument, leading to confusion and false conclusions.",
            FalseAnalogy => "This fallacy involves making an analogy between two elements based on superficial resemblance.",
            FalseCausality => "This fallacy involves incorrectly assuming that one event causes another, usually based on temporal order or correlation rather than a proven causal relationship.",
            FalseDilemma => "This fallacy occurs when only two options are presented in an argument, even though more options may exist.",
            HastyGeneralization => "This fallacy occurs when a conclusion is drawn based on insufficient or unrepresentative evidence.",
            SlipperySlope => "This fallacy occurs when it is claimed that a small step will inevitably lead to a chain of events, resulting in a significant negative outcome.",
            StrawMan => "This fallacy involves misrepresenting an opponent's argument, making it easier to attack and discredit.",
            FallacyOfDivision => "This fallacy involves assuming that if something is true for a whole, it must also be true of all or some of its parts.",
            AppealToPositiveEmotion => "Reasoning which includes positively emotionally charged language like pride, vanity, flattery, reverence, hope, optimism, pleasure, to invoke a positive emotional reaction from the audience.",
            AppealToFear => "Fear or threats are used as the main justification of the argument.",
            AppealToPity => "Uses sympathy or compassion as the main justification of an argument rather than reasoning or evidence.",
            AppealToAnger => "Uses anger (toward a person, thing, or idea) or indignation as the justification for an argument.",
            AppealToRidicule => "An opponent's argument is portrayed as absurd or ridiculous with the intention of discrediting it.",
            AppealToWorseProblem => "Dismisses an argument or problem by claiming there are more important issues to deal with.",
        }
    }
}

/// A span label: a top-level category with an optional fine-grained refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FallacyLabel {
    pub tier1: Tier1,
    pub tier2: Option<Tier2>,
}

impl FallacyLabel {
    pub const fn new(tier1: Tier1) -> Self {
        FallacyLabel { tier1, tier2: None }
    }

    /// Label refined to a fine-grained fallacy; the category follows from it.
    pub fn refined(tier2: Tier2) -> Self {
        FallacyLabel {
            tier1: tier2.group(),
            tier2: Some(tier2),
        }
    }

    /// False when `tier2` belongs to a different category than `tier1`.
    pub fn is_consistent(&self) -> bool {
        self.tier2.is_none_or(|t| t.group() == self.tier1)
    }
}

impl From<Tier1> for FallacyLabel {
    fn from(t: Tier1) -> Self {
        FallacyLabel::new(t)
    }
}

/// Renders the taxonomy as a definitions block suitable for prompt slots.
pub fn taxonomy_definitions() -> String {
    let mut out = String::new();
    for (i, tier1) in Tier1::ALL.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{} (<{}>):\n", tier1.display_name(), tier1.tag_name()));
        for t in tier1.members() {
            out.push_str(&format!("- {}: {}\n", t.name(), t.definition()));
        }
    }
    out
}

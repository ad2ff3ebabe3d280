//! Prompt templates. Every template opens with the same system preamble; a
//! [`Prompt`] keeps the preamble and the task body apart so chat backends can
//! send them as separate messages, while `Display` yields the full template
//! text.

use std::fmt;

pub const SYSTEM_PREAMBLE: &str = "You are a cautious assistant. You carefully follow instructions. \
You are helpful and harmless and you follow ethical guidelines and promote positive behavior.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
    /// Joins `system` and `user` in the rendered template.
    pub separator: &'static str,
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.system, self.separator, self.user)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{0} must not be empty")]
    EmptySlot(&'static str),
}

/// Slot text followed by the template's own period, without doubling a
/// period the slot already ends with.
fn sentence(slot: &str) -> String {
    let slot = slot.trim();
    if slot.ends_with('.') {
        slot.to_owned()
    } else {
        format!("{slot}.")
    }
}

/// Rationale-generation prompt. Paths are newline-joined in emission order.
pub fn build_rationale_prompt(question: &str, answer: &str, verbalized_paths: &[String]) -> Prompt {
    let user = format!(
        "You are given the question: {} The corresponding answer is: {} The reasoning paths are: {} \
Please provide a detailed explanatory rationale that references these reasoning paths. \
If you determine that the reasoning path is irrelevant to the current QA pair, \
you may generate rationales based on your own knowledge.",
        sentence(question),
        sentence(answer),
        sentence(&verbalized_paths.join("\n")),
    );
    Prompt {
        system: SYSTEM_PREAMBLE.to_owned(),
        user,
        separator: " ",
    }
}

/// Known-fact check: the model answers only yes or no.
pub fn build_factcheck_prompt(fact: &str) -> Result<Prompt, PromptError> {
    if fact.trim().is_empty() {
        return Err(PromptError::EmptySlot("fact"));
    }
    Ok(Prompt {
        system: SYSTEM_PREAMBLE.to_owned(),
        user: format!(
            "Question: Please determine whether the following statement is correct. \
You only answer 'yes' or 'no'. {}",
            sentence(fact)
        ),
        separator: "\n",
    })
}

/// Multiple-choice answering prompt used for evaluation.
pub fn build_answer_prompt(question: &str, options: &[String]) -> Prompt {
    Prompt {
        system: SYSTEM_PREAMBLE.to_owned(),
        user: format!(
            "You are given a question together with a few options, you should give an explanation \
first and then answer the question. Your response should follow the format like \
Explanation: ___ Answer: ___\nBelow is the Question and Options: {} {}",
            question.trim(),
            options.join(" ")
        ),
        separator: " ",
    }
}

/// Five-dimension rationale quality rubric. Provided for external judging;
/// nothing in this crate consumes the judgement.
pub fn build_quality_prompt(question: &str, rationale: &str) -> Prompt {
    Prompt {
        system: SYSTEM_PREAMBLE.to_owned(),
        user: format!(
            "You are given a rationale for a question.\n\
Evaluate the given rationale along five dimensions\u{2014}Factual Accuracy, Logical Validity, Coherence, \
Completeness, and Interpretability. For each dimension, output True if the rationale is correct \
or meets the criterion; otherwise, output False. You should produce a five-element list in the \
form like [True,True,True,True,True].\n\
Below are the Question {} and the Rationales {}.",
            question.trim(),
            rationale.trim()
        ),
        separator: " ",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationale_prompt_slots() {
        let p = build_rationale_prompt("Q?", "A", &["x--r-->y".into(), "y<--s--z".into()]);
        let text = p.to_string();
        assert!(text.starts_with(SYSTEM_PREAMBLE));
        assert!(text.contains("You are given the question: Q?. The corresponding answer is: A. "));
        assert!(text.contains("The reasoning paths are: x--r-->y\ny<--s--z. Please provide"));
        assert!(text.contains("If you determine that the reasoning path is irrelevant"));
    }

    #[test]
    fn empty_path_slot() {
        let text = build_rationale_prompt("Q", "A", &[]).to_string();
        assert!(text.contains("The reasoning paths are: . Please provide"));
    }

    #[test]
    fn factcheck_rejects_empty() {
        assert_eq!(build_factcheck_prompt("  "), Err(PromptError::EmptySlot("fact")));
        let p = build_factcheck_prompt("Water is wet").unwrap();
        assert!(p.to_string().contains("yes' or 'no'. Water is wet."));
    }
}

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::PromptStrategy;

pub const ESSAY_PLACEHOLDER: &str = "[essay]";

/// System prompt for AI-only essay generation.
pub const STUDENT_SYSTEM_PROMPT: &str = "You are a student writing an essay for a class assignment.";

/// A system prompt plus a user template with one `[essay]` slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    system: String,
    user_template: String,
}

impl PromptTemplate {
    pub fn new(system: impl Into<String>, user_template: impl Into<String>) -> Result<Self, EvalError> {
        let user_template = user_template.into();
        let slots = user_template.matches(ESSAY_PLACEHOLDER).count();
        if slots != 1 {
            return Err(EvalError::Template(format!(
                "user template must contain exactly one {ESSAY_PLACEHOLDER} placeholder, found {slots}"
            )));
        }
        Ok(PromptTemplate {
            system: system.into(),
            user_template,
        })
    }

    /// Built-in augmentation template for a strategy.
    pub fn for_strategy(strategy: PromptStrategy) -> Self {
        let (system, user) = match strategy {
            PromptStrategy::Minimal => (
                "You are a helpful writing assistant.",
                "Please improve the following essay. Keep the same topic and general direction. [essay]",
            ),
            PromptStrategy::Structural => (
                "You are a writing tutor specializing in argumentative essay structure.",
                "Please improve the following essay by: 1. Strengthening the argument structure \
                 2. Adding counterarguments and rebuttals 3. Improving logical coherence between \
                 paragraphs. Maintain the student's original perspective and main arguments. [essay]",
            ),
            PromptStrategy::Delegative => (
                "You are an expert essay writer.",
                "Read the following essay and rewrite it on the same topic in your own way. \
                 You may completely restructure and rewrite the content. [essay]",
            ),
        };
        PromptTemplate::new(system, user).expect("built-in templates have one placeholder")
    }

    pub fn system(&self) -> &str {
        &self.system
    }

    pub fn user_template(&self) -> &str {
        &self.user_template
    }

    pub fn render(&self, essay: &str) -> String {
        self.user_template.replacen(ESSAY_PLACEHOLDER, essay, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_templates() {
        let min = PromptTemplate::for_strategy(PromptStrategy::Minimal);
        assert_eq!(min.system(), "You are a helpful writing assistant.");
        assert_eq!(
            min.user_template(),
            "Please improve the following essay. Keep the same topic and general direction. [essay]"
        );
        let st = PromptTemplate::for_strategy(PromptStrategy::Structural);
        assert_eq!(
            st.system(),
            "You are a writing tutor specializing in argumentative essay structure."
        );
        assert_eq!(
            st.user_template(),
            "Please improve the following essay by: 1. Strengthening the argument structure 2. Adding counterarguments and rebuttals 3. Improving logical coherence between paragraphs. Maintain the student's original perspective and main arguments. [essay]"
        );
        let del = PromptTemplate::for_strategy(PromptStrategy::Delegative);
        assert_eq!(del.system(), "You are an expert essay writer.");
        assert_eq!(
            del.user_template(),
            "Read the following essay and rewrite it on the same topic in your own way. You may completely restructure and rewrite the content. [essay]"
        );
    }

    #[test]
    fn placeholder_count_enforced() {
        assert!(PromptTemplate::new("s", "no slot").is_err());
        assert!(PromptTemplate::new("s", "[essay] [essay]").is_err());
        let t = PromptTemplate::new("s", "Fix: [essay]").unwrap();
        assert_eq!(t.render("an [essay] about cars"), "Fix: an [essay] about cars");
    }
}

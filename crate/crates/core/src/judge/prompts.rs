//! Prompt templates with named placeholders.
//!
//! Templates contain literal JSON, so rendering substitutes only the known
//! placeholder names and never re-scans substituted text.

use std::path::Path;

use super::provider::PromptKind;

pub const PLACEHOLDERS: [&str; 4] = ["comment", "candidates", "segments", "article"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateName {
    VerifySemanticSingle,
    SelectSemanticBest,
    InferSemanticFull,
    VerifyLocationSingle,
    VerifyLocationSelect,
    InferLocationGlobal,
    ExtractEntities,
}

impl TemplateName {
    pub const ALL: [TemplateName; 7] = [
        TemplateName::VerifySemanticSingle,
        TemplateName::SelectSemanticBest,
        TemplateName::InferSemanticFull,
        TemplateName::VerifyLocationSingle,
        TemplateName::VerifyLocationSelect,
        TemplateName::InferLocationGlobal,
        TemplateName::ExtractEntities,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateName::VerifySemanticSingle => "verify_semantic_single.txt",
            TemplateName::SelectSemanticBest => "select_semantic_best.txt",
            TemplateName::InferSemanticFull => "infer_semantic_full.txt",
            TemplateName::VerifyLocationSingle => "verify_location_single.txt",
            TemplateName::VerifyLocationSelect => "verify_location_select.txt",
            TemplateName::InferLocationGlobal => "infer_location_global.txt",
            TemplateName::ExtractEntities => "extract_entities.txt",
        }
    }

    pub fn kind(self) -> PromptKind {
        match self {
            TemplateName::VerifySemanticSingle => PromptKind::VerifySingle,
            TemplateName::SelectSemanticBest => PromptKind::SelectBest,
            TemplateName::InferSemanticFull => PromptKind::FullInfer,
            TemplateName::VerifyLocationSingle | TemplateName::VerifyLocationSelect => PromptKind::VerifyAnchor,
            TemplateName::InferLocationGlobal => PromptKind::GlobalSearch,
            TemplateName::ExtractEntities => PromptKind::EntityExtract,
        }
    }

    fn embedded(self) -> &'static str {
        match self {
            TemplateName::VerifySemanticSingle => include_str!("../../prompts/verify_semantic_single.txt"),
            TemplateName::SelectSemanticBest => include_str!("../../prompts/select_semantic_best.txt"),
            TemplateName::InferSemanticFull => include_str!("../../prompts/infer_semantic_full.txt"),
            TemplateName::VerifyLocationSingle => include_str!("../../prompts/verify_location_single.txt"),
            TemplateName::VerifyLocationSelect => include_str!("../../prompts/verify_location_select.txt"),
            TemplateName::InferLocationGlobal => include_str!("../../prompts/infer_location_global.txt"),
            TemplateName::ExtractEntities => include_str!("../../prompts/extract_entities.txt"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PromptTemplates {
    texts: Vec<String>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates { texts: TemplateName::ALL.iter().map(|t| t.embedded().to_string()).collect() }
    }
}

impl PromptTemplates {
    /// Embedded templates, with any same-named file in `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut templates = Self::default();
        for (i, name) in TemplateName::ALL.iter().enumerate() {
            let path = dir.join(name.file_name());
            if path.is_file() {
                templates.texts[i] = std::fs::read_to_string(&path)?;
            }
        }
        Ok(templates)
    }

    pub fn template(&self, name: TemplateName) -> &str {
        let i = TemplateName::ALL.iter().position(|t| *t == name).expect("template listed in ALL");
        &self.texts[i]
    }

    pub fn render(&self, name: TemplateName, values: &[(&str, &str)]) -> String {
        render(self.template(name), values)
    }
}

/// Replaces `{name}` for each supplied name in a single left-to-right pass.
/// Unknown braces are copied through untouched.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = values.iter().find(|(name, _)| {
            after.starts_with(name) && after[name.len()..].starts_with('}')
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_keeps_json_braces_and_does_not_rescan() {
        let out = render(r#"{"a": {comment}} {other}"#, &[("comment", "{article}"), ("article", "X")]);
        assert_eq!(out, r#"{"a": {article}} {other}"#);
    }

    #[test]
    fn every_template_uses_only_known_placeholders() {
        let t = PromptTemplates::default();
        for name in TemplateName::ALL {
            let text = t.template(name);
            let used: Vec<&str> = PLACEHOLDERS.iter().copied().filter(|p| text.contains(&format!("{{{p}}}"))).collect();
            assert!(!used.is_empty(), "{name:?} has no placeholder");
        }
    }

    #[test]
    fn overrides_replace_only_present_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("extract_entities.txt"), "custom {article}").unwrap();
        let t = PromptTemplates::with_overrides(dir.path()).unwrap();
        assert_eq!(t.render(TemplateName::ExtractEntities, &[("article", "x")]), "custom x");
        assert_eq!(t.template(TemplateName::InferSemanticFull), PromptTemplates::default().template(TemplateName::InferSemanticFull));
    }
}

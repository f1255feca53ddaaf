use std::collections::BTreeMap;
use std::path::Path;

const BUILTIN: &[(&str, &str, &str)] = &[
    ("segment", "v1", include_str!("../../prompts/segment.v1.txt")),
    ("structure", "v1", include_str!("../../prompts/structure.v1.txt")),
    ("structure_repair", "v1", include_str!("../../prompts/structure_repair.v1.txt")),
    ("judge_initial_state", "v1", include_str!("../../prompts/judge_initial_state.v1.txt")),
    ("judge_goal_state", "v1", include_str!("../../prompts/judge_goal_state.v1.txt")),
    ("judge_completeness", "v1", include_str!("../../prompts/judge_completeness.v1.txt")),
];

/// Named, versioned prompt templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    /// name -> (version, template)
    templates: BTreeMap<String, (String, String)>,
}

impl PromptSet {
    pub fn builtin() -> Self {
        PromptSet {
            templates: BUILTIN
                .iter()
                .map(|(n, v, t)| (n.to_string(), (v.to_string(), t.to_string())))
                .collect(),
        }
    }

    /// Built-in templates, overridden by files `<name>.<version>.txt` in
    /// `dir`. When a directory holds several versions of one template the
    /// lexicographically greatest version wins.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut set = Self::builtin();
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        files.sort();
        for path in files {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let Some((name, version)) = stem.rsplit_once('.') else {
                continue;
            };
            let text = std::fs::read_to_string(&path)?;
            set.templates
                .insert(name.to_string(), (version.to_string(), text));
        }
        Ok(set)
    }

    pub fn template(&self, name: &str) -> Option<&str> {
        self.templates.get(name).map(|(_, t)| t.as_str())
    }

    /// `name.version` for every template, sorted.
    pub fn versions(&self) -> Vec<String> {
        self.templates
            .iter()
            .map(|(n, (v, _))| format!("{n}.{v}"))
            .collect()
    }

    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, String> {
        let template = self
            .template(name)
            .ok_or_else(|| format!("no prompt template named `{name}`"))?;
        render(template, vars)
    }
}

/// Replaces every `{{key}}` in `template`. Substituted values are not
/// scanned again. A placeholder without a value is an error.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after
            .find("}}")
            .ok_or_else(|| "unterminated `{{` in template".to_string())?;
        let key = after[..close].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("missing value for placeholder `{key}`"))?;
        out.push_str(value);
        rest = &after[close + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution() {
        assert_eq!(render("a {{x}} b {{ y }}", &[("x", "1"), ("y", "{{x}}")]).unwrap(), "a 1 b {{x}}");
    }

    #[test]
    fn missing_placeholder_is_an_error() {
        assert!(render("{{x}}", &[]).unwrap_err().contains("`x`"));
        assert!(render("{{x", &[("x", "")]).is_err());
    }

    #[test]
    fn builtins_are_complete() {
        let set = PromptSet::builtin();
        assert_eq!(set.versions().len(), 6);
        assert!(set.render("segment", &[("document", "Mix.")]).unwrap().contains("Mix."));
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("segment.v2.txt"), "custom {{document}}").unwrap();
        let set = PromptSet::from_dir(dir.path()).unwrap();
        assert_eq!(set.render("segment", &[("document", "d")]).unwrap(), "custom d");
        assert!(set.versions().contains(&"segment.v2".to_string()));
    }
}

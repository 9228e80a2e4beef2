//! Generation templates and topic seeds.
//!
//! Defaults are compiled in from `resources/templates/`; a directory holding
//! files of the same names overrides them one by one. Placeholders are
//! written `{name}`; both `{lang_name}` and `{language_name}` expand to the
//! target language.

use std::fs;
use std::io;
use std::path::Path;

macro_rules! templates {
    ($($field:ident),* $(,)?) => {
        /// Every text resource the generation stages use.
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct Templates {
            $(pub $field: String,)*
        }

        impl Default for Templates {
            fn default() -> Self {
                Self {
                    $($field: include_str!(concat!("../../resources/templates/", stringify!($field), ".txt")).to_string(),)*
                }
            }
        }

        impl Templates {
            /// Defaults, with every `<name>.txt` found in `dir` replacing the
            /// resource of that name.
            pub fn load_dir(dir: &Path) -> io::Result<Self> {
                let mut t = Self::default();
                $(
                    let p = dir.join(concat!(stringify!($field), ".txt"));
                    if p.exists() {
                        t.$field = fs::read_to_string(&p)?;
                    }
                )*
                Ok(t)
            }
        }
    };
}

templates!(
    topic_seeds_general,
    topic_seeds_language,
    topic_system,
    topic_generation,
    topic_prompt,
    scenario_system,
    general_scenario_informed,
    general_scenario_agnostic,
    specific_scenario_informed,
    specific_scenario_agnostic,
    scenario_prompt,
    context_prompt,
    prompt_system,
    revision_system,
    response_system,
    thinking_suffix,
    translation_system,
);

/// Substitutes `{key}` placeholders. Unknown placeholders are left as is.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

impl Templates {
    fn with_lang(&self, template: &str, language: &str, vars: &[(&str, &str)]) -> String {
        let mut all = vec![("lang_name", language), ("language_name", language)];
        all.extend_from_slice(vars);
        fill(template, &all)
    }

    /// `(seed text, language_specific)` pairs, general seeds first.
    pub fn seeds(&self, language: &str) -> Vec<(String, bool)> {
        let lines =
            |s: &str| -> Vec<String> { s.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect() };
        let general = lines(&self.topic_seeds_general).into_iter().map(|s| (s, false));
        let specific = lines(&self.topic_seeds_language).into_iter().map(|s| (self.with_lang(&s, language, &[]), true));
        general.chain(specific).collect()
    }

    pub fn topic_system(&self, language: &str) -> String {
        self.with_lang(&self.topic_system, language, &[])
    }

    pub fn topic_generation(&self, language: &str, parent: &str, count: usize) -> String {
        let n = count.to_string();
        self.with_lang(&self.topic_generation, language, &[("num_topics", &n), ("macrotopic", parent)])
    }

    pub fn topic_prompt(&self, language: &str, topic: &str, min: usize, max: usize) -> String {
        let (min, max) = (min.to_string(), max.to_string());
        self.with_lang(&self.topic_prompt, language, &[("min_prompts", &min), ("num_prompts", &max), ("topic", topic)])
    }

    pub fn scenario_system(&self, language: &str) -> String {
        self.with_lang(&self.scenario_system, language, &[])
    }

    pub fn general_scenarios(&self, language: &str, count: usize, informed: bool) -> String {
        let t = if informed { &self.general_scenario_informed } else { &self.general_scenario_agnostic };
        self.with_lang(t, language, &[("num_scenarios", &count.to_string())])
    }

    pub fn specific_scenarios(&self, language: &str, broad: &str, count: usize, informed: bool) -> String {
        let t = if informed { &self.specific_scenario_informed } else { &self.specific_scenario_agnostic };
        self.with_lang(t, language, &[("num_scenarios", &count.to_string()), ("general_scenario", broad)])
    }

    pub fn scenario_prompt(&self, language: &str, scenario: &str, count: usize) -> String {
        self.with_lang(&self.scenario_prompt, language, &[("n_prompts", &count.to_string()), ("scenario", scenario)])
    }

    pub fn context_prompt(&self, language: &str, text: &str, task_verb: &str, count: usize) -> String {
        self.with_lang(
            &self.context_prompt,
            language,
            &[("num_prompts", &count.to_string()), ("prompt_type", task_verb), ("context_text", text)],
        )
    }

    pub fn prompt_system(&self, language: &str) -> String {
        self.with_lang(&self.prompt_system, language, &[])
    }

    pub fn revision_system(&self, language: &str) -> String {
        self.with_lang(&self.revision_system, language, &[])
    }

    /// System message for response generation; also the standard
    /// (non-thinking) system message of exported training data.
    pub fn response_system(&self, language: &str) -> String {
        self.with_lang(&self.response_system, language, &[])
    }

    /// Standard system message extended with the thinking-mode sentence.
    pub fn thinking_system(&self, language: &str) -> String {
        format!("{}\n{}", self.response_system(language), self.with_lang(&self.thinking_suffix, language, &[]))
    }

    pub fn translation_system(&self, language: &str) -> String {
        self.with_lang(&self.translation_system, language, &[])
    }
}

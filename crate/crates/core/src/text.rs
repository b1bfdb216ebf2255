//! Keyword matching and label normalization shared by ingest filtering,
//! graph construction and triple search.

/// Folds text for keyword comparison: lowercase, with `_` treated as a space
/// so that a relation keyword like `Has_Theme` hits the rendered phrase
/// `has theme`.
pub fn fold_for_match(text: &str) -> String {
    text.chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c == '_' { ' ' } else { c })
        .collect()
}

/// Case-insensitive any-of substring matcher.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    needles: Vec<String>,
    case_sensitive: bool,
}

impl KeywordMatcher {
    /// Blank keywords are ignored; `None` when nothing usable remains.
    pub fn new<S: AsRef<str>>(keywords: &[S], case_sensitive: bool) -> Option<Self> {
        let needles: Vec<String> = keywords
            .iter()
            .map(|k| k.as_ref().trim())
            .filter(|k| !k.is_empty())
            .map(|k| {
                if case_sensitive {
                    k.replace('_', " ")
                } else {
                    fold_for_match(k)
                }
            })
            .collect();
        if needles.is_empty() {
            None
        } else {
            Some(Self {
                needles,
                case_sensitive,
            })
        }
    }

    pub fn is_match(&self, haystack: &str) -> bool {
        let folded = if self.case_sensitive {
            haystack.replace('_', " ")
        } else {
            fold_for_match(haystack)
        };
        self.needles.iter().any(|n| folded.contains(n.as_str()))
    }

    pub fn keywords(&self) -> &[String] {
        &self.needles
    }
}

/// Dedup key for value labels: trimmed, internal whitespace collapsed, case-folded.
pub fn normalize_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for word in label.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Splits a comma separated keyword argument, dropping blanks.
pub fn split_keywords(arg: &str) -> Vec<String> {
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underscore_keyword_matches_rendered_relation() {
        let m = KeywordMatcher::new(&["Has_Theme"], false).unwrap();
        assert!(m.is_match("cnn.com/x has theme MARITIME_INCIDENT"));
        assert!(!m.is_match("cnn.com/x published by cnn.com"));
    }

    #[test]
    fn substring_and_case() {
        let m = KeywordMatcher::new(&["BRIDGE"], false).unwrap();
        assert!(m.is_match("two bridges fell"));
        let cs = KeywordMatcher::new(&["BRIDGE"], true).unwrap();
        assert!(!cs.is_match("two bridges fell"));
    }

    #[test]
    fn blank_keywords_rejected() {
        assert!(KeywordMatcher::new::<&str>(&[], false).is_none());
        assert!(KeywordMatcher::new(&["  "], false).is_none());
    }

    #[test]
    fn normalization_collapses_whitespace_and_case() {
        assert_eq!(normalize_label("  Brandon   SCOTT "), "brandon scott");
        assert_eq!(normalize_label(""), "");
    }
}

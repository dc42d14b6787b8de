//! Tokenizers.
//!
//! [`answer_tokens`] is the response tokenizer used by the F1 metrics and by
//! history-length counts: lowercase, delete punctuation, split on
//! whitespace, so "it's" is one token "its". [`tokenize`] serves keyword
//! extraction and treats every non-alphanumeric character as a separator.

fn is_kept(c: char) -> bool {
    c.is_alphanumeric() || c.is_whitespace()
}

pub fn answer_tokens(text: &str) -> Vec<String> {
    let stripped: String = text.chars().filter(|&c| is_kept(c)).collect();
    stripped.split_whitespace().map(str::to_lowercase).collect()
}

pub fn token_count(text: &str) -> usize {
    let stripped: String = text.chars().filter(|&c| is_kept(c)).collect();
    stripped.split_whitespace().count()
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_tokens_split_on_punctuation() {
        assert_eq!(
            tokenize("Hello, World! it's  DRACO-malfoy."),
            vec!["hello", "world", "it", "s", "draco", "malfoy"]
        );
        assert!(tokenize("?!...").is_empty());
    }

    #[test]
    fn answer_tokens_delete_punctuation() {
        assert_eq!(
            answer_tokens("Hello, World! it's  DRACO-malfoy."),
            vec!["hello", "world", "its", "dracomalfoy"]
        );
        assert_eq!(token_count("  a\tb\n c , ! "), 3);
        assert!(answer_tokens("?!...").is_empty());
    }
}

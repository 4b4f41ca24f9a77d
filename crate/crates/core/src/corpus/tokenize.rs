use unicode_normalization::UnicodeNormalization;

/// Splits NFC-normalized text into maximal runs of non-whitespace characters.
///
/// No case folding is applied.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    normalized.split_whitespace().map(str::to_owned).collect()
}

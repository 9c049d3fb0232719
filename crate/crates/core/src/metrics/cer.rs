use crate::error::{Error, Result};
use crate::metrics::{MetricKind, Score};

/// Lowercase, drop punctuation, collapse runs of whitespace.
pub fn normalize_text(s: &str) -> String {
    let kept: String = s
        .chars()
        .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
        .flat_map(char::to_lowercase)
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{00A1}' | '\u{00BF}' | '\u{00AB}' | '\u{00BB}'
    )
}

/// Unit-cost edit distance (insert, delete, substitute).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Edit distance over reference length, on already-normalized symbols.
pub fn cer_chars<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(levenshtein(reference, hypothesis) as f64 / reference.len() as f64)
}

/// Character error rate after [`normalize_text`] on both sides.
pub fn cer(reference: &str, hypothesis: &str) -> Result<Score> {
    let r: Vec<char> = normalize_text(reference).chars().collect();
    let h: Vec<char> = normalize_text(hypothesis).chars().collect();
    Ok(Score {
        metric: MetricKind::Cer,
        value: cer_chars(&r, &h)?,
    })
}

//! Sentence segmentation.
//!
//! Boundaries are the danda (।), double danda (॥), '.', '!', '?', and the
//! newline. Terminal punctuation attaches to the preceding sentence; runs of
//! terminators ("...", "?!", "।।") stay within one sentence.

/// A sentence as a byte range into the segmented text. The range starts and
/// ends on non-whitespace characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{0964}' | '\u{0965}')
}

/// Split `text` into sentence spans. Spans are non-overlapping, in order,
/// and together cover every non-whitespace character exactly once.
pub fn segment_sentences(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0usize;
    let mut after_terminator = false;

    let close = |start: &mut Option<usize>, end: usize, spans: &mut Vec<Span>| {
        if let Some(s) = start.take() {
            spans.push(Span { start: s, end });
        }
    };

    for (i, c) in text.char_indices() {
        if c == '\n' {
            close(&mut start, end, &mut spans);
            after_terminator = false;
            continue;
        }
        if c.is_whitespace() {
            if after_terminator {
                close(&mut start, end, &mut spans);
                after_terminator = false;
            }
            continue;
        }
        if after_terminator && !is_terminator(c) {
            close(&mut start, end, &mut spans);
        }
        if start.is_none() {
            start = Some(i);
        }
        end = i + c.len_utf8();
        after_terminator = is_terminator(c);
    }
    close(&mut start, end, &mut spans);
    spans
}

/// Segment and return owned sentence strings.
pub fn segment_to_strings(text: &str) -> Vec<String> {
    segment_sentences(text)
        .iter()
        .map(|s| s.slice(text).to_string())
        .collect()
}

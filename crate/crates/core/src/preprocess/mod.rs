//! Sentence segmentation and word-unit construction.
//!
//! A sentence goes through a [`ParseProvider`] (a rule-based tagger or a
//! recorded fixture parse), is aligned back onto the sentence text, and is
//! then grouped into [`WordUnit`]s: noun chunks become single
//! [`UnitKind::NounPhrase`] units, verbs with `prt` particles become
//! [`UnitKind::PhrasalVerb`] units, and everything else stays a single word.

mod fixture;
mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use fixture::{FixtureParseEntry, FixtureParser};
pub(crate) use fixture::parse_fixture_entries as fixture_entries;
pub use rules::{rule_tokenize, RuleParser};

/// Coarse part-of-speech tag (Universal Dependencies subset).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Pos {
    Noun,
    Propn,
    Verb,
    Aux,
    Adp,
    Part,
    Adv,
    Adj,
    Det,
    Num,
    Punct,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 12] = [
        Pos::Noun,
        Pos::Propn,
        Pos::Verb,
        Pos::Aux,
        Pos::Adp,
        Pos::Part,
        Pos::Adv,
        Pos::Adj,
        Pos::Det,
        Pos::Num,
        Pos::Punct,
        Pos::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Propn => "PROPN",
            Pos::Verb => "VERB",
            Pos::Aux => "AUX",
            Pos::Adp => "ADP",
            Pos::Part => "PART",
            Pos::Adv => "ADV",
            Pos::Adj => "ADJ",
            Pos::Det => "DET",
            Pos::Num => "NUM",
            Pos::Punct => "PUNCT",
            Pos::Other => "OTHER",
        }
    }

    /// Lenient mapping from tag strings; unknown UD tags (CCONJ, PRON, ...)
    /// collapse to `Other`.
    pub fn from_tag(tag: &str) -> Pos {
        match tag.trim().to_ascii_uppercase().as_str() {
            "NOUN" => Pos::Noun,
            "PROPN" => Pos::Propn,
            "VERB" => Pos::Verb,
            "AUX" => Pos::Aux,
            "ADP" => Pos::Adp,
            "PART" => Pos::Part,
            "ADV" => Pos::Adv,
            "ADJ" => Pos::Adj,
            "DET" => Pos::Det,
            "NUM" => Pos::Num,
            "PUNCT" => Pos::Punct,
            _ => Pos::Other,
        }
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn)
    }
}

impl From<Pos> for String {
    fn from(p: Pos) -> String {
        p.as_str().to_string()
    }
}

impl From<String> for Pos {
    fn from(s: String) -> Pos {
        Pos::from_tag(&s)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub pos: Pos,
    pub dep: String,
    pub head_index: usize,
    /// Character (not byte) offsets into the sentence, half-open.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UnitKind {
    NounPhrase,
    PhrasalVerb,
    Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordUnit {
    pub text: String,
    pub kind: UnitKind,
    /// Half-open token range.
    pub token_span: (usize, usize),
    pub unit_pos: Pos,
}

impl WordUnit {
    fn from_span(tokens: &[Token], span: (usize, usize), kind: UnitKind) -> WordUnit {
        let text = tokens[span.0..span.1]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let head = span_head(tokens, span);
        WordUnit {
            text,
            kind,
            token_span: span,
            unit_pos: tokens[head].pos,
        }
    }

    pub fn len(&self) -> usize {
        self.token_span.1 - self.token_span.0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, token: usize) -> bool {
        (self.token_span.0..self.token_span.1).contains(&token)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSentence {
    pub text: String,
    pub tokens: Vec<Token>,
    pub units: Vec<WordUnit>,
    pub abstract_id: String,
    pub sentence_index: usize,
}

impl ProcessedSentence {
    pub fn unit_texts(&self) -> Vec<String> {
        self.units.iter().map(|u| u.text.clone()).collect()
    }

    pub fn token_texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    /// Whether any token of the unit carries a negation dependency.
    pub fn unit_is_negation(&self, unit: usize) -> bool {
        let (s, e) = self.units[unit].token_span;
        self.tokens[s..e].iter().any(|t| t.dep == "neg")
    }
}

/// A provider token before alignment onto the sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    pub text: String,
    pub pos: Pos,
    #[serde(default)]
    pub dep: String,
    pub head_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceParse {
    pub tokens: Vec<ParsedToken>,
    /// Half-open token ranges of noun chunks.
    #[serde(default)]
    pub noun_chunks: Vec<(usize, usize)>,
}

/// Tokenizer, tagger and dependency parser behind the preprocessing stage.
pub trait ParseProvider: Send + Sync {
    fn parse(&self, sentence: &str) -> Result<SentenceParse>;

    /// Providers that hold exclusive state return `false`; callers then
    /// serialize access.
    fn is_concurrent(&self) -> bool {
        true
    }
}

impl<P: ParseProvider + ?Sized> ParseProvider for &P {
    fn parse(&self, sentence: &str) -> Result<SentenceParse> {
        (**self).parse(sentence)
    }

    fn is_concurrent(&self) -> bool {
        (**self).is_concurrent()
    }
}

impl<P: ParseProvider + ?Sized> ParseProvider for Box<P> {
    fn parse(&self, sentence: &str) -> Result<SentenceParse> {
        (**self).parse(sentence)
    }

    fn is_concurrent(&self) -> bool {
        (**self).is_concurrent()
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Splits an abstract into sentences.
///
/// Base rule: a sentence ends after `.`, `!` or `?` (plus closing quotes or
/// brackets) when whitespace follows and the next word does not start with a
/// lower-case letter. Every `;` is an additional boundary and is dropped
/// from the output. Returned sentences are trimmed; empty pieces vanish.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut push = |s: &str| {
        let s = s.trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let (byte, c) = chars[i];
        if c == ';' {
            push(&text[start..byte]);
            start = byte + c.len_utf8();
            i += 1;
            continue;
        }
        if is_terminator(c) {
            let mut j = i + 1;
            while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = if k == chars.len() {
                true
            } else {
                k > j && !chars[k].1.is_lowercase()
            };
            if boundary {
                push(&text[start..end]);
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push(&text[start..]);
    out
}

fn byte_to_char_offsets(text: &str) -> Vec<usize> {
    // index by byte offset, value = char offset; one extra slot for text.len()
    let mut map = vec![0usize; text.len() + 1];
    let mut ci = 0;
    for (b, c) in text.char_indices() {
        for slot in &mut map[b..b + c.len_utf8()] {
            *slot = ci;
        }
        ci += 1;
    }
    map[text.len()] = ci;
    map
}

/// Places provider tokens onto the sentence. Tokens must appear in order and
/// cover every non-whitespace character.
fn align_tokens(sentence: &str, parse: &SentenceParse) -> Result<Vec<Token>> {
    let fail = |message: String| Error::Parse {
        sentence: sentence.to_string(),
        message,
    };
    let n = parse.tokens.len();
    let char_of = byte_to_char_offsets(sentence);
    let mut cursor = 0usize;
    let mut tokens = Vec::with_capacity(n);
    for (i, pt) in parse.tokens.iter().enumerate() {
        if pt.text.is_empty() || pt.text.chars().any(char::is_whitespace) {
            return Err(fail(format!("token {i} {:?} is empty or contains whitespace", pt.text)));
        }
        if pt.head_index >= n {
            return Err(fail(format!("token {i} has head {} outside 0..{n}", pt.head_index)));
        }
        let rest = &sentence[cursor..];
        let skipped = rest.len() - rest.trim_start().len();
        cursor += skipped;
        if !sentence[cursor..].starts_with(pt.text.as_str()) {
            return Err(fail(format!(
                "token {i} {:?} does not match the text at offset {}",
                pt.text, char_of[cursor]
            )));
        }
        let end = cursor + pt.text.len();
        tokens.push(Token {
            text: pt.text.clone(),
            pos: pt.pos,
            dep: pt.dep.clone(),
            head_index: pt.head_index,
            char_span: (char_of[cursor], char_of[end]),
        });
        cursor = end;
    }
    if !sentence[cursor..].trim().is_empty() {
        return Err(fail(format!(
            "tokens do not cover trailing text {:?}",
            sentence[cursor..].trim()
        )));
    }
    Ok(tokens)
}

/// Token of `span` whose syntactic head lies outside the span (or which is
/// its own head). The last such token wins when the parse is not a tree.
pub(crate) fn span_head(tokens: &[Token], span: (usize, usize)) -> usize {
    (span.0..span.1)
        .rev()
        .find(|&i| {
            let h = tokens[i].head_index;
            h == i || !(span.0..span.1).contains(&h)
        })
        .unwrap_or(span.1 - 1)
}

/// Groups of adjacent tokens that a letter-flanked hyphen joins, e.g.
/// `mother`,`-`,`in`,`-`,`law`. Returns half-open token ranges of length > 1.
fn hyphen_groups(sentence_chars: &[char], tokens: &[Token]) -> Vec<(usize, usize)> {
    let joined = |a: &Token, b: &Token| -> bool {
        if a.char_span.1 != b.char_span.0 {
            return false;
        }
        // boundary sits right before or right after a hyphen
        let at = a.char_span.1;
        let hyphen_before = at >= 1 && sentence_chars[at - 1] == '-';
        let hyphen_after = sentence_chars.get(at) == Some(&'-');
        let letter_flanked = |h: usize| {
            h >= 1
                && sentence_chars[h - 1].is_alphabetic()
                && sentence_chars.get(h + 1).is_some_and(|c| c.is_alphabetic())
        };
        (hyphen_before && letter_flanked(at - 1)) || (hyphen_after && letter_flanked(at))
    };
    let mut groups = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i;
        while j + 1 < tokens.len() && joined(&tokens[j], &tokens[j + 1]) {
            j += 1;
        }
        if j > i {
            groups.push((i, j + 1));
        }
        i = j + 1;
    }
    groups
}

/// Merges token groups into single tokens, remapping heads. Returns the new
/// tokens and the old→new index map.
fn retokenize(tokens: &[Token], groups: &[(usize, usize)]) -> (Vec<Token>, Vec<usize>) {
    let mut new_index = vec![0usize; tokens.len()];
    let mut spans = Vec::new();
    let mut g = groups.iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        let span = match g.peek() {
            Some(&&(s, e)) if s == i => {
                g.next();
                (s, e)
            }
            _ => (i, i + 1),
        };
        for slot in &mut new_index[span.0..span.1] {
            *slot = spans.len();
        }
        spans.push(span);
        i = span.1;
    }
    let merged = spans
        .iter()
        .map(|&(s, e)| {
            let root = span_head(tokens, (s, e));
            let text: String = tokens[s..e].iter().map(|t| t.text.as_str()).collect();
            Token {
                text,
                pos: tokens[root].pos,
                dep: tokens[root].dep.clone(),
                head_index: new_index[tokens[root].head_index],
                char_span: (tokens[s].char_span.0, tokens[e - 1].char_span.1),
            }
        })
        .collect();
    (merged, new_index)
}

/// Parses and aligns a sentence, then re-joins any words the provider split
/// at a hyphen between two letters. Noun chunks are remapped accordingly.
fn parse_and_align(sentence: &str, provider: &dyn ParseProvider) -> Result<(Vec<Token>, Vec<(usize, usize)>)> {
    if sentence.trim().is_empty() {
        return Err(Error::EmptySentence);
    }
    let parse = provider.parse(sentence)?;
    let tokens = align_tokens(sentence, &parse)?;
    let n = tokens.len();
    for &(s, e) in &parse.noun_chunks {
        if s >= e || e > n {
            return Err(Error::Parse {
                sentence: sentence.to_string(),
                message: format!("noun chunk [{s}, {e}) is empty or outside 0..{n}"),
            });
        }
    }
    let chars: Vec<char> = sentence.chars().collect();
    let groups = hyphen_groups(&chars, &tokens);
    if groups.is_empty() {
        return Ok((tokens, parse.noun_chunks));
    }
    let (merged, map) = retokenize(&tokens, &groups);
    let chunks = parse
        .noun_chunks
        .iter()
        .map(|&(s, e)| (map[s], map[e - 1] + 1))
        .collect();
    Ok((merged, chunks))
}

/// Tokenizes a sentence through `provider`. Token spans tile the sentence's
/// non-whitespace text and a hyphen between two letters never separates
/// tokens (`H-theorem`, `mother-in-law`).
pub fn tokenize(sentence: &str, provider: &dyn ParseProvider) -> Result<Vec<Token>> {
    parse_and_align(sentence, provider).map(|(tokens, _)| tokens)
}

/// One [`UnitKind::NounPhrase`] unit per chunk, sorted by start.
pub fn merge_noun_phrases(tokens: &[Token], chunk_spans: &[(usize, usize)]) -> Result<Vec<WordUnit>> {
    let mut spans = chunk_spans.to_vec();
    spans.sort_unstable();
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::OverlappingSpans {
                first: w[0],
                second: w[1],
            });
        }
    }
    for &(s, e) in &spans {
        if s >= e || e > tokens.len() {
            return Err(Error::Shape(format!(
                "noun chunk [{s}, {e}) outside 0..{}",
                tokens.len()
            )));
        }
    }
    Ok(spans
        .into_iter()
        .map(|span| WordUnit::from_span(tokens, span, UnitKind::NounPhrase))
        .collect())
}

/// One [`UnitKind::PhrasalVerb`] unit per verb that has `prt` particles.
///
/// The unit covers the verb and all of its particles; it is only formed
/// when those tokens are contiguous (`turn the valve off` keeps `turn` a
/// single word since the noun phrase sits inside the span).
pub fn merge_phrasal_verbs(tokens: &[Token]) -> Vec<WordUnit> {
    let mut units = Vec::new();
    for (v, verb) in tokens.iter().enumerate() {
        if verb.pos != Pos::Verb {
            continue;
        }
        let particles: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|&(i, t)| i != v && t.dep == "prt" && t.head_index == v)
            .map(|(i, _)| i)
            .collect();
        if particles.is_empty() {
            continue;
        }
        let start = particles.iter().copied().chain([v]).min().unwrap();
        let end = particles.iter().copied().chain([v]).max().unwrap() + 1;
        if end - start != particles.len() + 1 {
            continue;
        }
        units.push(WordUnit::from_span(tokens, (start, end), UnitKind::PhrasalVerb));
    }
    units
}

/// Extends verb units with an immediately preceding infinitival `to`
/// (`to receive`), unless the parser already attached it as a particle.
fn merge_infinitival_markers(tokens: &[Token], verb_units: Vec<WordUnit>) -> Vec<WordUnit> {
    let is_marker = |i: usize| {
        let t = &tokens[i];
        t.pos == Pos::Part && t.dep != "prt" && t.dep != "neg" && t.text.eq_ignore_ascii_case("to")
    };
    let mut units = verb_units;
    for (i, _) in tokens.iter().enumerate() {
        if !is_marker(i) || i + 1 >= tokens.len() {
            continue;
        }
        if let Some(u) = units.iter_mut().find(|u| u.token_span.0 == i + 1) {
            let kind = u.kind;
            *u = WordUnit::from_span(tokens, (i, u.token_span.1), kind);
        } else if tokens[i + 1].pos == Pos::Verb {
            units.push(WordUnit::from_span(tokens, (i, i + 2), UnitKind::Word));
        }
    }
    units
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Builds the word units of one sentence.
///
/// Units are noun phrases, phrasal verbs (including `to` + verb) and
/// single-token words for everything else, sorted by position. A verb unit
/// that overlaps a noun chunk is dropped in favour of the chunk.
pub fn preprocess_sentence(
    sentence: &str,
    provider: &dyn ParseProvider,
    abstract_id: &str,
    index: usize,
) -> Result<ProcessedSentence> {
    let (tokens, chunks) = parse_and_align(sentence, provider)?;
    let mut units = merge_noun_phrases(&tokens, &chunks)?;
    let verbs = merge_infinitival_markers(&tokens, merge_phrasal_verbs(&tokens));
    for v in verbs {
        if !units.iter().any(|u| overlaps(u.token_span, v.token_span)) {
            units.push(v);
        }
    }
    let mut covered = vec![false; tokens.len()];
    for u in &units {
        for c in &mut covered[u.token_span.0..u.token_span.1] {
            *c = true;
        }
    }
    for (i, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
        units.push(WordUnit::from_span(&tokens, (i, i + 1), UnitKind::Word));
    }
    units.sort_by_key(|u| u.token_span.0);
    Ok(ProcessedSentence {
        text: sentence.trim().to_string(),
        tokens,
        units,
        abstract_id: abstract_id.to_string(),
        sentence_index: index,
    })
}

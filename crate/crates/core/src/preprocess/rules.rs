//! Lexicon and suffix driven tagger with a shallow dependency heuristic.
//!
//! It exists so the pipeline runs on raw text without an external NLP
//! toolkit. Quality is far below a statistical parser; it recognises the
//! constructions the extractor cares about (noun chunks, verb + particle,
//! negation, infinitival `to`) in patent-style prose.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{ParseProvider, ParsedToken, Pos, SentenceParse};
use crate::Result;

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "said", "its", "their",
    "his", "her", "our", "your", "my", "another", "both", "all", "any", "some", "no", "such",
    "either", "neither", "several", "various",
];

const ADPOSITIONS: &[&str] = &[
    "in", "on", "at", "of", "with", "by", "from", "into", "onto", "through", "between", "inside",
    "within", "over", "under", "via", "for", "about", "across", "along", "around", "against",
    "after", "before", "behind", "below", "above", "beneath", "beside", "near", "toward",
    "towards", "upon", "without", "throughout", "outside", "among", "during", "per", "than",
    "like", "beyond", "off", "up", "down", "out",
];

const PARTICLES: &[&str] = &[
    "up", "down", "out", "off", "in", "on", "to", "through", "with", "between", "into", "onto",
    "over", "away", "back", "from", "by", "across", "along", "around", "inside", "within", "at",
    "under", "outside", "upon", "via",
];

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "having", "do",
    "does", "did", "can", "could", "may", "might", "must", "shall", "should", "will", "would",
    "ca", "wo",
];

const MODALS: &[&str] = &[
    "can", "could", "may", "might", "must", "shall", "should", "will", "would", "do", "does",
    "did", "ca", "wo",
];

const NEGATIONS: &[&str] = &["not", "n't", "never"];

const OTHER_WORDS: &[&str] = &[
    "and", "or", "but", "nor", "wherein", "whereby", "whereas", "which", "who", "whom", "whose",
    "where", "when", "while", "if", "because", "so", "it", "they", "them", "he", "she", "we",
    "you", "i", "itself", "themselves", "thereof", "therein", "whereof", "what", "whether",
    "although", "though", "unless", "until", "once", "since",
];

const ADVERBS: &[&str] = &[
    "also", "then", "further", "furthermore", "thereby", "there", "here", "still", "very", "well",
    "together", "again", "already", "even", "thus", "hence", "however", "moreover", "too",
    "often", "always", "sometimes", "almost", "mainly", "respectively", "separately", "only",
    "just", "so",
];

// -ly words that are nouns or verbs rather than adverbs
const LY_EXCEPTIONS: &[&str] = &[
    "assembly", "supply", "family", "anomaly", "butterfly", "fly", "ply", "reply", "apply",
    "rely", "comply", "multiply", "jelly", "belly", "holly", "monopoly", "poly", "ally", "rally",
    "italy", "subassembly", "resupply",
];

const ADJECTIVES: &[&str] = &[
    "cute", "good", "bad", "high", "low", "large", "small", "hot", "cold", "warm", "new", "old",
    "same", "different", "first", "second", "third", "fourth", "other", "main", "inner", "outer",
    "upper", "lower", "front", "rear", "left", "right", "top", "bottom", "long", "short", "wide",
    "narrow", "thin", "thick", "heavy", "light", "fast", "slow", "open", "closed", "full", "empty",
    "dry", "wet", "common", "automatic", "electric", "magnetic", "continuous", "single", "double",
    "multiple", "able", "capable", "adjacent", "opposite", "respective", "certain", "whole",
    "further", "final", "initial", "predetermined", "such", "simple", "compact", "stable",
    "flexible", "rigid", "hollow", "solid", "liquid", "gaseous", "axial", "radial", "annular",
];

const NUMBER_WORDS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "hundred", "thousand", "million",
];

const ADJ_SUFFIXES: &[&str] = &[
    "al", "ic", "ive", "ous", "able", "ible", "less", "ful", "ary", "ical", "ar",
];

const VERB_LEMMAS: &[&str] = &[
    "comprise", "include", "contain", "connect", "provide", "install", "apply", "adopt",
    "convert", "disclose", "send", "receive", "relate", "position", "engage", "mount", "attach",
    "couple", "dispose", "arrange", "configure", "locate", "fix", "drive", "rotate", "move",
    "hold", "support", "control", "measure", "generate", "transmit", "pass", "heat", "cool",
    "seal", "lift", "pull", "push", "accelerate", "add", "assemble", "block", "compute",
    "manufacture", "select", "prevent", "reach", "follow", "increase", "decrease", "reduce",
    "cast", "form", "define", "extend", "surround", "enclose", "detect", "sense", "regulate",
    "adjust", "supply", "discharge", "absorb", "store", "distribute", "deliver", "allow",
    "enable", "cause", "produce", "use", "levitate", "insert", "cover", "protect", "separate",
    "link", "join", "fasten", "secure", "close", "switch", "operate", "act", "guide", "press",
    "slide", "lock", "release", "retain", "carry", "transfer", "convey", "feed", "pump",
    "compress", "expand", "inject", "ignite", "burn", "exhaust", "emit", "illuminate",
    "evaporate", "condense", "freeze", "melt", "mix", "fill", "drain", "cut", "bend", "weld",
    "mold", "shape", "make", "build", "design", "set", "turn", "bring", "keep", "put", "take",
    "give", "get", "come", "go", "run", "see", "show", "determine", "obtain", "process",
    "perform", "execute", "consist", "comprise", "improve", "ensure", "achieve", "realize",
    "facilitate", "drive", "limit", "direct", "return", "enter", "leave", "exit", "flow",
    "communicate", "arrange", "dispose", "sandwich", "abut", "contact", "fit", "penetrate",
    "light", "rest", "span", "bear", "overlap", "face", "align", "equip", "wrap", "clamp",
    "blow", "remove", "trap", "dry", "clean", "filter", "spray", "hang", "wind", "grip",
];

const IRREGULAR: &[(&str, &str)] = &[
    ("sent", "send"),
    ("held", "hold"),
    ("made", "make"),
    ("built", "build"),
    ("kept", "keep"),
    ("brought", "bring"),
    ("took", "take"),
    ("taken", "take"),
    ("gave", "give"),
    ("given", "give"),
    ("got", "get"),
    ("gotten", "get"),
    ("came", "come"),
    ("went", "go"),
    ("gone", "go"),
    ("ran", "run"),
    ("shown", "show"),
    ("fed", "feed"),
    ("bent", "bend"),
    ("borne", "bear"),
    ("lit", "light"),
    ("led", "lead"),
    ("left", "leave"),
    ("saw", "see"),
    ("seen", "see"),
];

struct Lexicon {
    verbs: HashMap<&'static str, ()>,
    irregular: HashMap<&'static str, &'static str>,
}

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| Lexicon {
        verbs: VERB_LEMMAS.iter().map(|&v| (v, ())).collect(),
        irregular: IRREGULAR.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VerbForm {
    Base,
    ThirdPerson,
    Past,
    Gerund,
}

/// Candidate lemmas of an inflected form, most specific first.
fn lemma_candidates(word: &str) -> Vec<(String, VerbForm)> {
    let mut out = vec![(word.to_string(), VerbForm::Base)];
    let strip = |suffix: &str| word.strip_suffix(suffix).filter(|s| s.len() >= 2);
    if let Some(stem) = strip("ies") {
        out.push((format!("{stem}y"), VerbForm::ThirdPerson));
    }
    if let Some(stem) = strip("es") {
        out.push((stem.to_string(), VerbForm::ThirdPerson));
    }
    if let Some(stem) = strip("s") {
        if !stem.ends_with('s') {
            out.push((stem.to_string(), VerbForm::ThirdPerson));
        }
    }
    if let Some(stem) = strip("ied") {
        out.push((format!("{stem}y"), VerbForm::Past));
    }
    for (suffix, form) in [("ed", VerbForm::Past), ("ing", VerbForm::Gerund)] {
        if let Some(stem) = strip(suffix) {
            out.push((stem.to_string(), form));
            out.push((format!("{stem}e"), form));
            let b = stem.as_bytes();
            if b.len() >= 3 && b[b.len() - 1] == b[b.len() - 2] {
                out.push((stem[..stem.len() - 1].to_string(), form));
            }
        }
    }
    if let Some(stem) = strip("d") {
        if stem.ends_with('e') {
            out.push((stem.to_string(), VerbForm::Past));
        }
    }
    out
}

fn known_verb(word: &str) -> Option<VerbForm> {
    let lex = lexicon();
    if lex.irregular.contains_key(word) {
        return Some(VerbForm::Past);
    }
    lemma_candidates(word)
        .into_iter()
        .find(|(lemma, _)| lex.verbs.contains_key(lemma.as_str()))
        .map(|(_, form)| form)
}

fn is_punct(text: &str) -> bool {
    !text.chars().any(char::is_alphanumeric)
}

fn is_number(lower: &str) -> bool {
    let digits = lower.chars().filter(|c| c.is_ascii_digit()).count();
    (digits > 0 && lower.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',')))
        || NUMBER_WORDS.contains(&lower)
}

fn is_adverb(lower: &str) -> bool {
    ADVERBS.contains(&lower)
        || (lower.len() > 4 && lower.ends_with("ly") && !LY_EXCEPTIONS.contains(&lower))
}

fn has_adj_suffix(lower: &str) -> bool {
    lower.len() > 4 && ADJ_SUFFIXES.iter().any(|s| lower.ends_with(s))
}

fn is_infix_hyphen(chars: &[char], i: usize) -> bool {
    i > 0 && i + 1 < chars.len() && chars[i - 1].is_alphabetic() && chars[i + 1].is_alphabetic()
}

/// Splits a sentence into byte spans.
///
/// Words are whitespace-separated chunks; leading and trailing punctuation
/// is peeled off one character at a time, `n't` and `'s` clitics are split,
/// and internal punctuation splits the word except `.`/`'` and hyphens that
/// sit between two letters.
pub fn rule_tokenize(sentence: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut offset = 0;
    for word in sentence.split_whitespace() {
        let start = offset + sentence[offset..].find(word).expect("word comes from sentence");
        offset = start + word.len();
        tokenize_word(sentence, start, start + word.len(), &mut spans);
    }
    spans
}

fn tokenize_word(sentence: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let word = &sentence[start..end];
    let chars: Vec<(usize, char)> = word.char_indices().collect();

    let mut lo = 0;
    let mut prefix = Vec::new();
    while lo < chars.len() && !chars[lo].1.is_alphanumeric() {
        let b = chars[lo].0;
        prefix.push((start + b, start + b + chars[lo].1.len_utf8()));
        lo += 1;
    }
    let mut hi = chars.len();
    let mut suffix = Vec::new();
    while hi > lo && !chars[hi - 1].1.is_alphanumeric() {
        let b = chars[hi - 1].0;
        suffix.push((start + b, start + b + chars[hi - 1].1.len_utf8()));
        hi -= 1;
    }
    out.extend(prefix);
    if lo < hi {
        let core_start = start + chars[lo].0;
        let core_end = start + chars[hi - 1].0 + chars[hi - 1].1.len_utf8();
        let core = &sentence[core_start..core_end];
        let lower = core.to_lowercase();
        let clitic = ["n't", "'s", "\u{2019}s"]
            .iter()
            .find(|c| lower.ends_with(*c) && lower.len() > c.len())
            .map(|c| c.len());
        let (body_end, clitic_span) = match clitic {
            Some(len) => (core_end - len, Some((core_end - len, core_end))),
            None => (core_end, None),
        };
        split_infixes(sentence, core_start, body_end, out);
        out.extend(clitic_span);
    }
    out.extend(suffix.into_iter().rev());
}

fn split_infixes(sentence: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let body = &sentence[start..end];
    let indexed: Vec<(usize, char)> = body.char_indices().collect();
    let chars: Vec<char> = indexed.iter().map(|&(_, c)| c).collect();
    let mut piece_start = 0usize;
    for (i, &(b, c)) in indexed.iter().enumerate() {
        let separator = !c.is_alphanumeric()
            && c != '.'
            && c != '\''
            && !(c == '-' && is_infix_hyphen(&chars, i));
        if separator {
            if b > piece_start {
                out.push((start + piece_start, start + b));
            }
            out.push((start + b, start + b + c.len_utf8()));
            piece_start = b + c.len_utf8();
        }
    }
    if piece_start < body.len() {
        out.push((start + piece_start, end));
    }
}

/// Rule-based [`ParseProvider`]. Deterministic and thread-safe.
#[derive(Debug, Clone, Default)]
pub struct RuleParser;

impl RuleParser {
    pub fn new() -> Self {
        RuleParser
    }

    fn lexical_tag(&self, text: &str, idx: usize) -> Pos {
        let lower = text.to_lowercase();
        let l = lower.as_str();
        if is_punct(text) {
            Pos::Punct
        } else if is_number(l) {
            Pos::Num
        } else if NEGATIONS.contains(&l) {
            Pos::Part
        } else if l == "to" {
            Pos::Adp
        } else if DETERMINERS.contains(&l) {
            Pos::Det
        } else if AUXILIARIES.contains(&l) {
            Pos::Aux
        } else if ADPOSITIONS.contains(&l) {
            Pos::Adp
        } else if OTHER_WORDS.contains(&l) {
            Pos::Other
        } else if is_adverb(l) {
            Pos::Adv
        } else if ADJECTIVES.contains(&l) {
            Pos::Adj
        } else if known_verb(l).is_some() {
            Pos::Verb
        } else if idx > 0 && text.chars().next().is_some_and(char::is_uppercase) {
            Pos::Propn
        } else if text.len() > 1 && text.chars().all(|c| c.is_uppercase() || c.is_ascii_digit()) {
            Pos::Propn
        } else {
            Pos::Noun
        }
    }

    fn tag(&self, texts: &[&str]) -> Vec<Pos> {
        let mut tags: Vec<Pos> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| self.lexical_tag(t, i))
            .collect();
        let lower: Vec<String> = texts.iter().map(|t| t.to_lowercase()).collect();
        let n = texts.len();

        // contextual repairs, left to right
        for i in 0..n {
            let prev = if i > 0 { Some(tags[i - 1]) } else { None };
            let next = tags.get(i + 1).copied();
            let l = lower[i].as_str();
            match tags[i] {
                Pos::Verb => {
                    let form = known_verb(l).unwrap_or(VerbForm::Base);
                    let after_modifier = matches!(prev, Some(Pos::Det | Pos::Adj | Pos::Num));
                    let before_nominal = matches!(next, Some(Pos::Noun | Pos::Propn | Pos::Adj));
                    let demote = match form {
                        // "a control system", "the supply"
                        VerbForm::Base => {
                            let licensed = i > 0
                                && (MODALS.contains(&lower[i - 1].as_str())
                                    || lower[i - 1] == "to"
                                    || tags[i - 1] == Pos::Part
                                    || (tags[i - 1] == Pos::Noun && lower[i - 1].ends_with('s')));
                            !licensed
                        }
                        VerbForm::ThirdPerson => after_modifier || prev == Some(Pos::Adp),
                        VerbForm::Past | VerbForm::Gerund => after_modifier && before_nominal,
                    };
                    if demote {
                        tags[i] = if matches!(form, VerbForm::Past | VerbForm::Gerund) {
                            Pos::Adj
                        } else {
                            Pos::Noun
                        };
                    }
                }
                Pos::Noun => {
                    let unknown_participle = l.len() > 4 && (l.ends_with("ed") || l.ends_with("ing"));
                    let after_modifier = matches!(prev, Some(Pos::Det | Pos::Adj | Pos::Num | Pos::Adp));
                    if unknown_participle && !after_modifier {
                        tags[i] = Pos::Verb;
                    } else if unknown_participle
                        && matches!(next, Some(Pos::Noun | Pos::Propn | Pos::Adj))
                    {
                        tags[i] = Pos::Adj;
                    } else if (has_adj_suffix(l) || texts[i].contains('-'))
                        && matches!(next, Some(Pos::Noun | Pos::Propn))
                        && !matches!(prev, Some(Pos::Noun | Pos::Propn))
                    {
                        tags[i] = Pos::Adj;
                    }
                }
                _ => {}
            }
        }

        // infinitival "to" before a verb
        for i in 0..n {
            if lower[i] == "to" && i + 1 < n {
                let next = lower[i + 1].as_str();
                if known_verb(next) == Some(VerbForm::Base) {
                    tags[i] = Pos::Part;
                    tags[i + 1] = Pos::Verb;
                }
            }
        }
        tags
    }

    fn noun_chunks(tags: &[Pos]) -> Vec<(usize, usize)> {
        let mut chunks = Vec::new();
        let mut i = 0;
        while i < tags.len() {
            let start = i;
            let mut j = i;
            if tags[j] == Pos::Det {
                j += 1;
            }
            let mut last_nominal = None;
            while j < tags.len() && matches!(tags[j], Pos::Adj | Pos::Noun | Pos::Propn | Pos::Num) {
                if tags[j].is_nominal() {
                    last_nominal = Some(j);
                }
                j += 1;
            }
            match last_nominal {
                Some(last) => {
                    chunks.push((start, last + 1));
                    i = last + 1;
                }
                None => i = start + 1,
            }
        }
        chunks
    }

    fn dependencies(lower: &[String], tags: &[Pos], chunks: &[(usize, usize)]) -> Vec<(String, usize)> {
        let n = tags.len();
        let root = tags
            .iter()
            .position(|&t| t == Pos::Verb)
            .or_else(|| tags.iter().position(|&t| t == Pos::Aux))
            .unwrap_or(0);
        let mut deps: Vec<(String, usize)> = vec![("dep".to_string(), root); n];
        deps[root] = ("ROOT".to_string(), root);

        let prev_verb = |i: usize| (0..i).rev().find(|&k| tags[k] == Pos::Verb);
        let next_verb = |i: usize| (i + 1..n).find(|&k| matches!(tags[k], Pos::Verb | Pos::Aux));

        for i in 0..n {
            if i == root {
                continue;
            }
            let l = lower[i].as_str();
            deps[i] = match tags[i] {
                Pos::Verb => ("conj".into(), root),
                Pos::Aux => ("aux".into(), next_verb(i).filter(|&v| tags[v] == Pos::Verb).unwrap_or(root)),
                Pos::Part if NEGATIONS.contains(&l) => (
                    "neg".into(),
                    next_verb(i).or_else(|| prev_verb(i)).unwrap_or(root),
                ),
                Pos::Part => ("aux".into(), if i + 1 < n { i + 1 } else { root }),
                Pos::Adp => {
                    if i > 0 && tags[i - 1] == Pos::Verb && PARTICLES.contains(&l) {
                        ("prt".into(), i - 1)
                    } else {
                        ("prep".into(), prev_verb(i).unwrap_or(root))
                    }
                }
                Pos::Punct => ("punct".into(), root),
                Pos::Adv => ("advmod".into(), next_verb(i).or_else(|| prev_verb(i)).unwrap_or(root)),
                _ => ("dep".into(), root),
            };
        }

        for &(s, e) in chunks {
            let head = e - 1;
            for (k, dep) in deps.iter_mut().enumerate().take(head).skip(s) {
                let label = match tags[k] {
                    Pos::Det => "det",
                    Pos::Adj => "amod",
                    Pos::Num => "nummod",
                    _ => "compound",
                };
                *dep = (label.to_string(), head);
            }
            if head == root {
                continue;
            }
            let governor = if s > 0 && tags[s - 1] == Pos::Adp {
                ("pobj", s - 1)
            } else if head < root {
                ("nsubj", root)
            } else {
                ("dobj", prev_verb(s).unwrap_or(root))
            };
            deps[head] = (governor.0.to_string(), governor.1);
        }
        deps
    }
}

impl ParseProvider for RuleParser {
    fn parse(&self, sentence: &str) -> Result<SentenceParse> {
        let spans = rule_tokenize(sentence);
        let texts: Vec<&str> = spans.iter().map(|&(s, e)| &sentence[s..e]).collect();
        let lower: Vec<String> = texts.iter().map(|t| t.to_lowercase()).collect();
        let tags = self.tag(&texts);
        let chunks = Self::noun_chunks(&tags);
        let deps = Self::dependencies(&lower, &tags, &chunks);
        let tokens = texts
            .iter()
            .zip(tags.iter())
            .zip(deps)
            .map(|((text, &pos), (dep, head_index))| ParsedToken {
                text: text.to_string(),
                pos,
                dep,
                head_index,
            })
            .collect();
        Ok(SentenceParse {
            tokens,
            noun_chunks: chunks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{preprocess_sentence, UnitKind};
    use super::*;

    fn token_texts(s: &str) -> Vec<&str> {
        rule_tokenize(s).into_iter().map(|(a, b)| &s[a..b]).collect()
    }

    #[test]
    fn hyphen_rule_cases() {
        // frozen from running the infix rule over the hyphen fixture list
        let cases: &[(&str, &[&str])] = &[
            ("H-theorem", &["H-theorem"]),
            ("mother-in-law", &["mother-in-law"]),
            ("pages 3-5", &["pages", "3", "-", "5"]),
            ("x-3", &["x", "-", "3"]),
            ("3-way", &["3", "-", "way"]),
            ("pre- and post-processing", &["pre", "-", "and", "post-processing"]),
            ("-based", &["-", "based"]),
            ("millisecond-level", &["millisecond-level"]),
            ("380 V/50 HZ", &["380", "V", "/", "50", "HZ"]),
            ("engine,turbomachinery", &["engine", ",", "turbomachinery"]),
        ];
        for (input, expected) in cases {
            assert_eq!(&token_texts(input), expected, "input {input:?}");
        }
    }

    #[test]
    fn punctuation_and_clitics() {
        assert_eq!(
            token_texts("The temperature doesn't rise (slowly)."),
            vec!["The", "temperature", "does", "n't", "rise", "(", "slowly", ")", "."]
        );
        assert_eq!(token_texts("a 2.5 mm gap, e.g. here"), vec!["a", "2.5", "mm", "gap", ",", "e.g", ".", "here"]);
    }

    fn units(s: &str) -> Vec<(String, UnitKind)> {
        let ps = preprocess_sentence(s, &RuleParser, "t", 0).unwrap();
        ps.units.into_iter().map(|u| (u.text, u.kind)).collect()
    }

    fn np(s: &str) -> (String, UnitKind) {
        (s.to_string(), UnitKind::NounPhrase)
    }

    fn word(s: &str) -> (String, UnitKind) {
        (s.to_string(), UnitKind::Word)
    }

    fn pv(s: &str) -> (String, UnitKind) {
        (s.to_string(), UnitKind::PhrasalVerb)
    }

    #[test]
    fn simple_transitive() {
        assert_eq!(
            units("The sensor sends a signal."),
            vec![np("The sensor"), word("sends"), np("a signal"), word(".")]
        );
    }

    #[test]
    fn participle_then_main_verb() {
        assert_eq!(
            units("the magnetic force provided levitates the shaft"),
            vec![np("the magnetic force"), word("provided"), word("levitates"), np("the shaft")]
        );
    }

    #[test]
    fn infinitive_relation() {
        assert_eq!(
            units("a bearingless hub assembly comprises a rim to receive a tube magnet"),
            vec![
                np("a bearingless hub assembly"),
                word("comprises"),
                np("a rim"),
                word("to receive"),
                np("a tube magnet")
            ]
        );
    }

    #[test]
    fn connected_to_is_a_phrasal_verb() {
        let got = units("the flow sensor is electrically connected to the input end");
        assert_eq!(
            got,
            vec![
                np("the flow sensor"),
                word("is"),
                word("electrically"),
                pv("connected to"),
                np("the input end")
            ]
        );
        let ps = preprocess_sentence("the flow sensor is electrically connected to the input end", &RuleParser, "t", 0).unwrap();
        assert_eq!(ps.units[2].unit_pos, Pos::Adv);
        assert_eq!(ps.units[1].unit_pos, Pos::Aux);
    }

    #[test]
    fn negation_is_tagged() {
        let ps = preprocess_sentence("The temperature doesn't rise", &RuleParser, "t", 0).unwrap();
        let neg = ps.tokens.iter().find(|t| t.text == "n't").unwrap();
        assert_eq!(neg.dep, "neg");
        assert_eq!(neg.pos, Pos::Part);
    }

    #[test]
    fn control_as_noun_modifier() {
        assert_eq!(
            units("The control system comprises an electric valve"),
            vec![np("The control system"), word("comprises"), np("an electric valve")]
        );
    }
}

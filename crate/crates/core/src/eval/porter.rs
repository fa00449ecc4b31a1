//! The original Porter (1980) suffix-stripping stemmer.
//!
//! Operates on ASCII lowercase input; other bytes are treated as consonants
//! and left in place. Words of one or two letters go through the same steps
//! as longer words.

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences in `w`, the `m` in `[C](VC)^m[V]`.
fn measure(w: &[u8]) -> usize {
    let n = w.len();
    let mut i = 0;
    while i < n && is_consonant(w, i) {
        i += 1;
    }
    let mut m = 0;
    loop {
        while i < n && !is_consonant(w, i) {
            i += 1;
        }
        if i >= n {
            return m;
        }
        while i < n && is_consonant(w, i) {
            i += 1;
        }
        m += 1;
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// Consonant-vowel-consonant ending where the last consonant is not w, x, y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn stem_of<'a>(w: &'a [u8], suffix: &str) -> Option<&'a [u8]> {
    w.strip_suffix(suffix.as_bytes())
}

/// Applies the first rule whose suffix matches, if its stem measure exceeds
/// `min_m`. Returns whether a suffix matched at all.
fn replace_first(w: &mut Vec<u8>, rules: &[(&str, &str)], min_m: usize) -> bool {
    for (suffix, repl) in rules {
        if let Some(stem) = stem_of(w, suffix) {
            if measure(stem) > min_m {
                let keep = stem.len();
                w.truncate(keep);
                w.extend_from_slice(repl.as_bytes());
            }
            return true;
        }
    }
    false
}

fn step1a(w: &mut Vec<u8>) {
    if w.ends_with(b"sses") || w.ends_with(b"ies") {
        w.truncate(w.len() - 2);
    } else if w.ends_with(b"ss") {
    } else if w.ends_with(b"s") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if let Some(stem) = stem_of(w, "eed") {
        if measure(stem) > 0 {
            w.pop();
        }
        return;
    }
    let cut = ["ed", "ing"].iter().find_map(|s| {
        stem_of(w, s)
            .filter(|stem| has_vowel(stem))
            .map(|stem| stem.len())
    });
    let Some(cut) = cut else {
        return;
    };
    w.truncate(cut);
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    let n = w.len();
    if n > 0 && w[n - 1] == b'y' && has_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

const STEP2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
];

const STEP3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize",
];

fn step4(w: &mut Vec<u8>) {
    for suffix in STEP4 {
        if let Some(stem) = stem_of(w, suffix) {
            let ok =
                measure(stem) > 1 && (*suffix != "ion" || matches!(stem.last(), Some(b's' | b't')));
            if ok {
                let keep = stem.len();
                w.truncate(keep);
            }
            return;
        }
    }
}

fn step5(w: &mut Vec<u8>) {
    if let Some(stem) = stem_of(w, "e") {
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
    if measure(w) > 1 && ends_double_consonant(w) && w.ends_with(b"l") {
        w.pop();
    }
}

/// Stems one lowercase word.
pub fn porter_stem(word: &str) -> String {
    if word.is_empty() {
        return String::new();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    replace_first(&mut w, STEP2, 0);
    replace_first(&mut w, STEP3, 0);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w).expect("stemming only removes or appends ASCII")
}

/// True when both labels share a stem after case folding.
pub fn inexact_match(query: &str, target: &str) -> bool {
    porter_stem(&query.to_ascii_lowercase()) == porter_stem(&target.to_ascii_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_examples() {
        for (w, m) in [
            ("tr", 0),
            ("ee", 0),
            ("tree", 0),
            ("y", 0),
            ("by", 0),
            ("trouble", 1),
            ("oats", 1),
            ("trees", 1),
            ("ivy", 1),
            ("troubles", 2),
            ("private", 2),
            ("oaten", 2),
            ("orrery", 2),
        ] {
            assert_eq!(measure(w.as_bytes()), m, "{w}");
        }
    }

    #[test]
    fn look_family_shares_stem() {
        for w in ["look", "looks", "looking", "looked"] {
            assert_eq!(porter_stem(w), "look");
        }
        assert_eq!(porter_stem("caresses"), "caress");
        assert_eq!(porter_stem("the"), "the");
        assert_eq!(porter_stem(""), "");
    }

    #[test]
    fn inexact_examples() {
        assert!(inexact_match("surprise", "surprised"));
        assert!(inexact_match("Surprising", "surprise"));
        assert!(!inexact_match("look", "book"));
        assert!(inexact_match("word", "word"));
    }
}

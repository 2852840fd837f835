//! Tokenizers for sentence BLEU.
//!
//! `13a` follows the mteval-v13a rules:
//!
//! 1. drop `<skipped>`, join hyphenated line breaks, turn newlines into spaces;
//! 2. unescape `&quot;`, `&amp;`, `&lt;`, `&gt;`;
//! 3. surround every ASCII symbol in `{|}~ [\]^_` `` ` `` `!"#$%&` `()*+` `:;<=>?@` `/` with spaces;
//! 4. split `.` and `,` from a preceding non-digit, and from a following non-digit;
//! 5. split `-` from a preceding digit;
//! 6. collapse whitespace.
//!
//! Periods and commas between digits (`1,000.5`) therefore stay attached.
//! The `char` tokenizer treats every non-whitespace character as a token and is
//! the fallback for scripts without word separators.

use std::sync::LazyLock;

use regex::Regex;

static RULES: LazyLock<[(Regex, &'static str); 4]> = LazyLock::new(|| {
    [
        (Regex::new(r"([\{-\~\[-\` -\&\(-\+\:-\@/])").unwrap(), " ${1} "),
        (Regex::new(r"([^0-9])([\.,])").unwrap(), "${1} ${2} "),
        (Regex::new(r"([\.,])([^0-9])").unwrap(), " ${1} ${2}"),
        (Regex::new(r"([0-9])(-)").unwrap(), "${1} ${2} "),
    ]
});

pub fn tokenize_13a(line: &str) -> Vec<String> {
    let mut line = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let mut line = format!(" {line} ");
    for (re, rep) in RULES.iter() {
        line = re.replace_all(&line, *rep).into_owned();
    }
    line.split_whitespace().map(str::to_string).collect()
}

pub fn tokenize_char(line: &str) -> Vec<String> {
    line.chars().filter(|c| !c.is_whitespace()).map(String::from).collect()
}

//! Tokenization and numeric normalization.

pub const INT_TOKEN: &str = "INT";
pub const FLOAT_TOKEN: &str = "FLOAT";
pub const PERCENT_TOKEN: &str = "PERCENT";

/// Split text on non-alphanumeric boundaries.
///
/// A decimal point between two digit runs stays inside the token (`3.5`), and a
/// trailing `%` is kept on purely numeric tokens (`12%`, `2.5%`). Input is not
/// lowercased here.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_alphanumeric() {
            i += 1;
        }
        let mut token: String = chars[start..i].iter().collect();
        let mut numeric = is_digits(&token);

        if numeric && i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
            let frac_start = i + 1;
            let mut j = frac_start;
            while j < chars.len() && chars[j].is_alphanumeric() {
                j += 1;
            }
            let frac: String = chars[frac_start..j].iter().collect();
            if is_digits(&frac) {
                token.push('.');
                token.push_str(&frac);
                i = j;
            } else {
                numeric = false;
                // Leave the fraction run to be read as its own token.
                i = frac_start;
                tokens.push(token);
                continue;
            }
        }
        if numeric && i < chars.len() && chars[i] == '%' {
            token.push('%');
            i += 1;
        }
        tokens.push(token);
    }
    tokens
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn is_decimal(s: &str) -> bool {
    match s.split_once('.') {
        Some((int, frac)) => is_digits(int) && is_digits(frac),
        None => false,
    }
}

/// Map pure numeric tokens to `INT`, `FLOAT` or `PERCENT`.
///
/// Mixed tokens such as `p53` pass through untouched.
pub fn normalize_numbers(token: &str) -> String {
    if let Some(body) = token.strip_suffix('%') {
        if is_digits(body) || is_decimal(body) {
            return PERCENT_TOKEN.to_string();
        }
    }
    if is_digits(token) {
        INT_TOKEN.to_string()
    } else if is_decimal(token) {
        FLOAT_TOKEN.to_string()
    } else {
        token.to_string()
    }
}

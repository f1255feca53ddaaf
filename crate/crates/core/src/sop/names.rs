/// Normal form for variable names: trimmed, lowercased, internal whitespace
/// runs collapsed to a single `_`.
///
/// Two variable names denote the same variable iff their normal forms are
/// equal.
pub fn normalize_var(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for (i, word) in name.split_whitespace().enumerate() {
        if i > 0 {
            out.push('_');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

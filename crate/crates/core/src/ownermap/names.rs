//! Name normalization for owner matching.

/// Suffixes ignored when abbreviating an organization name.
const LEGAL_SUFFIXES: &[&str] = &[
    "llc", "inc", "ltd", "co", "sa", "corp", "corporation", "plc", "gmbh", "ag", "bv", "nv", "limited", "parent",
];

/// Lower-cased alphanumeric runs.
pub fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lower-cased initials of the capitalized words of an organization name,
/// skipping legal suffixes. `None` below two letters.
pub fn abbreviation(org: &str) -> Option<String> {
    let initials: String = org
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.chars().next().is_some_and(char::is_uppercase))
        .filter(|w| !LEGAL_SUFFIXES.contains(&w.to_lowercase().as_str()))
        .filter_map(|w| w.chars().next())
        .flat_map(char::to_lowercase)
        .collect();
    (initials.chars().count() >= 2).then_some(initials)
}

/// Tokens common in AS names that a short owner form must not match.
const GENERIC_AS_TOKENS: &[&str] = &["as", "asn", "ip", "isp", "net", "bb", "gw"];

/// Short form of a multi-word owner name: first character of each token,
/// so "Level 3" becomes "l3". Forms that collide with generic AS-name
/// tokens are dropped.
pub fn owner_abbreviation(owner_tokens: &[String]) -> Option<String> {
    if owner_tokens.len() < 2 {
        return None;
    }
    let short: String = owner_tokens.iter().filter_map(|t| t.chars().next()).collect();
    (!GENERIC_AS_TOKENS.contains(&short.as_str())).then_some(short)
}

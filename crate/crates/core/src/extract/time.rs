use std::sync::LazyLock;

use regex::Regex;

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:,\d+)*").unwrap());

/// Earliest and latest year a record may carry.
pub const YEAR_RANGE: (i32, i32) = (1000, 2024);

/// Pulls a single 3–4 digit year out of a time surface. Decades ("1950s"),
/// ordinals, grouped numbers ("1,000"), alphanumeric codes and surfaces with
/// more than one candidate year give `None`.
pub fn normalize_time(surface: &str) -> Option<i32> {
    let mut found: Option<i32> = None;
    for m in NUMBER.find_iter(surface) {
        let digits = m.as_str();
        let before = surface[..m.start()].chars().next_back();
        let after = surface[m.end()..].chars().next();
        let glued = before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphabetic);
        if digits.contains(',') || !(3..=4).contains(&digits.len()) {
            continue;
        }
        if glued {
            // "1950s", "A380"
            return None;
        }
        let year: i32 = digits.parse().ok()?;
        match found {
            Some(y) if y != year => return None,
            _ => found = Some(year),
        }
    }
    found
}

/// The normalised year when it falls inside [`YEAR_RANGE`].
pub fn record_year(surface: &str) -> Option<i32> {
    normalize_time(surface).filter(|y| (YEAR_RANGE.0..=YEAR_RANGE.1).contains(y))
}

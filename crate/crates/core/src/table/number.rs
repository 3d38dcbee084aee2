//! Lenient number reading for chart labels: "1,234", "45%", "$3.2", "-€7".

const CURRENCY: [char; 4] = ['$', '€', '£', '¥'];

fn is_grouped(s: &str) -> bool {
    // d{1,3}(,ddd)+ followed by an optional fraction
    let (int_part, frac) = match s.find('.') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let groups: Vec<&str> = int_part.split(',').collect();
    groups.len() > 1
        && (1..=3).contains(&groups[0].len())
        && groups.iter().all(|g| !g.is_empty() && g.bytes().all(|b| b.is_ascii_digit()))
        && groups[1..].iter().all(|g| g.len() == 3)
        && frac[frac.len().min(1)..].bytes().all(|b| b.is_ascii_digit())
}

fn is_plain_decimal(s: &str) -> bool {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let mut digits = 0;
    let mut dots = 0;
    for b in mantissa.bytes() {
        match b {
            b'0'..=b'9' => digits += 1,
            b'.' => dots += 1,
            _ => return false,
        }
    }
    if digits == 0 || dots > 1 {
        return false;
    }
    match exponent {
        None => true,
        Some(e) => {
            let e = e.strip_prefix(['+', '-']).unwrap_or(e);
            !e.is_empty() && e.bytes().all(|b| b.is_ascii_digit())
        }
    }
}

/// Parses a numeric label, returning the value and any unit symbol that was
/// stripped (a leading currency symbol or a trailing `%`).
pub fn parse_number(raw: &str) -> Option<(f64, Option<String>)> {
    let mut s = raw.trim();
    let mut negative = false;
    if let Some(rest) = s.strip_prefix('-') {
        negative = true;
        s = rest;
    } else if let Some(rest) = s.strip_prefix('+') {
        s = rest;
    }
    let mut unit = None;
    if let Some(c) = s.chars().next().filter(|c| CURRENCY.contains(c)) {
        unit = Some(c.to_string());
        s = &s[c.len_utf8()..];
        if !negative {
            if let Some(rest) = s.strip_prefix('-') {
                negative = true;
                s = rest;
            }
        }
    }
    if let Some(rest) = s.strip_suffix('%') {
        if unit.is_some() {
            return None;
        }
        unit = Some("%".to_string());
        s = rest;
    }
    let cleaned;
    let body = if s.contains(',') {
        if !is_grouped(s) {
            return None;
        }
        cleaned = s.replace(',', "");
        cleaned.as_str()
    } else {
        s
    };
    if !is_plain_decimal(body) {
        return None;
    }
    let v: f64 = body.parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    Some((if negative { -v } else { v }, unit))
}

/// Inverse of [`parse_number`]: the shortest text that re-parses to exactly
/// `value` with the same unit.
pub fn format_number(value: f64, unit: Option<&str>) -> String {
    let body = format!("{}", value.abs());
    let sign = if value.is_sign_negative() && value != 0.0 { "-" } else { "" };
    match unit {
        Some("%") => format!("{sign}{body}%"),
        Some(u) => format!("{sign}{u}{body}"),
        None => format!("{sign}{body}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accepts_label_forms() {
        assert_eq!(parse_number("1,234"), Some((1234.0, None)));
        assert_eq!(parse_number("45%"), Some((45.0, Some("%".into()))));
        assert_eq!(parse_number("$3.2"), Some((3.2, Some("$".into()))));
        assert_eq!(parse_number("-$3.2"), Some((-3.2, Some("$".into()))));
        assert_eq!(parse_number("$-3.2"), Some((-3.2, Some("$".into()))));
        assert_eq!(parse_number(" 1.5e3 "), Some((1500.0, None)));
        assert_eq!(parse_number(".5"), Some((0.5, None)));
        assert_eq!(parse_number("12,345.67"), Some((12345.67, None)));
    }

    #[test]
    fn rejects_non_numbers() {
        for s in ["", "abc", "1,23", "1.2.3", "inf", "NaN", "$", "%", "$5%", "1e", "--1", "2020a"] {
            assert_eq!(parse_number(s), None, "{s}");
        }
    }

    proptest! {
        #[test]
        fn format_round_trips(v in -1e12f64..1e12, unit in prop::option::of(prop::sample::select(vec!["%", "$", "€"]))) {
            let s = format_number(v, unit);
            let (back, u) = parse_number(&s).unwrap();
            prop_assert_eq!(back, v);
            prop_assert_eq!(u.as_deref(), unit);
        }
    }
}

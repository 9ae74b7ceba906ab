use std::collections::BTreeMap;

use super::DataError;
use crate::model::GoldAnnotation;
use crate::scalar::Scalar;

/// Parses `<lemma.pos> <id> :: (<substitute> <weight>;)+` lines. Blank lines are skipped;
/// multiword substitutes are kept verbatim; zero-weight entries are dropped.
pub fn parse_gold_legacy<S: Scalar>(text: &str) -> Result<BTreeMap<String, GoldAnnotation<S>>, DataError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let malformed = |reason: &str| DataError::MalformedLine { line, reason: reason.to_string() };
        let (head, body) = trimmed.split_once("::").ok_or_else(|| malformed("missing '::'"))?;
        let mut head = head.split_whitespace();
        let (Some(lexelt), Some(id), None) = (head.next(), head.next(), head.next()) else {
            return Err(malformed("expected '<lemma.pos> <id>' before '::'"));
        };
        let (lemma, pos) = match lexelt.rsplit_once('.') {
            Some((l, p)) if !l.is_empty() && !p.is_empty() => (l.to_string(), Some(p.to_string())),
            _ => (lexelt.to_string(), None),
        };
        let mut substitutes = Vec::new();
        for item in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (word, weight) =
                item.rsplit_once(char::is_whitespace).ok_or_else(|| malformed("substitute without weight"))?;
            let weight: f64 = weight.parse().map_err(|_| malformed(&format!("bad weight {weight:?}")))?;
            if !weight.is_finite() || weight < 0.0 {
                return Err(malformed(&format!("bad weight {weight}")));
            }
            if weight == 0.0 {
                continue;
            }
            let word = word.split_whitespace().collect::<Vec<_>>().join(" ");
            substitutes.push((word, S::lit(weight)));
        }
        if substitutes.is_empty() {
            return Err(malformed("no substitutes"));
        }
        let annotation = GoldAnnotation::new(id, lemma, pos, substitutes)?;
        if out.insert(id.to_string(), annotation).is_some() {
            return Err(DataError::DuplicateId { line, id: id.to_string() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_weighted_line() {
        let gold = parse_gold_legacy::<f64>("bright.a 1 :: intelligent 3;clever 2;").unwrap();
        let g = &gold["1"];
        assert_eq!(g.target_lemma, "bright");
        assert_eq!(g.pos_tag.as_deref(), Some("a"));
        assert_eq!(g.weight("intelligent"), 3.0);
        assert_eq!(g.weight("clever"), 2.0);
        assert_eq!(g.substitutes().len(), 2);
    }

    #[test]
    fn tolerates_trailing_whitespace() {
        let a = parse_gold_legacy::<f64>("bright.a 1 :: intelligent 3;clever 2;").unwrap();
        let b = parse_gold_legacy::<f64>("bright.a 1 :: intelligent 3; clever 2;   \t").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn keeps_multiword_substitutes() {
        let gold = parse_gold_legacy::<f64>("easy.a 4 :: trouble free 1;simple 2;").unwrap();
        assert_eq!(gold["4"].weight("trouble free"), 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_gold_legacy::<f64>("bright.a 1 ::"),
            Err(DataError::MalformedLine { line: 1, reason: "no substitutes".into() })
        );
        assert!(matches!(parse_gold_legacy::<f64>("bright.a 1 intelligent 3;"), Err(DataError::MalformedLine { .. })));
        assert!(matches!(parse_gold_legacy::<f64>("bright.a 1 :: clever x;"), Err(DataError::MalformedLine { .. })));
        assert_eq!(
            parse_gold_legacy::<f64>("a.a 1 :: x 1;\n\na.a 1 :: y 1;"),
            Err(DataError::DuplicateId { line: 3, id: "1".into() })
        );
    }
}

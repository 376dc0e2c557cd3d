//! Proposal extraction from free-form replies.
//!
//! A reply may wrap the structured object in prose or code fences; the
//! parser scans for balanced JSON objects and takes the first one whose
//! fields satisfy the proposal schema.

use crate::controllers::{CompensatorParams, MitPidParams};
use crate::{Error, Result};

use super::{ProposalSchema, DEFAULT_GAIN_CAP};

/// All balanced `{...}` candidate slices in order of appearance.
fn json_candidates(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = matching_close(bytes, i) {
                out.push(&text[i..=end]);
            }
        }
        i += 1;
    }
    out
}

/// Index of the brace closing the one at `open`, string-aware.
fn matching_close(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extract the first object carrying all schema fields as numbers, plus
/// an optional rationale string. Magnitudes beyond `cap` are a fault.
pub fn parse_reply<P: ProposalSchema>(raw: &str, cap: f64) -> Result<(P, Option<String>)> {
    let fault = |reason: String| Error::ParseFault {
        reason,
        raw_reply: raw.to_string(),
    };
    for candidate in json_candidates(raw) {
        let value: serde_json::Value = match serde_json::from_str(candidate) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let obj = match value.as_object() {
            Some(o) => o,
            None => continue,
        };
        let mut fields = Vec::with_capacity(P::field_names().len());
        for name in P::field_names() {
            match obj.get(*name).and_then(|v| v.as_f64()) {
                Some(x) => fields.push(x),
                None => break,
            }
        }
        if fields.len() != P::field_names().len() {
            continue;
        }
        if let Some(bad) = fields.iter().find(|x| !x.is_finite() || x.abs() > cap) {
            return Err(fault(format!(
                "proposal gain {} outside sanity cap {}",
                bad, cap
            )));
        }
        let rationale = obj
            .get("rationale")
            .and_then(|v| v.as_str())
            .map(|s| s.to_string());
        return Ok((P::from_fields(&fields), rationale));
    }
    Err(fault(format!(
        "no JSON object with numeric fields {:?} found",
        P::field_names()
    )))
}

/// Compensator-mode deltas: fields kp, kd, kv, ki.
pub fn parse_proposal(raw: &str) -> Result<CompensatorParams> {
    parse_reply::<CompensatorParams>(raw, DEFAULT_GAIN_CAP).map(|(p, _)| p)
}

/// Direct-mode template parameters: fields kp0, ki0, kd0, gamma.
pub fn parse_direct_proposal(raw: &str) -> Result<MitPidParams> {
    parse_reply::<MitPidParams>(raw, DEFAULT_GAIN_CAP).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bare_object() {
        let p = parse_proposal(r#"{"kp": 20.0, "kd": 10.0, "kv": 8.5, "ki": 1}"#).unwrap();
        assert_eq!(p, CompensatorParams::new(20.0, 10.0, 8.5, 1.0));
    }

    #[test]
    fn parses_fenced_object_with_commentary() {
        let raw = r#"
The unknown system rises slowly, so I raise the proportional gain.

```json
{"kp": 4.5, "kd": 0.0, "kv": 0.5, "ki": 0.25, "rationale": "low-gain mismatch"}
```

This should tighten tracking without inducing overshoot.
"#;
        let (p, rationale) = parse_reply::<CompensatorParams>(raw, 1e3).unwrap();
        assert_eq!(p, CompensatorParams::new(4.5, 0.0, 0.5, 0.25));
        assert_eq!(rationale.as_deref(), Some("low-gain mismatch"));
    }

    #[test]
    fn prose_only_is_a_parse_fault() {
        let err = parse_proposal("I would increase kp a little and watch the overshoot.")
            .unwrap_err();
        match err {
            Error::ParseFault { raw_reply, .. } => {
                assert!(raw_reply.contains("increase kp"));
            }
            other => panic!("expected ParseFault, got {other}"),
        }
    }

    #[test]
    fn wrong_fields_are_skipped_until_a_match() {
        let raw = r#"{"note": "warm-up"} then {"kp": 1, "kd": 2, "kv": 3, "ki": 4}"#;
        let p = parse_proposal(raw).unwrap();
        assert_eq!(p, CompensatorParams::new(1.0, 2.0, 3.0, 4.0));
    }

    #[test]
    fn non_numeric_fields_do_not_match() {
        let err = parse_proposal(r#"{"kp": "big", "kd": 1, "kv": 1, "ki": 1}"#).unwrap_err();
        assert!(matches!(err, Error::ParseFault { .. }));
    }

    #[test]
    fn oversized_gain_is_a_fault_not_a_skip() {
        let err = parse_proposal(r#"{"kp": 1e9, "kd": 0, "kv": 0, "ki": 0}"#).unwrap_err();
        match err {
            Error::ParseFault { reason, .. } => assert!(reason.contains("sanity cap")),
            other => panic!("expected ParseFault, got {other}"),
        }
    }

    #[test]
    fn nested_braces_in_strings_do_not_confuse_the_scanner() {
        let raw = r#"{"rationale": "see {braces} inside", "kp": 2, "kd": 0, "kv": 0, "ki": 0}"#;
        let p = parse_proposal(raw).unwrap();
        assert_eq!(p.kp, 2.0);
    }

    #[test]
    fn direct_mode_fields() {
        let p = parse_direct_proposal(r#"{"kp0": 3.0, "ki0": 1.0, "kd0": 0.4, "gamma": 0.05}"#)
            .unwrap();
        assert_eq!(p.kp0, 3.0);
        assert_eq!(p.gamma, 0.05);
    }

    #[test]
    fn integers_are_accepted_as_numbers() {
        let p = parse_proposal(r#"{"kp": 20, "kd": 10, "kv": 8, "ki": 1}"#).unwrap();
        assert_eq!(p.kp, 20.0);
    }
}

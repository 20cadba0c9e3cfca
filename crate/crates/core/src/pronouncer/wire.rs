//! Newline-delimited JSON message codec for pronouncer queries.
//!
//! One request per line, one response per line, UTF-8. Requests are
//! [`Query`] objects (`{"template": ..., "bindings": {...}, "requester":
//! ...}`); successful responses are [`Advice`] objects (`{"action": ...,
//! "eu": ..., "action_values": {...}, "filtered_out": [...]}`) and
//! failures are `{"error": "..."}`.

use serde::Deserialize;

use super::{Advice, PronounceError, Pronouncer, Query};

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
}

pub fn encode_request(query: &Query) -> String {
    serde_json::to_string(query).expect("query serialization cannot fail")
}

pub fn decode_request(line: &str) -> Result<Query, WireError> {
    serde_json::from_str(line.trim()).map_err(|e| WireError::BadRequest(e.to_string()))
}

pub fn encode_advice(advice: &Advice) -> String {
    serde_json::to_string(advice).expect("advice serialization cannot fail")
}

pub fn encode_error(error: &PronounceError) -> String {
    serde_json::to_string(&serde_json::json!({ "error": error.to_string() }))
        .expect("error serialization cannot fail")
}

/// Decode a response line into either advice or the server's error text.
pub fn decode_response(line: &str) -> Result<Result<Advice, String>, WireError> {
    #[derive(Deserialize)]
    struct ErrorLine {
        error: String,
    }
    let trimmed = line.trim();
    if let Ok(advice) = serde_json::from_str::<Advice>(trimmed) {
        return Ok(Ok(advice));
    }
    match serde_json::from_str::<ErrorLine>(trimmed) {
        Ok(e) => Ok(Err(e.error)),
        Err(e) => Err(WireError::BadResponse(e.to_string())),
    }
}

/// Serve one request line: parse, pronounce, encode. Never panics on bad
/// input; malformed lines come back as error responses.
pub fn handle_line(pronouncer: &Pronouncer, line: &str) -> String {
    match decode_request(line) {
        Ok(query) => match pronouncer.pronounce(&query) {
            Ok(advice) => encode_advice(&advice),
            Err(e) => encode_error(&e),
        },
        Err(e) => serde_json::to_string(&serde_json::json!({ "error": e.to_string() }))
            .expect("error serialization cannot fail"),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::{BindingValue, NormFilter, SlotTarget, TemplateModel};
    use super::*;
    use crate::decision::{ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable};

    fn registry() -> Pronouncer {
        let skeleton = InfluenceDiagram {
            decisions: vec![DecisionNode {
                id: "act".into(),
                alternatives: vec!["low".into(), "high".into()],
            }],
            chances: vec![ChanceNode {
                id: "load".into(),
                outcomes: vec!["light".into(), "heavy".into()],
                parents: vec![],
                cpt: vec![vec![0.5, 0.5]],
            }],
            utility: UtilityTable {
                parents: vec!["act".into(), "load".into()],
                values: vec![0.0; 4],
            },
            decision_order: vec!["act".into()],
            observed_before: Default::default(),
        };
        let mut slots = BTreeMap::new();
        slots.insert(
            "prior".to_string(),
            SlotTarget::CptRow {
                node: "load".into(),
                row: 0,
            },
        );
        for i in 0..4 {
            slots.insert(format!("u{i}"), SlotTarget::Utility { index: i });
        }
        let p = Pronouncer::new();
        p.register_template_with_filter(
            TemplateModel {
                id: "dispatch".into(),
                skeleton,
                slots,
            },
            NormFilter::forbidding(["high"]),
        )
        .unwrap();
        p
    }

    fn request_line() -> String {
        let mut bindings = BTreeMap::new();
        bindings.insert("prior".to_string(), BindingValue::Row(vec![0.25, 0.75]));
        for (i, v) in [1.0, 2.0, 8.0, 9.0].iter().enumerate() {
            bindings.insert(format!("u{i}"), BindingValue::Value(*v));
        }
        encode_request(&Query {
            template_id: "dispatch".into(),
            bindings,
            requester: "room-1".into(),
        })
    }

    #[test]
    fn round_trip_request() {
        let line = request_line();
        assert!(!line.contains('\n'));
        let query = decode_request(&line).unwrap();
        assert_eq!(query.template_id, "dispatch");
        assert_eq!(query.requester, "room-1");
        assert_eq!(query.bindings.len(), 5);
    }

    #[test]
    fn handle_line_answers_with_advice_fields() {
        let p = registry();
        let response = handle_line(&p, &request_line());
        assert!(response.contains("\"action\":"));
        assert!(response.contains("\"eu\":"));
        let advice = decode_response(&response).unwrap().unwrap();
        assert_eq!(advice.action, "low");
        assert_eq!(advice.filtered_out, vec!["high".to_string()]);
    }

    #[test]
    fn handle_line_reports_errors_in_band() {
        let p = registry();
        let response = handle_line(
            &p,
            "{\"template\": \"nope\", \"bindings\": {}, \"requester\": \"x\"}",
        );
        let err = decode_response(&response).unwrap().unwrap_err();
        assert!(err.contains("nope"));
        let garbage = handle_line(&p, "not json at all");
        assert!(decode_response(&garbage).unwrap().is_err());
    }

    #[test]
    fn binding_values_accept_rows_and_scalars() {
        let json = r#"{"template":"t","bindings":{"a":[0.5,0.5],"b":-3.25},"requester":"r"}"#;
        let q = decode_request(json).unwrap();
        assert_eq!(q.bindings["a"], BindingValue::Row(vec![0.5, 0.5]));
        assert_eq!(q.bindings["b"], BindingValue::Value(-3.25));
    }
}

mod common;

use proptest::prelude::*;

use common::{arb_clean_document, fixture_text};
use umlk::parser::ParseErrorCode;
use umlk::{parse_document, serialize_document};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_trip_preserves_everything(gen in arb_clean_document()) {
        let doc = gen.parse();
        let text = serialize_document(&doc);
        let again = parse_document(&text).unwrap();
        prop_assert_eq!(&again, &doc);
        // Serialization is a fixed point after one pass.
        prop_assert_eq!(serialize_document(&again), text);
        // Every opaque field of the input survives, value for value.
        let out: serde_json::Value = serde_json::from_str(&serialize_document(&doc)).unwrap();
        for (id, rec) in gen.value["elements"].as_object().unwrap() {
            for (k, v) in rec.as_object().unwrap() {
                prop_assert_eq!(&out["elements"][id][k], v, "{}.{}", id, k);
            }
        }
        for (id, rec) in gen.value["relationships"].as_object().unwrap() {
            prop_assert_eq!(&out["relationships"][id], rec);
        }
    }

    #[test]
    fn never_panics_on_arbitrary_text(s in ".{0,200}") {
        let _ = parse_document(&s);
    }

    #[test]
    fn never_panics_on_mangled_documents(gen in arb_clean_document(), cut in 0usize..4000, byte in any::<u8>()) {
        let text = gen.text();
        let mut bytes = text.into_bytes();
        let at = cut % bytes.len().max(1);
        bytes.insert(at, byte);
        if let Ok(s) = String::from_utf8(bytes.clone()) {
            let first = parse_document(&s);
            prop_assert_eq!(first, parse_document(&s));
        }
        bytes.truncate(at);
        if let Ok(s) = String::from_utf8(bytes) {
            let _ = parse_document(&s);
        }
    }
}

#[test]
fn fixture_geometry_survives_byte_for_byte() {
    let text = fixture_text("library_clean.json");
    let doc = parse_document(&text).unwrap();
    let out: serde_json::Value = serde_json::from_str(&serialize_document(&doc)).unwrap();
    assert_eq!(
        serde_json::to_string(&out["elements"]["e03"]["bounds"]).unwrap(),
        r#"{"x":80,"y":60,"width":120,"height":60}"#
    );
    assert_eq!(out["size"]["width"], 900);
    assert_eq!(out["relationships"]["r01"]["source"]["direction"], "Right");
}

#[test]
fn error_codes_are_stable_strings() {
    let err = parse_document("[]").unwrap_err();
    assert_eq!(err.code, ParseErrorCode::MalformedInput);
    let v = serde_json::to_value(&err).unwrap();
    assert_eq!(v["code"], "MALFORMED_INPUT");
}

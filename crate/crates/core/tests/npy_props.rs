use std::fs;

use proptest::prelude::*;
use trisim::tensorio::{
    decode, encode, read_array, write_array, ActivationSet, Layer, Manifest, ReadOptions, Tensor, MAGIC,
};
use trisim::Error;

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..5, 0..=4)
}

fn tensor() -> impl Strategy<Value = Tensor> {
    (shape(), any::<bool>()).prop_flat_map(|(shape, wide)| {
        let n: usize = shape.iter().product();
        let s = shape.clone();
        if wide {
            prop::collection::vec(-1e300..1e300f64, n).prop_map(move |v| Tensor::from_f64(s.clone(), v).unwrap()).boxed()
        } else {
            prop::collection::vec(-1e30..1e30f32, n).prop_map(move |v| Tensor::from_f32(s.clone(), v).unwrap()).boxed()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn encode_decode_roundtrip(t in tensor()) {
        let bytes = encode(&t);
        prop_assert_eq!(&bytes[..8], &MAGIC[..]);
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        prop_assert_eq!((10 + header_len) % 64, 0);
        prop_assert_eq!(bytes[9 + header_len], b'\n');
        let back = decode(&bytes, ReadOptions::default()).unwrap();
        prop_assert!(back.bits_eq(&t));
        prop_assert_eq!(back.shape(), t.shape());
        prop_assert_eq!(back.dtype(), t.dtype());
    }

    #[test]
    fn truncated_payloads_are_rejected(t in tensor(), cut in 1usize..64) {
        let bytes = encode(&t);
        prop_assume!(cut <= bytes.len());
        let short = &bytes[..bytes.len() - cut];
        prop_assert!(decode(short, ReadOptions::default()).is_err());
    }

    #[test]
    fn garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode(&bytes, ReadOptions::default());
        let mut prefixed = MAGIC.to_vec();
        prefixed.extend(&bytes);
        let _ = decode(&prefixed, ReadOptions::default());
    }
}

#[test]
fn non_finite_values_need_opt_in() {
    let t = Tensor::from_f64(vec![2], vec![1.0, f64::NAN]).unwrap();
    assert!(matches!(decode(&encode(&t), ReadOptions::default()), Err(Error::Validation(_))));
    assert!(decode(&encode(&t), ReadOptions { allow_non_finite: true }).is_ok());
}

#[test]
fn unsupported_dtype_is_named() {
    let mut bytes = encode(&Tensor::from_f64(vec![1], vec![1.0]).unwrap());
    let pos = bytes.windows(3).position(|w| w == b"<f8").unwrap();
    bytes[pos..pos + 3].copy_from_slice(b"<i8");
    assert!(matches!(decode(&bytes, ReadOptions::default()), Err(Error::UnsupportedDtype(d)) if d == "<i8"));
}

#[test]
fn file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let t = Tensor::from_f32(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
    write_array(&t, dir.path().join("a.npy")).unwrap();
    assert!(read_array(dir.path().join("a.npy")).unwrap().bits_eq(&t));
}

fn saved_set(dir: &std::path::Path) {
    let layers = vec![
        Layer { name: "h1".into(), values: ndarray::Array2::from_elem((4, 3), 1.5) },
        Layer { name: "h2".into(), values: ndarray::Array2::from_elem((4, 2), -0.5) },
    ];
    ActivationSet::new("m", "d", layers).unwrap().save(dir).unwrap();
}

#[test]
fn corrupt_manifests_are_rejected() {
    let root = tempfile::tempdir().unwrap();
    let edits: Vec<(&str, Box<dyn Fn(&mut serde_json::Value)>)> = vec![
        ("version", Box::new(|m| m["format_version"] = 2.into())),
        ("duplicate", Box::new(|m| { let first = m["layers"][0].clone(); m["layers"][1]["name"] = first["name"].clone(); })),
        ("escape", Box::new(|m| m["layers"][0]["file"] = "../x.npy".into())),
        ("absolute", Box::new(|m| m["layers"][0]["file"] = "/etc/passwd".into())),
        ("missing", Box::new(|m| m["layers"][0]["file"] = "nope.npy".into())),
        ("shape", Box::new(|m| m["layers"][0]["shape"] = serde_json::json!([4, 7]))),
        ("kind", Box::new(|m| m["kind"] = "predictions".into())),
        ("unknown kind", Box::new(|m| m["kind"] = "weights".into())),
        ("no layers", Box::new(|m| { m.as_object_mut().unwrap().remove("layers"); })),
    ];
    for (label, edit) in edits {
        let dir = root.path().join(label.replace(' ', "_"));
        saved_set(&dir);
        assert!(ActivationSet::load(&dir).is_ok());
        let path = dir.join("manifest.json");
        let mut m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        edit(&mut m);
        fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
        assert!(ActivationSet::load(&dir).is_err(), "{label} was accepted");
    }
    let dir = root.path().join("not_json");
    saved_set(&dir);
    fs::write(dir.join("manifest.json"), "{").unwrap();
    assert!(Manifest::read(&dir).is_err());
}

//! Model serialization.
//!
//! JSON schema: `{"w": [64 reals], "basis": [{"a_plus": "hex16", "beta":
//! real}, ...], "n_g": int, "sizes": [[w, h], ...], "calib": [[v, t], ...]}`
//! where `hex16` is the 64-bit basis word as fixed 16-hex-digit big-endian
//! text.

use super::{BasisVector, ObjectnessModel};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    w: Vec<f64>,
    basis: Vec<BasisEntry>,
    n_g: usize,
    sizes: Vec<(u32, u32)>,
    calib: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct BasisEntry {
    a_plus: String,
    beta: f64,
}

pub fn write_model(model: &ObjectnessModel, mut writer: impl Write) -> Result<()> {
    model.validate()?;
    let file = ModelFile {
        w: model.w.clone(),
        basis: model
            .basis
            .iter()
            .map(|b| BasisEntry { a_plus: format!("{:016x}", b.a_plus), beta: b.beta })
            .collect(),
        n_g: model.n_g,
        sizes: model.sizes.clone(),
        calib: model.calib.clone(),
    };
    let text = serde_json::to_string_pretty(&file).expect("model serializes");
    writer.write_all(text.as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn read_model(mut reader: impl Read) -> Result<ObjectnessModel> {
    let mut buf = String::new();
    reader.read_to_string(&mut buf)?;
    let file: ModelFile =
        serde_json::from_str(&buf).map_err(|e| Error::MalformedModelFile(e.to_string()))?;
    let mut basis = Vec::with_capacity(file.basis.len());
    for entry in &file.basis {
        if entry.a_plus.len() != 16 {
            return Err(Error::MalformedModelFile("a_plus must be 16 hex digits".into()));
        }
        let word = u64::from_str_radix(&entry.a_plus, 16)
            .map_err(|e| Error::MalformedModelFile(format!("bad a_plus: {e}")))?;
        basis.push(BasisVector { a_plus: word, beta: entry.beta });
    }
    let model = ObjectnessModel { w: file.w, basis, n_g: file.n_g, sizes: file.sizes, calib: file.calib };
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &ObjectnessModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, std::fs::File::create(path)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ObjectnessModel> {
    read_model(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectness::{scan, ScanParams};
    use crate::raster::GrayImage;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn round_trip_preserves_all_fields() {
        let mut rng = StdRng::seed_from_u64(9);
        let w: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut model = ObjectnessModel::from_weights(&w, 3, 5, vec![(16, 16), (32, 64)]);
        model.calib = vec![(1.5, -0.25), (0.75, 2.0)];

        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();

        assert_eq!(back.w, model.w);
        assert_eq!(back.n_g, model.n_g);
        assert_eq!(back.sizes, model.sizes);
        assert_eq!(back.calib, model.calib);
        assert_eq!(back.basis, model.basis);
    }

    #[test]
    fn missing_w_is_malformed() {
        let json = br#"{"basis":[],"n_g":4,"sizes":[[16,16]],"calib":[[1,0]]}"#;
        assert!(matches!(read_model(&json[..]), Err(Error::MalformedModelFile(_))));
    }

    #[test]
    fn bad_hex_is_malformed() {
        let json = br#"{"w":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,
                         0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],
                     "basis":[{"a_plus":"zzzz","beta":1.0}],"n_g":4,"sizes":[[16,16]],"calib":[[1,0]]}"#;
        assert!(matches!(read_model(&json[..]), Err(Error::MalformedModelFile(_))));
    }

    #[test]
    fn hand_written_minimal_model_loads_and_scans() {
        // one size, n_w = 1: an all-positive pattern with unit weight
        let mut w_parts = vec!["0.015625".to_string(); 64];
        w_parts[0] = "0.015625".to_string();
        let json = format!(
            r#"{{"w":[{}],"basis":[{{"a_plus":"ffffffffffffffff","beta":0.015625}}],
                "n_g":4,"sizes":[[32,32]],"calib":[[1.0,0.0]]}}"#,
            w_parts.join(",")
        );
        let model = read_model(json.as_bytes()).unwrap();
        let img = GrayImage::from_fn(64, 48, |x, y| ((x * y) % 256) as u8);
        let props = scan(&img, &model, &ScanParams { per_size_keep: 10, per_size_nms_iou: 0.6, total_keep: 5 });
        assert!(!props.is_empty() && props.len() <= 5);
    }
}

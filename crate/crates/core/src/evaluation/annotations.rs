//! Ground-truth ingestion: VOC annotation XML and a JSONL interchange
//! format, plus the JSONL writer used by the synthetic-scene tooling.

use crate::error::{Error, Result};
use crate::geometry::Rect;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// One annotated object.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub image_id: String,
    pub class_name: String,
    pub rect: Rect,
    pub difficult: bool,
}

/// Parses a VOC annotation document. One record per `<object>`; inclusive
/// integer corners become continuous boxes via `(xmax + 1, ymax + 1)`.
/// `fallback_id` is used when the document carries no `<filename>`.
pub fn parse_voc_xml(xml: &str, fallback_id: &str) -> Result<Vec<GroundTruth>> {
    let doc = roxmltree::Document::parse(xml)
        .map_err(|e| Error::MalformedAnnotation(format!("bad XML: {e}")))?;
    let root = doc.root_element();
    let image_id = root
        .children()
        .find(|n| n.has_tag_name("filename"))
        .and_then(|n| n.text())
        .map(|t| t.trim())
        .map(|t| t.rsplit_once('.').map_or(t, |(stem, _)| stem).to_string())
        .unwrap_or_else(|| fallback_id.to_string());

    let mut out = Vec::new();
    for obj in root.children().filter(|n| n.has_tag_name("object")) {
        let text_of = |tag: &str| -> Option<String> {
            obj.children()
                .find(|n| n.has_tag_name(tag))
                .and_then(|n| n.text())
                .map(|t| t.trim().to_string())
        };
        let class_name = text_of("name")
            .ok_or_else(|| Error::MalformedAnnotation("object without <name>".into()))?;
        let difficult = text_of("difficult").map(|d| d == "1").unwrap_or(false);
        let bndbox = obj
            .children()
            .find(|n| n.has_tag_name("bndbox"))
            .ok_or_else(|| Error::MalformedAnnotation("object without <bndbox>".into()))?;
        let coord = |tag: &str| -> Result<f64> {
            bndbox
                .children()
                .find(|n| n.has_tag_name(tag))
                .and_then(|n| n.text())
                .and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::MalformedAnnotation(format!("bad <{tag}>")))
        };
        let (xmin, ymin, xmax, ymax) = (coord("xmin")?, coord("ymin")?, coord("xmax")?, coord("ymax")?);
        if xmax < xmin || ymax < ymin {
            return Err(Error::MalformedAnnotation("inverted bndbox".into()));
        }
        out.push(GroundTruth {
            image_id: image_id.clone(),
            class_name,
            rect: Rect::new(xmin, ymin, xmax + 1.0, ymax + 1.0),
            difficult,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct GtLine {
    image: String,
    class: String,
    /// `[x1, y1, x2, y2]`, already continuous.
    #[serde(rename = "box")]
    rect: [f64; 4],
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    difficult: bool,
}

/// Parses newline-delimited JSON records
/// `{"image": ..., "class": ..., "box": [x1, y1, x2, y2]}`.
pub fn parse_gt_jsonl(reader: impl BufRead) -> Result<Vec<GroundTruth>> {
    let mut out = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GtLine = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedAnnotation(format!("line {}: {e}", ln + 1)))?;
        let [x1, y1, x2, y2] = rec.rect;
        if x2 < x1 || y2 < y1 || rec.rect.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedAnnotation(format!("line {}: invalid box", ln + 1)));
        }
        out.push(GroundTruth {
            image_id: rec.image,
            class_name: rec.class,
            rect: Rect::new(x1, y1, x2, y2),
            difficult: rec.difficult,
        });
    }
    Ok(out)
}

/// Writes the JSONL format read by [`parse_gt_jsonl`].
pub fn write_gt_jsonl(gts: &[GroundTruth], mut writer: impl Write) -> Result<()> {
    for gt in gts {
        let rec = GtLine {
            image: gt.image_id.clone(),
            class: gt.class_name.clone(),
            rect: [gt.rect.x1, gt.rect.y1, gt.rect.x2, gt.rect.y2],
            difficult: gt.difficult,
        };
        serde_json::to_writer(&mut writer, &rec).map_err(std::io::Error::other)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

//! Cross-modal retrieval evaluation: Hamming ranking and Mean Average
//! Precision for Image-to-Text and Text-to-Image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modalitynets::ModalityNet;
use crate::numkernel::{sign_pos, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "I2T")]
    ImageToText,
    #[serde(rename = "T2I")]
    TextToImage,
}

impl Direction {
    pub fn tag(self) -> &'static str {
        match self {
            Direction::ImageToText => "I2T",
            Direction::TextToImage => "T2I",
        }
    }
}

/// Query and gallery code matrices (columns are items, entries strictly +-1)
/// with their labels.
#[derive(Debug, Clone)]
pub struct RetrievalSet {
    pub query_codes: DenseMatrix,
    pub query_labels: Vec<usize>,
    pub gallery_codes: DenseMatrix,
    pub gallery_labels: Vec<usize>,
    pub direction: Direction,
}

impl RetrievalSet {
    pub fn validate(&self) -> Result<()> {
        if self.query_codes.cols() != self.query_labels.len()
            || self.gallery_codes.cols() != self.gallery_labels.len()
        {
            return Err(Error::shape("code columns must match label counts".to_string()));
        }
        if self.query_codes.rows() != self.gallery_codes.rows() {
            return Err(Error::shape("query/gallery bit lengths differ".to_string()));
        }
        for &v in self
            .query_codes
            .data()
            .iter()
            .chain(self.gallery_codes.data())
        {
            if v != 1.0 && v != -1.0 {
                return Err(Error::data(format!("non-sign code entry {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapReport {
    pub direction: Direction,
    pub bits: usize,
    pub map: f64,
    pub per_query_ap: Vec<f64>,
    /// Queries skipped because the gallery held no relevant item.
    pub undefined_queries: usize,
}

/// Number of differing positions between two +-1 code columns.
pub fn hamming_distance(a: &[f64], b: &[f64]) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "code lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(&x, &y)| x != y).count() as u32)
}

/// AP of one query against the gallery, Hamming-ranked with ties broken by
/// ascending gallery index. `None` when the gallery holds no relevant item.
pub fn average_precision(
    query_code: &[f64],
    query_label: usize,
    gallery_codes: &DenseMatrix,
    gallery_labels: &[usize],
) -> Result<Option<f64>> {
    let g = gallery_labels.len();
    if !gallery_labels.contains(&query_label) {
        return Ok(None);
    }
    let mut ranked: Vec<(u32, usize)> = (0..g)
        .map(|j| {
            let col = gallery_codes.column(j);
            hamming_distance(query_code, &col).map(|d| (d, j))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_unstable();
    let mut relevant_seen = 0usize;
    let mut ap_sum = 0.0;
    for (rank0, &(_, j)) in ranked.iter().enumerate() {
        if gallery_labels[j] == query_label {
            relevant_seen += 1;
            ap_sum += relevant_seen as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(Some(ap_sum / relevant_seen as f64))
}

/// Mean of defined per-query APs.
pub fn mean_average_precision(set: &RetrievalSet) -> Result<MapReport> {
    set.validate()?;
    let mut per_query_ap = Vec::with_capacity(set.query_labels.len());
    let mut undefined = 0usize;
    for (q, &label) in set.query_labels.iter().enumerate() {
        let code = set.query_codes.column(q);
        match average_precision(&code, label, &set.gallery_codes, &set.gallery_labels)? {
            Some(ap) => per_query_ap.push(ap),
            None => undefined += 1,
        }
    }
    if per_query_ap.is_empty() {
        return Err(Error::data("no query has a relevant gallery item".to_string()));
    }
    let map = per_query_ap.iter().sum::<f64>() / per_query_ap.len() as f64;
    Ok(MapReport {
        direction: set.direction,
        bits: set.query_codes.rows(),
        map,
        per_query_ap,
        undefined_queries: undefined,
    })
}

/// Per-modality sign codes for a feature matrix.
pub fn encode_modality(net: &ModalityNet, features: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(net.forward(features)?.map(sign_pos))
}

/// Sign codes for both modalities of a feature set.
pub fn encode_for_eval(
    net_image: &ModalityNet,
    net_text: &ModalityNet,
    image_features: &DenseMatrix,
    text_features: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    Ok((
        encode_modality(net_image, image_features)?,
        encode_modality(net_text, text_features)?,
    ))
}

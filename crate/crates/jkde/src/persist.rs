//! Model persistence. A fitted model round-trips through a JSON document
//! that stores the smoothing configuration, the seed, and the realized
//! jitter; the data itself stays in its source file and is referenced by
//! path and column names. Reloading with the same data reproduces every
//! density value bit for bit, because serde writes f64 values with enough
//! digits to survive the round trip.

use serde::{Deserialize, Serialize};

use crate::estimator::{Bandwidths, JkdeModel, MixedDataset};
use crate::kernels::KernelSpec;
use crate::noise::NoiseSpec;
use crate::{Error, Result};

/// Where the observations came from: a file path plus the column names for
/// the discrete and continuous blocks, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub path: String,
    pub discrete: Vec<String>,
    pub continuous: Vec<String>,
}

/// Serialized form of a fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub dataset: DatasetRef,
    pub n: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub noise: NoiseSpec,
    pub bandwidths: Bandwidths,
    /// Realized jitter, one row per observation, one entry per discrete
    /// coordinate.
    pub jitter: Vec<Vec<f64>>,
}

impl ModelDocument {
    /// Captures a fitted model. `dataset` records where the observations
    /// live so a later load can find them again.
    pub fn from_model(model: &JkdeModel, dataset: DatasetRef) -> Self {
        let p = model.data().p();
        let n = model.data().n();
        let jitter = (0..n)
            .map(|i| model.jitter()[i * p..(i + 1) * p].to_vec())
            .collect();
        ModelDocument {
            dataset,
            n,
            seed: model.seed(),
            kernel: model.kernel(),
            noise: model.noise(),
            bandwidths: model.bandwidths().clone(),
            jitter,
        }
    }

    /// Rebuilds the model against freshly loaded data. The data must have
    /// the shape the document was saved with; the stored jitter is
    /// revalidated against the noise support.
    pub fn into_model(self, data: MixedDataset) -> Result<JkdeModel> {
        if data.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "document was fitted on {} observations, data has {}",
                self.n,
                data.n()
            )));
        }
        if data.p() != self.dataset.discrete.len()
            || data.q() != self.dataset.continuous.len()
        {
            return Err(Error::DimensionMismatch(format!(
                "document names {} discrete and {} continuous columns, data has ({}, {})",
                self.dataset.discrete.len(),
                self.dataset.continuous.len(),
                data.p(),
                data.q()
            )));
        }
        let p = data.p();
        let mut flat = Vec::with_capacity(self.n * p);
        for (i, row) in self.jitter.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "jitter row {i} has {} entries, expected {p}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        if self.jitter.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "jitter has {} rows, expected {}",
                self.jitter.len(),
                self.n
            )));
        }
        JkdeModel::from_parts(data, flat, self.kernel, self.noise, self.bandwidths, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelFamily, KernelSpec};
    use crate::rng::RngStream;

    fn small_model() -> (JkdeModel, DatasetRef) {
        let mut stream = RngStream::derive(5, &[8]);
        let data = crate::simharness::simulate(1, 1, 3, 0.4, 40, &mut stream).unwrap();
        let model = JkdeModel::fit(
            data,
            KernelSpec::new(KernelFamily::Epanechnikov),
            NoiseSpec::uniform(),
            Bandwidths::new(vec![0.5], vec![0.6]).unwrap(),
            321,
        )
        .unwrap();
        let dataset = DatasetRef {
            path: "data.csv".into(),
            discrete: vec!["z1".into()],
            continuous: vec!["x1".into()],
        };
        (model, dataset)
    }

    #[test]
    fn json_round_trip_reproduces_densities_exactly() {
        let (model, dataset) = small_model();
        let doc = ModelDocument::from_model(&model, dataset);
        let json = serde_json::to_string_pretty(&doc).unwrap();
        let parsed: ModelDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, doc);
        let reloaded = parsed.into_model(model.data().clone()).unwrap();
        for z in 0..=3i64 {
            for x in [-1.0, 0.0, 0.7] {
                let a = model.evaluate(&[z], &[x]).unwrap();
                let b = reloaded.evaluate(&[z], &[x]).unwrap();
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn load_rejects_mismatched_data() {
        let (model, dataset) = small_model();
        let doc = ModelDocument::from_model(&model, dataset);

        let mut stream = RngStream::derive(6, &[8]);
        let other = crate::simharness::simulate(1, 1, 3, 0.4, 39, &mut stream).unwrap();
        assert!(doc.clone().into_model(other).is_err());

        let mut wide = doc.clone();
        wide.dataset.continuous.push("x2".into());
        assert!(wide.into_model(model.data().clone()).is_err());

        let mut ragged = doc.clone();
        ragged.jitter[3] = vec![0.1, 0.1];
        assert!(ragged.into_model(model.data().clone()).is_err());

        let mut out_of_support = doc;
        out_of_support.jitter[0][0] = 0.9;
        assert!(out_of_support.into_model(model.data().clone()).is_err());
    }

    #[test]
    fn document_rejects_tampered_bandwidths() {
        let (model, dataset) = small_model();
        let doc = ModelDocument::from_model(&model, dataset);
        let mut json = serde_json::to_string(&doc).unwrap();
        json = json.replace("\"h\":[0.5]", "\"h\":[-0.5]");
        assert!(serde_json::from_str::<ModelDocument>(&json).is_err());
    }
}

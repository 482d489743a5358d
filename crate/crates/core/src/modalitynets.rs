//! Per-client image/text modality networks, their SGD optimizer, and
//! per-class prototype extraction from final-layer (pre-activation) outputs.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{Activation, AffineLayer, DenseMatrix, LayerGrads};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn tag(self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Text => "text",
        }
    }
}

/// A K-layer affine network with ReLU hidden activations and an Identity
/// final layer (prototypes are pre-activation outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityNet {
    pub layers: Vec<AffineLayer>,
    pub modality: Modality,
}

/// Per-layer parameter gradients for a whole net.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub layers: Vec<(DenseMatrix, Vec<f64>)>,
}

/// Per-layer parameter difference (weight delta, bias delta); the only
/// model-shaped value that crosses the client/server boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDelta {
    pub layers: Vec<(DenseMatrix, Vec<f64>)>,
}

impl NetDelta {
    pub fn zeros_like(net: &ModalityNet) -> Self {
        NetDelta {
            layers: net
                .layers
                .iter()
                .map(|l| {
                    (
                        DenseMatrix::zeros(l.weight.rows(), l.weight.cols()),
                        vec![0.0; l.bias.len()],
                    )
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|(w, b)| {
            w.data().iter().all(|&v| v == 0.0) && b.iter().all(|&v| v == 0.0)
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SgdOptimizer {
    pub learning_rate: f64,
}

impl SgdOptimizer {
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be > 0".to_string()));
        }
        Ok(SgdOptimizer { learning_rate })
    }
}

impl ModalityNet {
    /// Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    pub fn new(
        modality: Modality,
        input_dim: usize,
        hidden_dims: &[usize],
        hash_bits: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || hash_bits == 0 {
            return Err(Error::config("net dims must be >= 1".to_string()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden_dims);
        dims.push(hash_bits);
        let k = dims.len() - 1;
        let mut layers = Vec::with_capacity(k);
        for layer_idx in 0..k {
            let (fan_in, fan_out) = (dims[layer_idx], dims[layer_idx + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weight = DenseMatrix::from_vec(
                fan_out,
                fan_in,
                (0..fan_out * fan_in)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect(),
            )?;
            let bias: Vec<f64> = (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            let activation = if layer_idx + 1 == k {
                Activation::Identity
            } else {
                Activation::ReLU
            };
            layers.push(AffineLayer::new(weight, bias, activation)?);
        }
        Ok(ModalityNet { layers, modality })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn forward(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        let mut x = features.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    /// Forward pass keeping every layer input for backprop.
    pub fn forward_cached(&self, features: &DenseMatrix) -> Result<(DenseMatrix, Vec<DenseMatrix>)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = features.clone();
        for layer in &self.layers {
            inputs.push(x.clone());
            x = layer.forward(&x)?;
        }
        Ok((x, inputs))
    }

    /// Backprop `grad_output` through the net, returning parameter gradients.
    pub fn backward(&self, inputs: &[DenseMatrix], grad_output: &DenseMatrix) -> Result<NetGrads> {
        if inputs.len() != self.layers.len() {
            return Err(Error::shape("cache depth does not match net depth".to_string()));
        }
        let mut upstream = grad_output.clone();
        let mut grads: Vec<(DenseMatrix, Vec<f64>)> = Vec::with_capacity(self.layers.len());
        for (layer, x) in self.layers.iter().zip(inputs).rev() {
            let LayerGrads {
                grad_weight,
                grad_bias,
                grad_input,
            } = layer.backward(x, &upstream)?;
            grads.push((grad_weight, grad_bias));
            upstream = grad_input;
        }
        grads.reverse();
        Ok(NetGrads { layers: grads })
    }

    /// theta <- theta - lr * grad for every parameter.
    pub fn apply_gradients(&mut self, grads: &NetGrads, optimizer: &SgdOptimizer) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::shape("gradient depth does not match net depth".to_string()));
        }
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weight.add_assign_scaled(gw, -optimizer.learning_rate)?;
            for (b, &g) in layer.bias.iter_mut().zip(gb) {
                *b -= optimizer.learning_rate * g;
            }
        }
        Ok(())
    }

    /// Multiply every parameter of layer k by `weights[k]`.
    pub fn scale_layers(&self, weights: &[f64]) -> Result<ModalityNet> {
        if weights.len() != self.layers.len() {
            return Err(Error::shape(format!(
                "{} layer weights for a {}-layer net",
                weights.len(),
                self.layers.len()
            )));
        }
        let mut out = self.clone();
        for (layer, &w) in out.layers.iter_mut().zip(weights) {
            layer.weight = layer.weight.scale(w);
            layer.bias.iter_mut().for_each(|b| *b *= w);
        }
        Ok(out)
    }

    /// self - base, per layer.
    pub fn delta_from(&self, base: &ModalityNet) -> Result<NetDelta> {
        if self.layers.len() != base.layers.len() {
            return Err(Error::shape("net depths differ".to_string()));
        }
        let layers = self
            .layers
            .iter()
            .zip(&base.layers)
            .map(|(a, b)| {
                Ok((
                    a.weight.sub(&b.weight)?,
                    a.bias
                        .iter()
                        .zip(&b.bias)
                        .map(|(x, y)| x - y)
                        .collect::<Vec<f64>>(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NetDelta { layers })
    }

    pub fn apply_delta(&mut self, delta: &NetDelta) -> Result<()> {
        if delta.layers.len() != self.layers.len() {
            return Err(Error::shape("delta depth does not match net depth".to_string()));
        }
        for (layer, (dw, db)) in self.layers.iter_mut().zip(&delta.layers) {
            layer.weight.add_assign_scaled(dw, 1.0)?;
            for (b, &d) in layer.bias.iter_mut().zip(db) {
                *b += d;
            }
        }
        Ok(())
    }

    /// Sample-count weighted average of client nets (FedAvg server step).
    pub fn weighted_average(nets: &[&ModalityNet], weights: &[f64]) -> Result<ModalityNet> {
        if nets.is_empty() || nets.len() != weights.len() {
            return Err(Error::shape("weighted_average: arity mismatch".to_string()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::config("weights must sum to > 0".to_string()));
        }
        let mut out = nets[0].clone();
        for layer in &mut out.layers {
            layer.weight = layer.weight.scale(0.0);
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        for (net, &w) in nets.iter().zip(weights) {
            let frac = w / total;
            for (acc, src) in out.layers.iter_mut().zip(&net.layers) {
                acc.weight.add_assign_scaled(&src.weight, frac)?;
                for (b, &s) in acc.bias.iter_mut().zip(&src.bias) {
                    *b += frac * s;
                }
            }
        }
        Ok(out)
    }
}

/// Per-class means of final-layer outputs (r x c), with a presence mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototypes {
    pub matrix: DenseMatrix,
    pub present: Vec<bool>,
}

impl Prototypes {
    pub fn absent(hash_bits: usize, class_count: usize) -> Self {
        Prototypes {
            matrix: DenseMatrix::zeros(hash_bits, class_count),
            present: vec![false; class_count],
        }
    }

    pub fn class_count(&self) -> usize {
        self.present.len()
    }

    pub fn hash_bits(&self) -> usize {
        self.matrix.rows()
    }
}

/// Column j of P = mean of `outputs` columns whose label is j; absent
/// classes stay zero with presence=false. `outputs` is the net's r x m
/// final-layer output, `labels[j]` the global class of column j.
pub fn prototypes_from_outputs(
    outputs: &DenseMatrix,
    labels: &[usize],
    class_count: usize,
) -> Result<Prototypes> {
    if outputs.cols() != labels.len() {
        return Err(Error::shape(format!(
            "{} output columns vs {} labels",
            outputs.cols(),
            labels.len()
        )));
    }
    let r = outputs.rows();
    let mut matrix = DenseMatrix::zeros(r, class_count);
    let mut counts = vec![0usize; class_count];
    for (j, &label) in labels.iter().enumerate() {
        counts[label] += 1;
        for row in 0..r {
            matrix.set(row, label, matrix.get(row, label) + outputs.get(row, j));
        }
    }
    let mut present = vec![false; class_count];
    for (class, &count) in counts.iter().enumerate() {
        if count > 0 {
            present[class] = true;
            for row in 0..r {
                matrix.set(row, class, matrix.get(row, class) / count as f64);
            }
        }
    }
    Ok(Prototypes { matrix, present })
}

/// Forward the shard through the net, then pool per class.
pub fn compute_local_prototypes(
    net: &ModalityNet,
    features: &DenseMatrix,
    labels: &[usize],
    class_count: usize,
) -> Result<Prototypes> {
    let outputs = net.forward(features)?;
    prototypes_from_outputs(&outputs, labels, class_count)
}

#[derive(Debug, Serialize, Deserialize)]
struct NetManifest {
    modality: Modality,
    depth: usize,
    dims: Vec<usize>,
    activations: Vec<Activation>,
}

/// Checkpoint: JSON manifest plus one FMAT v1 payload per weight/bias.
/// FMAT payloads are f32, so a save/load round trip truncates to f32.
pub fn save_net(net: &ModalityNet, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut dims = vec![net.input_dim()];
    dims.extend(net.layers.iter().map(AffineLayer::out_dim));
    let manifest = NetManifest {
        modality: net.modality,
        depth: net.depth(),
        dims,
        activations: net.layers.iter().map(|l| l.activation).collect(),
    };
    fs::write(
        dir.join(format!("{name}.net.json")),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    for (k, layer) in net.layers.iter().enumerate() {
        crate::datamodel::write_fmat(&dir.join(format!("{name}.w{k}.fmat")), &layer.weight)?;
        let bias = DenseMatrix::from_vec(layer.bias.len(), 1, layer.bias.clone())?;
        crate::datamodel::write_fmat(&dir.join(format!("{name}.b{k}.fmat")), &bias)?;
    }
    Ok(())
}

pub fn load_net(dir: &Path, name: &str) -> Result<ModalityNet> {
    let manifest: NetManifest =
        serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.net.json")))?)?;
    let mut layers = Vec::with_capacity(manifest.depth);
    for k in 0..manifest.depth {
        let weight = crate::datamodel::read_fmat(&dir.join(format!("{name}.w{k}.fmat")))?;
        let bias_mat = crate::datamodel::read_fmat(&dir.join(format!("{name}.b{k}.fmat")))?;
        let bias = bias_mat.data().to_vec();
        if weight.rows() != manifest.dims[k + 1] || weight.cols() != manifest.dims[k] {
            return Err(Error::data(format!("checkpoint {name}: layer {k} dims disagree")));
        }
        layers.push(AffineLayer::new(weight, bias, manifest.activations[k])?);
    }
    Ok(ModalityNet {
        layers,
        modality: manifest.modality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Activation;
    use rand::Rng;

    fn identity_net(dim: usize) -> ModalityNet {
        ModalityNet {
            layers: vec![AffineLayer::new(
                DenseMatrix::identity(dim),
                vec![0.0; dim],
                Activation::Identity,
            )
            .unwrap()],
            modality: Modality::Image,
        }
    }

    #[test]
    fn forward_identity_and_zero() {
        let x = DenseMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(identity_net(3).forward(&x).unwrap(), x);

        let mut zero = identity_net(3);
        zero.layers[0].weight = DenseMatrix::zeros(3, 3);
        assert_eq!(zero.forward(&x).unwrap(), DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn forward_matches_manual_composition() {
        let net = ModalityNet::new(Modality::Text, 5, &[7, 6], 4, 99).unwrap();
        let x = DenseMatrix::from_vec(5, 3, (0..15).map(|i| i as f64 * 0.1 - 0.7).collect())
            .unwrap();
        let manual = net.layers[2]
            .forward(&net.layers[1].forward(&net.layers[0].forward(&x).unwrap()).unwrap())
            .unwrap();
        assert_eq!(net.forward(&x).unwrap(), manual);
    }

    #[test]
    fn final_layer_is_identity_activation() {
        let net = ModalityNet::new(Modality::Image, 4, &[8], 3, 1).unwrap();
        assert_eq!(net.layers.last().unwrap().activation, Activation::Identity);
        assert_eq!(net.output_dim(), 3);
    }

    #[test]
    fn prototypes_single_and_duplicate_samples() {
        let net = identity_net(2);
        let feats = DenseMatrix::from_vec(2, 3, vec![1.0, 1.0, 5.0, 2.0, 2.0, 6.0]).unwrap();
        let protos = compute_local_prototypes(&net, &feats, &[0, 0, 2], 3).unwrap();
        // class 0: duplicates -> the single output; class 2: mean of one
        assert_eq!(protos.matrix.column(0), vec![1.0, 2.0]);
        assert_eq!(protos.matrix.column(2), vec![5.0, 6.0]);
        assert_eq!(protos.present, vec![true, false, true]);
        assert_eq!(protos.matrix.column(1), vec![0.0, 0.0]);
    }

    #[test]
    fn prototypes_match_grouped_mean_oracle_and_permutation_invariance() {
        let net = ModalityNet::new(Modality::Image, 6, &[5], 4, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let m = 20;
        let feats =
            DenseMatrix::from_vec(6, m, (0..6 * m).map(|_| rng.gen::<f64>() - 0.5).collect())
                .unwrap();
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..5)).collect();
        let protos = compute_local_prototypes(&net, &feats, &labels, 5).unwrap();

        // independent accumulation pass
        let out = net.forward(&feats).unwrap();
        for class in 0..5 {
            let members: Vec<usize> = (0..m).filter(|&j| labels[j] == class).collect();
            if members.is_empty() {
                assert!(!protos.present[class]);
                continue;
            }
            for row in 0..4 {
                let mean: f64 =
                    members.iter().map(|&j| out.get(row, j)).sum::<f64>() / members.len() as f64;
                assert!((protos.matrix.get(row, class) - mean).abs() < 1e-12);
            }
        }

        // permutation invariance
        let mut perm: Vec<usize> = (0..m).collect();
        perm.reverse();
        let feats_p = feats.select_columns(&perm);
        let labels_p: Vec<usize> = perm.iter().map(|&j| labels[j]).collect();
        let protos_p = compute_local_prototypes(&net, &feats_p, &labels_p, 5).unwrap();
        for (a, b) in protos.matrix.data().iter().zip(protos_p.matrix.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn prototype_in_convex_hull_of_class_outputs() {
        let net = ModalityNet::new(Modality::Text, 4, &[6], 3, 12).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let m = 15;
        let feats =
            DenseMatrix::from_vec(4, m, (0..4 * m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                .unwrap();
        let labels: Vec<usize> = (0..m).map(|j| j % 3).collect();
        let out = net.forward(&feats).unwrap();
        let protos = prototypes_from_outputs(&out, &labels, 3).unwrap();
        for class in 0..3 {
            let members: Vec<usize> = (0..m).filter(|&j| labels[j] == class).collect();
            for row in 0..3 {
                let vals: Vec<f64> = members.iter().map(|&j| out.get(row, j)).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let p = protos.matrix.get(row, class);
                assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn apply_gradients_arithmetic() {
        let mut net = identity_net(1);
        net.layers[0].weight.set(0, 0, 2.0);
        let grads = NetGrads {
            layers: vec![(
                DenseMatrix::from_vec(1, 1, vec![0.5]).unwrap(),
                vec![0.0],
            )],
        };
        let opt = SgdOptimizer::new(1.0).unwrap();
        net.apply_gradients(&grads, &opt).unwrap();
        assert_eq!(net.layers[0].weight.get(0, 0), 1.5);

        // zero gradients are a fixed point
        let before = net.clone();
        let zero = NetGrads {
            layers: vec![(DenseMatrix::zeros(1, 1), vec![0.0])],
        };
        net.apply_gradients(&zero, &opt).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn sgd_descends_on_convex_probe() {
        // Least squares: minimize ||W x - t||^2 for a single linear layer.
        let mut net = ModalityNet::new(Modality::Image, 3, &[], 2, 77).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = DenseMatrix::from_vec(3, 8, (0..24).map(|_| rng.gen::<f64>() - 0.5).collect())
            .unwrap();
        let t = DenseMatrix::from_vec(2, 8, (0..16).map(|_| rng.gen::<f64>() - 0.5).collect())
            .unwrap();
        let opt = SgdOptimizer::new(0.01).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            let (y, cache) = net.forward_cached(&x).unwrap();
            let resid = y.sub(&t).unwrap();
            let loss = resid.frobenius_sq();
            assert!(loss < prev, "loss must decrease monotonically");
            prev = loss;
            let grads = net.backward(&cache, &resid.scale(2.0)).unwrap();
            net.apply_gradients(&grads, &opt).unwrap();
        }
    }

    #[test]
    fn net_gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..3 {
            let net = ModalityNet::new(Modality::Image, 4, &[5], 3, 100 + trial).unwrap();
            let x = DenseMatrix::from_vec(4, 3, (0..12).map(|_| rng.gen::<f64>() + 0.2).collect())
                .unwrap();
            let up = DenseMatrix::from_vec(3, 3, (0..9).map(|_| rng.gen::<f64>() - 0.5).collect())
                .unwrap();
            let (_, cache) = net.forward_cached(&x).unwrap();
            let grads = net.backward(&cache, &up).unwrap();
            let eps = 1e-5;
            let loss = |n: &ModalityNet| -> f64 {
                let y = n.forward(&x).unwrap();
                y.data().iter().zip(up.data()).map(|(&a, &b)| a * b).sum()
            };
            for li in 0..net.depth() {
                for r in 0..net.layers[li].weight.rows() {
                    for cc in 0..net.layers[li].weight.cols() {
                        let mut np = net.clone();
                        let mut nm = net.clone();
                        let v = net.layers[li].weight.get(r, cc);
                        np.layers[li].weight.set(r, cc, v + eps);
                        nm.layers[li].weight.set(r, cc, v - eps);
                        let num = (loss(&np) - loss(&nm)) / (2.0 * eps);
                        let ana = grads.layers[li].0.get(r, cc);
                        let scale = num.abs().max(ana.abs()).max(1.0);
                        assert!(
                            (num - ana).abs() / scale < 1e-5,
                            "layer {li} weight ({r},{cc}): {num} vs {ana}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn delta_round_trip_and_scale_layers() {
        let base = ModalityNet::new(Modality::Text, 4, &[5], 3, 42).unwrap();
        let moved = ModalityNet::new(Modality::Text, 4, &[5], 3, 43).unwrap();
        let delta = moved.delta_from(&base).unwrap();
        let mut rebuilt = base.clone();
        rebuilt.apply_delta(&delta).unwrap();
        for (a, b) in rebuilt.layers.iter().zip(&moved.layers) {
            for (x, y) in a.weight.data().iter().zip(b.weight.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }

        let ones = base.scale_layers(&[1.0, 1.0]).unwrap();
        assert_eq!(ones, base);
        let zeroed = base.scale_layers(&[0.0, 0.0]).unwrap();
        assert!(zeroed.layers.iter().all(|l| l.weight.frobenius_sq() == 0.0));
    }

    #[test]
    fn weighted_average_matches_oracle() {
        let nets: Vec<ModalityNet> = (0..3)
            .map(|s| ModalityNet::new(Modality::Image, 3, &[4], 2, s).unwrap())
            .collect();
        let refs: Vec<&ModalityNet> = nets.iter().collect();
        let weights = [2.0, 3.0, 5.0];
        let avg = ModalityNet::weighted_average(&refs, &weights).unwrap();
        for li in 0..avg.depth() {
            for idx in 0..avg.layers[li].weight.data().len() {
                let oracle: f64 = nets
                    .iter()
                    .zip(&weights)
                    .map(|(n, &w)| w * n.layers[li].weight.data()[idx])
                    .sum::<f64>()
                    / 10.0;
                assert!((avg.layers[li].weight.data()[idx] - oracle).abs() < 1e-12);
            }
        }

        // identical clients: average == each client
        let same: Vec<&ModalityNet> = vec![&nets[0], &nets[0], &nets[0]];
        let avg_same = ModalityNet::weighted_average(&same, &[1.0, 2.0, 7.0]).unwrap();
        for (a, b) in avg_same.layers.iter().zip(&nets[0].layers) {
            for (x, y) in a.weight.data().iter().zip(b.weight.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = ModalityNet::new(Modality::Image, 4, &[6, 5], 3, 7).unwrap();
        save_net(&net, dir.path(), "image").unwrap();
        let loaded = load_net(dir.path(), "image").unwrap();
        assert_eq!(loaded.depth(), net.depth());
        assert_eq!(loaded.modality, net.modality);
        for (a, b) in loaded.layers.iter().zip(&net.layers) {
            for (x, y) in a.weight.data().iter().zip(b.weight.data()) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
    }
}

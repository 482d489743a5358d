//! Round orchestration: server-side hypernetworks producing per-layer
//! weights, client LocalUpdate, prototype aggregation, and the baseline
//! modes (FedAvg, local-only, centralized).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{ClientShard, Dataset};
use crate::error::{Error, Result};
use crate::hashopt::{
    total_loss, update_b, update_y_dcc, AuxHashLoss, HashState, LossWeights, PairwiseAuxLoss,
};
use crate::modalitynets::{
    compute_local_prototypes, Modality, ModalityNet, NetDelta, Prototypes, SgdOptimizer,
};
use crate::numkernel::{Activation, AffineLayer, DenseMatrix};

/// splitmix64-style seed derivation; every RNG stream in a run is derived
/// from the master seed and a tag path, so determinism is independent of
/// scheduling.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut z = master;
    for &t in tags {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(t.wrapping_mul(0xbf58476d1ce4e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}

/// Training method selector; the variants map onto switch combinations of
/// the same round loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plfedcmh,
    Pfedcmh,
    Lfedcmh,
    Fedavg,
    LocalOnly,
    Centralized,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "plfedcmh" => Ok(Method::Plfedcmh),
            "pfedcmh" => Ok(Method::Pfedcmh),
            "lfedcmh" => Ok(Method::Lfedcmh),
            "fedavg" => Ok(Method::Fedavg),
            "local_only" | "local-only" => Ok(Method::LocalOnly),
            "centralized" => Ok(Method::Centralized),
            other => Err(Error::config(format!("unknown method '{other}'"))),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Method::Plfedcmh => "plfedcmh",
            Method::Pfedcmh => "pfedcmh",
            Method::Lfedcmh => "lfedcmh",
            Method::Fedavg => "fedavg",
            Method::LocalOnly => "local_only",
            Method::Centralized => "centralized",
        }
    }

    pub fn uses_layered_weights(self) -> bool {
        matches!(self, Method::Plfedcmh | Method::Lfedcmh)
    }

    pub fn uses_prototypes(self) -> bool {
        matches!(self, Method::Plfedcmh | Method::Pfedcmh)
    }

    pub fn uses_fedavg_aggregation(self) -> bool {
        matches!(self, Method::Fedavg)
    }
}

/// Knobs of one federated training run (everything except data and method).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FederationConfig {
    pub hash_bits: usize,
    pub hidden_dims: Vec<usize>,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub net_learning_rate: f64,
    pub hn_learning_rate: f64,
    pub hn_embedding_dim: usize,
    pub hn_hidden_dim: usize,
    pub dcc_sweeps: usize,
    pub weights: LossWeights,
    /// Recompute local prototypes after every batch instead of per epoch.
    pub prototypes_per_batch: bool,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            hash_bits: 16,
            hidden_dims: vec![128, 128],
            local_epochs: 2,
            batch_size: 32,
            net_learning_rate: 1e-4,
            hn_learning_rate: 1e-3,
            hn_embedding_dim: 32,
            hn_hidden_dim: 64,
            dcc_sweeps: 5,
            weights: LossWeights::default(),
            prototypes_per_batch: false,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hash_bits == 0 || self.batch_size == 0 || self.hn_embedding_dim == 0 {
            return Err(Error::config("counts must be >= 1".to_string()));
        }
        if !(self.net_learning_rate > 0.0) || !(self.hn_learning_rate > 0.0) {
            return Err(Error::config("learning rates must be > 0".to_string()));
        }
        self.weights.validate()
    }
}

/// Server-side hypernetwork for one client/modality pair: a learnable
/// embedding plus a 4-layer ReLU MLP emitting one scalar weight per
/// modality-net layer. The final layer starts at zero weights with bias 1,
/// so a fresh hypernetwork emits exactly all-ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypernetwork {
    pub embedding: DenseMatrix,
    pub layers: Vec<AffineLayer>,
}

impl Hypernetwork {
    pub fn new(embedding_dim: usize, hidden_dim: usize, out_k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = DenseMatrix::from_vec(
            embedding_dim,
            1,
            (0..embedding_dim).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )?;
        let dims = [embedding_dim, hidden_dim, hidden_dim, hidden_dim, out_k];
        let mut layers = Vec::with_capacity(4);
        for li in 0..4 {
            let (fan_in, fan_out) = (dims[li], dims[li + 1]);
            let last = li == 3;
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weight = if last {
                DenseMatrix::zeros(fan_out, fan_in)
            } else {
                DenseMatrix::from_vec(
                    fan_out,
                    fan_in,
                    (0..fan_out * fan_in)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect(),
                )?
            };
            let bias = if last {
                vec![1.0; fan_out]
            } else {
                (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect()
            };
            let activation = if last { Activation::Identity } else { Activation::ReLU };
            layers.push(AffineLayer::new(weight, bias, activation)?);
        }
        Ok(Hypernetwork { embedding, layers })
    }

    pub fn out_k(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn forward(&self) -> Result<Vec<f64>> {
        let mut x = self.embedding.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x.data().to_vec())
    }

    /// One SGD step on (s, zeta) against the surrogate objective
    /// <theta_bar(s, zeta), -delta>, using -delta as the estimate of the
    /// loss gradient wrt the dispatched parameters. Since
    /// theta_bar_k = w_k * theta_k, the per-layer weight gradient is
    /// -<theta_k, delta_k>.
    pub fn update(&mut self, theta: &ModalityNet, delta: &NetDelta, lr: f64) -> Result<()> {
        if theta.depth() != self.out_k() || delta.layers.len() != theta.depth() {
            return Err(Error::shape("hypernetwork K does not match net depth".to_string()));
        }
        let mut grad_w = DenseMatrix::zeros(self.out_k(), 1);
        for (k, (layer, (dw, db))) in theta.layers.iter().zip(&delta.layers).enumerate() {
            let mut inner: f64 = layer
                .weight
                .data()
                .iter()
                .zip(dw.data())
                .map(|(&t, &d)| t * d)
                .sum();
            inner += layer.bias.iter().zip(db).map(|(&t, &d)| t * d).sum::<f64>();
            grad_w.set(k, 0, -inner);
        }
        // Backprop grad_w through the MLP down to the embedding.
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = self.embedding.clone();
        for layer in &self.layers {
            inputs.push(x.clone());
            x = layer.forward(&x)?;
        }
        let mut upstream = grad_w;
        let mut param_grads: Vec<(DenseMatrix, Vec<f64>)> = Vec::with_capacity(self.layers.len());
        for (layer, input) in self.layers.iter().zip(&inputs).rev() {
            let g = layer.backward(input, &upstream)?;
            param_grads.push((g.grad_weight, g.grad_bias));
            upstream = g.grad_input;
        }
        param_grads.reverse();
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&param_grads) {
            layer.weight.add_assign_scaled(gw, -lr)?;
            for (b, &g) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
        self.embedding.add_assign_scaled(&upstream, -lr)?;
        Ok(())
    }
}

/// Multiply every parameter of layer k by `weights[k]`.
pub fn apply_layered_weights(net: &ModalityNet, weights: &[f64]) -> Result<ModalityNet> {
    net.scale_layers(weights)
}

/// Unweighted per-class mean over the clients that possess the class.
pub fn aggregate_prototypes(locals: &[&Prototypes]) -> Result<Prototypes> {
    let first = locals
        .first()
        .ok_or_else(|| Error::shape("aggregate_prototypes: empty input".to_string()))?;
    let (r, c) = (first.hash_bits(), first.class_count());
    if locals.iter().any(|p| p.hash_bits() != r || p.class_count() != c) {
        return Err(Error::shape("prototype shapes differ across clients".to_string()));
    }
    let mut matrix = DenseMatrix::zeros(r, c);
    let mut present = vec![false; c];
    for class in 0..c {
        let holders: Vec<&&Prototypes> = locals.iter().filter(|p| p.present[class]).collect();
        if holders.is_empty() {
            continue;
        }
        present[class] = true;
        for row in 0..r {
            let mean: f64 = holders.iter().map(|p| p.matrix.get(row, class)).sum::<f64>()
                / holders.len() as f64;
            matrix.set(row, class, mean);
        }
    }
    Ok(Prototypes { matrix, present })
}

/// One client: its shard's data plus everything it trains locally. Sample
/// features and labels never leave this struct.
#[derive(Debug, Clone)]
pub struct ClientHandle {
    pub id: usize,
    features_x: DenseMatrix,
    features_t: DenseMatrix,
    labels: Vec<usize>,
    label_matrix: DenseMatrix,
    class_count: usize,
    pub net_x: ModalityNet,
    pub net_t: ModalityNet,
    pub hash: HashState,
    pub protos_x: Prototypes,
    pub protos_t: Prototypes,
}

/// What a client hands back to the server after LocalUpdate.
#[derive(Debug, Clone)]
pub struct LocalUpdateResult {
    pub delta_x: NetDelta,
    pub delta_t: NetDelta,
    pub protos_x: Prototypes,
    pub protos_t: Prototypes,
    pub epoch_losses: Vec<f64>,
}

impl ClientHandle {
    pub fn new(
        id: usize,
        dataset: &Dataset,
        shard: &ClientShard,
        config: &FederationConfig,
        seed: u64,
    ) -> Result<Self> {
        let features_x = dataset.image_features.select_columns(&shard.sample_indices);
        let features_t = dataset.text_features.select_columns(&shard.sample_indices);
        let labels: Vec<usize> = shard.labels(dataset).collect();
        let c = dataset.class_count;
        let mut label_matrix = DenseMatrix::zeros(labels.len(), c);
        for (row, &lab) in labels.iter().enumerate() {
            label_matrix.set(row, lab, 1.0);
        }
        let net_x = ModalityNet::new(
            Modality::Image,
            dataset.image_dim(),
            &config.hidden_dims,
            config.hash_bits,
            derive_seed(seed, &[id as u64, 0]),
        )?;
        let net_t = ModalityNet::new(
            Modality::Text,
            dataset.text_dim(),
            &config.hidden_dims,
            config.hash_bits,
            derive_seed(seed, &[id as u64, 1]),
        )?;
        Ok(ClientHandle {
            id,
            features_x,
            features_t,
            labels,
            label_matrix,
            class_count: c,
            net_x,
            net_t,
            hash: HashState::new(config.hash_bits, shard.len(), c),
            protos_x: Prototypes::absent(config.hash_bits, c),
            protos_t: Prototypes::absent(config.hash_bits, c),
        })
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    /// LocalUpdate: install the dispatched parameters, run the local
    /// epochs, refresh B/Y/prototypes, and return the parameter deltas plus
    /// the final local prototypes.
    pub fn local_update(
        &mut self,
        theta_bar_x: ModalityNet,
        theta_bar_t: ModalityNet,
        global_x: &Prototypes,
        global_t: &Prototypes,
        config: &FederationConfig,
        aux: &dyn AuxHashLoss,
        seed: u64,
    ) -> Result<LocalUpdateResult> {
        let start_x = theta_bar_x.clone();
        let start_t = theta_bar_t.clone();
        self.net_x = theta_bar_x;
        self.net_t = theta_bar_t;
        let m = self.sample_count();
        if m == 0 {
            return Ok(LocalUpdateResult {
                delta_x: NetDelta::zeros_like(&self.net_x),
                delta_t: NetDelta::zeros_like(&self.net_t),
                protos_x: self.protos_x.clone(),
                protos_t: self.protos_t.clone(),
                epoch_losses: Vec::new(),
            });
        }
        let optimizer = SgdOptimizer::new(config.net_learning_rate)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut epoch_losses = Vec::with_capacity(config.local_epochs);
        for _epoch in 0..config.local_epochs {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            let mut batches = 0usize;
            for batch in order.chunks(config.batch_size) {
                let fx = self.features_x.select_columns(batch);
                let ft = self.features_t.select_columns(batch);
                let (f, cache_x) = self.net_x.forward_cached(&fx)?;
                let (g, cache_t) = self.net_t.forward_cached(&ft)?;
                let b = self.hash.codes.select_columns(batch);
                let batch_labels: Vec<usize> = batch.iter().map(|&j| self.labels[j]).collect();
                let l = {
                    let mut l = DenseMatrix::zeros(batch.len(), self.class_count);
                    for (row, &lab) in batch_labels.iter().enumerate() {
                        l.set(row, lab, 1.0);
                    }
                    l
                };
                let composite = total_loss(
                    &f,
                    &g,
                    &self.hash.class_codes,
                    &b,
                    &l,
                    &batch_labels,
                    global_x,
                    global_t,
                    &config.weights,
                    aux,
                )?;
                loss_sum += composite.total;
                batches += 1;
                let grads_x = self.net_x.backward(&cache_x, &composite.grad_f)?;
                let grads_t = self.net_t.backward(&cache_t, &composite.grad_g)?;
                self.net_x.apply_gradients(&grads_x, &optimizer)?;
                self.net_t.apply_gradients(&grads_t, &optimizer)?;
                if config.prototypes_per_batch {
                    self.refresh_prototypes()?;
                }
            }
            epoch_losses.push(loss_sum / batches.max(1) as f64);
            // end of epoch: full-shard discrete updates
            let f_full = self.net_x.forward(&self.features_x)?;
            let g_full = self.net_t.forward(&self.features_t)?;
            self.hash.codes = update_b(&f_full, &g_full)?;
            self.hash.class_codes = update_y_dcc(
                &f_full,
                &g_full,
                &self.label_matrix,
                &self.hash.class_codes,
                config.dcc_sweeps,
            )?;
            self.refresh_prototypes()?;
        }
        if config.local_epochs == 0 {
            self.refresh_prototypes()?;
        }
        Ok(LocalUpdateResult {
            delta_x: self.net_x.delta_from(&start_x)?,
            delta_t: self.net_t.delta_from(&start_t)?,
            protos_x: self.protos_x.clone(),
            protos_t: self.protos_t.clone(),
            epoch_losses,
        })
    }

    fn refresh_prototypes(&mut self) -> Result<()> {
        self.protos_x =
            compute_local_prototypes(&self.net_x, &self.features_x, &self.labels, self.class_count)?;
        self.protos_t =
            compute_local_prototypes(&self.net_t, &self.features_t, &self.labels, self.class_count)?;
        Ok(())
    }
}

/// Everything the server holds between rounds: hypernetworks and global
/// prototypes. Deliberately free of any sample-level data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerState {
    pub hns_x: Vec<Hypernetwork>,
    pub hns_t: Vec<Hypernetwork>,
    pub global_protos_x: Option<Prototypes>,
    pub global_protos_t: Option<Prototypes>,
}

/// Per-round bookkeeping written into the run manifest: client loss traces,
/// delta norms, prototype norms. Like [`ServerState`], carries no
/// sample-level data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub client_losses: Vec<Vec<f64>>,
    pub delta_norms: Vec<f64>,
    pub prototype_norm_x: f64,
    pub prototype_norm_t: f64,
    pub skipped_clients: Vec<usize>,
}

/// One federation: the clients, the server state, and the method switches.
pub struct Federation {
    pub method: Method,
    pub config: FederationConfig,
    pub clients: Vec<ClientHandle>,
    pub server: ServerState,
    pub master_seed: u64,
    aux: Box<dyn AuxHashLoss>,
}

impl Federation {
    pub fn new(
        method: Method,
        dataset: &Dataset,
        shards: &[ClientShard],
        config: FederationConfig,
        master_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let shards: Vec<ClientShard> = if method == Method::Centralized {
            vec![ClientShard {
                client_id: 0,
                sample_indices: (0..dataset.sample_count()).collect(),
            }]
        } else {
            shards.to_vec()
        };
        let clients = shards
            .iter()
            .enumerate()
            .map(|(i, shard)| ClientHandle::new(i, dataset, shard, &config, master_seed))
            .collect::<Result<Vec<_>>>()?;
        let k = config.hidden_dims.len() + 1;
        let server = ServerState {
            hns_x: (0..clients.len())
                .map(|i| {
                    Hypernetwork::new(
                        config.hn_embedding_dim,
                        config.hn_hidden_dim,
                        k,
                        derive_seed(master_seed, &[0x48, i as u64, 0]),
                    )
                })
                .collect::<Result<Vec<_>>>()?,
            hns_t: (0..clients.len())
                .map(|i| {
                    Hypernetwork::new(
                        config.hn_embedding_dim,
                        config.hn_hidden_dim,
                        k,
                        derive_seed(master_seed, &[0x48, i as u64, 1]),
                    )
                })
                .collect::<Result<Vec<_>>>()?,
            global_protos_x: None,
            global_protos_t: None,
        };
        Ok(Federation {
            method,
            config,
            clients,
            server,
            master_seed,
            aux: Box::new(PairwiseAuxLoss),
        })
    }

    /// Swap in a different auxiliary hashing term.
    pub fn with_aux(mut self, aux: Box<dyn AuxHashLoss>) -> Self {
        self.aux = aux;
        self
    }

    fn absent_protos(&self, class_count: usize) -> Prototypes {
        Prototypes::absent(self.config.hash_bits, class_count)
    }

    /// One communication round. Clients run logically in parallel; the
    /// server phase is sequential in ascending client id.
    pub fn run_round(&mut self, round: usize) -> Result<RoundSummary> {
        let class_count = self
            .clients
            .first()
            .map(|c| c.class_count)
            .ok_or_else(|| Error::config("federation has no clients".to_string()))?;
        let use_protos = self.method.uses_prototypes();
        let absent = self.absent_protos(class_count);
        let global_x = if use_protos {
            self.server.global_protos_x.clone().unwrap_or_else(|| absent.clone())
        } else {
            absent.clone()
        };
        let global_t = if use_protos {
            self.server.global_protos_t.clone().unwrap_or_else(|| absent.clone())
        } else {
            absent
        };

        let use_hn = self.method.uses_layered_weights();
        let config = self.config.clone();
        let master_seed = self.master_seed;
        let aux = &*self.aux;
        let hns_x = &self.server.hns_x;
        let hns_t = &self.server.hns_t;

        // Snapshot the canonical parameters theta^(r); local_update installs
        // theta_bar into the client, but the protocol applies the delta to
        // the unscaled parameters.
        let thetas: Vec<(ModalityNet, ModalityNet)> = self
            .clients
            .iter()
            .map(|c| (c.net_x.clone(), c.net_t.clone()))
            .collect();

        // Client phase: each client owns its state exclusively, so rayon
        // mutation is race-free and results land in client-id order.
        let results: Vec<Result<LocalUpdateResult>> = self
            .clients
            .par_iter_mut()
            .map(|client| {
                let i = client.id;
                let (theta_bar_x, theta_bar_t) = if use_hn {
                    let wx = hns_x[i].forward()?;
                    let wt = hns_t[i].forward()?;
                    (
                        apply_layered_weights(&client.net_x, &wx)?,
                        apply_layered_weights(&client.net_t, &wt)?,
                    )
                } else {
                    (client.net_x.clone(), client.net_t.clone())
                };
                let seed = derive_seed(master_seed, &[0x4c, round as u64, i as u64]);
                client.local_update(theta_bar_x, theta_bar_t, &global_x, &global_t, &config, aux, seed)
            })
            .collect();
        let results: Vec<LocalUpdateResult> = results.into_iter().collect::<Result<Vec<_>>>()?;

        // Server phase, ascending client id.
        let mut skipped = Vec::new();
        for (i, result) in results.iter().enumerate() {
            if self.clients[i].sample_count() == 0 {
                skipped.push(i);
                continue;
            }
            let (theta_x, theta_t) = &thetas[i];
            if use_hn {
                self.server.hns_x[i].update(theta_x, &result.delta_x, self.config.hn_learning_rate)?;
                self.server.hns_t[i].update(theta_t, &result.delta_t, self.config.hn_learning_rate)?;
            }
            // theta^(r+1) = theta^(r) + delta; the delta was trained from
            // theta_bar but is applied to the canonical parameters
            let mut nx = theta_x.clone();
            nx.apply_delta(&result.delta_x)?;
            let mut nt = theta_t.clone();
            nt.apply_delta(&result.delta_t)?;
            self.clients[i].net_x = nx;
            self.clients[i].net_t = nt;
        }

        if self.method.uses_fedavg_aggregation() {
            let weights: Vec<f64> = self
                .clients
                .iter()
                .map(|c| c.sample_count() as f64)
                .collect();
            let avg_x = ModalityNet::weighted_average(
                &self.clients.iter().map(|c| &c.net_x).collect::<Vec<_>>(),
                &weights,
            )?;
            let avg_t = ModalityNet::weighted_average(
                &self.clients.iter().map(|c| &c.net_t).collect::<Vec<_>>(),
                &weights,
            )?;
            for client in &mut self.clients {
                client.net_x = avg_x.clone();
                client.net_t = avg_t.clone();
            }
        }

        if use_protos {
            let locals_x: Vec<&Prototypes> = results
                .iter()
                .enumerate()
                .filter(|(i, _)| self.clients[*i].sample_count() > 0)
                .map(|(_, r)| &r.protos_x)
                .collect();
            let locals_t: Vec<&Prototypes> = results
                .iter()
                .enumerate()
                .filter(|(i, _)| self.clients[*i].sample_count() > 0)
                .map(|(_, r)| &r.protos_t)
                .collect();
            if !locals_x.is_empty() {
                self.server.global_protos_x = Some(aggregate_prototypes(&locals_x)?);
                self.server.global_protos_t = Some(aggregate_prototypes(&locals_t)?);
            }
        }

        Ok(RoundSummary {
            round,
            client_losses: results.iter().map(|r| r.epoch_losses.clone()).collect(),
            delta_norms: results
                .iter()
                .map(|r| {
                    r.delta_x
                        .layers
                        .iter()
                        .chain(&r.delta_t.layers)
                        .map(|(w, b)| w.frobenius_sq() + b.iter().map(|v| v * v).sum::<f64>())
                        .sum::<f64>()
                        .sqrt()
                })
                .collect(),
            prototype_norm_x: self
                .server
                .global_protos_x
                .as_ref()
                .map_or(0.0, |p| p.matrix.frobenius_sq().sqrt()),
            prototype_norm_t: self
                .server
                .global_protos_t
                .as_ref()
                .map_or(0.0, |p| p.matrix.frobenius_sq().sqrt()),
            skipped_clients: skipped,
        })
    }

    pub fn run(&mut self, rounds: usize) -> Result<Vec<RoundSummary>> {
        (1..=rounds).map(|r| self.run_round(r)).collect()
    }

    /// The personalized model a client would deploy: its canonical
    /// parameters rescaled by the current layered weights (identity when
    /// the method has no hypernetworks).
    pub fn personalized_nets(&self, client_id: usize) -> Result<(ModalityNet, ModalityNet)> {
        let client = self
            .clients
            .get(client_id)
            .ok_or_else(|| Error::config(format!("no client {client_id}")))?;
        if self.method.uses_layered_weights() {
            let wx = self.server.hns_x[client_id].forward()?;
            let wt = self.server.hns_t[client_id].forward()?;
            Ok((
                apply_layered_weights(&client.net_x, &wx)?,
                apply_layered_weights(&client.net_t, &wt)?,
            ))
        } else {
            Ok((client.net_x.clone(), client.net_t.clone()))
        }
    }
}

//! Paired image/text feature datasets, synthetic generation, feature-file
//! ingestion, and the three federated partition schemes (IID, nonIID-equal,
//! nonIID-unequal).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::DenseMatrix;

/// Paired modality features with single-class labels. Columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub image_features: DenseMatrix,
    pub text_features: DenseMatrix,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(
        image_features: DenseMatrix,
        text_features: DenseMatrix,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let m = labels.len();
        if image_features.cols() != m || text_features.cols() != m {
            return Err(Error::data(format!(
                "feature columns ({} image, {} text) must equal label count {}",
                image_features.cols(),
                text_features.cols(),
                m
            )));
        }
        let mut seen = vec![false; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(Error::data(format!(
                    "label {l} out of range [0, {class_count})"
                )));
            }
            seen[l] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::data("every class must have at least one sample".to_string()));
        }
        Ok(Dataset {
            image_features,
            text_features,
            labels,
            class_count,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    pub fn image_dim(&self) -> usize {
        self.image_features.rows()
    }

    pub fn text_dim(&self) -> usize {
        self.text_features.rows()
    }
}

/// One client's slice of a parent [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientShard {
    pub client_id: usize,
    pub sample_indices: Vec<usize>,
}

impl ClientShard {
    pub fn len(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_indices.is_empty()
    }

    /// Labels of the shard's samples, in shard order.
    pub fn labels<'a>(&'a self, dataset: &'a Dataset) -> impl Iterator<Item = usize> + 'a {
        self.sample_indices.iter().map(move |&i| dataset.labels[i])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionExport {
    pub clients: Vec<ClientJson>,
    pub seed: u64,
    pub scheme: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientJson {
    pub id: usize,
    pub indices: Vec<usize>,
}

pub fn export_partition(shards: &[ClientShard], seed: u64, scheme: &str) -> PartitionExport {
    PartitionExport {
        clients: shards
            .iter()
            .map(|s| ClientJson {
                id: s.client_id,
                indices: s.sample_indices.clone(),
            })
            .collect(),
        seed,
        scheme: scheme.to_string(),
    }
}

pub fn import_partition(export: &PartitionExport) -> Vec<ClientShard> {
    export
        .clients
        .iter()
        .map(|c| ClientShard {
            client_id: c.id,
            sample_indices: c.indices.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub samples_per_class: usize,
    pub image_dim: usize,
    pub text_dim: usize,
    pub cluster_spread: f64,
}

/// Per class, a seeded unit-norm center per modality; samples are the center
/// plus Gaussian noise of scale `cluster_spread`. Both modalities of a sample
/// share the class.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    if spec.class_count == 0
        || spec.samples_per_class == 0
        || spec.image_dim == 0
        || spec.text_dim == 0
    {
        return Err(Error::config("synthetic counts must be >= 1".to_string()));
    }
    if !(spec.cluster_spread > 0.0) {
        return Err(Error::config("cluster_spread must be > 0".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers_x = random_unit_centers(&mut rng, spec.class_count, spec.image_dim);
    let centers_t = random_unit_centers(&mut rng, spec.class_count, spec.text_dim);

    let m = spec.class_count * spec.samples_per_class;
    let mut image = DenseMatrix::zeros(spec.image_dim, m);
    let mut text = DenseMatrix::zeros(spec.text_dim, m);
    let mut labels = Vec::with_capacity(m);
    let mut col = 0;
    for class in 0..spec.class_count {
        for _ in 0..spec.samples_per_class {
            for r in 0..spec.image_dim {
                image.set(r, col, centers_x[class][r] + spec.cluster_spread * gauss(&mut rng));
            }
            for r in 0..spec.text_dim {
                text.set(r, col, centers_t[class][r] + spec.cluster_spread * gauss(&mut rng));
            }
            labels.push(class);
            col += 1;
        }
    }
    Dataset::new(image, text, labels, spec.class_count)
}

fn random_unit_centers(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim).map(|_| gauss(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect()
}

/// Box-Muller, kept explicit so the byte stream consumed from the RNG is
/// pinned by this crate rather than a dependency's internals.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

const FMAT_MAGIC: &[u8; 8] = b"FMAT0001";
const FLBL_MAGIC: &[u8; 8] = b"FLBL0001";

/// FMAT v1: magic, u64-le rows, u64-le cols, then rows*cols f32-le row-major.
pub fn write_fmat(path: &Path, matrix: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FMAT_MAGIC)?;
    w.write_all(&(matrix.rows() as u64).to_le_bytes())?;
    w.write_all(&(matrix.cols() as u64).to_le_bytes())?;
    for &v in matrix.data() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fmat(path: &Path) -> Result<DenseMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::data(format!("{}: truncated header", path.display())))?;
    if &magic != FMAT_MAGIC {
        return Err(Error::data(format!("{}: bad FMAT magic", path.display())));
    }
    let rows = read_u64(&mut r, path)? as usize;
    let cols = read_u64(&mut r, path)? as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::data(format!("{}: malformed header", path.display())))?;
    let mut payload = vec![0u8; count * 4];
    r.read_exact(&mut payload)
        .map_err(|_| Error::data(format!("{}: payload length mismatch", path.display())))?;
    if r.bytes().next().is_some() {
        return Err(Error::data(format!("{}: trailing bytes", path.display())));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    DenseMatrix::from_vec(rows, cols, data).map_err(|e| Error::data(e.to_string()))
}

/// Labels file: magic, u64-le count, then count u32-le class ids.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FLBL_MAGIC)?;
    w.write_all(&(labels.len() as u64).to_le_bytes())?;
    for &l in labels {
        w.write_all(&(l as u32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::data(format!("{}: truncated header", path.display())))?;
    if &magic != FLBL_MAGIC {
        return Err(Error::data(format!("{}: bad FLBL magic", path.display())));
    }
    let count = read_u64(&mut r, path)? as usize;
    let mut payload = vec![0u8; count * 4];
    r.read_exact(&mut payload)
        .map_err(|_| Error::data(format!("{}: label payload length mismatch", path.display())))?;
    Ok(payload
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
        .collect())
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::data(format!("{}: truncated header", path.display())))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn save_features(
    dataset: &Dataset,
    path_images: &Path,
    path_texts: &Path,
    path_labels: &Path,
) -> Result<()> {
    write_fmat(path_images, &dataset.image_features)?;
    write_fmat(path_texts, &dataset.text_features)?;
    write_labels(path_labels, &dataset.labels)
}

pub fn load_features(path_images: &Path, path_texts: &Path, path_labels: &Path) -> Result<Dataset> {
    let image = read_fmat(path_images)?;
    let text = read_fmat(path_texts)?;
    let labels = read_labels(path_labels)?;
    if labels.is_empty() {
        return Err(Error::data("empty label file".to_string()));
    }
    let class_count = labels.iter().max().unwrap() + 1;
    Dataset::new(image, text, labels, class_count)
}

/// Seeded shuffle, then contiguous near-even slices (sizes differ by <= 1).
pub fn partition_iid(dataset: &Dataset, n_clients: usize, seed: u64) -> Result<Vec<ClientShard>> {
    let m = dataset.sample_count();
    if n_clients == 0 || n_clients > m {
        return Err(Error::config(format!(
            "n_clients {n_clients} must be in [1, {m}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..m).collect();
    indices.shuffle(&mut rng);
    let base = m / n_clients;
    let extra = m % n_clients;
    let mut shards = Vec::with_capacity(n_clients);
    let mut cursor = 0;
    for client_id in 0..n_clients {
        let size = base + usize::from(client_id < extra);
        shards.push(ClientShard {
            client_id,
            sample_indices: indices[cursor..cursor + size].to_vec(),
        });
        cursor += size;
    }
    Ok(shards)
}

/// Every client gets exactly `classes_per_client` classes (seeded draw,
/// possibly overlapping across clients) and exactly `samples_per_class`
/// samples of each, drawn without replacement from a shared per-class pool
/// so shards stay disjoint.
pub fn partition_noniid_equal(
    dataset: &Dataset,
    n_clients: usize,
    classes_per_client: usize,
    samples_per_class: usize,
    seed: u64,
) -> Result<Vec<ClientShard>> {
    let c = dataset.class_count;
    if n_clients == 0 {
        return Err(Error::config("n_clients must be >= 1".to_string()));
    }
    if classes_per_client == 0 || classes_per_client > c {
        return Err(Error::config(format!(
            "classes_per_client {classes_per_client} must be in [1, {c}]"
        )));
    }
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in dataset.labels.iter().enumerate() {
        pools[l].push(i);
    }
    let min_class = pools.iter().map(Vec::len).min().unwrap_or(0);
    if samples_per_class == 0 || samples_per_class > min_class {
        return Err(Error::config(format!(
            "samples_per_class {samples_per_class} must be in [1, {min_class}] (smallest class)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let mut shards = Vec::with_capacity(n_clients);
    for client_id in 0..n_clients {
        let mut classes: Vec<usize> = (0..c).collect();
        classes.shuffle(&mut rng);
        classes.truncate(classes_per_client);
        classes.sort_unstable();
        let mut sample_indices = Vec::with_capacity(classes_per_client * samples_per_class);
        for &class in &classes {
            let pool = &mut pools[class];
            if pool.len() < samples_per_class {
                return Err(Error::config(format!(
                    "class {class} exhausted: {} samples left, client {client_id} needs {samples_per_class}",
                    pool.len()
                )));
            }
            sample_indices.extend(pool.drain(pool.len() - samples_per_class..));
        }
        shards.push(ClientShard {
            client_id,
            sample_indices,
        });
    }
    Ok(shards)
}

/// Per class, sample counts split across clients by a seeded
/// Dirichlet(concentration) draw; rounding by largest remainder so the full
/// dataset is covered exactly once.
pub fn partition_noniid_unequal(
    dataset: &Dataset,
    n_clients: usize,
    concentration: f64,
    seed: u64,
) -> Result<Vec<ClientShard>> {
    if n_clients < 2 {
        return Err(Error::config("n_clients must be >= 2".to_string()));
    }
    if !(concentration > 0.0) {
        return Err(Error::config("concentration must be > 0".to_string()));
    }
    let c = dataset.class_count;
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in dataset.labels.iter().enumerate() {
        pools[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::config(format!("bad concentration: {e}")))?;
    let mut shards: Vec<ClientShard> = (0..n_clients)
        .map(|client_id| ClientShard {
            client_id,
            sample_indices: Vec::new(),
        })
        .collect();
    for pool in &mut pools {
        pool.shuffle(&mut rng);
        let n = pool.len();
        // Dirichlet draw via normalized gammas.
        let mut weights: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // All gammas underflowed (tiny concentration); fall back to a
            // single-client assignment chosen uniformly.
            weights = vec![0.0; n_clients];
            weights[rng.gen_range(0..n_clients)] = 1.0;
        } else {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        // Largest-remainder rounding of n * weights.
        let raw: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|&x| x.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..n_clients).collect();
        order.sort_by(|&a, &b| {
            let fa = raw[a] - raw[a].floor();
            let fb = raw[b] - raw[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for k in 0..n - assigned {
            counts[order[k % n_clients]] += 1;
        }
        let mut cursor = 0;
        for (client_id, &count) in counts.iter().enumerate() {
            shards[client_id]
                .sample_indices
                .extend_from_slice(&pool[cursor..cursor + count]);
            cursor += count;
        }
    }
    Ok(shards)
}

/// One-hot label matrix L (m x c) for a shard, row order = shard order.
pub fn one_hot_labels(dataset: &Dataset, shard: &ClientShard) -> DenseMatrix {
    let mut l = DenseMatrix::zeros(shard.len(), dataset.class_count);
    for (row, label) in shard.labels(dataset).enumerate() {
        l.set(row, label, 1.0);
    }
    l
}

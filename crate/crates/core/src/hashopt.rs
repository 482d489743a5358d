//! The composite local objective and the discrete updates for the sample
//! codes B and the class codes Y.
//!
//! Conventions used throughout: columns are samples, codes live in
//! {-1,+1}, and sign(0) := +1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modalitynets::Prototypes;
use crate::numkernel::{sign_pos, DenseMatrix};

/// Per-client discrete state: sample codes B (r x m) and class codes Y (r x c).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashState {
    pub codes: DenseMatrix,
    pub class_codes: DenseMatrix,
}

impl HashState {
    /// All-(+1) initial state.
    pub fn new(hash_bits: usize, sample_count: usize, class_count: usize) -> Self {
        HashState {
            codes: DenseMatrix::zeros(hash_bits, sample_count).map(|_| 1.0),
            class_codes: DenseMatrix::zeros(hash_bits, class_count).map(|_| 1.0),
        }
    }

    pub fn hash_bits(&self) -> usize {
        self.codes.rows()
    }
}

/// Trade-off weights of the local objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub eta: f64,
    pub xi: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 0.5,
            beta: 0.5,
            mu: 10.0,
            eta: 1e-5,
            xi: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.mu, self.eta, self.xi];
        if all.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("loss weights must be >= 0".to_string()));
        }
        Ok(())
    }
}

/// Pluggable auxiliary hashing term evaluated on relaxed outputs.
pub trait AuxHashLoss: Send + Sync {
    /// Returns (scalar, grad_F, grad_G) for r x m outputs and an m x c
    /// one-hot label matrix.
    fn evaluate(
        &self,
        f: &DenseMatrix,
        g: &DenseMatrix,
        labels_onehot: &DenseMatrix,
    ) -> Result<(f64, DenseMatrix, DenseMatrix)>;
}

/// Default auxiliary term: cross-modal pairwise similarity fitting,
/// (1/m^2) * ||r*S - (F^T G)/r||_F^2 with S = L L^T.
pub struct PairwiseAuxLoss;

impl AuxHashLoss for PairwiseAuxLoss {
    fn evaluate(
        &self,
        f: &DenseMatrix,
        g: &DenseMatrix,
        labels_onehot: &DenseMatrix,
    ) -> Result<(f64, DenseMatrix, DenseMatrix)> {
        default_aux_hash(f, g, labels_onehot)
    }
}

/// Mean squared difference between local and global prototypes over the
/// classes present in both; zero (with zero gradient) when none overlap.
pub fn loss_o1(local: &Prototypes, global: &Prototypes) -> Result<(f64, DenseMatrix)> {
    if local.hash_bits() != global.hash_bits() || local.class_count() != global.class_count() {
        return Err(Error::shape(format!(
            "prototype shapes {}x{} vs {}x{}",
            local.hash_bits(),
            local.class_count(),
            global.hash_bits(),
            global.class_count()
        )));
    }
    let r = local.hash_bits();
    let shared: Vec<usize> = (0..local.class_count())
        .filter(|&c| local.present[c] && global.present[c])
        .collect();
    let mut grad = DenseMatrix::zeros(r, local.class_count());
    if shared.is_empty() {
        return Ok((0.0, grad));
    }
    let count = (r * shared.len()) as f64;
    let mut sum = 0.0;
    for &c in &shared {
        for row in 0..r {
            let diff = local.matrix.get(row, c) - global.matrix.get(row, c);
            sum += diff * diff;
            grad.set(row, c, 2.0 * diff / count);
        }
    }
    Ok((sum / count, grad))
}

fn check_o2_shapes(
    f: &DenseMatrix,
    g: &DenseMatrix,
    y: &DenseMatrix,
    b: &DenseMatrix,
    l: &DenseMatrix,
) -> Result<(usize, usize, usize)> {
    let (r, m) = (f.rows(), f.cols());
    let c = l.cols();
    if g.rows() != r || g.cols() != m || b.rows() != r || b.cols() != m {
        return Err(Error::shape("F, G, B must share r x m".to_string()));
    }
    if y.rows() != r || y.cols() != c || l.rows() != m {
        return Err(Error::shape(format!(
            "Y {}x{} / L {}x{} inconsistent with F {}x{}",
            y.rows(),
            y.cols(),
            l.rows(),
            l.cols(),
            r,
            m
        )));
    }
    Ok((r, m, c))
}

/// One alignment block: alpha * ||rL - X^T A||^2 restricted to columns in
/// `mask` (None = all); accumulates the gradient wrt X into `grad_x`.
fn alignment_term(
    x: &DenseMatrix,
    anchor: &DenseMatrix,
    l: &DenseMatrix,
    hash_bits: f64,
    weight: f64,
    mask: Option<&[bool]>,
    grad_x: &mut DenseMatrix,
) -> Result<f64> {
    // E = rL - X^T anchor, masked columns zeroed.
    let mut e = l.scale(hash_bits);
    let xa = x.matmul_tn(anchor)?;
    for row in 0..e.rows() {
        for col in 0..e.cols() {
            if mask.map_or(false, |m| !m[col]) {
                e.set(row, col, 0.0);
            } else {
                e.set(row, col, e.get(row, col) - xa.get(row, col));
            }
        }
    }
    // d/dX ||E||^2 = -2 * anchor * E^T
    let g = anchor.matmul_nt(&e)?;
    grad_x.add_assign_scaled(&g, -2.0 * weight)?;
    Ok(weight * e.frobenius_sq())
}

/// The relaxed local objective O2 and its gradients wrt F and G.
///
/// O2 = alpha(||rL - F^T Y||^2 + ||rL - G^T Y||^2)
///    + beta(||rL - F^T P_gx||^2 + ||rL - G^T P_gt||^2)   (globally present classes only)
///    + mu(||B - F||^2 + ||B - G||^2)
pub fn loss_o2(
    f: &DenseMatrix,
    g: &DenseMatrix,
    y: &DenseMatrix,
    b: &DenseMatrix,
    l: &DenseMatrix,
    p_global_x: &Prototypes,
    p_global_t: &Prototypes,
    weights: &LossWeights,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    let (r, m, c) = check_o2_shapes(f, g, y, b, l)?;
    if p_global_x.class_count() != c || p_global_t.class_count() != c {
        return Err(Error::shape("global prototype class count mismatch".to_string()));
    }
    let rf = r as f64;
    let mut grad_f = DenseMatrix::zeros(r, m);
    let mut grad_g = DenseMatrix::zeros(r, m);
    let mut loss = 0.0;
    loss += alignment_term(f, y, l, rf, weights.alpha, None, &mut grad_f)?;
    loss += alignment_term(g, y, l, rf, weights.alpha, None, &mut grad_g)?;
    loss += alignment_term(
        f,
        &p_global_x.matrix,
        l,
        rf,
        weights.beta,
        Some(&p_global_x.present),
        &mut grad_f,
    )?;
    loss += alignment_term(
        g,
        &p_global_t.matrix,
        l,
        rf,
        weights.beta,
        Some(&p_global_t.present),
        &mut grad_g,
    )?;
    // quantization terms
    let df = b.sub(f)?;
    let dg = b.sub(g)?;
    loss += weights.mu * (df.frobenius_sq() + dg.frobenius_sq());
    grad_f.add_assign_scaled(&df, -2.0 * weights.mu)?;
    grad_g.add_assign_scaled(&dg, -2.0 * weights.mu)?;
    Ok((loss, grad_f, grad_g))
}

/// Default O_hash: (1/m^2) * ||r*S - (F^T G)/r||_F^2, S = L L^T.
pub fn default_aux_hash(
    f: &DenseMatrix,
    g: &DenseMatrix,
    labels_onehot: &DenseMatrix,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    let (r, m) = (f.rows(), f.cols());
    if g.rows() != r || g.cols() != m || labels_onehot.rows() != m {
        return Err(Error::shape("aux hash: F, G, L inconsistent".to_string()));
    }
    let rf = r as f64;
    let m2 = (m * m) as f64;
    let s = labels_onehot.matmul_nt(labels_onehot)?; // m x m similarity
    let mut e = s.scale(rf);
    let ftg = f.matmul_tn(g)?;
    for row in 0..m {
        for col in 0..m {
            e.set(row, col, e.get(row, col) - ftg.get(row, col) / rf);
        }
    }
    let loss = e.frobenius_sq() / m2;
    // grad_F = (-2/(r*m^2)) * G * E^T ; grad_G = (-2/(r*m^2)) * F * E
    let factor = -2.0 / (rf * m2);
    let grad_f = g.matmul_nt(&e)?.scale(factor);
    let grad_g = f.matmul(&e)?.scale(factor);
    Ok((loss, grad_f, grad_g))
}

/// Breakdown of the composite objective evaluated on one batch of relaxed
/// outputs. `grad_f`/`grad_g` carry every term's contribution, including the
/// prototype-MSE path through the per-class batch means.
#[derive(Debug, Clone)]
pub struct CompositeLoss {
    pub total: f64,
    pub o1: f64,
    pub o2: f64,
    pub o_hash: f64,
    pub grad_f: DenseMatrix,
    pub grad_g: DenseMatrix,
}

/// Full objective O1 + eta*O2 + xi*O_hash.
///
/// O1 compares batch prototypes (class means of F / G columns) against the
/// global prototypes for both modalities; its gradient is distributed back
/// to the member columns of each class mean.
#[allow(clippy::too_many_arguments)]
pub fn total_loss(
    f: &DenseMatrix,
    g: &DenseMatrix,
    y: &DenseMatrix,
    b: &DenseMatrix,
    l: &DenseMatrix,
    labels: &[usize],
    p_global_x: &Prototypes,
    p_global_t: &Prototypes,
    weights: &LossWeights,
    aux: &dyn AuxHashLoss,
) -> Result<CompositeLoss> {
    let (_, m, c) = check_o2_shapes(f, g, y, b, l)?;
    if labels.len() != m {
        return Err(Error::shape("label vector length mismatch".to_string()));
    }
    let (o2, mut grad_f, mut grad_g) = loss_o2(f, g, y, b, l, p_global_x, p_global_t, weights)?;
    let (oh, ahf, ahg) = aux.evaluate(f, g, l)?;
    grad_f = grad_f.scale(weights.eta);
    grad_g = grad_g.scale(weights.eta);
    grad_f.add_assign_scaled(&ahf, weights.xi)?;
    grad_g.add_assign_scaled(&ahg, weights.xi)?;

    let mut class_sizes = vec![0usize; c];
    for &lab in labels {
        class_sizes[lab] += 1;
    }
    let mut o1 = 0.0;
    for (outputs, global, grad) in [
        (f, p_global_x, &mut grad_f),
        (g, p_global_t, &mut grad_g),
    ] {
        let local = crate::modalitynets::prototypes_from_outputs(outputs, labels, c)?;
        let (term, grad_p) = loss_o1(&local, global)?;
        o1 += term;
        // chain through the class mean: column j receives grad_P[:, class(j)] / n_class
        for (j, &lab) in labels.iter().enumerate() {
            let n = class_sizes[lab] as f64;
            for row in 0..outputs.rows() {
                let v = grad.get(row, j) + grad_p.get(row, lab) / n;
                grad.set(row, j, v);
            }
        }
    }

    Ok(CompositeLoss {
        total: o1 + weights.eta * o2 + weights.xi * oh,
        o1,
        o2,
        o_hash: oh,
        grad_f,
        grad_g,
    })
}

/// B = sign(F + G), entrywise, sign(0) := +1.
pub fn update_b(f: &DenseMatrix, g: &DenseMatrix) -> Result<DenseMatrix> {
    let sum = f.add(g)?;
    Ok(sum.map(sign_pos))
}

/// The Y-subproblem objective: ||rL - F^T Y||^2 + ||rL - G^T Y||^2.
pub fn y_objective(
    f: &DenseMatrix,
    g: &DenseMatrix,
    l: &DenseMatrix,
    y: &DenseMatrix,
) -> Result<f64> {
    let rf = f.rows() as f64;
    let rl = l.scale(rf);
    let a = rl.sub(&f.matmul_tn(y)?)?.frobenius_sq();
    let b = rl.sub(&g.matmul_tn(y)?)?.frobenius_sq();
    Ok(a + b)
}

/// Discrete cyclic coordinate descent over the rows of Y.
///
/// With Q = r(F L + G L) and A = F F^T + G G^T, row k is set to
/// sign(q_k - sum_{l != k} A_{kl} y_l) entrywise. Runs `sweeps` full passes
/// or stops early when a pass changes nothing; the objective never
/// increases across a row update.
pub fn update_y_dcc(
    f: &DenseMatrix,
    g: &DenseMatrix,
    l: &DenseMatrix,
    y_init: &DenseMatrix,
    sweeps: usize,
) -> Result<DenseMatrix> {
    let (r, m, c) = (f.rows(), f.cols(), l.cols());
    if g.rows() != r || g.cols() != m || l.rows() != m {
        return Err(Error::shape("update_y_dcc: F, G, L inconsistent".to_string()));
    }
    if y_init.rows() != r || y_init.cols() != c {
        return Err(Error::shape("update_y_dcc: Y shape".to_string()));
    }
    let rf = r as f64;
    let q = f.matmul(l)?.add(&g.matmul(l)?)?.scale(rf); // r x c
    let a = f.matmul_nt(f)?.add(&g.matmul_nt(g)?)?; // r x r
    let mut y = y_init.clone();

    let mut prev_obj = y_objective(f, g, l, &y)?;
    for _ in 0..sweeps {
        let mut changed = false;
        for k in 0..r {
            for col in 0..c {
                let mut v = q.get(k, col);
                for other in 0..r {
                    if other != k {
                        v -= a.get(k, other) * y.get(other, col);
                    }
                }
                let new = sign_pos(v);
                if new != y.get(k, col) {
                    y.set(k, col, new);
                    changed = true;
                }
            }
            if cfg!(debug_assertions) {
                let obj = y_objective(f, g, l, &y)?;
                debug_assert!(
                    obj <= prev_obj + 1e-9 * prev_obj.abs().max(1.0),
                    "row update increased objective: {prev_obj} -> {obj}"
                );
                prev_obj = obj;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(y)
}

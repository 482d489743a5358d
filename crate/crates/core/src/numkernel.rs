//! Dense matrix arithmetic and the affine-layer machinery the rest of the
//! crate builds on. Everything is `f64`, row-major, and pure: identical
//! inputs give bit-identical outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2-D array of 64-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "expected {}x{}={} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::shape("ragged rows".to_string()));
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix { rows: r, cols: c, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Copy of the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, indices.len());
        for (j, &src) in indices.iter().enumerate() {
            for r in 0..self.rows {
                out.set(r, j, self.get(r, src));
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Standard matrix product `self * b`.
    pub fn matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows {
            return Err(Error::shape(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols);
        // i-k-j loop order keeps the inner loop contiguous in both operands.
        for i in 0..self.rows {
            let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for k in 0..self.cols {
                let a_ik = self.data[i * self.cols + k];
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * bv;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * b` without materializing the transpose.
    pub fn matmul_tn(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != b.rows {
            return Err(Error::shape(format!(
                "matmul_tn: ({}x{})ᵀ * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, b.cols);
        for k in 0..self.rows {
            let a_row = &self.data[k * self.cols..(k + 1) * self.cols];
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (i, &av) in a_row.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
        Ok(out)
    }

    /// `self * bᵀ` without materializing the transpose.
    pub fn matmul_nt(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.cols {
            return Err(Error::shape(format!(
                "matmul_nt: {}x{} * ({}x{})ᵀ",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..b.rows {
                let b_row = &b.data[j * b.cols..(j + 1) * b.cols];
                let dot: f64 = a_row.iter().zip(b_row).map(|(&x, &y)| x * y).sum();
                out.data[i * b.rows + j] = dot;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "elementwise op: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self += factor * other`.
    pub fn add_assign_scaled(&mut self, other: &DenseMatrix, factor: f64) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "add_assign_scaled: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|&v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `sign` with the `sign(0) := +1` convention used everywhere for hash codes.
#[inline]
pub fn sign_pos(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            // Subgradient at 0 is 0.
            Activation::ReLU => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::Identity => v,
        }
    }

    #[inline]
    fn derivative_at_preact(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One fully-connected layer: `activation(weight * x + bias)`, columns are
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineLayer {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Gradients of one layer, plus the gradient passed to the layer below.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub grad_weight: DenseMatrix,
    pub grad_bias: Vec<f64>,
    pub grad_input: DenseMatrix,
}

impl AffineLayer {
    pub fn new(weight: DenseMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::shape(format!(
                "layer: weight {}x{} vs bias {}",
                weight.rows(),
                weight.cols(),
                bias.len()
            )));
        }
        Ok(AffineLayer {
            weight,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    fn preactivation(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.in_dim() {
            return Err(Error::shape(format!(
                "layer forward: input rows {} vs in_dim {}",
                x.rows(),
                self.in_dim()
            )));
        }
        let mut z = self.weight.matmul(x)?;
        for r in 0..z.rows() {
            let b = self.bias[r];
            for c in 0..z.cols() {
                let v = z.get(r, c) + b;
                z.set(r, c, v);
            }
        }
        Ok(z)
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let z = self.preactivation(x)?;
        Ok(z.map(|v| self.activation.apply(v)))
    }

    /// Gradients of `<upstream, forward(x)>` with respect to the parameters
    /// and the input. `upstream` has the layer's output shape.
    pub fn backward(&self, x: &DenseMatrix, upstream: &DenseMatrix) -> Result<LayerGrads> {
        let z = self.preactivation(x)?;
        if upstream.rows() != z.rows() || upstream.cols() != z.cols() {
            return Err(Error::shape(format!(
                "layer backward: upstream {}x{} vs output {}x{}",
                upstream.rows(),
                upstream.cols(),
                z.rows(),
                z.cols()
            )));
        }
        // delta = upstream ⊙ activation'(z)
        let mut delta = DenseMatrix::zeros(z.rows(), z.cols());
        for r in 0..z.rows() {
            for c in 0..z.cols() {
                delta.set(
                    r,
                    c,
                    upstream.get(r, c) * self.activation.derivative_at_preact(z.get(r, c)),
                );
            }
        }
        let grad_weight = delta.matmul_nt(x)?;
        let grad_bias: Vec<f64> = (0..delta.rows())
            .map(|r| delta.row(r).iter().sum())
            .collect();
        let grad_input = self.weight.matmul_tn(&delta)?;
        Ok(LayerGrads {
            grad_weight,
            grad_bias,
            grad_input,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.matmul(&DenseMatrix::identity(2)).unwrap(), a);
        let i = DenseMatrix::identity(2);
        let v = mat(&[&[5.0], &[7.0]]);
        assert_eq!(i.matmul(&v).unwrap(), v);
    }

    #[test]
    fn matmul_hand_case() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = mat(&[&[1.0], &[1.0]]);
        assert_eq!(a.matmul(&b).unwrap(), mat(&[&[3.0], &[7.0]]));
    }

    #[test]
    fn matmul_shape_error() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn matmul_transpose_variants_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DenseMatrix::from_vec(4, 3, (0..12).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let b = DenseMatrix::from_vec(4, 5, (0..20).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let via_t = a.transpose().matmul(&b).unwrap();
        assert_eq!(a.matmul_tn(&b).unwrap(), via_t);
        let c = DenseMatrix::from_vec(5, 3, (0..15).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let via_t2 = a.matmul(&c.transpose()).unwrap();
        assert_eq!(a.matmul_nt(&c).unwrap(), via_t2);
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(DenseMatrix::zeros(3, 2).frobenius_sq(), 0.0);
        assert_eq!(mat(&[&[3.0, 4.0]]).frobenius_sq(), 25.0);
        let ones = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(ones.frobenius_sq(), 4.0);
        // elementwise oracle
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = DenseMatrix::from_vec(3, 3, (0..9).map(|_| rng.gen::<f64>() - 0.5).collect())
            .unwrap();
        let oracle: f64 = m.data().iter().map(|v| v * v).sum();
        assert_eq!(m.frobenius_sq(), oracle);
    }

    #[test]
    fn layer_forward_identity_and_relu() {
        let layer = AffineLayer::new(DenseMatrix::identity(2), vec![0.0; 2], Activation::Identity)
            .unwrap();
        let x = mat(&[&[1.5], &[-2.0]]);
        assert_eq!(layer.forward(&x).unwrap(), x);

        let relu = AffineLayer::new(DenseMatrix::identity(2), vec![0.0; 2], Activation::ReLU)
            .unwrap();
        let y = relu.forward(&mat(&[&[-1.0], &[2.0]])).unwrap();
        assert_eq!(y, mat(&[&[0.0], &[2.0]]));
    }

    #[test]
    fn two_layer_chain_matches_composed_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w1 = DenseMatrix::from_vec(3, 2, (0..6).map(|_| rng.gen::<f64>() - 0.5).collect())
            .unwrap();
        let w2 = DenseMatrix::from_vec(2, 3, (0..6).map(|_| rng.gen::<f64>() - 0.5).collect())
            .unwrap();
        let l1 = AffineLayer::new(w1.clone(), vec![0.0; 3], Activation::Identity).unwrap();
        let l2 = AffineLayer::new(w2.clone(), vec![0.0; 2], Activation::Identity).unwrap();
        let x = DenseMatrix::from_vec(2, 4, (0..8).map(|_| rng.gen::<f64>() - 0.5).collect())
            .unwrap();
        let chained = l2.forward(&l1.forward(&x).unwrap()).unwrap();
        let composed = w2.matmul(&w1).unwrap().matmul(&x).unwrap();
        for (a, b) in chained.data().iter().zip(composed.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_zero_upstream_gives_zero_grads() {
        let layer = AffineLayer::new(
            mat(&[&[1.0, -2.0], &[0.5, 3.0]]),
            vec![0.1, -0.2],
            Activation::ReLU,
        )
        .unwrap();
        let x = mat(&[&[1.0], &[2.0]]);
        let g = layer.backward(&x, &DenseMatrix::zeros(2, 1)).unwrap();
        assert_eq!(g.grad_weight, DenseMatrix::zeros(2, 2));
        assert_eq!(g.grad_bias, vec![0.0, 0.0]);
        assert_eq!(g.grad_input, DenseMatrix::zeros(2, 1));
    }

    #[test]
    fn backward_identity_layer_passes_gradient() {
        let layer = AffineLayer::new(DenseMatrix::identity(3), vec![0.0; 3], Activation::Identity)
            .unwrap();
        let x = mat(&[&[1.0], &[-2.0], &[0.5]]);
        let g_up = mat(&[&[0.3], &[0.7], &[-1.1]]);
        let g = layer.backward(&x, &g_up).unwrap();
        assert_eq!(g.grad_input, g_up);
    }

    /// Central finite differences of `<upstream, forward(x)>` over every
    /// weight, bias, and input entry.
    fn finite_diff_check(layer: &AffineLayer, x: &DenseMatrix, upstream: &DenseMatrix) {
        let eps = 1e-5;
        let loss = |l: &AffineLayer, xx: &DenseMatrix| -> f64 {
            let y = l.forward(xx).unwrap();
            y.data()
                .iter()
                .zip(upstream.data())
                .map(|(&a, &b)| a * b)
                .sum()
        };
        let grads = layer.backward(x, upstream).unwrap();
        for r in 0..layer.weight.rows() {
            for c in 0..layer.weight.cols() {
                let mut lp = layer.clone();
                let mut lm = layer.clone();
                lp.weight.set(r, c, layer.weight.get(r, c) + eps);
                lm.weight.set(r, c, layer.weight.get(r, c) - eps);
                let num = (loss(&lp, x) - loss(&lm, x)) / (2.0 * eps);
                assert!(
                    (num - grads.grad_weight.get(r, c)).abs() < 1e-6,
                    "weight ({r},{c}): numeric {num} vs analytic {}",
                    grads.grad_weight.get(r, c)
                );
            }
        }
        for i in 0..layer.bias.len() {
            let mut lp = layer.clone();
            let mut lm = layer.clone();
            lp.bias[i] += eps;
            lm.bias[i] -= eps;
            let num = (loss(&lp, x) - loss(&lm, x)) / (2.0 * eps);
            assert!((num - grads.grad_bias[i]).abs() < 1e-6);
        }
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp.set(r, c, x.get(r, c) + eps);
                xm.set(r, c, x.get(r, c) - eps);
                let num = (loss(layer, &xp) - loss(layer, &xm)) / (2.0 * eps);
                assert!((num - grads.grad_input.get(r, c)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let w = DenseMatrix::from_vec(3, 4, (0..12).map(|_| rng.gen::<f64>() - 0.5).collect())
                .unwrap();
            let b: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() - 0.5).collect();
            // Shift preactivations away from the ReLU kink so central
            // differences are valid.
            let layer = AffineLayer::new(w, b, Activation::ReLU).unwrap();
            let x = DenseMatrix::from_vec(
                4,
                2,
                (0..8).map(|_| rng.gen::<f64>() + 0.5).collect(),
            )
            .unwrap();
            let up = DenseMatrix::from_vec(3, 2, (0..6).map(|_| rng.gen::<f64>() - 0.5).collect())
                .unwrap();
            finite_diff_check(&layer, &x, &up);
        }
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sign_pos(0.0), 1.0);
        assert_eq!(sign_pos(-0.0), 1.0);
        assert_eq!(sign_pos(3.0), 1.0);
        assert_eq!(sign_pos(-0.001), -1.0);
    }
}

//! A small dense network with hand-written reverse mode.
//!
//! Hidden layers use leaky ReLU; the output layer is linear, so outputs are
//! used directly as `(log a, log b)`.
//!
//! # Parameter layout
//!
//! Parameters are one flat vector. For each layer in order, the weight
//! matrix is stored row-major as `[fan_out][fan_in]`, followed by the
//! `fan_out` biases. Gradients use the same layout.
//!
//! # Text format
//!
//! [`MlpParams::save`] writes:
//!
//! ```text
//! # stableks-mlp v1
//! input_dim = 5
//! hidden_widths = 32,32,32
//! output_dim = 2
//! leaky_slope = 0.01
//! precision = double
//! n_params = 1346
//! <one value per line, in layout order>
//! ```

use std::io::{BufRead, Write};

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, KsError, Result};
use crate::real::{Precision, Real};

pub const DEFAULT_HIDDEN: [usize; 3] = [32, 32, 32];
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const HEAD_INIT_SCALE: f64 = 0.1;
const FORMAT_TAG: &str = "# stableks-mlp v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub leaky_slope: f64,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return domain("MlpConfig", "input_dim >= 1", 0.0);
        }
        if output_dim == 0 {
            return domain("MlpConfig", "output_dim >= 1", 0.0);
        }
        if hidden_widths.contains(&0) {
            return domain("MlpConfig", "hidden widths >= 1", 0.0);
        }
        Ok(MlpConfig {
            input_dim,
            hidden_widths,
            output_dim,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        })
    }

    /// Encoder shape: three hidden layers of 32 and a `(log a, log b)` head.
    pub fn encoder(input_dim: usize) -> Result<Self> {
        Self::new(input_dim, DEFAULT_HIDDEN.to_vec(), 2)
    }

    /// `(fan_in, fan_out)` per layer.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_widths);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|(i, o)| (i + 1) * o).sum()
    }
}

/// Row-major batch of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(KsError::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(KsError::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn scale(&self, c: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }
}

/// Network parameters (or gradients) in the flat layout described above.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    config: MlpConfig,
    data: Vec<T>,
}

/// Activations cached by [`MlpParams::forward`] for one backward pass.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    // Input to each layer; the input to layer 0 is the batch itself.
    inputs: Vec<Matrix<T>>,
    // Pre-activations of the hidden layers.
    pre: Vec<Matrix<T>>,
    consumed: bool,
}

impl<T: Real> Tape<T> {
    pub fn is_consumed(&self) -> bool {
        self.consumed
    }
}

#[inline]
fn leaky<T: Real>(v: T, slope: T) -> T {
    if v > T::zero() {
        v
    } else {
        v * slope
    }
}

impl<T: Real> MlpParams<T> {
    pub fn zeros(config: &MlpConfig) -> Self {
        MlpParams {
            config: config.clone(),
            data: vec![T::zero(); config.n_params()],
        }
    }

    /// He initialization: weights `N(0, 2 / fan_in)`, biases zero. The
    /// output layer's standard deviation is scaled by [`HEAD_INIT_SCALE`] so
    /// the encoder starts near `(log a, log b) = (0, 0)`, the uniform law.
    pub fn init<R: RngCore + ?Sized>(config: &MlpConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        let mut offset = 0;
        let layers = config.layers();
        for (l, &(fan_in, fan_out)) in layers.iter().enumerate() {
            let scale = if l + 1 == layers.len() { HEAD_INIT_SCALE } else { 1.0 };
            let std = scale * (2.0 / fan_in as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            for w in &mut p.data[offset..offset + fan_in * fan_out] {
                *w = T::of(normal.sample(rng));
            }
            offset += (fan_in + 1) * fan_out;
        }
        p
    }

    pub fn from_vec(config: &MlpConfig, data: Vec<T>) -> Result<Self> {
        if data.len() != config.n_params() {
            return Err(KsError::Dimension {
                expected: config.n_params(),
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(KsError::NonFiniteParam { index: i });
        }
        Ok(MlpParams {
            config: config.clone(),
            data,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Weights (row-major `[fan_out][fan_in]`) and biases of layer `l`.
    pub fn layer(&self, l: usize) -> (&[T], &[T]) {
        let (start, fan_in, fan_out) = self.layer_span(l);
        let w_end = start + fan_in * fan_out;
        (&self.data[start..w_end], &self.data[w_end..w_end + fan_out])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [T], &mut [T]) {
        let (start, fan_in, fan_out) = self.layer_span(l);
        let (w, rest) = self.data[start..].split_at_mut(fan_in * fan_out);
        (w, &mut rest[..fan_out])
    }

    fn layer_span(&self, l: usize) -> (usize, usize, usize) {
        let layers = self.config.layers();
        let start = layers[..l].iter().map(|(i, o)| (i + 1) * o).sum();
        let (fan_in, fan_out) = layers[l];
        (start, fan_in, fan_out)
    }

    /// Forward pass over a batch; one output row per input row.
    pub fn forward(&self, x: &Matrix<T>) -> Result<(Matrix<T>, Tape<T>)> {
        if x.cols != self.config.input_dim {
            return Err(KsError::Dimension {
                expected: self.config.input_dim,
                got: x.cols,
            });
        }
        let slope = T::of(self.config.leaky_slope);
        let n_layers = self.config.layers().len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre = Vec::with_capacity(n_layers - 1);
        let mut h = x.clone();
        for l in 0..n_layers {
            let (w, b) = self.layer(l);
            let (fan_in, fan_out) = (h.cols, b.len());
            let mut z = Matrix::zeros(h.rows, fan_out);
            for r in 0..h.rows {
                let hin = h.row(r);
                let zr = z.row_mut(r);
                for o in 0..fan_out {
                    let wr = &w[o * fan_in..(o + 1) * fan_in];
                    zr[o] = b[o] + wr.iter().zip(hin).map(|(&a, &c)| a * c).sum::<T>();
                }
            }
            inputs.push(h);
            if l + 1 == n_layers {
                h = z;
            } else {
                h = Matrix {
                    rows: z.rows,
                    cols: z.cols,
                    data: z.data.iter().map(|&v| leaky(v, slope)).collect(),
                };
                pre.push(z);
            }
        }
        Ok((
            h,
            Tape {
                inputs,
                pre,
                consumed: false,
            },
        ))
    }

    /// Reverse pass: gradients of `Σ_rows Σ_j grad_out[r][j] · out[r][j]`
    /// with respect to the parameters. Consumes the tape.
    pub fn backward(&self, tape: &mut Tape<T>, grad_out: &Matrix<T>) -> Result<MlpParams<T>> {
        if tape.consumed {
            return Err(KsError::TapeConsumed);
        }
        let layers = self.config.layers();
        if tape.inputs.len() != layers.len() {
            return Err(KsError::Dimension {
                expected: layers.len(),
                got: tape.inputs.len(),
            });
        }
        let rows = tape.inputs[0].rows;
        if grad_out.rows != rows || grad_out.cols != self.config.output_dim {
            return Err(KsError::Dimension {
                expected: rows * self.config.output_dim,
                got: grad_out.rows * grad_out.cols,
            });
        }
        tape.consumed = true;

        let slope = T::of(self.config.leaky_slope);
        let mut grads = MlpParams::zeros(&self.config);
        let mut delta = grad_out.clone();
        // Rows with a zero output gradient contribute nothing at any layer.
        let active: Vec<usize> = (0..rows)
            .filter(|&r| grad_out.row(r).iter().any(|&g| g != T::zero()))
            .collect();
        for l in (0..layers.len()).rev() {
            let (fan_in, fan_out) = layers[l];
            let input = &tape.inputs[l];
            {
                let (gw, gb) = grads.layer_mut(l);
                for &r in &active {
                    let d = delta.row(r);
                    let hin = input.row(r);
                    for o in 0..fan_out {
                        gb[o] = gb[o] + d[o];
                        let gwr = &mut gw[o * fan_in..(o + 1) * fan_in];
                        for (g, &h) in gwr.iter_mut().zip(hin) {
                            *g = *g + d[o] * h;
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.layer(l);
            let pre = &tape.pre[l - 1];
            let mut prev = Matrix::zeros(rows, fan_in);
            for &r in &active {
                let d = delta.row(r);
                let z = pre.row(r);
                let pr = prev.row_mut(r);
                for o in 0..fan_out {
                    let wr = &w[o * fan_in..(o + 1) * fan_in];
                    for (p, &wv) in pr.iter_mut().zip(wr) {
                        *p = *p + wv * d[o];
                    }
                }
                for (p, &zv) in pr.iter_mut().zip(z) {
                    if !(zv > T::zero()) {
                        *p = *p * slope;
                    }
                }
            }
            delta = prev;
        }
        Ok(grads)
    }

    /// `θ ← θ + η · g` (ascent). Non-finite gradients are rejected before
    /// anything is written.
    pub fn sgd_step(&mut self, grads: &MlpParams<T>, learning_rate: T) -> Result<()> {
        if grads.data.len() != self.data.len() {
            return Err(KsError::Dimension {
                expected: self.data.len(),
                got: grads.data.len(),
            });
        }
        if !(learning_rate >= T::zero()) || !learning_rate.is_finite() {
            return domain("sgd_step", "learning rate finite and >= 0", learning_rate.to_f64());
        }
        if let Some(i) = grads.data.iter().position(|g| !g.is_finite()) {
            return Err(KsError::NonFiniteParam { index: i });
        }
        for (p, &g) in self.data.iter_mut().zip(&grads.data) {
            *p = *p + learning_rate * g;
        }
        Ok(())
    }

    /// Writes the text format documented at module level.
    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let c = &self.config;
        let hidden: Vec<String> = c.hidden_widths.iter().map(usize::to_string).collect();
        writeln!(w, "{FORMAT_TAG}")?;
        writeln!(w, "input_dim = {}", c.input_dim)?;
        writeln!(w, "hidden_widths = {}", hidden.join(","))?;
        writeln!(w, "output_dim = {}", c.output_dim)?;
        writeln!(w, "leaky_slope = {:?}", c.leaky_slope)?;
        writeln!(w, "precision = {}", T::PRECISION)?;
        writeln!(w, "n_params = {}", self.data.len())?;
        for v in &self.data {
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: String| KsError::Format(m);
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad("unexpected end of file".into()))?
                .map_err(|e| bad(e.to_string()))
        };
        if next()?.trim() != FORMAT_TAG {
            return Err(bad(format!("missing `{FORMAT_TAG}` header")));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = next()?;
            match line.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
                _ => Err(bad(format!("expected `{key} = ...`, got `{line}`"))),
            }
        };
        let int = |s: String| s.parse::<usize>().map_err(|e| bad(format!("{s}: {e}")));
        let input_dim = int(field("input_dim")?)?;
        let hidden = field("hidden_widths")?;
        let hidden_widths = if hidden.is_empty() {
            Vec::new()
        } else {
            hidden.split(',').map(|s| int(s.trim().to_string())).collect::<Result<_>>()?
        };
        let output_dim = int(field("output_dim")?)?;
        let slope = field("leaky_slope")?;
        let leaky_slope = slope.parse::<f64>().map_err(|e| bad(format!("{slope}: {e}")))?;
        let precision: Precision = field("precision")?.parse().map_err(bad)?;
        if precision != T::PRECISION {
            return Err(bad(format!("file holds {precision} precision, expected {}", T::PRECISION)));
        }
        let n = int(field("n_params")?)?;
        let mut config = MlpConfig::new(input_dim, hidden_widths, output_dim)?;
        config.leaky_slope = leaky_slope;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next()?;
            // Parse at the stored precision so single-precision values round-trip exactly.
            let v = match T::PRECISION {
                Precision::Single => line.trim().parse::<f32>().map(f64::from),
                Precision::Double => line.trim().parse::<f64>(),
            };
            data.push(T::of(v.map_err(|e| bad(format!("{line}: {e}")))?));
        }
        Self::from_vec(&config, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    // Straightforward per-sample reimplementation used as an oracle.
    fn reference_forward(p: &MlpParams<f64>, x: &[f64]) -> Vec<f64> {
        let layers = p.config().layers();
        let mut h = x.to_vec();
        for (l, &(fan_in, fan_out)) in layers.iter().enumerate() {
            let (w, b) = p.layer(l);
            let mut z = vec![0.0; fan_out];
            for o in 0..fan_out {
                z[o] = b[o];
                for i in 0..fan_in {
                    z[o] += w[o * fan_in + i] * h[i];
                }
            }
            if l + 1 < layers.len() {
                for v in &mut z {
                    if *v <= 0.0 {
                        *v *= 0.01;
                    }
                }
            }
            h = z;
        }
        h
    }

    #[test]
    fn config_counts() {
        let c = MlpConfig::encoder(5).unwrap();
        assert_eq!(c.layers(), vec![(5, 32), (32, 32), (32, 32), (32, 2)]);
        assert_eq!(c.n_params(), 6 * 32 + 33 * 32 * 2 + 33 * 2);
        assert!(MlpConfig::new(0, vec![], 2).is_err());
        assert!(MlpConfig::new(3, vec![4, 0], 2).is_err());
    }

    #[test]
    fn zero_hidden_layers_output_bias() {
        let c = MlpConfig::new(3, vec![], 2).unwrap();
        let mut p = MlpParams::<f64>::zeros(&c);
        p.layer_mut(0).1.copy_from_slice(&[0.25, -1.5]);
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-4.0, 0.0, 9.0]]).unwrap();
        let (y, _) = p.forward(&x).unwrap();
        assert_eq!(y.row(0), &[0.25, -1.5]);
        assert_eq!(y.row(1), &[0.25, -1.5]);
    }

    #[test]
    fn identity_layer() {
        let c = MlpConfig::new(2, vec![], 2).unwrap();
        let p = MlpParams::from_vec(&c, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let x = Matrix::from_rows(&[vec![0.3, -7.0]]).unwrap();
        assert_eq!(p.forward(&x).unwrap().0.row(0), &[0.3, -7.0]);
    }

    #[test]
    fn init_is_deterministic_and_finite() {
        let c = MlpConfig::encoder(5).unwrap();
        let a = MlpParams::<f64>::init(&c, &mut ChaCha8Rng::seed_from_u64(3));
        let b = MlpParams::<f64>::init(&c, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        // output biases start at (0, 0): uniform posterior
        assert_eq!(a.layer(3).1, &[0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (y, _) = a.forward(&random_batch(16, 5, &mut rng)).unwrap();
        assert!(y.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = MlpConfig::new(4, vec![7, 5], 3).unwrap();
        let p = MlpParams::<f64>::init(&c, &mut rng);
        let x = random_batch(6, 4, &mut rng);
        let (y, _) = p.forward(&x).unwrap();
        assert_eq!(y.rows(), 6);
        for r in 0..6 {
            let want = reference_forward(&p, x.row(r));
            for (a, b) in y.row(r).iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = MlpParams::<f64>::zeros(&MlpConfig::new(3, vec![2], 2).unwrap());
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(p.forward(&x), Err(KsError::Dimension { expected: 3, got: 2 })));
    }

    #[test]
    fn backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = MlpConfig::new(3, vec![6, 4], 2).unwrap();
        let p = MlpParams::<f64>::init(&c, &mut rng);
        let x = random_batch(5, 3, &mut rng);
        let gy = random_batch(5, 2, &mut rng);
        let loss = |p: &MlpParams<f64>| -> f64 {
            let (y, _) = p.forward(&x).unwrap();
            y.as_slice().iter().zip(gy.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (_, mut tape) = p.forward(&x).unwrap();
        let g = p.backward(&mut tape, &gy).unwrap();
        for i in 0..c.n_params() {
            let h = 1e-6;
            let mut hi = p.clone();
            hi.as_mut_slice()[i] += h;
            let mut lo = p.clone();
            lo.as_mut_slice()[i] -= h;
            let fd = (loss(&hi) - loss(&lo)) / (2.0 * h);
            let an = g.as_slice()[i];
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-6, "param {i}: {an} vs {fd}");
        }
    }

    #[test]
    fn backward_linear_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = MlpConfig::new(3, vec![4], 2).unwrap();
        let p = MlpParams::<f64>::init(&c, &mut rng);
        let x = random_batch(4, 3, &mut rng);
        let gy = random_batch(4, 2, &mut rng);
        let run = |g: &Matrix<f64>| {
            let (_, mut t) = p.forward(&x).unwrap();
            p.backward(&mut t, g).unwrap()
        };
        let one = run(&gy);
        let two = run(&gy.scale(2.0));
        for (a, b) in one.as_slice().iter().zip(two.as_slice()) {
            assert!((2.0 * a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
        assert!(run(&Matrix::zeros(4, 2)).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tape_reuse_is_an_error() {
        let c = MlpConfig::new(2, vec![3], 2).unwrap();
        let p = MlpParams::<f64>::zeros(&c);
        let x = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let (_, mut tape) = p.forward(&x).unwrap();
        let g = Matrix::zeros(1, 2);
        p.backward(&mut tape, &g).unwrap();
        assert!(tape.is_consumed());
        assert_eq!(p.backward(&mut tape, &g), Err(KsError::TapeConsumed));
    }

    #[test]
    fn sgd_step_cases() {
        let c = MlpConfig::new(2, vec![], 1).unwrap();
        let mut p = MlpParams::from_vec(&c, vec![1.0, 2.0, 3.0]).unwrap();
        let before = p.clone();
        p.sgd_step(&MlpParams::zeros(&c), 0.1).unwrap();
        assert_eq!(p, before);
        let g = MlpParams::from_vec(&c, vec![1.0, 1.0, 1.0]).unwrap();
        p.sgd_step(&g, 0.0).unwrap();
        assert_eq!(p, before);

        let mut bad = MlpParams::<f64>::zeros(&c);
        bad.as_mut_slice()[1] = f64::NAN;
        assert_eq!(p.sgd_step(&bad, 0.1), Err(KsError::NonFiniteParam { index: 1 }));
        assert_eq!(p, before);
    }

    #[test]
    fn sgd_ascends_concave_toy() {
        // Maximize -(y - 3)² for a bias-only model y = b; one step must improve it.
        let c = MlpConfig::new(1, vec![], 1).unwrap();
        let mut p = MlpParams::from_vec(&c, vec![0.0, 0.0]).unwrap();
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let objective = |p: &MlpParams<f64>| -(p.forward(&x).unwrap().0.row(0)[0] - 3.0).powi(2);
        let before = objective(&p);
        let (y, mut tape) = p.forward(&x).unwrap();
        let gy = Matrix::from_rows(&[vec![-2.0 * (y.row(0)[0] - 3.0)]]).unwrap();
        let g = p.backward(&mut tape, &gy).unwrap();
        p.sgd_step(&g, 0.1).unwrap();
        assert!(objective(&p) > before);
    }

    #[test]
    fn save_load_round_trip() {
        let c = MlpConfig::new(3, vec![4, 2], 2).unwrap();
        let p = MlpParams::<f64>::init(&c, &mut ChaCha8Rng::seed_from_u64(2));
        let mut buf = Vec::new();
        p.save(&mut buf).unwrap();
        let q = MlpParams::<f64>::load(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        assert!(matches!(MlpParams::<f32>::load(buf.as_slice()), Err(KsError::Format(_))));

        let c = MlpConfig::new(2, vec![], 1).unwrap();
        let p = MlpParams::<f32>::init(&c, &mut ChaCha8Rng::seed_from_u64(2));
        let mut buf = Vec::new();
        p.save(&mut buf).unwrap();
        assert_eq!(MlpParams::<f32>::load(buf.as_slice()).unwrap(), p);
    }
}

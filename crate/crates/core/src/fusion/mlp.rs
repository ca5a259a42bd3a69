//! Fully connected back-end: leaky-rectifier hidden layers, one logistic
//! output unit, mean binary cross-entropy loss.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::rng::Rng;
use crate::scalar::{fmt_round_trip, Scalar};
use crate::text::{raw_lines, tokens_of};

/// Negative-side slope of the hidden activations.
pub const LEAKY_SLOPE: f64 = 0.01;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "sasv-mlp";

/// Dense layer; `weights` is row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            biases: vec![T::zero(); out_dim],
        }
    }

    fn affine(&self, input: &[T], out: &mut Vec<T>) {
        out.clear();
        for (row, &b) in self.weights.chunks_exact(self.in_dim).zip(&self.biases) {
            out.push(row.iter().zip(input).fold(b, |acc, (&w, &x)| acc + w * x));
        }
    }
}

fn leaky<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        z * T::lit(LEAKY_SLOPE)
    }
}

fn leaky_grad<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        T::one()
    } else {
        T::lit(LEAKY_SLOPE)
    }
}

pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 label, computed without
/// forming the probability.
pub(crate) fn bce_with_logit<T: Scalar>(z: T, label: T) -> T {
    z.max(T::zero()) - z * label + (-z.abs()).exp().ln_1p()
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Same ordering as [`MlpBackend::parameters`].
    pub fn flatten(&self) -> Vec<T> {
        flatten(&self.layers)
    }
}

fn flatten<T: Scalar>(layers: &[Dense<T>]) -> Vec<T> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpBackend<T> {
    spk_dim: usize,
    cm_dim: usize,
    layers: Vec<Dense<T>>,
}

impl<T: Scalar> MlpBackend<T> {
    fn check_dims(spk_dim: usize, cm_dim: usize, hidden: &[usize]) -> Result<()> {
        if spk_dim == 0 || cm_dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimensions must be positive".into(),
            ));
        }
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "invalid hidden layer sizes {hidden:?}"
            )));
        }
        Ok(())
    }

    fn layer_shapes(spk_dim: usize, cm_dim: usize, hidden: &[usize]) -> Vec<(usize, usize)> {
        let mut dims = vec![2 * spk_dim + cm_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// All weights and biases zero.
    pub fn zeros(spk_dim: usize, cm_dim: usize, hidden: &[usize]) -> Result<Self> {
        Self::check_dims(spk_dim, cm_dim, hidden)?;
        let layers = Self::layer_shapes(spk_dim, cm_dim, hidden)
            .into_iter()
            .map(|(i, o)| Dense::zeros(i, o))
            .collect();
        Ok(Self {
            spk_dim,
            cm_dim,
            layers,
        })
    }

    /// Weights uniform on `±sqrt(3 / fan_in)` (unit-variance inputs keep
    /// unit-variance pre-activations), biases zero.
    pub fn init(spk_dim: usize, cm_dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut model = Self::zeros(spk_dim, cm_dim, hidden)?;
        for layer in &mut model.layers {
            let bound = (3.0 / layer.in_dim as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit(rng.uniform(-bound, bound));
            }
        }
        Ok(model)
    }

    pub fn spk_dim(&self) -> usize {
        self.spk_dim
    }

    pub fn cm_dim(&self) -> usize {
        self.cm_dim
    }

    pub fn input_dim(&self) -> usize {
        2 * self.spk_dim + self.cm_dim
    }

    /// `[d_in, h1, .., 1]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .collect()
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Weights then biases, layer by layer.
    pub fn parameters(&self) -> Vec<T> {
        flatten(&self.layers)
    }

    pub fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                found: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            for p in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *p = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|p| p.is_finite()))
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: input.len(),
            });
        }
        Ok(())
    }

    /// Pre-activations of every layer for one input.
    fn pre_activations(&self, input: &[T]) -> Vec<Vec<T>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = input.to_vec();
        let mut z = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&act, &mut z);
            if i + 1 < self.layers.len() {
                act.clear();
                act.extend(z.iter().map(|&v| leaky(v)));
            }
            pre.push(z.clone());
        }
        pre
    }

    /// Output logit for a concatenated input.
    pub fn logit(&self, input: &[T]) -> Result<T> {
        self.check_input(input)?;
        let mut act = input.to_vec();
        let mut z = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&act, &mut z);
            if i + 1 < self.layers.len() {
                std::mem::swap(&mut act, &mut z);
                act.iter_mut().for_each(|v| *v = leaky(*v));
            }
        }
        Ok(z[0])
    }

    /// Logistic output for a concatenated input.
    pub fn forward(&self, input: &[T]) -> Result<T> {
        self.logit(input).map(sigmoid)
    }

    /// Mean binary cross-entropy over a batch.
    pub fn mean_loss<I: AsRef<[T]>>(&self, inputs: &[I], labels: &[T]) -> Result<T> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::EmptyTrainingSet);
        }
        let mut total = T::zero();
        for (x, &y) in inputs.iter().zip(labels) {
            total = total + bce_with_logit(self.logit(x.as_ref())?, y);
        }
        Ok(total / T::from_count(inputs.len()))
    }

    /// Mean loss and its gradient over a batch, by backpropagation.
    pub fn loss_and_gradients<I: AsRef<[T]>>(
        &self,
        inputs: &[I],
        labels: &[T],
    ) -> Result<(T, Gradients<T>)> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::EmptyTrainingSet);
        }
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        };
        let n = T::from_count(inputs.len());
        let mut total = T::zero();
        let mut delta: Vec<T> = Vec::new();
        let mut next_delta: Vec<T> = Vec::new();
        for (x, &y) in inputs.iter().zip(labels) {
            let x = x.as_ref();
            self.check_input(x)?;
            let pre = self.pre_activations(x);
            let z_out = pre[pre.len() - 1][0];
            total = total + bce_with_logit(z_out, y);

            delta.clear();
            delta.push((sigmoid(z_out) - y) / n);
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let g = &mut grads.layers[li];
                // input activations of layer li
                let act_in: Vec<T> = if li == 0 {
                    x.to_vec()
                } else {
                    pre[li - 1].iter().map(|&v| leaky(v)).collect()
                };
                for (o, &d) in delta.iter().enumerate() {
                    g.biases[o] = g.biases[o] + d;
                    let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (w, &a) in row.iter_mut().zip(&act_in) {
                        *w = *w + d * a;
                    }
                }
                if li == 0 {
                    break;
                }
                next_delta.clear();
                next_delta.resize(layer.in_dim, T::zero());
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (acc, &w) in next_delta.iter_mut().zip(row) {
                        *acc = *acc + d * w;
                    }
                }
                for (acc, &z) in next_delta.iter_mut().zip(&pre[li - 1]) {
                    *acc = *acc * leaky_grad(z);
                }
                std::mem::swap(&mut delta, &mut next_delta);
            }
        }
        Ok((total / n, grads))
    }

    /// `params -= learning_rate * grads`.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, learning_rate: T) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (p, &d) in layer.weights.iter_mut().zip(&g.weights) {
                *p = *p - learning_rate * d;
            }
            for (p, &d) in layer.biases.iter_mut().zip(&g.biases) {
                *p = *p - learning_rate * d;
            }
        }
    }

    /// Text model file: header lines, then per layer a `layer` line, one
    /// line per weight row and one bias line. Values carry enough digits
    /// for an exact round trip.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let dims: Vec<String> = self.layer_dims().iter().map(usize::to_string).collect();
        writeln!(s, "{MODEL_MAGIC} {MODEL_FORMAT_VERSION}").unwrap();
        writeln!(s, "input {} {}", self.spk_dim, self.cm_dim).unwrap();
        writeln!(s, "layer_dims {}", dims.join(" ")).unwrap();
        writeln!(s, "activation leaky_relu {LEAKY_SLOPE} logistic").unwrap();
        for (i, layer) in self.layers.iter().enumerate() {
            writeln!(s, "layer {} {} {}", i + 1, layer.out_dim, layer.in_dim).unwrap();
            for row in layer.weights.chunks_exact(layer.in_dim) {
                let vals: Vec<String> = row.iter().map(|&v| fmt_round_trip(v)).collect();
                writeln!(s, "{}", vals.join(" ")).unwrap();
            }
            let vals: Vec<String> = layer.biases.iter().map(|&v| fmt_round_trip(v)).collect();
            writeln!(s, "{}", vals.join(" ")).unwrap();
        }
        s
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        sink.write_all(self.to_text().as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        ModelReader::new(text).read()
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Ok(Self::parse(&text)?)
    }
}

struct ModelReader<'a> {
    lines: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last_line: usize,
}

impl<'a> ModelReader<'a> {
    fn new(text: &'a str) -> Self {
        let lines = raw_lines(text).filter(|(_, l)| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        });
        Self {
            lines: Box::new(lines),
            last_line: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> ParseError {
        ParseError::new(line, 1, ParseErrorKind::InvalidModel(msg.into()))
    }

    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        match self.lines.next() {
            Some((n, l)) => {
                self.last_line = n;
                Ok((n, tokens_of(l).into_iter().map(|t| t.text).collect()))
            }
            None => Err(self.err(
                self.last_line + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        let (n, toks) = self.next_tokens(key)?;
        if toks.first() != Some(&key) {
            return Err(self.err(n, format!("expected {key:?} line")));
        }
        Ok((n, toks[1..].to_vec()))
    }

    fn usizes(&self, n: usize, toks: &[&str]) -> Result<Vec<usize>, ParseError> {
        toks.iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| self.err(n, format!("invalid integer {t:?}")))
            })
            .collect()
    }

    fn values<T: Scalar>(&mut self, count: usize, what: &str) -> Result<Vec<T>, ParseError> {
        let (n, toks) = self.next_tokens(what)?;
        if toks.len() != count {
            return Err(ParseError::new(
                n,
                1,
                ParseErrorKind::FieldCount {
                    expected: count,
                    found: toks.len(),
                },
            ));
        }
        toks.iter()
            .map(|t| {
                let v: T = t.parse().map_err(|_| {
                    ParseError::new(n, 1, ParseErrorKind::InvalidNumber((*t).to_owned()))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(ParseError::new(
                        n,
                        1,
                        ParseErrorKind::NonFinite((*t).to_owned()),
                    ))
                }
            })
            .collect()
    }

    fn read<T: Scalar>(mut self) -> Result<MlpBackend<T>, ParseError> {
        let (n, magic) = self.keyed(MODEL_MAGIC)?;
        let version = self.usizes(n, &magic)?;
        if version != [MODEL_FORMAT_VERSION as usize] {
            return Err(self.err(n, format!("unsupported format version {magic:?}")));
        }
        let (n, input) = self.keyed("input")?;
        let input = self.usizes(n, &input)?;
        let [spk_dim, cm_dim] = input[..] else {
            return Err(self.err(n, "expected \"input SPK_DIM CM_DIM\""));
        };
        let (n, dims) = self.keyed("layer_dims")?;
        let dims = self.usizes(n, &dims)?;
        if dims.len() < 3 || dims[0] != 2 * spk_dim + cm_dim || dims[dims.len() - 1] != 1 {
            return Err(self.err(
                n,
                format!("layer_dims {dims:?} do not match input {spk_dim} {cm_dim}"),
            ));
        }
        let (n, act) = self.keyed("activation")?;
        let slope = LEAKY_SLOPE.to_string();
        if act != ["leaky_relu", slope.as_str(), "logistic"] {
            return Err(self.err(n, format!("unsupported activation {act:?}")));
        }
        let mut model = MlpBackend::zeros(spk_dim, cm_dim, &dims[1..dims.len() - 1])
            .map_err(|e| self.err(n, e.to_string()))?;
        for (i, layer) in model.layers.iter_mut().enumerate() {
            let (n, head) = self.keyed("layer")?;
            let head = self.usizes(n, &head)?;
            if head != [i + 1, layer.out_dim, layer.in_dim] {
                return Err(self.err(
                    n,
                    format!("layer header {head:?} does not match layer_dims"),
                ));
            }
            let mut weights = Vec::with_capacity(layer.weights.len());
            for _ in 0..layer.out_dim {
                weights.extend(self.values::<T>(layer.in_dim, "weight row")?);
            }
            layer.weights = weights;
            layer.biases = self.values(layer.out_dim, "bias row")?;
        }
        if let Some((n, _)) = self.lines.next() {
            return Err(self.err(n, "trailing content after last layer"));
        }
        Ok(model)
    }
}

//! Apartment-structured perceptron: topology, neurons, activations and the
//! forward pass.
//!
//! The network has one word-gated hidden layer and one plain sigmoid output
//! layer. Hidden and output neurons are grouped into *apartments*, one per
//! word. Every input component feeds every hidden neuron, but an output
//! neuron only sees the hidden neurons of its own apartment.
//!
//! Each hidden neuron also carries a constant word dendrite whose weight is
//! the apartment word. Presenting word `w >= 1` silences every apartment
//! whose word differs from `w`; presenting word `0` leaves all apartments
//! active.

use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word identifier presented alongside an input vector. `0` marks the
/// absence of language information.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct WordId(u32);

impl WordId {
    pub const NONE: WordId = WordId(0);

    pub const fn new(value: u32) -> Self {
        WordId(value)
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    pub const fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl From<u32> for WordId {
    fn from(value: u32) -> Self {
        WordId(value)
    }
}

impl fmt::Display for WordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apartment {
    pub word: WordId,
    pub hidden_count: usize,
    pub output_count: usize,
}

impl Apartment {
    pub fn new(word: impl Into<WordId>, hidden_count: usize, output_count: usize) -> Self {
        Apartment {
            word: word.into(),
            hidden_count,
            output_count,
        }
    }
}

/// Layer sizes and the word-to-apartment map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology")]
pub struct ApartmentTopology {
    input_dim: usize,
    apartments: Vec<Apartment>,
}

#[derive(Deserialize)]
struct RawTopology {
    input_dim: usize,
    apartments: Vec<Apartment>,
}

impl TryFrom<RawTopology> for ApartmentTopology {
    type Error = Error;

    fn try_from(raw: RawTopology) -> Result<Self> {
        ApartmentTopology::new(raw.input_dim, raw.apartments)
    }
}

impl ApartmentTopology {
    pub fn new(input_dim: usize, apartments: Vec<Apartment>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Topology("input dimension must be positive".into()));
        }
        let mut topology = ApartmentTopology {
            input_dim,
            apartments: Vec::with_capacity(apartments.len()),
        };
        for apartment in apartments {
            topology.push(apartment)?;
        }
        Ok(topology)
    }

    /// `words` apartments numbered `1..=words`, all of the same shape.
    pub fn uniform(
        input_dim: usize,
        words: u32,
        hidden_per_apartment: usize,
        outputs_per_apartment: usize,
    ) -> Result<Self> {
        let apartments = (1..=words)
            .map(|w| Apartment::new(w, hidden_per_apartment, outputs_per_apartment))
            .collect();
        ApartmentTopology::new(input_dim, apartments)
    }

    pub(crate) fn push(&mut self, apartment: Apartment) -> Result<()> {
        if apartment.word.is_none() {
            return Err(Error::ZeroWord(0));
        }
        if self.apartment_index(apartment.word).is_some() {
            return Err(Error::DuplicateWord(apartment.word.value()));
        }
        if apartment.hidden_count == 0 || apartment.output_count == 0 {
            return Err(Error::Topology(format!(
                "apartment {} needs at least one hidden and one output neuron",
                apartment.word
            )));
        }
        self.apartments.push(apartment);
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn apartments(&self) -> &[Apartment] {
        &self.apartments
    }

    pub fn hidden_total(&self) -> usize {
        self.apartments.iter().map(|a| a.hidden_count).sum()
    }

    pub fn output_total(&self) -> usize {
        self.apartments.iter().map(|a| a.output_count).sum()
    }

    pub fn apartment_index(&self, word: WordId) -> Option<usize> {
        self.apartments.iter().position(|a| a.word == word)
    }

    /// Hidden and output index ranges of every apartment, in order.
    pub fn spans(&self) -> Vec<ApartmentSpan> {
        let mut hidden = 0;
        let mut output = 0;
        self.apartments
            .iter()
            .map(|a| {
                let span = ApartmentSpan {
                    word: a.word,
                    hidden: hidden..hidden + a.hidden_count,
                    output: output..output + a.output_count,
                };
                hidden += a.hidden_count;
                output += a.output_count;
                span
            })
            .collect()
    }
}

/// Index ranges of one apartment inside the flat hidden and output layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApartmentSpan {
    pub word: WordId,
    pub hidden: Range<usize>,
    pub output: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub threshold: f64,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    word_weight: Option<u32>,
}

impl Neuron {
    pub fn new(threshold: f64, weights: Vec<f64>, word_weight: Option<u32>) -> Self {
        Neuron {
            threshold,
            weights,
            word_weight,
        }
    }

    /// Uniform draw from `[-2/nd, 2/nd]` for the threshold and every weight,
    /// where `nd` counts the threshold as one dendrite. The constant word
    /// dendrite is not counted.
    pub fn random<R: Rng + ?Sized>(fan_in: usize, word_weight: Option<u32>, rng: &mut R) -> Self {
        let bound = init_bound(fan_in);
        let mut draw = || rng.gen_range(-bound..=bound);
        let threshold = draw();
        let weights = (0..fan_in).map(|_| draw()).collect();
        Neuron {
            threshold,
            weights,
            word_weight,
        }
    }

    pub fn word_weight(&self) -> Option<u32> {
        self.word_weight
    }

    /// Trainable parameter count (threshold plus incoming weights).
    pub fn dendrites(&self) -> usize {
        self.weights.len() + 1
    }

    #[inline]
    fn net_input(&self, inputs: &[f64]) -> f64 {
        self.threshold
            + self
                .weights
                .iter()
                .zip(inputs)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

/// Half-width of the initialisation interval for a neuron with `fan_in`
/// incoming weights.
pub fn init_bound(fan_in: usize) -> f64 {
    2.0 / (fan_in + 1) as f64
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// An apartment with word `w_word` is inhibited when some other word is
/// presented.
#[inline]
pub fn is_inhibited(x_word: WordId, w_word: u32) -> bool {
    x_word.0 > 0 && x_word.0 != w_word
}

/// Sigmoid that outputs exactly zero when the presented word selects a
/// different apartment.
pub fn gated_sigmoid(pre_activation: f64, x_word: WordId, w_word: u32) -> Result<f64> {
    if w_word == 0 {
        return Err(Error::ZeroWord(0));
    }
    Ok(if is_inhibited(x_word, w_word) {
        0.0
    } else {
        sigmoid(pre_activation)
    })
}

/// Hidden and output activations of one forward pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub outputs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    topology: ApartmentTopology,
    hidden: Vec<Neuron>,
    output: Vec<Neuron>,
    spans: Vec<ApartmentSpan>,
}

impl Network {
    /// Assemble a network from explicit neurons, checking every layout
    /// invariant.
    pub fn from_parts(
        topology: ApartmentTopology,
        hidden: Vec<Neuron>,
        output: Vec<Neuron>,
    ) -> Result<Self> {
        if hidden.len() != topology.hidden_total() {
            return Err(Error::dim(
                "hidden neurons",
                topology.hidden_total(),
                hidden.len(),
            ));
        }
        if output.len() != topology.output_total() {
            return Err(Error::dim(
                "output neurons",
                topology.output_total(),
                output.len(),
            ));
        }
        let spans = topology.spans();
        for span in &spans {
            for neuron in &hidden[span.hidden.clone()] {
                if neuron.weights.len() != topology.input_dim {
                    return Err(Error::dim(
                        "hidden weights",
                        topology.input_dim,
                        neuron.weights.len(),
                    ));
                }
                if neuron.word_weight != Some(span.word.value()) {
                    return Err(Error::Topology(format!(
                        "hidden neuron of apartment {} has word weight {:?}",
                        span.word, neuron.word_weight
                    )));
                }
            }
            for neuron in &output[span.output.clone()] {
                if neuron.weights.len() != span.hidden.len() {
                    return Err(Error::dim(
                        "output weights",
                        span.hidden.len(),
                        neuron.weights.len(),
                    ));
                }
                if neuron.word_weight.is_some() {
                    return Err(Error::Topology(
                        "output neurons carry no word dendrite".into(),
                    ));
                }
            }
        }
        let all_finite = hidden
            .iter()
            .chain(&output)
            .all(|n| n.threshold.is_finite() && n.weights.iter().all(|w| w.is_finite()));
        if !all_finite {
            return Err(Error::Topology("non-finite parameter".into()));
        }
        Ok(Network {
            topology,
            hidden,
            output,
            spans,
        })
    }

    /// Network whose trainable parameters are all zero.
    pub fn zeroed(topology: ApartmentTopology) -> Self {
        let spans = topology.spans();
        let mut hidden = Vec::with_capacity(topology.hidden_total());
        let mut output = Vec::with_capacity(topology.output_total());
        for span in &spans {
            for _ in span.hidden.clone() {
                hidden.push(Neuron::new(
                    0.0,
                    vec![0.0; topology.input_dim],
                    Some(span.word.value()),
                ));
            }
            for _ in span.output.clone() {
                output.push(Neuron::new(0.0, vec![0.0; span.hidden.len()], None));
            }
        }
        Network {
            topology,
            hidden,
            output,
            spans,
        }
    }

    /// Network with no apartments yet.
    pub fn empty(input_dim: usize) -> Result<Self> {
        Ok(Network::zeroed(ApartmentTopology::new(
            input_dim,
            Vec::new(),
        )?))
    }

    pub(crate) fn random<R: Rng + ?Sized>(topology: ApartmentTopology, rng: &mut R) -> Self {
        let spans = topology.spans();
        let mut hidden = Vec::with_capacity(topology.hidden_total());
        let mut output = Vec::with_capacity(topology.output_total());
        for span in &spans {
            for _ in span.hidden.clone() {
                hidden.push(Neuron::random(
                    topology.input_dim,
                    Some(span.word.value()),
                    rng,
                ));
            }
            for _ in span.output.clone() {
                output.push(Neuron::random(span.hidden.len(), None, rng));
            }
        }
        Network {
            topology,
            hidden,
            output,
            spans,
        }
    }

    pub fn topology(&self) -> &ApartmentTopology {
        &self.topology
    }

    pub fn spans(&self) -> &[ApartmentSpan] {
        &self.spans
    }

    pub fn hidden_neurons(&self) -> &[Neuron] {
        &self.hidden
    }

    pub fn output_neurons(&self) -> &[Neuron] {
        &self.output
    }

    pub fn input_dim(&self) -> usize {
        self.topology.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output.len()
    }

    pub fn forward(&self, x: &[f64], word: WordId) -> Result<Vec<f64>> {
        Ok(self.activations(x, word)?.outputs)
    }

    pub fn activations(&self, x: &[f64], word: WordId) -> Result<Activations> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("input components", self.input_dim(), x.len()));
        }
        let mut acts = Activations {
            hidden: vec![0.0; self.hidden.len()],
            outputs: vec![0.0; self.output.len()],
        };
        self.forward_into(x, word, &mut acts);
        Ok(acts)
    }

    /// Forward pass into preallocated buffers. Dimensions must already be
    /// checked.
    pub(crate) fn forward_into(&self, x: &[f64], word: WordId, acts: &mut Activations) {
        for span in &self.spans {
            let hidden = &mut acts.hidden[span.hidden.clone()];
            if is_inhibited(word, span.word.value()) {
                hidden.fill(0.0);
            } else {
                for (h, neuron) in hidden.iter_mut().zip(&self.hidden[span.hidden.clone()]) {
                    let word_term = f64::from(neuron.word_weight.unwrap_or(0));
                    *h = sigmoid(neuron.net_input(x) + word_term);
                }
            }
            let hidden = &acts.hidden[span.hidden.clone()];
            for (o, neuron) in acts.outputs[span.output.clone()]
                .iter_mut()
                .zip(&self.output[span.output.clone()])
            {
                *o = sigmoid(neuron.net_input(hidden));
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden
            .iter()
            .chain(&self.output)
            .map(Neuron::dendrites)
            .sum()
    }

    /// Trainable parameters flattened neuron by neuron (hidden layer first,
    /// then outputs), threshold before weights.
    pub fn parameters(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.parameter_count());
        for neuron in self.hidden.iter().chain(&self.output) {
            flat.push(neuron.threshold);
            flat.extend_from_slice(&neuron.weights);
        }
        flat
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::dim("parameters", self.parameter_count(), flat.len()));
        }
        let mut it = flat.iter().copied();
        self.for_each_parameter(|p| *p = it.next().unwrap());
        Ok(())
    }

    pub(crate) fn for_each_parameter(&mut self, mut f: impl FnMut(&mut f64)) {
        for neuron in self.hidden.iter_mut().chain(self.output.iter_mut()) {
            f(&mut neuron.threshold);
            neuron.weights.iter_mut().for_each(&mut f);
        }
    }

    pub(crate) fn hidden_mut(&mut self) -> &mut [Neuron] {
        &mut self.hidden
    }

    pub(crate) fn output_mut(&mut self) -> &mut [Neuron] {
        &mut self.output
    }

    /// Returns a copy of this network extended with a fresh apartment for
    /// `word`. Existing parameters are carried over untouched.
    pub fn allocate_apartment<R: Rng + ?Sized>(
        &self,
        word: WordId,
        hidden_count: usize,
        output_count: usize,
        rng: &mut R,
    ) -> Result<Network> {
        let mut topology = self.topology.clone();
        topology.push(Apartment::new(word, hidden_count, output_count))?;

        let mut hidden = self.hidden.clone();
        let mut output = self.output.clone();
        hidden.extend(
            (0..hidden_count).map(|_| Neuron::random(topology.input_dim, Some(word.value()), rng)),
        );
        output.extend((0..output_count).map(|_| Neuron::random(hidden_count, None, rng)));
        let spans = topology.spans();
        Ok(Network {
            topology,
            hidden,
            output,
            spans,
        })
    }
}

use std::sync::Arc;

use rand::Rng;

use crate::error::NetError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Named, shape-tagged slices of one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParamLayout {
    entries: Vec<ParamEntry>,
    len: usize,
}

impl ParamLayout {
    /// Appends an array and returns its offset.
    pub(crate) fn push(&mut self, name: impl Into<String>, shape: Vec<usize>) -> usize {
        let offset = self.len;
        let entry = ParamEntry { name: name.into(), offset, shape };
        self.len += entry.len();
        self.entries.push(entry);
        offset
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// A flat parameter (or gradient) vector together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    layout: Arc<ParamLayout>,
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    pub fn from_values(layout: Arc<ParamLayout>, values: Vec<f64>) -> Result<Self, NetError> {
        if values.len() != layout.len() {
            return Err(NetError::Layout(format!("expected {} values, got {}", layout.len(), values.len())));
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn group(&self, name: &str) -> Option<&[f64]> {
        self.layout.entry(name).map(|e| &self.values[e.range()])
    }

    pub fn group_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.layout.entry(name)?.range();
        Some(&mut self.values[range])
    }

    pub fn fill(&mut self, x: f64) {
        self.values.iter_mut().for_each(|v| *v = x);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, source: &ParameterSet, tau: f64) {
        debug_assert_eq!(self.layout, source.layout);
        for (t, s) in self.values.iter_mut().zip(&source.values) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }

    pub fn l2_distance(&self, other: &ParameterSet) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub(crate) fn uniform<R: Rng + ?Sized>(&mut self, name: &str, bound: f64, rng: &mut R) {
        let range = self.layout.entry(name).expect("known group").range();
        for v in &mut self.values[range] {
            *v = rng.random_range(-bound..=bound);
        }
    }
}

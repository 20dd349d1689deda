//! Label sequences without timing information.

/// An ordered sequence of label indices over some alphabet.
///
/// A labelling carries no timing: it only records which labels occur and in
/// what order. The alphabet it refers to (a phone inventory, or the label
/// part of a CTC output layer) is tracked by the caller.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Labelling(Vec<usize>);

impl Labelling {
    pub fn new(labels: Vec<usize>) -> Self {
        Labelling(labels)
    }

    pub fn empty() -> Self {
        Labelling(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn push(&mut self, label: usize) {
        self.0.push(label);
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Labelling {
    fn from(labels: Vec<usize>) -> Self {
        Labelling(labels)
    }
}

impl From<&[usize]> for Labelling {
    fn from(labels: &[usize]) -> Self {
        Labelling(labels.to_vec())
    }
}

impl FromIterator<usize> for Labelling {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Labelling(iter.into_iter().collect())
    }
}

impl std::ops::Index<usize> for Labelling {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

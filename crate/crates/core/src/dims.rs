use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, labeled tensor factors of a Hilbert space.
///
/// Flattening is row-major over the factors: for labels (e, x, y) the
/// basis state |e, x, y> has index `e*(dx*dy) + x*dy + y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemDims {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl SubsystemDims {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>, dims: impl IntoIterator<Item = usize>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let dims: Vec<usize> = dims.into_iter().collect();
        if labels.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} labels but {} dimensions",
                labels.len(),
                dims.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Shape("at least one subsystem is required".into()));
        }
        if let Some(d) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Shape(format!("subsystem `{}` has dimension 0", labels[d])));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Usage(format!("duplicate subsystem label `{l}`")));
            }
        }
        Ok(Self { labels, dims })
    }

    /// A single unlabeled factor named `s`.
    pub fn single(n: usize) -> Self {
        Self::new(["s"], [n]).expect("n > 0")
    }

    /// The bipartite (x, y) layout.
    pub fn xy(dx: usize, dy: usize) -> Result<Self> {
        Self::new(["x", "y"], [dx, dy])
    }

    /// The tripartite (e, x, y) layout.
    pub fn exy(de: usize, dx: usize, dy: usize) -> Result<Self> {
        Self::new(["e", "x", "y"], [de, dx, dy])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.position(label)?])
    }

    pub fn has_labels(&self, labels: &[&str]) -> bool {
        self.labels.len() == labels.len() && self.labels.iter().zip(labels).all(|(a, b)| a == b)
    }

    /// Same dimensions, new labels.
    pub fn relabel<S: Into<String>>(&self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(labels, self.dims.iter().copied())
    }

    /// Restriction to the factors selected by `mask`, original order kept.
    pub(crate) fn restrict(&self, mask: &[bool]) -> Self {
        let (labels, dims) = self
            .labels
            .iter()
            .zip(&self.dims)
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|((l, &d), _)| (l.clone(), d))
            .unzip();
        Self { labels, dims }
    }

    /// Mask of factors named in `keep`. Errors on unknown names.
    pub(crate) fn mask_of(&self, keep: &[&str]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for label in keep {
            mask[self.position(label)?] = true;
        }
        Ok(mask)
    }

    /// For every flat index, its flat index within the selected factors and
    /// within the complementary factors.
    pub(crate) fn split_indices(&self, mask: &[bool]) -> Vec<(usize, usize)> {
        let n = self.total();
        let mut out = Vec::with_capacity(n);
        let mut digits = vec![0usize; self.len()];
        for _ in 0..n {
            let (mut kept, mut rest) = (0usize, 0usize);
            for (k, &d) in digits.iter().enumerate() {
                if mask[k] {
                    kept = kept * self.dims[k] + d;
                } else {
                    rest = rest * self.dims[k] + d;
                }
            }
            out.push((kept, rest));
            // increment the mixed-radix counter, last factor fastest
            for k in (0..self.len()).rev() {
                digits[k] += 1;
                if digits[k] < self.dims[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exy_flattening_rule() {
        let d = SubsystemDims::exy(3, 2, 4).unwrap();
        let mask = d.mask_of(&["e"]).unwrap();
        let split = d.split_indices(&mask);
        for e in 0..3 {
            for x in 0..2 {
                for y in 0..4 {
                    let flat = e * 8 + x * 4 + y;
                    assert_eq!(split[flat], (e, x * 4 + y));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(SubsystemDims::new(["a", "a"], [2, 2]).is_err());
        assert!(SubsystemDims::new(["a"], [2, 2]).is_err());
        assert!(SubsystemDims::new(["a"], [0]).is_err());
        assert!(matches!(
            SubsystemDims::xy(2, 2).unwrap().position("e"),
            Err(Error::UnknownLabel(_))
        ));
    }
}

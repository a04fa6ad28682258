use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Comparison carried by a split condition.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "op", rename_all = "snake_case"))]
pub enum SplitOp {
    Le { threshold: f64 },
    Gt { threshold: f64 },
    /// Sorted, deduplicated category codes.
    In { values: Vec<u32> },
    NotIn { values: Vec<u32> },
}

/// A single test `feature op argument`. Evaluating to true routes an
/// instance to the left child.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitCondition {
    pub feature: usize,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub op: SplitOp,
}

impl SplitCondition {
    pub fn le(feature: usize, threshold: f64) -> Self {
        SplitCondition { feature, op: SplitOp::Le { threshold } }
    }

    pub fn gt(feature: usize, threshold: f64) -> Self {
        SplitCondition { feature, op: SplitOp::Gt { threshold } }
    }

    pub fn is_in(feature: usize, values: impl IntoIterator<Item = u32>) -> Self {
        SplitCondition { feature, op: SplitOp::In { values: normalize(values) } }
    }

    pub fn not_in(feature: usize, values: impl IntoIterator<Item = u32>) -> Self {
        SplitCondition { feature, op: SplitOp::NotIn { values: normalize(values) } }
    }

    pub fn eval(&self, row: &[f64]) -> bool {
        let x = row[self.feature];
        match &self.op {
            SplitOp::Le { threshold } => x <= *threshold,
            SplitOp::Gt { threshold } => x > *threshold,
            SplitOp::In { values } => contains_code(values, x),
            SplitOp::NotIn { values } => !contains_code(values, x),
        }
    }

    /// The condition that holds exactly when `self` does not.
    pub fn negate(&self) -> Self {
        let op = match &self.op {
            SplitOp::Le { threshold } => SplitOp::Gt { threshold: *threshold },
            SplitOp::Gt { threshold } => SplitOp::Le { threshold: *threshold },
            SplitOp::In { values } => SplitOp::NotIn { values: values.clone() },
            SplitOp::NotIn { values } => SplitOp::In { values: values.clone() },
        };
        SplitCondition { feature: self.feature, op }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.op, SplitOp::In { .. } | SplitOp::NotIn { .. })
    }

    fn key(&self) -> (usize, u8, u64, &[u32]) {
        match &self.op {
            SplitOp::Le { threshold } => (self.feature, 0, threshold.to_bits(), &[]),
            SplitOp::Gt { threshold } => (self.feature, 1, threshold.to_bits(), &[]),
            SplitOp::In { values } => (self.feature, 2, 0, values),
            SplitOp::NotIn { values } => (self.feature, 3, 0, values),
        }
    }
}

fn normalize(values: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut v: Vec<u32> = values.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn contains_code(values: &[u32], x: f64) -> bool {
    x >= 0.0 && libm::trunc(x) == x && x <= u32::MAX as f64 && values.binary_search(&(x as u32)).is_ok()
}

// Thresholds compare by bit pattern so that identical splits from different
// trees deduplicate and the type can key ordered maps.
impl PartialEq for SplitCondition {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for SplitCondition {}

impl PartialOrd for SplitCondition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SplitCondition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl core::hash::Hash for SplitCondition {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

/// Renders with a generic `x<j>` feature name; see
/// [`SplitCondition::display_with`] for schema-aware output.
impl fmt::Display for SplitCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.op {
            SplitOp::Le { threshold } => write!(f, "x{} <= {}", self.feature, threshold),
            SplitOp::Gt { threshold } => write!(f, "x{} > {}", self.feature, threshold),
            SplitOp::In { values } => write!(f, "x{} in {:?}", self.feature, values),
            SplitOp::NotIn { values } => write!(f, "x{} not in {:?}", self.feature, values),
        }
    }
}

impl SplitCondition {
    /// Human-readable form using feature and category names.
    pub fn display_with<'a>(&'a self, features: &'a [crate::dataset::Feature]) -> impl fmt::Display + 'a {
        DisplayWith { cond: self, features }
    }
}

struct DisplayWith<'a> {
    cond: &'a SplitCondition,
    features: &'a [crate::dataset::Feature],
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(feat) = self.features.get(self.cond.feature) else {
            return write!(f, "{}", self.cond);
        };
        let write_set = |f: &mut fmt::Formatter<'_>, values: &[u32]| -> fmt::Result {
            f.write_str("{")?;
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                match feat.categories.get(*v as usize) {
                    Some(name) => f.write_str(name)?,
                    None => write!(f, "#{v}")?,
                }
            }
            f.write_str("}")
        };
        match &self.cond.op {
            SplitOp::Le { threshold } => write!(f, "{} <= {}", feat.name, threshold),
            SplitOp::Gt { threshold } => write!(f, "{} > {}", feat.name, threshold),
            SplitOp::In { values } => {
                write!(f, "{} in ", feat.name)?;
                write_set(f, values)
            }
            SplitOp::NotIn { values } => {
                write!(f, "{} not in ", feat.name)?;
                write_set(f, values)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn boundary_goes_left() {
        let c = SplitCondition::le(0, 0.5);
        assert!(c.eval(&[0.5]));
        assert!(!c.negate().eval(&[0.5]));
    }

    #[test]
    fn negation_is_involutive() {
        for c in [
            SplitCondition::le(1, 2.0),
            SplitCondition::gt(0, -1.0),
            SplitCondition::is_in(2, [3, 1]),
            SplitCondition::not_in(2, [5]),
        ] {
            assert_eq!(c.negate().negate(), c);
            assert_ne!(c.negate(), c);
        }
    }

    #[test]
    fn set_membership() {
        let c = SplitCondition::is_in(0, [2, 5, 2]);
        assert!(matches!(&c.op, SplitOp::In { values } if values == &vec![2, 5]));
        assert!(c.eval(&[5.0]));
        assert!(!c.eval(&[3.0]));
        assert!(c.negate().eval(&[3.0]));
    }

    #[test]
    fn named_display() {
        let feats = vec![
            crate::dataset::Feature::continuous("age"),
            crate::dataset::Feature::categorical("rel", ["Husband", "Own-child", "Wife"]),
        ];
        assert_eq!(format!("{}", SplitCondition::gt(0, 27.5).display_with(&feats)), "age > 27.5");
        assert_eq!(
            format!("{}", SplitCondition::is_in(1, [0, 2]).display_with(&feats)),
            "rel in {Husband, Wife}"
        );
    }
}

use crate::bitset::BitSet;

/// Raw confusion counts of a rule read as a binary classifier: covered rows
/// are predicted as the rule's class, the rule's class is the positive one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub true_pos: u32,
    pub true_neg: u32,
    pub false_pos: u32,
    pub false_neg: u32,
}

impl Confusion {
    pub fn n(&self) -> u32 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn covered(&self) -> u32 {
        self.true_pos + self.false_pos
    }
}

/// Per-rule metrics on the 0..=100 integer scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RuleMetrics {
    pub size: u32,
    pub support: u32,
    pub error_rate: u32,
    pub accuracy: u32,
    pub precision: u32,
    pub recall: u32,
    pub f1: u32,
    pub confusion: Confusion,
}

/// `round(100 * num / den)` with halves rounded up; 0 when `den` is 0.
pub fn scale(num: u64, den: u64) -> u32 {
    if den == 0 {
        return 0;
    }
    ((200 * num + den) / (2 * den)) as u32
}

impl RuleMetrics {
    pub fn from_confusion(size: u32, c: Confusion) -> Self {
        let (tp, tn, fp, fneg) =
            (c.true_pos as u64, c.true_neg as u64, c.false_pos as u64, c.false_neg as u64);
        let n = tp + tn + fp + fneg;
        let accuracy = scale(tp + tn, n);
        RuleMetrics {
            size,
            support: scale(tp + fp, n),
            error_rate: 100 - accuracy,
            accuracy,
            precision: scale(tp, tp + fp),
            recall: scale(tp, tp + fneg),
            // 2PR/(P+R) on raw ratios equals 2TP/(2TP+FP+FN)
            f1: scale(2 * tp, 2 * tp + fp + fneg),
            confusion: c,
        }
    }
}

/// Metrics of a rule with coverage mask `covered` predicting `class`.
pub fn compute_metrics(size: usize, class: usize, covered: &BitSet, labels: &[usize]) -> RuleMetrics {
    let mut c = Confusion::default();
    for (i, &y) in labels.iter().enumerate() {
        match (covered.contains(i), y == class) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    RuleMetrics::from_confusion(size as u32, c)
}

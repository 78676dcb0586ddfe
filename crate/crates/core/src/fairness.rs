//! Group fairness audit: demographic parity and equalized odds gaps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Cell;
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.05;

/// How a table column maps onto audit groups.
///
/// Raw values listed in `groups` are renamed; everything else becomes
/// `other` when set, or keeps its raw value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitiveSpec {
    pub attribute: String,
    pub column: String,
    #[serde(default)]
    pub groups: BTreeMap<String, String>,
    #[serde(default)]
    pub other: Option<String>,
}

impl SensitiveSpec {
    pub fn identity(column: &str) -> Self {
        SensitiveSpec {
            attribute: column.to_string(),
            column: column.to_string(),
            groups: BTreeMap::new(),
            other: None,
        }
    }

    /// Parental education split into high (bachelor's or above) and low.
    pub fn parental_education(column: &str) -> Self {
        SensitiveSpec {
            attribute: column.to_string(),
            column: column.to_string(),
            groups: BTreeMap::from([
                ("bachelor's degree".to_string(), "high".to_string()),
                ("master's degree".to_string(), "high".to_string()),
            ]),
            other: Some("low".to_string()),
        }
    }

    pub fn group_of(&self, cell: &Cell) -> String {
        let raw = match cell {
            Cell::Category(s) => s.clone(),
            Cell::Number(v) => v.to_string(),
            Cell::Missing => "missing".to_string(),
        };
        match self.groups.get(&raw) {
            Some(g) => g.clone(),
            None => self.other.clone().unwrap_or(raw),
        }
    }
}

/// Per-row group membership for one protected attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveAttribute {
    pub name: String,
    pub groups: Vec<String>,
    pub assignment: Vec<String>,
}

impl SensitiveAttribute {
    /// Groups are the distinct assigned labels, sorted.
    pub fn from_assignment(name: &str, assignment: Vec<String>) -> Self {
        let mut groups = assignment.clone();
        groups.sort();
        groups.dedup();
        SensitiveAttribute {
            name: name.to_string(),
            groups,
            assignment,
        }
    }

    /// Explicit group list; a listed group with no rows is an audit error.
    pub fn with_groups(name: &str, groups: Vec<String>, assignment: Vec<String>) -> Result<Self> {
        if let Some(g) = assignment.iter().find(|g| !groups.contains(g)) {
            return Err(Error::Fairness(format!("row assigned to undeclared group `{g}`")));
        }
        Ok(SensitiveAttribute {
            name: name.to_string(),
            groups,
            assignment,
        })
    }

    fn members(&self, group: &str) -> impl Iterator<Item = usize> + '_ {
        let group = group.to_string();
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, g)| **g == group)
            .map(|(i, _)| i)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.assignment.len() != n {
            return Err(Error::Shape(format!(
                "attribute `{}` has {} rows, predictions have {n}",
                self.name,
                self.assignment.len()
            )));
        }
        if self.groups.len() < 2 {
            return Err(Error::Fairness(format!(
                "attribute `{}` needs at least 2 groups, found {}",
                self.name,
                self.groups.len()
            )));
        }
        if let Some(g) = self.groups.iter().find(|g| self.members(g).next().is_none()) {
            return Err(Error::Fairness(format!(
                "group `{g}` of attribute `{}` is empty",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub label: String,
    pub positive_rate: f64,
    /// `None` when the group has no positive ground-truth rows.
    pub tpr: Option<f64>,
    /// `None` when the group has no negative ground-truth rows.
    pub fpr: Option<f64>,
    pub support: usize,
    /// Share of the group whose ground-truth label is positive.
    pub base_rate: f64,
}

impl GroupRates {
    fn defined(&self) -> Option<(f64, f64)> {
        Some((self.tpr?, self.fpr?))
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn group_rates(predictions: &[u8], labels: &[u8], attribute: &SensitiveAttribute) -> Vec<GroupRates> {
    attribute
        .groups
        .iter()
        .map(|g| {
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for i in attribute.members(g) {
                match (labels[i], predictions[i]) {
                    (1, 1) => tp += 1,
                    (0, 1) => fp += 1,
                    (1, _) => fn_ += 1,
                    _ => tn += 1,
                }
            }
            let support = tp + fp + fn_ + tn;
            GroupRates {
                label: g.clone(),
                positive_rate: (tp + fp) as f64 / support as f64,
                tpr: ratio(tp, tp + fn_),
                fpr: ratio(fp, fp + tn),
                support,
                base_rate: (tp + fn_) as f64 / support as f64,
            }
        })
        .collect()
}

fn max_pairwise(values: &[f64]) -> f64 {
    let mut gap: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            gap = gap.max((a - b).abs());
        }
    }
    gap
}

/// Largest absolute difference in positive-prediction rate between any
/// two groups.
pub fn demographic_parity_gap(predictions: &[u8], attribute: &SensitiveAttribute) -> Result<f64> {
    attribute.check(predictions.len())?;
    let rates: Vec<f64> = attribute
        .groups
        .iter()
        .map(|g| {
            let (pos, n) = attribute
                .members(g)
                .fold((0usize, 0usize), |(p, n), i| (p + usize::from(predictions[i] == 1), n + 1));
            pos as f64 / n as f64
        })
        .collect();
    Ok(max_pairwise(&rates))
}

fn eo_from_rates(attribute: &str, rates: &[GroupRates]) -> Result<f64> {
    let defined: Vec<(f64, f64)> = rates.iter().filter_map(GroupRates::defined).collect();
    if defined.len() < 2 {
        return Err(Error::Fairness(format!(
            "attribute `{attribute}`: fewer than two groups have both positive and negative rows"
        )));
    }
    let mut gap: f64 = 0.0;
    for (i, (tpr_a, fpr_a)) in defined.iter().enumerate() {
        for (tpr_b, fpr_b) in &defined[i + 1..] {
            gap = gap.max(0.5 * ((tpr_a - tpr_b).abs() + (fpr_a - fpr_b).abs()));
        }
    }
    Ok(gap)
}

/// Half the sum of absolute TPR and FPR differences, maximized over group
/// pairs. Groups lacking positives or negatives are left out.
pub fn equalized_odds_gap(predictions: &[u8], labels: &[u8], attribute: &SensitiveAttribute) -> Result<f64> {
    attribute.check(predictions.len())?;
    if labels.len() != predictions.len() {
        return Err(Error::Shape("labels and predictions differ in length".into()));
    }
    eo_from_rates(&attribute.name, &group_rates(predictions, labels, attribute))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeAudit {
    pub attribute: String,
    pub groups: Vec<GroupRates>,
    pub dp_gap: f64,
    pub eo_gap: f64,
    pub tau: f64,
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub tau: f64,
    pub attributes: Vec<AttributeAudit>,
}

impl FairnessReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeAudit> {
        self.attributes.iter().find(|a| a.attribute == name)
    }

    pub fn any_flagged(&self) -> bool {
        self.attributes.iter().any(|a| a.flagged)
    }

    /// Group-rate table behind the fairness bar chart.
    pub fn groups_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["attribute", "group", "positive_rate", "base_rate", "tpr", "fpr", "support"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for a in &self.attributes {
            for g in &a.groups {
                w.write_record([
                    a.attribute.clone(),
                    g.label.clone(),
                    g.positive_rate.to_string(),
                    g.base_rate.to_string(),
                    opt(g.tpr),
                    opt(g.fpr),
                    g.support.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

/// Audits every attribute; an attribute is flagged when either gap
/// exceeds `tau`.
pub fn audit(
    predictions: &[u8],
    labels: &[u8],
    attributes: &[SensitiveAttribute],
    tau: f64,
) -> Result<FairnessReport> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("tau must lie in [0, 1], got {tau}")));
    }
    if labels.len() != predictions.len() {
        return Err(Error::Shape("labels and predictions differ in length".into()));
    }
    let mut out = Vec::with_capacity(attributes.len());
    for attr in attributes {
        let dp_gap = demographic_parity_gap(predictions, attr)?;
        let groups = group_rates(predictions, labels, attr);
        let eo_gap = eo_from_rates(&attr.name, &groups)?;
        let warnings = groups
            .iter()
            .filter(|g| g.defined().is_none())
            .map(|g| {
                let msg = format!(
                    "group `{}` of `{}` lacks positive or negative rows; excluded from the equalized odds gap",
                    g.label, attr.name
                );
                log::warn!("{msg}");
                msg
            })
            .collect();
        out.push(AttributeAudit {
            attribute: attr.name.clone(),
            groups,
            dp_gap,
            eo_gap,
            tau,
            flagged: dp_gap > tau || eo_gap > tau,
            warnings,
        });
    }
    Ok(FairnessReport { tau, attributes: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Predictions giving `pos_a / n` and `pos_b / n` positive rates.
    fn two_groups(pos_a: usize, pos_b: usize, n: usize) -> (Vec<u8>, SensitiveAttribute) {
        let mut preds = Vec::new();
        let mut groups = Vec::new();
        for (label, pos) in [("a", pos_a), ("b", pos_b)] {
            for i in 0..n {
                preds.push(u8::from(i < pos));
                groups.push(label.to_string());
            }
        }
        (preds, SensitiveAttribute::from_assignment("g", groups))
    }

    #[test]
    fn dp_gap_gender_and_parental_examples() {
        let (p, a) = two_groups(67, 76, 100);
        assert_abs_diff_eq!(demographic_parity_gap(&p, &a).unwrap(), 0.09, epsilon = 1e-12);
        let (p, a) = two_groups(78, 67, 100);
        assert_abs_diff_eq!(demographic_parity_gap(&p, &a).unwrap(), 0.11, epsilon = 1e-12);
        let (p, a) = two_groups(30, 30, 50);
        assert_eq!(demographic_parity_gap(&p, &a).unwrap(), 0.0);
    }

    #[test]
    fn dp_gap_empty_group_errors() {
        let a = SensitiveAttribute::with_groups(
            "g",
            vec!["a".into(), "b".into()],
            vec!["a".into(), "a".into()],
        )
        .unwrap();
        assert!(demographic_parity_gap(&[1, 0], &a).is_err());
        let single = SensitiveAttribute::from_assignment("g", vec!["a".into(); 2]);
        assert!(demographic_parity_gap(&[1, 0], &single).is_err());
    }

    #[test]
    fn eo_gap_formula() {
        // group a: TPR 9/10, FPR 2/10; group b: TPR 8/10, FPR 1/10
        let mut preds = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for (g, tp, fp) in [("a", 9, 2), ("b", 8, 1)] {
            for i in 0..10 {
                labels.push(1);
                preds.push(u8::from(i < tp));
                groups.push(g.to_string());
            }
            for i in 0..10 {
                labels.push(0);
                preds.push(u8::from(i < fp));
                groups.push(g.to_string());
            }
        }
        let attr = SensitiveAttribute::from_assignment("g", groups);
        assert_abs_diff_eq!(equalized_odds_gap(&preds, &labels, &attr).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn eo_gap_zero_when_rates_match() {
        let labels = [1, 0, 1, 0];
        let preds = [1, 0, 1, 0];
        let attr = SensitiveAttribute::from_assignment("g", ["a", "a", "b", "b"].map(String::from).to_vec());
        assert_eq!(equalized_odds_gap(&preds, &labels, &attr).unwrap(), 0.0);
    }

    #[test]
    fn eo_gap_eight_row_hand_count() {
        // a: y=[1,1,0,0] yhat=[1,0,1,0] -> TPR 1/2, FPR 1/2
        // b: y=[1,1,1,0] yhat=[1,1,1,1] -> TPR 1,   FPR 1
        let labels = [1, 1, 0, 0, 1, 1, 1, 0];
        let preds = [1, 0, 1, 0, 1, 1, 1, 1];
        let attr = SensitiveAttribute::from_assignment(
            "g",
            ["a", "a", "a", "a", "b", "b", "b", "b"].map(String::from).to_vec(),
        );
        assert_abs_diff_eq!(equalized_odds_gap(&preds, &labels, &attr).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eo_gap_all_degenerate_errors_and_partial_is_excluded() {
        let attr = SensitiveAttribute::from_assignment("g", ["a", "a", "b", "b"].map(String::from).to_vec());
        assert!(equalized_odds_gap(&[1, 0, 1, 0], &[1, 1, 0, 0], &attr).is_err());

        let attr = SensitiveAttribute::from_assignment(
            "g",
            ["a", "a", "b", "b", "c"].map(String::from).to_vec(),
        );
        let report = audit(&[1, 0, 1, 1, 1], &[1, 0, 1, 0, 1], &[attr], 0.05).unwrap();
        let a = &report.attributes[0];
        assert_eq!(a.warnings.len(), 1);
        assert_eq!(a.groups[2].fpr, None);
        assert_abs_diff_eq!(a.eo_gap, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn audit_flags_against_tau() {
        let (p, a) = two_groups(67, 76, 100);
        let labels = p.clone();
        let r = audit(&p, &labels, std::slice::from_ref(&a), 0.05).unwrap();
        assert!(r.attributes[0].flagged);
        let r = audit(&p, &labels, std::slice::from_ref(&a), 1.0).unwrap();
        assert!(!r.any_flagged());
        let (p, a) = two_groups(50, 50, 100);
        let r = audit(&p, &p, &[a], 0.0).unwrap();
        assert!(!r.any_flagged());
    }

    #[test]
    fn parental_mapping_groups() {
        let spec = SensitiveSpec::parental_education("parental_education");
        assert_eq!(spec.group_of(&Cell::Category("master's degree".into())), "high");
        assert_eq!(spec.group_of(&Cell::Category("some college".into())), "low");
        assert_eq!(SensitiveSpec::identity("gender").group_of(&Cell::Category("male".into())), "male");
    }

    #[test]
    fn groups_csv_layout() {
        let (p, a) = two_groups(1, 2, 2);
        let r = audit(&p, &[1, 0, 1, 0], &[a], 0.05).unwrap();
        let csv = r.groups_csv().unwrap();
        assert!(csv.starts_with("attribute,group,positive_rate,base_rate,tpr,fpr,support\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    fn fixture() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<String>)> {
        prop::collection::vec((0u8..2, 0u8..2, 0usize..3), 6..40).prop_map(|rows| {
            let groups = ["x", "y", "z"];
            let mut p = Vec::new();
            let mut l = Vec::new();
            let mut g = Vec::new();
            // guarantee two non-degenerate groups
            for (i, (pp, ll)) in [(1, 1), (0, 0), (0, 1), (1, 0)].iter().enumerate() {
                p.push(*pp);
                l.push(*ll);
                g.push(groups[i / 2 % 2].to_string());
                p.push(*pp);
                l.push(1 - *ll);
                g.push(groups[i / 2 % 2].to_string());
            }
            for (pp, ll, gg) in rows {
                p.push(pp);
                l.push(ll);
                g.push(groups[gg].to_string());
            }
            (p, l, g)
        })
    }

    proptest! {
        #[test]
        fn gaps_invariant_under_row_permutation_and_relabeling(
            (p, l, g) in fixture(),
            rotate in 0usize..40,
        ) {
            let attr = SensitiveAttribute::from_assignment("g", g.clone());
            let base = audit(&p, &l, std::slice::from_ref(&attr), 0.05).unwrap();

            let n = p.len();
            let k = rotate % n;
            let perm: Vec<usize> = (0..n).map(|i| (i + k) % n).collect();
            let p2: Vec<u8> = perm.iter().map(|&i| p[i]).collect();
            let l2: Vec<u8> = perm.iter().map(|&i| l[i]).collect();
            let g2: Vec<String> = perm.iter().map(|&i| format!("renamed-{}", g[i])).collect();
            let attr2 = SensitiveAttribute::from_assignment("g", g2);
            let other = audit(&p2, &l2, &[attr2], 0.05).unwrap();
            prop_assert_eq!(base.attributes[0].dp_gap, other.attributes[0].dp_gap);
            prop_assert_eq!(base.attributes[0].eo_gap, other.attributes[0].eo_gap);
            prop_assert!((0.0..=1.0).contains(&base.attributes[0].dp_gap));
            prop_assert!((0.0..=1.0).contains(&base.attributes[0].eo_gap));
        }

        #[test]
        fn constant_predictions_have_zero_dp_gap((_, l, g) in fixture(), c in 0u8..2) {
            let attr = SensitiveAttribute::from_assignment("g", g);
            let p = vec![c; l.len()];
            prop_assert_eq!(demographic_parity_gap(&p, &attr).unwrap(), 0.0);
        }
    }
}

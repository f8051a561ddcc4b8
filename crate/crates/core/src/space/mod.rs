//! Conditional parameter spaces over categorical and ordinal choices.
//!
//! A [`ParamSpace`] is an ordered list of [`Parameter`]s plus single-parent
//! activation [`Condition`]s. Parameter order is the canonical column order
//! used by the encoder, the enumerator and the results files.
//!
//! A [`Configuration`] stores one slot per parameter: the index of the
//! chosen value, or `None` when the parameter is inactive because its
//! condition is not satisfied.

mod sample;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sample::{sample_lhs, sample_random};

/// Default seed for spaces that do not declare one.
pub const DEFAULT_SPACE_SEED: u64 = 1234;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("parameter `{0}` has no values")]
    EmptyValues(String),
    #[error("parameter `{param}` lists value {value:?} more than once")]
    DuplicateValue { param: String, value: String },
    #[error("parameter `{0}` has an empty-string value; use a blank such as \" \" instead")]
    EmptyValue(String),
    #[error("default {default:?} of parameter `{param}` is not one of its values")]
    DefaultNotInValues { param: String, default: String },
    #[error("condition on `{child}` references undeclared parameter `{missing}`")]
    UnknownConditionTarget { child: String, missing: String },
    #[error("condition on `{child}` allows {value:?}, which is not a value of `{parent}`")]
    UnknownAllowedValue { child: String, parent: String, value: String },
    #[error("condition on `{0}` allows no parent values")]
    EmptyAllowed(String),
    #[error("parameter `{0}` has more than one condition")]
    MultipleConditions(String),
    #[error("conditions form a cycle through `{0}`")]
    CyclicCondition(String),
    #[error("space size overflows a 64-bit count")]
    Overflow,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("value {value:?} is not in the domain of `{param}`")]
    ValueNotInDomain { param: String, value: String },
    #[error("space has {size} configurations, more than the enumeration limit {limit}")]
    SpaceTooLarge { size: u64, limit: u64 },
    #[error("configuration is invalid for this space: {0}")]
    InvalidConfiguration(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Categorical,
    Ordinal,
}

/// One tunable symbol. `name` is the text following `#` in the code mold,
/// so a parameter named `P3` binds the token `#P3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
    pub values: Vec<String>,
    pub default: String,
}

impl Parameter {
    pub fn categorical<S: Into<String>>(name: &str, values: Vec<S>, default: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Categorical,
            values: values.into_iter().map(Into::into).collect(),
            default: default.to_string(),
        }
    }

    pub fn ordinal<S: Into<String>>(name: &str, values: Vec<S>, default: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Ordinal,
            values: values.into_iter().map(Into::into).collect(),
            default: default.to_string(),
        }
    }

    pub fn position(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// `child` is active iff `parent` is active and its value is in `allowed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub child: String,
    pub parent: String,
    pub allowed: Vec<String>,
}

/// The serialized form of a space, as found in a problem file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDef {
    pub params: Vec<Parameter>,
    #[serde(default)]
    pub conditions: Vec<Condition>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SPACE_SEED
}

#[derive(Debug, Clone)]
struct Activation {
    parent: usize,
    allowed: Vec<bool>,
}

/// A validated, immutable parameter space.
#[derive(Debug, Clone)]
pub struct ParamSpace {
    params: Vec<Parameter>,
    conditions: Vec<Condition>,
    seed: u64,
    by_name: HashMap<String, usize>,
    activation: Vec<Option<Activation>>,
    // parents before children
    resolve_order: Vec<usize>,
    defaults: Vec<usize>,
    feature_len: usize,
}

/// One slot per parameter in canonical order; `None` marks an inactive
/// parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<Option<usize>>);

impl Configuration {
    pub fn from_slots(slots: Vec<Option<usize>>) -> Self {
        Self(slots)
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The assigned value of `name`, or `None` if the parameter is inactive
    /// or unknown.
    pub fn value<'s>(&self, space: &'s ParamSpace, name: &str) -> Option<&'s str> {
        let i = space.index_of(name)?;
        self.0[i].map(|v| space.params[i].values[v].as_str())
    }
}

impl ParamSpace {
    pub fn new(
        params: Vec<Parameter>,
        conditions: Vec<Condition>,
        seed: u64,
    ) -> Result<Self, SpaceError> {
        let mut by_name = HashMap::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            if by_name.insert(p.name.clone(), i).is_some() {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
            if p.values.is_empty() {
                return Err(SpaceError::EmptyValues(p.name.clone()));
            }
            for (j, v) in p.values.iter().enumerate() {
                if v.is_empty() {
                    return Err(SpaceError::EmptyValue(p.name.clone()));
                }
                if p.values[..j].contains(v) {
                    return Err(SpaceError::DuplicateValue {
                        param: p.name.clone(),
                        value: v.clone(),
                    });
                }
            }
            if p.position(&p.default).is_none() {
                return Err(SpaceError::DefaultNotInValues {
                    param: p.name.clone(),
                    default: p.default.clone(),
                });
            }
        }

        let mut activation: Vec<Option<Activation>> = vec![None; params.len()];
        for c in &conditions {
            let child = *by_name
                .get(&c.child)
                .ok_or_else(|| SpaceError::UnknownConditionTarget {
                    child: c.child.clone(),
                    missing: c.child.clone(),
                })?;
            let parent = *by_name
                .get(&c.parent)
                .ok_or_else(|| SpaceError::UnknownConditionTarget {
                    child: c.child.clone(),
                    missing: c.parent.clone(),
                })?;
            if child == parent {
                return Err(SpaceError::CyclicCondition(c.child.clone()));
            }
            if activation[child].is_some() {
                return Err(SpaceError::MultipleConditions(c.child.clone()));
            }
            if c.allowed.is_empty() {
                return Err(SpaceError::EmptyAllowed(c.child.clone()));
            }
            let mut allowed = vec![false; params[parent].values.len()];
            for v in &c.allowed {
                let pos = params[parent]
                    .position(v)
                    .ok_or_else(|| SpaceError::UnknownAllowedValue {
                        child: c.child.clone(),
                        parent: c.parent.clone(),
                        value: v.clone(),
                    })?;
                allowed[pos] = true;
            }
            activation[child] = Some(Activation { parent, allowed });
        }

        let resolve_order = resolve_order(&params, &activation)?;
        let defaults = params
            .iter()
            .map(|p| p.position(&p.default).expect("checked above"))
            .collect();
        let feature_len = params
            .iter()
            .map(|p| match p.kind {
                ParamKind::Ordinal => 1,
                ParamKind::Categorical => p.values.len(),
            })
            .sum();

        Ok(Self {
            params,
            conditions,
            seed,
            by_name,
            activation,
            resolve_order,
            defaults,
            feature_len,
        })
    }

    pub fn from_def(def: &SpaceDef) -> Result<Self, SpaceError> {
        Self::new(def.params.clone(), def.conditions.clone(), def.seed)
    }

    pub fn to_def(&self) -> SpaceDef {
        SpaceDef {
            params: self.params.clone(),
            conditions: self.conditions.clone(),
            seed: self.seed,
        }
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn has_ordinal(&self) -> bool {
        self.params.iter().any(|p| p.kind == ParamKind::Ordinal)
    }

    /// Cross product of the value counts, ignoring conditions.
    pub fn size(&self) -> Result<u64, SpaceError> {
        self.params.iter().try_fold(1u64, |acc, p| {
            acc.checked_mul(p.values.len() as u64)
                .ok_or(SpaceError::Overflow)
        })
    }

    /// Applies the activation conditions to a full raw assignment of value
    /// indices, blanking every parameter whose condition fails.
    pub fn resolve_indices(&self, raw: &[usize]) -> Configuration {
        debug_assert_eq!(raw.len(), self.params.len());
        let mut slots: Vec<Option<usize>> = vec![None; raw.len()];
        for &i in &self.resolve_order {
            let active = match &self.activation[i] {
                None => true,
                Some(a) => slots[a.parent].is_some_and(|pv| a.allowed[pv]),
            };
            if active {
                slots[i] = Some(raw[i]);
            }
        }
        Configuration(slots)
    }

    /// Resolves a partial name → value assignment. Absent parameters take
    /// their default before conditions are applied.
    pub fn resolve_activity<K, V>(&self, raw: &BTreeMap<K, V>) -> Result<Configuration, SpaceError>
    where
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut idx = self.defaults.clone();
        for (name, value) in raw {
            let (name, value) = (name.as_ref(), value.as_ref());
            let i = self
                .index_of(name)
                .ok_or_else(|| SpaceError::UnknownParameter(name.to_string()))?;
            idx[i] = self.params[i]
                .position(value)
                .ok_or_else(|| SpaceError::ValueNotInDomain {
                    param: name.to_string(),
                    value: value.to_string(),
                })?;
        }
        Ok(self.resolve_indices(&idx))
    }

    pub fn default_configuration(&self) -> Configuration {
        self.resolve_indices(&self.defaults)
    }

    /// Checks every configuration invariant against this space.
    pub fn check(&self, config: &Configuration) -> Result<(), SpaceError> {
        let slots = config.slots();
        if slots.len() != self.params.len() {
            return Err(SpaceError::InvalidConfiguration(format!(
                "{} slots for {} parameters",
                slots.len(),
                self.params.len()
            )));
        }
        for (i, p) in self.params.iter().enumerate() {
            let should_be_active = match &self.activation[i] {
                None => true,
                Some(a) => slots[a.parent].is_some_and(|pv| a.allowed[pv]),
            };
            match (slots[i], should_be_active) {
                (Some(v), true) if v < p.values.len() => {}
                (Some(v), true) => {
                    return Err(SpaceError::InvalidConfiguration(format!(
                        "`{}` has out-of-range value index {v}",
                        p.name
                    )))
                }
                (None, false) => {}
                (Some(_), false) => {
                    return Err(SpaceError::InvalidConfiguration(format!(
                        "`{}` is assigned but its condition fails",
                        p.name
                    )))
                }
                (None, true) => {
                    return Err(SpaceError::InvalidConfiguration(format!(
                        "`{}` is inactive but its condition holds",
                        p.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Length of the vectors produced by [`ParamSpace::encode`].
    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    /// Numeric features for surrogate fitting. Ordinals map to
    /// `rank / (k - 1)`, categoricals to a one-hot block, and every slot of
    /// an inactive parameter is `-1`.
    pub fn encode(&self, config: &Configuration) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.feature_len);
        self.encode_into(config, &mut out);
        out
    }

    pub fn encode_into(&self, config: &Configuration, out: &mut Vec<f64>) {
        for (p, slot) in self.params.iter().zip(config.slots()) {
            let k = p.values.len();
            match (p.kind, slot) {
                (ParamKind::Ordinal, Some(rank)) => {
                    out.push(if k > 1 {
                        *rank as f64 / (k - 1) as f64
                    } else {
                        0.0
                    });
                }
                (ParamKind::Ordinal, None) => out.push(-1.0),
                (ParamKind::Categorical, Some(choice)) => {
                    out.extend((0..k).map(|j| if j == *choice { 1.0 } else { 0.0 }));
                }
                (ParamKind::Categorical, None) => out.extend(std::iter::repeat_n(-1.0, k)),
            }
        }
    }

    /// All distinct activity-resolved configurations in lexicographic slot
    /// order (inactive sorts first).
    pub fn enumerate(&self, limit: u64) -> Result<Vec<Configuration>, SpaceError> {
        let size = self.size()?;
        if size > limit {
            return Err(SpaceError::SpaceTooLarge { size, limit });
        }
        let radices: Vec<usize> = self.params.iter().map(|p| p.values.len()).collect();
        let mut raw = vec![0usize; radices.len()];
        let mut out = Vec::with_capacity(size as usize);
        loop {
            out.push(self.resolve_indices(&raw));
            // odometer, last parameter fastest
            let mut pos = radices.len();
            loop {
                if pos == 0 {
                    out.sort_unstable();
                    out.dedup();
                    return Ok(out);
                }
                pos -= 1;
                raw[pos] += 1;
                if raw[pos] < radices[pos] {
                    break;
                }
                raw[pos] = 0;
            }
        }
    }

    /// The value text of each slot, `None` for inactive parameters.
    pub fn values_of<'s>(&'s self, config: &Configuration) -> Vec<Option<&'s str>> {
        self.params
            .iter()
            .zip(config.slots())
            .map(|(p, s)| s.map(|v| p.values[v].as_str()))
            .collect()
    }

    /// Name → substitution text, with inactive parameters bound to `""`.
    pub fn bindings<'s>(&'s self, config: &Configuration) -> HashMap<&'s str, &'s str> {
        self.params
            .iter()
            .zip(self.values_of(config))
            .map(|(p, v)| (p.name.as_str(), v.unwrap_or("")))
            .collect()
    }

    /// Parses per-slot value text (as read back from a results file) into a
    /// configuration. `None` marks an inactive slot.
    pub fn parse_values(&self, values: &[Option<&str>]) -> Result<Configuration, SpaceError> {
        if values.len() != self.params.len() {
            return Err(SpaceError::InvalidConfiguration(format!(
                "{} values for {} parameters",
                values.len(),
                self.params.len()
            )));
        }
        let slots = self
            .params
            .iter()
            .zip(values)
            .map(|(p, v)| match v {
                None => Ok(None),
                Some(text) => p.position(text).map(Some).ok_or_else(|| {
                    SpaceError::ValueNotInDomain {
                        param: p.name.clone(),
                        value: text.to_string(),
                    }
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let config = Configuration(slots);
        self.check(&config)?;
        Ok(config)
    }
}

impl fmt::Display for ParamSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.params {
            let kind = match p.kind {
                ParamKind::Categorical => "categorical",
                ParamKind::Ordinal => "ordinal",
            };
            writeln!(f, "{} ({kind}, {} values)", p.name, p.values.len())?;
        }
        for c in &self.conditions {
            writeln!(f, "{} active iff {} in {:?}", c.child, c.parent, c.allowed)?;
        }
        Ok(())
    }
}

fn resolve_order(
    params: &[Parameter],
    activation: &[Option<Activation>],
) -> Result<Vec<usize>, SpaceError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; params.len()];
    let mut order = Vec::with_capacity(params.len());
    for start in 0..params.len() {
        let mut chain = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                2 => break,
                1 => return Err(SpaceError::CyclicCondition(params[cur].name.clone())),
                _ => {}
            }
            state[cur] = 1;
            chain.push(cur);
            match &activation[cur] {
                Some(a) => cur = a.parent,
                None => break,
            }
        }
        for &i in chain.iter().rev() {
            state[i] = 2;
            order.push(i);
        }
    }
    Ok(order)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const PACK_A: &str = "#pragma clang loop(j2) pack array(A) allocate(malloc)";
    pub(crate) const PACK_B: &str = "#pragma clang loop(i1) pack array(B) allocate(malloc)";
    pub(crate) const INTERCHANGE: &str =
        "#pragma clang loop(i1,j1,k1,i2,j2) interchange permutation(j1,k1,i1,j2,i2)";

    pub(crate) fn syr2k() -> ParamSpace {
        let tiles = |last: &'static str| {
            let mut v = vec!["4", "8", "16", "20", "32", "50", "64", "80"];
            v.extend(["100", "128", last]);
            v
        };
        ParamSpace::new(
            vec![
                Parameter::categorical("P0", vec![PACK_A, " "], " "),
                Parameter::categorical("P1", vec![PACK_B, " "], " "),
                Parameter::categorical("P2", vec![INTERCHANGE, " "], " "),
                Parameter::ordinal(
                    "P3",
                    vec!["4", "8", "16", "20", "32", "50", "64", "80", "96", "100", "128"],
                    "96",
                ),
                Parameter::ordinal("P4", tiles("2048"), "2048"),
                Parameter::ordinal("P5", tiles("256"), "256"),
            ],
            vec![Condition {
                child: "P1".into(),
                parent: "P0".into(),
                allowed: vec![PACK_A.into()],
            }],
            1234,
        )
        .unwrap()
    }

    pub(crate) fn parent_child() -> ParamSpace {
        ParamSpace::new(
            vec![
                Parameter::categorical("A", vec!["on", "off"], "off"),
                Parameter::categorical("B", vec!["x", "y"], "x"),
            ],
            vec![Condition {
                child: "B".into(),
                parent: "A".into(),
                allowed: vec!["on".into()],
            }],
            0,
        )
        .unwrap()
    }

    #[test]
    fn syr2k_space_is_valid_and_sized() {
        let s = syr2k();
        assert_eq!(s.len(), 6);
        assert_eq!(s.size().unwrap(), 10_648);
        assert_eq!(s.feature_len(), 2 + 2 + 2 + 3);
    }

    #[test]
    fn single_categorical_is_valid() {
        let s = ParamSpace::new(vec![Parameter::categorical("a", vec!["a", "b"], "a")], vec![], 0)
            .unwrap();
        assert_eq!(s.size().unwrap(), 2);
    }

    #[test]
    fn single_parameter_size_is_value_count() {
        for k in 1..8 {
            let vals: Vec<String> = (0..k).map(|i| i.to_string()).collect();
            let s = ParamSpace::new(vec![Parameter::ordinal("x", vals, "0")], vec![], 0).unwrap();
            assert_eq!(s.size().unwrap(), k as u64);
        }
    }

    #[test]
    fn self_condition_is_cyclic() {
        let err = ParamSpace::new(
            vec![Parameter::categorical("a", vec!["x", "y"], "x")],
            vec![Condition {
                child: "a".into(),
                parent: "a".into(),
                allowed: vec!["x".into()],
            }],
            0,
        )
        .unwrap_err();
        assert_eq!(err, SpaceError::CyclicCondition("a".into()));
    }

    #[test]
    fn two_cycle_is_rejected() {
        let p = |n: &str| Parameter::categorical(n, vec!["x", "y"], "x");
        let c = |child: &str, parent: &str| Condition {
            child: child.into(),
            parent: parent.into(),
            allowed: vec!["x".into()],
        };
        let err = ParamSpace::new(vec![p("a"), p("b"), p("c")], vec![c("a", "b"), c("b", "a")], 0)
            .unwrap_err();
        assert!(matches!(err, SpaceError::CyclicCondition(_)));
    }

    #[test]
    fn construction_errors() {
        let dup = ParamSpace::new(
            vec![
                Parameter::categorical("a", vec!["x"], "x"),
                Parameter::categorical("a", vec!["y"], "y"),
            ],
            vec![],
            0,
        );
        assert_eq!(dup.unwrap_err(), SpaceError::DuplicateName("a".into()));

        let bad_default =
            ParamSpace::new(vec![Parameter::ordinal("a", vec!["1", "2"], "3")], vec![], 0);
        assert!(matches!(bad_default, Err(SpaceError::DefaultNotInValues { .. })));

        let unknown = ParamSpace::new(
            vec![Parameter::categorical("a", vec!["x"], "x")],
            vec![Condition {
                child: "a".into(),
                parent: "zz".into(),
                allowed: vec!["x".into()],
            }],
            0,
        );
        assert!(matches!(unknown, Err(SpaceError::UnknownConditionTarget { .. })));

        let repeated =
            ParamSpace::new(vec![Parameter::categorical("a", vec!["x", "x"], "x")], vec![], 0);
        assert!(matches!(repeated, Err(SpaceError::DuplicateValue { .. })));
    }

    #[test]
    fn blank_p0_deactivates_p1() {
        let s = syr2k();
        let raw: BTreeMap<&str, &str> = [("P0", " "), ("P1", PACK_B), ("P2", " "), ("P3", "4")]
            .into_iter()
            .collect();
        let c = s.resolve_activity(&raw).unwrap();
        assert_eq!(c.value(&s, "P1"), None);
        assert_eq!(c.slots()[1], None);
        s.check(&c).unwrap();
    }

    #[test]
    fn pack_a_keeps_p1() {
        let s = syr2k();
        let raw: BTreeMap<&str, &str> = [("P0", PACK_A), ("P1", PACK_B)].into_iter().collect();
        let c = s.resolve_activity(&raw).unwrap();
        assert_eq!(c.value(&s, "P1"), Some(PACK_B));
        assert_eq!(c.value(&s, "P3"), Some("96"));
    }

    #[test]
    fn unconditioned_space_resolves_to_input() {
        let s = ParamSpace::new(
            vec![
                Parameter::categorical("a", vec!["x", "y"], "x"),
                Parameter::ordinal("b", vec!["1", "2", "3"], "1"),
            ],
            vec![],
            0,
        )
        .unwrap();
        for raw in [[0, 0], [1, 2], [0, 1]] {
            assert_eq!(s.resolve_indices(&raw).slots(), &[Some(raw[0]), Some(raw[1])]);
        }
    }

    #[test]
    fn resolve_rejects_out_of_domain() {
        let s = syr2k();
        let raw: BTreeMap<&str, &str> = [("P3", "7")].into_iter().collect();
        assert!(matches!(
            s.resolve_activity(&raw),
            Err(SpaceError::ValueNotInDomain { .. })
        ));
    }

    #[test]
    fn chained_conditions_propagate_inactivity() {
        let p = |n: &str| Parameter::categorical(n, vec!["on", "off"], "on");
        let c = |child: &str, parent: &str| Condition {
            child: child.into(),
            parent: parent.into(),
            allowed: vec!["on".into()],
        };
        // declared child-first to exercise the resolve order
        let s = ParamSpace::new(vec![p("c"), p("b"), p("a")], vec![c("c", "b"), c("b", "a")], 0)
            .unwrap();
        let cfg = s.resolve_indices(&[0, 0, 1]);
        assert_eq!(cfg.slots(), &[None, None, Some(1)]);
        assert_eq!(s.enumerate(100).unwrap().len(), 1 + 1 + 2);
    }

    #[test]
    fn ordinal_encoding_ranks() {
        let s = syr2k();
        let enc = |p3: &str| {
            let raw: BTreeMap<&str, &str> = [("P3", p3)].into_iter().collect();
            s.encode(&s.resolve_activity(&raw).unwrap())[6]
        };
        assert_eq!(enc("4"), 0.0);
        assert_eq!(enc("128"), 1.0);
        assert!((enc("32") - 0.4).abs() < 1e-15);
    }

    #[test]
    fn inactive_encodes_as_minus_one() {
        let s = syr2k();
        let raw: BTreeMap<&str, &str> = [("P0", " ")].into_iter().collect();
        let v = s.encode(&s.resolve_activity(&raw).unwrap());
        assert_eq!(&v[0..2], &[0.0, 1.0]);
        assert_eq!(&v[2..4], &[-1.0, -1.0]);
        assert_eq!(v.len(), s.feature_len());
    }

    #[test]
    fn enumerate_small_spaces() {
        let two = ParamSpace::new(
            vec![
                Parameter::categorical("a", vec!["x", "y"], "x"),
                Parameter::categorical("b", vec!["x", "y"], "x"),
            ],
            vec![],
            0,
        )
        .unwrap();
        assert_eq!(two.enumerate(10).unwrap().len(), 4);

        // 4 raw assignments; B collapses to inactive under A=off
        let pc = parent_child();
        let all = pc.enumerate(10).unwrap();
        assert_eq!(all.len(), 3);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }

    #[test]
    fn enumerate_respects_limit() {
        let s = syr2k();
        assert!(matches!(s.enumerate(100), Err(SpaceError::SpaceTooLarge { .. })));
        let all = s.enumerate(20_000).unwrap();
        assert!(all.len() <= 10_648);
        // P0 blank collapses the P1 choice: 1 + 2 parent branches times the rest
        assert_eq!(all.len(), 3 * 2 * 11 * 11 * 11);
    }

    #[test]
    fn size_overflow() {
        let vals: Vec<String> = (0..65536).map(|i| i.to_string()).collect();
        let params = (0..5)
            .map(|i| Parameter::ordinal(&format!("p{i}"), vals.clone(), "0"))
            .collect();
        let s = ParamSpace::new(params, vec![], 0).unwrap();
        assert_eq!(s.size(), Err(SpaceError::Overflow));
    }

    #[test]
    fn parse_values_round_trip() {
        let s = syr2k();
        for c in s.enumerate(20_000).unwrap().iter().step_by(97) {
            let vals = s.values_of(c);
            assert_eq!(&s.parse_values(&vals).unwrap(), c);
        }
    }
}

//! Experiment configs. Values are pulled out of the raw JSON one field at a
//! time so that every complaint can name the offending JSON pointer.

use std::collections::BTreeMap;

use amalfree::algebra::{AlgebraConfig, AlgebraWithExpectation, CenteredElement};
use amalfree::free_group::{GroupFunction, ReducedWord};
use amalfree::linalg::{c, CVector, C64};
use amalfree::word::Word;
use serde_json::Value;

use crate::error::CliError;

pub const KINDS: [&str; 8] = [
    "validate-algebra",
    "fock-report",
    "lemma-check",
    "haagerup-sweep",
    "ergodic-decay",
    "group-haagerup",
    "group-shift",
    "rd-report",
];

/// A view of one JSON node together with its pointer.
#[derive(Clone, Copy)]
pub struct Node<'a> {
    pub value: &'a Value,
    pointer: &'a str,
}

pub type Result<T> = std::result::Result<T, CliError>;

fn bad(pointer: String, message: impl Into<String>) -> CliError {
    CliError::Config {
        pointer,
        message: message.into(),
    }
}

impl<'a> Node<'a> {
    pub fn root(value: &'a Value) -> Self {
        Node { value, pointer: "" }
    }

    pub fn pointer(&self) -> &str {
        self.pointer
    }

    fn child_pointer(&self, key: &str) -> String {
        format!("{}/{}", self.pointer, key.replace('~', "~0").replace('/', "~1"))
    }

    /// Evaluates `f` on the child `key`, which must exist.
    pub fn with<T>(&self, key: &str, f: impl FnOnce(Node<'_>) -> Result<T>) -> Result<T> {
        let pointer = self.child_pointer(key);
        let value = self.value.get(key).ok_or_else(|| bad(pointer.clone(), "missing field"))?;
        f(Node {
            value,
            pointer: &pointer,
        })
    }

    /// Evaluates `f` on the child `key` when present.
    pub fn with_opt<T>(&self, key: &str, f: impl FnOnce(Node<'_>) -> Result<T>) -> Result<Option<T>> {
        match self.value.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.with(key, f).map(Some),
        }
    }

    /// Evaluates `f` on every element of an array node.
    pub fn each<T>(&self, mut f: impl FnMut(usize, Node<'_>) -> Result<T>) -> Result<Vec<T>> {
        let items = self
            .value
            .as_array()
            .ok_or_else(|| bad(self.pointer.to_string(), "expected an array"))?;
        items
            .iter()
            .enumerate()
            .map(|(i, value)| {
                let pointer = format!("{}/{i}", self.pointer);
                f(
                    i,
                    Node {
                        value,
                        pointer: &pointer,
                    },
                )
            })
            .collect()
    }

    pub fn error(&self, message: impl Into<String>) -> CliError {
        bad(self.pointer.to_string(), message)
    }

    pub fn as_usize(&self) -> Result<usize> {
        self.value
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| self.error("expected a nonnegative integer"))
    }

    pub fn as_positive(&self) -> Result<usize> {
        match self.as_usize()? {
            0 => Err(self.error("expected a positive integer")),
            v => Ok(v),
        }
    }

    pub fn as_i64(&self) -> Result<i64> {
        self.value.as_i64().ok_or_else(|| self.error("expected an integer"))
    }

    pub fn as_u64(&self) -> Result<u64> {
        self.value.as_u64().ok_or_else(|| self.error("expected a nonnegative integer"))
    }

    pub fn as_f64(&self) -> Result<f64> {
        self.value.as_f64().ok_or_else(|| self.error("expected a number"))
    }

    pub fn as_str(&self) -> Result<&'a str> {
        self.value.as_str().ok_or_else(|| self.error("expected a string"))
    }

    pub fn as_bool(&self) -> Result<bool> {
        self.value.as_bool().ok_or_else(|| self.error("expected a boolean"))
    }

    /// `[re, im]`, or a bare real number.
    pub fn as_complex(&self) -> Result<C64> {
        if let Some(x) = self.value.as_f64() {
            return Ok(c(x, 0.0));
        }
        match self.value.as_array().map(Vec::as_slice) {
            Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                (Some(re), Some(im)) => Ok(c(re, im)),
                _ => Err(self.error("expected [re, im]")),
            },
            _ => Err(self.error("expected a number or [re, im]")),
        }
    }

    pub fn as_coords(&self) -> Result<CVector> {
        let entries = self.each(|_, n| n.as_complex())?;
        Ok(CVector::from_vec(entries))
    }

    pub fn as_algebra(&self) -> Result<AlgebraWithExpectation> {
        let config: AlgebraConfig =
            serde_json::from_value(self.value.clone()).map_err(|e| self.error(format!("not an algebra spec: {e}")))?;
        config.build().map_err(|e| self.error(e.to_string()))
    }
}

/// The top-level fields shared by every kind.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: String,
    pub seed: Option<u64>,
    pub max_dim: Option<usize>,
    pub output: Option<String>,
    pub parameters: Value,
    pub raw: Value,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| bad(String::new(), format!("invalid JSON: {e}")))?;
        Self::from_value(raw)
    }

    pub fn from_value(raw: Value) -> Result<Self> {
        let root = Node::root(&raw);
        if !raw.is_object() {
            return Err(root.error("expected a JSON object"));
        }
        let kind = root.with("kind", |n| {
            let kind = n.as_str()?;
            if KINDS.contains(&kind) {
                Ok(kind.to_string())
            } else {
                Err(n.error(format!("unknown kind `{kind}`; expected one of {}", KINDS.join(", "))))
            }
        })?;
        let seed = root.with_opt("seed", |n| n.as_u64())?;
        let max_dim = root.with_opt("max_dim", |n| n.as_positive())?;
        let output = root.with_opt("output", |n| n.as_str().map(String::from))?;
        let parameters = root.with("parameters", |n| {
            if n.value.is_object() {
                Ok(n.value.clone())
            } else {
                Err(n.error("expected an object"))
            }
        })?;
        Ok(ExperimentConfig {
            kind,
            seed,
            max_dim,
            output,
            parameters,
            raw,
        })
    }

    /// Node for `/parameters`.
    pub fn params(&self) -> Node<'_> {
        Node {
            value: &self.parameters,
            pointer: "/parameters",
        }
    }
}

/// `[{"indices": [...], "algebra": {...}}, ...]` into index ↦ algebra.
pub fn factors(node: Node<'_>) -> Result<BTreeMap<i64, AlgebraWithExpectation>> {
    let mut out = BTreeMap::new();
    node.each(|_, entry| {
        let algebra = entry.with("algebra", |n| n.as_algebra())?;
        entry.with("indices", |n| {
            n.each(|_, i| {
                let index = i.as_i64()?;
                if out.insert(index, algebra.clone()).is_some() {
                    return Err(i.error(format!("index {index} is listed twice")));
                }
                Ok(())
            })
        })?;
        Ok(())
    })?;
    Ok(out)
}

/// `{"index": i, "coords": [...], "center": bool}` for an algebra copied at every index.
pub fn letter(node: Node<'_>, lookup: &dyn Fn(i64) -> Option<AlgebraWithExpectation>) -> Result<CenteredElement> {
    let index = node.with("index", |n| n.as_i64())?;
    let spec = lookup(index).ok_or_else(|| node.error(format!("index {index} has no algebra")))?;
    let coords = node.with("coords", |n| {
        let v = n.as_coords()?;
        if v.len() != spec.algebra().dim() {
            return Err(n.error(format!("expected {} coordinates, found {}", spec.algebra().dim(), v.len())));
        }
        Ok(v)
    })?;
    let center = node.with_opt("center", |n| n.as_bool())?.unwrap_or(false);
    let element = spec.algebra().element(&coords);
    let letter = if center {
        spec.center(index, &element)
    } else {
        CenteredElement::new(index, &spec, element)
    };
    letter.map_err(|e| node.error(e.to_string()))
}

pub fn word(node: Node<'_>, lookup: &dyn Fn(i64) -> Option<AlgebraWithExpectation>) -> Result<Word> {
    let letters = node.each(|_, n| letter(n, lookup))?;
    Word::new(letters).map_err(|e| node.error(e.to_string()))
}

/// `[{"word": "g0 g1^-1", "coeff": [re, im]}, ...]`.
pub fn group_function(node: Node<'_>) -> Result<GroupFunction> {
    let terms = node.each(|_, term| {
        let w: ReducedWord = term.with("word", |n| n.as_str()?.parse().map_err(|e: amalfree::Error| n.error(e.to_string())))?;
        let coeff = term.with_opt("coeff", |n| n.as_complex())?.unwrap_or(c(1.0, 0.0));
        Ok((w, coeff))
    })?;
    Ok(GroupFunction::from_terms(terms))
}

pub fn reduced_word(node: Node<'_>) -> Result<ReducedWord> {
    node.as_str()?.parse().map_err(|e: amalfree::Error| node.error(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn missing_fields_report_their_pointer() {
        let cfg = ExperimentConfig::from_value(json!({"kind": "lemma-check", "parameters": {}})).unwrap();
        let err = cfg.params().with("M", |n| n.as_usize()).unwrap_err();
        assert_eq!(err.pointer(), Some("/parameters/M"));
        let err = ExperimentConfig::from_value(json!({"kind": "nope", "parameters": {}})).unwrap_err();
        assert_eq!(err.pointer(), Some("/kind"));
        let err = ExperimentConfig::from_value(json!({"kind": "lemma-check"})).unwrap_err();
        assert_eq!(err.pointer(), Some("/parameters"));
    }

    #[test]
    fn factor_lists_and_letters() {
        let v = json!([
            {"indices": [0, 1], "algebra": {"preset": "function_algebra_with_state", "weights": [0.5, 0.5]}},
            {"indices": [1], "algebra": {"preset": "function_algebra_with_state", "weights": [0.5, 0.5]}}
        ]);
        let err = factors(Node::root(&v)).unwrap_err();
        assert_eq!(err.pointer(), Some("/1/indices/0"));
        let f = factors(Node::root(&json!([{"indices": [2, 5], "algebra": {"preset": "scalars_in_matn", "n": 2}}]))).unwrap();
        assert_eq!(f.keys().copied().collect::<Vec<_>>(), vec![2, 5]);

        let spec = AlgebraWithExpectation::two_point();
        let lookup = |_: i64| Some(spec.clone());
        let l = json!({"index": 3, "coords": [[1, 0], [-1, 0]]});
        assert_eq!(letter(Node::root(&l), &lookup).unwrap().owner(), 3);
        let l = json!({"index": 3, "coords": [1, 0]});
        assert!(letter(Node::root(&l), &lookup).is_err());
        let l = json!({"index": 3, "coords": [1, 0], "center": true});
        assert!(letter(Node::root(&l), &lookup).is_ok());
    }

    #[test]
    fn group_functions_parse() {
        let f = group_function(Node::root(&json!([{"word": "g0 g1^-1"}, {"word": "e", "coeff": [0, 2]}]))).unwrap();
        assert_eq!(f.trace_tau(), c(0.0, 2.0));
        let err = group_function(Node::root(&json!([{"word": "h0"}]))).unwrap_err();
        assert_eq!(err.pointer(), Some("/0/word"));
    }
}

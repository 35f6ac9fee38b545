//! Built-in experiment configs.

use serde_json::{json, Value};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// The statement the preset exercises.
    pub statement: &'static str,
    pub config: fn() -> Value,
}

fn two_point() -> Value {
    json!({"preset": "function_algebra_with_state", "weights": [0.5, 0.5]})
}

fn diagonal_m2() -> Value {
    json!({"preset": "diagonal_in_matn", "n": 2})
}

fn unit_letter(index: i64) -> Value {
    json!({"index": index, "coords": [1, -1]})
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "lemma-check",
        description: "block decomposition of w P_m on two-point and diagonal-M2 contexts, M = 6",
        statement: "word decomposition lemma: P_r w P_m as products of creation, diagonal and annihilation operators",
        config: || {
            json!({
                "kind": "lemma-check",
                "parameters": {
                    "M": 6,
                    "words": 100,
                    "max_length": 4,
                    "contexts": [
                        {"name": "two-point-two-factors", "factors": [{"indices": [0, 1], "algebra": two_point()}]},
                        {"name": "two-point-three-factors", "factors": [{"indices": [0, 1, 2], "algebra": two_point()}]},
                        {"name": "m2-diagonal-two-factors", "factors": [{"indices": [0, 1], "algebra": diagonal_m2()}]}
                    ]
                }
            })
        },
    },
    Preset {
        name: "haagerup-sweep",
        description: "50 random separated word families, n <= 3, |K| <= 6, six two-point factors, M = 6",
        statement: "generalized Haagerup inequality ||f|| <= (2n+1) gamma, and the block bound ||P_r f P_m||^2 <= gamma^2",
        config: || {
            json!({
                "kind": "haagerup-sweep",
                "max_dim": 25000,
                "parameters": {
                    "M": 6,
                    "random_families": 50,
                    "max_length": 3,
                    "max_family_size": 6,
                    "factors": [{"indices": [0, 1, 2, 3, 4, 5], "algebra": two_point()}]
                }
            })
        },
    },
    Preset {
        name: "fshift-p1",
        description: "free-shift averages of one unit letter on the two-point algebra, n = 1..16",
        statement: "free-shift decay ||(1/n) sum alpha^k(w)|| <= (2p+1)/sqrt(n) and the Cesaro expectation",
        config: || {
            json!({
                "kind": "ergodic-decay",
                "parameters": {
                    "M": 3,
                    "n_max": 16,
                    "algebra": two_point(),
                    "prototype": [unit_letter(0)],
                    "cesaro": {"b": [[0.5, 0]], "coefficient": 1}
                }
            })
        },
    },
    Preset {
        name: "fshift-p2",
        description: "free-shift averages of a two-letter unit word on the two-point algebra, n = 1..16",
        statement: "free-shift decay ||(1/n) sum alpha^k(w)|| <= (2p+1)/sqrt(n)",
        config: || {
            json!({
                "kind": "ergodic-decay",
                "parameters": {
                    "M": 3,
                    "n_max": 16,
                    "algebra": two_point(),
                    "prototype": [unit_letter(0), unit_letter(1)]
                }
            })
        },
    },
    Preset {
        name: "group-haagerup",
        description: "Haagerup inequality for homogeneous functions on the free group, R = 8",
        statement: "free group Haagerup inequality ||lambda(f)|| <= (p+1)||f||_2",
        config: || {
            json!({
                "kind": "group-haagerup",
                "parameters": {
                    "R": 8,
                    "functions": [
                        [{"word": "g0"}],
                        [{"word": "g0 g1^-1 g0"}],
                        [{"word": "g0", "coeff": 0.25}, {"word": "g1", "coeff": 0.25}, {"word": "g2", "coeff": 0.25}, {"word": "g3", "coeff": 0.25}],
                        [{"word": "g0 g1", "coeff": [1, 0]}, {"word": "g1 g0^-1", "coeff": [0, 2]}, {"word": "g1^-1 g1^-1", "coeff": -1}]
                    ]
                }
            })
        },
    },
    Preset {
        name: "group-shift",
        description: "shift averages of g0 on the free group, n in {1, 4, 9, 16}, R = 8",
        statement: "free group shift average ||(1/n) sum lambda(g_k)|| <= (p+1)/sqrt(n)",
        config: || {
            json!({
                "kind": "group-shift",
                "parameters": {"word": "g0", "n": [1, 4, 9, 16], "R": 8}
            })
        },
    },
    Preset {
        name: "rd-report",
        description: "length-weighted Sobolev norms and length-wise norm checks, s = 2",
        statement: "property (RD) for word length on the free group",
        config: || {
            json!({
                "kind": "rd-report",
                "parameters": {
                    "s": 2.0,
                    "R": 6,
                    "function": [{"word": "e"}, {"word": "g0", "coeff": 0.5}, {"word": "g1^-1", "coeff": 0.5}, {"word": "g0 g1", "coeff": [0, 0.25]}]
                }
            })
        },
    },
    Preset {
        name: "validate-algebra",
        description: "expectation axioms for a weighted three-point function algebra",
        statement: "conditional expectation axioms and GNS module construction",
        config: || {
            json!({
                "kind": "validate-algebra",
                "parameters": {"algebra": {"preset": "function_algebra_with_state", "weights": [0.2, 0.3, 0.5]}}
            })
        },
    },
    Preset {
        name: "fock-report",
        description: "dimensions and basis labels of the diagonal-M2 Fock module, M = 3",
        statement: "amalgamated Fock module construction",
        config: || {
            json!({
                "kind": "fock-report",
                "parameters": {"M": 3, "factors": [{"indices": [0, 1], "algebra": diagonal_m2()}]}
            })
        },
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

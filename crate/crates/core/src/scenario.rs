//! Scenario documents and the builtin scenarios.
//!
//! The document format is described in `docs/scenario-format.md`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::distribution::SplitSpec;
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::immersion::Immersion;
use crate::manifold::{builtin_ambient, builtin_ambient_names, AmbientDoc, AmbientStructure};
use crate::report::Expect;
use crate::runner::check_ids;
use crate::sampling::Sampling;
use crate::warped::{WarpDoc, WarpSpec};

/// A validated scenario. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Set when the ambient is one of the builtin structures.
    pub ambient_builtin: Option<String>,
    pub immersion: Immersion,
    pub split: SplitSpec,
    pub warp: Option<WarpSpec>,
    pub sampling: Sampling,
    /// Tolerance overrides by check id.
    pub tolerances: BTreeMap<String, f64>,
    /// Declared outcomes by check id; the key `*` sets the default.
    pub expect: BTreeMap<String, Expect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub ambient: AmbientField,
    pub immersion: ImmersionDoc,
    pub split: SplitDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp: Option<WarpDoc>,
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, Expect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmbientField {
    Builtin(String),
    Inline(InlineAmbient),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineAmbient {
    #[serde(default = "inline_name")]
    pub name: String,
    #[serde(flatten)]
    pub doc: AmbientDoc,
}

fn inline_name() -> String {
    "inline".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionDoc {
    pub params: Vec<String>,
    pub target: Vec<String>,
}

/// Split by parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitDoc {
    pub d: Vec<String>,
    pub theta: Vec<String>,
    pub xi: String,
}

fn collect<T>(r: Result<T>, problems: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(Error::Invalid(list)) => {
            problems.extend(list);
            None
        }
        Err(e) => {
            problems.push(e.to_string());
            None
        }
    }
}

impl Scenario {
    /// Parses and validates a scenario document, reporting every problem.
    pub fn load(text: &str) -> Result<Scenario> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        Scenario::from_doc(&doc)
    }

    pub fn from_doc(doc: &ScenarioDoc) -> Result<Scenario> {
        let mut problems = Vec::new();
        let (ambient, ambient_builtin) = match &doc.ambient {
            AmbientField::Builtin(name) => (collect(builtin_ambient(name), &mut problems), Some(name.clone())),
            AmbientField::Inline(inline) => (
                collect(AmbientStructure::from_doc(inline.name.clone(), &inline.doc), &mut problems),
                None,
            ),
        };

        let params = &doc.immersion.params;
        let mut target = Vec::new();
        for (i, s) in doc.immersion.target.iter().enumerate() {
            match parse(s) {
                Ok(e) => target.push(e),
                Err(err) => problems.push(format!("immersion target component {i} `{s}`: {err}")),
            }
        }
        let immersion = match ambient {
            Some(amb) if target.len() == doc.immersion.target.len() => {
                collect(Immersion::new(params.clone(), target, amb), &mut problems)
            }
            Some(amb) if doc.immersion.target.len() != amb.dim() => {
                problems.push(format!(
                    "immersion target has {} components but the ambient dimension is {}",
                    doc.immersion.target.len(),
                    amb.dim()
                ));
                None
            }
            _ => None,
        };

        let index = |name: &String, problems: &mut Vec<String>| -> usize {
            match params.iter().position(|p| p == name) {
                Some(i) => i,
                None => {
                    problems.push(format!("split names unknown parameter `{name}`"));
                    usize::MAX
                }
            }
        };
        let split = SplitSpec {
            d: doc.split.d.iter().map(|n| index(n, &mut problems)).collect(),
            theta: doc.split.theta.iter().map(|n| index(n, &mut problems)).collect(),
            xi: index(&doc.split.xi, &mut problems),
        };
        let split_ok = !split.d.iter().chain(&split.theta).any(|&i| i == usize::MAX) && split.xi != usize::MAX;
        if split_ok {
            split.validate(params.len(), &mut problems);
        }

        let warp = doc.warp.as_ref().and_then(|w| WarpSpec::from_doc(w, &mut problems));
        if let Some(w) = &warp {
            w.validate(params, &mut problems);
            if !w.factor1.contains(&doc.split.xi) && !w.factor2.contains(&doc.split.xi) {
                problems.push(format!("ξ-aligned parameter `{}` is in neither warp factor", doc.split.xi));
            }
        }

        doc.sampling.validate(params.len(), &mut problems);

        let known = check_ids();
        for (id, tol) in &doc.tolerances {
            if !known.contains(&id.as_str()) {
                problems.push(format!("tolerance override for unknown check `{id}`"));
            }
            if !(tol.is_finite() && *tol > 0.0) {
                problems.push(format!("tolerance for `{id}` must be a positive number, got {tol}"));
            }
        }
        for id in doc.expect.keys() {
            if id != "*" && !known.contains(&id.as_str()) {
                problems.push(format!("expectation for unknown check `{id}`"));
            }
        }

        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        Ok(Scenario {
            name: doc.name.clone(),
            ambient_builtin,
            immersion: immersion.expect("no problems recorded"),
            split,
            warp,
            sampling: doc.sampling.clone(),
            tolerances: doc.tolerances.clone(),
            expect: doc.expect.clone(),
        })
    }

    pub fn to_doc(&self) -> ScenarioDoc {
        let params = self.immersion.params();
        let name = |i: &usize| params[*i].clone();
        let amb = self.immersion.ambient();
        ScenarioDoc {
            name: self.name.clone(),
            ambient: match &self.ambient_builtin {
                Some(b) => AmbientField::Builtin(b.clone()),
                None => AmbientField::Inline(InlineAmbient {
                    name: amb.name.clone(),
                    doc: amb.to_doc(),
                }),
            },
            immersion: ImmersionDoc {
                params: params.to_vec(),
                target: self.immersion.target().iter().map(ToString::to_string).collect(),
            },
            split: SplitDoc {
                d: self.split.d.iter().map(name).collect(),
                theta: self.split.theta.iter().map(name).collect(),
                xi: name(&self.split.xi),
            },
            warp: self.warp.as_ref().map(WarpSpec::to_doc),
            sampling: self.sampling.clone(),
            tolerances: self.tolerances.clone(),
            expect: self.expect.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scenario serializes")
    }

    /// Declared outcome for a check, before any diagnostic override.
    pub fn expectation(&self, id: &str) -> Option<Expect> {
        self.expect.get(id).or_else(|| self.expect.get("*")).copied()
    }
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "example1",
    "example2",
    "example2_cr",
    "example2_perturbed",
    "example2_paper_literal",
];

pub const DEFAULT_THETA: f64 = FRAC_PI_4;

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn build(doc: ScenarioDoc) -> Scenario {
    Scenario::from_doc(&doc).unwrap_or_else(|e| panic!("builtin scenario `{}` is invalid: {e}", doc.name))
}

fn example2_box() -> Sampling {
    Sampling::SeededBox {
        bounds: vec![[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-0.5, 0.5]],
        count: crate::sampling::DEFAULT_COUNT,
        seed: crate::sampling::DEFAULT_SEED,
    }
}

/// The slant immersion into `ℝ ×_{e^z} ℂ⁴` with the angle written into the
/// last two target components.
fn example2_doc(name: String, ambient: &str, y3: String, y4: String, warping: &str, theta: f64) -> ScenarioDoc {
    ScenarioDoc {
        name,
        ambient: AmbientField::Builtin(ambient.to_string()),
        immersion: ImmersionDoc {
            params: strings(&["u1", "u2", "u3", "u4", "z"]),
            target: vec![
                "u1".into(),
                "0".into(),
                "u3".into(),
                "0".into(),
                "u2".into(),
                "0".into(),
                y3,
                y4,
                "z".into(),
            ],
        },
        split: SplitDoc {
            d: strings(&["u1", "u2"]),
            theta: strings(&["u3", "u4"]),
            xi: "z".into(),
        },
        warp: Some(WarpDoc {
            factor1: strings(&["u1", "u2", "z"]),
            factor2: strings(&["u3", "u4"]),
            warping: warping.to_string(),
            slant_theta: Some(format!("{theta:?}")),
        }),
        sampling: example2_box(),
        tolerances: BTreeMap::new(),
        expect: BTreeMap::new(),
    }
}

fn expect_map(default: Option<Expect>, fails: &[&str]) -> BTreeMap<String, Expect> {
    let mut m: BTreeMap<String, Expect> = fails.iter().map(|id| (id.to_string(), Expect::Fail)).collect();
    if let Some(d) = default {
        m.insert("*".into(), d);
    }
    m
}

/// Builtin scenarios. `theta0` applies to `example2` only and defaults to
/// [`DEFAULT_THETA`].
pub fn builtin(name: &str, theta0: Option<f64>) -> Result<Scenario> {
    if theta0.is_some() && name != "example2" {
        return Err(Error::Precondition(format!("builtin `{name}` takes no slant constant")));
    }
    let ambient_names = builtin_ambient_names();
    Ok(match name {
        "example1" => build(ScenarioDoc {
            name: "example1".into(),
            ambient: AmbientField::Builtin(ambient_names[0].into()),
            immersion: ImmersionDoc {
                params: strings(&["u", "v", "v3", "v4", "z"]),
                target: strings(&[
                    "cos(u + v)",
                    "u - v",
                    "u/2 + v",
                    "v3 + v4",
                    "sin(u + v)",
                    "v - u",
                    "u + v/2",
                    "v4 - v3",
                    "z",
                ]),
            },
            split: SplitDoc {
                d: strings(&["v3", "v4"]),
                theta: strings(&["u", "v"]),
                xi: "z".into(),
            },
            warp: None,
            sampling: Sampling::unit_box(5),
            tolerances: BTreeMap::new(),
            // The flat ambient is almost contact metric but not Kenmotsu.
            expect: expect_map(None, &["kenmotsu_phi", "kenmotsu_xi"]),
        }),
        "example2" => {
            let theta = theta0.unwrap_or(DEFAULT_THETA);
            if !(theta > 0.0 && theta < FRAC_PI_2) {
                return Err(Error::ThetaOutOfRange(theta));
            }
            build(example2_doc(
                format!("example2(theta0={theta:.6})"),
                ambient_names[1],
                format!("u4*cos({theta:?})"),
                format!("u4*sin({theta:?})"),
                "exp(z)",
                theta,
            ))
        }
        "example2_cr" => build(example2_doc(
            "example2_cr".into(),
            ambient_names[1],
            "0".into(),
            "u4".into(),
            "exp(z)",
            FRAC_PI_2,
        )),
        "example2_perturbed" => {
            // Same immersion, declared with a warping function that is not
            // the one the induced metric carries.
            let mut doc = example2_doc(
                "example2_perturbed".into(),
                ambient_names[1],
                format!("u4*cos({FRAC_PI_3:?})"),
                format!("u4*sin({FRAC_PI_3:?})"),
                "exp(z)*(1 + 0.1*sin(u1))",
                FRAC_PI_3,
            );
            doc.expect = expect_map(
                None,
                &[
                    "block_quotient",
                    "warp_connection",
                    "mixed_h_fw",
                    "mixed_h_pz_fw",
                    "mixed_h_fpw",
                    "mixed_h_pz_fpw",
                    "characterization",
                    "h_norm_bound",
                    "slant_leaf_umbilic",
                    "equality_consistency",
                ],
            );
            build(doc)
        }
        "example2_paper_literal" => {
            let mut doc = example2_doc(
                "example2_paper_literal".into(),
                ambient_names[2],
                format!("u4*cos({FRAC_PI_4:?})"),
                format!("u4*sin({FRAC_PI_4:?})"),
                "exp(z)",
                FRAC_PI_4,
            );
            doc.expect = expect_map(
                Some(Expect::Any),
                &["almost_contact", "kenmotsu_phi", "kenmotsu_xi", "xi_log_derivative"],
            );
            build(doc)
        }
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    })
}

/// Scenarios exercised by the full verification suite.
pub fn full_suite() -> Vec<Scenario> {
    let mut out = vec![builtin("example1", None).expect("builtin")];
    for t in [std::f64::consts::FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        out.push(builtin("example2", Some(t)).expect("builtin"));
    }
    for name in ["example2_cr", "example2_perturbed", "example2_paper_literal"] {
        out.push(builtin(name, None).expect("builtin"));
    }
    out
}

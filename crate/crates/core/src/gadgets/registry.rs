use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::families::{acyclic_chain, fan_family, Bottom, FanFamily, FanRoot};
use super::gamblers_ruin::gamblers_ruin;
use super::ladder::{no_optimal_ladder, LadderGadget, LadderState, NoOptimalLadder, Rung};
use super::meta::GadgetMeta;
use super::self_loop::lazy_self_loop_example;
use crate::error::{Error, Result};
use crate::mdp::{GeneralStrategy, Mdp, StateId};

/// A constructed gadget with its preferred initial state.
#[derive(Clone)]
pub struct Gadget {
    pub mdp: Arc<dyn Mdp>,
    pub meta: GadgetMeta,
    pub initial: StateId,
    /// A strategy that comes with the gadget, if any.
    pub strategy: Option<GeneralStrategy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub default: Option<Value>,
    pub doc: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetInfo {
    pub name: String,
    pub doc: String,
    pub params: Vec<ParamSpec>,
}

fn param(name: &str, ty: &str, default: Option<Value>, doc: &str) -> ParamSpec {
    ParamSpec { name: name.into(), ty: ty.into(), default, doc: doc.into() }
}

/// Registered gadgets and their parameters, in a fixed order.
pub fn list_gadgets() -> Vec<GadgetInfo> {
    vec![
        GadgetInfo {
            name: "acyclic_chain".into(),
            doc: "transient chain x_0 -> x_1 -> ...".into(),
            params: vec![],
        },
        GadgetInfo {
            name: "fan".into(),
            doc: "infinitely branching fan of splits r_j (1 - 2^-j to a chain, else bottom)".into(),
            params: vec![
                param("root", "string", Some("controlled".into()), "controlled | random | random_then_controlled"),
                param("bottom", "string", Some("loop".into()), "loop | chain"),
            ],
        },
        GadgetInfo {
            name: "gamblers_ruin".into(),
            doc: "random walk with restart, up with probability p".into(),
            params: vec![param("p", "float", None, "probability of stepping up, in (0,1)")],
        },
        GadgetInfo {
            name: "lazy_self_loop".into(),
            doc: "s_0 loops or leaves to a chain; ships the round-based strategy".into(),
            params: vec![],
        },
        GadgetInfo {
            name: "no_optimal_ladder".into(),
            doc: "recurrent ladder with gambles r_i; value 1 at ell_0, no optimal strategy".into(),
            params: vec![],
        },
        GadgetInfo {
            name: "recurrent_ladder".into(),
            doc: "standalone recurrent ladder with absorbing exits t_1..t_m".into(),
            params: vec![param("exits", "int", Some(1.into()), "number of exits, at least 1")],
        },
    ]
}

fn get_str<'a>(params: &'a Value, key: &str, default: &'a str) -> Result<&'a str> {
    match params.get(key) {
        None => Ok(default),
        Some(Value::String(s)) => Ok(s),
        Some(v) => Err(Error::BadParameter(format!("{key}: expected string, got {v}"))),
    }
}

/// Builds a gadget from `{"gadget": name, ...params}`.
pub fn build_gadget(spec: &Value) -> Result<Gadget> {
    let name = spec
        .get("gadget")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::BadParameter("missing \"gadget\" field".into()))?;
    let plain = |mdp: Arc<dyn Mdp>, meta: GadgetMeta, initial: StateId| Gadget { mdp, meta, initial, strategy: None };
    match name {
        "gamblers_ruin" => {
            let p = spec
                .get("p")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::BadParameter("gamblers_ruin needs a float \"p\"".into()))?;
            let (g, meta) = gamblers_ruin(p)?;
            Ok(plain(Arc::new(g), meta, StateId(0)))
        }
        "no_optimal_ladder" => {
            let (g, meta) = no_optimal_ladder();
            Ok(plain(Arc::new(g), meta, NoOptimalLadder::id(LadderState::Ell(0))))
        }
        "recurrent_ladder" => {
            let m = match spec.get("exits") {
                None => 1,
                Some(v) => v.as_u64().ok_or_else(|| Error::BadParameter("exits: expected integer".into()))?,
            };
            let g = LadderGadget::new(m as usize)?;
            let meta = GadgetMeta::new("recurrent_ladder").param("exits", m);
            Ok(plain(Arc::new(g), meta, LadderGadget::node(Rung::Ell(0))))
        }
        "lazy_self_loop" => {
            let (g, strategy, meta) = lazy_self_loop_example();
            Ok(Gadget { mdp: Arc::new(g), meta, initial: StateId(0), strategy: Some(strategy) })
        }
        "acyclic_chain" => {
            let (g, meta) = acyclic_chain();
            Ok(plain(Arc::new(g), meta, StateId(0)))
        }
        "fan" => {
            let root = match get_str(spec, "root", "controlled")? {
                "controlled" => FanRoot::Controlled,
                "random" => FanRoot::Random,
                "random_then_controlled" => FanRoot::RandomThenControlled,
                other => return Err(Error::BadParameter(format!("root: unknown shape '{other}'"))),
            };
            let bottom = match get_str(spec, "bottom", "loop")? {
                "loop" => Bottom::SelfLoop,
                "chain" => Bottom::Chain,
                other => return Err(Error::BadParameter(format!("bottom: unknown kind '{other}'"))),
            };
            let (g, meta) = fan_family(root, bottom);
            Ok(plain(Arc::new(g), meta, FanFamily::root_id()))
        }
        other => Err(Error::UnknownGadget(other.into())),
    }
}

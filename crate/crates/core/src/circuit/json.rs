use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, GateId, GateKind};
use crate::error::CircuitError;

/// On-disk circuit description. Integers are decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDef {
    pub num_inputs: usize,
    pub output: GateId,
    pub gates: Vec<GateDef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Input,
    Const,
    Add,
    Mul,
    Div,
    Exp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDef {
    pub id: GateId,
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<GateId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<usize>,
}

impl GateDef {
    fn into_gate(self) -> Result<Gate, CircuitError> {
        let bad = |msg: &str| CircuitError::Parse(format!("gate {}: {msg}", self.id));
        let kind = match self.kind {
            KindTag::Input => GateKind::Input {
                var: self.var.ok_or_else(|| bad("input gate needs \"var\""))?,
            },
            KindTag::Const => {
                let text = self
                    .value
                    .as_deref()
                    .ok_or_else(|| bad("const gate needs \"value\""))?;
                let value = text
                    .trim()
                    .parse::<BigInt>()
                    .map_err(|_| bad(&format!("bad integer {text:?}")))?;
                GateKind::Const { value }
            }
            KindTag::Add => GateKind::Add,
            KindTag::Mul => GateKind::Mul,
            KindTag::Div => GateKind::Div,
            KindTag::Exp => GateKind::Exp,
        };
        if self.var.is_some() && self.kind != KindTag::Input {
            return Err(bad("\"var\" is only allowed on input gates"));
        }
        if self.value.is_some() && self.kind != KindTag::Const {
            return Err(bad("\"value\" is only allowed on const gates"));
        }
        Ok(Gate {
            id: self.id,
            kind,
            children: self.children,
        })
    }

    fn from_gate(g: &Gate) -> GateDef {
        let (kind, value, var) = match &g.kind {
            GateKind::Input { var } => (KindTag::Input, None, Some(*var)),
            GateKind::Const { value } => (KindTag::Const, Some(value.to_string()), None),
            GateKind::Add => (KindTag::Add, None, None),
            GateKind::Mul => (KindTag::Mul, None, None),
            GateKind::Div => (KindTag::Div, None, None),
            GateKind::Exp => (KindTag::Exp, None, None),
        };
        GateDef {
            id: g.id,
            kind,
            children: g.children.clone(),
            value,
            var,
        }
    }
}

impl TryFrom<CircuitDef> for Circuit {
    type Error = CircuitError;

    fn try_from(def: CircuitDef) -> Result<Circuit, CircuitError> {
        let gates = def
            .gates
            .into_iter()
            .map(GateDef::into_gate)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Circuit::new(def.num_inputs, def.output, gates)?)
    }
}

impl From<&Circuit> for CircuitDef {
    fn from(c: &Circuit) -> CircuitDef {
        CircuitDef {
            num_inputs: c.num_inputs,
            output: c.output,
            gates: c.gates.iter().map(GateDef::from_gate).collect(),
        }
    }
}

impl Circuit {
    /// Parses and validates. Malformed JSON or gate fields give
    /// `CircuitError::Parse`; structural problems give `Validation`.
    pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
        let def: CircuitDef =
            serde_json::from_str(text).map_err(|e| CircuitError::Parse(e.to_string()))?;
        Circuit::try_from(def)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitDef::from(self)).expect("plain data serializes")
    }
}

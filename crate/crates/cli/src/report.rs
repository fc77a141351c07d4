//! Machine-readable reports. Keys are sorted, so identical inputs give
//! byte-identical output apart from `versions`.

use qmsep::entropy::EpValue;
use qmsep::CMatrix;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::model_file::MatrixObject;

/// Finite numbers as JSON numbers, infinities as `"inf"`/`"-inf"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn ep_value(v: EpValue) -> Value {
    num(v.value())
}

pub fn matrix(m: &CMatrix) -> Value {
    serde_json::to_value(MatrixObject::from_matrix(m)).expect("matrices serialize")
}

/// SHA-256 over the inputs, each prefixed by its length.
pub fn digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

#[derive(Debug, Clone)]
pub struct Report {
    root: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, inputs_digest: String, tol: f64) -> Self {
        let mut root = Map::new();
        root.insert("command".into(), json!(command));
        root.insert("inputs_digest".into(), json!(inputs_digest));
        root.insert("tolerance".into(), num(tol));
        root.insert("log_base".into(), json!("nats"));
        root.insert(
            "versions".into(),
            json!({ "qmsep": qmsep::VERSION, "qmsep-cli": env!("CARGO_PKG_VERSION") }),
        );
        root.insert("verdicts".into(), Value::Object(Map::new()));
        root.insert("values".into(), Value::Object(Map::new()));
        root.insert("warnings".into(), Value::Array(Vec::new()));
        Report { root }
    }

    fn object(&mut self, key: &str) -> &mut Map<String, Value> {
        self.root.get_mut(key).and_then(Value::as_object_mut).expect("report sections are objects")
    }

    /// A verdict together with the residual and the tolerance it was judged against.
    pub fn verdict(&mut self, name: &str, holds: bool, residual: f64, tol: f64) -> &mut Self {
        self.verdict_with(name, holds, residual, tol, Map::new())
    }

    pub fn verdict_with(&mut self, name: &str, holds: bool, residual: f64, tol: f64, mut extra: Map<String, Value>) -> &mut Self {
        extra.insert("holds".into(), json!(holds));
        extra.insert("residual".into(), num(residual));
        extra.insert("tol".into(), num(tol));
        self.object("verdicts").insert(name.into(), Value::Object(extra));
        self
    }

    pub fn value(&mut self, name: &str, v: Value) -> &mut Self {
        self.object("values").insert(name.into(), v);
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) -> &mut Self {
        if let Some(Value::Array(w)) = self.root.get_mut("warnings") {
            w.push(json!(msg.into()));
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.root.get(key)
    }

    pub fn to_value(&self) -> Value {
        Value::Object(self.root.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.root).expect("reports serialize");
        s.push('\n');
        s
    }
}

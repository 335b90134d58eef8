//! Run report assembly. One JSON document per invocation, with a digest of
//! everything that determines the numbers: the subcommand, its semantic
//! arguments, and the bytes of every input file. Presentation flags and
//! output paths stay out of the digest.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use uppertri::index::MultiIndex;
use uppertri::matrix::DenseMatrix;

pub struct ReportBuilder {
    command: String,
    seed: u64,
    hasher: Sha256,
}

impl ReportBuilder {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"uppertri\0");
        hasher.update(command.as_bytes());
        hasher.update(b"\0");
        ReportBuilder {
            command: command.to_string(),
            seed,
            hasher,
        }
    }

    /// Folds a semantic argument into the digest. Call in a fixed order.
    pub fn arg(&mut self, key: &str, value: impl std::fmt::Display) {
        self.hasher.update(key.as_bytes());
        self.hasher.update(b"=");
        self.hasher.update(value.to_string().as_bytes());
        self.hasher.update(b"\0");
    }

    /// Folds input file bytes into the digest, length-prefixed so that
    /// concatenations cannot collide.
    pub fn file(&mut self, label: &str, bytes: &[u8]) {
        self.hasher.update(label.as_bytes());
        self.hasher.update(b":");
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
        self.hasher.update(b"\0");
    }

    pub fn render(
        self,
        outputs: Value,
        residuals: Value,
        timings: Option<Value>,
        pretty: bool,
    ) -> String {
        let digest = self.hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        let mut doc = Map::new();
        doc.insert("command".into(), Value::String(self.command));
        doc.insert("inputsDigest".into(), Value::String(hex));
        doc.insert("outputs".into(), outputs);
        doc.insert("residuals".into(), residuals);
        doc.insert("seed".into(), json!(self.seed));
        if let Some(t) = timings {
            doc.insert("timings".into(), t);
        }
        doc.insert("toolVersion".into(), Value::String(uppertri::VERSION.into()));
        let doc = Value::Object(doc);
        if pretty {
            serde_json::to_string_pretty(&doc).expect("report serialization")
        } else {
            serde_json::to_string(&doc).expect("report serialization")
        }
    }
}

/// JSON for a float; infinities become strings because JSON numbers cannot
/// carry them and the infinite case is a real answer here, not an overflow.
pub fn num(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::String("infinity".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-infinity".into())
    } else {
        json!(x)
    }
}

pub fn pair(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

/// Same schema as the matrix file format: row-major [re, im] pairs.
pub fn matrix(m: &DenseMatrix) -> Value {
    let mut data = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            data.push(pair(m[(i, j)]));
        }
    }
    json!({"rows": m.rows(), "cols": m.cols(), "data": data})
}

pub fn index(i: &MultiIndex) -> Value {
    json!(i.coords())
}

pub fn opt_num(x: Option<f64>) -> Value {
    match x {
        Some(v) => num(v),
        None => Value::Null,
    }
}

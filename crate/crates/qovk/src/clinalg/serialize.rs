//! JSON wire format for matrices:
//! `{"rows": n, "cols": m, "re": [...], "im": [...]}` with row-major entries.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ComplexMatrix, C64};

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = MatrixWire {
            rows: self.rows(),
            cols: self.cols(),
            re: self.entries().iter().map(|v| v.re).collect(),
            im: self.entries().iter().map(|v| v.im).collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = MatrixWire::deserialize(deserializer)?;
        if wire.re.len() != wire.rows * wire.cols || wire.im.len() != wire.re.len() {
            return Err(D::Error::custom(format!(
                "matrix payload length {}/{} does not match {}x{}",
                wire.re.len(),
                wire.im.len(),
                wire.rows,
                wire.cols
            )));
        }
        let data: Vec<C64> = wire
            .re
            .iter()
            .zip(wire.im.iter())
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::from_entries(wire.rows, wire.cols, data)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

//! JSON serialization with fixed 17-significant-digit floats.
//!
//! Shortest-round-trip float printing is already lossless, but a fixed-width
//! scientific format makes byte-for-byte determinism independent of the
//! printing algorithm, which the CLI's reproducibility contract relies on.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{DpaError, Result};

/// JSON formatter printing every float as `{:.16e}` (17 significant digits).
#[derive(Default)]
pub struct Json17;

impl Formatter for Json17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a value to a JSON string with 17-significant-digit floats.
pub fn to_string_17<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Json17);
    value
        .serialize(&mut ser)
        .map_err(|e| DpaError::InvalidInput(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| DpaError::InvalidInput(format!("non-utf8 output: {e}")))
}

/// Formats one float for CSV output at 17 significant digits.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

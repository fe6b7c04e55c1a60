//! Canonical JSON output: object keys sorted, floats written with six
//! decimals, so identical inputs give identical bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::Result;

pub const FLOAT_DECIMALS: usize = 6;

/// Delegates layout to `F` and prints every float with fixed precision.
struct FixedFloats<F>(F);

fn write_fixed<W: ?Sized + io::Write>(writer: &mut W, value: f64) -> io::Result<()> {
    let scale = 10f64.powi(FLOAT_DECIMALS as i32);
    let rounded = (value * scale).round() / scale;
    // avoid "-0.000000"
    let v = if rounded == 0.0 { 0.0 } else { rounded };
    write!(writer, "{v:.FLOAT_DECIMALS$}")
}

impl<F: Formatter> Formatter for FixedFloats<F> {
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_fixed(writer, value as f64)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_fixed(writer, value)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// One line; used for annotation files, whose RLE lists are long.
    Compact,
    /// Two-space indentation; used for reports and dumps.
    Pretty,
}

/// Serializes `value` canonically. Going through [`serde_json::Value`] sorts the keys of
/// every object, including struct fields.
pub fn to_string<T: Serialize + ?Sized>(value: &T, style: Style) -> Result<String> {
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    match style {
        Style::Compact => value.serialize(&mut serde_json::Serializer::with_formatter(&mut out, FixedFloats(CompactFormatter)))?,
        Style::Pretty => {
            value.serialize(&mut serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::new())))?;
            out.push(b'\n');
        }
    }
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

//! Deterministic JSON: sorted keys, floats printed with six decimals.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const FLOAT_DECIMALS: usize = 6;

/// Rounds through the six-decimal text form, so that writing the value
/// again reproduces the same text and parsing it gives back the same `f64`.
pub fn quantize(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    let q: f64 = format!("{v:.FLOAT_DECIMALS$}")
        .parse()
        .expect("formatted float parses");
    // Avoid writing "-0.000000".
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

struct FixedFloat<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloat<'_> {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.FLOAT_DECIMALS$}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Pretty-printed, key-sorted JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    // Going through `Value` sorts object keys (serde_json's map is ordered).
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FixedFloat(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

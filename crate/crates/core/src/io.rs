//! JSON files for channels and constraints, and report serialization with
//! 17 significant digits.

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::measures::{Channel, FiniteDist};

/// On-disk form of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_labels: Option<Vec<String>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<Vec<f64>>>,
}

pub const ROW_SUM_TOL: f64 = 1e-9;

impl TryFrom<ChannelFile> for Channel {
    type Error = Error;

    fn try_from(f: ChannelFile) -> Result<Channel> {
        for (x, r) in f.w.iter().enumerate() {
            let s: f64 = r.iter().sum();
            if !((s - 1.0).abs() <= ROW_SUM_TOL) {
                return Err(Error::InvalidChannel(format!("row {x} sums to {s}")));
            }
        }
        let k = f.w.len();
        let n = f.w.first().map(Vec::len).unwrap_or(0);
        let rows =
            f.w.into_iter()
                .map(FiniteDist::new)
                .collect::<Result<Vec<_>>>()?;
        let inl = f
            .input_labels
            .unwrap_or_else(|| (0..k).map(|i| i.to_string()).collect());
        let outl = f
            .output_labels
            .unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        Channel::with_labels(rows, f.cost, inl, outl)
    }
}

impl From<Channel> for ChannelFile {
    fn from(c: Channel) -> ChannelFile {
        ChannelFile::from(&c)
    }
}

impl From<&Channel> for ChannelFile {
    fn from(c: &Channel) -> ChannelFile {
        ChannelFile {
            input_labels: Some(c.input_labels().to_vec()),
            output_labels: Some(c.output_labels().to_vec()),
            w: c.rows().iter().map(|r| r.weights().to_vec()).collect(),
            cost: c.cost_matrix().ok().map(<[Vec<f64>]>::to_vec),
        }
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("JSON: {e}")))
}

pub fn parse_channel(text: &str) -> Result<Channel> {
    Channel::try_from(parse_json::<ChannelFile>(text)?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

pub fn read_channel(path: impl AsRef<Path>) -> Result<Channel> {
    parse_channel(&read(path.as_ref())?)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    parse_json(&read(path.as_ref())?)
}

/// `x` with 17 significant digits: positional for moderate magnitudes,
/// scientific otherwise.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0.0".into()
        } else {
            "0.0".into()
        };
    }
    let sci = format!("{:.16e}", x.abs());
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let e: i32 = exp.parse().expect("exponent");
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    if (-5..16).contains(&e) {
        if e >= 0 {
            let (int, frac) = digits.split_at(e as usize + 1);
            format!("{sign}{int}.{frac}")
        } else {
            format!("{sign}0.{}{digits}", "0".repeat((-e - 1) as usize))
        }
    } else {
        format!("{sign}{mant}e{e}")
    }
}

/// Pretty JSON with 17-significant-digit floats.
struct Digits17(PrettyFormatter<'static>);

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidParameter(format!("JSON: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::InvalidParameter(e.to_string()))
}

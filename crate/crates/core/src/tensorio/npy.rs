//! NPY v1.0 reader and writer for little-endian `f4`/`f8` payloads.
//!
//! Layout: magic `\x93NUMPY`, version bytes `1 0`, a little-endian `u16`
//! header length, an ASCII Python-literal dict with `descr`, `fortran_order`
//! and `shape`, then the raw element bytes. Written headers are padded with
//! spaces and terminated by `\n` so the preamble plus header is a multiple
//! of 64 bytes.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fsutil;

pub const MAGIC: [u8; 8] = [0x93, b'N', b'U', b'M', b'P', b'Y', 0x01, 0x00];
const PREAMBLE_LEN: usize = 10;
const HEADER_ALIGN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn descr(self) -> &'static str {
        match self {
            DType::F32 => "<f4",
            DType::F64 => "<f8",
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }

    fn from_descr(descr: &str) -> Result<Self> {
        match descr {
            "<f4" => Ok(DType::F32),
            "<f8" => Ok(DType::F64),
            other => Err(Error::UnsupportedDtype(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }
}

/// A dense row-major array of `f32` or `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_f64(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(shape, TensorData::F64(data))
    }

    pub fn from_f32(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Self::new(shape, TensorData::F32(data))
    }

    pub fn from_matrix(m: &Array2<f64>) -> Self {
        let shape = m.shape().to_vec();
        let data = m.iter().copied().collect();
        Tensor { shape, data: TensorData::F64(data) }
    }

    pub fn from_vector(v: &[f64]) -> Self {
        Tensor { shape: vec![v.len()], data: TensorData::F64(v.to_vec()) }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64`; exact for both dtypes.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    /// Reshapes to `shape[0] × product(shape[1..])`, row-major.
    ///
    /// Rank-1 tensors become a single column.
    pub fn to_matrix(&self) -> Result<Array2<f64>> {
        let rows = *self
            .shape
            .first()
            .ok_or_else(|| Error::Shape("a rank-0 tensor has no sample axis".into()))?;
        let cols: usize = self.shape[1..].iter().product();
        Array2::from_shape_vec((rows, cols), self.to_f64_vec())
            .map_err(|e| Error::Shape(e.to_string()))
    }

    pub fn all_finite(&self) -> bool {
        match &self.data {
            TensorData::F32(v) => v.iter().all(|x| x.is_finite()),
            TensorData::F64(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    /// Same shape, dtype and element bit patterns.
    pub fn bits_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && match (&self.data, &other.data) {
                (TensorData::F32(a), TensorData::F32(b)) => {
                    a.iter().map(|x| x.to_bits()).eq(b.iter().map(|x| x.to_bits()))
                }
                (TensorData::F64(a), TensorData::F64(b)) => {
                    a.iter().map(|x| x.to_bits()).eq(b.iter().map(|x| x.to_bits()))
                }
                _ => false,
            }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    pub allow_non_finite: bool,
}

pub fn read_array(path: impl AsRef<Path>) -> Result<Tensor> {
    read_array_with(path, ReadOptions::default())
}

pub fn read_array_with(path: impl AsRef<Path>, opts: ReadOptions) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, opts).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_array(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    fsutil::atomic_write(path, &encode(t))
}

pub fn encode(t: &Tensor) -> Vec<u8> {
    let shape = match t.shape.len() {
        0 => "()".to_string(),
        1 => format!("({},)", t.shape[0]),
        _ => {
            let dims: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
            format!("({})", dims.join(", "))
        }
    };
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {shape}, }}",
        t.dtype().descr()
    );
    let unpadded = PREAMBLE_LEN + header.len() + 1;
    let pad = (HEADER_ALIGN - unpadded % HEADER_ALIGN) % HEADER_ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE_LEN + header.len() + t.len() * t.dtype().size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    match &t.data {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn decode(bytes: &[u8], opts: ReadOptions) -> Result<Tensor> {
    if bytes.len() < PREAMBLE_LEN || bytes[..6] != MAGIC[..6] {
        return Err(Error::Format("missing \\x93NUMPY magic".into()));
    }
    if bytes[6..8] != MAGIC[6..8] {
        return Err(Error::Format(format!(
            "unsupported NPY version {}.{} (only 1.0)",
            bytes[6], bytes[7]
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let body_start = PREAMBLE_LEN + header_len;
    if bytes.len() < body_start {
        return Err(Error::Format("truncated header".into()));
    }
    let header = std::str::from_utf8(&bytes[PREAMBLE_LEN..body_start])
        .ok()
        .filter(|h| h.is_ascii())
        .ok_or_else(|| Error::Format("header is not ASCII".into()))?;
    let header = parse_header(header)?;

    let count: usize = header.shape.iter().product();
    let payload = &bytes[body_start..];
    let expected = count * header.dtype.size();
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, shape {:?} of {} needs {expected}",
            payload.len(),
            header.shape,
            header.dtype.descr()
        )));
    }

    let data = match header.dtype {
        DType::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        DType::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    let data = if header.fortran_order {
        match data {
            TensorData::F32(v) => TensorData::F32(fortran_to_c(&v, &header.shape)),
            TensorData::F64(v) => TensorData::F64(fortran_to_c(&v, &header.shape)),
        }
    } else {
        data
    };

    let t = Tensor { shape: header.shape, data };
    if !opts.allow_non_finite && !t.all_finite() {
        return Err(Error::Validation("array contains NaN or infinite values".into()));
    }
    Ok(t)
}

/// Reorders a column-major buffer into row-major order for the same logical shape.
fn fortran_to_c<T: Copy>(src: &[T], shape: &[usize]) -> Vec<T> {
    let rank = shape.len();
    // Column-major strides: first axis varies fastest.
    let mut strides = vec![1usize; rank];
    for k in 1..rank {
        strides[k] = strides[k - 1] * shape[k - 1];
    }
    let mut index = vec![0usize; rank];
    let mut out = Vec::with_capacity(src.len());
    for _ in 0..src.len() {
        let offset: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out.push(src[offset]);
        for axis in (0..rank).rev() {
            index[axis] += 1;
            if index[axis] < shape[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
    out
}

#[derive(Debug)]
struct Header {
    dtype: DType,
    fortran_order: bool,
    shape: Vec<usize>,
}

#[derive(Debug, PartialEq)]
enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

fn parse_header(text: &str) -> Result<Header> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    p.skip_ws();
    p.expect(b'{')?;
    let (mut descr, mut fortran, mut shape) = (None, None, None);
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = match p.literal()? {
            Literal::Str(k) => k,
            other => return Err(Error::Format(format!("dict key must be a string, got {other:?}"))),
        };
        p.skip_ws();
        p.expect(b':')?;
        p.skip_ws();
        let value = p.literal()?;
        match (key.as_str(), value) {
            ("descr", Literal::Str(d)) => descr = Some(d),
            ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
            ("shape", Literal::Tuple(s)) => shape = Some(s),
            (k, v) => return Err(Error::Format(format!("unexpected header entry {k:?}: {v:?}"))),
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.skip_ws();
            p.expect(b'}')?;
            break;
        }
    }
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(Error::Format("trailing characters after header dict".into()));
    }
    let descr = descr.ok_or_else(|| Error::Format("header lacks 'descr'".into()))?;
    Ok(Header {
        dtype: DType::from_descr(&descr)?,
        fortran_order: fortran.ok_or_else(|| Error::Format("header lacks 'fortran_order'".into()))?,
        shape: shape.ok_or_else(|| Error::Format("header lacks 'shape'".into()))?,
    })
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "expected {:?} at header offset {}",
                c as char, self.pos
            )))
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c != q) {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.s[start..self.pos]).unwrap().to_string();
                self.expect(q)?;
                Ok(Literal::Str(s))
            }
            Some(b'(') => {
                self.pos += 1;
                let mut dims = Vec::new();
                loop {
                    self.skip_ws();
                    if self.eat(b')') {
                        break;
                    }
                    dims.push(self.integer()?);
                    self.skip_ws();
                    if !self.eat(b',') {
                        self.skip_ws();
                        self.expect(b')')?;
                        break;
                    }
                }
                Ok(Literal::Tuple(dims))
            }
            _ if self.s[self.pos..].starts_with(b"True") => {
                self.pos += 4;
                Ok(Literal::Bool(true))
            }
            _ if self.s[self.pos..].starts_with(b"False") => {
                self.pos += 5;
                Ok(Literal::Bool(false))
            }
            _ => Err(Error::Format(format!("unrecognised literal at header offset {}", self.pos))),
        }
    }

    fn integer(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Format(format!("bad shape dimension at header offset {start}")))
    }
}

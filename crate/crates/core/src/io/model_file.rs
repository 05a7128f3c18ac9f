//! Versioned binary model files.
//!
//! ```text
//! magic    8 bytes  "INVPATMF"
//! version  u32
//! length   u64      payload byte count
//! payload  sections: tag u32, length u64, body
//! crc32    u32      over the payload
//! ```
//!
//! All integers are little-endian. Posting lists are written next to the
//! prototypes they derive from; loading rebuilds them and rejects the file
//! if the two disagree.

use std::path::Path;

use thiserror::Error;

use super::schema::{ColumnRole, ColumnSchema, ColumnSpec};
use crate::error::Result;
use crate::index::{BitPattern, CategoricalModel, FeatureVector, Model};
use crate::levels::{LabelTable, Level, LevelModel, LevelStack};
use crate::predictor::ParamIndex;

pub const MAGIC: &[u8; 8] = b"INVPATMF";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 8;
const TAG_SCHEMA: u32 = 1;
const TAG_STACK: u32 = 2;
const TAG_PARAMS: u32 = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelFileError {
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model file version {found} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("truncated model file: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("corrupt model file at offset {offset}: {reason}")]
    Corrupt { offset: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Stack(LevelStack),
    Params(ParamIndex),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub payload: Payload,
    pub schema: Option<ColumnSchema>,
}

impl ModelFile {
    pub fn stack(stack: LevelStack) -> Self {
        ModelFile {
            payload: Payload::Stack(stack),
            schema: None,
        }
    }

    pub fn params(index: ParamIndex) -> Self {
        ModelFile {
            payload: Payload::Params(index),
            schema: None,
        }
    }

    pub fn with_schema(mut self, schema: ColumnSchema) -> Self {
        self.schema = Some(schema);
        self
    }
}

#[derive(Default)]
struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection too large for the model file"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn section(&mut self, tag: u32, body: Enc) {
        self.u32(tag);
        self.u64(body.0.len() as u64);
        self.0.extend_from_slice(&body.0);
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
    // offset of buf[0] within the file, for error reporting
    base: usize,
}

type DecResult<T> = std::result::Result<T, ModelFileError>;

impl<'a> Dec<'a> {
    fn take(&mut self, n: usize) -> DecResult<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(ModelFileError::Truncated {
                offset: self.base + self.pos,
                needed: n,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> DecResult<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> DecResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> DecResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> DecResult<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> DecResult<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    /// A length prefix for `elem`-byte items, checked against what remains.
    fn len(&mut self, elem: usize) -> DecResult<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(elem.max(1)) > self.buf.len() - self.pos {
            return Err(ModelFileError::Truncated {
                offset: self.base + self.pos,
                needed: n.saturating_mul(elem.max(1)),
            });
        }
        Ok(n)
    }
    fn str(&mut self) -> DecResult<String> {
        let n = self.len(1)?;
        let at = self.base + self.pos;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| self.corrupt_at(at, "invalid utf-8"))
    }
    fn corrupt_at(&self, offset: usize, reason: impl Into<String>) -> ModelFileError {
        ModelFileError::Corrupt {
            offset,
            reason: reason.into(),
        }
    }
    fn corrupt(&self, reason: impl Into<String>) -> ModelFileError {
        self.corrupt_at(self.base + self.pos, reason)
    }
    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn put_model(e: &mut Enc, m: &Model) {
    e.len(m.dims());
    e.u32(m.range());
    e.u32(m.radius());
    e.len(m.len());
    for p in m.prototypes() {
        p.iter().for_each(|&v| e.u32(v));
    }
    for k in 0..m.dims() {
        let lists: Vec<_> = m.lists(k).collect();
        e.len(lists.len());
        for (value, ids) in lists {
            e.u32(value);
            e.len(ids.len());
            ids.iter().for_each(|&id| e.u32(id));
        }
    }
}

fn get_model(d: &mut Dec) -> DecResult<Model> {
    let at = d.base + d.pos;
    let dims = d.u32()? as usize;
    let range = d.u32()?;
    let radius = d.u32()?;
    let n = d.len(dims.max(1) * 4)?;
    let mut protos = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v = Vec::with_capacity(dims);
        for _ in 0..dims {
            v.push(d.u32()?);
        }
        protos.push(FeatureVector::new(v));
    }
    let model = Model::from_prototypes(dims, range, radius, protos)
        .map_err(|e| d.corrupt_at(at, format!("invalid model: {e}")))?;
    for k in 0..dims {
        let lists = d.len(8)?;
        let expected: Vec<_> = model.lists(k).collect();
        if lists != expected.len() {
            return Err(d.corrupt("posting lists disagree with prototypes"));
        }
        for &(value, ids) in &expected {
            if d.u32()? != value || d.len(4)? != ids.len() {
                return Err(d.corrupt("posting lists disagree with prototypes"));
            }
            for &id in ids {
                if d.u32()? != id {
                    return Err(d.corrupt("posting lists disagree with prototypes"));
                }
            }
        }
    }
    Ok(model)
}

fn put_categorical(e: &mut Enc, m: &CategoricalModel) {
    e.u32(m.categories());
    e.u32(m.recognition_threshold());
    e.len(m.len());
    for p in m.stored_patterns() {
        e.len(p.len());
        p.present().iter().for_each(|&c| e.u32(c));
    }
    for c in 1..=m.categories() {
        let ids = m.postings(c);
        e.len(ids.len());
        ids.iter().for_each(|&id| e.u32(id));
    }
}

fn get_categorical(d: &mut Dec) -> DecResult<CategoricalModel> {
    let at = d.base + d.pos;
    let categories = d.u32()?;
    let threshold = d.u32()?;
    let mut m = CategoricalModel::new(categories, threshold)
        .map_err(|e| d.corrupt_at(at, format!("invalid categorical model: {e}")))?;
    let n = d.len(4)?;
    for _ in 0..n {
        let len = d.len(4)?;
        let mut cats = Vec::with_capacity(len);
        for _ in 0..len {
            cats.push(d.u32()?);
        }
        let at = d.base + d.pos;
        m.insert_class(&BitPattern::new(cats))
            .map_err(|e| d.corrupt_at(at, format!("invalid stored pattern: {e}")))?;
    }
    for c in 1..=categories {
        let len = d.len(4)?;
        let mut ids = Vec::with_capacity(len);
        for _ in 0..len {
            ids.push(d.u32()?);
        }
        if ids != m.postings(c) {
            return Err(d.corrupt("posting lists disagree with stored patterns"));
        }
    }
    Ok(m)
}

fn put_labels(e: &mut Enc, labels: &Option<LabelTable>) {
    match labels {
        None => e.u8(0),
        Some(t) => {
            e.u8(1);
            e.len(t.len());
            for (id, label) in t.iter() {
                e.u32(id);
                e.str(label);
            }
        }
    }
}

fn get_labels(d: &mut Dec) -> DecResult<Option<LabelTable>> {
    match d.u8()? {
        0 => Ok(None),
        1 => {
            let n = d.len(8)?;
            let mut t = LabelTable::new();
            for _ in 0..n {
                let id = d.u32()?;
                t.attach(id, d.str()?);
            }
            Ok(Some(t))
        }
        _ => Err(d.corrupt("bad label table flag")),
    }
}

fn put_stack(e: &mut Enc, s: &LevelStack) {
    e.len(s.depth());
    for level in s.levels() {
        match &level.model {
            LevelModel::Numeric(m) => {
                e.u8(0);
                put_model(e, m);
            }
            LevelModel::Categorical(m) => {
                e.u8(1);
                put_categorical(e, m);
            }
        }
        e.u32(level.output_threshold);
        put_labels(e, &level.labels);
    }
}

fn get_stack(d: &mut Dec) -> DecResult<LevelStack> {
    let depth = d.len(1)?;
    if depth == 0 {
        return Err(d.corrupt("stack without levels"));
    }
    let mut stack: Option<LevelStack> = None;
    for _ in 0..depth {
        let at = d.base + d.pos;
        let model = match d.u8()? {
            0 => LevelModel::Numeric(get_model(d)?),
            1 => LevelModel::Categorical(get_categorical(d)?),
            _ => return Err(d.corrupt_at(at, "unknown level kind")),
        };
        let level = Level {
            model,
            output_threshold: d.u32()?,
            labels: get_labels(d)?,
        };
        match stack.as_mut() {
            None => stack = Some(LevelStack::new(level)),
            Some(s) => s.push(level).map_err(|e| d.corrupt_at(at, e.to_string()))?,
        }
    }
    Ok(stack.expect("depth checked"))
}

fn put_params(e: &mut Enc, p: &ParamIndex) {
    e.len(p.dims());
    e.u32(p.range());
    e.u64(p.rows());
    let (lo, hi) = p.t_bounds().unwrap_or((0, 0));
    e.i64(lo);
    e.i64(hi);
    let filled: Vec<(usize, &Vec<(i64, u32)>)> = p
        .tables()
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_empty())
        .collect();
    e.len(filled.len());
    for (slot, table) in filled {
        e.len(slot);
        e.len(table.len());
        for &(t, c) in table {
            e.i64(t);
            e.u32(c);
        }
    }
}

fn get_params(d: &mut Dec) -> DecResult<ParamIndex> {
    let dims = d.u32()? as usize;
    let range = d.u32()?;
    let rows = d.u64()?;
    let t_min = d.i64()?;
    let t_max = d.i64()?;
    if dims == 0 || range < 2 {
        return Err(d.corrupt("invalid parameter index shape"));
    }
    let slots = dims
        .checked_mul(range as usize)
        .ok_or_else(|| d.corrupt("parameter index too large"))?;
    let mut tables = vec![Vec::new(); slots];
    let mut mass = vec![0u64; dims];
    let filled = d.len(8)?;
    let mut last: Option<usize> = None;
    for _ in 0..filled {
        let slot = d.u32()? as usize;
        if slot >= slots || last.is_some_and(|l| slot <= l) {
            return Err(d.corrupt("bad parameter slot"));
        }
        last = Some(slot);
        let n = d.len(12)?;
        let mut table: Vec<(i64, u32)> = Vec::with_capacity(n);
        for _ in 0..n {
            let t = d.i64()?;
            let c = d.u32()?;
            if c == 0 || t < t_min || t > t_max || table.last().is_some_and(|&(p, _)| p >= t) {
                return Err(d.corrupt("bad parameter table entry"));
            }
            mass[slot / range as usize] += c as u64;
            table.push((t, c));
        }
        tables[slot] = table;
    }
    if mass.iter().any(|&m| m != rows) {
        return Err(d.corrupt("parameter counts do not add up to the row count"));
    }
    Ok(ParamIndex::from_parts(
        dims, range, tables, t_min, t_max, rows,
    ))
}

fn put_schema(e: &mut Enc, s: &ColumnSchema) {
    e.len(s.columns.len());
    for c in &s.columns {
        e.str(&c.name);
        e.u8(match c.role {
            ColumnRole::Feature => 0,
            ColumnRole::Parameter => 1,
            ColumnRole::Id => 2,
            ColumnRole::Ignore => 3,
        });
        match (c.min, c.max) {
            (Some(lo), Some(hi)) => {
                e.u8(1);
                e.f64(lo);
                e.f64(hi);
            }
            _ => e.u8(0),
        }
    }
}

fn get_schema(d: &mut Dec) -> DecResult<ColumnSchema> {
    let n = d.len(6)?;
    let mut columns = Vec::with_capacity(n);
    for _ in 0..n {
        let name = d.str()?;
        let role = match d.u8()? {
            0 => ColumnRole::Feature,
            1 => ColumnRole::Parameter,
            2 => ColumnRole::Id,
            3 => ColumnRole::Ignore,
            _ => return Err(d.corrupt("unknown column role")),
        };
        let mut spec = ColumnSpec::new(name, role);
        match d.u8()? {
            0 => {}
            1 => {
                spec.min = Some(d.f64()?);
                spec.max = Some(d.f64()?);
            }
            _ => return Err(d.corrupt("bad bounds flag")),
        }
        columns.push(spec);
    }
    Ok(ColumnSchema::new(columns))
}

pub fn encode_model(file: &ModelFile) -> Vec<u8> {
    let mut payload = Enc::default();
    if let Some(schema) = &file.schema {
        let mut body = Enc::default();
        put_schema(&mut body, schema);
        payload.section(TAG_SCHEMA, body);
    }
    let mut body = Enc::default();
    let tag = match &file.payload {
        Payload::Stack(s) => {
            put_stack(&mut body, s);
            TAG_STACK
        }
        Payload::Params(p) => {
            put_params(&mut body, p);
            TAG_PARAMS
        }
    };
    payload.section(tag, body);

    let mut out = Enc::default();
    out.0.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);
    out.u64(payload.0.len() as u64);
    out.0.extend_from_slice(&payload.0);
    out.u32(crc32fast::hash(&payload.0));
    out.0
}

pub fn decode_model(bytes: &[u8]) -> std::result::Result<ModelFile, ModelFileError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let mut d = Dec {
        buf: bytes,
        pos: MAGIC.len(),
        base: 0,
    };
    let version = d.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelFileError::UnsupportedVersion { found: version });
    }
    let len = usize::try_from(d.u64()?).map_err(|_| d.corrupt("payload length overflows"))?;
    let payload = d.take(len)?;
    let stored = d.u32()?;
    if !d.done() {
        return Err(d.corrupt("trailing bytes after checksum"));
    }
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(ModelFileError::Checksum { stored, computed });
    }

    let mut d = Dec {
        buf: payload,
        pos: 0,
        base: HEADER_LEN,
    };
    let mut schema = None;
    let mut body = None;
    while !d.done() {
        let at = d.base + d.pos;
        let tag = d.u32()?;
        let len = usize::try_from(d.u64()?).map_err(|_| d.corrupt("section length overflows"))?;
        let mut s = Dec {
            buf: d.take(len)?,
            pos: 0,
            base: d.base + d.pos - len,
        };
        match tag {
            TAG_SCHEMA if schema.is_none() => schema = Some(get_schema(&mut s)?),
            TAG_STACK if body.is_none() => body = Some(Payload::Stack(get_stack(&mut s)?)),
            TAG_PARAMS if body.is_none() => body = Some(Payload::Params(get_params(&mut s)?)),
            _ => return Err(d.corrupt_at(at, format!("unexpected section {tag}"))),
        }
        if !s.done() {
            return Err(s.corrupt("section has trailing bytes"));
        }
    }
    let payload = body.ok_or_else(|| d.corrupt("no model section"))?;
    Ok(ModelFile { payload, schema })
}

pub fn save_model(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_model(file))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    Ok(decode_model(&std::fs::read(path)?)?)
}

//! Binary snapshots.
//!
//! Little-endian, fixed layout:
//!
//! | field    | type      |
//! |----------|-----------|
//! | magic    | `b"YMHK"` |
//! | version  | u32 = 1   |
//! | group    | u8 (0 = U(1), 1 = SU(2)) |
//! | n        | u8        |
//! | reserved | u16 = 0   |
//! | extents  | u32 x n   |
//! | h        | f64       |
//! | k        | u32       |
//! | lambda   | f64       |
//! | t        | f64       |
//!
//! followed by the links (site-lexicographic, axes in order; U(1) as re, im;
//! SU(2) as the four matrix entries row-major, each re, im) and the Higgs
//! values per site as re, im pairs.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{Group, GroupKind, Su2, U1};
use crate::energy::FlowParams;
use crate::error::{Error, Result};
use crate::fields::{GaugeField, HiggsField};
use crate::flow::FlowState;
use crate::lattice::LatticeShape;

pub const MAGIC: [u8; 4] = *b"YMHK";
pub const VERSION: u32 = 1;
/// Largest unitarity defect accepted on load.
pub const MAX_DEFECT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub group: GroupKind,
    pub extents: Vec<usize>,
    pub spacing: f64,
    pub k: usize,
    pub lambda: f64,
    pub t: f64,
}

impl SnapshotHeader {
    pub fn len(&self) -> usize {
        12 + 4 * self.extents.len() + 28
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total file size implied by the header.
    pub fn file_len(&self) -> usize {
        let sites: usize = self.extents.iter().product();
        let n = self.extents.len();
        let (elem, higgs) = match self.group {
            GroupKind::U1 => (U1::ELEM_WORDS, U1::HIGGS_DIM),
            GroupKind::Su2 => (Su2::ELEM_WORDS, Su2::HIGGS_DIM),
        };
        self.len() + 8 * sites * (n * elem + 2 * higgs)
    }
}

/// A loaded snapshot of either group.
#[derive(Debug, Clone)]
pub enum AnyState {
    U1(FlowState<U1>),
    Su2(FlowState<Su2>),
}

impl AnyState {
    pub fn group(&self) -> GroupKind {
        match self {
            AnyState::U1(_) => GroupKind::U1,
            AnyState::Su2(_) => GroupKind::Su2,
        }
    }
}

pub fn encode<G: Group>(state: &FlowState<G>) -> Vec<u8> {
    let lat = state.lattice();
    let header = SnapshotHeader {
        group: G::KIND,
        extents: lat.extents().to_vec(),
        spacing: lat.spacing(),
        k: state.params.k,
        lambda: state.params.lambda,
        t: state.t,
    };
    let mut out = Vec::with_capacity(header.file_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(G::KIND.code());
    out.push(lat.dims() as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    for &e in lat.extents() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    out.extend_from_slice(&lat.spacing().to_le_bytes());
    out.extend_from_slice(&(state.params.k as u32).to_le_bytes());
    out.extend_from_slice(&state.params.lambda.to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for l in state.gauge.links() {
        for w in G::elem_words(l) {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    for v in state.higgs.values() {
        for c in G::higgs_components(v) {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    debug_assert_eq!(out.len(), header.file_len());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                msg: format!("truncated: need {n} bytes for {what}, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn format_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        offset,
        msg: msg.into(),
    }
}

fn parse_header(r: &mut Reader<'_>) -> Result<SnapshotHeader> {
    if r.take(4, "magic")? != MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let code = r.u8("group")?;
    let group = GroupKind::from_code(code).ok_or_else(|| format_err(8, format!("unknown group code {code}")))?;
    let n = r.u8("n")? as usize;
    if n == 0 || n > crate::lattice::MAX_DIM {
        return Err(format_err(9, format!("dimension {n} out of range")));
    }
    if r.u16("reserved")? != 0 {
        return Err(format_err(10, "reserved field is not zero"));
    }
    let mut extents = Vec::with_capacity(n);
    for _ in 0..n {
        extents.push(r.u32("extent")? as usize);
    }
    let spacing = r.f64("h")?;
    let k = r.u32("k")? as usize;
    let lambda = r.f64("lambda")?;
    let t = r.f64("t")?;
    Ok(SnapshotHeader {
        group,
        extents,
        spacing,
        k,
        lambda,
        t,
    })
}

/// Parses only the header.
pub fn decode_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    parse_header(&mut Reader { bytes, pos: 0 })
}

pub fn decode<G: Group>(bytes: &[u8]) -> Result<FlowState<G>> {
    let mut r = Reader { bytes, pos: 0 };
    let header = parse_header(&mut r)?;
    if header.group != G::KIND {
        return Err(format_err(8, format!("snapshot holds {}, expected {}", header.group, G::KIND)));
    }
    let body_at = r.pos;
    let lattice = LatticeShape::new(&header.extents, header.spacing).map_err(|e| format_err(12, e.to_string()))?;
    let params = FlowParams::new(header.k, header.lambda).map_err(|e| format_err(body_at - 20, e.to_string()))?;
    if !header.t.is_finite() {
        return Err(format_err(body_at - 8, "non-finite t"));
    }
    if bytes.len() != header.file_len() {
        let offset = bytes.len().min(header.file_len());
        let msg = if bytes.len() < header.file_len() {
            format!("truncated: expected {} bytes, got {}", header.file_len(), bytes.len())
        } else {
            format!("{} trailing bytes", bytes.len() - header.file_len())
        };
        return Err(format_err(offset, msg));
    }
    let lattice = Arc::new(lattice);
    let nlinks = lattice.num_sites() * lattice.dims();
    let mut links = Vec::with_capacity(nlinks);
    let mut words = vec![0.0; G::ELEM_WORDS];
    for i in 0..nlinks {
        let at = r.pos;
        for w in words.iter_mut() {
            *w = r.f64("link")?;
        }
        let (elem, defect) = G::elem_from_words(&words);
        if !(defect <= MAX_DEFECT) {
            return Err(Error::CorruptSnapshot(format!(
                "link {i} at byte {at}: unitarity defect {defect:e} exceeds {MAX_DEFECT:e}"
            )));
        }
        links.push(elem);
    }
    let mut values = Vec::with_capacity(lattice.num_sites());
    let mut comps = vec![Complex64::new(0.0, 0.0); G::HIGGS_DIM];
    for i in 0..lattice.num_sites() {
        let at = r.pos;
        for c in comps.iter_mut() {
            let re = r.f64("higgs")?;
            let im = r.f64("higgs")?;
            *c = Complex64::new(re, im);
        }
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(Error::CorruptSnapshot(format!("Higgs value {i} at byte {at} is not finite")));
        }
        values.push(G::higgs_from_complex(&comps));
    }
    let gauge = GaugeField::from_links(lattice.clone(), links)?;
    let higgs = HiggsField::from_values(lattice, values)?;
    let mut state = FlowState::new(gauge, higgs, params)?;
    state.t = header.t;
    Ok(state)
}

pub fn decode_any(bytes: &[u8]) -> Result<AnyState> {
    match decode_header(bytes)?.group {
        GroupKind::U1 => Ok(AnyState::U1(decode(bytes)?)),
        GroupKind::Su2 => Ok(AnyState::Su2(decode(bytes)?)),
    }
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn save_snapshot<G: Group>(state: &FlowState<G>, path: &Path) -> Result<()> {
    let bytes = encode(state);
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_snapshot<G: Group>(path: &Path) -> Result<FlowState<G>> {
    decode(&std::fs::read(path)?)
}

pub fn load_any(path: &Path) -> Result<AnyState> {
    decode_any(&std::fs::read(path)?)
}

pub fn read_header(path: &Path) -> Result<SnapshotHeader> {
    decode_header(&std::fs::read(path)?)
}

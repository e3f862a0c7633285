use alloc::vec;
use alloc::vec::Vec;

use super::tables::ZIGZAG;
use super::{dct_matrix, idct, JpegError};
use crate::image::ImageBuf;

type Result<T> = core::result::Result<T, JpegError>;

#[derive(Clone)]
struct HuffTable {
    maxcode: [i32; 18],
    valptr: [i32; 17],
    mincode: [i32; 17],
    values: Vec<u8>,
}

impl HuffTable {
    fn new(bits: &[u8; 16], values: Vec<u8>) -> Result<Self> {
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total != values.len() || total > 256 {
            return Err(JpegError::Corrupt("Huffman table size"));
        }
        let mut maxcode = [-1i32; 18];
        let mut valptr = [0i32; 17];
        let mut mincode = [0i32; 17];
        let mut code = 0i32;
        let mut k = 0i32;
        for l in 1..=16 {
            let n = i32::from(bits[l - 1]);
            if n > 0 {
                valptr[l] = k;
                mincode[l] = code;
                code += n;
                k += n;
                maxcode[l] = code - 1;
            }
            if code > (1 << l) {
                return Err(JpegError::Corrupt("over-subscribed Huffman table"));
            }
            code <<= 1;
        }
        maxcode[17] = i32::MAX;
        Ok(Self {
            maxcode,
            valptr,
            mincode,
            values,
        })
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
    at_marker: bool,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8], pos: usize) -> Self {
        Self {
            data,
            pos,
            acc: 0,
            nbits: 0,
            at_marker: false,
        }
    }

    fn fill(&mut self) {
        while self.nbits <= 56 {
            let mut byte = 0u8;
            if !self.at_marker && self.pos < self.data.len() {
                let b = self.data[self.pos];
                if b == 0xFF {
                    match self.data.get(self.pos + 1) {
                        Some(0x00) => {
                            byte = 0xFF;
                            self.pos += 2;
                        }
                        _ => self.at_marker = true,
                    }
                } else {
                    byte = b;
                    self.pos += 1;
                }
            } else {
                // Past the entropy segment: feed zeros, as libjpeg does.
                self.at_marker = true;
            }
            self.acc |= u64::from(byte) << (56 - self.nbits);
            self.nbits += 8;
        }
    }

    fn bit(&mut self) -> u32 {
        if self.nbits == 0 {
            self.fill();
        }
        let b = (self.acc >> 63) as u32;
        self.acc <<= 1;
        self.nbits -= 1;
        b
    }

    fn bits(&mut self, n: u32) -> u32 {
        if n == 0 {
            return 0;
        }
        if self.nbits < n {
            self.fill();
        }
        let v = (self.acc >> (64 - n)) as u32;
        self.acc <<= n;
        self.nbits -= n;
        v
    }

    fn decode(&mut self, t: &HuffTable) -> Result<u8> {
        let mut code = 0i32;
        for l in 1..=16 {
            code = (code << 1) | self.bit() as i32;
            if code <= t.maxcode[l] {
                let i = t.valptr[l] + code - t.mincode[l];
                return t
                    .values
                    .get(i as usize)
                    .copied()
                    .ok_or(JpegError::Corrupt("Huffman code"));
            }
        }
        Err(JpegError::Corrupt("Huffman code"))
    }

    fn receive_extend(&mut self, s: u32) -> i32 {
        if s == 0 {
            return 0;
        }
        let v = self.bits(s) as i32;
        if v < 1 << (s - 1) {
            v - (1 << s) + 1
        } else {
            v
        }
    }

    /// Drops buffered bits and consumes the expected RSTn marker.
    fn restart(&mut self) -> Result<()> {
        self.acc = 0;
        self.nbits = 0;
        self.at_marker = false;
        while self.pos + 1 < self.data.len() {
            if self.data[self.pos] == 0xFF {
                let m = self.data[self.pos + 1];
                if (0xD0..=0xD7).contains(&m) {
                    self.pos += 2;
                    return Ok(());
                }
                if m != 0x00 && m != 0xFF {
                    return Err(JpegError::Corrupt("missing restart marker"));
                }
            }
            self.pos += 1;
        }
        Err(JpegError::Truncated)
    }
}

struct Component {
    id: u8,
    h: usize,
    v: usize,
    tq: usize,
    /// Samples of the block-padded component plane.
    stride: usize,
    rows: usize,
    samples: Vec<u8>,
    /// Unpadded component size.
    width: usize,
    height: usize,
    dc_pred: i32,
}

struct Frame {
    width: usize,
    height: usize,
    hmax: usize,
    vmax: usize,
    components: Vec<Component>,
}

struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
    quant: [Option<[u16; 64]>; 4],
    dc: [Option<HuffTable>; 4],
    ac: [Option<HuffTable>; 4],
    restart_interval: usize,
    frame: Option<Frame>,
    dct: [[f64; 8]; 8],
}

impl<'a> Decoder<'a> {
    fn u8(&mut self) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or(JpegError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from(self.u8()?) << 8 | u16::from(self.u8()?))
    }

    fn segment(&mut self) -> Result<&'a [u8]> {
        let len = self.u16()? as usize;
        if len < 2 {
            return Err(JpegError::Corrupt("segment length"));
        }
        let end = self.pos + len - 2;
        let s = self.data.get(self.pos..end).ok_or(JpegError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn next_marker(&mut self) -> Result<u8> {
        // Tolerate garbage before a marker and any number of fill bytes.
        loop {
            if self.u8()? != 0xFF {
                continue;
            }
            let mut m = self.u8()?;
            while m == 0xFF {
                m = self.u8()?;
            }
            if m != 0x00 {
                return Ok(m);
            }
        }
    }

    fn read_dqt(&mut self) -> Result<()> {
        let mut s = self.segment()?;
        while !s.is_empty() {
            let (pq, tq) = (s[0] >> 4, (s[0] & 15) as usize);
            if tq > 3 || pq > 1 {
                return Err(JpegError::Corrupt("quantization table id"));
            }
            let n = if pq == 0 { 64 } else { 128 };
            let body = s.get(1..1 + n).ok_or(JpegError::Truncated)?;
            let mut t = [0u16; 64];
            for (k, &nat) in ZIGZAG.iter().enumerate() {
                t[nat] = if pq == 0 {
                    u16::from(body[k])
                } else {
                    u16::from(body[2 * k]) << 8 | u16::from(body[2 * k + 1])
                };
            }
            self.quant[tq] = Some(t);
            s = &s[1 + n..];
        }
        Ok(())
    }

    fn read_dht(&mut self) -> Result<()> {
        let mut s = self.segment()?;
        while !s.is_empty() {
            if s.len() < 17 {
                return Err(JpegError::Truncated);
            }
            let (tc, th) = (s[0] >> 4, (s[0] & 15) as usize);
            if tc > 1 || th > 3 {
                return Err(JpegError::Corrupt("Huffman table id"));
            }
            let mut bits = [0u8; 16];
            bits.copy_from_slice(&s[1..17]);
            let n: usize = bits.iter().map(|&b| b as usize).sum();
            let values = s.get(17..17 + n).ok_or(JpegError::Truncated)?.to_vec();
            let t = HuffTable::new(&bits, values)?;
            if tc == 0 {
                self.dc[th] = Some(t);
            } else {
                self.ac[th] = Some(t);
            }
            s = &s[17 + n..];
        }
        Ok(())
    }

    fn read_sof(&mut self) -> Result<()> {
        if self.frame.is_some() {
            return Err(JpegError::Corrupt("multiple frames"));
        }
        let s = self.segment()?;
        if s.len() < 6 {
            return Err(JpegError::Truncated);
        }
        if s[0] != 8 {
            return Err(JpegError::Unsupported("sample precision other than 8 bits"));
        }
        let height = usize::from(u16::from_be_bytes([s[1], s[2]]));
        let width = usize::from(u16::from_be_bytes([s[3], s[4]]));
        let n = s[5] as usize;
        if height == 0 {
            return Err(JpegError::Unsupported("DNL-defined height"));
        }
        if width == 0 {
            return Err(JpegError::Corrupt("zero width"));
        }
        if n != 1 && n != 3 {
            return Err(JpegError::Unsupported("component count other than 1 or 3"));
        }
        let body = s.get(6..6 + 3 * n).ok_or(JpegError::Truncated)?;
        let mut comps: Vec<Component> = Vec::with_capacity(n);
        for c in body.chunks_exact(3) {
            let (h, v) = ((c[1] >> 4) as usize, (c[1] & 15) as usize);
            if !(1..=4).contains(&h) || !(1..=4).contains(&v) || c[2] > 3 {
                return Err(JpegError::Corrupt("component parameters"));
            }
            comps.push(Component {
                id: c[0],
                h,
                v,
                tq: c[2] as usize,
                stride: 0,
                rows: 0,
                samples: Vec::new(),
                width: 0,
                height: 0,
                dc_pred: 0,
            });
        }
        let hmax = comps.iter().map(|c| c.h).max().unwrap_or(1);
        let vmax = comps.iter().map(|c| c.v).max().unwrap_or(1);
        let mcux = width.div_ceil(8 * hmax);
        let mcuy = height.div_ceil(8 * vmax);
        for c in &mut comps {
            c.width = (width * c.h).div_ceil(hmax);
            c.height = (height * c.v).div_ceil(vmax);
            c.stride = mcux * c.h * 8;
            c.rows = mcuy * c.v * 8;
            c.samples = vec![0; c.stride * c.rows];
        }
        self.frame = Some(Frame {
            width,
            height,
            hmax,
            vmax,
            components: comps,
        });
        Ok(())
    }

    fn read_sos(&mut self) -> Result<()> {
        let s = self.segment()?;
        let frame = self.frame.as_mut().ok_or(JpegError::Corrupt("scan before frame"))?;
        let ns = *s.first().ok_or(JpegError::Truncated)? as usize;
        if ns == 0 || ns > frame.components.len() || s.len() < 1 + 2 * ns + 3 {
            return Err(JpegError::Corrupt("scan header"));
        }
        let (ss, se, a) = (s[1 + 2 * ns], s[2 + 2 * ns], s[3 + 2 * ns]);
        if ss != 0 || se != 63 || a != 0 {
            return Err(JpegError::Unsupported("progressive scan parameters"));
        }
        let mut scan = Vec::with_capacity(ns);
        for sel in s[1..1 + 2 * ns].chunks_exact(2) {
            let idx = frame
                .components
                .iter()
                .position(|c| c.id == sel[0])
                .ok_or(JpegError::Corrupt("scan component id"))?;
            let (td, ta) = ((sel[1] >> 4) as usize, (sel[1] & 15) as usize);
            if td > 3 || ta > 3 {
                return Err(JpegError::Corrupt("scan table selector"));
            }
            let dc = self.dc[td].clone().ok_or(JpegError::Corrupt("missing DC table"))?;
            let ac = self.ac[ta].clone().ok_or(JpegError::Corrupt("missing AC table"))?;
            let q = self.quant[frame.components[idx].tq]
                .ok_or(JpegError::Corrupt("missing quantization table"))?;
            scan.push((idx, dc, ac, q));
        }
        for c in &mut frame.components {
            c.dc_pred = 0;
        }

        let mut reader = BitReader::new(self.data, self.pos);
        let dct = &self.dct;
        let restart = self.restart_interval;
        let decode_one = |reader: &mut BitReader,
                              comp: &mut Component,
                              dc: &HuffTable,
                              ac: &HuffTable,
                              q: &[u16; 64],
                              bx: usize,
                              by: usize|
         -> Result<()> {
            let mut coef = [0.0f64; 64];
            let t = reader.decode(dc)?;
            if t > 11 {
                return Err(JpegError::Corrupt("DC magnitude"));
            }
            comp.dc_pred += reader.receive_extend(u32::from(t));
            coef[0] = f64::from(comp.dc_pred) * f64::from(q[0]);
            let mut k = 1;
            while k < 64 {
                let rs = reader.decode(ac)?;
                let (r, s) = ((rs >> 4) as usize, u32::from(rs & 15));
                if s == 0 {
                    if r != 15 {
                        break;
                    }
                    k += 16;
                    continue;
                }
                k += r;
                if k > 63 {
                    return Err(JpegError::Corrupt("AC coefficient index"));
                }
                let n = ZIGZAG[k];
                coef[n] = f64::from(reader.receive_extend(s)) * f64::from(q[n]);
                k += 1;
            }
            let px = idct(dct, &coef);
            for y in 0..8 {
                let row = (by * 8 + y) * comp.stride + bx * 8;
                for x in 0..8 {
                    comp.samples[row + x] = libm::round(px[y * 8 + x] + 128.0).clamp(0.0, 255.0) as u8;
                }
            }
            Ok(())
        };

        let mut since_restart = 0usize;
        if ns == 1 {
            let (idx, ref dc, ref ac, ref q) = scan[0];
            let comp = &mut frame.components[idx];
            let (bw, bh) = (comp.width.div_ceil(8), comp.height.div_ceil(8));
            let total = bw * bh;
            for n in 0..total {
                if restart > 0 && since_restart == restart {
                    reader.restart()?;
                    comp.dc_pred = 0;
                    since_restart = 0;
                }
                decode_one(&mut reader, comp, dc, ac, q, n % bw, n / bw)?;
                since_restart += 1;
            }
        } else {
            let mcux = frame.width.div_ceil(8 * frame.hmax);
            let mcuy = frame.height.div_ceil(8 * frame.vmax);
            for m in 0..mcux * mcuy {
                if restart > 0 && since_restart == restart {
                    reader.restart()?;
                    for c in &mut frame.components {
                        c.dc_pred = 0;
                    }
                    since_restart = 0;
                }
                let (mx, my) = (m % mcux, m / mcux);
                for (idx, dc, ac, q) in &scan {
                    let comp = &mut frame.components[*idx];
                    for dy in 0..comp.v {
                        for dx in 0..comp.h {
                            let (bx, by) = (mx * comp.h + dx, my * comp.v + dy);
                            decode_one(&mut reader, comp, dc, ac, q, bx, by)?;
                        }
                    }
                }
                since_restart += 1;
            }
        }
        self.pos = reader.pos;
        Ok(())
    }

    fn finish(self) -> Result<ImageBuf> {
        let frame = self.frame.ok_or(JpegError::Corrupt("no frame"))?;
        let (w, h) = (frame.width, frame.height);
        let sample = |c: &Component, x: usize, y: usize| -> f64 {
            if c.h == frame.hmax && c.v == frame.vmax {
                return f64::from(c.samples[y * c.stride + x]);
            }
            // Triangle (bilinear) upsampling between component sample centres.
            let pos = |o: usize, f: usize, fmax: usize, len: usize| {
                let p = ((o as f64 + 0.5) * f as f64 / fmax as f64 - 0.5).clamp(0.0, (len - 1) as f64);
                let i0 = libm::floor(p) as usize;
                (i0, (i0 + 1).min(len - 1), p - i0 as f64)
            };
            let (x0, x1, fx) = pos(x, c.h, frame.hmax, c.width);
            let (y0, y1, fy) = pos(y, c.v, frame.vmax, c.height);
            let s = |xx: usize, yy: usize| f64::from(c.samples[yy * c.stride + xx]);
            let top = s(x0, y0) * (1.0 - fx) + s(x1, y0) * fx;
            let bottom = s(x0, y1) * (1.0 - fx) + s(x1, y1) * fx;
            top * (1.0 - fy) + bottom * fy
        };
        let clamp = |v: f64| libm::round(v).clamp(0.0, 255.0) as u8;
        let comps = &frame.components;
        let data = if comps.len() == 1 {
            let mut d = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    d.push(clamp(sample(&comps[0], x, y)));
                }
            }
            d
        } else {
            let mut d = Vec::with_capacity(w * h * 3);
            for y in 0..h {
                for x in 0..w {
                    let yy = sample(&comps[0], x, y);
                    let cb = sample(&comps[1], x, y) - 128.0;
                    let cr = sample(&comps[2], x, y) - 128.0;
                    d.push(clamp(yy + 1.402 * cr));
                    d.push(clamp(yy - 0.344_136_286 * cb - 0.714_136_286 * cr));
                    d.push(clamp(yy + 1.772 * cb));
                }
            }
            d
        };
        ImageBuf::new(w, h, comps.len(), data).map_err(|_| JpegError::Corrupt("frame size"))
    }
}

/// Decodes a baseline (or extended-sequential, 8-bit) Huffman JPEG into a
/// gray or RGB image. Progressive and arithmetic-coded streams are rejected.
pub fn decode(bytes: &[u8]) -> Result<ImageBuf> {
    if bytes.len() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8 {
        return Err(JpegError::NotJpeg);
    }
    let mut d = Decoder {
        data: bytes,
        pos: 2,
        quant: [None; 4],
        dc: [None, None, None, None],
        ac: [None, None, None, None],
        restart_interval: 0,
        frame: None,
        dct: dct_matrix(),
    };
    let mut scans = 0;
    loop {
        match d.next_marker()? {
            0xD9 => break,
            0xC0 | 0xC1 => d.read_sof()?,
            0xC2 | 0xC6 | 0xCA | 0xCE => return Err(JpegError::Unsupported("progressive JPEG")),
            0xC3 | 0xC5 | 0xC7 | 0xCB | 0xCD | 0xCF => {
                return Err(JpegError::Unsupported("lossless or hierarchical JPEG"))
            }
            0xC9 => return Err(JpegError::Unsupported("arithmetic coding")),
            0xC4 => d.read_dht()?,
            0xCC => return Err(JpegError::Unsupported("arithmetic coding")),
            0xDB => d.read_dqt()?,
            0xDD => {
                let s = d.segment()?;
                if s.len() < 2 {
                    return Err(JpegError::Truncated);
                }
                d.restart_interval = usize::from(u16::from_be_bytes([s[0], s[1]]));
            }
            0xDA => {
                d.read_sos()?;
                scans += 1;
            }
            0xD0..=0xD7 | 0x01 => {}
            _ => {
                d.segment()?;
            }
        }
    }
    if scans == 0 {
        return Err(JpegError::Corrupt("no scan"));
    }
    d.finish()
}

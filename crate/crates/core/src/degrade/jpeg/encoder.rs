use alloc::vec;
use alloc::vec::Vec;

use super::tables::*;
use super::{dct_matrix, fdct, scaled_quant_table, JpegError};
use crate::image::ImageBuf;

struct HuffCodes {
    code: [u16; 256],
    len: [u8; 256],
}

impl HuffCodes {
    fn new(bits: &[u8; 16], values: &[u8]) -> Self {
        let mut code = [0u16; 256];
        let mut len = [0u8; 256];
        let mut next = 0u16;
        let mut k = 0;
        for (l, &n) in bits.iter().enumerate() {
            for _ in 0..n {
                code[values[k] as usize] = next;
                len[values[k] as usize] = l as u8 + 1;
                next += 1;
                k += 1;
            }
            next <<= 1;
        }
        Self { code, len }
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn put(&mut self, bits: u32, n: u32) {
        debug_assert!(n <= 16);
        self.acc = (self.acc << n) | (bits & ((1 << n) - 1));
        self.nbits += n;
        while self.nbits >= 8 {
            let b = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(b);
            if b == 0xFF {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
        self.acc &= (1 << self.nbits) - 1;
    }

    fn huff(&mut self, t: &HuffCodes, symbol: u8) {
        let s = symbol as usize;
        self.put(u32::from(t.code[s]), u32::from(t.len[s]));
    }

    fn flush(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad);
        }
    }
}

fn category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

fn value_bits(v: i32, cat: u32) -> u32 {
    if v >= 0 {
        v as u32
    } else {
        (v + (1 << cat) - 1) as u32
    }
}

/// Level-shifted 8-bit component plane, edge-replicated to a block multiple.
struct Plane {
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    fn block(&self, bx: usize, by: usize) -> [f64; 64] {
        let mut b = [0.0; 64];
        for y in 0..8 {
            let row = (by * 8 + y) * self.width + bx * 8;
            b[y * 8..y * 8 + 8].copy_from_slice(&self.data[row..row + 8]);
        }
        b
    }
}

struct Component<'a> {
    quant: &'a [u16; 64],
    dc: &'a HuffCodes,
    ac: &'a HuffCodes,
    pred: i32,
}

fn encode_block(w: &mut BitWriter, dct: &[[f64; 8]; 8], samples: &[f64; 64], c: &mut Component) {
    let coef = fdct(dct, samples);
    let mut zz = [0i32; 64];
    for (k, z) in zz.iter_mut().enumerate() {
        let n = ZIGZAG[k];
        *z = libm::round(coef[n] / f64::from(c.quant[n])) as i32;
    }

    let diff = zz[0] - c.pred;
    c.pred = zz[0];
    let cat = category(diff);
    w.huff(c.dc, cat as u8);
    if cat > 0 {
        w.put(value_bits(diff, cat), cat);
    }

    let mut run = 0u32;
    for &v in &zz[1..] {
        if v == 0 {
            run += 1;
            continue;
        }
        while run > 15 {
            w.huff(c.ac, 0xF0);
            run -= 16;
        }
        let cat = category(v);
        w.huff(c.ac, ((run << 4) | cat) as u8);
        w.put(value_bits(v, cat), cat);
        run = 0;
    }
    if run > 0 {
        w.huff(c.ac, 0x00);
    }
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn dht_payload(class_id: u8, bits: &[u8; 16], values: &[u8]) -> Vec<u8> {
    let mut p = vec![class_id];
    p.extend_from_slice(bits);
    p.extend_from_slice(values);
    p
}

/// Encodes an 8-bit gray or RGB image as a baseline JFIF stream. RGB images
/// use 4:2:0 chroma subsampling.
pub fn encode(img: &ImageBuf, quality: u8) -> Result<Vec<u8>, JpegError> {
    let luma_q = scaled_quant_table(&LUMA_QUANT, quality)?;
    let chroma_q = scaled_quant_table(&CHROMA_QUANT, quality)?;
    let (w, h) = img.dimensions();
    if w > 0xFFFF || h > 0xFFFF {
        return Err(JpegError::Unsupported("dimensions above 65535"));
    }
    let color = img.channels() == 3;
    let mcu = if color { 16 } else { 8 };
    let (pw, ph) = (w.div_ceil(mcu) * mcu, h.div_ceil(mcu) * mcu);

    let mut y_plane = vec![0.0; pw * ph];
    let (mut cb_full, mut cr_full) = if color {
        (vec![0.0; pw * ph], vec![0.0; pw * ph])
    } else {
        (Vec::new(), Vec::new())
    };
    for py in 0..ph {
        let sy = py.min(h - 1);
        for px in 0..pw {
            let sx = px.min(w - 1);
            let i = py * pw + px;
            if color {
                let r = f64::from(img.get(sx, sy, 0));
                let g = f64::from(img.get(sx, sy, 1));
                let b = f64::from(img.get(sx, sy, 2));
                y_plane[i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
                cb_full[i] = -0.168_735_892 * r - 0.331_264_108 * g + 0.5 * b;
                cr_full[i] = 0.5 * r - 0.418_687_589 * g - 0.081_312_411 * b;
            } else {
                y_plane[i] = f64::from(img.get(sx, sy, 0)) - 128.0;
            }
        }
    }
    let luma = Plane {
        width: pw,
        data: y_plane,
    };
    let subsample = |full: &[f64]| {
        let (cw, chh) = (pw / 2, ph / 2);
        let mut data = vec![0.0; cw * chh];
        for y in 0..chh {
            for x in 0..cw {
                let i = 2 * y * pw + 2 * x;
                data[y * cw + x] = 0.25 * (full[i] + full[i + 1] + full[i + pw] + full[i + pw + 1]);
            }
        }
        Plane { width: cw, data }
    };
    let chroma = if color {
        Some((subsample(&cb_full), subsample(&cr_full)))
    } else {
        None
    };

    let mut out = Vec::with_capacity(1024 + w * h / 2);
    out.extend_from_slice(&[0xFF, 0xD8]);
    segment(&mut out, 0xE0, b"JFIF\0\x01\x01\x00\x00\x01\x00\x01\x00\x00");

    let mut dqt = vec![0x00];
    dqt.extend(ZIGZAG.iter().map(|&n| luma_q[n] as u8));
    if color {
        dqt.push(0x01);
        dqt.extend(ZIGZAG.iter().map(|&n| chroma_q[n] as u8));
    }
    segment(&mut out, 0xDB, &dqt);

    let mut sof = vec![8];
    sof.extend_from_slice(&(h as u16).to_be_bytes());
    sof.extend_from_slice(&(w as u16).to_be_bytes());
    if color {
        sof.extend_from_slice(&[3, 1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1]);
    } else {
        sof.extend_from_slice(&[1, 1, 0x11, 0]);
    }
    segment(&mut out, 0xC0, &sof);

    let mut dht = dht_payload(0x00, &LUMA_DC_BITS, &DC_VALUES);
    dht.extend(dht_payload(0x10, &LUMA_AC_BITS, &LUMA_AC_VALUES));
    if color {
        dht.extend(dht_payload(0x01, &CHROMA_DC_BITS, &DC_VALUES));
        dht.extend(dht_payload(0x11, &CHROMA_AC_BITS, &CHROMA_AC_VALUES));
    }
    segment(&mut out, 0xC4, &dht);

    if color {
        segment(&mut out, 0xDA, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);
    } else {
        segment(&mut out, 0xDA, &[1, 1, 0x00, 0, 63, 0]);
    }

    let luma_dc = HuffCodes::new(&LUMA_DC_BITS, &DC_VALUES);
    let luma_ac = HuffCodes::new(&LUMA_AC_BITS, &LUMA_AC_VALUES);
    let chroma_dc = HuffCodes::new(&CHROMA_DC_BITS, &DC_VALUES);
    let chroma_ac = HuffCodes::new(&CHROMA_AC_BITS, &CHROMA_AC_VALUES);
    let mut yc = Component {
        quant: &luma_q,
        dc: &luma_dc,
        ac: &luma_ac,
        pred: 0,
    };
    let mut cbc = Component {
        quant: &chroma_q,
        dc: &chroma_dc,
        ac: &chroma_ac,
        pred: 0,
    };
    let mut crc = Component {
        quant: &chroma_q,
        dc: &chroma_dc,
        ac: &chroma_ac,
        pred: 0,
    };

    let dct = dct_matrix();
    let mut bw = BitWriter {
        out,
        acc: 0,
        nbits: 0,
    };
    for my in 0..ph / mcu {
        for mx in 0..pw / mcu {
            match &chroma {
                Some((cb, cr)) => {
                    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let b = luma.block(2 * mx + dx, 2 * my + dy);
                        encode_block(&mut bw, &dct, &b, &mut yc);
                    }
                    encode_block(&mut bw, &dct, &cb.block(mx, my), &mut cbc);
                    encode_block(&mut bw, &dct, &cr.block(mx, my), &mut crc);
                }
                None => encode_block(&mut bw, &dct, &luma.block(mx, my), &mut yc),
            }
        }
    }
    bw.flush();
    let mut out = bw.out;
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_and_value_bits() {
        assert_eq!(category(0), 0);
        assert_eq!(category(1), 1);
        assert_eq!(category(-1), 1);
        assert_eq!(category(-3), 2);
        assert_eq!(category(1023), 10);
        assert_eq!(category(2047), 11);
        assert_eq!(value_bits(-1, 1), 0);
        assert_eq!(value_bits(-3, 2), 0);
        assert_eq!(value_bits(-2, 2), 1);
        assert_eq!(value_bits(3, 2), 3);
    }

    #[test]
    fn canonical_codes_for_luma_dc() {
        let t = HuffCodes::new(&LUMA_DC_BITS, &DC_VALUES);
        // Table K.3
        assert_eq!((t.code[0], t.len[0]), (0b00, 2));
        assert_eq!((t.code[1], t.len[1]), (0b010, 3));
        assert_eq!((t.code[5], t.len[5]), (0b110, 3));
        assert_eq!((t.code[6], t.len[6]), (0b1110, 4));
        assert_eq!((t.code[11], t.len[11]), (0b1_1111_1110, 9));
    }

    #[test]
    fn stuffs_ff_bytes() {
        let mut w = BitWriter {
            out: Vec::new(),
            acc: 0,
            nbits: 0,
        };
        w.put(0xFF, 8);
        w.put(0b1, 1);
        w.flush();
        assert_eq!(w.out, vec![0xFF, 0x00, 0xFF, 0x00]);
    }

    #[test]
    fn stream_layout() {
        let img = ImageBuf::filled(20, 10, 3, 128).unwrap();
        let bytes = encode(&img, 75).unwrap();
        assert_eq!(&bytes[..2], &[0xFF, 0xD8]);
        assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xD9]);
        assert_eq!(&bytes[6..11], b"JFIF\0");
    }
}

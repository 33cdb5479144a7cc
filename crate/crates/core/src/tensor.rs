//! Dense order-N tensors.
//!
//! Storage order is first-index-fastest: the element at zero-based multi-index
//! `(s_1, ..., s_N)` sits at `s_1 + d_1 s_2 + d_1 d_2 s_3 + ...`. Under this
//! order the `i`-th unfolding is the same buffer read as a column-major
//! `(d_1...d_i) x (d_{i+1}...d_N)` matrix, so unfolding never copies indices
//! around.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_dims(&dims)?;
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::shape(format!(
                "data has {} entries, dims {:?} need {}",
                data.len(),
                dims,
                len
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        validate_dims(&dims)?;
        let len = dims.iter().product();
        Ok(Self {
            dims,
            data: vec![0.0; len],
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Linear position of a zero-based multi-index.
    pub fn position(&self, index: &[usize]) -> Result<usize> {
        linear_position(&self.dims, index)
    }

    pub fn multi_index(&self, position: usize) -> Result<Vec<usize>> {
        multi_index(&self.dims, position)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.position(index)?])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn scaled(&self, c: f64) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`
    pub fn add_scaled(&self, c: f64, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_dims(other)?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.add_scaled(-1.0, other)
    }

    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn check_same_dims(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::shape(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// The `cut`-th unfolding, `cut` in `1..N`: rows enumerate the first `cut`
    /// modes and columns the remaining ones.
    pub fn unfold(&self, cut: usize) -> Result<DMatrix<f64>> {
        let n = self.order();
        if cut == 0 || cut >= n {
            return Err(Error::Index(format!(
                "unfolding cut {cut} outside 1..{n} for an order-{n} tensor"
            )));
        }
        let rows: usize = self.dims[..cut].iter().product();
        let cols: usize = self.dims[cut..].iter().product();
        Ok(DMatrix::from_column_slice(rows, cols, &self.data))
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(dims: Vec<usize>, cut: usize, matrix: &DMatrix<f64>) -> Result<DenseTensor> {
        validate_dims(&dims)?;
        let n = dims.len();
        if cut == 0 || cut >= n {
            return Err(Error::Index(format!("fold cut {cut} outside 1..{n}")));
        }
        let rows: usize = dims[..cut].iter().product();
        let cols: usize = dims[cut..].iter().product();
        if matrix.shape() != (rows, cols) {
            return Err(Error::shape(format!(
                "matrix {:?} cannot fold into {:?} at cut {cut}",
                matrix.shape(),
                dims
            )));
        }
        DenseTensor::new(dims, matrix.as_slice().to_vec())
    }

    /// Writes the `DTF1` format: an ASCII header line `DTF1 N d1 ... dN`
    /// followed by the entries as little-endian f64 in storage order.
    pub fn write_dtf<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = format!("DTF1 {}", self.order());
        for d in &self.dims {
            header.push_str(&format!(" {d}"));
        }
        header.push('\n');
        w.write_all(header.as_bytes())?;
        write_f64s(&mut w, &self.data)?;
        Ok(())
    }

    pub fn read_dtf<R: Read>(mut r: R) -> Result<DenseTensor> {
        let header = read_header_line(&mut r)?;
        let mut fields = header.split_ascii_whitespace();
        if fields.next() != Some("DTF1") {
            return Err(Error::Format("missing DTF1 magic".into()));
        }
        let nums = parse_usizes(fields)?;
        let (&n, dims) = nums
            .split_first()
            .ok_or_else(|| Error::Format("DTF1 header lacks the order".into()))?;
        if dims.len() != n {
            return Err(Error::Format(format!(
                "DTF1 header declares order {n} but lists {} extents",
                dims.len()
            )));
        }
        let len: usize = dims.iter().product();
        let data = read_f64s(&mut r, len)?;
        DenseTensor::new(dims.to_vec(), data)
    }
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::shape("tensor order must be at least 1"));
    }
    if dims.contains(&0) {
        return Err(Error::shape(format!("zero extent in dims {dims:?}")));
    }
    Ok(())
}

pub fn linear_position(dims: &[usize], index: &[usize]) -> Result<usize> {
    if index.len() != dims.len() {
        return Err(Error::Index(format!(
            "multi-index of length {} for order {}",
            index.len(),
            dims.len()
        )));
    }
    let mut pos = 0;
    let mut stride = 1;
    for (&s, &d) in index.iter().zip(dims) {
        if s >= d {
            return Err(Error::Index(format!("index {index:?} outside {dims:?}")));
        }
        pos += s * stride;
        stride *= d;
    }
    Ok(pos)
}

pub fn multi_index(dims: &[usize], mut position: usize) -> Result<Vec<usize>> {
    let len: usize = dims.iter().product();
    if position >= len {
        return Err(Error::Index(format!(
            "position {position} outside tensor of {len} entries"
        )));
    }
    let mut index = Vec::with_capacity(dims.len());
    for &d in dims {
        index.push(position % d);
        position /= d;
    }
    Ok(index)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorize while the
    // summation order stays fixed.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn read_header_line<R: Read>(r: &mut R) -> Result<String> {
    let mut bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Format("unterminated header line".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        bytes.push(byte[0]);
        if bytes.len() > 4096 {
            return Err(Error::Format("header line too long".into()));
        }
    }
    String::from_utf8(bytes).map_err(|_| Error::Format("header is not UTF-8".into()))
}

pub(crate) fn parse_usizes<'a>(fields: impl Iterator<Item = &'a str>) -> Result<Vec<usize>> {
    fields
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad integer {f:?} in header")))
        })
        .collect()
}

pub fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("expected {count} doubles: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Reads a raw little-endian f64 vector of unknown length.
pub fn read_f64_vec<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes is not a whole number of doubles",
            buf.len()
        )));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iota(dims: Vec<usize>) -> DenseTensor {
        let len = dims.iter().product();
        DenseTensor::new(dims, (1..=len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn unfold_first_cut_of_cube() {
        let x = iota(vec![2, 2, 2]);
        let m = x.unfold(1).unwrap();
        let expected = DMatrix::from_row_slice(2, 4, &[1., 3., 5., 7., 2., 4., 6., 8.]);
        assert_eq!(m, expected);
    }

    #[test]
    fn unfold_second_cut_of_cube() {
        let x = iota(vec![2, 2, 2]);
        let m = x.unfold(2).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[1., 5., 2., 6., 3., 7., 4., 8.]);
        assert_eq!(m, expected);
    }

    #[test]
    fn unfold_rejects_bad_cut() {
        let x = iota(vec![2, 3]);
        assert!(matches!(x.unfold(0), Err(Error::Index(_))));
        assert!(matches!(x.unfold(2), Err(Error::Index(_))));
    }

    #[test]
    fn unfold_entries_follow_index_formula() {
        let x = iota(vec![2, 3, 4, 2]);
        for cut in 1..4 {
            let m = x.unfold(cut).unwrap();
            for pos in 0..x.len() {
                let idx = x.multi_index(pos).unwrap();
                let row = linear_position(&x.dims()[..cut], &idx[..cut]).unwrap();
                let col = linear_position(&x.dims()[cut..], &idx[cut..]).unwrap();
                assert_eq!(m[(row, col)], x.data()[pos]);
            }
            assert_eq!(DenseTensor::fold(x.dims().to_vec(), cut, &m).unwrap(), x);
        }
    }

    #[test]
    fn position_matches_one_based_formula() {
        // (s1, s2, s3) = (2, 3, 1) one-based in a 2x3x4 tensor:
        // 2 + 2*(3-1) + 6*(1-1) = 6, i.e. zero-based position 5.
        let dims = [2, 3, 4];
        assert_eq!(linear_position(&dims, &[1, 2, 0]).unwrap(), 5);
    }

    #[test]
    fn dtf_round_trip_and_header() {
        let x = iota(vec![3, 2]);
        let mut buf = Vec::new();
        x.write_dtf(&mut buf).unwrap();
        assert!(buf.starts_with(b"DTF1 2 3 2\n"));
        assert_eq!(buf.len(), 11 + 6 * 8);
        assert_eq!(DenseTensor::read_dtf(&buf[..]).unwrap(), x);
        assert!(DenseTensor::read_dtf(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
    }

    fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..=4, 1..=5)
    }

    proptest! {
        #[test]
        fn vectorization_is_a_bijection(dims in dims_strategy()) {
            let len: usize = dims.iter().product();
            let mut seen = vec![false; len];
            for pos in 0..len {
                let idx = multi_index(&dims, pos).unwrap();
                let back = linear_position(&dims, &idx).unwrap();
                prop_assert_eq!(back, pos);
                prop_assert!(!seen[back]);
                seen[back] = true;
            }
        }
    }
}

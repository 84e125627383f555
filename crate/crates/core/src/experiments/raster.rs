//! Rasters of the code regions of `f_b` and of its discontinuity set.
//!
//! Pixel `(col, row)` samples the exact center
//! `x = ((col + ½)/W, (H − 1 − row + ½)/H)`, so row 0 is the top of the image.
//! At `d ≠ 2` the raster covers the slice through the first two coordinates
//! (one row at `d = 1`) with all further coordinates at `½`.

use std::io::Write;

use rayon::prelude::*;

use crate::arith::{format_rational, rat, RVector};
use crate::error::{Error, Result};
use crate::rotation::ContractedRotation;

/// Colors for `p = (0,0), (1,0), (0,1), (1,1)`, indexed by the bits of `p`.
pub const PALETTE: [[u8; 3]; 4] = [[230, 159, 0], [86, 180, 233], [0, 158, 115], [204, 121, 167]];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub dim: usize,
    pub chi: Vec<i64>,
    /// Row-major bitmasks of `p = e_b(x) − χ(b)`.
    pub codes: Vec<u32>,
}

pub fn pixel_center(dim: usize, width: usize, height: usize, col: usize, row: usize) -> RVector {
    (0..dim)
        .map(|j| match j {
            0 => rat(2 * col as i64 + 1, 2 * width as i64),
            1 => rat(2 * (height - 1 - row) as i64 + 1, 2 * height as i64),
            _ => rat(1, 2),
        })
        .collect()
}

pub fn raster(sys: &ContractedRotation, width: usize, height: usize) -> Result<Raster> {
    let dim = sys.dim();
    let height = if dim == 1 { 1 } else { height };
    if width < 2 || (dim > 1 && height < 2) {
        return Err(Error::Invalid("raster resolution must be at least 2 per axis".into()));
    }
    if width.checked_mul(height).is_none_or(|n| n > 1 << 26) {
        return Err(Error::Invalid("raster resolution is too large".into()));
    }
    let chi = sys.chi();
    let codes = (0..height)
        .into_par_iter()
        .map(|row| {
            (0..width)
                .map(|col| {
                    let code = sys.code_e(&pixel_center(dim, width, height, col, row))?;
                    Ok(code.offset_from(&chi).iter().enumerate().fold(0u32, |m, (j, &p)| m | (p as u32) << j))
                })
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(Raster { width, height, dim, chi: chi.0, codes })
}

impl Raster {
    pub fn code_at(&self, col: usize, row: usize) -> u32 {
        self.codes[row * self.width + col]
    }

    /// Pixels with a 4-neighbour of a different code.
    pub fn mask(&self) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        (0..h)
            .flat_map(|row| (0..w).map(move |col| (col, row)))
            .map(|(col, row)| {
                let c = self.code_at(col, row);
                (col > 0 && self.code_at(col - 1, row) != c)
                    || (col + 1 < w && self.code_at(col + 1, row) != c)
                    || (row > 0 && self.code_at(col, row - 1) != c)
                    || (row + 1 < h && self.code_at(col, row + 1) != c)
            })
            .collect()
    }

    pub fn distinct_codes(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = self.codes.clone();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    fn require_plane(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::Invalid(format!("pixmaps need d = 2, got d = {}", self.dim)));
        }
        Ok(())
    }

    /// Binary P6 pixmap colored by code.
    pub fn to_ppm(&self) -> Result<Vec<u8>> {
        self.require_plane()?;
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for &c in &self.codes {
            out.extend_from_slice(&PALETTE[c as usize]);
        }
        Ok(out)
    }

    /// Binary P5 graymap, 255 on discontinuity pixels.
    pub fn mask_pgm(&self) -> Result<Vec<u8>> {
        self.require_plane()?;
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.mask().into_iter().map(|m| if m { 255u8 } else { 0 }));
        Ok(out)
    }

    /// Columns `row, col, x_1..x_d, f_1..f_d, p, discontinuity`.
    pub fn write_csv<W: Write>(&self, sys: &ContractedRotation, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["row".to_string(), "col".to_string()];
        header.extend((1..=self.dim).map(|j| format!("x_{j}")));
        header.extend((1..=self.dim).map(|j| format!("f_{j}")));
        header.extend(["p".to_string(), "discontinuity".to_string()]);
        w.write_record(&header)?;
        let mask = self.mask();
        for row in 0..self.height {
            for col in 0..self.width {
                let x = pixel_center(self.dim, self.width, self.height, col, row);
                let fx = sys.apply_f(&x)?;
                let code = self.code_at(col, row);
                let p: Vec<String> = (0..self.dim).map(|j| (code >> j & 1).to_string()).collect();
                let mut record = vec![row.to_string(), col.to_string()];
                record.extend(x.iter().map(format_rational));
                record.extend(fx.iter().map(format_rational));
                record.push(p.join(";"));
                record.push(u8::from(mask[row * self.width + col]).to_string());
                w.write_record(&record)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::RMatrix;

    fn figure_one() -> ContractedRotation {
        let a = RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]]);
        ContractedRotation::new(a, RVector::new(vec![rat(3, 10), rat(2, 5)])).unwrap()
    }

    #[test]
    fn smallest_raster() {
        let r = raster(&figure_one(), 2, 2).unwrap();
        // centers (1/4, 3/4), (3/4, 3/4) on top, (1/4, 1/4), (3/4, 1/4) below
        assert_eq!(pixel_center(2, 2, 2, 0, 0), RVector::new(vec![rat(1, 4), rat(3, 4)]));
        // A(3/4,3/4)+b = (39/40, 43/40) → p = (0,1)
        assert_eq!(r.code_at(1, 0), 0b10);
        // A(1/4,1/4)+b = (21/40, 5/8) → p = (0,0)
        assert_eq!(r.code_at(0, 1), 0);
        assert_eq!(r.to_ppm().unwrap().len(), "P6\n2 2\n255\n".len() + 12);
    }

    #[test]
    fn continuous_map_has_uniform_raster() {
        let a = RMatrix::from_fractions(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]]);
        let sys = ContractedRotation::new(a, RVector::zeros(2)).unwrap();
        let r = raster(&sys, 16, 16).unwrap();
        assert_eq!(r.distinct_codes(), vec![0]);
        assert!(r.mask().iter().all(|m| !m));
    }

    #[test]
    fn figure_one_has_four_regions() {
        let r = raster(&figure_one(), 64, 64).unwrap();
        assert_eq!(r.distinct_codes(), vec![0, 1, 2, 3]);
        assert!(r.mask().iter().any(|&m| m));
    }

    #[test]
    fn other_dimensions_only_give_csv() {
        let sys = ContractedRotation::new(RMatrix::from_fractions(&[&[(1, 2)]]), RVector::new(vec![rat(7, 10)])).unwrap();
        let r = raster(&sys, 10, 10).unwrap();
        assert_eq!((r.width, r.height), (10, 1));
        assert!(r.to_ppm().is_err());
        let mut csv = Vec::new();
        r.write_csv(&sys, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 11);
        // x = 11/20 gives 11/40 + 7/10 = 39/40, x = 13/20 gives 13/40 + 7/10 ≥ 1
        assert!(text.contains("0,5,11/20,39/40,0,1"));
        assert!(text.contains("0,6,13/20,1/40,1,1"));
    }
}

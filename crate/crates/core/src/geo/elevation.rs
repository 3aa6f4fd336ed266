//! ESRI ASCII elevation grids and bilinear sampling.

use serde::{Deserialize, Serialize};

use super::GeoError;

/// Regular elevation raster in the local projected frame.
///
/// `values` is stored row-major with row 0 at the *south* edge (the file
/// format lists rows north-to-south; the parser flips them). Cell (r, c) is
/// centered at `(x0 + (c + 0.5)·cell, y0 + (r + 0.5)·cell)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElevationGrid {
    pub origin: (f64, f64),
    pub cell_size: f64,
    pub nrows: usize,
    pub ncols: usize,
    pub values: Vec<f64>,
    pub nodata: f64,
}

impl ElevationGrid {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        let v = self.value(row, col);
        v == self.nodata || v.is_nan()
    }

    /// (x_min, y_min, x_max, y_max) of the covered area.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.origin.0,
            self.origin.1,
            self.origin.0 + self.ncols as f64 * self.cell_size,
            self.origin.1 + self.nrows as f64 * self.cell_size,
        )
    }

    /// Center coordinates of cell (row, col).
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin.0 + (col as f64 + 0.5) * self.cell_size,
            self.origin.1 + (row as f64 + 0.5) * self.cell_size,
        )
    }
}

/// Parse an ESRI ASCII grid (`ncols`, `nrows`, `xllcorner`, `yllcorner`,
/// `cellsize`, optional `NODATA_value`, then rows north-to-south).
pub fn parse_elevation(text: &str) -> Result<ElevationGrid, GeoError> {
    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut xll: Option<f64> = None;
    let mut yll: Option<f64> = None;
    let mut cell: Option<f64> = None;
    let mut nodata = -9999.0;

    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let mut parts = line.split_whitespace();
        let (Some(key), Some(value)) = (parts.next(), parts.next()) else {
            lines.next();
            continue;
        };
        let handled = match key.to_ascii_lowercase().as_str() {
            "ncols" => parse_into(&mut ncols, value, "ncols")?,
            "nrows" => parse_into(&mut nrows, value, "nrows")?,
            "xllcorner" => parse_into(&mut xll, value, "xllcorner")?,
            "yllcorner" => parse_into(&mut yll, value, "yllcorner")?,
            "cellsize" => parse_into(&mut cell, value, "cellsize")?,
            "nodata_value" => {
                nodata = parse_num(value, "NODATA_value")?;
                true
            }
            _ => false,
        };
        if !handled {
            break; // start of the value block
        }
        lines.next();
    }

    let ncols = ncols.ok_or_else(|| GeoError::Elevation("missing ncols".into()))?;
    let nrows = nrows.ok_or_else(|| GeoError::Elevation("missing nrows".into()))?;
    let xll = xll.ok_or_else(|| GeoError::Elevation("missing xllcorner".into()))?;
    let yll = yll.ok_or_else(|| GeoError::Elevation("missing yllcorner".into()))?;
    let cell = cell.ok_or_else(|| GeoError::Elevation("missing cellsize".into()))?;
    if nrows < 2 || ncols < 2 {
        return Err(GeoError::Elevation(format!("grid must be at least 2x2, got {nrows}x{ncols}")));
    }
    if !(cell > 0.0) {
        return Err(GeoError::Elevation(format!("cellsize must be positive, got {cell}")));
    }

    let mut values: Vec<f64> = Vec::with_capacity(nrows * ncols);
    for line in lines {
        for tok in line.split_whitespace() {
            values.push(parse_num(tok, "grid value")?);
        }
    }
    if values.len() != nrows * ncols {
        return Err(GeoError::ElevationCount { expected: nrows * ncols, found: values.len() });
    }
    // File rows run north to south; store south-up.
    let mut flipped = Vec::with_capacity(values.len());
    for r in (0..nrows).rev() {
        flipped.extend_from_slice(&values[r * ncols..(r + 1) * ncols]);
    }
    Ok(ElevationGrid {
        origin: (xll, yll),
        cell_size: cell,
        nrows,
        ncols,
        values: flipped,
        nodata,
    })
}

fn parse_into<T: std::str::FromStr>(
    slot: &mut Option<T>,
    value: &str,
    key: &str,
) -> Result<bool, GeoError> {
    let v = value
        .parse()
        .map_err(|_| GeoError::Elevation(format!("invalid {key}: {value:?}")))?;
    *slot = Some(v);
    Ok(true)
}

fn parse_num(value: &str, what: &str) -> Result<f64, GeoError> {
    value
        .parse()
        .map_err(|_| GeoError::Elevation(format!("invalid {what}: {value:?}")))
}

/// Bilinear interpolation of the four cells surrounding (x, y).
///
/// Nodata neighbors are excluded and the remaining weights renormalized.
/// Points inside the extent but within half a cell of the border clamp to the
/// nearest cell-center row/column.
pub fn sample_elevation(grid: &ElevationGrid, x: f64, y: f64) -> Result<f64, GeoError> {
    let (x_min, y_min, x_max, y_max) = grid.extent();
    if x < x_min || x > x_max || y < y_min || y > y_max {
        return Err(GeoError::OutOfRange { x, y });
    }
    let gx = ((x - x_min) / grid.cell_size - 0.5).clamp(0.0, (grid.ncols - 1) as f64);
    let gy = ((y - y_min) / grid.cell_size - 0.5).clamp(0.0, (grid.nrows - 1) as f64);
    let c0 = gx.floor() as usize;
    let r0 = gy.floor() as usize;
    let c1 = (c0 + 1).min(grid.ncols - 1);
    let r1 = (r0 + 1).min(grid.nrows - 1);
    let fx = gx - c0 as f64;
    let fy = gy - r0 as f64;

    let corners = [
        (r0, c0, (1.0 - fx) * (1.0 - fy)),
        (r0, c1, fx * (1.0 - fy)),
        (r1, c0, (1.0 - fx) * fy),
        (r1, c1, fx * fy),
    ];
    let mut value = 0.0;
    let mut weight = 0.0;
    for (r, c, w) in corners {
        if w > 0.0 && !grid.is_nodata(r, c) {
            value += w * grid.value(r, c);
            weight += w;
        }
    }
    if weight == 0.0 {
        return Err(GeoError::AllNodata { x, y });
    }
    Ok(value / weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_from(nrows: usize, ncols: usize, body: &str) -> ElevationGrid {
        let header = format!(
            "ncols {ncols}\nnrows {nrows}\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n"
        );
        parse_elevation(&format!("{header}{body}")).unwrap()
    }

    #[test]
    fn parses_flat_grid() {
        let g = grid_from(2, 2, "0 0\n0 0\n");
        assert_eq!(g.values, vec![0.0; 4]);
        assert_eq!(g.extent(), (0.0, 0.0, 2.0, 2.0));
    }

    #[test]
    fn ramp_reads_row_major_south_up() {
        // File rows are north to south: top row is 0 1 2.
        let g = grid_from(3, 3, "0 1 2\n3 4 5\n6 7 8\n");
        // South row (stored first) is the file's last row.
        assert_eq!(g.value(0, 0), 6.0);
        assert_eq!(g.value(2, 2), 2.0);
    }

    #[test]
    fn nodata_cell_is_flagged() {
        let g = grid_from(2, 2, "1 -9999\n1 1\n");
        assert!(g.is_nodata(1, 1));
        assert!(!g.is_nodata(0, 0));
    }

    #[test]
    fn value_count_mismatch_errors() {
        let doc = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n";
        assert!(matches!(
            parse_elevation(doc),
            Err(GeoError::ElevationCount { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn cell_center_query_returns_cell_value() {
        let g = grid_from(3, 3, "7 7 7\n7 7 7\n7 7 7\n");
        assert_eq!(sample_elevation(&g, 1.5, 1.5).unwrap(), 7.0);
    }

    #[test]
    fn midpoint_of_ramp_is_average() {
        // South row 0, north row 10: midpoint between centers = 5.
        let g = grid_from(2, 2, "10 10\n0 0\n");
        let v = sample_elevation(&g, 1.0, 1.0).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn interior_point_matches_scalar_bilinear_oracle() {
        let g = grid_from(3, 3, "0 1 2\n3 4 5\n6 7 8\n");
        // Query point between cell centers (0,0),(0,1),(1,0),(1,1) in south-up
        // indexing; hand bilinear with fx=0.3, fy=0.6.
        let (x, y) = (0.5 + 0.3, 0.5 + 0.6);
        let (v00, v10, v01, v11) = (g.value(0, 0), g.value(0, 1), g.value(1, 0), g.value(1, 1));
        let expect = (1.0 - 0.3) * (1.0 - 0.6) * v00
            + 0.3 * (1.0 - 0.6) * v10
            + (1.0 - 0.3) * 0.6 * v01
            + 0.3 * 0.6 * v11;
        let got = sample_elevation(&g, x, y).unwrap();
        assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
    }

    #[test]
    fn nodata_neighbors_are_renormalized() {
        let g = grid_from(2, 2, "-9999 5\n5 5\n");
        // Query near the nodata corner still averages the valid neighbors.
        let v = sample_elevation(&g, 1.0, 1.0).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn all_nodata_neighborhood_errors() {
        let g = grid_from(2, 2, "-9999 -9999\n-9999 -9999\n");
        assert!(matches!(
            sample_elevation(&g, 1.0, 1.0),
            Err(GeoError::AllNodata { .. })
        ));
    }

    #[test]
    fn out_of_range_errors() {
        let g = grid_from(2, 2, "1 1\n1 1\n");
        assert!(matches!(
            sample_elevation(&g, -0.1, 1.0),
            Err(GeoError::OutOfRange { .. })
        ));
    }

    #[test]
    fn continuous_across_cell_boundaries() {
        let g = grid_from(3, 3, "0 1 2\n3 4 5\n6 7 8\n");
        // Sample a shared cell-boundary line from both sides.
        for i in 0..20 {
            let y = 0.6 + 0.1 * i as f64;
            if y > 2.4 {
                break;
            }
            let a = sample_elevation(&g, 1.5 - 1e-12, y).unwrap();
            let b = sample_elevation(&g, 1.5 + 1e-12, y).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }
}

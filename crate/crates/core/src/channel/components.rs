//! The four channel matrices and their JSON file format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Relative asymmetry tolerated in `Z_ll`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// `H_u` (K×M), `H_0` (N×M), `G_l` (K×N) and `Z_ll` (N×N, ohms).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelComponents {
    pub h_u: CMatrix,
    pub h_0: CMatrix,
    pub g_l: CMatrix,
    pub z_ll: CMatrix,
    pub frequency: f64,
}

impl ChannelComponents {
    pub fn new(h_u: CMatrix, h_0: CMatrix, g_l: CMatrix, z_ll: CMatrix, frequency: f64) -> Result<Self> {
        let c = ChannelComponents {
            h_u,
            h_0,
            g_l,
            z_ll,
            frequency,
        };
        c.validate()?;
        Ok(c)
    }

    /// `(K, M, N)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h_u.nrows(), self.h_u.ncols(), self.z_ll.nrows())
    }

    pub fn n_users(&self) -> usize {
        self.h_u.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.h_u.ncols()
    }

    pub fn n_elements(&self) -> usize {
        self.z_ll.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (k, m, n) = self.dims();
        if k == 0 || m == 0 {
            return Err(Error::InvalidInput(format!("need K ≥ 1 and M ≥ 1, got K={k}, M={m}")));
        }
        if !(self.frequency > 0.0) || !self.frequency.is_finite() {
            return Err(Error::InvalidInput(format!(
                "frequency must be positive, got {}",
                self.frequency
            )));
        }
        let shape = |name: &str, mat: &CMatrix, r: usize, c: usize| {
            if mat.shape() != (r, c) {
                Err(Error::dim(
                    name,
                    format!("{r}x{c}"),
                    format!("{}x{}", mat.nrows(), mat.ncols()),
                ))
            } else {
                Ok(())
            }
        };
        shape("z_ll", &self.z_ll, n, n)?;
        shape("h_0", &self.h_0, n, m)?;
        shape("g_l", &self.g_l, k, n)?;
        for (name, mat) in [
            ("h_u", &self.h_u),
            ("h_0", &self.h_0),
            ("g_l", &self.g_l),
            ("z_ll", &self.z_ll),
        ] {
            if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::parse(name, "non-finite entry"));
            }
        }
        let asym = relative_asymmetry(&self.z_ll);
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::Symmetry {
                field: "z_ll".into(),
                asymmetry: asym,
            });
        }
        if let Some(i) = (0..n).find(|&i| !(self.z_ll[(i, i)].re > 0.0)) {
            return Err(Error::parse(
                "z_ll",
                format!("diagonal entry {i} has non-positive real part"),
            ));
        }
        Ok(())
    }

    /// Same components with `H_u` and `G_l` replaced (e.g. for a grid of virtual users).
    pub fn with_user_links(&self, h_u: CMatrix, g_l: CMatrix) -> Result<Self> {
        ChannelComponents::new(h_u, self.h_0.clone(), g_l, self.z_ll.clone(), self.frequency)
    }

    /// Serializes to the channel-file JSON text.
    pub fn to_json(&self) -> String {
        let (k, m, n) = self.dims();
        let mut s = String::new();
        let _ = writeln!(s, "{{");
        let _ = writeln!(s, "  \"k\": {k},");
        let _ = writeln!(s, "  \"m\": {m},");
        let _ = writeln!(s, "  \"n\": {n},");
        let _ = writeln!(s, "  \"frequency_hz\": {},", fmt_f64(self.frequency));
        let mats = [
            ("h_u", &self.h_u),
            ("h_0", &self.h_0),
            ("g_l", &self.g_l),
            ("z_ll", &self.z_ll),
        ];
        for (idx, (name, mat)) in mats.iter().enumerate() {
            let _ = writeln!(s, "  \"{name}\": [");
            for r in 0..mat.nrows() {
                let row: Vec<String> = (0..mat.ncols())
                    .map(|c| {
                        let z = mat[(r, c)];
                        format!("[{}, {}]", fmt_f64(z.re), fmt_f64(z.im))
                    })
                    .collect();
                let sep = if r + 1 < mat.nrows() { "," } else { "" };
                let _ = writeln!(s, "    [{}]{sep}", row.join(", "));
            }
            let sep = if idx + 1 < mats.len() { "," } else { "" };
            let _ = writeln!(s, "  ]{sep}");
        }
        s.push_str("}\n");
        s
    }

    /// Parses and validates channel-file JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::parse("<document>", e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::parse("<document>", "expected a JSON object"))?;
        let dim = |key: &str| -> Result<usize> {
            obj.get(key)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| Error::parse(key, "missing or not a nonnegative integer"))
        };
        let (k, m, n) = (dim("k")?, dim("m")?, dim("n")?);
        let frequency = obj
            .get("frequency_hz")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::parse("frequency_hz", "missing or not a number"))?;
        let h_u = parse_matrix(obj.get("h_u"), "h_u", k, m)?;
        let h_0 = parse_matrix(obj.get("h_0"), "h_0", n, m)?;
        let g_l = parse_matrix(obj.get("g_l"), "g_l", k, n)?;
        let z_ll = parse_matrix(obj.get("z_ll"), "z_ll", n, n)?;
        ChannelComponents::new(h_u, h_0, g_l, z_ll, frequency)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Shortest decimal text that parses back to the identical `f64`.
fn fmt_f64(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float")
}

/// `‖A − Aᵀ‖_F / ‖A‖_F` (zero for the zero matrix).
pub fn relative_asymmetry(a: &CMatrix) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).norm() / norm
}

fn parse_matrix(v: Option<&Value>, field: &str, rows: usize, cols: usize) -> Result<CMatrix> {
    let v = v.ok_or_else(|| Error::parse(field, "missing"))?;
    let outer = v
        .as_array()
        .ok_or_else(|| Error::parse(field, "expected an array of rows"))?;
    if outer.len() != rows {
        return Err(Error::dim(
            field,
            format!("{rows} rows"),
            format!("{} rows", outer.len()),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (r, row) in outer.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(format!("{field}[{r}]"), "expected an array"))?;
        if row.len() != cols {
            return Err(Error::dim(
                format!("{field}[{r}]"),
                format!("{cols} columns"),
                format!("{} columns", row.len()),
            ));
        }
        for (c, z) in row.iter().enumerate() {
            let pair = z
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::parse(format!("{field}[{r}][{c}]"), "expected [re, im]"))?;
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => data.push(Complex64::new(re, im)),
                _ => return Err(Error::parse(format!("{field}[{r}][{c}]"), "non-numeric component")),
            }
        }
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ChannelComponents {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let h_u = DMatrix::from_row_slice(2, 1, &[c(0.1, -0.2), c(1e-7, 3.3)]);
        let h_0 = DMatrix::from_row_slice(2, 1, &[c(0.5, 0.5), c(-0.25, 0.125)]);
        let g_l = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.3, 0.1)]);
        let z_ll = DMatrix::from_row_slice(2, 2, &[c(73.1, 42.5), c(-12.5, -29.9), c(-12.5, -29.9), c(73.1, 42.5)]);
        ChannelComponents::new(h_u, h_0, g_l, z_ll, 5.8e9).unwrap()
    }

    #[test]
    fn json_roundtrip_exact() {
        let c = small();
        let back = ChannelComponents::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn row_count_mismatch_names_field() {
        let c = small();
        let mut v: Value = serde_json::from_str(&c.to_json()).unwrap();
        v["k"] = Value::from(3);
        let err = ChannelComponents::from_json(&v.to_string()).unwrap_err();
        match err {
            Error::Dimension { field, .. } => assert_eq!(field, "h_u"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn asymmetric_impedance_rejected() {
        let c = small();
        let mut v: Value = serde_json::from_str(&c.to_json()).unwrap();
        v["z_ll"][0][1][0] = Value::from(-12.5 * (1.0 + 1e-3));
        let err = ChannelComponents::from_json(&v.to_string()).unwrap_err();
        assert!(
            matches!(err, Error::Symmetry { ref field, .. } if field == "z_ll"),
            "{err}"
        );
    }

    #[test]
    fn malformed_entry_rejected() {
        let c = small();
        let mut v: Value = serde_json::from_str(&c.to_json()).unwrap();
        v["g_l"][1][0] = Value::from("oops");
        let err = ChannelComponents::from_json(&v.to_string()).unwrap_err();
        assert!(
            matches!(err, Error::Parse { ref field, .. } if field == "g_l[1][0]"),
            "{err}"
        );
        assert!(ChannelComponents::from_json("not json").is_err());
    }

    #[test]
    fn nonpositive_diagonal_rejected() {
        let mut c = small();
        c.z_ll[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(c.validate().is_err());
    }
}

//! Varactor-loaded RIS ports: capacitance–bias law, load impedances and
//! the grouping used by per-column and column-paired 1-bit control.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One picofarad, in farads.
pub const PF: f64 = 1e-12;
const NH: f64 = 1e-9;

/// Capacitance of the 1-bit "ON" state, farads.
pub const C_ON: f64 = 0.54 * PF;
/// Capacitance of the 1-bit "OFF" state, farads.
pub const C_OFF: f64 = 0.38 * PF;
/// Bias (volts, magnitude) producing [`C_ON`].
pub const V_ON: f64 = 5.02;
/// Bias (volts, magnitude) producing [`C_OFF`].
pub const V_OFF: f64 = 3.05;

/// Largest group count accepted by [`enumerate_1bit_configs`].
pub const MAX_ENUMERATED_GROUPS: usize = 24;

/// Junction-capacitance law `C(V) = C_J / (1 − V/V_J)^m + C_par` plus the
/// series parasitics of the packaged diode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaractorModel {
    #[serde(rename = "c_j_pf", with = "pico")]
    pub c_j: f64,
    #[serde(rename = "v_j_v")]
    pub v_j: f64,
    pub m: f64,
    #[serde(rename = "c_par_pf", with = "pico")]
    pub c_par: f64,
    #[serde(rename = "r_v_ohm")]
    pub r_v: f64,
    #[serde(rename = "l_v_nh", with = "nano")]
    pub l_v: f64,
    #[serde(rename = "c_min_pf", with = "pico")]
    pub c_min: f64,
    #[serde(rename = "c_max_pf", with = "pico")]
    pub c_max: f64,
}

macro_rules! scaled_serde {
    ($name:ident, $scale:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};
            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(*v / $scale)
            }
            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(f64::deserialize(d)? * $scale)
            }
        }
    };
}
scaled_serde!(pico, 1e-12);
scaled_serde!(nano, 1e-9);

impl Default for VaractorModel {
    /// Square-root junction law calibrated to the two 1-bit anchors, with
    /// 2 Ω / 0.2 nH parasitics and a 0.2–1.2 pF tuning range.
    fn default() -> Self {
        VaractorModel::calibrate(
            (V_ON, C_ON),
            (V_OFF, C_OFF),
            0.5,
            0.0,
            2.0,
            0.2 * NH,
            (0.2 * PF, 1.2 * PF),
        )
        .expect("built-in anchors are consistent")
    }
}

impl VaractorModel {
    /// Fits `C_J` and `V_J` so that the law passes through both `(bias, capacitance)`
    /// anchors for a fixed exponent `m` and parasitic `c_par`.
    pub fn calibrate(
        a: (f64, f64),
        b: (f64, f64),
        m: f64,
        c_par: f64,
        r_v: f64,
        l_v: f64,
        range: (f64, f64),
    ) -> Result<Self> {
        let ((v1, c1), (v2, c2)) = (a, b);
        if !(c1 > c_par && c2 > c_par) || !(m > 0.0) || v1 == v2 || c1 == c2 {
            return Err(Error::Domain("anchors cannot be fitted by the junction law".into()));
        }
        // ((c1 - cp)/(c2 - cp))^{1/m} = (1 - v2/V)/(1 - v1/V)
        let r = ((c1 - c_par) / (c2 - c_par)).powf(1.0 / m);
        let v_j = (r * v1 - v2) / (r - 1.0);
        if !(v_j > v1.max(v2)) {
            return Err(Error::Domain(format!(
                "fitted V_J = {v_j} V does not exceed both anchor biases"
            )));
        }
        let c_j = (c2 - c_par) * (1.0 - v2 / v_j).powf(m);
        let model = VaractorModel {
            c_j,
            v_j,
            m,
            c_par,
            r_v,
            l_v,
            c_min: range.0,
            c_max: range.1,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c_j > 0.0
            && self.v_j > 0.0
            && self.m > 0.0
            && self.c_par >= 0.0
            && self.r_v >= 0.0
            && self.l_v >= 0.0
            && self.c_min > 0.0
            && self.c_min < self.c_max
            && [self.c_j, self.v_j, self.m, self.c_par, self.r_v, self.l_v, self.c_max]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid varactor model: {self:?}")))
        }
    }

    /// Capacitance (F) at reverse-bias magnitude `v_bias` (V).
    pub fn capacitance_from_bias(&self, v_bias: f64) -> Result<f64> {
        let base = 1.0 - v_bias / self.v_j;
        if !(v_bias >= 0.0) || !(base > 0.0) {
            return Err(Error::Domain(format!("bias {v_bias} V outside [0, {}) V", self.v_j)));
        }
        Ok(self.c_j / base.powf(self.m) + self.c_par)
    }

    /// Closed-form inverse of [`Self::capacitance_from_bias`].
    pub fn bias_from_capacitance(&self, c: f64) -> Result<f64> {
        if !(c > self.c_par) {
            return Err(Error::Domain(format!("capacitance {c} F not above C_par")));
        }
        let v = self.v_j * (1.0 - (self.c_j / (c - self.c_par)).powf(1.0 / self.m));
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("capacitance {c} F is below the zero-bias value")));
        }
        Ok(v)
    }

    /// Series R–L–C impedance of one load at `frequency`.
    pub fn load_impedance(&self, c: f64, frequency: f64) -> Result<Complex64> {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("load capacitance must be positive, got {c}")));
        }
        let w = 2.0 * PI * frequency;
        Ok(Complex64::new(self.r_v, w * self.l_v - 1.0 / (w * c)))
    }

    /// `dZ_L/dC = −1/(jωC²) = j/(ωC²)`.
    pub fn load_impedance_derivative(&self, c: f64, frequency: f64) -> Complex64 {
        let w = 2.0 * PI * frequency;
        Complex64::new(0.0, 1.0 / (w * c * c))
    }

    pub fn in_range(&self, c: f64) -> bool {
        c >= self.c_min && c <= self.c_max
    }

    pub fn project(&self, c: f64) -> f64 {
        c.clamp(self.c_min, self.c_max)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: VaractorModel = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }
}

/// How the capacitance vector is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMode {
    ContinuousPerElement,
    ContinuousPerColumn,
    #[serde(rename = "column-paired-1bit")]
    ColumnPaired1Bit,
}

/// Partition of the element indices into jointly controlled groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    n_elements: usize,
}

impl Grouping {
    pub fn new(groups: Vec<Vec<usize>>, n_elements: usize) -> Result<Self> {
        let mut seen = vec![false; n_elements];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidInput(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= n_elements || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidInput(format!(
                        "grouping is not a partition of 0..{n_elements} (element {i} in group {g})"
                    )));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("element {i} belongs to no group")));
        }
        Ok(Grouping { groups, n_elements })
    }

    /// One group per element.
    pub fn singletons(n: usize) -> Self {
        Grouping {
            groups: (0..n).map(|i| vec![i]).collect(),
            n_elements: n,
        }
    }

    /// Whole columns of a `columns × rows` panel, element index `col * rows + row`.
    pub fn columns(columns: usize, rows: usize) -> Self {
        Grouping {
            groups: (0..columns).map(|c| (c * rows..(c + 1) * rows).collect()).collect(),
            n_elements: columns * rows,
        }
    }

    /// Adjacent column pairs; a trailing odd column forms its own group.
    pub fn column_pairs(columns: usize, rows: usize) -> Self {
        let groups = (0..columns.div_ceil(2))
            .map(|p| {
                let end = ((2 * p + 2).min(columns)) * rows;
                (2 * p * rows..end).collect()
            })
            .collect();
        Grouping {
            groups,
            n_elements: columns * rows,
        }
    }

    /// Everything in one group.
    pub fn single(n: usize) -> Self {
        Grouping {
            groups: if n == 0 { vec![] } else { vec![(0..n).collect()] },
            n_elements: n,
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.groups.iter().map(Vec::as_slice)
    }
}

/// Per-element capacitances together with how they are controlled.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfiguration {
    pub capacitances: Vec<f64>,
    pub control_mode: ControlMode,
    pub grouping: Grouping,
    pub c_on: f64,
    pub c_off: f64,
}

impl RisConfiguration {
    /// Builds a configuration from per-group values.
    pub fn from_groups(mode: ControlMode, grouping: Grouping, group_values: &[f64]) -> Result<Self> {
        let capacitances = expand_group_values(&grouping, group_values)?;
        Ok(RisConfiguration {
            capacitances,
            control_mode: mode,
            grouping,
            c_on: C_ON,
            c_off: C_OFF,
        })
    }

    /// A 1-bit configuration; `true` selects `C_ON`.
    pub fn from_states(grouping: Grouping, states: &[bool]) -> Result<Self> {
        let values: Vec<f64> = states.iter().map(|&on| if on { C_ON } else { C_OFF }).collect();
        Self::from_groups(ControlMode::ColumnPaired1Bit, grouping, &values)
    }

    pub fn n_elements(&self) -> usize {
        self.capacitances.len()
    }

    /// Value of each group, read from its first member.
    pub fn group_values(&self) -> Vec<f64> {
        self.grouping.iter().map(|m| self.capacitances[m[0]]).collect()
    }

    /// 1-bit states per group (`true` = ON); `None` outside 1-bit mode.
    pub fn states(&self) -> Option<Vec<bool>> {
        (self.control_mode == ControlMode::ColumnPaired1Bit)
            .then(|| self.group_values().iter().map(|&c| c == self.c_on).collect())
    }

    pub fn validate(&self, model: &VaractorModel) -> Result<()> {
        if self.capacitances.len() != self.grouping.n_elements() {
            return Err(Error::dim(
                "capacitances",
                self.grouping.n_elements(),
                self.capacitances.len(),
            ));
        }
        for (i, &c) in self.capacitances.iter().enumerate() {
            if !model.in_range(c) {
                return Err(Error::Domain(format!(
                    "element {i} capacitance {:.4} pF outside [{:.4}, {:.4}] pF",
                    c / PF,
                    model.c_min / PF,
                    model.c_max / PF
                )));
            }
        }
        for (g, members) in self.grouping.iter().enumerate() {
            let v = self.capacitances[members[0]];
            if members.iter().any(|&i| self.capacitances[i] != v)
                && self.control_mode != ControlMode::ContinuousPerElement
            {
                return Err(Error::InvalidInput(format!("group {g} members disagree")));
            }
            if self.control_mode == ControlMode::ColumnPaired1Bit && v != self.c_on && v != self.c_off {
                return Err(Error::InvalidInput(format!("group {g} is neither C_ON nor C_OFF")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, n_elements: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: RisConfigFile = serde_json::from_str(&text)?;
        file.into_config(n_elements)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path.as_ref(), &RisConfigFile::from(self))
    }
}

/// Broadcasts one value per group to the member elements.
pub fn expand_group_values(grouping: &Grouping, group_values: &[f64]) -> Result<Vec<f64>> {
    if group_values.len() != grouping.len() {
        return Err(Error::dim("group_values", grouping.len(), group_values.len()));
    }
    let mut out = vec![f64::NAN; grouping.n_elements()];
    for (members, &v) in grouping.iter().zip(group_values) {
        for &i in members {
            out[i] = v;
        }
    }
    Ok(out)
}

/// Same as [`expand_group_values`], reading the grouping from `config`.
pub fn expand_group_config(config: &RisConfiguration, group_values: &[f64]) -> Result<Vec<f64>> {
    expand_group_values(&config.grouping, group_values)
}

/// Load impedances of every element.
pub fn load_impedances(model: &VaractorModel, config: &RisConfiguration, frequency: f64) -> Result<Vec<Complex64>> {
    config
        .capacitances
        .iter()
        .map(|&c| model.load_impedance(c, frequency))
        .collect()
}

/// Lexicographic enumeration of all 2^n binary group states (`false` < `true`).
#[derive(Debug, Clone)]
pub struct BinaryConfigs {
    n: usize,
    next: u64,
    end: u64,
}

impl Iterator for BinaryConfigs {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Vec<bool>> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(index_to_states(i, self.n))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for BinaryConfigs {}

/// State vector of the `index`-th configuration; the first group is the most significant bit.
pub fn index_to_states(index: u64, n_groups: usize) -> Vec<bool> {
    (0..n_groups).map(|j| (index >> (n_groups - 1 - j)) & 1 == 1).collect()
}

pub fn enumerate_1bit_configs(n_groups: usize) -> Result<BinaryConfigs> {
    if n_groups > MAX_ENUMERATED_GROUPS {
        return Err(Error::TooManyGroups(n_groups));
    }
    Ok(BinaryConfigs {
        n: n_groups,
        next: 0,
        end: 1u64 << n_groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BitState {
    On,
    Off,
}

/// On-disk RIS configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RisConfigFile {
    mode: ControlMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacitances_pf: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    groups: Option<BTreeMap<usize, Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group_values_pf: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<BitState>>,
    #[serde(default = "default_c_on_pf")]
    c_on_pf: f64,
    #[serde(default = "default_c_off_pf")]
    c_off_pf: f64,
}

fn default_c_on_pf() -> f64 {
    C_ON / PF
}

fn default_c_off_pf() -> f64 {
    C_OFF / PF
}

impl From<&RisConfiguration> for RisConfigFile {
    fn from(c: &RisConfiguration) -> Self {
        let groups = c.grouping.iter().enumerate().map(|(g, m)| (g, m.to_vec())).collect();
        RisConfigFile {
            mode: c.control_mode,
            capacitances_pf: Some(c.capacitances.iter().map(|v| v / PF).collect()),
            groups: Some(groups),
            group_values_pf: None,
            states: c.states().map(|s| {
                s.into_iter()
                    .map(|on| if on { BitState::On } else { BitState::Off })
                    .collect()
            }),
            c_on_pf: c.c_on / PF,
            c_off_pf: c.c_off / PF,
        }
    }
}

impl RisConfigFile {
    fn into_config(self, n_elements: usize) -> Result<RisConfiguration> {
        let grouping = match self.groups {
            Some(map) => {
                let expected: Vec<usize> = (0..map.len()).collect();
                if map.keys().copied().collect::<Vec<_>>() != expected {
                    return Err(Error::parse("groups", "group indices must be 0..G without gaps"));
                }
                Grouping::new(map.into_values().collect(), n_elements)?
            }
            None => Grouping::singletons(n_elements),
        };
        let c_on = self.c_on_pf * PF;
        let c_off = self.c_off_pf * PF;
        let capacitances = if let Some(caps) = self.capacitances_pf {
            if caps.len() != n_elements {
                return Err(Error::dim("capacitances_pf", n_elements, caps.len()));
            }
            caps.into_iter().map(|c| c * PF).collect()
        } else if let Some(states) = self.states {
            let values: Vec<f64> = states
                .into_iter()
                .map(|s| if s == BitState::On { c_on } else { c_off })
                .collect();
            expand_group_values(&grouping, &values).map_err(|_| Error::dim("states", grouping.len(), values.len()))?
        } else if let Some(values) = self.group_values_pf {
            let values: Vec<f64> = values.into_iter().map(|c| c * PF).collect();
            expand_group_values(&grouping, &values)
                .map_err(|_| Error::dim("group_values_pf", grouping.len(), values.len()))?
        } else {
            return Err(Error::parse(
                "capacitances_pf",
                "one of capacitances_pf, states or group_values_pf is required",
            ));
        };
        Ok(RisConfiguration {
            capacitances,
            control_mode: self.mode,
            grouping,
            c_on,
            c_off,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;

    #[test]
    fn zero_bias_gives_cj_plus_cpar() {
        let m = VaractorModel {
            c_par: 0.07 * PF,
            ..VaractorModel::default()
        };
        assert_eq!(m.capacitance_from_bias(0.0).unwrap(), m.c_j + m.c_par);
    }

    #[test]
    fn default_calibration_reproduces_anchors() {
        let m = VaractorModel::default();
        let on = m.capacitance_from_bias(V_ON).unwrap();
        let off = m.capacitance_from_bias(V_OFF).unwrap();
        assert!((on / C_ON - 1.0).abs() < 0.01, "{on}");
        assert!((off / C_OFF - 1.0).abs() < 0.01, "{off}");
        // in fact exact up to rounding
        assert!((on / C_ON - 1.0).abs() < 1e-12);
        assert!(m.c_min < C_OFF && C_ON < m.c_max);
    }

    #[test]
    fn calibration_with_parasitic() {
        let m = VaractorModel::calibrate(
            (V_ON, C_ON),
            (V_OFF, C_OFF),
            0.5,
            0.05 * PF,
            2.0,
            0.2 * NH,
            (0.2 * PF, 1.2 * PF),
        )
        .unwrap();
        assert!((m.capacitance_from_bias(V_ON).unwrap() / C_ON - 1.0).abs() < 1e-12);
        assert!((m.capacitance_from_bias(V_OFF).unwrap() / C_OFF - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bias_domain_errors() {
        let m = VaractorModel::default();
        assert!(m.capacitance_from_bias(m.v_j).is_err());
        assert!(m.capacitance_from_bias(m.v_j + 1.0).is_err());
        assert!(m.capacitance_from_bias(-0.1).is_err());
    }

    #[test]
    fn monotone_in_bias() {
        let m = VaractorModel::default();
        let mut prev = m.capacitance_from_bias(0.0).unwrap();
        for i in 1..100 {
            let v = i as f64 * m.v_j / 100.0 * 0.999;
            let c = m.capacitance_from_bias(v).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn load_impedance_values() {
        // ωL = 2π·5.8e9·0.2e-9 = 7.2885 Ω, 1/(ωC) at 0.54 pF = 50.816 Ω.
        let m = VaractorModel::default();
        let f = 5.8e9;
        let w = 2.0 * PI * f;
        let wl = w * 0.2e-9;
        assert!((wl - 7.2885).abs() < 1e-4);
        let z_on = m.load_impedance(C_ON, f).unwrap();
        assert!((1.0 / (w * C_ON) - 50.816).abs() < 1e-3);
        assert!((z_on - Complex64::new(2.0, -43.53)).norm() < 0.01, "{z_on}");
        let z_off = m.load_impedance(C_OFF, f).unwrap();
        assert!((z_off - Complex64::new(2.0, -64.92)).norm() < 0.01, "{z_off}");
        let bare = VaractorModel {
            r_v: 0.0,
            l_v: 0.0,
            ..m
        };
        let z = bare.load_impedance(C_ON, f).unwrap();
        assert_eq!(z.re, 0.0);
        assert!((z.im + 1.0 / (w * C_ON)).abs() < 1e-12);
        assert!(m.load_impedance(0.0, f).is_err());
    }

    #[test]
    fn group_expansion() {
        let pairs = Grouping::column_pairs(20, 1);
        assert_eq!(pairs.len(), 10);
        let all_on = expand_group_values(&pairs, &[C_ON; 10]).unwrap();
        assert!(all_on.iter().all(|&c| c == C_ON));
        let alt: Vec<f64> = (0..10).map(|g| if g % 2 == 0 { C_ON } else { C_OFF }).collect();
        let caps = expand_group_values(&pairs, &alt).unwrap();
        assert_eq!(&caps[0..4], &[C_ON, C_ON, C_OFF, C_OFF]);
        let single = Grouping::single(7);
        assert_eq!(expand_group_values(&single, &[0.5 * PF]).unwrap(), vec![0.5 * PF; 7]);
        assert!(expand_group_values(&pairs, &[C_ON; 9]).is_err());
        // 20 columns × 11 rows, pairs of columns
        let g = Grouping::column_pairs(20, 11);
        assert_eq!(g.len(), 10);
        assert_eq!(g.members(1).len(), 22);
        assert_eq!(g.members(1)[0], 22);
    }

    #[test]
    fn grouping_must_partition() {
        assert!(Grouping::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(Grouping::new(vec![vec![0, 1]], 3).is_err());
        assert!(Grouping::new(vec![vec![0, 3]], 3).is_err());
        assert!(Grouping::new(vec![vec![2, 0], vec![1]], 3).is_ok());
    }

    #[test]
    fn binary_enumeration_counts() {
        assert_eq!(enumerate_1bit_configs(10).unwrap().count(), 1024);
        let one: Vec<_> = enumerate_1bit_configs(1).unwrap().collect();
        assert_eq!(one, vec![vec![false], vec![true]]);
        let zero: Vec<_> = enumerate_1bit_configs(0).unwrap().collect();
        assert_eq!(zero, vec![Vec::<bool>::new()]);
        assert!(matches!(enumerate_1bit_configs(25), Err(Error::TooManyGroups(25))));
    }

    #[test]
    fn binary_enumeration_unique_and_ordered() {
        for n in [3usize, 8, 16] {
            let all: Vec<Vec<bool>> = enumerate_1bit_configs(n).unwrap().collect();
            assert_eq!(all.len(), 1 << n);
            let set: HashSet<_> = all.iter().cloned().collect();
            assert_eq!(set.len(), all.len());
            assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn config_file_roundtrip_and_forms() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grouping::column_pairs(20, 1);
        let states: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
        let cfg = RisConfiguration::from_states(g, &states).unwrap();
        let path = dir.path().join("ris.json");
        cfg.save(&path).unwrap();
        let back = RisConfiguration::load(&path, 20).unwrap();
        assert_eq!(back.states().unwrap(), states);
        assert_eq!(back, cfg);

        let p2 = dir.path().join("ris2.json");
        std::fs::write(
            &p2,
            r#"{"mode": "column-paired-1bit", "groups": {"0": [0, 1], "1": [2, 3]},
                "states": ["on", "off"], "c_on_pf": 0.54, "c_off_pf": 0.38}"#,
        )
        .unwrap();
        let c = RisConfiguration::load(&p2, 4).unwrap();
        c.validate(&VaractorModel::default()).unwrap();
        assert_eq!(c.states().unwrap(), vec![true, false]);

        std::fs::write(
            &p2,
            r#"{"mode": "continuous-per-element", "capacitances_pf": [0.5, 0.6]}"#,
        )
        .unwrap();
        assert!(matches!(RisConfiguration::load(&p2, 3), Err(Error::Dimension { .. })));
    }

    #[test]
    fn validate_catches_out_of_range_and_mixed_groups() {
        let m = VaractorModel::default();
        let cfg = RisConfiguration::from_groups(
            ControlMode::ContinuousPerElement,
            Grouping::singletons(2),
            &[0.1 * PF, 0.5 * PF],
        )
        .unwrap();
        assert!(cfg.validate(&m).is_err());
        let mut cfg = RisConfiguration::from_states(Grouping::column_pairs(4, 1), &[true, false]).unwrap();
        cfg.validate(&m).unwrap();
        cfg.capacitances[1] = 0.5 * PF;
        assert!(cfg.validate(&m).is_err());
    }

    proptest! {
        #[test]
        fn bias_roundtrip(c_pf in 0.30f64..1.2) {
            let m = VaractorModel::default();
            let c = c_pf * PF;
            let v = m.bias_from_capacitance(c).unwrap();
            let back = m.capacitance_from_bias(v).unwrap();
            prop_assert!((back / c - 1.0).abs() < 1e-12);
        }

        #[test]
        fn reactance_increases_with_capacitance(a in 0.05f64..5.0, b in 0.05f64..5.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let m = VaractorModel::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let zl = m.load_impedance(lo * PF, 5.8e9).unwrap();
            let zh = m.load_impedance(hi * PF, 5.8e9).unwrap();
            prop_assert!(zh.im > zl.im);
        }

        #[test]
        fn expand_then_read_back(values in proptest::collection::vec(0.2f64..1.2, 1..12), rows in 1usize..4) {
            let g = Grouping::column_pairs(values.len() * 2, rows);
            let values: Vec<f64> = values.iter().map(|v| v * PF).collect();
            let cfg = RisConfiguration::from_groups(ControlMode::ContinuousPerColumn, g, &values).unwrap();
            prop_assert_eq!(cfg.group_values(), values);
        }
    }
}

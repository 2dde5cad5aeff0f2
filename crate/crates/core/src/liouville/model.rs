use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, ONE};
use crate::spin::{build_h_driven, HermitianMatrix, Polarization};
use crate::units::PhysicalParams;

use super::LiouvilleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Vacuum,
    DePlus2,
    DeMinus2,
    XxPlus3,
    XxMinus3,
    Charge,
    XxPlus3Star,
    XxMinus3Star,
}

impl Level {
    pub fn label(self) -> &'static str {
        match self {
            Level::Vacuum => "vacuum",
            Level::DePlus2 => "de_p2",
            Level::DeMinus2 => "de_m2",
            Level::XxPlus3 => "xx_p3",
            Level::XxMinus3 => "xx_m3",
            Level::Charge => "charge",
            Level::XxPlus3Star => "xx_p3_star",
            Level::XxMinus3Star => "xx_m3_star",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Excitation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// CW laser resonant with the DE → XX⁰_T3 transition.
    #[default]
    Resonant,
    /// Laser tuned to an excited biexciton XX±3*, which relaxes to XX±3.
    QuasiResonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    EmitR,
    EmitL,
    DeDecayP2,
    DeDecayM2,
    PumpP2,
    PumpM2,
    ChargeInP2,
    ChargeInM2,
    ChargeOut,
    RelaxP3,
    RelaxM3,
}

impl ChannelKind {
    pub fn label(self) -> &'static str {
        match self {
            ChannelKind::EmitR => "emit_R",
            ChannelKind::EmitL => "emit_L",
            ChannelKind::DeDecayP2 => "de_decay_p2",
            ChannelKind::DeDecayM2 => "de_decay_m2",
            ChannelKind::PumpP2 => "pump_p2",
            ChannelKind::PumpM2 => "pump_m2",
            ChannelKind::ChargeInP2 => "charge_in_p2",
            ChannelKind::ChargeInM2 => "charge_in_m2",
            ChannelKind::ChargeOut => "charge_out",
            ChannelKind::RelaxP3 => "relax_p3",
            ChannelKind::RelaxM3 => "relax_m3",
        }
    }

    /// Polarization of the photon emitted by this jump, if any.
    pub fn photon(self) -> Option<Polarization> {
        match self {
            ChannelKind::EmitR => Some(Polarization::R),
            ChannelKind::EmitL => Some(Polarization::L),
            _ => None,
        }
    }

    pub fn emission(pol: Polarization) -> Self {
        match pol {
            Polarization::R => ChannelKind::EmitR,
            Polarization::L => ChannelKind::EmitL,
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Incoherent transition `from → to` at `rate` (ns⁻¹). The operator is the
/// unit single-transition matrix |to⟩⟨from|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseChannel {
    pub kind: ChannelKind,
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

impl CollapseChannel {
    pub fn operator(&self, n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        m[(self.to, self.from)] = ONE;
        m
    }

    /// `sqrt(rate) · |to⟩⟨from|`.
    pub fn lindblad_operator(&self, n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        m[(self.to, self.from)] = ONE * self.rate.sqrt();
        m
    }
}

/// Level basis, Hamiltonian (µeV) and dissipation channels.
#[derive(Debug, Clone)]
pub struct LevelModel {
    pub variant: Variant,
    pub levels: Vec<Level>,
    pub h: HermitianMatrix,
    pub channels: Vec<CollapseChannel>,
}

impl LevelModel {
    pub fn new(
        variant: Variant,
        levels: Vec<Level>,
        h: HermitianMatrix,
        channels: Vec<CollapseChannel>,
    ) -> Result<Self, LiouvilleError> {
        let n = levels.len();
        for (i, a) in levels.iter().enumerate() {
            if levels[..i].contains(a) {
                return Err(LiouvilleError::InvalidModel(format!("duplicate level {a}")));
            }
        }
        if h.dim() != n {
            return Err(LiouvilleError::InvalidModel(format!(
                "Hamiltonian is {}×{} but there are {n} levels",
                h.dim(),
                h.dim()
            )));
        }
        for c in &channels {
            if c.from >= n || c.to >= n {
                return Err(LiouvilleError::InvalidModel(format!("{} out of range", c.kind)));
            }
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(LiouvilleError::InvalidModel(format!("{} has rate {}", c.kind, c.rate)));
            }
        }
        Ok(Self { variant, levels, h, channels })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn index_of(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|l| *l == level)
    }

    pub fn channel(&self, kind: ChannelKind) -> Option<&CollapseChannel> {
        self.channels.iter().find(|c| c.kind == kind)
    }

    /// Radiative biexciton channel producing a photon of polarization `pol`.
    pub fn emission(&self, pol: Polarization) -> &CollapseChannel {
        self.channel(ChannelKind::emission(pol)).expect("every model has both emission channels")
    }

    pub fn active_channels(&self) -> impl Iterator<Item = &CollapseChannel> {
        self.channels.iter().filter(|c| c.rate > 0.0)
    }

    /// Exchange R ↔ L labels of the model (used for symmetry checks).
    pub fn level_partner(&self, i: usize) -> usize {
        let partner = match self.levels[i] {
            Level::DePlus2 => Level::DeMinus2,
            Level::DeMinus2 => Level::DePlus2,
            Level::XxPlus3 => Level::XxMinus3,
            Level::XxMinus3 => Level::XxPlus3,
            Level::XxPlus3Star => Level::XxMinus3Star,
            Level::XxMinus3Star => Level::XxPlus3Star,
            other => other,
        };
        self.index_of(partner).expect("partner level present")
    }
}

/// Assemble the level model for an excitation variant.
pub fn build_level_model(p: &PhysicalParams, variant: Variant) -> LevelModel {
    use Level::*;
    let mut levels = vec![Vacuum, DePlus2, DeMinus2, XxPlus3, XxMinus3, Charge];
    if variant == Variant::QuasiResonant {
        levels.extend([XxPlus3Star, XxMinus3Star]);
    }
    let n = levels.len();
    let idx = |l: Level| levels.iter().position(|x| *x == l).unwrap();
    let (v, p2, m2, p3, m3, c) = (idx(Vacuum), idx(DePlus2), idx(DeMinus2), idx(XxPlus3), idx(XxMinus3), idx(Charge));

    let h4 = build_h_driven(p);
    let spin = [p2, m2, p3, m3];
    let mut h = CMat::zeros(n, n);
    match variant {
        Variant::Resonant => {
            for (a, &i) in spin.iter().enumerate() {
                for (b, &j) in spin.iter().enumerate() {
                    h[(i, j)] = h4.get(a, b);
                }
            }
        }
        Variant::QuasiResonant => {
            // DE block and XX±3 block as in the driven Hamiltonian, without
            // the optical coupling; the laser drives DE±2 ↔ XX±3* instead.
            let (p3s, m3s) = (idx(XxPlus3Star), idx(XxMinus3Star));
            let xx = p.omega_b() * p.g_2h;
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                h[(spin[a], spin[b])] = h4.get(a, b);
            }
            h[(p3, m3)] = h4.get(2, 3);
            h[(m3, p3)] = h4.get(3, 2);
            h[(p3, p3)] = ONE * xx;
            h[(m3, m3)] = ONE * -xx;
            h[(p3s, p3s)] = ONE * (p.detuning + xx);
            h[(m3s, m3s)] = ONE * (p.detuning - xx);
            h[(p2, p3s)] = h4.get(0, 2);
            h[(p3s, p2)] = h4.get(2, 0);
            h[(m2, m3s)] = h4.get(1, 3);
            h[(m3s, m2)] = h4.get(3, 1);
        }
    }
    let h = HermitianMatrix::new(h).expect("embedding preserves Hermiticity");

    let ch = |kind, from, to, rate| CollapseChannel { kind, from, to, rate };
    let mut channels = vec![
        ch(ChannelKind::EmitR, p3, p2, p.gamma_xx),
        ch(ChannelKind::EmitL, m3, m2, p.gamma_xx),
        ch(ChannelKind::DeDecayP2, p2, v, p.gamma_x),
        ch(ChannelKind::DeDecayM2, m2, v, p.gamma_x),
        ch(ChannelKind::PumpP2, v, p2, p.g_b / 2.0),
        ch(ChannelKind::PumpM2, v, m2, p.g_b / 2.0),
        ch(ChannelKind::ChargeInP2, p2, c, p.c_charge * p.g_b),
        ch(ChannelKind::ChargeInM2, m2, c, p.c_charge * p.g_b),
        ch(ChannelKind::ChargeOut, c, v, p.c_discharge * p.g_b),
    ];
    if variant == Variant::QuasiResonant {
        channels.push(ch(ChannelKind::RelaxP3, idx(XxPlus3Star), p3, p.gamma_relax));
        channels.push(ch(ChannelKind::RelaxM3, idx(XxMinus3Star), m3, p.gamma_relax));
    }
    LevelModel::new(variant, levels, h, channels).expect("model assembled from validated parameters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    #[test]
    fn resonant_counts() {
        let m = build_level_model(&PhysicalParams::default(), Variant::Resonant);
        assert_eq!(m.dim(), 6);
        assert_eq!(m.channels.len(), 9);
        assert_eq!(m.emission(Polarization::R).rate, 1.0 / 0.7);
        let r = m.emission(Polarization::R);
        assert_eq!((m.levels[r.from], m.levels[r.to]), (Level::XxPlus3, Level::DePlus2));
    }

    #[test]
    fn quasi_resonant_counts() {
        let m = build_level_model(&PhysicalParams::default(), Variant::QuasiResonant);
        assert_eq!(m.dim(), 8);
        assert_eq!(m.channels.len(), 11);
        let relax = m.channel(ChannelKind::RelaxP3).unwrap();
        assert!((relax.rate - 14.2857).abs() < 1e-4);
        // laser couples DE+2 to XX+3*, not to XX+3
        let p2 = m.index_of(Level::DePlus2).unwrap();
        let p3 = m.index_of(Level::XxPlus3).unwrap();
        let p3s = m.index_of(Level::XxPlus3Star).unwrap();
        assert_eq!(m.h.get(p2, p3), ZERO);
        assert!(m.h.get(p2, p3s).re > 0.0);
    }

    #[test]
    fn no_pump_no_drive_leaves_radiative_only() {
        let p = PhysicalParams { g_b: 0.0, omega_r: 0.0, omega_l: 0.0, ..Default::default() };
        let m = build_level_model(&p, Variant::Resonant);
        let active: Vec<_> = m.active_channels().map(|c| c.kind).collect();
        assert_eq!(
            active,
            vec![ChannelKind::EmitR, ChannelKind::EmitL, ChannelKind::DeDecayP2, ChannelKind::DeDecayM2]
        );
    }

    #[test]
    fn embedding_matches_driven_hamiltonian() {
        let p = PhysicalParams::default().with_field(0.05);
        let m = build_level_model(&p, Variant::Resonant);
        let h4 = build_h_driven(&p);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(m.h.get(a + 1, b + 1), h4.get(a, b));
            }
        }
        for k in 0..6 {
            assert_eq!(m.h.get(0, k), ZERO);
            assert_eq!(m.h.get(5, k), ZERO);
        }
    }

    #[test]
    fn rejects_bad_models() {
        let h = HermitianMatrix::new(CMat::zeros(2, 2)).unwrap();
        let dup = LevelModel::new(Variant::Resonant, vec![Level::Vacuum, Level::Vacuum], h.clone(), vec![]);
        assert!(dup.is_err());
        let wrong_dim = LevelModel::new(Variant::Resonant, vec![Level::Vacuum], h.clone(), vec![]);
        assert!(wrong_dim.is_err());
        let bad_rate = CollapseChannel { kind: ChannelKind::ChargeOut, from: 0, to: 1, rate: -1.0 };
        let neg = LevelModel::new(Variant::Resonant, vec![Level::Vacuum, Level::Charge], h, vec![bad_rate]);
        assert!(neg.is_err());
    }
}

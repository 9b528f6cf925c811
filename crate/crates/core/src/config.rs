//! Numerical thresholds shared by every module.

/// Every threshold used to accept, reject or classify numerical data.
///
/// The defaults are the contract values; the command-line front end can
/// override individual fields by name.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a state norm from one.
    pub norm: f64,
    /// Raw vectors with smaller norm cannot be normalized.
    pub zero_norm: f64,
    /// `|P3|` or `P2` below this counts as an orthogonal pair.
    pub orthogonal: f64,
    /// `P2` below this makes connection values singular.
    pub near_orthogonal: f64,
    /// Maximum cocycle residual accepted by tomography.
    pub cocycle: f64,
    /// Relative eigenvalue cutoff for the rank of a Gram matrix.
    pub rank: f64,
    /// Most negative relative eigenvalue tolerated in a Gram matrix.
    pub psd: f64,
    /// Projector mismatch allowed across a period.
    pub periodicity: f64,
    /// Overlap modulus below which `log <u_k|u_k+q>` is rejected.
    pub overlap_collapse: f64,
    /// Largest accepted Vandermonde condition estimate.
    pub vandermonde: f64,
    /// Requested accuracy of finite-difference derivatives.
    pub stencil: f64,
    /// Spectral deviation tolerated for flat-band Hamiltonians.
    pub flatness: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        norm: 1e-12,
        zero_norm: 1e-14,
        orthogonal: 1e-12,
        near_orthogonal: 1e-10,
        cocycle: 1e-6,
        rank: 1e-8,
        psd: 1e-6,
        periodicity: 1e-10,
        overlap_collapse: 0.1,
        vandermonde: 1e10,
        stencil: 1e-7,
        flatness: 1e-10,
    };

    /// Names accepted by [`Tolerances::set`].
    pub const NAMES: [&'static str; 12] = [
        "norm",
        "zero_norm",
        "orthogonal",
        "near_orthogonal",
        "cocycle",
        "rank",
        "psd",
        "periodicity",
        "overlap_collapse",
        "vandermonde",
        "stencil",
        "flatness",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut probe = self.clone();
        probe.slot(name).map(|v| *v)
    }

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "norm" => &mut self.norm,
            "zero_norm" => &mut self.zero_norm,
            "orthogonal" => &mut self.orthogonal,
            "near_orthogonal" => &mut self.near_orthogonal,
            "cocycle" => &mut self.cocycle,
            "rank" => &mut self.rank,
            "psd" => &mut self.psd,
            "periodicity" => &mut self.periodicity,
            "overlap_collapse" => &mut self.overlap_collapse,
            "vandermonde" => &mut self.vandermonde,
            "stencil" => &mut self.stencil,
            "flatness" => &mut self.flatness,
            _ => return None,
        })
    }

    /// Override one field by name. Returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match self.slot(name) {
            Some(v) => {
                *v = value;
                true
            }
            None => false,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut t = Tolerances::default();
        for name in Tolerances::NAMES {
            assert!(t.set(name, 0.5), "{name}");
        }
        assert_eq!(t.cocycle, 0.5);
        assert_eq!(t.get("rank"), Some(0.5));
        assert_eq!(Tolerances::DEFAULT.get("flatness"), Some(1e-10));
        assert_eq!(t.get("bogus"), None);
        assert!(!t.set("bogus", 1.0));
    }
}

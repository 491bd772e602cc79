//! Published values for the unit square plate, kept for side-by-side
//! printing only. Nothing in the solver reads them.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValue {
    pub source: &'static str,
    pub method: &'static str,
    /// Capacitance over `4πε₀` for a unit square plate, in the tabulated form.
    pub value: &'static str,
    pub central: f64,
}

pub const CAPACITANCE_REFERENCES: [ReferenceValue; 7] = [
    ReferenceValue {
        source: "Maxwell",
        method: "Surface Charge",
        value: "0.3607",
        central: 0.3607,
    },
    ReferenceValue {
        source: "Reitan",
        method: "Surface Charge",
        value: "0.362",
        central: 0.362,
    },
    ReferenceValue {
        source: "Solomon",
        method: "Surface Charge",
        value: "0.367",
        central: 0.367,
    },
    ReferenceValue {
        source: "Goto et al. (1992)",
        method: "Refined Surface Charge and Extrapolation",
        value: "0.3667892 ± 1.1e-6",
        central: 0.3667892,
    },
    ReferenceValue {
        source: "Read",
        method: "Refined Boundary Element and Extrapolation",
        value: "0.3667874 ± 1e-7",
        central: 0.3667874,
    },
    ReferenceValue {
        source: "Mansfield",
        method: "Numerical Path Integration",
        value: "0.36684",
        central: 0.36684,
    },
    ReferenceValue {
        source: "Wintle (2004)",
        method: "Random Walk",
        value: "0.36 ± 0.01",
        central: 0.36,
    },
];

/// Most precise tabulated capacitance, used as the benchmark.
pub const CAPACITANCE_BENCHMARK: f64 = 0.3667874;

/// Power-law exponent of the charge density approaching a square plate's
/// corner (Morrison 1975; Hwang 2005).
pub const CORNER_EXPONENT: f64 = 0.7034;

//! Comparison of microscopic solutions with the effective model: domain norms,
//! interface cell averages, observed orders and table/field output.

mod extension;
mod interface;
mod norms;
mod orders;
mod output;

pub use extension::{extend_pressure, ExtendedPressure};
pub use interface::{interface_norms, interface_profile, InterfaceNorms, InterfaceProfile, InterfaceRegion};
pub use norms::{domain_norms, DomainNorms};
pub use orders::{fit_order, fit_orders, OrderFit};
pub use output::{fmt_value, table1, table2, table3, table4, table5, write_atomic, write_vtk, CsvTable};

use crate::meshkit::Epsilon;

/// All comparison quantities of one `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub epsilon: Epsilon,
    pub domain: Option<DomainNorms>,
    pub gamma: Option<InterfaceNorms>,
    pub gamma_hat: Option<InterfaceNorms>,
}

impl ConvergenceRecord {
    pub fn new(epsilon: Epsilon) -> Self {
        Self {
            epsilon,
            domain: None,
            gamma: None,
            gamma_hat: None,
        }
    }

    /// Every quantity under a stable column name; absent ones are `None`.
    pub fn columns(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::new();
        let d = self.domain.as_ref();
        for (name, f) in DomainNorms::FIELDS {
            out.push((name.to_string(), d.map(f)));
        }
        for (suffix, n) in [("gamma", self.gamma.as_ref()), ("gamma_hat", self.gamma_hat.as_ref())] {
            for (name, f) in InterfaceNorms::FIELDS {
                out.push((format!("{name}_{suffix}"), n.and_then(f)));
            }
        }
        out
    }
}

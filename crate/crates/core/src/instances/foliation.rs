use crate::bundle::{BasePoint, FibreBundle, FibreElement, FibreKind};
use crate::error::{Error, Result};
use crate::path::Path;
use crate::transport::{Properties, Transport};

/// Transport along the leaves of a section family: `u` moves to the value
/// at `p(t)` of the unique defining section through `u`.
#[derive(Clone, Debug)]
pub struct FoliationTransport {
    name: String,
    bundle: FibreBundle,
}

impl FoliationTransport {
    pub fn new(name: &str, bundle: FibreBundle) -> Result<Self> {
        if !matches!(bundle.fibre(), FibreKind::Sections { .. }) {
            return Err(Error::WrongBundleKind {
                expected: "section-family",
            });
        }
        Ok(FoliationTransport {
            name: name.to_string(),
            bundle,
        })
    }

    /// The leaf `K_alpha = sigma_alpha(B)` as `(node, label)` pairs.
    pub fn leaf(&self, alpha: usize) -> Vec<(usize, usize)> {
        match self.bundle.fibre() {
            FibreKind::Sections { sections, .. } => sections[alpha].iter().copied().enumerate().collect(),
            _ => unreachable!("checked at construction"),
        }
    }
}

impl Transport for FoliationTransport {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    fn properties(&self) -> Properties {
        Properties::LOCAL | Properties::REPARAM_INVARIANT | Properties::GLOBAL
    }

    fn apply(&self, p: &Path, _s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        let alpha = self.bundle.section_through(u)?;
        let node = p.eval(t)?.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        let FibreKind::Sections { sections, .. } = self.bundle.fibre() else {
            unreachable!("checked at construction")
        };
        Ok(FibreElement::label(BasePoint::Node(node), sections[alpha][node]))
    }
}

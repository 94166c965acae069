//! State-independent majority vote over `{L, R}` labels.

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Side};
use crate::error::{Error, Result};

/// Always plays `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantPolicy {
    pub side: Side,
}

/// `R` iff strictly more `R` labels than `L`; ties go to `L`.
pub fn fit_majority_vote(data: &Dataset) -> Result<ConstantPolicy> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut r = 0usize;
    for s in data.items() {
        if s.label.as_side()? == Side::R {
            r += 1;
        }
    }
    let side = if 2 * r > data.len() { Side::R } else { Side::L };
    Ok(ConstantPolicy { side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Control, DagNode, Provenance, State};
    use proptest::prelude::*;

    fn labels(sides: &[Side]) -> Dataset {
        let mut d = Dataset::new();
        for s in sides {
            d.push(State::Dag(DagNode::Root), Control::Dag(*s), Provenance::InitialDemo);
        }
        d
    }

    #[test]
    fn ties_go_left() {
        assert_eq!(fit_majority_vote(&labels(&[Side::L, Side::R])).unwrap().side, Side::L);
        assert_eq!(
            fit_majority_vote(&labels(&[Side::R, Side::R, Side::L])).unwrap().side,
            Side::R
        );
    }

    #[test]
    fn empty_and_continuous_error() {
        assert!(matches!(fit_majority_vote(&Dataset::new()), Err(Error::EmptyDataset)));
        let mut d = Dataset::new();
        d.push(State::PointMass([0.0; 4]), Control::Force([0.0; 2]), Provenance::InitialDemo);
        assert!(fit_majority_vote(&d).is_err());
    }

    proptest! {
        #[test]
        fn order_does_not_matter(bits in prop::collection::vec(any::<bool>(), 1..50)) {
            let sides: Vec<Side> = bits.iter().map(|&b| if b { Side::R } else { Side::L }).collect();
            let mut rev = sides.clone();
            rev.reverse();
            let a = fit_majority_vote(&labels(&sides)).unwrap();
            prop_assert_eq!(a, fit_majority_vote(&labels(&rev)).unwrap());
            let r = bits.iter().filter(|b| **b).count();
            prop_assert_eq!(a.side == Side::R, r * 2 > bits.len());
        }
    }
}

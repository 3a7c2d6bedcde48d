use crate::mesh::MarkedSet;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Marking {
    pub set: MarkedSet,
    /// All indicators vanish; nothing left to refine.
    pub converged: bool,
}

/// Minimal set `M` with `Σ_{T∈M} ind(T) ≥ θ Σ_T ind(T)` for squared indicators.
///
/// Elements are taken in descending order of their indicator, ties by
/// ascending index; the shortest prefix that reaches the bulk is returned.
/// Zero indicators are never marked.
pub fn doerfler_mark(indicators: &[f64], theta: f64) -> Result<Marking> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Config(format!("marking parameter must lie in (0, 1], got {theta}")));
    }
    if let Some(t) = indicators.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("indicator of element {t} is {}", indicators[t])));
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    // summing in the same order as the prefix makes θ = 1 reach the total exactly
    let total: f64 = order.iter().map(|&t| indicators[t]).sum();
    if total == 0.0 {
        return Ok(Marking { set: MarkedSet::empty(), converged: true });
    }
    let goal = theta * total;
    let mut acc = 0.0;
    let mut count = 0;
    for &t in &order {
        if acc >= goal || indicators[t] == 0.0 {
            break;
        }
        acc += indicators[t];
        count += 1;
    }
    order.truncate(count);
    Ok(Marking { set: MarkedSet::new(order, indicators.len())?, converged: false })
}

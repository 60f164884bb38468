use super::merit::{flippable, MeritConstraint};
use super::{FlipAssignment, FlipBudget, FlipError};
use crate::data::{Group, LabeledDataset};

pub const ENUMERATION_LIMIT: usize = 24;

/// Every flip vector with the budgeted per-group counts (and direction, if
/// set) that satisfies the merit rows, in increasing lexicographic order of z.
/// Yielded assignments carry no objective value (NaN).
pub fn enumerate_feasible_flips<'a>(
    ds: &'a LabeledDataset,
    budget: &FlipBudget,
    merit: &'a MeritConstraint,
) -> Result<FeasibleFlips<'a>, FlipError> {
    if ds.len() > ENUMERATION_LIMIT {
        return Err(FlipError::TooLarge { n: ds.len(), limit: ENUMERATION_LIMIT });
    }
    let allowed = flippable(ds, budget.directional);
    let mut it = FeasibleFlips {
        ds,
        merit,
        allowed,
        k_w: budget.k_w,
        k_b: budget.k_b,
        current: None,
        done: false,
    };
    let mut z = vec![0u8; ds.len()];
    if it.complete(&mut z, 0, budget.k_w, budget.k_b) {
        it.current = Some(z);
    } else {
        it.done = true;
    }
    Ok(it)
}

pub struct FeasibleFlips<'a> {
    ds: &'a LabeledDataset,
    merit: &'a MeritConstraint,
    allowed: Vec<bool>,
    k_w: usize,
    k_b: usize,
    current: Option<Vec<u8>>,
    done: bool,
}

impl FeasibleFlips<'_> {
    /// Smallest completion of z[from..] placing `need_w`/`need_b` ones: the
    /// ones go to the last allowed positions of each group.
    fn complete(&self, z: &mut [u8], from: usize, mut need_w: usize, mut need_b: usize) -> bool {
        for v in z[from..].iter_mut() {
            *v = 0;
        }
        for i in (from..z.len()).rev() {
            if !self.allowed[i] {
                continue;
            }
            let need = match self.ds.groups()[i] {
                Group::Adv => &mut need_w,
                Group::Dis => &mut need_b,
            };
            if *need > 0 {
                z[i] = 1;
                *need -= 1;
            }
        }
        need_w == 0 && need_b == 0
    }

    fn advance(&self, z: &mut Vec<u8>) -> bool {
        let groups = self.ds.groups();
        // counts used by the prefix z[..i]
        let mut used_w: usize = (0..z.len()).filter(|&k| z[k] == 1 && groups[k] == Group::Adv).count();
        let mut used_b: usize = (0..z.len()).filter(|&k| z[k] == 1 && groups[k] == Group::Dis).count();
        for i in (0..z.len()).rev() {
            if z[i] == 1 {
                match groups[i] {
                    Group::Adv => used_w -= 1,
                    Group::Dis => used_b -= 1,
                }
                continue;
            }
            if !self.allowed[i] {
                continue;
            }
            let (w, b) = match groups[i] {
                Group::Adv => (used_w + 1, used_b),
                Group::Dis => (used_w, used_b + 1),
            };
            if w > self.k_w || b > self.k_b {
                continue;
            }
            let mut cand = z.clone();
            cand[i] = 1;
            if self.complete(&mut cand, i + 1, self.k_w - w, self.k_b - b) {
                *z = cand;
                return true;
            }
        }
        false
    }
}

impl Iterator for FeasibleFlips<'_> {
    type Item = FlipAssignment;

    fn next(&mut self) -> Option<FlipAssignment> {
        while !self.done {
            let z = self.current.clone()?;
            let mut next = z.clone();
            if self.advance(&mut next) {
                self.current = Some(next);
            } else {
                self.done = true;
            }
            if self.merit.satisfied(&z, 1e-9) {
                return Some(FlipAssignment::new(self.ds.labels(), z, f64::NAN));
            }
        }
        None
    }
}

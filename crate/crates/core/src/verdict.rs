use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    /// Conservative conjunction: any `Fail` wins, then any `Indeterminate`.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Indeterminate, _) | (_, Verdict::Indeterminate) => Verdict::Indeterminate,
            _ => Verdict::Pass,
        }
    }

    pub fn all<I: IntoIterator<Item = Verdict>>(items: I) -> Verdict {
        items.into_iter().fold(Verdict::Pass, Verdict::and)
    }

    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_is_order_independent() {
        use Verdict::*;
        let vs = [Pass, Indeterminate, Fail, Pass];
        assert_eq!(Verdict::all(vs), Fail);
        assert_eq!(Verdict::all(vs.iter().rev().copied()), Fail);
        assert_eq!(Verdict::all([Pass, Indeterminate]), Indeterminate);
        assert_eq!(Verdict::all([]), Pass);
    }
}

use super::StatsError;
use crate::pattern::Pattern;
use crate::LogBase;

/// Judgment tally for one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JudgmentAggregate {
    pub pattern: Pattern,
    pub n_random: u64,
    pub n_total: u64,
}

/// `log2` of the add-half smoothed proportion of "random" judgments,
/// `(n_random + 0.5) / (n_total + 1)`. Finite even for unanimous patterns.
pub fn subjective_randomness(agg: &JudgmentAggregate) -> Result<f64, StatsError> {
    subjective_randomness_in(agg, LogBase::Two)
}

pub fn subjective_randomness_in(
    agg: &JudgmentAggregate,
    base: LogBase,
) -> Result<f64, StatsError> {
    if agg.n_total == 0 {
        return Err(StatsError::EmptyAggregate(agg.pattern.to_hex()));
    }
    if agg.n_random > agg.n_total {
        return Err(StatsError::InvalidAggregate {
            n_random: agg.n_random,
            n_total: agg.n_total,
        });
    }
    let p = (agg.n_random as f64 + 0.5) / (agg.n_total as f64 + 1.0);
    Ok(base.log(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(n_random: u64, n_total: u64) -> JudgmentAggregate {
        JudgmentAggregate {
            pattern: Pattern::new(4, 0x1234).unwrap(),
            n_random,
            n_total,
        }
    }

    #[test]
    fn examples() {
        assert_eq!(subjective_randomness(&agg(50, 100)).unwrap(), -1.0);
        let all = subjective_randomness(&agg(100, 100)).unwrap();
        assert!((all - (100.5f64 / 101.0).log2()).abs() < 1e-15);
        assert!((all + 0.007_159_8).abs() < 1e-6);
        let none = subjective_randomness(&agg(0, 100)).unwrap();
        assert!((none - (0.5f64 / 101.0).log2()).abs() < 1e-15);
        assert!((none + 7.6582).abs() < 1e-4);
    }

    #[test]
    fn empty_and_invalid() {
        assert_eq!(
            subjective_randomness(&agg(0, 0)),
            Err(StatsError::EmptyAggregate("1234".into()))
        );
        assert!(subjective_randomness(&agg(3, 2)).is_err());
    }

    #[test]
    fn natural_log_variant() {
        let v = subjective_randomness_in(&agg(50, 100), LogBase::E).unwrap();
        assert!((v + std::f64::consts::LN_2).abs() < 1e-15);
    }
}

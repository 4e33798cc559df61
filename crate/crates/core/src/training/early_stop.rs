/// Outcome of reporting one epoch's validation metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    /// New best; the caller should snapshot the model.
    Improved,
    Continue,
    /// Patience exhausted; the caller should restore the best snapshot.
    Stop,
}

/// Patience-based early stopping on a metric where lower is better. Only a
/// strict improvement resets the counter.
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    patience: usize,
    best: Option<f64>,
    best_epoch: Option<usize>,
    since_improvement: usize,
}

impl Default for EarlyStopper {
    fn default() -> Self {
        Self::new(7)
    }
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            best_epoch: None,
            since_improvement: 0,
        }
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn epochs_since_improvement(&self) -> usize {
        self.since_improvement
    }

    pub fn observe(&mut self, epoch: usize, metric: f64) -> StopDecision {
        if self.best.is_none_or(|b| metric < b) {
            self.best = Some(metric);
            self.best_epoch = Some(epoch);
            self.since_improvement = 0;
            return StopDecision::Improved;
        }
        self.since_improvement += 1;
        if self.since_improvement >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(metrics: &[f64], patience: usize) -> (Option<usize>, Option<usize>) {
        let mut s = EarlyStopper::new(patience);
        for (i, &m) in metrics.iter().enumerate() {
            if s.observe(i + 1, m) == StopDecision::Stop {
                return (Some(i + 1), s.best_epoch());
            }
        }
        (None, s.best_epoch())
    }

    #[test]
    fn plateau_after_improvement() {
        let seq = [5.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0];
        assert_eq!(run(&seq, 7), (Some(9), Some(2)));
    }

    #[test]
    fn late_improvement_resets_counter() {
        let seq = [5.0, 6.0, 6.0, 6.0, 6.0, 6.0, 6.0, 4.9, 6.0, 6.0];
        assert_eq!(run(&seq, 7), (None, Some(8)));
    }

    #[test]
    fn patience_one_stops_on_first_miss() {
        assert_eq!(run(&[3.0, 2.0, 2.5], 1), (Some(3), Some(2)));
    }
}

//! Non-personalized popularity baseline.

use std::sync::Arc;

use super::{MostPopModel, TrainedModel};
use crate::data::SparseInteractionMatrix;

/// Scores every item by its train-set interaction count, identically for all
/// users.
pub fn fit_mostpop(train: Arc<SparseInteractionMatrix>) -> TrainedModel {
    let counts = train.item_counts().iter().map(|&c| c as f64).collect();
    TrainedModel::MostPop(MostPopModel {
        counts,
        num_users: train.num_users(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_are_item_counts_for_every_user() {
        let train = Arc::new(
            SparseInteractionMatrix::from_rows(
                vec![
                    vec![(0, 1.0), (2, 1.0)],
                    vec![(0, 1.0), (1, 1.0)],
                    vec![(0, 1.0), (2, 1.0)],
                ],
                3,
                3,
            )
            .unwrap(),
        );
        let model = fit_mostpop(train);
        for user in 0..3 {
            assert_eq!(model.score(user, &[0, 1, 2]).unwrap(), vec![3.0, 1.0, 2.0]);
        }
    }

    #[test]
    fn empty_train_scores_zero() {
        let train =
            Arc::new(SparseInteractionMatrix::from_rows(vec![vec![], vec![]], 2, 4).unwrap());
        let model = fit_mostpop(train);
        assert_eq!(model.score(0, &[0, 3]).unwrap(), vec![0.0, 0.0]);
    }
}

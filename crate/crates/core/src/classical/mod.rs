//! Classical classifiers: multinomial naive Bayes and softmax logistic
//! regression, implemented directly from their objective functions.

mod logreg;
mod mnb;

pub use logreg::{
    lr_fit, lr_predict, lr_probabilities, objective_and_gradient, sample_weights, ClassWeight,
    LrConfig, LrModel, Penalty,
};
pub use mnb::{mnb_fit, mnb_log_scores, mnb_predict, MnbModel};

/// Index of the maximal score; ties go to the lowest class index.
pub(crate) fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

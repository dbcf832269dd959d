use alloc::vec::Vec;

use crate::autodiff::{Graph, Var};
use crate::synthworld::{BOS, EOS, PAD};
use crate::{Error, Result};

/// Teacher-forcing inputs (`BOS w1..wn`) and targets (`w1..wn EOS`).
pub fn caption_targets(ids: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut inputs = Vec::with_capacity(ids.len() + 1);
    inputs.push(BOS);
    inputs.extend_from_slice(ids);
    let mut targets = ids.to_vec();
    targets.push(EOS);
    (inputs, targets)
}

/// `-Σ_t log softmax(logits_t)[gt_t]` over non-PAD positions.
pub fn xent_loss(g: &mut Graph, logits: &[Var], gt: &[usize]) -> Result<Var> {
    if logits.len() != gt.len() {
        return Err(Error::Shape {
            op: "xent_loss",
            lhs: alloc::vec![logits.len()],
            rhs: alloc::vec![gt.len()],
        });
    }
    let mut terms = Vec::with_capacity(gt.len());
    for (&l, &y) in logits.iter().zip(gt) {
        let v = g.value(l).len();
        if y >= v {
            return Err(Error::UnknownToken { id: y, vocab: v });
        }
        if y == PAD {
            continue;
        }
        let ls = g.log_softmax(l)?;
        terms.push(g.pick(ls, y)?);
    }
    if terms.is_empty() {
        return Err(Error::Empty("xent targets"));
    }
    let all = g.concat(&terms)?;
    let s = g.sum(all);
    Ok(g.neg(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::math;
    use alloc::vec;

    #[test]
    fn perfect_prediction_is_zero() {
        let mut g = Graph::new();
        let l = g.constant(Tensor::vector(vec![0.0, 800.0, 0.0]));
        let loss = xent_loss(&mut g, &[l, l], &[1, 1]).unwrap();
        assert_eq!(g.scalar(loss), 0.0);
    }

    #[test]
    fn uniform_logits_closed_form() {
        let (t, v) = (4, 7);
        let mut g = Graph::new();
        let ls: Vec<Var> = (0..t).map(|_| g.constant(Tensor::zeros(&[v]))).collect();
        let loss = xent_loss(&mut g, &ls, &[4, 5, 6, 4]).unwrap();
        assert!((g.scalar(loss) - t as f64 * math::ln(v as f64)).abs() < 1e-12);
    }

    #[test]
    fn log_sum_oracle() {
        // probs 0.5 and 0.25 on the targets
        let mut g = Graph::new();
        let a = g.constant(Tensor::vector(vec![math::ln(0.25), math::ln(0.5), math::ln(0.25)]));
        let b = g.constant(Tensor::vector(vec![math::ln(0.5), math::ln(0.25), math::ln(0.25)]));
        let loss = xent_loss(&mut g, &[a, b], &[1, 1]).unwrap();
        assert!((g.scalar(loss) - (math::ln(2.0) + math::ln(4.0))).abs() < 1e-12);
        assert!((g.scalar(loss) - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn pad_positions_masked() {
        let mut g = Graph::new();
        let l = g.constant(Tensor::zeros(&[5]));
        let loss = xent_loss(&mut g, &[l, l, l], &[4, PAD, 4]).unwrap();
        assert!((g.scalar(loss) - 2.0 * math::ln(5.0)).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocab_rejected() {
        let mut g = Graph::new();
        let l = g.constant(Tensor::zeros(&[5]));
        assert!(matches!(
            xent_loss(&mut g, &[l], &[5]),
            Err(Error::UnknownToken { id: 5, vocab: 5 })
        ));
    }

    #[test]
    fn targets_shift_by_one() {
        let (i, t) = caption_targets(&[7, 8]);
        assert_eq!(i, vec![BOS, 7, 8]);
        assert_eq!(t, vec![7, 8, EOS]);
    }
}

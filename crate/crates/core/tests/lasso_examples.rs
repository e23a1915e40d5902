use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use weekcast::combine::lasso::CV_GRID_SIZE;
use weekcast::combine::{nnlasso_cv, nnlasso_fit};

fn design(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(1.0..20.0)).collect())
        .collect()
}

#[test]
fn exact_copy_of_one_column_is_selected() {
    let x = design(120, 4, 1);
    let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
    let m = nnlasso_fit(&x, &y, 1e-6).unwrap();
    assert!(m.weights[0] >= 0.99, "{:?}", m.weights);
    assert!(m.weights[1..].iter().all(|&w| w <= 0.01), "{:?}", m.weights);
}

#[test]
fn total_weight_shrinks_as_penalty_grows() {
    let x = design(80, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y: Vec<f64> = x
        .iter()
        .map(|r| 0.5 * r[0] + 0.3 * r[1] + 0.2 * r[2] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut prev = f64::INFINITY;
    for lambda in [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        let total: f64 = nnlasso_fit(&x, &y, lambda).unwrap().weights.iter().sum();
        assert!(total <= prev + 1e-9, "lambda {lambda}: {total} > {prev}");
        prev = total;
    }
}

fn grid_position(x: &[Vec<f64>], y: &[f64]) -> usize {
    let cv = nnlasso_cv(x, y, 10, 4).unwrap();
    assert_eq!(cv.lambdas.len(), CV_GRID_SIZE);
    cv.lambdas.iter().position(|&l| l == cv.lambda).unwrap()
}

#[test]
fn cv_picks_small_penalty_without_noise() {
    let x = design(100, 3, 3);
    let y: Vec<f64> = x.iter().map(|r| 0.6 * r[0] + 0.4 * r[2]).collect();
    // The grid runs from large to small penalties.
    let pos = grid_position(&x, &y);
    assert!(pos >= CV_GRID_SIZE * 9 / 10, "position {pos}");
}

#[test]
fn cv_picks_large_penalty_for_pure_noise() {
    let x = design(100, 3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y: Vec<f64> = (0..100).map(|_| 10.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    let pos = grid_position(&x, &y);
    assert!(pos < CV_GRID_SIZE / 10, "position {pos}");
}

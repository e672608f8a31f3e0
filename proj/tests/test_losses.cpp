#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "topocf/losses.hpp"

using namespace topocf;
using namespace topocf::testing;

TEST_CASE("bpr value at equal scores is ln 2") {
  Vec pos = Vec::Constant(3, 1.7);
  Vec neg = Vec::Constant(3, 1.7);
  CHECK(loss_bpr(pos, neg) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bpr vanishes as the score gap grows") {
  Vec pos = Vec::Constant(1, 40.0);
  Vec neg = Vec::Constant(1, 0.0);
  CHECK(loss_bpr(pos, neg) < 1e-15);
}

TEST_CASE("bpr depends only on score differences") {
  RngStream rng(1, 0);
  Vec pos(5), neg(5);
  for (int k = 0; k < 5; ++k) {
    pos[k] = rng.normal();
    neg[k] = rng.normal();
  }
  const double base = loss_bpr(pos, neg);
  const double shifted = loss_bpr(pos.array() + 3.25, neg.array() + 3.25);
  CHECK(base == doctest::Approx(shifted).epsilon(1e-12));
}

TEST_CASE("bpr gradient matches finite differences") {
  RngStream rng(2, 0);
  Mat scores = random_mat(2, 6, rng);  // row 0 = pos, row 1 = neg
  auto eval = [&] {
    return loss_bpr(scores.row(0).transpose(), scores.row(1).transpose());
  };
  Vec dpos = Vec::Zero(6), dneg = Vec::Zero(6);
  loss_bpr(scores.row(0).transpose(), scores.row(1).transpose(), &dpos, &dneg);
  Mat analytic(2, 6);
  analytic.row(0) = dpos.transpose();
  analytic.row(1) = dneg.transpose();
  CHECK(max_relative_grad_error(eval, scores, analytic) < 1e-4);
}

TEST_CASE("infonce closed forms") {
  SUBCASE("one positive at cosine 1 against one negative at cosine 0") {
    Mat a(2, 2), b(2, 2);
    a << 1, 0, 0, 1;
    b << 1, 0, 0, 1;
    // cos(a0,b0)=1, cos(a0,b1)=0, and symmetrically for the second row.
    const double loss = loss_infonce(a, b, 1.0);
    CHECK(loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
  }
  SUBCASE("identical embeddings across the batch give ln n") {
    Mat a = Mat::Ones(5, 3);
    Mat b = Mat::Ones(5, 3);
    CHECK(loss_infonce(a, b, 0.7) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
  SUBCASE("zero-norm row throws") {
    Mat a = Mat::Ones(2, 2);
    Mat b = Mat::Ones(2, 2);
    a.row(0).setZero();
    CHECK_THROWS_AS(loss_infonce(a, b, 1.0), Error);
  }
}

TEST_CASE("infonce gradients match finite differences") {
  RngStream rng(3, 0);
  for (double tau : {0.2, 1.0}) {
    Mat a = random_mat(5, 4, rng);
    Mat b = random_mat(5, 4, rng);
    Mat da = Mat::Zero(5, 4), db = Mat::Zero(5, 4);
    loss_infonce(a, b, tau, &da, &db);
    auto eval_a = [&] { return loss_infonce(a, b, tau); };
    CHECK(max_relative_grad_error(eval_a, a, da) < 1e-4);
    auto eval_b = [&] { return loss_infonce(a, b, tau); };
    CHECK(max_relative_grad_error(eval_b, b, db) < 1e-4);
  }
}

TEST_CASE("uniformity closed forms") {
  SUBCASE("identical rows give 0") {
    Mat x(2, 2);
    x << 0.4, 0.2, 0.4, 0.2;
    CHECK(loss_uniformity(x, {{0, 1}}) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("antipodal unit rows give -8") {
    Mat x(2, 2);
    x << 1, 0, -1, 0;
    CHECK(loss_uniformity(x, {{0, 1}}) == doctest::Approx(-8.0).epsilon(1e-12));
  }
  SUBCASE("spreading rows on the sphere decreases the loss") {
    Mat close(3, 2), spread(3, 2);
    close << 1, 0, 0.99, 0.14, 0.98, 0.2;
    spread << 1, 0, -0.5, 0.866, -0.5, -0.866;
    const std::vector<std::pair<int, int>> pairs = {{0, 1}, {0, 2}, {1, 2}};
    CHECK(loss_uniformity(spread, pairs) < loss_uniformity(close, pairs));
  }
}

TEST_CASE("uniformity gradient matches finite differences") {
  RngStream rng(4, 0);
  Mat x = random_mat(6, 3, rng);
  const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}, {4, 5}, {0, 4}};
  Mat dx = Mat::Zero(6, 3);
  loss_uniformity(x, pairs, &dx);
  auto eval = [&] { return loss_uniformity(x, pairs); };
  CHECK(max_relative_grad_error(eval, x, dx) < 1e-4);
}

TEST_CASE("graphau alignment closed forms") {
  SUBCASE("identical user and item rows across layers give 0") {
    std::vector<Mat> u(3, Mat::Ones(2, 4));
    std::vector<Mat> i(3, Mat::Ones(2, 4));
    CHECK(loss_alignment_graphau(u, i, 0.8) == doctest::Approx(0.0));
  }
  SUBCASE("zero layer weight keeps only the l = 0 term") {
    RngStream rng(5, 0);
    std::vector<Mat> u, i;
    for (int l = 0; l < 3; ++l) {
      u.push_back(random_mat(2, 3, rng));
      i.push_back(random_mat(2, 3, rng));
    }
    const double expected =
        ((u[0] - i[0]).squaredNorm() + (i[0] - u[0]).squaredNorm()) / (2.0 * 2.0);
    CHECK(loss_alignment_graphau(u, i, 0.0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("matches an explicit loop oracle") {
    RngStream rng(6, 0);
    const double t2 = 0.7;
    std::vector<Mat> u, i;
    for (int l = 0; l < 4; ++l) {
      u.push_back(random_mat(3, 5, rng));
      i.push_back(random_mat(3, 5, rng));
    }
    double expected = 0.0;
    for (int p = 0; p < 3; ++p) {
      for (int l = 0; l < 4; ++l) {
        const double w = std::pow(t2, l);
        expected += w / 2.0 *
                    ((u[0].row(p) - i[static_cast<std::size_t>(l)].row(p)).squaredNorm() +
                     (i[0].row(p) - u[static_cast<std::size_t>(l)].row(p)).squaredNorm());
      }
    }
    expected /= 3.0;
    CHECK(loss_alignment_graphau(u, i, t2) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("graphau alignment gradients match finite differences") {
  RngStream rng(7, 0);
  std::vector<Mat> u, i, du, di;
  for (int l = 0; l < 3; ++l) {
    u.push_back(random_mat(2, 4, rng));
    i.push_back(random_mat(2, 4, rng));
    du.push_back(Mat::Zero(2, 4));
    di.push_back(Mat::Zero(2, 4));
  }
  loss_alignment_graphau(u, i, 0.6, &du, &di);
  for (int l = 0; l < 3; ++l) {
    auto eval = [&] { return loss_alignment_graphau(u, i, 0.6); };
    CHECK(max_relative_grad_error(eval, u[static_cast<std::size_t>(l)],
                                  du[static_cast<std::size_t>(l)]) < 1e-4);
    CHECK(max_relative_grad_error(eval, i[static_cast<std::size_t>(l)],
                                  di[static_cast<std::size_t>(l)]) < 1e-4);
  }
}

TEST_CASE("ultragcn loss closed forms") {
  SUBCASE("unit-degree positive at score 0 contributes ln 2") {
    UltraBatch batch;
    batch.pos_scores = Vec::Zero(1);
    batch.pos_coef = Vec::Ones(1);  // beta = sqrt(2)/sqrt(2) with all degrees 1
    batch.neg_scores = Vec(0);
    batch.neg_coef = Vec(0);
    CHECK(loss_ultragcn(batch, 1.0, 1.0, 0.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("zero item weight removes the IL term") {
    UltraBatch batch;
    batch.pos_scores = Vec::Zero(1);
    batch.pos_coef = Vec::Ones(1);
    batch.neg_scores = Vec(0);
    batch.neg_coef = Vec(0);
    batch.item_scores = {Vec::Zero(3)};
    batch.item_coef = {Vec::Ones(3)};
    const double with = loss_ultragcn(batch, 1.0, 1.0, 1.0);
    const double without = loss_ultragcn(batch, 1.0, 1.0, 0.0);
    CHECK(with > without);
    CHECK(without == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("ultragcn gradients match finite differences") {
  RngStream rng(8, 0);
  const int n = 4;
  Mat scores = random_mat(2, n, rng);
  std::vector<Vec> item_scores = {Vec(2), Vec(2), Vec(2), Vec(2)};
  std::vector<Vec> item_coef = {Vec(2), Vec(2), Vec(2), Vec(2)};
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < 2; ++j) {
      item_scores[static_cast<std::size_t>(k)][j] = rng.normal();
      item_coef[static_cast<std::size_t>(k)][j] = 0.5 + rng.next_double();
    }
  }
  Vec pos_coef(n), neg_coef(n);
  for (int k = 0; k < n; ++k) {
    pos_coef[k] = 0.5 + rng.next_double();
    neg_coef[k] = 0.5 + rng.next_double();
  }
  auto make_batch = [&] {
    UltraBatch b;
    b.pos_scores = scores.row(0).transpose();
    b.neg_scores = scores.row(1).transpose();
    b.pos_coef = pos_coef;
    b.neg_coef = neg_coef;
    b.item_scores = item_scores;
    b.item_coef = item_coef;
    return b;
  };
  UltraBatch grads;
  grads.pos_scores = Vec::Zero(n);
  grads.neg_scores = Vec::Zero(n);
  grads.item_scores = {Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)};
  const UltraBatch batch = make_batch();
  loss_ultragcn(batch, 0.9, 1.1, 0.3, &grads);

  auto eval = [&] { return loss_ultragcn(make_batch(), 0.9, 1.1, 0.3); };
  Mat analytic(2, n);
  analytic.row(0) = grads.pos_scores.transpose();
  analytic.row(1) = grads.neg_scores.transpose();
  CHECK(max_relative_grad_error(eval, scores, analytic) < 1e-4);
}

TEST_CASE("svdgcn pairwise loss closed form and gradient") {
  Vec pos = Vec::Constant(2, 0.3);
  Vec neg = Vec::Constant(2, 0.3);
  CHECK(loss_pairwise_logistic(pos, neg) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_pairwise_logistic(Vec(0), Vec(0)) == 0.0);  // empty side skipped

  RngStream rng(9, 0);
  Mat scores = random_mat(2, 5, rng);
  Vec dpos = Vec::Zero(5), dneg = Vec::Zero(5);
  loss_pairwise_logistic(scores.row(0).transpose(), scores.row(1).transpose(),
                         &dpos, &dneg);
  Mat analytic(2, 5);
  analytic.row(0) = dpos.transpose();
  analytic.row(1) = dneg.transpose();
  auto eval = [&] {
    return loss_pairwise_logistic(scores.row(0).transpose(),
                                  scores.row(1).transpose());
  };
  CHECK(max_relative_grad_error(eval, scores, analytic) < 1e-4);
}

TEST_CASE("hinge loss values and subgradient away from the kink") {
  CHECK(loss_hinge(Vec::Constant(1, 1.0)) == doctest::Approx(0.0));
  CHECK(loss_hinge(Vec::Constant(1, 0.0)) == doctest::Approx(1.0));

  RngStream rng(10, 0);
  Mat scores(1, 6);
  for (int k = 0; k < 6; ++k) {
    // Keep scores away from the kink at 1.
    double s = rng.normal();
    if (std::abs(s - 1.0) < 0.2) s += 0.5;
    scores(0, k) = s;
  }
  Vec d = Vec::Zero(6);
  loss_hinge(scores.row(0).transpose(), 1.0, &d);
  Mat analytic(1, 6);
  analytic.row(0) = d.transpose();
  auto eval = [&] { return loss_hinge(scores.row(0).transpose()); };
  CHECK(max_relative_grad_error(eval, scores, analytic) < 1e-4);
}

TEST_CASE("distance correlation closed forms") {
  RngStream rng(11, 0);
  SUBCASE("identical chunks have dCor 1") {
    const Mat x = random_mat(8, 3, rng);
    CHECK(distance_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("independent Gaussian chunks have small dCor") {
    const Mat x = random_mat(500, 2, rng);
    const Mat y = random_mat(500, 2, rng);
    CHECK(distance_correlation(x, y) < 0.15);
  }
  SUBCASE("constant chunk is degenerate and yields 0") {
    const Mat x = Mat::Ones(6, 2);
    const Mat y = random_mat(6, 2, rng);
    CHECK(distance_correlation(x, y) == 0.0);
  }
  SUBCASE("matches the textbook double-centering oracle") {
    const Mat x = random_mat(10, 2, rng);
    const Mat y = random_mat(10, 3, rng);
    // O(n^2) direct estimator.
    const int n = 10;
    Mat a(n, n), b(n, n);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        a(j, k) = (x.row(j) - x.row(k)).norm();
        b(j, k) = (y.row(j) - y.row(k)).norm();
      }
    }
    auto center = [n](const Mat& d) {
      Mat c = d;
      const Vec rm = d.rowwise().mean();
      const Vec cm = d.colwise().mean();
      const double gm = d.mean();
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) c(j, k) = d(j, k) - rm[j] - cm[k] + gm;
      }
      return c;
    };
    const Mat ca = center(a);
    const Mat cb = center(b);
    const double dcov2 = (ca.array() * cb.array()).mean();
    const double dvarx = (ca.array() * ca.array()).mean();
    const double dvary = (cb.array() * cb.array()).mean();
    const double expected = std::sqrt(dcov2 / std::sqrt(dvarx * dvary));
    CHECK(distance_correlation(x, y) == doctest::Approx(expected).epsilon(1e-10));
  }
  SUBCASE("requires at least 4 rows") {
    const Mat x = random_mat(3, 2, rng);
    CHECK_THROWS_AS(distance_correlation(x, x), Error);
  }
}

TEST_CASE("distance correlation gradients match finite differences") {
  RngStream rng(12, 0);
  Mat x = random_mat(7, 2, rng);
  Mat y = random_mat(7, 2, rng);
  Mat dx = Mat::Zero(7, 2), dy = Mat::Zero(7, 2);
  distance_correlation(x, y, &dx, &dy);
  auto eval = [&] { return distance_correlation(x, y); };
  CHECK(max_relative_grad_error(eval, x, dx) < 1e-4);
  CHECK(max_relative_grad_error(eval, y, dy) < 1e-4);
}

TEST_CASE("independence loss sums intent pairs") {
  RngStream rng(13, 0);
  std::vector<Mat> chunks;
  for (int t = 0; t < 3; ++t) chunks.push_back(random_mat(8, 2, rng));
  double expected = 0.0;
  for (int t = 0; t < 3; ++t) {
    for (int s = t + 1; s < 3; ++s) {
      expected += distance_correlation(chunks[static_cast<std::size_t>(t)],
                                       chunks[static_cast<std::size_t>(s)]);
    }
  }
  CHECK(loss_independence_dcor(chunks) == doctest::Approx(expected).epsilon(1e-12));

  std::vector<Mat> grads(3, Mat::Zero(8, 2));
  loss_independence_dcor(chunks, &grads);
  auto eval = [&] { return loss_independence_dcor(chunks); };
  for (int t = 0; t < 3; ++t) {
    CHECK(max_relative_grad_error(eval, chunks[static_cast<std::size_t>(t)],
                                  grads[static_cast<std::size_t>(t)]) < 1e-4);
  }
}

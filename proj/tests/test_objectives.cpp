#include "doctest.h"

#include "unmix/objectives.hpp"

#include <cmath>

using namespace unmix;

namespace {

ComplexVec vec_Y() {
    return {{0.5, 0.1}, {-0.3, 0.4}, {0.0, 0.0}, {0.05, -0.9}};
}
ComplexVec vec_y() {
    return {{0.45, 0.15}, {-0.2, 0.2}, {0.01, 0.0}, {0.0, -0.8}};
}

}  // namespace

TEST_CASE("loss config validation") {
    LossConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.q = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = LossConfig{};
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = LossConfig{};
    cfg.delta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lifted distances match the frozen reference values") {
    // Frozen against an independent numpy evaluation of
    //   d_abs = 1/2 sum ((|Y|+d)^q - (|y|+d)^q)^2
    //   d_rad = 1/2 sum |(|Y|+d)^q Y/(|Y|+e) - (|y|+d)^q y/(|y|+e)|^2
    // with q = 0.5, d = 1e-4, e = 1e-12.
    LossConfig cfg;
    CHECK(dist_abs(vec_Y(), vec_y(), cfg) ==
          doctest::Approx(0.02128483188481925).epsilon(1e-14));
    CHECK(dist_rad(vec_Y(), vec_y(), cfg) ==
          doctest::Approx(0.031126573628313614).epsilon(1e-14));
}

TEST_CASE("distances are symmetric, non-negative and zero on equal inputs") {
    LossConfig cfg;
    CHECK(dist_abs(vec_Y(), vec_Y(), cfg) == 0.0);
    CHECK(dist_rad(vec_y(), vec_y(), cfg) == 0.0);
    CHECK(dist_abs(vec_Y(), vec_y(), cfg) ==
          doctest::Approx(dist_abs(vec_y(), vec_Y(), cfg)).epsilon(1e-15));
    CHECK(dist_rad(vec_Y(), vec_y(), cfg) ==
          doctest::Approx(dist_rad(vec_y(), vec_Y(), cfg)).epsilon(1e-15));
    CHECK(dist_rad(vec_Y(), vec_y(), cfg) >= 0.0);
    CHECK_THROWS_AS(dist_abs(vec_Y(), ComplexVec(3), cfg), std::invalid_argument);
}

TEST_CASE("d_rad dominates d_abs on magnitude-equal, phase-different inputs") {
    // |Y| = |y| makes d_abs vanish while d_rad sees the phase error.
    LossConfig cfg;
    ComplexVec Y = {{1.0, 0.0}, {0.0, 0.5}};
    ComplexVec y = {{0.0, 1.0}, {0.5, 0.0}};
    CHECK(dist_abs(Y, y, cfg) < 1e-12);
    CHECK(dist_rad(Y, y, cfg) > 0.1);
}

TEST_CASE("total loss composes the three terms with the sparsity discount") {
    LossConfig cfg;
    int n_spc = 4;
    FramePrediction frame;
    frame.tones.resize(2);
    frame.tones[0].u = 1;
    frame.tones[1].u = 0;  // one dropped tone: factor lambda^1
    frame.y_tone = {vec_y(), vec_Y()};
    frame.y_tone_dir = {vec_Y(), vec_y()};
    aggregate(frame, n_spc);

    ComplexVec Y = {{0.9, 0.0}, {0.1, -0.2}, {0.0, 0.3}, {-0.4, 0.0}};
    double expect = cfg.mu1 * dist_abs(Y, frame.y_spr, cfg) * cfg.lambda +
                    cfg.mu2 * dist_rad(Y, frame.y_dir, cfg) +
                    cfg.mu3 / 2.0 * (dist_rad(frame.y_tone_dir[0], frame.y_tone[0], cfg) +
                                     dist_rad(frame.y_tone_dir[1], frame.y_tone[1], cfg));
    CHECK(total_loss(frame, Y, cfg) == doctest::Approx(expect).epsilon(1e-14));

    // All tones kept: no discount.
    frame.tones[1].u = 1;
    aggregate(frame, n_spc);
    double expect2 = cfg.mu1 * dist_abs(Y, frame.y_spr, cfg) +
                     cfg.mu2 * dist_rad(Y, frame.y_dir, cfg) +
                     cfg.mu3 / 2.0 * (dist_rad(frame.y_tone_dir[0], frame.y_tone[0], cfg) +
                                      dist_rad(frame.y_tone_dir[1], frame.y_tone[1], cfg));
    CHECK(total_loss(frame, Y, cfg) == doctest::Approx(expect2).epsilon(1e-14));
}

TEST_CASE("dictionary bound loss and its gradient") {
    Dictionary dict;
    dict.n_har = 2;
    dict.n_ins = 2;
    dict.entries = {1.5, 0.4, 0.3, 0.2};

    double l1 = std::log(1.5), l2 = std::log(0.4);
    CHECK(dict_bound_loss(dict) == doctest::Approx((l1 * l1 + l2 * l2) / 2.0).epsilon(1e-14));

    // Gradient lives only on the per-column maxima; verify by central
    // differences on those entries.
    auto grad = dict_bound_loss_grad(dict);
    REQUIRE(grad.size() == 4);
    CHECK(grad[2] == 0.0);
    CHECK(grad[3] == 0.0);
    double h = 1e-7;
    for (size_t i : {size_t(0), size_t(1)}) {
        double save = dict.entries[i];
        dict.entries[i] = save + h;
        double lp = dict_bound_loss(dict);
        dict.entries[i] = save - h;
        double lm = dict_bound_loss(dict);
        dict.entries[i] = save;
        CHECK(grad[i] == doctest::Approx((lp - lm) / (2.0 * h)).epsilon(1e-6));
    }

    // A column that only has negative entries is degenerate.
    dict.entries = {1.0, -0.5, 0.5, -0.1};
    CHECK_THROWS_AS(dict_bound_loss(dict), std::domain_error);
}

#include <doctest.h>

#include <cmath>

#include "nsed/tape.hpp"
#include "nsed/rng.hpp"

using namespace nsed;

namespace {

Matrix<double> random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
    Matrix<double> m(r, c);
    for (auto& v : m.data) v = (rng.uniform_real() * 2.0 - 1.0) * scale;
    return m;
}

} // namespace

TEST_CASE("forward values of the primitive ops") {
    Tape<double> t;

    SUBCASE("relu clamps negatives") {
        Matrix<double> x(1, 2);
        x.at(0, 0) = -1;
        x.at(0, 1) = 2;
        auto y = t.relu(t.leaf(x));
        CHECK(t.value(y).at(0, 0) == 0.0);
        CHECK(t.value(y).at(0, 1) == 2.0);
    }
    SUBCASE("segment_sum pools rows") {
        Matrix<double> x(3, 1);
        x.at(0, 0) = 1;
        x.at(1, 0) = 2;
        x.at(2, 0) = 3;
        auto y = t.segment_sum(t.leaf(x), {0, 0, 1}, 2);
        CHECK(t.value(y).at(0, 0) == 3.0);
        CHECK(t.value(y).at(1, 0) == 3.0);
    }
    SUBCASE("relu_diff_norm implements the asymmetric head") {
        Matrix<double> a(1, 2), b(1, 2);
        a.at(0, 0) = 3;
        a.at(0, 1) = 1;
        b.at(0, 0) = 1;
        b.at(0, 1) = 2;
        auto y = t.relu_diff_norm(t.leaf(a), t.leaf(b));
        CHECK(t.value(y).at(0, 0) == doctest::Approx(2.0));
    }
    SUBCASE("matmul against a hand computation") {
        Matrix<double> a(2, 2), b(2, 1);
        a.at(0, 0) = 1; a.at(0, 1) = 2; a.at(1, 0) = 3; a.at(1, 1) = 4;
        b.at(0, 0) = 5; b.at(1, 0) = 6;
        auto y = t.matmul(t.leaf(a), t.leaf(b));
        CHECK(t.value(y).at(0, 0) == 17.0);
        CHECK(t.value(y).at(1, 0) == 39.0);
    }
    SUBCASE("shape mismatches are contract errors naming both shapes") {
        Matrix<double> a(2, 3), b(2, 3);
        auto ia = t.leaf(a);
        auto ib = t.leaf(b);
        CHECK_THROWS_WITH_AS(t.matmul(ia, ib), doctest::Contains("2x3"), ContractError);
    }
}

TEST_CASE("grad_check validates the analytic gradients") {
    Rng rng(17);

    SUBCASE("quadratic is exact") {
        auto report = grad_check(
            [](Tape<double>& t, const std::vector<int>& leaves) {
                return t.sum_all(t.square(leaves[0]));
            },
            {random_matrix(rng, 3, 4)});
        CHECK(report.checked == 12);
        CHECK(report.max_rel_error < 1e-6);
    }
    SUBCASE("relu away from the kink") {
        Matrix<double> x(1, 1);
        x.at(0, 0) = 5.0;
        Tape<double> t;
        auto leaf = t.leaf(x);
        auto y = t.sum_all(t.relu(leaf));
        t.backward(y);
        CHECK(t.grad(leaf).at(0, 0) == 1.0);
    }
    SUBCASE("composed expression with every op") {
        auto build = [](Tape<double>& t, const std::vector<int>& leaves) {
            auto h = t.add_row(t.matmul(leaves[0], leaves[1]), leaves[2]);
            h = t.relu(h);
            auto g = t.gather_rows(h, {0, 2, 1, 0});
            auto s = t.segment_sum(g, {0, 1, 0, 1}, 2);
            auto c = t.concat_cols({s, t.scale(s, 0.5)});
            auto n1 = t.l2_norm_rows(c);
            auto d = t.relu_diff_norm(s, t.mul_scalar(s, leaves[3]));
            return t.mean_all(t.add(t.square(n1), t.square(d)));
        };
        auto report = grad_check(build, {random_matrix(rng, 3, 4), random_matrix(rng, 4, 5),
                                         random_matrix(rng, 1, 5),
                                         Matrix<double>::scalar(0.37)});
        CHECK(report.checked > 0);
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("backward is linear and leaves untouched parameters at zero") {
    Rng rng(23);
    Matrix<double> a = random_matrix(rng, 2, 3);
    Matrix<double> b = random_matrix(rng, 2, 3);

    // grad of (f + g) == grad f + grad g, evaluated on separate tapes.
    auto grad_of = [&](bool use_first, bool use_second) {
        Tape<double> t;
        auto la = t.leaf(a);
        auto lb = t.leaf(b);
        Tape<double>::NodeId loss = -1;
        auto f = t.sum_all(t.square(la));
        auto g = t.sum_all(t.mul_scalar(t.square(lb), t.leaf(Matrix<double>::scalar(2.0))));
        if (use_first && use_second) loss = t.add(f, g);
        else if (use_first) loss = f;
        else loss = g;
        t.backward(loss);
        return std::make_pair(t.grad(la), t.grad(lb));
    };

    auto [fa, fb] = grad_of(true, false);
    auto [ga, gb] = grad_of(false, true);
    auto [sa, sb] = grad_of(true, true);
    for (std::size_t i = 0; i < fa.size(); ++i) {
        CHECK(sa.data[i] == doctest::Approx(fa.data[i] + ga.data[i]));
        CHECK(sb.data[i] == doctest::Approx(fb.data[i] + gb.data[i]));
    }
    // b has no path into f: its gradient is exactly zero.
    for (double v : fb.data) CHECK(v == 0.0);
    for (double v : ga.data) CHECK(v == 0.0);
}

TEST_CASE("relu_diff_norm conventions at the kink") {
    Rng rng(29);
    Matrix<double> z = random_matrix(rng, 4, 6);
    Tape<double> t;
    auto a = t.leaf(z);
    auto b = t.leaf(z);
    auto d = t.relu_diff_norm(a, b);
    for (int r = 0; r < 4; ++r) CHECK(t.value(d).at(r, 0) == 0.0);
    auto loss = t.sum_all(d);
    t.backward(loss);
    for (double v : t.grad(a).data) CHECK(v == 0.0);
    for (double v : t.grad(b).data) CHECK(v == 0.0);
}

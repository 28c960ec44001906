#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ricenet/errors.hpp"
#include "ricenet/metrics.hpp"

using namespace ricenet;

namespace {

double brute_macro_f1(const std::vector<int>& y, const std::vector<int>& p)
{
    double sum = 0.0;
    for (int c = 0; c < 2; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            tp += (y[i] == c && p[i] == c);
            fp += (y[i] != c && p[i] == c);
            fn += (y[i] == c && p[i] != c);
        }
        sum += (2 * tp + fp + fn) == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    }
    return sum / 2;
}

} // namespace

TEST_CASE("worked macro-F1 example")
{
    const std::vector<int> y{0, 0, 0, 1, 1};
    const std::vector<int> p{0, 0, 1, 1, 1};
    CHECK(class_f1(confusion(y, p), 0) == doctest::Approx(0.8));
    CHECK(class_f1(confusion(y, p), 1) == doctest::Approx(0.8));
    CHECK(macro_f1(y, p) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("confusion layout")
{
    const std::vector<int> y{0, 0, 1, 1, 1};
    const std::vector<int> p{0, 1, 0, 1, 1};
    const auto cm = confusion(y, p);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][0] == 1);
    CHECK(cm.counts[1][1] == 2);
    CHECK(cm.total() == 5);
}

TEST_CASE("macro-F1 matches brute force on random pairs")
{
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> len(1, 40);
    std::bernoulli_distribution coin(0.5);
    for (int t = 0; t < 1000; ++t) {
        const int n = len(gen);
        std::vector<int> y(n), p(n);
        for (int i = 0; i < n; ++i) {
            y[i] = coin(gen);
            p[i] = coin(gen);
        }
        const double m = macro_f1(y, p);
        REQUIRE(std::fabs(m - brute_macro_f1(y, p)) <= 1e-12);
        REQUIRE(m >= 0.0);
        REQUIRE(m <= 1.0);
        // swapping class names leaves the score unchanged
        std::vector<int> ys(n), ps(n);
        for (int i = 0; i < n; ++i) {
            ys[i] = 1 - y[i];
            ps[i] = 1 - p[i];
        }
        REQUIRE(std::fabs(macro_f1(ys, ps) - m) <= 1e-12);
        const bool both = std::count(y.begin(), y.end(), 1) % n != 0;
        REQUIRE(macro_f1(y, y) == (both ? 1.0 : 0.5));
    }
}

TEST_CASE("one-class collapse and degenerate inputs")
{
    const std::vector<int> y{0, 0, 1, 1};
    const std::vector<int> all_rice{1, 1, 1, 1};
    // RICE F1 = 2*2/(4+2) = 2/3, RECURRENCE F1 = 0/0 -> 0.
    CHECK(macro_f1(y, all_rice) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    const std::vector<int> only0{0, 0, 0};
    CHECK(macro_f1(only0, only0) == doctest::Approx(0.5));
    const std::vector<int> empty;
    CHECK_THROWS(confusion(empty, empty));
    const std::vector<int> short_p{0};
    CHECK_THROWS(confusion(y, short_p));
}

TEST_CASE("predict_label threshold")
{
    CHECK(predict_label(0.5) == 0);
    CHECK(predict_label(0.5000001) == 1);
    CHECK(predict_label(0.1) == 0);
}

TEST_CASE("majority vote")
{
    // Odd count: plain majority.
    std::vector<std::vector<int>> v{{1, 0}, {1, 0}, {0, 1}};
    std::vector<std::vector<double>> p{{0.6, 0.4}, {0.7, 0.3}, {0.4, 0.9}};
    CHECK(majority_vote(v, p) == std::vector<int>{1, 0});

    // Ties broken by mean p(RICE).
    std::vector<std::vector<int>> tv{{1, 1}, {0, 0}};
    std::vector<std::vector<double>> tp{{0.9, 0.55}, {0.2, 0.4}};
    CHECK(majority_vote(tv, tp) == std::vector<int>{1, 0});

    // Voter order does not matter.
    std::mt19937_64 gen(3);
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::vector<int>> votes(4, std::vector<int>(6));
        std::vector<std::vector<double>> probs(4, std::vector<double>(6));
        for (int m = 0; m < 4; ++m) {
            for (int s = 0; s < 6; ++s) {
                probs[m][s] = u(gen);
                votes[m][s] = predict_label(probs[m][s]);
            }
        }
        auto rv = votes;
        auto rp = probs;
        std::reverse(rv.begin(), rv.end());
        std::reverse(rp.begin(), rp.end());
        REQUIRE(majority_vote(votes, probs) == majority_vote(rv, rp));
    }
}

TEST_CASE("mean and population sd")
{
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(mean_of(v) == doctest::Approx(5.0));
    CHECK(population_sd(v) == doctest::Approx(2.0));
}

#include <algorithm>
#include <cstdint>
#include <vector>

#include "advshift/rng.hpp"
#include "doctest.h"

using namespace advshift;

TEST_SUITE("rng") {

TEST_CASE("named streams are deterministic and independent") {
    Rng a(42, "alpha");
    Rng b(42, "alpha");
    Rng c(42, "beta");
    Rng d(42, "alpha", 1);
    bool all_equal = true;
    bool any_diff_name = false;
    bool any_diff_counter = false;
    for (int i = 0; i < 16; ++i) {
        const std::uint64_t va = a.next_u64();
        if (va != b.next_u64()) all_equal = false;
        if (va != c.next_u64()) any_diff_name = true;
        if (va != d.next_u64()) any_diff_counter = true;
    }
    CHECK(all_equal);
    CHECK(any_diff_name);
    CHECK(any_diff_counter);
}

TEST_CASE("stream_seed is a pure function of its inputs") {
    CHECK(stream_seed(7, "x", 3) == stream_seed(7, "x", 3));
    CHECK(stream_seed(7, "x", 3) != stream_seed(7, "x", 4));
    CHECK(stream_seed(7, "x", 3) != stream_seed(8, "x", 3));
    CHECK(stream_seed(7, "x", 3) != stream_seed(7, "y", 3));
}

TEST_CASE("uniform stays in range") {
    Rng rng(1, "uniform-range");
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-3.0, 2.0);
        CHECK(u >= -3.0);
        CHECK(u < 2.0);
    }
    for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_int(7) < 7);
}

TEST_CASE("normal has roughly standard moments") {
    Rng rng(1, "normal-moments");
    const int n = 40000;
    double mean = 0.0, var = 0.0;
    std::vector<double> draws(n);
    for (double& x : draws) x = rng.normal();
    for (double x : draws) mean += x;
    mean /= n;
    for (double x : draws) var += (x - mean) * (x - mean);
    var /= n - 1;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle permutes and is seeded") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng a(9, "shuffle");
    Rng b(9, "shuffle");
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("categorical follows the cumulative weights") {
    Rng rng(3, "categorical");
    const std::vector<double> cum{0.25, 0.75, 1.0};
    std::vector<int> counts(3, 0);
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[rng.categorical(cum)];
    CHECK(std::abs(counts[0] / static_cast<double>(n) - 0.25) < 0.02);
    CHECK(std::abs(counts[1] / static_cast<double>(n) - 0.50) < 0.02);
    CHECK(std::abs(counts[2] / static_cast<double>(n) - 0.25) < 0.02);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <set>

#include "tvcsl/rng.hpp"

using namespace tvcsl;

TEST_CASE("streams are deterministic and decorrelated") {
    Rng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    int equal_c = 0, equal_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        equal_c += va == c.next_u64();
        equal_d += va == d.next_u64();
    }
    CHECK(equal_c == 0);
    CHECK(equal_d == 0);
}

TEST_CASE("uniform stays strictly inside the unit interval") {
    Rng rng(1, 0);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);  // the range is actually exercised
    CHECK(hi > 0.999);
}

TEST_CASE("moment sanity for normal and exponential draws") {
    Rng rng(9, 3);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);

    double esum = 0.0;
    for (int i = 0; i < n; ++i) esum += rng.exponential(2.5);
    CHECK(std::abs(esum / n - 1.0 / 2.5) < 0.005);
}

TEST_CASE("derive yields distinct child seeds") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t salt = 0; salt < 1000; ++salt) {
        seen.insert(Rng::derive(5, salt));
    }
    CHECK(seen.size() == 1000);
    CHECK(Rng::derive(5, 1) != Rng::derive(6, 1));
}

TEST_CASE("substreams are independent of interleaving") {
    // Counter-based generation: drawing from one stream must not disturb
    // another, regardless of construction or call order.
    Rng early(11, 0);
    const double first = early.uniform();
    Rng other(11, 1);
    (void)other.uniform();
    Rng late(11, 0);
    CHECK(late.uniform() == first);
}

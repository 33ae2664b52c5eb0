#include <cmath>
#include <functional>

#include <doctest.h>

#include "generators.hpp"
#include "nafhn/interval.hpp"

using namespace nafhn;
using nafhn::testing::Gen;
using quad = __float128;

namespace {

bool encloses(const Interval &r, quad exact) { return quad(r.lo()) <= exact && exact <= quad(r.hi()); }

Interval random_interval(Gen &g, double scale) {
    const double a = g.uniform(-scale, scale), b = g.uniform(-scale, scale);
    return Interval::hull(a, b);
}

double inside(Gen &g, const Interval &x) {
    const double t = g.uniform(0.0, 1.0);
    const double v = x.lo() + t * (x.hi() - x.lo());
    return std::min(std::max(v, x.lo()), x.hi());
}

int fuzz(const std::function<bool(Gen &)> &trial, int samples) {
    Gen g(31337);
    int escapes = 0;
    for (int i = 0; i < samples; ++i)
        if (!trial(g)) ++escapes;
    return escapes;
}

}  // namespace

TEST_CASE("interval endpoint examples") {
    const Interval s = Interval(1.0, 2.0) + Interval(3.0, 4.0);
    CHECK(s.lo() <= 4.0);
    CHECK(s.hi() >= 6.0);
    CHECK(s.lo() > 3.999999);
    const Interval p = Interval(-1.0, 2.0) * Interval(-1.0, 2.0);
    CHECK(p.lo() <= -2.0);
    CHECK(p.hi() >= 4.0);
    CHECK(p.hi() < 4.000001);
}

TEST_CASE("division by an interval containing zero is rejected") {
    CHECK_THROWS_AS(Interval(1.0, 2.0) / Interval(-1.0, 1.0), IntervalError);
    CHECK_THROWS_AS(Interval(2.0, 1.0), IntervalError);
}

TEST_CASE("containment fuzz: 1e5 samples per operation, zero escapes") {
    const int n = 100000;
    CHECK(fuzz([](Gen &g) {
              const Interval a = random_interval(g, 1e3), b = random_interval(g, 1e3);
              const double x = inside(g, a), y = inside(g, b);
              return encloses(a + b, quad(x) + quad(y));
          },
              n) == 0);
    CHECK(fuzz([](Gen &g) {
              const Interval a = random_interval(g, 1e3), b = random_interval(g, 1e3);
              const double x = inside(g, a), y = inside(g, b);
              return encloses(a - b, quad(x) - quad(y));
          },
              n) == 0);
    CHECK(fuzz([](Gen &g) {
              const Interval a = random_interval(g, 1e3), b = random_interval(g, 1e3);
              const double x = inside(g, a), y = inside(g, b);
              return encloses(a * b, quad(x) * quad(y));
          },
              n) == 0);
    CHECK(fuzz([](Gen &g) {
              const Interval a = random_interval(g, 1e3);
              Interval b = Interval::hull(g.uniform(0.1, 10.0), g.uniform(0.1, 10.0));
              if (g.integer(0, 1)) b = -b;
              const double x = inside(g, a), y = inside(g, b);
              return encloses(a / b, quad(x) / quad(y));
          },
              n) == 0);
    CHECK(fuzz([](Gen &g) {
              const Interval a = random_interval(g, 1e3);
              const double x = inside(g, a);
              return encloses(abs(a), quad(std::fabs(x)));
          },
              n) == 0);
    CHECK(fuzz([](Gen &g) {
              const Interval a = random_interval(g, 10.0);
              const int k = g.integer(0, 5);
              const double x = inside(g, a);
              quad e = 1;
              for (int i = 0; i < k; ++i) e *= quad(x);
              return encloses(pow(a, k), e);
          },
              n) == 0);
    CHECK(fuzz([](Gen &g) {
              const double s = g.uniform(-1e3, 1e3);
              const Interval b = random_interval(g, 1e3);
              const double y = inside(g, b);
              return encloses(s * b, quad(s) * quad(y));
          },
              n) == 0);
}

TEST_CASE("complex interval products enclose point products") {
    Gen g(8);
    int escapes = 0;
    for (int i = 0; i < 20000; ++i) {
        const CInterval a{random_interval(g, 5.0), random_interval(g, 5.0)};
        const CInterval b{random_interval(g, 5.0), random_interval(g, 5.0)};
        const quad ar = inside(g, a.re), ai = inside(g, a.im), br = inside(g, b.re), bi = inside(g, b.im);
        const CInterval p = a * b;
        if (!encloses(p.re, ar * br - ai * bi) || !encloses(p.im, ar * bi + ai * br)) ++escapes;
    }
    CHECK(escapes == 0);
}

TEST_CASE("outward rounding never shrinks an exact point result") {
    const Interval third = Interval(1.0) / Interval(3.0);
    CHECK(encloses(third, quad(1) / quad(3)));
    CHECK(third.lo() < third.hi());
}

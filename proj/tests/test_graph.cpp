#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "imgnb/graph.hpp"
#include "imgnb/rng.hpp"

using namespace imgnb;

namespace {

// Test-only Jacobi eigensolver for small symmetric matrices; independent of
// the library's linear algebra.
std::vector<double> jacobi_eigenvalues(DenseMatrix a) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-15) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t =
                    (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1.0 / std::sqrt(t * t + 1);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    return eig;
}

}  // namespace

TEST_CASE("rbf_weight: closed forms") {
    CHECK(rbf_weight(0.7, 0.7, 5.0) == 1.0);
    CHECK(rbf_weight(0.7, 0.7, 0.01) == 1.0);
    CHECK(rbf_weight(1.0, 0.0, 5.0) == doctest::Approx(std::exp(-1.0 / 50.0)).epsilon(1e-14));
    CHECK(rbf_weight(1.0, 0.0, 5.0) == doctest::Approx(0.980199).epsilon(1e-6));
    CHECK(rbf_weight(1.0, 0.0, 0.1) == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));
    CHECK_THROWS_AS(rbf_weight(0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rbf_weight(0.0, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("rbf_weight: symmetric and in (0, 1]") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
        const double w = rbf_weight(a, b, 5.0);
        CHECK(w == rbf_weight(b, a, 5.0));
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
    }
}

TEST_CASE("build_graph: equal scores give the uniform graph") {
    const std::vector<double> scores(4, 0.3);
    const UserGraph g = build_graph(scores, 5.0);
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t v = 0; v < 4; ++v) {
            CHECK(g.weights()(u, v) == 1.0);
            CHECK(g.normalized()(u, v) == doctest::Approx(0.25).epsilon(1e-14));
        }
}

TEST_CASE("build_graph: two and three users match the closed-form table") {
    const UserGraph g2 = build_graph(std::vector<double>{0.0, 1.0}, 5.0);
    CHECK(g2.weights()(0, 0) == 1.0);
    CHECK(g2.weights()(1, 1) == 1.0);
    CHECK(g2.weights()(0, 1) == doctest::Approx(std::exp(-1.0 / 50.0)).epsilon(1e-14));

    const std::vector<double> s = {0.0, 0.5, 1.0};
    const UserGraph g3 = build_graph(s, 5.0);
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) {
            const double d = s[u] - s[v];
            CHECK(g3.weights()(u, v) ==
                  doctest::Approx(std::exp(-d * d / 50.0)).epsilon(1e-14));
        }
}

TEST_CASE("build_graph: non-finite score is rejected naming the user") {
    std::vector<double> s = {0.1, std::nan(""), 0.2};
    try {
        build_graph(s, 5.0);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("user 1") != std::string::npos);
    }
}

TEST_CASE("propagate: gamma 0 is the identity") {
    const UserGraph g = build_graph(std::vector<double>{0.0, 0.4, 0.9}, 5.0);
    DenseMatrix f(3, 2);
    f(0, 0) = 1.0;
    f(1, 1) = -2.0;
    f(2, 0) = 0.5;
    CHECK(propagate(g, 0, f) == f);
}

TEST_CASE("propagate: uniform two-user graph averages rows") {
    const UserGraph g = build_graph(std::vector<double>{0.5, 0.5}, 5.0);
    DenseMatrix f(2, 2);
    f(0, 0) = 1.0;
    f(1, 1) = 1.0;
    const DenseMatrix out = propagate(g, 1, f);
    // S = 0.5 * ones, each row becomes the column mean
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t j = 0; j < 2; ++j) CHECK(out(u, j) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("propagate: two hops equal two single hops") {
    Rng rng(17);
    std::vector<double> scores(5);
    for (double& s : scores) s = rng.uniform01();
    const UserGraph g = build_graph(scores, 1.0);
    DenseMatrix f(5, 3);
    for (double& v : f.data()) v = rng.uniform(-1.0, 1.0);
    CHECK(propagate(g, 2, f) == propagate(g, 1, propagate(g, 1, f)));
}

TEST_CASE("weights matrix is exactly symmetric for random scores") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores(6);
        for (double& s : scores) s = rng.uniform(-2.0, 2.0);
        const UserGraph g = build_graph(scores, 0.7);
        for (std::size_t u = 0; u < 6; ++u)
            for (std::size_t v = 0; v < 6; ++v) CHECK(g.weights()(u, v) == g.weights()(v, u));
    }
}

TEST_CASE("spectral bound: eigenvalues of S lie in [-1, 1]") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 2 + rng.uniform_int(7);
        std::vector<double> scores(m);
        for (double& s : scores) s = rng.uniform(0.0, 1.0);
        const UserGraph g = build_graph(scores, trial % 2 ? 5.0 : 0.2);
        for (double ev : jacobi_eigenvalues(g.normalized())) {
            CHECK(ev <= 1.0 + 1e-9);
            CHECK(ev >= -1.0 - 1e-9);
        }
    }
}

TEST_CASE("uniform graph flattens features after one hop") {
    const std::size_t m = 4;
    const UserGraph g = build_graph(std::vector<double>(m, 0.2), 5.0);
    Rng rng(37);
    DenseMatrix f(m, 3);
    for (double& v : f.data()) v = rng.uniform(-1.0, 1.0);
    const DenseMatrix out = propagate(g, 1, f);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t u = 0; u < m; ++u) mean += f(u, j);
        mean /= static_cast<double>(m);
        for (std::size_t u = 0; u < m; ++u) CHECK(out(u, j) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("build_graph then propagate is bit-deterministic") {
    Rng rng(41);
    std::vector<double> scores(6);
    for (double& s : scores) s = rng.uniform01();
    DenseMatrix f(6, 2);
    for (double& v : f.data()) v = rng.uniform(-1.0, 1.0);
    const DenseMatrix a = propagate(build_graph(scores, 5.0), 3, f);
    const DenseMatrix b = propagate(build_graph(scores, 5.0), 3, f);
    CHECK(a == b);
}

TEST_CASE("graph CSV dump: m header then m weight rows") {
    const UserGraph g = build_graph(std::vector<double>{0.0, 1.0}, 5.0);
    std::ostringstream os;
    dump_graph_csv(g, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "2");
    int rows = 0;
    while (std::getline(is, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 1);
        ++rows;
    }
    CHECK(rows == 2);
}

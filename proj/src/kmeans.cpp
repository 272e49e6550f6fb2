#include "imgnb/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace imgnb {

namespace {

constexpr std::size_t kMaxIterations = 100;

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

ClusterMap cluster_users(const std::vector<std::vector<double>>& vectors, std::size_t m_prime,
                         Rng& rng, KMeansStats* stats) {
    if (vectors.empty()) throw std::invalid_argument("cluster_users: no vectors");
    if (m_prime < 1) throw std::invalid_argument("cluster_users: m_prime must be >= 1");
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != dim) throw std::invalid_argument("cluster_users: inconsistent dimensions");

    const std::set<std::vector<double>> distinct(vectors.begin(), vectors.end());
    if (distinct.size() < m_prime)
        throw std::invalid_argument("cluster_users: fewer distinct vectors than clusters");

    const std::size_t n = vectors.size();

    // k-means++ seeding: spread the initial centroids by squared-distance
    // sampling, skipping exact duplicates of already chosen centroids.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(m_prime);
    centroids.push_back(vectors[rng.uniform_int(static_cast<int>(n))]);
    std::vector<double> d2(n);
    while (centroids.size() < m_prime) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centroids) best = std::min(best, sq_dist(vectors[i], c));
            d2[i] = best;
            total += best;
        }
        double pick = rng.uniform01() * total;
        std::size_t chosen = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            chosen = i;
            pick -= d2[i];
            if (pick <= 0.0) break;
        }
        centroids.push_back(vectors[chosen]);
    }

    std::vector<int> assignment(n, -1);
    for (std::size_t it = 0; it < kMaxIterations; ++it) {
        // assignment pass; ties go to the lowest cluster id
        bool changed = false;
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::max();
            for (std::size_t c = 0; c < m_prime; ++c) {
                const double d = sq_dist(vectors[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            objective += best_d;
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (stats) {
            stats->iterations = it + 1;
            stats->objective.push_back(objective);
        }
        if (!changed) break;

        std::vector<std::size_t> counts(m_prime, 0);
        for (std::size_t c = 0; c < m_prime; ++c)
            std::fill(centroids[c].begin(), centroids[c].end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = assignment[i];
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) centroids[c][j] += vectors[i][j];
        }
        for (std::size_t c = 0; c < m_prime; ++c) {
            if (counts[c] == 0) continue;
            for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
        }

        // repair empty clusters: move the farthest member of the largest
        // cluster into the empty one
        for (std::size_t c = 0; c < m_prime; ++c) {
            if (counts[c] != 0) continue;
            std::size_t largest = 0;
            for (std::size_t c2 = 1; c2 < m_prime; ++c2)
                if (counts[c2] > counts[largest]) largest = c2;
            std::size_t far_i = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assignment[i] != static_cast<int>(largest)) continue;
                const double d = sq_dist(vectors[i], centroids[largest]);
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            assignment[far_i] = static_cast<int>(c);
            --counts[largest];
            ++counts[c];
            centroids[c] = vectors[far_i];
        }
    }

    ClusterMap map;
    map.m_prime = m_prime;
    map.assignment = std::move(assignment);
    map.centroids = std::move(centroids);
    return map;
}

}  // namespace imgnb

#ifndef IMGNB_KMEANS_HPP
#define IMGNB_KMEANS_HPP

#include <cstddef>
#include <vector>

#include "imgnb/rng.hpp"

namespace imgnb {

/// Raw-user -> macro-node reduction. Every raw user is mapped and every
/// cluster is non-empty.
struct ClusterMap {
    std::size_t m_prime = 0;
    std::vector<int> assignment;                 // raw user id -> cluster id
    std::vector<std::vector<double>> centroids;  // m_prime vectors
};

struct KMeansStats {
    std::size_t iterations = 0;
    std::vector<double> objective;  // per assignment pass, non-increasing
};

/// Lloyd's k-means with k-means++ seeding from the given stream, at most 100
/// iterations, stopping when assignments stabilize. Empty clusters are
/// repaired by splitting the largest. Rejects m_prime outside
/// [1, number of distinct vectors].
ClusterMap cluster_users(const std::vector<std::vector<double>>& vectors, std::size_t m_prime,
                         Rng& rng, KMeansStats* stats = nullptr);

}  // namespace imgnb

#endif  // IMGNB_KMEANS_HPP

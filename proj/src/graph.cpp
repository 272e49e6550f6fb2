#include "imgnb/graph.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace imgnb {

UserGraph::UserGraph(DenseMatrix weights) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols())
        throw std::invalid_argument("UserGraph: weight matrix must be square");
    const std::size_t m = weights_.rows();
    std::vector<double> inv_sqrt_deg(m);
    for (std::size_t u = 0; u < m; ++u) {
        double d = 0.0;
        for (std::size_t v = 0; v < m; ++v) d += weights_(u, v);
        if (!(d > 0.0)) throw std::invalid_argument("UserGraph: non-positive degree");
        inv_sqrt_deg[u] = 1.0 / std::sqrt(d);
    }
    normalized_ = DenseMatrix(m, m);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < m; ++v)
            normalized_(u, v) = inv_sqrt_deg[u] * weights_(u, v) * inv_sqrt_deg[v];
}

double rbf_weight(double a, double b, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("rbf_weight: bandwidth must be positive");
    const double d = a - b;
    return std::exp(-(d * d) / (2.0 * bandwidth * bandwidth));
}

UserGraph build_graph(std::span<const double> scores, double bandwidth) {
    for (std::size_t u = 0; u < scores.size(); ++u)
        if (!std::isfinite(scores[u]))
            throw std::invalid_argument("build_graph: non-finite score for user " +
                                        std::to_string(u));
    const std::size_t m = scores.size();
    DenseMatrix w(m, m);
    for (std::size_t u = 0; u < m; ++u) {
        w(u, u) = 1.0;
        for (std::size_t v = u + 1; v < m; ++v) {
            const double val = rbf_weight(scores[u], scores[v], bandwidth);
            w(u, v) = val;
            w(v, u) = val;  // symmetric by construction
        }
    }
    return UserGraph(std::move(w));
}

DenseMatrix propagate(const UserGraph& g, std::size_t gamma, const DenseMatrix& features) {
    if (features.rows() != g.size())
        throw std::invalid_argument("propagate: feature rows != graph size");
    DenseMatrix out = features;
    for (std::size_t hop = 0; hop < gamma; ++hop) out = matmul(g.normalized(), out);
    return out;
}

void dump_graph_csv(const UserGraph& g, std::ostream& os) {
    os << g.size() << "\n";
    for (std::size_t u = 0; u < g.size(); ++u) {
        for (std::size_t v = 0; v < g.size(); ++v) {
            if (v) os << ",";
            os << g.weights()(u, v);
        }
        os << "\n";
    }
}

}  // namespace imgnb

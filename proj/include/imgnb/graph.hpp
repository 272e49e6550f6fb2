#ifndef IMGNB_GRAPH_HPP
#define IMGNB_GRAPH_HPP

#include <iosfwd>
#include <span>

#include "imgnb/matrix.hpp"

namespace imgnb {

/// Complete weighted user-correlation graph. Immutable after construction;
/// the symmetrically normalized adjacency S = D^{-1/2} A D^{-1/2} is
/// computed once and cached. RBF weights are strictly positive, so every
/// degree is positive and S always exists.
class UserGraph {
public:
    explicit UserGraph(DenseMatrix weights);

    std::size_t size() const { return weights_.rows(); }
    const DenseMatrix& weights() const { return weights_; }
    const DenseMatrix& normalized() const { return normalized_; }

private:
    DenseMatrix weights_;
    DenseMatrix normalized_;
};

/// Gaussian RBF similarity exp(-(a-b)^2 / (2 bandwidth^2)); in (0, 1],
/// symmetric, exactly 1 at a == b.
double rbf_weight(double a, double b, double bandwidth);

/// Complete graph over one score per user: weight(u,v) = RBF of the two
/// scores. Rejects non-finite scores, naming the offending user.
UserGraph build_graph(std::span<const double> scores, double bandwidth);

/// S^gamma * features by gamma successive multiplications; gamma == 0
/// returns the features unchanged. No activation is applied here.
DenseMatrix propagate(const UserGraph& g, std::size_t gamma, const DenseMatrix& features);

/// Debug dump: first line m, then m comma-separated weight rows.
void dump_graph_csv(const UserGraph& g, std::ostream& os);

}  // namespace imgnb

#endif  // IMGNB_GRAPH_HPP

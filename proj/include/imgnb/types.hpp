#ifndef IMGNB_TYPES_HPP
#define IMGNB_TYPES_HPP

#include <map>
#include <set>
#include <vector>

namespace imgnb {

/// An influencer: stable id plus its d1-dimensional feature vector.
struct ArmProfile {
    int id = 0;
    std::vector<double> features;
};

/// The round's message representation (d2-dimensional topic distribution).
using ContextVec = std::vector<double>;

/// Everything one campaign round produced. `labels[u]` is 1 exactly when
/// user u was activated this round for the first time in the campaign;
/// `reward` counts those users.
struct RoundRecord {
    int t = 0;
    ContextVec context;
    std::vector<int> chosen;                       // L distinct arm ids
    std::map<int, std::set<int>> per_seed;         // arm id -> activated user set
    std::vector<double> labels;                    // d_u per user, 0 or 1
    int reward = 0;                                // R_t
};

}  // namespace imgnb

#endif  // IMGNB_TYPES_HPP
